#include "clls/types.hpp"

#include <functional>
#include <sstream>
#include <unordered_set>

namespace clls {

namespace ty {
namespace {
TypePtr make(TypeKind k, TypePtr a = nullptr, TypePtr b = nullptr) {
    auto t = std::make_shared<Type>();
    t->kind = k;
    t->first = std::move(a);
    t->second = std::move(b);
    return t;
}
TypePtr make_branches(TypeKind k, std::vector<TypeBranch> branches) {
    auto t = std::make_shared<Type>();
    t->kind = k;
    t->branches = std::move(branches);
    return t;
}
} // namespace

TypePtr close() { return make(TypeKind::Close); }
TypePtr wait() { return make(TypeKind::Wait); }
TypePtr send(TypePtr p, TypePtr c) { return make(TypeKind::Send, std::move(p), std::move(c)); }
TypePtr recv(TypePtr p, TypePtr c) { return make(TypeKind::Recv, std::move(p), std::move(c)); }
TypePtr offer(std::vector<TypeBranch> b) { return make_branches(TypeKind::Offer, std::move(b)); }
TypePtr choice(std::vector<TypeBranch> b) { return make_branches(TypeKind::Choice, std::move(b)); }
TypePtr bang(TypePtr t) { return make(TypeKind::Bang, std::move(t)); }
TypePtr quest(TypePtr t) { return make(TypeKind::Quest, std::move(t)); }
TypePtr affine(TypePtr t) { return make(TypeKind::Affine, std::move(t)); }
TypePtr coaffine(TypePtr t) { return make(TypeKind::Coaffine, std::move(t)); }

TypePtr state(TypePtr t, bool locked) {
    auto r = std::make_shared<Type>();
    r->kind = TypeKind::State;
    r->first = std::move(t);
    r->locked = locked;
    return r;
}

TypePtr usage(TypePtr t, bool locked) {
    auto r = std::make_shared<Type>();
    r->kind = TypeKind::Usage;
    r->first = std::move(t);
    r->locked = locked;
    return r;
}

TypePtr rec(std::string var, TypePtr body) {
    auto r = std::make_shared<Type>();
    r->kind = TypeKind::Rec;
    r->name = std::move(var);
    r->first = std::move(body);
    return r;
}

TypePtr corec(std::string var, TypePtr body) {
    auto r = std::make_shared<Type>();
    r->kind = TypeKind::Corec;
    r->name = std::move(var);
    r->first = std::move(body);
    return r;
}

TypePtr var(std::string name, bool negated) {
    auto r = std::make_shared<Type>();
    r->kind = TypeKind::Var;
    r->name = std::move(name);
    r->negated = negated;
    return r;
}

TypePtr app(std::string name, std::vector<TypePtr> args, bool negated) {
    auto r = std::make_shared<Type>();
    r->kind = TypeKind::App;
    r->name = std::move(name);
    r->args = std::move(args);
    r->negated = negated;
    return r;
}

TypePtr prim(PrimKind k) {
    auto r = std::make_shared<Type>();
    r->kind = TypeKind::Prim;
    r->prim = k;
    return r;
}

TypePtr dual_prim(PrimKind k) {
    auto r = std::make_shared<Type>();
    r->kind = TypeKind::DualPrim;
    r->prim = k;
    return r;
}
} // namespace ty

void TypeEnv::add(TypeDef def) {
    auto name = def.name;
    defs_[name] = std::move(def);
}

const TypeDef* TypeEnv::find(const std::string& name) const {
    auto it = defs_.find(name);
    return it == defs_.end() ? nullptr : &it->second;
}

void TypeEnv::replace_body(const std::string& name, TypePtr body) {
    auto it = defs_.find(name);
    if (it != defs_.end()) it->second.body = std::move(body);
}

namespace {

// Negate every free occurrence of `x`.
TypePtr flip_var(const TypePtr& t, const std::string& x) {
    switch (t->kind) {
    case TypeKind::Var:
        return t->name == x ? ty::var(t->name, !t->negated) : t;
    case TypeKind::Rec:
    case TypeKind::Corec: {
        if (t->name == x) return t;
        auto r = std::make_shared<Type>(*t);
        r->first = flip_var(t->first, x);
        return r;
    }
    default: {
        auto r = std::make_shared<Type>(*t);
        if (t->first) r->first = flip_var(t->first, x);
        if (t->second) r->second = flip_var(t->second, x);
        for (auto& b : r->branches) b.type = flip_var(b.type, x);
        for (auto& a : r->args) a = flip_var(a, x);
        return r;
    }
    }
}

void free_vars(const TypePtr& t, std::set<std::string>& bound, std::set<std::string>& out) {
    switch (t->kind) {
    case TypeKind::Var:
        if (!bound.count(t->name)) out.insert(t->name);
        return;
    case TypeKind::Rec:
    case TypeKind::Corec: {
        bool fresh = bound.insert(t->name).second;
        free_vars(t->first, bound, out);
        if (fresh) bound.erase(t->name);
        return;
    }
    default:
        if (t->first) free_vars(t->first, bound, out);
        if (t->second) free_vars(t->second, bound, out);
        for (auto& b : t->branches) free_vars(b.type, bound, out);
        for (auto& a : t->args) free_vars(a, bound, out);
    }
}

std::set<std::string> free_vars(const TypePtr& t) {
    std::set<std::string> bound, out;
    free_vars(t, bound, out);
    return out;
}

int fresh_counter = 0;

} // namespace

TypePtr dual(const TypePtr& t) {
    switch (t->kind) {
    case TypeKind::Close: return ty::wait();
    case TypeKind::Wait: return ty::close();
    case TypeKind::Send: return ty::recv(dual(t->first), dual(t->second));
    case TypeKind::Recv: return ty::send(dual(t->first), dual(t->second));
    case TypeKind::Offer:
    case TypeKind::Choice: {
        std::vector<TypeBranch> bs;
        for (auto& b : t->branches) bs.push_back({b.label, dual(b.type)});
        return t->kind == TypeKind::Offer ? ty::choice(std::move(bs)) : ty::offer(std::move(bs));
    }
    case TypeKind::Bang: return ty::quest(dual(t->first));
    case TypeKind::Quest: return ty::bang(dual(t->first));
    case TypeKind::Affine: return ty::coaffine(dual(t->first));
    case TypeKind::Coaffine: return ty::affine(dual(t->first));
    case TypeKind::State: return ty::usage(dual(t->first), t->locked);
    case TypeKind::Usage: return ty::state(dual(t->first), t->locked);
    // The bound variable stands for the whole rec type; once the binder
    // flips its occurrences must flip too so that they still denote it.
    case TypeKind::Rec: return ty::corec(t->name, flip_var(dual(t->first), t->name));
    case TypeKind::Corec: return ty::rec(t->name, flip_var(dual(t->first), t->name));
    case TypeKind::Var: return ty::var(t->name, !t->negated);
    case TypeKind::App: return ty::app(t->name, t->args, !t->negated);
    case TypeKind::Prim: return ty::dual_prim(t->prim);
    case TypeKind::DualPrim: return ty::prim(t->prim);
    }
    return t;
}

TypePtr substitute(const TypePtr& t, const std::map<std::string, TypePtr>& sub) {
    if (sub.empty()) return t;
    switch (t->kind) {
    case TypeKind::Var: {
        auto it = sub.find(t->name);
        if (it == sub.end()) return t;
        return t->negated ? dual(it->second) : it->second;
    }
    case TypeKind::Rec:
    case TypeKind::Corec: {
        auto inner = sub;
        inner.erase(t->name);
        std::string binder = t->name;
        TypePtr body = t->first;
        bool captures = false;
        for (auto& [k, v] : inner)
            if (free_vars(v).count(binder)) captures = true;
        if (captures) {
            std::string renamed = binder + "'" + std::to_string(++fresh_counter);
            body = substitute(body, {{binder, ty::var(renamed)}});
            binder = renamed;
        }
        auto b = substitute(body, inner);
        return t->kind == TypeKind::Rec ? ty::rec(binder, b) : ty::corec(binder, b);
    }
    default: {
        auto r = std::make_shared<Type>(*t);
        if (t->first) r->first = substitute(t->first, sub);
        if (t->second) r->second = substitute(t->second, sub);
        for (auto& b : r->branches) b.type = substitute(b.type, sub);
        for (auto& a : r->args) a = substitute(a, sub);
        return r;
    }
    }
}

TypePtr instantiate(const TypeEnv& env, const std::string& name, const std::vector<TypePtr>& args) {
    const TypeDef* def = env.find(name);
    if (!def) fail("unknown-type", "unknown type '" + name + "'");
    if (def->params.size() != args.size())
        fail("type-arity", "type '" + name + "' expects " + std::to_string(def->params.size()) +
                               " argument(s), got " + std::to_string(args.size()));
    std::map<std::string, TypePtr> sub;
    for (size_t i = 0; i < args.size(); ++i) sub[def->params[i]] = args[i];
    return substitute(def->body, sub);
}

TypePtr unfold(const TypePtr& t, const TypeEnv& env) {
    switch (t->kind) {
    case TypeKind::App: {
        auto body = instantiate(env, t->name, t->args);
        return t->negated ? dual(body) : body;
    }
    case TypeKind::Rec:
    case TypeKind::Corec: {
        // rec X.B unfolds to B[X := rec X.B]; a negated X receives the dual.
        return substitute(t->first, {{t->name, t}});
    }
    default:
        return t;
    }
}

TypePtr head(const TypePtr& t, const TypeEnv& env) {
    TypePtr cur = t;
    for (int i = 0; i < 256; ++i) {
        if (cur->kind != TypeKind::App && cur->kind != TypeKind::Rec && cur->kind != TypeKind::Corec)
            return cur;
        cur = unfold(cur, env);
    }
    fail("non-contractive", "type " + to_string(t) + " never reaches a constructor");
}

namespace {

struct Equality {
    const TypeEnv& env;
    std::unordered_set<std::string> assumed;

    static bool unfoldable(const TypePtr& t) {
        return t->kind == TypeKind::App || t->kind == TypeKind::Rec || t->kind == TypeKind::Corec;
    }

    bool eq(const TypePtr& a, const TypePtr& b) {
        if (a == b) return true;
        if (unfoldable(a) || unfoldable(b)) {
            // Coinductive hypothesis: a pair already under comparison is equal.
            std::string key = to_string(a) + " =?= " + to_string(b);
            if (!assumed.insert(key).second) return true;
            return eq(unfoldable(a) ? unfold(a, env) : a, unfoldable(b) ? unfold(b, env) : b);
        }
        if (a->kind != b->kind) return false;
        switch (a->kind) {
        case TypeKind::Close:
        case TypeKind::Wait:
            return true;
        case TypeKind::Send:
        case TypeKind::Recv:
            return eq(a->first, b->first) && eq(a->second, b->second);
        case TypeKind::Offer:
        case TypeKind::Choice: {
            if (a->branches.size() != b->branches.size()) return false;
            for (auto& ba : a->branches) {
                const TypeBranch* match = nullptr;
                for (auto& bb : b->branches)
                    if (bb.label == ba.label) match = &bb;
                if (!match || !eq(ba.type, match->type)) return false;
            }
            return true;
        }
        case TypeKind::State:
        case TypeKind::Usage:
            return a->locked == b->locked && eq(a->first, b->first);
        case TypeKind::Bang:
        case TypeKind::Quest:
        case TypeKind::Affine:
        case TypeKind::Coaffine:
            return eq(a->first, b->first);
        case TypeKind::Var:
            return a->name == b->name && a->negated == b->negated;
        case TypeKind::Prim:
        case TypeKind::DualPrim:
            return a->prim == b->prim;
        default:
            return false;
        }
    }
};

struct WellFormed {
    const TypeEnv& env;
    Span span;

    // Walk down rec binders only; reaching the bound variable means the
    // recursion is not guarded by any constructor.
    bool contractive(const TypePtr& body, const std::set<std::string>& binders) {
        switch (body->kind) {
        case TypeKind::Var: return !binders.count(body->name);
        case TypeKind::Rec:
        case TypeKind::Corec: {
            auto inner = binders;
            inner.insert(body->name);
            return contractive(body->first, inner);
        }
        default: return true;
        }
    }

    // Cell contents must be affine. Positive data (and type variables) gets an
    // implicit `affine`; consumer types cannot be stored at all.
    TypePtr normalise_state(const TypePtr& inner, bool usage, bool locked) {
        TypePtr h = inner->kind == TypeKind::Var ? inner : head(inner, env);
        TypePtr stored = usage ? dual(h) : h;
        switch (stored->kind) {
        case TypeKind::Affine:
        case TypeKind::State:
            return usage ? ty::usage(inner, locked) : ty::state(inner, locked);
        case TypeKind::Close:
        case TypeKind::Send:
        case TypeKind::Choice:
        case TypeKind::Bang:
        case TypeKind::Prim:
        case TypeKind::Var:
            return usage ? ty::usage(ty::coaffine(inner), locked) : ty::state(ty::affine(inner), locked);
        default:
            fail("cell-content", "cell content " + to_string(usage ? dual(inner) : inner) +
                                     " is not affine and cannot be made affine", span);
        }
    }

    TypePtr walk(const TypePtr& t, const std::set<std::string>& tvars) {
        switch (t->kind) {
        case TypeKind::Var:
            if (!tvars.count(t->name)) fail("unbound-type-variable", "type variable '" + t->name + "' is not bound", span);
            return t;
        case TypeKind::App: {
            const TypeDef* def = env.find(t->name);
            if (!def) fail("unknown-type", "unknown type '" + t->name + "'", span);
            if (def->params.size() != t->args.size())
                fail("type-arity", "type '" + t->name + "' expects " + std::to_string(def->params.size()) +
                                       " argument(s), got " + std::to_string(t->args.size()), span);
            std::vector<TypePtr> args;
            for (auto& a : t->args) args.push_back(walk(a, tvars));
            return ty::app(t->name, std::move(args), t->negated);
        }
        case TypeKind::Rec:
        case TypeKind::Corec: {
            if (!contractive(t->first, {t->name}))
                fail("non-contractive", "recursive type " + to_string(t) + " is not guarded by a constructor", span);
            auto inner = tvars;
            inner.insert(t->name);
            auto body = walk(t->first, inner);
            return t->kind == TypeKind::Rec ? ty::rec(t->name, body) : ty::corec(t->name, body);
        }
        case TypeKind::Offer:
        case TypeKind::Choice: {
            std::set<std::string> seen;
            std::vector<TypeBranch> bs;
            for (auto& b : t->branches) {
                if (!seen.insert(b.label).second)
                    fail("duplicate-label", "label #" + b.label + " appears twice", span);
                bs.push_back({b.label, walk(b.type, tvars)});
            }
            return t->kind == TypeKind::Offer ? ty::offer(std::move(bs)) : ty::choice(std::move(bs));
        }
        case TypeKind::State:
            return normalise_state(walk(t->first, tvars), false, t->locked);
        case TypeKind::Usage:
            return normalise_state(walk(t->first, tvars), true, t->locked);
        default: {
            auto r = std::make_shared<Type>(*t);
            if (t->first) r->first = walk(t->first, tvars);
            if (t->second) r->second = walk(t->second, tvars);
            return r;
        }
        }
    }
};

bool needs_parens(const TypePtr& t) {
    switch (t->kind) {
    case TypeKind::Send:
    case TypeKind::Recv:
        return true;
    case TypeKind::Bang:
    case TypeKind::Quest:
    case TypeKind::Affine:
    case TypeKind::Coaffine:
    case TypeKind::State:
    case TypeKind::Usage:
    case TypeKind::Rec:
    case TypeKind::Corec:
        return needs_parens(t->first);
    default:
        return false;
    }
}

void print(std::ostream& os, const TypePtr& t) {
    auto payload = [&](const TypePtr& p) {
        if (needs_parens(p)) {
            os << "(";
            print(os, p);
            os << ")";
        } else {
            print(os, p);
        }
    };
    auto branches = [&](const char* kw) {
        os << kw << " of {";
        for (auto& b : t->branches) {
            os << " |#" << b.label << ": ";
            print(os, b.type);
        }
        os << " }";
    };
    switch (t->kind) {
    case TypeKind::Close: os << "close"; break;
    case TypeKind::Wait: os << "wait"; break;
    case TypeKind::Send:
        os << "send ";
        payload(t->first);
        os << "; ";
        print(os, t->second);
        break;
    case TypeKind::Recv:
        os << "recv ";
        payload(t->first);
        os << "; ";
        print(os, t->second);
        break;
    case TypeKind::Offer: branches("offer"); break;
    case TypeKind::Choice: branches("choice"); break;
    case TypeKind::Bang: os << "!"; print(os, t->first); break;
    case TypeKind::Quest: os << "?"; print(os, t->first); break;
    case TypeKind::Affine: os << "affine "; print(os, t->first); break;
    case TypeKind::Coaffine: os << "coaffine "; print(os, t->first); break;
    case TypeKind::State: os << (t->locked ? "statel " : "state "); print(os, t->first); break;
    case TypeKind::Usage: os << (t->locked ? "usagel " : "usage "); print(os, t->first); break;
    case TypeKind::Rec: os << "rec " << t->name << ". "; print(os, t->first); break;
    case TypeKind::Corec: os << "corec " << t->name << ". "; print(os, t->first); break;
    case TypeKind::Var: os << (t->negated ? "~" : "") << t->name; break;
    case TypeKind::App:
        os << (t->negated ? "~" : "") << t->name;
        if (!t->args.empty()) {
            os << "(";
            for (size_t i = 0; i < t->args.size(); ++i) {
                if (i) os << ", ";
                print(os, t->args[i]);
            }
            os << ")";
        }
        break;
    case TypeKind::Prim: os << (t->prim == PrimKind::Int ? "lint" : "lstring"); break;
    case TypeKind::DualPrim: os << (t->prim == PrimKind::Int ? "~lint" : "~lstring"); break;
    }
}

} // namespace

bool type_equal(const TypePtr& a, const TypePtr& b, const TypeEnv& env) {
    Equality e{env, {}};
    return e.eq(a, b);
}

TypePtr well_formed(const TypePtr& t, const TypeEnv& env, const std::set<std::string>& tvars, const Span& span) {
    WellFormed wf{env, span};
    return wf.walk(t, tvars);
}

bool is_disposable(const TypePtr& t, const TypeEnv& env) {
    TypePtr h = head(t, env);
    switch (h->kind) {
    case TypeKind::Affine:
    case TypeKind::Coaffine:
    case TypeKind::State:
    case TypeKind::Quest:
        return true;
    case TypeKind::Usage:
        return !h->locked;
    default:
        return false;
    }
}

std::optional<PrimKind> value_kind(const TypePtr& t, const TypeEnv& env) {
    TypePtr h = head(t, env);
    switch (h->kind) {
    case TypeKind::DualPrim: return h->prim;
    case TypeKind::Quest:
    case TypeKind::Coaffine: return value_kind(h->first, env);
    default: return std::nullopt;
    }
}

std::optional<PrimKind> producer_kind(const TypePtr& t, const TypeEnv& env) {
    TypePtr h = head(t, env);
    switch (h->kind) {
    case TypeKind::Prim: return h->prim;
    case TypeKind::Bang:
    case TypeKind::Affine: return producer_kind(h->first, env);
    default: return std::nullopt;
    }
}

std::string to_string(const TypePtr& t) {
    std::ostringstream os;
    print(os, t);
    return os.str();
}

} // namespace clls
