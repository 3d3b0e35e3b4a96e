#include "clls/checker.hpp"

#include <functional>

#include "clls/syntax.hpp"

namespace clls {

namespace {

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

void expr_names(const ExprPtr& e, std::set<std::string>& out) {
    if (!e) return;
    if (e->kind == Expr::Kind::Name) out.insert(e->text);
    expr_names(e->lhs, out);
    expr_names(e->rhs, out);
}

void arg_names(const Arg& a, std::set<std::string>& out) {
    switch (a.kind) {
    case Arg::Kind::Name: out.insert(a.name); break;
    case Arg::Kind::Value: expr_names(a.expr, out); break;
    case Arg::Kind::Closure: {
        auto inner = free_names(a.body);
        inner.erase(a.bound);
        out.insert(inner.begin(), inner.end());
        break;
    }
    }
}

void add_without(std::set<std::string>& out, const ProcPtr& p, const std::string& bound) {
    auto inner = free_names(p);
    inner.erase(bound);
    out.insert(inner.begin(), inner.end());
}

void add_all(std::set<std::string>& out, const ProcPtr& p) {
    auto inner = free_names(p);
    out.insert(inner.begin(), inner.end());
}

enum class ExprType { Int, Str, Bool };

const char* expr_type_name(ExprType t) {
    switch (t) {
    case ExprType::Int: return "lint";
    case ExprType::Str: return "lstring";
    case ExprType::Bool: return "bool";
    }
    return "?";
}

ExprType of_prim(PrimKind k) { return k == PrimKind::Int ? ExprType::Int : ExprType::Str; }

class Checker {
public:
    Checker(const Program& prog, std::vector<Diagnostic>& out, std::set<std::string> tvars)
        : prog_(prog), out_(out), tvars_(std::move(tvars)) {}

    void run(const ProcPtr& p, Context ctx) {
        const Span& sp = p->span;
        std::visit(overloaded{
                       [&](const node::Inert&) { finish(ctx, sp); },
                       [&](const node::Forward& n) { forward(n, ctx, sp); },
                       [&](const node::Par& n) {
                           auto [l, r] = split(ctx, free_names(n.left), free_names(n.right), "par-arity",
                                               "par", sp);
                           run(n.left, std::move(l));
                           run(n.right, std::move(r));
                       },
                       [&](const node::Cut& n) { cut(n.chan, n.type, n.left, n.right, ctx, sp); },
                       [&](const node::LetC& n) { cut(n.chan, n.type, n.left, n.right, ctx, sp); },
                       [&](const node::Share& n) { share(n, ctx, sp); },
                       [&](const node::Call& n) { call(n, ctx, sp); },
                       [&](const node::Send& n) {
                           auto t = comm(ctx, n.chan, sp);
                           if (!t) return;
                           if (t->kind != TypeKind::Send) return mismatch("send on", n.chan, t, sp);
                           if (!payload(ctx, n.arg, t->first, sp)) return;
                           bind(ctx, n.chan, t->second, sp);
                           run(n.next, std::move(ctx));
                       },
                       [&](const node::Recv& n) {
                           auto t = comm(ctx, n.chan, sp);
                           if (!t) return;
                           if (t->kind != TypeKind::Recv) return mismatch("recv on", n.chan, t, sp);
                           bind(ctx, n.chan, t->second, sp);
                           bind(ctx, n.bound, t->first, sp);
                           run(n.next, std::move(ctx));
                       },
                       [&](const node::Select& n) {
                           auto t = comm(ctx, n.chan, sp);
                           if (!t) return;
                           if (t->kind != TypeKind::Choice) return mismatch("select on", n.chan, t, sp);
                           for (auto& b : t->branches) {
                               if (b.label == n.label) {
                                   bind(ctx, n.chan, b.type, sp);
                                   return run(n.next, std::move(ctx));
                               }
                           }
                           error("label-unknown", "label #" + n.label + " is not offered by " + to_string(t), sp);
                       },
                       [&](const node::Case& n) { case_of(n, ctx, sp); },
                       [&](const node::Close& n) {
                           auto t = comm(ctx, n.chan, sp);
                           if (!t) return;
                           if (t->kind != TypeKind::Close) return mismatch("close on", n.chan, t, sp);
                           run(n.next, std::move(ctx));
                       },
                       [&](const node::Wait& n) {
                           auto t = comm(ctx, n.chan, sp);
                           if (!t) return;
                           if (t->kind != TypeKind::Wait) return mismatch("wait on", n.chan, t, sp);
                           run(n.next, std::move(ctx));
                       },
                       [&](const node::Serve& n) { serve(n, ctx, sp); },
                       [&](const node::CallRepl& n) {
                           auto it = ctx.replicable.find(n.chan);
                           if (it == ctx.replicable.end()) {
                               missing(ctx, n.chan, sp, "replicated name");
                               return;
                           }
                           TypePtr inner = it->second;
                           bind(ctx, n.bound, inner, sp);
                           run(n.next, std::move(ctx));
                       },
                       [&](const node::AffineIntro& n) { affine_intro(n, ctx, sp); },
                       [&](const node::Use& n) {
                           auto t = take(ctx, n.chan, sp);
                           if (!t) return;
                           auto h = hd(t);
                           if (h->kind != TypeKind::Coaffine) return mismatch("use on", n.chan, h, sp);
                           bind(ctx, n.chan, h->first, sp);
                           run(n.next, std::move(ctx));
                       },
                       [&](const node::Discard& n) { dispose(n.chan, n.next, ctx, sp); },
                       [&](const node::Drop& n) { dispose(n.chan, n.next, ctx, sp); },
                       [&](const node::Release& n) { dispose(n.chan, n.next, ctx, sp); },
                       [&](const node::CellNew& n) {
                           auto t = take(ctx, n.chan, sp);
                           if (!t) return;
                           auto h = hd(t);
                           if (h->kind != TypeKind::State || h->locked)
                               return mismatch("cell on", n.chan, h, sp);
                           if (!payload(ctx, n.init, h->first, sp)) return;
                           finish(ctx, sp);
                       },
                       [&](const node::Take& n) {
                           auto t = take(ctx, n.chan, sp);
                           if (!t) return;
                           auto h = hd(t);
                           if (h->kind != TypeKind::Usage) return mismatch("take on", n.chan, h, sp);
                           if (h->locked) {
                               protocol({CellAction::Take, CellAction::Take}, n.chan, sp);
                               return;
                           }
                           bind(ctx, n.chan, ty::usage(h->first, true), sp);
                           bind(ctx, n.bound, h->first, sp);
                           run(n.next, std::move(ctx));
                       },
                       [&](const node::Put& n) {
                           auto t = take(ctx, n.chan, sp);
                           if (!t) return;
                           auto h = hd(t);
                           if (h->kind != TypeKind::Usage) return mismatch("put on", n.chan, h, sp);
                           if (!h->locked) {
                               protocol({CellAction::Put}, n.chan, sp);
                               return;
                           }
                           if (!payload(ctx, n.arg, dual(h->first), sp)) return;
                           bind(ctx, n.chan, ty::usage(h->first, false), sp);
                           run(n.next, std::move(ctx));
                       },
                       [&](const node::If& n) {
                           auto t = infer(ctx, n.cond);
                           if (t && *t != ExprType::Bool)
                               error("type-mismatch", "condition has type " + std::string(expr_type_name(*t)) +
                                                          ", expected a comparison", sp);
                           run(n.then_branch, ctx);
                           run(n.else_branch, std::move(ctx));
                       },
                       [&](const node::Print& n) {
                           infer(ctx, n.expr);
                           run(n.next, std::move(ctx));
                       },
                       [&](const node::Sleep& n) {
                           auto t = infer(ctx, n.ticks);
                           if (t && *t != ExprType::Int) error("type-mismatch", "sleep expects an integer", sp);
                           run(n.next, std::move(ctx));
                       },
                   },
                   p->node);
    }

private:
    const Program& prog_;
    std::vector<Diagnostic>& out_;
    std::set<std::string> tvars_;

    const TypeEnv& env() const { return prog_.types; }

    void error(const std::string& rule, const std::string& msg, const Span& sp) {
        out_.push_back(Diagnostic{rule, msg, sp});
    }

    TypePtr hd(const TypePtr& t) { return head(t, env()); }

    bool eq(const TypePtr& a, const TypePtr& b) { return type_equal(a, b, env()); }

    // Exact match, or a coaffine argument used where its content is expected.
    bool compatible(const TypePtr& actual, const TypePtr& expected) {
        if (eq(actual, expected)) return true;
        auto h = hd(actual);
        return h->kind == TypeKind::Coaffine && compatible(h->first, expected);
    }

    void mismatch(const std::string& what, const std::string& name, const TypePtr& t, const Span& sp) {
        error("type-mismatch", what + " '" + name + "' of type " + to_string(t), sp);
    }

    void protocol(const std::vector<CellAction>& seq, const std::string& name, const Span& sp) {
        std::string rule = check_cell_protocol(seq, false);
        std::string msg = rule == "take-take"         ? "take on '" + name + "' while it is already held"
                          : rule == "put-without-take" ? "put on '" + name + "' without a preceding take"
                                                       : "drop of '" + name + "' while it is held";
        error(rule, msg, sp);
    }

    void missing(const Context& ctx, const std::string& name, const Span& sp, const char* what) {
        if (ctx.consumed.count(name))
            error("linearity-reuse", "'" + name + "' was already used", sp);
        else if (ctx.linear.count(name) || ctx.values.count(name) || ctx.replicable.count(name))
            error("type-mismatch", "'" + name + "' is not a " + what, sp);
        else
            error("unbound-name", "name '" + name + "' is not bound", sp);
    }

    // Consume a linear name.
    TypePtr take(Context& ctx, const std::string& name, const Span& sp) {
        auto it = ctx.linear.find(name);
        if (it == ctx.linear.end()) {
            missing(ctx, name, sp, "linear channel");
            return nullptr;
        }
        TypePtr t = it->second;
        ctx.linear.erase(it);
        ctx.consumed.insert(name);
        return t;
    }

    // Consume a channel for communication; coaffine wrappers are used implicitly.
    TypePtr comm(Context& ctx, const std::string& name, const Span& sp) {
        auto t = take(ctx, name, sp);
        if (!t) return nullptr;
        auto h = hd(t);
        while (h->kind == TypeKind::Coaffine) h = hd(h->first);
        return h;
    }

    void bind(Context& ctx, const std::string& name, const TypePtr& t, const Span& sp) {
        if (ctx.linear.count(name))
            error("linearity-shadow", "'" + name + "' rebinds a linear name that is still live", sp);
        ctx.linear.erase(name);
        ctx.consumed.erase(name);
        ctx.values.erase(name);
        ctx.replicable.erase(name);
        if (value_kind(t, env())) {
            ctx.values[name] = t;
            return;
        }
        auto h = hd(t);
        if (h->kind == TypeKind::Quest) {
            ctx.replicable[name] = h->first;
            return;
        }
        ctx.linear[name] = t;
    }

    void finish(const Context& ctx, const Span& sp) {
        for (auto& [name, t] : ctx.linear) {
            auto h = hd(t);
            if (h->kind == TypeKind::Usage)
                error("cell-leak", "cell reference '" + name + "' is never dropped", sp);
            else
                error("leak", "linear name '" + name + "' of type " + to_string(t) + " is never used", sp);
        }
    }

    std::optional<ExprType> infer(const Context& ctx, const ExprPtr& e) {
        switch (e->kind) {
        case Expr::Kind::Int: return ExprType::Int;
        case Expr::Kind::Str: return ExprType::Str;
        case Expr::Kind::Name: {
            auto it = ctx.values.find(e->text);
            if (it != ctx.values.end()) return of_prim(*value_kind(it->second, env()));
            if (ctx.linear.count(e->text))
                error("expr-non-value", "'" + e->text + "' of type " + to_string(ctx.linear.at(e->text)) +
                                            " is not a basic value", e->span);
            else
                missing(ctx, e->text, e->span, "basic value");
            return std::nullopt;
        }
        case Expr::Kind::Binary: {
            auto l = infer(ctx, e->lhs);
            auto r = infer(ctx, e->rhs);
            if (!l || !r) return std::nullopt;
            if (e->op == BinOp::Eq) {
                if (*l != *r) {
                    error("type-mismatch", "comparison of " + std::string(expr_type_name(*l)) + " with " +
                                               expr_type_name(*r), e->span);
                    return std::nullopt;
                }
                return ExprType::Bool;
            }
            if (*l == ExprType::Bool || *r == ExprType::Bool) {
                error("type-mismatch", "arithmetic on a comparison", e->span);
                return std::nullopt;
            }
            if (e->op == BinOp::Add && (*l == ExprType::Str || *r == ExprType::Str)) return ExprType::Str;
            if (*l != ExprType::Int || *r != ExprType::Int) {
                error("type-mismatch", "arithmetic on a string", e->span);
                return std::nullopt;
            }
            return ExprType::Int;
        }
        }
        return std::nullopt;
    }

    // Check a closure `x. body` whose parameter has type `t`. Captured linear
    // names move into the closure; values and replicated names are copied.
    void closure(Context& ctx, const std::string& x, const ProcPtr& body, const TypePtr& t, const Span& sp) {
        Context inner;
        inner.values = ctx.values;
        inner.replicable = ctx.replicable;
        inner.consumed = ctx.consumed;
        auto names = free_names(body);
        names.erase(x);
        for (auto& n : names) {
            auto it = ctx.linear.find(n);
            if (it == ctx.linear.end()) continue;
            inner.linear[n] = it->second;
            ctx.linear.erase(it);
            ctx.consumed.insert(n);
        }
        bind(inner, x, t, sp);
        run(body, std::move(inner));
    }

    // The thing sent (or stored) must be usable by the other side at type `pay`.
    bool payload(Context& ctx, const Arg& a, const TypePtr& pay, const Span& sp) {
        switch (a.kind) {
        case Arg::Kind::Closure:
            closure(ctx, a.bound, a.body, pay, sp);
            return true;
        case Arg::Kind::Value: {
            auto t = infer(ctx, a.expr);
            if (!t) return false;
            auto k = producer_kind(pay, env());
            if (!k || of_prim(*k) != *t) {
                error("type-mismatch", "value of type " + std::string(expr_type_name(*t)) +
                                           " where " + to_string(pay) + " is expected", sp);
                return false;
            }
            return true;
        }
        case Arg::Kind::Name: {
            const std::string& n = a.name;
            if (auto it = ctx.values.find(n); it != ctx.values.end()) {
                auto vk = value_kind(it->second, env());
                auto pk = producer_kind(pay, env());
                if (!pk || *pk != *vk) {
                    error("type-mismatch", "'" + n + "' of type " + to_string(it->second) + " where " +
                                               to_string(pay) + " is expected", sp);
                    return false;
                }
                return true;
            }
            if (auto it = ctx.replicable.find(n); it != ctx.replicable.end()) {
                if (!eq(ty::quest(it->second), dual(pay))) {
                    error("type-mismatch", "'" + n + "' of type ?" + to_string(it->second) + " where " +
                                               to_string(pay) + " is expected", sp);
                    return false;
                }
                return true;
            }
            auto t = take(ctx, n, sp);
            if (!t) return false;
            if (!compatible(t, dual(pay))) {
                error("type-mismatch", "'" + n + "' has type " + to_string(t) + ", expected " +
                                           to_string(dual(pay)), sp);
                return false;
            }
            return true;
        }
        }
        return false;
    }

    void forward(const node::Forward& n, Context& ctx, const Span& sp) {
        auto value_side = [&](const std::string& v, const std::string& l) -> bool {
            auto vit = ctx.values.find(v);
            if (vit == ctx.values.end() || !ctx.linear.count(l)) return false;
            auto t = take(ctx, l, sp);
            auto pk = producer_kind(t, env());
            if (!pk || *pk != *value_kind(vit->second, env()))
                error("type-mismatch", "cannot forward value '" + v + "' to '" + l + "' of type " + to_string(t), sp);
            return true;
        };
        if (!value_side(n.a, n.b) && !value_side(n.b, n.a)) {
            auto ta = take(ctx, n.a, sp);
            auto tb = take(ctx, n.b, sp);
            if (ta && tb && !compatible(ta, dual(tb)) && !compatible(tb, dual(ta)))
                error("type-mismatch", "cannot forward '" + n.a + "' of type " + to_string(ta) + " to '" + n.b +
                                           "' of type " + to_string(tb), sp);
        }
        finish(ctx, sp);
    }

    std::pair<Context, Context> split(const Context& ctx, const std::set<std::string>& left,
                                      const std::set<std::string>& right, const std::string& rule,
                                      const std::string& what, const Span& sp) {
        Context l, r;
        l.values = r.values = ctx.values;
        l.replicable = r.replicable = ctx.replicable;
        l.consumed = r.consumed = ctx.consumed;
        for (auto& [name, t] : ctx.linear) {
            bool inl = left.count(name), inr = right.count(name);
            if (inl && inr) {
                error(rule, "linear name '" + name + "' is used by both sides of " + what, sp);
                l.linear[name] = t;
                r.linear[name] = t;
            } else if (inl) {
                l.linear[name] = t;
            } else {
                r.linear[name] = t;
            }
        }
        return {std::move(l), std::move(r)};
    }

    void cut(const std::string& x, TypePtr a, const ProcPtr& left, const ProcPtr& right, Context& ctx,
             const Span& sp) {
        if (!a) {
            a = fill_letc_hole(prog_, x, left);
            if (!a) {
                error("cannot-infer", "cannot infer the type of '" + x + "': no call in the body passes it", sp);
                return;
            }
        }
        try {
            a = well_formed(a, env(), tvars_, sp);
        } catch (const DiagnosticError& e) {
            out_.push_back(e.diagnostic());
            return;
        }
        if (ctx.linear.count(x))
            error("linearity-shadow", "'" + x + "' rebinds a linear name that is still live", sp);
        Context base = ctx;
        base.linear.erase(x);
        auto fl = free_names(left), fr = free_names(right);
        fl.erase(x);
        fr.erase(x);
        auto [l, r] = split(base, fl, fr, "cut-arity", "cut on '" + x + "'", sp);
        bind(l, x, a, sp);
        bind(r, x, dual(a), sp);
        run(left, std::move(l));
        run(right, std::move(r));
    }

    void share(const node::Share& n, Context& ctx, const Span& sp) {
        auto it = ctx.linear.find(n.chan);
        if (it == ctx.linear.end()) return missing(ctx, n.chan, sp, "cell reference");
        TypePtr t = it->second;
        auto h = hd(t);
        if (h->kind != TypeKind::Usage) return mismatch("share on", n.chan, h, sp);
        if (h->locked) {
            error("share-while-held", "share of '" + n.chan + "' while it is held", sp);
            return;
        }
        Context base = ctx;
        base.linear.erase(n.chan);
        auto fl = free_names(n.left), fr = free_names(n.right);
        fl.erase(n.chan);
        fr.erase(n.chan);
        auto [l, r] = split(base, fl, fr, "share-arity", "share on '" + n.chan + "'", sp);
        l.linear[n.chan] = t;
        r.linear[n.chan] = t;
        run(n.left, std::move(l));
        run(n.right, std::move(r));
    }

    void case_of(const node::Case& n, Context& ctx, const Span& sp) {
        auto t = comm(ctx, n.chan, sp);
        if (!t) return;
        if (t->kind != TypeKind::Offer) return mismatch("case on", n.chan, t, sp);
        std::set<std::string> seen;
        for (auto& b : n.branches) {
            if (!seen.insert(b.label).second) {
                error("case-coverage", "branch #" + b.label + " appears twice", b.span);
                continue;
            }
            const TypeBranch* match = nullptr;
            for (auto& tb : t->branches)
                if (tb.label == b.label) match = &tb;
            if (!match) {
                error("label-unknown", "label #" + b.label + " is not part of " + to_string(t), b.span);
                continue;
            }
            Context bc = ctx;
            bind(bc, n.chan, match->type, b.span);
            run(b.body, std::move(bc));
        }
        for (auto& tb : t->branches)
            if (!seen.count(tb.label))
                error("case-coverage", "case on '" + n.chan + "' has no branch for #" + tb.label, sp);
    }

    void serve(const node::Serve& n, Context& ctx, const Span& sp) {
        auto t = take(ctx, n.chan, sp);
        if (!t) return;
        auto h = hd(t);
        if (h->kind != TypeKind::Bang) return mismatch("replicated server on", n.chan, h, sp);
        for (auto& [name, lt] : ctx.linear)
            error("bang-promotion", "linear name '" + name + "' cannot be captured by replicated server '" +
                                        n.chan + "'", sp);
        Context body;
        body.values = ctx.values;
        body.replicable = ctx.replicable;
        body.consumed = ctx.consumed;
        bind(body, n.bound, h->first, sp);
        run(n.body, std::move(body));
    }

    void affine_intro(const node::AffineIntro& n, Context& ctx, const Span& sp) {
        auto t = take(ctx, n.chan, sp);
        if (!t) return;
        auto h = hd(t);
        if (h->kind != TypeKind::Affine) return mismatch("affine on", n.chan, h, sp);
        for (auto& [name, lt] : ctx.linear)
            if (!is_disposable(lt, env()))
                error("affine-promotion", "'" + name + "' of type " + to_string(lt) +
                                              " is not disposable under affine '" + n.chan + "'", sp);
        bind(ctx, n.chan, h->first, sp);
        run(n.next, std::move(ctx));
    }

    void dispose(const std::string& c, const ProcPtr& next, Context& ctx, const Span& sp) {
        if (ctx.values.erase(c) || ctx.replicable.erase(c)) return run(next, std::move(ctx));
        auto t = take(ctx, c, sp);
        if (!t) return;
        auto h = hd(t);
        switch (h->kind) {
        case TypeKind::Usage:
            if (h->locked) return protocol({CellAction::Take, CellAction::Drop}, c, sp);
            break;
        case TypeKind::Coaffine:
        case TypeKind::Quest:
            break;
        default:
            error("not-disposable", "'" + c + "' of type " + to_string(t) + " cannot be dropped", sp);
            return;
        }
        run(next, std::move(ctx));
    }

    void call(const node::Call& n, Context& ctx, const Span& sp) {
        const ProcDecl* callee = prog_.find(n.name);
        if (!callee) {
            error("unbound-name", "unknown procedure '" + n.name + "'", sp);
            return;
        }
        if (n.linear.size() != callee->linear.size() || n.exponential.size() != callee->exponential.size()) {
            error("arity", "'" + n.name + "' expects " + std::to_string(callee->linear.size()) + " linear and " +
                               std::to_string(callee->exponential.size()) + " unrestricted argument(s)", sp);
            return;
        }
        if (n.type_args.size() != callee->type_params.size()) {
            error("arity", "'" + n.name + "' expects " + std::to_string(callee->type_params.size()) +
                               " type argument(s)", sp);
            return;
        }
        std::map<std::string, TypePtr> sub;
        try {
            for (size_t i = 0; i < n.type_args.size(); ++i)
                sub[callee->type_params[i]] = well_formed(n.type_args[i], env(), tvars_, sp);
        } catch (const DiagnosticError& e) {
            out_.push_back(e.diagnostic());
            return;
        }
        for (size_t i = 0; i < n.linear.size(); ++i) {
            const std::string& a = n.linear[i];
            if (!callee->linear[i].type) {
                take(ctx, a, sp);
                continue;
            }
            TypePtr want = substitute(callee->linear[i].type, sub);
            if (auto it = ctx.values.find(a); it != ctx.values.end()) {
                auto vk = value_kind(want, env());
                if (!vk || *vk != *value_kind(it->second, env()))
                    error("type-mismatch", "argument '" + a + "' of type " + to_string(it->second) + " for " +
                                               to_string(want), sp);
                continue;
            }
            if (auto it = ctx.replicable.find(a); it != ctx.replicable.end()) {
                if (!eq(ty::quest(it->second), want))
                    error("type-mismatch", "argument '" + a + "' of type ?" + to_string(it->second) + " for " +
                                               to_string(want), sp);
                continue;
            }
            auto t = take(ctx, a, sp);
            if (t && !compatible(t, want))
                error("type-mismatch", "argument '" + a + "' has type " + to_string(t) + ", '" + n.name +
                                           "' expects " + to_string(want), sp);
        }
        for (size_t i = 0; i < n.exponential.size(); ++i) {
            const ExprPtr& e = n.exponential[i];
            if (!callee->exponential[i].type) continue;
            TypePtr want = substitute(callee->exponential[i].type, sub);
            auto vk = value_kind(want, env());
            if (e->kind == Expr::Kind::Name && !ctx.values.count(e->text)) {
                auto it = ctx.replicable.find(e->text);
                if (it == ctx.replicable.end()) {
                    missing(ctx, e->text, e->span, "replicated name or value");
                } else if (vk || !eq(it->second, want)) {
                    error("type-mismatch", "argument '" + e->text + "' of type ?" + to_string(it->second) +
                                               " for ?" + to_string(want), sp);
                }
                continue;
            }
            auto t = infer(ctx, e);
            if (t && (!vk || of_prim(*vk) != *t))
                error("type-mismatch", "argument " + pretty(e) + " of type " + expr_type_name(*t) + " for " +
                                           to_string(want), sp);
        }
        finish(ctx, sp);
    }
};

void collect_calls(const ProcPtr& p, std::set<std::string>& out) {
    if (!p) return;
    std::visit(overloaded{
                   [&](const node::Call& n) { out.insert(n.name); },
                   [&](const node::Par& n) { collect_calls(n.left, out); collect_calls(n.right, out); },
                   [&](const node::Cut& n) { collect_calls(n.left, out); collect_calls(n.right, out); },
                   [&](const node::LetC& n) { collect_calls(n.left, out); collect_calls(n.right, out); },
                   [&](const node::Share& n) { collect_calls(n.left, out); collect_calls(n.right, out); },
                   [&](const node::Send& n) { collect_calls(n.arg.body, out); collect_calls(n.next, out); },
                   [&](const node::Put& n) { collect_calls(n.arg.body, out); collect_calls(n.next, out); },
                   [&](const node::CellNew& n) { collect_calls(n.init.body, out); },
                   [&](const node::Case& n) {
                       for (auto& b : n.branches) collect_calls(b.body, out);
                   },
                   [&](const node::Serve& n) { collect_calls(n.body, out); },
                   [&](const node::If& n) {
                       collect_calls(n.then_branch, out);
                       collect_calls(n.else_branch, out);
                   },
                   [&](const node::Inert&) {},
                   [&](const node::Forward&) {},
                   [&](const auto& n) { collect_calls(n.next, out); },
               },
               p->node);
}

// Walk a body; `guarded` becomes true after the first communication action.
void guard_walk(const ProcPtr& p, bool guarded, const std::string& self, RecFlag flag,
                const std::set<std::string>& scc, std::vector<Diagnostic>& out) {
    if (!p) return;
    auto walk = [&](const ProcPtr& q, bool g) { guard_walk(q, g, self, flag, scc, out); };
    std::visit(overloaded{
                   [&](const node::Call& n) {
                       if (!scc.count(n.name)) return;
                       if (flag == RecFlag::None)
                           out.push_back({"undeclared-recursion",
                                          "'" + self + "' calls '" + n.name +
                                              "' recursively but is not declared rec or gen_rec",
                                          p->span});
                       else if (!guarded)
                           out.push_back({"unguarded-recursion",
                                          "recursive call to '" + n.name +
                                              "' is not preceded by a communication action",
                                          p->span});
                   },
                   [&](const node::Par& n) { walk(n.left, guarded); walk(n.right, guarded); },
                   [&](const node::Cut& n) { walk(n.left, guarded); walk(n.right, guarded); },
                   [&](const node::LetC& n) { walk(n.left, guarded); walk(n.right, guarded); },
                   [&](const node::Share& n) { walk(n.left, guarded); walk(n.right, guarded); },
                   [&](const node::Send& n) { walk(n.arg.body, guarded); walk(n.next, true); },
                   [&](const node::Put& n) { walk(n.arg.body, guarded); walk(n.next, guarded); },
                   [&](const node::CellNew& n) { walk(n.init.body, guarded); },
                   [&](const node::Recv& n) { walk(n.next, true); },
                   [&](const node::Select& n) { walk(n.next, true); },
                   [&](const node::Take& n) { walk(n.next, true); },
                   [&](const node::CallRepl& n) { walk(n.next, true); },
                   [&](const node::Case& n) {
                       for (auto& b : n.branches) walk(b.body, true);
                   },
                   [&](const node::Serve& n) { walk(n.body, guarded); },
                   [&](const node::If& n) {
                       walk(n.then_branch, guarded);
                       walk(n.else_branch, guarded);
                   },
                   [&](const node::Inert&) {},
                   [&](const node::Forward&) {},
                   [&](const auto& n) { walk(n.next, guarded); },
               },
               p->node);
}

TypePtr hole_search(const Program& prog, const std::string& x, const ProcPtr& p) {
    if (!p) return nullptr;
    return std::visit(
        overloaded{
            [&](const node::Call& n) -> TypePtr {
                const ProcDecl* callee = prog.find(n.name);
                if (!callee || n.type_args.size() != callee->type_params.size()) return nullptr;
                for (size_t i = 0; i < n.linear.size() && i < callee->linear.size(); ++i) {
                    if (n.linear[i] != x || !callee->linear[i].type) continue;
                    std::map<std::string, TypePtr> sub;
                    for (size_t k = 0; k < n.type_args.size(); ++k) sub[callee->type_params[k]] = n.type_args[k];
                    return substitute(callee->linear[i].type, sub);
                }
                return nullptr;
            },
            [&](const node::Cut& n) -> TypePtr {
                if (n.chan == x) return nullptr;
                if (auto t = hole_search(prog, x, n.left)) return t;
                return hole_search(prog, x, n.right);
            },
            [&](const node::LetC& n) -> TypePtr {
                if (n.chan == x) return nullptr;
                if (auto t = hole_search(prog, x, n.left)) return t;
                return hole_search(prog, x, n.right);
            },
            [&](const node::Par& n) -> TypePtr {
                if (auto t = hole_search(prog, x, n.left)) return t;
                return hole_search(prog, x, n.right);
            },
            [&](const node::Share& n) -> TypePtr {
                if (auto t = hole_search(prog, x, n.left)) return t;
                return hole_search(prog, x, n.right);
            },
            [&](const node::Case& n) -> TypePtr {
                for (auto& b : n.branches)
                    if (auto t = hole_search(prog, x, b.body)) return t;
                return nullptr;
            },
            [&](const node::If& n) -> TypePtr {
                if (auto t = hole_search(prog, x, n.then_branch)) return t;
                return hole_search(prog, x, n.else_branch);
            },
            [&](const node::Serve&) -> TypePtr { return nullptr; },
            [&](const node::Inert&) -> TypePtr { return nullptr; },
            [&](const node::Forward&) -> TypePtr { return nullptr; },
            [&](const node::CellNew&) -> TypePtr { return nullptr; },
            [&](const auto& n) -> TypePtr { return hole_search(prog, x, n.next); },
        },
        p->node);
}

} // namespace

const ProcDecl* Program::find(const std::string& name) const {
    auto it = procs.find(name);
    return it == procs.end() ? nullptr : &it->second;
}

std::set<std::string> free_names(const ProcPtr& p) {
    std::set<std::string> out;
    if (!p) return out;
    std::visit(overloaded{
                   [&](const node::Inert&) {},
                   [&](const node::Forward& n) { out.insert(n.a); out.insert(n.b); },
                   [&](const node::Par& n) { add_all(out, n.left); add_all(out, n.right); },
                   [&](const node::Cut& n) { add_without(out, n.left, n.chan); add_without(out, n.right, n.chan); },
                   [&](const node::LetC& n) { add_without(out, n.left, n.chan); add_without(out, n.right, n.chan); },
                   [&](const node::Share& n) { out.insert(n.chan); add_all(out, n.left); add_all(out, n.right); },
                   [&](const node::Call& n) {
                       out.insert(n.linear.begin(), n.linear.end());
                       for (auto& e : n.exponential) expr_names(e, out);
                   },
                   [&](const node::Send& n) { out.insert(n.chan); arg_names(n.arg, out); add_all(out, n.next); },
                   [&](const node::Recv& n) { out.insert(n.chan); add_without(out, n.next, n.bound); },
                   [&](const node::Select& n) { out.insert(n.chan); add_all(out, n.next); },
                   [&](const node::Case& n) {
                       out.insert(n.chan);
                       for (auto& b : n.branches) add_all(out, b.body);
                   },
                   [&](const node::Serve& n) { out.insert(n.chan); add_without(out, n.body, n.bound); },
                   [&](const node::CallRepl& n) { out.insert(n.chan); add_without(out, n.next, n.bound); },
                   [&](const node::CellNew& n) { out.insert(n.chan); arg_names(n.init, out); },
                   [&](const node::Take& n) { out.insert(n.chan); add_without(out, n.next, n.bound); },
                   [&](const node::Put& n) { out.insert(n.chan); arg_names(n.arg, out); add_all(out, n.next); },
                   [&](const node::If& n) {
                       expr_names(n.cond, out);
                       add_all(out, n.then_branch);
                       add_all(out, n.else_branch);
                   },
                   [&](const node::Print& n) { expr_names(n.expr, out); add_all(out, n.next); },
                   [&](const node::Sleep& n) { expr_names(n.ticks, out); add_all(out, n.next); },
                   [&](const auto& n) { out.insert(n.chan); add_all(out, n.next); },
               },
               p->node);
    return out;
}

std::string check_cell_protocol(const std::vector<CellAction>& seq, bool complete) {
    enum { Idle, Held, Dropped } st = Idle;
    for (auto a : seq) {
        switch (a) {
        case CellAction::Take:
            if (st == Held) return "take-take";
            if (st == Dropped) return "use-after-drop";
            st = Held;
            break;
        case CellAction::Put:
            if (st != Held) return st == Dropped ? "use-after-drop" : "put-without-take";
            st = Idle;
            break;
        case CellAction::Drop:
            if (st == Held) return "drop-while-held";
            if (st == Dropped) return "use-after-drop";
            st = Dropped;
            break;
        }
    }
    if (complete && st != Dropped) return "cell-leak";
    return "";
}

TypePtr fill_letc_hole(const Program& prog, const std::string& x, const ProcPtr& p) {
    return hole_search(prog, x, p);
}

std::vector<Diagnostic> check_guardedness(const Program& prog) {
    std::map<std::string, std::set<std::string>> calls;
    for (auto& [name, d] : prog.procs) collect_calls(d.body, calls[name]);
    auto reach = [&](const std::string& from) {
        std::set<std::string> seen;
        std::vector<std::string> stack(calls[from].begin(), calls[from].end());
        while (!stack.empty()) {
            auto n = stack.back();
            stack.pop_back();
            if (!seen.insert(n).second) continue;
            if (calls.count(n)) stack.insert(stack.end(), calls[n].begin(), calls[n].end());
        }
        return seen;
    };
    std::map<std::string, std::set<std::string>> reachable;
    for (auto& [name, d] : prog.procs) reachable[name] = reach(name);
    std::vector<Diagnostic> out;
    for (auto& [name, d] : prog.procs) {
        if (d.rec == RecFlag::GenRec) continue;
        std::set<std::string> scc;
        for (auto& q : reachable[name])
            if (reachable.count(q) && reachable[q].count(name)) scc.insert(q);
        if (scc.empty()) continue;
        guard_walk(d.body, false, name, d.rec, scc, out);
    }
    return out;
}

std::vector<Diagnostic> check_process(const Program& prog, const Context& ctx, const ProcPtr& p,
                                      const std::set<std::string>& type_params) {
    std::vector<Diagnostic> out;
    Checker c(prog, out, type_params);
    c.run(desugar(p), ctx);
    return out;
}

CheckResult check_program(const std::vector<Decl>& decls) {
    CheckResult r;
    Program& prog = r.program;
    auto& diags = r.diagnostics;

    std::vector<const TypeDef*> defs;
    for (auto& d : decls) {
        if (auto* td = std::get_if<TypeDecl>(&d)) {
            for (auto& def : td->group) {
                if (prog.types.contains(def.name))
                    diags.push_back({"duplicate-declaration", "type '" + def.name + "' is declared twice", def.span});
                prog.types.add(def);
                defs.push_back(&def);
            }
        }
    }
    // Normalising needs heads of other definitions, which the raw bodies provide.
    TypeEnv raw = prog.types;
    for (auto* def : defs) {
        try {
            prog.types.replace_body(def->name,
                                    well_formed(def->body, raw, {def->params.begin(), def->params.end()}, def->span));
        } catch (const DiagnosticError& e) {
            diags.push_back(e.diagnostic());
        }
    }
    for (auto* def : defs) {
        std::vector<TypePtr> vars;
        for (auto& p : def->params) vars.push_back(ty::var(p));
        try {
            head(ty::app(def->name, vars), prog.types);
        } catch (const DiagnosticError& e) {
            diags.push_back({"non-contractive", "type '" + def->name + "' never reaches a constructor", def->span});
        }
    }

    std::vector<std::string> order;
    std::set<std::string> broken;
    for (auto& d : decls) {
        auto* pd = std::get_if<ProcDecl>(&d);
        if (!pd) continue;
        ProcDecl proc = std::get<ProcDecl>(desugar(d));
        if (prog.procs.count(proc.name))
            diags.push_back({"duplicate-declaration", "procedure '" + proc.name + "' is declared twice", proc.span});
        std::set<std::string> tvars(proc.type_params.begin(), proc.type_params.end());
        std::set<std::string> names;
        auto norm = [&](std::vector<Param>& ps) {
            for (auto& p : ps) {
                if (!names.insert(p.name).second)
                    diags.push_back({"duplicate-declaration", "parameter '" + p.name + "' appears twice", p.span});
                try {
                    p.type = well_formed(p.type, prog.types, tvars, p.span);
                } catch (const DiagnosticError& e) {
                    diags.push_back(e.diagnostic());
                    p.type = nullptr;
                    broken.insert(proc.name);
                }
            }
        };
        norm(proc.linear);
        norm(proc.exponential);
        if (!prog.procs.count(proc.name)) order.push_back(proc.name);
        prog.procs[proc.name] = std::move(proc);
    }

    for (auto& name : order) {
        if (broken.count(name)) continue;
        const ProcDecl& proc = prog.procs.at(name);
        std::set<std::string> tvars(proc.type_params.begin(), proc.type_params.end());
        Context ctx;
        for (auto& p : proc.linear) {
            if (value_kind(p.type, prog.types)) {
                ctx.values[p.name] = p.type;
            } else if (auto h = head(p.type, prog.types); h->kind == TypeKind::Quest) {
                ctx.replicable[p.name] = h->first;
            } else {
                ctx.linear[p.name] = p.type;
            }
        }
        for (auto& p : proc.exponential) {
            if (value_kind(p.type, prog.types))
                ctx.values[p.name] = p.type;
            else
                ctx.replicable[p.name] = p.type;
        }
        Checker c(prog, diags, tvars);
        c.run(proc.body, std::move(ctx));
    }

    auto guard = check_guardedness(prog);
    diags.insert(diags.end(), guard.begin(), guard.end());
    return r;
}

CheckResult check_source(const std::string& source, const std::string& file) {
    try {
        return check_program(parse_program(source, file));
    } catch (const DiagnosticError& e) {
        CheckResult r;
        r.diagnostics.push_back(e.diagnostic());
        return r;
    }
}

} // namespace clls
