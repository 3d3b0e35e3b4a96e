#include <sstream>

#include "clls/syntax.hpp"

namespace clls {

namespace {

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

Arg desugar_arg(const Arg& a) {
    Arg r = a;
    if (r.body) r.body = desugar(r.body);
    return r;
}

} // namespace

ProcPtr desugar(const ProcPtr& p) {
    if (!p) return p;
    auto d = [](const ProcPtr& q) { return desugar(q); };
    ProcessNode out = std::visit(
        overloaded{
            [&](const node::LetC& n) -> ProcessNode { return node::Cut{n.chan, n.type, d(n.left), d(n.right)}; },
            [&](const node::Release& n) -> ProcessNode { return node::Drop{n.chan, d(n.next)}; },
            [&](const node::Cut& n) -> ProcessNode { return node::Cut{n.chan, n.type, d(n.left), d(n.right)}; },
            [&](const node::Par& n) -> ProcessNode { return node::Par{d(n.left), d(n.right)}; },
            [&](const node::Share& n) -> ProcessNode { return node::Share{n.chan, d(n.left), d(n.right)}; },
            [&](const node::Send& n) -> ProcessNode { return node::Send{n.chan, desugar_arg(n.arg), d(n.next)}; },
            [&](const node::Put& n) -> ProcessNode { return node::Put{n.chan, desugar_arg(n.arg), d(n.next)}; },
            [&](const node::CellNew& n) -> ProcessNode { return node::CellNew{n.chan, desugar_arg(n.init)}; },
            [&](const node::Recv& n) -> ProcessNode { return node::Recv{n.chan, n.bound, d(n.next)}; },
            [&](const node::Select& n) -> ProcessNode { return node::Select{n.label, n.chan, d(n.next)}; },
            [&](const node::Case& n) -> ProcessNode {
                node::Case c{n.chan, {}};
                for (auto& b : n.branches) c.branches.push_back({b.label, d(b.body), b.span});
                return c;
            },
            [&](const node::Close& n) -> ProcessNode { return node::Close{n.chan, d(n.next)}; },
            [&](const node::Wait& n) -> ProcessNode { return node::Wait{n.chan, d(n.next)}; },
            [&](const node::Serve& n) -> ProcessNode { return node::Serve{n.chan, n.bound, d(n.body)}; },
            [&](const node::CallRepl& n) -> ProcessNode { return node::CallRepl{n.chan, n.bound, d(n.next)}; },
            [&](const node::AffineIntro& n) -> ProcessNode { return node::AffineIntro{n.chan, d(n.next)}; },
            [&](const node::Use& n) -> ProcessNode { return node::Use{n.chan, d(n.next)}; },
            [&](const node::Discard& n) -> ProcessNode { return node::Discard{n.chan, d(n.next)}; },
            [&](const node::Drop& n) -> ProcessNode { return node::Drop{n.chan, d(n.next)}; },
            [&](const node::Take& n) -> ProcessNode { return node::Take{n.chan, n.bound, d(n.next)}; },
            [&](const node::If& n) -> ProcessNode { return node::If{n.cond, d(n.then_branch), d(n.else_branch)}; },
            [&](const node::Print& n) -> ProcessNode { return node::Print{n.expr, n.newline, d(n.next)}; },
            [&](const node::Sleep& n) -> ProcessNode { return node::Sleep{n.ticks, d(n.next)}; },
            [&](const auto& n) -> ProcessNode { return n; },
        },
        p->node);
    return make_process(std::move(out), p->span);
}

Decl desugar(const Decl& decl) {
    if (auto* pd = std::get_if<ProcDecl>(&decl)) {
        ProcDecl r = *pd;
        r.body = desugar(pd->body);
        return r;
    }
    return decl;
}

std::vector<Decl> desugar(const std::vector<Decl>& decls) {
    std::vector<Decl> out;
    for (auto& d : decls) out.push_back(desugar(d));
    return out;
}

bool is_core(const ProcPtr& p) {
    if (!p) return true;
    auto arg_core = [](const Arg& a) { return is_core(a.body); };
    return std::visit(
        overloaded{
            [](const node::LetC&) { return false; },
            [](const node::Release&) { return false; },
            [](const node::Cut& n) { return is_core(n.left) && is_core(n.right); },
            [](const node::Par& n) { return is_core(n.left) && is_core(n.right); },
            [](const node::Share& n) { return is_core(n.left) && is_core(n.right); },
            [&](const node::Send& n) { return arg_core(n.arg) && is_core(n.next); },
            [&](const node::Put& n) { return arg_core(n.arg) && is_core(n.next); },
            [&](const node::CellNew& n) { return arg_core(n.init); },
            [](const node::Case& n) {
                for (auto& b : n.branches)
                    if (!is_core(b.body)) return false;
                return true;
            },
            [](const node::Serve& n) { return is_core(n.body); },
            [](const node::If& n) { return is_core(n.then_branch) && is_core(n.else_branch); },
            [](const node::Inert&) { return true; },
            [](const node::Forward&) { return true; },
            [](const node::Call&) { return true; },
            [](const auto& n) { return is_core(n.next); },
        },
        p->node);
}

namespace {

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

class Printer {
public:
    std::ostringstream os;
    int indent = 0;

    void nl() { os << "\n" << std::string(static_cast<size_t>(indent) * 2, ' '); }

    void arg(const Arg& a) {
        switch (a.kind) {
        case Arg::Kind::Name: os << a.name; break;
        case Arg::Kind::Value: os << pretty(a.expr); break;
        case Arg::Kind::Closure:
            os << a.bound << ". ";
            proc(a.body);
            break;
        }
    }

    void next(const ProcPtr& k) {
        if (std::holds_alternative<node::Inert>(k->node)) return;
        os << ";";
        nl();
        proc(k);
    }

    void block(const ProcPtr& p) {
        os << "{";
        ++indent;
        nl();
        proc(p);
        --indent;
        nl();
        os << "}";
    }

    void letc(const std::string& x, const TypePtr& t, const ProcPtr& l, const ProcPtr& r) {
        os << "letc " << x << ":" << (t ? " " + to_string(t) + " " : " ");
        block(l);
        os << ";";
        nl();
        proc(r);
    }

    void proc(const ProcPtr& p) {
        std::visit(
            overloaded{
                [&](const node::Inert&) { os << "()"; },
                [&](const node::Forward& n) { os << "fwd " << n.a << " " << n.b; },
                [&](const node::Par& n) {
                    os << "par {";
                    ++indent;
                    nl();
                    proc(n.left);
                    --indent;
                    nl();
                    os << "||";
                    ++indent;
                    nl();
                    proc(n.right);
                    --indent;
                    nl();
                    os << "}";
                },
                [&](const node::Cut& n) { letc(n.chan, n.type, n.left, n.right); },
                [&](const node::LetC& n) { letc(n.chan, n.type, n.left, n.right); },
                [&](const node::Share& n) {
                    os << "share " << n.chan << " {";
                    ++indent;
                    nl();
                    proc(n.left);
                    --indent;
                    nl();
                    os << "||";
                    ++indent;
                    nl();
                    proc(n.right);
                    --indent;
                    nl();
                    os << "}";
                },
                [&](const node::Call& n) {
                    os << n.name;
                    if (!n.type_args.empty()) {
                        os << "<";
                        for (size_t i = 0; i < n.type_args.size(); ++i)
                            os << (i ? ", " : "") << to_string(n.type_args[i]);
                        os << ">";
                    }
                    os << "(";
                    for (size_t i = 0; i < n.linear.size(); ++i) os << (i ? ", " : "") << n.linear[i];
                    if (!n.exponential.empty()) {
                        os << "; ";
                        for (size_t i = 0; i < n.exponential.size(); ++i)
                            os << (i ? ", " : "") << pretty(n.exponential[i]);
                    }
                    os << ")";
                },
                [&](const node::Send& n) {
                    os << "send " << n.chan << "(";
                    arg(n.arg);
                    os << ")";
                    next(n.next);
                },
                [&](const node::Recv& n) {
                    os << "recv " << n.chan << "(" << n.bound << ")";
                    next(n.next);
                },
                [&](const node::Select& n) {
                    os << "#" << n.label << " " << n.chan;
                    next(n.next);
                },
                [&](const node::Case& n) {
                    os << "case " << n.chan << " of {";
                    for (auto& b : n.branches) {
                        nl();
                        os << "|#" << b.label << ":";
                        ++indent;
                        nl();
                        proc(b.body);
                        --indent;
                    }
                    nl();
                    os << "}";
                },
                [&](const node::Close& n) { os << "close " << n.chan; next(n.next); },
                [&](const node::Wait& n) { os << "wait " << n.chan; next(n.next); },
                [&](const node::Serve& n) {
                    os << "!" << n.chan << "(" << n.bound << ")";
                    os << ";";
                    nl();
                    proc(n.body);
                },
                [&](const node::CallRepl& n) {
                    os << "call " << n.chan << "(" << n.bound << ")";
                    next(n.next);
                },
                [&](const node::AffineIntro& n) { os << "affine " << n.chan; next(n.next); },
                [&](const node::Use& n) { os << "use " << n.chan; next(n.next); },
                [&](const node::Discard& n) { os << "discard " << n.chan; next(n.next); },
                [&](const node::Drop& n) { os << "drop " << n.chan; next(n.next); },
                [&](const node::Release& n) { os << "release " << n.chan; next(n.next); },
                [&](const node::CellNew& n) {
                    os << "cell " << n.chan << "(";
                    arg(n.init);
                    os << ")";
                },
                [&](const node::Take& n) {
                    os << "take " << n.chan << "(" << n.bound << ")";
                    next(n.next);
                },
                [&](const node::Put& n) {
                    os << "put " << n.chan << "(";
                    arg(n.arg);
                    os << ")";
                    next(n.next);
                },
                [&](const node::If& n) {
                    os << "if " << pretty(n.cond) << " then ";
                    block(n.then_branch);
                    os << " else ";
                    block(n.else_branch);
                },
                [&](const node::Print& n) {
                    os << (n.newline ? "println(" : "print(") << pretty(n.expr) << ")";
                    next(n.next);
                },
                [&](const node::Sleep& n) {
                    os << "sleep " << pretty(n.ticks);
                    next(n.next);
                },
            },
            p->node);
    }
};

const char* rec_word(RecFlag r) {
    switch (r) {
    case RecFlag::Rec: return "rec ";
    case RecFlag::GenRec: return "gen_rec ";
    case RecFlag::Corec: return "corec ";
    default: return "";
    }
}

} // namespace

std::string pretty(const ExprPtr& e) {
    switch (e->kind) {
    case Expr::Kind::Int: return std::to_string(e->int_value);
    case Expr::Kind::Str: return quote(e->text);
    case Expr::Kind::Name: return e->text;
    case Expr::Kind::Binary: {
        const char* op = "+";
        switch (e->op) {
        case BinOp::Add: op = "+"; break;
        case BinOp::Sub: op = "-"; break;
        case BinOp::Mul: op = "*"; break;
        case BinOp::Mod: op = "mod"; break;
        case BinOp::Eq: op = "=="; break;
        }
        return "(" + pretty(e->lhs) + " " + op + " " + pretty(e->rhs) + ")";
    }
    }
    return "";
}

std::string pretty(const ProcPtr& p) {
    Printer pr;
    pr.proc(p);
    return pr.os.str();
}

std::string pretty(const Decl& d) {
    std::ostringstream os;
    if (auto* pd = std::get_if<ProcDecl>(&d)) {
        os << "proc " << rec_word(pd->rec) << pd->name;
        if (!pd->type_params.empty()) {
            os << "<";
            for (size_t i = 0; i < pd->type_params.size(); ++i) os << (i ? ", " : "") << pd->type_params[i];
            os << ">";
        }
        os << "(";
        for (size_t i = 0; i < pd->linear.size(); ++i)
            os << (i ? ", " : "") << pd->linear[i].name << ": " << to_string(pd->linear[i].type);
        if (!pd->exponential.empty()) {
            os << "; ";
            for (size_t i = 0; i < pd->exponential.size(); ++i)
                os << (i ? ", " : "") << pd->exponential[i].name << ": " << to_string(pd->exponential[i].type);
        }
        os << ") {\n  ";
        Printer pr;
        pr.indent = 1;
        pr.proc(pd->body);
        os << pr.os.str() << "\n};;\n";
        return os.str();
    }
    const auto& td = std::get<TypeDecl>(d);
    os << "type " << rec_word(td.rec);
    for (size_t i = 0; i < td.group.size(); ++i) {
        const auto& def = td.group[i];
        if (i) os << "\nand ";
        os << def.name;
        if (!def.params.empty()) {
            os << "(";
            for (size_t j = 0; j < def.params.size(); ++j) os << (j ? ", " : "") << def.params[j];
            os << ")";
        }
        os << " { " << to_string(def.body) << " }";
    }
    os << ";;\n";
    return os.str();
}

std::string pretty(const std::vector<Decl>& decls) {
    std::string out;
    for (auto& d : decls) out += pretty(d);
    return out;
}

} // namespace clls
