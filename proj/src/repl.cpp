#include "clls/repl.hpp"

#include <istream>
#include <ostream>

#include "clls/checker.hpp"
#include "clls/syntax.hpp"

namespace clls {

namespace {

std::vector<std::string> names_of(const Decl& d) {
    if (auto* p = std::get_if<ProcDecl>(&d)) return {"proc " + p->name};
    std::vector<std::string> out;
    for (auto& t : std::get<TypeDecl>(d).group) out.push_back("type " + t.name);
    return out;
}

// Invocation arguments are constants.
RunArg constant(const ExprPtr& e) {
    switch (e->kind) {
    case Expr::Kind::Int: return e->int_value;
    case Expr::Kind::Str: return e->text;
    case Expr::Kind::Name: fail("expr-non-value", "'" + e->text + "' is not a constant", e->span);
    case Expr::Kind::Binary: break;
    }
    RunArg a = constant(e->lhs), b = constant(e->rhs);
    auto* x = std::get_if<std::int64_t>(&a);
    auto* y = std::get_if<std::int64_t>(&b);
    if (e->op == BinOp::Add && (!x || !y)) {
        auto text = [](const RunArg& v) {
            auto* i = std::get_if<std::int64_t>(&v);
            return i ? std::to_string(*i) : std::get<std::string>(v);
        };
        return text(a) + text(b);
    }
    if (!x || !y) fail("type-mismatch", "arithmetic on a string", e->span);
    std::int64_t r = 0;
    bool bad = false;
    switch (e->op) {
    case BinOp::Add: bad = __builtin_add_overflow(*x, *y, &r); break;
    case BinOp::Sub: bad = __builtin_sub_overflow(*x, *y, &r); break;
    case BinOp::Mul: bad = __builtin_mul_overflow(*x, *y, &r); break;
    case BinOp::Mod:
        if (*y == 0) fail("expr-non-value", "mod by zero", e->span);
        r = *y == -1 ? 0 : *x % *y;
        break;
    case BinOp::Eq: fail("expr-non-value", "comparison as an argument", e->span);
    }
    if (bad) fail("expr-non-value", "integer overflow", e->span);
    return r;
}

} // namespace

Repl::Repl(RunOptions base) : base_(std::move(base)) {}

void Repl::declare(std::vector<Decl> decls, std::string& text) {
    auto saved = decls_;
    for (auto& d : decls) {
        auto names = names_of(d);
        std::erase_if(decls_, [&](const Decl& old) {
            for (auto& n : names_of(old))
                for (auto& m : names)
                    if (n == m) return true;
            return false;
        });
        for (auto& n : names) text += n + "\n";
        decls_.push_back(std::move(d));
    }
    auto res = check_program(decls_);
    if (res.ok()) return;
    // A rejected input leaves the session as it was.
    decls_ = std::move(saved);
    text = format_all(res.diagnostics);
}

Repl::Reply Repl::feed(const std::string& input) {
    Reply reply;
    ReplInput in;
    try {
        in = parse_repl_input(input);
    } catch (const DiagnosticError& e) {
        reply.text = e.diagnostic().format() + "\n";
        return reply;
    }
    switch (in.kind) {
    case ReplInput::Kind::Empty: return reply;
    case ReplInput::Kind::Quit: reply.quit = true; return reply;
    case ReplInput::Kind::Declarations: declare(std::move(in.decls), reply.text); return reply;
    case ReplInput::Kind::Invocation: break;
    }
    auto res = check_program(decls_);
    if (!res.ok()) {
        reply.text = format_all(res.diagnostics);
        return reply;
    }
    if (!res.program.find(in.call.name)) {
        reply.text = Diagnostic{"unbound-name", "no procedure named '" + in.call.name + "'", Span{"<repl>", 1, 1}}.format() + "\n";
        return reply;
    }
    RunOptions opts = base_;
    opts.entry = in.call.name;
    opts.args.clear();
    if (!in.call.linear.empty()) {
        reply.text = "arity: an invocation takes no linear arguments\n";
        return reply;
    }
    try {
        for (auto& e : in.call.exponential) opts.args.push_back(constant(e));
    } catch (const DiagnosticError& e) {
        reply.text = e.diagnostic().format() + "\n";
        return reply;
    }
    opts.out = live_;
    auto r = run_program(res.program, opts);
    if (!live_) reply.text = r.output;
    if (!r.ok()) reply.text += std::string(to_string(r.status)) + ": " + r.message + "\n";
    return reply;
}

void Repl::run(std::istream& in, std::ostream& out) {
    live_ = &out;
    std::string buf, line;
    out << "> " << std::flush;
    while (std::getline(in, line)) {
        buf += line;
        buf += "\n";
        auto last = buf.find_last_not_of(" \t\r\n");
        bool complete = last == std::string::npos || buf.compare(0, 5, ":quit") == 0 ||
                        (last >= 1 && buf[last] == ';' && buf[last - 1] == ';');
        if (last != std::string::npos && buf[buf.find_first_not_of(" \t\r\n")] == ':') complete = true;
        if (!complete) continue;
        auto reply = feed(buf);
        buf.clear();
        out << reply.text;
        if (reply.quit) break;
        out << "> " << std::flush;
    }
    live_ = nullptr;
}

} // namespace clls
