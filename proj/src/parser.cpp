#include <set>

#include "clls/syntax.hpp"

namespace clls {

namespace {

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    std::vector<Decl> program() {
        std::vector<Decl> out;
        while (!at_end()) {
            if (accept(";;")) continue;
            out.push_back(decl());
        }
        return out;
    }

    bool at_end() const { return peek().kind == TokenKind::End; }
    const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }

    Decl decl() {
        if (is_kw("proc")) return proc_decl();
        if (is_kw("type")) return type_decl();
        error("expected 'proc' or 'type'");
    }

    ReplInvocation invocation() {
        ReplInvocation inv;
        inv.name = ident("procedure name");
        if (accept("<")) inv.type_args = type_args();
        call_args(inv.linear, inv.exponential);
        accept(";;");
        if (!at_end()) error("unexpected input after invocation");
        return inv;
    }

private:
    std::vector<Token> toks_;
    size_t pos_ = 0;
    std::set<std::string> tvars_;

    [[noreturn]] void error(const std::string& msg) const {
        const Token& t = peek();
        std::string found = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
        fail("syntax", msg + ", found " + found, t.span);
    }

    bool is_sym(const char* s, size_t k = 0) const {
        return peek(k).kind == TokenKind::Symbol && peek(k).text == s;
    }
    bool is_kw(const char* s, size_t k = 0) const {
        return peek(k).kind == TokenKind::Keyword && peek(k).text == s;
    }
    bool accept(const char* s) {
        if (is_sym(s) || is_kw(s)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(const char* s) {
        if (!accept(s)) error(std::string("expected '") + s + "'");
    }
    const Token& next() { return toks_[pos_++]; }
    std::string ident(const char* what) {
        if (peek().kind != TokenKind::Ident) error(std::string("expected ") + what);
        return next().text;
    }

    RecFlag rec_flag() {
        if (accept("rec")) return RecFlag::Rec;
        if (accept("gen_rec")) return RecFlag::GenRec;
        if (accept("corec")) return RecFlag::Corec;
        return RecFlag::None;
    }

    // ---- declarations ----

    ProcDecl proc_decl() {
        ProcDecl d;
        d.span = peek().span;
        expect("proc");
        d.rec = rec_flag();
        d.name = ident("procedure name");
        if (accept("<")) {
            do d.type_params.push_back(ident("type parameter"));
            while (accept(","));
            expect(">");
        }
        tvars_ = {d.type_params.begin(), d.type_params.end()};
        expect("(");
        if (!is_sym(";") && !is_sym(")")) d.linear = params();
        if (accept(";")) {
            if (!is_sym(")")) d.exponential = params();
        }
        expect(")");
        expect("{");
        d.body = process();
        expect("}");
        accept(";;");
        tvars_.clear();
        return d;
    }

    std::vector<Param> params() {
        std::vector<Param> out;
        do {
            Param p;
            p.span = peek().span;
            p.name = ident("parameter name");
            expect(":");
            p.type = type();
            out.push_back(std::move(p));
        } while (accept(","));
        return out;
    }

    TypeDecl type_decl() {
        TypeDecl d;
        d.span = peek().span;
        expect("type");
        d.rec = rec_flag();
        if (d.rec == RecFlag::GenRec) error("gen_rec is not allowed on types");
        do {
            TypeDef def;
            def.span = peek().span;
            def.name = ident("type name");
            def.recursive = d.rec != RecFlag::None;
            if (accept("(")) {
                do def.params.push_back(ident("type parameter"));
                while (accept(","));
                expect(")");
            }
            tvars_ = {def.params.begin(), def.params.end()};
            expect("{");
            def.body = type();
            expect("}");
            tvars_.clear();
            d.group.push_back(std::move(def));
        } while (accept("and"));
        accept(";;");
        return d;
    }

    // ---- types ----

    std::vector<TypePtr> type_args() {
        std::vector<TypePtr> out;
        do out.push_back(type());
        while (accept(","));
        expect(">");
        return out;
    }

    std::vector<TypeBranch> type_branches() {
        accept("of");
        expect("{");
        std::vector<TypeBranch> out;
        accept("|");
        while (!is_sym("}")) {
            if (peek().kind != TokenKind::Label) error("expected label");
            std::string label = next().text;
            expect(":");
            out.push_back({label, type()});
            if (!accept("|")) break;
        }
        expect("}");
        return out;
    }

    TypePtr type() {
        const Token& t = peek();
        if (t.kind == TokenKind::Keyword) {
            const std::string kw = t.text;
            ++pos_;
            if (kw == "close") return ty::close();
            if (kw == "wait") return ty::wait();
            if (kw == "lint" || kw == "Int") return ty::prim(PrimKind::Int);
            if (kw == "lstring") return ty::prim(PrimKind::String);
            if (kw == "send" || kw == "pair" || kw == "recv") {
                TypePtr payload = type();
                expect(";");
                TypePtr cont = type();
                return kw == "recv" ? ty::recv(payload, cont) : ty::send(payload, cont);
            }
            if (kw == "offer") return ty::offer(type_branches());
            if (kw == "choice" || kw == "case") return ty::choice(type_branches());
            if (kw == "affine") return ty::affine(type());
            if (kw == "coaffine") return ty::coaffine(type());
            if (kw == "state") return ty::state(type());
            if (kw == "statel") return ty::state(type(), true);
            if (kw == "usage") return ty::usage(type());
            if (kw == "usagel") return ty::usage(type(), true);
            if (kw == "rec" || kw == "corec") {
                std::string x = ident("type variable");
                expect(".");
                bool fresh = tvars_.insert(x).second;
                TypePtr body = type();
                if (fresh) tvars_.erase(x);
                return kw == "rec" ? ty::rec(x, body) : ty::corec(x, body);
            }
            --pos_;
            error("expected a type");
        }
        if (accept("!")) return ty::bang(type());
        if (accept("?")) return ty::quest(type());
        if (accept("~")) return dual(type());
        if (accept("(")) {
            TypePtr inner = type();
            expect(")");
            return inner;
        }
        if (t.kind == TokenKind::Ident) {
            std::string name = next().text;
            if (tvars_.count(name)) return ty::var(name);
            std::vector<TypePtr> args;
            if (accept("(")) {
                do args.push_back(type());
                while (accept(","));
                expect(")");
            }
            return ty::app(name, std::move(args));
        }
        error("expected a type");
    }

    // ---- expressions ----

    ExprPtr expr() {
        ExprPtr lhs = additive();
        if (is_sym("==")) {
            Span sp = peek().span;
            ++pos_;
            return binary(BinOp::Eq, lhs, additive(), sp);
        }
        return lhs;
    }

    static ExprPtr binary(BinOp op, ExprPtr l, ExprPtr r, Span sp) {
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::Binary;
        e->op = op;
        e->lhs = std::move(l);
        e->rhs = std::move(r);
        e->span = std::move(sp);
        return e;
    }

    ExprPtr additive() {
        ExprPtr lhs = multiplicative();
        while (is_sym("+") || is_sym("-")) {
            Span sp = peek().span;
            BinOp op = next().text == "+" ? BinOp::Add : BinOp::Sub;
            lhs = binary(op, lhs, multiplicative(), sp);
        }
        return lhs;
    }

    ExprPtr multiplicative() {
        ExprPtr lhs = atom();
        while (is_sym("*") || is_kw("mod")) {
            Span sp = peek().span;
            BinOp op = next().text == "*" ? BinOp::Mul : BinOp::Mod;
            lhs = binary(op, lhs, atom(), sp);
        }
        return lhs;
    }

    ExprPtr atom() {
        const Token& t = peek();
        auto e = std::make_shared<Expr>();
        e->span = t.span;
        switch (t.kind) {
        case TokenKind::Int:
            e->kind = Expr::Kind::Int;
            e->int_value = t.int_value;
            ++pos_;
            return e;
        case TokenKind::Str:
            e->kind = Expr::Kind::Str;
            e->text = t.text;
            ++pos_;
            return e;
        case TokenKind::Ident:
            e->kind = Expr::Kind::Name;
            e->text = t.text;
            ++pos_;
            return e;
        default:
            break;
        }
        if (accept("(")) {
            ExprPtr inner = expr();
            expect(")");
            return inner;
        }
        if (is_sym("-")) {
            Span sp = t.span;
            ++pos_;
            auto zero = std::make_shared<Expr>();
            zero->kind = Expr::Kind::Int;
            zero->span = sp;
            return binary(BinOp::Sub, zero, atom(), sp);
        }
        error("expected an expression");
    }

    // ---- processes ----

    bool closes_process() const {
        return is_sym("}") || is_sym("|") || is_sym("||") || is_sym(")") || is_sym(";;") || at_end();
    }

    // Optional `; P` after a prefix action.
    ProcPtr continuation() {
        if (accept(";")) {
            if (closes_process()) return make_process(node::Inert{}, peek().span);
            return process();
        }
        return make_process(node::Inert{}, peek().span);
    }

    // Terminal forms may carry a harmless trailing `;`.
    ProcPtr terminal(ProcPtr p) {
        if (is_sym(";") && (is_sym("}", 1) || is_sym("|", 1) || is_sym("||", 1) || is_sym(")", 1)))
            ++pos_;
        return p;
    }

    std::string paren_name(const char* what) {
        expect("(");
        std::string n = ident(what);
        expect(")");
        return n;
    }

    bool closure_ahead() const { return peek().kind == TokenKind::Ident && is_sym(".", 1); }

    Arg closure_arg() {
        Arg a;
        a.kind = Arg::Kind::Closure;
        a.bound = ident("closure parameter");
        expect(".");
        a.body = process();
        return a;
    }

    Arg value_arg() {
        Arg a;
        if (accept("{")) {
            if (!closure_ahead()) error("expected 'x. P' closure");
            a = closure_arg();
            expect("}");
            return a;
        }
        if (closure_ahead()) return closure_arg();
        a.expr = expr();
        if (a.expr->kind == Expr::Kind::Name) {
            a.kind = Arg::Kind::Name;
            a.name = a.expr->text;
        }
        return a;
    }

    Arg paren_arg() {
        if (accept("{")) {
            if (!closure_ahead()) error("expected 'x. P' closure");
            Arg a = closure_arg();
            expect("}");
            return a;
        }
        expect("(");
        Arg a = value_arg();
        expect(")");
        return a;
    }

    void call_args(std::vector<std::string>& linear, std::vector<ExprPtr>& exponential) {
        expect("(");
        if (!is_sym(";") && !is_sym(")")) {
            do linear.push_back(ident("channel name"));
            while (accept(","));
        }
        if (accept(";")) {
            if (!is_sym(")")) {
                do exponential.push_back(expr());
                while (accept(","));
            }
        }
        expect(")");
    }

    std::vector<node::CaseBranch> case_branches() {
        expect("{");
        std::vector<node::CaseBranch> out;
        accept("|");
        while (!is_sym("}")) {
            if (peek().kind != TokenKind::Label) error("expected '#Label:' branch");
            node::CaseBranch b;
            b.span = peek().span;
            b.label = next().text;
            expect(":");
            b.body = process();
            out.push_back(std::move(b));
            if (!accept("|")) break;
        }
        expect("}");
        return out;
    }

    ProcPtr process() {
        const Token& t = peek();
        Span sp = t.span;
        if (accept("[]")) return make_process(node::Inert{}, sp);
        if (is_sym("(") && is_sym(")", 1)) {
            pos_ += 2;
            return make_process(node::Inert{}, sp);
        }
        if (accept("{")) {
            ProcPtr inner = process();
            expect("}");
            return terminal(inner);
        }
        if (t.kind == TokenKind::Label) {
            std::string label = next().text;
            std::string c = ident("channel name");
            return make_process(node::Select{label, c, continuation()}, sp);
        }
        if (accept("!")) {
            std::string c = ident("channel name");
            std::string x = paren_name("bound name");
            expect(";");
            return make_process(node::Serve{c, x, process()}, sp);
        }
        if (t.kind == TokenKind::Ident) {
            if (is_sym("<-", 1)) {
                std::string c = next().text;
                ++pos_;
                Arg a = value_arg();
                return make_process(node::Send{c, std::move(a), continuation()}, sp);
            }
            if (is_sym("->", 1)) {
                std::string c = next().text;
                ++pos_;
                std::string x = ident("bound name");
                return make_process(node::Recv{c, x, continuation()}, sp);
            }
            node::Call call;
            call.name = next().text;
            if (accept("<")) call.type_args = type_args();
            call_args(call.linear, call.exponential);
            ProcPtr c = make_process(std::move(call), sp);
            // `f(x); Q` runs the call alongside Q.
            if (is_sym(";") && !(is_sym("}", 1) || is_sym("|", 1) || is_sym("||", 1) || is_sym(")", 1))) {
                ++pos_;
                return make_process(node::Par{c, process()}, sp);
            }
            return terminal(c);
        }
        if (t.kind != TokenKind::Keyword) error("expected a process");

        const std::string kw = t.text;
        ++pos_;
        if (kw == "close" || kw == "wait" || kw == "affine" || kw == "use" || kw == "discard" ||
            kw == "drop" || kw == "release") {
            std::string c = ident("channel name");
            ProcPtr k = continuation();
            if (kw == "close") return make_process(node::Close{c, k}, sp);
            if (kw == "wait") return make_process(node::Wait{c, k}, sp);
            if (kw == "affine") return make_process(node::AffineIntro{c, k}, sp);
            if (kw == "use") return make_process(node::Use{c, k}, sp);
            if (kw == "discard") return make_process(node::Discard{c, k}, sp);
            if (kw == "drop") return make_process(node::Drop{c, k}, sp);
            return make_process(node::Release{c, k}, sp);
        }
        if (kw == "send") {
            std::string c = ident("channel name");
            Arg a = paren_arg();
            return make_process(node::Send{c, std::move(a), continuation()}, sp);
        }
        if (kw == "recv" || kw == "take" || kw == "call") {
            std::string c = ident("channel name");
            std::string x = paren_name("bound name");
            ProcPtr k = continuation();
            if (kw == "recv") return make_process(node::Recv{c, x, k}, sp);
            if (kw == "take") return make_process(node::Take{c, x, k}, sp);
            return make_process(node::CallRepl{c, x, k}, sp);
        }
        if (kw == "put") {
            std::string c = ident("cell name");
            Arg a = paren_arg();
            return make_process(node::Put{c, std::move(a), continuation()}, sp);
        }
        if (kw == "cell") {
            std::string c = ident("cell name");
            Arg a = paren_arg();
            return terminal(make_process(node::CellNew{c, std::move(a)}, sp));
        }
        if (kw == "case") {
            std::string c = ident("channel name");
            expect("of");
            return terminal(make_process(node::Case{c, case_branches()}, sp));
        }
        if (kw == "fwd") {
            std::string a = ident("channel name");
            std::string b = ident("channel name");
            return terminal(make_process(node::Forward{a, b}, sp));
        }
        if (kw == "cut") {
            expect("{");
            ProcPtr left = process();
            expect("|");
            std::string x = ident("channel name");
            expect(":");
            TypePtr a = type();
            expect("|");
            ProcPtr right = process();
            expect("}");
            // The annotation describes the right-hand side.
            return terminal(make_process(node::Cut{x, dual(a), left, right}, sp));
        }
        if (kw == "letc") {
            std::string x = ident("channel name");
            expect(":");
            TypePtr a = is_sym("{") ? nullptr : type();
            expect("{");
            ProcPtr left = process();
            expect("}");
            expect(";");
            ProcPtr right = process();
            return make_process(node::LetC{x, a, left, right}, sp);
        }
        if (kw == "par" || kw == "share") {
            std::string c = kw == "share" ? ident("cell name") : std::string();
            expect("{");
            ProcPtr left = process();
            expect("||");
            ProcPtr right = process();
            expect("}");
            if (kw == "par") return terminal(make_process(node::Par{left, right}, sp));
            return terminal(make_process(node::Share{c, left, right}, sp));
        }
        if (kw == "if") {
            ExprPtr cond = expr();
            accept("then");
            expect("{");
            ProcPtr a = process();
            expect("}");
            expect("else");
            ProcPtr b;
            if (is_kw("if")) {
                b = process();
            } else {
                expect("{");
                b = process();
                expect("}");
            }
            return terminal(make_process(node::If{cond, a, b}, sp));
        }
        if (kw == "print" || kw == "println") {
            expect("(");
            ExprPtr e = expr();
            expect(")");
            return make_process(node::Print{e, kw == "println", continuation()}, sp);
        }
        if (kw == "sleep") {
            ExprPtr e = expr();
            return make_process(node::Sleep{e, continuation()}, sp);
        }
        --pos_;
        error("expected a process");
    }
};

} // namespace

std::vector<Decl> parse_program(const std::string& source, const std::string& file) {
    Parser p(tokenize(source, file));
    return p.program();
}

ReplInput parse_repl_input(const std::string& text) {
    auto toks = tokenize(text, "<repl>");
    ReplInput in;
    if (toks.size() == 1) return in;
    if (toks[0].kind == TokenKind::Symbol && toks[0].text == ":") {
        if (toks.size() >= 2 && toks[1].text == "quit") {
            in.kind = ReplInput::Kind::Quit;
            return in;
        }
        fail("syntax", "unknown command ':" + toks[1].text + "'", toks[0].span);
    }
    Parser p(std::move(toks));
    if (p.peek().kind == TokenKind::Keyword && (p.peek().text == "proc" || p.peek().text == "type")) {
        in.kind = ReplInput::Kind::Declarations;
        in.decls = p.program();
        return in;
    }
    in.kind = ReplInput::Kind::Invocation;
    in.call = p.invocation();
    return in;
}

} // namespace clls
