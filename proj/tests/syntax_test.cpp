#include <doctest.h>

#include <filesystem>

#include "clls/syntax.hpp"
#include "support.hpp"

using namespace clls;
namespace ts = testsupport;

namespace {

std::vector<std::string> lexemes(const std::string& src) {
    std::vector<std::string> out;
    for (auto& t : tokenize(src)) {
        switch (t.kind) {
        case TokenKind::End: break;
        case TokenKind::Label: out.push_back("#" + t.text); break;
        case TokenKind::Str: out.push_back("str:" + t.text); break;
        case TokenKind::Int: out.push_back("int:" + std::to_string(t.int_value)); break;
        default: out.push_back(t.text);
        }
    }
    return out;
}

const ProcDecl& proc(const std::vector<Decl>& ds, const std::string& name) {
    for (auto& d : ds)
        if (auto* p = std::get_if<ProcDecl>(&d); p && p->name == name) return *p;
    throw std::runtime_error("no proc " + name);
}

std::vector<std::string> corpus_files() {
    std::vector<std::string> out;
    for (auto& e : std::filesystem::directory_iterator(ts::corpus_dir()))
        if (e.path().extension() == ".clls") out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

TEST_SUITE("syntax") {

TEST_CASE("tokenize the hello world body") {
    std::vector<std::string> want{"println", "(", "str:hello world ", "+", "(", "int:2", "*", "int:3",
                                  ")",       ")", ";",                "[]"};
    CHECK(lexemes(R"(println("hello world "+(2*3));[])") == want);
}

TEST_CASE("tokenize empty input and labels") {
    CHECK(lexemes("").empty());
    CHECK(lexemes("-- only a comment\n/* and a block */") .empty());
    std::vector<std::string> want{"#Dup", "c", ";", "c", "<-", "int:2"};
    CHECK(lexemes("#Dup c; c <- 2") == want);
}

TEST_CASE("token kinds") {
    auto toks = tokenize("proc p ;; #L x1 \"a\\\"b\" 12");
    REQUIRE(toks.size() == 8);
    CHECK(toks[0].kind == TokenKind::Keyword);
    CHECK(toks[1].kind == TokenKind::Ident);
    CHECK(toks[2].text == ";;");
    CHECK(toks[3].kind == TokenKind::Label);
    CHECK(toks[3].text == "L");
    CHECK(toks[5].kind == TokenKind::Str);
    CHECK(toks[5].text == "a\"b");
    CHECK(toks[6].int_value == 12);
    CHECK(toks[7].kind == TokenKind::End);
    CHECK(toks[1].span.line == 1);
    CHECK(toks[1].span.col == 6);
}

TEST_CASE("lexical errors carry a span") {
    auto lex_rule = [](const std::string& src) {
        try {
            tokenize(src, "f.clls");
        } catch (const DiagnosticError& e) {
            return e.diagnostic().rule + "@" + std::to_string(e.diagnostic().span.line);
        }
        return std::string("none");
    };
    CHECK(lex_rule("\n\"open") == "lexical@2");
    CHECK(lex_rule("/* never closed") == "lexical@1");
    CHECK(lex_rule("99999999999999999999") == "lexical@1");
    CHECK(lex_rule("x $ y") == "lexical@1");
}

TEST_CASE("main0 is a cut of menu and alice0") {
    auto ds = parse_program(ts::read_file(ts::corpus_dir() + "/arith_server.clls"));
    auto body = desugar(proc(ds, "main0").body);
    auto* cut = std::get_if<node::Cut>(&body->node);
    REQUIRE(cut);
    CHECK(cut->chan == "s");
    // Stored from the left side's point of view: menu holds s : tmenu.
    CHECK(to_string(cut->type) == "tmenu");
    CHECK(std::get<node::Call>(cut->left->node).name == "menu");
    CHECK(std::get<node::Call>(cut->right->node).name == "alice0");
}

TEST_CASE("alice0 desugars to select, send, recv, print, close") {
    auto ds = parse_program(ts::read_file(ts::corpus_dir() + "/arith_server.clls"));
    auto p = desugar(proc(ds, "alice0").body);
    auto& sel = std::get<node::Select>(p->node);
    CHECK(sel.label == "Dup");
    auto& snd = std::get<node::Send>(sel.next->node);
    CHECK(snd.arg.kind == Arg::Kind::Value);
    CHECK(snd.arg.expr->int_value == 2);
    auto& rcv = std::get<node::Recv>(snd.next->node);
    CHECK(rcv.bound == "m");
    auto& pr = std::get<node::Print>(rcv.next->node);
    CHECK(pr.newline);
    CHECK(std::get<node::Close>(pr.next->node).chan == "c");
}

TEST_CASE("minimal proc and mutually recursive group") {
    auto ds = parse_program("proc p(x:close){ close x };;");
    REQUIRE(ds.size() == 1);
    auto& p = std::get<ProcDecl>(ds[0]);
    CHECK(p.name == "p");
    CHECK(std::holds_alternative<node::Close>(p.body->node));

    auto gs = parse_program("type rec LList(A){ state Node(A) } and Node(A){ choice of { |#Nil: close } };;");
    REQUIRE(gs.size() == 1);
    auto& g = std::get<TypeDecl>(gs[0]);
    REQUIRE(g.group.size() == 2);
    CHECK(g.group[0].name == "LList");
    CHECK(g.group[1].name == "Node");
}

TEST_CASE("exponential parameters follow the semicolon") {
    auto ds = parse_program("proc f(a: close, b: wait; n: ~lint, s: ~lstring) { () };;");
    auto& p = std::get<ProcDecl>(ds[0]);
    CHECK(p.linear.size() == 2);
    CHECK(p.exponential.size() == 2);
    CHECK(p.exponential[1].name == "s");
}

TEST_CASE("expression precedence") {
    auto ds = parse_program("proc f(;n:~lint) { println(1 + 2 * n mod 3 == 7 - n) };;");
    auto& pr = std::get<node::Print>(std::get<ProcDecl>(ds[0]).body->node);
    CHECK(pretty(pr.expr) == "((1 + ((2 * n) mod 3)) == (7 - n))");
}

TEST_CASE("syntax errors name the rule and position") {
    try {
        parse_program("proc f(x:close) { close x ;;", "f.clls");
        FAIL("accepted");
    } catch (const DiagnosticError& e) {
        CHECK(e.diagnostic().rule == "syntax");
        CHECK(e.diagnostic().span.file == "f.clls");
    }
}

TEST_CASE("desugar leaves no surface node") {
    for (auto& f : corpus_files()) {
        CAPTURE(f);
        auto ds = desugar(parse_program(ts::read_file(f), f));
        for (auto& d : ds)
            if (auto* p = std::get_if<ProcDecl>(&d)) CHECK(is_core(p->body));
    }
    auto raw = parse_program("proc f(c: usage lint) { letc x: close { close x }; wait x; release c };;");
    CHECK_FALSE(is_core(std::get<ProcDecl>(raw[0]).body));
    CHECK(is_core(std::get<ProcDecl>(desugar(raw[0])).body));
}

TEST_CASE("pretty printing is a fixed point after one round") {
    for (auto& f : corpus_files()) {
        CAPTURE(f);
        auto once = pretty(parse_program(ts::read_file(f), f));
        auto twice = pretty(parse_program(once, "pretty"));
        CHECK(once == twice);
    }
}

TEST_CASE("repl input classification") {
    auto a = parse_repl_input("main();;");
    CHECK(a.kind == ReplInput::Kind::Invocation);
    CHECK(a.call.name == "main");
    CHECK(a.call.exponential.empty());

    auto b = parse_repl_input("main_sa(;20);;");
    CHECK(b.kind == ReplInput::Kind::Invocation);
    REQUIRE(b.call.exponential.size() == 1);
    CHECK(b.call.exponential[0]->int_value == 20);

    auto c = parse_repl_input("proc id(x:close,y:wait){fwd x y};;");
    CHECK(c.kind == ReplInput::Kind::Declarations);
    CHECK(c.decls.size() == 1);

    CHECK(parse_repl_input(":quit").kind == ReplInput::Kind::Quit);
    CHECK(parse_repl_input("   ").kind == ReplInput::Kind::Empty);
}

} // TEST_SUITE
