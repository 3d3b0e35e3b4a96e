#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "clls/repl.hpp"

using namespace clls;
namespace ts = testsupport;

TEST_SUITE("repl") {

TEST_CASE("declare and run") {
    Repl r;
    auto a = r.feed(R"(proc hi(; n: ~lint) { println("n=" + n) };;)");
    CHECK(a.text == "proc hi\n");
    CHECK(r.feed("hi(;5);;").text == "n=5\n");
    CHECK(r.feed("hi(;2*3+1);;").text == "n=7\n");
    CHECK(r.feed(":quit").quit);
}

TEST_CASE("a rejected declaration leaves the session unchanged") {
    Repl r;
    r.feed(R"(proc hi() { println("one") };;)");
    auto before = r.declarations().size();
    auto bad = r.feed(R"(proc hi() { println(undefined_name) };;)");
    CHECK(bad.text.find("unbound-name") != std::string::npos);
    CHECK(r.declarations().size() == before);
    CHECK(r.feed("hi();;").text == "one\n");
    r.feed(R"(proc hi() { println("two") };;)");
    CHECK(r.declarations().size() == before);
    CHECK(r.feed("hi();;").text == "two\n");
}

TEST_CASE("each invocation gets a fresh runtime") {
    Repl r;
    r.feed(ts::read_file(ts::corpus_dir() + "/cells.clls"));
    for (int i = 0; i < 3; ++i) CHECK(r.feed("main0m();;").text == "42\n");
}

TEST_CASE("corpus programs through the session") {
    Repl r;
    auto decl = r.feed(ts::read_file(ts::corpus_dir() + "/sieve.clls"));
    CHECK(decl.text.find("proc main_sa") != std::string::npos);
    CHECK(r.feed("main_sa(;30);;").text == ts::sieve_oracle(30));
}

TEST_CASE("bad invocations") {
    Repl r;
    r.feed(R"(proc hi(; n: ~lint) { println(n) };;)");
    CHECK(r.feed("nope();;").text.find("unbound-name") != std::string::npos);
    CHECK_FALSE(r.feed("hi(x;1);;").text.empty());
    CHECK(r.feed("hi(;1 mod 0);;").text.find("mod by zero") != std::string::npos);
}

TEST_CASE("line oriented loop") {
    std::istringstream in("proc hi() {\n  println(\"hey\")\n};;\nhi();;\n:quit\nhi();;\n");
    std::ostringstream out;
    Repl r;
    r.run(in, out);
    CHECK(out.str() == "> proc hi\n> hey\n> ");
}

} // TEST_SUITE
