#include <doctest.h>

#include <filesystem>

#include "support.hpp"

using namespace clls;
namespace ts = testsupport;
namespace fs = std::filesystem;

TEST_SUITE("corpus") {

TEST_CASE("expectation headers") {
    auto es = parse_expectations("== main\nhello\n== f args=3,x seeds=7 mode=perm\na\nb\n");
    REQUIRE(es.size() == 2);
    CHECK(es[0].entry == "main");
    CHECK(es[0].seeds == 1);
    CHECK(es[0].mode == Expectation::Mode::Exact);
    CHECK(es[0].lines == std::vector<std::string>{"hello"});
    CHECK(es[1].args.size() == 2);
    CHECK(std::get<std::int64_t>(es[1].args[0]) == 3);
    CHECK(std::get<std::string>(es[1].args[1]) == "x");
    CHECK(es[1].seeds == 7);
    CHECK(es[1].mode == Expectation::Mode::Perm);
    CHECK_THROWS(parse_expectations("== main mode=fuzzy\n"));
    CHECK_THROWS(parse_expectations("== main seeds\n"));
}

TEST_CASE("matching modes") {
    Expectation e;
    e.lines = {"a", "b"};
    CHECK(match_output(e, "a\nb\n").empty());
    CHECK_FALSE(match_output(e, "b\na\n").empty());
    e.mode = Expectation::Mode::Perm;
    CHECK(match_output(e, "b\na\n").empty());
    CHECK_FALSE(match_output(e, "a\na\n").empty());
    e.mode = Expectation::Mode::Regex;
    e.lines = {"x\\d+", "3|1"};
    CHECK(match_output(e, "x12\n1\n").empty());
    CHECK_FALSE(match_output(e, "x12\n13\n").empty());
    e.mode = Expectation::Mode::Predicate;
    e.lines = {"lines 3", "count 2 ^w", "before ^w -> ^z"};
    CHECK(match_output(e, "w1\nw2\nz\n").empty());
    CHECK_FALSE(match_output(e, "w1\nz\nw2\n").empty());
    CHECK_FALSE(match_output(e, "w1\nz\n").empty());
}

TEST_CASE("line splitting keeps empty lines but not the final newline") {
    CHECK(split_lines("") == std::vector<std::string>{});
    CHECK(split_lines("a\n\nb\n") == std::vector<std::string>{"a", "", "b"});
    CHECK(split_lines("a") == std::vector<std::string>{"a"});
}

TEST_CASE("the shipped corpus passes") {
    auto rep = run_corpus(ts::corpus_dir());
    INFO(format_report(rep));
    CHECK(rep.ok());
    CHECK(rep.programs.size() == 10);
    CHECK(rep.cases.size() >= 12);
}

TEST_CASE("a wrong expectation is reported") {
    auto dir = fs::temp_directory_path() / "clls_corpus_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "p.clls") << "proc main() { println(1) };;\n";
    std::ofstream(dir / "p.expected") << "== main seeds=3\n2\n";
    auto rep = run_corpus(dir.string());
    REQUIRE(rep.cases.size() == 1);
    CHECK(rep.cases[0].failures == 3);
    CHECK_FALSE(rep.ok());
    CHECK(format_report(rep).find("FAIL ") != std::string::npos);
    std::ofstream(dir / "q.clls") << "proc main() { x };;\n";
    rep = run_corpus(dir.string());
    CHECK_FALSE(rep.diagnostics.empty());
    fs::remove_all(dir);
}

} // TEST_SUITE
