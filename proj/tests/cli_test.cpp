#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

#include "support.hpp"

namespace ts = testsupport;
namespace fs = std::filesystem;

namespace {

struct Proc {
    int code;
    std::string out;
};

// Runs the clls binary through the shell; stderr is merged when asked.
Proc cli(const std::string& args, bool merge_err = false, const std::string& env = "") {
    std::string cmd = env + " '" + std::string(CLLS_BIN) + "' " + args + (merge_err ? " 2>&1" : " 2>/dev/null");
    FILE* f = popen(cmd.c_str(), "r");
    REQUIRE(f);
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), f)) > 0) out.append(buf.data(), n);
    int st = pclose(f);
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::string corpus(const std::string& name) { return "'" + ts::corpus_dir() + "/" + name + ".clls'"; }

std::string write_temp(const std::string& name, const std::string& text) {
    auto p = fs::temp_directory_path() / name;
    std::ofstream(p) << text;
    return p.string();
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("run and exit codes") {
    auto hello = cli("run " + corpus("hello"));
    CHECK(hello.code == 0);
    CHECK(hello.out == "hello world 6\n");
    CHECK(cli("run " + corpus("sieve") + " --entry main_sa -- 10").out == "2 3 5 7 \n");
    CHECK(cli("check " + corpus("queue") + " " + corpus("wallet")).code == 0);
    CHECK(cli("run /nonexistent/x.clls").code == 2);
    CHECK(cli("check /nonexistent/x.clls").code == 2);
    CHECK(cli("run " + corpus("hello") + " --entry nope").code == 1);
    CHECK(cli("run " + corpus("sieve") + " --entry main_sa").code == 1);
    auto overflow = write_temp("clls_overflow.clls", "proc main() { println(9223372036854775807 + 1) };;\n");
    CHECK(cli("run '" + overflow + "'").code == 3);
    CHECK(cli("run " + corpus("sieve") + " --entry main_sa --steps 50 -- 50").code == 3);
}

TEST_CASE("check diagnostics use file:line:col: rule: message") {
    auto path = ts::negative_dir() + "/linear_leak.clls";
    auto r = cli("check '" + path + "'", true);
    CHECK(r.code == 1);
    CHECK(std::regex_search(r.out, std::regex("^" + path + R"(:\d+:\d+: [a-z-]+: .+)")));
}

TEST_CASE("seed from the environment matches --seed") {
    auto a = cli("run " + corpus("queue") + " --entry mainq -- 8", false, "CLLS_SEED=5");
    auto b = cli("run " + corpus("queue") + " --entry mainq --seed 5 -- 8");
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("trace goes to stderr") {
    auto quiet = cli("run " + corpus("hello") + " --trace");
    CHECK(quiet.out == "hello world 6\n");
    auto loud = cli("run " + corpus("hello") + " --trace", true);
    CHECK(std::regex_search(loud.out, std::regex(R"(step \d+ task \d+ print)")));
}

TEST_CASE("repl reads stdin") {
    auto in = write_temp("clls_repl_in.txt", "proc hi() { println(\"x\") };;\nhi();;\n:quit\n");
    auto r = cli("repl < '" + in + "'");
    CHECK(r.code == 0);
    CHECK(r.out.find("x\n") != std::string::npos);
}

TEST_CASE("corpus command") {
    auto r = cli("corpus '" + ts::corpus_dir() + "'");
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(cli("corpus '" + ts::negative_dir() + "'").code == 1);
}

} // TEST_SUITE
