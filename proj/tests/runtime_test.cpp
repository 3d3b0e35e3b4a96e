#include <doctest.h>

#include <chrono>
#include <map>
#include <regex>

#include "support.hpp"

using namespace clls;
namespace ts = testsupport;

namespace {

Program checked(const std::string& src) {
    auto res = check_source(src, "inline.clls");
    INFO(format_all(res.diagnostics));
    REQUIRE(res.ok());
    return res.program;
}

struct Traced {
    RunResult result;
    std::string trace;
};

Traced traced(const Program& p, const std::string& entry, std::vector<RunArg> args, std::uint64_t seed) {
    std::ostringstream tr;
    RunOptions o;
    o.entry = entry;
    o.args = std::move(args);
    o.seed = seed;
    o.trace = &tr;
    auto r = run_program(p, o);
    return {r, tr.str()};
}

const char* kArith = R"(
type tmenu {
  offer of {
    | #Dup:  recv ~lint; send lint; wait
    | #Add:  recv ~lint; recv ~lint; send lint; wait
}};;
proc menu(m:tmenu) {
  case m of {
    | #Dup: recv m(n); send m(2*n); wait m; []
    | #Add: recv m(n1); recv m(n2); send m(n1+n2); wait m; []
  }
};;
proc alice0(c:~tmenu) { #Dup c; c <- 2; c -> m; println("alice got " + m); close c };;
proc bob0(c:~tmenu) { #Add c; c <- 4; c <- 3; c -> m; println("bob got " + m); close c };;
proc rserver(sm:!tmenu) { !sm(m); menu(m) };;
)";

} // namespace

TEST_SUITE("runtime") {

TEST_CASE("hello world and the inert process") {
    auto hello = ts::run(ts::load("hello"), "main");
    CHECK(hello.ok());
    CHECK(hello.output == "hello world 6\n");
    auto inert = ts::run(checked("proc main() { () };;"), "main");
    CHECK(inert.ok());
    CHECK(inert.output.empty());
    CHECK(inert.leaks.clean());
}

TEST_CASE("rendezvous and selection in the arithmetic server") {
    auto p = ts::load("arith_server");
    auto a = ts::run(p, "main0");
    auto b = ts::run(p, "main1");
    // 2*2 and 4+3 by hand.
    CHECK(a.output == "alice got " + std::to_string(2 * 2) + "\n");
    CHECK(b.output == "bob got " + std::to_string(4 + 3) + "\n");
    CHECK(a.leaks.clean());
    CHECK(b.leaks.clean());
}

TEST_CASE("replication creates one session per call") {
    auto zero = ts::run(checked(std::string(kArith) + "proc main() { letc s:!tmenu { rserver(s) }; () };;"), "main");
    CHECK(zero.ok());
    CHECK(zero.output.empty());
    CHECK(zero.leaks.clean());

    auto twice = checked(std::string(kArith) + R"(
proc main() {
  letc s:!tmenu { rserver(s) };
  call s(a); call s(b);
  par { alice0(a) || bob0(b) }
};;)");
    std::set<std::string> outputs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto r = ts::run(twice, "main", {}, seed);
        CHECK(r.ok());
        CHECK(r.leaks.clean());
        auto lines = split_lines(r.output);
        std::sort(lines.begin(), lines.end());
        CHECK(lines == std::vector<std::string>{"alice got 4", "bob got 7"});
        outputs.insert(r.output);
    }
}

TEST_CASE("sieve prints the primes of the window and cancels the pipeline") {
    auto p = ts::load("sieve");
    for (int n : {2, 3, 10, 20, 50, 100}) {
        CAPTURE(n);
        auto r = ts::run(p, "main_sa", {std::int64_t{n}});
        CHECK(r.ok());
        CHECK(r.output == ts::sieve_oracle(n));
        CHECK(r.leaks.clean());
    }
}

TEST_CASE("cells: private cell, shared counter, handing a cell over") {
    auto p = ts::load("cells");
    CHECK(ts::run(p, "main0m").output == "42\n");
    std::set<std::string> seen;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto r = ts::run(p, "main1m", {}, seed);
        CHECK(r.leaks.clean());
        seen.insert(r.output);
    }
    CHECK(seen == std::set<std::string>{"2\n3\n", "2\n1\n"});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto r = ts::run(p, "pass", {}, seed);
        CHECK(r.ok());
        CHECK(r.leaks.clean());
        CHECK((r.output == "2\n" || r.output == "3\n"));
    }
}

TEST_CASE("takes are exclusive and waiters are served in order") {
    auto p = checked(R"(
proc worker(m: usage ~lint; id: ~lint) {
  take m(v); println(id); put m(v + 1); drop m
};;
proc main() {
  letc m: state lint { cell m(0) };
  share m {
    worker(m; 1)
    ||
    share m { worker(m; 2) || share m { worker(m; 3) || worker(m; 4) } }
  }
};;)");
    std::regex ev(R"(^step \d+ task (\d+) (take|take-wait|put|grant) (\d+)(?: (\d+))?$)");
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto t = traced(p, "main", {}, seed);
        CHECK(t.result.ok());
        CHECK(t.result.leaks.clean());
        std::map<std::string, bool> held;
        std::map<std::string, std::vector<std::string>> waiting, granted;
        std::istringstream in(t.trace);
        std::string line;
        while (std::getline(in, line)) {
            std::smatch m;
            if (!std::regex_match(line, m, ev)) continue;
            std::string kind = m[2], cell = m[3];
            if (kind == "take" || kind == "grant") {
                CHECK_FALSE(held[cell]);
                held[cell] = true;
            }
            if (kind == "put") {
                CHECK(held[cell]);
                held[cell] = false;
            }
            if (kind == "take-wait") waiting[cell].push_back(m[1]);
            if (kind == "grant") granted[cell].push_back(m[4]);
        }
        CHECK(waiting == granted);
    }
}

TEST_CASE("dropping a cell disposes an unforced closure and what it captured") {
    auto p = checked(R"(
proc main() {
  letc a: state lint { cell a(5) };
  letc b: state close { cell b(c. affine c; take a(v); put a(v); drop a; close c) };
  drop b
};;)");
    auto r = ts::run(p, "main");
    CHECK(r.ok());
    CHECK(r.output.empty());
    CHECK(r.leaks.clean());
}

TEST_CASE("forwarding is transparent") {
    const std::string common = R"(
type P { send lint; close };;
proc prod(y: P) { y <- 5; close y };;
proc cons(x: ~P) { x -> v; println("got " + v); wait x };;
)";
    auto direct = ts::run(checked(common + "proc main() { letc a: P { prod(a) }; cons(a) };;"), "main");
    auto relayed = ts::run(
        checked(common + "proc main() { letc a: P { prod(a) }; letc b: ~P { cons(b) }; fwd a b };;"), "main");
    CHECK(direct.output == "got 5\n");
    CHECK(relayed.output == direct.output);
    CHECK(relayed.leaks.clean());
}

TEST_CASE("expressions") {
    auto out = [](const std::string& body) {
        auto r = ts::run(checked("proc main() { " + body + " };;"), "main");
        return r.ok() ? r.output : std::string(to_string(r.status)) + ": " + r.message;
    };
    CHECK(out(R"(println("hello world "+(2*3)))") == "hello world 6\n");
    CHECK(out("println(0 mod 5)") == "0\n");
    CHECK(out("println(17 mod 5)") == "2\n");
    CHECK(out("println(3 - 10)") == "-7\n");
    CHECK(out("println(2 == 2)") == "true\n");
    CHECK(out(R"(print("a"); print("b"); println(""))") == "ab\n");
    CHECK(out("if 1 == 2 then { println(1) } else { println(2) }") == "2\n");
    CHECK(out("println(9223372036854775807 + 1)").rfind("runtime-error", 0) == 0);
    CHECK(out("println(4611686018427387904 * 2)").rfind("runtime-error", 0) == 0);
    CHECK(out("println(1 mod 0)").rfind("runtime-error", 0) == 0);
}

TEST_CASE("entry arguments") {
    auto p = checked(R"(proc main(; n: ~lint, s: ~lstring) { println(s + n) };;)");
    auto r = ts::run(p, "main", {std::int64_t{3}, std::string("x")});
    CHECK(r.output == "x3\n");
    CHECK(ts::run(p, "main").status == RunStatus::RuntimeError);
    CHECK(ts::run(p, "nope").status == RunStatus::RuntimeError);
    CHECK(std::get<std::int64_t>(parse_run_arg("-12")) == -12);
    CHECK(std::get<std::string>(parse_run_arg("12a")) == "12a");
}

TEST_CASE("step budget") {
    auto p = ts::load("sieve");
    RunOptions o;
    o.entry = "main_sa";
    o.args = {std::int64_t{50}};
    o.max_steps = 100;
    auto r = run_program(p, o);
    CHECK(r.status == RunStatus::StepLimit);
    CHECK(r.steps == 100);
    auto loop = checked("proc gen_rec spin(;n: ~lint) { spin(;n + 1) };; proc main() { spin(;0) };;");
    o.entry = "main";
    o.args = {};
    o.max_steps = 5000;
    CHECK(run_program(loop, o).status == RunStatus::StepLimit);
}

TEST_CASE("deadlocks are reported with the blocked tasks") {
    // Both sides receive; the checker rejects it, the runtime must still cope.
    auto res = check_source(R"(
type T { recv ~lint; wait };;
proc main() { letc x: T { x -> a; wait x }; x -> b; close x };;)");
    CHECK_FALSE(res.ok());
    REQUIRE(res.program.find("main"));
    auto r = ts::run(res.program, "main");
    CHECK(r.status == RunStatus::Deadlock);
    CHECK(r.message.find("2 blocked task") != std::string::npos);
    CHECK(r.message.find("recv x") != std::string::npos);
}

TEST_CASE("sleep is measured in ticks unless wall clock is asked for") {
    auto p = checked(R"(
proc main() { par { sleep 1000000; println("late") || println("early") } };;)");
    for (std::uint64_t seed = 0; seed < 10; ++seed) CHECK(ts::run(p, "main", {}, seed).output == "early\nlate\n");
    auto nap = checked(R"(proc main() { sleep 30; println("done") };;)");
    RunOptions o;
    o.wall_clock = true;
    auto t0 = std::chrono::steady_clock::now();
    auto r = run_program(nap, o);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    CHECK(r.output == "done\n");
    CHECK(ms >= 30);
}

TEST_CASE("same seed, same bytes") {
    auto p = ts::load("queue");
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto a = traced(p, "mainq", {std::int64_t{8}}, seed);
        auto b = traced(p, "mainq", {std::int64_t{8}}, seed);
        CHECK(a.result.output == b.result.output);
        CHECK(a.trace == b.trace);
        CHECK(a.result.steps == b.result.steps);
    }
}

TEST_CASE("trace lines follow the documented shape") {
    auto t = traced(ts::load("arith_server"), "main0", {}, 0);
    std::istringstream in(t.trace);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        CHECK(std::regex_match(line, std::regex(R"(step \d+ task \d+ [a-z-]+( .*)?)")));
        ++n;
    }
    CHECK(n > 5);
}

TEST_CASE("parallel workers keep the safety properties") {
    auto p = ts::load("queue");
    RunOptions o;
    o.entry = "mainfifo";
    o.args = {std::int64_t{16}};
    o.workers = 3;
    auto r = run_program(p, o);
    CHECK(r.ok());
    CHECK(r.leaks.clean());
    auto lines = split_lines(r.output);
    REQUIRE(lines.size() == 17);
    for (int i = 0; i < 16; ++i) CHECK(lines[static_cast<std::size_t>(i)] == "deq " + std::to_string(i + 1));
    CHECK(lines.back() == "NONE");
}

TEST_CASE("wallet: an empty wallet answers None") {
    auto r = ts::run(ts::load("wallet"), "main");
    CHECK(r.ok());
    CHECK(r.leaks.clean());
    CHECK(split_lines(r.output).back() == "wallet empty");
}

} // TEST_SUITE
