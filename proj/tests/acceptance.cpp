// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures.

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sys/wait.h>

#include "support.hpp"

using namespace clls;
namespace ts = testsupport;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Criterion body: returns "" on success or the reason it failed.
using Check = std::function<std::string()>;

std::string ac1() {
    auto t0 = Clock::now();
    std::string cmd = "'" + std::string(CLLS_BIN) + "' run '" + ts::corpus_dir() + "/hello.clls'";
    FILE* f = popen(cmd.c_str(), "r");
    if (!f) return "cannot start clls";
    std::string out;
    std::array<char, 256> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), f)) > 0) out.append(buf.data(), n);
    int st = pclose(f);
    double s = seconds_since(t0);
    if (!WIFEXITED(st) || WEXITSTATUS(st) != 0) return "exit status " + std::to_string(st);
    if (out != "hello world 6\n") return "printed '" + out + "'";
    if (s >= 1.0) return "took " + std::to_string(s) + "s";
    return "";
}

std::string ac2() {
    auto p = ts::load("arith_server");
    auto a = ts::run(p, "main0");
    auto b = ts::run(p, "main1");
    if (a.output != "alice got 4\n") return "main0 printed '" + a.output + "'";
    if (b.output != "bob got 7\n") return "main1 printed '" + b.output + "'";
    return "";
}

std::string ac3() {
    auto p = ts::load("cells");
    std::set<std::string> seen;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto r = ts::run(p, "main1m", {}, seed);
        if (r.output != "2\n3\n" && r.output != "2\n1\n") return "seed " + std::to_string(seed) + ": '" + r.output + "'";
        seen.insert(r.output);
    }
    if (seen.size() != 2) return "only one interleaving observed";
    return "";
}

std::string ac4() {
    auto p = ts::load("sieve");
    auto t0 = Clock::now();
    auto r = ts::run(p, "main_sa", {std::int64_t{50}});
    double s = seconds_since(t0);
    if (!r.ok()) return std::string(to_string(r.status)) + ": " + r.message;
    if (r.output != ts::sieve_oracle(50)) return "printed '" + r.output + "'";
    if (!r.leaks.clean()) return "leaked objects";
    if (s >= 5.0) return "took " + std::to_string(s) + "s";
    return "";
}

std::string ac5() {
    auto p = ts::load("barrier");
    const int n = 4;
    const std::array<std::string, 4> kinds{"started.", "on wait", "wake up.", "terminates."};
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto r = ts::run(p, "mainb", {std::int64_t{n}}, seed);
        auto where = "seed " + std::to_string(seed) + ": ";
        if (!r.ok() || !r.leaks.clean()) return where + "run failed: " + r.message;
        auto lines = split_lines(r.output);
        std::map<std::string, std::set<int>> by_kind;
        long last_wait = -1, first_wake = static_cast<long>(lines.size());
        for (std::size_t i = 0; i < lines.size(); ++i) {
            auto& l = lines[i];
            bool known = false;
            for (auto& k : kinds) {
                if (l.size() > 9 && l.compare(0, 7, "thread ") == 0 && l.substr(9) == k) {
                    by_kind[k].insert(l[7] - '0');
                    known = true;
                    if (k == "on wait") last_wait = static_cast<long>(i);
                    if (k == "wake up." && first_wake == static_cast<long>(lines.size())) first_wake = static_cast<long>(i);
                }
            }
            if (!known) return where + "unexpected line '" + l + "'";
        }
        if (lines.size() != 16) return where + std::to_string(lines.size()) + " lines";
        for (auto& k : kinds)
            if (by_kind[k] != std::set<int>{0, 1, 2, 3}) return where + "wrong threads for '" + k + "'";
        if (first_wake < last_wait) return where + "a thread woke before all were waiting";
    }
    return "";
}

std::string ac6() {
    auto p = ts::load("queue");
    auto fifo = ts::run(p, "mainfifo", {std::int64_t{64}});
    std::string want;
    for (int i = 1; i <= 64; ++i) want += "deq " + std::to_string(i) + "\n";
    want += "NONE\n";
    if (fifo.output != want) return "sequential run printed '" + fifo.output + "'";
    const int n = 16;
    std::vector<long> order;
    for (int i = n; i >= 1; --i) order.push_back(i);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto r = ts::run(p, "mainq", {std::int64_t{n}}, seed);
        if (!r.ok() || !r.leaks.clean()) return "seed " + std::to_string(seed) + ": " + r.message;
        std::vector<std::string> deqs;
        for (auto& l : split_lines(r.output))
            if (l.rfind("enq ", 0) != 0) deqs.push_back(l);
        if (deqs.size() != n) return "seed " + std::to_string(seed) + ": wrong number of dequeues";
        if (!ts::fifo_linearizable(order, deqs)) return "seed " + std::to_string(seed) + ": not linearizable";
    }
    return "";
}

std::string ac7() {
    auto r = ts::run(ts::load("wallet"), "main");
    auto lines = split_lines(r.output);
    if (std::find(lines.begin(), lines.end(), "balance = 1") == lines.end()) return "printed '" + r.output + "'";
    auto path = ts::negative_dir() + "/wallet_tamper.clls";
    auto res = check_source(ts::read_file(path), path);
    if (res.ok()) return "tampering client accepted";
    return "";
}

std::string ac8() {
    int n = 0;
    for (auto& e : fs::directory_iterator(ts::corpus_dir())) {
        if (e.path().extension() != ".clls") continue;
        auto res = check_source(ts::read_file(e.path().string()), e.path().string());
        if (!res.ok()) return format_all(res.diagnostics);
        ++n;
    }
    if (n != 10) return std::to_string(n) + " programs found";
    return "";
}

std::string ac9() {
    int rejected = 0;
    for (auto& e : fs::directory_iterator(ts::negative_dir())) {
        if (e.path().extension() != ".clls") continue;
        auto src = ts::read_file(e.path().string());
        std::smatch m;
        if (!std::regex_search(src, m, std::regex(R"(-- expect: ([a-z-]+))"))) return e.path().string() + ": no expectation";
        auto res = check_source(src, e.path().string());
        if (res.ok()) return e.path().filename().string() + " accepted";
        if (res.diagnostics.front().rule != m[1]) return e.path().filename().string() + ": got " + res.diagnostics.front().rule;
        ++rejected;
    }
    if (rejected < 12) return "only " + std::to_string(rejected) + " negative programs";
    return "";
}

std::string ac10() {
    auto rep = run_corpus(ts::corpus_dir(), 100u);
    if (!rep.ok()) return format_report(rep);
    return "";
}

std::string ac11() {
    for (auto& e : fs::directory_iterator(ts::corpus_dir())) {
        if (e.path().extension() != ".expected") continue;
        auto name = e.path().stem().string();
        auto p = ts::load(name);
        for (auto& ex : parse_expectations(ts::read_file(e.path().string()))) {
            for (std::uint64_t seed : {0u, 7u, 99u}) {
                std::ostringstream t1, t2;
                RunOptions o;
                o.entry = ex.entry;
                o.args = ex.args;
                o.seed = seed;
                o.trace = &t1;
                auto a = run_program(p, o);
                o.trace = &t2;
                auto b = run_program(p, o);
                if (a.output != b.output || t1.str() != t2.str())
                    return name + " " + ex.entry + " seed " + std::to_string(seed) + " differs";
            }
        }
    }
    return "";
}

std::string ac12() {
    ts::TypeGen gen(12);
    for (int i = 0; i < 1000; ++i) {
        auto t = gen.next();
        auto& env = gen.env();
        if (!type_equal(dual(dual(t)), t, env)) return "involution fails on " + to_string(t);
        if (!type_equal(dual(unfold(t, env)), unfold(dual(t), env), env)) return "commutation fails on " + to_string(t);
    }
    return "";
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, Check>> criteria{
        {"hello world", ac1},
        {"arithmetic server sessions", ac2},
        {"shared cell interleavings", ac3},
        {"sieve primes up to 50", ac4},
        {"barrier synchronisation", ac5},
        {"linked queue FIFO and linearizability", ac6},
        {"wallet balance and tampering rejected", ac7},
        {"all programs check", ac8},
        {"negative programs rejected by rule", ac9},
        {"100-seed corpus sweep", ac10},
        {"determinism", ac11},
        {"duality properties on 1000 types", ac12},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string why;
        try {
            why = criteria[i].second();
        } catch (const std::exception& e) {
            why = std::string("exception: ") + e.what();
        }
        std::cout << (why.empty() ? "PASS" : "FAIL") << " AC" << i + 1 << " " << criteria[i].first;
        if (!why.empty()) std::cout << ": " << why;
        std::cout << "\n";
        failures += !why.empty();
    }
    return failures;
}
