#pragma once

// Shared helpers for the C++ test binaries: file access, independent oracles
// and a random session type generator.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "clls/checker.hpp"
#include "clls/corpus.hpp"
#include "clls/runtime.hpp"
#include "clls/types.hpp"

namespace testsupport {

inline std::string corpus_dir() { return CLLS_CORPUS_DIR; }
inline std::string negative_dir() { return CLLS_NEGATIVE_DIR; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline clls::Program load(const std::string& name) {
    auto path = corpus_dir() + "/" + name + ".clls";
    auto res = clls::check_source(read_file(path), path);
    if (!res.ok()) throw std::runtime_error(clls::format_all(res.diagnostics));
    return res.program;
}

inline clls::RunResult run(const clls::Program& p, const std::string& entry, std::vector<clls::RunArg> args = {},
                           std::uint64_t seed = 0) {
    clls::RunOptions o;
    o.entry = entry;
    o.args = std::move(args);
    o.seed = seed;
    return clls::run_program(p, o);
}

// Primes up to n by the sieve of Eratosthenes, printed as the sieve program does.
inline std::string sieve_oracle(int n) {
    std::vector<bool> composite(static_cast<std::size_t>(n) + 1, false);
    std::string out;
    for (int i = 2; i <= n; ++i) {
        if (composite[static_cast<std::size_t>(i)]) continue;
        out += std::to_string(i) + " ";
        for (long j = static_cast<long>(i) * i; j <= n; j += i) composite[static_cast<std::size_t>(j)] = true;
    }
    return out + "\n";
}

// Output of one producer enqueueing `order` and one consumer printing
// "deq v" or "NONE". The run is linearizable when some interleaving of the
// enqueues with the consumer's operations explains every result on a
// sequential FIFO queue. Enqueues are placed as late as possible, which is
// never worse than any other placement.
inline bool fifo_linearizable(const std::vector<long>& order, const std::vector<std::string>& deq_lines) {
    std::deque<long> model;
    std::size_t next = 0;
    static const std::regex deq_re("^deq (-?\\d+)$");
    for (auto& line : deq_lines) {
        std::smatch m;
        if (line == "NONE") {
            if (!model.empty()) return false;
            continue;
        }
        if (!std::regex_match(line, m, deq_re)) return false;
        long v = std::stol(m[1]);
        while (model.empty() || model.front() != v) {
            if (!model.empty() || next == order.size()) return false;
            model.push_back(order[next++]);
        }
        model.pop_front();
    }
    return true;
}

// Random closed session types over a small environment of named types.
class TypeGen {
public:
    explicit TypeGen(std::uint64_t seed) : rng_(seed) {
        using namespace clls;
        env_.add(TypeDef{"Stream", {}, ty::send(ty::prim(PrimKind::Int), ty::app("Stream")), true, {}});
        env_.add(TypeDef{"Opt",
                         {"A"},
                         ty::choice({{"None", ty::close()}, {"Some", ty::var("A")}}),
                         false,
                         {}});
        env_.add(TypeDef{"Menu",
                         {},
                         ty::offer({{"Add", ty::recv(ty::prim(PrimKind::Int), ty::app("Menu"))}, {"Quit", ty::wait()}}),
                         true,
                         {}});
    }

    const clls::TypeEnv& env() const { return env_; }

    clls::TypePtr next() { return gen(4, {}, true); }

private:
    int pick(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }

    // `guarded`: a bound variable may appear here without breaking contractiveness.
    clls::TypePtr gen(int depth, const std::vector<std::string>& vars, bool guarded) {
        using namespace clls;
        if (depth <= 0) {
            int k = pick(guarded && !vars.empty() ? 5 : 4);
            switch (k) {
            case 0: return ty::close();
            case 1: return ty::wait();
            case 2: return ty::prim(pick(2) ? PrimKind::Int : PrimKind::String);
            case 3: return ty::app(pick(2) ? "Stream" : "Menu", {}, pick(2));
            default: return ty::var(vars[static_cast<std::size_t>(pick(static_cast<int>(vars.size())))]);
            }
        }
        switch (pick(13)) {
        case 0: return ty::send(gen(depth - 1, vars, true), gen(depth - 1, vars, true));
        case 1: return ty::recv(gen(depth - 1, vars, true), gen(depth - 1, vars, true));
        case 2:
        case 3: {
            std::vector<TypeBranch> bs;
            int n = 1 + pick(3);
            for (int i = 0; i < n; ++i) bs.push_back({"L" + std::to_string(i), gen(depth - 1, vars, true)});
            return pick(2) ? ty::offer(std::move(bs)) : ty::choice(std::move(bs));
        }
        case 4: return ty::bang(gen(depth - 1, vars, guarded));
        case 5: return ty::quest(gen(depth - 1, vars, guarded));
        case 6: return ty::affine(gen(depth - 1, vars, guarded));
        case 7: return ty::coaffine(gen(depth - 1, vars, guarded));
        case 8: return ty::state(gen(depth - 1, vars, guarded), pick(4) == 0);
        case 9: return ty::usage(gen(depth - 1, vars, guarded), pick(4) == 0);
        case 10:
        case 11: {
            std::string x = "X" + std::to_string(counter_++);
            auto vs = vars;
            vs.push_back(x);
            // The body starts with a communication so the binder is contractive.
            auto body = ty::send(gen(depth - 1, vs, true), gen(depth - 1, vs, true));
            if (pick(2)) body = dual(body);
            return pick(2) ? ty::rec(x, body) : ty::corec(x, body);
        }
        default: return ty::app("Opt", {gen(depth - 1, vars, true)}, pick(2));
        }
    }

    std::mt19937_64 rng_;
    clls::TypeEnv env_;
    int counter_ = 0;
};

} // namespace testsupport
