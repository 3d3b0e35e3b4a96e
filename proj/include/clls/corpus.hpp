#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clls/runtime.hpp"

namespace clls {

// One section of a .expected file:
//
//   == ENTRY [args=a,b] [seeds=N] [mode=exact|regex|perm|predicate]
//   body lines
//
// exact:     output lines equal the body
// regex:     line i fully matches regex i
// perm:      output lines are a permutation of the body
// predicate: body lines are `lines N`, `count N RE` or `before RE_A -> RE_B`
//            (every line matching A comes before every line matching B)
struct Expectation {
    enum class Mode { Exact, Regex, Perm, Predicate };
    std::string entry;
    std::vector<RunArg> args;
    unsigned seeds = 1;
    Mode mode = Mode::Exact;
    std::vector<std::string> lines;
};

// Throws std::runtime_error on a malformed file.
std::vector<Expectation> parse_expectations(const std::string& text);

// Empty when `output` satisfies the expectation, otherwise the reason.
std::string match_output(const Expectation& e, const std::string& output);

std::vector<std::string> split_lines(const std::string& output);

struct CaseReport {
    std::string file;
    std::string entry;
    std::string args;
    unsigned seeds = 0;
    unsigned failures = 0;
    std::uint64_t max_steps_used = 0;
    std::string first_failure;
};

struct CorpusReport {
    std::vector<std::string> programs;
    std::vector<Diagnostic> diagnostics;
    std::vector<CaseReport> cases;
    std::vector<std::string> errors; // unreadable or malformed files
    bool ok() const;
};

// Checks every .clls file in `dir` and runs the sections of its .expected
// file. `seeds` overrides the per-section seed count. A run passes when it
// ends normally, leaks nothing and its output matches.
CorpusReport run_corpus(const std::string& dir, std::optional<unsigned> seeds = std::nullopt,
                        std::uint64_t max_steps = 10'000'000);

std::string format_report(const CorpusReport& r);

} // namespace clls
