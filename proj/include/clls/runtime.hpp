#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "clls/checker.hpp"

namespace clls {

using RunArg = std::variant<std::int64_t, std::string>;

// "12" becomes an integer, anything else a string.
RunArg parse_run_arg(const std::string& text);

struct RunOptions {
    std::string entry = "main";
    std::vector<RunArg> args;
    std::uint64_t seed = 0;
    std::uint64_t max_steps = 10'000'000;
    // Scheduling events go here when set, one line each.
    std::ostream* trace = nullptr;
    // Program output is mirrored here as it is produced when set.
    std::ostream* out = nullptr;
    // More than one worker runs tasks on that many threads. They take turns
    // under one lock, so transcripts still depend only on the seed.
    unsigned workers = 1;
    // Sleep in milliseconds of real time instead of scheduler ticks.
    bool wall_clock = false;
};

enum class RunStatus { Ok, Deadlock, StepLimit, RuntimeError };

const char* to_string(RunStatus s);

// Objects still alive after the last task finished.
struct LeakReport {
    std::size_t endpoints = 0;
    std::size_t cells = 0;
    std::size_t tasks = 0;
    bool clean() const { return endpoints == 0 && cells == 0 && tasks == 0; }
};

struct RunResult {
    RunStatus status = RunStatus::Ok;
    std::string output;
    std::uint64_t steps = 0;
    std::uint64_t tasks_spawned = 0;
    LeakReport leaks;
    // Deadlock report or error text.
    std::string message;

    bool ok() const { return status == RunStatus::Ok; }
};

// Runs a checked program. Errors in the options (unknown entry, wrong argument
// count) are reported as RuntimeError.
RunResult run_program(const Program& prog, const RunOptions& opts);

} // namespace clls
