#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "clls/checker.hpp"
#include "clls/corpus.hpp"
#include "clls/repl.hpp"
#include "clls/runtime.hpp"

namespace {

enum Exit { kOk = 0, kCheck = 1, kIo = 2, kRuntime = 3 };

bool read_file(const std::string& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::stringstream ss;
    ss << in.rdbuf();
    out = ss.str();
    return true;
}

std::uint64_t default_seed() {
    if (const char* s = std::getenv("CLLS_SEED")) {
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            std::cerr << "clls: ignoring CLLS_SEED=" << s << "\n";
        }
    }
    return 0;
}

int cmd_check(const std::vector<std::string>& files) {
    int rc = kOk;
    for (auto& f : files) {
        std::string src;
        if (!read_file(f, src)) {
            std::cerr << f << ": cannot read file\n";
            rc = kIo;
            continue;
        }
        auto res = clls::check_source(src, f);
        std::cerr << clls::format_all(res.diagnostics);
        if (!res.ok() && rc == kOk) rc = kCheck;
    }
    return rc;
}

} // namespace

int main(int argc, char** argv) {
    // Everything after "--" goes to the entry procedure.
    std::vector<std::string> entry_args;
    int cli_argc = argc;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--") {
            for (int j = i + 1; j < argc; ++j) entry_args.emplace_back(argv[j]);
            cli_argc = i;
            break;
        }
    }

    CLI::App app{"clls: checker and interpreter for linear session programs"};
    app.require_subcommand(1);

    std::vector<std::string> check_files;
    auto* check = app.add_subcommand("check", "type check programs");
    check->add_option("files", check_files, "source files")->required();

    std::string run_file, entry = "main";
    std::uint64_t seed = default_seed();
    std::uint64_t steps = 10'000'000;
    bool trace = false, parallel = false, wall_clock = false;
    auto* run = app.add_subcommand("run", "check and run a program");
    run->add_option("file", run_file, "source file")->required();
    run->add_option("--entry", entry, "procedure to run");
    run->add_option("--seed", seed, "scheduler seed (default $CLLS_SEED or 0)");
    run->add_option("--steps", steps, "step budget");
    run->add_flag("--trace", trace, "write scheduling events to stderr");
    run->add_flag("--parallel", parallel, "run tasks on worker threads");
    run->add_flag("--wall-clock", wall_clock, "sleep in milliseconds of real time");

    auto* repl = app.add_subcommand("repl", "interactive session");

    std::string corpus_dir;
    unsigned corpus_seeds = 0;
    auto* corpus = app.add_subcommand("corpus", "check and run every program in a directory");
    corpus->add_option("dir", corpus_dir, "directory of .clls and .expected files")->required();
    corpus->add_option("--seeds", corpus_seeds, "seeds per entry (overrides the .expected files)");
    corpus->add_option("--steps", steps, "step budget per run");

    try {
        app.parse(cli_argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (*check) return cmd_check(check_files);

    if (*run) {
        std::string src;
        if (!read_file(run_file, src)) {
            std::cerr << run_file << ": cannot read file\n";
            return kIo;
        }
        auto res = clls::check_source(src, run_file);
        if (!res.ok()) {
            std::cerr << clls::format_all(res.diagnostics);
            return kCheck;
        }
        // Entry mistakes are reported like check errors.
        const clls::ProcDecl* proc = res.program.find(entry);
        clls::Span at{run_file, 1, 1};
        if (!proc) {
            std::cerr << clls::Diagnostic{"unbound-name", "no procedure named '" + entry + "'", at}.format() << "\n";
            return kCheck;
        }
        if (!proc->linear.empty() || proc->exponential.size() != entry_args.size()) {
            std::cerr << clls::Diagnostic{"arity",
                                          "entry '" + entry + "' needs no linear parameters and " +
                                              std::to_string(proc->exponential.size()) + " argument(s) after --, got " +
                                              std::to_string(entry_args.size()),
                                          proc->span}
                             .format()
                      << "\n";
            return kCheck;
        }
        clls::RunOptions opts;
        opts.entry = entry;
        opts.seed = seed;
        opts.max_steps = steps;
        opts.out = &std::cout;
        opts.wall_clock = wall_clock;
        if (trace) opts.trace = &std::cerr;
        if (parallel) opts.workers = std::max(2u, std::thread::hardware_concurrency());
        for (auto& a : entry_args) opts.args.push_back(clls::parse_run_arg(a));
        auto r = clls::run_program(res.program, opts);
        std::cout.flush();
        if (!r.ok()) {
            std::cerr << "clls: " << clls::to_string(r.status) << ": " << r.message << "\n";
            return kRuntime;
        }
        return kOk;
    }

    if (*repl) {
        clls::RunOptions opts;
        opts.seed = seed;
        clls::Repl session(opts);
        session.run(std::cin, std::cout);
        return kOk;
    }

    if (*corpus) {
        std::optional<unsigned> seeds;
        if (corpus_seeds > 0) seeds = corpus_seeds;
        auto rep = clls::run_corpus(corpus_dir, seeds, steps);
        std::cout << clls::format_report(rep);
        if (!rep.errors.empty()) return kIo;
        if (!rep.diagnostics.empty()) return kCheck;
        return rep.ok() ? kOk : kRuntime;
    }
    return kOk;
}
