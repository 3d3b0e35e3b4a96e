#include "clls/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace clls {

namespace fs = std::filesystem;

std::vector<std::string> split_lines(const std::string& output) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : output) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

namespace {

std::vector<std::string> words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

Expectation parse_header(const std::string& line, int lineno) {
    auto ws = words(line.substr(2));
    if (ws.empty()) throw std::runtime_error("line " + std::to_string(lineno) + ": missing entry name");
    Expectation e;
    e.entry = ws[0];
    for (std::size_t i = 1; i < ws.size(); ++i) {
        auto eq = ws[i].find('=');
        if (eq == std::string::npos) throw std::runtime_error("line " + std::to_string(lineno) + ": bad option " + ws[i]);
        std::string key = ws[i].substr(0, eq), val = ws[i].substr(eq + 1);
        if (key == "args") {
            std::stringstream ss(val);
            std::string a;
            while (std::getline(ss, a, ',')) e.args.push_back(parse_run_arg(a));
        } else if (key == "seeds") {
            e.seeds = static_cast<unsigned>(std::stoul(val));
        } else if (key == "mode") {
            if (val == "exact") e.mode = Expectation::Mode::Exact;
            else if (val == "regex") e.mode = Expectation::Mode::Regex;
            else if (val == "perm") e.mode = Expectation::Mode::Perm;
            else if (val == "predicate") e.mode = Expectation::Mode::Predicate;
            else throw std::runtime_error("line " + std::to_string(lineno) + ": unknown mode " + val);
        } else {
            throw std::runtime_error("line " + std::to_string(lineno) + ": unknown option " + key);
        }
    }
    return e;
}

std::string show(const std::vector<std::string>& lines) {
    std::string s;
    for (auto& l : lines) s += "  | " + l + "\n";
    return s;
}

std::string match_predicate(const std::vector<std::string>& preds, const std::vector<std::string>& out) {
    for (auto& p : preds) {
        std::istringstream in(p);
        std::string kind;
        in >> kind;
        if (kind == "lines") {
            std::size_t n = 0;
            in >> n;
            if (out.size() != n)
                return "expected " + std::to_string(n) + " lines, got " + std::to_string(out.size());
        } else if (kind == "count") {
            std::size_t n = 0;
            std::string re;
            in >> n >> std::ws;
            std::getline(in, re);
            std::regex rx(re);
            auto c = static_cast<std::size_t>(
                std::count_if(out.begin(), out.end(), [&](const std::string& l) { return std::regex_search(l, rx); }));
            if (c != n) return "expected " + std::to_string(n) + " lines matching " + re + ", got " + std::to_string(c);
        } else if (kind == "before") {
            std::string rest;
            std::getline(in >> std::ws, rest);
            auto arrow = rest.find(" -> ");
            if (arrow == std::string::npos) return "malformed predicate: before " + rest;
            std::string a = rest.substr(0, arrow), b = rest.substr(arrow + 4);
            std::regex ra(a), rb(b);
            long last_a = -1, first_b = static_cast<long>(out.size());
            for (std::size_t i = 0; i < out.size(); ++i) {
                if (std::regex_search(out[i], ra)) last_a = static_cast<long>(i);
                if (std::regex_search(out[i], rb) && first_b == static_cast<long>(out.size()))
                    first_b = static_cast<long>(i);
            }
            if (last_a > first_b) return "a line matching " + a + " comes after a line matching " + b;
        } else if (!kind.empty()) {
            return "unknown predicate " + kind;
        }
    }
    return "";
}

std::string args_text(const std::vector<RunArg>& args) {
    std::string s;
    for (auto& a : args) {
        if (!s.empty()) s += ",";
        if (auto* i = std::get_if<std::int64_t>(&a)) s += std::to_string(*i);
        else s += std::get<std::string>(a);
    }
    return s;
}

} // namespace

std::vector<Expectation> parse_expectations(const std::string& text) {
    std::vector<Expectation> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.rfind("==", 0) == 0) {
            out.push_back(parse_header(line, lineno));
            continue;
        }
        if (out.empty()) {
            if (line.empty()) continue;
            throw std::runtime_error("line " + std::to_string(lineno) + ": text before the first section");
        }
        out.back().lines.push_back(line);
    }
    // Trailing blank lines separate sections; they are not expected output.
    for (auto& e : out)
        while (!e.lines.empty() && e.lines.back().empty()) e.lines.pop_back();
    return out;
}

std::string match_output(const Expectation& e, const std::string& output) {
    auto out = split_lines(output);
    switch (e.mode) {
    case Expectation::Mode::Exact:
        if (out != e.lines) return "output differs\nexpected:\n" + show(e.lines) + "got:\n" + show(out);
        if (!output.empty() && output.back() != '\n') return "output does not end with a newline";
        return "";
    case Expectation::Mode::Regex:
        if (out.size() != e.lines.size())
            return "expected " + std::to_string(e.lines.size()) + " lines, got:\n" + show(out);
        for (std::size_t i = 0; i < out.size(); ++i)
            if (!std::regex_match(out[i], std::regex(e.lines[i])))
                return "line " + std::to_string(i + 1) + " '" + out[i] + "' does not match " + e.lines[i];
        return "";
    case Expectation::Mode::Perm: {
        auto a = out, b = e.lines;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) return "output is not a permutation of the expected lines\ngot:\n" + show(out);
        return "";
    }
    case Expectation::Mode::Predicate: {
        auto why = match_predicate(e.lines, out);
        return why.empty() ? "" : why + "\ngot:\n" + show(out);
    }
    }
    return "";
}

bool CorpusReport::ok() const {
    if (!diagnostics.empty() || !errors.empty()) return false;
    return std::all_of(cases.begin(), cases.end(), [](const CaseReport& c) { return c.failures == 0; });
}

CorpusReport run_corpus(const std::string& dir, std::optional<unsigned> seeds, std::uint64_t max_steps) {
    CorpusReport rep;
    std::vector<fs::path> files;
    std::error_code ec;
    for (auto& ent : fs::directory_iterator(dir, ec))
        if (ent.path().extension() == ".clls") files.push_back(ent.path());
    if (ec) {
        rep.errors.push_back(dir + ": " + ec.message());
        return rep;
    }
    std::sort(files.begin(), files.end());
    for (auto& path : files) {
        rep.programs.push_back(path.string());
        std::ifstream in(path);
        std::stringstream ss;
        ss << in.rdbuf();
        auto checked = check_source(ss.str(), path.string());
        if (!checked.ok()) {
            rep.diagnostics.insert(rep.diagnostics.end(), checked.diagnostics.begin(), checked.diagnostics.end());
            continue;
        }
        auto exp_path = path;
        exp_path.replace_extension(".expected");
        std::ifstream ein(exp_path);
        if (!ein) continue;
        std::stringstream es;
        es << ein.rdbuf();
        std::vector<Expectation> exps;
        try {
            exps = parse_expectations(es.str());
        } catch (const std::exception& e) {
            rep.errors.push_back(exp_path.string() + ": " + e.what());
            continue;
        }
        for (auto& e : exps) {
            CaseReport c;
            c.file = path.string();
            c.entry = e.entry;
            c.args = args_text(e.args);
            c.seeds = seeds.value_or(e.seeds);
            for (unsigned s = 0; s < c.seeds; ++s) {
                RunOptions opts;
                opts.entry = e.entry;
                opts.args = e.args;
                opts.seed = s;
                opts.max_steps = max_steps;
                auto r = run_program(checked.program, opts);
                c.max_steps_used = std::max(c.max_steps_used, r.steps);
                std::string why;
                if (!r.ok()) why = std::string(to_string(r.status)) + ": " + r.message;
                else if (!r.leaks.clean())
                    why = "leak: " + std::to_string(r.leaks.endpoints) + " endpoint(s), " +
                          std::to_string(r.leaks.cells) + " cell(s)";
                else why = match_output(e, r.output);
                if (!why.empty()) {
                    if (c.failures == 0) c.first_failure = "seed " + std::to_string(s) + ": " + why;
                    ++c.failures;
                }
            }
            rep.cases.push_back(std::move(c));
        }
    }
    return rep;
}

std::string format_report(const CorpusReport& r) {
    std::ostringstream os;
    for (auto& e : r.errors) os << "error: " << e << "\n";
    os << format_all(r.diagnostics);
    for (auto& c : r.cases) {
        os << (c.failures == 0 ? "ok   " : "FAIL ") << c.file << " " << c.entry;
        if (!c.args.empty()) os << "(" << c.args << ")";
        os << " seeds=" << c.seeds << " max-steps=" << c.max_steps_used;
        if (c.failures) os << " failures=" << c.failures << "\n  " << c.first_failure;
        os << "\n";
    }
    return os.str();
}

} // namespace clls
