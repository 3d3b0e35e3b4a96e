#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "clls/checker.hpp"
#include "clls/corpus.hpp"
#include "clls/repl.hpp"
#include "clls/runtime.hpp"
#include "clls/syntax.hpp"
#include "clls/types.hpp"

namespace py = pybind11;
using namespace clls;

namespace {

py::dict diag_dict(const Diagnostic& d) {
    py::dict out;
    out["rule"] = d.rule;
    out["message"] = d.message;
    out["file"] = d.span.file;
    out["line"] = d.span.line;
    out["col"] = d.span.col;
    return out;
}

Program checked(const std::string& source) {
    auto res = check_source(source, "<python>");
    if (!res.ok()) throw std::invalid_argument(format_all(res.diagnostics));
    return res.program;
}

// Type text is read in the scope of the type declarations in `source`.
TypePtr read_type(const std::string& text, const Program& prog) {
    auto ds = parse_program("type Probe__ { " + text + " };;", "<type>");
    return well_formed(std::get<TypeDecl>(ds[0]).group[0].body, prog.types, {});
}

template <class F>
auto translating(F f) {
    try {
        return f();
    } catch (const DiagnosticError& e) {
        throw std::invalid_argument(e.diagnostic().format());
    }
}

} // namespace

PYBIND11_MODULE(_clls, m) {
    m.doc() = "Checker and interpreter for linear session programs";

    m.def(
        "check",
        [](const std::string& source, const std::string& file) {
            py::list out;
            for (auto& d : check_source(source, file).diagnostics) out.append(diag_dict(d));
            return out;
        },
        py::arg("source"), py::arg("file") = "<python>");

    m.def(
        "run",
        [](const std::string& source, const std::string& entry, const std::vector<std::variant<std::int64_t, std::string>>& args,
           std::uint64_t seed, std::uint64_t max_steps, bool trace) {
            auto prog = checked(source);
            RunOptions o;
            o.entry = entry;
            o.args.assign(args.begin(), args.end());
            o.seed = seed;
            o.max_steps = max_steps;
            std::ostringstream tr;
            if (trace) o.trace = &tr;
            RunResult r;
            {
                py::gil_scoped_release unlocked;
                r = run_program(prog, o);
            }
            py::dict out;
            out["status"] = to_string(r.status);
            out["output"] = r.output;
            out["steps"] = r.steps;
            out["message"] = r.message;
            out["leaks"] = py::dict(py::arg("endpoints") = r.leaks.endpoints, py::arg("cells") = r.leaks.cells,
                                    py::arg("tasks") = r.leaks.tasks);
            if (trace) out["trace"] = tr.str();
            return out;
        },
        py::arg("source"), py::arg("entry") = "main", py::arg("args") = std::vector<std::variant<std::int64_t, std::string>>{},
        py::arg("seed") = 0, py::arg("max_steps") = 10'000'000, py::arg("trace") = false);

    m.def(
        "dual",
        [](const std::string& type, const std::string& source) {
            return translating([&] {
                auto prog = checked(source);
                return to_string(dual(read_type(type, prog)));
            });
        },
        py::arg("type"), py::arg("source") = "");

    m.def(
        "type_equal",
        [](const std::string& a, const std::string& b, const std::string& source) {
            return translating([&] {
                auto prog = checked(source);
                return type_equal(read_type(a, prog), read_type(b, prog), prog.types);
            });
        },
        py::arg("a"), py::arg("b"), py::arg("source") = "");

    m.def(
        "pretty",
        [](const std::string& source) { return translating([&] { return pretty(parse_program(source, "<python>")); }); },
        py::arg("source"));

    m.def(
        "run_corpus",
        [](const std::string& dir, std::optional<unsigned> seeds) {
            auto rep = run_corpus(dir, seeds);
            return py::make_tuple(rep.ok(), format_report(rep));
        },
        py::arg("dir"), py::arg("seeds") = py::none());

    py::class_<Repl>(m, "Repl")
        .def(py::init([](std::uint64_t seed) {
                 RunOptions o;
                 o.seed = seed;
                 return Repl(o);
             }),
             py::arg("seed") = 0)
        .def("feed", [](Repl& r, const std::string& input) {
            auto reply = r.feed(input);
            return py::make_tuple(reply.text, reply.quit);
        });
}
