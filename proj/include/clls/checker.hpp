#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "clls/ast.hpp"
#include "clls/types.hpp"

namespace clls {

// A checked program: type definitions with normalised bodies and procedure
// declarations with normalised parameter types and desugared bodies.
struct Program {
    TypeEnv types;
    std::map<std::string, ProcDecl> procs;

    const ProcDecl* find(const std::string& name) const;
};

struct CheckResult {
    Program program;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return diagnostics.empty(); }
};

CheckResult check_program(const std::vector<Decl>& decls);
CheckResult check_source(const std::string& source, const std::string& file = "<input>");

// Typing context of one process.
//   linear:     names used exactly once
//   values:     consumers of basic values (~lint, ?~lint, coaffine ~lint); copyable
//   replicable: ?A names, stored with A
struct Context {
    std::map<std::string, TypePtr> linear;
    std::map<std::string, TypePtr> values;
    std::map<std::string, TypePtr> replicable;
    std::set<std::string> consumed;
};

// Checks one process against a context in an already-built program.
std::vector<Diagnostic> check_process(const Program& prog, const Context& ctx, const ProcPtr& p,
                                      const std::set<std::string>& type_params = {});

enum class CellAction { Take, Put, Drop };

// The usage protocol of a cell reference is (take;put)*;drop.
// Returns the rule violated by the sequence or an empty string. A sequence that
// is a valid prefix but does not end in drop is reported as "cell-leak" only
// when `complete` is set.
std::string check_cell_protocol(const std::vector<CellAction>& seq, bool complete = true);

// Recursive calls of `rec` procedures must be preceded by a communication
// action; recursion without `rec`/`gen_rec` is rejected.
std::vector<Diagnostic> check_guardedness(const Program& prog);

// Type of `x` in `letc x: { P }` taken from the first call in P that passes x.
TypePtr fill_letc_hole(const Program& prog, const std::string& x, const ProcPtr& p);

std::set<std::string> free_names(const ProcPtr& p);

} // namespace clls
