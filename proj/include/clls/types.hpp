#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "clls/diagnostic.hpp"

namespace clls {

enum class PrimKind { Int, String };

enum class TypeKind {
    Close, Wait,
    Send, Recv,
    Offer, Choice,
    Bang, Quest,
    Affine, Coaffine,
    State, Usage,
    Rec, Corec,
    Var, App,
    Prim, DualPrim,
};

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct TypeBranch {
    std::string label;
    TypePtr type;
};

// Session types. Children are shared and never mutated after construction.
//   Send/Recv:        first = payload, second = continuation
//   Bang..Usage:      first = inner
//   Rec/Corec:        name = bound variable, first = body
//   Var:              name, negated marks a dualised occurrence
//   App:              name(args), negated marks ~Name(args)
//   State/Usage:      locked marks an empty cell (statel) or a held usage
struct Type {
    TypeKind kind = TypeKind::Close;
    TypePtr first;
    TypePtr second;
    std::vector<TypeBranch> branches;
    std::string name;
    std::vector<TypePtr> args;
    bool negated = false;
    bool locked = false;
    PrimKind prim = PrimKind::Int;
};

namespace ty {
TypePtr close();
TypePtr wait();
TypePtr send(TypePtr payload, TypePtr cont);
TypePtr recv(TypePtr payload, TypePtr cont);
TypePtr offer(std::vector<TypeBranch> branches);
TypePtr choice(std::vector<TypeBranch> branches);
TypePtr bang(TypePtr t);
TypePtr quest(TypePtr t);
TypePtr affine(TypePtr t);
TypePtr coaffine(TypePtr t);
TypePtr state(TypePtr t, bool locked = false);
TypePtr usage(TypePtr t, bool locked = false);
TypePtr rec(std::string var, TypePtr body);
TypePtr corec(std::string var, TypePtr body);
TypePtr var(std::string name, bool negated = false);
TypePtr app(std::string name, std::vector<TypePtr> args = {}, bool negated = false);
TypePtr prim(PrimKind k);
TypePtr dual_prim(PrimKind k);
} // namespace ty

struct TypeDef {
    std::string name;
    std::vector<std::string> params;
    TypePtr body;
    bool recursive = false; // declared rec or corec
    Span span;
};

class TypeEnv {
public:
    void add(TypeDef def);
    const TypeDef* find(const std::string& name) const;
    bool contains(const std::string& name) const { return find(name) != nullptr; }
    const std::map<std::string, TypeDef>& defs() const { return defs_; }
    void replace_body(const std::string& name, TypePtr body);

private:
    std::map<std::string, TypeDef> defs_;
};

TypePtr dual(const TypePtr& t);

// Replace free type variables. A negated occurrence receives the dual.
TypePtr substitute(const TypePtr& t, const std::map<std::string, TypePtr>& sub);

// Expand Name(args) one level. Throws DiagnosticError on unknown name or arity.
TypePtr instantiate(const TypeEnv& env, const std::string& name, const std::vector<TypePtr>& args);

// One unfolding step for Rec/Corec/App; anything else is returned unchanged.
TypePtr unfold(const TypePtr& t, const TypeEnv& env);

// Unfold until the head constructor is structural (or a free variable).
TypePtr head(const TypePtr& t, const TypeEnv& env);

bool type_equal(const TypePtr& a, const TypePtr& b, const TypeEnv& env);

// Checks names, arity and contractiveness; returns the type with
// state/usage contents normalised to affine/coaffine.
TypePtr well_formed(const TypePtr& t, const TypeEnv& env, const std::set<std::string>& tvars,
                    const Span& span = {});

bool is_disposable(const TypePtr& t, const TypeEnv& env);

// Kind of basic value consumed by a name of this type (~lint, ?~lint, coaffine ~lint).
std::optional<PrimKind> value_kind(const TypePtr& t, const TypeEnv& env);
// Kind of basic value a name of this type must produce (lint, !lint, affine lint).
std::optional<PrimKind> producer_kind(const TypePtr& t, const TypeEnv& env);

std::string to_string(const TypePtr& t);

} // namespace clls
