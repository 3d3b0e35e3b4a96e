#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "clls/diagnostic.hpp"
#include "clls/types.hpp"

namespace clls {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinOp { Add, Sub, Mul, Mod, Eq };

struct Expr {
    enum class Kind { Int, Str, Name, Binary };
    Kind kind = Kind::Int;
    std::int64_t int_value = 0;
    std::string text; // string literal or name
    BinOp op = BinOp::Add;
    ExprPtr lhs, rhs;
    Span span;
};

struct Process;
using ProcPtr = std::shared_ptr<const Process>;

// Argument of send / put / cell: a name, a basic-value expression, or a
// closure `x. P` that is spawned later.
struct Arg {
    enum class Kind { Name, Value, Closure };
    Kind kind = Kind::Value;
    std::string name;
    ExprPtr expr;
    std::string bound;
    ProcPtr body;
};

namespace node {
struct Inert {};
struct Forward { std::string a, b; };
struct Par { ProcPtr left, right; };
// left sees chan : type, right sees chan : dual(type). type may be null (letc hole).
struct Cut { std::string chan; TypePtr type; ProcPtr left, right; };
// Surface `letc x:A { P }; Q`. desugar turns it into Cut.
struct LetC { std::string chan; TypePtr type; ProcPtr left, right; };
struct Share { std::string chan; ProcPtr left, right; };
struct Call {
    std::string name;
    std::vector<TypePtr> type_args;
    std::vector<std::string> linear;
    std::vector<ExprPtr> exponential;
};
struct Send { std::string chan; Arg arg; ProcPtr next; };
struct Recv { std::string chan, bound; ProcPtr next; };
struct Select { std::string label, chan; ProcPtr next; };
struct CaseBranch { std::string label; ProcPtr body; Span span; };
struct Case { std::string chan; std::vector<CaseBranch> branches; };
struct Close { std::string chan; ProcPtr next; };
struct Wait { std::string chan; ProcPtr next; };
struct Serve { std::string chan, bound; ProcPtr body; };
struct CallRepl { std::string chan, bound; ProcPtr next; };
struct AffineIntro { std::string chan; ProcPtr next; };
struct Use { std::string chan; ProcPtr next; };
struct Discard { std::string chan; ProcPtr next; };
struct Drop { std::string chan; ProcPtr next; };
// Surface `release c`; desugars to Drop.
struct Release { std::string chan; ProcPtr next; };
struct CellNew { std::string chan; Arg init; };
struct Take { std::string chan, bound; ProcPtr next; };
struct Put { std::string chan; Arg arg; ProcPtr next; };
struct If { ExprPtr cond; ProcPtr then_branch, else_branch; };
struct Print { ExprPtr expr; bool newline = false; ProcPtr next; };
struct Sleep { ExprPtr ticks; ProcPtr next; };
} // namespace node

using ProcessNode = std::variant<node::Inert, node::Forward, node::Par, node::Cut, node::LetC, node::Share,
                                 node::Call, node::Send, node::Recv, node::Select, node::Case, node::Close,
                                 node::Wait, node::Serve, node::CallRepl, node::AffineIntro, node::Use,
                                 node::Discard, node::Drop, node::Release, node::CellNew, node::Take,
                                 node::Put, node::If, node::Print, node::Sleep>;

struct Process {
    ProcessNode node;
    Span span;
};

inline ProcPtr make_process(ProcessNode n, Span span) {
    return std::make_shared<const Process>(Process{std::move(n), std::move(span)});
}

enum class RecFlag { None, Rec, GenRec, Corec };

struct Param {
    std::string name;
    TypePtr type;
    Span span;
};

struct ProcDecl {
    std::string name;
    RecFlag rec = RecFlag::None;
    std::vector<std::string> type_params;
    std::vector<Param> linear;
    std::vector<Param> exponential;
    ProcPtr body;
    Span span;
};

struct TypeDecl {
    RecFlag rec = RecFlag::None;
    std::vector<TypeDef> group;
    Span span;
};

using Decl = std::variant<ProcDecl, TypeDecl>;

} // namespace clls
