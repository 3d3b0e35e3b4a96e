#pragma once

#include <string>
#include <vector>

#include "clls/ast.hpp"

namespace clls {

enum class TokenKind { Keyword, Ident, Label, Int, Str, Symbol, End };

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text; // keyword/ident/symbol text, label without '#', decoded string
    std::int64_t int_value = 0;
    Span span;
};

std::vector<Token> tokenize(const std::string& source, const std::string& file = "<input>");

std::vector<Decl> parse_program(const std::string& source, const std::string& file = "<input>");

// Replaces surface-only nodes (letc, release) with their core forms.
Decl desugar(const Decl& d);
std::vector<Decl> desugar(const std::vector<Decl>& decls);
ProcPtr desugar(const ProcPtr& p);

// True if no surface-only node remains.
bool is_core(const ProcPtr& p);

struct ReplInvocation {
    std::string name;
    std::vector<TypePtr> type_args;
    std::vector<std::string> linear;
    std::vector<ExprPtr> exponential;
};

struct ReplInput {
    enum class Kind { Empty, Quit, Declarations, Invocation };
    Kind kind = Kind::Empty;
    std::vector<Decl> decls;
    ReplInvocation call;
};

ReplInput parse_repl_input(const std::string& text);

std::string pretty(const ExprPtr& e);
std::string pretty(const ProcPtr& p);
std::string pretty(const Decl& d);
std::string pretty(const std::vector<Decl>& decls);

} // namespace clls
