#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace clls {

struct Span {
    std::string file;
    int line = 0;
    int col = 0;
};

struct Diagnostic {
    std::string rule;
    std::string message;
    Span span;

    // file:line:col: rule: message
    std::string format() const;
};

// Raised by the lexer, parser and type utilities on the first hard error.
class DiagnosticError : public std::runtime_error {
public:
    explicit DiagnosticError(Diagnostic d);
    const Diagnostic& diagnostic() const { return diag_; }

private:
    Diagnostic diag_;
};

[[noreturn]] void fail(const std::string& rule, const std::string& message, const Span& span = {});

std::string format_all(const std::vector<Diagnostic>& diags);

} // namespace clls
