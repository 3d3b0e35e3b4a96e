#include "clls/diagnostic.hpp"

namespace clls {

std::string Diagnostic::format() const {
    std::string out = span.file.empty() ? std::string("<input>") : span.file;
    out += ":" + std::to_string(span.line) + ":" + std::to_string(span.col) + ": ";
    out += rule + ": " + message;
    return out;
}

DiagnosticError::DiagnosticError(Diagnostic d) : std::runtime_error(d.format()), diag_(std::move(d)) {}

void fail(const std::string& rule, const std::string& message, const Span& span) {
    throw DiagnosticError(Diagnostic{rule, message, span});
}

std::string format_all(const std::vector<Diagnostic>& diags) {
    std::string out;
    for (const auto& d : diags) out += d.format() + "\n";
    return out;
}

} // namespace clls
