#include <cctype>
#include <limits>
#include <set>

#include "clls/syntax.hpp"

namespace clls {

namespace {

const std::set<std::string> kKeywords = {
    "proc", "type", "rec", "corec", "gen_rec", "and",
    "close", "wait", "send", "recv", "pair", "offer", "choice", "case", "of",
    "fwd", "cut", "letc", "par", "share", "call", "affine", "coaffine", "use",
    "discard", "drop", "release", "cell", "take", "put", "state", "statel",
    "usage", "usagel", "lint", "lstring", "Int", "if", "then", "else",
    "print", "println", "sleep", "mod",
};

// Longest match first.
const char* const kSymbols[] = {
    ";;", "[]", "||", "<-", "->", "==",
    ";", "|", "(", ")", "{", "}", "<", ">", ",", ":", ".", "~", "!", "?", "+", "-", "*",
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; }

} // namespace

std::vector<Token> tokenize(const std::string& src, const std::string& file) {
    std::vector<Token> out;
    size_t i = 0;
    int line = 1, col = 1;
    auto advance = [&](size_t n) {
        for (size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if ((c == '-' && i + 1 < src.size() && src[i + 1] == '-') ||
            (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
            Span start{file, line, col};
            advance(2);
            while (i < src.size() && !(src[i] == '*' && i + 1 < src.size() && src[i + 1] == '/')) advance(1);
            if (i >= src.size()) fail("lexical", "unterminated block comment", start);
            advance(2);
            continue;
        }
        Token tok;
        tok.span = Span{file, line, col};
        if (ident_start(c)) {
            size_t j = i;
            while (j < src.size() && ident_char(src[j])) ++j;
            tok.text = src.substr(i, j - i);
            tok.kind = kKeywords.count(tok.text) ? TokenKind::Keyword : TokenKind::Ident;
            advance(j - i);
        } else if (c == '#') {
            size_t j = i + 1;
            if (j >= src.size() || !ident_start(src[j])) fail("lexical", "expected label name after '#'", tok.span);
            while (j < src.size() && ident_char(src[j])) ++j;
            tok.kind = TokenKind::Label;
            tok.text = src.substr(i + 1, j - i - 1);
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            std::int64_t v = 0;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                int d = src[j] - '0';
                if (v > (std::numeric_limits<std::int64_t>::max() - d) / 10)
                    fail("lexical", "integer literal out of range", tok.span);
                v = v * 10 + d;
                ++j;
            }
            tok.kind = TokenKind::Int;
            tok.int_value = v;
            tok.text = src.substr(i, j - i);
            advance(j - i);
        } else if (c == '"') {
            advance(1);
            std::string s;
            while (true) {
                if (i >= src.size() || src[i] == '\n') fail("lexical", "unterminated string literal", tok.span);
                char d = src[i];
                if (d == '"') {
                    advance(1);
                    break;
                }
                if (d == '\\') {
                    if (i + 1 < src.size() && (src[i + 1] == '"' || src[i + 1] == '\\')) {
                        s += src[i + 1];
                        advance(2);
                        continue;
                    }
                    fail("lexical", "unsupported escape in string literal", Span{file, line, col});
                }
                s += d;
                advance(1);
            }
            tok.kind = TokenKind::Str;
            tok.text = std::move(s);
        } else {
            bool matched = false;
            for (const char* sym : kSymbols) {
                std::string s(sym);
                if (src.compare(i, s.size(), s) == 0) {
                    tok.kind = TokenKind::Symbol;
                    tok.text = s;
                    advance(s.size());
                    matched = true;
                    break;
                }
            }
            if (!matched) fail("lexical", std::string("unexpected character '") + c + "'", tok.span);
        }
        out.push_back(std::move(tok));
    }
    Token end;
    end.kind = TokenKind::End;
    end.span = Span{file, line, col};
    out.push_back(end);
    return out;
}

} // namespace clls
