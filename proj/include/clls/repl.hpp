#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "clls/ast.hpp"
#include "clls/runtime.hpp"

namespace clls {

// Interactive session. Declarations accumulate; declaring a name again
// replaces the earlier declaration. `name(args;values);;` checks the session
// and runs `name`.
class Repl {
public:
    explicit Repl(RunOptions base = {});

    struct Reply {
        std::string text;
        bool quit = false;
    };

    // One complete input, usually ending in ";;".
    Reply feed(const std::string& input);

    // Reads inputs from `in` until :quit or end of input. Output of runs is
    // streamed to `out` as it is produced.
    void run(std::istream& in, std::ostream& out);

    const std::vector<Decl>& declarations() const { return decls_; }

private:
    void declare(std::vector<Decl> decls, std::string& text);

    RunOptions base_;
    std::vector<Decl> decls_;
    std::ostream* live_ = nullptr;
};

} // namespace clls
