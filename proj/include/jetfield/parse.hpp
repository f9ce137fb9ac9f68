#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "jetfield/expr.hpp"

namespace jf {

struct ParseError : std::runtime_error {
    size_t offset;  // byte offset into the input
    ParseError(std::string msg, size_t off)
        : std::runtime_error(std::move(msg)), offset(off) {}
};

// symbols an expression may reference
struct SymbolTable {
    std::set<std::string> coordinates;
    std::map<std::string, int> opaques;  // name -> arity
};

// Grammar:
//   expr   := ['-'] term (('+'|'-') term)*
//   term   := factor ('*' factor)*
//   factor := base ('^' int)?
//   base   := rational | symbol | symbol '(' expr (',' expr)* ')'
//           | 'D' '[' int (',' int)* ']' symbol '(' args ')' | '(' expr ')'
// Rational literals: int ('/' int)?.  Partial indices are 1-based slots.
Expr parse_expr(const std::string& text, const SymbolTable& table);

}  // namespace jf
