#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "jetfield/expr.hpp"
#include "jetfield/rng.hpp"

namespace jf {

// Random polynomial of total degree <= 2 in `arity` variables, serving as
// a concrete stand-in for an opaque smooth symbol during numeric probes.
// Derivatives of every order are exact.
struct PolyRealization {
    int arity = 0;
    std::vector<std::pair<std::vector<int>, double>> terms;  // exponents -> coeff

    static PolyRealization make(int arity, std::mt19937_64& g);

    double operator()(std::span<const int> derivs, std::span<const double> args) const;
};

// one realization per opaque symbol appearing in `e` (merged into `out`)
void realize_opaques(const Expr& e, std::mt19937_64& g,
                     std::map<std::string, OpaqueFn>& out);

}  // namespace jf
