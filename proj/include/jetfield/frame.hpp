#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jetfield/expr.hpp"
#include "jetfield/parse.hpp"

namespace jf {

// Coordinate roles of a (possibly fibred, possibly parametrized) chart:
// base x^lam, fibre y^i, parameter w^A, second fibre z^a.
enum class Role { Base, Fibre, Param, Fibre2 };

const char* role_name(Role r);

struct Frame {
    // role blocks must be contiguous; symbols unique
    std::vector<std::pair<std::string, Role>> coords;

    std::vector<std::string> symbols() const;
    std::vector<std::string> of_role(Role r) const;
    bool contains(const std::string& sym) const;
    Role role_of(const std::string& sym) const;

    SymbolTable symbol_table(std::map<std::string, int> opaques = {}) const;

    void validate() const;  // throws std::invalid_argument

    static Frame make(std::vector<std::pair<std::string, Role>> coords);

    friend bool operator==(const Frame& a, const Frame& b) {
        return a.coords == b.coords;
    }
};

// frames for G -> F -> B sharing base/fibre symbols
struct DoubleFibredFrame {
    Frame base;   // x only
    Frame total;  // x, y
    Frame top;    // x, y, z

    static DoubleFibredFrame make(Frame b, Frame f, Frame g);
};

std::string dotted_name(const std::string& sym);

// a frame together with its induced dotted (velocity) twins
struct TangentFrame {
    Frame frame;
    std::vector<std::string> dotted;  // aligned with frame.coords

    // all symbols, originals then dotted
    SymbolTable symbol_table(std::map<std::string, int> opaques = {}) const;
};

TangentFrame induce_tangent(const Frame& frame);

// Block-triangular chart change: xbar = xbar(x), ybar = ybar(x,y),
// wbar = wbar(x,w), zbar = zbar(x,y,z). General diffeomorphisms are
// rejected up front.
struct ChartChange {
    Frame source;
    Frame target;          // same role-block dimensions as source
    Binding replacement;   // target symbol -> Expr over source symbols

    // numeric Jacobian probe per role block at `points` random points
    bool generically_invertible(std::uint64_t seed = 0, int points = 8,
                                double tol = 1e-9) const;

    static ChartChange make(Frame source, Frame target, Binding replacement);
    static ChartChange identity(const Frame& f);
};

ChartChange compose(const ChartChange& first, const ChartChange& second);

// lift a chart change to the tangent frames: the dotted replacements are
// total differentials of the undotted ones
ChartChange prolong_chart_change(const ChartChange& ch);

}  // namespace jf
