#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "jetfield/expr.hpp"
#include "jetfield/frame.hpp"
#include "jetfield/section_system.hpp"

namespace jf {

// coefficient table i -> lam -> Expr
using CoeffTable = std::map<std::string, std::map<std::string, Expr>>;

// connection of a fibred manifold F -> B: c = d^lam (x) (partial_lam + c^i_lam partial_i)
struct Connection {
    Frame fibred;  // x Base, y Fibre
    CoeffTable coeff;

    void validate() const;
    static Connection make(Frame fibred, CoeffTable coeff);
};

// system of connections: coefficients eps^i_lam(x, w, y)
struct ConnectionSystem {
    Frame fibred;
    Frame params;  // w^A, role Param
    CoeffTable coeff;

    void validate() const;
    static ConnectionSystem make(Frame fibred, Frame params, CoeffTable coeff);
};

// connection of the lifted fibred manifold F| = C x_B F over C
struct UpperConnection {
    Frame fibred;
    Frame params;
    CoeffTable base_leg;   // c|^i_lam
    CoeffTable param_leg;  // c|^i_A
};

// antisymmetric curvature table over the lifted base indices, paper
// normalization R^i_ab = -2 (A_ab - A_ba), A_ab = d_a c^i_b + c^j_a d_j c^i_b
struct Curvature {
    std::vector<std::string> base_indices;  // base coords, then params if upper
    // entries stored for a < b in base_indices order
    std::vector<std::tuple<std::string, std::string, std::string, Expr>> entries;
    // (fibre i, index a, index b, value)

    Expr at(const std::string& fibre, const std::string& a, const std::string& b) const;
};

UpperConnection make_universal(const ConnectionSystem& sys);
ConnectionSystem base_component(const UpperConnection& up);

// parameter leg vanishes in the given chart and stays zero under every
// supplied block-triangular chart change of the lifted frame
bool is_reducible(const UpperConnection& up, const std::vector<ChartChange>& charts);

Connection pullback(const ConnectionSystem& sys, const ParameterSection& gamma);
Connection pullback(const UpperConnection& up, const ParameterSection& gamma);

Curvature curvature(const Connection& conn);
Curvature curvature(const UpperConnection& up);

// pullback of an upper curvature along gamma: parameter legs contract with
// partial_lam gamma^A
Curvature pullback_curvature(const Curvature& R, const UpperConnection& up,
                             const ParameterSection& gamma);

struct UniversalReport {
    bool connection_identity = false;
    bool curvature_identity = false;
    // residuals that must canonicalize to zero, with labels
    std::vector<std::pair<std::string, Expr>> residuals;
};

UniversalReport verify_universal(const ConnectionSystem& sys,
                                 const ParameterSection& gamma);

// exterior derivative of a 1-form given as ordered (coord, coefficient)
// pairs: (d alpha)_ab = partial_a a_b - partial_b a_a, entries for a < b
std::vector<std::tuple<std::string, std::string, Expr>> exterior_derivative(
    const std::vector<std::pair<std::string, Expr>>& one_form);

struct LiouvilleReport {
    int dim = 0;
    // Liouville form coefficients: d^mu -> w_mu (w identified with xdot)
    std::vector<std::pair<std::string, Expr>> liouville;
    // symplectic form -d(lambda), entries (a, b, value)
    std::vector<std::tuple<std::string, std::string, Expr>> omega;
    // universal curvature entries of the t-fibre
    std::vector<std::tuple<std::string, std::string, Expr>> universal_curvature;
    Rational normalization{2};  // curvature = normalization * omega
    bool lambda_matches = false;
    bool omega_matches_curvature = false;
};

// the R-principal bundle M x R -> M: connections are 1-forms, the universal
// connection is the Liouville form, the universal curvature the symplectic form
LiouvilleReport liouville_check(int dim_m);

}  // namespace jf
