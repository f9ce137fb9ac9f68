#pragma once

#include <functional>
#include <optional>

#include "jetfield/curves.hpp"
#include "jetfield/expr.hpp"
#include "jetfield/frame.hpp"
#include "jetfield/map_system.hpp"

namespace jf {

// system of sections of the double fibred manifold G -> F -> B, with
// parameter block w^A over B and evaluation map z^a = eps^a(x, w, y)
struct SectionSystem {
    DoubleFibredFrame frames;
    Frame params;  // w^A, role Param
    EvaluationMap eval;
    bool vector_bundle = false;  // eval linear in the w-block
    bool affine_bundle = false;  // eval affine in the w-block

    std::vector<std::string> base_symbols() const { return frames.base.symbols(); }
    std::vector<std::string> fibre_symbols() const {
        return frames.total.of_role(Role::Fibre);
    }
    std::vector<std::string> top_symbols() const {
        return frames.top.of_role(Role::Fibre2);
    }

    void validate() const;
    static SectionSystem make(DoubleFibredFrame frames, Frame params,
                              EvaluationMap eval, bool vector_bundle = false,
                              bool affine_bundle = false);
};

// sigma: w^A -> Expr(x)
struct ParameterSection {
    std::map<std::string, Expr> components;
};

// sigma-bar: F -> G as z^a = Expr(x, y)
EvaluationMap apply_section(const SectionSystem& sys, const ParameterSection& sigma);

// lifted fibred manifold F| = S x_B F over S over B: coordinates (x, w, y)
// with w joining the base of the lifted fibration
Frame lift_fibred(const SectionSystem& sys);

// tangent vector of the section space as the pair (u, Xi_u); stored data is
// (base point, u^mu, Xi^a_0) with the forced d_y block implicit
struct SectionTangentRep {
    Binding base_point;               // x^mu -> value (Expr)
    std::map<std::string, Expr> u;    // x^mu -> u^mu
    std::map<std::string, Expr> xi0;  // z^a -> Xi^a_0 over fibre coordinates
    Binding section_point;            // w^A -> value at the attachment point

    bool vertical() const;
};

// the section body s*(eps) at the rep's attachment point, z^a = Expr(y)
EvaluationMap attachment_body(const SectionSystem& sys, const SectionTangentRep& rep);

// forced block coefficients: d_z^a = sum_i partial_i(s*(eps)^a) d_y^i
EvaluationMap forced_block(const SectionSystem& sys, const SectionTangentRep& rep);

// representation induced by a symbolic curve into the lifted parameter
// space (components for x^mu and w^A) at lam0
SectionTangentRep tangent_rep_section(const SectionSystem& sys, const Curve& chat,
                                      const Rational& lam0);

SectionTangentRep rep_scale(const SectionSystem& sys, const Rational& r,
                            const SectionTangentRep& rep);
SectionTangentRep rep_add(const SectionSystem& sys, const SectionTangentRep& a,
                          const SectionTangentRep& b);

// solve eps(w, .) = body for the parameter values w^A -> Expr(x); requires
// eval affine in w with rational y-monomial signatures
std::optional<ParameterSection> match_parameters(const SectionSystem& sys,
                                                 const EvaluationMap& body);

struct VerticalSplit {
    EvaluationMap xi_bar;                        // z^a = Xi^a_0
    std::optional<ParameterSection> parameter;   // s-hat with eps_s-hat = xi_bar
};

// vector-bundle case: a vertical rep is a section F_b -> G_b
VerticalSplit vertical_split(const SectionSystem& sys, const SectionTangentRep& rep);

// transform a rep through a chart change of the top frame (x, y, z):
// Xi-bar^a_0 = partial_b zbar^a Xi^b_0 + partial_mu zbar^a u^mu, partials
// evaluated on the attachment section; u transforms by the base Jacobian
SectionTangentRep transform_rep(const SectionSystem& sys, const SectionTangentRep& rep,
                                const ChartChange& ch);

// transform-then-operate equals operate-then-transform, exact
bool chart_invariance_check(const SectionSystem& sys, const SectionTangentRep& rep1,
                            const SectionTangentRep& rep2, const Rational& r,
                            const ChartChange& ch);

// ETsigma: u |-> (u, Xi_u) over a symbolic base vector field u^mu
SectionTangentRep tangent_prolong_section(const SectionSystem& sys,
                                          const ParameterSection& sigma,
                                          const std::map<std::string, Expr>& u);

// a differential operator on section bodies
using SectionOperator = std::function<EvaluationMap(const EvaluationMap&)>;

// compatible operator lifted to parameter sections: sigma -> parameters of
// D(sigma-bar) in sysB; nullopt (with a witness in *err) when some supplied
// instance leaves sysB's selected sheaf
std::optional<std::function<std::optional<ParameterSection>(const ParameterSection&)>>
hat_operator(const SectionSystem& sysA, const SectionSystem& sysB,
             const SectionOperator& op, const std::vector<ParameterSection>& instances,
             std::string* err = nullptr);

}  // namespace jf
