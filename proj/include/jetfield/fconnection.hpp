#pragma once

#include "jetfield/expr.hpp"
#include "jetfield/section_system.hpp"

namespace jf {

// Recipes are symbolic templates over the frame coordinates and the formal
// section symbols phi_<a>(x..., y...); derivative multi-indices on the phi
// slots encode base/fibre derivatives of the section body.
std::string phi_name(const std::string& top_sym);
std::vector<std::string> phi_params(const SectionSystem& sys);
// phi_<a> applied to the frame coordinates, optionally differentiated
// along one coordinate
Expr phi(const SectionSystem& sys, const std::string& top_sym,
         const std::string& deriv_coord = "");

// instantiate a template on a concrete section body z^a = Expr(x, y)
Expr apply_template(const SectionSystem& sys, const Expr& tmpl,
                    const EvaluationMap& body);

// F-smooth connection K presented through its operator coefficients
// D-check^a_lam: templates that may use phi values and fibre derivatives
// of phi, but no base derivatives (horizontal order 1)
struct OperatorConnection {
    SectionSystem sys;
    std::map<std::string, std::map<std::string, Expr>> recipe;  // a -> lam

    void validate() const;
    static OperatorConnection make(SectionSystem sys,
                                   std::map<std::string, std::map<std::string, Expr>> recipe);
};

// the associated differential operator (D phi)^a_lam = d_lam phi^a - D-check^a_lam(phi)
struct OperatorRecipe {
    std::map<std::string, std::map<std::string, Expr>> entries;  // a -> lam
};

OperatorRecipe operator_from_connection(const OperatorConnection& K);
// inverts the above; throws std::invalid_argument naming the offending
// term when the recipe is not of horizontal order 1
OperatorConnection connection_from_operator(const SectionSystem& sys,
                                            const OperatorRecipe& D);

struct CovariantDifferentialResult {
    // (nabla sigma)^a_lam as Expr over (x, y)
    std::map<std::string, std::map<std::string, Expr>> entries;

    bool is_zero() const;
};

CovariantDifferentialResult covariant_differential(const OperatorConnection& K,
                                                   const ParameterSection& sigma);

// template linearity in phi with formal scalars; requires a vector-bundle
// system
bool is_linear(const OperatorConnection& K);

}  // namespace jf
