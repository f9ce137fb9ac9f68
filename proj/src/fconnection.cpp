#include "jetfield/fconnection.hpp"

#include <stdexcept>

namespace jf {

std::string phi_name(const std::string& top_sym) { return "phi_" + top_sym; }

std::vector<std::string> phi_params(const SectionSystem& sys) {
    std::vector<std::string> p = sys.base_symbols();
    for (auto& y : sys.fibre_symbols()) p.push_back(y);
    return p;
}

Expr phi(const SectionSystem& sys, const std::string& top_sym,
         const std::string& deriv_coord) {
    auto params = phi_params(sys);
    std::vector<Expr> args;
    std::vector<int> derivs(params.size(), 0);
    bool found = deriv_coord.empty();
    for (size_t k = 0; k < params.size(); ++k) {
        args.push_back(symbol(params[k]));
        if (params[k] == deriv_coord) {
            derivs[k] = 1;
            found = true;
        }
    }
    if (!found) throw std::invalid_argument("phi: unknown coordinate " + deriv_coord);
    return opaque(phi_name(top_sym), std::move(args), std::move(derivs));
}

Expr apply_template(const SectionSystem& sys, const Expr& tmpl,
                    const EvaluationMap& body) {
    auto params = phi_params(sys);
    Expr out = tmpl;
    for (auto& a : sys.top_symbols()) {
        auto it = body.find(a);
        if (it == body.end())
            throw std::invalid_argument("apply_template: body missing " + a);
        out = expand_opaque(out, phi_name(a), params, it->second);
    }
    return out;
}

namespace {

// walk a canonical tree looking for phi applications; report any base-slot
// derivative (the horizontal-order condition) through `offender`
bool phi_base_derivs(const Expr& e, size_t base_count, Expr* offender) {
    const ExprNode& n = e.node();
    if (n.kind == Kind::Opaque && n.name.rfind("phi_", 0) == 0) {
        for (size_t k = 0; k < n.derivs.size() && k < base_count; ++k)
            if (n.derivs[k] > 0) {
                if (offender) *offender = e;
                return true;
            }
    }
    for (auto& arg : n.args)
        if (phi_base_derivs(arg, base_count, offender)) return true;
    return false;
}

void check_template(const SectionSystem& sys, const std::string& a,
                    const std::string& lam, const Expr& tmpl) {
    auto params = phi_params(sys);
    std::map<std::string, int> ops;
    collect_opaques(tmpl, ops);
    for (auto& [name, arity] : ops) {
        if (name.rfind("phi_", 0) != 0) continue;
        std::string top = name.substr(4);
        bool known = false;
        for (auto& z : sys.top_symbols()) known = known || z == top;
        if (!known || arity != (int)params.size())
            throw std::invalid_argument("recipe (" + a + "," + lam +
                                        "): malformed section symbol " + name);
    }
    Expr bad;
    if (phi_base_derivs(tmpl, sys.base_symbols().size(), &bad))
        throw std::invalid_argument("recipe (" + a + "," + lam +
                                    ") has horizontal order > 0: " + bad.str());
}

}  // namespace

void OperatorConnection::validate() const {
    sys.validate();
    for (auto& a : sys.top_symbols()) {
        auto it = recipe.find(a);
        if (it == recipe.end())
            throw std::invalid_argument("connection recipe missing row " + a);
        for (auto& lam : sys.base_symbols()) {
            auto jt = it->second.find(lam);
            if (jt == it->second.end())
                throw std::invalid_argument("connection recipe missing entry (" + a +
                                            "," + lam + ")");
            check_template(sys, a, lam, jt->second);
        }
    }
}

OperatorConnection OperatorConnection::make(
    SectionSystem sys, std::map<std::string, std::map<std::string, Expr>> recipe) {
    OperatorConnection K{std::move(sys), std::move(recipe)};
    K.validate();
    return K;
}

OperatorRecipe operator_from_connection(const OperatorConnection& K) {
    OperatorRecipe D;
    for (auto& a : K.sys.top_symbols())
        for (auto& lam : K.sys.base_symbols())
            D.entries[a][lam] = sub(phi(K.sys, a, lam), K.recipe.at(a).at(lam));
    return D;
}

OperatorConnection connection_from_operator(const SectionSystem& sys,
                                            const OperatorRecipe& D) {
    std::map<std::string, std::map<std::string, Expr>> recipe;
    for (auto& a : sys.top_symbols()) {
        auto it = D.entries.find(a);
        if (it == D.entries.end())
            throw std::invalid_argument("operator recipe missing row " + a);
        for (auto& lam : sys.base_symbols()) {
            auto jt = it->second.find(lam);
            if (jt == it->second.end())
                throw std::invalid_argument("operator recipe missing entry (" + a + "," +
                                            lam + ")");
            recipe[a][lam] = sub(phi(sys, a, lam), jt->second);
        }
    }
    return OperatorConnection::make(sys, std::move(recipe));
}

bool CovariantDifferentialResult::is_zero() const {
    for (auto& [a, row] : entries)
        for (auto& [lam, e] : row)
            if (!e.is_zero()) return false;
    return true;
}

CovariantDifferentialResult covariant_differential(const OperatorConnection& K,
                                                   const ParameterSection& sigma) {
    EvaluationMap body = apply_section(K.sys, sigma);
    CovariantDifferentialResult out;
    for (auto& a : K.sys.top_symbols())
        for (auto& lam : K.sys.base_symbols())
            out.entries[a][lam] =
                sub(partial(body.at(a), lam),
                    apply_template(K.sys, K.recipe.at(a).at(lam), body));
    return out;
}

bool is_linear(const OperatorConnection& K) {
    if (!K.sys.vector_bundle)
        throw std::invalid_argument("is_linear: system not a vector bundle");
    auto params = phi_params(K.sys);
    std::vector<Expr> arg_syms;
    for (auto& p : params) arg_syms.push_back(symbol(p));
    Expr alpha = symbol("alpha_lin");

    EvaluationMap phi1, phi2, combo;
    for (auto& a : K.sys.top_symbols()) {
        Expr p1 = opaque("phi1_" + a, arg_syms);
        Expr p2 = opaque("phi2_" + a, arg_syms);
        phi1[a] = p1;
        phi2[a] = p2;
        combo[a] = add(mul(alpha, p1), p2);
    }
    for (auto& a : K.sys.top_symbols())
        for (auto& lam : K.sys.base_symbols()) {
            const Expr& tmpl = K.recipe.at(a).at(lam);
            Expr lhs = apply_template(K.sys, tmpl, combo);
            Expr rhs = add(mul(alpha, apply_template(K.sys, tmpl, phi1)),
                           apply_template(K.sys, tmpl, phi2));
            if (!(lhs == rhs)) return false;
        }
    return true;
}

}  // namespace jf
