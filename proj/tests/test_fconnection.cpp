#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "jetfield/fconnection.hpp"
#include "jetfield/parse.hpp"
#include "jetfield/rng.hpp"
#include "test_util.hpp"

using namespace jf;

namespace {

std::map<std::string, int> kOps = {{"K", 1}, {"L", 1}, {"Gam", 1},
                                   {"phi_z0", 2}};

Expr P(const std::string& s) {
    SymbolTable t;
    t.coordinates = {"x0", "y0", "z0", "w0", "w1"};
    t.opaques = kOps;
    return parse_expr(s, t);
}

SectionSystem linear_sections() {
    Frame B = Frame::make({{"x0", Role::Base}});
    Frame F = Frame::make({{"x0", Role::Base}, {"y0", Role::Fibre}});
    Frame G = Frame::make(
        {{"x0", Role::Base}, {"y0", Role::Fibre}, {"z0", Role::Fibre2}});
    Frame S = Frame::make({{"w0", Role::Param}});
    return SectionSystem::make(DoubleFibredFrame::make(B, F, G), S,
                               {{"z0", P("w0*y0")}}, true, true);
}

OperatorConnection zero_connection() {
    SectionSystem sys = linear_sections();
    return OperatorConnection::make(sys, {{"z0", {{"x0", P("0")}}}});
}

}  // namespace

TEST_CASE("phi symbols and template instantiation") {
    SectionSystem sys = linear_sections();
    CHECK(phi_name("z0") == "phi_z0");
    CHECK(phi_params(sys) == std::vector<std::string>{"x0", "y0"});
    CHECK(phi(sys, "z0") == P("phi_z0(x0,y0)"));
    CHECK(phi(sys, "z0", "y0") == P("D[2] phi_z0(x0,y0)"));
    CHECK_THROWS(phi(sys, "z0", "q9"));

    EvaluationMap body = {{"z0", P("K(x0)*y0")}};
    CHECK(apply_template(sys, P("Gam(x0)*phi_z0(x0,y0)"), body) ==
          P("Gam(x0)*K(x0)*y0"));
    // fibre derivatives of phi differentiate the body
    CHECK(apply_template(sys, P("D[2] phi_z0(x0,y0)"), body) == P("K(x0)"));
}

TEST_CASE("recipe validation enforces horizontal order one") {
    SectionSystem sys = linear_sections();
    CHECK_NOTHROW(OperatorConnection::make(
        sys, {{"z0", {{"x0", P("Gam(x0)*phi_z0(x0,y0)")}}}}));
    // fibre derivatives are fine
    CHECK_NOTHROW(OperatorConnection::make(
        sys, {{"z0", {{"x0", P("y0 * D[2] phi_z0(x0,y0)")}}}}));
    // base derivatives of the section symbol are not
    CHECK_THROWS(OperatorConnection::make(
        sys, {{"z0", {{"x0", P("D[1] phi_z0(x0,y0)")}}}}));
    // wrong arity
    std::map<std::string, int> bad = {{"phi_z0", 1}};
    SymbolTable t;
    t.coordinates = {"x0", "y0"};
    t.opaques = bad;
    CHECK_THROWS(OperatorConnection::make(
        sys, {{"z0", {{"x0", parse_expr("phi_z0(x0)", t)}}}}));
    CHECK_THROWS(OperatorConnection::make(sys, {}));
}

TEST_CASE("covariant differential against the zero connection") {
    CovariantDifferentialResult r =
        covariant_differential(zero_connection(), {{{"w0", P("K(x0)")}}});
    CHECK(r.entries.at("z0").at("x0") == P("D[1] K(x0)*y0"));
    CHECK(!r.is_zero());

    // constant sections are parallel for the zero connection
    CHECK(covariant_differential(zero_connection(), {{{"w0", P("3")}}}).is_zero());
}

TEST_CASE("covariant differential with a linear Christoffel recipe") {
    SectionSystem sys = linear_sections();
    OperatorConnection K = OperatorConnection::make(
        sys, {{"z0", {{"x0", P("Gam(x0)*phi_z0(x0,y0)")}}}});
    CovariantDifferentialResult r =
        covariant_differential(K, {{{"w0", P("K(x0)")}}});
    CHECK(r.entries.at("z0").at("x0") ==
          P("D[1] K(x0)*y0 - Gam(x0)*K(x0)*y0"));
}

TEST_CASE("a section is parallel for the connection built from its derivative") {
    SectionSystem sys = linear_sections();
    // recipe tuned so that the covariant derivative of w0 = K(x0) cancels
    OperatorConnection K = OperatorConnection::make(
        sys, {{"z0", {{"x0", P("D[1] K(x0)*y0")}}}});
    CHECK(covariant_differential(K, {{{"w0", P("K(x0)")}}}).is_zero());
    // other sections are not parallel
    CHECK(!covariant_differential(K, {{{"w0", P("L(x0)")}}}).is_zero());
}

TEST_CASE("operator and connection presentations are inverse to each other") {
    SectionSystem sys = linear_sections();
    OperatorConnection K = OperatorConnection::make(
        sys, {{"z0", {{"x0", P("Gam(x0)*phi_z0(x0,y0)")}}}});
    OperatorRecipe D = operator_from_connection(K);
    CHECK(D.entries.at("z0").at("x0") ==
          P("D[1] phi_z0(x0,y0) - Gam(x0)*phi_z0(x0,y0)"));
    OperatorConnection back = connection_from_operator(sys, D);
    CHECK(back.recipe.at("z0").at("x0") == K.recipe.at("z0").at("x0"));
}

TEST_CASE("round trips on random horizontal-order-one recipes") {
    SectionSystem sys = linear_sections();
    std::mt19937_64 g(41);
    std::vector<std::string> syms = {"x0", "y0"};
    std::vector<std::pair<std::string, int>> ops = {{"phi_z0", 2}, {"Gam", 1}};
    int accepted = 0;
    for (int k = 0; k < 40 && accepted < 20; ++k) {
        Expr tmpl = jftest::random_expr(g, syms, ops, 4);
        OperatorConnection K;
        try {
            K = OperatorConnection::make(sys, {{"z0", {{"x0", tmpl}}}});
        } catch (const std::invalid_argument&) {
            continue;  // random tree with a malformed phi application
        }
        ++accepted;
        OperatorConnection back =
            connection_from_operator(sys, operator_from_connection(K));
        CHECK(back.recipe.at("z0").at("x0") == K.recipe.at("z0").at("x0"));
    }
    CHECK(accepted >= 20);
}

TEST_CASE("operators of horizontal order two are rejected") {
    SectionSystem sys = linear_sections();
    OperatorRecipe D;
    D.entries["z0"]["x0"] = partial(partial(phi(sys, "z0"), "x0"), "x0");
    CHECK_THROWS_AS(connection_from_operator(sys, D), std::invalid_argument);
    try {
        connection_from_operator(sys, D);
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("phi_z0") != std::string::npos);
    }
}

TEST_CASE("linearity of recipes") {
    SectionSystem sys = linear_sections();
    CHECK(is_linear(zero_connection()));
    CHECK(is_linear(OperatorConnection::make(
        sys, {{"z0", {{"x0", P("Gam(x0)*phi_z0(x0,y0)")}}}})));
    CHECK(is_linear(OperatorConnection::make(
        sys, {{"z0", {{"x0", P("x0 * D[2] phi_z0(x0,y0)")}}}})));
    CHECK(!is_linear(OperatorConnection::make(
        sys, {{"z0", {{"x0", P("phi_z0(x0,y0)^2")}}}})));
    CHECK(!is_linear(OperatorConnection::make(
        sys, {{"z0", {{"x0", P("phi_z0(x0,y0) + x0")}}}})));

    // linear-by-construction random recipes: a(x) phi + b(x,y) d_y phi
    std::mt19937_64 g(43);
    for (int k = 0; k < 20; ++k) {
        Expr a = jftest::random_poly(g, {"x0"}, 2, 2);
        Expr b = jftest::random_poly(g, {"x0", "y0"}, 2, 2);
        Expr tmpl = add(mul(a, P("phi_z0(x0,y0)")),
                        mul(b, P("D[2] phi_z0(x0,y0)")));
        CHECK(is_linear(OperatorConnection::make(sys, {{"z0", {{"x0", tmpl}}}})));
    }

    // requires a vector bundle
    Frame B = Frame::make({{"x0", Role::Base}});
    Frame F = Frame::make({{"x0", Role::Base}, {"y0", Role::Fibre}});
    Frame G = Frame::make(
        {{"x0", Role::Base}, {"y0", Role::Fibre}, {"z0", Role::Fibre2}});
    Frame S = Frame::make({{"w0", Role::Param}, {"w1", Role::Param}});
    SectionSystem aff =
        SectionSystem::make(DoubleFibredFrame::make(B, F, G), S,
                            {{"z0", P("w0*y0 + w1")}}, false, true);
    CHECK_THROWS(is_linear(OperatorConnection::make(
        aff, {{"z0", {{"x0", P("0")}}}})));
}

TEST_CASE("covariant differential is linear for linear connections") {
    SectionSystem sys = linear_sections();
    OperatorConnection K = OperatorConnection::make(
        sys, {{"z0", {{"x0", P("Gam(x0)*phi_z0(x0,y0)")}}}});
    ParameterSection s1{{{"w0", P("K(x0)")}}};
    ParameterSection s2{{{"w0", P("L(x0)")}}};
    ParameterSection sum{{{"w0", P("K(x0) + 2*L(x0)")}}};
    Expr lhs = covariant_differential(K, sum).entries.at("z0").at("x0");
    Expr rhs = add(covariant_differential(K, s1).entries.at("z0").at("x0"),
                   mul(constant(2),
                       covariant_differential(K, s2).entries.at("z0").at("x0")));
    CHECK(lhs == rhs);
}
