#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "jetfield/expr.hpp"
#include "jetfield/parse.hpp"
#include "jetfield/realize.hpp"
#include "jetfield/rng.hpp"
#include "test_util.hpp"

using namespace jf;

namespace {

SymbolTable table() {
    SymbolTable t;
    t.coordinates = {"x", "w", "y", "x0", "w0", "y0", "w1"};
    t.opaques = {{"f", 1}, {"g", 1}, {"eps", 3}, {"gam", 1}};
    return t;
}

Expr P(const std::string& s) { return parse_expr(s, table()); }

// rebuild an expression bottom-up through the public constructors; the
// result must be bit-identical to the input (canonical form is a fixpoint)
Expr rebuild(const Expr& e) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Constant: return constant(n.value);
        case Kind::Symbol: return symbol(n.name);
        case Kind::Power: return pow(rebuild(n.args[0]), n.exponent);
        case Kind::Opaque: {
            std::vector<Expr> args;
            for (auto& a : n.args) args.push_back(rebuild(a));
            return opaque(n.name, std::move(args), n.derivs);
        }
        case Kind::Product: {
            Expr r = constant(1);
            for (auto& a : n.args) r = mul(r, rebuild(a));
            return r;
        }
        case Kind::Sum: {
            Expr r = constant(0);
            for (auto& a : n.args) r = add(r, rebuild(a));
            return r;
        }
    }
    return e;
}

}  // namespace

TEST_CASE("parse basics") {
    CHECK(P("w0*y0 + w1") == add(mul(symbol("w0"), symbol("y0")), symbol("w1")));
    CHECK(P("w0^3 * y0") == mul(pow(symbol("w0"), 3), symbol("y0")));
    Expr e = P("eps(x0,w0,y0)");
    CHECK(e.kind() == Kind::Opaque);
    CHECK(e.node().name == "eps");
    CHECK(e.node().args.size() == 3);
    CHECK(P("1/2 * w") == mul(constant(Rational(1, 2)), symbol("w")));
    CHECK(P("-w + w").is_zero());
    CHECK(P("D[1,2] eps(x0,w0,y0)").node().derivs == std::vector<int>{1, 1, 0});
}

TEST_CASE("parse errors carry positions") {
    CHECK_THROWS_AS(P("w0 +"), ParseError);
    CHECK_THROWS_AS(P("nope"), ParseError);
    CHECK_THROWS_AS(P("eps(x0,w0)"), ParseError);  // arity mismatch
    CHECK_THROWS_AS(P("w0 w1"), ParseError);       // trailing input
    try {
        P("w0 + nope");
    } catch (const ParseError& e) {
        CHECK(e.offset >= 5);
    }
}

TEST_CASE("canonical equality") {
    CHECK(P("(w+y)^2") == P("w^2 + 2*w*y + y^2"));
    CHECK(P("w^2*y") != P("w^3*y"));
    CHECK(P("w*(y + x)") == P("w*y + w*x"));
    CHECK(P("0*f(x)").is_zero());
    CHECK(P("f(x) - f(x)").is_zero());
    CHECK(P("2/4") == P("1/2"));
}

TEST_CASE("canonical form is a constructor fixpoint") {
    std::mt19937_64 g(7);
    std::vector<std::string> syms = {"x", "w", "y"};
    std::vector<std::pair<std::string, int>> ops = {{"f", 1}, {"eps", 3}};
    for (int k = 0; k < 1000; ++k) {
        Expr e = jftest::random_expr(g, syms, ops, 6);
        CHECK(rebuild(e) == e);
    }
}

TEST_CASE("partial: power and chain rule") {
    CHECK(partial(P("w^3*y"), "w") == P("3*w^2*y"));
    CHECK(partial(P("f(g(x))"), "x") == P("D[1] f(g(x)) * D[1] g(x)"));
    CHECK(partial(P("w"), "y").is_zero());
    CHECK(partial(P("eps(x,w,y)"), "w") == P("D[2] eps(x,w,y)"));
}

TEST_CASE("substitution after differentiation does not re-differentiate") {
    Expr d2 = partial(P("eps(x,w,y)"), "w");
    Expr sub_d2 = substitute(d2, {{"w", P("gam(x)")}});
    CHECK(sub_d2 == P("D[2] eps(x,gam(x),y)"));
}

TEST_CASE("pullback derivative identity") {
    // d/dx eps(x, gam(x), y) = (D1 eps) + (D2 eps)*(D1 gam)
    Expr pulled = substitute(P("eps(x,w,y)"), {{"w", P("gam(x)")}});
    Expr lhs = partial(pulled, "x");
    Expr rhs = P("D[1] eps(x,gam(x),y) + D[2] eps(x,gam(x),y) * D[1] gam(x)");
    CHECK(lhs == rhs);
}

TEST_CASE("linearity, Clairaut and the substitution chain law") {
    std::mt19937_64 g(11);
    std::vector<std::string> syms = {"x", "w", "y"};
    std::vector<std::pair<std::string, int>> ops = {{"f", 1}, {"g", 1}, {"eps", 3}};
    for (int k = 0; k < 60; ++k) {
        Expr e1 = jftest::random_expr(g, syms, ops, 4);
        Expr e2 = jftest::random_expr(g, syms, ops, 4);
        Rational a = draw_rational(g);
        // linearity
        CHECK(partial(add(mul(constant(a), e1), e2), "w") ==
              add(mul(constant(a), partial(e1, "w")), partial(e2, "w")));
        // Clairaut
        CHECK(partial(partial(e1, "w"), "y") == partial(partial(e1, "y"), "w"));
        // chain law for w -> g(x)
        Expr gg = P("g(x)");
        Expr lhs = partial(substitute(e1, {{"w", gg}}), "x");
        Expr rhs = add(substitute(partial(e1, "x"), {{"w", gg}}),
                       mul(substitute(partial(e1, "w"), {{"w", gg}}), partial(gg, "x")));
        CHECK(lhs == rhs);
    }
}

TEST_CASE("numeric evaluation") {
    CHECK(eval_numeric(P("w^2*y"), {{"w", 2.0}, {"y", 3.0}}) == doctest::Approx(12.0));
    CHECK(eval_numeric(partial(P("w^2*y"), "w"), {{"w", 2.0}, {"y", 3.0}}) ==
          doctest::Approx(12.0));
}

TEST_CASE("numeric consistency of partial with central differences") {
    std::mt19937_64 g(23);
    std::vector<std::string> syms = {"x", "w", "y"};
    std::vector<std::pair<std::string, int>> ops = {{"f", 1}, {"eps", 3}};
    for (int k = 0; k < 40; ++k) {
        Expr e = jftest::random_expr(g, syms, ops, 3);
        std::map<std::string, OpaqueFn> real;
        realize_opaques(e, g, real);
        std::map<std::string, double> pt;
        for (auto& s : syms) pt[s] = double(draw_rational(g).num()) / 10.0 + 0.3;
        const double h = 1e-5;
        for (auto& s : syms) {
            double d = eval_numeric(partial(e, s), pt, real);
            auto hi = pt, lo = pt;
            hi[s] += h;
            lo[s] -= h;
            double fd =
                (eval_numeric(e, hi, real) - eval_numeric(e, lo, real)) / (2 * h);
            double v = eval_numeric(e, pt, real);
            CHECK(std::abs(d - fd) <= 1e-6 * (1.0 + std::abs(v)) + 1e-6);
        }
    }
}

TEST_CASE("equivalent cross-checks canonical equality numerically") {
    std::string diag;
    CHECK(equivalent(P("(w+y)^2"), P("w^2 + 2*w*y + y^2"), 0, 8, &diag));
    CHECK(diag.empty());
    CHECK(!equivalent(P("w^2*y"), P("w^3*y"), 0, 8, &diag));
    CHECK(diag.empty());
    CHECK(equivalent(P("f(x)*f(x)"), P("f(x)^2"), 0, 8, &diag));
    CHECK(diag.empty());
}

TEST_CASE("expand_opaque applies derivative multi-indices to the body") {
    // realize f as t^3: D[1] f(w) -> 3 w^2
    Expr e = partial(P("f(w)"), "w");
    Expr body = P("x^3");
    CHECK(expand_opaque(e, "f", {"x"}, body) == P("3*w^2"));
    // plain application
    CHECK(expand_opaque(P("f(w+y)"), "f", {"x"}, body) == P("(w+y)^3"));
}

TEST_CASE("poly_degree") {
    CHECK(poly_degree(P("w^3*y + w"), "w") == 3);
    CHECK(poly_degree(P("y"), "w") == 0);
    CHECK(!poly_degree(P("f(w)"), "w").has_value());
}

TEST_CASE("printing round-trips through the parser") {
    std::mt19937_64 g(31);
    std::vector<std::string> syms = {"x", "w", "y"};
    std::vector<std::pair<std::string, int>> ops = {{"f", 1}, {"eps", 3}};
    for (int k = 0; k < 200; ++k) {
        Expr e = jftest::random_expr(g, syms, ops, 5);
        Expr d = partial(e, "w");
        CHECK(P(e.str()) == e);
        CHECK(P(d.str()) == d);
    }
}
