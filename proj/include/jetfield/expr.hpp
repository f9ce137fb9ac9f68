#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "jetfield/rational.hpp"

namespace jf {

// Immutable symbolic expression, always held in canonical form:
// sums of products of atom^exponent, atoms being coordinate symbols or
// opaque applications, rational coefficients folded, everything sorted.
// Canonical form is a polynomial normal form over the atoms, so two
// expressions denote the same function of generic smooth coefficients
// iff their trees are identical.

enum class Kind { Constant, Symbol, Power, Product, Sum, Opaque };

class Expr;

struct ExprNode {
    Kind kind = Kind::Constant;
    Rational value;               // Constant
    std::string name;             // Symbol, Opaque
    std::vector<Expr> args;       // Sum/Product operands, Opaque arguments
    int exponent = 0;             // Power
    std::vector<int> derivs;      // Opaque: derivative count per argument slot
};

class Expr {
public:
    Expr();  // zero

    Kind kind() const { return node_->kind; }
    const ExprNode& node() const { return *node_; }

    bool is_zero() const { return kind() == Kind::Constant && node_->value.is_zero(); }
    bool is_constant() const { return kind() == Kind::Constant; }
    const Rational& constant_value() const { return node_->value; }

    std::string str() const;

    friend bool operator==(const Expr& a, const Expr& b);
    friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

    static Expr from_node(ExprNode n);

private:
    std::shared_ptr<const ExprNode> node_;
    explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
};

// total order on canonical trees; 0 iff equal
int compare(const Expr& a, const Expr& b);

// -- constructors (all results canonical) --
Expr constant(Rational v);
Expr constant(long long v);
Expr symbol(const std::string& name);
Expr opaque(const std::string& name, std::vector<Expr> args,
            std::vector<int> derivs = {});

Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr mul(const Expr& a, const Expr& b);
Expr neg(const Expr& a);
Expr pow(const Expr& base, int exponent);
Expr sum(std::span<const Expr> terms);
Expr product(std::span<const Expr> factors);

inline Expr operator+(const Expr& a, const Expr& b) { return add(a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return sub(a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul(a, b); }
inline Expr operator-(const Expr& a) { return neg(a); }

// simultaneous replacement of coordinate symbols
using Binding = std::map<std::string, Expr>;

Expr partial(const Expr& e, const std::string& sym);
Expr substitute(const Expr& e, const Binding& b);

// Replace every opaque application named `name` by the concrete `body`
// expressed over `params` (one symbol per argument slot): derivative
// multi-indices are applied to the body, then the recorded arguments are
// substituted for the parameter symbols.
Expr expand_opaque(const Expr& e, const std::string& name,
                   const std::vector<std::string>& params, const Expr& body);

void collect_symbols(const Expr& e, std::set<std::string>& out);
// opaque name -> arity
void collect_opaques(const Expr& e, std::map<std::string, int>& out);

// degree of e as a polynomial in `sym` (0 if absent); nullopt when sym
// occurs inside an opaque argument or under a negative power
std::optional<int> poly_degree(const Expr& e, const std::string& sym);

// numeric evaluation -------------------------------------------------------

// callable model of an opaque smooth symbol: given per-argument derivative
// counts and argument values, return the derivative value
using OpaqueFn =
    std::function<double(std::span<const int> derivs, std::span<const double> args)>;

double eval_numeric(const Expr& e, const std::map<std::string, double>& point,
                    const std::map<std::string, OpaqueFn>& realizations = {});

// canonical-equality test with a randomized numeric cross-check: probes
// both sides at `probes` random rational points (opaques realized as random
// low-degree polynomials) and emits a diagnostic to `diag` if the symbolic
// and numeric verdicts ever disagree
bool equivalent(const Expr& a, const Expr& b, std::uint64_t seed = 0,
                int probes = 8, std::string* diag = nullptr);

}  // namespace jf
