#include "jetfield/expr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jetfield/realize.hpp"
#include "jetfield/rng.hpp"

namespace jf {

namespace {

int kind_rank(Kind k) {
    switch (k) {
        case Kind::Constant: return 0;
        case Kind::Symbol: return 1;
        case Kind::Opaque: return 2;
        case Kind::Power: return 3;
        case Kind::Product: return 4;
        case Kind::Sum: return 5;
    }
    return 6;
}

}  // namespace

int compare(const Expr& a, const Expr& b) {
    const ExprNode& x = a.node();
    const ExprNode& y = b.node();
    if (int d = kind_rank(x.kind) - kind_rank(y.kind)) return d < 0 ? -1 : 1;
    switch (x.kind) {
        case Kind::Constant: {
            if (x.value == y.value) return 0;
            return x.value < y.value ? -1 : 1;
        }
        case Kind::Symbol:
            return x.name.compare(y.name) < 0 ? -1 : (x.name == y.name ? 0 : 1);
        case Kind::Opaque: {
            if (int d = x.name.compare(y.name)) return d < 0 ? -1 : 1;
            if (x.derivs != y.derivs) return x.derivs < y.derivs ? -1 : 1;
            if (x.args.size() != y.args.size())
                return x.args.size() < y.args.size() ? -1 : 1;
            for (size_t i = 0; i < x.args.size(); ++i)
                if (int d = compare(x.args[i], y.args[i])) return d;
            return 0;
        }
        case Kind::Power: {
            if (int d = compare(x.args[0], y.args[0])) return d;
            return x.exponent < y.exponent ? -1 : (x.exponent == y.exponent ? 0 : 1);
        }
        case Kind::Product:
        case Kind::Sum: {
            if (x.args.size() != y.args.size())
                return x.args.size() < y.args.size() ? -1 : 1;
            for (size_t i = 0; i < x.args.size(); ++i)
                if (int d = compare(x.args[i], y.args[i])) return d;
            return 0;
        }
    }
    return 0;
}

bool operator==(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

Expr Expr::from_node(ExprNode n) {
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
}

Expr::Expr() {
    ExprNode n;
    n.kind = Kind::Constant;
    n.value = Rational(0);
    node_ = std::make_shared<const ExprNode>(std::move(n));
}

// ---- polynomial normal form ------------------------------------------------

namespace {

// monomial: sorted (atom, exponent) pairs, exponents nonzero
using Mono = std::vector<std::pair<Expr, int>>;

struct MonoLess {
    bool operator()(const Mono& a, const Mono& b) const {
        size_t n = std::min(a.size(), b.size());
        for (size_t i = 0; i < n; ++i) {
            if (int d = compare(a[i].first, b[i].first)) return d < 0;
            if (a[i].second != b[i].second) return a[i].second < b[i].second;
        }
        return a.size() < b.size();
    }
};

using Poly = std::map<Mono, Rational, MonoLess>;

void poly_add_term(Poly& p, const Mono& m, const Rational& c) {
    if (c.is_zero()) return;
    auto [it, fresh] = p.emplace(m, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero()) p.erase(it);
    }
}

Poly poly_add(const Poly& a, const Poly& b) {
    Poly r = a;
    for (auto& [m, c] : b) poly_add_term(r, m, c);
    return r;
}

Mono mono_mul(const Mono& a, const Mono& b) {
    Mono r;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        int d = compare(a[i].first, b[j].first);
        if (d < 0) r.push_back(a[i++]);
        else if (d > 0) r.push_back(b[j++]);
        else {
            int e = a[i].second + b[j].second;
            if (e != 0) r.emplace_back(a[i].first, e);
            ++i; ++j;
        }
    }
    for (; i < a.size(); ++i) r.push_back(a[i]);
    for (; j < b.size(); ++j) r.push_back(b[j]);
    return r;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r;
    for (auto& [ma, ca] : a)
        for (auto& [mb, cb] : b) poly_add_term(r, mono_mul(ma, mb), ca * cb);
    return r;
}

Poly poly_const(const Rational& c) {
    Poly p;
    if (!c.is_zero()) p.emplace(Mono{}, c);
    return p;
}

Poly poly_pow(const Poly& base, int e) {
    if (e == 0) return poly_const(Rational(1));
    if (e < 0) {
        if (base.size() != 1)
            throw std::domain_error("negative power of a non-monomial expression");
        auto& [m, c] = *base.begin();
        Mono inv;
        for (auto& [atom, ex] : m) inv.emplace_back(atom, -ex * (-e));
        Poly r;
        r.emplace(std::move(inv), c.pow(e));
        return r;
    }
    Poly r = poly_const(Rational(1));
    Poly b = base;
    unsigned n = (unsigned)e;
    while (n) {
        if (n & 1) r = poly_mul(r, b);
        if (n >>= 1) b = poly_mul(b, b);
    }
    return r;
}

Poly to_poly(const Expr& e);

Poly atom_poly(const Expr& atom, int exp) {
    Poly p;
    Mono m;
    m.emplace_back(atom, exp);
    p.emplace(std::move(m), Rational(1));
    return p;
}

Poly to_poly(const Expr& e) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Constant: return poly_const(n.value);
        case Kind::Symbol:
        case Kind::Opaque: return atom_poly(e, 1);
        case Kind::Power: return poly_pow(to_poly(n.args[0]), n.exponent);
        case Kind::Product: {
            Poly r = poly_const(Rational(1));
            for (auto& f : n.args) r = poly_mul(r, to_poly(f));
            return r;
        }
        case Kind::Sum: {
            Poly r;
            for (auto& t : n.args) r = poly_add(r, to_poly(t));
            return r;
        }
    }
    return {};
}

Expr term_expr(const Mono& m, const Rational& c) {
    std::vector<Expr> factors;
    if (!c.is_one() || m.empty()) factors.push_back(constant(c));
    for (auto& [atom, exp] : m) {
        if (exp == 1) {
            factors.push_back(atom);
        } else {
            ExprNode p;
            p.kind = Kind::Power;
            p.args = {atom};
            p.exponent = exp;
            factors.push_back(Expr::from_node(std::move(p)));
        }
    }
    if (factors.size() == 1) return factors[0];
    // drop a leading 1 coefficient kept only as placeholder
    if (factors.size() > 1 && factors[0].is_constant() &&
        factors[0].constant_value().is_one())
        factors.erase(factors.begin());
    if (factors.size() == 1) return factors[0];
    ExprNode prod;
    prod.kind = Kind::Product;
    prod.args = std::move(factors);
    return Expr::from_node(std::move(prod));
}

Expr from_poly(const Poly& p) {
    if (p.empty()) return constant(0);
    if (p.size() == 1) return term_expr(p.begin()->first, p.begin()->second);
    ExprNode s;
    s.kind = Kind::Sum;
    for (auto& [m, c] : p) s.args.push_back(term_expr(m, c));
    return Expr::from_node(std::move(s));
}

}  // namespace

// ---- constructors ----------------------------------------------------------

Expr constant(Rational v) {
    ExprNode n;
    n.kind = Kind::Constant;
    n.value = v;
    return Expr::from_node(std::move(n));
}

Expr constant(long long v) { return constant(Rational(v)); }

Expr symbol(const std::string& name) {
    ExprNode n;
    n.kind = Kind::Symbol;
    n.name = name;
    return Expr::from_node(std::move(n));
}

Expr opaque(const std::string& name, std::vector<Expr> args, std::vector<int> derivs) {
    ExprNode n;
    n.kind = Kind::Opaque;
    n.name = name;
    n.args = std::move(args);
    if (derivs.empty()) derivs.assign(n.args.size(), 0);
    if (derivs.size() != n.args.size())
        throw std::invalid_argument("opaque derivative multi-index length mismatch");
    n.derivs = std::move(derivs);
    return Expr::from_node(std::move(n));
}

Expr add(const Expr& a, const Expr& b) { return from_poly(poly_add(to_poly(a), to_poly(b))); }
Expr sub(const Expr& a, const Expr& b) { return add(a, neg(b)); }
Expr mul(const Expr& a, const Expr& b) { return from_poly(poly_mul(to_poly(a), to_poly(b))); }
Expr neg(const Expr& a) { return mul(constant(-1), a); }
Expr pow(const Expr& base, int exponent) { return from_poly(poly_pow(to_poly(base), exponent)); }

Expr sum(std::span<const Expr> terms) {
    Poly r;
    for (auto& t : terms) r = poly_add(r, to_poly(t));
    return from_poly(r);
}

Expr product(std::span<const Expr> factors) {
    Poly r = poly_const(Rational(1));
    for (auto& f : factors) r = poly_mul(r, to_poly(f));
    return from_poly(r);
}

// ---- calculus --------------------------------------------------------------

Expr partial(const Expr& e, const std::string& sym) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Constant: return constant(0);
        case Kind::Symbol: return n.name == sym ? constant(1) : constant(0);
        case Kind::Opaque: {
            // chain rule over argument slots
            Expr acc = constant(0);
            for (size_t k = 0; k < n.args.size(); ++k) {
                Expr dk = partial(n.args[k], sym);
                if (dk.is_zero()) continue;
                std::vector<int> d = n.derivs;
                d[k] += 1;
                acc = add(acc, mul(opaque(n.name, n.args, std::move(d)), dk));
            }
            return acc;
        }
        case Kind::Power: {
            Expr db = partial(n.args[0], sym);
            if (db.is_zero()) return constant(0);
            return mul(mul(constant(n.exponent), pow(n.args[0], n.exponent - 1)), db);
        }
        case Kind::Product: {
            Expr acc = constant(0);
            for (size_t i = 0; i < n.args.size(); ++i) {
                Expr di = partial(n.args[i], sym);
                if (di.is_zero()) continue;
                Expr term = di;
                for (size_t j = 0; j < n.args.size(); ++j)
                    if (j != i) term = mul(term, n.args[j]);
                acc = add(acc, term);
            }
            return acc;
        }
        case Kind::Sum: {
            Expr acc = constant(0);
            for (auto& t : n.args) acc = add(acc, partial(t, sym));
            return acc;
        }
    }
    return constant(0);
}

Expr substitute(const Expr& e, const Binding& b) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Constant: return e;
        case Kind::Symbol: {
            auto it = b.find(n.name);
            return it == b.end() ? e : it->second;
        }
        case Kind::Opaque: {
            std::vector<Expr> args;
            args.reserve(n.args.size());
            for (auto& a : n.args) args.push_back(substitute(a, b));
            return opaque(n.name, std::move(args), n.derivs);
        }
        case Kind::Power: return pow(substitute(n.args[0], b), n.exponent);
        case Kind::Product: {
            Expr acc = constant(1);
            for (auto& f : n.args) acc = mul(acc, substitute(f, b));
            return acc;
        }
        case Kind::Sum: {
            Expr acc = constant(0);
            for (auto& t : n.args) acc = add(acc, substitute(t, b));
            return acc;
        }
    }
    return e;
}

Expr expand_opaque(const Expr& e, const std::string& name,
                   const std::vector<std::string>& params, const Expr& body) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Constant:
        case Kind::Symbol: return e;
        case Kind::Opaque: {
            std::vector<Expr> args;
            args.reserve(n.args.size());
            for (auto& a : n.args) args.push_back(expand_opaque(a, name, params, body));
            if (n.name != name) return opaque(n.name, std::move(args), n.derivs);
            if (params.size() != n.args.size())
                throw std::invalid_argument("opaque expansion arity mismatch for " + name);
            Expr d = body;
            for (size_t k = 0; k < n.derivs.size(); ++k)
                for (int r = 0; r < n.derivs[k]; ++r) d = partial(d, params[k]);
            Binding sub;
            for (size_t k = 0; k < params.size(); ++k) sub[params[k]] = args[k];
            return substitute(d, sub);
        }
        case Kind::Power: return pow(expand_opaque(n.args[0], name, params, body), n.exponent);
        case Kind::Product: {
            Expr acc = constant(1);
            for (auto& f : n.args) acc = mul(acc, expand_opaque(f, name, params, body));
            return acc;
        }
        case Kind::Sum: {
            Expr acc = constant(0);
            for (auto& t : n.args) acc = add(acc, expand_opaque(t, name, params, body));
            return acc;
        }
    }
    return e;
}

void collect_symbols(const Expr& e, std::set<std::string>& out) {
    const ExprNode& n = e.node();
    if (n.kind == Kind::Symbol) out.insert(n.name);
    for (auto& a : n.args) collect_symbols(a, out);
}

void collect_opaques(const Expr& e, std::map<std::string, int>& out) {
    const ExprNode& n = e.node();
    if (n.kind == Kind::Opaque) out[n.name] = (int)n.args.size();
    for (auto& a : n.args) collect_opaques(a, out);
}

std::optional<int> poly_degree(const Expr& e, const std::string& sym) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Constant: return 0;
        case Kind::Symbol: return n.name == sym ? 1 : 0;
        case Kind::Opaque: {
            for (auto& a : n.args) {
                std::set<std::string> syms;
                collect_symbols(a, syms);
                if (syms.count(sym)) return std::nullopt;
            }
            return 0;
        }
        case Kind::Power: {
            auto d = poly_degree(n.args[0], sym);
            if (!d) return std::nullopt;
            if (*d == 0) return 0;
            if (n.exponent < 0) return std::nullopt;
            return *d * n.exponent;
        }
        case Kind::Product: {
            int total = 0;
            for (auto& f : n.args) {
                auto d = poly_degree(f, sym);
                if (!d) return std::nullopt;
                total += *d;
            }
            return total;
        }
        case Kind::Sum: {
            int best = 0;
            for (auto& t : n.args) {
                auto d = poly_degree(t, sym);
                if (!d) return std::nullopt;
                best = std::max(best, *d);
            }
            return best;
        }
    }
    return 0;
}

// ---- numeric evaluation ------------------------------------------------------

double eval_numeric(const Expr& e, const std::map<std::string, double>& point,
                    const std::map<std::string, OpaqueFn>& realizations) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Constant: return n.value.to_double();
        case Kind::Symbol: {
            auto it = point.find(n.name);
            if (it == point.end()) throw std::invalid_argument("unbound symbol " + n.name);
            return it->second;
        }
        case Kind::Opaque: {
            auto it = realizations.find(n.name);
            if (it == realizations.end())
                throw std::invalid_argument("no realization for opaque symbol " + n.name);
            std::vector<double> args;
            args.reserve(n.args.size());
            for (auto& a : n.args) args.push_back(eval_numeric(a, point, realizations));
            return it->second(n.derivs, args);
        }
        case Kind::Power: return std::pow(eval_numeric(n.args[0], point, realizations), n.exponent);
        case Kind::Product: {
            double r = 1.0;
            for (auto& f : n.args) r *= eval_numeric(f, point, realizations);
            return r;
        }
        case Kind::Sum: {
            double r = 0.0;
            for (auto& t : n.args) r += eval_numeric(t, point, realizations);
            return r;
        }
    }
    return 0.0;
}

// ---- printing -----------------------------------------------------------------

namespace {

void print_expr(std::ostream& os, const Expr& e, int parent_rank);

void print_opaque(std::ostream& os, const ExprNode& n) {
    bool has_deriv = false;
    for (int d : n.derivs)
        if (d) has_deriv = true;
    if (has_deriv) {
        os << "D[";
        bool first = true;
        for (size_t k = 0; k < n.derivs.size(); ++k)
            for (int r = 0; r < n.derivs[k]; ++r) {
                if (!first) os << ",";
                os << (k + 1);
                first = false;
            }
        os << "] ";
    }
    os << n.name << "(";
    for (size_t i = 0; i < n.args.size(); ++i) {
        if (i) os << ", ";
        print_expr(os, n.args[i], 0);
    }
    os << ")";
}

// parent_rank: 0 top/sum, 1 product, 2 power-base
void print_expr(std::ostream& os, const Expr& e, int parent_rank) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Constant: {
            bool neg = n.value.num() < 0 || !n.value.is_integer();
            if (neg && parent_rank >= 1) os << "(" << n.value.str() << ")";
            else os << n.value.str();
            return;
        }
        case Kind::Symbol: os << n.name; return;
        case Kind::Opaque:
            if (parent_rank >= 2) { os << "("; print_opaque(os, n); os << ")"; }
            else print_opaque(os, n);
            return;
        case Kind::Power:
            print_expr(os, n.args[0], 2);
            os << "^" << n.exponent;
            return;
        case Kind::Product: {
            if (parent_rank >= 2) os << "(";
            for (size_t i = 0; i < n.args.size(); ++i) {
                if (i) os << "*";
                print_expr(os, n.args[i], 1);
            }
            if (parent_rank >= 2) os << ")";
            return;
        }
        case Kind::Sum: {
            if (parent_rank >= 1) os << "(";
            for (size_t i = 0; i < n.args.size(); ++i) {
                if (i) os << " + ";
                print_expr(os, n.args[i], 0);
            }
            if (parent_rank >= 1) os << ")";
            return;
        }
    }
}

}  // namespace

std::string Expr::str() const {
    std::ostringstream os;
    print_expr(os, *this, 0);
    return os.str();
}

// ---- randomized cross-check ----------------------------------------------------

bool equivalent(const Expr& a, const Expr& b, std::uint64_t seed, int probes,
                std::string* diag) {
    bool exact = (compare(a, b) == 0);

    std::set<std::string> syms;
    collect_symbols(a, syms);
    collect_symbols(b, syms);

    std::mt19937_64 g(seed ^ 0x9e3779b97f4a7c15ull);
    std::map<std::string, OpaqueFn> real;
    realize_opaques(a, g, real);
    realize_opaques(b, g, real);

    int agree = 0, disagree = 0;
    for (int p = 0; p < probes; ++p) {
        std::map<std::string, double> pt;
        for (auto& s : syms) pt[s] = draw_rational(g).to_double();
        double va = eval_numeric(a, pt, real);
        double vb = eval_numeric(b, pt, real);
        double scale = 1.0 + std::max(std::abs(va), std::abs(vb));
        (std::abs(va - vb) <= 1e-9 * scale ? agree : disagree)++;
    }
    bool numeric = (disagree == 0);
    if (numeric != exact && diag) {
        std::ostringstream os;
        os << "equivalence cross-check disagreement: canonical "
           << (exact ? "equal" : "unequal") << ", " << disagree << "/" << probes
           << " probe mismatches for [" << a.str() << "] vs [" << b.str() << "]";
        *diag = os.str();
    }
    return exact;
}

}  // namespace jf
