#include "jetfield/curves.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jetfield/realize.hpp"
#include "jetfield/rng.hpp"

namespace jf {

bool Interval::contains(double v) const {
    if (lo && v <= lo->to_double()) return false;
    if (hi && v >= hi->to_double()) return false;
    return true;
}

bool Interval::contains(const Rational& v) const {
    if (lo && !(*lo < v)) return false;
    if (hi && !(v < *hi)) return false;
    return true;
}

std::vector<double> Interval::sample(int n) const {
    double a = lo ? lo->to_double() : -1.0;
    double b = hi ? hi->to_double() : 1.0;
    if (b <= a) b = a + 2.0;
    std::vector<double> pts;
    for (int k = 0; k < n; ++k) pts.push_back(a + (b - a) * double(k + 1) / double(n + 1));
    return pts;
}

bool Curve::is_constant() const {
    if (!symbolic()) return false;
    for (auto& [c, e] : std::get<SymbolicBody>(body).components) {
        std::set<std::string> syms;
        collect_symbols(e, syms);
        if (syms.count(kCurveParam)) return false;
    }
    return true;
}

std::function<std::vector<double>(double)> Curve::evaluator(std::uint64_t seed) const {
    if (!symbolic()) return std::get<NumericBody>(body).fn;
    const auto& comp = std::get<SymbolicBody>(body).components;
    auto real = std::make_shared<std::map<std::string, OpaqueFn>>();
    std::mt19937_64 g(seed ^ 0xc0ffee1234567890ull);
    std::vector<Expr> exprs;
    for (auto& [s, r] : space.coords) {
        exprs.push_back(comp.at(s));
        realize_opaques(exprs.back(), g, *real);
    }
    return [exprs, real](double lam) {
        std::map<std::string, double> pt{{kCurveParam, lam}};
        std::vector<double> out;
        out.reserve(exprs.size());
        for (auto& e : exprs) out.push_back(eval_numeric(e, pt, *real));
        return out;
    };
}

Curve Curve::reparam(const Expr& gamma, Interval domain) const {
    std::set<std::string> syms;
    collect_symbols(gamma, syms);
    for (auto& s : syms)
        if (s != kCurveParam)
            throw std::invalid_argument("reparametrisation must use only " +
                                        std::string(kCurveParam));
    Curve out;
    out.space = space;
    out.interval = std::move(domain);
    out.parent = std::make_shared<Curve>(*this);
    if (symbolic()) {
        SymbolicBody b;
        Binding sub{{kCurveParam, gamma}};
        for (auto& [c, e] : std::get<SymbolicBody>(body).components)
            b.components[c] = substitute(e, sub);
        out.body = std::move(b);
    } else {
        auto fn = std::get<NumericBody>(body).fn;
        int ord = std::get<NumericBody>(body).declared_order;
        out.body = NumericBody{
            [fn, gamma](double lam) {
                std::map<std::string, double> pt{{kCurveParam, lam}};
                return fn(eval_numeric(gamma, pt));
            },
            ord};
    }
    return out;
}

Curve Curve::constant_at(const Frame& space, const std::vector<Rational>& point) {
    if (point.size() != space.coords.size())
        throw std::invalid_argument("constant curve dimension mismatch");
    SymbolicBody b;
    for (size_t i = 0; i < point.size(); ++i)
        b.components[space.coords[i].first] = constant(point[i]);
    return Curve{space, Interval{}, std::move(b), nullptr};
}

Curve Curve::symbolic_curve(Frame space, Interval iv,
                            std::map<std::string, Expr> components) {
    for (auto& [s, r] : space.coords)
        if (!components.count(s))
            throw std::invalid_argument("curve missing component for " + s);
    return Curve{std::move(space), std::move(iv), SymbolicBody{std::move(components)},
                 nullptr};
}

Curve Curve::numeric_curve(Frame space, Interval iv,
                           std::function<std::vector<double>(double)> fn,
                           int declared_order) {
    return Curve{std::move(space), std::move(iv),
                 NumericBody{std::move(fn), declared_order}, nullptr};
}

// ---- smoothness probe -------------------------------------------------------

namespace {

constexpr double kSteps[] = {1e-2, 1e-3, 1e-4, 1e-5};

double central(const std::function<double(double)>& f, double x, double h, int d) {
    switch (d) {
        case 1: return (f(x + h) - f(x - h)) / (2 * h);
        case 2: return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
        case 3:
            return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) /
                   (2 * h * h * h);
    }
    throw std::invalid_argument("derivative order must be 1..3");
}

double one_sided(const std::function<double(double)>& f, double x, double h, int d,
                 int sign) {
    double s = sign;
    switch (d) {
        case 1: return s * (f(x + s * h) - f(x)) / h;
        case 2: return (f(x + s * 2 * h) - 2 * f(x + s * h) + f(x)) / (h * h);
        case 3:
            return s * (f(x + s * 3 * h) - 3 * f(x + s * 2 * h) + 3 * f(x + s * h) - f(x)) /
                   (h * h * h);
    }
    throw std::invalid_argument("derivative order must be 1..3");
}

}  // namespace

ProbeVerdict smoothness_probe(const std::function<std::vector<double>(double)>& f,
                              double lam0, int order) {
    if (order < 1 || order > 3)
        throw std::invalid_argument("probe order must be in 1..3");
    size_t dim = f(lam0).size();
    ProbeVerdict v;
    for (int d = 1; d <= order; ++d) {
        double order_rate = 2.0;
        for (size_t c = 0; c < dim; ++c) {
            auto fc = [&](double x) { return f(x)[c]; };
            double C[4];
            for (int k = 0; k < 4; ++k) C[k] = central(fc, lam0, kSteps[k], d);
            double scale = std::max(1.0, std::abs(C[3]));
            double d0 = std::abs(C[0] - C[1]);
            double d1 = std::abs(C[1] - C[2]);

            double rate;
            // an identically-zero derivative leaves only rounding noise in the
            // stencils (growing as h shrinks); treat coarse-step estimates
            // below resolution as converged to zero
            double fscale = std::max(1.0, std::abs(fc(lam0)));
            bool negligible =
                std::abs(C[0]) <= 1e-6 * fscale && std::abs(C[1]) <= 1e-6 * fscale;
            bool converged = negligible || d0 <= 1e-7 * scale;
            if (converged) {
                rate = 2.0;  // below resolution: nominal
            } else {
                rate = d1 > 0.0 ? std::log10(d0 / d1) : 3.0;
                if (rate < 1.6) {
                    v.passes = false;
                    v.failed_order = d;
                    v.rates.push_back(rate);
                    return v;
                }
            }
            // one-sided consistency at h = 1e-3 catches kinks that central
            // stencils cancel away
            double ref = C[1];
            double fw = one_sided(fc, lam0, 1e-3, d, +1);
            double bw = one_sided(fc, lam0, 1e-3, d, -1);
            double tol = 0.02 * scale + 1e-9;
            if (std::abs(fw - ref) > tol || std::abs(bw - ref) > tol) {
                v.passes = false;
                v.failed_order = d;
                v.rates.push_back(rate);
                return v;
            }
            order_rate = std::min(order_rate, rate);
        }
        v.rates.push_back(order_rate);
    }
    return v;
}

// ---- curve families ---------------------------------------------------------

namespace {

bool curves_structurally_equal(const Curve& a, const Curve& b) {
    if (!(a.space == b.space)) return false;
    if (a.symbolic() != b.symbolic()) return false;
    if (!a.symbolic()) return &a == &b;
    const auto& ca = std::get<SymbolicBody>(a.body).components;
    const auto& cb = std::get<SymbolicBody>(b.body).components;
    for (auto& [s, e] : ca)
        if (!(e == cb.at(s))) return false;
    return true;
}

const Curve* root_of(const Curve& c) {
    const Curve* r = &c;
    while (r->parent) r = r->parent.get();
    return r;
}

}  // namespace

MemberVerdict member(const CurveFamily& family, const Curve& candidate,
                     const std::vector<double>& probe_points,
                     const std::vector<std::vector<double>>& witnesses,
                     std::uint64_t seed) {
    if (!(candidate.space == family.space))
        throw std::invalid_argument("candidate curve lives in a different space");

    // constant curves always belong
    if (candidate.is_constant()) return MemberVerdict::Member;

    // generator composed with a smooth reparametrisation
    if (family.closed_under_reparam && candidate.parent) {
        const Curve* root = root_of(candidate);
        for (auto& g : family.generators)
            if (curves_structurally_equal(*root, g)) return MemberVerdict::Member;
    }
    for (auto& g : family.generators)
        if (curves_structurally_equal(candidate, g)) return MemberVerdict::Member;

    if (family.backing) {
        const MapSystem& sys = *family.backing;
        // symbolic bodies are polynomials in lam with smooth opaque
        // coefficients, hence smooth exactly
        if (candidate.symbolic()) return MemberVerdict::Member;

        auto c = candidate.evaluator(seed);
        auto wsyms = sys.params.symbols();
        auto ysyms = sys.source.symbols();
        std::vector<std::vector<double>> wits = witnesses;
        if (wits.empty()) {
            // seeded default witness box [-1,1]^dim
            std::mt19937_64 g(seed ^ 0x77aa77aa);
            for (int k = 0; k < 8; ++k) {
                std::vector<double> w;
                for (size_t i = 0; i < ysyms.size(); ++i)
                    w.push_back(2.0 * draw_unit(g) - 1.0);
                wits.push_back(std::move(w));
            }
        }
        int order = std::clamp(std::get<NumericBody>(candidate.body).declared_order,
                               1, 3);
        for (double lam0 : probe_points) {
            if (!candidate.interval.contains(lam0)) continue;
            for (auto& m : wits) {
                auto g = [&](double lam) {
                    std::vector<double> wv = c(lam);
                    std::map<std::string, double> pt;
                    for (size_t k = 0; k < wsyms.size(); ++k) pt[wsyms[k]] = wv[k];
                    for (size_t k = 0; k < ysyms.size(); ++k) pt[ysyms[k]] = m[k];
                    std::vector<double> out;
                    for (auto& z : sys.target.symbols())
                        out.push_back(eval_numeric(sys.eval.at(z), pt));
                    return out;
                };
                if (!smoothness_probe(g, lam0, order).passes)
                    return MemberVerdict::NonMember;
            }
        }
        return MemberVerdict::Member;
    }

    return MemberVerdict::NonMember;  // sampling-relative: not recognized
}

CurveFamily product(const CurveFamily& f1, const CurveFamily& f2) {
    Frame space;
    space.coords = f1.space.coords;
    for (auto& c : f2.space.coords) space.coords.push_back(c);
    space.validate();

    CurveFamily out;
    out.space = space;
    for (auto& g1 : f1.generators)
        for (auto& g2 : f2.generators) {
            Interval iv;
            iv.lo = g1.interval.lo;
            if (g2.interval.lo && (!iv.lo || *iv.lo < *g2.interval.lo))
                iv.lo = g2.interval.lo;
            iv.hi = g1.interval.hi;
            if (g2.interval.hi && (!iv.hi || *g2.interval.hi < *iv.hi))
                iv.hi = g2.interval.hi;
            if (iv.lo && iv.hi && !(*iv.lo < *iv.hi)) continue;
            if (g1.symbolic() && g2.symbolic()) {
                std::map<std::string, Expr> comp =
                    std::get<SymbolicBody>(g1.body).components;
                for (auto& [s, e] : std::get<SymbolicBody>(g2.body).components)
                    comp[s] = e;
                out.generators.push_back(
                    Curve::symbolic_curve(space, iv, std::move(comp)));
            } else {
                auto e1 = g1.evaluator();
                auto e2 = g2.evaluator();
                out.generators.push_back(Curve::numeric_curve(
                    space, iv,
                    [e1, e2](double lam) {
                        auto a = e1(lam);
                        auto b = e2(lam);
                        a.insert(a.end(), b.begin(), b.end());
                        return a;
                    },
                    3));
            }
        }
    return out;
}

Curve project_curve(const Curve& c, const Frame& component, size_t offset) {
    if (c.symbolic()) {
        std::map<std::string, Expr> comp;
        const auto& full = std::get<SymbolicBody>(c.body).components;
        for (auto& [s, r] : component.coords) comp[s] = full.at(s);
        return Curve::symbolic_curve(component, c.interval, std::move(comp));
    }
    auto fn = std::get<NumericBody>(c.body).fn;
    size_t n = component.coords.size();
    return Curve::numeric_curve(
        component, c.interval,
        [fn, offset, n](double lam) {
            auto v = fn(lam);
            return std::vector<double>(v.begin() + offset, v.begin() + offset + n);
        },
        std::get<NumericBody>(c.body).declared_order);
}

CurveFamily subspace(const CurveFamily& family, const PointPredicate& predicate,
                     std::uint64_t seed) {
    CurveFamily out;
    out.space = family.space;
    out.backing = family.backing;
    out.closed_under_reparam = family.closed_under_reparam;
    for (auto& g : family.generators) {
        auto f = g.evaluator(seed);
        bool keep = true;
        std::vector<double> pts =
            g.is_constant() ? std::vector<double>{0.0} : g.interval.sample(16);
        for (double lam : pts)
            if (!predicate(f(lam))) { keep = false; break; }
        if (keep) out.generators.push_back(g);
    }
    return out;
}

// ---- first-order contact ----------------------------------------------------

namespace {

// pullback of the evaluation map along a symbolic curve into parameter space
EvaluationMap symbolic_pullback(const MapSystem& sys, const Curve& c) {
    const auto& comp = std::get<SymbolicBody>(c.body).components;
    Binding sub;
    for (auto& w : sys.params.symbols()) sub[w] = comp.at(w);
    EvaluationMap out;
    for (auto& [z, e] : sys.eval) out[z] = substitute(e, sub);
    return out;
}

}  // namespace

bool first_order_contact(const MapSystem& sys, const PointedCurve& p1,
                         const PointedCurve& p2,
                         const std::vector<std::vector<double>>& witnesses,
                         double tol, std::uint64_t seed) {
    for (auto* p : {&p1, &p2})
        if (!p->curve->interval.contains(p->lam))
            throw std::invalid_argument("contact point outside curve interval");

    if (p1.curve->symbolic() && p2.curve->symbolic()) {
        EvaluationMap a = symbolic_pullback(sys, *p1.curve);
        EvaluationMap b = symbolic_pullback(sys, *p2.curve);
        Binding at1{{kCurveParam, constant(p1.lam)}};
        Binding at2{{kCurveParam, constant(p2.lam)}};
        for (auto& [z, ea] : a) {
            const Expr& eb = b.at(z);
            if (!(substitute(ea, at1) == substitute(eb, at2))) return false;
            if (!(substitute(partial(ea, kCurveParam), at1) ==
                  substitute(partial(eb, kCurveParam), at2)))
                return false;
        }
        return true;
    }

    // numeric route at the witnesses
    auto ysyms = sys.source.symbols();
    auto wsyms = sys.params.symbols();
    auto eval_at = [&](const PointedCurve& p, const std::vector<double>& m,
                       const std::string& z, double lam) {
        auto wv = p.curve->evaluator(seed)(lam);
        std::map<std::string, double> pt;
        for (size_t k = 0; k < wsyms.size(); ++k) pt[wsyms[k]] = wv[k];
        for (size_t k = 0; k < ysyms.size(); ++k) pt[ysyms[k]] = m[k];
        return eval_numeric(sys.eval.at(z), pt);
    };
    const double h = 1e-5;
    for (auto& m : witnesses)
        for (auto& z : sys.target.symbols()) {
            double l1 = p1.lam.to_double(), l2 = p2.lam.to_double();
            double v1 = eval_at(p1, m, z, l1);
            double v2 = eval_at(p2, m, z, l2);
            if (std::abs(v1 - v2) > tol) return false;
            double d1 = (eval_at(p1, m, z, l1 + h) - eval_at(p1, m, z, l1 - h)) / (2 * h);
            double d2 = (eval_at(p2, m, z, l2 + h) - eval_at(p2, m, z, l2 - h)) / (2 * h);
            if (std::abs(d1 - d2) > tol) return false;
        }
    return true;
}

EvaluationMap tangent_rep_map_space(const MapSystem& sys, const PointedCurve& p) {
    if (!p.curve->symbolic())
        throw std::invalid_argument("tangent representation requires a symbolic curve");
    if (!p.curve->interval.contains(p.lam))
        throw std::invalid_argument("contact point outside curve interval");
    EvaluationMap pb = symbolic_pullback(sys, *p.curve);
    Binding at{{kCurveParam, constant(p.lam)}};
    EvaluationMap out;
    for (auto& [z, e] : pb) {
        out[z] = substitute(e, at);
        out[dotted_name(z)] = substitute(partial(e, kCurveParam), at);
    }
    return out;
}

EvaluationMap xi_scale(const MapSystem& sys, const Rational& r, const EvaluationMap& xi) {
    EvaluationMap out = xi;
    for (auto& z : sys.target.symbols())
        out[dotted_name(z)] = mul(constant(r), xi.at(dotted_name(z)));
    return out;
}

EvaluationMap xi_add(const MapSystem& sys, const EvaluationMap& a, const EvaluationMap& b) {
    EvaluationMap out;
    for (auto& z : sys.target.symbols()) {
        if (!(a.at(z) == b.at(z)))
            throw std::invalid_argument("representations attach to different points");
        out[z] = a.at(z);
        out[dotted_name(z)] = add(a.at(dotted_name(z)), b.at(dotted_name(z)));
    }
    return out;
}

}  // namespace jf
