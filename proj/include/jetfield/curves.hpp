#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "jetfield/expr.hpp"
#include "jetfield/frame.hpp"
#include "jetfield/map_system.hpp"

namespace jf {

inline constexpr const char* kCurveParam = "lam";

// open interval with rational or infinite endpoints
struct Interval {
    std::optional<Rational> lo, hi;
    bool contains(double v) const;
    bool contains(const Rational& v) const;
    // 16-point deterministic sample inside the interval (bounded fallback [-1,1])
    std::vector<double> sample(int n = 16) const;
};

// per-coordinate expressions in the curve parameter (opaques allowed)
struct SymbolicBody {
    std::map<std::string, Expr> components;
};

// callable model with a declared differentiability order
struct NumericBody {
    std::function<std::vector<double>(double)> fn;
    int declared_order = 0;
};

struct Curve {
    Frame space;
    Interval interval;
    std::variant<SymbolicBody, NumericBody> body;
    // set when the curve was built as generator-composed-with-reparametrisation
    std::shared_ptr<const Curve> parent;

    bool symbolic() const { return std::holds_alternative<SymbolicBody>(body); }
    bool is_constant() const;

    // numeric evaluation; opaques in symbolic bodies are realized from `seed`
    std::function<std::vector<double>(double)> evaluator(std::uint64_t seed = 0) const;

    // compose with a smooth symbolic reparametrisation lam -> gamma(lam)
    Curve reparam(const Expr& gamma, Interval domain) const;

    static Curve constant_at(const Frame& space, const std::vector<Rational>& point);
    static Curve symbolic_curve(Frame space, Interval iv,
                                std::map<std::string, Expr> components);
    static Curve numeric_curve(Frame space, Interval iv,
                               std::function<std::vector<double>(double)> fn,
                               int declared_order);
};

// ---- smoothness probe -------------------------------------------------------

struct ProbeVerdict {
    bool passes = true;
    int failed_order = 0;             // first failing derivative order, 0 if none
    std::vector<double> rates;        // observed Richardson rate per order
};

// Finite-order smoothness probe: central differences at geometric steps
// 1e-2..1e-5 must converge at Richardson order ~2 and agree with one-sided
// estimates. This is a probe, not a proof.
ProbeVerdict smoothness_probe(const std::function<std::vector<double>(double)>& f,
                              double lam0, int order);

// ---- curve families ---------------------------------------------------------

struct CurveFamily {
    Frame space;
    std::vector<Curve> generators;
    bool closed_under_reparam = true;
    // when set, membership is decided through the system's evaluation map
    std::shared_ptr<const MapSystem> backing;
};

enum class MemberVerdict { Member, NonMember };

// Membership test. Constant curves and reparametrized generators are members
// by construction; for system-backed families, symbolic candidates are smooth
// exactly and numeric candidates are probed along lam -> eps(c(lam), m) at the
// given probe points and source witnesses.
MemberVerdict member(const CurveFamily& family, const Curve& candidate,
                     const std::vector<double>& probe_points,
                     const std::vector<std::vector<double>>& witnesses = {},
                     std::uint64_t seed = 0);

CurveFamily product(const CurveFamily& f1, const CurveFamily& f2);

// component projection of a product-space curve
Curve project_curve(const Curve& c, const Frame& component, size_t offset);

using PointPredicate = std::function<bool(const std::vector<double>&)>;

// keep the generators whose sampled images satisfy the predicate
CurveFamily subspace(const CurveFamily& family, const PointPredicate& predicate,
                     std::uint64_t seed = 0);

// ---- first-order contact ----------------------------------------------------

struct PointedCurve {
    const Curve* curve;
    Rational lam;
};

// value-and-first-derivative agreement of the induced evaluation maps;
// exact for symbolic curves, within `tol` at the witnesses otherwise
bool first_order_contact(const MapSystem& sys, const PointedCurve& p1,
                         const PointedCurve& p2,
                         const std::vector<std::vector<double>>& witnesses,
                         double tol = 1e-7, std::uint64_t seed = 0);

// tangent-vector representation Xi of a pointed curve: assigns z^a and
// d_z^a expressions over the source coordinates (symbolic curves only)
EvaluationMap tangent_rep_map_space(const MapSystem& sys, const PointedCurve& p);

// fibrewise vector operations on the dotted block of a representation
EvaluationMap xi_scale(const MapSystem& sys, const Rational& r, const EvaluationMap& xi);
EvaluationMap xi_add(const MapSystem& sys, const EvaluationMap& a, const EvaluationMap& b);

}  // namespace jf
