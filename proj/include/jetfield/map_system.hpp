#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jetfield/expr.hpp"
#include "jetfield/frame.hpp"

namespace jf {

// assignment of target coordinates to expressions over source coordinates
using EvaluationMap = std::map<std::string, Expr>;

// A system of maps (S, eps): parameter coordinates w^A, source coordinates
// y^i, target coordinates z^a, with z^a = eps^a(w, y).
struct MapSystem {
    Frame params;   // w^A
    Frame source;   // y^i
    Frame target;   // z^a
    EvaluationMap eval;

    void validate() const;
    static MapSystem make(Frame params, Frame source, Frame target, EvaluationMap eval);
};

enum class ProlongKind { Total, Partial1, Partial2 };

// a prolonged evaluation map: undotted block always equals eps
struct ProlongedMap {
    ProlongKind kind;
    EvaluationMap undotted;  // z^a
    EvaluationMap dotted;    // d_z^a over (w, y, d_w, d_y)
};

ProlongedMap total_tangent(const MapSystem& sys);
ProlongedMap partial_tangent_1(const MapSystem& sys);
ProlongedMap partial_tangent_2(const MapSystem& sys);

// T eps = T1 eps + T2 eps, exact canonical equality on the dotted block
bool check_decomposition(const MapSystem& sys);

struct InjectivityVerdict {
    bool collision_found = false;
    std::vector<double> witness_a, witness_b;  // parameter points, if found
    // grids the verdict is relative to
    std::vector<std::vector<double>> parameter_grid;
    std::vector<std::vector<double>> source_witnesses;
};

// Samples parameter points on the cartesian product of the per-parameter
// grids; two points collide when their evaluation maps agree on every
// source witness within 1e-12.
InjectivityVerdict injectivity_probe(const MapSystem& sys,
                                     std::vector<std::vector<double>> grid,
                                     std::vector<std::vector<double>> witnesses);

// a tangent point of the parameter space: values (numeric-as-rational or
// symbolic) for every w^A and d_w^A
struct TangentPoint {
    Binding values;
};

// iota: TS -> F-smooth tangent space; the result assigns z^a and d_z^a
// expressions over the source coordinates only
EvaluationMap iota(const MapSystem& sys, const TangentPoint& X);

}  // namespace jf
