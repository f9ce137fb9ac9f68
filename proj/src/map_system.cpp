#include "jetfield/map_system.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace jf {

void MapSystem::validate() const {
    params.validate();
    source.validate();
    target.validate();
    std::set<std::string> declared;
    for (auto& s : params.symbols()) declared.insert(s);
    for (auto& s : source.symbols()) declared.insert(s);
    for (auto& z : target.symbols()) {
        auto it = eval.find(z);
        if (it == eval.end())
            throw std::invalid_argument("target coordinate not assigned: " + z);
        std::set<std::string> used;
        collect_symbols(it->second, used);
        for (auto& u : used)
            if (!declared.count(u))
                throw std::invalid_argument("evaluation map for " + z +
                                            " uses undeclared symbol " + u);
    }
    if (eval.size() != target.coords.size())
        throw std::invalid_argument("evaluation map assigns unknown coordinates");
}

MapSystem MapSystem::make(Frame params, Frame source, Frame target,
                          EvaluationMap eval) {
    MapSystem s{std::move(params), std::move(source), std::move(target),
                std::move(eval)};
    s.validate();
    return s;
}

namespace {

ProlongedMap prolong(const MapSystem& sys, ProlongKind kind) {
    ProlongedMap p;
    p.kind = kind;
    p.undotted = sys.eval;
    bool with_params = kind != ProlongKind::Partial2;
    bool with_source = kind != ProlongKind::Partial1;
    for (auto& [z, e] : sys.eval) {
        Expr dz = constant(0);
        if (with_params)
            for (auto& w : sys.params.symbols())
                dz = add(dz, mul(partial(e, w), symbol(dotted_name(w))));
        if (with_source)
            for (auto& y : sys.source.symbols())
                dz = add(dz, mul(partial(e, y), symbol(dotted_name(y))));
        p.dotted[dotted_name(z)] = dz;
    }
    return p;
}

}  // namespace

ProlongedMap total_tangent(const MapSystem& sys) { return prolong(sys, ProlongKind::Total); }
ProlongedMap partial_tangent_1(const MapSystem& sys) { return prolong(sys, ProlongKind::Partial1); }
ProlongedMap partial_tangent_2(const MapSystem& sys) { return prolong(sys, ProlongKind::Partial2); }

bool check_decomposition(const MapSystem& sys) {
    ProlongedMap total = total_tangent(sys);
    ProlongedMap p1 = partial_tangent_1(sys);
    ProlongedMap p2 = partial_tangent_2(sys);
    for (auto& [dz, e] : total.dotted)
        if (!(e == add(p1.dotted.at(dz), p2.dotted.at(dz)))) return false;
    return true;
}

InjectivityVerdict injectivity_probe(const MapSystem& sys,
                                     std::vector<std::vector<double>> grid,
                                     std::vector<std::vector<double>> witnesses) {
    auto wsyms = sys.params.symbols();
    auto ysyms = sys.source.symbols();
    if (grid.size() != wsyms.size())
        throw std::invalid_argument("one grid per parameter coordinate required");
    for (auto& g : grid)
        if (g.empty()) throw std::invalid_argument("empty parameter grid");
    if (witnesses.empty()) throw std::invalid_argument("empty witness list");
    for (auto& w : witnesses)
        if (w.size() != ysyms.size())
            throw std::invalid_argument("witness dimension mismatch");

    // cartesian product of per-parameter grids
    std::vector<std::vector<double>> points;
    points.emplace_back();
    for (auto& axis : grid) {
        std::vector<std::vector<double>> next;
        for (auto& p : points)
            for (double v : axis) {
                auto q = p;
                q.push_back(v);
                next.push_back(std::move(q));
            }
        points = std::move(next);
    }

    // scan small-magnitude points first so the reported collision is the
    // least surprising one; ties break toward positive coordinates
    std::sort(points.begin(), points.end(),
              [](const std::vector<double>& a, const std::vector<double>& b) {
                  double na = 0, nb = 0;
                  for (double v : a) na += std::abs(v);
                  for (double v : b) nb += std::abs(v);
                  if (na != nb) return na < nb;
                  return a > b;
              });

    // evaluation table: per parameter point, values at every witness
    std::vector<std::vector<double>> table(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
        std::map<std::string, double> pt;
        for (size_t k = 0; k < wsyms.size(); ++k) pt[wsyms[k]] = points[i][k];
        for (auto& wit : witnesses) {
            for (size_t k = 0; k < ysyms.size(); ++k) pt[ysyms[k]] = wit[k];
            for (auto& z : sys.target.symbols())
                table[i].push_back(eval_numeric(sys.eval.at(z), pt));
        }
    }

    InjectivityVerdict v;
    v.parameter_grid = std::move(grid);
    v.source_witnesses = std::move(witnesses);
    for (size_t i = 0; i < points.size(); ++i)
        for (size_t j = i + 1; j < points.size(); ++j) {
            if (points[i] == points[j]) continue;
            bool equal = true;
            for (size_t k = 0; k < table[i].size() && equal; ++k)
                if (std::abs(table[i][k] - table[j][k]) > 1e-12) equal = false;
            if (equal) {
                v.collision_found = true;
                v.witness_a = points[i];
                v.witness_b = points[j];
                return v;
            }
        }
    return v;
}

EvaluationMap iota(const MapSystem& sys, const TangentPoint& X) {
    for (auto& w : sys.params.symbols()) {
        if (!X.values.count(w))
            throw std::invalid_argument("tangent point missing value for " + w);
        if (!X.values.count(dotted_name(w)))
            throw std::invalid_argument("tangent point missing value for " +
                                        dotted_name(w));
    }
    EvaluationMap out;
    ProlongedMap p1 = partial_tangent_1(sys);
    for (auto& [z, e] : sys.eval) out[z] = substitute(e, X.values);
    for (auto& [dz, e] : p1.dotted) out[dz] = substitute(e, X.values);
    return out;
}

}  // namespace jf
