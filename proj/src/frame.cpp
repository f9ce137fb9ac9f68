#include "jetfield/frame.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "jetfield/realize.hpp"
#include "jetfield/rng.hpp"

namespace jf {

const char* role_name(Role r) {
    switch (r) {
        case Role::Base: return "base";
        case Role::Fibre: return "fibre";
        case Role::Param: return "param";
        case Role::Fibre2: return "fibre2";
    }
    return "?";
}

std::vector<std::string> Frame::symbols() const {
    std::vector<std::string> out;
    out.reserve(coords.size());
    for (auto& [s, r] : coords) out.push_back(s);
    return out;
}

std::vector<std::string> Frame::of_role(Role role) const {
    std::vector<std::string> out;
    for (auto& [s, r] : coords)
        if (r == role) out.push_back(s);
    return out;
}

bool Frame::contains(const std::string& sym) const {
    for (auto& [s, r] : coords)
        if (s == sym) return true;
    return false;
}

Role Frame::role_of(const std::string& sym) const {
    for (auto& [s, r] : coords)
        if (s == sym) return r;
    throw std::invalid_argument("symbol not in frame: " + sym);
}

SymbolTable Frame::symbol_table(std::map<std::string, int> opaques) const {
    SymbolTable t;
    for (auto& [s, r] : coords) t.coordinates.insert(s);
    t.opaques = std::move(opaques);
    return t;
}

void Frame::validate() const {
    if (coords.empty()) throw std::invalid_argument("empty frame");
    std::set<std::string> seen;
    for (auto& [s, r] : coords)
        if (!seen.insert(s).second)
            throw std::invalid_argument("duplicate coordinate symbol: " + s);
    // role blocks contiguous
    std::set<Role> closed;
    Role current = coords.front().second;
    for (auto& [s, r] : coords) {
        if (r != current) {
            closed.insert(current);
            if (closed.count(r))
                throw std::invalid_argument("non-contiguous role block at " + s);
            current = r;
        }
    }
}

Frame Frame::make(std::vector<std::pair<std::string, Role>> coords) {
    Frame f{std::move(coords)};
    f.validate();
    return f;
}

DoubleFibredFrame DoubleFibredFrame::make(Frame b, Frame f, Frame g) {
    b.validate();
    f.validate();
    g.validate();
    if (!b.of_role(Role::Fibre).empty() || !b.of_role(Role::Fibre2).empty())
        throw std::invalid_argument("base frame must contain base coordinates only");
    if (f.of_role(Role::Base) != b.of_role(Role::Base))
        throw std::invalid_argument("F's base block must equal B's coordinates");
    if (g.of_role(Role::Base) != f.of_role(Role::Base) ||
        g.of_role(Role::Fibre) != f.of_role(Role::Fibre))
        throw std::invalid_argument("G's base+fibre blocks must equal F's coordinates");
    if (g.of_role(Role::Fibre2).empty())
        throw std::invalid_argument("G must declare second-fibre coordinates");
    return DoubleFibredFrame{std::move(b), std::move(f), std::move(g)};
}

std::string dotted_name(const std::string& sym) { return "d_" + sym; }

SymbolTable TangentFrame::symbol_table(std::map<std::string, int> opaques) const {
    SymbolTable t = frame.symbol_table(std::move(opaques));
    for (auto& d : dotted) t.coordinates.insert(d);
    return t;
}

TangentFrame induce_tangent(const Frame& frame) {
    frame.validate();
    TangentFrame t;
    t.frame = frame;
    for (auto& [s, r] : frame.coords) {
        std::string d = dotted_name(s);
        if (frame.contains(d))
            throw std::invalid_argument("dotted symbol collides with coordinate: " + d);
        t.dotted.push_back(d);
    }
    return t;
}

namespace {

bool role_allowed(Role target, Role used) {
    if (used == Role::Base) return true;
    switch (target) {
        case Role::Base: return false;
        case Role::Fibre: return used == Role::Fibre;
        case Role::Param: return used == Role::Param;
        case Role::Fibre2: return used == Role::Fibre || used == Role::Fibre2;
    }
    return false;
}

}  // namespace

ChartChange ChartChange::make(Frame source, Frame target, Binding replacement) {
    source.validate();
    target.validate();
    for (Role r : {Role::Base, Role::Fibre, Role::Param, Role::Fibre2})
        if (source.of_role(r).size() != target.of_role(r).size())
            throw std::invalid_argument(std::string("chart change must preserve ") +
                                        role_name(r) + " dimension");
    for (auto& [t, role] : target.coords) {
        auto it = replacement.find(t);
        if (it == replacement.end())
            throw std::invalid_argument("missing replacement for " + t);
        std::set<std::string> used;
        collect_symbols(it->second, used);
        for (auto& u : used) {
            if (!source.contains(u))
                throw std::invalid_argument("replacement for " + t +
                                            " uses undeclared symbol " + u);
            if (!role_allowed(role, source.role_of(u)))
                throw std::invalid_argument(
                    "replacement for " + t + " violates block triangularity (uses " +
                    u + ")");
        }
    }
    return ChartChange{std::move(source), std::move(target), std::move(replacement)};
}

ChartChange ChartChange::identity(const Frame& f) {
    Binding b;
    for (auto& [s, r] : f.coords) b[s] = symbol(s);
    return ChartChange{f, f, std::move(b)};
}

bool ChartChange::generically_invertible(std::uint64_t seed, int points,
                                         double tol) const {
    size_t n = source.coords.size();
    std::mt19937_64 g(seed ^ 0xa5a5a5a51234abcdull);
    std::map<std::string, OpaqueFn> real;
    for (auto& [t, e] : replacement) realize_opaques(e, g, real);

    // symbolic Jacobian, evaluated at random points
    std::vector<std::vector<Expr>> jac(n, std::vector<Expr>(n));
    for (size_t i = 0; i < n; ++i) {
        const Expr& e = replacement.at(target.coords[i].first);
        for (size_t j = 0; j < n; ++j)
            jac[i][j] = partial(e, source.coords[j].first);
    }

    for (int p = 0; p < points; ++p) {
        std::map<std::string, double> pt;
        for (auto& [s, r] : source.coords) pt[s] = draw_rational(g).to_double();
        std::vector<std::vector<double>> m(n, std::vector<double>(n));
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                m[i][j] = eval_numeric(jac[i][j], pt, real);
        // LU determinant with partial pivoting
        double det = 1.0;
        for (size_t c = 0; c < n; ++c) {
            size_t piv = c;
            for (size_t r = c + 1; r < n; ++r)
                if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
            if (piv != c) { std::swap(m[piv], m[c]); det = -det; }
            if (std::abs(m[c][c]) <= tol) { det = 0.0; break; }
            det *= m[c][c];
            for (size_t r = c + 1; r < n; ++r) {
                double f = m[r][c] / m[c][c];
                for (size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
            }
        }
        if (std::abs(det) <= tol) return false;
    }
    return true;
}

ChartChange compose(const ChartChange& first, const ChartChange& second) {
    if (!(first.target == second.source))
        throw std::invalid_argument("chart changes do not compose");
    Binding b;
    for (auto& [t, e] : second.replacement) b[t] = substitute(e, first.replacement);
    return ChartChange{first.source, second.target, std::move(b)};
}

ChartChange prolong_chart_change(const ChartChange& ch) {
    TangentFrame src = induce_tangent(ch.source);
    TangentFrame tgt = induce_tangent(ch.target);

    auto tangent_frame = [](const TangentFrame& t) {
        Frame f = t.frame;
        for (size_t i = 0; i < t.dotted.size(); ++i)
            f.coords.emplace_back(t.dotted[i], t.frame.coords[i].second);
        return f;  // role blocks no longer contiguous; used as a symbol pool only
    };

    Binding b = ch.replacement;
    for (size_t i = 0; i < tgt.dotted.size(); ++i) {
        const Expr& e = ch.replacement.at(ch.target.coords[i].first);
        Expr total = constant(0);
        for (size_t j = 0; j < ch.source.coords.size(); ++j) {
            Expr d = partial(e, ch.source.coords[j].first);
            if (!d.is_zero()) total = add(total, mul(d, symbol(src.dotted[j])));
        }
        b[tgt.dotted[i]] = total;
    }
    return ChartChange{tangent_frame(src), tangent_frame(tgt), std::move(b)};
}

}  // namespace jf
