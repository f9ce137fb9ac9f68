#include "jetfield/connection.hpp"

#include <set>
#include <stdexcept>

namespace jf {

namespace {

void check_table(const CoeffTable& t, const std::vector<std::string>& fibre,
                 const std::vector<std::string>& cols,
                 const std::set<std::string>& allowed, const char* what) {
    for (auto& i : fibre) {
        auto it = t.find(i);
        if (it == t.end())
            throw std::invalid_argument(std::string(what) + ": missing row " + i);
        for (auto& c : cols) {
            auto jt = it->second.find(c);
            if (jt == it->second.end())
                throw std::invalid_argument(std::string(what) + ": missing entry (" +
                                            i + "," + c + ")");
            std::set<std::string> used;
            collect_symbols(jt->second, used);
            for (auto& u : used)
                if (!allowed.count(u))
                    throw std::invalid_argument(std::string(what) + ": entry (" + i +
                                                "," + c + ") uses symbol " + u);
        }
    }
}

}  // namespace

void Connection::validate() const {
    fibred.validate();
    std::set<std::string> allowed;
    for (auto& s : fibred.symbols()) allowed.insert(s);
    check_table(coeff, fibred.of_role(Role::Fibre), fibred.of_role(Role::Base),
                allowed, "connection");
}

Connection Connection::make(Frame fibred, CoeffTable coeff) {
    Connection c{std::move(fibred), std::move(coeff)};
    c.validate();
    return c;
}

void ConnectionSystem::validate() const {
    fibred.validate();
    params.validate();
    std::set<std::string> allowed;
    for (auto& s : fibred.symbols()) allowed.insert(s);
    for (auto& s : params.symbols()) allowed.insert(s);
    check_table(coeff, fibred.of_role(Role::Fibre), fibred.of_role(Role::Base),
                allowed, "connection system");
}

ConnectionSystem ConnectionSystem::make(Frame fibred, Frame params, CoeffTable coeff) {
    ConnectionSystem c{std::move(fibred), std::move(params), std::move(coeff)};
    c.validate();
    return c;
}

Expr Curvature::at(const std::string& fibre, const std::string& a,
                   const std::string& b) const {
    for (auto& [i, p, q, v] : entries) {
        if (i != fibre) continue;
        if (p == a && q == b) return v;
        if (p == b && q == a) return neg(v);
    }
    return constant(0);
}

UpperConnection make_universal(const ConnectionSystem& sys) {
    UpperConnection up;
    up.fibred = sys.fibred;
    up.params = sys.params;
    up.base_leg = sys.coeff;
    for (auto& i : sys.fibred.of_role(Role::Fibre))
        for (auto& a : sys.params.symbols()) up.param_leg[i][a] = constant(0);
    return up;
}

ConnectionSystem base_component(const UpperConnection& up) {
    return ConnectionSystem::make(up.fibred, up.params, up.base_leg);
}

bool is_reducible(const UpperConnection& up, const std::vector<ChartChange>& charts) {
    auto fibre = up.fibred.of_role(Role::Fibre);
    for (auto& i : fibre)
        for (auto& [a, v] : up.param_leg.at(i))
            if (!v.is_zero()) return false;
    // The new-chart parameter leg is an invertible mix of
    // sum_j c|^j_A partial_j ybar^i, so it vanishes iff these do.
    for (auto& ch : charts) {
        for (auto& [tsym, role] : ch.target.coords) {
            if (role != Role::Fibre) continue;
            const Expr& ybar = ch.replacement.at(tsym);
            for (auto& a : up.params.symbols()) {
                Expr acc = constant(0);
                for (auto& j : fibre)
                    acc = add(acc, mul(up.param_leg.at(j).at(a), partial(ybar, j)));
                if (!acc.is_zero()) return false;
            }
        }
    }
    return true;
}

namespace {

Binding gamma_binding(const Frame& params, const ParameterSection& gamma) {
    Binding sub;
    for (auto& w : params.symbols()) {
        auto it = gamma.components.find(w);
        if (it == gamma.components.end())
            throw std::invalid_argument("gamma missing component " + w);
        sub[w] = it->second;
    }
    return sub;
}

}  // namespace

Connection pullback(const ConnectionSystem& sys, const ParameterSection& gamma) {
    Binding sub = gamma_binding(sys.params, gamma);
    CoeffTable out;
    for (auto& [i, row] : sys.coeff)
        for (auto& [lam, e] : row) out[i][lam] = substitute(e, sub);
    return Connection::make(sys.fibred, std::move(out));
}

Connection pullback(const UpperConnection& up, const ParameterSection& gamma) {
    Binding sub = gamma_binding(up.params, gamma);
    CoeffTable out;
    for (auto& i : up.fibred.of_role(Role::Fibre))
        for (auto& lam : up.fibred.of_role(Role::Base)) {
            Expr e = substitute(up.base_leg.at(i).at(lam), sub);
            // the d^A leg contracts with the section's derivative
            for (auto& a : up.params.symbols())
                e = add(e, mul(substitute(up.param_leg.at(i).at(a), sub),
                               partial(sub.at(a), lam)));
            out[i][lam] = e;
        }
    return Connection::make(up.fibred, std::move(out));
}

namespace {

Curvature curvature_table(const std::vector<std::string>& fibre,
                          const std::vector<std::string>& base,
                          const CoeffTable& coeff) {
    // A_ab = d_a c^i_b + c^j_a d_j c^i_b
    auto A = [&](const std::string& i, const std::string& a, const std::string& b) {
        Expr e = partial(coeff.at(i).at(b), a);
        for (auto& j : fibre)
            e = add(e, mul(coeff.at(j).at(a), partial(coeff.at(i).at(b), j)));
        return e;
    };
    Curvature R;
    R.base_indices = base;
    for (auto& i : fibre)
        for (size_t p = 0; p < base.size(); ++p)
            for (size_t q = p + 1; q < base.size(); ++q) {
                Expr v = mul(constant(-2),
                             sub(A(i, base[p], base[q]), A(i, base[q], base[p])));
                R.entries.emplace_back(i, base[p], base[q], v);
            }
    return R;
}

}  // namespace

Curvature curvature(const Connection& conn) {
    return curvature_table(conn.fibred.of_role(Role::Fibre),
                           conn.fibred.of_role(Role::Base), conn.coeff);
}

Curvature curvature(const UpperConnection& up) {
    std::vector<std::string> lifted = up.fibred.of_role(Role::Base);
    for (auto& a : up.params.symbols()) lifted.push_back(a);
    CoeffTable merged = up.base_leg;
    for (auto& [i, row] : up.param_leg)
        for (auto& [a, e] : row) merged[i][a] = e;
    return curvature_table(up.fibred.of_role(Role::Fibre), lifted, merged);
}

Curvature pullback_curvature(const Curvature& R, const UpperConnection& up,
                             const ParameterSection& gamma) {
    Binding sub = gamma_binding(up.params, gamma);
    auto base = up.fibred.of_role(Role::Base);
    auto wsyms = up.params.symbols();
    Curvature out;
    out.base_indices = base;
    for (auto& i : up.fibred.of_role(Role::Fibre))
        for (size_t p = 0; p < base.size(); ++p)
            for (size_t q = p + 1; q < base.size(); ++q) {
                const std::string& lam = base[p];
                const std::string& mu = base[q];
                Expr v = substitute(R.at(i, lam, mu), sub);
                for (auto& a : wsyms) {
                    v = add(v, mul(substitute(R.at(i, a, mu), sub),
                                   partial(sub.at(a), lam)));
                    v = add(v, mul(substitute(R.at(i, lam, a), sub),
                                   partial(sub.at(a), mu)));
                    for (auto& b : wsyms)
                        v = add(v, mul(mul(substitute(R.at(i, a, b), sub),
                                           partial(sub.at(a), lam)),
                                       partial(sub.at(b), mu)));
                }
                out.entries.emplace_back(i, lam, mu, v);
            }
    return out;
}

UniversalReport verify_universal(const ConnectionSystem& sys,
                                 const ParameterSection& gamma) {
    UniversalReport rep;
    UpperConnection up = make_universal(sys);

    Connection via_system = pullback(sys, gamma);
    Connection via_upper = pullback(up, gamma);
    rep.connection_identity = true;
    for (auto& i : sys.fibred.of_role(Role::Fibre))
        for (auto& lam : sys.fibred.of_role(Role::Base)) {
            Expr r = sub(via_upper.coeff.at(i).at(lam), via_system.coeff.at(i).at(lam));
            rep.residuals.emplace_back("connection[" + i + "," + lam + "]", r);
            if (!r.is_zero()) rep.connection_identity = false;
        }

    Curvature pulled = pullback_curvature(curvature(up), up, gamma);
    Curvature direct = curvature(via_system);
    rep.curvature_identity = true;
    auto base = sys.fibred.of_role(Role::Base);
    for (auto& i : sys.fibred.of_role(Role::Fibre))
        for (size_t p = 0; p < base.size(); ++p)
            for (size_t q = p + 1; q < base.size(); ++q) {
                Expr r = sub(pulled.at(i, base[p], base[q]),
                             direct.at(i, base[p], base[q]));
                rep.residuals.emplace_back(
                    "curvature[" + i + "," + base[p] + "," + base[q] + "]", r);
                if (!r.is_zero()) rep.curvature_identity = false;
            }
    return rep;
}

std::vector<std::tuple<std::string, std::string, Expr>> exterior_derivative(
    const std::vector<std::pair<std::string, Expr>>& one_form) {
    std::vector<std::tuple<std::string, std::string, Expr>> out;
    for (size_t p = 0; p < one_form.size(); ++p)
        for (size_t q = p + 1; q < one_form.size(); ++q) {
            Expr v = sub(partial(one_form[q].second, one_form[p].first),
                         partial(one_form[p].second, one_form[q].first));
            out.emplace_back(one_form[p].first, one_form[q].first, v);
        }
    return out;
}

LiouvilleReport liouville_check(int dim_m) {
    if (dim_m < 1) throw std::invalid_argument("dim_m must be >= 1");
    LiouvilleReport rep;
    rep.dim = dim_m;

    // principal connections of M x R -> M: c = d^mu (x) (d_mu + w_mu d_t),
    // parameters w_mu are the connection coefficients themselves
    Frame fibred;
    std::vector<std::string> xs, ws;
    for (int k = 0; k < dim_m; ++k) {
        xs.push_back("x" + std::to_string(k));
        fibred.coords.emplace_back(xs.back(), Role::Base);
    }
    fibred.coords.emplace_back("t", Role::Fibre);
    Frame params;
    for (int k = 0; k < dim_m; ++k) {
        ws.push_back("w" + std::to_string(k));
        params.coords.emplace_back(ws.back(), Role::Param);
    }
    CoeffTable coeff;
    for (int k = 0; k < dim_m; ++k) coeff["t"][xs[k]] = symbol(ws[k]);
    ConnectionSystem sys = ConnectionSystem::make(fibred, params, coeff);

    // Liouville form on T*M: lambda = xdot_mu d^mu, with w_mu = xdot_mu
    rep.lambda_matches = true;
    std::vector<std::pair<std::string, Expr>> lambda;
    for (int k = 0; k < dim_m; ++k) {
        lambda.emplace_back(xs[k], symbol(ws[k]));
        rep.liouville.emplace_back(xs[k], symbol(ws[k]));
        // the universal connection's horizontal form agrees by construction
        if (!(sys.coeff.at("t").at(xs[k]) == symbol(ws[k]))) rep.lambda_matches = false;
    }
    for (int k = 0; k < dim_m; ++k) lambda.emplace_back(ws[k], constant(0));

    // omega := -d(lambda) on T*M coordinates (x, xdot)
    for (auto& [a, b, v] : exterior_derivative(lambda))
        if (!v.is_zero() || true) rep.omega.emplace_back(a, b, neg(v));

    Curvature R = curvature(make_universal(sys));
    for (auto& [i, a, b, v] : R.entries) rep.universal_curvature.emplace_back(a, b, v);

    // curvature = normalization * omega, entry by entry
    rep.omega_matches_curvature = true;
    for (auto& [a, b, v] : rep.omega) {
        Expr expect = mul(constant(rep.normalization), v);
        bool found = false;
        for (auto& [p, q, rv] : rep.universal_curvature)
            if (p == a && q == b) {
                found = true;
                if (!(rv == expect)) rep.omega_matches_curvature = false;
            }
        if (!found && !v.is_zero()) rep.omega_matches_curvature = false;
    }
    return rep;
}

}  // namespace jf
