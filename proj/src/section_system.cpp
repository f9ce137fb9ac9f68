#include "jetfield/section_system.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace jf {

namespace {

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

// split a canonical expression into sum of key * coeff where key collects the
// factors built from `group` symbols; fails when a group symbol hides inside
// an opaque argument
std::optional<std::map<Expr, Expr, ExprLess>> split_by(
    const Expr& e, const std::set<std::string>& group) {
    std::map<Expr, Expr, ExprLess> out;
    auto add_term = [&](const Expr& term) -> bool {
        std::vector<Expr> factors;
        if (term.kind() == Kind::Product)
            factors = term.node().args;
        else
            factors = {term};
        Expr key = constant(1), coeff = constant(1);
        for (auto& f : factors) {
            const Expr& atom = f.kind() == Kind::Power ? f.node().args[0] : f;
            std::set<std::string> syms;
            collect_symbols(atom, syms);
            bool in_group = false;
            for (auto& s : syms)
                if (group.count(s)) in_group = true;
            if (in_group) {
                if (atom.kind() != Kind::Symbol) return false;  // inside opaque args
                key = mul(key, f);
            } else {
                coeff = mul(coeff, f);
            }
        }
        auto [it, fresh] = out.emplace(key, coeff);
        if (!fresh) it->second = add(it->second, coeff);
        return true;
    };
    if (e.kind() == Kind::Sum) {
        for (auto& t : e.node().args)
            if (!add_term(t)) return std::nullopt;
    } else if (!e.is_zero()) {
        if (!add_term(e)) return std::nullopt;
    }
    return out;
}

}  // namespace

void SectionSystem::validate() const {
    params.validate();
    for (auto& [s, r] : params.coords)
        if (r != Role::Param)
            throw std::invalid_argument("parameter block must use param role");
    std::set<std::string> allowed;
    for (auto& s : frames.total.symbols()) allowed.insert(s);
    for (auto& s : params.symbols()) allowed.insert(s);
    for (auto& z : top_symbols()) {
        auto it = eval.find(z);
        if (it == eval.end())
            throw std::invalid_argument("section system leaves " + z + " unassigned");
        std::set<std::string> used;
        collect_symbols(it->second, used);
        for (auto& u : used)
            if (!allowed.count(u))
                throw std::invalid_argument("evaluation map for " + z +
                                            " uses undeclared symbol " + u);
    }
    if (vector_bundle || affine_bundle) {
        auto wsyms = params.symbols();
        Binding zero;
        for (auto& w : wsyms) zero[w] = constant(0);
        for (auto& [z, e] : eval) {
            for (auto& wa : wsyms)
                for (auto& wb : wsyms)
                    if (!partial(partial(e, wa), wb).is_zero())
                        throw std::invalid_argument(
                            "bundle flag requires evaluation affine in parameters");
            if (vector_bundle && !substitute(e, zero).is_zero())
                throw std::invalid_argument(
                    "vector-bundle flag requires evaluation linear in parameters");
        }
    }
}

SectionSystem SectionSystem::make(DoubleFibredFrame frames, Frame params,
                                  EvaluationMap eval, bool vector_bundle,
                                  bool affine_bundle) {
    SectionSystem s{std::move(frames), std::move(params), std::move(eval),
                    vector_bundle, affine_bundle};
    s.validate();
    return s;
}

EvaluationMap apply_section(const SectionSystem& sys, const ParameterSection& sigma) {
    Binding sub;
    auto base = sys.base_symbols();
    for (auto& w : sys.params.symbols()) {
        auto it = sigma.components.find(w);
        if (it == sigma.components.end())
            throw std::invalid_argument("section missing component " + w);
        std::set<std::string> used;
        collect_symbols(it->second, used);
        for (auto& u : used)
            if (std::find(base.begin(), base.end(), u) == base.end())
                throw std::invalid_argument("section component " + w +
                                            " uses non-base symbol " + u);
        sub[w] = it->second;
    }
    EvaluationMap out;
    for (auto& [z, e] : sys.eval) out[z] = substitute(e, sub);
    return out;
}

Frame lift_fibred(const SectionSystem& sys) {
    Frame f;
    for (auto& [s, r] : sys.frames.base.coords) f.coords.emplace_back(s, Role::Base);
    for (auto& [s, r] : sys.params.coords) f.coords.emplace_back(s, Role::Param);
    for (auto& s : sys.fibre_symbols()) f.coords.emplace_back(s, Role::Fibre);
    f.validate();
    return f;
}

bool SectionTangentRep::vertical() const {
    for (auto& [mu, c] : u)
        if (!c.is_zero()) return false;
    return true;
}

EvaluationMap attachment_body(const SectionSystem& sys, const SectionTangentRep& rep) {
    Binding sub = rep.section_point;
    for (auto& [x, v] : rep.base_point) sub[x] = v;
    EvaluationMap out;
    for (auto& [z, e] : sys.eval) out[z] = substitute(e, sub);
    return out;
}

EvaluationMap forced_block(const SectionSystem& sys, const SectionTangentRep& rep) {
    EvaluationMap body = attachment_body(sys, rep);
    EvaluationMap out;
    for (auto& [z, e] : body) {
        Expr d = constant(0);
        for (auto& y : sys.fibre_symbols())
            d = add(d, mul(partial(e, y), symbol(dotted_name(y))));
        out[dotted_name(z)] = d;
    }
    return out;
}

SectionTangentRep tangent_rep_section(const SectionSystem& sys, const Curve& chat,
                                      const Rational& lam0) {
    if (!chat.symbolic())
        throw std::invalid_argument("tangent_rep_section requires a symbolic curve");
    if (!chat.interval.contains(lam0))
        throw std::invalid_argument("lam0 outside curve interval");
    const auto& comp = std::get<SymbolicBody>(chat.body).components;
    Binding at{{kCurveParam, constant(lam0)}};

    SectionTangentRep rep;
    Binding sub;
    for (auto& x : sys.base_symbols()) {
        const Expr& cx = comp.at(x);
        sub[x] = cx;
        rep.base_point[x] = substitute(cx, at);
        rep.u[x] = substitute(partial(cx, kCurveParam), at);
    }
    for (auto& w : sys.params.symbols()) {
        const Expr& cw = comp.at(w);
        sub[w] = cw;
        rep.section_point[w] = substitute(cw, at);
    }
    for (auto& [z, e] : sys.eval) {
        Expr pb = substitute(e, sub);  // over (lam, y)
        rep.xi0[z] = substitute(partial(pb, kCurveParam), at);
    }
    return rep;
}

SectionTangentRep rep_scale(const SectionSystem&, const Rational& r,
                            const SectionTangentRep& rep) {
    SectionTangentRep out = rep;
    for (auto& [mu, c] : out.u) c = mul(constant(r), c);
    for (auto& [z, e] : out.xi0) e = mul(constant(r), e);
    return out;
}

SectionTangentRep rep_add(const SectionSystem&, const SectionTangentRep& a,
                          const SectionTangentRep& b) {
    for (auto& [w, v] : a.section_point)
        if (!(v == b.section_point.at(w)))
            throw std::invalid_argument("rep_add requires reps at the same point");
    for (auto& [x, v] : a.base_point)
        if (!(v == b.base_point.at(x)))
            throw std::invalid_argument("rep_add requires reps over the same base point");
    SectionTangentRep out = a;
    for (auto& [mu, c] : out.u) c = add(c, b.u.at(mu));
    for (auto& [z, e] : out.xi0) e = add(e, b.xi0.at(z));
    return out;
}

std::optional<ParameterSection> match_parameters(const SectionSystem& sys,
                                                 const EvaluationMap& body) {
    auto wsyms = sys.params.symbols();
    std::set<std::string> yset;
    for (auto& y : sys.fibre_symbols()) yset.insert(y);

    // eps must be affine in w for the signature decomposition
    Binding zero;
    for (auto& w : wsyms) zero[w] = constant(0);

    // unknown index per parameter
    std::map<std::string, size_t> idx;
    for (size_t k = 0; k < wsyms.size(); ++k) idx[wsyms[k]] = k;

    // rows: (rational coefficients per unknown, Expr rhs)
    std::vector<std::pair<std::vector<Rational>, Expr>> rows;
    for (auto& z : sys.top_symbols()) {
        Expr rhs_e = sub(body.at(z), substitute(sys.eval.at(z), zero));
        auto rhs_split = split_by(rhs_e, yset);
        if (!rhs_split) return std::nullopt;

        // signature of each unknown within this target component
        std::map<Expr, std::vector<Rational>, ExprLess> eqs;  // key -> coeff row
        for (auto& [key, c] : *rhs_split) eqs.emplace(key, std::vector<Rational>(wsyms.size()));
        for (auto& w : wsyms) {
            Expr cwa = partial(sys.eval.at(z), w);
            std::set<std::string> used;
            collect_symbols(cwa, used);
            for (auto& u : used)
                if (idx.count(u)) return std::nullopt;  // not affine in w
            auto csplit = split_by(cwa, yset);
            if (!csplit) return std::nullopt;
            for (auto& [key, c] : *csplit) {
                if (!c.is_constant()) return std::nullopt;  // non-rational signature
                auto [it, fresh] =
                    eqs.emplace(key, std::vector<Rational>(wsyms.size()));
                it->second[idx[w]] = c.constant_value();
            }
        }
        for (auto& [key, coeffs] : eqs) {
            Expr rhs = constant(0);
            auto it = rhs_split->find(key);
            if (it != rhs_split->end()) rhs = it->second;
            rows.emplace_back(coeffs, rhs);
        }
    }

    // Gaussian elimination: rational matrix, Expr right-hand sides
    size_t ncols = wsyms.size();
    size_t rank = 0;
    std::vector<size_t> pivot_col;
    for (size_t col = 0; col < ncols && rank < rows.size(); ++col) {
        size_t piv = rank;
        while (piv < rows.size() && rows[piv].first[col].is_zero()) ++piv;
        if (piv == rows.size()) continue;
        std::swap(rows[piv], rows[rank]);
        Rational inv = rows[rank].first[col].inverse();
        for (auto& c : rows[rank].first) c *= inv;
        rows[rank].second = mul(constant(inv), rows[rank].second);
        for (size_t r = 0; r < rows.size(); ++r) {
            if (r == rank || rows[r].first[col].is_zero()) continue;
            Rational f = rows[r].first[col];
            for (size_t k = 0; k < ncols; ++k)
                rows[r].first[k] -= f * rows[rank].first[k];
            rows[r].second = sub(rows[r].second, mul(constant(f), rows[rank].second));
        }
        pivot_col.push_back(col);
        ++rank;
    }
    for (size_t r = rank; r < rows.size(); ++r)
        if (!rows[r].second.is_zero()) return std::nullopt;  // inconsistent

    ParameterSection sol;
    for (auto& w : wsyms) sol.components[w] = constant(0);
    for (size_t r = 0; r < rank; ++r)
        sol.components[wsyms[pivot_col[r]]] = rows[r].second;

    // verify (guards the free-variable and degenerate cases)
    EvaluationMap check = apply_section(sys, sol);
    for (auto& [z, e] : body)
        if (!(e == check.at(z))) return std::nullopt;
    return sol;
}

VerticalSplit vertical_split(const SectionSystem& sys, const SectionTangentRep& rep) {
    if (!sys.vector_bundle)
        throw std::invalid_argument("vertical_split requires a vector-bundle system");
    if (!rep.vertical())
        throw std::invalid_argument("vertical_split requires a vertical rep (u = 0)");
    VerticalSplit out;
    // z^a = Xi^a_0 as a map F_b -> G_b
    for (auto& [z, e] : rep.xi0) out.xi_bar[z] = e;
    out.parameter = match_parameters(sys, out.xi_bar);
    return out;
}

SectionTangentRep transform_rep(const SectionSystem& sys, const SectionTangentRep& rep,
                                const ChartChange& ch) {
    auto base = sys.base_symbols();
    auto fibre = sys.fibre_symbols();
    auto top = sys.top_symbols();

    // partials of the new coordinates, restricted to the attachment section
    EvaluationMap body = attachment_body(sys, rep);
    Binding on_section;
    for (auto& [z, e] : body) on_section[z] = e;
    for (auto& [x, v] : rep.base_point) on_section[x] = v;

    SectionTangentRep out;
    out.section_point = rep.section_point;  // parameter labels are chart-independent here
    out.base_point = rep.base_point;

    // u-bar^mu = partial_nu xbar^mu u^nu
    size_t bi = 0;
    for (auto& [tsym, role] : ch.target.coords) {
        if (role != Role::Base) continue;
        const Expr& xbar = ch.replacement.at(tsym);
        Expr acc = constant(0);
        for (auto& x : base)
            acc = add(acc, mul(substitute(partial(xbar, x), on_section), rep.u.at(x)));
        out.u[base[bi++]] = acc;  // keyed by old base slot order
    }

    // Xi-bar^a_0 = partial_b zbar^a Xi^b_0 + partial_mu zbar^a u^mu
    size_t zi = 0;
    for (auto& [tsym, role] : ch.target.coords) {
        if (role != Role::Fibre2) continue;
        const Expr& zbar = ch.replacement.at(tsym);
        Expr acc = constant(0);
        for (auto& z : top)
            acc = add(acc, mul(substitute(partial(zbar, z), on_section), rep.xi0.at(z)));
        for (auto& x : base)
            acc = add(acc, mul(substitute(partial(zbar, x), on_section), rep.u.at(x)));
        out.xi0[top[zi++]] = acc;
    }
    return out;
}

bool chart_invariance_check(const SectionSystem& sys, const SectionTangentRep& rep1,
                            const SectionTangentRep& rep2, const Rational& r,
                            const ChartChange& ch) {
    auto equal_reps = [](const SectionTangentRep& a, const SectionTangentRep& b) {
        for (auto& [mu, c] : a.u)
            if (!(c == b.u.at(mu))) return false;
        for (auto& [z, e] : a.xi0)
            if (!(e == b.xi0.at(z))) return false;
        return true;
    };
    // scaling commutes
    SectionTangentRep lhs = transform_rep(sys, rep_scale(sys, r, rep1), ch);
    SectionTangentRep rhs = rep_scale(sys, r, transform_rep(sys, rep1, ch));
    if (!equal_reps(lhs, rhs)) return false;
    // addition commutes
    lhs = transform_rep(sys, rep_add(sys, rep1, rep2), ch);
    rhs = rep_add(sys, transform_rep(sys, rep1, ch), transform_rep(sys, rep2, ch));
    return equal_reps(lhs, rhs);
}

SectionTangentRep tangent_prolong_section(const SectionSystem& sys,
                                          const ParameterSection& sigma,
                                          const std::map<std::string, Expr>& u) {
    EvaluationMap bar = apply_section(sys, sigma);
    SectionTangentRep rep;
    for (auto& x : sys.base_symbols()) {
        rep.base_point[x] = symbol(x);
        rep.u[x] = u.at(x);
    }
    for (auto& [w, e] : sigma.components) rep.section_point[w] = e;
    for (auto& [z, e] : bar) {
        Expr acc = constant(0);
        for (auto& x : sys.base_symbols())
            acc = add(acc, mul(partial(e, x), u.at(x)));
        rep.xi0[z] = acc;
    }
    return rep;
}

std::optional<std::function<std::optional<ParameterSection>(const ParameterSection&)>>
hat_operator(const SectionSystem& sysA, const SectionSystem& sysB,
             const SectionOperator& op, const std::vector<ParameterSection>& instances,
             std::string* err) {
    for (auto& sigma : instances) {
        EvaluationMap image = op(apply_section(sysA, sigma));
        if (!match_parameters(sysB, image)) {
            if (err) {
                *err = "operator image leaves the selected sheaf:";
                for (auto& [z, e] : image) *err += " " + z + " = " + e.str();
            }
            return std::nullopt;
        }
    }
    auto fn = [sysA, sysB, op](const ParameterSection& sigma) {
        return match_parameters(sysB, op(apply_section(sysA, sigma)));
    };
    return fn;
}

}  // namespace jf
