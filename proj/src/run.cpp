#include "jetfield/run.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "jetfield/rng.hpp"

namespace jf {

namespace {

using ordered_json = nlohmann::ordered_json;

struct ReportBuilder {
    ordered_json j;
    std::ostringstream text;
    bool ok = true;

    explicit ReportBuilder(const RunOptions& opt) {
        j["schema"] = 1;
        j["command"] = opt.command;
        j["seed"] = opt.seed;
        j["verdicts"] = ordered_json::object();
        j["output"] = ordered_json::object();
        j["residuals"] = ordered_json::array();
        text << "command: " << opt.command << "\nseed: " << opt.seed << "\n";
    }

    void verdict(const std::string& name, bool pass) {
        j["verdicts"][name] = pass;
        text << name << ": " << (pass ? "pass" : "FAIL") << "\n";
        ok = ok && pass;
    }

    void output(const std::string& key, const std::string& value) {
        j["output"][key] = value;
        text << key << " = " << value << "\n";
    }

    void residual(const std::string& name, const Expr& e) {
        j["residuals"].push_back({{"name", name}, {"expr", e.str()}});
        text << "residual " << name << ": " << e.str() << "\n";
    }

    Report done() {
        Report r;
        r.ok = ok;
        r.text = text.str();
        r.json = j.dump(2) + "\n";
        return r;
    }
};

const std::string& one(const RunOptions& opt, const std::string& key) {
    auto it = opt.args.find(key);
    if (it == opt.args.end() || it->second.size() != 1)
        throw UsageError("flag --" + key + " required exactly once");
    return it->second.front();
}

std::string one_or(const RunOptions& opt, const std::string& key,
                   const std::string& fallback) {
    auto it = opt.args.find(key);
    if (it == opt.args.end()) return fallback;
    if (it->second.size() != 1) throw UsageError("flag --" + key + " given twice");
    return it->second.front();
}

Rational parse_rational(const std::string& s) {
    size_t slash = s.find('/');
    if (slash != std::string::npos)
        return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    size_t dot = s.find('.');
    if (dot != std::string::npos) {
        std::string frac = s.substr(dot + 1);
        long long den = 1;
        for (size_t k = 0; k < frac.size(); ++k) den *= 10;
        long long whole = std::stoll(s.substr(0, dot) == "-" ? "0" : s.substr(0, dot));
        long long num = whole * den + (s[0] == '-' ? -1 : 1) * std::stoll("0" + frac);
        return Rational(num, den);
    }
    return Rational(std::stoll(s));
}

const ModelFile& need_model(const ModelFile* m) {
    if (!m) throw UsageError("this command requires --model");
    return *m;
}

template <typename Map>
const typename Map::mapped_type& lookup(const Map& m, const std::string& name,
                                        const char* what) {
    auto it = m.find(name);
    if (it == m.end())
        throw UsageError(std::string("unknown ") + what + " '" + name + "'");
    return it->second;
}

std::pair<const Curve*, Rational> pointed(const ModelFile& m, const std::string& spec) {
    size_t at = spec.find('@');
    if (at == std::string::npos)
        throw UsageError("curve flag must look like name@lam0: " + spec);
    const Curve& c = lookup(m.curves, spec.substr(0, at), "curve");
    return {&c, parse_rational(spec.substr(at + 1))};
}

std::vector<std::vector<double>> witness_box(size_t dim, std::uint64_t seed, int n = 8) {
    std::mt19937_64 g(seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::vector<double>> out;
    for (int k = 0; k < n; ++k) {
        std::vector<double> w;
        for (size_t d = 0; d < dim; ++d) w.push_back(2.0 * draw_unit(g) - 1.0);
        out.push_back(std::move(w));
    }
    return out;
}

void emit_map(ReportBuilder& rb, const std::string& prefix, const EvaluationMap& m) {
    for (auto& [k, e] : m) rb.output(prefix + k, e.str());
}

// ---- model-free builders ----------------------------------------------------

ConnectionSystem generic_connsystem(int nb, int nf, int np) {
    if (nb < 1 || nf < 1 || np < 1) throw UsageError("dims must all be >= 1");
    Frame fibred, params;
    std::vector<Expr> args;
    for (int k = 0; k < nb; ++k) fibred.coords.emplace_back("x" + std::to_string(k), Role::Base);
    for (int k = 0; k < nf; ++k) fibred.coords.emplace_back("y" + std::to_string(k), Role::Fibre);
    for (int k = 0; k < np; ++k) params.coords.emplace_back("w" + std::to_string(k), Role::Param);
    for (auto& s : fibred.of_role(Role::Base)) args.push_back(symbol(s));
    for (auto& s : params.symbols()) args.push_back(symbol(s));
    for (auto& s : fibred.of_role(Role::Fibre)) args.push_back(symbol(s));
    CoeffTable coeff;
    for (auto& i : fibred.of_role(Role::Fibre))
        for (auto& lam : fibred.of_role(Role::Base))
            coeff[i][lam] = opaque("eps_" + i + "_" + lam, args);
    return ConnectionSystem::make(fibred, params, coeff);
}

ParameterSection generic_gamma(const ConnectionSystem& sys) {
    std::vector<Expr> xargs;
    for (auto& s : sys.fibred.of_role(Role::Base)) xargs.push_back(symbol(s));
    ParameterSection g;
    for (auto& w : sys.params.symbols()) g.components[w] = opaque("gam_" + w, xargs);
    return g;
}

std::function<std::vector<double>(double)> builtin_body(const std::string& name) {
    if (name == "abs") return [](double t) { return std::vector<double>{std::fabs(t)}; };
    if (name == "cbrt") return [](double t) { return std::vector<double>{std::cbrt(t)}; };
    if (name == "cube") return [](double t) { return std::vector<double>{t * t * t}; };
    if (name == "poly")
        return [](double t) { return std::vector<double>{1 + t + t * t + t * t * t}; };
    throw UsageError("unknown probe body '" + name + "' (abs|cbrt|cube|poly)");
}

// ---- commands ----------------------------------------------------------------

void cmd_prolong(ReportBuilder& rb, const RunOptions& opt, const ModelFile* model) {
    const MapSystem& sys =
        lookup(need_model(model).systems, one(opt, "system"), "system");
    std::string kind = one_or(opt, "kind", "total");
    ProlongedMap p = kind == "total"  ? total_tangent(sys)
                     : kind == "p1"   ? partial_tangent_1(sys)
                     : kind == "p2"   ? partial_tangent_2(sys)
                                      : throw UsageError("--kind must be total|p1|p2");
    emit_map(rb, "", p.undotted);
    emit_map(rb, "", p.dotted);
    rb.verdict("decomposition", check_decomposition(sys));
}

void cmd_contact(ReportBuilder& rb, const RunOptions& opt, const ModelFile* model) {
    const ModelFile& m = need_model(model);
    const MapSystem& sys = lookup(m.systems, one(opt, "system"), "system");
    auto it = opt.args.find("curve");
    if (it == opt.args.end() || it->second.size() != 2)
        throw UsageError("contact requires exactly two --curve name@lam flags");
    auto [c1, l1] = pointed(m, it->second[0]);
    auto [c2, l2] = pointed(m, it->second[1]);
    PointedCurve p1{c1, l1}, p2{c2, l2};
    auto wit = witness_box(sys.source.coords.size(), opt.seed);
    bool contact = first_order_contact(sys, p1, p2, wit, 1e-7, opt.seed);
    if (c1->symbolic()) emit_map(rb, it->second[0] + ": ", tangent_rep_map_space(sys, p1));
    if (c2->symbolic()) emit_map(rb, it->second[1] + ": ", tangent_rep_map_space(sys, p2));
    rb.verdict("first_order_contact", contact);
}

void cmd_rep(ReportBuilder& rb, const RunOptions& opt, const ModelFile* model) {
    const ModelFile& m = need_model(model);
    const SectionSystem& sys =
        lookup(m.secsystems, one(opt, "secsystem"), "secsystem");
    auto [c, lam0] = pointed(m, one(opt, "curve"));
    SectionTangentRep rep = tangent_rep_section(sys, *c, lam0);
    for (auto& [x, v] : rep.base_point) rb.output("base " + x, v.str());
    for (auto& [x, v] : rep.u) rb.output("u " + x, v.str());
    for (auto& [z, v] : rep.xi0) rb.output("xi0 " + z, v.str());
    emit_map(rb, "forced ", forced_block(sys, rep));
    rb.output("vertical", rep.vertical() ? "true" : "false");
}

void cmd_section_apply(ReportBuilder& rb, const RunOptions& opt, const ModelFile* model) {
    const ModelFile& m = need_model(model);
    const SectionSystem& sys =
        lookup(m.secsystems, one(opt, "secsystem"), "secsystem");
    const ParameterSection& sigma = lookup(m.sections, one(opt, "section"), "section");
    emit_map(rb, "", apply_section(sys, sigma));
}

void cmd_universal(ReportBuilder& rb, const RunOptions& opt, const ModelFile* model) {
    const ConnectionSystem& sys =
        lookup(need_model(model).connsystems, one(opt, "connsystem"), "connsystem");
    UpperConnection up = make_universal(sys);
    for (auto& i : up.fibred.of_role(Role::Fibre)) {
        for (auto& lam : up.fibred.of_role(Role::Base))
            rb.output("base_leg[" + i + "," + lam + "]", up.base_leg.at(i).at(lam).str());
        for (auto& a : up.params.symbols())
            rb.output("param_leg[" + i + "," + a + "]", up.param_leg.at(i).at(a).str());
    }
    rb.verdict("reducible", is_reducible(up, {}));
}

void emit_curvature(ReportBuilder& rb, const Curvature& R) {
    for (auto& [i, a, b, v] : R.entries)
        rb.output("R[" + i + "," + a + "," + b + "]", v.str());
}

void cmd_curvature(ReportBuilder& rb, const RunOptions& opt, const ModelFile* model) {
    const ModelFile& m = need_model(model);
    const ConnectionSystem& sys =
        lookup(m.connsystems, one(opt, "connsystem"), "connsystem");
    if (opt.args.count("gamma")) {
        const ParameterSection& g = lookup(m.sections, one(opt, "gamma"), "gamma");
        emit_curvature(rb, curvature(pullback(sys, g)));
    } else {
        emit_curvature(rb, curvature(make_universal(sys)));
    }
}

void cmd_pullback(ReportBuilder& rb, const RunOptions& opt, const ModelFile* model) {
    const ModelFile& m = need_model(model);
    const ConnectionSystem& sys =
        lookup(m.connsystems, one(opt, "connsystem"), "connsystem");
    const ParameterSection& g = lookup(m.sections, one(opt, "gamma"), "gamma");
    Connection via_sys = pullback(sys, g);
    Connection via_up = pullback(make_universal(sys), g);
    bool agree = true;
    for (auto& [i, row] : via_sys.coeff)
        for (auto& [lam, e] : row) {
            rb.output("c[" + i + "," + lam + "]", e.str());
            agree = agree && e == via_up.coeff.at(i).at(lam);
        }
    rb.verdict("routes_agree", agree);
}

void run_verify(ReportBuilder& rb, const ConnectionSystem& sys,
                const ParameterSection& g) {
    UniversalReport rep = verify_universal(sys, g);
    rb.verdict("connection_identity", rep.connection_identity);
    rb.verdict("curvature_identity", rep.curvature_identity);
    for (auto& [name, e] : rep.residuals) rb.residual(name, e);
}

void cmd_verify_universal(ReportBuilder& rb, const RunOptions& opt,
                          const ModelFile* model) {
    if (opt.args.count("generic") || opt.args.count("dims")) {
        auto it = opt.args.find("dims");
        std::vector<int> dims;
        if (it != opt.args.end())
            for (auto& d : it->second) dims.push_back(std::stoi(d));
        if (dims.empty()) dims = {2, 1, 1};
        if (dims.size() != 3)
            throw UsageError("--dims expects three values: base fibre params");
        ConnectionSystem sys = generic_connsystem(dims[0], dims[1], dims[2]);
        run_verify(rb, sys, generic_gamma(sys));
        return;
    }
    const ModelFile& m = need_model(model);
    const ConnectionSystem& sys =
        lookup(m.connsystems, one(opt, "connsystem"), "connsystem");
    run_verify(rb, sys, lookup(m.sections, one(opt, "gamma"), "gamma"));
}

void cmd_liouville(ReportBuilder& rb, const RunOptions& opt) {
    int dim = std::stoi(one_or(opt, "dim", "1"));
    LiouvilleReport rep = liouville_check(dim);
    for (auto& [mu, e] : rep.liouville) rb.output("lambda[" + mu + "]", e.str());
    for (auto& [a, b, v] : rep.omega)
        rb.output("omega[" + a + "," + b + "]", v.str());
    for (auto& [a, b, v] : rep.universal_curvature)
        rb.output("R[t," + a + "," + b + "]", v.str());
    rb.output("normalization", rep.normalization.str());
    rb.verdict("lambda_matches", rep.lambda_matches);
    rb.verdict("omega_matches_curvature", rep.omega_matches_curvature);
}

void cmd_nabla(ReportBuilder& rb, const RunOptions& opt, const ModelFile* model) {
    const ModelFile& m = need_model(model);
    const OperatorConnection& K =
        lookup(m.fconnections, one(opt, "connection"), "fconnection");
    const ParameterSection& sigma = lookup(m.sections, one(opt, "section"), "section");
    CovariantDifferentialResult r = covariant_differential(K, sigma);
    for (auto& [a, row] : r.entries)
        for (auto& [lam, e] : row) rb.output("nabla[" + a + "," + lam + "]", e.str());
    rb.output("parallel", r.is_zero() ? "true" : "false");
}

void cmd_probe(ReportBuilder& rb, const RunOptions& opt) {
    auto f = builtin_body(one(opt, "body"));
    double at = std::stod(one_or(opt, "at", "0"));
    int order = std::stoi(one_or(opt, "order", "1"));
    ProbeVerdict v = smoothness_probe(f, at, order);
    for (size_t k = 0; k < v.rates.size(); ++k) {
        std::ostringstream os;
        os.precision(3);
        os << std::fixed << v.rates[k];
        rb.output("rate[" + std::to_string(k + 1) + "]", os.str());
    }
    if (!v.passes) rb.output("failed_order", std::to_string(v.failed_order));
    rb.verdict("passes", v.passes);
}

}  // namespace

Report run(const RunOptions& opt, const ModelFile* model) {
    ReportBuilder rb(opt);
    const std::string& c = opt.command;
    if (c == "prolong") cmd_prolong(rb, opt, model);
    else if (c == "contact") cmd_contact(rb, opt, model);
    else if (c == "rep") cmd_rep(rb, opt, model);
    else if (c == "section-apply") cmd_section_apply(rb, opt, model);
    else if (c == "universal") cmd_universal(rb, opt, model);
    else if (c == "curvature") cmd_curvature(rb, opt, model);
    else if (c == "pullback") cmd_pullback(rb, opt, model);
    else if (c == "verify-universal") cmd_verify_universal(rb, opt, model);
    else if (c == "liouville") cmd_liouville(rb, opt);
    else if (c == "nabla") cmd_nabla(rb, opt, model);
    else if (c == "probe") cmd_probe(rb, opt);
    else throw UsageError("unknown command '" + c + "'");
    return rb.done();
}

}  // namespace jf
