#include "jetfield/model.hpp"

#include <cctype>
#include <functional>
#include <sstream>

#include "jetfield/parse.hpp"

namespace jf {

bool ModelFile::has_name(const std::string& n) const {
    for (auto& d : order)
        if (d.name == n) return true;
    return false;
}

namespace {

struct Scanner {
    const std::string& s;
    size_t pos = 0;

    void skip_ws() {
        for (;;) {
            while (pos < s.size() && std::isspace((unsigned char)s[pos])) ++pos;
            if (pos < s.size() && s[pos] == '#') {
                while (pos < s.size() && s[pos] != '\n') ++pos;
                continue;
            }
            return;
        }
    }

    std::pair<int, int> line_col(size_t at) const {
        int line = 1, col = 1;
        for (size_t i = 0; i < at && i < s.size(); ++i) {
            if (s[i] == '\n') { ++line; col = 1; }
            else ++col;
        }
        return {line, col};
    }

    [[noreturn]] void fail(const std::string& msg, size_t at) {
        auto [l, c] = line_col(at);
        throw ModelError(msg, l, c);
    }
    [[noreturn]] void fail(const std::string& msg) { fail(msg, pos); }

    bool done() {
        skip_ws();
        return pos >= s.size();
    }

    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }

    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) { ++pos; return true; }
        return false;
    }

    void expect(char c) {
        if (!eat(c)) fail(std::string("expected '") + c + "'");
    }

    std::string ident() {
        skip_ws();
        size_t start = pos;
        if (pos >= s.size() || !(std::isalpha((unsigned char)s[pos]) || s[pos] == '_'))
            fail("expected identifier");
        while (pos < s.size() && (std::isalnum((unsigned char)s[pos]) || s[pos] == '_'))
            ++pos;
        return s.substr(start, pos - start);
    }

    void expect_word(const std::string& w) {
        size_t at = pos;
        skip_ws();
        at = pos;
        if (ident() != w) fail("expected '" + w + "'", at);
    }

    long long integer() {
        skip_ws();
        size_t start = pos;
        if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) ++pos;
        if (pos >= s.size() || !std::isdigit((unsigned char)s[pos]))
            fail("expected integer");
        while (pos < s.size() && std::isdigit((unsigned char)s[pos])) ++pos;
        return std::stoll(s.substr(start, pos - start));
    }

    // raw expression text up to an unnested newline, ';' or '}'
    std::string expr_text(size_t* start_out) {
        skip_ws();
        size_t start = pos;
        int depth = 0;
        while (pos < s.size()) {
            char c = s[pos];
            if (c == '(' || c == '[') ++depth;
            else if (c == ')' || c == ']') --depth;
            else if (depth == 0 && (c == '\n' || c == ';' || c == '}' || c == '#'))
                break;
            ++pos;
        }
        if (start_out) *start_out = start;
        return s.substr(start, pos - start);
    }
};

struct ModelParser {
    Scanner sc;
    ModelFile m;

    explicit ModelParser(const std::string& text) : sc{text} {}

    void require_fresh(const std::string& name, size_t at) {
        if (m.has_name(name)) sc.fail("duplicate declaration name '" + name + "'", at);
    }

    const Frame& frame_ref(const std::string& name, size_t at) {
        auto it = m.frames.find(name);
        if (it == m.frames.end()) sc.fail("unknown frame '" + name + "'", at);
        return it->second;
    }

    Expr parse_body(const SymbolTable& table) {
        size_t start = 0;
        std::string text = sc.expr_text(&start);
        try {
            return parse_expr(text, table);
        } catch (const ParseError& e) {
            sc.fail(e.what(), start + e.offset);
        }
    }

    // `{ key = expr ... }` with caller-supplied key reader
    template <typename Key>
    std::vector<std::pair<Key, Expr>> entry_block(const SymbolTable& table,
                                                  Key (*read_key)(ModelParser&)) {
        sc.expect('{');
        std::vector<std::pair<Key, Expr>> out;
        while (!sc.eat('}')) {
            if (sc.eat(';')) continue;
            Key k = read_key(*this);
            sc.expect('=');
            out.emplace_back(std::move(k), parse_body(table));
        }
        return out;
    }

    static std::string plain_key(ModelParser& p) { return p.sc.ident(); }

    std::vector<std::string> symbol_list() {
        sc.expect('{');
        std::vector<std::string> out;
        while (!sc.eat('}')) out.push_back(sc.ident());
        return out;
    }

    SymbolTable table_of(std::initializer_list<const Frame*> frames,
                         std::initializer_list<std::string> extra = {}) {
        SymbolTable t;
        for (auto* f : frames)
            for (auto& sym : f->symbols()) t.coordinates.insert(sym);
        for (auto& e : extra) t.coordinates.insert(e);
        t.opaques = m.opaques;
        return t;
    }

    void wrap(const std::string& what, size_t at, const std::function<void()>& fn) {
        try {
            fn();
        } catch (const ModelError&) {
            throw;
        } catch (const std::exception& e) {
            sc.fail(what + ": " + e.what(), at);
        }
    }

    void parse() {
        while (!sc.done()) {
            size_t at = sc.pos;
            std::string kw = sc.ident();
            if (kw == "chart") decl_chart(at);
            else if (kw == "fibred") decl_fibred(at);
            else if (kw == "params") decl_params(at);
            else if (kw == "opaque") decl_opaque(at);
            else if (kw == "system") decl_system(at);
            else if (kw == "secsystem") decl_secsystem(at);
            else if (kw == "connsystem") decl_connsystem(at);
            else if (kw == "section" || kw == "gamma") decl_section(kw, at);
            else if (kw == "curve") decl_curve(at);
            else if (kw == "change") decl_change(at);
            else if (kw == "fconnection") decl_fconnection(at);
            else sc.fail("unknown declaration '" + kw + "'", at);
        }
    }

    void decl_chart(size_t at) {
        std::string name = sc.ident();
        require_fresh(name, at);
        std::vector<std::pair<std::string, Role>> coords;
        for (auto& sym : symbol_list()) coords.emplace_back(sym, Role::Base);
        wrap("chart " + name, at, [&] { m.frames[name] = Frame::make(coords); });
        m.order.push_back({"chart", name, {}});
    }

    void decl_fibred(size_t at) {
        std::string name = sc.ident();
        require_fresh(name, at);
        sc.expect_word("over");
        size_t pat = sc.pos;
        std::string parent = sc.ident();
        const Frame& pf = frame_ref(parent, pat);
        Role role = pf.of_role(Role::Fibre).empty() ? Role::Fibre : Role::Fibre2;
        if (!pf.of_role(Role::Fibre2).empty())
            sc.fail("cannot fibre over a double fibred frame", pat);
        auto coords = pf.coords;
        for (auto& sym : symbol_list()) coords.emplace_back(sym, role);
        wrap("fibred " + name, at, [&] { m.frames[name] = Frame::make(coords); });
        m.order.push_back({"fibred", name, {parent}});
    }

    void decl_params(size_t at) {
        std::string name = sc.ident();
        require_fresh(name, at);
        std::vector<std::pair<std::string, Role>> coords;
        for (auto& sym : symbol_list()) coords.emplace_back(sym, Role::Param);
        wrap("params " + name, at, [&] { m.frames[name] = Frame::make(coords); });
        m.order.push_back({"params", name, {}});
    }

    void decl_opaque(size_t at) {
        std::string name = sc.ident();
        require_fresh(name, at);
        long long arity = sc.integer();
        if (arity < 1) sc.fail("opaque arity must be >= 1", at);
        m.opaques[name] = (int)arity;
        m.order.push_back({"opaque", name, {}});
    }

    void decl_system(size_t at) {
        std::string name = sc.ident();
        require_fresh(name, at);
        sc.expect_word("params");
        size_t pat = sc.pos;
        std::string pn = sc.ident();
        sc.expect_word("source");
        size_t sat = sc.pos;
        std::string sn = sc.ident();
        sc.expect_word("target");
        size_t tat = sc.pos;
        std::string tn = sc.ident();
        const Frame& P = frame_ref(pn, pat);
        const Frame& S = frame_ref(sn, sat);
        const Frame& T = frame_ref(tn, tat);
        sc.expect_word("eval");
        auto entries = entry_block<std::string>(table_of({&P, &S}), &plain_key);
        EvaluationMap eval;
        for (auto& [k, e] : entries) eval[k] = e;
        wrap("system " + name, at,
             [&] { m.systems.emplace(name, MapSystem::make(P, S, T, eval)); });
        m.order.push_back({"system", name, {pn, sn, tn}});
    }

    std::vector<std::string> over_list(size_t n) {
        sc.expect_word("over");
        sc.expect('(');
        std::vector<std::string> names;
        do {
            names.push_back(sc.ident());
        } while (sc.eat(','));
        sc.expect(')');
        if (names.size() != n) sc.fail("expected " + std::to_string(n) + " frame names");
        return names;
    }

    void decl_secsystem(size_t at) {
        std::string name = sc.ident();
        require_fresh(name, at);
        auto names = over_list(3);
        const Frame& B = frame_ref(names[0], at);
        const Frame& F = frame_ref(names[1], at);
        const Frame& G = frame_ref(names[2], at);
        sc.expect_word("params");
        size_t pat = sc.pos;
        std::string pn = sc.ident();
        const Frame& P = frame_ref(pn, pat);
        bool vec = false, aff = false;
        for (;;) {
            size_t kat = sc.pos;
            std::string kw = sc.ident();
            if (kw == "vector") vec = true;
            else if (kw == "affine") aff = true;
            else if (kw == "eval") break;
            else sc.fail("expected 'vector', 'affine' or 'eval'", kat);
        }
        auto entries = entry_block<std::string>(table_of({&F, &P}), &plain_key);
        EvaluationMap eval;
        for (auto& [k, e] : entries) eval[k] = e;
        wrap("secsystem " + name, at, [&] {
            m.secsystems.emplace(
                name, SectionSystem::make(DoubleFibredFrame::make(B, F, G), P, eval,
                                          vec, aff));
        });
        m.order.push_back({"secsystem", name, {names[0], names[1], names[2], pn}});
    }

    struct CoeffKey {
        std::string i, lam;
    };
    static CoeffKey coeff_key(ModelParser& p) {
        p.sc.expect_word("c");
        p.sc.expect('[');
        CoeffKey k;
        k.i = p.sc.ident();
        p.sc.expect(',');
        k.lam = p.sc.ident();
        p.sc.expect(']');
        return k;
    }

    void decl_connsystem(size_t at) {
        std::string name = sc.ident();
        require_fresh(name, at);
        auto names = over_list(2);
        const Frame& B = frame_ref(names[0], at);
        const Frame& F = frame_ref(names[1], at);
        (void)B;
        sc.expect_word("params");
        size_t pat = sc.pos;
        std::string pn = sc.ident();
        const Frame& P = frame_ref(pn, pat);
        sc.expect_word("coeff");
        auto entries = entry_block<CoeffKey>(table_of({&F, &P}), &coeff_key);
        CoeffTable coeff;
        for (auto& [k, e] : entries) coeff[k.i][k.lam] = e;
        wrap("connsystem " + name, at,
             [&] { m.connsystems.emplace(name, ConnectionSystem::make(F, P, coeff)); });
        m.order.push_back({"connsystem", name, {names[0], names[1], pn}});
    }

    void decl_section(const std::string& kw, size_t at) {
        std::string name = sc.ident();
        require_fresh(name, at);
        sc.expect_word("over");
        size_t sat = sc.pos;
        std::string sysname = sc.ident();
        Frame base, params;
        if (auto it = m.secsystems.find(sysname); it != m.secsystems.end()) {
            base = it->second.frames.base;
            params = it->second.params;
        } else if (auto jt = m.connsystems.find(sysname); jt != m.connsystems.end()) {
            for (auto& x : jt->second.fibred.of_role(Role::Base))
                base.coords.emplace_back(x, Role::Base);
            params = jt->second.params;
        } else {
            sc.fail("unknown system '" + sysname + "'", sat);
        }
        auto entries = entry_block<std::string>(table_of({&base}), &plain_key);
        ParameterSection sec;
        for (auto& [k, e] : entries) {
            if (!params.contains(k))
                sc.fail("'" + k + "' is not a parameter of '" + sysname + "'", at);
            sec.components[k] = e;
        }
        for (auto& w : params.symbols())
            if (!sec.components.count(w))
                sc.fail(kw + " '" + name + "' missing component " + w, at);
        m.sections.emplace(name, std::move(sec));
        m.order.push_back({kw, name, {sysname}});
    }

    std::optional<Rational> endpoint() {
        if (sc.peek() == '-' || sc.peek() == '+') {
            size_t save = sc.pos;
            char sign = sc.peek();
            ++sc.pos;
            if (sc.peek() == 'i') {
                sc.expect_word("inf");
                if (sign == '+') sc.fail("use 'inf' for the upper endpoint", save);
                return std::nullopt;
            }
            sc.pos = save;
        } else if (sc.peek() == 'i') {
            sc.expect_word("inf");
            return std::nullopt;
        }
        long long n = sc.integer();
        if (sc.eat('/')) return Rational(n, sc.integer());
        return Rational(n);
    }

    void decl_curve(size_t at) {
        std::string name = sc.ident();
        require_fresh(name, at);
        sc.expect_word("over");
        std::vector<std::string> names;
        if (sc.eat('(')) {
            do {
                names.push_back(sc.ident());
            } while (sc.eat(','));
            sc.expect(')');
        } else {
            names.push_back(sc.ident());
        }
        std::vector<std::pair<std::string, Role>> coords;
        for (auto& n : names)
            for (auto& c : frame_ref(n, at).coords) coords.push_back(c);
        Frame space;
        wrap("curve " + name, at, [&] { space = Frame::make(coords); });
        sc.expect_word("interval");
        sc.expect('(');
        Interval iv;
        iv.lo = endpoint();
        sc.expect(',');
        iv.hi = endpoint();
        sc.expect(')');
        SymbolTable t;
        t.coordinates.insert(kCurveParam);
        t.opaques = m.opaques;
        auto entries = entry_block<std::string>(t, &plain_key);
        std::map<std::string, Expr> comps;
        for (auto& [k, e] : entries) comps[k] = e;
        wrap("curve " + name, at, [&] {
            m.curves.emplace(name, Curve::symbolic_curve(space, iv, comps));
        });
        m.order.push_back({"curve", name, names});
    }

    void decl_change(size_t at) {
        std::string name = sc.ident();
        require_fresh(name, at);
        sc.expect_word("on");
        size_t fat = sc.pos;
        std::string fname = sc.ident();
        const Frame& src = frame_ref(fname, fat);
        auto entries = entry_block<std::string>(table_of({&src}), &plain_key);
        if (entries.size() != src.coords.size())
            sc.fail("change must assign one target coordinate per source coordinate "
                    "in source order", at);
        Frame target;
        Binding repl;
        for (size_t k = 0; k < entries.size(); ++k) {
            target.coords.emplace_back(entries[k].first, src.coords[k].second);
            repl[entries[k].first] = entries[k].second;
        }
        wrap("change " + name, at, [&] {
            m.changes.emplace(name, ChartChange::make(src, target, repl));
        });
        m.order.push_back({"change", name, {fname}});
    }

    struct RecipeKey {
        std::string a, lam;
    };
    static RecipeKey recipe_key(ModelParser& p) {
        p.sc.expect_word("D");
        p.sc.expect('[');
        RecipeKey k;
        k.a = p.sc.ident();
        p.sc.expect(',');
        k.lam = p.sc.ident();
        p.sc.expect(']');
        p.sc.expect('(');
        p.sc.expect_word("phi");
        p.sc.expect(')');
        return k;
    }

    void decl_fconnection(size_t at) {
        std::string name = sc.ident();
        require_fresh(name, at);
        sc.expect_word("over");
        size_t sat = sc.pos;
        std::string sysname = sc.ident();
        auto it = m.secsystems.find(sysname);
        if (it == m.secsystems.end()) sc.fail("unknown secsystem '" + sysname + "'", sat);
        const SectionSystem& sys = it->second;
        SymbolTable t = table_of({&sys.frames.total});
        int phi_arity = (int)phi_params(sys).size();
        for (auto& a : sys.top_symbols()) t.opaques[phi_name(a)] = phi_arity;
        auto entries = entry_block<RecipeKey>(t, &recipe_key);
        std::map<std::string, std::map<std::string, Expr>> recipe;
        for (auto& [k, e] : entries) recipe[k.a][k.lam] = e;
        wrap("fconnection " + name, at, [&] {
            m.fconnections.emplace(name, OperatorConnection::make(sys, recipe));
        });
        m.order.push_back({"fconnection", name, {sysname}});
    }
};

std::string endpoint_str(const std::optional<Rational>& r, bool lower) {
    if (!r) return lower ? "-inf" : "inf";
    return r->str();
}

void print_block(std::ostringstream& os, const std::vector<std::pair<std::string, std::string>>& entries) {
    os << "{\n";
    for (auto& [k, v] : entries) os << "  " << k << " = " << v << "\n";
    os << "}\n";
}

}  // namespace

ModelFile parse_model(const std::string& text) {
    ModelParser p(text);
    p.parse();
    return std::move(p.m);
}

std::string print_model(const ModelFile& m) {
    std::ostringstream os;
    for (auto& d : m.order) {
        if (d.kind == "chart" || d.kind == "params") {
            os << d.kind << " " << d.name << " {";
            for (auto& sym : m.frames.at(d.name).symbols()) os << " " << sym;
            os << " }\n";
        } else if (d.kind == "fibred") {
            const Frame& f = m.frames.at(d.name);
            const Frame& parent = m.frames.at(d.refs[0]);
            os << "fibred " << d.name << " over " << d.refs[0] << " {";
            for (auto& [sym, role] : f.coords)
                if (!parent.contains(sym)) os << " " << sym;
            os << " }\n";
        } else if (d.kind == "opaque") {
            os << "opaque " << d.name << " " << m.opaques.at(d.name) << "\n";
        } else if (d.kind == "system") {
            const MapSystem& sys = m.systems.at(d.name);
            os << "system " << d.name << " params " << d.refs[0] << " source "
               << d.refs[1] << " target " << d.refs[2] << " eval ";
            std::vector<std::pair<std::string, std::string>> entries;
            for (auto& z : sys.target.symbols())
                entries.emplace_back(z, sys.eval.at(z).str());
            print_block(os, entries);
        } else if (d.kind == "secsystem") {
            const SectionSystem& sys = m.secsystems.at(d.name);
            os << "secsystem " << d.name << " over (" << d.refs[0] << ", " << d.refs[1]
               << ", " << d.refs[2] << ") params " << d.refs[3];
            if (sys.vector_bundle) os << " vector";
            if (sys.affine_bundle) os << " affine";
            os << " eval ";
            std::vector<std::pair<std::string, std::string>> entries;
            for (auto& z : sys.top_symbols())
                entries.emplace_back(z, sys.eval.at(z).str());
            print_block(os, entries);
        } else if (d.kind == "connsystem") {
            const ConnectionSystem& sys = m.connsystems.at(d.name);
            os << "connsystem " << d.name << " over (" << d.refs[0] << ", " << d.refs[1]
               << ") params " << d.refs[2] << " coeff ";
            std::vector<std::pair<std::string, std::string>> entries;
            for (auto& i : sys.fibred.of_role(Role::Fibre))
                for (auto& lam : sys.fibred.of_role(Role::Base))
                    entries.emplace_back("c[" + i + ", " + lam + "]",
                                         sys.coeff.at(i).at(lam).str());
            print_block(os, entries);
        } else if (d.kind == "section" || d.kind == "gamma") {
            const ParameterSection& sec = m.sections.at(d.name);
            os << d.kind << " " << d.name << " over " << d.refs[0] << " ";
            std::vector<std::pair<std::string, std::string>> entries;
            for (auto& [w, e] : sec.components) entries.emplace_back(w, e.str());
            print_block(os, entries);
        } else if (d.kind == "curve") {
            const Curve& c = m.curves.at(d.name);
            os << "curve " << d.name << " over ";
            if (d.refs.size() == 1) os << d.refs[0];
            else {
                os << "(";
                for (size_t k = 0; k < d.refs.size(); ++k)
                    os << (k ? ", " : "") << d.refs[k];
                os << ")";
            }
            os << " interval (" << endpoint_str(c.interval.lo, true) << ", "
               << endpoint_str(c.interval.hi, false) << ") ";
            std::vector<std::pair<std::string, std::string>> entries;
            for (auto& [k, e] : std::get<SymbolicBody>(c.body).components)
                entries.emplace_back(k, e.str());
            print_block(os, entries);
        } else if (d.kind == "change") {
            const ChartChange& ch = m.changes.at(d.name);
            os << "change " << d.name << " on " << d.refs[0] << " ";
            std::vector<std::pair<std::string, std::string>> entries;
            for (auto& [sym, role] : ch.target.coords)
                entries.emplace_back(sym, ch.replacement.at(sym).str());
            print_block(os, entries);
        } else if (d.kind == "fconnection") {
            const OperatorConnection& K = m.fconnections.at(d.name);
            os << "fconnection " << d.name << " over " << d.refs[0] << " ";
            std::vector<std::pair<std::string, std::string>> entries;
            for (auto& a : K.sys.top_symbols())
                for (auto& lam : K.sys.base_symbols())
                    entries.emplace_back("D[" + a + ", " + lam + "](phi)",
                                         K.recipe.at(a).at(lam).str());
            print_block(os, entries);
        }
    }
    return os.str();
}

}  // namespace jf
