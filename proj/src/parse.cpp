#include "jetfield/parse.hpp"

#include <cctype>
#include <vector>

namespace jf {

namespace {

struct Parser {
    const std::string& s;
    const SymbolTable& table;
    size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && std::isspace((unsigned char)s[pos])) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) { ++pos; return true; }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }

    [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos); }

    long long integer() {
        skip_ws();
        size_t start = pos;
        if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) ++pos;
        if (pos >= s.size() || !std::isdigit((unsigned char)s[pos]))
            fail("expected integer");
        while (pos < s.size() && std::isdigit((unsigned char)s[pos])) ++pos;
        return std::stoll(s.substr(start, pos - start));
    }

    std::string identifier() {
        skip_ws();
        size_t start = pos;
        if (pos >= s.size() ||
            !(std::isalpha((unsigned char)s[pos]) || s[pos] == '_'))
            fail("expected identifier");
        while (pos < s.size() &&
               (std::isalnum((unsigned char)s[pos]) || s[pos] == '_'))
            ++pos;
        return s.substr(start, pos - start);
    }

    Expr opaque_app(const std::string& name, std::vector<int> deriv_slots) {
        auto it = table.opaques.find(name);
        if (it == table.opaques.end()) fail("unknown opaque symbol '" + name + "'");
        if (!eat('(')) fail("expected '(' after opaque symbol '" + name + "'");
        std::vector<Expr> args;
        if (!eat(')')) {
            do {
                args.push_back(expr());
            } while (eat(','));
            if (!eat(')')) fail("expected ')' in application of '" + name + "'");
        }
        if ((int)args.size() != it->second)
            fail("arity mismatch: '" + name + "' declared with arity " +
                 std::to_string(it->second) + ", applied to " +
                 std::to_string(args.size()) + " arguments");
        std::vector<int> derivs(args.size(), 0);
        for (int slot : deriv_slots) {
            if (slot < 1 || slot > (int)args.size())
                fail("derivative slot " + std::to_string(slot) +
                     " out of range for '" + name + "'");
            derivs[slot - 1] += 1;
        }
        return opaque(name, std::move(args), std::move(derivs));
    }

    Expr base() {
        skip_ws();
        if (pos >= s.size()) fail("unexpected end of expression");
        char c = s[pos];
        if (std::isdigit((unsigned char)c)) {
            long long n = integer();
            if (eat('/')) return constant(Rational(n, integer()));
            return constant(n);
        }
        if (c == '(') {
            ++pos;
            Expr e = expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        std::string name = identifier();
        if (name == "D" && peek() == '[') {
            eat('[');
            std::vector<int> slots;
            do {
                slots.push_back((int)integer());
            } while (eat(','));
            if (!eat(']')) fail("expected ']' in partial multi-index");
            std::string fn = identifier();
            return opaque_app(fn, std::move(slots));
        }
        if (peek() == '(' && table.opaques.count(name))
            return opaque_app(name, {});
        if (table.coordinates.count(name)) return symbol(name);
        if (table.opaques.count(name))
            fail("opaque symbol '" + name + "' must be applied to arguments");
        fail("unknown symbol '" + name + "'");
    }

    Expr factor() {
        Expr b = base();
        if (eat('^')) return pow(b, (int)integer());
        return b;
    }

    Expr term() {
        Expr f = factor();
        while (eat('*')) f = mul(f, factor());
        return f;
    }

    Expr expr() {
        bool negated = eat('-');
        Expr t = term();
        if (negated) t = neg(t);
        for (;;) {
            if (eat('+')) t = add(t, term());
            else if (eat('-')) t = sub(t, term());
            else return t;
        }
    }
};

}  // namespace

Expr parse_expr(const std::string& text, const SymbolTable& table) {
    Parser p{text, table};
    Expr e = p.expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input");
    return e;
}

}  // namespace jf
