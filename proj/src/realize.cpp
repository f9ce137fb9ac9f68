#include "jetfield/realize.hpp"

#include <functional>

namespace jf {

PolyRealization PolyRealization::make(int arity, std::mt19937_64& g) {
    PolyRealization r;
    r.arity = arity;
    std::vector<int> exp(arity, 0);
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
        if (pos == arity) {
            r.terms.emplace_back(exp, double(draw_int(g, -8, 8)) / 4.0);
            return;
        }
        for (int e = 0; e <= remaining; ++e) {
            exp[pos] = e;
            rec(pos + 1, remaining - e);
        }
        exp[pos] = 0;
    };
    rec(0, 2);
    return r;
}

double PolyRealization::operator()(std::span<const int> derivs,
                                   std::span<const double> args) const {
    double total = 0.0;
    for (auto& [exp, c] : terms) {
        double v = c;
        bool dead = false;
        for (int k = 0; k < arity; ++k) {
            int e = exp[k], d = derivs[k];
            if (d > e) { dead = true; break; }
            for (int r = 0; r < d; ++r) v *= double(e - r);
            for (int r = 0; r < e - d; ++r) v *= args[k];
        }
        if (!dead) total += v;
    }
    return total;
}

void realize_opaques(const Expr& e, std::mt19937_64& g,
                     std::map<std::string, OpaqueFn>& out) {
    std::map<std::string, int> names;
    collect_opaques(e, names);
    for (auto& [name, arity] : names)
        if (!out.count(name)) out[name] = PolyRealization::make(arity, g);
}

}  // namespace jf
