// Canonicalization: every expression is normalized to a quotient of expanded,
// collected polynomials over "atoms" (variables, function applications,
// radicals), with the denominator kept as a sorted list of monic factors.
// Radical atoms carry polynomial radicands; exponents fold through
// root_q(B)^q = B, and sin(t)^2 rewrites to 1 - cos(t)^2, so identities like
// sqrt(x)^2 = x and sin^2 + cos^2 = 1 hold structurally.

#include <algorithm>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mframe/expr.hpp"

namespace mframe {
namespace {

struct Atom;
using AtomPtr = std::shared_ptr<const Atom>;

struct Monomial {
    // sorted by atom order, exponents >= 1
    std::vector<std::pair<AtomPtr, int>> f;
    int degree() const {
        int d = 0;
        for (const auto& [a, e] : f) d += e;
        return d;
    }
    bool empty() const { return f.empty(); }
};

struct Term {
    Monomial m;
    Rational c;
};

struct Poly {
    std::vector<Term> t;  // sorted descending by monomial order
    bool is_zero() const { return t.empty(); }
    bool is_constant() const { return t.empty() || (t.size() == 1 && t[0].m.empty()); }
    Rational constant() const { return t.empty() ? Rational(0) : t[0].c; }
};

struct Atom {
    enum class Tag { Var, Fun, Root } tag;
    VarId var = -1;
    Fn fn = Fn::Sin;
    std::vector<ExprPtr> args;  // canonical
    Poly radicand;
    int root_index = 2;
    size_t hash = 0;
};

struct FactorPow {
    Poly base;  // monic, non-constant
    int exp;
};

struct RatFunc {
    Poly num;
    std::vector<FactorPow> den;
};

// --- ordering ----------------------------------------------------------------

int atom_compare(const AtomPtr& a, const AtomPtr& b);
int poly_compare(const Poly& a, const Poly& b);

int monomial_compare(const Monomial& a, const Monomial& b) {
    int da = a.degree(), db = b.degree();
    if (da != db) return da < db ? -1 : 1;
    size_t n = std::min(a.f.size(), b.f.size());
    for (size_t i = 0; i < n; ++i) {
        int c = atom_compare(a.f[i].first, b.f[i].first);
        if (c != 0) return -c;  // smaller atom first => greater monomial (lex)
        if (a.f[i].second != b.f[i].second) return a.f[i].second < b.f[i].second ? -1 : 1;
    }
    if (a.f.size() != b.f.size()) return a.f.size() < b.f.size() ? -1 : 1;
    return 0;
}

int rational_compare(const Rational& a, const Rational& b) {
    if (a == b) return 0;
    return a < b ? -1 : 1;
}

int atom_compare(const AtomPtr& a, const AtomPtr& b) {
    if (a.get() == b.get()) return 0;
    if (a->tag != b->tag) return static_cast<int>(a->tag) < static_cast<int>(b->tag) ? -1 : 1;
    switch (a->tag) {
        case Atom::Tag::Var: return a->var < b->var ? -1 : a->var > b->var ? 1 : 0;
        case Atom::Tag::Fun: {
            if (a->fn != b->fn) return static_cast<int>(a->fn) < static_cast<int>(b->fn) ? -1 : 1;
            if (a->args.size() != b->args.size()) return a->args.size() < b->args.size() ? -1 : 1;
            for (size_t i = 0; i < a->args.size(); ++i) {
                int c = expr_compare(a->args[i], b->args[i]);
                if (c != 0) return c;
            }
            return 0;
        }
        case Atom::Tag::Root: {
            if (a->root_index != b->root_index) return a->root_index < b->root_index ? -1 : 1;
            return poly_compare(a->radicand, b->radicand);
        }
    }
    return 0;
}

int poly_compare(const Poly& a, const Poly& b) {
    size_t n = std::min(a.t.size(), b.t.size());
    for (size_t i = 0; i < n; ++i) {
        int c = monomial_compare(a.t[i].m, b.t[i].m);
        if (c != 0) return c;
        c = rational_compare(a.t[i].c, b.t[i].c);
        if (c != 0) return c;
    }
    if (a.t.size() != b.t.size()) return a.t.size() < b.t.size() ? -1 : 1;
    return 0;
}

struct MonomialGreater {
    bool operator()(const Monomial& a, const Monomial& b) const {
        return monomial_compare(a, b) > 0;
    }
};

// --- atom construction ---------------------------------------------------------

size_t hash_mix(size_t h, size_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

size_t poly_hash(const Poly& p) {
    size_t h = 0x51a7;
    for (const auto& term : p.t) {
        size_t th = 0x9b;
        for (const auto& [a, e] : term.m.f) {
            th = hash_mix(th, a->hash);
            th = hash_mix(th, static_cast<size_t>(e));
        }
        th = hash_mix(th, std::hash<long long>{}(term.c.num()));
        th = hash_mix(th, std::hash<long long>{}(term.c.den()));
        h = hash_mix(h, th);
    }
    return h;
}

AtomPtr make_var_atom(VarId v) {
    auto a = std::make_shared<Atom>();
    a->tag = Atom::Tag::Var;
    a->var = v;
    a->hash = hash_mix(0x11, static_cast<size_t>(v));
    return a;
}

AtomPtr make_fun_atom(Fn f, std::vector<ExprPtr> args) {
    auto a = std::make_shared<Atom>();
    a->tag = Atom::Tag::Fun;
    a->fn = f;
    a->args = std::move(args);
    size_t h = hash_mix(0x22, static_cast<size_t>(f));
    for (const auto& e : a->args) h = hash_mix(h, e->hash());
    a->hash = h;
    return a;
}

AtomPtr make_root_atom(Poly radicand, int q) {
    auto a = std::make_shared<Atom>();
    a->tag = Atom::Tag::Root;
    a->radicand = std::move(radicand);
    a->root_index = q;
    a->hash = hash_mix(hash_mix(0x33, static_cast<size_t>(q)), poly_hash(a->radicand));
    return a;
}

// --- polynomial arithmetic -------------------------------------------------------

Poly poly_zero() { return {}; }

Poly poly_const(const Rational& c) {
    if (c.is_zero()) return {};
    Poly p;
    p.t.push_back({Monomial{}, c});
    return p;
}

Poly poly_atom(const AtomPtr& a, int e = 1) {
    Poly p;
    Monomial m;
    m.f.push_back({a, e});
    p.t.push_back({std::move(m), Rational(1)});
    return p;
}

Poly normalize_term(Monomial m, const Rational& c);
Poly poly_mul(const Poly& a, const Poly& b);
Poly poly_pow(const Poly& a, int n);

Poly poly_add(const Poly& a, const Poly& b) {
    Poly out;
    out.t.reserve(a.t.size() + b.t.size());
    size_t i = 0, j = 0;
    while (i < a.t.size() && j < b.t.size()) {
        int cmp = monomial_compare(a.t[i].m, b.t[j].m);
        if (cmp > 0) {
            out.t.push_back(a.t[i++]);
        } else if (cmp < 0) {
            out.t.push_back(b.t[j++]);
        } else {
            Rational s = a.t[i].c + b.t[j].c;
            if (!s.is_zero()) out.t.push_back({a.t[i].m, s});
            ++i;
            ++j;
        }
    }
    while (i < a.t.size()) out.t.push_back(a.t[i++]);
    while (j < b.t.size()) out.t.push_back(b.t[j++]);
    return out;
}

Poly poly_neg(const Poly& a) {
    Poly out = a;
    for (auto& t : out.t) t.c = -t.c;
    return out;
}

Poly poly_sub(const Poly& a, const Poly& b) { return poly_add(a, poly_neg(b)); }

Poly poly_scale(const Poly& a, const Rational& c) {
    if (c.is_zero()) return {};
    Poly out = a;
    for (auto& t : out.t) t.c = t.c * c;
    return out;
}

Monomial monomial_mul(const Monomial& a, const Monomial& b) {
    Monomial out;
    out.f.reserve(a.f.size() + b.f.size());
    size_t i = 0, j = 0;
    while (i < a.f.size() && j < b.f.size()) {
        int cmp = atom_compare(a.f[i].first, b.f[j].first);
        if (cmp < 0) {
            out.f.push_back(a.f[i++]);
        } else if (cmp > 0) {
            out.f.push_back(b.f[j++]);
        } else {
            out.f.push_back({a.f[i].first, a.f[i].second + b.f[j].second});
            ++i;
            ++j;
        }
    }
    while (i < a.f.size()) out.f.push_back(a.f[i++]);
    while (j < b.f.size()) out.f.push_back(b.f[j++]);
    return out;
}

// Rewrites root_q(B)^e with e >= q into B^(e/q) * root^(e%q), and sin(t)^e with
// e >= 2 into (1 - cos(t)^2)^(e/2) * sin(t)^(e%2). Returns a fully collected Poly.
Poly normalize_term(Monomial m, const Rational& c) {
    if (c.is_zero()) return {};
    for (size_t i = 0; i < m.f.size(); ++i) {
        const AtomPtr& a = m.f[i].first;
        int e = m.f[i].second;
        if (a->tag == Atom::Tag::Root && e >= a->root_index) {
            int q = a->root_index;
            Poly multiplier = poly_pow(a->radicand, e / q);
            Monomial rest;
            rest.f.reserve(m.f.size());
            for (size_t j = 0; j < m.f.size(); ++j) {
                if (j == i) {
                    if (e % q > 0) rest.f.push_back({a, e % q});
                } else {
                    rest.f.push_back(m.f[j]);
                }
            }
            return poly_mul(multiplier, normalize_term(std::move(rest), c));
        }
        if (a->tag == Atom::Tag::Fun && a->fn == Fn::Sin && e >= 2) {
            AtomPtr cos_atom = make_fun_atom(Fn::Cos, a->args);
            Poly one_minus_cos2 =
                poly_sub(poly_const(Rational(1)), poly_atom(cos_atom, 2));
            Poly multiplier = poly_pow(one_minus_cos2, e / 2);
            Monomial rest;
            rest.f.reserve(m.f.size());
            for (size_t j = 0; j < m.f.size(); ++j) {
                if (j == i) {
                    if (e % 2 > 0) rest.f.push_back({a, 1});
                } else {
                    rest.f.push_back(m.f[j]);
                }
            }
            return poly_mul(multiplier, normalize_term(std::move(rest), c));
        }
    }
    Poly p;
    p.t.push_back({std::move(m), c});
    return p;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::map<Monomial, Rational, MonomialGreater> acc;
    for (const auto& ta : a.t) {
        for (const auto& tb : b.t) {
            Poly piece = normalize_term(monomial_mul(ta.m, tb.m), ta.c * tb.c);
            for (const auto& pt : piece.t) {
                auto [it, inserted] = acc.emplace(pt.m, pt.c);
                if (!inserted) {
                    it->second += pt.c;
                    if (it->second.is_zero()) acc.erase(it);
                }
            }
        }
    }
    Poly out;
    out.t.reserve(acc.size());
    for (auto& [m, c] : acc) out.t.push_back({m, c});
    return out;
}

Poly poly_pow(const Poly& a, int n) {
    if (n == 0) return poly_const(Rational(1));
    Poly r = poly_const(Rational(1));
    Poly base = a;
    int m = n;
    while (m > 0) {
        if (m & 1) r = poly_mul(r, base);
        base = (m >>= 1) > 0 ? poly_mul(base, base) : base;
    }
    return r;
}

bool monomial_divides(const Monomial& d, const Monomial& m, Monomial& quotient) {
    quotient.f.clear();
    size_t i = 0;
    for (const auto& [atom, exp] : m.f) {
        while (i < d.f.size() && atom_compare(d.f[i].first, atom) < 0) return false;
        if (i < d.f.size() && atom_compare(d.f[i].first, atom) == 0) {
            if (d.f[i].second > exp) return false;
            if (exp - d.f[i].second > 0) quotient.f.push_back({atom, exp - d.f[i].second});
            ++i;
        } else {
            quotient.f.push_back({atom, exp});
        }
    }
    return i == d.f.size();
}

// Exact division attempt; nullopt when the leading-term peel gets stuck.
std::optional<Poly> poly_divide_exact(const Poly& a, const Poly& b) {
    if (b.is_zero()) return std::nullopt;
    Poly rem = a;
    Poly quot;
    int guard = 0;
    const int max_steps = 20000;
    while (!rem.is_zero()) {
        if (++guard > max_steps) return std::nullopt;
        Monomial qm;
        if (!monomial_divides(b.t[0].m, rem.t[0].m, qm)) return std::nullopt;
        Rational qc = rem.t[0].c / b.t[0].c;
        Poly qterm;
        qterm.t.push_back({qm, qc});
        quot = poly_add(quot, qterm);
        rem = poly_sub(rem, poly_mul(qterm, b));
    }
    return quot;
}

// --- rational function layer ------------------------------------------------------

RatFunc rf_make(Poly num, std::vector<FactorPow> den);

RatFunc rf_const(const Rational& c) { return {poly_const(c), {}}; }

RatFunc rf_from_poly(Poly p) { return {std::move(p), {}}; }

bool rf_is_zero(const RatFunc& r) { return r.num.is_zero(); }

bool rf_is_constant(const RatFunc& r) { return r.den.empty() && r.num.is_constant(); }

bool rf_is_negative(const RatFunc& r) {
    return !r.num.is_zero() && r.num.t[0].c.sign() < 0;
}

Poly den_expand(const std::vector<FactorPow>& den) {
    Poly p = poly_const(Rational(1));
    for (const auto& f : den) p = poly_mul(p, poly_pow(f.base, f.exp));
    return p;
}

RatFunc rf_make(Poly num, std::vector<FactorPow> den) {
    if (num.is_zero()) return {poly_zero(), {}};

    Rational scalar(1);
    std::vector<std::pair<AtomPtr, long long>> atom_pows;  // merged by atom
    std::vector<FactorPow> polys;

    auto add_atom_pow = [&](const AtomPtr& a, long long e) {
        for (auto& ap : atom_pows) {
            if (atom_compare(ap.first, a) == 0) {
                ap.second += e;
                return;
            }
        }
        atom_pows.push_back({a, e});
    };

    // Decompose: constants into the scalar, single-term factors into atom powers.
    std::vector<FactorPow> work = std::move(den);
    while (!work.empty()) {
        FactorPow f = std::move(work.back());
        work.pop_back();
        if (f.exp == 0 || f.base.is_zero()) continue;
        if (f.base.is_constant()) {
            scalar *= f.base.constant().pow(f.exp);
            continue;
        }
        if (f.base.t.size() == 1) {
            const Term& t = f.base.t[0];
            scalar *= t.c.pow(f.exp);
            for (const auto& [a, e] : t.m.f) add_atom_pow(a, static_cast<long long>(e) * f.exp);
            continue;
        }
        polys.push_back(std::move(f));
    }

    // Rationalize: replace root_q(B)^E in the denominator by B^ceil(E/q),
    // padding the numerator with root^((q - E%q)%q).
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < atom_pows.size(); ++i) {
            const AtomPtr a = atom_pows[i].first;
            long long e = atom_pows[i].second;
            if (a->tag != Atom::Tag::Root || e <= 0) continue;
            int q = a->root_index;
            long long pad = (q - (e % q)) % q;
            if (pad > 0) num = poly_mul(num, poly_atom(a, static_cast<int>(pad)));
            long long power = (e + pad) / q;
            atom_pows.erase(atom_pows.begin() + static_cast<long>(i));
            // push radicand^power back through the decomposition
            Poly b = a->radicand;
            if (b.is_constant()) {
                scalar *= b.constant().pow(power);
            } else if (b.t.size() == 1) {
                scalar *= b.t[0].c.pow(power);
                for (const auto& [ba, be] : b.t[0].m.f) add_atom_pow(ba, be * power);
            } else {
                polys.push_back({std::move(b), static_cast<int>(power)});
            }
            changed = true;
            break;
        }
    }

    // Monic-normalize multi-term factors and merge equal bases.
    std::vector<FactorPow> final_den;
    for (auto& f : polys) {
        Rational lead = f.base.t[0].c;
        if (!lead.is_one()) {
            f.base = poly_scale(f.base, Rational(1) / lead);
            scalar *= lead.pow(f.exp);
        }
        bool merged = false;
        for (auto& g : final_den) {
            if (poly_compare(g.base, f.base) == 0) {
                g.exp += f.exp;
                merged = true;
                break;
            }
        }
        if (!merged) final_den.push_back(std::move(f));
    }
    for (const auto& [a, e] : atom_pows) {
        if (e == 0) continue;
        if (e < 0) {
            // net-negative denominator power surfaces as a numerator factor
            num = poly_mul(num, poly_atom(a, static_cast<int>(-e)));
            continue;
        }
        final_den.push_back({poly_atom(a), static_cast<int>(e)});
    }

    if (!scalar.is_one()) num = poly_scale(num, Rational(1) / scalar);

    // Cancel: trial-divide the numerator by each factor base.
    for (auto& f : final_den) {
        while (f.exp > 0) {
            auto q = poly_divide_exact(num, f.base);
            if (!q) break;
            num = std::move(*q);
            --f.exp;
        }
    }
    final_den.erase(std::remove_if(final_den.begin(), final_den.end(),
                                   [](const FactorPow& f) { return f.exp == 0; }),
                    final_den.end());
    std::sort(final_den.begin(), final_den.end(), [](const FactorPow& x, const FactorPow& y) {
        int c = poly_compare(x.base, y.base);
        if (c != 0) return c < 0;
        return x.exp < y.exp;
    });
    if (num.is_zero()) return {poly_zero(), {}};
    return {std::move(num), std::move(final_den)};
}

std::vector<FactorPow> den_merge(const std::vector<FactorPow>& a,
                                 const std::vector<FactorPow>& b) {
    std::vector<FactorPow> out = a;
    for (const auto& f : b) {
        bool merged = false;
        for (auto& g : out) {
            if (poly_compare(g.base, f.base) == 0) {
                g.exp += f.exp;
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back(f);
    }
    return out;
}

RatFunc rf_mul(const RatFunc& a, const RatFunc& b) {
    if (rf_is_zero(a) || rf_is_zero(b)) return rf_const(Rational(0));
    return rf_make(poly_mul(a.num, b.num), den_merge(a.den, b.den));
}

RatFunc rf_neg(const RatFunc& a) { return {poly_neg(a.num), a.den}; }

RatFunc rf_add(const RatFunc& a, const RatFunc& b) {
    if (rf_is_zero(a)) return b;
    if (rf_is_zero(b)) return a;
    // common denominator: per-base max exponent
    std::vector<FactorPow> lcm = a.den;
    for (const auto& f : b.den) {
        bool found = false;
        for (auto& g : lcm) {
            if (poly_compare(g.base, f.base) == 0) {
                g.exp = std::max(g.exp, f.exp);
                found = true;
                break;
            }
        }
        if (!found) lcm.push_back(f);
    }
    auto lift = [&](const RatFunc& r) {
        Poly n = r.num;
        for (const auto& g : lcm) {
            int have = 0;
            for (const auto& f : r.den) {
                if (poly_compare(f.base, g.base) == 0) {
                    have = f.exp;
                    break;
                }
            }
            if (g.exp > have) n = poly_mul(n, poly_pow(g.base, g.exp - have));
        }
        return n;
    };
    return rf_make(poly_add(lift(a), lift(b)), lcm);
}

RatFunc rf_inverse(const RatFunc& a) {
    if (rf_is_zero(a)) throw DomainError("division by an expression that simplifies to zero");
    Poly new_num = den_expand(a.den);
    std::vector<FactorPow> new_den;
    new_den.push_back({a.num, 1});
    return rf_make(std::move(new_num), std::move(new_den));
}

RatFunc rf_div(const RatFunc& a, const RatFunc& b) { return rf_mul(a, rf_inverse(b)); }

RatFunc rf_pow_int(const RatFunc& a, long long n) {
    if (n == 0) {
        if (rf_is_zero(a)) throw DomainError("zero raised to the zeroth power");
        return rf_const(Rational(1));
    }
    if (n < 0) return rf_inverse(rf_pow_int(a, -n));
    std::vector<FactorPow> den = a.den;
    for (auto& f : den) f.exp *= static_cast<int>(n);
    return rf_make(poly_pow(a.num, static_cast<int>(n)), std::move(den));
}

// q-th root: rationalize the radicand to a polynomial, extract monomial
// content that is a perfect q-th power, and wrap the rest in a root atom.
RatFunc rf_root(const RatFunc& a, long long q) {
    if (rf_is_zero(a)) return rf_const(Rational(0));
    if (rf_is_constant(a)) {
        Rational root;
        if (a.num.constant().nth_root(q, root)) return rf_const(root);
    }
    Poly d = den_expand(a.den);
    Poly radicand = poly_mul(a.num, poly_pow(d, static_cast<int>(q) - 1));

    // content: gcd of coefficients (positive), per-atom min exponents
    auto llgcd = [](long long x, long long y) {
        x = x < 0 ? -x : x;
        y = y < 0 ? -y : y;
        while (y) {
            long long t = x % y;
            x = y;
            y = t;
        }
        return x == 0 ? 1 : x;
    };
    auto lllcm = [&](long long x, long long y) { return x / llgcd(x, y) * y; };
    long long gnum = 0, lden = 1;
    for (const auto& t : radicand.t) {
        gnum = llgcd(gnum, t.c.num());
        lden = lllcm(lden, t.c.den());
    }
    Rational content(gnum == 0 ? 1 : gnum, lden);
    Monomial common = radicand.t[0].m;
    for (const auto& t : radicand.t) {
        Monomial merged;
        size_t i = 0, j = 0;
        while (i < common.f.size() && j < t.m.f.size()) {
            int c = atom_compare(common.f[i].first, t.m.f[j].first);
            if (c < 0) {
                ++i;
            } else if (c > 0) {
                ++j;
            } else {
                merged.f.push_back({common.f[i].first,
                                    std::min(common.f[i].second, t.m.f[j].second)});
                ++i;
                ++j;
            }
        }
        common = std::move(merged);
        if (common.empty()) break;
    }

    // split content and common monomial into q-th-power part and remainder
    Rational outside_c(1), inside_c = content;
    Rational croot;
    if (content.nth_root(q, croot)) {
        outside_c = croot;
        inside_c = Rational(1);
    }
    Monomial outside_m, inside_extra;
    for (const auto& [atom, e] : common.f) {
        if (e >= q) {
            outside_m.f.push_back({atom, static_cast<int>(e / q)});
        }
    }
    // inside keeps e % q of the common part automatically (we only divide out
    // the extracted q-th powers below)
    Poly divisor = poly_const(outside_c.pow(q) * inside_c / content);
    (void)divisor;
    Monomial extracted_pow;
    for (const auto& [atom, e] : outside_m.f) extracted_pow.f.push_back({atom, e * static_cast<int>(q)});
    Poly extract_poly;
    extract_poly.t.push_back({extracted_pow, outside_c.pow(q)});
    auto inside_opt = poly_divide_exact(radicand, extract_poly);
    Poly inside = inside_opt ? *inside_opt : radicand;
    if (!inside_opt) {
        outside_c = Rational(1);
        outside_m.f.clear();
        inside = radicand;
    }

    Poly outside;
    outside.t.push_back({outside_m, outside_c});

    Poly num;
    if (inside.is_constant() && inside.constant().is_one()) {
        num = outside;
    } else {
        AtomPtr root = make_root_atom(std::move(inside), static_cast<int>(q));
        num = poly_mul(outside, poly_atom(root));
    }
    return rf_make(std::move(num), a.den);
}

RatFunc rf_pow_rational(const RatFunc& a, const Rational& e) {
    if (e.is_integer()) return rf_pow_int(a, e.num());
    if (e.sign() < 0) return rf_inverse(rf_pow_rational(a, -e));
    long long p = e.num(), q = e.den();
    long long s = p / q, r = p % q;
    RatFunc intpart = s > 0 ? rf_pow_int(a, s) : rf_const(Rational(1));
    RatFunc rootpart = rf_pow_int(rf_root(a, q), r);
    return rf_mul(intpart, rootpart);
}

// --- Expr <-> RatFunc -------------------------------------------------------------

ExprPtr poly_to_expr(const Poly& p);

ExprPtr atom_to_expr(const AtomPtr& a) {
    switch (a->tag) {
        case Atom::Tag::Var: return Expr::variable(a->var);
        case Atom::Tag::Fun: return Expr::fun(a->fn, a->args);
        case Atom::Tag::Root:
            return Expr::pow(poly_to_expr(a->radicand), Rational(1, a->root_index));
    }
    throw EvalError("corrupt atom");
}

ExprPtr term_to_expr(const Term& t) {
    std::vector<ExprPtr> parts;
    for (const auto& [a, e] : t.m.f) {
        ExprPtr ae = atom_to_expr(a);
        parts.push_back(e == 1 ? ae : Expr::pow(ae, Rational(e)));
    }
    const Rational& c = t.c;
    if (parts.empty()) return Expr::number(c);
    if (c.is_one()) return Expr::mul(std::move(parts));
    if ((-c).is_one()) return Expr::neg(Expr::mul(std::move(parts)));
    if (c.sign() < 0) {
        std::vector<ExprPtr> with_c;
        with_c.push_back(Expr::number(-c));
        for (auto& p : parts) with_c.push_back(std::move(p));
        return Expr::neg(Expr::mul(std::move(with_c)));
    }
    std::vector<ExprPtr> with_c;
    with_c.push_back(Expr::number(c));
    for (auto& p : parts) with_c.push_back(std::move(p));
    return Expr::mul(std::move(with_c));
}

ExprPtr poly_to_expr(const Poly& p) {
    if (p.is_zero()) return Expr::number(Rational(0));
    std::vector<ExprPtr> terms;
    terms.reserve(p.t.size());
    for (const auto& t : p.t) terms.push_back(term_to_expr(t));
    return Expr::add(std::move(terms));
}

ExprPtr rf_to_expr(const RatFunc& r) {
    ExprPtr num = poly_to_expr(r.num);
    if (r.den.empty()) {
        num->mark_canonical();
        return num;
    }
    std::vector<ExprPtr> den_parts;
    for (const auto& f : r.den) {
        ExprPtr be = poly_to_expr(f.base);
        den_parts.push_back(f.exp == 1 ? be : Expr::pow(be, Rational(f.exp)));
    }
    ExprPtr out = Expr::quotient(num, Expr::mul(std::move(den_parts)));
    out->mark_canonical();
    return out;
}

using Memo = std::unordered_map<const Expr*, RatFunc>;

RatFunc to_rf(const ExprPtr& e, Memo& memo);

// Splits a denominator tree into multiplicative factors so that printed
// denominators like u_x*(u^2+v^2)^2 round-trip with their factor structure.
void collect_den_factors(const ExprPtr& e, int mult,
                         std::vector<std::pair<ExprPtr, int>>& out) {
    switch (e->kind()) {
        case NodeKind::Mul:
            for (const auto& k : e->kids()) collect_den_factors(k, mult, out);
            return;
        case NodeKind::Pow: {
            const Rational& ex = e->value();
            if (ex.is_integer() && ex.sign() > 0 && ex.num() <= 64) {
                out.push_back({e->kids()[0], mult * static_cast<int>(ex.num())});
                return;
            }
            break;
        }
        case NodeKind::Neg:
            out.push_back({Expr::number(Rational(-1)), mult});
            collect_den_factors(e->kids()[0], mult, out);
            return;
        default: break;
    }
    out.push_back({e, mult});
}

RatFunc fun_to_rf(Fn f, const std::vector<ExprPtr>& raw_args, Memo& memo) {
    std::vector<RatFunc> arg_rfs;
    std::vector<ExprPtr> args;
    for (const auto& a : raw_args) {
        RatFunc r = to_rf(a, memo);
        args.push_back(rf_to_expr(r));
        arg_rfs.push_back(std::move(r));
    }

    switch (f) {
        case Fn::Sqrt: return rf_pow_rational(arg_rfs[0], Rational(1, 2));
        case Fn::Tan: {
            RatFunc s = fun_to_rf(Fn::Sin, {args[0]}, memo);
            RatFunc c = fun_to_rf(Fn::Cos, {args[0]}, memo);
            return rf_div(s, c);
        }
        case Fn::Sin: {
            if (rf_is_zero(arg_rfs[0])) return rf_const(Rational(0));
            if (rf_is_negative(arg_rfs[0]))
                return rf_neg(fun_to_rf(Fn::Sin, {rf_to_expr(rf_neg(arg_rfs[0]))}, memo));
            if (args[0]->kind() == NodeKind::Fun && args[0]->fn() == Fn::Atan2) {
                RatFunc y = to_rf(args[0]->kids()[0], memo);
                RatFunc x = to_rf(args[0]->kids()[1], memo);
                RatFunc n2 = rf_add(rf_mul(x, x), rf_mul(y, y));
                return rf_div(y, rf_root(n2, 2));
            }
            if (args[0]->kind() == NodeKind::Fun && args[0]->fn() == Fn::Atan) {
                RatFunc t = to_rf(args[0]->kids()[0], memo);
                RatFunc n2 = rf_add(rf_const(Rational(1)), rf_mul(t, t));
                return rf_div(t, rf_root(n2, 2));
            }
            return rf_from_poly(poly_atom(make_fun_atom(Fn::Sin, {args[0]})));
        }
        case Fn::Cos: {
            if (rf_is_zero(arg_rfs[0])) return rf_const(Rational(1));
            if (rf_is_negative(arg_rfs[0]))
                return fun_to_rf(Fn::Cos, {rf_to_expr(rf_neg(arg_rfs[0]))}, memo);
            if (args[0]->kind() == NodeKind::Fun && args[0]->fn() == Fn::Atan2) {
                RatFunc y = to_rf(args[0]->kids()[0], memo);
                RatFunc x = to_rf(args[0]->kids()[1], memo);
                RatFunc n2 = rf_add(rf_mul(x, x), rf_mul(y, y));
                return rf_div(x, rf_root(n2, 2));
            }
            if (args[0]->kind() == NodeKind::Fun && args[0]->fn() == Fn::Atan) {
                RatFunc t = to_rf(args[0]->kids()[0], memo);
                RatFunc n2 = rf_add(rf_const(Rational(1)), rf_mul(t, t));
                return rf_div(rf_const(Rational(1)), rf_root(n2, 2));
            }
            return rf_from_poly(poly_atom(make_fun_atom(Fn::Cos, {args[0]})));
        }
        case Fn::Atan: {
            if (rf_is_zero(arg_rfs[0])) return rf_const(Rational(0));
            if (rf_is_negative(arg_rfs[0]))
                return rf_neg(fun_to_rf(Fn::Atan, {rf_to_expr(rf_neg(arg_rfs[0]))}, memo));
            return rf_from_poly(poly_atom(make_fun_atom(Fn::Atan, {args[0]})));
        }
        case Fn::Atan2: {
            if (rf_is_zero(arg_rfs[0]) && rf_is_constant(arg_rfs[1]) &&
                arg_rfs[1].num.constant().sign() > 0)
                return rf_const(Rational(0));
            return rf_from_poly(poly_atom(make_fun_atom(Fn::Atan2, {args[0], args[1]})));
        }
        case Fn::Exp: {
            if (rf_is_zero(arg_rfs[0])) return rf_const(Rational(1));
            if (args[0]->kind() == NodeKind::Fun && args[0]->fn() == Fn::Ln)
                return to_rf(args[0]->kids()[0], memo);
            return rf_from_poly(poly_atom(make_fun_atom(Fn::Exp, {args[0]})));
        }
        case Fn::Ln: {
            if (rf_is_constant(arg_rfs[0]) && arg_rfs[0].num.constant().is_one())
                return rf_const(Rational(0));
            if (args[0]->kind() == NodeKind::Fun && args[0]->fn() == Fn::Exp)
                return to_rf(args[0]->kids()[0], memo);
            return rf_from_poly(poly_atom(make_fun_atom(Fn::Ln, {args[0]})));
        }
    }
    throw EvalError("corrupt function node");
}

RatFunc to_rf(const ExprPtr& e, Memo& memo) {
    auto it = memo.find(e.get());
    if (it != memo.end()) return it->second;
    RatFunc out;
    switch (e->kind()) {
        case NodeKind::Number: out = rf_const(e->value()); break;
        case NodeKind::Var: out = rf_from_poly(poly_atom(make_var_atom(e->var()))); break;
        case NodeKind::Add: {
            out = rf_const(Rational(0));
            for (const auto& k : e->kids()) out = rf_add(out, to_rf(k, memo));
            break;
        }
        case NodeKind::Mul: {
            out = rf_const(Rational(1));
            for (const auto& k : e->kids()) out = rf_mul(out, to_rf(k, memo));
            break;
        }
        case NodeKind::Neg: out = rf_neg(to_rf(e->kids()[0], memo)); break;
        case NodeKind::Div: {
            out = to_rf(e->kids()[0], memo);
            std::vector<std::pair<ExprPtr, int>> factors;
            collect_den_factors(e->kids()[1], 1, factors);
            for (const auto& [f, k] : factors) {
                RatFunc fr = to_rf(f, memo);
                for (int i = 0; i < k; ++i) out = rf_div(out, fr);
            }
            break;
        }
        case NodeKind::Pow: out = rf_pow_rational(to_rf(e->kids()[0], memo), e->value()); break;
        case NodeKind::Fun: out = fun_to_rf(e->fn(), e->kids(), memo); break;
    }
    memo.emplace(e.get(), out);
    return out;
}

}  // namespace

ExprPtr simplify(const ExprPtr& e) {
    if (e->canonical()) return e;
    Memo memo;
    RatFunc r = to_rf(e, memo);
    return rf_to_expr(r);
}

}  // namespace mframe
