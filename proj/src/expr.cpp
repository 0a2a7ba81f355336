#include "mframe/expr.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <random>

namespace mframe {

// --- VarTable ---------------------------------------------------------------

VarId VarTable::add(const std::string& name, VarKind kind) {
    if (name.empty()) throw ValidationError("variable name must be nonempty");
    if (index_.count(name)) throw ValidationError("duplicate variable name '" + name + "'");
    VarId id = static_cast<VarId>(names_.size());
    names_.push_back(name);
    kinds_.push_back(kind);
    index_.emplace(name, id);
    return id;
}

VarId VarTable::id(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw UnknownIdentifierError(std::string(name));
    return it->second;
}

std::optional<VarId> VarTable::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

// --- function table ----------------------------------------------------------

namespace {
struct FnInfo {
    Fn fn;
    const char* name;
    int arity;
};
constexpr std::array<FnInfo, 8> kFns = {{
    {Fn::Sin, "sin", 1},
    {Fn::Cos, "cos", 1},
    {Fn::Tan, "tan", 1},
    {Fn::Atan, "atan", 1},
    {Fn::Atan2, "atan2", 2},
    {Fn::Sqrt, "sqrt", 1},
    {Fn::Exp, "exp", 1},
    {Fn::Ln, "ln", 1},
}};
}  // namespace

const char* fn_name(Fn f) {
    for (const auto& e : kFns)
        if (e.fn == f) return e.name;
    return "?";
}

int fn_arity(Fn f) {
    for (const auto& e : kFns)
        if (e.fn == f) return e.arity;
    return 1;
}

std::optional<Fn> fn_by_name(std::string_view name) {
    for (const auto& e : kFns)
        if (name == e.name) return e.fn;
    return std::nullopt;
}

// --- node construction --------------------------------------------------------

namespace {
size_t hash_mix(size_t h, size_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}
size_t hash_rational(const Rational& r) {
    return hash_mix(std::hash<long long>{}(r.num()), std::hash<long long>{}(r.den()));
}
}  // namespace

ExprPtr detail_make_expr(NodeKind kind, Rational value, VarId var, Fn fn,
                         std::vector<ExprPtr> kids) {
    auto e = std::shared_ptr<Expr>(new Expr());
    e->kind_ = kind;
    e->value_ = value;
    e->var_ = var;
    e->fn_ = fn;
    e->kids_ = std::move(kids);
    size_t h = (static_cast<size_t>(kind) + 1) * 0x9e3779b9u;
    switch (kind) {
        case NodeKind::Number: h = hash_mix(h, hash_rational(value)); break;
        case NodeKind::Var: h = hash_mix(h, static_cast<size_t>(var)); break;
        case NodeKind::Pow: h = hash_mix(h, hash_rational(value)); break;
        case NodeKind::Fun: h = hash_mix(h, static_cast<size_t>(fn)); break;
        default: break;
    }
    for (const auto& k : e->kids_) h = hash_mix(h, k->hash());
    e->hash_ = h;
    return e;
}

ExprPtr Expr::number(const Rational& r) {
    return detail_make_expr(NodeKind::Number, r, -1, Fn::Sin, {});
}
ExprPtr Expr::variable(VarId v) {
    return detail_make_expr(NodeKind::Var, Rational(), v, Fn::Sin, {});
}
ExprPtr Expr::add(std::vector<ExprPtr> kids) {
    if (kids.empty()) return number(Rational(0));
    if (kids.size() == 1) return kids[0];
    return detail_make_expr(NodeKind::Add, Rational(), -1, Fn::Sin, std::move(kids));
}
ExprPtr Expr::mul(std::vector<ExprPtr> kids) {
    if (kids.empty()) return number(Rational(1));
    if (kids.size() == 1) return kids[0];
    return detail_make_expr(NodeKind::Mul, Rational(), -1, Fn::Sin, std::move(kids));
}
ExprPtr Expr::pow(ExprPtr base, const Rational& exponent) {
    if (base->kind() == NodeKind::Number) {
        // Fold exact rational powers so parser output and canonical forms agree.
        const Rational& b = base->value();
        if (exponent.is_integer()) {
            if (!(b.is_zero() && exponent.sign() <= 0)) return number(b.pow(exponent.num()));
        } else {
            Rational root;
            if (b.nth_root(exponent.den(), root) && !(root.is_zero() && exponent.sign() <= 0))
                return number(root.pow(exponent.num()));
        }
    }
    return detail_make_expr(NodeKind::Pow, exponent, -1, Fn::Sin, {std::move(base)});
}
ExprPtr Expr::quotient(ExprPtr num, ExprPtr den) {
    if (num->kind() == NodeKind::Number && den->kind() == NodeKind::Number &&
        !den->value().is_zero())
        return number(num->value() / den->value());
    return detail_make_expr(NodeKind::Div, Rational(), -1, Fn::Sin,
                            {std::move(num), std::move(den)});
}
ExprPtr Expr::neg(ExprPtr k) {
    if (k->kind() == NodeKind::Number) return number(-k->value());
    return detail_make_expr(NodeKind::Neg, Rational(), -1, Fn::Sin, {std::move(k)});
}
ExprPtr Expr::fun(Fn f, std::vector<ExprPtr> args) {
    if (static_cast<int>(args.size()) != fn_arity(f))
        throw ValidationError(std::string("wrong arity for ") + fn_name(f));
    return detail_make_expr(NodeKind::Fun, Rational(), -1, f, std::move(args));
}

ExprPtr ex_num(long long n) { return Expr::number(Rational(n)); }
ExprPtr ex_num(const Rational& r) { return Expr::number(r); }
ExprPtr ex_var(VarId v) { return Expr::variable(v); }
ExprPtr ex_add(ExprPtr a, ExprPtr b) { return Expr::add({std::move(a), std::move(b)}); }
ExprPtr ex_sub(ExprPtr a, ExprPtr b) {
    return Expr::add({std::move(a), Expr::neg(std::move(b))});
}
ExprPtr ex_mul(ExprPtr a, ExprPtr b) { return Expr::mul({std::move(a), std::move(b)}); }
ExprPtr ex_div(ExprPtr a, ExprPtr b) { return Expr::quotient(std::move(a), std::move(b)); }
ExprPtr ex_pow(ExprPtr a, const Rational& e) { return Expr::pow(std::move(a), e); }
ExprPtr ex_neg(ExprPtr a) { return Expr::neg(std::move(a)); }
ExprPtr ex_fun(Fn f, ExprPtr a) { return Expr::fun(f, {std::move(a)}); }
ExprPtr ex_fun(Fn f, ExprPtr a, ExprPtr b) { return Expr::fun(f, {std::move(a), std::move(b)}); }
ExprPtr ex_sqrt(ExprPtr a) { return Expr::fun(Fn::Sqrt, {std::move(a)}); }

// --- structural compare ---------------------------------------------------------

int expr_compare(const ExprPtr& a, const ExprPtr& b) {
    if (a.get() == b.get()) return 0;
    if (a->kind() != b->kind())
        return static_cast<int>(a->kind()) < static_cast<int>(b->kind()) ? -1 : 1;
    auto cmp_rational = [](const Rational& x, const Rational& y) {
        if (x == y) return 0;
        return x < y ? -1 : 1;
    };
    switch (a->kind()) {
        case NodeKind::Number: return cmp_rational(a->value(), b->value());
        case NodeKind::Var: return a->var() < b->var() ? -1 : a->var() > b->var() ? 1 : 0;
        case NodeKind::Pow: {
            int c = cmp_rational(a->value(), b->value());
            if (c != 0) return c;
            break;
        }
        case NodeKind::Fun: {
            if (a->fn() != b->fn())
                return static_cast<int>(a->fn()) < static_cast<int>(b->fn()) ? -1 : 1;
            break;
        }
        default: break;
    }
    const auto& ka = a->kids();
    const auto& kb = b->kids();
    if (ka.size() != kb.size()) return ka.size() < kb.size() ? -1 : 1;
    for (size_t i = 0; i < ka.size(); ++i) {
        int c = expr_compare(ka[i], kb[i]);
        if (c != 0) return c;
    }
    return 0;
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a.get() == b.get()) return true;
    if (a->hash() != b->hash()) return false;
    return expr_compare(a, b) == 0;
}

bool is_zero(const ExprPtr& e) { return e->kind() == NodeKind::Number && e->value().is_zero(); }
bool is_one(const ExprPtr& e) { return e->kind() == NodeKind::Number && e->value().is_one(); }

std::optional<Rational> as_rational(const ExprPtr& e) {
    switch (e->kind()) {
        case NodeKind::Number: return e->value();
        case NodeKind::Neg: {
            auto k = as_rational(e->kids()[0]);
            if (k) return -*k;
            return std::nullopt;
        }
        case NodeKind::Add: {
            Rational s(0);
            for (const auto& k : e->kids()) {
                auto r = as_rational(k);
                if (!r) return std::nullopt;
                s += *r;
            }
            return s;
        }
        case NodeKind::Mul: {
            Rational s(1);
            for (const auto& k : e->kids()) {
                auto r = as_rational(k);
                if (!r) return std::nullopt;
                s *= *r;
            }
            return s;
        }
        case NodeKind::Div: {
            auto n = as_rational(e->kids()[0]);
            auto d = as_rational(e->kids()[1]);
            if (!n || !d || d->is_zero()) return std::nullopt;
            return *n / *d;
        }
        case NodeKind::Pow: {
            auto b = as_rational(e->kids()[0]);
            if (!b) return std::nullopt;
            const Rational& ex = e->value();
            if (ex.is_integer()) {
                if (b->is_zero() && ex.sign() <= 0) return std::nullopt;
                return b->pow(ex.num());
            }
            Rational root;
            if (b->nth_root(ex.den(), root)) {
                if (root.is_zero() && ex.sign() <= 0) return std::nullopt;
                return root.pow(ex.num());
            }
            return std::nullopt;
        }
        default: return std::nullopt;
    }
}

void collect_vars(const ExprPtr& e, std::set<VarId>& out) {
    if (e->kind() == NodeKind::Var) out.insert(e->var());
    for (const auto& k : e->kids()) collect_vars(k, out);
}

std::set<VarId> expr_vars(const ExprPtr& e) {
    std::set<VarId> s;
    collect_vars(e, s);
    return s;
}

// --- parser ------------------------------------------------------------------

namespace {

struct Parser {
    std::string_view text;
    size_t pos = 0;
    const VarTable& vars;

    explicit Parser(std::string_view t, const VarTable& v) : text(t), vars(v) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    ExprPtr parse_expr() {
        ExprPtr lhs = parse_term();
        while (true) {
            skip_ws();
            if (eat('+')) {
                lhs = ex_add(lhs, parse_term());
            } else if (eat('-')) {
                lhs = ex_sub(lhs, parse_term());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_unary();
        while (true) {
            skip_ws();
            if (eat('*')) {
                lhs = ex_mul(lhs, parse_unary());
            } else if (eat('/')) {
                lhs = ex_div(lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_unary() {
        if (eat('-')) return Expr::neg(parse_unary());
        if (eat('+')) return parse_unary();
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_primary();
        skip_ws();
        if (eat('^')) {
            size_t at = pos;
            ExprPtr exp = parse_unary();  // right-associative: a^b^c = a^(b^c)
            auto r = as_rational(exp);
            if (!r)
                throw ParseError("exponent must fold to a rational constant",
                                 static_cast<long>(at));
            return Expr::pow(base, *r);
        }
        return base;
    }

    ExprPtr parse_primary() {
        skip_ws();
        if (pos >= text.size())
            throw ParseError("unexpected end of expression", static_cast<long>(pos));
        char c = text[pos];
        if (c == '(') {
            ++pos;
            ExprPtr e = parse_expr();
            if (!eat(')')) throw ParseError("expected ')'", static_cast<long>(pos));
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        throw ParseError(std::string("unexpected character '") + c + "'",
                         static_cast<long>(pos));
    }

    ExprPtr parse_number() {
        size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        long long intpart = 0;
        if (pos > start) intpart = std::stoll(std::string(text.substr(start, pos - start)));
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            size_t fstart = pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
            if (pos == fstart) throw ParseError("malformed number", static_cast<long>(start));
            std::string frac(text.substr(fstart, pos - fstart));
            Rational r(intpart);
            Rational scale(1);
            for (char fc : frac) {
                scale = scale / Rational(10);
                r += Rational(fc - '0') * scale;
            }
            return Expr::number(r);
        }
        if (pos == start) throw ParseError("malformed number", static_cast<long>(start));
        return Expr::number(Rational(intpart));
    }

    ExprPtr parse_ident() {
        size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        std::string name(text.substr(start, pos - start));
        size_t after_ident = pos;
        skip_ws();
        if (pos < text.size() && text[pos] == '(') {
            auto f = fn_by_name(name);
            if (!f) throw UnknownIdentifierError(name, static_cast<long>(start));
            ++pos;
            std::vector<ExprPtr> args;
            args.push_back(parse_expr());
            while (eat(',')) args.push_back(parse_expr());
            if (!eat(')')) throw ParseError("expected ')'", static_cast<long>(pos));
            if (static_cast<int>(args.size()) != fn_arity(*f))
                throw ParseError(std::string(fn_name(*f)) + " takes " +
                                     std::to_string(fn_arity(*f)) + " argument(s)",
                                 static_cast<long>(start));
            return Expr::fun(*f, std::move(args));
        }
        pos = after_ident;
        auto v = vars.find(name);
        if (!v) throw UnknownIdentifierError(name, static_cast<long>(start));
        return Expr::variable(*v);
    }
};

}  // namespace

ExprPtr parse(std::string_view text, const VarTable& vars) {
    Parser p(text, vars);
    ExprPtr e = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size())
        throw ParseError("trailing input after expression", static_cast<long>(p.pos));
    return e;
}

// --- printer -----------------------------------------------------------------

namespace {

// Precedence for embedding decisions: Add 0, Neg 1, Mul/Div 2, Pow 3, atom 4.
int node_prec(const ExprPtr& e) {
    switch (e->kind()) {
        case NodeKind::Add: return 0;
        case NodeKind::Neg: return 1;
        case NodeKind::Mul: return 2;
        case NodeKind::Div: return 2;
        case NodeKind::Pow: return 3;
        case NodeKind::Number:
            if (e->value().sign() < 0) return 0;
            if (!e->value().is_integer()) return 2;
            return 4;
        default: return 4;
    }
}

void print_rec(const ExprPtr& e, const VarTable& vars, std::string& out, int ctx);

void print_child(const ExprPtr& e, const VarTable& vars, std::string& out, int ctx) {
    if (node_prec(e) < ctx) {
        out += '(';
        print_rec(e, vars, out, 0);
        out += ')';
    } else {
        print_rec(e, vars, out, ctx);
    }
}

// Splits a leading minus off a term for sum/quotient printing.
std::optional<ExprPtr> strip_minus(const ExprPtr& e) {
    switch (e->kind()) {
        case NodeKind::Neg: return e->kids()[0];
        case NodeKind::Number:
            if (e->value().sign() < 0) return Expr::number(-e->value());
            return std::nullopt;
        case NodeKind::Div: {
            auto n = strip_minus(e->kids()[0]);
            if (n) return Expr::quotient(*n, e->kids()[1]);
            return std::nullopt;
        }
        default: return std::nullopt;
    }
}

void print_rec(const ExprPtr& e, const VarTable& vars, std::string& out, int /*ctx*/) {
    switch (e->kind()) {
        case NodeKind::Number: out += e->value().str(); return;
        case NodeKind::Var: out += vars.name(e->var()); return;
        case NodeKind::Add: {
            bool first = true;
            for (const auto& k : e->kids()) {
                std::optional<ExprPtr> flipped =
                    first ? std::optional<ExprPtr>{} : strip_minus(k);
                if (flipped) {
                    out += " - ";
                    print_child(*flipped, vars, out, 1);
                } else {
                    if (!first) out += " + ";
                    print_child(k, vars, out, 1);
                }
                first = false;
            }
            return;
        }
        case NodeKind::Mul: {
            bool first = true;
            for (const auto& k : e->kids()) {
                if (!first) out += '*';
                print_child(k, vars, out, first ? 2 : 3);
                first = false;
            }
            return;
        }
        case NodeKind::Div: {
            auto flipped = strip_minus(e->kids()[0]);
            if (flipped) {
                out += '-';
                print_child(Expr::quotient(*flipped, e->kids()[1]), vars, out, 2);
                return;
            }
            print_child(e->kids()[0], vars, out, 2);
            out += '/';
            print_child(e->kids()[1], vars, out, 3);
            return;
        }
        case NodeKind::Neg: {
            out += '-';
            print_child(e->kids()[0], vars, out, 2);
            return;
        }
        case NodeKind::Pow: {
            const Rational& ex = e->value();
            if (ex == Rational(1, 2)) {
                out += "sqrt(";
                print_rec(e->kids()[0], vars, out, 0);
                out += ')';
                return;
            }
            print_child(e->kids()[0], vars, out, 4);
            out += '^';
            if (ex.is_integer() && ex.sign() >= 0) {
                out += ex.str();
            } else {
                out += '(';
                out += ex.str();
                out += ')';
            }
            return;
        }
        case NodeKind::Fun: {
            out += fn_name(e->fn());
            out += '(';
            bool first = true;
            for (const auto& k : e->kids()) {
                if (!first) out += ", ";
                print_rec(k, vars, out, 0);
                first = false;
            }
            out += ')';
            return;
        }
    }
}

}  // namespace

std::string print(const ExprPtr& e, const VarTable& vars) {
    std::string out;
    print_rec(e, vars, out, 0);
    return out;
}

// --- evaluation ----------------------------------------------------------------

namespace {

struct Evaluator {
    const Bindings& point;
    const EvalOptions& opt;

    CNum run(const ExprPtr& e) {
        switch (e->kind()) {
            case NodeKind::Number: return CNum(e->value().to_double(), 0.0);
            case NodeKind::Var: {
                if (!point.has(e->var()))
                    throw EvalError("unbound variable '" + point.table().name(e->var()) + "'");
                return point.get(e->var());
            }
            case NodeKind::Add: {
                CNum s = 0.0;
                for (const auto& k : e->kids()) s += run(k);
                return s;
            }
            case NodeKind::Mul: {
                CNum s = 1.0;
                for (const auto& k : e->kids()) s *= run(k);
                return s;
            }
            case NodeKind::Neg: return -run(e->kids()[0]);
            case NodeKind::Div: {
                CNum n = run(e->kids()[0]);
                CNum d = run(e->kids()[1]);
                if (std::abs(d) < opt.epsilon)
                    throw DomainError("division by a near-zero value", describe(e->kids()[1]));
                return n / d;
            }
            case NodeKind::Pow: return eval_pow(e);
            case NodeKind::Fun: return eval_fun(e);
        }
        throw EvalError("corrupt expression node");
    }

    CNum eval_pow(const ExprPtr& e) {
        CNum b = run(e->kids()[0]);
        const Rational& ex = e->value();
        if (ex.sign() < 0 && std::abs(b) < opt.epsilon)
            throw DomainError("negative power of a near-zero value", describe(e->kids()[0]));
        if (ex.is_integer()) return ipow(b, ex.num());
        if (!opt.complex_mode) {
            double br = b.real();
            if (br < 0.0) {
                if (ex.den() % 2 == 0)
                    throw DomainError("fractional even power of a negative value",
                                      describe(e->kids()[0]));
                double mag = std::pow(-br, ex.to_double());
                double sign = (ex.num() % 2 == 0) ? 1.0 : -1.0;  // odd root keeps the sign
                return CNum(sign * mag, 0.0);
            }
            return CNum(std::pow(br, ex.to_double()), 0.0);
        }
        return std::pow(b, CNum(ex.to_double(), 0.0));
    }

    CNum eval_fun(const ExprPtr& e) {
        CNum a = run(e->kids()[0]);
        switch (e->fn()) {
            case Fn::Sin: return std::sin(a);
            case Fn::Cos: return std::cos(a);
            case Fn::Tan: {
                CNum c = std::cos(a);
                if (std::abs(c) < opt.epsilon) throw DomainError("tan near a pole", describe(e));
                return std::sin(a) / c;
            }
            case Fn::Atan:
                if (!opt.complex_mode) return CNum(std::atan(a.real()), 0.0);
                return std::atan(a);
            case Fn::Atan2: {
                CNum x = run(e->kids()[1]);
                if (std::abs(a) + std::abs(x) < opt.epsilon)
                    throw DomainError("atan2 at the origin", describe(e));
                if (!opt.complex_mode) return CNum(std::atan2(a.real(), x.real()), 0.0);
                // -i log((x+iy)/sqrt(x^2+y^2)); reduces to atan2 on real input.
                CNum r = std::sqrt(x * x + a * a);
                if (std::abs(r) < opt.epsilon)
                    throw DomainError("atan2 near an isotropic point", describe(e));
                CNum u = (x + CNum(0, 1) * a) / r;
                return CNum(0, -1) * std::log(u);
            }
            case Fn::Sqrt:
                if (!opt.complex_mode) {
                    if (a.real() < 0.0)
                        throw DomainError("sqrt of a negative value", describe(e->kids()[0]));
                    return CNum(std::sqrt(a.real()), 0.0);
                }
                return std::sqrt(a);
            case Fn::Exp: return std::exp(a);
            case Fn::Ln:
                if (!opt.complex_mode) {
                    if (a.real() < opt.epsilon)
                        throw DomainError("ln of a nonpositive value", describe(e->kids()[0]));
                    return CNum(std::log(a.real()), 0.0);
                }
                if (std::abs(a) < opt.epsilon)
                    throw DomainError("ln near zero", describe(e->kids()[0]));
                return std::log(a);
        }
        throw EvalError("corrupt function node");
    }

    static CNum ipow(CNum b, long long n) {
        bool inv = n < 0;
        unsigned long long m =
            inv ? static_cast<unsigned long long>(-n) : static_cast<unsigned long long>(n);
        CNum r = 1.0, base = b;
        while (m > 0) {
            if (m & 1ull) r *= base;
            base *= base;
            m >>= 1;
        }
        return inv ? CNum(1.0) / r : r;
    }

    std::string describe(const ExprPtr& e) const { return print(e, point.table()); }
};

}  // namespace

CNum eval_complex(const ExprPtr& e, const Bindings& point, const EvalOptions& opt) {
    Evaluator ev{point, opt};
    return ev.run(e);
}

double eval(const ExprPtr& e, const Bindings& point, const EvalOptions& opt) {
    EvalOptions real_opt = opt;
    real_opt.complex_mode = false;
    return eval_complex(e, point, real_opt).real();
}

double eval(const ExprPtr& e, const VarTable& vars, const std::map<std::string, double>& point,
            const EvalOptions& opt) {
    Bindings b(vars);
    for (const auto& [name, value] : point) b.set(vars.id(name), value);
    return eval(e, b, opt);
}

// --- differentiation -------------------------------------------------------------

namespace {

ExprPtr diff_raw(const ExprPtr& e, VarId v) {
    switch (e->kind()) {
        case NodeKind::Number: return ex_num(0);
        case NodeKind::Var: return ex_num(e->var() == v ? 1 : 0);
        case NodeKind::Add: {
            std::vector<ExprPtr> parts;
            for (const auto& k : e->kids()) parts.push_back(diff_raw(k, v));
            return Expr::add(std::move(parts));
        }
        case NodeKind::Neg: return Expr::neg(diff_raw(e->kids()[0], v));
        case NodeKind::Mul: {
            std::vector<ExprPtr> terms;
            const auto& kids = e->kids();
            for (size_t i = 0; i < kids.size(); ++i) {
                std::vector<ExprPtr> factors;
                for (size_t j = 0; j < kids.size(); ++j)
                    factors.push_back(i == j ? diff_raw(kids[j], v) : kids[j]);
                terms.push_back(Expr::mul(std::move(factors)));
            }
            return Expr::add(std::move(terms));
        }
        case NodeKind::Div: {
            const ExprPtr& n = e->kids()[0];
            const ExprPtr& d = e->kids()[1];
            ExprPtr nn = ex_sub(ex_mul(diff_raw(n, v), d), ex_mul(n, diff_raw(d, v)));
            return ex_div(nn, ex_pow(d, Rational(2)));
        }
        case NodeKind::Pow: {
            const ExprPtr& b = e->kids()[0];
            const Rational& r = e->value();
            if (r.is_zero()) return ex_num(0);
            return Expr::mul({ex_num(r), ex_pow(b, r - Rational(1)), diff_raw(b, v)});
        }
        case NodeKind::Fun: {
            const ExprPtr& t = e->kids()[0];
            ExprPtr dt = diff_raw(t, v);
            switch (e->fn()) {
                case Fn::Sin: return ex_mul(ex_fun(Fn::Cos, t), dt);
                case Fn::Cos: return Expr::neg(ex_mul(ex_fun(Fn::Sin, t), dt));
                case Fn::Tan:
                    return ex_mul(ex_add(ex_num(1), ex_pow(ex_fun(Fn::Tan, t), Rational(2))), dt);
                case Fn::Atan: return ex_div(dt, ex_add(ex_num(1), ex_pow(t, Rational(2))));
                case Fn::Atan2: {
                    const ExprPtr& y = e->kids()[0];
                    const ExprPtr& x = e->kids()[1];
                    ExprPtr num = ex_sub(ex_mul(x, dt), ex_mul(y, diff_raw(x, v)));
                    ExprPtr den = ex_add(ex_pow(x, Rational(2)), ex_pow(y, Rational(2)));
                    return ex_div(num, den);
                }
                case Fn::Sqrt: return ex_div(dt, ex_mul(ex_num(2), ex_fun(Fn::Sqrt, t)));
                case Fn::Exp: return ex_mul(e, dt);
                case Fn::Ln: return ex_div(dt, t);
            }
            throw EvalError("corrupt function node");
        }
    }
    throw EvalError("corrupt expression node");
}

}  // namespace

ExprPtr diff(const ExprPtr& e, VarId v) { return simplify(diff_raw(e, v)); }

// --- substitution ---------------------------------------------------------------

namespace {
ExprPtr substitute_raw(const ExprPtr& e, const std::map<VarId, ExprPtr>& bindings) {
    if (e->kind() == NodeKind::Var) {
        auto it = bindings.find(e->var());
        return it != bindings.end() ? it->second : e;
    }
    if (e->kids().empty()) return e;
    std::vector<ExprPtr> kids;
    kids.reserve(e->kids().size());
    bool changed = false;
    for (const auto& k : e->kids()) {
        ExprPtr nk = substitute_raw(k, bindings);
        changed = changed || nk.get() != k.get();
        kids.push_back(std::move(nk));
    }
    if (!changed) return e;
    switch (e->kind()) {
        case NodeKind::Add: return Expr::add(std::move(kids));
        case NodeKind::Mul: return Expr::mul(std::move(kids));
        case NodeKind::Pow: return Expr::pow(kids[0], e->value());
        case NodeKind::Div: return Expr::quotient(kids[0], kids[1]);
        case NodeKind::Neg: return Expr::neg(kids[0]);
        case NodeKind::Fun: return Expr::fun(e->fn(), std::move(kids));
        default: return e;
    }
}
}  // namespace

ExprPtr substitute(const ExprPtr& e, const std::map<VarId, ExprPtr>& bindings) {
    return simplify(substitute_raw(e, bindings));
}

ExprPtr replace_subtree(const ExprPtr& e, const ExprPtr& pattern, const ExprPtr& replacement) {
    if (expr_equal(e, pattern)) return replacement;
    if (e->kids().empty()) return e;
    std::vector<ExprPtr> kids;
    kids.reserve(e->kids().size());
    bool changed = false;
    for (const auto& k : e->kids()) {
        ExprPtr nk = replace_subtree(k, pattern, replacement);
        changed = changed || nk.get() != k.get();
        kids.push_back(std::move(nk));
    }
    if (!changed) return e;
    switch (e->kind()) {
        case NodeKind::Add: return Expr::add(std::move(kids));
        case NodeKind::Mul: return Expr::mul(std::move(kids));
        case NodeKind::Pow: return Expr::pow(kids[0], e->value());
        case NodeKind::Div: return Expr::quotient(kids[0], kids[1]);
        case NodeKind::Neg: return Expr::neg(kids[0]);
        case NodeKind::Fun: return Expr::fun(e->fn(), std::move(kids));
        default: return e;
    }
}

// --- probabilistic equality -------------------------------------------------------

bool probably_equal(const ExprPtr& e1, const ExprPtr& e2, int trials, double tol,
                    const VarTable& vars, const SamplingConfig& cfg) {
    if (trials < 1) throw ValidationError("probably_equal needs trials >= 1");
    if (e1->canonical() && e2->canonical() && expr_equal(e1, e2)) return true;
    std::set<VarId> vs = expr_vars(e1);
    collect_vars(e2, vs);

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    EvalOptions opt;
    opt.complex_mode = cfg.complex_mode;
    opt.epsilon = cfg.eval_epsilon;

    int valid = 0;
    int budget = 10 * trials;
    for (int attempt = 0; attempt < budget && valid < trials; ++attempt) {
        Bindings b(vars);
        for (VarId v : vs) {
            double lo = cfg.lo, hi = cfg.hi;
            auto it = cfg.var_box.find(v);
            if (it != cfg.var_box.end()) {
                lo = it->second.first;
                hi = it->second.second;
            }
            double re = lo + (hi - lo) * unit(rng);
            double im = cfg.complex_mode ? lo + (hi - lo) * unit(rng) : 0.0;
            b.set(v, CNum(re, im));
        }
        CNum a, c;
        try {
            a = eval_complex(e1, b, opt);
            c = eval_complex(e2, b, opt);
        } catch (const DomainError&) {
            continue;
        }
        ++valid;
        double scale = 1.0 + std::max(std::abs(a), std::abs(c));
        if (std::abs(a - c) > tol * scale) return false;
    }
    if (valid < trials)
        throw SamplingExhaustedError("probably_equal found only " + std::to_string(valid) +
                                     " valid points out of " + std::to_string(trials) +
                                     " requested");
    return true;
}

}  // namespace mframe
