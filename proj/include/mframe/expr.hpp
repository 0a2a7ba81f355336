#ifndef MFRAME_EXPR_HPP
#define MFRAME_EXPR_HPP

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mframe/error.hpp"
#include "mframe/rational.hpp"

namespace mframe {

using VarId = int32_t;
using CNum = std::complex<double>;

enum class VarKind { Base, Fiber, Jet, GroupParam, Auxiliary };

// Registry of named scalars. Every variable appearing in an Expr exchanged
// between modules is registered here; names are unique.
class VarTable {
  public:
    VarId add(const std::string& name, VarKind kind);
    VarId id(std::string_view name) const;  // throws UnknownIdentifierError
    std::optional<VarId> find(std::string_view name) const;
    const std::string& name(VarId v) const { return names_.at(static_cast<size_t>(v)); }
    VarKind kind(VarId v) const { return kinds_.at(static_cast<size_t>(v)); }
    int size() const { return static_cast<int>(names_.size()); }

  private:
    std::vector<std::string> names_;
    std::vector<VarKind> kinds_;
    std::unordered_map<std::string, VarId> index_;
};

enum class NodeKind { Number, Var, Add, Mul, Pow, Div, Neg, Fun };

enum class Fn { Sin, Cos, Tan, Atan, Atan2, Sqrt, Exp, Ln };

const char* fn_name(Fn f);
int fn_arity(Fn f);
std::optional<Fn> fn_by_name(std::string_view name);

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable expression tree node. Structurally equal trees compare equal;
// nothing mutates a node after construction.
class Expr {
  public:
    NodeKind kind() const { return kind_; }
    const Rational& value() const { return value_; }  // Number payload / Pow exponent
    VarId var() const { return var_; }
    Fn fn() const { return fn_; }
    const std::vector<ExprPtr>& kids() const { return kids_; }
    size_t hash() const { return hash_; }
    bool canonical() const { return canonical_; }

    static ExprPtr number(const Rational& r);
    static ExprPtr variable(VarId v);
    static ExprPtr add(std::vector<ExprPtr> kids);
    static ExprPtr mul(std::vector<ExprPtr> kids);
    static ExprPtr pow(ExprPtr base, const Rational& exponent);
    static ExprPtr quotient(ExprPtr num, ExprPtr den);
    static ExprPtr neg(ExprPtr k);
    static ExprPtr fun(Fn f, std::vector<ExprPtr> args);

    void mark_canonical() const { canonical_ = true; }

  private:
    Expr() = default;
    friend ExprPtr detail_make_expr(NodeKind, Rational, VarId, Fn, std::vector<ExprPtr>);

    NodeKind kind_ = NodeKind::Number;
    Rational value_;
    VarId var_ = -1;
    Fn fn_ = Fn::Sin;
    std::vector<ExprPtr> kids_;
    size_t hash_ = 0;
    mutable bool canonical_ = false;
};

// Shorthand builders.
ExprPtr ex_num(long long n);
ExprPtr ex_num(const Rational& r);
ExprPtr ex_var(VarId v);
ExprPtr ex_add(ExprPtr a, ExprPtr b);
ExprPtr ex_sub(ExprPtr a, ExprPtr b);
ExprPtr ex_mul(ExprPtr a, ExprPtr b);
ExprPtr ex_div(ExprPtr a, ExprPtr b);
ExprPtr ex_pow(ExprPtr a, const Rational& e);
ExprPtr ex_neg(ExprPtr a);
ExprPtr ex_fun(Fn f, ExprPtr a);
ExprPtr ex_fun(Fn f, ExprPtr a, ExprPtr b);
ExprPtr ex_sqrt(ExprPtr a);

bool expr_equal(const ExprPtr& a, const ExprPtr& b);
// Deterministic total order on trees (used for canonical sorting).
int expr_compare(const ExprPtr& a, const ExprPtr& b);

bool is_zero(const ExprPtr& e);
bool is_one(const ExprPtr& e);
// Set when the whole expression is a rational constant.
std::optional<Rational> as_rational(const ExprPtr& e);

void collect_vars(const ExprPtr& e, std::set<VarId>& out);
std::set<VarId> expr_vars(const ExprPtr& e);

// --- parse / print -------------------------------------------------------

// Infix parser over registered variables, the fixed function set and rational
// literals; `^` is right-associative and its exponent must fold to a rational
// constant. Throws ParseError / UnknownIdentifierError.
ExprPtr parse(std::string_view text, const VarTable& vars);

std::string print(const ExprPtr& e, const VarTable& vars);

// --- numeric evaluation ---------------------------------------------------

struct EvalOptions {
    bool complex_mode = false;
    double epsilon = 1e-10;  // |denominator| below this is a domain error
};

class Bindings {
  public:
    explicit Bindings(const VarTable& t) : table_(&t), values_(static_cast<size_t>(t.size())), bound_(static_cast<size_t>(t.size()), false) {}
    void set(VarId v, CNum value) {
        values_.at(static_cast<size_t>(v)) = value;
        bound_.at(static_cast<size_t>(v)) = true;
    }
    void set(VarId v, double value) { set(v, CNum(value, 0.0)); }
    bool has(VarId v) const { return bound_.at(static_cast<size_t>(v)); }
    CNum get(VarId v) const { return values_.at(static_cast<size_t>(v)); }
    const VarTable& table() const { return *table_; }

  private:
    const VarTable* table_;
    std::vector<CNum> values_;
    std::vector<bool> bound_;
};

CNum eval_complex(const ExprPtr& e, const Bindings& point, const EvalOptions& opt = {});
// Real-mode evaluation; rejects complex-producing operations (sqrt of a
// negative, ln of a nonpositive value).
double eval(const ExprPtr& e, const Bindings& point, const EvalOptions& opt = {});
double eval(const ExprPtr& e, const VarTable& vars, const std::map<std::string, double>& point,
            const EvalOptions& opt = {});

// --- calculus -------------------------------------------------------------

// Exact symbolic partial derivative, simplified.
ExprPtr diff(const ExprPtr& e, VarId v);

// Simultaneous substitution followed by simplify.
ExprPtr substitute(const ExprPtr& e, const std::map<VarId, ExprPtr>& bindings);

// Replaces every subtree structurally equal to `pattern` (no simplify).
ExprPtr replace_subtree(const ExprPtr& e, const ExprPtr& pattern, const ExprPtr& replacement);

// Canonical form: rational functions over a common (factored) denominator
// with expanded, collected numerator; sin^2+cos^2 -> 1; sqrt(x)^2 -> x.
// Deterministic for structurally equal inputs.
ExprPtr simplify(const ExprPtr& e);

// --- probabilistic equality -----------------------------------------------

struct SamplingConfig {
    double lo = -1.0;
    double hi = 1.0;
    std::map<VarId, std::pair<double, double>> var_box;  // per-variable overrides
    bool complex_mode = false;
    uint64_t seed = 42;
    double eval_epsilon = 1e-10;
};

// True iff |e1-e2| <= tol*(1+max(|e1|,|e2|)) at `trials` random points from
// the sampling box, skipping domain-error points (budget 10x trials).
bool probably_equal(const ExprPtr& e1, const ExprPtr& e2, int trials, double tol,
                    const VarTable& vars, const SamplingConfig& cfg = {});

}  // namespace mframe

#endif
