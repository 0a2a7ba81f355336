#ifndef MFRAME_ONEFORM_HPP
#define MFRAME_ONEFORM_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mframe/expr.hpp"

namespace mframe {

// Finite linear combination of coordinate differentials with Expr
// coefficients. Coefficients are kept simplified; zero coefficients are
// dropped.
class OneForm {
  public:
    OneForm() = default;

    void set(VarId coord, ExprPtr coeff) {
        ExprPtr s = simplify(coeff);
        if (is_zero(s))
            coeffs_.erase(coord);
        else
            coeffs_[coord] = std::move(s);
    }
    const std::map<VarId, ExprPtr>& coeffs() const { return coeffs_; }
    ExprPtr coeff(VarId coord) const {
        auto it = coeffs_.find(coord);
        return it != coeffs_.end() ? it->second : ex_num(0);
    }
    bool is_zero_form() const { return coeffs_.empty(); }

    OneForm& add_term(VarId coord, const ExprPtr& coeff) {
        auto it = coeffs_.find(coord);
        set(coord, it != coeffs_.end() ? ex_add(it->second, coeff) : coeff);
        return *this;
    }

    friend OneForm operator+(const OneForm& a, const OneForm& b) {
        OneForm out = a;
        for (const auto& [c, e] : b.coeffs_) out.add_term(c, e);
        return out;
    }
    friend OneForm operator-(const OneForm& a, const OneForm& b);
    OneForm scaled(const ExprPtr& s) const {
        OneForm out;
        for (const auto& [c, e] : coeffs_) out.set(c, ex_mul(s, e));
        return out;
    }

    std::string str(const VarTable& vars) const;

  private:
    std::map<VarId, ExprPtr> coeffs_;
};

// Degree-two forms appear only transiently (structure constants); coefficients
// are indexed by ordered coordinate pairs (i < j by VarId).
class TwoForm {
  public:
    void add_term(VarId i, VarId j, const ExprPtr& coeff);  // antisymmetrizes
    const std::map<std::pair<VarId, VarId>, ExprPtr>& coeffs() const { return coeffs_; }
    ExprPtr coeff(VarId i, VarId j) const;
    std::string str(const VarTable& vars) const;

  private:
    std::map<std::pair<VarId, VarId>, ExprPtr> coeffs_;
};

// d(sum f_c dc) = sum (df_c) ^ dc.
TwoForm exterior_derivative(const OneForm& w);

// Exterior differential of a scalar function: sum over coordinates of
// (df/dc) dc.
OneForm d_of(const ExprPtr& f);

// Substitutes `map` into the coefficients and replaces each differential dc
// by the total differential of map[c] in the source coordinates. Coordinates
// with nonzero coefficient must be covered by the map.
OneForm pullback_form(const OneForm& w, const std::map<VarId, ExprPtr>& coordinate_map,
                      const VarTable& vars);

}  // namespace mframe

#endif
