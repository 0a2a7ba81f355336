#include "mframe/oneform.hpp"

namespace mframe {

OneForm operator-(const OneForm& a, const OneForm& b) {
    OneForm out = a;
    for (const auto& [c, e] : b.coeffs()) out.add_term(c, ex_neg(e));
    return out;
}

std::string OneForm::str(const VarTable& vars) const {
    if (coeffs_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [c, e] : coeffs_) {
        if (!first) out += " + ";
        out += "(" + print(e, vars) + ")*d(" + vars.name(c) + ")";
        first = false;
    }
    return out;
}

void TwoForm::add_term(VarId i, VarId j, const ExprPtr& coeff) {
    if (i == j) return;
    VarId a = i, b = j;
    ExprPtr c = coeff;
    if (a > b) {
        std::swap(a, b);
        c = ex_neg(c);
    }
    auto key = std::make_pair(a, b);
    auto it = coeffs_.find(key);
    ExprPtr s = simplify(it != coeffs_.end() ? ex_add(it->second, c) : c);
    if (is_zero(s))
        coeffs_.erase(key);
    else
        coeffs_[key] = std::move(s);
}

ExprPtr TwoForm::coeff(VarId i, VarId j) const {
    if (i == j) return ex_num(0);
    bool flip = i > j;
    auto it = coeffs_.find(flip ? std::make_pair(j, i) : std::make_pair(i, j));
    if (it == coeffs_.end()) return ex_num(0);
    return flip ? simplify(ex_neg(it->second)) : it->second;
}

std::string TwoForm::str(const VarTable& vars) const {
    if (coeffs_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [key, e] : coeffs_) {
        if (!first) out += " + ";
        out += "(" + print(e, vars) + ")*d(" + vars.name(key.first) + ")^d(" +
               vars.name(key.second) + ")";
        first = false;
    }
    return out;
}

TwoForm exterior_derivative(const OneForm& w) {
    TwoForm out;
    for (const auto& [c, f] : w.coeffs()) {
        for (VarId v : expr_vars(f)) {
            ExprPtr df = diff(f, v);
            if (!is_zero(df)) out.add_term(v, c, df);
        }
    }
    return out;
}

OneForm d_of(const ExprPtr& f) {
    OneForm out;
    for (VarId v : expr_vars(f)) {
        ExprPtr df = diff(f, v);
        if (!is_zero(df)) out.set(v, df);
    }
    return out;
}

OneForm pullback_form(const OneForm& w, const std::map<VarId, ExprPtr>& coordinate_map,
                      const VarTable& vars) {
    OneForm out;
    for (const auto& [c, f] : w.coeffs()) {
        auto it = coordinate_map.find(c);
        if (it == coordinate_map.end())
            throw ValidationError("pullback map does not cover coordinate '" + vars.name(c) + "'");
        ExprPtr fc = substitute(f, coordinate_map);
        OneForm dmapped = d_of(it->second);
        for (const auto& [s, g] : dmapped.coeffs()) out.add_term(s, ex_mul(fc, g));
    }
    return out;
}

}  // namespace mframe
