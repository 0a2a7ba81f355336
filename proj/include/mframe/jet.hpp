#ifndef MFRAME_JET_HPP
#define MFRAME_JET_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mframe/group.hpp"

namespace mframe {

struct OrderOverflowError : Error {
    using Error::Error;
};

// Symmetric multi-index over the base directions {0..p-1}, stored sorted.
struct MultiIndex {
    std::vector<int> idx;

    int order() const { return static_cast<int>(idx.size()); }
    MultiIndex extend(int i) const {
        MultiIndex out = *this;
        out.idx.insert(std::upper_bound(out.idx.begin(), out.idx.end(), i), i);
        return out;
    }
    bool operator==(const MultiIndex& o) const { return idx == o.idx; }
    bool operator<(const MultiIndex& o) const {
        if (idx.size() != o.idx.size()) return idx.size() < o.idx.size();
        return idx < o.idx;
    }
};

// Bundle-adapted coordinates on J^k: base x^1..x^p, fiber u^1..u^n, and jet
// coordinates u^alpha_J for |J| <= k. Jet names are fiber name + "_" + base
// names of J in index order (u_xy); order-0 jets are the fiber names.
class JetSpace {
  public:
    struct JetCoord {
        int alpha;
        MultiIndex J;
        VarId var;
    };

    JetSpace(std::shared_ptr<VarTable> table, const std::vector<std::string>& base_names,
             const std::vector<std::string>& fiber_names, int order);

    int p() const { return static_cast<int>(base_.size()); }
    int n() const { return static_cast<int>(fiber_.size()); }
    int order() const { return order_; }
    const std::vector<VarId>& base() const { return base_; }
    const std::vector<VarId>& fiber() const { return fiber_; }
    const std::vector<JetCoord>& jets() const { return jets_; }

    VarId jet_var(int alpha, const MultiIndex& J) const;
    // index into jets() for a coordinate id, -1 when v is not a jet coordinate
    int jet_index(VarId v) const;
    bool is_base(VarId v) const;

    // base coordinates followed by all jet coordinates, deterministic order
    const std::vector<VarId>& coords() const { return coords_; }
    int dim() const { return static_cast<int>(coords_.size()); }

    const VarTable& table() const { return *table_; }
    const std::shared_ptr<VarTable>& table_ptr() const { return table_; }

  private:
    std::shared_ptr<VarTable> table_;
    std::vector<VarId> base_;
    std::vector<VarId> fiber_;
    int order_;
    std::vector<JetCoord> jets_;
    std::map<std::pair<int, MultiIndex>, int> index_;
    std::map<VarId, int> by_var_;
    std::vector<VarId> coords_;
};

// Total differential operator D_i: d/dx^i + sum u^alpha_{J,i} d/du^alpha_J.
// Group parameters are constants. Throws OrderOverflowError when e depends on
// an order-k coordinate (the result would need order k+1).
ExprPtr total_derivative(const ExprPtr& e, int i, const JetSpace& space);

// Verticalized prolonged action: base coordinates are fixed, jet transforms
// come from iterating D_i on the fiber transforms.
struct ProlongedAction {
    const JetSpace* space = nullptr;
    const ActionSpec* action = nullptr;
    // parametric: transform of each jet coordinate, aligned with space->jets()
    std::vector<ExprPtr> transforms;

    bool parametric() const { return action->kind == ActionSpec::Kind::Parametric; }
    const ExprPtr& transform_of(int jet_index) const {
        return transforms.at(static_cast<size_t>(jet_index));
    }
};

ProlongedAction prolong_action(const ActionSpec& action, const JetSpace& space);

// Prolonged graph of the immersion: u^alpha_J -> d_J psi^alpha, Exprs in base
// coordinates only (keyed by jet coordinate id, order-0 included).
std::map<VarId, ExprPtr> prolong_immersion(const std::vector<ExprPtr>& psi, const JetSpace& space);

// --- numeric jet points -----------------------------------------------------

// values aligned with space.coords()
using JetPoint = std::vector<CNum>;

Bindings jet_bindings(const JetSpace& space, const JetPoint& z);

// g acting on a numeric jet point by the prolonged action.
JetPoint apply_action(const ProlongedAction& pa, const GroupElement& g, const JetPoint& z,
                      const EvalOptions& opt = {});

GroupElement identity_element(const ActionSpec& action);

// Random element near the identity: parameters (or algebra coordinates)
// uniform in [-radius, radius].
GroupElement random_group_element(const ActionSpec& action, std::mt19937_64& rng, double radius,
                                  bool complex_mode);

}  // namespace mframe

#endif
