#include "mframe/jet.hpp"

#include <algorithm>
#include <functional>

namespace mframe {

namespace {

// all multi-indices of the given order over {0..p-1}, lexicographic
void enumerate_multiindices(int p, int order, std::vector<MultiIndex>& out) {
    MultiIndex cur;
    std::function<void(int, int)> rec = [&](int start, int left) {
        if (left == 0) {
            out.push_back(cur);
            return;
        }
        for (int i = start; i < p; ++i) {
            cur.idx.push_back(i);
            rec(i, left - 1);
            cur.idx.pop_back();
        }
    };
    rec(0, order);
}

}  // namespace

JetSpace::JetSpace(std::shared_ptr<VarTable> table, const std::vector<std::string>& base_names,
                   const std::vector<std::string>& fiber_names, int order)
    : table_(std::move(table)), order_(order) {
    if (order < 0) throw ValidationError("jet order must be nonnegative");
    if (base_names.empty() || fiber_names.empty())
        throw ValidationError("jet space needs at least one base and one fiber coordinate");
    for (const auto& b : base_names) base_.push_back(table_->add(b, VarKind::Base));
    for (const auto& f : fiber_names) fiber_.push_back(table_->add(f, VarKind::Fiber));

    for (int ord = 0; ord <= order; ++ord) {
        std::vector<MultiIndex> mis;
        enumerate_multiindices(p(), ord, mis);
        for (int alpha = 0; alpha < n(); ++alpha) {
            for (const auto& J : mis) {
                VarId v;
                if (ord == 0) {
                    v = fiber_[static_cast<size_t>(alpha)];
                } else {
                    std::string name = fiber_names[static_cast<size_t>(alpha)] + "_";
                    for (int i : J.idx) name += base_names[static_cast<size_t>(i)];
                    if (table_->find(name))
                        throw ValidationError("jet coordinate name collides with '" + name + "'");
                    v = table_->add(name, VarKind::Jet);
                }
                int pos = static_cast<int>(jets_.size());
                jets_.push_back({alpha, J, v});
                index_[{alpha, J}] = pos;
                by_var_[v] = pos;
            }
        }
    }
    coords_ = base_;
    for (const auto& jc : jets_) coords_.push_back(jc.var);
}

VarId JetSpace::jet_var(int alpha, const MultiIndex& J) const {
    auto it = index_.find({alpha, J});
    if (it == index_.end())
        throw ValidationError("jet coordinate out of range (order > " + std::to_string(order_) +
                              ")");
    return jets_[static_cast<size_t>(it->second)].var;
}

int JetSpace::jet_index(VarId v) const {
    auto it = by_var_.find(v);
    return it == by_var_.end() ? -1 : it->second;
}

bool JetSpace::is_base(VarId v) const {
    return std::find(base_.begin(), base_.end(), v) != base_.end();
}

ExprPtr total_derivative(const ExprPtr& e, int i, const JetSpace& space) {
    if (i < 0 || i >= space.p()) throw ValidationError("base direction out of range");
    std::vector<ExprPtr> parts;
    ExprPtr base_part = diff(e, space.base()[static_cast<size_t>(i)]);
    if (!is_zero(base_part)) parts.push_back(base_part);
    for (VarId v : expr_vars(e)) {
        int idx = space.jet_index(v);
        if (idx < 0) continue;
        const auto& jc = space.jets()[static_cast<size_t>(idx)];
        ExprPtr de = diff(e, v);
        if (is_zero(de)) continue;
        if (jc.J.order() >= space.order())
            throw OrderOverflowError("total derivative of an order-" +
                                     std::to_string(jc.J.order()) +
                                     " coordinate exceeds the configured jet order " +
                                     std::to_string(space.order()));
        VarId up = space.jet_var(jc.alpha, jc.J.extend(i));
        parts.push_back(ex_mul(de, ex_var(up)));
    }
    return simplify(Expr::add(std::move(parts)));
}

ProlongedAction prolong_action(const ActionSpec& action, const JetSpace& space) {
    ProlongedAction out;
    out.space = &space;
    out.action = &action;
    if (action.kind != ActionSpec::Kind::Parametric) return out;  // matrix actions stay numeric

    if (static_cast<int>(action.fiber_transforms.size()) != space.n())
        throw ValidationError("action must transform every fiber coordinate");

    // validate: transforms in fiber coordinates and parameters only, and
    // identity parameter values give the identity map
    for (int alpha = 0; alpha < space.n(); ++alpha) {
        const ExprPtr& t = action.fiber_transforms[static_cast<size_t>(alpha)];
        for (VarId v : expr_vars(t)) {
            bool is_fiber =
                std::find(space.fiber().begin(), space.fiber().end(), v) != space.fiber().end();
            bool is_param =
                std::find(action.params.begin(), action.params.end(), v) != action.params.end();
            if (!is_fiber && !is_param)
                throw ValidationError("verticalized action may not involve '" +
                                      space.table().name(v) + "'");
        }
        std::map<VarId, ExprPtr> id_sub;
        for (size_t j = 0; j < action.params.size(); ++j)
            id_sub[action.params[j]] = ex_num(action.identity[j]);
        ExprPtr at_id = substitute(t, id_sub);
        if (!expr_equal(at_id, simplify(ex_var(space.fiber()[static_cast<size_t>(alpha)]))))
            throw ValidationError("identity parameter values do not give the identity transform");
    }

    out.transforms.resize(space.jets().size());
    for (size_t pos = 0; pos < space.jets().size(); ++pos) {
        const auto& jc = space.jets()[pos];
        if (jc.J.order() == 0) {
            out.transforms[pos] = simplify(action.fiber_transforms[static_cast<size_t>(jc.alpha)]);
            continue;
        }
        // u^alpha_{J',i} = D_i(u^alpha_{J'}) with i the first index of J
        int i = jc.J.idx.front();
        MultiIndex rest;
        rest.idx.assign(jc.J.idx.begin() + 1, jc.J.idx.end());
        VarId prev = space.jet_var(jc.alpha, rest);
        int prev_pos = space.jet_index(prev);
        out.transforms[pos] = total_derivative(out.transforms[static_cast<size_t>(prev_pos)], i, space);
    }
    return out;
}

std::map<VarId, ExprPtr> prolong_immersion(const std::vector<ExprPtr>& psi, const JetSpace& space) {
    if (static_cast<int>(psi.size()) != space.n())
        throw ValidationError("immersion must provide every fiber coordinate");
    for (const auto& c : psi)
        for (VarId v : expr_vars(c))
            if (!space.is_base(v))
                throw ValidationError("immersion components must be functions of the base only");

    std::map<VarId, ExprPtr> out;
    for (const auto& jc : space.jets()) {
        if (jc.J.order() == 0) {
            out[jc.var] = simplify(psi[static_cast<size_t>(jc.alpha)]);
            continue;
        }
        int i = jc.J.idx.front();
        MultiIndex rest;
        rest.idx.assign(jc.J.idx.begin() + 1, jc.J.idx.end());
        const ExprPtr& prev = out.at(space.jet_var(jc.alpha, rest));
        out[jc.var] = diff(prev, space.base()[static_cast<size_t>(i)]);
    }
    return out;
}

Bindings jet_bindings(const JetSpace& space, const JetPoint& z) {
    if (z.size() != space.coords().size())
        throw ValidationError("jet point has the wrong dimension");
    Bindings b(space.table());
    for (size_t i = 0; i < z.size(); ++i) b.set(space.coords()[i], z[i]);
    return b;
}

JetPoint apply_action(const ProlongedAction& pa, const GroupElement& g, const JetPoint& z,
                      const EvalOptions& opt) {
    const JetSpace& space = *pa.space;
    JetPoint out(z.size());
    for (int i = 0; i < space.p(); ++i) out[static_cast<size_t>(i)] = z[static_cast<size_t>(i)];

    if (pa.parametric()) {
        Bindings b = jet_bindings(space, z);
        for (size_t j = 0; j < pa.action->params.size(); ++j)
            b.set(pa.action->params[j], g.params[j]);
        for (size_t pos = 0; pos < space.jets().size(); ++pos)
            out[static_cast<size_t>(space.p()) + pos] = eval_complex(pa.transforms[pos], b, opt);
        return out;
    }

    // matrix-linear: every jet block transforms by the same matrix
    const int n = space.n();
    for (size_t pos = 0; pos < space.jets().size(); ++pos) {
        const auto& jc = space.jets()[pos];
        CNum acc = 0.0;
        for (int beta = 0; beta < n; ++beta) {
            VarId src = space.jet_var(beta, jc.J);
            int src_pos = space.jet_index(src);
            acc += g.matrix(jc.alpha, beta) * z[static_cast<size_t>(space.p() + src_pos)];
        }
        out[static_cast<size_t>(space.p()) + pos] = acc;
    }
    return out;
}

GroupElement identity_element(const ActionSpec& action) {
    GroupElement g;
    if (action.kind == ActionSpec::Kind::Parametric) {
        g.params = identity_params(action);
    } else {
        const int n = static_cast<int>(action.algebra.empty() ? 0 : action.algebra[0].rows());
        g.matrix = Mat::Identity(n, n);
    }
    return g;
}

GroupElement random_group_element(const ActionSpec& action, std::mt19937_64& rng, double radius,
                                  bool complex_mode) {
    std::uniform_real_distribution<double> box(-radius, radius);
    GroupElement g;
    if (action.kind == ActionSpec::Kind::Parametric) {
        g.params = identity_params(action);
        for (auto& p : g.params)
            p += CNum(box(rng), complex_mode ? box(rng) : 0.0);
        return g;
    }
    const int n = static_cast<int>(action.algebra[0].rows());
    Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(n, n);
    for (const auto& gen : action.algebra) xi += box(rng) * gen;
    g.matrix = matrix_exp(xi).cast<CNum>();
    return g;
}

}  // namespace mframe
