#ifndef MFRAME_GROUP_HPP
#define MFRAME_GROUP_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mframe/numeric.hpp"
#include "mframe/oneform.hpp"

namespace mframe {

// Square matrix of Exprs in the group parameters; identity matrix at identity
// parameter values.
struct MatrixRep {
    std::vector<std::vector<ExprPtr>> m;
    int size() const { return static_cast<int>(m.size()); }
};

// Group action specification. Parametric actions carry explicit fiber
// transforms in the parameters. Matrix-linear actions (used when the group is
// described implicitly, without parameters) act on the fiber coordinate vector
// by matrix multiplication; elements are sampled through a Lie algebra basis.
struct ActionSpec {
    enum class Kind { Parametric, MatrixLinear };
    Kind kind = Kind::Parametric;

    std::shared_ptr<VarTable> table;

    // parametric
    std::vector<VarId> params;
    std::vector<Rational> identity;
    std::vector<ExprPtr> fiber_transforms;  // per fiber coordinate, in fiber coords + params
    std::optional<MatrixRep> rep;
    std::vector<std::pair<int, int>> mc_selection;  // optional 1-based entry override
    bool projective = false;  // rep comparison is up to a global sign

    // matrix-linear
    int group_dim = 0;                         // r
    std::vector<Eigen::MatrixXd> algebra;      // r generators, n x n

    int r() const {
        return kind == Kind::Parametric ? static_cast<int>(params.size()) : group_dim;
    }
};

// A concrete group element for numeric work.
struct GroupElement {
    std::vector<CNum> params;  // parametric
    Mat matrix;                // matrix-linear
};

// r right-invariant one-forms in the parameter differentials, read off
// (dg)g^-1.
struct MaurerCartanBasis {
    std::vector<OneForm> forms;                // in dt^j
    std::vector<std::pair<int, int>> entries;  // provenance: (row, col), 1-based
};

// --- symbolic matrix helpers (sizes <= 4) ----------------------------------

ExprPtr sym_det(const std::vector<std::vector<ExprPtr>>& m);
std::vector<std::vector<ExprPtr>> sym_inverse(const std::vector<std::vector<ExprPtr>>& m);

// Numeric evaluation of a matrix of Exprs.
Mat eval_matrix(const std::vector<std::vector<ExprPtr>>& m, const Bindings& point,
                const EvalOptions& opt = {});

// Parameter bindings for a parametric group element.
Bindings param_bindings(const ActionSpec& action, const std::vector<CNum>& params);
std::vector<CNum> identity_params(const ActionSpec& action);

// Evaluate the matrix representation at parameter values.
Mat rep_eval(const ActionSpec& action, const std::vector<CNum>& params,
             const EvalOptions& opt = {});

// Recover parameters from a representation matrix near the given seed
// (numeric least squares); used for composing group elements through the rep.
std::optional<std::vector<CNum>> params_from_rep(const ActionSpec& action, const Mat& target,
                                                 const std::vector<CNum>& seed, bool complex_mode,
                                                 double tol = 1e-9);

// --- operations -------------------------------------------------------------

// Computes (dg)g^-1 entrywise and selects r independent entries (row-major
// greedy rank test at identity, or the explicit mc_selection override).
// Throws SolverError when fewer than r independent entries exist.
MaurerCartanBasis maurer_cartan(const ActionSpec& action);

// Structure constants of a coframe: d omega^i = -sum_{j<k} C^i_jk w^j ^ w^k.
struct StructureConstants {
    bool constant = true;
    // C[i](j,k), antisymmetric in (j,k)
    std::vector<Mat> C;
    struct NonConstantEntry {
        int i, j, k;               // 1-based
        std::vector<CNum> samples;
        std::string symbolic;       // printable structure function when cheap to derive
    };
    std::vector<NonConstantEntry> offenders;
};

StructureConstants structure_constants_of(const std::vector<OneForm>& forms,
                                          const std::vector<VarId>& coords, const VarTable& vars,
                                          const SamplingConfig& cfg, double const_tol = 1e-8);

}  // namespace mframe

#endif
