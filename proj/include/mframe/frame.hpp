#ifndef MFRAME_FRAME_HPP
#define MFRAME_FRAME_HPP

#include <map>
#include <string>
#include <vector>

#include "mframe/jet.hpp"

namespace mframe {

// r normalization equations A*u^{i_kappa} = c_kappa picking the cross-section.
struct CrossSection {
    std::vector<std::pair<VarId, Rational>> entries;
};

// Locally defined equivariant map into the group, either as parameter
// expressions or (for implicitly described groups) as a matrix of expressions
// in the jet coordinates.
struct MovingFrame {
    enum class Form { Parameters, MatrixForm };
    Form form = Form::Parameters;
    std::vector<ExprPtr> params;                    // aligned with action params
    std::vector<std::vector<ExprPtr>> matrix;       // n x n
};

// Sequential normalization solver. Strategy, in order: equations linear in an
// unsolved parameter with fully determined coefficients, pure quadratic
// t^2 = E (positive branch), the same two allowing still-unsolved parameters
// in the solution, then sin/cos pairs (theta enters only through sin(theta),
// cos(theta), linearly). Back-substitutes until parameters are expressed in
// jet coordinates alone. Throws SolverError when stuck or inconsistent.
MovingFrame solve_normalization(const ProlongedAction& prolonged, const CrossSection& cs,
                                const SamplingConfig& cfg = {});

struct FrameReport {
    bool pass = true;
    double max_normalization_residual = 0.0;
    double max_equivariance_residual = 0.0;
    std::vector<std::string> failures;
};

// Checks the normalization residuals at random jet points and equivariance
// rho(g.z) = rho(z) g^-1 through the matrix representation.
FrameReport verify_frame(const MovingFrame& frame, const ProlongedAction& prolonged,
                         const CrossSection& cs, const SamplingConfig& cfg = {},
                         double tol = 1e-8);

// iota* = sigma* A*: every coordinate's transform with the frame substituted
// for the group, simplified. Base coordinates map to themselves.
struct Invariantization {
    std::map<VarId, ExprPtr> value;  // keyed by coordinate id, covers all coords
    const ExprPtr& of(VarId v) const { return value.at(v); }
};

Invariantization invariantize(const ProlongedAction& prolonged, const MovingFrame& frame);

struct FreedomDiagnosis {
    bool free = false;
    int rank_needed = 0;
    int min_rank = 0;
    int max_rank = 0;
    std::string advice;
};

// Numeric rank of the Jacobian of the prolonged action in the group directions
// at identity, sampled at 10 random jet points.
FreedomDiagnosis check_local_freedom(const ProlongedAction& prolonged,
                                     const SamplingConfig& cfg = {});

// Assembles a numeric group element from a frame evaluated at a jet point.
GroupElement frame_element_at(const MovingFrame& frame, const ProlongedAction& prolonged,
                              const JetPoint& z, const EvalOptions& opt);

}  // namespace mframe

#endif
