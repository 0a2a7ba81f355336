#include "mframe/group.hpp"

#include <algorithm>
#include <random>

namespace mframe {

// --- symbolic matrix helpers ---------------------------------------------------

ExprPtr sym_det(const std::vector<std::vector<ExprPtr>>& m) {
    const size_t n = m.size();
    if (n == 0) return ex_num(1);
    if (n == 1) return simplify(m[0][0]);
    // Laplace expansion along the first row; fine for the sizes we handle.
    std::vector<ExprPtr> terms;
    for (size_t j = 0; j < n; ++j) {
        if (is_zero(simplify(m[0][j]))) continue;
        std::vector<std::vector<ExprPtr>> minor;
        for (size_t r = 1; r < n; ++r) {
            std::vector<ExprPtr> row;
            for (size_t c = 0; c < n; ++c)
                if (c != j) row.push_back(m[r][c]);
            minor.push_back(std::move(row));
        }
        ExprPtr t = ex_mul(m[0][j], sym_det(minor));
        terms.push_back(j % 2 == 0 ? t : ex_neg(t));
    }
    return simplify(Expr::add(std::move(terms)));
}

std::vector<std::vector<ExprPtr>> sym_inverse(const std::vector<std::vector<ExprPtr>>& m) {
    const size_t n = m.size();
    if (n > 4) throw ValidationError("symbolic inverse supported up to size 4");
    ExprPtr det = sym_det(m);
    if (is_zero(det)) throw SolverError("matrix is symbolically singular");
    std::vector<std::vector<ExprPtr>> inv(n, std::vector<ExprPtr>(n));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            // cofactor expansion: inv[j][i] = (-1)^(i+j) det(minor_ij) / det
            std::vector<std::vector<ExprPtr>> minor;
            for (size_t r = 0; r < n; ++r) {
                if (r == i) continue;
                std::vector<ExprPtr> row;
                for (size_t c = 0; c < n; ++c)
                    if (c != j) row.push_back(m[r][c]);
                minor.push_back(std::move(row));
            }
            ExprPtr cof = sym_det(minor);
            if ((i + j) % 2 == 1) cof = ex_neg(cof);
            inv[j][i] = simplify(ex_div(cof, det));
        }
    }
    return inv;
}

Mat eval_matrix(const std::vector<std::vector<ExprPtr>>& m, const Bindings& point,
                const EvalOptions& opt) {
    const int n = static_cast<int>(m.size());
    const int cols = n > 0 ? static_cast<int>(m[0].size()) : 0;
    Mat out(n, cols);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < cols; ++j)
            out(i, j) = eval_complex(m[static_cast<size_t>(i)][static_cast<size_t>(j)], point, opt);
    return out;
}

Bindings param_bindings(const ActionSpec& action, const std::vector<CNum>& params) {
    Bindings b(*action.table);
    for (size_t i = 0; i < action.params.size(); ++i) b.set(action.params[i], params[i]);
    return b;
}

std::vector<CNum> identity_params(const ActionSpec& action) {
    std::vector<CNum> out;
    out.reserve(action.identity.size());
    for (const auto& r : action.identity) out.push_back(CNum(r.to_double(), 0.0));
    return out;
}

Mat rep_eval(const ActionSpec& action, const std::vector<CNum>& params, const EvalOptions& opt) {
    if (!action.rep) throw ValidationError("action has no matrix representation");
    return eval_matrix(action.rep->m, param_bindings(action, params), opt);
}

std::optional<std::vector<CNum>> params_from_rep(const ActionSpec& action, const Mat& target,
                                                 const std::vector<CNum>& seed, bool complex_mode,
                                                 double tol) {
    const int r = action.r();
    const int reals = complex_mode ? 2 * r : r;
    EvalOptions opt;
    opt.complex_mode = complex_mode;
    auto unpack = [&](const RVec& x) {
        std::vector<CNum> p(static_cast<size_t>(r));
        for (int i = 0; i < r; ++i)
            p[static_cast<size_t>(i)] = complex_mode ? CNum(x(2 * i), x(2 * i + 1)) : CNum(x(i), 0);
        return p;
    };
    auto residual = [&](const RVec& x) {
        Mat m = rep_eval(action, unpack(x), opt);
        Mat d = m - target;
        RVec out(2 * d.size());
        int k = 0;
        for (int i = 0; i < d.rows(); ++i)
            for (int j = 0; j < d.cols(); ++j) {
                out(k++) = d(i, j).real();
                out(k++) = d(i, j).imag();
            }
        return out;
    };
    RVec x0(reals);
    for (int i = 0; i < r; ++i) {
        if (complex_mode) {
            x0(2 * i) = seed[static_cast<size_t>(i)].real();
            x0(2 * i + 1) = seed[static_cast<size_t>(i)].imag();
        } else {
            x0(i) = seed[static_cast<size_t>(i)].real();
        }
    }
    LMOptions lopt;
    lopt.tol = tol;
    LMResult res = lm_solve(residual, x0, lopt);
    if (!res.converged) return std::nullopt;
    return unpack(res.x);
}

// --- Maurer-Cartan ---------------------------------------------------------------

MaurerCartanBasis maurer_cartan(const ActionSpec& action) {
    if (action.kind != ActionSpec::Kind::Parametric)
        throw ValidationError("maurer_cartan needs a parametric action with a matrix rep");
    if (!action.rep) throw ValidationError("maurer_cartan needs a matrix representation");
    const auto& g = action.rep->m;
    const int n = action.rep->size();
    const int r = action.r();

    // identity sanity: rep at identity parameters must be the identity matrix
    {
        Bindings b = param_bindings(action, identity_params(action));
        Mat at_id = eval_matrix(g, b);
        if ((at_id - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-9)
            throw ValidationError("matrix representation is not the identity at identity values");
    }

    std::vector<std::vector<ExprPtr>> ginv = sym_inverse(g);

    // Omega = (dg) g^-1, entrywise one-forms in the parameter differentials
    std::vector<std::vector<OneForm>> omega(static_cast<size_t>(n),
                                            std::vector<OneForm>(static_cast<size_t>(n)));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            OneForm entry;
            for (int k = 0; k < n; ++k) {
                // d(g_ik) * ginv_kj
                for (VarId p : action.params) {
                    ExprPtr dgi = diff(g[static_cast<size_t>(i)][static_cast<size_t>(k)], p);
                    if (is_zero(dgi)) continue;
                    entry.add_term(p, ex_mul(dgi, ginv[static_cast<size_t>(k)][static_cast<size_t>(j)]));
                }
            }
            omega[static_cast<size_t>(i)][static_cast<size_t>(j)] = std::move(entry);
        }
    }

    Bindings at_id = param_bindings(action, identity_params(action));
    auto coeff_row = [&](const OneForm& w) {
        Eigen::VectorXcd row(r);
        for (int k = 0; k < r; ++k) row(k) = 0.0;
        for (int k = 0; k < r; ++k) {
            ExprPtr c = w.coeff(action.params[static_cast<size_t>(k)]);
            if (!is_zero(c)) row(k) = eval_complex(c, at_id);
        }
        return row;
    };

    MaurerCartanBasis basis;
    if (!action.mc_selection.empty()) {
        for (auto [row, col] : action.mc_selection) {
            if (row < 1 || row > n || col < 1 || col > n)
                throw ValidationError("mc_entries index out of range");
            basis.forms.push_back(omega[static_cast<size_t>(row - 1)][static_cast<size_t>(col - 1)]);
            basis.entries.push_back({row, col});
        }
    } else {
        Mat stack(0, r);
        for (int i = 0; i < n && static_cast<int>(basis.forms.size()) < r; ++i) {
            for (int j = 0; j < n && static_cast<int>(basis.forms.size()) < r; ++j) {
                const OneForm& w = omega[static_cast<size_t>(i)][static_cast<size_t>(j)];
                if (w.is_zero_form()) continue;
                Mat trial(stack.rows() + 1, r);
                trial.topRows(stack.rows()) = stack;
                trial.row(stack.rows()) = coeff_row(w).transpose();
                if (numeric_rank(trial) > numeric_rank(stack)) {
                    stack = trial;
                    basis.forms.push_back(w);
                    basis.entries.push_back({i + 1, j + 1});
                }
            }
        }
    }
    if (static_cast<int>(basis.forms.size()) != r)
        throw SolverError("maurer_cartan: found " + std::to_string(basis.forms.size()) +
                          " independent entries, need " + std::to_string(r));
    // final rank check (also validates explicit selections)
    Mat m(r, r);
    for (int i = 0; i < r; ++i) m.row(i) = coeff_row(basis.forms[static_cast<size_t>(i)]).transpose();
    if (numeric_rank(m) != r)
        throw SolverError("maurer_cartan: selected entries are dependent at identity");
    return basis;
}

// --- structure constants ------------------------------------------------------------

namespace {

// Symbolic linear solve by fraction-free-ish Gaussian elimination on Exprs;
// only used to name nonconstant structure functions on small spaces.
std::optional<std::vector<ExprPtr>> sym_solve(std::vector<std::vector<ExprPtr>> a,
                                              std::vector<ExprPtr> b) {
    const size_t n = a.size();
    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        bool found = false;
        for (size_t rr = col; rr < n; ++rr) {
            if (!is_zero(simplify(a[rr][col]))) {
                pivot = rr;
                found = true;
                break;
            }
        }
        if (!found) return std::nullopt;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (size_t rr = 0; rr < n; ++rr) {
            if (rr == col) continue;
            ExprPtr factor = simplify(ex_div(a[rr][col], a[col][col]));
            if (is_zero(factor)) continue;
            for (size_t cc = col; cc < n; ++cc)
                a[rr][cc] = simplify(ex_sub(a[rr][cc], ex_mul(factor, a[col][cc])));
            b[rr] = simplify(ex_sub(b[rr], ex_mul(factor, b[col])));
        }
    }
    std::vector<ExprPtr> x(n);
    for (size_t i = 0; i < n; ++i) x[i] = simplify(ex_div(b[i], a[i][i]));
    return x;
}

}  // namespace

StructureConstants structure_constants_of(const std::vector<OneForm>& forms,
                                          const std::vector<VarId>& coords, const VarTable& vars,
                                          const SamplingConfig& cfg, double const_tol) {
    const int n = static_cast<int>(forms.size());
    if (n != static_cast<int>(coords.size()))
        throw ValidationError("structure_constants_of: " + std::to_string(forms.size()) +
                              " forms on a space of dimension " + std::to_string(coords.size()));
    const int npairs = n * (n - 1) / 2;
    std::vector<std::pair<int, int>> pairs;
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) pairs.push_back({j, k});

    // exterior derivatives, symbolic
    std::vector<TwoForm> d(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) d[static_cast<size_t>(i)] = exterior_derivative(forms[static_cast<size_t>(i)]);

    // sample points
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    EvalOptions opt;
    opt.complex_mode = cfg.complex_mode;
    opt.epsilon = cfg.eval_epsilon;
    const int samples = 10;

    // C_candidates[s] is an n x npairs matrix: row i = constants of d omega^i
    std::vector<Mat> c_samples;
    int made = 0, attempts = 0;
    while (made < samples && attempts < 40 * samples) {
        ++attempts;
        Bindings b(vars);
        for (VarId v : coords) {
            double re = cfg.lo + (cfg.hi - cfg.lo) * unit(rng);
            double im = cfg.complex_mode ? cfg.lo + (cfg.hi - cfg.lo) * unit(rng) : 0.0;
            auto it = cfg.var_box.find(v);
            if (it != cfg.var_box.end()) {
                re = it->second.first + (it->second.second - it->second.first) * unit(rng);
            }
            b.set(v, CNum(re, im));
        }
        try {
            // coefficient matrix F(i, a) of form i on coordinate a
            Mat F(n, n);
            for (int i = 0; i < n; ++i)
                for (int a = 0; a < n; ++a) {
                    ExprPtr c = forms[static_cast<size_t>(i)].coeff(coords[static_cast<size_t>(a)]);
                    F(i, a) = is_zero(c) ? CNum(0) : eval_complex(c, b, opt);
                }
            if (numeric_rank(F) != n)
                throw SolverError("structure_constants_of: forms are dependent at a sample point");

            // wedge matrix W((ab),(jk)) = F(j,a)F(k,b) - F(j,b)F(k,a)
            Mat W(npairs, npairs);
            for (int ab = 0; ab < npairs; ++ab) {
                auto [a, bb] = pairs[static_cast<size_t>(ab)];
                for (int jk = 0; jk < npairs; ++jk) {
                    auto [j, k] = pairs[static_cast<size_t>(jk)];
                    W(ab, jk) = F(j, a) * F(k, bb) - F(j, bb) * F(k, a);
                }
            }
            Eigen::PartialPivLU<Mat> lu(W);
            Mat C(n, npairs);
            for (int i = 0; i < n; ++i) {
                Vec t(npairs);
                for (int ab = 0; ab < npairs; ++ab) {
                    auto [a, bb] = pairs[static_cast<size_t>(ab)];
                    ExprPtr c = d[static_cast<size_t>(i)].coeff(coords[static_cast<size_t>(a)],
                                                                coords[static_cast<size_t>(bb)]);
                    t(ab) = is_zero(c) ? CNum(0) : eval_complex(c, b, opt);
                }
                // d omega^i = -sum_{j<k} C^i_jk w^j ^ w^k  =>  W * C_i = -T_i
                C.row(i) = lu.solve(-t).transpose();
            }
            c_samples.push_back(std::move(C));
            ++made;
        } catch (const DomainError&) {
            continue;
        }
    }
    if (made < samples)
        throw SamplingExhaustedError("structure_constants_of: could not sample enough valid points");

    StructureConstants out;
    out.C.assign(static_cast<size_t>(n), Mat::Zero(n, n));
    for (int i = 0; i < n; ++i) {
        for (int jk = 0; jk < npairs; ++jk) {
            auto [j, k] = pairs[static_cast<size_t>(jk)];
            CNum mean = 0;
            for (const auto& cs : c_samples) mean += cs(i, jk);
            mean /= static_cast<double>(samples);
            double spread = 0;
            for (const auto& cs : c_samples) spread = std::max(spread, std::abs(cs(i, jk) - mean));
            if (spread > const_tol * (1.0 + std::abs(mean))) {
                out.constant = false;
                StructureConstants::NonConstantEntry off;
                off.i = i + 1;
                off.j = j + 1;
                off.k = k + 1;
                for (const auto& cs : c_samples) off.samples.push_back(cs(i, jk));
                out.offenders.push_back(std::move(off));
            } else {
                // snap near-integers for clean reporting
                CNum v = mean;
                double rr = std::round(v.real()), ri = std::round(v.imag());
                if (std::abs(v.real() - rr) < 1e-7 && std::abs(v.imag() - ri) < 1e-7)
                    v = CNum(rr, ri);
                out.C[static_cast<size_t>(i)](j, k) = v;
                out.C[static_cast<size_t>(i)](k, j) = -v;
            }
        }
    }

    // name nonconstant structure functions symbolically on small spaces
    if (!out.constant && n <= 6) {
        std::vector<std::vector<ExprPtr>> W(static_cast<size_t>(npairs),
                                            std::vector<ExprPtr>(static_cast<size_t>(npairs)));
        for (int ab = 0; ab < npairs; ++ab) {
            auto [a, bb] = pairs[static_cast<size_t>(ab)];
            for (int jk = 0; jk < npairs; ++jk) {
                auto [j, k] = pairs[static_cast<size_t>(jk)];
                ExprPtr fja = forms[static_cast<size_t>(j)].coeff(coords[static_cast<size_t>(a)]);
                ExprPtr fkb = forms[static_cast<size_t>(k)].coeff(coords[static_cast<size_t>(bb)]);
                ExprPtr fjb = forms[static_cast<size_t>(j)].coeff(coords[static_cast<size_t>(bb)]);
                ExprPtr fka = forms[static_cast<size_t>(k)].coeff(coords[static_cast<size_t>(a)]);
                W[static_cast<size_t>(ab)][static_cast<size_t>(jk)] =
                    simplify(ex_sub(ex_mul(fja, fkb), ex_mul(fjb, fka)));
            }
        }
        for (auto& off : out.offenders) {
            std::vector<ExprPtr> t;
            for (int ab = 0; ab < npairs; ++ab) {
                auto [a, bb] = pairs[static_cast<size_t>(ab)];
                t.push_back(simplify(ex_neg(d[static_cast<size_t>(off.i - 1)].coeff(
                    coords[static_cast<size_t>(a)], coords[static_cast<size_t>(bb)]))));
            }
            auto solved = sym_solve(W, t);
            if (!solved) continue;
            for (int jk = 0; jk < npairs; ++jk) {
                if (pairs[static_cast<size_t>(jk)].first == off.j - 1 &&
                    pairs[static_cast<size_t>(jk)].second == off.k - 1) {
                    off.symbolic = print((*solved)[static_cast<size_t>(jk)], vars);
                    break;
                }
            }
        }
    }
    return out;
}

}  // namespace mframe
