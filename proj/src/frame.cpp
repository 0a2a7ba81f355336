#include "mframe/frame.hpp"

#include <algorithm>
#include <random>

namespace mframe {

namespace {

// numerator of the canonical form
ExprPtr numerator_of(const ExprPtr& e) {
    ExprPtr s = simplify(e);
    return s->kind() == NodeKind::Div ? s->kids()[0] : s;
}

bool contains_var(const ExprPtr& e, VarId v) { return expr_vars(e).count(v) > 0; }

// true when v occurs somewhere a polynomial-in-v analysis cannot see: inside a
// function application or under a fractional power
bool occurs_nonpolynomially(const ExprPtr& e, VarId v) {
    switch (e->kind()) {
        case NodeKind::Fun:
            for (const auto& k : e->kids())
                if (contains_var(k, v)) return true;
            return false;
        case NodeKind::Pow: {
            bool frac = !e->value().is_integer() || e->value().sign() < 0;
            if (frac && contains_var(e->kids()[0], v)) return true;
            return occurs_nonpolynomially(e->kids()[0], v);
        }
        default:
            for (const auto& k : e->kids())
                if (occurs_nonpolynomially(k, v)) return true;
            return false;
    }
}

bool any_param(const ExprPtr& e, const std::vector<VarId>& params,
               const std::vector<bool>& unsolved) {
    auto vs = expr_vars(e);
    for (size_t i = 0; i < params.size(); ++i)
        if (unsolved[i] && vs.count(params[i])) return true;
    return false;
}

struct LinearPart {
    ExprPtr a;  // coefficient
    ExprPtr b;  // remainder
};

// N = a*t + b with a, b free of t; requires N polynomial in t
std::optional<LinearPart> linear_in(const ExprPtr& n, VarId t) {
    if (!contains_var(n, t) || occurs_nonpolynomially(n, t)) return std::nullopt;
    ExprPtr a = diff(n, t);
    if (is_zero(a) || contains_var(a, t)) return std::nullopt;
    ExprPtr b = substitute(n, {{t, ex_num(0)}});
    return LinearPart{a, b};
}

// N = a*t^2 + b, no linear term
std::optional<LinearPart> quadratic_in(const ExprPtr& n, VarId t) {
    if (!contains_var(n, t) || occurs_nonpolynomially(n, t)) return std::nullopt;
    ExprPtr d1 = diff(n, t);
    ExprPtr d2 = diff(d1, t);
    if (is_zero(d2) || contains_var(d2, t)) return std::nullopt;
    if (!is_zero(substitute(d1, {{t, ex_num(0)}}))) return std::nullopt;
    ExprPtr a = simplify(ex_div(d2, ex_num(2)));
    ExprPtr b = substitute(n, {{t, ex_num(0)}});
    return LinearPart{a, b};
}

struct SolverState {
    const ProlongedAction& pa;
    const CrossSection& cs;
    const SamplingConfig& cfg;
    std::vector<ExprPtr> equations;  // live, substituted as parameters resolve
    std::vector<bool> eq_done;
    std::vector<bool> unsolved;
    std::vector<ExprPtr> solution;   // per parameter, possibly in other parameters

    const std::vector<VarId>& params() const { return pa.action->params; }

    explicit SolverState(const ProlongedAction& pa_, const CrossSection& cs_,
                         const SamplingConfig& cfg_)
        : pa(pa_), cs(cs_), cfg(cfg_) {
        const JetSpace& space = *pa.space;
        for (const auto& [coord, c] : cs.entries) {
            int idx = space.jet_index(coord);
            if (idx < 0)
                throw ValidationError("cross-section coordinate '" + space.table().name(coord) +
                                      "' is not a jet coordinate");
            equations.push_back(simplify(ex_sub(pa.transform_of(idx), ex_num(c))));
            eq_done.push_back(false);
        }
        unsolved.assign(params().size(), true);
        solution.assign(params().size(), nullptr);
    }

    void note_solved(size_t pidx, const ExprPtr& value) {
        solution[pidx] = value;
        unsolved[pidx] = false;
        std::map<VarId, ExprPtr> sub{{params()[pidx], value}};
        for (size_t e = 0; e < equations.size(); ++e) {
            if (eq_done[e]) continue;
            try {
                equations[e] = substitute(equations[e], sub);
            } catch (const DomainError&) {
                throw SolverError("normalization becomes singular substituting parameter '" +
                                  pa.space->table().name(params()[pidx]) + "'");
            }
            check_consistency(e);
        }
    }

    void check_consistency(size_t e) {
        if (eq_done[e]) return;
        ExprPtr s = simplify(equations[e]);
        equations[e] = s;
        if (is_zero(s)) {
            eq_done[e] = true;
            return;
        }
        auto r = as_rational(s);
        if (r && !r->is_zero())
            throw SolverError("inconsistent cross-section: equation " + std::to_string(e + 1) +
                              " reduces to the nonzero constant " + r->str());
    }

    // linear or pure-quadratic elimination; `determined` restricts to
    // solutions free of unsolved parameters
    bool try_algebraic(bool determined, bool quadratic) {
        for (size_t e = 0; e < equations.size(); ++e) {
            if (eq_done[e]) continue;
            ExprPtr n = numerator_of(equations[e]);
            for (size_t p = 0; p < params().size(); ++p) {
                if (!unsolved[p]) continue;
                VarId t = params()[p];
                auto part = quadratic ? quadratic_in(n, t) : linear_in(n, t);
                if (!part) continue;
                ExprPtr value;
                try {
                    value = quadratic
                                ? simplify(ex_sqrt(ex_div(ex_neg(part->b), part->a)))
                                : simplify(ex_div(ex_neg(part->b), part->a));
                } catch (const DomainError&) {
                    continue;
                }
                if (contains_var(value, t)) continue;
                if (determined && any_param(value, params(), unsolved)) continue;
                eq_done[e] = true;
                note_solved(p, value);
                return true;
            }
        }
        return false;
    }

    // theta entering only through sin(theta) and cos(theta), linearly
    bool try_sincos(VarId sin_aux, VarId cos_aux) {
        for (size_t p = 0; p < params().size(); ++p) {
            if (!unsolved[p]) continue;
            VarId th = params()[p];
            ExprPtr sin_pat = ex_fun(Fn::Sin, ex_var(th));
            ExprPtr cos_pat = ex_fun(Fn::Cos, ex_var(th));

            struct Row {
                size_t eq;
                ExprPtr a, b, d;  // a*S + b*C + d = 0
            };
            std::vector<Row> rows;
            for (size_t e = 0; e < equations.size(); ++e) {
                if (eq_done[e]) continue;
                ExprPtr n = numerator_of(equations[e]);
                if (!contains_var(n, th)) continue;
                ExprPtr repl = replace_subtree(n, sin_pat, ex_var(sin_aux));
                repl = replace_subtree(repl, cos_pat, ex_var(cos_aux));
                if (contains_var(repl, th)) {
                    rows.clear();
                    break;  // bare occurrence: not a sin-cos pattern
                }
                ExprPtr a = diff(repl, sin_aux);
                ExprPtr b = diff(repl, cos_aux);
                if (contains_var(a, sin_aux) || contains_var(a, cos_aux) ||
                    contains_var(b, sin_aux) || contains_var(b, cos_aux)) {
                    rows.clear();
                    break;  // nonlinear in the pair
                }
                ExprPtr d =
                    substitute(repl, {{sin_aux, ex_num(0)}, {cos_aux, ex_num(0)}});
                if (any_param(a, params(), unsolved) || any_param(b, params(), unsolved) ||
                    any_param(d, params(), unsolved))
                    continue;  // defer until coefficients are known
                rows.push_back({e, a, b, d});
            }
            if (rows.empty()) continue;

            ExprPtr S, C;
            std::vector<size_t> used;
            // two-equation Cramer solve
            for (size_t i = 0; i + 1 < rows.size() && !S; ++i) {
                for (size_t j = i + 1; j < rows.size() && !S; ++j) {
                    ExprPtr det = simplify(ex_sub(ex_mul(rows[i].a, rows[j].b),
                                                  ex_mul(rows[j].a, rows[i].b)));
                    if (is_zero(det)) continue;
                    try {
                        S = simplify(ex_div(ex_sub(ex_mul(rows[j].d, rows[i].b),
                                                   ex_mul(rows[i].d, rows[j].b)),
                                            det));
                        C = simplify(ex_div(ex_sub(ex_mul(rows[i].d, rows[j].a),
                                                   ex_mul(rows[j].d, rows[i].a)),
                                            det));
                    } catch (const DomainError&) {
                        S = C = nullptr;
                        continue;
                    }
                    used = {rows[i].eq, rows[j].eq};
                }
            }
            // single homogeneous equation with the circle constraint
            if (!S && rows.size() >= 1) {
                for (const auto& row : rows) {
                    if (!is_zero(simplify(row.d))) continue;
                    ExprPtr norm = simplify(ex_sqrt(
                        ex_add(ex_pow(row.a, Rational(2)), ex_pow(row.b, Rational(2)))));
                    if (is_zero(norm)) continue;
                    ExprPtr Sp, Cp;
                    try {
                        Sp = simplify(ex_div(row.b, norm));
                        Cp = simplify(ex_div(ex_neg(row.a), norm));
                    } catch (const DomainError&) {
                        continue;
                    }
                    int sign = branch_sign(Cp);
                    if (sign == 0) continue;
                    S = sign < 0 ? simplify(ex_neg(Sp)) : Sp;
                    C = sign < 0 ? simplify(ex_neg(Cp)) : Cp;
                    used = {row.eq};
                    break;
                }
            }
            if (!S) continue;

            for (size_t e : used) eq_done[e] = true;
            // substitute sin/cos images into the remaining equations, then
            // record theta = atan2(S, C)
            for (size_t e = 0; e < equations.size(); ++e) {
                if (eq_done[e]) continue;
                ExprPtr n = equations[e];
                n = replace_subtree(n, sin_pat, S);
                n = replace_subtree(n, cos_pat, C);
                equations[e] = simplify(n);
                check_consistency(e);
            }
            ExprPtr theta = simplify(ex_fun(Fn::Atan2, S, C));
            solution[p] = theta;
            unsolved[p] = false;
            return true;
        }
        return false;
    }

    // sign of cos-candidate at a reference point on the cross-section
    int branch_sign(const ExprPtr& cos_candidate) {
        std::mt19937_64 rng(cfg.seed + 17);
        std::uniform_real_distribution<double> fill(0.5, 1.5);
        EvalOptions opt;
        opt.complex_mode = cfg.complex_mode;
        for (int attempt = 0; attempt < 25; ++attempt) {
            Bindings b(pa.space->table());
            for (VarId v : pa.space->coords()) b.set(v, CNum(fill(rng), 0.0));
            for (const auto& [coord, c] : cs.entries) b.set(coord, CNum(c.to_double(), 0.0));
            try {
                CNum c = eval_complex(cos_candidate, b, opt);
                if (std::abs(c.real()) < 1e-6) continue;
                return c.real() > 0 ? 1 : -1;
            } catch (const DomainError&) {
                continue;
            }
        }
        return 0;
    }
};

}  // namespace

MovingFrame solve_normalization(const ProlongedAction& prolonged, const CrossSection& cs,
                                const SamplingConfig& cfg) {
    if (!prolonged.parametric())
        throw ValidationError(
            "solve_normalization needs a parametric action; matrix actions take a frame_override");
    const ActionSpec& action = *prolonged.action;
    const size_t r = action.params.size();
    if (cs.entries.size() != r)
        throw ValidationError("cross-section size " + std::to_string(cs.entries.size()) +
                              " does not match the group dimension " + std::to_string(r));
    {
        std::vector<VarId> seen;
        for (const auto& [coord, c] : cs.entries) {
            if (std::find(seen.begin(), seen.end(), coord) != seen.end())
                throw ValidationError("cross-section repeats coordinate '" +
                                      prolonged.space->table().name(coord) + "'");
            seen.push_back(coord);
        }
    }

    // scratch variables for the sin/cos pattern
    VarTable& table = *action.table;
    VarId sin_aux = table.find("_sc_sin") ? table.id("_sc_sin")
                                          : table.add("_sc_sin", VarKind::Auxiliary);
    VarId cos_aux = table.find("_sc_cos") ? table.id("_sc_cos")
                                          : table.add("_sc_cos", VarKind::Auxiliary);

    SolverState st(prolonged, cs, cfg);
    while (true) {
        if (std::none_of(st.unsolved.begin(), st.unsolved.end(), [](bool b) { return b; })) break;
        if (st.try_algebraic(/*determined=*/true, /*quadratic=*/false)) continue;
        if (st.try_algebraic(/*determined=*/true, /*quadratic=*/true)) continue;
        if (st.try_algebraic(/*determined=*/false, /*quadratic=*/false)) continue;
        if (st.try_algebraic(/*determined=*/false, /*quadratic=*/true)) continue;
        if (st.try_sincos(sin_aux, cos_aux)) continue;
        std::string stuck;
        for (size_t e = 0; e < st.equations.size(); ++e)
            if (!st.eq_done[e])
                stuck += "\n  " + print(st.equations[e], table) + " = 0";
        throw SolverError("normalization not solvable by the built-in strategy; stuck on:" +
                          stuck + "\n(supply a frame_override)");
    }

    // back-substitution: parameters solved in terms of later-solved parameters
    for (size_t round = 0; round <= r; ++round) {
        bool dirty = false;
        for (size_t p = 0; p < r; ++p) {
            std::map<VarId, ExprPtr> sub;
            for (VarId v : expr_vars(st.solution[p])) {
                for (size_t q = 0; q < r; ++q)
                    if (v == action.params[q]) sub[v] = st.solution[q];
            }
            if (!sub.empty()) {
                st.solution[p] = substitute(st.solution[p], sub);
                dirty = true;
            }
        }
        if (!dirty) break;
        if (round == r)
            throw SolverError("cyclic parameter dependence in the normalization solution");
    }

    MovingFrame frame;
    frame.form = MovingFrame::Form::Parameters;
    frame.params = st.solution;

    // residual check: the frame must satisfy every normalization equation
    for (const auto& [coord, c] : cs.entries) {
        int idx = prolonged.space->jet_index(coord);
        std::map<VarId, ExprPtr> sub;
        for (size_t p = 0; p < r; ++p) sub[action.params[p]] = frame.params[p];
        ExprPtr val = substitute(prolonged.transform_of(idx), sub);
        SamplingConfig pcfg = cfg;
        pcfg.lo = cfg.complex_mode ? 0.2 : cfg.lo;
        pcfg.hi = cfg.complex_mode ? 0.9 : cfg.hi;
        if (!probably_equal(val, ex_num(c), 20, 1e-9, table, pcfg))
            throw SolverError("solved frame fails the normalization for '" +
                              table.name(coord) + "'");
    }
    return frame;
}

GroupElement frame_element_at(const MovingFrame& frame, const ProlongedAction& prolonged,
                              const JetPoint& z, const EvalOptions& opt) {
    Bindings b = jet_bindings(*prolonged.space, z);
    GroupElement g;
    if (frame.form == MovingFrame::Form::Parameters) {
        for (const auto& p : frame.params) g.params.push_back(eval_complex(p, b, opt));
    } else {
        const int n = static_cast<int>(frame.matrix.size());
        g.matrix = Mat(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                g.matrix(i, j) =
                    eval_complex(frame.matrix[static_cast<size_t>(i)][static_cast<size_t>(j)], b, opt);
    }
    return g;
}

FrameReport verify_frame(const MovingFrame& frame, const ProlongedAction& prolonged,
                         const CrossSection& cs, const SamplingConfig& cfg, double tol) {
    FrameReport report;
    const JetSpace& space = *prolonged.space;
    const ActionSpec& action = *prolonged.action;
    bool parametric = action.kind == ActionSpec::Kind::Parametric;
    if (parametric != (frame.form == MovingFrame::Form::Parameters))
        throw ValidationError("frame form does not match the action kind");

    EvalOptions opt;
    opt.complex_mode = cfg.complex_mode;
    opt.epsilon = cfg.eval_epsilon;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> box(cfg.lo, cfg.hi);

    auto random_point = [&]() {
        JetPoint z(static_cast<size_t>(space.dim()));
        for (auto& c : z)
            c = CNum(box(rng), cfg.complex_mode ? box(rng) : 0.0);
        return z;
    };

    // (1) normalization residuals at 20 random jet points
    int done = 0, attempts = 0;
    while (done < 20 && attempts < 400) {
        ++attempts;
        JetPoint z = random_point();
        try {
            GroupElement g = frame_element_at(frame, prolonged, z, opt);
            JetPoint moved = apply_action(prolonged, g, z, opt);
            for (const auto& [coord, c] : cs.entries) {
                int idx = space.jet_index(coord);
                double resid =
                    std::abs(moved[static_cast<size_t>(space.p() + idx)] - CNum(c.to_double(), 0));
                report.max_normalization_residual =
                    std::max(report.max_normalization_residual, resid);
                if (resid > tol)
                    report.failures.push_back("normalization residual " + std::to_string(resid) +
                                              " on '" + space.table().name(coord) + "'");
            }
            ++done;
        } catch (const DomainError&) {
            continue;
        }
    }
    if (done < 20) report.failures.push_back("could not sample 20 valid normalization points");

    // (2) equivariance rho(g.z) = rho(z) g^-1 through the matrix representation
    if (parametric && !action.rep) {
        report.failures.push_back("no matrix representation: equivariance check skipped");
    } else {
        done = 0;
        attempts = 0;
        while (done < 5 && attempts < 200) {
            ++attempts;
            JetPoint z = random_point();
            GroupElement g = random_group_element(action, rng, 0.1, cfg.complex_mode);
            try {
                JetPoint gz = apply_action(prolonged, g, z, opt);
                Mat lhs, rho_z, g_mat;
                if (parametric) {
                    lhs = rep_eval(action, frame_element_at(frame, prolonged, gz, opt).params, opt);
                    rho_z = rep_eval(action, frame_element_at(frame, prolonged, z, opt).params, opt);
                    g_mat = rep_eval(action, g.params, opt);
                } else {
                    lhs = frame_element_at(frame, prolonged, gz, opt).matrix;
                    rho_z = frame_element_at(frame, prolonged, z, opt).matrix;
                    g_mat = g.matrix;
                }
                Mat rhs = rho_z * g_mat.inverse();
                double resid = (lhs - rhs).cwiseAbs().maxCoeff();
                if (action.projective)
                    resid = std::min(resid, (lhs + rhs).cwiseAbs().maxCoeff());
                report.max_equivariance_residual =
                    std::max(report.max_equivariance_residual, resid);
                if (resid > tol)
                    report.failures.push_back("equivariance residual " + std::to_string(resid) +
                                              " for rho");
                ++done;
            } catch (const DomainError&) {
                continue;
            }
        }
        if (done < 5) report.failures.push_back("could not sample 5 valid equivariance pairs");
    }

    report.pass = report.failures.empty();
    return report;
}

Invariantization invariantize(const ProlongedAction& prolonged, const MovingFrame& frame) {
    const JetSpace& space = *prolonged.space;
    Invariantization inv;
    for (VarId b : space.base()) inv.value[b] = simplify(ex_var(b));

    if (frame.form == MovingFrame::Form::Parameters) {
        std::map<VarId, ExprPtr> sub;
        for (size_t p = 0; p < prolonged.action->params.size(); ++p)
            sub[prolonged.action->params[p]] = frame.params[p];
        for (size_t pos = 0; pos < space.jets().size(); ++pos)
            inv.value[space.jets()[pos].var] = substitute(prolonged.transforms[pos], sub);
        return inv;
    }

    // matrix frame acting blockwise: iota* u^alpha_J = sum_beta M_ab u^beta_J
    const int n = space.n();
    for (const auto& jc : space.jets()) {
        std::vector<ExprPtr> terms;
        for (int beta = 0; beta < n; ++beta) {
            VarId src = space.jet_var(beta, jc.J);
            terms.push_back(ex_mul(frame.matrix[static_cast<size_t>(jc.alpha)][static_cast<size_t>(beta)],
                                   ex_var(src)));
        }
        inv.value[jc.var] = simplify(Expr::add(std::move(terms)));
    }
    return inv;
}

FreedomDiagnosis check_local_freedom(const ProlongedAction& prolonged,
                                     const SamplingConfig& cfg) {
    const JetSpace& space = *prolonged.space;
    const ActionSpec& action = *prolonged.action;
    const int r = action.r();
    FreedomDiagnosis diag;
    diag.rank_needed = r;
    if (r == 0) {  // trivial group acts freely, vacuously
        diag.free = true;
        diag.min_rank = diag.max_rank = 0;
        return diag;
    }
    const int njets = static_cast<int>(space.jets().size());

    EvalOptions opt;
    opt.complex_mode = cfg.complex_mode;
    opt.epsilon = cfg.eval_epsilon;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> box(cfg.lo, cfg.hi);

    // symbolic parameter Jacobian for parametric actions
    std::vector<std::vector<ExprPtr>> jac;
    if (prolonged.parametric()) {
        jac.assign(static_cast<size_t>(njets), {});
        for (int j = 0; j < njets; ++j)
            for (VarId p : action.params)
                jac[static_cast<size_t>(j)].push_back(diff(prolonged.transforms[static_cast<size_t>(j)], p));
    }

    diag.min_rank = r;
    diag.max_rank = 0;
    int done = 0, attempts = 0;
    while (done < 10 && attempts < 400) {
        ++attempts;
        JetPoint z(static_cast<size_t>(space.dim()));
        for (auto& c : z) c = CNum(box(rng), cfg.complex_mode ? box(rng) : 0.0);
        try {
            Mat m(njets, r);
            if (prolonged.parametric()) {
                Bindings b = jet_bindings(space, z);
                for (size_t p = 0; p < action.params.size(); ++p)
                    b.set(action.params[p], CNum(action.identity[p].to_double(), 0));
                for (int j = 0; j < njets; ++j)
                    for (int k = 0; k < r; ++k)
                        m(j, k) = eval_complex(jac[static_cast<size_t>(j)][static_cast<size_t>(k)], b, opt);
            } else {
                const double h = 1e-6;
                for (int k = 0; k < r; ++k) {
                    GroupElement gp, gm;
                    gp.matrix = matrix_exp(h * action.algebra[static_cast<size_t>(k)]).cast<CNum>();
                    gm.matrix = matrix_exp(-h * action.algebra[static_cast<size_t>(k)]).cast<CNum>();
                    JetPoint zp = apply_action(prolonged, gp, z, opt);
                    JetPoint zm = apply_action(prolonged, gm, z, opt);
                    for (int j = 0; j < njets; ++j)
                        m(j, k) = (zp[static_cast<size_t>(space.p() + j)] -
                                   zm[static_cast<size_t>(space.p() + j)]) /
                                  (2 * h);
                }
            }
            int rank = numeric_rank(m, 1e-8);
            diag.min_rank = std::min(diag.min_rank, rank);
            diag.max_rank = std::max(diag.max_rank, rank);
            ++done;
        } catch (const DomainError&) {
            continue;
        }
    }
    if (done < 10) throw SamplingExhaustedError("check_local_freedom: not enough valid jet points");
    diag.free = diag.min_rank == r;
    if (!diag.free)
        diag.advice = "rank " + std::to_string(diag.max_rank) + " < " + std::to_string(r) +
                      ": prolong to a higher order and retry";
    return diag;
}

}  // namespace mframe
