#include <random>

#include "doctest.h"
#include "mframe/group.hpp"
#include "mframe/numeric.hpp"

using namespace mframe;

namespace {

ActionSpec se2_action(std::shared_ptr<VarTable> table) {
    ActionSpec action;
    action.kind = ActionSpec::Kind::Parametric;
    action.table = table;
    action.params = {table->add("theta", VarKind::GroupParam),
                     table->add("a", VarKind::GroupParam),
                     table->add("b", VarKind::GroupParam)};
    action.identity = {Rational(0), Rational(0), Rational(0)};
    MatrixRep rep;
    rep.m = {{parse("cos(theta)", *table), parse("-sin(theta)", *table), parse("a", *table)},
             {parse("sin(theta)", *table), parse("cos(theta)", *table), parse("b", *table)},
             {parse("0", *table), parse("0", *table), parse("1", *table)}};
    action.rep = rep;
    // the hand-picked entries: (2,1) -> dtheta, (1,3) -> da + b dtheta, (2,3) -> db - a dtheta
    action.mc_selection = {{2, 1}, {1, 3}, {2, 3}};
    return action;
}

ActionSpec sl2_action(std::shared_ptr<VarTable> table) {
    ActionSpec action;
    action.kind = ActionSpec::Kind::Parametric;
    action.table = table;
    action.params = {table->add("g_a", VarKind::GroupParam), table->add("g_b", VarKind::GroupParam),
                     table->add("g_c", VarKind::GroupParam)};
    action.identity = {Rational(1), Rational(0), Rational(0)};
    MatrixRep rep;
    rep.m = {{parse("g_a", *table), parse("g_b", *table)},
             {parse("g_c", *table), parse("(g_b*g_c + 1)/g_a", *table)}};
    action.rep = rep;
    return action;
}

}  // namespace

TEST_CASE("rigid-motion Maurer-Cartan coframe") {
    auto table = std::make_shared<VarTable>();
    ActionSpec action = se2_action(table);
    MaurerCartanBasis mc = maurer_cartan(action);
    REQUIRE(mc.forms.size() == 3);
    const VarTable& t = *table;
    VarId th = t.id("theta"), a = t.id("a"), b = t.id("b");
    // mu1 = dtheta
    CHECK(is_one(mc.forms[0].coeff(th)));
    CHECK(is_zero(mc.forms[0].coeff(a)));
    // mu2 = da + b dtheta
    CHECK(is_one(mc.forms[1].coeff(a)));
    CHECK(probably_equal(mc.forms[1].coeff(th), parse("b", t), 20, 1e-9, t));
    // mu3 = db - a dtheta
    CHECK(is_one(mc.forms[2].coeff(b)));
    CHECK(probably_equal(mc.forms[2].coeff(th), parse("-a", t), 20, 1e-9, t));
}

TEST_CASE("special-linear Maurer-Cartan coframe (row-major selection)") {
    auto table = std::make_shared<VarTable>();
    ActionSpec action = sl2_action(table);
    MaurerCartanBasis mc = maurer_cartan(action);
    REQUIRE(mc.forms.size() == 3);
    const VarTable& t = *table;
    VarId a = t.id("g_a"), b = t.id("g_b"), c = t.id("g_c");
    SamplingConfig cfg;
    cfg.lo = 0.4;
    cfg.hi = 1.2;
    // mu1 = ((bc+1)/a) da - c db
    CHECK(probably_equal(mc.forms[0].coeff(a), parse("(g_b*g_c + 1)/g_a", t), 20, 1e-9, t, cfg));
    CHECK(probably_equal(mc.forms[0].coeff(b), parse("-g_c", t), 20, 1e-9, t, cfg));
    CHECK(is_zero(mc.forms[0].coeff(c)));
    // mu2 = -b da + a db
    CHECK(probably_equal(mc.forms[1].coeff(a), parse("-g_b", t), 20, 1e-9, t, cfg));
    CHECK(probably_equal(mc.forms[1].coeff(b), parse("g_a", t), 20, 1e-9, t, cfg));
    // mu3 = ((bc^2+c)/a^2) da - (c^2/a) db + (1/a) dc
    CHECK(probably_equal(mc.forms[2].coeff(a), parse("(g_b*g_c^2 + g_c)/g_a^2", t), 20, 1e-9, t,
                         cfg));
    CHECK(probably_equal(mc.forms[2].coeff(b), parse("-g_c^2/g_a", t), 20, 1e-9, t, cfg));
    CHECK(probably_equal(mc.forms[2].coeff(c), parse("1/g_a", t), 20, 1e-9, t, cfg));
}

TEST_CASE("one-parameter translation subgroup") {
    auto table = std::make_shared<VarTable>();
    ActionSpec action;
    action.kind = ActionSpec::Kind::Parametric;
    action.table = table;
    action.params = {table->add("t1", VarKind::GroupParam)};
    action.identity = {Rational(0)};
    MatrixRep rep;
    rep.m = {{parse("1", *table), parse("t1", *table)},
             {parse("0", *table), parse("1", *table)}};
    action.rep = rep;
    MaurerCartanBasis mc = maurer_cartan(action);
    REQUIRE(mc.forms.size() == 1);
    CHECK(is_one(mc.forms[0].coeff(table->id("t1"))));
    CHECK(mc.entries[0] == std::make_pair(1, 2));
}

TEST_CASE("property: Maurer-Cartan forms are right-invariant") {
    auto table = std::make_shared<VarTable>();
    ActionSpec action = se2_action(table);
    MaurerCartanBasis mc = maurer_cartan(action);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> box(-0.3, 0.3);
    const int r = action.r();
    EvalOptions opt;

    auto mu_at = [&](const std::vector<CNum>& params) {
        // coefficient matrix of the basis in dt at the given point
        Mat m(r, r);
        Bindings bnd = param_bindings(action, params);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j)
                m(i, j) = eval_complex(mc.forms[static_cast<size_t>(i)].coeff(
                                           action.params[static_cast<size_t>(j)]),
                                       bnd, opt);
        return m;
    };

    for (int trial = 0; trial < 5; ++trial) {
        std::vector<CNum> h(3), g(3);
        for (auto& c : h) c = box(rng);
        for (int pt = 0; pt < 5; ++pt) {
            for (auto& c : g) c = box(rng);
            Mat prod = rep_eval(action, g) * rep_eval(action, h);
            std::vector<CNum> seed = g;
            auto gh = params_from_rep(action, prod, seed, false, 1e-13);
            REQUIRE(gh.has_value());
            // Jacobian of g -> gh in parameter coordinates (central differences)
            const double step = 1e-4;
            Eigen::MatrixXd J(r, r);
            for (int j = 0; j < r; ++j) {
                std::vector<CNum> gp = g, gm = g;
                gp[static_cast<size_t>(j)] += step;
                gm[static_cast<size_t>(j)] -= step;
                auto ghp = params_from_rep(action, rep_eval(action, gp) * rep_eval(action, h),
                                           *gh, false, 1e-13);
                auto ghm = params_from_rep(action, rep_eval(action, gm) * rep_eval(action, h),
                                           *gh, false, 1e-13);
                REQUIRE(ghp.has_value());
                REQUIRE(ghm.has_value());
                for (int i = 0; i < r; ++i)
                    J(i, j) = ((*ghp)[static_cast<size_t>(i)] - (*ghm)[static_cast<size_t>(i)])
                                  .real() /
                              (2 * step);
            }
            Mat at_g = mu_at(g);
            Mat at_gh = mu_at(*gh);
            // pullback along right translation: mu|_gh . dR_h = mu|_g
            Mat pulled = at_gh * J.cast<CNum>();
            CHECK((pulled - at_g).cwiseAbs().maxCoeff() <= 1e-5);
        }
    }
}

TEST_CASE("structure constants: rigid motions") {
    auto table = std::make_shared<VarTable>();
    ActionSpec action = se2_action(table);
    MaurerCartanBasis mc = maurer_cartan(action);
    std::vector<VarId> coords = action.params;
    SamplingConfig cfg;
    StructureConstants sc = structure_constants_of(mc.forms, coords, *table, cfg);
    REQUIRE(sc.constant);
    // d mu1 = 0, d mu2 = -mu1 ^ mu3, d mu3 = mu1 ^ mu2
    CHECK(std::abs(sc.C[0](0, 1)) <= 1e-9);
    CHECK(std::abs(sc.C[0](0, 2)) <= 1e-9);
    CHECK(std::abs(sc.C[0](1, 2)) <= 1e-9);
    CHECK(std::abs(sc.C[1](0, 2) - CNum(1, 0)) <= 1e-7);
    CHECK(std::abs(sc.C[2](0, 1) - CNum(-1, 0)) <= 1e-7);
    // antisymmetry
    CHECK(std::abs(sc.C[1](2, 0) + sc.C[1](0, 2)) <= 1e-12);

    // reconstruction: d mu^i + sum_{j<k} C^i_jk mu^j ^ mu^k = 0, via wedge coefficients
    const VarTable& t = *table;
    for (int i = 0; i < 3; ++i) {
        TwoForm d = exterior_derivative(mc.forms[static_cast<size_t>(i)]);
        for (int a = 0; a < 3; ++a) {
            for (int bq = a + 1; bq < 3; ++bq) {
                ExprPtr lhs = d.coeff(coords[static_cast<size_t>(a)], coords[static_cast<size_t>(bq)]);
                std::vector<ExprPtr> parts{lhs};
                for (int j = 0; j < 3; ++j)
                    for (int k = j + 1; k < 3; ++k) {
                        double cr = sc.C[static_cast<size_t>(i)](j, k).real();
                        if (std::abs(cr) < 1e-12) continue;
                        ExprPtr fja = mc.forms[static_cast<size_t>(j)].coeff(coords[static_cast<size_t>(a)]);
                        ExprPtr fkb = mc.forms[static_cast<size_t>(k)].coeff(coords[static_cast<size_t>(bq)]);
                        ExprPtr fjb = mc.forms[static_cast<size_t>(j)].coeff(coords[static_cast<size_t>(bq)]);
                        ExprPtr fka = mc.forms[static_cast<size_t>(k)].coeff(coords[static_cast<size_t>(a)]);
                        ExprPtr wedge = ex_sub(ex_mul(fja, fkb), ex_mul(fjb, fka));
                        parts.push_back(ex_mul(ex_num(Rational(static_cast<long long>(std::llround(cr * 1000000)), 1000000)), wedge));
                    }
                CHECK(probably_equal(simplify(Expr::add(parts)), ex_num(0), 20, 1e-6, t));
            }
        }
    }
}

TEST_CASE("structure constants: abelian, exponential, and nonconstant cases") {
    auto table = std::make_shared<VarTable>();
    VarId u = table->add("cu", VarKind::Auxiliary);
    VarId v = table->add("cv", VarKind::Auxiliary);
    SamplingConfig cfg;
    cfg.lo = 0.3;
    cfg.hi = 1.1;

    // abelian: {du, dv} -> all constants zero
    {
        OneForm w1, w2;
        w1.set(u, ex_num(1));
        w2.set(v, ex_num(1));
        StructureConstants sc = structure_constants_of({w1, w2}, {u, v}, *table, cfg);
        CHECK(sc.constant);
        CHECK(std::abs(sc.C[0](0, 1)) <= 1e-10);
        CHECK(std::abs(sc.C[1](0, 1)) <= 1e-10);
    }
    // {du, e^u dv}: d(e^u dv) = du ^ (e^u dv) -> constant structure, C^2_12 = -1
    {
        OneForm w1, w2;
        w1.set(u, ex_num(1));
        w2.set(v, parse("exp(cu)", *table));
        StructureConstants sc = structure_constants_of({w1, w2}, {u, v}, *table, cfg);
        REQUIRE(sc.constant);
        CHECK(std::abs(sc.C[1](0, 1) - CNum(-1, 0)) <= 1e-7);
    }
    // {du, u dv}: d(u dv) = (1/u) w1 ^ w2 -> nonconstant, named
    {
        OneForm w1, w2;
        w1.set(u, ex_num(1));
        w2.set(v, parse("cu", *table));
        StructureConstants sc = structure_constants_of({w1, w2}, {u, v}, *table, cfg);
        REQUIRE_FALSE(sc.constant);
        REQUIRE(sc.offenders.size() == 1);
        CHECK(sc.offenders[0].i == 2);
        CHECK(sc.offenders[0].j == 1);
        CHECK(sc.offenders[0].k == 2);
        CHECK(sc.offenders[0].symbolic == "-1/cu");
    }
    // dependent forms are rejected
    {
        OneForm w1, w2;
        w1.set(u, ex_num(1));
        w2.set(u, parse("cv", *table));
        CHECK_THROWS_AS(structure_constants_of({w1, w2}, {u, v}, *table, cfg), SolverError);
    }
}

TEST_CASE("exterior derivative and pullback basics") {
    auto table = std::make_shared<VarTable>();
    VarId u = table->add("cu", VarKind::Auxiliary);
    VarId v = table->add("cv", VarKind::Auxiliary);
    // d(du) = 0
    OneForm du;
    du.set(u, ex_num(1));
    CHECK(exterior_derivative(du).coeffs().empty());
    // d(cv d cu) = dcv ^ dcu  => coefficient on (cu, cv) is -1
    OneForm w;
    w.set(u, ex_var(v));
    TwoForm d = exterior_derivative(w);
    CHECK(is_zero(simplify(ex_add(d.coeff(u, v), ex_num(1)))));
    // pullback by the identity map is the identity
    std::map<VarId, ExprPtr> idmap{{u, ex_var(u)}, {v, ex_var(v)}};
    OneForm back = pullback_form(w, idmap, *table);
    CHECK(expr_equal(back.coeff(u), simplify(ex_var(v))));
    CHECK(is_zero(back.coeff(v)));
}
