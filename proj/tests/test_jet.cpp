#include <random>

#include "doctest.h"
#include "mframe/jet.hpp"

using namespace mframe;

namespace {

// planar rigid motions acting on curves: the running example
struct Se2 {
    std::shared_ptr<VarTable> table = std::make_shared<VarTable>();
    JetSpace space;
    ActionSpec action;

    explicit Se2(int order = 1) : space(table, {"x"}, {"u", "v"}, order) {
        action.kind = ActionSpec::Kind::Parametric;
        action.table = table;
        action.params = {table->add("theta", VarKind::GroupParam),
                         table->add("a", VarKind::GroupParam),
                         table->add("b", VarKind::GroupParam)};
        action.identity = {Rational(0), Rational(0), Rational(0)};
        action.fiber_transforms = {parse("u*cos(theta) - v*sin(theta) + a", *table),
                                   parse("u*sin(theta) + v*cos(theta) + b", *table)};
        MatrixRep rep;
        rep.m = {{parse("cos(theta)", *table), parse("-sin(theta)", *table), parse("a", *table)},
                 {parse("sin(theta)", *table), parse("cos(theta)", *table), parse("b", *table)},
                 {parse("0", *table), parse("0", *table), parse("1", *table)}};
        action.rep = rep;
    }
};

}  // namespace

TEST_CASE("jet space coordinates and naming") {
    auto table = std::make_shared<VarTable>();
    JetSpace space(table, {"x", "y"}, {"u", "v"}, 2);
    CHECK(space.p() == 2);
    CHECK(space.n() == 2);
    // p + n*C(p+k, k) = 2 + 2*6 = 14
    CHECK(space.dim() == 14);
    CHECK(table->find("u_xy").has_value());
    CHECK(table->find("v_yy").has_value());
    CHECK(table->find("u_yx") == std::nullopt);  // symmetric: sorted index order only
    MultiIndex J;
    J.idx = {0, 1};
    CHECK(space.jet_var(0, J) == table->id("u_xy"));
    CHECK(space.jet_index(table->id("u_xy")) >= 0);
}

TEST_CASE("total derivative: basics and the rigid-motion transform") {
    Se2 s(1);
    const VarTable& t = *s.table;
    // D_x x = 1
    CHECK(is_one(total_derivative(parse("x", t), 0, s.space)));
    // D_x of the transformed u: u_x cos(theta) - v_x sin(theta)
    ExprPtr d = total_derivative(s.action.fiber_transforms[0], 0, s.space);
    CHECK(probably_equal(d, parse("u_x*cos(theta) - v_x*sin(theta)", t), 20, 1e-9, t));
    // Leibniz in a two-fiber space
    ExprPtr leib = total_derivative(parse("u*v", t), 0, s.space);
    CHECK(probably_equal(leib, parse("u_x*v + u*v_x", t), 20, 1e-9, t));
    // order overflow
    CHECK_THROWS_AS(total_derivative(parse("u_x", t), 0, s.space), OrderOverflowError);
}

TEST_CASE("prolonged rigid-motion action matches the hand computation") {
    Se2 s(1);
    ProlongedAction pa = prolong_action(s.action, s.space);
    const VarTable& t = *s.table;
    VarId vx = t.id("v_x");
    int pos = s.space.jet_index(vx);
    CHECK(probably_equal(pa.transform_of(pos), parse("u_x*sin(theta) + v_x*cos(theta)", t), 20,
                         1e-9, t));
    // identity parameters give the identity map on every coordinate
    std::map<VarId, ExprPtr> id_sub;
    for (size_t j = 0; j < s.action.params.size(); ++j)
        id_sub[s.action.params[j]] = ex_num(s.action.identity[j]);
    for (size_t pos2 = 0; pos2 < s.space.jets().size(); ++pos2) {
        ExprPtr at_id = substitute(pa.transforms[pos2], id_sub);
        CHECK(expr_equal(at_id, simplify(ex_var(s.space.jets()[pos2].var))));
    }
}

TEST_CASE("second-order prolongation of the Moebius action") {
    auto table = std::make_shared<VarTable>();
    JetSpace space(table, {"w"}, {"z"}, 2);
    ActionSpec action;
    action.kind = ActionSpec::Kind::Parametric;
    action.table = table;
    action.params = {table->add("g_a", VarKind::GroupParam), table->add("g_b", VarKind::GroupParam),
                     table->add("g_c", VarKind::GroupParam)};
    action.identity = {Rational(1), Rational(0), Rational(0)};
    action.fiber_transforms = {
        parse("(g_a^2*z + g_a*g_b)/(g_a*g_c*z + g_b*g_c + 1)", *table)};
    ProlongedAction pa = prolong_action(action, space);
    const VarTable& t = *table;

    SamplingConfig cfg;
    cfg.complex_mode = true;
    cfg.lo = 0.3;
    cfg.hi = 0.9;
    int pos_zww = space.jet_index(t.id("z_ww"));
    ExprPtr expected = parse(
        "(-2*g_a^3*g_c*z_w^2 + (g_a^2 + g_a^2*g_b*g_c)*z_ww + g_a^3*g_c*z*z_ww)"
        "/(g_a*g_c*z + g_b*g_c + 1)^3",
        t);
    CHECK(probably_equal(pa.transform_of(pos_zww), expected, 20, 1e-9, t, cfg));
}

TEST_CASE("prolonged immersions are iterated partials") {
    auto table = std::make_shared<VarTable>();
    JetSpace space(table, {"x"}, {"u", "v"}, 2);
    auto jets = prolong_immersion({parse("cos(x)", *table), parse("sin(x)", *table)}, space);
    const VarTable& t = *table;
    CHECK(probably_equal(jets.at(t.id("u_x")), parse("-sin(x)", t), 20, 1e-9, t));
    CHECK(probably_equal(jets.at(t.id("v_xx")), parse("-sin(x)", t), 20, 1e-9, t));

    auto table2 = std::make_shared<VarTable>();
    JetSpace space2(table2, {"w"}, {"z"}, 2);
    auto jets2 = prolong_immersion({parse("w^2", *table2)}, space2);
    CHECK(probably_equal(jets2.at(table2->id("z_w")), parse("2*w", *table2), 20, 1e-9, *table2));
    CHECK(is_zero(simplify(ex_sub(jets2.at(table2->id("z_ww")), ex_num(2)))));

    auto table3 = std::make_shared<VarTable>();
    JetSpace space3(table3, {"x", "y"}, {"u", "v", "w"}, 1);
    auto jets3 = prolong_immersion({parse("x^2", *table3), parse("y^2", *table3),
                                    parse("x*y", *table3)},
                                   space3);
    CHECK(probably_equal(jets3.at(table3->id("w_x")), parse("y", *table3), 20, 1e-9, *table3));
}

TEST_CASE("property: total derivatives commute") {
    auto table = std::make_shared<VarTable>();
    JetSpace space(table, {"x", "y"}, {"u"}, 3);
    const VarTable& t = *table;
    for (const char* src : {"u*u_x + sin(u_y)", "sqrt(u_x^2 + 1)*u", "u_x*u_y/(1 + u^2)"}) {
        ExprPtr e = parse(src, t);
        ExprPtr dxy = total_derivative(total_derivative(e, 0, space), 1, space);
        ExprPtr dyx = total_derivative(total_derivative(e, 1, space), 0, space);
        CHECK(probably_equal(dxy, dyx, 20, 1e-8, t));
    }
}

TEST_CASE("property: group law holds at jet level through the matrix rep") {
    Se2 s(1);
    ProlongedAction pa = prolong_action(s.action, s.space);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> box(-0.4, 0.4);
    int done = 0;
    for (int trial = 0; trial < 5; ++trial) {
        GroupElement g1 = random_group_element(s.action, rng, 0.4, false);
        GroupElement g2 = random_group_element(s.action, rng, 0.4, false);
        Mat prod = rep_eval(s.action, g1.params) * rep_eval(s.action, g2.params);
        std::vector<CNum> seed = g1.params;
        for (size_t i = 0; i < seed.size(); ++i) seed[i] += g2.params[i];
        auto g12 = params_from_rep(s.action, prod, seed, false);
        REQUIRE(g12.has_value());
        GroupElement composed;
        composed.params = *g12;
        for (int zi = 0; zi < 5; ++zi) {
            JetPoint z(static_cast<size_t>(s.space.dim()));
            for (auto& c : z) c = CNum(box(rng) + 0.6, 0.0);
            JetPoint lhs = apply_action(pa, g1, apply_action(pa, g2, z));
            JetPoint rhs = apply_action(pa, composed, z);
            double err = 0;
            for (size_t i = 0; i < z.size(); ++i) err = std::max(err, std::abs(lhs[i] - rhs[i]));
            CHECK(err <= 1e-8);
            ++done;
        }
    }
    CHECK(done == 25);
}

TEST_CASE("property: chain rule consistency at identity parameters") {
    Se2 s(1);
    ProlongedAction pa = prolong_action(s.action, s.space);
    const VarTable& t = *s.table;
    // D_x(transform of u) at identity parameters reduces to u_x
    ExprPtr d = total_derivative(pa.transform_of(s.space.jet_index(t.id("u"))), 0, s.space);
    std::map<VarId, ExprPtr> id_sub;
    for (size_t j = 0; j < s.action.params.size(); ++j)
        id_sub[s.action.params[j]] = ex_num(s.action.identity[j]);
    CHECK(expr_equal(substitute(d, id_sub), simplify(ex_var(t.id("u_x")))));
}
