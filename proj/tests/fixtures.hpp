// Shared constructions of the four worked examples used across the test
// suites: planar rigid motions on curves, Moebius transformations on
// holomorphic immersions, rotations on surfaces, and the Heisenberg-subgroup
// action on surfaces.
#ifndef MFRAME_TESTS_FIXTURES_HPP
#define MFRAME_TESTS_FIXTURES_HPP

#include <memory>
#include <string>

#include "mframe/frame.hpp"
#include "mframe/jet.hpp"

namespace fixtures {

using namespace mframe;

struct Problem {
    std::shared_ptr<VarTable> table;
    std::unique_ptr<JetSpace> space;
    ActionSpec action;
    CrossSection cs;
    SamplingConfig cfg;

    ExprPtr operator()(const std::string& text) const { return parse(text, *table); }
};

inline Problem se2(int order = 1) {
    Problem p;
    p.table = std::make_shared<VarTable>();
    p.space = std::make_unique<JetSpace>(p.table, std::vector<std::string>{"x"},
                                         std::vector<std::string>{"u", "v"}, order);
    p.action.kind = ActionSpec::Kind::Parametric;
    p.action.table = p.table;
    p.action.params = {p.table->add("theta", VarKind::GroupParam),
                       p.table->add("a", VarKind::GroupParam),
                       p.table->add("b", VarKind::GroupParam)};
    p.action.identity = {Rational(0), Rational(0), Rational(0)};
    p.action.fiber_transforms = {p("u*cos(theta) - v*sin(theta) + a"),
                                 p("u*sin(theta) + v*cos(theta) + b")};
    MatrixRep rep;
    rep.m = {{p("cos(theta)"), p("-sin(theta)"), p("a")},
             {p("sin(theta)"), p("cos(theta)"), p("b")},
             {p("0"), p("0"), p("1")}};
    p.action.rep = rep;
    p.action.mc_selection = {{2, 1}, {1, 3}, {2, 3}};
    p.cs.entries = {{p.table->id("u"), Rational(0)},
                    {p.table->id("v"), Rational(0)},
                    {p.table->id("u_x"), Rational(0)}};
    return p;
}

inline Problem mobius(int order = 2) {
    Problem p;
    p.table = std::make_shared<VarTable>();
    p.space = std::make_unique<JetSpace>(p.table, std::vector<std::string>{"w"},
                                         std::vector<std::string>{"z"}, order);
    p.action.kind = ActionSpec::Kind::Parametric;
    p.action.table = p.table;
    p.action.params = {p.table->add("g_a", VarKind::GroupParam),
                       p.table->add("g_b", VarKind::GroupParam),
                       p.table->add("g_c", VarKind::GroupParam)};
    p.action.identity = {Rational(1), Rational(0), Rational(0)};
    p.action.fiber_transforms = {p("(g_a^2*z + g_a*g_b)/(g_a*g_c*z + g_b*g_c + 1)")};
    MatrixRep rep;
    rep.m = {{p("g_a"), p("g_b")}, {p("g_c"), p("(g_b*g_c + 1)/g_a")}};
    p.action.rep = rep;
    p.action.projective = true;
    p.cs.entries = {{p.table->id("z"), Rational(0)},
                    {p.table->id("z_w"), Rational(1)},
                    {p.table->id("z_ww"), Rational(0)}};
    p.cfg.complex_mode = true;
    p.cfg.lo = 0.25;
    p.cfg.hi = 1.0;
    return p;
}

inline Problem heisenberg(int order = 1) {
    Problem p;
    p.table = std::make_shared<VarTable>();
    p.space = std::make_unique<JetSpace>(p.table, std::vector<std::string>{"x", "y"},
                                         std::vector<std::string>{"u", "v", "w"}, order);
    p.action.kind = ActionSpec::Kind::Parametric;
    p.action.table = p.table;
    for (const char* name : {"t1", "t2", "t3", "t4", "t5"}) {
        p.action.params.push_back(p.table->add(name, VarKind::GroupParam));
        p.action.identity.push_back(Rational(0));
    }
    p.action.fiber_transforms = {p("u + t1*v + t2*w + t3"), p("v + t4*w + t5"), p("w")};
    MatrixRep rep;
    rep.m = {{p("1"), p("t1"), p("t2"), p("t3")},
             {p("0"), p("1"), p("t4"), p("t5")},
             {p("0"), p("0"), p("1"), p("0")},
             {p("0"), p("0"), p("0"), p("1")}};
    p.action.rep = rep;
    p.cs.entries = {{p.table->id("u"), Rational(0)},
                    {p.table->id("v"), Rational(0)},
                    {p.table->id("u_x"), Rational(0)},
                    {p.table->id("u_y"), Rational(0)},
                    {p.table->id("v_x"), Rational(0)}};
    return p;
}

// Rotations of surfaces, with the frame given directly as a matrix of
// expressions in the first-order jets (the group has no parametrization here).
struct MatrixProblem : Problem {
    MovingFrame frame;
};

inline MatrixProblem so3(int order = 1) {
    MatrixProblem p;
    p.table = std::make_shared<VarTable>();
    p.space = std::make_unique<JetSpace>(p.table, std::vector<std::string>{"x", "y"},
                                         std::vector<std::string>{"u1", "u2", "u3"}, order);
    p.action.kind = ActionSpec::Kind::MatrixLinear;
    p.action.table = p.table;
    p.action.group_dim = 3;
    Eigen::MatrixXd b1(3, 3), b2(3, 3), b3(3, 3);
    b1 << 0, 0, 0, 0, 0, -1, 0, 1, 0;
    b2 << 0, 0, 1, 0, 0, 0, -1, 0, 0;
    b3 << 0, -1, 0, 1, 0, 0, 0, 0, 0;
    p.action.algebra = {b1, b2, b3};
    p.cs.entries = {{p.table->id("u2_x"), Rational(0)},
                    {p.table->id("u3_x"), Rational(0)},
                    {p.table->id("u3_y"), Rational(0)}};

    // rows: unit tangent, its orthogonal complement in the tangent plane, unit normal
    const std::string L1 = "sqrt(u1_x^2 + u2_x^2 + u3_x^2)";
    const std::string c1 = "(u2_x*u3_y - u3_x*u2_y)";
    const std::string c2 = "(u3_x*u1_y - u1_x*u3_y)";
    const std::string c3 = "(u1_x*u2_y - u2_x*u1_y)";
    const std::string L2 = "sqrt(" + c1 + "^2 + " + c2 + "^2 + " + c3 + "^2)";
    auto T = [&](const std::string& comp) { return comp + "/" + L1; };
    auto N = [&](const std::string& comp) { return comp + "/" + L2; };
    std::string t1 = T("u1_x"), t2 = T("u2_x"), t3 = T("u3_x");
    std::string n1 = N(c1), n2 = N(c2), n3 = N(c3);
    auto cross = [](const std::string& a2, const std::string& a3, const std::string& b2,
                    const std::string& b3) { return "(" + a2 + ")*(" + b3 + ") - (" + a3 + ")*(" + b2 + ")"; };
    std::string v1 = cross(n2, n3, t2, t3);
    std::string v2 = cross(n3, n1, t3, t1);
    std::string v3 = cross(n1, n2, t1, t2);

    p.frame.form = MovingFrame::Form::MatrixForm;
    p.frame.matrix = {{p(t1), p(t2), p(t3)}, {p(v1), p(v2), p(v3)}, {p(n1), p(n2), p(n3)}};
    return p;
}

}  // namespace fixtures

#endif
