#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "support.hpp"

using namespace harmonic_levels;
using test_support::family;

TEST(NormalAtAmbient, Examples)
{
    const FamilySpec circles = family("concentric_circles");
    const NormalSample a = normal_at_ambient(circles, {1.0, 0.0}, {0.0, 0.0});
    EXPECT_TRUE(a.normal.isApprox(Eigen::Vector2d(1, 0)));
    EXPECT_NEAR(a.q.coords.norm(), 0.0, 1e-15);

    const NormalSample b = normal_at_ambient(circles, {0.0, -2.0}, {1.5, 0.6});
    EXPECT_NEAR(b.normal[0], 0.0, 1e-12);
    EXPECT_NEAR(b.normal[1], -1.0, 1e-12);
    EXPECT_NEAR(b.q.sigma(0), std::numbers::pi / 2, 1e-12);
    EXPECT_NEAR(b.q.t(), std::log(2.0), 1e-12);

    const FamilySpec hyper = family("hyperbolas");
    const NormalSample c = normal_at_ambient(hyper, {1.0, 0.5}, nearest_seed(hyper, {1.0, 0.5}));
    EXPECT_NEAR(c.normal[0], 0.447214, 1e-6);
    EXPECT_NEAR(c.normal[1], 0.894427, 1e-6);
}

TEST(NormalFlow, CirclesIsRadial)
{
    const FamilySpec spec = family("concentric_circles");
    const FlowTrace trace = integrate_normal_flow(spec, {0.0, 0.0}, 1.0, 0.01);
    EXPECT_FALSE(trace.truncated);
    ASSERT_EQ(trace.points.size(), 101u);
    EXPECT_NEAR(trace.points.back().s, 1.0, 1e-15);
    EXPECT_LT((trace.points.back().y.y - Eigen::Vector2d(2, 0)).norm(), 1e-8);
    for (const auto& p : trace.points)
        EXPECT_LT((p.y.y - Eigen::Vector2d(1 + p.s, 0)).norm(), 1e-8);
}

TEST(NormalFlow, OffAxisDeviationIsTiny)
{
    const FamilySpec spec = family("concentric_circles");
    const double theta = 0.7;
    const FlowTrace trace = integrate_normal_flow(spec, {theta, 0.0}, 1.0, 0.01);
    const Eigen::Vector2d dir(std::cos(theta), -std::sin(theta));
    for (const auto& p : trace.points) {
        const Eigen::Vector2d y = p.y.y;
        EXPECT_LT(std::abs(dir[0] * y[1] - dir[1] * y[0]), 1e-8);
        EXPECT_NEAR(y.norm(), 1 + p.s, 1e-8);
    }
}

TEST(NormalFlow, ZeroLengthIsSinglePoint)
{
    const FlowTrace trace = integrate_normal_flow(family("concentric_circles"), {0.0, 0.0}, 0.0, 0.01);
    ASSERT_EQ(trace.points.size(), 1u);
    EXPECT_EQ(trace.points[0].s, 0.0);
    EXPECT_FALSE(trace.truncated);
}

TEST(NormalFlow, LeavingTheBoxTruncates)
{
    const FamilySpec spec = family("concentric_circles");
    const FlowTrace out = integrate_normal_flow(spec, {0.0, 0.0}, 5.0, 0.01);
    EXPECT_TRUE(out.truncated);
    EXPECT_LE(out.points.back().q.t(), spec.t_interval().hi);
    EXPECT_GT(out.points.back().y.y.norm(), std::exp(1.0) - 0.02);

    const FlowTrace in = integrate_normal_flow(spec, {0.0, 0.0}, -5.0, 0.01);
    EXPECT_TRUE(in.truncated);
    EXPECT_LT(in.points.back().s, 0.0);
    EXPECT_GE(in.points.back().q.t(), spec.t_interval().lo);
    for (const auto& p : in.points)
        EXPECT_NEAR(p.y.y.norm(), 1 + p.s, 1e-8);
}

TEST(NormalFlow, TraceInvariants)
{
    for (const char* name : {"hyperbolas", "spheres_chart", "parabolas_counterexample"}) {
        const FamilySpec spec = family(name);
        ParamPoint start(Eigen::VectorXd::Zero(spec.ambient_dim()));
        if (std::string(name) == "parabolas_counterexample")
            start.coords[0] = 0.5;
        const double step = default_flow_step(spec);
        const FlowTrace trace = integrate_normal_flow(spec, start, 0.4, step);
        ASSERT_GT(trace.points.size(), 10u) << name;
        for (std::size_t k = 0; k < trace.points.size(); ++k) {
            const auto& p = trace.points[k];
            EXPECT_LT((phi_eval(spec, p.q).y - p.y.y).norm(), spec.settings.newton_tol) << name;
            if (k > 0) {
                const double gap = (p.y.y - trace.points[k - 1].y.y).norm();
                const double ds = p.s - trace.points[k - 1].s;
                EXPECT_NEAR(gap, ds, 0.1 * ds) << name;
            }
        }
    }
}

TEST(NormalFlow, TSpeedIsInverseDensity)
{
    const FamilySpec spec = family("concentric_circles");
    const FlowTrace trace = integrate_normal_flow(spec, {0.4, -0.3}, 1.0, 0.01);
    // five-point stencil, O(h^4) on the uniform trace
    const double h = trace.step_size;
    auto t_at = [&](std::size_t k) { return trace.points[k].q.t(); };
    for (std::size_t k = 2; k + 2 < trace.points.size(); ++k) {
        const double slope = (-t_at(k + 2) + 8 * t_at(k + 1) - 8 * t_at(k - 1) + t_at(k - 2)) / (12 * h);
        EXPECT_NEAR(slope, 1.0 / frame_at(spec, trace.points[k].q).density, 1e-6);
    }
}

TEST(FlowToLeaf, LandsOnTarget)
{
    const FamilySpec spec = family("concentric_circles");
    const FlowTrace trace = flow_to_leaf(spec, {0.0, 0.0}, std::log(2.0), 1e-2);
    EXPECT_NEAR(trace.points.back().q.t(), std::log(2.0), 1e-13);
    EXPECT_NEAR(trace.points.back().s, 1.0, 1e-10);

    const FlowTrace back = flow_to_leaf(spec, {0.0, 0.0}, -0.4, 1e-2);
    EXPECT_NEAR(back.points.back().s, std::exp(-0.4) - 1.0, 1e-10);

    EXPECT_EQ(flow_to_leaf(spec, {0.0, 0.0}, 0.0, 1e-2).points.size(), 1u);
    EXPECT_THROW(flow_to_leaf(spec, {0.0, 0.0}, 3.0, 1e-2), OutOfDomainError);
}

TEST(DphiDs, Examples)
{
    EXPECT_NEAR(dphi_ds(family("concentric_circles"), {0.0, 0.0}, 1e-4), 1.0, 1e-7);
    EXPECT_NEAR(dphi_ds(family("hyperbolas"), {0.0, 0.5}, 1e-4), -0.64, 1e-6);
    EXPECT_NEAR(dphi_ds(family("parallel_lines"), {0.3, -0.1}, 1e-4), 0.0, 1e-12);
    EXPECT_NEAR(dphi_ds(family("spheres_chart"), {0.2, -0.3, 0.1}, 1e-4), 1.0, 1e-7);
}

TEST(DphiDs, MatchesSpatialFormulaOnHyperbolas)
{
    // φ = (x² + y²)^(-1/2), ∂φ/∂s = -2xy/(x²+y²)²
    const FamilySpec spec = family("hyperbolas");
    for (double s : {-0.8, -0.2, 0.5})
        for (double t : {-0.7, 0.1, 0.6}) {
            const Eigen::VectorXd y = phi_eval(spec, {s, t}).y;
            const double r2 = y.squaredNorm();
            EXPECT_NEAR(dphi_ds(spec, {s, t}), -2 * y[0] * y[1] / (r2 * r2), 1e-6);
        }
}

TEST(DphiDs, ConvergesAtSecondOrder)
{
    const FamilySpec spec = family("hyperbolas");
    const ParamPoint q{0.1, 0.3};
    const double d1 = dphi_ds(spec, q, 0.04);
    const double d2 = dphi_ds(spec, q, 0.02);
    const double d3 = dphi_ds(spec, q, 0.01);
    const double ratio = (d1 - d2) / (d2 - d3);
    EXPECT_NEAR(ratio, 4.0, 0.2);
}

TEST(FlowCsv, HeaderAndRows)
{
    const FamilySpec spec = family("concentric_circles");
    const FlowTrace trace = integrate_normal_flow(spec, {0.0, 0.0}, 0.02, 0.01);
    std::ostringstream out;
    write_flow_csv(out, spec, trace);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "s,y1,y2,sigma1,t");
    std::getline(in, line);
    EXPECT_EQ(line, "0,1,0,0,0");
    int rows = 1;
    while (std::getline(in, line))
        ++rows;
    EXPECT_EQ(rows, 3);
}
