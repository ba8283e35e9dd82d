#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace harmonic_levels;
using test_support::family;

namespace {

Expression f2(const std::string& text) { return parse_ambient_function(text, 2); }
Expression f3(const std::string& text) { return parse_ambient_function(text, 3); }

} // namespace

TEST(Gradient, Examples)
{
    EXPECT_TRUE(gradient_of_scalar(f2("y1*y2"), {1.0, 0.5}).isApprox(Eigen::Vector2d(0.5, 1.0)));
    EXPECT_TRUE(gradient_of_scalar(f2("log(sqrt(y1^2+y2^2))"), {1.0, 0.0}).isApprox(Eigen::Vector2d(1.0, 0.0)));
    EXPECT_TRUE(gradient_of_scalar(f2("y2-y1^2"), {0.0, 0.0}).isApprox(Eigen::Vector2d(0.0, 1.0)));
}

TEST(Hessian, Examples)
{
    EXPECT_TRUE(hessian_of_scalar(f2("y1*y2"), {0.3, -2.0}).isApprox((Eigen::Matrix2d() << 0, 1, 1, 0).finished()));
    EXPECT_TRUE(hessian_of_scalar(f2("y2-y1^2"), {0.3, -2.0}).isApprox((Eigen::Matrix2d() << -2, 0, 0, 0).finished()));
    EXPECT_TRUE(hessian_of_scalar(f2("y1^2+y2^2"), {4.0, 1.0}).isApprox(2 * Eigen::Matrix2d::Identity()));
}

TEST(Laplacian, Examples)
{
    EXPECT_EQ(laplacian_of_scalar(f2("y1*y2"), {0.7, 0.2}), 0.0);
    EXPECT_EQ(laplacian_of_scalar(f2("y1^2"), {0.7, 0.2}), 2.0);
    const Expression log_r = f2("log(sqrt(y1^2+y2^2))");
    EXPECT_NEAR(laplacian_of_scalar(log_r, {1.0, 0.0}), 0.0, 1e-8);
    EXPECT_NEAR(laplacian_of_scalar(log_r, {1.0, 0.0}, LaplacianMode::fd), 0.0, 1e-5);
}

TEST(Laplacian, ReferenceFunctionsAreHarmonic)
{
    std::mt19937_64 rng(89);
    for (const auto& entry : catalog()) {
        const auto ref = entry.reference();
        if (!ref)
            continue;
        const FamilySpec spec = entry.family();
        for (int i = 0; i < 20; ++i) {
            const AmbientPoint y = phi_eval(spec, test_support::random_interior(spec, rng));
            EXPECT_NEAR(laplacian_of_scalar(*ref, y), 0.0, 1e-12) << entry.name;
            // h = 1e-4 keeps the O(h^2) truncation of 1/r near r = 0.6 below 1e-6
            EXPECT_NEAR(laplacian_of_scalar(*ref, y, LaplacianMode::fd, 1e-4), 0.0, 1e-6) << entry.name;
        }
    }
}

TEST(Laplacian, SymbolicAndFdAgree)
{
    std::mt19937_64 rng(97);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (const char* text : {"y1^3*y2 - exp(y1)*sin(y2)", "y2-y1^2", "log(y1^2+y2^2)*y1", "sqrt(y1^2+y2^2)"}) {
        const Expression f = f2(text);
        for (int i = 0; i < 20; ++i) {
            const AmbientPoint p{u(rng), u(rng)};
            EXPECT_NEAR(laplacian_of_scalar(f, p), laplacian_of_scalar(f, p, LaplacianMode::fd), 1e-4) << text;
        }
    }
}

TEST(LevelCurvature, Examples)
{
    EXPECT_NEAR(level_curvature_from_function(f2("sqrt(y1^2+y2^2)"), {1.0, 0.0}), -1.0, 1e-15);
    EXPECT_NEAR(level_curvature_from_function(f2("y2-y1^2"), {0.0, 0.0}), 2.0, 1e-15);
    EXPECT_EQ(level_curvature_from_function(f2("y2"), {0.4, -3.0}), 0.0);
    EXPECT_THROW(level_curvature_from_function(f2("y1^2+y2^2"), {0.0, 0.0}), DegenerateError);
    EXPECT_THROW(level_curvature_from_function(f3("y3"), {0.0, 0.0, 0.0}), ConfigError);
}

TEST(MeanCurvatureFromFunction, Examples)
{
    EXPECT_NEAR(mean_curvature_from_function(f3("sqrt(y1^2+y2^2+y3^2)"), {0.0, 0.6, 0.8}), -1.0, 1e-14);
    EXPECT_EQ(mean_curvature_from_function(f3("y3"), {0.1, 0.2, 0.3}), 0.0);
    const Expression parabola = f2("y2-y1^2");
    EXPECT_NEAR(mean_curvature_from_function(parabola, {0.0, 0.0}), 2.0, 1e-15);
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const AmbientPoint p{u(rng), u(rng)};
        EXPECT_NEAR(mean_curvature_from_function(parabola, p), level_curvature_from_function(parabola, p), 1e-12);
    }
}

TEST(CrossValidation, PlanarCurvature)
{
    const std::pair<const char*, const char*> cases[] = {{"concentric_circles", "sqrt(y1^2+y2^2)"},
                                                         {"hyperbolas", "y1*y2"},
                                                         {"parabolas_counterexample", "y2-y1^2"},
                                                         {"parallel_lines", "y2"}};
    for (const auto& [name, text] : cases) {
        const FamilySpec spec = family(name);
        const Expression f = f2(text);
        std::vector<std::vector<double>> axes{axis_nodes(spec.axis(0), 10), axis_nodes(spec.axis(1), 5)};
        for_each_grid_point(axes, [&](const ParamPoint& q, const auto&) {
            const AmbientPoint y = phi_eval(spec, q);
            EXPECT_NEAR(signed_curvature_2d(spec, q), level_curvature_from_function(f, y), 1e-8) << name;
        });
    }
}

TEST(CrossValidation, SphereMeanCurvature)
{
    const FamilySpec spec = family("spheres_chart");
    const Expression r = f3("sqrt(y1^2+y2^2+y3^2)");
    std::mt19937_64 rng(103);
    for (int i = 0; i < 50; ++i) {
        const ParamPoint q = test_support::random_interior(spec, rng, 0.0);
        EXPECT_NEAR(mean_curvature_at(spec, q), mean_curvature_from_function(r, phi_eval(spec, q)), 1e-7);
    }
}

TEST(CrossValidation, NormalMatchesLevelFunctionGradient)
{
    std::mt19937_64 rng(107);
    for (const auto& entry : catalog()) {
        const FamilySpec spec = entry.family();
        const Expression level = entry.level();
        for (int i = 0; i < 20; ++i) {
            const ParamPoint q = test_support::random_interior(spec, rng, 0.0);
            const Eigen::VectorXd g = gradient_of_scalar(level, phi_eval(spec, q));
            EXPECT_LT((frame_at(spec, q).unit_normal - g / g.norm()).norm(), 1e-12) << entry.name;
        }
    }
}

TEST(AffineMatch, Examples)
{
    const std::vector<double> rec{0.1, 0.5, -0.3, 2.0};
    const AffineFit same = affine_match(rec, rec);
    EXPECT_NEAR(same.a, 1.0, 1e-15);
    EXPECT_NEAR(same.b, 0.0, 1e-15);
    EXPECT_NEAR(same.max_abs_err, 0.0, 1e-15);

    std::vector<double> ref;
    for (double v : rec)
        ref.push_back(2 * v + 3);
    const AffineFit fit = affine_match(rec, ref);
    EXPECT_NEAR(fit.a, 2.0, 1e-12);
    EXPECT_NEAR(fit.b, 3.0, 1e-12);
    EXPECT_NEAR(fit.max_abs_err, 0.0, 1e-12);

    EXPECT_THROW(affine_match(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), DegenerateError);
    EXPECT_THROW(affine_match(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ConfigError);
}

TEST(AffineMatch, SphereReconstructionAgainstInverseRadius)
{
    const FamilySpec spec = family("spheres_chart");
    const ReconstructionResult recon =
        reconstruct_u(spec, check_family(spec, {7, 7, 5}, 1e-6), 41, {});
    const Expression ref = *find_catalog_entry("spheres_chart").reference();
    std::mt19937_64 rng(109);
    std::vector<double> rec_values, ref_values;
    for (int i = 0; i < 30; ++i) {
        const ParamPoint q = test_support::random_interior(spec, rng, 0.02);
        const AmbientPoint y = phi_eval(spec, q);
        rec_values.push_back(evaluate_harmonic(spec, recon, y, q));
        ref_values.push_back(evaluate(ref, std::span<const double>(y.y.data(), 3)));
    }
    const AffineFit fit = affine_match(rec_values, ref_values);
    EXPECT_NEAR(fit.a, 1.0, 1e-5);
    EXPECT_NEAR(fit.b, -1.0, 1e-5);
    EXPECT_LT(fit.max_abs_err, 1e-5);
}

TEST(Catalog, EntriesLoadAndLookUp)
{
    EXPECT_EQ(catalog().size(), 5u);
    for (const auto& entry : catalog()) {
        EXPECT_NO_THROW(entry.family()) << entry.name;
        EXPECT_EQ(&find_catalog_entry(entry.name), &entry);
    }
    EXPECT_FALSE(find_catalog_entry("parabolas_counterexample").reference().has_value());
    EXPECT_THROW(find_catalog_entry("tori"), ConfigError);
}
