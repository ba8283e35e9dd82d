#pragma once

// Leaf geometry of a family: Hodge normal, unit normal N, density
// φ = det dΦ / |n|, signed curvature (n = 2) and mean curvature.
//
// Sign conventions: N is the Hodge dual of the wedge of σ-tangents, so
// φ = <N, ∂Φ/∂t> > 0 for orientation-preserving Φ. Curvatures are signed
// against N; the outward-oriented circle/sphere of radius r has κ = H = -1/r.

#include <Eigen/Dense>

#include <cmath>

#include "harmonic_levels/errors.hpp"
#include "harmonic_levels/family.hpp"

namespace harmonic_levels {

struct FrameData {
    Eigen::MatrixXd jacobian;
    Eigen::VectorXd hodge_normal;
    Eigen::VectorXd unit_normal;
    double density = 0.0;
    /// |γ'_t| for n = 2; equal to |hodge_normal| in every dimension.
    double tangent_norm = 0.0;
};

/// (-1)^(n-1) det[e | ∂Φ/∂s1 .. ∂Φ/∂s(n-1)], expanded along the basis column.
/// Only the first n-1 columns of `jacobian` are read.
inline Eigen::VectorXd hodge_normal(const Eigen::MatrixXd& jacobian)
{
    const Eigen::Index n = jacobian.rows();
    if (jacobian.cols() < n - 1 || n < 2)
        throw ConfigError("hodge_normal needs an n x (n-1) tangent block");
    const Eigen::MatrixXd tangents = jacobian.leftCols(n - 1);

    Eigen::VectorXd normal(n);
    if (n == 2) {
        normal << -tangents(1, 0), tangents(0, 0);
    } else {
        Eigen::MatrixXd minor(n - 1, n - 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index r = 0, k = 0; r < n; ++r) {
                if (r == i)
                    continue;
                minor.row(k++) = tangents.row(r);
            }
            // cofactor sign (-1)^i (0-based row) times the overall (-1)^(n-1)
            const double sign = ((i + n) % 2 == 1) ? 1.0 : -1.0;
            normal[i] = sign * minor.determinant();
        }
    }

    double scale = 1.0;
    for (Eigen::Index j = 0; j < n - 1; ++j)
        scale *= tangents.col(j).norm();
    if (!(normal.norm() > 1e-14 * scale) || scale == 0.0)
        throw DegenerateError("degenerate parametrization: sigma-tangents are linearly dependent");
    return normal;
}

inline FrameData frame_from_jacobian(Eigen::MatrixXd jacobian)
{
    FrameData frame;
    frame.hodge_normal = hodge_normal(jacobian);
    const double norm = frame.hodge_normal.norm();
    const double det = jacobian.determinant();
    if (!(det > 0.0))
        throw OrientationError("orientation violation: det dPhi = " + detail::format_number(det));
    frame.unit_normal = frame.hodge_normal / norm;
    frame.density = det / norm;
    frame.tangent_norm = norm;
    frame.jacobian = std::move(jacobian);
    return frame;
}

inline FrameData frame_at(const FamilySpec& spec, const ParamPoint& q)
{
    try {
        return frame_from_jacobian(phi_jacobian(spec, q));
    } catch (const OrientationError& e) {
        throw OrientationError(std::string(e.what()) + " at " + format_point(q.coords));
    }
}

/// κ = (x'y'' - y'x'') / |γ'|^3, primes are ∂/∂σ.
inline double signed_curvature_2d(const FamilySpec& spec, const ParamPoint& q)
{
    if (spec.ambient_dim() != 2)
        throw ConfigError("signed curvature requires a planar family");
    const Eigen::MatrixXd jac = phi_jacobian(spec, q);
    const Eigen::VectorXd d2 = phi_second_derivatives(spec, q).at(0, 0);
    const double dx = jac(0, 0), dy = jac(1, 0);
    const double speed = std::hypot(dx, dy);
    if (!(speed > 0.0))
        throw DegenerateError("degenerate tangent at " + format_point(q.coords));
    return (dx * d2[1] - dy * d2[0]) / (speed * speed * speed);
}

/// H = tr(I^-1 II) / (n-1) with I_ij = <Φ_i, Φ_j>, II_ij = <Φ_ij, N>.
inline double mean_curvature_from_frame(const FrameData& frame, const SecondDerivatives& second)
{
    const int m = second.sigma_dim();
    const Eigen::MatrixXd tangents = frame.jacobian.leftCols(m);
    const Eigen::MatrixXd first_form = tangents.transpose() * tangents;
    Eigen::MatrixXd second_form(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j)
            second_form(i, j) = second_form(j, i) = second.at(i, j).dot(frame.unit_normal);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(first_form, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12)
        throw DegenerateError("singular first fundamental form (condition " + detail::format_number(hi / lo) + ")");
    const Eigen::MatrixXd shape = first_form.ldlt().solve(second_form);
    return shape.trace() / m;
}

inline double mean_curvature_at(const FamilySpec& spec, const ParamPoint& q)
{
    return mean_curvature_from_frame(frame_at(spec, q), phi_second_derivatives(spec, q));
}

} // namespace harmonic_levels
