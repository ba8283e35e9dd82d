#pragma once

#include <random>
#include <string>

#include "harmonic_levels/harmonic_levels.hpp"

namespace test_support {

inline harmonic_levels::FamilySpec family(const std::string& name)
{
    return harmonic_levels::find_catalog_entry(name).family();
}

/// Uniform point strictly inside the parameter box, `margin` (fraction of
/// each side) away from every face.
inline harmonic_levels::ParamPoint random_interior(const harmonic_levels::FamilySpec& spec, std::mt19937_64& rng,
                                                   double margin = 0.05)
{
    harmonic_levels::ParamPoint q{Eigen::VectorXd(spec.ambient_dim())};
    for (int k = 0; k < spec.ambient_dim(); ++k) {
        const auto& iv = spec.axis(k);
        const double pad = margin * iv.length();
        std::uniform_real_distribution<double> u(iv.lo + pad, iv.hi - pad);
        q.coords[k] = u(rng);
    }
    return q;
}

} // namespace test_support
