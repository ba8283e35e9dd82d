#pragma once

#include "harmonic_levels/checker.hpp"
#include "harmonic_levels/errors.hpp"
#include "harmonic_levels/expr.hpp"
#include "harmonic_levels/family.hpp"
#include "harmonic_levels/flow.hpp"
#include "harmonic_levels/geometry.hpp"
#include "harmonic_levels/oracle.hpp"
#include "harmonic_levels/reconstruct.hpp"
