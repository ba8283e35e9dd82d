#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "harmonic_levels/expr.hpp"

namespace harmonic_levels::csv {

/// Shortest decimal string that round-trips to the same double; no locale.
/// Negative zero is written as 0.
inline std::string number(double v) { return detail::format_number(v == 0.0 ? 0.0 : v); }

inline void header(std::ostream& out, const std::vector<std::string>& columns)
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        out << (i ? "," : "") << columns[i];
    out << '\n';
}

inline void row(std::ostream& out, std::span<const double> values)
{
    for (std::size_t i = 0; i < values.size(); ++i)
        out << (i ? "," : "") << number(values[i]);
    out << '\n';
}

} // namespace harmonic_levels::csv
