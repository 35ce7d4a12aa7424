#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace rsczo {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) noexcept
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

/// y += c * x
inline void axpy(double c, std::span<const double> x, std::span<double> y) noexcept
{
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] += c * x[i];
}

inline void scale(std::span<double> x, double c) noexcept
{
    for (double& v : x)
        v *= c;
}

inline bool all_finite(std::span<const double> x) noexcept
{
    for (double v : x)
        if (!std::isfinite(v))
            return false;
    return true;
}

inline Vec basis_vector(std::size_t d, std::size_t i, double length = 1.0)
{
    Vec e(d, 0.0);
    e[i] = length;
    return e;
}

} // namespace rsczo
