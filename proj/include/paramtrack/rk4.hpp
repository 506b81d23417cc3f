#pragma once

#include <array>
#include <cstddef>

namespace paramtrack {

/// One classical Runge-Kutta step. `rhs(state, stage_frac)` returns the
/// derivative at the stage state; stage_frac in {0, 0.5, 1} is the stage's
/// position inside the step, which delay systems use to look up lagged values.
template <std::size_t N, class Rhs>
inline std::array<double, N> rk4_step(const std::array<double, N>& x, double dt, Rhs&& rhs) {
    std::array<double, N> xs;

    const std::array<double, N> k1 = rhs(x, 0.0);
    for (std::size_t i = 0; i < N; ++i) xs[i] = x[i] + 0.5 * dt * k1[i];

    const std::array<double, N> k2 = rhs(xs, 0.5);
    for (std::size_t i = 0; i < N; ++i) xs[i] = x[i] + 0.5 * dt * k2[i];

    const std::array<double, N> k3 = rhs(xs, 0.5);
    for (std::size_t i = 0; i < N; ++i) xs[i] = x[i] + dt * k3[i];

    const std::array<double, N> k4 = rhs(xs, 1.0);

    std::array<double, N> out;
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < N; ++i)
        out[i] = x[i] + w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

} // namespace paramtrack
