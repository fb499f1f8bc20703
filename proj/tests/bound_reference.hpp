#pragma once

// Second transcription of the bound formulas, kept apart from the library
// so tests can compare against it.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gradix/metrics.hpp"

namespace gradix::reference {

// Transient bound.
inline double transient_bound(const BoundInputs& b, const FamilyErrors& e) {
    const double v1 = 2.0 * b.nu * (b.ks_inf + b.sigma_g_inf) / (4.0 * std::numbers::pi);
    const double v = b.T + b.nu * v1 * b.T * b.T * std::exp(b.nu * v1 * b.T);
    auto q = [](double n, double p) { return std::pow(std::log(n), p) / n; };
    const double dd = 2.0 * b.d;
    const double train = e[2] * e[2] + b.nu * e[1] * e[1] + b.c * e[0] * e[0];
    const double quad = q(double(b.N_tb), dd) + b.c * q(double(b.N_sb), dd) + b.c * q(double(b.N_int), dd + 1) +
                        b.c * std::pow(double(b.N_S), -2.0 * b.a);
    return v * train + v * b.V2 * quad;
}

// Steady bound.
inline double steady_bound(const BoundInputs& b, const FamilyErrors& e) {
    const double ns = std::pow(double(b.N_S), -2.0 * b.a);
    const double v = std::max({2.0 / b.l, 2.0 / b.l * b.hk_sb * b.hk_sb, 2.0 * b.C_eps / b.l * b.hk_int * b.hk_int,
                               2.0 * b.C_eps / b.l * b.V_bar * ns});
    auto q = [](double n, double p) { return std::pow(std::log(n), p) / n; };
    const double dd = 2.0 * b.d;
    return v * (b.nu * e[1] * e[1] + b.nu * e[0] * e[0]) +
           v * (q(double(b.N_sb), dd) + b.nu * q(double(b.N_int), dd) + b.nu * ns);
}

}  // namespace gradix::reference
