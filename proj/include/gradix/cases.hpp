#pragma once

#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gradix/case_spec.hpp"

namespace gradix {

/// Gaussian width used by the 2D and diagonal Gaussian-source cases when
/// none is given.
inline constexpr double kGaussian2dAlpha = 0.1;

/// Default measurement subdomain of the inverse Gaussian case. Without
/// boundary data a point is determined only if its characteristic crosses
/// the data region; among boxes only the full square covers every one.
inline constexpr Box kDefaultDataRegion{{0.0, 1.0}, {0.0, 1.0}};

/// mu I' + k_e I = exp(-(x - c)^2 / alpha^2) on [0, 1], black walls.
CaseSpec case_1d_gaussian(double ke, double alpha = 0.02, double c = 0.5, double mu = 0.5);

/// Slab [0, L] whose exact solution is 1 up to L/2 and decays as
/// exp(-k_e (x - L/2)) beyond; unit inflow.
CaseSpec case_slab_discontinuous(double ke, double L = 10.0, double mu = 1.0);

/// Square [0, L]^2, direction (1, 1)/sqrt(2), unit inflow on the left and
/// bottom walls, solution decaying beyond the anti-diagonal x + y = L.
CaseSpec case_square_diagonal(double ke, double L = 1.0);

/// mu I_x + eta I_y + k_e I = exp(-((x + y)/sqrt(2) - c)^2 / alpha^2) on
/// [0, 1]^2 with cold black walls.
CaseSpec case_2d_gaussian(double ke, double alpha = kGaussian2dAlpha, double c = std::numbers::sqrt2 / 2,
                          double mu = std::numbers::sqrt2 / 2, double eta = std::numbers::sqrt2 / 2);

/// The 2D Gaussian case along the diagonal x = y, as a 1D problem in the
/// arc length s in [0, sqrt(2)].
CaseSpec case_diag_gaussian(double ke, double alpha = kGaussian2dAlpha, double c = std::numbers::sqrt2 / 2);

/// Inverse variant: boundary family disabled, noiseless measurements of the
/// exact solution in `region`.
CaseSpec make_inverse(const CaseSpec& base, const Box& region);

enum class IndexProfile { uniform, linear, radial };

/// Smooth angular-dependent field used as the manufactured solution.
double manufactured_intensity(const Point& p);

/// Steady graded-index case in (x, y, theta, phi) whose source makes
/// `solution` exact. `gradient_scale` multiplies grad n (n itself is kept).
CaseSpec manufactured_graded_case(IndexProfile profile, ScalarField solution = manufactured_intensity,
                                  double gradient_scale = 1.0);

/// Physics overrides accepted by make_case; unset fields use case defaults.
struct CaseOptions {
    std::optional<double> ke;
    std::optional<double> alpha;
    std::optional<double> c;
    std::optional<double> L;
    std::optional<double> mu;
    std::optional<double> eta;
    std::optional<Box> data_region;
};

const std::vector<std::string>& case_names();

/// Builds a catalog case by name; throws UsageError for unknown names.
CaseSpec make_case(const std::string& name, const CaseOptions& options = {});

}  // namespace gradix
