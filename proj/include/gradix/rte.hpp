#pragma once

// Residual operators of the steady / transient radiative transfer equation
// in a graded-index medium:
//
//   (n/c0) dI/dt + (k_e + Omega.grad) I
//     + 1/(n sin t) d/dtheta { I (Omega cos t - k).grad n }
//     + 1/(n sin t) d/dphi   { (s1 . grad n) I }
//     - S - (k_s / 4 pi) sum_i w_i Phi(Omega, Omega_i) I(Omega_i)
//
// Three evaluation routes exist: autodiff on a tape (networks), central
// finite differences (arbitrary callables such as exact solutions), and an
// expanded linear stencil consumed by the batched training kernel.

#include <span>
#include <vector>

#include "gradix/autodiff.hpp"
#include "gradix/case_spec.hpp"
#include "gradix/network.hpp"
#include "gradix/sampling.hpp"

namespace gradix {

/// Error function; odd, |error| below 1.5e-7 (libm accuracy in practice).
double erf(double x);

/// Flips the sign of gradix::erf process-wide. Exists only so the verify
/// command can demonstrate that it catches a broken special function.
void set_erf_fault(bool on) noexcept;

/// Points with |sin(theta)| below this are rejected by the angular terms.
inline constexpr double kSinThetaFloor = 1e-6;

/// Residuals of all four families at one point each.
struct ResidualBundle {
    double interior = 0.0;
    double spatial_boundary = 0.0;
    double temporal = 0.0;
    double data = 0.0;
};

/// Network evaluated at a physical point: inputs are mapped onto [-1, 1]
/// per the case's coordinate bounds before entering the MLP.
template <class P, class X>
X network_at(const BasicMlp<P>& net, const CaseSpec& spec, std::span<const X> physical) {
    std::vector<X> mapped;
    mapped.reserve(physical.size());
    for (std::size_t i = 0; i < physical.size(); ++i) {
        const auto& b = spec.bounds[i];
        const double scale = 2.0 / b.length();
        const double shift = -1.0 - 2.0 * b.lo / b.length();
        mapped.push_back(physical[i] * scale + shift);
    }
    return forward<P, X>(net, std::span<const X>(mapped));
}

double network_at(const MlpParams& net, const CaseSpec& spec, const Point& p);

/// Callable view of a trained network.
ScalarField network_field(const MlpParams& net, const CaseSpec& spec);

/// Physical coordinates of p in the case's input order.
std::vector<double> physical_input(const CaseSpec& spec, const Point& p);

// ---- autodiff route ------------------------------------------------------

/// Interior residual with every derivative taken by input_derivative on
/// `tape`; differentiable with respect to the parameters in `net`.
ad::Var interior_residual(ad::Tape& tape, const BasicMlp<ad::Var>& net, const CaseSpec& spec, const Point& p);
ad::Var boundary_residual(ad::Tape& tape, const BasicMlp<ad::Var>& net, const CaseSpec& spec, const Point& p);
ad::Var temporal_residual(ad::Tape& tape, const BasicMlp<ad::Var>& net, const CaseSpec& spec, const Point& p);
ad::Var data_residual(ad::Tape& tape, const BasicMlp<ad::Var>& net, const CaseSpec& spec, const Point& p,
                      double g);
ad::Var scattering_integral(ad::Tape& tape, const BasicMlp<ad::Var>& net, const CaseSpec& spec,
                            const Point& p, const QuadratureRule& rule);

double interior_residual(const CaseSpec& spec, const MlpParams& net, const Point& p);
/// I_Theta - I_b; throws UsageError unless p is on the inflow boundary.
double boundary_residual(const CaseSpec& spec, const MlpParams& net, const Point& p);
/// I_Theta - I_0 at t = 0.
double temporal_residual(const CaseSpec& spec, const MlpParams& net, const Point& p);
/// L(I_Theta) - g with L the identity; requires a data subdomain.
double data_residual(const CaseSpec& spec, const MlpParams& net, const Point& p, double g);

// ---- callable route ------------------------------------------------------

/// Interior residual of an arbitrary field, derivatives by central
/// differences of step h.
double interior_residual(const CaseSpec& spec, const ScalarField& field, const Point& p, double h = 1e-7);
double boundary_residual(const CaseSpec& spec, const ScalarField& field, const Point& p);
double data_residual(const CaseSpec& spec, const ScalarField& field, const Point& p, double g);

/// (k_s / 4 pi) sum_i w_i Phi(Omega, Omega_i) I(p with direction Omega_i).
double scattering_integral(const CaseSpec& spec, const ScalarField& field, const Point& p,
                           const QuadratureRule& rule);

/// sup over the rule's directions of the quadrature of Phi(Omega, .) over the sphere.
double sigma_g(const CaseSpec& spec, const QuadratureRule& rule);

/// The scattering rule a case uses inside its residual.
QuadratureRule case_scatter_rule(const CaseSpec& spec);

// ---- stencil route -------------------------------------------------------

/// Interior residual written as a linear functional of the network:
///   R = value_coef * I(p) + D_seed I(p) - source + sum_k coef_k I(q_k)
/// where D_seed is the directional derivative along `seed` (in the case's
/// physical input coordinates).
struct InteriorStencil {
    double value_coef = 0.0;
    std::vector<double> seed;
    double source = 0.0;
    std::vector<std::pair<Point, double>> couplings;
};

InteriorStencil interior_stencil(const CaseSpec& spec, const Point& p);

/// S(p) = operator applied to the closed-form solution, using the case's
/// per-piece analytic gradient. Fixed-direction, non-scattering cases only.
ScalarField derive_source_from_exact(const CaseSpec& spec);

/// RK4 along the straight characteristic from the inflow boundary to p,
/// dI/dtau = -k_e I + S with tau the ray parameter (x = x0 + Omega tau).
double oracle_integrate_characteristic(const CaseSpec& spec, const Point& p, int steps);

}  // namespace gradix
