#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "gradix/case_spec.hpp"

namespace gradix {

/// Nodes with positive weights; `order` is the number of nodes per axis for
/// Gauss rules.
struct QuadratureRule {
    std::vector<std::vector<double>> nodes;
    std::vector<double> weights;
    int order = 0;

    std::size_t size() const { return weights.size(); }
    double weight_sum() const;
};

/// First n points of the unscrambled Sobol sequence (Joe-Kuo direction
/// numbers), skipping the initial all-zero point. 1 <= dim <= 8.
std::vector<std::vector<double>> sobol(std::size_t dim, std::size_t n);

/// n-point Gauss-Legendre rule on [a, b], 1 <= n <= 64.
QuadratureRule gauss_legendre(std::size_t n, double a, double b);

/// Product rule over the unit sphere: Gauss-Legendre in cos(theta) times
/// Gauss-Legendre in phi on [0, 2 pi]. Nodes are (theta, phi); weights sum to 4 pi.
QuadratureRule sphere_rule(std::size_t n_polar, std::size_t n_azimuth);

struct PointSet {
    std::vector<Point> points;
    std::vector<double> weights;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    double weight_sum() const;
};

/// The four collocation families. `data_values` holds the measurement g for
/// each data point.
struct TrainingSet {
    PointSet interior;
    PointSet spatial_boundary;
    PointSet temporal_boundary;
    PointSet data;
    std::vector<double> data_values;
};

struct PointCounts {
    std::size_t interior = 0;
    std::size_t spatial_boundary = 0;
    std::size_t temporal_boundary = 0;
    std::size_t data = 0;
};

enum class SamplingStrategy { sobol, uniform_random };

/// Quasi-random (or seeded uniform) collocation points for `spec`. Every
/// family gets equal weights |region| / N.
TrainingSet build_training_set(const CaseSpec& spec, const PointCounts& counts,
                               SamplingStrategy strategy = SamplingStrategy::sobol,
                               std::uint64_t seed = 0);

/// Inflow boundary measure of the case (faces x angular range x time).
double inflow_measure(const CaseSpec& spec);

/// True when p lies on the inflow part of the spatial boundary.
bool on_inflow_boundary(const CaseSpec& spec, const Point& p, double tol = 1e-12);

/// `kind,x[,y][,theta][,phi],weight` rows (t is written first when the case
/// is transient).
void write_training_csv(std::ostream& out, const CaseSpec& spec, const TrainingSet& set);

}  // namespace gradix
