#include "gradix/sampling.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <tuple>
#include <utility>

#include "gradix/error.hpp"

namespace gradix {

namespace {

constexpr std::size_t kSobolBits = 32;
constexpr std::size_t kSobolMaxDim = 8;

struct DirectionEntry {
    unsigned s;
    unsigned a;
    std::array<std::uint32_t, 5> m;
};

// new-joe-kuo-6.21201, dimensions 2..8
constexpr std::array<DirectionEntry, kSobolMaxDim - 1> kJoeKuo{{
    {1, 0, {1, 0, 0, 0, 0}},
    {2, 1, {1, 3, 0, 0, 0}},
    {3, 1, {1, 3, 1, 0, 0}},
    {3, 2, {1, 1, 1, 0, 0}},
    {4, 1, {1, 1, 3, 3, 0}},
    {4, 4, {1, 3, 5, 13, 0}},
    {5, 2, {1, 1, 5, 5, 17}},
}};

std::array<std::uint32_t, kSobolBits> direction_numbers(std::size_t dim) {
    std::array<std::uint32_t, kSobolBits> v{};
    if (dim == 0) {
        for (std::size_t i = 0; i < kSobolBits; ++i) v[i] = 1u << (31 - i);
        return v;
    }
    const auto& e = kJoeKuo[dim - 1];
    for (std::size_t i = 0; i < e.s; ++i) v[i] = e.m[i] << (31 - i);
    for (std::size_t i = e.s; i < kSobolBits; ++i) {
        v[i] = v[i - e.s] ^ (v[i - e.s] >> e.s);
        for (unsigned k = 1; k < e.s; ++k) {
            if ((e.a >> (e.s - 1 - k)) & 1u) v[i] ^= v[i - k];
        }
    }
    return v;
}

// P_n(z) and P_n'(z) by the three-term recurrence.
std::pair<double, double> legendre(std::size_t n, double z) {
    double p0 = 1.0;
    double p1 = z;
    for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
    }
    const double dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
    return {p1, dp};
}

unsigned rightmost_zero_bit(std::uint64_t i) {
    unsigned c = 0;
    while (i & 1u) {
        i >>= 1;
        ++c;
    }
    return c;
}

// Unit-cube sample generator shared by all families.
class UnitSampler {
public:
    UnitSampler(SamplingStrategy strategy, std::size_t dim, std::size_t n, std::uint64_t seed)
        : strategy_(strategy), dim_(dim), rng_(seed) {
        if (strategy_ == SamplingStrategy::sobol && dim_ > 0) points_ = sobol(dim_, n);
    }

    std::vector<double> at(std::size_t i) {
        if (dim_ == 0) return {};
        if (strategy_ == SamplingStrategy::sobol) return points_[i];
        std::vector<double> u(dim_);
        for (auto& v : u) {
            // strictly inside (0, 1)
            do {
                v = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
            } while (v == 0.0);
        }
        return u;
    }

private:
    SamplingStrategy strategy_;
    std::size_t dim_;
    std::mt19937_64 rng_;
    std::vector<std::vector<double>> points_;
};

struct Face {
    Coord normal_axis;  // x or y
    bool at_low;        // face at lo (outward normal -e) or hi (+e)
    double length;
};

// Inflow faces of the spatial box; for angular cases every face admits
// inflow for half of the azimuthal range.
std::vector<Face> inflow_faces(const CaseSpec& spec) {
    std::vector<Face> faces;
    const auto box = spec.spatial_box();
    const double ly = spec.spatial_dim == 2 ? box.y.length() : 1.0;
    const double lx = box.x.length();
    if (spec.has_angles()) {
        faces.push_back({Coord::x, true, ly});
        faces.push_back({Coord::x, false, ly});
        if (spec.spatial_dim == 2) {
            faces.push_back({Coord::y, true, lx});
            faces.push_back({Coord::y, false, lx});
        }
        return faces;
    }
    const auto dir = *spec.direction;
    if (dir[0] > 0) faces.push_back({Coord::x, true, ly});
    if (dir[0] < 0) faces.push_back({Coord::x, false, ly});
    if (spec.spatial_dim == 2) {
        if (dir[1] > 0) faces.push_back({Coord::y, true, lx});
        if (dir[1] < 0) faces.push_back({Coord::y, false, lx});
    }
    return faces;
}

// Azimuth range [start, start + pi) whose directions enter through the face.
double inflow_phi_start(const Face& f) {
    constexpr double pi = std::numbers::pi;
    if (f.normal_axis == Coord::x) return f.at_low ? -pi / 2 : pi / 2;
    return f.at_low ? 0.0 : pi;
}

double wrap_angle(double phi) {
    constexpr double two_pi = 2 * std::numbers::pi;
    phi = std::fmod(phi, two_pi);
    return phi < 0 ? phi + two_pi : phi;
}

double lerp(const Interval& iv, double u) { return iv.lo + u * iv.length(); }

std::vector<Coord> free_boundary_coords(const CaseSpec& spec) {
    std::vector<Coord> out;
    for (auto c : spec.coords) {
        if (c == Coord::x || c == Coord::y || c == Coord::phi) continue;
        out.push_back(c);
    }
    return out;
}

}  // namespace

double QuadratureRule::weight_sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

double PointSet::weight_sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

std::vector<std::vector<double>> sobol(std::size_t dim, std::size_t n) {
    if (dim < 1 || dim > kSobolMaxDim) {
        throw UsageError("sobol: dimension " + std::to_string(dim) + " unsupported (1..8)");
    }
    if (n < 1) throw UsageError("sobol: need at least one point");
    if (n >= (std::size_t{1} << kSobolBits)) throw UsageError("sobol: too many points");
    std::vector<std::array<std::uint32_t, kSobolBits>> v;
    for (std::size_t d = 0; d < dim; ++d) v.push_back(direction_numbers(d));

    std::vector<std::vector<double>> out;
    out.reserve(n);
    std::vector<std::uint32_t> x(dim, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        const unsigned c = rightmost_zero_bit(i - 1);
        std::vector<double> p(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            x[d] ^= v[d][c];
            p[d] = static_cast<double>(x[d]) * 0x1.0p-32;
        }
        out.push_back(std::move(p));
    }
    return out;
}

QuadratureRule gauss_legendre(std::size_t n, double a, double b) {
    if (n < 1 || n > 64) throw UsageError("gauss_legendre: n must be in 1..64");
    if (!(a < b)) throw UsageError("gauss_legendre: need a < b");
    QuadratureRule rule;
    rule.order = static_cast<int>(n);
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        auto [p, dp] = legendre(n, z);
        for (int iter = 0; iter < 100; ++iter) {
            const double dz = p / dp;
            z -= dz;
            std::tie(p, dp) = legendre(n, z);
            if (std::abs(dz) < 1e-14) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[i] = {mid - half * z};
        rule.nodes[n - 1 - i] = {mid + half * z};
        rule.weights[i] = half * w;
        rule.weights[n - 1 - i] = half * w;
    }
    return rule;
}

QuadratureRule sphere_rule(std::size_t n_polar, std::size_t n_azimuth) {
    const auto polar = gauss_legendre(n_polar, -1.0, 1.0);
    const auto azimuth = gauss_legendre(n_azimuth, 0.0, 2.0 * std::numbers::pi);
    QuadratureRule rule;
    rule.order = static_cast<int>(std::min(n_polar, n_azimuth));
    for (std::size_t i = 0; i < polar.size(); ++i) {
        const double theta = std::acos(polar.nodes[i][0]);
        for (std::size_t j = 0; j < azimuth.size(); ++j) {
            rule.nodes.push_back({theta, azimuth.nodes[j][0]});
            rule.weights.push_back(polar.weights[i] * azimuth.weights[j]);
        }
    }
    return rule;
}

double inflow_measure(const CaseSpec& spec) {
    double m = 0.0;
    for (const auto& f : inflow_faces(spec)) m += f.length;
    if (spec.has_angles()) m *= spec.bound(Coord::theta).length() * std::numbers::pi;
    if (spec.has_time()) m *= spec.bound(Coord::t).length();
    return m;
}

bool on_inflow_boundary(const CaseSpec& spec, const Point& p, double tol) {
    const auto box = spec.spatial_box();
    const auto om = spec.omega(p);
    auto near = [tol](double a, double b) { return std::abs(a - b) <= tol; };
    if (near(p.x, box.x.lo) && om[0] > 0) return true;
    if (near(p.x, box.x.hi) && om[0] < 0) return true;
    if (spec.spatial_dim == 2) {
        if (near(p.y, box.y.lo) && om[1] > 0) return true;
        if (near(p.y, box.y.hi) && om[1] < 0) return true;
    }
    return false;
}

TrainingSet build_training_set(const CaseSpec& spec, const PointCounts& counts, SamplingStrategy strategy,
                               std::uint64_t seed) {
    spec.validate();
    if (spec.steady && counts.temporal_boundary > 0) {
        throw UsageError("build_training_set: steady case '" + spec.name + "' takes no temporal points");
    }
    if (counts.data > 0 && !spec.data_region) {
        throw UsageError("build_training_set: case '" + spec.name + "' declares no data subdomain");
    }
    TrainingSet set;
    const std::size_t dim = spec.input_dim();

    double volume = 1.0;
    for (const auto& b : spec.bounds) volume *= b.length();

    if (counts.interior > 0) {
        UnitSampler sampler(strategy, dim, counts.interior, seed ^ 0x9e3779b97f4a7c15ULL);
        for (std::size_t i = 0; i < counts.interior; ++i) {
            const auto u = sampler.at(i);
            Point p;
            for (std::size_t k = 0; k < dim; ++k) set_coord(p, spec.coords[k], lerp(spec.bounds[k], u[k]));
            set.interior.points.push_back(p);
            set.interior.weights.push_back(volume / static_cast<double>(counts.interior));
        }
    }

    if (counts.spatial_boundary > 0) {
        const auto faces = inflow_faces(spec);
        if (faces.empty()) throw UsageError("build_training_set: case has no inflow boundary");
        double total = 0.0;
        for (const auto& f : faces) total += f.length;
        const auto extra = free_boundary_coords(spec);
        const bool along = spec.spatial_dim == 2;
        const std::size_t sdim = 1 + (along ? 1 : 0) + extra.size() + (spec.has_angles() ? 1 : 0);
        UnitSampler sampler(strategy, sdim, counts.spatial_boundary, seed ^ 0xbf58476d1ce4e5b9ULL);
        const double w = inflow_measure(spec) / static_cast<double>(counts.spatial_boundary);
        const auto box = spec.spatial_box();
        for (std::size_t i = 0; i < counts.spatial_boundary; ++i) {
            const auto u = sampler.at(i);
            std::size_t next = 0;
            // face choice proportional to face length
            double pick = u[next++] * total;
            std::size_t fi = 0;
            while (fi + 1 < faces.size() && pick >= faces[fi].length) {
                pick -= faces[fi].length;
                ++fi;
            }
            const Face& f = faces[fi];
            Point p;
            if (f.normal_axis == Coord::x) {
                p.x = f.at_low ? box.x.lo : box.x.hi;
                if (along) p.y = lerp(box.y, u[next++]);
            } else {
                p.y = f.at_low ? box.y.lo : box.y.hi;
                p.x = lerp(box.x, u[next++]);
            }
            for (auto c : extra) set_coord(p, c, lerp(spec.bound(c), u[next++]));
            if (spec.has_angles()) p.phi = wrap_angle(inflow_phi_start(f) + std::numbers::pi * u[next++]);
            set.spatial_boundary.points.push_back(p);
            set.spatial_boundary.weights.push_back(w);
        }
    }

    if (counts.temporal_boundary > 0) {
        std::vector<std::size_t> idx;
        double measure = 1.0;
        for (std::size_t k = 0; k < dim; ++k) {
            if (spec.coords[k] == Coord::t) continue;
            idx.push_back(k);
            measure *= spec.bounds[k].length();
        }
        UnitSampler sampler(strategy, idx.size(), counts.temporal_boundary, seed ^ 0x94d049bb133111ebULL);
        for (std::size_t i = 0; i < counts.temporal_boundary; ++i) {
            const auto u = sampler.at(i);
            Point p;
            p.t = spec.bound(Coord::t).lo;
            for (std::size_t j = 0; j < idx.size(); ++j) {
                set_coord(p, spec.coords[idx[j]], lerp(spec.bounds[idx[j]], u[j]));
            }
            set.temporal_boundary.points.push_back(p);
            set.temporal_boundary.weights.push_back(measure / static_cast<double>(counts.temporal_boundary));
        }
    }

    if (counts.data > 0) {
        if (!spec.has_exact()) throw UsageError("build_training_set: data family needs measurements");
        const Box region = *spec.data_region;
        double measure = 1.0;
        std::vector<Interval> ranges;
        for (std::size_t k = 0; k < dim; ++k) {
            Interval r = spec.bounds[k];
            if (spec.coords[k] == Coord::x) r = region.x;
            if (spec.coords[k] == Coord::y) r = region.y;
            ranges.push_back(r);
            measure *= r.length();
        }
        UnitSampler sampler(strategy, dim, counts.data, seed ^ 0xd6e8feb86659fd93ULL);
        for (std::size_t i = 0; i < counts.data; ++i) {
            const auto u = sampler.at(i);
            Point p;
            for (std::size_t k = 0; k < dim; ++k) set_coord(p, spec.coords[k], lerp(ranges[k], u[k]));
            set.data.points.push_back(p);
            set.data.weights.push_back(measure / static_cast<double>(counts.data));
            set.data_values.push_back(spec.exact(p));
        }
    }
    return set;
}

void write_training_csv(std::ostream& out, const CaseSpec& spec, const TrainingSet& set) {
    std::vector<Coord> cols;
    if (spec.has_time()) cols.push_back(Coord::t);
    cols.push_back(Coord::x);
    if (spec.spatial_dim == 2) cols.push_back(Coord::y);
    if (spec.has_angles()) {
        cols.push_back(Coord::theta);
        cols.push_back(Coord::phi);
    }
    out << "kind";
    for (auto c : cols) out << ',' << coord_name(c);
    out << ",weight\n";
    const auto old = out.precision(17);
    auto dump = [&](const char* kind, const PointSet& ps) {
        for (std::size_t i = 0; i < ps.size(); ++i) {
            out << kind;
            for (auto c : cols) out << ',' << coord_of(ps.points[i], c);
            out << ',' << ps.weights[i] << '\n';
        }
    };
    dump("interior", set.interior);
    dump("spatial_boundary", set.spatial_boundary);
    dump("temporal_boundary", set.temporal_boundary);
    dump("data", set.data);
    out.precision(old);
}

}  // namespace gradix
