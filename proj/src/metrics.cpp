#include "gradix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "gradix/error.hpp"
#include "gradix/rte.hpp"

namespace gradix {

namespace {

void check_count(std::size_t n, const char* name) {
    if (n == 0) throw UsageError(std::string("bound: ") + name + " must be positive");
}

double koksma(std::size_t n, double power) {
    const double ln = std::log(static_cast<double>(n));
    return std::pow(ln, power) / static_cast<double>(n);
}

const char* bound_kind_name(BoundKind k) { return k == BoundKind::forward ? "forward" : "steady"; }

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_or_inf(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

TestSet test_grid(const CaseSpec& spec, std::size_t n_1d, std::size_t n_2d, std::size_t qmc_points) {
    TestSet out;
    if (spec.direction && !spec.has_time()) {
        const Box box = spec.spatial_box();
        if (spec.spatial_dim == 1) {
            if (n_1d == 0) throw UsageError("test_grid: empty grid");
            const double h = box.x.length() / static_cast<double>(n_1d);
            for (std::size_t i = 0; i < n_1d; ++i) {
                Point p;
                p.x = box.x.lo + (static_cast<double>(i) + 0.5) * h;
                out.points.points.push_back(p);
                out.points.weights.push_back(h);
            }
            out.descriptor = "grid:" + std::to_string(n_1d);
        } else {
            if (n_2d == 0) throw UsageError("test_grid: empty grid");
            const double hx = box.x.length() / static_cast<double>(n_2d);
            const double hy = box.y.length() / static_cast<double>(n_2d);
            for (std::size_t j = 0; j < n_2d; ++j) {
                for (std::size_t i = 0; i < n_2d; ++i) {
                    Point p;
                    p.x = box.x.lo + (static_cast<double>(i) + 0.5) * hx;
                    p.y = box.y.lo + (static_cast<double>(j) + 0.5) * hy;
                    out.points.points.push_back(p);
                    out.points.weights.push_back(hx * hy);
                }
            }
            out.descriptor = "grid:" + std::to_string(n_2d) + "x" + std::to_string(n_2d);
        }
        if (spec.direction) {
            const double phi = std::atan2((*spec.direction)[1], (*spec.direction)[0]);
            for (auto& p : out.points.points) p.phi = phi;
        }
        return out;
    }
    if (qmc_points == 0) throw UsageError("test_grid: empty grid");
    const auto u = sobol(spec.input_dim(), qmc_points);
    double volume = 1.0;
    for (const auto& b : spec.bounds) volume *= b.length();
    for (const auto& row : u) {
        Point p;
        for (std::size_t i = 0; i < spec.coords.size(); ++i) {
            set_coord(p, spec.coords[i], spec.bounds[i].lo + row[i] * spec.bounds[i].length());
        }
        out.points.points.push_back(p);
        out.points.weights.push_back(volume / static_cast<double>(qmc_points));
    }
    out.descriptor = "sobol:" + std::to_string(qmc_points);
    return out;
}

GeneralizationError generalization_error(const ScalarField& predicted, const CaseSpec& spec, const TestSet& test) {
    if (!spec.has_exact()) throw UsageError("generalization_error: case '" + spec.name + "' has no exact solution");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < test.points.size(); ++i) {
        const Point& p = test.points.points[i];
        const double w = test.points.weights[i];
        const double exact = spec.exact(p);
        const double e = predicted(p) - exact;
        num += w * e * e;
        den += w * exact * exact;
    }
    GeneralizationError out;
    out.abs = std::sqrt(num);
    out.rel = den > 0.0 ? out.abs / std::sqrt(den) : out.abs;
    return out;
}

GeneralizationError generalization_error(const MlpParams& params, const CaseSpec& spec, const TestSet& test) {
    return generalization_error(network_field(params, spec), spec, test);
}

double error_total_variation(const ScalarField& predicted, const CaseSpec& spec, const TestSet& test) {
    if (!spec.has_exact()) throw UsageError("error_total_variation: case '" + spec.name + "' has no exact solution");
    double tv = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < test.points.size(); ++i) {
        const Point& p = test.points.points[i];
        const double e = predicted(p) - spec.exact(p);
        if (i > 0) tv += std::abs(e - prev);
        prev = e;
    }
    return tv;
}

double forward_bound(const BoundInputs& in, const FamilyErrors& errors) {
    check_count(in.N_int, "N_int");
    check_count(in.N_sb, "N_sb");
    check_count(in.N_tb, "N_tb");
    check_count(in.N_S, "N_S");
    const double v1 = 2.0 * in.nu * (in.ks_inf + in.sigma_g_inf) / (4.0 * std::numbers::pi);
    const double V = in.T + in.nu * v1 * in.T * in.T * std::exp(in.nu * v1 * in.T);
    const double e_int = errors[0];
    const double e_sb = errors[1];
    const double e_tb = errors[2];
    const double training = e_tb * e_tb + in.nu * e_sb * e_sb + in.c * e_int * e_int;
    const double d2 = 2.0 * in.d;
    const double quadrature = koksma(in.N_tb, d2) + in.c * koksma(in.N_sb, d2) + in.c * koksma(in.N_int, d2 + 1.0) +
                              in.c * std::pow(static_cast<double>(in.N_S), -2.0 * in.a);
    return V * training + V * in.V2 * quadrature;
}

double steady_forward_bound(const BoundInputs& in, const FamilyErrors& errors) {
    if (!(in.l > 0.0)) throw AssumptionError("steady bound requires a positive coercivity margin l");
    check_count(in.N_int, "N_int");
    check_count(in.N_sb, "N_sb");
    check_count(in.N_S, "N_S");
    const double ns = std::pow(static_cast<double>(in.N_S), -2.0 * in.a);
    const double V = std::max({2.0 / in.l, 2.0 / in.l * in.hk_sb * in.hk_sb,
                               2.0 * in.C_eps / in.l * in.hk_int * in.hk_int, 2.0 * in.C_eps / in.l * in.V_bar * ns});
    const double e_int = errors[0];
    const double e_sb = errors[1];
    const double d2 = 2.0 * in.d;
    const double training = in.nu * e_sb * e_sb + in.nu * e_int * e_int;
    const double quadrature = koksma(in.N_sb, d2) + in.nu * koksma(in.N_int, d2) + in.nu * ns;
    return V * training + V * quadrature;
}

ErrorReport report(const TrainResult& result, const CaseSpec& spec, const TestSet& test,
                   const std::optional<BoundInputs>& bound) {
    ErrorReport r;
    r.case_name = result.case_name;
    r.ke = spec.ke;
    r.counts = result.counts;
    r.layers = result.arch.widths.size() >= 2 ? result.arch.widths.size() - 2 : 0;
    r.width = result.arch.widths.size() >= 3 ? result.arch.widths[1] : 0;
    r.lambda = result.loss.lambda;
    r.training = result.training_errors;
    if (spec.has_exact()) r.generalization = generalization_error(result.params, spec, test);
    r.test_set = test.descriptor;
    r.seconds = result.seconds;
    r.seed = result.seed;
    // Both bounds cover forward problems only.
    if (bound && !spec.inverse) {
        BoundInputs in = *bound;
        in.N_int = result.counts.interior;
        in.N_sb = result.counts.spatial_boundary;
        in.N_tb = result.counts.temporal_boundary;
        in.d = spec.spatial_dim;
        if (spec.has_angles() || spec.ks > 0.0) in.N_S = case_scatter_rule(spec).size();
        if (spec.steady) {
            r.bound = BoundValue{BoundKind::steady, steady_forward_bound(in, r.training)};
        } else {
            r.bound = BoundValue{BoundKind::forward, forward_bound(in, r.training)};
        }
    }
    return r;
}

nlohmann::json to_json(const ErrorReport& r) {
    nlohmann::json j;
    j["case"] = r.case_name;
    j["ke"] = r.ke;
    j["N_int"] = r.counts.interior;
    j["N_sb"] = r.counts.spatial_boundary;
    j["N_tb"] = r.counts.temporal_boundary;
    j["N_d"] = r.counts.data;
    j["layers"] = r.layers;
    j["width"] = r.width;
    j["lambda"] = r.lambda;
    j["E_T"] = {{"int", r.training[0]}, {"sb", r.training[1]}, {"tb", r.training[2]}, {"d", r.training[3]}};
    if (r.generalization) {
        j["E_G"] = {{"abs", r.generalization->abs}, {"rel", r.generalization->rel}};
    } else {
        j["E_G"] = nullptr;
    }
    j["test_set"] = r.test_set;
    if (r.bound) {
        j["bound"] = {{bound_kind_name(r.bound->kind), finite_or_null(r.bound->value)}};
    } else {
        j["bound"] = nullptr;
    }
    j["seconds"] = r.seconds;
    j["seed"] = r.seed;
    return j;
}

ErrorReport error_report_from_json(const nlohmann::json& j) {
    ErrorReport r;
    r.case_name = j.at("case").get<std::string>();
    r.ke = j.at("ke").get<double>();
    r.counts.interior = j.at("N_int").get<std::size_t>();
    r.counts.spatial_boundary = j.at("N_sb").get<std::size_t>();
    r.counts.temporal_boundary = j.at("N_tb").get<std::size_t>();
    r.counts.data = j.at("N_d").get<std::size_t>();
    r.layers = j.at("layers").get<std::size_t>();
    r.width = j.at("width").get<std::size_t>();
    r.lambda = j.at("lambda").get<double>();
    const auto& et = j.at("E_T");
    r.training = {et.at("int").get<double>(), et.at("sb").get<double>(), et.at("tb").get<double>(),
                  et.at("d").get<double>()};
    if (!j.at("E_G").is_null()) {
        r.generalization = GeneralizationError{j["E_G"].at("abs").get<double>(), j["E_G"].at("rel").get<double>()};
    }
    r.test_set = j.value("test_set", std::string{});
    if (!j.at("bound").is_null()) {
        const auto& b = j["bound"];
        if (b.contains("forward")) r.bound = BoundValue{BoundKind::forward, number_or_inf(b["forward"])};
        if (b.contains("steady")) r.bound = BoundValue{BoundKind::steady, number_or_inf(b["steady"])};
    }
    r.seconds = j.at("seconds").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

std::string table_header() { return "case,N_int,N_sb,layers,width,lambda,E_T,L2_abs,L2_rel,seconds"; }

std::string table_row(const ErrorReport& r) {
    double et = 0.0;
    for (double e : r.training) et += e * e;
    std::ostringstream os;
    os.precision(6);
    os << r.case_name << ',' << r.counts.interior << ',' << r.counts.spatial_boundary << ',' << r.layers << ','
       << r.width << ',' << r.lambda << ',' << std::sqrt(et) << ',';
    if (r.generalization) {
        os << r.generalization->abs << ',' << r.generalization->rel;
    } else {
        os << ',';
    }
    os << ',' << r.seconds;
    return os.str();
}

}  // namespace gradix
