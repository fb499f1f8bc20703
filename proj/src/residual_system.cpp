#include "gradix/residual_system.hpp"

#include <cmath>
#include <sstream>

#include "gradix/error.hpp"
#include "gradix/rte.hpp"

namespace gradix {

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct Term {
    std::size_t row;
    bool tangent_group;
    std::size_t col;
    double value_coef;
    double tangent_coef;
};

class Builder {
public:
    explicit Builder(const CaseSpec& spec) : spec_(spec) {}

    std::size_t tangent_point(const Point& p, const std::vector<double>& physical_seed) {
        std::vector<double> seed(physical_seed.size());
        for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = physical_seed[i] * spec_.input_scale(i);
        tangent_inputs.push_back(spec_.network_input(p));
        tangent_seeds.push_back(std::move(seed));
        return tangent_inputs.size() - 1;
    }

    std::size_t value_point(const Point& p) {
        value_inputs.push_back(spec_.network_input(p));
        return value_inputs.size() - 1;
    }

    std::size_t row(Family f, const Point& p, double weight, double target) {
        families.push_back(f);
        points.push_back(p);
        weights.push_back(weight);
        targets.push_back(target);
        return targets.size() - 1;
    }

    const CaseSpec& spec_;
    std::vector<std::vector<double>> tangent_inputs;
    std::vector<std::vector<double>> tangent_seeds;
    std::vector<std::vector<double>> value_inputs;
    std::vector<Term> terms;
    std::vector<Family> families;
    std::vector<Point> points;
    std::vector<double> weights;
    std::vector<double> targets;
};

void require_finite(double v, Family f, const Point& p, const std::vector<Coord>& coords) {
    if (std::isfinite(v)) return;
    std::ostringstream msg;
    msg << "non-finite " << family_name(f) << " residual at (";
    for (std::size_t i = 0; i < coords.size(); ++i) {
        msg << (i ? ", " : "") << coord_name(coords[i]) << "=" << coord_of(p, coords[i]);
    }
    msg << ")";
    throw NonFiniteError(msg.str());
}

}  // namespace

const char* family_name(Family f) noexcept {
    switch (f) {
        case Family::interior: return "interior";
        case Family::spatial_boundary: return "spatial_boundary";
        case Family::temporal_boundary: return "temporal_boundary";
        case Family::data: return "data";
    }
    return "?";
}

ResidualSystem::ResidualSystem(const CaseSpec& spec, const TrainingSet& set, const Architecture& arch,
                               const std::array<double, 4>& multipliers)
    : arch_(arch), multipliers_(multipliers), coords_(spec.coords) {
    spec.validate();
    arch.validate();
    if (arch.input_dim() != spec.input_dim()) {
        throw UsageError("network takes " + std::to_string(arch.input_dim()) + " inputs but case '" + spec.name +
                         "' has " + std::to_string(spec.input_dim()));
    }
    Builder b(spec);

    for (std::size_t i = 0; i < set.interior.size(); ++i) {
        const Point& p = set.interior.points[i];
        const auto st = interior_stencil(spec, p);
        require_finite(st.source, Family::interior, p, spec.coords);
        const std::size_t row = b.row(Family::interior, p, set.interior.weights[i], st.source);
        const std::size_t col = b.tangent_point(p, st.seed);
        b.terms.push_back({row, true, col, st.value_coef, 1.0});
        for (const auto& [q, coef] : st.couplings) {
            b.terms.push_back({row, false, b.value_point(q), coef, 0.0});
        }
    }
    auto plain = [&](Family f, const PointSet& ps, auto&& target_of) {
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const Point& p = ps.points[i];
            const double target = target_of(i, p);
            require_finite(target, f, p, spec.coords);
            const std::size_t row = b.row(f, p, ps.weights[i], target);
            b.terms.push_back({row, false, b.value_point(p), 1.0, 0.0});
        }
    };
    plain(Family::spatial_boundary, set.spatial_boundary, [&](std::size_t, const Point& p) { return spec.boundary(p); });
    plain(Family::temporal_boundary, set.temporal_boundary, [&](std::size_t, const Point& p) { return spec.initial(p); });
    plain(Family::data, set.data, [&](std::size_t i, const Point&) { return set.data_values.at(i); });

    const std::size_t d = spec.input_dim();
    tangent_cols_ = b.tangent_inputs.size();
    const std::size_t m = tangent_cols_ + b.value_inputs.size();
    inputs_.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
    seeds_.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(tangent_cols_));
    for (std::size_t j = 0; j < tangent_cols_; ++j) {
        for (std::size_t i = 0; i < d; ++i) {
            inputs_(i, j) = b.tangent_inputs[j][i];
            seeds_(i, j) = b.tangent_seeds[j][i];
        }
    }
    for (std::size_t j = 0; j < b.value_inputs.size(); ++j) {
        for (std::size_t i = 0; i < d; ++i) inputs_(i, tangent_cols_ + j) = b.value_inputs[j][i];
    }

    const std::size_t n = b.targets.size();
    std::vector<Eigen::Triplet<double>> a;
    std::vector<Eigen::Triplet<double>> t;
    for (const auto& term : b.terms) {
        const auto r = static_cast<Eigen::Index>(term.row);
        const auto c = static_cast<Eigen::Index>(term.tangent_group ? term.col : tangent_cols_ + term.col);
        if (term.value_coef != 0.0) a.emplace_back(r, c, term.value_coef);
        if (term.tangent_coef != 0.0) t.emplace_back(r, c, term.tangent_coef);
    }
    value_coef_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    value_coef_.setFromTriplets(a.begin(), a.end());
    tangent_coef_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(tangent_cols_));
    tangent_coef_.setFromTriplets(t.begin(), t.end());

    target_ = Eigen::Map<const Eigen::VectorXd>(b.targets.data(), static_cast<Eigen::Index>(n));
    weight_ = Eigen::Map<const Eigen::VectorXd>(b.weights.data(), static_cast<Eigen::Index>(n));
    loss_weight_ = weight_;
    for (std::size_t j = 0; j < n; ++j) {
        loss_weight_[static_cast<Eigen::Index>(j)] *= multipliers_[static_cast<std::size_t>(b.families[j])];
    }
    family_ = std::move(b.families);
    where_ = std::move(b.points);
}

LossEvaluation ResidualSystem::evaluate(std::span<const double> params, bool with_gradient) const {
    if (params.size() != param_count(arch_)) throw UsageError("ResidualSystem: parameter vector has wrong length");
    const std::size_t layers = arch_.widths.size() - 1;
    const auto nt = static_cast<Eigen::Index>(tangent_cols_);
    auto& ws = workspace_;
    ws.h.resize(layers);
    ws.hd.resize(layers);
    ws.zd.resize(layers);

    std::vector<std::size_t> offset(layers);
    std::size_t off = 0;
    for (std::size_t k = 0; k < layers; ++k) {
        offset[k] = off;
        off += (arch_.widths[k] + 1) * arch_.widths[k + 1];
    }
    // Aligned copies keep vectorized reductions independent of the caller's
    // buffer address, so results are reproducible.
    ws.theta = Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size()));
    const double* theta = ws.theta.data();
    auto weight = [&](std::size_t k) {
        return RowMajorMap(theta + offset[k], static_cast<Eigen::Index>(arch_.widths[k + 1]),
                           static_cast<Eigen::Index>(arch_.widths[k]));
    };
    auto bias = [&](std::size_t k) {
        return Eigen::Map<const Eigen::VectorXd>(theta + offset[k] + arch_.widths[k] * arch_.widths[k + 1],
                                                 static_cast<Eigen::Index>(arch_.widths[k + 1]));
    };

    // Forward sweep of values and tangents.
    const Eigen::MatrixXd* prev = &inputs_;
    const Eigen::MatrixXd* prev_d = &seeds_;
    for (std::size_t k = 0; k + 1 < layers; ++k) {
        const auto w = weight(k);
        auto& h = ws.h[k];
        h.noalias() = w * *prev;
        h.colwise() += bias(k);
        h = h.array().tanh().matrix();
        ws.zd[k].noalias() = w * *prev_d;
        ws.hd[k] = (1.0 - h.leftCols(nt).array().square()) * ws.zd[k].array();
        prev = &h;
        prev_d = &ws.hd[k];
    }
    const auto w_out = weight(layers - 1);
    const double b_out = bias(layers - 1)[0];
    ws.value.noalias() = (w_out * *prev).transpose();
    ws.value.array() += b_out;
    ws.tangent.noalias() = (w_out * *prev_d).transpose();

    LossEvaluation out;
    out.residuals = value_coef_ * ws.value + tangent_coef_ * ws.tangent - target_;
    out.loss = loss_weight_.dot(out.residuals.cwiseAbs2());
    if (!std::isfinite(out.loss)) {
        for (Eigen::Index j = 0; j < out.residuals.size(); ++j) {
            if (!std::isfinite(out.residuals[j])) {
                require_finite(out.residuals[j], family_[static_cast<std::size_t>(j)],
                               where_[static_cast<std::size_t>(j)], coords_);
            }
        }
        throw NonFiniteError("non-finite loss");
    }
    if (!with_gradient) return out;

    // Reverse sweep.
    ws.grad.setZero(static_cast<Eigen::Index>(params.size()));
    double* grad = ws.grad.data();
    const Eigen::VectorXd u = 2.0 * loss_weight_.cwiseProduct(out.residuals);
    const Eigen::RowVectorXd g_value = (value_coef_.transpose() * u).transpose();
    const Eigen::RowVectorXd g_tangent = (tangent_coef_.transpose() * u).transpose();
    {
        const std::size_t k = layers - 1;
        RowMajorMutMap dw(grad + offset[k], 1, static_cast<Eigen::Index>(arch_.widths[k]));
        dw.noalias() = g_value * prev->transpose();
        dw.noalias() += g_tangent * prev_d->transpose();
        grad[offset[k] + arch_.widths[k]] = g_value.sum();
    }
    ws.gh.noalias() = w_out.transpose() * g_value;
    ws.ghd.noalias() = w_out.transpose() * g_tangent;
    for (std::size_t k = layers - 1; k-- > 0;) {
        const Eigen::MatrixXd& below = k == 0 ? inputs_ : ws.h[k - 1];
        const Eigen::MatrixXd& below_d = k == 0 ? seeds_ : ws.hd[k - 1];
        const auto& h = ws.h[k];
        ws.s = 1.0 - h.array().square();
        ws.gz = ws.gh.array() * ws.s;
        ws.gz.leftCols(nt).array() -=
            2.0 * h.leftCols(nt).array() * ws.ghd.array() * ws.zd[k].array() * ws.s.leftCols(nt);
        ws.gzd = ws.ghd.array() * ws.s.leftCols(nt);
        const auto rows = static_cast<Eigen::Index>(arch_.widths[k + 1]);
        const auto cols = static_cast<Eigen::Index>(arch_.widths[k]);
        RowMajorMutMap dw(grad + offset[k], rows, cols);
        dw.noalias() = ws.gz * below.transpose();
        dw.noalias() += ws.gzd * below_d.transpose();
        Eigen::Map<Eigen::VectorXd>(grad + offset[k] + arch_.widths[k] * arch_.widths[k + 1], rows) =
            ws.gz.rowwise().sum();
        if (k > 0) {
            const auto w = weight(k);
            ws.gh.noalias() = w.transpose() * ws.gz;
            ws.ghd.noalias() = w.transpose() * ws.gzd;
        }
    }
    out.gradient.assign(ws.grad.data(), ws.grad.data() + ws.grad.size());
    return out;
}

std::array<double, 4> ResidualSystem::training_errors(const Eigen::VectorXd& residuals) const {
    std::array<double, 4> sums{};
    for (Eigen::Index j = 0; j < residuals.size(); ++j) {
        sums[static_cast<std::size_t>(family_[static_cast<std::size_t>(j)])] += weight_[j] * residuals[j] * residuals[j];
    }
    for (auto& v : sums) v = std::sqrt(v);
    return sums;
}

}  // namespace gradix
