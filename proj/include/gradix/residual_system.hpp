#pragma once

// Batched evaluation of the training loss.
//
// Every residual used in training is linear in the network:
//   r_j = sum_e a_je I(z_e) + b_je D_{v_e} I(z_e) - target_j
// where z_e are evaluation points (in network coordinates) and v_e a
// per-point tangent seed. ResidualSystem stores that linear structure once
// and evaluates the loss and its parameter gradient with dense matrix
// products, propagating values and tangents through the network together.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <span>
#include <string>
#include <vector>

#include "gradix/case_spec.hpp"
#include "gradix/network.hpp"
#include "gradix/sampling.hpp"

namespace gradix {

enum class Family { interior, spatial_boundary, temporal_boundary, data };

const char* family_name(Family f) noexcept;

struct LossEvaluation {
    double loss = 0.0;
    std::vector<double> gradient;   // empty when not requested
    Eigen::VectorXd residuals;      // one per row
};

class ResidualSystem {
public:
    /// `multipliers` scales each family's quadrature weights inside the loss
    /// (lambda for the interior family, 1 elsewhere, 0 drops a family).
    ResidualSystem(const CaseSpec& spec, const TrainingSet& set, const Architecture& arch,
                   const std::array<double, 4>& multipliers);

    std::size_t rows() const { return target_.size(); }
    std::size_t eval_points() const { return static_cast<std::size_t>(inputs_.cols()); }
    const Architecture& arch() const { return arch_; }

    /// sum_j m_f(j) w_j r_j^2 (no regularization) and optionally its gradient
    /// with respect to the flat parameter vector. Throws NonFiniteError
    /// naming the first non-finite residual. Reuses an internal workspace, so
    /// one system must not be evaluated from two threads at once.
    LossEvaluation evaluate(std::span<const double> params, bool with_gradient) const;

    /// sqrt(sum_j w_j r_j^2) per family, without multipliers.
    std::array<double, 4> training_errors(const Eigen::VectorXd& residuals) const;

    Family family(std::size_t row) const { return family_[row]; }
    const Point& point(std::size_t row) const { return where_[row]; }

private:
    Architecture arch_;
    std::array<double, 4> multipliers_;
    std::vector<Coord> coords_;
    Eigen::MatrixXd inputs_;  // d x M
    Eigen::MatrixXd seeds_;   // d x tangent_cols_; tangent-carrying points come first
    Eigen::SparseMatrix<double, Eigen::RowMajor> value_coef_;
    Eigen::SparseMatrix<double, Eigen::RowMajor> tangent_coef_;
    Eigen::VectorXd target_;
    Eigen::VectorXd weight_;
    Eigen::VectorXd loss_weight_;
    std::vector<Family> family_;
    std::vector<Point> where_;
    std::size_t tangent_cols_ = 0;

    struct Workspace {
        Eigen::VectorXd theta;            // aligned parameter copy
        Eigen::VectorXd grad;
        std::vector<Eigen::MatrixXd> h;   // hidden values
        std::vector<Eigen::MatrixXd> hd;  // hidden tangents
        std::vector<Eigen::MatrixXd> zd;  // pre-activation tangents
        Eigen::VectorXd value;
        Eigen::VectorXd tangent;
        Eigen::MatrixXd gh;
        Eigen::MatrixXd ghd;
        Eigen::MatrixXd gz;
        Eigen::MatrixXd gzd;
        Eigen::ArrayXXd s;
    };
    mutable Workspace workspace_;
};

}  // namespace gradix
