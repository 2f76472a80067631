#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "collapsim/state_space.hpp"

namespace collapsim {

inline constexpr double kDefaultWhiteningThreshold = 1e-12;

/// Noise correlation D_jk = exp(-(x_j - x_k)^2 / (4 r_C^2)) sampled on the lattice.
struct KernelMatrix {
    Eigen::MatrixXd values;
    double correlation_length = 1.0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

KernelMatrix gaussian_kernel(const LatticeGrid& grid, double correlation_length);

/// Factor S with S * S^T = D, columns ordered by descending eigenvalue.
struct WhiteningTransform {
    Eigen::MatrixXd factor;        // M x K
    Eigen::VectorXd eigenvalues;   // retained, descending
    double threshold = kDefaultWhiteningThreshold;
    double correlation_length = 1.0;

    std::size_t rank() const noexcept { return static_cast<std::size_t>(factor.cols()); }
};

WhiteningTransform whiten(const KernelMatrix& kernel, double threshold = kDefaultWhiteningThreshold);

enum class CollapseModel { Generic, CSL, GRWReference };

std::string_view to_string(CollapseModel model);

/// Collapse operators L_k with the coupling already folded in.
class CollapseOperatorSet {
public:
    CollapseOperatorSet() = default;
    CollapseOperatorSet(std::vector<Operator> ops, CollapseModel model, double rate,
                        double correlation_length);

    const std::vector<Operator>& operators() const noexcept { return ops_; }
    std::size_t size() const noexcept { return ops_.size(); }
    bool empty() const noexcept { return ops_.empty(); }
    CollapseModel model() const noexcept { return model_; }
    double rate() const noexcept { return rate_; }
    double correlation_length() const noexcept { return correlation_length_; }

    bool all_hermitian() const noexcept { return all_hermitian_; }
    bool all_diagonal() const noexcept { return all_diagonal_; }

    /// K x dim matrix of diagonal values; valid only when all_diagonal().
    const Eigen::MatrixXd& diagonal_table() const noexcept { return diagonal_table_; }

    /// max_k ||L_k||^2.
    double max_norm_squared() const;
    /// sum_k ||L_k||^2.
    double sum_norm_squared() const;

    /// Largest ||[L_j, L_k]|| over all pairs, entrywise max norm.
    double max_commutator() const;

private:
    std::vector<Operator> ops_;
    CollapseModel model_ = CollapseModel::Generic;
    double rate_ = 0.0;
    double correlation_length_ = 0.0;
    bool all_hermitian_ = true;
    bool all_diagonal_ = true;
    Eigen::MatrixXd diagonal_table_;
};

/// Wraps arbitrary operators for the generic collapse equation.
CollapseOperatorSet generic_operators(std::vector<Operator> ops, double rate = 0.0);

/// L_k = sqrt(rate) * sum_j S_jk n_j, one operator per retained whitening mode.
CollapseOperatorSet csl_operators(const LatticeGrid& grid, const std::vector<Operator>& site_ops,
                                  double rate, const WhiteningTransform& whitening);

struct LocalizationResult {
    StateVector state;
    double weight;  // squared norm before renormalization
};

/// One GRW hit on particle `particle` centered at `center`.
LocalizationResult grw_localization(const StateVector& state, const LatticeGrid& grid,
                                    std::size_t particle, double center, double correlation_length);

/// Normalized probabilities of a hit on `particle` being centered at each lattice site.
std::vector<double> grw_center_probabilities(const StateVector& state, const LatticeGrid& grid,
                                             std::size_t particle, double correlation_length);

}  // namespace collapsim
