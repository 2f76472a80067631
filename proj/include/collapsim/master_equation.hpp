#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "collapsim/collapse_operators.hpp"
#include "collapsim/state_space.hpp"

namespace collapsim {

/// Oracle step-size budget: dt * (||H|| + sum_k ||L_k||^2) must not exceed this.
inline constexpr double kOracleStepBudget = 0.1;

struct DensityMatrix {
    Eigen::MatrixXcd values;

    static DensityMatrix pure(const StateVector& psi);

    std::size_t dimension() const noexcept { return static_cast<std::size_t>(values.rows()); }
    double trace() const { return values.trace().real(); }
    double hermiticity_error() const { return (values - values.adjoint()).cwiseAbs().maxCoeff(); }
    double min_eigenvalue() const;
    /// Throws DegenerateInput if Hermiticity, trace or positivity fail their tolerances.
    void validate() const;
};

/// dρ/dt = -i[H, ρ] + sum_k (L_k ρ L_k - 1/2 {L_k^2, ρ}) for Hermitian L_k.
class LindbladGenerator {
public:
    LindbladGenerator(const Operator& hamiltonian, const CollapseOperatorSet& ops);

    Eigen::MatrixXcd operator()(const Eigen::MatrixXcd& rho) const;

    /// ||H|| + sum_k ||L_k||^2.
    double scale() const noexcept { return scale_; }
    std::size_t dimension() const noexcept { return dimension_; }

private:
    std::size_t dimension_;
    Eigen::MatrixXcd hamiltonian_;
    bool hamiltonian_zero_;
    bool diagonal_;
    Eigen::MatrixXd dephasing_;  // elementwise factor, diagonal families
    std::vector<Eigen::MatrixXcd> ops_;
    Eigen::MatrixXcd gram_sum_;  // sum_k L_k^2
    double scale_ = 0.0;
};

Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const Operator& hamiltonian,
                              const CollapseOperatorSet& ops);

struct DensitySeries {
    std::vector<double> times;
    std::vector<Eigen::MatrixXcd> states;
    double max_trace_error = 0.0;
    double min_eigenvalue = 0.0;
    bool positivity_violated = false;  // some eigenvalue below -1e-6
};

/// Fixed-step RK4; records at the same step indices as IntegratorConfig::record_steps().
DensitySeries evolve_density(const Eigen::MatrixXcd& rho0, const Operator& hamiltonian,
                             const CollapseOperatorSet& ops, double dt, double horizon, std::size_t stride = 1);

/// Coherence decay rate between two sites a distance d apart: λ (1 - exp(-d^2 / (4 r_C^2))).
double csl_two_point_rate(double distance, double rate, double correlation_length);

/// d<H>/dt under the dissipator alone: sum_k tr((L_k ρ L_k - 1/2 {L_k^2, ρ}) H).
double energy_growth_rate(const Eigen::MatrixXcd& rho, const Operator& hamiltonian,
                          const CollapseOperatorSet& ops);

/// (1/2) ||A - B||_1 for Hermitian A, B.
double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

}  // namespace collapsim
