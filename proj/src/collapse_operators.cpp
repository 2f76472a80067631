#include "collapsim/collapse_operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "collapsim/error.hpp"

namespace collapsim {

std::string_view to_string(CollapseModel model) {
    switch (model) {
    case CollapseModel::Generic: return "generic";
    case CollapseModel::CSL: return "CSL";
    case CollapseModel::GRWReference: return "GRW-reference";
    }
    return "unknown";
}

KernelMatrix gaussian_kernel(const LatticeGrid& grid, double correlation_length) {
    require(correlation_length > 0.0 && std::isfinite(correlation_length), ErrorKind::Configuration,
            "correlation length r_C must be positive");
    const auto m = static_cast<Eigen::Index>(grid.sites());
    KernelMatrix kernel{Eigen::MatrixXd(m, m), correlation_length};
    const double inv = 1.0 / (4.0 * correlation_length * correlation_length);
    for (Eigen::Index j = 0; j < m; ++j) {
        kernel.values(j, j) = 1.0;
        for (Eigen::Index k = 0; k < j; ++k) {
            const double dx = grid.position(static_cast<std::size_t>(j)) - grid.position(static_cast<std::size_t>(k));
            const double v = std::exp(-dx * dx * inv);
            kernel.values(j, k) = v;
            kernel.values(k, j) = v;
        }
    }
    return kernel;
}

WhiteningTransform whiten(const KernelMatrix& kernel, double threshold) {
    require(threshold >= 0.0 && threshold < 1.0, ErrorKind::Configuration,
            "whitening threshold must lie in [0, 1)");
    require(kernel.values.rows() == kernel.values.cols() && kernel.values.rows() > 0,
            ErrorKind::Configuration, "kernel must be a non-empty square matrix");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(kernel.values);
    require(solver.info() == Eigen::Success, ErrorKind::KernelIntegrity,
            "kernel eigendecomposition failed");
    const Eigen::VectorXd& e = solver.eigenvalues();
    const double emax = e.maxCoeff();
    require(emax > 0.0, ErrorKind::KernelIntegrity, "kernel has no positive eigenvalue");
    if (e.minCoeff() < -1e-8 * emax) {
        std::ostringstream msg;
        msg << "kernel has eigenvalue " << e.minCoeff() << " below -1e-8 * max(e); not positive semidefinite";
        fail(ErrorKind::KernelIntegrity, msg.str());
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(e.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return e(a) > e(b); });

    std::vector<Eigen::Index> kept;
    for (const auto i : order)
        if (e(i) > threshold * emax) kept.push_back(i);

    WhiteningTransform w;
    w.threshold = threshold;
    w.correlation_length = kernel.correlation_length;
    w.factor.resize(kernel.values.rows(), static_cast<Eigen::Index>(kept.size()));
    w.eigenvalues.resize(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        const double ev = std::max(e(kept[c]), 0.0);
        w.eigenvalues(col) = ev;
        w.factor.col(col) = solver.eigenvectors().col(kept[c]) * std::sqrt(ev);
    }
    return w;
}

// ---------------------------------------------------------------------------

CollapseOperatorSet::CollapseOperatorSet(std::vector<Operator> ops, CollapseModel model, double rate,
                                         double correlation_length)
    : ops_(std::move(ops)), model_(model), rate_(rate), correlation_length_(correlation_length) {
    const std::size_t dim = ops_.empty() ? 0 : ops_.front().dimension();
    for (const auto& op : ops_) {
        require(op.dimension() == dim, ErrorKind::Configuration,
                "collapse operators must share one dimension");
        all_hermitian_ = all_hermitian_ && op.is_hermitian();
        all_diagonal_ = all_diagonal_ && op.is_diagonal();
    }
    if (all_diagonal_ && !ops_.empty()) {
        diagonal_table_.resize(static_cast<Eigen::Index>(ops_.size()), static_cast<Eigen::Index>(dim));
        for (std::size_t k = 0; k < ops_.size(); ++k)
            diagonal_table_.row(static_cast<Eigen::Index>(k)) = ops_[k].diagonal_values().transpose();
    }
}

double CollapseOperatorSet::max_norm_squared() const {
    double best = 0.0;
    for (const auto& op : ops_) best = std::max(best, op.norm() * op.norm());
    return best;
}

double CollapseOperatorSet::sum_norm_squared() const {
    double total = 0.0;
    for (const auto& op : ops_) total += op.norm() * op.norm();
    return total;
}

double CollapseOperatorSet::max_commutator() const {
    if (all_diagonal_) return 0.0;
    double worst = 0.0;
    for (std::size_t a = 0; a < ops_.size(); ++a) {
        const Eigen::MatrixXcd la = ops_[a].to_dense();
        for (std::size_t b = a + 1; b < ops_.size(); ++b) {
            const Eigen::MatrixXcd lb = ops_[b].to_dense();
            worst = std::max(worst, (la * lb - lb * la).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

CollapseOperatorSet generic_operators(std::vector<Operator> ops, double rate) {
    return CollapseOperatorSet(std::move(ops), CollapseModel::Generic, rate, 0.0);
}

CollapseOperatorSet csl_operators(const LatticeGrid& grid, const std::vector<Operator>& site_ops, double rate,
                                  const WhiteningTransform& whitening) {
    require(rate >= 0.0 && std::isfinite(rate), ErrorKind::Configuration, "collapse rate must be >= 0");
    require(site_ops.size() == grid.sites(), ErrorKind::Configuration,
            "need one site number operator per lattice site");
    require(static_cast<std::size_t>(whitening.factor.rows()) == grid.sites(), ErrorKind::Configuration,
            "whitening factor does not match the lattice");
    const std::size_t dim = site_ops.front().dimension();
    const double coupling = std::sqrt(rate);
    const bool diagonal = std::all_of(site_ops.begin(), site_ops.end(), [](const Operator& op) { return op.is_diagonal(); });

    std::vector<Operator> ops;
    ops.reserve(whitening.rank());
    for (Eigen::Index k = 0; k < whitening.factor.cols(); ++k) {
        if (diagonal) {
            Eigen::VectorXd values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
            for (std::size_t j = 0; j < site_ops.size(); ++j)
                values += whitening.factor(static_cast<Eigen::Index>(j), k) * site_ops[j].diagonal_values();
            ops.push_back(Operator::diagonal(coupling * values));
        } else {
            Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
            for (std::size_t j = 0; j < site_ops.size(); ++j)
                sum += whitening.factor(static_cast<Eigen::Index>(j), k) * site_ops[j].to_dense();
            ops.push_back(Operator::dense(coupling * sum));
        }
    }
    return CollapseOperatorSet(std::move(ops), CollapseModel::CSL, rate, whitening.correlation_length);
}

// ---------------------------------------------------------------------------
// GRW hits

namespace {

void check_grw_inputs(const StateVector& state, const LatticeGrid& grid, std::size_t particle,
                      double correlation_length) {
    const Basis& basis = *state.basis();
    require(basis.statistics() == Statistics::Distinguishable || basis.particles() == 1,
            ErrorKind::Configuration, "GRW hits act on distinguishable particles only");
    require(basis.sites() == grid.sites(), ErrorKind::Configuration, "state does not match the lattice");
    require(particle < basis.particles(), ErrorKind::Configuration, "particle index out of range");
    require(correlation_length > 0.0, ErrorKind::Configuration, "correlation length r_C must be positive");
}

}  // namespace

LocalizationResult grw_localization(const StateVector& state, const LatticeGrid& grid, std::size_t particle,
                                    double center, double correlation_length) {
    check_grw_inputs(state, grid, particle, correlation_length);
    require(grid.contains(center), ErrorKind::Configuration, "hit center lies outside the lattice");
    const Basis& basis = *state.basis();
    const double inv = 1.0 / (4.0 * correlation_length * correlation_length);

    std::vector<double> profile(grid.sites());
    for (std::size_t j = 0; j < grid.sites(); ++j) {
        const double dx = grid.position(j) - center;
        profile[j] = std::exp(-dx * dx * inv);
    }
    Eigen::VectorXcd amps = state.amplitudes();
    for (Eigen::Index s = 0; s < amps.size(); ++s) {
        const auto site = basis.particle_sites(static_cast<std::size_t>(s))[particle];
        amps(s) *= profile[static_cast<std::size_t>(site)];
    }
    const double weight = amps.squaredNorm();
    if (!(weight > 0.0) || !std::isfinite(weight)) {
        std::ostringstream msg;
        msg << "GRW hit on particle " << particle << " at " << center << " annihilates the state";
        fail(ErrorKind::DegenerateHit, msg.str());
    }
    return {StateVector(state.basis(), std::move(amps)), weight};
}

std::vector<double> grw_center_probabilities(const StateVector& state, const LatticeGrid& grid,
                                             std::size_t particle, double correlation_length) {
    check_grw_inputs(state, grid, particle, correlation_length);
    const Basis& basis = *state.basis();
    const std::size_t m = grid.sites();

    std::vector<double> marginal(m, 0.0);
    for (std::size_t s = 0; s < basis.dimension(); ++s)
        marginal[static_cast<std::size_t>(basis.particle_sites(s)[particle])] += state.probability(s);

    const double inv = 1.0 / (2.0 * correlation_length * correlation_length);
    std::vector<double> weights(m, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
        double w = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double dx = grid.position(j) - grid.position(c);
            w += marginal[j] * std::exp(-dx * dx * inv);
        }
        weights[c] = w;
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    require(total > 0.0, ErrorKind::DegenerateHit, "no lattice center has positive hit weight");
    for (auto& w : weights) w /= total;
    return weights;
}

}  // namespace collapsim
