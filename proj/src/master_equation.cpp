#include "collapsim/master_equation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "collapsim/error.hpp"
#include "collapsim/sde_engine.hpp"

namespace collapsim {

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
    return {psi.amplitudes() * psi.amplitudes().adjoint()};
}

double DensityMatrix::min_eigenvalue() const {
    const Eigen::MatrixXcd herm = 0.5 * (values + values.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

void DensityMatrix::validate() const {
    require(values.rows() == values.cols() && values.rows() > 0, ErrorKind::DegenerateInput,
            "density matrix must be square and non-empty");
    require(hermiticity_error() <= 1e-10, ErrorKind::DegenerateInput, "density matrix is not Hermitian");
    require(std::abs(trace() - 1.0) <= 1e-8, ErrorKind::DegenerateInput, "density matrix trace differs from 1");
    require(min_eigenvalue() >= -1e-8, ErrorKind::DegenerateInput, "density matrix has a negative eigenvalue");
}

LindbladGenerator::LindbladGenerator(const Operator& hamiltonian, const CollapseOperatorSet& ops)
    : dimension_(hamiltonian.dimension()),
      hamiltonian_(hamiltonian.to_dense()),
      hamiltonian_zero_(hamiltonian.is_zero()),
      diagonal_(ops.all_diagonal()) {
    require(ops.all_hermitian(), ErrorKind::UnsupportedModel,
            "the master-equation oracle supports Hermitian collapse operators only");
    require(ops.empty() || ops.operators().front().dimension() == dimension_, ErrorKind::Configuration,
            "collapse operators do not match the Hamiltonian dimension");
    scale_ = hamiltonian.norm() + ops.sum_norm_squared();

    const auto d = static_cast<Eigen::Index>(dimension_);
    if (diagonal_) {
        dephasing_ = Eigen::MatrixXd::Zero(d, d);
        if (!ops.empty()) {
            const Eigen::MatrixXd& table = ops.diagonal_table();
            for (Eigen::Index i = 0; i < d; ++i)
                for (Eigen::Index j = 0; j < d; ++j)
                    dephasing_(i, j) = -0.5 * (table.col(i) - table.col(j)).squaredNorm();
        }
        return;
    }
    gram_sum_ = Eigen::MatrixXcd::Zero(d, d);
    for (const auto& op : ops.operators()) {
        ops_.push_back(op.to_dense());
        gram_sum_ += ops_.back() * ops_.back();
    }
}

Eigen::MatrixXcd LindbladGenerator::operator()(const Eigen::MatrixXcd& rho) const {
    Eigen::MatrixXcd out;
    if (diagonal_) {
        out = dephasing_.cast<cplx>().cwiseProduct(rho);
    } else {
        out = -0.5 * (gram_sum_ * rho + rho * gram_sum_);
        for (const auto& l : ops_) out.noalias() += l * rho * l;
    }
    if (!hamiltonian_zero_) {
        const cplx minus_i(0.0, -1.0);
        out += minus_i * (hamiltonian_ * rho - rho * hamiltonian_);
    }
    return out;
}

Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const Operator& hamiltonian,
                              const CollapseOperatorSet& ops) {
    const LindbladGenerator gen(hamiltonian, ops);
    require(static_cast<std::size_t>(rho.rows()) == gen.dimension() && rho.rows() == rho.cols(),
            ErrorKind::Configuration, "density matrix does not match the operator dimension");
    return gen(rho);
}

DensitySeries evolve_density(const Eigen::MatrixXcd& rho0, const Operator& hamiltonian,
                             const CollapseOperatorSet& ops, double dt, double horizon, std::size_t stride) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.horizon = horizon;
    cfg.stride = stride;
    cfg.validate();
    DensityMatrix{rho0}.validate();

    const LindbladGenerator gen(hamiltonian, ops);
    require(static_cast<std::size_t>(rho0.rows()) == gen.dimension(), ErrorKind::Configuration,
            "density matrix does not match the operator dimension");
    if (dt * gen.scale() > kOracleStepBudget * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "oracle step too large: dt * (||H|| + sum ||L_k||^2) = " << dt * gen.scale()
            << " exceeds " << kOracleStepBudget;
        fail(ErrorKind::Configuration, msg.str());
    }

    DensitySeries series;
    series.min_eigenvalue = DensityMatrix{rho0}.min_eigenvalue();
    const auto record = [&](double t, const Eigen::MatrixXcd& rho) {
        series.times.push_back(t);
        series.states.push_back(rho);
        const DensityMatrix dm{rho};
        series.max_trace_error = std::max(series.max_trace_error, std::abs(dm.trace() - 1.0));
        series.min_eigenvalue = std::min(series.min_eigenvalue, dm.min_eigenvalue());
    };

    const auto marks = cfg.record_steps();
    std::size_t next = 1;
    Eigen::MatrixXcd rho = rho0;
    record(0.0, rho);
    const std::size_t steps = cfg.steps();
    for (std::size_t n = 1; n <= steps; ++n) {
        const Eigen::MatrixXcd k1 = gen(rho);
        const Eigen::MatrixXcd k2 = gen(rho + 0.5 * dt * k1);
        const Eigen::MatrixXcd k3 = gen(rho + 0.5 * dt * k2);
        const Eigen::MatrixXcd k4 = gen(rho + dt * k3);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (next < marks.size() && marks[next] == n) {
            record(static_cast<double>(n) * dt, rho);
            ++next;
        }
    }
    series.positivity_violated = series.min_eigenvalue < -1e-6;
    return series;
}

double csl_two_point_rate(double distance, double rate, double correlation_length) {
    require(rate >= 0.0 && correlation_length > 0.0 && distance >= 0.0, ErrorKind::Configuration,
            "two-point rate needs rate >= 0, r_C > 0 and d >= 0");
    const double x = distance / correlation_length;
    return -rate * std::expm1(-0.25 * x * x);
}

double energy_growth_rate(const Eigen::MatrixXcd& rho, const Operator& hamiltonian,
                          const CollapseOperatorSet& ops) {
    const LindbladGenerator dissipator(Operator::zero(hamiltonian.dimension()), ops);
    return (dissipator(rho) * hamiltonian.to_dense()).trace().real();
}

double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Configuration, "dimension mismatch");
    const Eigen::MatrixXcd diff = a - b;
    const Eigen::MatrixXcd herm = 0.5 * (diff + diff.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

}  // namespace collapsim
