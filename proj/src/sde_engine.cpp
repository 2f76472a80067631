#include "collapsim/sde_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace collapsim {

// ---------------------------------------------------------------------------
// Configuration

void IntegratorConfig::validate() const {
    require(dt > 0.0 && std::isfinite(dt), ErrorKind::Configuration, "dt must be positive");
    require(horizon > 0.0 && std::isfinite(horizon), ErrorKind::Configuration, "horizon T must be positive");
    require(dt <= horizon * (1.0 + 1e-12), ErrorKind::Configuration, "dt must not exceed the horizon T");
    require(stride >= 1, ErrorKind::Configuration, "record stride must be >= 1");
    require(max_norm_drift > 0.0, ErrorKind::Configuration, "max_norm_drift must be positive");
}

std::size_t IntegratorConfig::steps() const {
    return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
}

std::vector<std::size_t> IntegratorConfig::record_steps() const {
    const std::size_t n = steps();
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s <= n; s += stride) out.push_back(s);
    if (out.back() != n) out.push_back(n);
    return out;
}

double stiffness(const Operator& hamiltonian, const CollapseOperatorSet& ops) {
    return ops.max_norm_squared() + hamiltonian.norm();
}

double recommended_dt(const Operator& hamiltonian, const CollapseOperatorSet& ops) {
    const double s = stiffness(hamiltonian, ops);
    return s > 0.0 ? kStiffnessBudget / s : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Noise

void NoiseSource::fill(std::span<double> out, double dt) {
    const double scale = std::sqrt(dt);
    for (auto& v : out) v = scale * normal_(engine_);
    ++generation_;
}

NoiseIncrements NoiseSource::sample(std::size_t count, double dt) {
    NoiseIncrements n;
    n.values.resize(count);
    fill(n.values, dt);
    n.generation = generation_;
    return n;
}

NoiseIncrements sample_noise(std::size_t count, double dt, NoiseSource& source) {
    require(dt > 0.0, ErrorKind::Configuration, "dt must be positive");
    return source.sample(count, dt);
}

// ---------------------------------------------------------------------------
// Outcomes

OutcomePartition OutcomePartition::configuration_basis(std::size_t dimension) {
    OutcomePartition p;
    p.dimension_ = dimension;
    p.count_ = dimension;
    p.index_sets_.resize(dimension);
    for (std::size_t i = 0; i < dimension; ++i) p.index_sets_[i] = {i};
    return p;
}

OutcomePartition OutcomePartition::from_operators(const CollapseOperatorSet& ops, std::size_t dimension) {
    OutcomePartition p;
    p.dimension_ = dimension;
    if (ops.empty()) {
        p.count_ = 1;
        p.index_sets_.emplace_back(dimension);
        for (std::size_t i = 0; i < dimension; ++i) p.index_sets_[0][i] = i;
        return p;
    }
    require(ops.operators().front().dimension() == dimension, ErrorKind::Configuration,
            "collapse operators do not match the state dimension");

    if (ops.all_diagonal()) {
        const Eigen::MatrixXd& table = ops.diagonal_table();
        const double tol = 1e-9 * std::max(1.0, table.cwiseAbs().maxCoeff());
        for (std::size_t i = 0; i < dimension; ++i) {
            const auto col = table.col(static_cast<Eigen::Index>(i));
            auto it = std::find_if(p.index_sets_.begin(), p.index_sets_.end(), [&](const auto& group) {
                return (table.col(static_cast<Eigen::Index>(group.front())) - col).cwiseAbs().maxCoeff() <= tol;
            });
            if (it == p.index_sets_.end()) p.index_sets_.push_back({i});
            else it->push_back(i);
        }
        p.count_ = p.index_sets_.size();
        return p;
    }

    require(ops.all_hermitian(), ErrorKind::UnsupportedModel,
            "outcome eigenspaces need Hermitian collapse operators");
    double scale = 0.0;
    for (const auto& op : ops.operators()) scale = std::max(scale, op.norm());
    require(ops.max_commutator() <= 1e-10 * std::max(1.0, scale * scale), ErrorKind::UnsupportedModel,
            "collapse operators do not commute; no common eigenbasis");

    // A generic real combination separates the joint eigenspaces.
    const auto d = static_cast<Eigen::Index>(dimension);
    Eigen::MatrixXcd combo = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t k = 0; k < ops.size(); ++k) {
        const double c = 0.5 + std::fmod(0.6180339887498949 * static_cast<double>(k + 1), 1.0);
        combo += c * ops.operators()[k].to_dense();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(combo);
    const Eigen::VectorXd& ev = solver.eigenvalues();
    const double tol = 1e-8 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Eigen::Index start = 0;
    for (Eigen::Index i = 1; i <= d; ++i) {
        if (i == d || ev(i) - ev(i - 1) > tol) {
            p.projectors_.push_back(solver.eigenvectors().middleCols(start, i - start));
            start = i;
        }
    }
    p.diagonal_ = false;
    p.count_ = p.projectors_.size();
    return p;
}

Eigen::VectorXd OutcomePartition::populations(const Eigen::VectorXcd& psi) const {
    Eigen::VectorXd pops(static_cast<Eigen::Index>(count_));
    if (diagonal_) {
        for (std::size_t g = 0; g < count_; ++g) {
            double s = 0.0;
            for (const auto i : index_sets_[g]) s += std::norm(psi(static_cast<Eigen::Index>(i)));
            pops(static_cast<Eigen::Index>(g)) = s;
        }
    } else {
        for (std::size_t g = 0; g < count_; ++g)
            pops(static_cast<Eigen::Index>(g)) = (projectors_[g].adjoint() * psi).squaredNorm();
    }
    return pops;
}

std::optional<std::size_t> OutcomePartition::classify(const Eigen::VectorXcd& psi, double dominance) const {
    const Eigen::VectorXd pops = populations(psi) / psi.squaredNorm();
    Eigen::Index best = 0;
    const double top = pops.maxCoeff(&best);
    if (top >= dominance) return static_cast<std::size_t>(best);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Records

namespace {

std::string pair_name(std::size_t i, std::size_t j) {
    return "coh_" + std::to_string(i) + "_" + std::to_string(j);
}

}  // namespace

std::vector<std::string> RecordSpec::names(const Basis& basis) const {
    std::vector<std::string> out;
    for (const auto kind : kinds) {
        switch (kind) {
        case ObservableKind::Populations:
            for (std::size_t i = 0; i < basis.dimension(); ++i) out.push_back("pop_" + std::to_string(i));
            break;
        case ObservableKind::SiteDensity:
            for (std::size_t j = 0; j < basis.sites(); ++j) out.push_back("density_" + std::to_string(j));
            break;
        case ObservableKind::Coherence:
            for (const auto& [i, j] : coherence_pairs) {
                out.push_back(pair_name(i, j) + "_re");
                out.push_back(pair_name(i, j) + "_im");
            }
            break;
        case ObservableKind::Energy: out.push_back("energy"); break;
        case ObservableKind::NormDrift: out.push_back("norm_drift"); break;
        }
    }
    return out;
}

void RecordSpec::validate(const Basis& basis) const {
    for (std::size_t a = 0; a < kinds.size(); ++a)
        for (std::size_t b = a + 1; b < kinds.size(); ++b)
            require(kinds[a] != kinds[b], ErrorKind::Configuration, "observable requested twice");
    const bool wants_coherence = std::find(kinds.begin(), kinds.end(), ObservableKind::Coherence) != kinds.end();
    require(!wants_coherence || !coherence_pairs.empty(), ErrorKind::Configuration,
            "coherence observable needs at least one basis-index pair");
    for (const auto& [i, j] : coherence_pairs)
        require(i < basis.dimension() && j < basis.dimension(), ErrorKind::Configuration,
                "coherence pair index outside the basis");
}

double TrajectoryRecord::max_step_drift() const {
    return step_drifts.empty() ? 0.0 : *std::max_element(step_drifts.begin(), step_drifts.end());
}

namespace {

std::vector<double> observe(const Eigen::VectorXcd& psi, const Basis& basis, const Operator& hamiltonian,
                            const RecordSpec& spec, double drift) {
    std::vector<double> out;
    for (const auto kind : spec.kinds) {
        switch (kind) {
        case ObservableKind::Populations:
            for (Eigen::Index i = 0; i < psi.size(); ++i) out.push_back(std::norm(psi(i)));
            break;
        case ObservableKind::SiteDensity: {
            std::vector<double> density(basis.sites(), 0.0);
            for (std::size_t s = 0; s < basis.dimension(); ++s) {
                const double p = std::norm(psi(static_cast<Eigen::Index>(s)));
                const auto occ = basis.occupations(s);
                for (std::size_t j = 0; j < occ.size(); ++j) density[j] += p * occ[j];
            }
            out.insert(out.end(), density.begin(), density.end());
            break;
        }
        case ObservableKind::Coherence:
            for (const auto& [i, j] : spec.coherence_pairs) {
                const cplx c = psi(static_cast<Eigen::Index>(i)) * std::conj(psi(static_cast<Eigen::Index>(j)));
                out.push_back(c.real());
                out.push_back(c.imag());
            }
            break;
        case ObservableKind::Energy: out.push_back(hamiltonian.expectation(psi)); break;
        case ObservableKind::NormDrift: out.push_back(drift); break;
        }
    }
    return out;
}

void record_point(TrajectoryRecord& rec, double t, const Eigen::VectorXcd& psi, const Basis& basis,
                  const Operator& hamiltonian, const RecordSpec& spec, double drift) {
    rec.times.push_back(t);
    rec.values.push_back(observe(psi, basis, hamiltonian, spec, drift));
    if (spec.keep_states) rec.states.push_back(psi);
}

}  // namespace

// ---------------------------------------------------------------------------
// Propagation

UnitaryPropagator::UnitaryPropagator(const Operator& hamiltonian, double dt) {
    require(hamiltonian.is_hermitian(), ErrorKind::UnsupportedModel, "Hamiltonian must be Hermitian");
    if (hamiltonian.is_zero()) return;
    const cplx minus_i_dt(0.0, -dt);
    if (hamiltonian.is_diagonal()) {
        mode_ = Mode::Diagonal;
        phases_ = (minus_i_dt * hamiltonian.diagonal_values().cast<cplx>()).array().exp();
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hamiltonian.to_dense());
    require(solver.info() == Eigen::Success, ErrorKind::NumericalOverflow, "Hamiltonian diagonalization failed");
    const Eigen::VectorXcd phases = (minus_i_dt * solver.eigenvalues().cast<cplx>()).array().exp();
    mode_ = Mode::Dense;
    matrix_ = solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

void UnitaryPropagator::apply(Eigen::VectorXcd& psi) const {
    switch (mode_) {
    case Mode::Identity: return;
    case Mode::Diagonal: psi = psi.cwiseProduct(phases_); return;
    case Mode::Dense: psi = matrix_ * psi; return;
    }
}

CollapseIntegrator::CollapseIntegrator(Operator hamiltonian, CollapseOperatorSet ops, IntegratorConfig config,
                                       RecordSpec spec)
    : hamiltonian_(std::move(hamiltonian)), ops_(std::move(ops)), config_(config), spec_(std::move(spec)) {
    config_.validate();
    const std::size_t dim = hamiltonian_.dimension();
    require(ops_.empty() || ops_.operators().front().dimension() == dim, ErrorKind::Configuration,
            "collapse operators do not match the Hamiltonian dimension");
    propagator_ = UnitaryPropagator(hamiltonian_, config_.dt);
    partition_ = OutcomePartition::from_operators(ops_, dim);
    stiffness_ = collapsim::stiffness(hamiltonian_, ops_);
    if (!ops_.all_diagonal()) {
        for (const auto& op : ops_.operators()) {
            dense_ops_.push_back(op.to_dense());
            dense_gram_.push_back(dense_ops_.back().adjoint() * dense_ops_.back());
        }
    }
}

double CollapseIntegrator::collapse_increment(Eigen::VectorXcd& psi, std::span<const double> dw) const {
    const double dt = config_.dt;
    if (ops_.empty()) return std::abs(psi.norm() - 1.0);
    if (ops_.all_diagonal()) {
        const Eigen::MatrixXd& table = ops_.diagonal_table();
        const Eigen::Map<const Eigen::VectorXd> noise(dw.data(), static_cast<Eigen::Index>(dw.size()));
        const Eigen::VectorXd p = psi.cwiseAbs2();
        const Eigen::VectorXd ell = table * p;
        const Eigen::ArrayXd centered_sq = (table.colwise() - ell).cwiseAbs2().colwise().sum().transpose();
        const Eigen::ArrayXd gain = (table.transpose() * noise).array() - ell.dot(noise) - 0.5 * dt * centered_sq;
        psi.array() *= (1.0 + gain).cast<cplx>();
    } else {
        Eigen::VectorXcd inc = Eigen::VectorXcd::Zero(psi.size());
        for (std::size_t k = 0; k < dense_ops_.size(); ++k) {
            const Eigen::VectorXcd lpsi = dense_ops_[k] * psi;
            const double ell = psi.dot(lpsi).real();
            inc += (lpsi - ell * psi) * dw[k];
            inc -= 0.5 * dt * (dense_gram_[k] * psi - 2.0 * ell * lpsi + ell * ell * psi);
        }
        psi += inc;
    }
    return std::abs(psi.norm() - 1.0);
}

double CollapseIntegrator::step(Eigen::VectorXcd& psi, std::span<const double> dw) const {
    require(dw.size() == ops_.size(), ErrorKind::Configuration,
            "noise increment count must equal the number of collapse operators");
    const double drift = collapse_increment(psi, dw);
    if (!psi.allFinite() || !std::isfinite(drift)) {
        std::ostringstream msg;
        msg << "non-finite amplitudes after collapse update (dt = " << config_.dt
            << ", stiffness = " << stiffness_ << ")";
        fail(ErrorKind::NumericalOverflow, msg.str());
    }
    if (drift > config_.max_norm_drift) {
        std::ostringstream msg;
        msg << "pre-renormalization norm drift " << drift << " exceeds " << config_.max_norm_drift
            << "; dt = " << config_.dt << " is too large (recommended <= " << kStiffnessBudget / stiffness_ << ")";
        fail(ErrorKind::StepSize, msg.str());
    }
    psi /= psi.norm();
    propagator_.apply(psi);
    return drift;
}

TrajectoryRecord CollapseIntegrator::run(const StateVector& initial, std::uint64_t seed) const {
    require(initial.dimension() == hamiltonian_.dimension(), ErrorKind::Configuration,
            "initial state does not match the Hamiltonian dimension");
    const Basis& basis = *initial.basis();
    spec_.validate(basis);

    TrajectoryRecord rec;
    rec.seed = seed;
    const std::size_t steps = config_.steps();
    if (spec_.keep_step_drifts) rec.step_drifts.reserve(steps);

    NoiseSource noise(seed);
    std::vector<double> dw(ops_.size());
    Eigen::VectorXcd psi = initial.amplitudes();
    record_point(rec, 0.0, psi, basis, hamiltonian_, spec_, 0.0);

    std::size_t next_record = std::min(config_.stride, steps);
    double drift_window = 0.0;
    std::size_t n = 1;
    try {
        for (; n <= steps; ++n) {
            noise.fill(dw, config_.dt);
            const double drift = step(psi, dw);
            if (spec_.keep_step_drifts) rec.step_drifts.push_back(drift);
            drift_window = std::max(drift_window, drift);
            if (n == next_record) {
                record_point(rec, static_cast<double>(n) * config_.dt, psi, basis, hamiltonian_, spec_, drift_window);
                drift_window = 0.0;
                next_record = std::min(next_record + config_.stride, steps);
            }
        }
    } catch (const Error& e) {
        rec.ok = false;
        rec.error_kind = e.kind();
        std::ostringstream msg;
        msg << e.what() << " [step " << n << ", t = " << static_cast<double>(n) * config_.dt << ", seed " << seed << "]";
        rec.error = msg.str();
        return rec;
    }
    rec.outcome = partition_.classify(psi);
    rec.final_state.emplace(initial.basis(), std::move(psi));
    return rec;
}

StepResult em_step(const StateVector& state, const Operator& hamiltonian, const CollapseOperatorSet& ops, double dt,
                   const NoiseIncrements& noise, double max_norm_drift) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.horizon = dt;
    cfg.max_norm_drift = max_norm_drift;
    const CollapseIntegrator integrator(hamiltonian, ops, cfg);
    Eigen::VectorXcd psi = state.amplitudes();
    const double drift = integrator.step(psi, noise.values);
    return {StateVector(state.basis(), std::move(psi)), drift};
}

TrajectoryRecord run_trajectory(const StateVector& initial, const Operator& hamiltonian,
                                const CollapseOperatorSet& ops, const IntegratorConfig& config, std::uint64_t seed,
                                const RecordSpec& spec) {
    return CollapseIntegrator(hamiltonian, ops, config, spec).run(initial, seed);
}

// ---------------------------------------------------------------------------
// GRW

GrwIntegrator::GrwIntegrator(LatticeGrid grid, Operator hamiltonian, double rate, double correlation_length,
                             IntegratorConfig config, RecordSpec spec)
    : grid_(grid), hamiltonian_(std::move(hamiltonian)), rate_(rate), correlation_length_(correlation_length),
      config_(config), spec_(std::move(spec)) {
    config_.validate();
    require(rate_ >= 0.0 && std::isfinite(rate_), ErrorKind::Configuration, "GRW rate must be >= 0");
    require(correlation_length_ > 0.0, ErrorKind::Configuration, "correlation length r_C must be positive");
    propagator_ = UnitaryPropagator(hamiltonian_, config_.dt);
    partition_ = OutcomePartition::configuration_basis(hamiltonian_.dimension());
}

TrajectoryRecord GrwIntegrator::run(const StateVector& initial, std::uint64_t seed) const {
    const BasisPtr& basis = initial.basis();
    require(initial.dimension() == hamiltonian_.dimension(), ErrorKind::Configuration,
            "initial state does not match the Hamiltonian dimension");
    require(basis->statistics() == Statistics::Distinguishable || basis->particles() == 1,
            ErrorKind::Configuration, "GRW dynamics needs distinguishable particles");
    require(basis->sites() == grid_.sites(), ErrorKind::Configuration, "state does not match the lattice");
    spec_.validate(*basis);

    TrajectoryRecord rec;
    rec.seed = seed;
    const std::size_t steps = config_.steps();
    const std::size_t particles = basis->particles();
    if (spec_.keep_step_drifts) rec.step_drifts.reserve(steps);

    std::mt19937_64 engine(seed);
    std::exponential_distribution<double> wait(rate_ > 0.0 ? rate_ : 1.0);
    const auto draw_wait = [&]() {
        return rate_ > 0.0 ? wait(engine) : std::numeric_limits<double>::infinity();
    };
    std::vector<double> next_hit(particles);
    for (auto& t : next_hit) t = draw_wait();

    Eigen::VectorXcd psi = initial.amplitudes();
    record_point(rec, 0.0, psi, *basis, hamiltonian_, spec_, 0.0);
    std::size_t next_record = std::min(config_.stride, steps);
    double drift_window = 0.0;
    std::size_t n = 1;
    try {
        for (; n <= steps; ++n) {
            const double t = static_cast<double>(n) * config_.dt;
            propagator_.apply(psi);
            const double drift = std::abs(psi.norm() - 1.0);
            psi /= psi.norm();
            for (std::size_t p = 0; p < particles; ++p) {
                while (next_hit[p] <= t) {
                    const StateVector current(basis, psi);
                    const auto probs = grw_center_probabilities(current, grid_, p, correlation_length_);
                    std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
                    bool hit = false;
                    for (int attempt = 0; attempt < 100 && !hit; ++attempt) {
                        const std::size_t c = pick(engine);
                        try {
                            auto res = grw_localization(current, grid_, p, grid_.position(c), correlation_length_);
                            psi = res.state.amplitudes();
                            hit = true;
                        } catch (const Error& e) {
                            if (e.kind() != ErrorKind::DegenerateHit) throw;
                        }
                    }
                    if (!hit) fail(ErrorKind::DegenerateDynamics, "GRW hit resampling failed 100 times");
                    rec.hit_times.push_back(next_hit[p]);
                    rec.hit_particles.push_back(p);
                    next_hit[p] += draw_wait();
                }
            }
            if (spec_.keep_step_drifts) rec.step_drifts.push_back(drift);
            drift_window = std::max(drift_window, drift);
            if (n == next_record) {
                record_point(rec, t, psi, *basis, hamiltonian_, spec_, drift_window);
                drift_window = 0.0;
                next_record = std::min(next_record + config_.stride, steps);
            }
        }
    } catch (const Error& e) {
        rec.ok = false;
        rec.error_kind = e.kind();
        std::ostringstream msg;
        msg << e.what() << " [step " << n << ", seed " << seed << "]";
        rec.error = msg.str();
        return rec;
    }
    rec.outcome = partition_.classify(psi);
    rec.final_state.emplace(basis, std::move(psi));
    return rec;
}

TrajectoryRecord run_grw_trajectory(const StateVector& initial, const LatticeGrid& grid, const Operator& hamiltonian,
                                    double rate, double correlation_length, const IntegratorConfig& config,
                                    std::uint64_t seed, const RecordSpec& spec) {
    return GrwIntegrator(grid, hamiltonian, rate, correlation_length, config, spec).run(initial, seed);
}

}  // namespace collapsim
