#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "collapsim/collapse_operators.hpp"
#include "collapsim/error.hpp"
#include "collapsim/state_space.hpp"

namespace collapsim {

inline constexpr double kDefaultMaxNormDrift = 0.5;
inline constexpr double kOutcomeDominance = 0.99;
/// Target for dt * (max_k ||L_k||^2 + ||H||).
inline constexpr double kStiffnessBudget = 1e-2;

struct IntegratorConfig {
    double dt = 1e-2;
    double horizon = 1.0;
    std::size_t stride = 1;
    double max_norm_drift = kDefaultMaxNormDrift;

    void validate() const;
    std::size_t steps() const;
    /// Step indices at which observables are recorded: 0, stride, 2*stride, ..., and the last step.
    std::vector<std::size_t> record_steps() const;
};

/// max_k ||L_k||^2 + ||H||.
double stiffness(const Operator& hamiltonian, const CollapseOperatorSet& ops);
/// Largest dt within the stiffness budget (infinite when the dynamics is trivial).
double recommended_dt(const Operator& hamiltonian, const CollapseOperatorSet& ops);

struct NoiseIncrements {
    std::vector<double> values;
    std::uint64_t generation = 0;
};

/// Per-trajectory generator of Wiener increments.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}

    NoiseIncrements sample(std::size_t count, double dt);
    /// Fills `out` in place; same stream as sample().
    void fill(std::span<double> out, double dt);

    std::uint64_t generation() const noexcept { return generation_; }
    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uint64_t generation_ = 0;
};

NoiseIncrements sample_noise(std::size_t count, double dt, NoiseSource& source);

/// Common eigenspaces of a commuting collapse-operator family, the outcomes
/// a trajectory can collapse onto.
class OutcomePartition {
public:
    /// Groups basis states (diagonal families) or joint eigenvectors (dense
    /// commuting Hermitian families). An empty family yields one outcome.
    static OutcomePartition from_operators(const CollapseOperatorSet& ops, std::size_t dimension);
    /// Every configuration-basis state is its own outcome.
    static OutcomePartition configuration_basis(std::size_t dimension);

    std::size_t size() const noexcept { return count_; }
    std::size_t dimension() const noexcept { return dimension_; }

    Eigen::VectorXd populations(const Eigen::VectorXcd& psi) const;
    /// Index of the outcome holding at least `dominance` of the population.
    std::optional<std::size_t> classify(const Eigen::VectorXcd& psi, double dominance = kOutcomeDominance) const;

    /// Basis indices of each outcome; empty when the partition is not diagonal.
    const std::vector<std::vector<std::size_t>>& index_sets() const noexcept { return index_sets_; }

private:
    std::size_t dimension_ = 0;
    std::size_t count_ = 0;
    bool diagonal_ = true;
    std::vector<std::vector<std::size_t>> index_sets_;
    std::vector<Eigen::MatrixXcd> projectors_;  // d x r orthonormal columns, dense case
};

enum class ObservableKind { Populations, SiteDensity, Coherence, Energy, NormDrift };

/// Scalars recorded at every record time, in declaration order.
struct RecordSpec {
    std::vector<ObservableKind> kinds{ObservableKind::Populations};
    std::vector<std::pair<std::size_t, std::size_t>> coherence_pairs;
    bool keep_states = false;
    bool keep_step_drifts = true;

    /// Column names; coherences expand to "<name>_re" / "<name>_im".
    std::vector<std::string> names(const Basis& basis) const;
    void validate(const Basis& basis) const;
};

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> values;   // [record][scalar]
    std::vector<Eigen::VectorXcd> states;      // when RecordSpec::keep_states
    std::vector<double> step_drifts;           // pre-renormalization |norm - 1|, one per step
    std::optional<StateVector> final_state;
    std::optional<std::size_t> outcome;        // nullopt: unresolved
    std::vector<double> hit_times;             // GRW only
    std::vector<std::size_t> hit_particles;    // GRW only

    bool ok = true;
    std::optional<ErrorKind> error_kind;
    std::string error;

    double max_step_drift() const;
};

struct StepResult {
    StateVector state;
    double norm_drift;
};

/// One step: Euler-Maruyama update of the collapse terms with l_k taken from
/// the current state, renormalization, then the exact unitary propagator
/// exp(-i H dt).
StepResult em_step(const StateVector& state, const Operator& hamiltonian, const CollapseOperatorSet& ops,
                   double dt, const NoiseIncrements& noise, double max_norm_drift = kDefaultMaxNormDrift);

/// exp(-i H dt) precomputed from the eigendecomposition of H.
class UnitaryPropagator {
public:
    UnitaryPropagator() = default;
    UnitaryPropagator(const Operator& hamiltonian, double dt);

    void apply(Eigen::VectorXcd& psi) const;
    bool is_identity() const noexcept { return mode_ == Mode::Identity; }

private:
    enum class Mode { Identity, Diagonal, Dense };
    Mode mode_ = Mode::Identity;
    Eigen::VectorXcd phases_;
    Eigen::MatrixXcd matrix_;
};

/// Integrates the collapse equation for a fixed (H, L_k, config); reusable
/// across trajectories and safe to share between threads.
class CollapseIntegrator {
public:
    CollapseIntegrator(Operator hamiltonian, CollapseOperatorSet ops, IntegratorConfig config,
                       RecordSpec spec = {});

    TrajectoryRecord run(const StateVector& initial, std::uint64_t seed) const;

    /// Advances `psi` in place; returns the pre-renormalization drift. Throws on failure.
    double step(Eigen::VectorXcd& psi, std::span<const double> dw) const;

    const OutcomePartition& partition() const noexcept { return partition_; }
    const IntegratorConfig& config() const noexcept { return config_; }
    const Operator& hamiltonian() const noexcept { return hamiltonian_; }
    const CollapseOperatorSet& operators() const noexcept { return ops_; }
    double stiffness() const noexcept { return stiffness_; }

private:
    double collapse_increment(Eigen::VectorXcd& psi, std::span<const double> dw) const;

    Operator hamiltonian_;
    CollapseOperatorSet ops_;
    IntegratorConfig config_;
    RecordSpec spec_;
    UnitaryPropagator propagator_;
    OutcomePartition partition_;
    std::vector<Eigen::MatrixXcd> dense_ops_;
    std::vector<Eigen::MatrixXcd> dense_gram_;  // L_k^dagger L_k
    double stiffness_ = 0.0;
};

TrajectoryRecord run_trajectory(const StateVector& initial, const Operator& hamiltonian,
                                const CollapseOperatorSet& ops, const IntegratorConfig& config,
                                std::uint64_t seed, const RecordSpec& spec = {});

/// Unitary evolution interrupted by Poisson localization hits, one
/// independent clock of the given rate per particle.
class GrwIntegrator {
public:
    GrwIntegrator(LatticeGrid grid, Operator hamiltonian, double rate, double correlation_length,
                  IntegratorConfig config, RecordSpec spec = {});

    TrajectoryRecord run(const StateVector& initial, std::uint64_t seed) const;

    const OutcomePartition& partition() const noexcept { return partition_; }
    const IntegratorConfig& config() const noexcept { return config_; }
    const Operator& hamiltonian() const noexcept { return hamiltonian_; }
    double rate() const noexcept { return rate_; }
    double correlation_length() const noexcept { return correlation_length_; }

private:
    LatticeGrid grid_;
    Operator hamiltonian_;
    double rate_;
    double correlation_length_;
    IntegratorConfig config_;
    RecordSpec spec_;
    UnitaryPropagator propagator_;
    OutcomePartition partition_;
};

TrajectoryRecord run_grw_trajectory(const StateVector& initial, const LatticeGrid& grid,
                                    const Operator& hamiltonian, double rate, double correlation_length,
                                    const IntegratorConfig& config, std::uint64_t seed,
                                    const RecordSpec& spec = {});

}  // namespace collapsim
