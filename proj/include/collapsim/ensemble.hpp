#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "collapsim/collapse_operators.hpp"
#include "collapsim/sde_engine.hpp"
#include "collapsim/state_space.hpp"

namespace collapsim {

struct GrwParameters {
    double rate = 0.0;
    double correlation_length = 1.0;
};

/// A fully built, runnable problem: everything the engines need, nothing about files.
struct Scenario {
    std::string name;
    LatticeGrid grid;
    StateVector initial;
    Operator hamiltonian;
    CollapseOperatorSet ops;            // collapse-equation dynamics (possibly empty)
    std::optional<GrwParameters> grw;   // when set, GRW jump dynamics replaces `ops`
    IntegratorConfig integrator;
    RecordSpec record;
    std::uint64_t master_seed = 0;
};

/// (index + 1)-th output of SplitMix64 seeded with `master`.
std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index);
inline constexpr const char* kSeedDerivation = "splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15)";

struct EnsembleOptions {
    std::size_t workers = 1;
    /// Mean density matrices are accumulated only up to this dimension.
    std::size_t density_dimension_limit = 64;
};

/// Index-ordered reductions over a trajectory ensemble.
struct EnsembleStats {
    std::size_t requested = 0;
    std::size_t completed = 0;   // trajectories that finished without error
    std::size_t failed = 0;
    std::size_t dimension = 0;
    std::uint64_t master_seed = 0;
    std::string seed_derivation = kSeedDerivation;

    std::vector<double> times;
    std::vector<std::string> names;
    std::vector<std::vector<double>> mean;   // [time][observable]
    std::vector<std::vector<double>> se;     // sample std / sqrt(N)
    std::vector<double> slope_mean;          // per observable: OLS slope over all record times
    std::vector<double> slope_se;            // dispersion of per-trajectory slopes / sqrt(N)

    std::vector<Eigen::MatrixXcd> mean_density;  // per time; empty when not tracked
    std::vector<double> density_se;              // Frobenius-norm standard error per time

    std::vector<std::size_t> outcome_tally;
    std::size_t unresolved = 0;
    std::vector<double> born_weights;            // initial population of each outcome
    std::vector<std::pair<std::size_t, std::string>> errors;
    double max_step_drift = 0.0;

    std::size_t observable_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
    std::vector<double> column_se(const std::string& name) const;
};

/// Runs N trajectories; results do not depend on the worker count. Throws when
/// more than 1% of trajectories fail.
EnsembleStats run_ensemble(const Scenario& scenario, std::size_t trajectories, const EnsembleOptions& options = {});

struct OutcomeFrequency {
    std::size_t count = 0;
    double frequency = 0.0;
    double se = 0.0;          // sqrt(p (1 - p) / N_resolved)
    double born_weight = 0.0;
};

/// Frequencies over resolved trajectories; InconclusiveCollapse if fewer than 99% resolved.
std::vector<OutcomeFrequency> born_frequencies(const EnsembleStats& stats);

struct RateFit {
    double rate = 0.0;
    double se = 0.0;
    double r_squared = 1.0;
    std::size_t points = 0;
    double window_end = 0.0;
};

inline constexpr double kFitWindowFraction = 0.05;
inline constexpr double kMinRSquared = 0.9;

/// Exponential fit of |ρ_ij(t)| over the leading window where it stays above
/// 5% of its initial value.
RateFit fitted_decay_rate(const EnsembleStats& stats, std::size_t i, std::size_t j);

/// Same fit applied to an arbitrary series (oracle output, for instance).
RateFit fit_decay(std::span<const double> times, std::span<const double> magnitudes);

}  // namespace collapsim
