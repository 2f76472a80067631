#include "collapsim/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>
#include <variant>

#include "collapsim/error.hpp"
#include "collapsim/fitting.hpp"

namespace collapsim {

std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::size_t EnsembleStats::observable_index(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    require(it != names.end(), ErrorKind::Data, "observable '" + name + "' was not recorded");
    return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> EnsembleStats::column(const std::string& name) const {
    const std::size_t k = observable_index(name);
    std::vector<double> out;
    out.reserve(mean.size());
    for (const auto& row : mean) out.push_back(row[k]);
    return out;
}

std::vector<double> EnsembleStats::column_se(const std::string& name) const {
    const std::size_t k = observable_index(name);
    std::vector<double> out;
    out.reserve(se.size());
    for (const auto& row : se) out.push_back(row[k]);
    return out;
}

namespace {

constexpr std::size_t kBlockSize = 64;

// Welford within a block, Chan et al. pairwise combination across blocks.
struct Moments {
    std::size_t n = 0;
    std::vector<double> mean;
    std::vector<double> m2;

    void resize(std::size_t size) {
        mean.assign(size, 0.0);
        m2.assign(size, 0.0);
    }

    void add(std::size_t k, double x, std::size_t count) {
        const double delta = x - mean[k];
        mean[k] += delta / static_cast<double>(count);
        m2[k] += delta * (x - mean[k]);
    }

    void merge(const Moments& other) {
        if (other.n == 0) return;
        if (n == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(n);
        const double nb = static_cast<double>(other.n);
        const double total = na + nb;
        for (std::size_t k = 0; k < mean.size(); ++k) {
            const double delta = other.mean[k] - mean[k];
            mean[k] += delta * nb / total;
            m2[k] += other.m2[k] + delta * delta * na * nb / total;
        }
        n += other.n;
    }
};

struct Accumulator {
    std::size_t times = 0;
    std::size_t observables = 0;
    bool track_density = false;

    std::vector<double> record_times;
    Moments values;   // flattened [time][observable]
    Moments slopes;   // per observable
    std::vector<Eigen::MatrixXcd> density_sum;
    std::vector<std::size_t> tally;
    std::size_t unresolved = 0;
    std::size_t failed = 0;
    std::optional<ErrorKind> first_error;
    std::vector<std::pair<std::size_t, std::string>> errors;
    double max_drift = 0.0;

    Accumulator(std::size_t n_times, std::size_t n_obs, std::size_t outcomes, std::size_t dim, bool density)
        : times(n_times), observables(n_obs), track_density(density) {
        values.resize(n_times * n_obs);
        slopes.resize(n_obs);
        tally.assign(outcomes, 0);
        if (density) density_sum.assign(n_times, Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
    }

    void add(std::size_t index, const TrajectoryRecord& rec) {
        if (!rec.ok) {
            ++failed;
            if (!first_error) first_error = rec.error_kind;
            errors.emplace_back(index, rec.error);
            return;
        }
        if (record_times.empty()) record_times = rec.times;
        const std::size_t count = values.n + 1;
        values.n = count;
        slopes.n = count;
        std::vector<double> series(times);
        for (std::size_t o = 0; o < observables; ++o) {
            for (std::size_t t = 0; t < times; ++t) {
                const double x = rec.values[t][o];
                values.add(t * observables + o, x, count);
                series[t] = x;
            }
            slopes.add(o, times >= 2 ? ols_slope(rec.times, series) : 0.0, count);
        }
        if (track_density)
            for (std::size_t t = 0; t < times; ++t) density_sum[t] += rec.states[t] * rec.states[t].adjoint();
        if (rec.outcome) ++tally[*rec.outcome];
        else ++unresolved;
        max_drift = std::max(max_drift, rec.max_step_drift());
    }

    void merge(const Accumulator& other) {
        if (record_times.empty()) record_times = other.record_times;
        values.merge(other.values);
        slopes.merge(other.slopes);
        if (track_density)
            for (std::size_t t = 0; t < times; ++t) density_sum[t] += other.density_sum[t];
        for (std::size_t k = 0; k < tally.size(); ++k) tally[k] += other.tally[k];
        unresolved += other.unresolved;
        failed += other.failed;
        if (!first_error) first_error = other.first_error;
        errors.insert(errors.end(), other.errors.begin(), other.errors.end());
        max_drift = std::max(max_drift, other.max_drift);
    }
};

using AnyIntegrator = std::variant<CollapseIntegrator, GrwIntegrator>;

AnyIntegrator make_integrator(const Scenario& s, const RecordSpec& spec) {
    if (s.grw)
        return GrwIntegrator(s.grid, s.hamiltonian, s.grw->rate, s.grw->correlation_length, s.integrator, spec);
    return CollapseIntegrator(s.hamiltonian, s.ops, s.integrator, spec);
}

}  // namespace

EnsembleStats run_ensemble(const Scenario& scenario, std::size_t trajectories, const EnsembleOptions& options) {
    require(trajectories >= 1, ErrorKind::Configuration, "ensemble needs at least one trajectory");
    const Basis& basis = *scenario.initial.basis();
    scenario.record.validate(basis);
    const std::size_t dim = scenario.initial.dimension();
    const bool track_density = dim <= options.density_dimension_limit;

    RecordSpec spec = scenario.record;
    spec.keep_states = track_density;
    const AnyIntegrator integrator = make_integrator(scenario, spec);
    const OutcomePartition& partition =
        std::visit([](const auto& in) -> const OutcomePartition& { return in.partition(); }, integrator);

    const std::size_t n_times = scenario.integrator.record_steps().size();
    const std::vector<std::string> names = spec.names(basis);
    const std::size_t blocks = (trajectories + kBlockSize - 1) / kBlockSize;
    std::vector<std::optional<Accumulator>> partials(blocks);

    std::atomic<std::size_t> next_block{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&]() {
        try {
            for (std::size_t b = next_block++; b < blocks; b = next_block++) {
                Accumulator acc(n_times, names.size(), partition.size(), dim, track_density);
                const std::size_t end = std::min(trajectories, (b + 1) * kBlockSize);
                for (std::size_t idx = b * kBlockSize; idx < end; ++idx) {
                    const std::uint64_t seed = trajectory_seed(scenario.master_seed, idx);
                    acc.add(idx, std::visit([&](const auto& in) { return in.run(scenario.initial, seed); }, integrator));
                }
                partials[b].emplace(std::move(acc));
            }
        } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next_block = blocks;
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, blocks);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    Accumulator total(n_times, names.size(), partition.size(), dim, track_density);
    for (auto& p : partials) total.merge(*p);

    if (static_cast<double>(total.failed) > 0.01 * static_cast<double>(trajectories) || total.values.n == 0) {
        std::ostringstream msg;
        msg << total.failed << " of " << trajectories << " trajectories failed";
        if (!total.errors.empty()) msg << "; first: " << total.errors.front().second;
        fail(total.first_error.value_or(ErrorKind::NumericalOverflow), msg.str());
    }

    EnsembleStats stats;
    stats.requested = trajectories;
    stats.completed = total.values.n;
    stats.failed = total.failed;
    stats.dimension = dim;
    stats.master_seed = scenario.master_seed;
    stats.times = total.record_times;
    stats.names = names;
    const double n = static_cast<double>(stats.completed);
    const auto standard_error = [n](double m2) { return n > 1.0 ? std::sqrt(std::max(m2, 0.0) / (n - 1.0) / n) : 0.0; };
    stats.mean.assign(n_times, std::vector<double>(names.size()));
    stats.se.assign(n_times, std::vector<double>(names.size()));
    for (std::size_t t = 0; t < n_times; ++t)
        for (std::size_t o = 0; o < names.size(); ++o) {
            stats.mean[t][o] = total.values.mean[t * names.size() + o];
            stats.se[t][o] = standard_error(total.values.m2[t * names.size() + o]);
        }
    stats.slope_mean = total.slopes.mean;
    for (const double m2 : total.slopes.m2) stats.slope_se.push_back(standard_error(m2));
    if (track_density) {
        for (const auto& sum : total.density_sum) {
            Eigen::MatrixXcd mean = sum / n;
            const double purity = mean.squaredNorm();
            stats.density_se.push_back(n > 1.0 ? std::sqrt(std::max(0.0, 1.0 - purity) / (n - 1.0)) : 0.0);
            stats.mean_density.push_back(std::move(mean));
        }
    }
    stats.outcome_tally = total.tally;
    stats.unresolved = total.unresolved;
    const Eigen::VectorXd born = partition.populations(scenario.initial.amplitudes());
    stats.born_weights.assign(born.data(), born.data() + born.size());
    stats.errors = std::move(total.errors);
    stats.max_step_drift = total.max_drift;
    return stats;
}

std::vector<OutcomeFrequency> born_frequencies(const EnsembleStats& stats) {
    std::size_t resolved = 0;
    for (const auto c : stats.outcome_tally) resolved += c;
    if (static_cast<double>(resolved) < 0.99 * static_cast<double>(stats.completed) || resolved == 0) {
        std::ostringstream msg;
        msg << stats.unresolved << " of " << stats.completed
            << " trajectories did not collapse; increase the collapse rate times the horizon";
        fail(ErrorKind::InconclusiveCollapse, msg.str());
    }
    std::vector<OutcomeFrequency> out;
    const double n = static_cast<double>(resolved);
    for (std::size_t k = 0; k < stats.outcome_tally.size(); ++k) {
        OutcomeFrequency f;
        f.count = stats.outcome_tally[k];
        f.frequency = static_cast<double>(f.count) / n;
        f.se = std::sqrt(f.frequency * (1.0 - f.frequency) / n);
        f.born_weight = k < stats.born_weights.size() ? stats.born_weights[k] : 0.0;
        out.push_back(f);
    }
    return out;
}

RateFit fit_decay(std::span<const double> times, std::span<const double> magnitudes) {
    require(times.size() == magnitudes.size() && !times.empty(), ErrorKind::Data, "decay series is empty");
    const double start = magnitudes[0];
    require(start > 0.0, ErrorKind::Data, "coherence is zero at the first recorded time");
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(magnitudes[k] > kFitWindowFraction * start)) break;
        xs.push_back(times[k]);
        ys.push_back(std::log(magnitudes[k]));
    }
    if (xs.size() < 10) {
        std::ostringstream msg;
        msg << "only " << xs.size() << " recorded points before the coherence drops below "
            << kFitWindowFraction << " of its initial value; need 10";
        fail(ErrorKind::Data, msg.str());
    }
    const LinearFit fit = fit_line(xs, ys);
    if (fit.r_squared < kMinRSquared) {
        std::ostringstream msg;
        msg << "coherence decay is not exponential (R^2 = " << fit.r_squared << ")";
        fail(ErrorKind::FitQuality, msg.str());
    }
    return {std::abs(fit.slope), fit.slope_se, fit.r_squared, fit.points, xs.back()};
}

RateFit fitted_decay_rate(const EnsembleStats& stats, std::size_t i, std::size_t j) {
    require(!stats.mean_density.empty(), ErrorKind::Data, "ensemble did not track the mean density matrix");
    require(i < stats.dimension && j < stats.dimension, ErrorKind::Data, "coherence index outside the basis");
    std::vector<double> mags;
    mags.reserve(stats.mean_density.size());
    for (const auto& rho : stats.mean_density)
        mags.push_back(std::abs(rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    return fit_decay(stats.times, mags);
}

}  // namespace collapsim
