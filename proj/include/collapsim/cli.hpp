#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "collapsim/ensemble.hpp"
#include "collapsim/error.hpp"

namespace collapsim::cli {

enum class Model { CSL, GRW, Unitary, Generic };
enum class Units { Internal, SI };

std::string to_string(Model model);

struct GenericOperatorSpec {
    std::optional<std::vector<double>> diagonal;
    std::optional<std::vector<std::vector<cplx>>> matrix;
};

/// Parsed configuration, values as written (before any unit conversion).
struct ScenarioConfig {
    std::string name = "scenario";
    Model model = Model::CSL;
    Units units = Units::Internal;

    std::size_t sites = 0;
    double spacing = 1.0;
    std::size_t particles = 1;
    Statistics statistics = Statistics::Distinguishable;

    std::vector<double> centers;
    double width = 0.0;
    std::vector<cplx> weights;      // empty: equal weights
    std::vector<cplx> amplitudes;   // explicit state, exclusive with centers

    std::optional<std::string> preset;
    double lambda = 0.0;
    double r_c = 1.0;
    double hopping = 0.0;
    std::vector<GenericOperatorSpec> generic_operators;

    double dt = 0.0;
    double horizon = 0.0;
    std::size_t stride = 1;
    double max_norm_drift = kDefaultMaxNormDrift;

    std::size_t trajectories = 1000;
    std::uint64_t seed = 0;

    std::vector<std::string> observables{"populations"};
    std::vector<std::pair<std::size_t, std::size_t>> coherence_pairs;

    bool born = false;
    std::vector<std::pair<std::size_t, std::size_t>> decay_pairs;
    bool energy_slope = false;
    std::optional<bool> oracle;     // unset: run whenever the dimension allows

    std::optional<std::string> output_dir;
};

/// Every schema and semantic problem found in one document.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    std::vector<std::string> issues_;
};

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Resolved configuration, defaults included.
nlohmann::json config_to_json(const ScenarioConfig& cfg);

/// Length and time units applied at the scenario boundary.
struct UnitScale {
    double length = 1.0;   // metres per internal length unit (SI) or 1
    double time = 1.0;     // seconds per internal time unit (SI) or 1
};

UnitScale unit_scale(const ScenarioConfig& cfg);
Scenario build_scenario(const ScenarioConfig& cfg);

inline constexpr const char* kOutDirEnv = "COLLAPSIM_OUT_DIR";
inline constexpr std::size_t kOracleDimensionLimit = 16;

struct RunOptions {
    std::size_t workers = 1;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitInvariant = 4 };
int exit_code_for(ErrorKind kind);

std::filesystem::path resolve_output_dir(const ScenarioConfig& cfg, const RunOptions& options);

struct RunResult {
    int exit_code = kExitOk;
    std::filesystem::path directory;
    std::string manifest_hash;
    nlohmann::json manifest;
    nlohmann::json summary;
};

/// Runs the ensemble plus requested analyses and writes manifest.json,
/// timeseries.csv and summary.json. Engine errors propagate.
RunResult run_scenario(ScenarioConfig cfg, const RunOptions& options);

std::string sha256_hex(const std::string& data);

}  // namespace collapsim::cli
