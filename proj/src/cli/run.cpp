#include "collapsim/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <Eigen/Core>
#include <openssl/evp.h>

#include "collapsim/master_equation.hpp"
#include "collapsim/observables.hpp"

#ifndef COLLAPSIM_VERSION
#define COLLAPSIM_VERSION "0.0.0"
#endif

namespace collapsim::cli {

using nlohmann::json;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Configuration:
        case ErrorKind::UnsupportedModel: return kExitConfig;
        default: return kExitNumerical;
    }
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    require(EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) == 1, ErrorKind::Resource,
            "SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

std::filesystem::path resolve_output_dir(const ScenarioConfig& cfg, const RunOptions& options) {
    if (options.out) return *options.out;
    if (cfg.output_dir) return *cfg.output_dir;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return "collapsim-out";
}

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Resource, "cannot write '" + path.string() + "'");
    out << text;
    require(static_cast<bool>(out), ErrorKind::Resource, "write to '" + path.string() + "' failed");
}

// CSV layout: coherences collapse to |mean|, every column followed by its SE.
struct Column {
    std::string name;
    std::size_t index;
    std::optional<std::size_t> imag;
    double scale = 1.0;
};

std::vector<Column> csv_columns(const std::vector<std::string>& names, double energy_scale) {
    std::vector<Column> cols;
    for (std::size_t k = 0; k < names.size(); ++k) {
        const std::string& n = names[k];
        if (n.size() > 3 && n.compare(n.size() - 3, 3, "_re") == 0) {
            cols.push_back({n.substr(0, n.size() - 3), k, k + 1, 1.0});
            ++k;
        } else {
            cols.push_back({n, k, std::nullopt, n == "energy" ? energy_scale : 1.0});
        }
    }
    return cols;
}

std::string render_csv(const EnsembleStats& stats, const std::vector<Column>& cols, double time_scale,
                       const std::string& hash) {
    std::string out = "# manifest_sha256=" + hash + "\n";
    out += "time";
    for (const auto& c : cols) out += "," + c.name + "," + c.name + "_se";
    out += "\n";
    for (std::size_t t = 0; t < stats.times.size(); ++t) {
        out += fmt17(stats.times[t] * time_scale);
        for (const auto& c : cols) {
            double m = stats.mean[t][c.index];
            double se = stats.se[t][c.index];
            if (c.imag) {
                const double re = m;
                const double im = stats.mean[t][*c.imag];
                m = std::hypot(re, im);
                const double se_re = se;
                const double se_im = stats.se[t][*c.imag];
                se = m > 0.0 ? std::hypot(re * se_re, im * se_im) / m : std::hypot(se_re, se_im);
            }
            out += "," + fmt17(m * c.scale) + "," + fmt17(se * c.scale);
        }
        out += "\n";
    }
    return out;
}

std::vector<std::string> model_labels(const ScenarioConfig& cfg) {
    std::vector<std::string> labels;
    switch (cfg.model) {
        case Model::CSL:
            labels.push_back("lattice CSL: site-density operators with Gaussian kernel exp(-(x_j-x_k)^2/(4 r_C^2)), whitened");
            break;
        case Model::GRW:
            labels.push_back("GRW: Poisson hits per particle, quantized to step ends, Gaussian localization of width r_C");
            break;
        case Model::Generic: labels.push_back("generic collapse operators scaled by sqrt(lambda)"); break;
        case Model::Unitary: labels.push_back("unitary evolution"); break;
    }
    if (cfg.model != Model::GRW)
        labels.push_back("Ito collapse equation: Euler-Maruyama collapse step, renormalization, exact exp(-i H dt)");
    labels.push_back("kinetic Hamiltonian J sum (2 - shift - shift^dagger), open boundaries, hbar = 1");
    return labels;
}

struct OracleRun {
    DensitySeries series;
    bool aligned = false;
};

std::optional<OracleRun> run_oracle(const Scenario& s) {
    const LindbladGenerator gen(s.hamiltonian, s.ops);
    const double dt = s.integrator.dt;
    const auto refine = static_cast<std::size_t>(std::max(1.0, std::ceil(dt * gen.scale() / kOracleStepBudget - 1e-12)));
    OracleRun out;
    out.series = evolve_density(DensityMatrix::pure(s.initial).values, s.hamiltonian, s.ops,
                                dt / static_cast<double>(refine), s.integrator.horizon, s.integrator.stride * refine);
    return out;
}

json fit_json(const RateFit& f, double rate_scale) {
    return {{"rate", f.rate * rate_scale}, {"se", f.se * rate_scale}, {"r_squared", f.r_squared},
            {"points", f.points}};
}

}  // namespace

RunResult run_scenario(ScenarioConfig cfg, const RunOptions& options) {
    if (options.seed) cfg.seed = *options.seed;
    const Scenario scenario = build_scenario(cfg);
    const UnitScale units = unit_scale(cfg);
    const Basis& basis = *scenario.initial.basis();
    const std::size_t dim = basis.dimension();
    const double energy_scale = 1.0 / units.time;

    const auto cols = csv_columns(scenario.record.names(basis), energy_scale);
    json column_names = json::array({"time"});
    for (const auto& c : cols) {
        column_names.push_back(c.name);
        column_names.push_back(c.name + "_se");
    }

    json manifest;
    manifest["format"] = "collapsim-run/1";
    manifest["config"] = config_to_json(cfg);
    manifest["seeds"] = {{"master", cfg.seed}, {"derivation", kSeedDerivation}, {"trajectories", cfg.trajectories},
                         {"engine", "mt19937_64 + normal_distribution"}};
    manifest["versions"] = {{"collapsim", COLLAPSIM_VERSION},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                          "." + std::to_string(EIGEN_MINOR_VERSION)},
                            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                            {"compiler", __VERSION__}};
    manifest["units"] = {{"system", cfg.units == Units::SI ? "si" : "internal"},
                         {"hbar", 1},
                         {"internal_length_m", cfg.units == Units::SI ? json(units.length) : json(nullptr)},
                         {"internal_time_s", cfg.units == Units::SI ? json(units.time) : json(nullptr)},
                         {"csv_time", cfg.units == Units::SI ? "s" : "internal"},
                         {"energy", cfg.units == Units::SI ? "s^-1 (hbar = 1)" : "internal"}};
    manifest["model_labels"] = model_labels(cfg);
    manifest["basis"] = {{"dimension", dim},
                         {"statistics", basis.statistics() == Statistics::Bosonic ? "bosonic" : "distinguishable"},
                         {"order", basis.statistics() == Statistics::Bosonic
                                       ? "occupation tuples, site 0 occupation descending"
                                       : "particle site tuples, particle 0 most significant"}};
    manifest["columns"] = column_names;
    manifest["files"] = {{"timeseries", "timeseries.csv"}, {"summary", "summary.json"}};
    const std::string hash = sha256_hex(manifest.dump());

    const std::string started = utc_now();
    EnsembleOptions eo;
    eo.workers = options.workers;
    const EnsembleStats stats = run_ensemble(scenario, cfg.trajectories, eo);

    json summary;
    summary["manifest_sha256"] = hash;
    summary["name"] = cfg.name;
    summary["model"] = to_string(cfg.model);
    summary["dimension"] = dim;
    summary["trajectories"] = {{"requested", stats.requested}, {"completed", stats.completed},
                               {"failed", stats.failed}, {"unresolved", stats.unresolved}};
    summary["max_step_drift"] = stats.max_step_drift;
    json checks = json::object();
    json report = json::array();
    bool all_pass = true;
    const auto check = [&](const std::string& name, bool pass) {
        checks[name] = pass ? "pass" : "fail";
        report.push_back(name + " check: " + (pass ? "pass" : "fail"));
        all_pass = all_pass && pass;
    };

    const bool collapse_free = cfg.model == Model::Unitary || cfg.lambda == 0.0;

    std::optional<OracleRun> oracle;
    const bool oracle_possible = !scenario.grw && scenario.ops.all_hermitian() && dim <= kOracleDimensionLimit &&
                                 !stats.mean_density.empty();
    if (cfg.oracle.value_or(true) && oracle_possible) {
        oracle = run_oracle(scenario);
        const auto& ot = oracle->series.times;
        oracle->aligned = ot.size() == stats.times.size();
        for (std::size_t t = 0; oracle->aligned && t < ot.size(); ++t)
            oracle->aligned = std::abs(ot[t] - stats.times[t]) <= 1e-9 * std::max(1.0, std::abs(ot[t]));
        json o;
        if (oracle->aligned) {
            double worst = 0.0;
            double worst_excess = -1.0;
            json at_worst;
            bool pass = true;
            for (std::size_t t = 0; t < ot.size(); ++t) {
                const double dist = trace_distance(stats.mean_density[t], oracle->series.states[t]);
                const double tol = std::max(3.0 * stats.density_se[t], 1e-2);
                pass = pass && dist <= tol;
                if (dist > worst) worst = dist;
                if (dist - tol > worst_excess) {
                    worst_excess = dist - tol;
                    at_worst = {{"time", ot[t] * units.time}, {"trace_distance", dist}, {"tolerance", tol}};
                }
            }
            o["max_trace_distance"] = worst;
            o["tightest"] = at_worst;
            o["max_trace_error"] = oracle->series.max_trace_error;
            o["min_eigenvalue"] = oracle->series.min_eigenvalue;
            o["status"] = pass ? "pass" : "fail";
            check("oracle", pass);
        } else {
            o["status"] = "skipped: oracle record times differ from the ensemble";
        }
        summary["oracle"] = o;
    } else if (cfg.oracle.value_or(false)) {
        summary["oracle"] = {{"status", "not applicable"}};
    }

    if (collapse_free) {
        bool pass = stats.max_step_drift <= 1e-10;
        if (std::find(cfg.observables.begin(), cfg.observables.end(), "energy") != cfg.observables.end()) {
            const std::size_t k = stats.observable_index("energy");
            pass = pass && std::abs(stats.slope_mean[k]) <= 3.0 * stats.slope_se[k] + 1e-12 * scenario.hamiltonian.norm();
        }
        summary["unitary"] = {{"max_step_drift", stats.max_step_drift}, {"status", pass ? "pass" : "fail"}};
        check("unitary", pass);
    }

    if (cfg.born) {
        json b;
        try {
            const auto freqs = born_frequencies(stats);
            json outcomes = json::array();
            bool pass = true;
            std::size_t resolved = 0;
            for (const auto& f : freqs) resolved += f.count;
            for (std::size_t k = 0; k < freqs.size(); ++k) {
                const auto& f = freqs[k];
                const double tol = 3.0 * std::sqrt(f.born_weight * (1.0 - f.born_weight) / static_cast<double>(resolved)) + 1e-12;
                const bool ok = std::abs(f.frequency - f.born_weight) <= tol;
                pass = pass && ok;
                outcomes.push_back({{"outcome", k}, {"count", f.count}, {"frequency", f.frequency}, {"se", f.se},
                                    {"born_weight", f.born_weight}, {"tolerance", tol}});
            }
            b["outcomes"] = outcomes;
            b["status"] = pass ? "pass" : "fail";
            check("born", pass);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InconclusiveCollapse) throw;
            b["status"] = "inconclusive";
            b["error"] = e.what();
            check("born", false);
        }
        summary["born"] = b;
    }

    if (!cfg.decay_pairs.empty()) {
        json rates = json::array();
        bool pass = true;
        for (const auto& [i, j] : cfg.decay_pairs) {
            json r = {{"pair", {i, j}}};
            try {
                const RateFit f = fitted_decay_rate(stats, i, j);
                r.update(fit_json(f, 1.0 / units.time));
                r["window_end"] = f.window_end * units.time;
                r["status"] = "pass";
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::FitQuality && e.kind() != ErrorKind::Data) throw;
                r["status"] = "fail";
                r["error"] = e.what();
                pass = false;
            }
            if (oracle && oracle->aligned) {
                std::vector<double> mags;
                for (const auto& rho : oracle->series.states)
                    mags.push_back(std::abs(rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
                try {
                    r["oracle_rate"] = fit_decay(oracle->series.times, mags).rate / units.time;
                } catch (const Error&) {
                    r["oracle_rate"] = nullptr;
                }
            }
            rates.push_back(r);
        }
        summary["decay_rates"] = rates;
        check("decay_fit", pass);
    }

    if (cfg.energy_slope) {
        json e;
        const double slope_scale = energy_scale / units.time;
        try {
            const EnergySlope es = energy_gain_slope(stats);
            e = {{"slope", es.slope * slope_scale}, {"se", es.se * slope_scale}, {"r_squared", es.r_squared},
                 {"points", es.points}};
            bool pass = true;
            if (collapse_free) {
                pass = std::abs(es.slope) <= 3.0 * es.se + 1e-12 * scenario.hamiltonian.norm();
            } else {
                pass = es.slope >= -3.0 * es.se;
                if (oracle && oracle->aligned) {
                    const EnergySlope os = oracle_energy_slope(oracle->series, scenario.hamiltonian);
                    e["oracle_slope"] = os.slope * slope_scale;
                    pass = pass && std::abs(es.slope - os.slope) <= 3.0 * es.se;
                }
            }
            e["status"] = pass ? "pass" : "fail";
            check("energy_slope", pass);
        } catch (const Error& err) {
            if (err.kind() != ErrorKind::FitQuality && err.kind() != ErrorKind::Data) throw;
            e = {{"status", "fail"}, {"error", err.what()}};
            check("energy_slope", false);
        }
        summary["energy_slope"] = e;
    }

    summary["checks"] = checks;
    summary["report"] = report;
    summary["status"] = all_pass ? "pass" : "fail";

    const std::filesystem::path dir = resolve_output_dir(cfg, options);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec, ErrorKind::Resource, "cannot create output directory '" + dir.string() + "': " + ec.message());

    const std::string csv = render_csv(stats, cols, units.time, hash);
    const std::string summary_text = summary.dump(2) + "\n";

    manifest["content_sha256"] = hash;
    manifest["outputs"] = {{"timeseries_sha256", sha256_hex(csv)}, {"summary_sha256", sha256_hex(summary_text)}};
    manifest["volatile"] = {{"started", started}, {"finished", utc_now()}, {"workers", options.workers},
                            {"output_dir", dir.string()}};

    write_file(dir / "timeseries.csv", csv);
    write_file(dir / "summary.json", summary_text);
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    RunResult result;
    result.exit_code = all_pass ? kExitOk : kExitInvariant;
    result.directory = dir;
    result.manifest_hash = hash;
    result.manifest = std::move(manifest);
    result.summary = std::move(summary);
    return result;
}

}  // namespace collapsim::cli
