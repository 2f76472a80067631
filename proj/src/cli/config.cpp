#include "collapsim/cli.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "collapsim/observables.hpp"

namespace collapsim::cli {

std::string to_string(Model model) {
    switch (model) {
        case Model::CSL: return "csl";
        case Model::GRW: return "grw";
        case Model::Unitary: return "unitary";
        case Model::Generic: return "generic";
    }
    return "csl";
}

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
    std::string out = "invalid configuration";
    for (const auto& i : issues) out += "\n  " + i;
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : Error(ErrorKind::Configuration, join_issues(issues)), issues_(std::move(issues)) {}

namespace {

class Reader {
public:
    std::vector<std::string> issues;

    void error(const YAML::Node& node, const std::string& msg) {
        std::ostringstream out;
        if (node.IsDefined() && !node.Mark().is_null())
            out << "line " << node.Mark().line + 1 << ", column " << node.Mark().column + 1 << ": ";
        out << msg;
        issues.push_back(out.str());
    }

    bool expect_map(const YAML::Node& node, const std::string& path) {
        if (node.IsMap()) return true;
        error(node, path + " must be a mapping");
        return false;
    }

    void check_keys(const YAML::Node& map, const std::string& path, const std::set<std::string>& allowed) {
        for (const auto& kv : map) {
            const std::string key = kv.first.as<std::string>();
            if (!allowed.count(key))
                error(kv.first, "unknown key '" + key + "'" + (path.empty() ? "" : " in " + path));
        }
    }

    template <class T>
    std::optional<T> scalar(const YAML::Node& node, const std::string& path, const char* what) {
        if (!node.IsScalar()) {
            error(node, path + " must be " + what);
            return std::nullopt;
        }
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            error(node, path + " must be " + what);
            return std::nullopt;
        }
    }

    std::optional<double> real(const YAML::Node& node, const std::string& path) {
        auto v = scalar<double>(node, path, "a number");
        if (v && !std::isfinite(*v)) {
            error(node, path + " must be finite");
            return std::nullopt;
        }
        return v;
    }

    std::optional<std::size_t> count(const YAML::Node& node, const std::string& path) {
        const auto v = scalar<long long>(node, path, "an integer");
        if (!v) return std::nullopt;
        if (*v < 0) {
            error(node, path + " must be a non-negative integer");
            return std::nullopt;
        }
        return static_cast<std::size_t>(*v);
    }

    std::optional<cplx> complex(const YAML::Node& node, const std::string& path) {
        if (node.IsSequence()) {
            if (node.size() != 2) {
                error(node, path + " must be a number or a [re, im] pair");
                return std::nullopt;
            }
            const auto re = real(node[0], path + "[0]");
            const auto im = real(node[1], path + "[1]");
            if (!re || !im) return std::nullopt;
            return cplx(*re, *im);
        }
        const auto re = real(node, path);
        if (!re) return std::nullopt;
        return cplx(*re, 0.0);
    }

    template <class F>
    void sequence(const YAML::Node& node, const std::string& path, F&& each) {
        if (!node.IsSequence()) {
            error(node, path + " must be a list");
            return;
        }
        for (std::size_t i = 0; i < node.size(); ++i) each(node[i], path + "[" + std::to_string(i) + "]");
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs(const YAML::Node& node, const std::string& path) {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        sequence(node, path, [&](const YAML::Node& item, const std::string& p) {
            if (!item.IsSequence() || item.size() != 2) {
                error(item, p + " must be a pair [i, j]");
                return;
            }
            const auto i = count(item[0], p + "[0]");
            const auto j = count(item[1], p + "[1]");
            if (i && j) out.emplace_back(*i, *j);
        });
        return out;
    }
};

// n choose k, saturating
double binomial(std::size_t n, std::size_t k) {
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

void parse_document(const YAML::Node& root, Reader& rd, ScenarioConfig& cfg) {
    if (!rd.expect_map(root, "the document")) return;
    rd.check_keys(root, "", {"name", "model", "units", "lattice", "particles", "initial_state", "params",
                             "hamiltonian", "generic_operators", "integrator", "ensemble", "observables",
                             "coherence_pairs", "analysis", "output"});

    if (const auto n = root["name"]) {
        if (auto v = rd.scalar<std::string>(n, "name", "a string")) cfg.name = *v;
    }
    bool model_given = false;
    if (const auto n = root["model"]) {
        if (auto v = rd.scalar<std::string>(n, "model", "a string")) {
            model_given = true;
            if (*v == "csl" || *v == "CSL") cfg.model = Model::CSL;
            else if (*v == "grw" || *v == "GRW") cfg.model = Model::GRW;
            else if (*v == "unitary") cfg.model = Model::Unitary;
            else if (*v == "generic") cfg.model = Model::Generic;
            else {
                rd.error(n, "model must be one of csl, grw, unitary, generic (got '" + *v + "')");
                model_given = false;
            }
        }
    }
    if (!model_given && !root["model"]) rd.error(root, "missing required key 'model'");

    if (const auto n = root["units"]) {
        if (auto v = rd.scalar<std::string>(n, "units", "a string")) {
            if (*v == "internal") cfg.units = Units::Internal;
            else if (*v == "si" || *v == "SI") cfg.units = Units::SI;
            else rd.error(n, "units must be 'internal' or 'si'");
        }
    }

    if (const auto n = root["lattice"]; n && rd.expect_map(n, "lattice")) {
        rd.check_keys(n, "lattice", {"sites", "spacing"});
        if (n["sites"]) {
            if (auto v = rd.count(n["sites"], "lattice.sites")) {
                cfg.sites = *v;
                if (*v < 2) rd.error(n["sites"], "lattice.sites must be >= 2");
            }
        } else {
            rd.error(n, "missing required key 'lattice.sites'");
        }
        if (n["spacing"]) {
            if (auto v = rd.real(n["spacing"], "lattice.spacing")) {
                cfg.spacing = *v;
                if (*v <= 0.0) rd.error(n["spacing"], "lattice.spacing must be > 0");
            }
        }
    } else if (!root["lattice"]) {
        rd.error(root, "missing required key 'lattice'");
    }

    if (const auto n = root["particles"]; n && rd.expect_map(n, "particles")) {
        rd.check_keys(n, "particles", {"count", "statistics"});
        if (n["count"]) {
            if (auto v = rd.count(n["count"], "particles.count")) {
                cfg.particles = *v;
                if (*v < 1) rd.error(n["count"], "particles.count must be >= 1");
            }
        }
        if (n["statistics"]) {
            if (auto v = rd.scalar<std::string>(n["statistics"], "particles.statistics", "a string")) {
                if (*v == "distinguishable") cfg.statistics = Statistics::Distinguishable;
                else if (*v == "bosonic") cfg.statistics = Statistics::Bosonic;
                else rd.error(n["statistics"], "particles.statistics must be 'distinguishable' or 'bosonic'");
            }
        }
    }

    if (const auto n = root["initial_state"]; n && rd.expect_map(n, "initial_state")) {
        rd.check_keys(n, "initial_state", {"centers", "width", "weights", "amplitudes"});
        if (n["centers"])
            rd.sequence(n["centers"], "initial_state.centers", [&](const YAML::Node& x, const std::string& p) {
                if (auto v = rd.real(x, p)) cfg.centers.push_back(*v);
            });
        if (n["width"]) {
            if (auto v = rd.real(n["width"], "initial_state.width")) {
                cfg.width = *v;
                if (*v < 0.0) rd.error(n["width"], "initial_state.width must be >= 0");
            }
        }
        if (n["weights"])
            rd.sequence(n["weights"], "initial_state.weights", [&](const YAML::Node& x, const std::string& p) {
                if (auto v = rd.complex(x, p)) cfg.weights.push_back(*v);
            });
        if (n["amplitudes"])
            rd.sequence(n["amplitudes"], "initial_state.amplitudes", [&](const YAML::Node& x, const std::string& p) {
                if (auto v = rd.complex(x, p)) cfg.amplitudes.push_back(*v);
            });
        if (n["amplitudes"] && (n["centers"] || n["weights"] || n["width"]))
            rd.error(n, "initial_state.amplitudes cannot be combined with centers, width or weights");
        if (!n["amplitudes"] && !n["centers"]) rd.error(n, "initial_state needs 'centers' or 'amplitudes'");
    } else if (!root["initial_state"]) {
        rd.error(root, "missing required key 'initial_state'");
    }

    bool lambda_given = false;
    if (const auto n = root["params"]; n && rd.expect_map(n, "params")) {
        rd.check_keys(n, "params", {"preset", "lambda", "r_c"});
        if (n["preset"]) {
            if (auto v = rd.scalar<std::string>(n["preset"], "params.preset", "a string")) {
                cfg.preset = *v;
                if (*v != "GRW" && *v != "Adler") rd.error(n["preset"], "unknown preset '" + *v + "' (expected GRW or Adler)");
                if (n["lambda"] || n["r_c"]) rd.error(n["preset"], "params.preset cannot be combined with lambda or r_c");
            }
        }
        if (n["lambda"]) {
            if (auto v = rd.real(n["lambda"], "params.lambda")) {
                cfg.lambda = *v;
                lambda_given = true;
                if (*v < 0.0) rd.error(n["lambda"], "params.lambda: λ must be ≥ 0");
            }
        }
        if (n["r_c"]) {
            if (auto v = rd.real(n["r_c"], "params.r_c")) {
                cfg.r_c = *v;
                if (*v <= 0.0) rd.error(n["r_c"], "params.r_c: r_C must be > 0");
            }
        }
    }
    if (cfg.preset && (*cfg.preset == "GRW" || *cfg.preset == "Adler")) {
        const CollapseParams p = preset(*cfg.preset);
        cfg.lambda = p.lambda;
        cfg.r_c = p.r_c;
        lambda_given = true;
    }

    if (const auto n = root["hamiltonian"]; n && rd.expect_map(n, "hamiltonian")) {
        rd.check_keys(n, "hamiltonian", {"hopping"});
        if (n["hopping"]) {
            if (auto v = rd.real(n["hopping"], "hamiltonian.hopping")) cfg.hopping = *v;
        }
    }

    if (const auto n = root["generic_operators"]) {
        rd.sequence(n, "generic_operators", [&](const YAML::Node& item, const std::string& p) {
            if (!rd.expect_map(item, p)) return;
            rd.check_keys(item, p, {"diagonal", "matrix"});
            GenericOperatorSpec spec;
            if (item["diagonal"]) {
                std::vector<double> d;
                rd.sequence(item["diagonal"], p + ".diagonal", [&](const YAML::Node& x, const std::string& q) {
                    if (auto v = rd.real(x, q)) d.push_back(*v);
                });
                spec.diagonal = std::move(d);
            }
            if (item["matrix"]) {
                std::vector<std::vector<cplx>> m;
                rd.sequence(item["matrix"], p + ".matrix", [&](const YAML::Node& row, const std::string& q) {
                    std::vector<cplx> r;
                    rd.sequence(row, q, [&](const YAML::Node& x, const std::string& s) {
                        if (auto v = rd.complex(x, s)) r.push_back(*v);
                    });
                    m.push_back(std::move(r));
                });
                spec.matrix = std::move(m);
            }
            if (spec.diagonal.has_value() == spec.matrix.has_value())
                rd.error(item, p + " needs exactly one of 'diagonal' or 'matrix'");
            cfg.generic_operators.push_back(std::move(spec));
        });
    }

    if (const auto n = root["integrator"]; n && rd.expect_map(n, "integrator")) {
        rd.check_keys(n, "integrator", {"dt", "horizon", "stride", "max_norm_drift"});
        if (n["dt"]) {
            if (auto v = rd.real(n["dt"], "integrator.dt")) {
                cfg.dt = *v;
                if (*v <= 0.0) rd.error(n["dt"], "integrator.dt must be > 0");
            }
        } else {
            rd.error(n, "missing required key 'integrator.dt'");
        }
        if (n["horizon"]) {
            if (auto v = rd.real(n["horizon"], "integrator.horizon")) {
                cfg.horizon = *v;
                if (*v <= 0.0) rd.error(n["horizon"], "integrator.horizon must be > 0");
                else if (cfg.dt > 0.0 && *v < cfg.dt) rd.error(n["horizon"], "integrator.horizon must be >= dt");
            }
        } else {
            rd.error(n, "missing required key 'integrator.horizon'");
        }
        if (n["stride"]) {
            if (auto v = rd.count(n["stride"], "integrator.stride")) {
                cfg.stride = *v;
                if (*v < 1) rd.error(n["stride"], "integrator.stride must be >= 1");
            }
        }
        if (n["max_norm_drift"]) {
            if (auto v = rd.real(n["max_norm_drift"], "integrator.max_norm_drift")) {
                cfg.max_norm_drift = *v;
                if (*v <= 0.0) rd.error(n["max_norm_drift"], "integrator.max_norm_drift must be > 0");
            }
        }
    } else if (!root["integrator"]) {
        rd.error(root, "missing required key 'integrator'");
    }

    if (const auto n = root["ensemble"]; n && rd.expect_map(n, "ensemble")) {
        rd.check_keys(n, "ensemble", {"trajectories", "seed"});
        if (n["trajectories"]) {
            if (auto v = rd.count(n["trajectories"], "ensemble.trajectories")) {
                cfg.trajectories = *v;
                if (*v < 1) rd.error(n["trajectories"], "ensemble.trajectories must be >= 1");
            }
        }
        if (n["seed"]) {
            if (auto v = rd.scalar<std::uint64_t>(n["seed"], "ensemble.seed", "an unsigned 64-bit integer"))
                cfg.seed = *v;
        }
    }

    if (const auto n = root["observables"]) {
        cfg.observables.clear();
        rd.sequence(n, "observables", [&](const YAML::Node& x, const std::string& p) {
            auto v = rd.scalar<std::string>(x, p, "a string");
            if (!v) return;
            static const std::set<std::string> known{"populations", "density", "coherence", "energy", "norm_drift"};
            if (!known.count(*v)) {
                rd.error(x, "unknown observable '" + *v + "' (expected populations, density, coherence, energy, norm_drift)");
                return;
            }
            if (std::find(cfg.observables.begin(), cfg.observables.end(), *v) != cfg.observables.end()) {
                rd.error(x, "observable '" + *v + "' listed twice");
                return;
            }
            cfg.observables.push_back(*v);
        });
    }
    if (const auto n = root["coherence_pairs"]) cfg.coherence_pairs = rd.pairs(n, "coherence_pairs");

    if (const auto n = root["analysis"]; n && rd.expect_map(n, "analysis")) {
        rd.check_keys(n, "analysis", {"born", "decay_pairs", "energy_slope", "oracle"});
        if (n["born"]) {
            if (auto v = rd.scalar<bool>(n["born"], "analysis.born", "true or false")) cfg.born = *v;
        }
        if (n["decay_pairs"]) cfg.decay_pairs = rd.pairs(n["decay_pairs"], "analysis.decay_pairs");
        if (n["energy_slope"]) {
            if (auto v = rd.scalar<bool>(n["energy_slope"], "analysis.energy_slope", "true or false"))
                cfg.energy_slope = *v;
        }
        if (n["oracle"]) {
            if (auto v = rd.scalar<bool>(n["oracle"], "analysis.oracle", "true or false")) cfg.oracle = *v;
        }
    }

    if (const auto n = root["output"]; n && rd.expect_map(n, "output")) {
        rd.check_keys(n, "output", {"dir"});
        if (n["dir"]) {
            if (auto v = rd.scalar<std::string>(n["dir"], "output.dir", "a string")) cfg.output_dir = *v;
        }
    }

    // cross-field checks
    if (!model_given) return;
    if (cfg.model == Model::Unitary) {
        if (lambda_given && cfg.lambda != 0.0) rd.error(root["params"], "model 'unitary' requires lambda = 0");
        cfg.lambda = 0.0;
    } else if (!lambda_given) {
        rd.error(root, "missing collapse rate: set params.lambda or params.preset");
    }
    if (cfg.units == Units::SI && cfg.model != Model::Unitary && !(cfg.lambda > 0.0))
        rd.error(root, "units 'si' need lambda > 0 to fix the time unit");
    if (cfg.preset && cfg.units != Units::SI) rd.error(root["params"]["preset"], "presets are SI values; set units: si");
    if (cfg.model == Model::GRW && cfg.statistics != Statistics::Distinguishable)
        rd.error(root["particles"], "model 'grw' supports distinguishable particles only");
    if (cfg.model == Model::Generic && cfg.generic_operators.empty())
        rd.error(root, "model 'generic' needs a non-empty generic_operators list");
    if (cfg.model != Model::Generic && !cfg.generic_operators.empty())
        rd.error(root["generic_operators"], "generic_operators are only used by model 'generic'");

    double dim = 0.0;
    if (cfg.sites >= 2 && cfg.particles >= 1) {
        dim = cfg.statistics == Statistics::Distinguishable
                  ? std::pow(static_cast<double>(cfg.sites), static_cast<double>(cfg.particles))
                  : binomial(cfg.sites + cfg.particles - 1, cfg.particles);
        if (dim > static_cast<double>(kDefaultDimensionCap)) {
            std::ostringstream msg;
            msg << "Hilbert-space dimension " << dim << " exceeds the cap " << kDefaultDimensionCap;
            rd.error(root["particles"] ? root["particles"] : root["lattice"], msg.str());
            dim = 0.0;
        }
    }
    const auto d = static_cast<std::size_t>(dim);

    if (!cfg.amplitudes.empty() && d > 0 && cfg.amplitudes.size() != d) {
        std::ostringstream msg;
        msg << "initial_state.amplitudes has " << cfg.amplitudes.size() << " entries; the basis has " << d;
        rd.error(root["initial_state"]["amplitudes"], msg.str());
    }
    if (!cfg.weights.empty() && cfg.weights.size() != cfg.centers.size())
        rd.error(root["initial_state"]["weights"], "initial_state.weights must have one entry per center");
    if (cfg.sites >= 1) {
        const double extent = static_cast<double>(cfg.sites - 1) * cfg.spacing;
        for (std::size_t i = 0; i < cfg.centers.size(); ++i)
            if (cfg.centers[i] < 0.0 || cfg.centers[i] > extent * (1.0 + 1e-12)) {
                std::ostringstream msg;
                msg << "initial_state.centers[" << i << "] = " << cfg.centers[i] << " lies outside the lattice [0, "
                    << extent << "]";
                rd.error(root["initial_state"]["centers"][i], msg.str());
            }
    }
    for (std::size_t k = 0; k < cfg.generic_operators.size() && d > 0; ++k) {
        const auto& op = cfg.generic_operators[k];
        const std::string p = "generic_operators[" + std::to_string(k) + "]";
        if (op.diagonal && op.diagonal->size() != d)
            rd.error(root["generic_operators"][k], p + ".diagonal must have " + std::to_string(d) + " entries");
        if (op.matrix) {
            bool ok = op.matrix->size() == d;
            for (const auto& row : *op.matrix) ok = ok && row.size() == d;
            if (!ok) rd.error(root["generic_operators"][k], p + ".matrix must be " + std::to_string(d) + " x " + std::to_string(d));
        }
    }

    const auto has = [&](const char* o) {
        return std::find(cfg.observables.begin(), cfg.observables.end(), o) != cfg.observables.end();
    };
    if (has("coherence") && cfg.coherence_pairs.empty())
        rd.error(root["observables"], "observable 'coherence' needs coherence_pairs");
    if (!has("coherence") && !cfg.coherence_pairs.empty())
        rd.error(root["coherence_pairs"], "coherence_pairs given but 'coherence' is not an observable");
    for (const auto& [i, j] : cfg.coherence_pairs)
        if (d > 0 && (i >= d || j >= d))
            rd.error(root["coherence_pairs"], "coherence pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                                  ") outside the basis of dimension " + std::to_string(d));
    for (const auto& [i, j] : cfg.decay_pairs)
        if (d > 0 && (i >= d || j >= d || i == j))
            rd.error(root["analysis"]["decay_pairs"], "decay pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                                          ") must be two distinct basis indices below " + std::to_string(d));
    if (!cfg.decay_pairs.empty() && d > EnsembleOptions{}.density_dimension_limit)
        rd.error(root["analysis"]["decay_pairs"], "decay fits need the mean density matrix, tracked only up to dimension " +
                                                      std::to_string(EnsembleOptions{}.density_dimension_limit));
    if (cfg.energy_slope && !has("energy"))
        rd.error(root["analysis"]["energy_slope"], "analysis.energy_slope needs the 'energy' observable");
    if (cfg.oracle.value_or(false) && d > kOracleDimensionLimit)
        rd.error(root["analysis"]["oracle"], "the oracle comparison is limited to dimension " +
                                                 std::to_string(kOracleDimensionLimit));
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        std::ostringstream msg;
        msg << "syntax error at line " << e.mark.line + 1 << ", column " << e.mark.column + 1 << ": " << e.msg;
        throw ConfigError({msg.str()});
    }
    Reader rd;
    ScenarioConfig cfg;
    try {
        parse_document(root, rd, cfg);
    } catch (const YAML::Exception& e) {
        rd.issues.push_back(std::string("malformed document: ") + e.what());
    }
    if (!rd.issues.empty()) throw ConfigError(std::move(rd.issues));
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot read configuration file '" + path.string() + "'"});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace {

nlohmann::json complex_json(cplx z) {
    if (z.imag() == 0.0) return z.real();
    return nlohmann::json::array({z.real(), z.imag()});
}

nlohmann::json pairs_json(const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    auto out = nlohmann::json::array();
    for (const auto& [i, j] : pairs) out.push_back({i, j});
    return out;
}

}  // namespace

nlohmann::json config_to_json(const ScenarioConfig& cfg) {
    using nlohmann::json;
    json j;
    j["name"] = cfg.name;
    j["model"] = to_string(cfg.model);
    j["units"] = cfg.units == Units::SI ? "si" : "internal";
    j["lattice"] = {{"sites", cfg.sites}, {"spacing", cfg.spacing}};
    j["particles"] = {{"count", cfg.particles},
                      {"statistics", cfg.statistics == Statistics::Bosonic ? "bosonic" : "distinguishable"}};
    json init = json::object();
    if (cfg.amplitudes.empty()) {
        init["centers"] = cfg.centers;
        init["width"] = cfg.width;
        auto w = json::array();
        if (cfg.weights.empty())
            for (std::size_t i = 0; i < cfg.centers.size(); ++i) w.push_back(1.0);
        for (const auto z : cfg.weights) w.push_back(complex_json(z));
        init["weights"] = w;
    } else {
        auto a = json::array();
        for (const auto z : cfg.amplitudes) a.push_back(complex_json(z));
        init["amplitudes"] = a;
    }
    j["initial_state"] = init;
    j["params"] = {{"preset", cfg.preset ? json(*cfg.preset) : json(nullptr)}, {"lambda", cfg.lambda}, {"r_c", cfg.r_c}};
    j["hamiltonian"] = {{"hopping", cfg.hopping}};
    auto ops = json::array();
    for (const auto& op : cfg.generic_operators) {
        if (op.diagonal) {
            ops.push_back({{"diagonal", *op.diagonal}});
        } else {
            auto m = json::array();
            for (const auto& row : *op.matrix) {
                auto r = json::array();
                for (const auto z : row) r.push_back(complex_json(z));
                m.push_back(r);
            }
            ops.push_back({{"matrix", m}});
        }
    }
    j["generic_operators"] = ops;
    j["integrator"] = {{"dt", cfg.dt}, {"horizon", cfg.horizon}, {"stride", cfg.stride},
                       {"max_norm_drift", cfg.max_norm_drift}};
    j["ensemble"] = {{"trajectories", cfg.trajectories}, {"seed", cfg.seed}};
    j["observables"] = cfg.observables;
    j["coherence_pairs"] = pairs_json(cfg.coherence_pairs);
    j["analysis"] = {{"born", cfg.born},
                     {"decay_pairs", pairs_json(cfg.decay_pairs)},
                     {"energy_slope", cfg.energy_slope},
                     {"oracle", cfg.oracle ? json(*cfg.oracle) : json("auto")}};
    return j;
}

}  // namespace collapsim::cli
