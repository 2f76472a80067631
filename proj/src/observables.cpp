#include "collapsim/observables.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "collapsim/error.hpp"

namespace collapsim {

std::string to_string(PresetTag tag) {
    switch (tag) {
        case PresetTag::GRW: return "GRW";
        case PresetTag::Adler: return "Adler";
        case PresetTag::Custom: return "custom";
    }
    return "custom";
}

void CollapseParams::validate() const {
    require(std::isfinite(lambda) && lambda >= 0.0, ErrorKind::Configuration, "lambda must be >= 0");
    require(std::isfinite(r_c) && r_c > 0.0, ErrorKind::Configuration, "r_C must be > 0");
}

CollapseParams preset(const std::string& tag) {
    if (tag == "GRW") return {1e-16, 1e-7, PresetTag::GRW};
    if (tag == "Adler") return {1e-8, 1e-7, PresetTag::Adler};
    fail(ErrorKind::Configuration, "unknown preset '" + tag + "' (expected GRW or Adler)");
}

std::string presets_table() {
    return "GRW 1e-16 s^-1, r_C 1e-7 m  (weakest, most conservative rate)\n"
           "Adler 1e-8 s^-1, r_C 1e-7 m  (stronger rate proposed by Adler)\n";
}

void AmplificationInputs::validate() const {
    require(std::isfinite(n) && n >= 1.0, ErrorKind::Configuration, "n must be >= 1");
    require(std::isfinite(volumes) && volumes >= 1.0, ErrorKind::Configuration, "N must be >= 1");
    require(std::isfinite(lambda) && lambda >= 0.0, ErrorKind::Configuration, "lambda must be >= 0");
}

double amplification_rate(const AmplificationInputs& inp) {
    inp.validate();
    return inp.lambda * inp.n * inp.n * inp.volumes;
}

namespace {

double separation_factor(double separation, double r_c) {
    const double x = separation / r_c;
    return -std::expm1(-0.25 * x * x);
}

void check_geometry(double separation, double time) {
    require(std::isfinite(separation) && separation >= 0.0, ErrorKind::Configuration, "d must be >= 0");
    require(std::isfinite(time) && time >= 0.0, ErrorKind::Configuration, "t must be >= 0");
}

}  // namespace

VisibilityPrediction visibility_prediction(const CollapseParams& params, const AmplificationInputs& inp,
                                           double separation, double time) {
    params.validate();
    check_geometry(separation, time);
    AmplificationInputs scaled = inp;
    scaled.lambda = params.lambda;
    VisibilityPrediction out;
    out.rate = amplification_rate(scaled) * separation_factor(separation, params.r_c);
    out.exponent = out.rate * time;
    // stays strictly positive even when exp underflows
    out.visibility = std::max(std::exp(-out.exponent), std::numeric_limits<double>::denorm_min());
    return out;
}

double exponent_ratio(const CollapseParams& a, const CollapseParams& b, const AmplificationInputs& inp,
                      double separation, double time) {
    a.validate();
    b.validate();
    inp.validate();
    check_geometry(separation, time);
    require(b.lambda > 0.0 && separation > 0.0 && time > 0.0, ErrorKind::DegenerateInput,
            "reference exponent is zero");
    const double lambdas = a.lambda / b.lambda;
    if (a.r_c == b.r_c) return lambdas;
    return lambdas * (separation_factor(separation, a.r_c) / separation_factor(separation, b.r_c));
}

namespace {

EnergySlope fit_energy(std::span<const double> times, std::span<const double> energy) {
    if (times.size() < 10) {
        std::ostringstream msg;
        msg << "energy slope needs at least 10 recorded points, got " << times.size();
        fail(ErrorKind::Data, msg.str());
    }
    const LinearFit fit = fit_line(times, energy);
    if (fit.r_squared < kMinRSquared) {
        std::ostringstream msg;
        msg << "mean energy does not grow linearly (R^2 = " << fit.r_squared << ")";
        fail(ErrorKind::FitQuality, msg.str());
    }
    return {fit.slope, fit.slope_se, fit.r_squared, fit.points};
}

}  // namespace

EnergySlope energy_gain_slope(const EnsembleStats& stats) {
    const std::size_t k = stats.observable_index("energy");
    EnergySlope out = fit_energy(stats.times, stats.column("energy"));
    out.se = stats.slope_se[k];
    return out;
}

EnergySlope oracle_energy_slope(const DensitySeries& series, const Operator& hamiltonian) {
    const Eigen::MatrixXcd h = hamiltonian.to_dense();
    std::vector<double> energy;
    energy.reserve(series.states.size());
    for (const auto& rho : series.states) energy.push_back((rho * h).trace().real());
    return fit_energy(series.times, energy);
}

}  // namespace collapsim
