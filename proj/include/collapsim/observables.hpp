#pragma once

#include <span>
#include <string>

#include "collapsim/collapse_operators.hpp"
#include "collapsim/ensemble.hpp"
#include "collapsim/fitting.hpp"
#include "collapsim/master_equation.hpp"
#include "collapsim/state_space.hpp"

namespace collapsim {

enum class PresetTag { GRW, Adler, Custom };
std::string to_string(PresetTag tag);

/// SI parameters: lambda in s^-1, r_c in m.
struct CollapseParams {
    double lambda = 0.0;
    double r_c = 1e-7;
    PresetTag tag = PresetTag::Custom;

    void validate() const;
};

CollapseParams preset(const std::string& tag);
/// One line per preset: name, rate, correlation length, provenance.
std::string presets_table();

struct AmplificationInputs {
    double n = 1.0;       // constituents per r_C volume
    double volumes = 1.0; // r_C volumes in the object
    double lambda = 0.0;

    void validate() const;
};

/// lambda * n^2 * N
double amplification_rate(const AmplificationInputs& inp);

inline constexpr const char* kVisibilityModelLabel = "approximative center-of-mass model";

struct VisibilityPrediction {
    double visibility = 1.0;
    double exponent = 0.0;   // Gamma_eff * t
    double rate = 0.0;       // Gamma_eff in s^-1
    std::string model = kVisibilityModelLabel;
};

/// V = exp(-lambda n^2 N (1 - exp(-d^2 / (4 r_C^2))) t); params.lambda overrides inp.lambda.
VisibilityPrediction visibility_prediction(const CollapseParams& params, const AmplificationInputs& inp,
                                           double separation, double time);

/// exponent(a) / exponent(b) at identical inputs, with shared factors cancelled
/// before dividing.
double exponent_ratio(const CollapseParams& a, const CollapseParams& b, const AmplificationInputs& inp,
                      double separation, double time);

struct EnergySlope {
    double slope = 0.0;
    double se = 0.0;
    double r_squared = 1.0;
    std::size_t points = 0;
};

/// Linear fit of the ensemble-mean "energy" column; the uncertainty is the
/// spread of per-trajectory slopes.
EnergySlope energy_gain_slope(const EnsembleStats& stats);

/// Same fit applied to tr(rho(t) H) from the master-equation oracle.
EnergySlope oracle_energy_slope(const DensitySeries& series, const Operator& hamiltonian);

}  // namespace collapsim
