#include "doctest.h"

#include <cmath>
#include <limits>

#include "collapsim/error.hpp"
#include "collapsim/observables.hpp"

using namespace collapsim;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no collapsim::Error thrown");
    return ErrorKind::Data;
}

struct EnergyRun {
    EnergySlope slope;
    EnergySlope oracle;
};

EnergyRun free_particle(double rate, std::size_t trajectories, double horizon = 1.5) {
    const auto g = build_lattice(12, 1.0);
    const auto basis = Basis::single_particle(12);
    const auto h = kinetic_hamiltonian(g, *basis, 1.0);
    const std::vector<double> c{5.5};
    const std::vector<cplx> w{1.0};
    auto psi = make_superposition(g, basis, c, 1.5, w);
    const Eigen::MatrixXcd rho0 = DensityMatrix::pure(psi).values;
    auto ops = csl_operators(g, site_number_operators(g, *basis), rate, whiten(gaussian_kernel(g, 1.0)));
    IntegratorConfig cfg;
    cfg.dt = 0.005 * horizon / 1.5;
    cfg.horizon = horizon;
    cfg.stride = 10;
    RecordSpec spec;
    spec.kinds = {ObservableKind::Energy};
    const Scenario s{"energy", g, std::move(psi), h, ops, std::nullopt, cfg, spec, 77};
    const auto stats = run_ensemble(s, trajectories);
    return {energy_gain_slope(stats), oracle_energy_slope(evolve_density(rho0, h, ops, 0.001 * horizon / 1.5, horizon, 50), h)};
}

EnsembleStats synthetic_energy(const std::vector<double>& values) {
    EnsembleStats s;
    s.names = {"energy"};
    s.slope_mean = {0.0};
    s.slope_se = {0.01};
    for (std::size_t i = 0; i < values.size(); ++i) {
        s.times.push_back(0.1 * static_cast<double>(i));
        s.mean.push_back({values[i]});
        s.se.push_back({0.0});
    }
    return s;
}

}  // namespace

TEST_CASE("amplification rate") {
    CHECK(amplification_rate({1.0, 1.0, 1.0}) == 1.0);
    CHECK(amplification_rate({1e5, 1e5, 1e-16}) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(amplification_rate({2.0, 1.0, 0.7}) == doctest::Approx(4.0 * 0.7));
    for (int a = 1; a <= 6; ++a)
        for (int b = 1; b <= 6; ++b) {
            const AmplificationInputs base{3.0, 7.0, 0.25};
            CHECK(amplification_rate({3.0 * a, 7.0, 0.25}) == doctest::Approx(a * a * amplification_rate(base)).epsilon(1e-15));
            CHECK(amplification_rate({3.0, 7.0 * b, 0.25}) == doctest::Approx(b * amplification_rate(base)).epsilon(1e-15));
        }
    CHECK(kind_of([] { amplification_rate({0.5, 1.0, 1.0}); }) == ErrorKind::Configuration);
    CHECK(kind_of([] { amplification_rate({1.0, 0.0, 1.0}); }) == ErrorKind::Configuration);
    CHECK(kind_of([] { amplification_rate({1.0, 1.0, -1.0}); }) == ErrorKind::Configuration);
}

TEST_CASE("presets") {
    const auto grw = preset("GRW");
    const auto adler = preset("Adler");
    CHECK(grw.lambda == 1e-16);
    CHECK(adler.lambda == 1e-8);
    CHECK(grw.r_c == 1e-7);
    CHECK(adler.r_c == 1e-7);
    CHECK(grw.tag == PresetTag::GRW);
    CHECK(to_string(adler.tag) == "Adler");
    CHECK(kind_of([] { preset("CSL"); }) == ErrorKind::Configuration);
    const auto table = presets_table();
    CHECK(table.find("GRW 1e-16 s^-1, r_C 1e-7 m") != std::string::npos);
    CHECK(table.find("Adler 1e-8 s^-1, r_C 1e-7 m") != std::string::npos);
    CHECK(kind_of([] { CollapseParams{-1.0, 1e-7}.validate(); }) == ErrorKind::Configuration);
    CHECK(kind_of([] { CollapseParams{1.0, 0.0}.validate(); }) == ErrorKind::Configuration);
}

TEST_CASE("visibility prediction") {
    const CollapseParams p{1.0, 1e-7};
    const AmplificationInputs one{1.0, 1.0, 0.0};
    CHECK(visibility_prediction(p, one, 1e-3, 0.0).visibility == 1.0);
    // d >> r_C, lambda n^2 N t = 1
    const auto v = visibility_prediction(p, one, 1e-3, 1.0);
    CHECK(v.visibility == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(v.visibility == doctest::Approx(0.3679).epsilon(1e-4));
    CHECK(v.model == "approximative center-of-mass model");
    // near the threshold the two-point factor enters
    const auto near = visibility_prediction(p, one, 2e-7, 1.0);
    CHECK(near.rate == doctest::Approx(1.0 - std::exp(-1.0)));
    CHECK(visibility_prediction(p, one, 0.0, 5.0).visibility == 1.0);

    const AmplificationInputs big{1e3, 1e4, 0.0};
    for (const double t1 : {0.1, 1.0, 3.0})
        for (const double t2 : {0.2, 2.0}) {
            const double a = visibility_prediction(p, {2.0, 3.0, 0.0}, 1.5e-7, t1).visibility;
            const double b = visibility_prediction(p, {2.0, 3.0, 0.0}, 1.5e-7, t2).visibility;
            CHECK(visibility_prediction(p, {2.0, 3.0, 0.0}, 1.5e-7, t1 + t2).visibility ==
                  doctest::Approx(a * b).epsilon(1e-12));
        }
    // monotone in d
    double last = 1.0;
    for (const double d : {0.0, 1e-8, 1e-7, 1e-6, 1e-5}) {
        const double vis = visibility_prediction(p, {2.0, 3.0, 0.0}, d, 0.1).visibility;
        CHECK(vis <= last);
        last = vis;
    }
    CHECK(visibility_prediction(p, big, 1e-3, 1.0).visibility > 0.0);
    CHECK(visibility_prediction(p, big, 1e-3, 1.0).visibility <= 1.0);
    CHECK(kind_of([&] { visibility_prediction(p, one, -1.0, 1.0); }) == ErrorKind::Configuration);
    CHECK(kind_of([&] { visibility_prediction(p, one, 1.0, -1.0); }) == ErrorKind::Configuration);
}

TEST_CASE("regime separation between the presets") {
    const auto grw = preset("GRW");
    const auto adler = preset("Adler");
    for (const double n : {1.0, 1e3, 1e6})
        for (const double volumes : {1.0, 1e4})
            for (const double d : {1e-6, 1e-3, 1.0})
                for (const double t : {1e-3, 1.0, 1e5}) {
                    const AmplificationInputs inp{n, volumes, 0.0};
                    CHECK(exponent_ratio(adler, grw, inp, d, t) == 1e8);
                    // naive division stays within a few ulps of the same value
                    const double naive = visibility_prediction(adler, inp, d, t).exponent /
                                         visibility_prediction(grw, inp, d, t).exponent;
                    CHECK(std::abs(naive - 1e8) <= 4.0 * 1e8 * std::numeric_limits<double>::epsilon());
                }
    CHECK(kind_of([&] { exponent_ratio(adler, grw, {1.0, 1.0, 0.0}, 0.0, 1.0); }) == ErrorKind::DegenerateInput);
    const CollapseParams wide{1e-8, 1e-6};
    CHECK(exponent_ratio(wide, grw, {1.0, 1.0, 0.0}, 1e-7, 1.0) < 1e8);
}

TEST_CASE("energy gain slope") {
    SUBCASE("zero rate") {
        const auto r = free_particle(0.0, 50);
        CHECK(std::abs(r.slope.slope) <= 3.0 * r.slope.se + 1e-12);
    }
    SUBCASE("matches the master equation") {
        const auto a = free_particle(1.0, 1500);
        MESSAGE("slope " << a.slope.slope << " +- " << a.slope.se << ", oracle " << a.oracle.slope);
        CHECK(a.slope.r_squared >= 0.9);
        CHECK(a.slope.points >= 10);
        CHECK(a.slope.slope >= -3.0 * a.slope.se);
        CHECK(std::abs(a.slope.slope - a.oracle.slope) <= 3.0 * a.slope.se);
    }
    SUBCASE("doubling lambda doubles the early slope") {
        // short window: the bounded lattice band saturates at larger lambda t
        const auto a = free_particle(1.0, 1500, 0.15);
        const auto b = free_particle(2.0, 1500, 0.15);
        MESSAGE("slopes " << a.slope.slope << ", " << b.slope.slope << "; oracle " << a.oracle.slope << ", " << b.oracle.slope);
        CHECK(std::abs(b.slope.slope - 2.0 * a.slope.slope) <= 3.0 * std::hypot(b.slope.se, 2.0 * a.slope.se));
        CHECK(b.oracle.slope == doctest::Approx(2.0 * a.oracle.slope).epsilon(0.02));
    }
    SUBCASE("fit errors") {
        std::vector<double> wiggle;
        for (int i = 0; i < 20; ++i) wiggle.push_back(i % 2 ? 1.0 : -1.0);
        CHECK(kind_of([&] { energy_gain_slope(synthetic_energy(wiggle)); }) == ErrorKind::FitQuality);
        CHECK(kind_of([&] { energy_gain_slope(synthetic_energy({1.0, 2.0, 3.0})); }) == ErrorKind::Data);
        std::vector<double> line;
        for (int i = 0; i < 20; ++i) line.push_back(0.5 + 0.3 * 0.1 * i);
        const auto fit = energy_gain_slope(synthetic_energy(line));
        CHECK(fit.slope == doctest::Approx(0.3));
        CHECK(fit.se == 0.01);
    }
}
