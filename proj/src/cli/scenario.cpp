#include "collapsim/cli.hpp"

#include <cmath>

#include "collapsim/collapse_operators.hpp"

namespace collapsim::cli {

UnitScale unit_scale(const ScenarioConfig& cfg) {
    if (cfg.units == Units::Internal) return {};
    UnitScale s;
    s.length = cfg.r_c;
    s.time = cfg.lambda > 0.0 ? 1.0 / cfg.lambda : 1.0;
    return s;
}

namespace {

RecordSpec record_spec(const ScenarioConfig& cfg) {
    RecordSpec spec;
    spec.kinds.clear();
    for (const auto& o : cfg.observables) {
        if (o == "populations") spec.kinds.push_back(ObservableKind::Populations);
        else if (o == "density") spec.kinds.push_back(ObservableKind::SiteDensity);
        else if (o == "coherence") spec.kinds.push_back(ObservableKind::Coherence);
        else if (o == "energy") spec.kinds.push_back(ObservableKind::Energy);
        else if (o == "norm_drift") spec.kinds.push_back(ObservableKind::NormDrift);
        else fail(ErrorKind::Configuration, "unknown observable '" + o + "'");
    }
    spec.coherence_pairs = cfg.coherence_pairs;
    return spec;
}

Operator generic_operator(const GenericOperatorSpec& spec, double coupling) {
    if (spec.diagonal) return Operator::diagonal(coupling * Eigen::Map<const Eigen::VectorXd>(
        spec.diagonal->data(), static_cast<Eigen::Index>(spec.diagonal->size())));
    const auto d = static_cast<Eigen::Index>(spec.matrix->size());
    Eigen::MatrixXcd m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = coupling * (*spec.matrix)[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return Operator::dense(std::move(m));
}

}  // namespace

Scenario build_scenario(const ScenarioConfig& cfg) {
    const UnitScale u = unit_scale(cfg);
    // internal units: lengths in r_C, times in 1/lambda when SI
    const double rate = cfg.units == Units::SI ? (cfg.model == Model::Unitary ? 0.0 : 1.0) : cfg.lambda;
    const double r_c = cfg.units == Units::SI ? 1.0 : cfg.r_c;

    const LatticeGrid grid = build_lattice(cfg.sites, cfg.spacing / u.length);
    BasisPtr basis = cfg.statistics == Statistics::Bosonic ? Basis::bosonic(cfg.sites, cfg.particles)
                                                           : Basis::distinguishable(cfg.sites, cfg.particles);
    std::optional<StateVector> initial;
    if (cfg.amplitudes.empty()) {
        std::vector<double> centers;
        for (const double c : cfg.centers) centers.push_back(c / u.length);
        std::vector<cplx> weights = cfg.weights;
        if (weights.empty()) weights.assign(centers.size(), cplx(1.0));
        initial = make_superposition(grid, basis, centers, cfg.width / u.length, weights);
    } else {
        Eigen::VectorXcd amps(static_cast<Eigen::Index>(cfg.amplitudes.size()));
        for (std::size_t i = 0; i < cfg.amplitudes.size(); ++i) amps(static_cast<Eigen::Index>(i)) = cfg.amplitudes[i];
        require(static_cast<std::size_t>(amps.size()) == basis->dimension(), ErrorKind::Configuration,
                "initial amplitudes do not match the basis dimension");
        initial = StateVector(basis, std::move(amps));
    }
    Operator hamiltonian = kinetic_hamiltonian(grid, *basis, cfg.hopping * u.time);

    CollapseOperatorSet ops;
    std::optional<GrwParameters> grw;
    switch (cfg.model) {
        case Model::CSL:
            ops = csl_operators(grid, site_number_operators(grid, *basis), rate, whiten(gaussian_kernel(grid, r_c)));
            break;
        case Model::GRW:
            ops = generic_operators({}, 0.0);
            grw = GrwParameters{rate, r_c};
            break;
        case Model::Unitary:
            ops = generic_operators({}, 0.0);
            break;
        case Model::Generic: {
            std::vector<Operator> list;
            for (const auto& g : cfg.generic_operators) list.push_back(generic_operator(g, std::sqrt(rate)));
            ops = generic_operators(std::move(list), rate);
            break;
        }
    }

    IntegratorConfig integrator;
    integrator.dt = cfg.dt / u.time;
    integrator.horizon = cfg.horizon / u.time;
    integrator.stride = cfg.stride;
    integrator.max_norm_drift = cfg.max_norm_drift;
    integrator.validate();
    RecordSpec record = record_spec(cfg);
    record.validate(*basis);
    return Scenario{cfg.name, grid,       std::move(*initial), std::move(hamiltonian), std::move(ops),
                    grw,      integrator, std::move(record),   cfg.seed};
}

}  // namespace collapsim::cli
