#include "collapsim/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "collapsim/error.hpp"

namespace collapsim {

LatticeGrid::LatticeGrid(std::size_t sites, double spacing) : sites_(sites), spacing_(spacing) {
    require(sites >= 2, ErrorKind::Configuration, "lattice needs at least 2 sites");
    require(spacing > 0.0 && std::isfinite(spacing), ErrorKind::Configuration,
            "lattice spacing must be positive and finite");
}

std::vector<double> LatticeGrid::positions() const {
    std::vector<double> xs(sites_);
    for (std::size_t j = 0; j < sites_; ++j) xs[j] = position(j);
    return xs;
}

std::size_t LatticeGrid::nearest_site(double x) const {
    const double scaled = std::ceil(x / spacing_ - 0.5);
    if (scaled <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(scaled), sites_ - 1);
}

bool LatticeGrid::contains(double x) const noexcept {
    const double tol = 1e-9 * spacing_;
    return x >= -tol && x <= extent() + tol;
}

LatticeGrid build_lattice(std::size_t sites, double spacing) { return LatticeGrid(sites, spacing); }

// ---------------------------------------------------------------------------
// Basis

Basis::Basis(Statistics statistics, std::size_t sites, std::size_t particles)
    : statistics_(statistics), sites_(sites), particles_(particles) {}

BasisPtr Basis::single_particle(std::size_t sites) { return distinguishable(sites, 1); }

BasisPtr Basis::distinguishable(std::size_t sites, std::size_t particles, std::size_t cap) {
    require(sites >= 1, ErrorKind::Configuration, "basis needs at least one site");
    require(particles >= 1, ErrorKind::Configuration, "basis needs at least one particle");
    std::size_t dim = 1;
    for (std::size_t p = 0; p < particles; ++p) {
        if (dim > cap / sites) {
            std::ostringstream msg;
            msg << "distinguishable basis of " << particles << " particles on " << sites
                << " sites exceeds the dimension cap " << cap;
            fail(ErrorKind::Resource, msg.str());
        }
        dim *= sites;
    }

    std::shared_ptr<Basis> basis(new Basis(Statistics::Distinguishable, sites, particles));
    basis->dimension_ = dim;
    basis->occupation_table_.assign(dim * sites, 0);
    basis->site_table_.assign(dim * particles, 0);
    for (std::size_t s = 0; s < dim; ++s) {
        std::size_t rest = s;
        for (std::size_t p = particles; p-- > 0;) {
            const auto site = static_cast<int>(rest % sites);
            rest /= sites;
            basis->site_table_[s * particles + p] = site;
            basis->occupation_table_[s * sites + static_cast<std::size_t>(site)] += 1;
        }
    }
    return basis;
}

namespace {

void enumerate_occupations(std::size_t site, int remaining, std::vector<int>& current,
                           std::vector<int>& table) {
    if (site + 1 == current.size()) {
        current[site] = remaining;
        table.insert(table.end(), current.begin(), current.end());
        return;
    }
    for (int n = remaining; n >= 0; --n) {
        current[site] = n;
        enumerate_occupations(site + 1, remaining - n, current, table);
    }
}

// C(n, k) with early exit once the value passes `limit`.
std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t limit) {
    k = std::min(k, n - k);
    double value = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        value = value * static_cast<double>(n - k + i) / static_cast<double>(i);
        if (value > static_cast<double>(limit)) return limit + 1;
    }
    return static_cast<std::size_t>(std::llround(value));
}

}  // namespace

BasisPtr Basis::bosonic(std::size_t sites, std::size_t particles, std::size_t cap) {
    require(sites >= 1, ErrorKind::Configuration, "basis needs at least one site");
    require(particles >= 1, ErrorKind::Configuration, "basis needs at least one particle");
    const std::size_t dim = binomial_capped(particles + sites - 1, particles, cap);
    if (dim > cap) {
        std::ostringstream msg;
        msg << "bosonic basis of " << particles << " particles on " << sites
            << " sites exceeds the dimension cap " << cap;
        fail(ErrorKind::Resource, msg.str());
    }
    std::shared_ptr<Basis> basis(new Basis(Statistics::Bosonic, sites, particles));
    std::vector<int> current(sites, 0);
    basis->occupation_table_.reserve(dim * sites);
    enumerate_occupations(0, static_cast<int>(particles), current, basis->occupation_table_);
    basis->dimension_ = basis->occupation_table_.size() / sites;
    return basis;
}

std::span<const int> Basis::occupations(std::size_t state) const {
    return {occupation_table_.data() + state * sites_, sites_};
}

std::span<const int> Basis::particle_sites(std::size_t state) const {
    require(statistics_ == Statistics::Distinguishable, ErrorKind::Configuration,
            "particle sites are undefined for a bosonic basis");
    return {site_table_.data() + state * particles_, particles_};
}

std::size_t Basis::find_occupation(std::span<const int> occupation) const {
    if (occupation.size() != sites_) return dimension_;
    for (std::size_t s = 0; s < dimension_; ++s) {
        const auto row = occupations(s);
        if (std::equal(row.begin(), row.end(), occupation.begin())) return s;
    }
    return dimension_;
}

std::size_t Basis::index_of_sites(std::span<const int> sites) const {
    require(statistics_ == Statistics::Distinguishable && sites.size() == particles_,
            ErrorKind::Configuration, "site tuple does not match the basis");
    std::size_t index = 0;
    for (const int site : sites) {
        require(site >= 0 && static_cast<std::size_t>(site) < sites_, ErrorKind::Configuration,
                "site index outside the lattice");
        index = index * sites_ + static_cast<std::size_t>(site);
    }
    return index;
}

bool Basis::same_as(const Basis& other) const noexcept {
    if (this == &other) return true;
    const bool single = particles_ == 1 && other.particles_ == 1;
    return (single || statistics_ == other.statistics_) && sites_ == other.sites_ &&
           particles_ == other.particles_;
}

BasisPtr compose_distinguishable(const LatticeGrid& grid, std::size_t particles, std::size_t cap) {
    return Basis::distinguishable(grid.sites(), particles, cap);
}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(BasisPtr basis, Eigen::VectorXcd amplitudes)
    : basis_(std::move(basis)), amplitudes_(std::move(amplitudes)) {
    require(basis_ != nullptr, ErrorKind::Configuration, "state needs a basis");
    require(static_cast<std::size_t>(amplitudes_.size()) == basis_->dimension(),
            ErrorKind::Configuration, "amplitude count does not match the basis dimension");
    require(amplitudes_.allFinite(), ErrorKind::NumericalOverflow, "state has non-finite amplitudes");
    const double norm = amplitudes_.norm();
    require(norm > 0.0, ErrorKind::DegenerateInput, "state has zero norm");
    amplitudes_ /= norm;
}

StateVector StateVector::basis_state(BasisPtr basis, std::size_t index) {
    require(basis != nullptr && index < basis->dimension(), ErrorKind::Configuration,
            "basis index out of range");
    Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis->dimension()));
    amps(static_cast<Eigen::Index>(index)) = 1.0;
    return {std::move(basis), std::move(amps)};
}

double StateVector::fidelity(const StateVector& other) const {
    require(other.dimension() == dimension(), ErrorKind::Configuration, "dimension mismatch");
    return std::norm(amplitudes_.dot(other.amplitudes_));
}

// ---------------------------------------------------------------------------
// Operator

Operator Operator::dense(Eigen::MatrixXcd matrix) {
    require(matrix.rows() == matrix.cols(), ErrorKind::Configuration, "operator must be square");
    Operator op;
    op.dimension_ = static_cast<std::size_t>(matrix.rows());
    const double scale = matrix.cwiseAbs().maxCoeff();
    const double asym = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
    op.hermitian_ = matrix.size() == 0 || asym <= 1e-12 * scale;

    bool diagonal = op.hermitian_;
    for (Eigen::Index c = 0; diagonal && c < matrix.cols(); ++c)
        for (Eigen::Index r = 0; r < matrix.rows(); ++r)
            if (r != c && matrix(r, c) != cplx(0.0)) {
                diagonal = false;
                break;
            }
    if (diagonal) {
        op.diagonal_ = true;
        op.diagonal_values_ = matrix.diagonal().real();
        return op;
    }
    op.diagonal_ = false;
    op.dense_ = std::move(matrix);
    return op;
}

Operator Operator::diagonal(Eigen::VectorXd values) {
    Operator op;
    op.dimension_ = static_cast<std::size_t>(values.size());
    op.diagonal_values_ = std::move(values);
    return op;
}

Operator Operator::zero(std::size_t dimension) {
    return diagonal(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension)));
}

bool Operator::is_zero() const noexcept {
    if (diagonal_) return diagonal_values_.size() == 0 || diagonal_values_.cwiseAbs().maxCoeff() == 0.0;
    return dense_.size() == 0 || dense_.cwiseAbs().maxCoeff() == 0.0;
}

Eigen::MatrixXcd Operator::to_dense() const {
    if (diagonal_) return diagonal_values_.cast<cplx>().asDiagonal();
    return dense_;
}

Eigen::VectorXcd Operator::apply(const Eigen::VectorXcd& v) const {
    if (diagonal_) return diagonal_values_.cast<cplx>().cwiseProduct(v);
    return dense_ * v;
}

double Operator::expectation(const Eigen::VectorXcd& psi) const {
    if (diagonal_) return diagonal_values_.dot(psi.cwiseAbs2());
    return psi.dot(dense_ * psi).real();
}

double Operator::norm() const {
    if (dimension_ == 0) return 0.0;
    if (diagonal_) return diagonal_values_.cwiseAbs().maxCoeff();
    if (hermitian_) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(dense_, Eigen::EigenvaluesOnly);
        return solver.eigenvalues().cwiseAbs().maxCoeff();
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(dense_);
    return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------
// States and elementary operators

namespace {

Eigen::VectorXd packet(const LatticeGrid& grid, double center, double width) {
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.sites()));
    if (width == 0.0) {
        phi(static_cast<Eigen::Index>(grid.nearest_site(center))) = 1.0;
        return phi;
    }
    for (std::size_t j = 0; j < grid.sites(); ++j) {
        const double dx = grid.position(j) - center;
        phi(static_cast<Eigen::Index>(j)) = std::exp(-dx * dx / (4.0 * width * width));
    }
    const double norm = phi.norm();
    require(norm > 0.0, ErrorKind::DegenerateInput, "packet underflows on the lattice");
    return phi / norm;
}

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// Every particle in the single-particle packet phi.
Eigen::VectorXcd product_branch(const Basis& basis, const Eigen::VectorXd& phi) {
    const auto dim = static_cast<Eigen::Index>(basis.dimension());
    Eigen::VectorXcd amps(dim);
    for (Eigen::Index s = 0; s < dim; ++s) {
        const auto idx = static_cast<std::size_t>(s);
        if (basis.statistics() == Statistics::Distinguishable) {
            double a = 1.0;
            for (const int site : basis.particle_sites(idx)) a *= phi(site);
            amps(s) = a;
        } else {
            const auto occ = basis.occupations(idx);
            double log_coeff = log_factorial(static_cast<int>(basis.particles()));
            double a = 1.0;
            for (std::size_t j = 0; j < occ.size(); ++j) {
                log_coeff -= log_factorial(occ[j]);
                a *= std::pow(phi(static_cast<Eigen::Index>(j)), occ[j]);
            }
            amps(s) = a * std::sqrt(std::exp(log_coeff));
        }
    }
    return amps;
}

}  // namespace

StateVector make_superposition(const LatticeGrid& grid, BasisPtr basis, std::span<const double> centers,
                               double width, std::span<const cplx> weights) {
    require(basis != nullptr && basis->sites() == grid.sites(), ErrorKind::Configuration,
            "basis does not match the lattice");
    require(!centers.empty(), ErrorKind::Configuration, "superposition needs at least one center");
    require(centers.size() == weights.size(), ErrorKind::Configuration,
            "number of weights must equal number of centers");
    require(width >= 0.0 && std::isfinite(width), ErrorKind::Configuration,
            "packet width must be non-negative");
    for (const double c : centers) {
        if (!grid.contains(c)) {
            std::ostringstream msg;
            msg << "center " << c << " lies outside the lattice [0, " << grid.extent() << "]";
            fail(ErrorKind::Configuration, msg.str());
        }
    }
    require(std::any_of(weights.begin(), weights.end(), [](cplx w) { return std::abs(w) > 0.0; }),
            ErrorKind::DegenerateInput, "all superposition weights are zero");

    Eigen::VectorXcd total = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis->dimension()));
    for (std::size_t b = 0; b < centers.size(); ++b) {
        if (weights[b] == cplx(0.0)) continue;
        total += weights[b] * product_branch(*basis, packet(grid, centers[b], width));
    }
    require(total.norm() > 0.0, ErrorKind::DegenerateInput, "superposition branches cancel exactly");
    return {std::move(basis), std::move(total)};
}

StateVector make_superposition(const LatticeGrid& grid, std::span<const double> centers, double width,
                               std::span<const cplx> weights) {
    return make_superposition(grid, Basis::single_particle(grid.sites()), centers, width, weights);
}

std::vector<Operator> site_number_operators(const LatticeGrid& grid, const Basis& basis) {
    require(basis.sites() == grid.sites(), ErrorKind::Configuration,
            "basis does not match the lattice");
    const auto dim = static_cast<Eigen::Index>(basis.dimension());
    std::vector<Operator> ops;
    ops.reserve(grid.sites());
    for (std::size_t j = 0; j < grid.sites(); ++j) {
        Eigen::VectorXd n(dim);
        for (Eigen::Index s = 0; s < dim; ++s) n(s) = basis.occupations(static_cast<std::size_t>(s))[j];
        ops.push_back(Operator::diagonal(std::move(n)));
    }
    return ops;
}

Operator kinetic_hamiltonian(const LatticeGrid& grid, const Basis& basis, double hopping) {
    require(basis.sites() == grid.sites(), ErrorKind::Configuration,
            "basis does not match the lattice");
    require(std::isfinite(hopping), ErrorKind::Configuration, "hopping must be finite");
    const std::size_t dim = basis.dimension();
    if (hopping == 0.0) return Operator::zero(dim);

    const auto M = basis.sites();
    const auto k = basis.particles();
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t s = 0; s < dim; ++s) {
        const auto si = static_cast<Eigen::Index>(s);
        h(si, si) = 2.0 * hopping * static_cast<double>(k);
        if (basis.statistics() == Statistics::Distinguishable) {
            const auto sites = basis.particle_sites(s);
            std::size_t stride = 1;
            for (std::size_t p = k; p-- > 0;) {
                if (static_cast<std::size_t>(sites[p]) + 1 < M) {
                    const auto t = static_cast<Eigen::Index>(s + stride);
                    h(t, si) = -hopping;
                    h(si, t) = -hopping;
                }
                stride *= M;
            }
        } else {
            const auto occ = basis.occupations(s);
            std::vector<int> moved(occ.begin(), occ.end());
            for (std::size_t j = 0; j + 1 < M; ++j) {
                if (occ[j + 1] == 0) continue;
                moved[j] += 1;
                moved[j + 1] -= 1;
                const auto t = static_cast<Eigen::Index>(basis.find_occupation(moved));
                const double amp = -hopping * std::sqrt(static_cast<double>((occ[j] + 1) * occ[j + 1]));
                h(t, si) = amp;
                h(si, t) = amp;
                moved[j] -= 1;
                moved[j + 1] += 1;
            }
        }
    }
    return Operator::dense(std::move(h));
}

}  // namespace collapsim
