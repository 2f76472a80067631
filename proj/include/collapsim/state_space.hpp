#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace collapsim {

using cplx = std::complex<double>;

inline constexpr std::size_t kDefaultDimensionCap = 4096;
inline constexpr double kNormTolerance = 1e-10;

/// Uniform 1D lattice x_j = j * spacing, j = 0..sites-1.
class LatticeGrid {
public:
    LatticeGrid(std::size_t sites, double spacing);

    std::size_t sites() const noexcept { return sites_; }
    double spacing() const noexcept { return spacing_; }
    double position(std::size_t j) const noexcept { return static_cast<double>(j) * spacing_; }
    double extent() const noexcept { return position(sites_ - 1); }
    std::vector<double> positions() const;

    /// Site closest to x; ties resolve to the lower index.
    std::size_t nearest_site(double x) const;
    bool contains(double x) const noexcept;

private:
    std::size_t sites_;
    double spacing_;
};

LatticeGrid build_lattice(std::size_t sites, double spacing);

enum class Statistics { Distinguishable, Bosonic };

/// Configuration basis for a fixed number of particles on a lattice.
///
/// Distinguishable states are indexed by the tuple of particle sites with
/// particle 0 most significant. Bosonic states are occupation vectors of
/// total count k, enumerated with the occupation of site 0 descending, e.g.
/// {(2,0), (1,1), (0,2)} for two bosons on two sites.
class Basis {
public:
    static std::shared_ptr<const Basis> single_particle(std::size_t sites);
    static std::shared_ptr<const Basis> distinguishable(std::size_t sites, std::size_t particles,
                                                        std::size_t cap = kDefaultDimensionCap);
    static std::shared_ptr<const Basis> bosonic(std::size_t sites, std::size_t particles,
                                                std::size_t cap = kDefaultDimensionCap);

    Statistics statistics() const noexcept { return statistics_; }
    std::size_t sites() const noexcept { return sites_; }
    std::size_t particles() const noexcept { return particles_; }
    std::size_t dimension() const noexcept { return dimension_; }

    /// Occupation numbers n_j of basis state `state`.
    std::span<const int> occupations(std::size_t state) const;
    /// Site of each particle; only meaningful for distinguishable bases.
    std::span<const int> particle_sites(std::size_t state) const;

    /// Index of the basis state with the given occupations, or dimension() if absent.
    std::size_t find_occupation(std::span<const int> occupation) const;
    /// Index of the distinguishable state with the given particle sites.
    std::size_t index_of_sites(std::span<const int> sites) const;

    bool same_as(const Basis& other) const noexcept;

private:
    Basis(Statistics statistics, std::size_t sites, std::size_t particles);

    Statistics statistics_;
    std::size_t sites_;
    std::size_t particles_;
    std::size_t dimension_ = 0;
    std::vector<int> occupation_table_;  // dimension x sites
    std::vector<int> site_table_;        // dimension x particles (distinguishable only)
};

using BasisPtr = std::shared_ptr<const Basis>;

BasisPtr compose_distinguishable(const LatticeGrid& grid, std::size_t particles,
                                 std::size_t cap = kDefaultDimensionCap);

/// Normalized amplitude vector over a configuration basis.
class StateVector {
public:
    /// Normalizes `amplitudes`; throws DegenerateInput on zero norm.
    StateVector(BasisPtr basis, Eigen::VectorXcd amplitudes);

    static StateVector basis_state(BasisPtr basis, std::size_t index);

    const BasisPtr& basis() const noexcept { return basis_; }
    const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }
    double probability(std::size_t i) const { return std::norm(amplitudes_(static_cast<Eigen::Index>(i))); }
    Eigen::VectorXd probabilities() const { return amplitudes_.cwiseAbs2(); }

    double fidelity(const StateVector& other) const;

private:
    BasisPtr basis_;
    Eigen::VectorXcd amplitudes_;
};

/// Dense or diagonal operator over a basis of fixed dimension.
class Operator {
public:
    Operator() = default;

    static Operator dense(Eigen::MatrixXcd matrix);
    static Operator diagonal(Eigen::VectorXd values);
    static Operator zero(std::size_t dimension);

    std::size_t dimension() const noexcept { return dimension_; }
    bool is_hermitian() const noexcept { return hermitian_; }
    bool is_diagonal() const noexcept { return diagonal_; }
    bool is_zero() const noexcept;

    /// Real diagonal; valid only when is_diagonal().
    const Eigen::VectorXd& diagonal_values() const noexcept { return diagonal_values_; }
    Eigen::MatrixXcd to_dense() const;

    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;
    double expectation(const Eigen::VectorXcd& psi) const;
    /// Spectral norm.
    double norm() const;

private:
    std::size_t dimension_ = 0;
    bool hermitian_ = true;
    bool diagonal_ = true;
    Eigen::VectorXd diagonal_values_;
    Eigen::MatrixXcd dense_;
};

/// Sum of weighted packets, one branch per center. In a branch every particle
/// occupies the packet exp(-(x-c)^2 / (4 width^2)) (a single site when width
/// is 0); each branch is normalized before weighting.
StateVector make_superposition(const LatticeGrid& grid, BasisPtr basis,
                               std::span<const double> centers, double width,
                               std::span<const cplx> weights);

StateVector make_superposition(const LatticeGrid& grid, std::span<const double> centers,
                               double width, std::span<const cplx> weights);

/// n_j for every site, diagonal in the configuration basis.
std::vector<Operator> site_number_operators(const LatticeGrid& grid, const Basis& basis);

/// Nearest-neighbour kinetic term J * sum_p (2 - shift - shift^dagger) with open
/// boundaries; the bosonic form uses the usual sqrt(n) hopping elements.
Operator kinetic_hamiltonian(const LatticeGrid& grid, const Basis& basis, double hopping);

}  // namespace collapsim
