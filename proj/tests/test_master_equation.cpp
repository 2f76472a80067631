#include "doctest.h"

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "collapsim/collapse_operators.hpp"
#include "collapsim/ensemble.hpp"
#include "collapsim/error.hpp"
#include "collapsim/master_equation.hpp"

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

Eigen::MatrixXcd random_density(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::MatrixXcd a(d, d);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = cplx(n(rng), n(rng));
    Eigen::MatrixXcd rho = a * a.adjoint();
    return rho / rho.trace();
}

Eigen::MatrixXcd random_hermitian(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::MatrixXcd a(d, d);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = cplx(n(rng), n(rng));
    return 0.5 * (a + a.adjoint());
}

// column-major vec: vec(A X B) = (B^T kron A) vec(X)
Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return k;
}

Eigen::MatrixXcd liouvillian(const Eigen::MatrixXcd& h, const std::vector<Eigen::MatrixXcd>& ls) {
    const auto d = h.rows();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    Eigen::MatrixXcd sup = cplx(0.0, -1.0) * (kron(id, h) - kron(h.transpose(), id));
    for (const auto& l : ls) {
        const Eigen::MatrixXcd l2 = l * l;
        sup += kron(l.transpose(), l) - 0.5 * kron(id, l2) - 0.5 * kron(l2.transpose(), id);
    }
    return sup;
}

Eigen::VectorXcd vec(const Eigen::MatrixXcd& m) { return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size()); }

}  // namespace

TEST_CASE("lindblad right-hand side") {
    SUBCASE("von Neumann limit") {
        const Eigen::Matrix2cd h{{0.0, 1.0}, {1.0, 0.0}};
        const Eigen::Matrix2cd rho{{1.0, 0.0}, {0.0, 0.0}};
        const auto out = lindblad_rhs(rho, Operator::dense(h), generic_operators({}));
        const Eigen::Matrix2cd expect = cplx(0.0, -1.0) * (h * rho - rho * h);
        CHECK((out - expect).norm() < 1e-15);
    }
    SUBCASE("diagonal states are fixed points of pure dephasing") {
        const auto ops = generic_operators({Operator::diagonal(Eigen::Vector2d(1.0, -1.0))});
        const Eigen::Matrix2cd rho{{0.3, 0.0}, {0.0, 0.7}};
        CHECK(lindblad_rhs(rho, Operator::zero(2), ops).norm() < 1e-15);
    }
    SUBCASE("coherence decays at half the squared gap") {
        const double lambda = 0.8;
        const auto ops = generic_operators({Operator::diagonal(std::sqrt(lambda) * Eigen::Vector2d(1.0, 0.0))});
        const Eigen::Matrix2cd rho{{0.5, 0.5}, {0.5, 0.5}};
        const auto out = lindblad_rhs(rho, Operator::zero(2), ops);
        CHECK(out(0, 1).real() == doctest::Approx(-0.5 * lambda * 0.5));
        CHECK(out(0, 0).real() == doctest::Approx(0.0));
    }
    SUBCASE("non-Hermitian collapse operators are refused") {
        const Eigen::Matrix2cd a{{0.0, 1.0}, {0.0, 0.0}};
        const auto ops = generic_operators({Operator::dense(a)});
        CHECK(kind_of([&] { LindbladGenerator(Operator::zero(2), ops); }) == ErrorKind::UnsupportedModel);
    }
}

TEST_CASE("generator preserves trace and Hermiticity") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 20; ++t) {
        const std::size_t d = 2 + static_cast<std::size_t>(t % 5);
        const auto h = Operator::dense(random_hermitian(d, rng));
        std::vector<Operator> list{Operator::dense(random_hermitian(d, rng)), Operator::dense(random_hermitian(d, rng))};
        const auto ops = generic_operators(list);
        const auto rho = random_density(d, rng);
        const auto out = lindblad_rhs(rho, h, ops);
        CHECK(std::abs(out.trace()) < 1e-12);
        CHECK((out - out.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

        std::vector<Eigen::MatrixXcd> dense;
        for (const auto& op : list) dense.push_back(op.to_dense());
        const Eigen::VectorXcd ref = liouvillian(h.to_dense(), dense) * vec(rho);
        CHECK((vec(out) - ref).norm() < 1e-10);
    }
}

TEST_CASE("diagonal and dense paths agree") {
    const auto g = build_lattice(5, 0.6);
    const auto basis = Basis::single_particle(5);
    const auto h = kinetic_hamiltonian(g, *basis, 0.7);
    const auto ops = csl_operators(g, site_number_operators(g, *basis), 1.1, whiten(gaussian_kernel(g, 1.0)));
    std::vector<Operator> dense;
    for (const auto& op : ops.operators()) dense.push_back(Operator::dense(op.to_dense()));
    const auto dense_ops = generic_operators(dense);
    std::mt19937_64 rng(2);
    for (int t = 0; t < 5; ++t) {
        const auto rho = random_density(5, rng);
        CHECK((lindblad_rhs(rho, h, ops) - lindblad_rhs(rho, h, dense_ops)).norm() < 1e-12);
    }
}

TEST_CASE("evolve_density") {
    const auto ops = generic_operators({Operator::diagonal(Eigen::Vector2d(1.0, 0.0))});
    const Eigen::Matrix2cd plus{{0.5, 0.5}, {0.5, 0.5}};

    SUBCASE("no dynamics") {
        const auto s = evolve_density(plus, Operator::zero(2), generic_operators({}), 0.01, 1.0, 10);
        CHECK(s.times.size() == 11);
        for (const auto& r : s.states) CHECK((r - plus).norm() < 1e-15);
    }
    SUBCASE("closed-form dephasing") {
        const auto s = evolve_density(plus, Operator::zero(2), ops, 0.01, 4.0, 20);
        for (std::size_t i = 0; i < s.times.size(); ++i)
            CHECK(std::abs(s.states[i](0, 1) - 0.5 * std::exp(-0.5 * s.times[i])) < 1e-6);
        CHECK(s.max_trace_error < 1e-12);
        CHECK_FALSE(s.positivity_violated);
    }
    SUBCASE("step budget") {
        CHECK(kind_of([&] { evolve_density(plus, Operator::zero(2), ops, 0.5, 1.0); }) == ErrorKind::Configuration);
        const Eigen::Matrix2cd bad{{0.5, 0.5}, {0.5, 0.6}};
        CHECK(kind_of([&] { evolve_density(bad, Operator::zero(2), ops, 0.01, 1.0); }) == ErrorKind::DegenerateInput);
    }
}

TEST_CASE("RK4 is fourth order against the exact Liouvillian exponential") {
    std::mt19937_64 rng(8);
    const std::size_t d = 4;
    const auto h = Operator::dense(random_hermitian(d, rng));
    const auto l = Operator::dense(0.5 * random_hermitian(d, rng));
    const auto ops = generic_operators({l});
    const auto rho0 = random_density(d, rng);
    const double t = 1.0;
    const Eigen::VectorXcd exact = (liouvillian(h.to_dense(), {l.to_dense()}) * cplx(t)).exp() * vec(rho0);
    const LindbladGenerator gen(h, ops);
    const double dt0 = 0.1 / gen.scale();
    const double n0 = std::ceil(t / dt0);
    const auto err = [&](double dt) {
        const auto s = evolve_density(rho0, h, ops, dt, t, 1000000);
        return (vec(s.states.back()) - exact).norm();
    };
    const double coarse = err(t / n0);
    const double fine = err(t / (2.0 * n0));
    MESSAGE("RK4 error ratio " << coarse / fine);
    CHECK(coarse / fine >= 8.0);
}

TEST_CASE("two-point coherence rate") {
    CHECK(csl_two_point_rate(0.0, 1.0, 1.0) == 0.0);
    CHECK(csl_two_point_rate(2.0, 1.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)));
    CHECK(csl_two_point_rate(100.0, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(csl_two_point_rate(0.1, 1.0, 1.0) <= 0.01);
    CHECK(kind_of([] { csl_two_point_rate(1.0, -1.0, 1.0); }) == ErrorKind::Configuration);
    CHECK(kind_of([] { csl_two_point_rate(1.0, 1.0, 0.0); }) == ErrorKind::Configuration);

    // coherence of an evolved two-site superposition decays at the same rate
    for (const double sep : {0.1, 0.5, 1.0, 2.0, 5.0, 100.0}) {
        const auto g = build_lattice(2, sep);
        const auto ops = csl_operators(g, site_number_operators(g, *Basis::single_particle(2)), 1.0,
                                       whiten(gaussian_kernel(g, 1.0)));
        const double expect = 1.0 - std::exp(-sep * sep / 4.0);
        const double horizon = 3.5 / expect;
        const LindbladGenerator gen(Operator::zero(2), ops);
        const double dt = std::min(0.1 / gen.scale(), horizon / 200.0);
        const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt));
        const Eigen::Matrix2cd plus{{0.5, 0.5}, {0.5, 0.5}};
        const auto s = evolve_density(plus, Operator::zero(2), ops, dt, horizon, std::max<std::size_t>(1, steps / 100));
        std::vector<double> mags;
        for (const auto& r : s.states) mags.push_back(std::abs(r(0, 1)));
        const auto fit = fit_decay(s.times, mags);
        CHECK(fit.rate == doctest::Approx(csl_two_point_rate(sep, 1.0, 1.0)).epsilon(1e-3));
    }
}

TEST_CASE("energy growth rate matches a finite difference") {
    std::mt19937_64 rng(4);
    const auto g = build_lattice(5, 0.5);
    const auto basis = Basis::single_particle(5);
    const auto h = kinetic_hamiltonian(g, *basis, 1.0);
    const auto ops = csl_operators(g, site_number_operators(g, *basis), 1.0, whiten(gaussian_kernel(g, 1.0)));
    const auto rho = random_density(5, rng);
    const double eps = 1e-6;
    // H commutes with its own von Neumann term, so the full generator works
    const Eigen::MatrixXcd hd = h.to_dense();
    const auto energy = [&](const Eigen::MatrixXcd& r) { return (r * hd).trace().real(); };
    const auto rhs = lindblad_rhs(rho, h, ops);
    const double fd = (energy(rho + eps * rhs) - energy(rho - eps * rhs)) / (2.0 * eps);
    CHECK(energy_growth_rate(rho, h, ops) == doctest::Approx(fd).epsilon(1e-6));
    CHECK(energy_growth_rate(rho, h, ops) > 0.0);
    CHECK(energy_growth_rate(rho, h, generic_operators({})) == 0.0);
}

TEST_CASE("trace distance") {
    const Eigen::Matrix2cd a{{1.0, 0.0}, {0.0, 0.0}};
    const Eigen::Matrix2cd b{{0.0, 0.0}, {0.0, 1.0}};
    const Eigen::Matrix2cd plus{{0.5, 0.5}, {0.5, 0.5}};
    CHECK(trace_distance(a, a) == doctest::Approx(0.0));
    CHECK(trace_distance(a, b) == doctest::Approx(1.0));
    CHECK(trace_distance(a, plus) == doctest::Approx(std::sqrt(0.5)));
    CHECK(kind_of([&] { trace_distance(a, Eigen::MatrixXcd::Identity(3, 3)); }) == ErrorKind::Configuration);
}

TEST_CASE("density matrix validation") {
    const auto psi = StateVector(Basis::single_particle(2), Eigen::Vector2cd(1.0, cplx(0.0, 1.0)));
    const auto dm = DensityMatrix::pure(psi);
    CHECK(dm.trace() == doctest::Approx(1.0));
    CHECK(dm.min_eigenvalue() == doctest::Approx(0.0).epsilon(1e-12));
    dm.validate();
    const DensityMatrix neg{Eigen::Matrix2cd{{1.5, 0.0}, {0.0, -0.5}}};
    CHECK(kind_of([&] { neg.validate(); }) == ErrorKind::DegenerateInput);
}
