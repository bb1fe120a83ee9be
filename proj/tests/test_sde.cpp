#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "schtau/sde.hpp"

using namespace schtau;
using Catch::Approx;

TEST_CASE("tau = 0 reproduces the deterministic flow exactly") {
  const auto bundle = noise::sample_bundle(3, 1000);
  const auto p = sde::integrate_phase(bundle, 0.0, 3.0);
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    REQUIRE(p.theta[i] == 1.5 * p.grid[i]);
    REQUIRE(p.rho[i] == 0.0);
  }
}

TEST_CASE("negative tau is rejected") {
  const auto bundle = noise::sample_bundle(3, 16);
  REQUIRE_THROWS_AS(sde::integrate_phase(bundle, -0.5, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(sde::integrate_vector(bundle, -0.5, {0.0, 1.0}),
                    std::invalid_argument);
}

TEST_CASE("theta(1) is Gaussian with mean lambda/2 and variance 3 tau / 8") {
  const std::size_t n_seeds = 10000;
  const double tau = 1.0, lambda = 2.0;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const auto bundle = noise::sample_bundle(200000 + s, 1000);
    const double th = sde::phase_endpoint(bundle, tau, lambda).theta1;
    sum += th;
    sum_sq += th * th;
  }
  const double m = sum / n_seeds;
  const double var = (sum_sq - n_seeds * m * m) / (n_seeds - 1);
  const double se = std::sqrt(var / n_seeds);
  REQUIRE(m == Approx(1.0).margin(3.0 * se));
  REQUIRE(var == Approx(0.375).epsilon(0.05));
}

TEST_CASE("endpoint refinement error decreases on a fixed Brownian path") {
  // dt in {1e-3, 5e-4, 2.5e-4} carved out of one realization
  const auto finest = noise::sample_bundle(1, 4000);
  const auto mid = noise::coarsen(finest);
  const auto coarse = noise::coarsen(mid);
  const double t_coarse = sde::phase_endpoint(coarse, 1.0, 0.0).theta1;
  const double t_mid = sde::phase_endpoint(mid, 1.0, 0.0).theta1;
  const double t_fine = sde::phase_endpoint(finest, 1.0, 0.0).theta1;
  REQUIRE(std::abs(t_mid - t_fine) < std::abs(t_coarse - t_mid));
}

TEST_CASE("families share one noise realization and stay ordered") {
  std::vector<double> lambdas;
  for (int k = -10; k <= 10; ++k) lambdas.push_back(static_cast<double>(k));
  for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
    const auto bundle = noise::sample_bundle(seed, 2000);
    const auto fam = sde::integrate_phase_family(bundle, 1.0, lambdas);
    REQUIRE(fam.size() == lambdas.size());
    for (std::size_t i = 1; i < fam.size(); ++i) {
      REQUIRE(fam[i].lambda == lambdas[i]);
      REQUIRE(fam[i].theta.back() > fam[i - 1].theta.back());
    }
  }
}

TEST_CASE("tau = 0 family endpoints") {
  const auto bundle = noise::sample_bundle(2, 512);
  const auto fam = sde::integrate_phase_family(bundle, 0.0, {0.0, 2.0 * M_PI});
  REQUIRE(fam[0].theta.back() == 0.0);
  REQUIRE(fam[1].theta.back() == Approx(M_PI).margin(1e-12));
}

TEST_CASE("unsorted lambda families are rejected") {
  const auto bundle = noise::sample_bundle(2, 16);
  REQUIRE_THROWS_AS(sde::integrate_phase_family(bundle, 1.0, {1.0, 0.5}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(sde::integrate_phase_family(bundle, 1.0, {1.0, 1.0}),
                    std::invalid_argument);
}

TEST_CASE("phase derivative: closed form at tau = 0, positive in general") {
  const auto bundle = noise::sample_bundle(4, 1000);
  const auto flat = sde::integrate_phase(bundle, 0.0, 1.0);
  REQUIRE(sde::phase_derivative(flat) == Approx(0.5).margin(1e-14));
  const auto noisy = sde::integrate_phase(bundle, 1.5, -2.0);
  REQUIRE(sde::phase_derivative(noisy) > 0.0);
}

TEST_CASE("phase derivative matches the shared-noise finite difference") {
  const double tau = 1.0, h = 1e-4;
  for (std::uint64_t seed : {21u, 22u}) {
    const auto bundle = noise::sample_bundle(seed, 10000);
    for (double lambda : {0.0}) {
      const auto path = sde::integrate_phase(bundle, tau, lambda);
      const double deriv = sde::phase_derivative(path);
      const double t0 = path.theta.back();
      const double t1 = sde::phase_endpoint(bundle, tau, lambda + h).theta1;
      const double fd = (t1 - t0) / h;
      REQUIRE(deriv == Approx(fd).epsilon(1e-3));
    }
  }
}

TEST_CASE("endpoint integrator agrees with the stored-path integrator") {
  const auto bundle = noise::sample_bundle(77, 3000);
  const auto path = sde::integrate_phase(bundle, 1.3, 0.7);
  const auto ep = sde::phase_endpoint(bundle, 1.3, 0.7);
  REQUIRE(ep.theta1 == Approx(path.theta.back()).margin(1e-12));
  REQUIRE(ep.dtheta_dlambda == Approx(sde::phase_derivative(path)).epsilon(1e-10));
}

TEST_CASE("vector integrator: tau = 0 is the exact rotation") {
  const auto bundle = noise::sample_bundle(5, 1000);
  const double lambda = 3.7;
  const auto p = sde::integrate_vector_real(bundle, 0.0, lambda);
  for (std::size_t i = 0; i < p.y.size(); ++i) {
    const double t = bundle.t(i);
    REQUIRE(p.y[i][0] == Approx(std::sin(0.5 * lambda * t)).margin(1e-12));
    REQUIRE(p.y[i][1] == Approx(std::cos(0.5 * lambda * t)).margin(1e-12));
    REQUIRE(p.wronskian[i] == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("vector integrator: tau = 0, z = 0 is constant") {
  const auto bundle = noise::sample_bundle(5, 64);
  const auto p = sde::integrate_vector(bundle, 0.0, {0.0, 0.0});
  for (std::size_t i = 0; i < p.y.size(); ++i) {
    REQUIRE(p.y[i][0] == std::complex<double>(0.0, 0.0));
    REQUIRE(p.y[i][1] == std::complex<double>(1.0, 0.0));
    REQUIRE(p.v[i][0] == std::complex<double>(1.0, 0.0));
    REQUIRE(p.v[i][1] == std::complex<double>(0.0, 0.0));
  }
}

TEST_CASE("Wronskian drift shrinks under refinement of the same path") {
  const auto fine = noise::sample_bundle(31, 2000);
  const auto coarse = noise::coarsen(fine);
  const std::complex<double> z{0.0, 1.0};
  auto sup_drift = [&](const noise::BrownianBundle& b) {
    const auto p = sde::integrate_vector(b, 1.0, z);
    double sup = 0.0;
    for (const auto& w : p.wronskian) sup = std::max(sup, std::abs(w - 1.0));
    return sup;
  };
  const double d_coarse = sup_drift(coarse);
  const double d_fine = sup_drift(fine);
  REQUIRE(d_fine < d_coarse);
}

TEST_CASE("Prufer consistency: vector and polar integrators approach each other") {
  const double tau = 1.0, lambda = 1.0;
  auto sup_distance = [&](const noise::BrownianBundle& b) {
    const auto vec = sde::integrate_vector_real(b, tau, lambda);
    const auto ph = sde::integrate_phase(b, tau, lambda);
    double sup = 0.0;
    for (std::size_t i = 0; i < vec.y.size(); ++i) {
      const double r = std::exp(ph.rho[i]);
      const double d0 = vec.y[i][0] - r * std::sin(ph.theta[i]);
      const double d1 = vec.y[i][1] - r * std::cos(ph.theta[i]);
      sup = std::max(sup, std::hypot(d0, d1));
    }
    return sup;
  };
  const auto fine = noise::sample_bundle(8, 2000);
  const auto coarse = noise::coarsen(fine);
  const double d_coarse = sup_distance(coarse);
  const double d_fine = sup_distance(fine);
  REQUIRE(d_fine < d_coarse);
}
