#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "schtau/noise.hpp"

using namespace schtau;

namespace {

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double sample_covariance(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size() - 1);
}

}  // namespace

TEST_CASE("identical seed and n_steps reproduce bit-identical increments") {
  const auto a = noise::sample_bundle(7, 4);
  const auto b = noise::sample_bundle(7, 4);
  REQUIRE(a.dB == b.dB);
  REQUIRE(a.dW1 == b.dW1);
  REQUIRE(a.dW2 == b.dW2);
  const auto c = noise::sample_bundle(8, 4);
  REQUIRE(a.dB != c.dB);
}

TEST_CASE("invalid arguments are rejected") {
  REQUIRE_THROWS_AS(noise::sample_bundle(1, 0), std::invalid_argument);
  const auto b = noise::sample_bundle(1, 8);
  REQUIRE_THROWS_AS(noise::rotate_noise(b, -1.0), std::invalid_argument);
}

TEST_CASE("increment sum equals the path endpoint") {
  const auto b = noise::sample_bundle(42, 257);
  const auto path = noise::cumulative_path(b.dB);
  const double sum = std::accumulate(b.dB.begin(), b.dB.end(), 0.0);
  REQUIRE(path.front() == 0.0);
  REQUIRE(path.back() == Catch::Approx(sum).margin(1e-15));
}

TEST_CASE("B(1) has unit variance over a large ensemble") {
  const std::size_t n_seeds = 10000;
  std::vector<double> b1(n_seeds), w1(n_seeds), w2(n_seeds);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const auto b = noise::sample_bundle(1000 + s, 64);
    b1[s] = std::accumulate(b.dB.begin(), b.dB.end(), 0.0);
    w1[s] = std::accumulate(b.dW1.begin(), b.dW1.end(), 0.0);
    w2[s] = std::accumulate(b.dW2.begin(), b.dW2.end(), 0.0);
  }
  // chi-square bound on the variance estimator: sd ~ sqrt(2/n)
  const double tol = 3.0 * std::sqrt(2.0 / static_cast<double>(n_seeds));
  REQUIRE(sample_variance(b1) == Catch::Approx(1.0).margin(tol));
  REQUIRE(sample_variance(w1) == Catch::Approx(1.0).margin(tol));
  REQUIRE(sample_variance(w2) == Catch::Approx(1.0).margin(tol));

  // the three streams are uncorrelated
  const double ctol = 3.0 / std::sqrt(static_cast<double>(n_seeds));
  REQUIRE(std::abs(sample_covariance(b1, w1)) < ctol);
  REQUIRE(std::abs(sample_covariance(b1, w2)) < ctol);
  REQUIRE(std::abs(sample_covariance(w1, w2)) < ctol);
}

TEST_CASE("rotation with E' = 0 is the trivial rescaling") {
  const auto b = noise::sample_bundle(5, 32);
  const auto r = noise::rotate_noise(b, 0.0);
  for (std::size_t i = 0; i < b.n_steps; ++i) {
    REQUIRE(r.dW1L[i] == Catch::Approx(std::sqrt(2.0) * b.dB[i]).margin(1e-15));
    REQUIRE(r.dW2L[i] == 0.0);
  }
}

TEST_CASE("rotated noises have unit variance and vanishing covariance") {
  const std::size_t n_seeds = 10000;
  const double E_prime = 100.0;
  std::vector<double> w1(n_seeds), w2(n_seeds);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const auto b = noise::sample_bundle(50000 + s, 512);
    const auto r = noise::rotate_noise(b, E_prime);
    w1[s] = std::accumulate(r.dW1L.begin(), r.dW1L.end(), 0.0);
    w2[s] = std::accumulate(r.dW2L.begin(), r.dW2L.end(), 0.0);
  }
  REQUIRE(sample_variance(w1) == Catch::Approx(1.0).epsilon(0.05));
  REQUIRE(sample_variance(w2) == Catch::Approx(1.0).epsilon(0.05));
  const double ctol = 3.0 / std::sqrt(static_cast<double>(n_seeds));
  REQUIRE(std::abs(sample_covariance(w1, w2)) < ctol);
}

TEST_CASE("pair-summed increments reproduce the coarser grid statistics") {
  const std::size_t n_seeds = 4000;
  const std::size_t n_fine = 512;
  std::vector<double> pooled;
  pooled.reserve(n_seeds * 4);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const auto fine = noise::sample_bundle(90000 + s, n_fine);
    const auto coarse = noise::coarsen(fine);
    REQUIRE(coarse.n_steps == n_fine / 2);
    // endpoint is preserved exactly up to reassociation
    const double ef = std::accumulate(fine.dB.begin(), fine.dB.end(), 0.0);
    const double ec = std::accumulate(coarse.dB.begin(), coarse.dB.end(), 0.0);
    REQUIRE(ec == Catch::Approx(ef).margin(1e-12));
    for (std::size_t i = 0; i < 4; ++i) pooled.push_back(coarse.dB[i]);
  }
  const double var = sample_variance(pooled);
  const double expect = 2.0 / static_cast<double>(n_fine);
  const double tol = 3.0 * expect * std::sqrt(2.0 / static_cast<double>(pooled.size()));
  REQUIRE(var == Catch::Approx(expect).margin(tol));
}
