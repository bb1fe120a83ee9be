#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "schtau/rng.hpp"

namespace schtau::noise {

// Stream ids of the three driving noises inside one seed. Further streams
// (shape sampler, matrix potential, iteration starts) use ids >= 3 so they
// never collide with these.
enum StreamId : std::uint32_t {
  kStreamB = 0,
  kStreamW1 = 1,
  kStreamW2 = 2,
};

// One discretized realization of the driving noises (B, W1, W2) on the
// uniform grid of [0,1]. Increments are N(0, dt), the three streams are
// independent, and the whole object is a pure function of (seed, n_steps).
struct BrownianBundle {
  std::uint64_t seed = 0;
  std::size_t n_steps = 0;
  double dt = 0.0;
  std::vector<double> dB;
  std::vector<double> dW1;
  std::vector<double> dW2;

  double t(std::size_t i) const {
    return static_cast<double>(i) / static_cast<double>(n_steps);
  }
};

inline BrownianBundle sample_bundle(std::uint64_t seed, std::size_t n_steps) {
  if (n_steps == 0) throw std::invalid_argument("sample_bundle: n_steps must be >= 1");
  BrownianBundle b;
  b.seed = seed;
  b.n_steps = n_steps;
  b.dt = 1.0 / static_cast<double>(n_steps);
  const double sd = std::sqrt(b.dt);
  b.dB.resize(n_steps);
  b.dW1.resize(n_steps);
  b.dW2.resize(n_steps);
  rng::Stream(seed, kStreamB).fill_normal(b.dB.data(), n_steps);
  rng::Stream(seed, kStreamW1).fill_normal(b.dW1.data(), n_steps);
  rng::Stream(seed, kStreamW2).fill_normal(b.dW2.data(), n_steps);
  for (std::size_t i = 0; i < n_steps; ++i) {
    b.dB[i] *= sd;
    b.dW1[i] *= sd;
    b.dW2[i] *= sd;
  }
  return b;
}

// Piecewise-linear path from increments, X(0) = 0.
inline std::vector<double> cumulative_path(const std::vector<double>& inc) {
  std::vector<double> x(inc.size() + 1);
  x[0] = 0.0;
  for (std::size_t i = 0; i < inc.size(); ++i) x[i + 1] = x[i] + inc[i];
  return x;
}

// The rotated noises W1, W2 extracted from B by modulating with the fast
// phase 2*E'*t (Ito convention: left grid endpoint).
struct RotatedNoise {
  double E_prime = 0.0;
  std::vector<double> dW1L;
  std::vector<double> dW2L;
};

inline RotatedNoise rotate_noise(const BrownianBundle& bundle, double E_prime) {
  if (E_prime < 0.0) throw std::invalid_argument("rotate_noise: E_prime must be >= 0");
  RotatedNoise r;
  r.E_prime = E_prime;
  const std::size_t n = bundle.n_steps;
  r.dW1L.resize(n);
  r.dW2L.resize(n);
  const double root2 = std::sqrt(2.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = 2.0 * E_prime * bundle.t(i);
    r.dW1L[i] = root2 * std::cos(phase) * bundle.dB[i];
    r.dW2L[i] = root2 * std::sin(phase) * bundle.dB[i];
  }
  return r;
}

// Sums adjacent increment pairs; the result is distributed like the bundle
// with half the steps (used by the grid-scaling checks).
inline BrownianBundle coarsen(const BrownianBundle& fine) {
  if (fine.n_steps % 2 != 0) throw std::invalid_argument("coarsen: n_steps must be even");
  BrownianBundle c;
  c.seed = fine.seed;
  c.n_steps = fine.n_steps / 2;
  c.dt = 2.0 * fine.dt;
  c.dB.resize(c.n_steps);
  c.dW1.resize(c.n_steps);
  c.dW2.resize(c.n_steps);
  for (std::size_t i = 0; i < c.n_steps; ++i) {
    c.dB[i] = fine.dB[2 * i] + fine.dB[2 * i + 1];
    c.dW1[i] = fine.dW1[2 * i] + fine.dW1[2 * i + 1];
    c.dW2[i] = fine.dW2[2 * i] + fine.dW2[2 * i + 1];
  }
  return c;
}

}  // namespace schtau::noise
