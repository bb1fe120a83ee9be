#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "schtau/sde.hpp"

namespace schtau::spectrum {

using sde::CVec2;
using sde::Vec2;

inline constexpr double kPi = 3.14159265358979323846;

struct NotAnEigenvalueError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateDenominatorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Eigenvalue location by shooting on the monotone phase.
// ---------------------------------------------------------------------------

struct LocateOptions {
  double tol = 1e-8;          // absolute tolerance in lambda
  double newton_width = 1e-3; // switch from bisection to Newton below this
};

// All lambda in [a, b] with theta_lambda(1) in pi Z. The map
// lambda -> theta(1) is strictly increasing, so scanning node values and
// bracketing every multiple of pi crossed between nodes cannot skip roots.
// Scan step adapts to the local derivative; each root is refined by
// bisection and finished with Newton steps once the bracket is narrow.
inline std::vector<double> locate_eigenvalues(const noise::BrownianBundle& bundle,
                                              double tau, double a, double b,
                                              LocateOptions opt = {}) {
  if (!(a < b)) throw std::invalid_argument("locate_eigenvalues: window must satisfy a < b");
  if (tau < 0.0) throw std::invalid_argument("locate_eigenvalues: tau must be >= 0");

  const auto endpoint = [&](double lam) { return sde::phase_endpoint(bundle, tau, lam); };

  // invariant on entry: theta(lo) < target <= theta(hi)
  auto refine = [&](double lo, double hi, double target) -> double {
    while (hi - lo > opt.newton_width) {
      const double mid = 0.5 * (lo + hi);
      if (endpoint(mid).theta1 >= target)
        hi = mid;
      else
        lo = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 40 && hi - lo > opt.tol; ++it) {
      const auto e = endpoint(x);
      if (e.theta1 >= target)
        hi = x;
      else
        lo = x;
      double next = x - (e.theta1 - target) / std::max(e.dtheta_dlambda, 1e-12);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - x) < 0.25 * opt.tol && hi - lo < 4.0 * opt.tol) {
        return next;
      }
      x = next;
    }
    return 0.5 * (lo + hi);
  };

  std::vector<double> roots;
  double lam = a;
  auto e = endpoint(lam);
  // exact hit on the left edge
  if (std::remainder(e.theta1, kPi) == 0.0) roots.push_back(lam);
  while (lam < b) {
    const double deriv = std::max(e.dtheta_dlambda, 0.5);
    double next = std::min(b, lam + 0.5 * kPi / deriv);
    if (next <= lam) next = b;  // guard against stagnation
    auto en = endpoint(next);
    const long k_lo = static_cast<long>(std::floor(e.theta1 / kPi)) + 1;
    const long k_hi = static_cast<long>(std::floor(en.theta1 / kPi));
    double lo = lam;
    for (long k = k_lo; k <= k_hi; ++k) {
      const double target = static_cast<double>(k) * kPi;
      if (en.theta1 == target && k == k_hi) {
        roots.push_back(next);  // exact hit on a scan node
        break;
      }
      const double r = refine(lo, next, target);
      roots.push_back(r);
      lo = r;
    }
    lam = next;
    e = en;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

// Exact integer prediction for the number of roots in [a, b], from
// monotonicity of the phase.
inline long expected_eigenvalue_count(const noise::BrownianBundle& bundle, double tau,
                                      double a, double b) {
  const double ta = sde::phase_endpoint(bundle, tau, a).theta1;
  const double tb = sde::phase_endpoint(bundle, tau, b).theta1;
  return static_cast<long>(std::floor(tb / kPi)) -
         static_cast<long>(std::ceil(ta / kPi)) + 1;
}

// ---------------------------------------------------------------------------
// Eigenvectors.
// ---------------------------------------------------------------------------

struct SpectralPoint {
  enum class Source { kCsTau, kAnderson };
  double lambda = 0.0;
  std::vector<Vec2> psi;  // unit L^2 norm (trapezoid)
  Source source = Source::kCsTau;
};

inline double dist_to_pi_lattice(double theta) {
  return std::abs(std::remainder(theta, kPi));
}

// Normalized eigenvector e^{rho} (sin theta, cos theta) / ||.||_{L^2} for a
// located eigenvalue. The exponentials are centered at max(rho) before
// normalizing, so large tau cannot overflow.
inline SpectralPoint eigenvector(const noise::BrownianBundle& bundle, double tau,
                                 double lambda, double theta_tol = 1e-6) {
  const sde::PhasePath p = sde::integrate_phase(bundle, tau, lambda);
  const double miss = dist_to_pi_lattice(p.theta.back());
  if (miss > theta_tol)
    throw NotAnEigenvalueError("eigenvector: theta(1) is not within tolerance of pi Z");

  const std::size_t n = p.grid.size();
  const double rho_max = *std::max_element(p.rho.begin(), p.rho.end());
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = std::exp(p.rho[i] - rho_max);
  double norm_sq = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    norm_sq += 0.5 * (env[i] * env[i] + env[i + 1] * env[i + 1]) *
               (p.grid[i + 1] - p.grid[i]);
  const double inv_norm = 1.0 / std::sqrt(norm_sq);

  SpectralPoint s;
  s.lambda = lambda;
  s.psi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = env[i] * inv_norm;
    s.psi[i] = {r * std::sin(p.theta[i]), r * std::cos(p.theta[i])};
  }
  return s;
}

// ---------------------------------------------------------------------------
// Resolvent kernel.
// ---------------------------------------------------------------------------

// (CS_tau - z)^{-1} f on the integrator grid:
//   (1/2) int ( y_z(t) yhat_z(s)^T 1_{t<=s} + yhat_z(t) y_z(s)^T 1_{s<t} ) f(s) ds
// with yhat_z = v_z - alpha y_z, alpha = v_z(1)_1 / y_z(1)_1, so that the
// Wronskian y_z(0)^T J yhat_z(0) equals 1.
inline std::vector<CVec2> resolvent_apply(const noise::BrownianBundle& bundle,
                                          double tau, std::complex<double> z,
                                          const std::vector<Vec2>& f) {
  if (z.imag() == 0.0) throw std::invalid_argument("resolvent_apply: z must be non-real");
  if (f.size() != bundle.n_steps + 1)
    throw std::invalid_argument("resolvent_apply: f must live on the integrator grid");

  const sde::VectorPath path = sde::integrate_vector(bundle, tau, z);
  const std::complex<double> y1_end = path.y.back()[0];
  if (std::abs(y1_end) < 1e-12)
    throw DegenerateDenominatorError("resolvent_apply: first component of y_z(1) vanishes");
  const std::complex<double> alpha = path.v.back()[0] / y1_end;

  const std::size_t n = bundle.n_steps;
  const double dt = bundle.dt;
  std::vector<CVec2> yhat(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    yhat[i] = {path.v[i][0] - alpha * path.y[i][0],
               path.v[i][1] - alpha * path.y[i][1]};
  }

  // prefix P(t) = int_0^t y^T f, suffix Q(t) = int_t^1 yhat^T f (trapezoid)
  auto dot = [](const CVec2& u, const Vec2& w) {
    return u[0] * w[0] + u[1] * w[1];
  };
  std::vector<std::complex<double>> P(n + 1), Q(n + 1);
  P[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    P[i + 1] = P[i] + 0.5 * dt * (dot(path.y[i], f[i]) + dot(path.y[i + 1], f[i + 1]));
  Q[n] = 0.0;
  for (std::size_t i = n; i-- > 0;)
    Q[i] = Q[i + 1] + 0.5 * dt * (dot(yhat[i], f[i]) + dot(yhat[i + 1], f[i + 1]));

  std::vector<CVec2> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    out[i] = {0.5 * (yhat[i][0] * P[i] + path.y[i][0] * Q[i]),
              0.5 * (yhat[i][1] * P[i] + path.y[i][1] * Q[i])};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Intensity density of the eigenvalue point process.
// ---------------------------------------------------------------------------

struct IntensityProfile {
  double tau = 0.0;
  std::vector<double> lambdas;
  std::vector<double> density;  // sum_n g_{lambda, (3/2) tau}(2 n pi)
  int truncation_N = 0;
};

inline double gaussian_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * kPi * variance);
}

// Smallest N so that the two geometric tails of the lattice Gaussian sum are
// below tail_bound for every lambda in [-max_abs, max_abs].
inline int intensity_truncation(double tau, double max_abs_lambda,
                                double tail_bound = 1e-12) {
  const double sigma2 = 1.5 * tau;
  int N = static_cast<int>(std::ceil(max_abs_lambda / (2.0 * kPi))) + 1;
  for (;; ++N) {
    const double x = 2.0 * kPi * N - max_abs_lambda;  // closest tail abscissa
    if (x <= 0.0) continue;
    const double term = gaussian_pdf(2.0 * kPi * N, max_abs_lambda, sigma2);
    const double ratio = std::exp(-2.0 * kPi * x / sigma2);  // term decay factor
    if (ratio < 1.0 && 2.0 * term / (1.0 - ratio) < tail_bound) return N;
  }
}

inline IntensityProfile intensity_density(double tau, std::vector<double> lambdas) {
  if (!(tau > 0.0))
    throw std::invalid_argument("intensity_density: tau must be > 0 (the tau -> 0 limit is atomic)");
  double max_abs = 0.0;
  for (double l : lambdas) max_abs = std::max(max_abs, std::abs(l));
  const int N = intensity_truncation(tau, max_abs);
  const double sigma2 = 1.5 * tau;

  IntensityProfile prof;
  prof.tau = tau;
  prof.truncation_N = N;
  prof.lambdas = std::move(lambdas);
  prof.density.resize(prof.lambdas.size());
  for (std::size_t i = 0; i < prof.lambdas.size(); ++i) {
    double s = 0.0;
    for (int n = -N; n <= N; ++n)
      s += gaussian_pdf(prof.lambdas[i], 2.0 * kPi * n, sigma2);
    prof.density[i] = s;
  }
  return prof;
}

inline double intensity_density_at(double tau, double lambda) {
  IntensityProfile p = intensity_density(tau, {lambda});
  return p.density[0];
}

// ---------------------------------------------------------------------------
// Universal eigenvector shape sampler.
// ---------------------------------------------------------------------------

// One draw of the limiting eigenvector shape in winding class n:
//   X(t) = env(t) / ||env|| (sin beta(t), cos beta(t)),
//   env(t) = exp( sqrt(tau)/(2 sqrt 2) B1(t - U) - (tau/8) |t - U| ),
//   beta(t) = (1/2) sqrt(3 tau / 2) (B2(t) - t B2(1)) + n pi t,
// with U uniform, B1 a two-sided Brownian motion pinned at U, B2 the
// independent bridge driver.
struct UniversalShapeSample {
  int n = 0;
  double U = 0.0;
  std::vector<double> grid;
  std::vector<Vec2> X;
  std::vector<double> beta;

  // |X|^2 as a function of t; the angular part drops out.
  std::vector<double> profile() const {
    std::vector<double> p(X.size());
    for (std::size_t i = 0; i < X.size(); ++i)
      p[i] = X[i][0] * X[i][0] + X[i][1] * X[i][1];
    return p;
  }
};

namespace detail {
enum ShapeStreams : std::uint32_t {
  kStreamShapeU = 3,
  kStreamShapeB1Right = 4,
  kStreamShapeB1Left = 5,
  kStreamShapeB2 = 6,
};
}

inline UniversalShapeSample sample_universal_shape(double tau, int n,
                                                   std::uint64_t seed,
                                                   std::size_t n_steps) {
  if (tau < 0.0) throw std::invalid_argument("sample_universal_shape: tau must be >= 0");
  if (n_steps == 0) throw std::invalid_argument("sample_universal_shape: n_steps must be >= 1");
  const double dt = 1.0 / static_cast<double>(n_steps);
  const double sd = std::sqrt(dt);

  UniversalShapeSample s;
  s.n = n;
  s.U = rng::Stream(seed, detail::kStreamShapeU).uniform(0);
  const std::size_t iU =
      static_cast<std::size_t>(std::lround(s.U * static_cast<double>(n_steps)));

  // two independent forward paths glued at the grid point nearest U
  std::vector<double> B1(n_steps + 1, 0.0);
  {
    rng::Stream right(seed, detail::kStreamShapeB1Right);
    double acc = 0.0;
    for (std::size_t i = iU; i < n_steps; ++i) {
      acc += sd * right.normal(i - iU);
      B1[i + 1] = acc;
    }
    rng::Stream left(seed, detail::kStreamShapeB1Left);
    acc = 0.0;
    for (std::size_t i = iU; i-- > 0;) {
      acc += sd * left.normal(iU - 1 - i);
      B1[i] = acc;
    }
  }
  std::vector<double> B2(n_steps + 1, 0.0);
  {
    rng::Stream b2(seed, detail::kStreamShapeB2);
    for (std::size_t i = 0; i < n_steps; ++i) B2[i + 1] = B2[i] + sd * b2.normal(i);
  }

  const double a = std::sqrt(tau) / (2.0 * std::sqrt(2.0));
  const double b = tau / 8.0;
  const double bridge_scale = 0.5 * std::sqrt(1.5 * tau);

  s.grid.resize(n_steps + 1);
  s.beta.resize(n_steps + 1);
  std::vector<double> log_env(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    s.grid[i] = t;
    log_env[i] = a * B1[i] - b * std::abs(t - s.U);
    s.beta[i] = bridge_scale * (B2[i] - t * B2.back()) + n * kPi * t;
  }
  s.beta.back() = n * kPi;  // bridge endpoint, exact

  const double m = *std::max_element(log_env.begin(), log_env.end());
  std::vector<double> env(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) env[i] = std::exp(log_env[i] - m);
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < n_steps; ++i)
    norm_sq += 0.5 * (env[i] * env[i] + env[i + 1] * env[i + 1]) * dt;
  const double inv_norm = 1.0 / std::sqrt(norm_sq);

  s.X.resize(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const double r = env[i] * inv_norm;
    s.X[i] = {r * std::sin(s.beta[i]), r * std::cos(s.beta[i])};
  }
  return s;
}

}  // namespace schtau::spectrum
