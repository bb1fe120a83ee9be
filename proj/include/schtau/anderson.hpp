#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "schtau/noise.hpp"
#include "schtau/sde.hpp"

namespace schtau::anderson {

using sde::Vec2;

inline constexpr double kPi = 3.14159265358979323846;

namespace detail {
enum Streams : std::uint32_t {
  kStreamPotential = 7,
  kStreamInvIter = 8,
};
}

// ---------------------------------------------------------------------------
// Finite-volume discretization of -d^2/dt^2 + dB on [0, L], Dirichlet b.c.
// ---------------------------------------------------------------------------

// Symmetric tridiagonal matrix on the N interior grid points. The white
// noise enters as cell increments Delta B_i ~ N(0, h) divided by h, so the
// quadratic form converges to the continuum one as h -> 0.
struct AndersonMatrix {
  double L = 0.0;
  int N = 0;
  double h = 0.0;
  std::vector<double> diag;  // 2/h^2 + dB_i / h
  double offdiag = 0.0;      // -1/h^2
  std::uint64_t seed = 0;
  std::vector<double> dB;    // N(0, h) increments
};

inline AndersonMatrix discretize(double L, int N, std::uint64_t seed) {
  if (!(L > 0.0)) throw std::invalid_argument("discretize: L must be > 0");
  if (N < 2) throw std::invalid_argument("discretize: N must be >= 2");
  AndersonMatrix m;
  m.L = L;
  m.N = N;
  m.h = L / static_cast<double>(N + 1);
  m.seed = seed;
  m.offdiag = -1.0 / (m.h * m.h);
  m.dB.resize(N);
  rng::Stream(seed, detail::kStreamPotential).fill_normal(m.dB.data(), N);
  const double sd = std::sqrt(m.h);
  m.diag.resize(N);
  const double d0 = 2.0 / (m.h * m.h);
  for (int i = 0; i < N; ++i) {
    m.dB[i] *= sd;
    m.diag[i] = d0 + m.dB[i] / m.h;
  }
  return m;
}

// Noise-free variant (test hook); eigenvalues are (4/h^2) sin^2(k pi / (2(N+1))).
inline AndersonMatrix discretize_free(double L, int N) {
  if (!(L > 0.0)) throw std::invalid_argument("discretize_free: L must be > 0");
  if (N < 2) throw std::invalid_argument("discretize_free: N must be >= 2");
  AndersonMatrix m;
  m.L = L;
  m.N = N;
  m.h = L / static_cast<double>(N + 1);
  m.offdiag = -1.0 / (m.h * m.h);
  m.dB.assign(N, 0.0);
  m.diag.assign(N, 2.0 / (m.h * m.h));
  return m;
}

// ---------------------------------------------------------------------------
// Sturm-sequence bisection eigensolver.
// ---------------------------------------------------------------------------

// Number of eigenvalues strictly below x (sign count of the shifted LDL
// pivots).
inline int sturm_count(const AndersonMatrix& m, double x) {
  const double e2 = m.offdiag * m.offdiag;
  const double pivmin =
      std::numeric_limits<double>::min() * std::max(1.0, e2) * 16.0;
  int count = 0;
  double q = 1.0;
  for (int i = 0; i < m.N; ++i) {
    q = (m.diag[i] - x) - (i > 0 ? e2 / q : 0.0);
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
  }
  return count;
}

struct GershgorinBounds {
  double lo, hi;
};

inline GershgorinBounds gershgorin(const AndersonMatrix& m) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const double r = 2.0 * std::abs(m.offdiag);
  for (double d : m.diag) {
    lo = std::min(lo, d - r);
    hi = std::max(hi, d + r);
  }
  return {lo, hi};
}

namespace detail {

// k-th smallest eigenvalue (1-based), bisected to rel tolerance.
inline double bisect_kth(const AndersonMatrix& m, int k, double lo, double hi,
                         double rel_tol) {
  while (true) {
    const double mid = 0.5 * (lo + hi);
    const double width = hi - lo;
    if (width <= rel_tol * std::max(1.0, std::abs(mid)) || mid == lo || mid == hi)
      return mid;
    if (sturm_count(m, mid) >= k)
      hi = mid;
    else
      lo = mid;
  }
}

// Solve (T - shift) x = rhs for tridiagonal T with constant off-diagonal,
// Gaussian elimination with partial pivoting (fill-in limited to a second
// super-diagonal).
inline void shifted_solve(const AndersonMatrix& m, double shift,
                          std::vector<double>& x) {
  const int n = m.N;
  const double e = m.offdiag;
  std::vector<double> d(n), u1(n, 0.0), u2(n, 0.0), sub(n, 0.0);
  for (int i = 0; i < n; ++i) d[i] = m.diag[i] - shift;
  for (int i = 0; i + 1 < n; ++i) {
    u1[i] = e;
    sub[i + 1] = e;
  }
  // forward elimination
  for (int i = 0; i + 1 < n; ++i) {
    double piv = d[i];
    double low = sub[i + 1];
    if (std::abs(low) > std::abs(piv)) {
      std::swap(d[i], sub[i + 1]);
      piv = d[i];
      low = sub[i + 1];
      std::swap(u1[i], d[i + 1]);
      // row i originally (sub, d, u1) of row i+1; fill-in u2
      std::swap(u2[i], u1[i + 1]);
      std::swap(x[i], x[i + 1]);
    }
    if (piv == 0.0) piv = d[i] = 1e-300;
    const double f = low / piv;
    d[i + 1] -= f * u1[i];
    u1[i + 1] -= f * u2[i];
    x[i + 1] -= f * x[i];
  }
  // back substitution
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    if (i + 1 < n) s -= u1[i] * x[i + 1];
    if (i + 2 < n) s -= u2[i] * x[i + 2];
    double piv = d[i];
    if (piv == 0.0) piv = 1e-300;
    x[i] = s / piv;
  }
}

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

}  // namespace detail

struct EigenPair {
  double mu = 0.0;
  std::vector<double> vec;  // unit l2 norm
  bool converged = true;
};

struct EigenWindowOptions {
  // near machine limit; the matrix scale 1/h^2 makes absolute accuracy the
  // binding requirement
  double rel_tol = 1e-13;
  int max_inverse_iterations = 5;
  bool want_vectors = true;
};

// All eigenvalues in (mu_lo, mu_hi], each bisected from the Sturm counts,
// with inverse-iteration eigenvectors. Numerically clustered eigenvalues are
// re-orthogonalized against already accepted vectors in the window.
inline std::vector<EigenPair> eigen_window(const AndersonMatrix& m, double mu_lo,
                                           double mu_hi,
                                           EigenWindowOptions opt = {}) {
  if (!(mu_lo < mu_hi)) throw std::invalid_argument("eigen_window: requires mu_lo < mu_hi");
  const int c_lo = sturm_count(m, mu_lo);
  const int c_hi = sturm_count(m, mu_hi);
  std::vector<EigenPair> out;
  if (c_hi <= c_lo) return out;

  const auto gb = gershgorin(m);
  const double scale = std::max(std::abs(gb.lo), std::abs(gb.hi));
  std::vector<double> mus;
  for (int k = c_lo + 1; k <= c_hi; ++k)
    mus.push_back(detail::bisect_kth(m, k, std::max(mu_lo, gb.lo),
                                     std::min(mu_hi, gb.hi), opt.rel_tol));

  const double cluster_eps = 64.0 * opt.rel_tol * std::max(1.0, scale);
  rng::Stream start(m.seed, detail::kStreamInvIter);
  for (std::size_t j = 0; j < mus.size(); ++j) {
    EigenPair p;
    p.mu = mus[j];
    if (opt.want_vectors) {
      std::vector<double> v(m.N);
      start.fill_normal(v.data(), m.N,
                        static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(m.N));
      double nv = detail::norm2(v);
      for (double& a : v) a /= nv;
      const double res_tol = 1e-10 * std::max(1.0, scale);
      p.converged = false;
      for (int it = 0; it < opt.max_inverse_iterations; ++it) {
        detail::shifted_solve(m, p.mu, v);
        // deflate against close eigenpairs already accepted
        for (std::size_t q = 0; q < j; ++q) {
          if (std::abs(out[q].mu - p.mu) < cluster_eps && out[q].converged) {
            double dot = 0.0;
            for (int i = 0; i < m.N; ++i) dot += v[i] * out[q].vec[i];
            for (int i = 0; i < m.N; ++i) v[i] -= dot * out[q].vec[i];
          }
        }
        nv = detail::norm2(v);
        if (nv == 0.0) break;
        for (double& a : v) a /= nv;
        // residual || (T - mu) v ||
        double res = 0.0;
        for (int i = 0; i < m.N; ++i) {
          double r = (m.diag[i] - p.mu) * v[i];
          if (i > 0) r += m.offdiag * v[i - 1];
          if (i + 1 < m.N) r += m.offdiag * v[i + 1];
          res += r * r;
        }
        if (std::sqrt(res) <= res_tol) {
          p.converged = true;
          break;
        }
      }
      // sign convention: first nonzero component positive
      for (int i = 0; i < m.N; ++i) {
        if (v[i] != 0.0) {
          if (v[i] < 0.0)
            for (double& a : v) a = -a;
          break;
        }
      }
      p.vec = std::move(v);
    }
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recentring, rescaling and unrotation of eigenpairs.
// ---------------------------------------------------------------------------

// {x}_pi and the fast frequency E' = L sqrt(E) - ell_E. Plain double
// argument reduction; fine for L sqrt(E) up to ~1e8.
inline double ell_E(double L, double E) {
  const double x = L * std::sqrt(E);
  double ell = std::fmod(x, kPi);
  if (ell < 0.0) ell += kPi;
  return ell;
}

inline double e_prime(double L, double E) { return L * std::sqrt(E) - ell_E(L, E); }

inline double recenter(double mu, double E, double L) {
  return (L / std::sqrt(E)) * (mu - E) + 2.0 * ell_E(L, E);
}

// Mesh rules. The critical regime needs h sqrt(E) <= 1/20 so the discrete
// derivative resolves oscillations at frequency sqrt(E); the top regime
// additionally needs the discrete-Laplacian dispersion bias
// L sqrt(E) (h sqrt(E))^2 / 12 to stay below the stated budget in rescaled
// units.
inline int mesh_points_critical(double L, double E) {
  return static_cast<int>(std::ceil(20.0 * L * std::sqrt(E)));
}

inline int mesh_points_top(double L, double E, double lambda_bias = 0.01) {
  const double se = std::sqrt(E);
  const double h_disp = std::sqrt(12.0 * lambda_bias / (L * se)) / se;
  const double h = std::min(h_disp, 1.0 / (20.0 * se));
  return static_cast<int>(std::ceil(L / h));
}

// One eigenpair carried through recentring, rescaling to [0,1] and
// unrotation by C_{E'}.
struct RescaledEigenpair {
  double mu = 0.0;
  double lambda = 0.0;
  double E = 0.0;
  double ell = 0.0;      // {L sqrt E}_pi
  double Eprime = 0.0;   // L sqrt E - ell
  bool converged = true;
  std::vector<double> grid;       // N+2 points of [0,1]
  std::vector<double> phi;        // sqrt(L) phi(L t), unit L^2[0,1]
  std::vector<double> phi_prime;  // phi' / (L sqrt E)
  std::vector<Vec2> psiE;         // C_{E'} (phi, phi')^T, unit L^2

  // Profile density L phi^2(L t) on [0,1], trapezoid-normalized.
  std::vector<double> profile() const {
    std::vector<double> p(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) p[i] = phi[i] * phi[i];
    double mass = 0.0;
    const double dt = grid[1] - grid[0];
    for (std::size_t i = 0; i + 1 < p.size(); ++i) mass += 0.5 * (p[i] + p[i + 1]) * dt;
    for (double& a : p) a /= mass;
    return p;
  }
};

inline std::vector<RescaledEigenpair> rescale_spectrum(
    const std::vector<EigenPair>& pairs, double E, double L) {
  if (!(E > 0.0)) throw std::invalid_argument("rescale_spectrum: E must be > 0");
  if (!(L > 0.0)) throw std::invalid_argument("rescale_spectrum: L must be > 0");
  const double ell = ell_E(L, E);
  const double Ep = L * std::sqrt(E) - ell;
  const double freq = L * std::sqrt(E);

  std::vector<RescaledEigenpair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    RescaledEigenpair r;
    r.mu = p.mu;
    r.E = E;
    r.ell = ell;
    r.Eprime = Ep;
    r.converged = p.converged;
    r.lambda = (L / std::sqrt(E)) * (p.mu - E) + 2.0 * ell;
    if (p.vec.empty()) {
      out.push_back(std::move(r));
      continue;
    }

    const int N = static_cast<int>(p.vec.size());
    const int M = N + 2;
    const double dt = 1.0 / static_cast<double>(N + 1);
    const double amp = std::sqrt(static_cast<double>(N + 1));  // sqrt(L/h)
    r.grid.resize(M);
    r.phi.resize(M);
    for (int j = 0; j < M; ++j) r.grid[j] = static_cast<double>(j) * dt;
    r.phi[0] = 0.0;
    r.phi[M - 1] = 0.0;
    for (int j = 0; j < N; ++j) r.phi[j + 1] = amp * p.vec[j];

    // derivative in t, scaled by 1/(L sqrt E); second-order one-sided stencils
    // at the Dirichlet ends
    r.phi_prime.resize(M);
    const double inv = 1.0 / freq;
    r.phi_prime[0] =
        inv * (-3.0 * r.phi[0] + 4.0 * r.phi[1] - r.phi[2]) / (2.0 * dt);
    r.phi_prime[M - 1] =
        inv * (3.0 * r.phi[M - 1] - 4.0 * r.phi[M - 2] + r.phi[M - 3]) / (2.0 * dt);
    for (int j = 1; j + 1 < M; ++j)
      r.phi_prime[j] = inv * (r.phi[j + 1] - r.phi[j - 1]) / (2.0 * dt);

    r.psiE.resize(M);
    double norm_sq = 0.0;
    for (int j = 0; j < M; ++j) {
      const double ang = Ep * r.grid[j];
      const double c = std::cos(ang), s = std::sin(ang);
      r.psiE[j] = {c * r.phi[j] - s * r.phi_prime[j],
                   s * r.phi[j] + c * r.phi_prime[j]};
    }
    for (int j = 0; j + 1 < M; ++j) {
      const double a = r.psiE[j][0] * r.psiE[j][0] + r.psiE[j][1] * r.psiE[j][1];
      const double b =
          r.psiE[j + 1][0] * r.psiE[j + 1][0] + r.psiE[j + 1][1] * r.psiE[j + 1][1];
      norm_sq += 0.5 * (a + b) * dt;
    }
    const double inv_norm = 1.0 / std::sqrt(norm_sq);
    for (auto& u : r.psiE) {
      u[0] *= inv_norm;
      u[1] *= inv_norm;
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rescaled Prufer diagnostics.
// ---------------------------------------------------------------------------

struct PruferPathE {
  double lambda = 0.0;
  double tau_eff = 0.0;  // L / E
  double Eprime = 0.0;
  double ell = 0.0;
  std::vector<double> grid;
  std::vector<double> theta;
  std::vector<double> logr;
};

// Oscillatory drift terms of the rescaled phase / log-modulus pair; exposed
// so tests can integrate them along a stored path.
inline double prufer_drift_theta(double theta, double t, double tau_eff,
                                 double E_prime, double lambda, double ell) {
  const double a2 = 2.0 * theta + 2.0 * E_prime * t;
  return (2.0 * ell - lambda) / 2.0 * std::cos(a2) +
         tau_eff / 4.0 * std::sin(a2) - tau_eff / 8.0 * std::sin(2.0 * a2);
}

inline double prufer_drift_logr(double theta, double t, double tau_eff,
                                double E_prime, double lambda, double ell) {
  const double a2 = 2.0 * theta + 2.0 * E_prime * t;
  return (2.0 * ell - lambda) / 2.0 * std::sin(a2) -
         tau_eff / 4.0 * std::cos(a2) + tau_eff / 8.0 * std::cos(2.0 * a2);
}

// Euler-Maruyama on (theta, ln r) with the full oscillatory drifts, driven
// by dB and the rotated noises extracted from it. Requires enough steps to
// resolve the 2 E' oscillation.
inline PruferPathE prufer_path(const noise::BrownianBundle& bundle, double tau_eff,
                               double E_prime, double lambda, double ell,
                               std::size_t n_steps) {
  if (tau_eff < 0.0) throw std::invalid_argument("prufer_path: tau_eff must be >= 0");
  if (n_steps != bundle.n_steps)
    throw std::invalid_argument("prufer_path: n_steps must match the bundle");
  if (static_cast<double>(n_steps) < 20.0 * E_prime)
    throw std::invalid_argument("prufer_path: need n_steps >= 20 E' to resolve the oscillation");

  const noise::RotatedNoise rot = noise::rotate_noise(bundle, E_prime);
  const double dt = bundle.dt;
  const double cb = std::sqrt(tau_eff) / 2.0;
  const double cw = std::sqrt(tau_eff) / (2.0 * std::sqrt(2.0));

  PruferPathE p;
  p.lambda = lambda;
  p.tau_eff = tau_eff;
  p.Eprime = E_prime;
  p.ell = ell;
  p.grid.resize(n_steps + 1);
  p.theta.assign(n_steps + 1, 0.0);
  p.logr.assign(n_steps + 1, 0.0);
  p.grid[0] = 0.0;
  for (std::size_t i = 0; i < n_steps; ++i) {
    const double t = bundle.t(i);
    const double th = p.theta[i];
    const double c2 = std::cos(2.0 * th);
    const double s2 = std::sin(2.0 * th);
    p.theta[i + 1] =
        th +
        (0.5 * lambda + prufer_drift_theta(th, t, tau_eff, E_prime, lambda, ell)) * dt -
        cb * bundle.dB[i] + cw * (c2 * rot.dW1L[i] - s2 * rot.dW2L[i]);
    p.logr[i + 1] =
        p.logr[i] +
        (0.125 * tau_eff + prufer_drift_logr(th, t, tau_eff, E_prime, lambda, ell)) * dt +
        cw * (s2 * rot.dW1L[i] + c2 * rot.dW2L[i]);
    p.grid[i + 1] = bundle.t(i + 1);
  }
  return p;
}

}  // namespace schtau::anderson
