#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "schtau/noise.hpp"

namespace schtau::sde {

using Vec2 = std::array<double, 2>;
using CVec2 = std::array<std::complex<double>, 2>;

// Phase / log-modulus trajectories of the eigen-flow for one (tau, lambda).
struct PhasePath {
  double tau = 0.0;
  double lambda = 0.0;
  std::vector<double> grid;   // n_steps + 1 times
  std::vector<double> theta;  // theta[0] = 0
  std::vector<double> rho;    // rho[0] = 0, rho = log of the modulus
};

namespace detail {

// Noise coefficients of one Euler step of (theta, rho). The theta drift
// (lambda/2) t is added analytically, which keeps the tau = 0 flow
// bit-exact and removes accumulation error from the drift.
struct PhaseCoeffs {
  double cb;   // sqrt(tau)/2
  double cw;   // sqrt(tau)/(2 sqrt 2)
  explicit PhaseCoeffs(double tau)
      : cb(std::sqrt(tau) / 2.0), cw(std::sqrt(tau) / (2.0 * std::sqrt(2.0))) {}
};

// rho increment for phase-noise increment delta. The log form has the same
// drift tau/8 dt and variance tau/8 dt to O(dt^2) as the plain Euler
// increment (E[delta^2] supplies the drift), and it makes
// exp(2 rho_i - 2 rho_j) equal the exact lambda-derivative factors of the
// discrete theta flow, so the quadrature identity for d theta / d lambda
// holds to O(dt) instead of O(sqrt dt). delta is O(sqrt dt); the fallback
// branch is unreachable at any sane step size.
inline double rho_increment(double delta, double tau, double dt) {
  const double arg = 1.0 - 2.0 * delta;
  if (arg > 0.02) return -0.5 * std::log(arg);
  return 0.125 * tau * dt + delta;
}

}  // namespace detail

inline PhasePath integrate_phase(const noise::BrownianBundle& bundle, double tau,
                                 double lambda) {
  if (tau < 0.0) throw std::invalid_argument("integrate_phase: tau must be >= 0");
  const std::size_t n = bundle.n_steps;
  const detail::PhaseCoeffs c(tau);

  PhasePath p;
  p.tau = tau;
  p.lambda = lambda;
  p.grid.resize(n + 1);
  p.theta.resize(n + 1);
  p.rho.resize(n + 1);

  double s_theta = 0.0;  // accumulated noise part of theta
  p.grid[0] = 0.0;
  p.theta[0] = 0.0;
  p.rho[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double th = p.theta[i];
    const double c2 = std::cos(2.0 * th);
    const double s2 = std::sin(2.0 * th);
    // Re(e^{2 i theta} dW) = cos dW1 - sin dW2, Im(...) = sin dW1 + cos dW2.
    s_theta += c.cb * bundle.dB[i] + c.cw * (c2 * bundle.dW1[i] - s2 * bundle.dW2[i]);
    const double delta = c.cw * (s2 * bundle.dW1[i] + c2 * bundle.dW2[i]);
    const double t_next = bundle.t(i + 1);
    p.grid[i + 1] = t_next;
    p.theta[i + 1] = 0.5 * lambda * t_next + s_theta;
    p.rho[i + 1] = p.rho[i] + detail::rho_increment(delta, tau, bundle.dt);
  }
  return p;
}

inline std::vector<PhasePath> integrate_phase_family(
    const noise::BrownianBundle& bundle, double tau,
    const std::vector<double>& lambdas) {
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (!(lambdas[i] > lambdas[i - 1]))
      throw std::invalid_argument("integrate_phase_family: lambdas must be strictly increasing");
  std::vector<PhasePath> out;
  out.reserve(lambdas.size());
  for (double lam : lambdas) out.push_back(integrate_phase(bundle, tau, lam));
  return out;
}

// d theta / d lambda at t = 1, i.e. (1/2) int_0^1 exp(2 rho(u) - 2 rho(1)) du
// by trapezoidal quadrature on the stored grid. Differences of rho keep the
// exponentials bounded.
inline double phase_derivative(const PhasePath& path) {
  const std::size_t n = path.rho.size();
  if (n < 2) throw std::invalid_argument("phase_derivative: path too short");
  const double rho1 = path.rho.back();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = std::exp(2.0 * (path.rho[i] - rho1));
    const double b = std::exp(2.0 * (path.rho[i + 1] - rho1));
    acc += 0.5 * (a + b) * (path.grid[i + 1] - path.grid[i]);
  }
  return 0.5 * acc;
}

// Endpoint-only integration: theta(1) plus d theta/d lambda (1), without
// storing paths. Used heavily by the eigenvalue scan. The derivative uses
// the same trapezoidal rule as phase_derivative, folded into a running
// recursion on exp(2 (rho_i - rho_{i+1})).
struct PhaseEndpoint {
  double theta1 = 0.0;
  double dtheta_dlambda = 0.0;
};

inline PhaseEndpoint phase_endpoint(const noise::BrownianBundle& bundle, double tau,
                                    double lambda) {
  if (tau < 0.0) throw std::invalid_argument("phase_endpoint: tau must be >= 0");
  const std::size_t n = bundle.n_steps;
  const double dt = bundle.dt;
  const detail::PhaseCoeffs c(tau);
  double s_theta = 0.0;
  double theta = 0.0;
  double J = 0.0;  // int_0^{t_i} exp(2 rho - 2 rho_i) du, trapezoid
  for (std::size_t i = 0; i < n; ++i) {
    const double c2 = std::cos(2.0 * theta);
    const double s2 = std::sin(2.0 * theta);
    s_theta += c.cb * bundle.dB[i] + c.cw * (c2 * bundle.dW1[i] - s2 * bundle.dW2[i]);
    const double delta = c.cw * (s2 * bundle.dW1[i] + c2 * bundle.dW2[i]);
    theta = 0.5 * lambda * bundle.t(i + 1) + s_theta;
    const double g = std::exp(-2.0 * detail::rho_increment(delta, tau, dt));
    J = (J + 0.5 * dt) * g + 0.5 * dt;
  }
  return {theta, 0.5 * J};
}

// Dirichlet / Neumann solutions of the vector eigen-equation
//   dy = -(z/2) J y dt + J dV y
// on a shared bundle. The deterministic part is applied as its exact
// rotation exp(-(z/2) J dt); the noise increment is Euler at the left
// endpoint. Both initial conditions share the noise; the Wronskian
// y^T J v (= 1 at t=0) is kept as a drift diagnostic.
struct VectorPath {
  std::complex<double> z;
  std::vector<CVec2> y;  // y[0] = (0,1)
  std::vector<CVec2> v;  // v[0] = (1,0)
  std::vector<std::complex<double>> wronskian;
};

namespace detail {

template <class Scalar, class State>
struct VectorStepper {
  // noise matrix J dV scaled by sqrt(tau)/2; entries from one step.
  double q;   // sqrt(tau)/2
  double qr;  // sqrt(tau)/(2 sqrt 2)
  Scalar rot_c, rot_s;  // cos(z dt / 2), sin(z dt / 2)

  VectorStepper(double tau, Scalar z, double dt)
      : q(std::sqrt(tau) / 2.0), qr(std::sqrt(tau) / (2.0 * std::sqrt(2.0))) {
    using std::cos;
    using std::sin;
    rot_c = cos(z * (dt / 2.0));
    rot_s = sin(z * (dt / 2.0));
  }

  void step(State& u, double dB, double dW1, double dW2) const {
    // J dV = [ -c, -b ; a, c ] with a = -q dB + qr dW1, b = -q dB - qr dW1,
    // c = qr dW2. The minus on dB makes the polar coordinates of y follow
    // the phase/log-modulus pair driven by the same bundle (the two sign
    // conventions differ by B -> -B, which matters pathwise, not in law).
    const double a = -q * dB + qr * dW1;
    const double b = -q * dB - qr * dW1;
    const double cc = qr * dW2;
    const auto u0 = u[0], u1 = u[1];
    const auto w0 = u0 + (-cc * u0 - b * u1);
    const auto w1 = u1 + (a * u0 + cc * u1);
    // exp(-(z/2) J dt) = I cos(z dt/2) - J sin(z dt/2)
    u[0] = rot_c * w0 + rot_s * w1;
    u[1] = -rot_s * w0 + rot_c * w1;
  }
};

}  // namespace detail

inline VectorPath integrate_vector(const noise::BrownianBundle& bundle, double tau,
                                   std::complex<double> z) {
  if (tau < 0.0) throw std::invalid_argument("integrate_vector: tau must be >= 0");
  const std::size_t n = bundle.n_steps;
  detail::VectorStepper<std::complex<double>, CVec2> st(tau, z, bundle.dt);

  VectorPath p;
  p.z = z;
  p.y.resize(n + 1);
  p.v.resize(n + 1);
  p.wronskian.resize(n + 1);
  CVec2 y{{{0.0, 0.0}, {1.0, 0.0}}};
  CVec2 v{{{1.0, 0.0}, {0.0, 0.0}}};
  p.y[0] = y;
  p.v[0] = v;
  p.wronskian[0] = y[1] * v[0] - y[0] * v[1];  // y^T J v
  for (std::size_t i = 0; i < n; ++i) {
    st.step(y, bundle.dB[i], bundle.dW1[i], bundle.dW2[i]);
    st.step(v, bundle.dB[i], bundle.dW1[i], bundle.dW2[i]);
    p.y[i + 1] = y;
    p.v[i + 1] = v;
    p.wronskian[i + 1] = y[1] * v[0] - y[0] * v[1];
  }
  return p;
}

// Real specialization for real spectral parameter.
struct VectorPathReal {
  double lambda = 0.0;
  std::vector<Vec2> y;
  std::vector<Vec2> v;
  std::vector<double> wronskian;
};

inline VectorPathReal integrate_vector_real(const noise::BrownianBundle& bundle,
                                            double tau, double lambda) {
  if (tau < 0.0) throw std::invalid_argument("integrate_vector_real: tau must be >= 0");
  const std::size_t n = bundle.n_steps;
  detail::VectorStepper<double, Vec2> st(tau, lambda, bundle.dt);

  VectorPathReal p;
  p.lambda = lambda;
  p.y.resize(n + 1);
  p.v.resize(n + 1);
  p.wronskian.resize(n + 1);
  Vec2 y{0.0, 1.0};
  Vec2 v{1.0, 0.0};
  p.y[0] = y;
  p.v[0] = v;
  p.wronskian[0] = y[1] * v[0] - y[0] * v[1];
  for (std::size_t i = 0; i < n; ++i) {
    st.step(y, bundle.dB[i], bundle.dW1[i], bundle.dW2[i]);
    st.step(v, bundle.dB[i], bundle.dW1[i], bundle.dW2[i]);
    p.y[i + 1] = y;
    p.v[i + 1] = v;
    p.wronskian[i + 1] = y[1] * v[0] - y[0] * v[1];
  }
  return p;
}

}  // namespace schtau::sde
