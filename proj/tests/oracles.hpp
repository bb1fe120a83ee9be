#pragma once

// Test-side oracles, independent of the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <vector>

#include "schtau/anderson.hpp"

namespace schtau::oracles {

struct DenseEigen {
  std::vector<double> values;                // ascending
  std::vector<std::vector<double>> vectors;  // vectors[k] for values[k]
};

// Dense cyclic-Jacobi eigensolver for the tridiagonal test matrices.
inline DenseEigen jacobi_eigensolver(const anderson::AndersonMatrix& m) {
  const int n = m.N;
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    a[i][i] = m.diag[i];
    v[i][i] = 1.0;
    if (i + 1 < n) a[i][i + 1] = a[i + 1][i] = m.offdiag;
  }
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-24 * n * n * m.offdiag * m.offdiag) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int i = 0; i < n; ++i) {
          const double aip = a[i][p], aiq = a[i][q];
          a[i][p] = c * aip - s * aiq;
          a[i][q] = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = a[p][i], aqi = a[q][i];
          a[p][i] = c * api - s * aqi;
          a[q][i] = s * api + c * aqi;
          const double vip = v[i][p], viq = v[i][q];
          v[i][p] = c * vip - s * viq;
          v[i][q] = s * vip + c * viq;
        }
      }
    }
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return a[x][x] < a[y][y]; });
  DenseEigen out;
  for (int k : order) {
    out.values.push_back(a[k][k]);
    std::vector<double> vec(n);
    for (int i = 0; i < n; ++i) vec[i] = v[i][k];
    out.vectors.push_back(std::move(vec));
  }
  return out;
}

inline int interior_sign_changes(const std::vector<double>& v) {
  int changes = 0;
  double prev = 0.0;
  for (double x : v) {
    if (x == 0.0) continue;
    if (prev != 0.0 && x * prev < 0.0) ++changes;
    prev = x;
  }
  return changes;
}

// One-sample Kolmogorov distance to U[0,1].
inline double ks_to_uniform(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - x[i]));
    d = std::max(d, std::abs(x[i] - static_cast<double>(i) / n));
  }
  return d;
}

}  // namespace schtau::oracles
