#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "eqopt/neural.hpp"

namespace eqopt::testing {

/// ||a - n|| / (||a|| + ||n||), the usual gradient-check ratio.
inline double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::sqrt(na) + std::sqrt(nn);
  return denom < 1e-300 ? 0.0 : std::sqrt(diff) / denom;
}

/// Central differences of `loss` with respect to every parameter of `net`.
inline std::vector<double> numeric_gradient(DenseNet& net, const std::function<double()>& loss, double h = 1e-5) {
  std::vector<double> p = net.flat_parameters();
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    net.set_flat_parameters(p);
    const double up = loss();
    p[i] = keep - h;
    net.set_flat_parameters(p);
    const double down = loss();
    p[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  net.set_flat_parameters(p);
  return g;
}

/// Central differences with respect to a raw parameter vector.
inline std::vector<double> numeric_gradient(std::vector<double>& p, const std::function<double()>& loss,
                                            double h = 1e-5) {
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = loss();
    p[i] = keep - h;
    const double down = loss();
    p[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng);
  return m;
}

}  // namespace eqopt::testing
