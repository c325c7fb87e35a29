/*
 * Copyright 2026 The centerpercept Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "centerpercept/decoder.hpp"

namespace centerpercept {

LanePolynomial fit_polynomial(std::span<const Point2> points, int degree) {
  if (points.size() < 2) throw InvalidArgument("polynomial fit needs at least 2 points");
  if (degree < 0) throw InvalidArgument("polynomial degree must be >= 0");
  std::set<double> distinct_y;
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidArgument("non-finite point");
    distinct_y.insert(p.y);
  }
  if (distinct_y.size() < 2) throw DegenerateFit("all points share the same y");
  const int deg = std::min(degree, static_cast<int>(distinct_y.size()) - 1);

  // Fit in a centred, scaled abscissa for conditioning, then expand back.
  const double y_min = *distinct_y.begin();
  const double y_max = *distinct_y.rbegin();
  const double mid = 0.5 * (y_min + y_max);
  const double half = 0.5 * (y_max - y_min);

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd a(n, deg + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (points[i].y - mid) / half;
    double tp = 1.0;
    for (int k = 0; k <= deg; ++k, tp *= t) a(i, k) = tp;
    b(i) = points[i].x;
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);

  // x = sum_k c_k ((y - mid) / half)^k expanded in powers of y.
  std::vector<double> coeffs(static_cast<std::size_t>(deg) + 1, 0.0);
  for (int k = 0; k <= deg; ++k) {
    const double scale = c(k) / std::pow(half, k);
    double binom = 1.0;
    for (int j = 0; j <= k; ++j) {
      coeffs[j] += scale * binom * std::pow(-mid, k - j);
      binom = binom * (k - j) / (j + 1);
    }
  }
  LanePolynomial poly;
  poly.coefficients = std::move(coeffs);
  poly.y_min = y_min;
  poly.y_max = y_max;
  return poly;
}

}  // namespace centerpercept
