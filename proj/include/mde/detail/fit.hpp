#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace mde::detail {

struct Point {
  double x;
  double y;
};

// Least-squares coefficients for y ~ sum_k beta_k * basis_k(x).
inline Eigen::VectorXd least_squares(const std::vector<Point>& pts,
                                     const std::vector<std::function<double(double)>>& basis) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(basis.size()));
  Eigen::VectorXd y(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t k = 0; k < basis.size(); ++k)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = basis[k](pts[i].x);
    y(static_cast<Eigen::Index>(i)) = pts[i].y;
  }
  return X.colPivHouseholderQr().solve(y);
}

inline double slope(const std::vector<Point>& pts) {
  const auto beta = least_squares(pts, {[](double) { return 1.0; }, [](double x) { return x; }});
  return beta(1);
}

// Vertices of the upper concave hull (Newton polygon) of points sorted by x.
inline std::vector<Point> upper_hull(const std::vector<Point>& pts) {
  std::vector<Point> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull[hull.size() - 1];
      // drop b when it lies strictly below the chord a -> p; near-collinear points stay
      const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
      const double tol = 1e-9 * (1.0 + std::abs(a.y) + std::abs(p.y)) * (p.x - a.x);
      if (cross > tol) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }
  return hull;
}

}  // namespace mde::detail
