#pragma once

#include <Eigen/Dense>
#include <limits>

namespace mirrormdp {

enum class ProxKind { kEuclidean };

/// Box-product feasible set with a Euclidean prox-function d(x) = 0.5*||x||^2.
/// norm_p only affects kappa reporting (see nemirovski_kappa), not the steps.
struct ProxGeometry {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  ProxKind prox_kind = ProxKind::kEuclidean;
  double norm_p = 2.0;

  ProxGeometry(Eigen::VectorXd lo, Eigen::VectorXd hi, double p = 2.0);

  /// Uniform box [lo, hi]^dim.
  static ProxGeometry box(int dim, double lo, double hi, double p = 2.0);

  int dimension() const { return static_cast<int>(lower.size()); }
  bool contains(const Eigen::VectorXd& x, double slack = 1e-12) const;

  /// argmin_{x in Q} d(x): the origin clamped into the box.
  Eigen::VectorXd prox_center() const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
};

/// Mirr(x, v) = argmin_{y in Q} <v, y> + V(x, y). For the Euclidean box
/// geometry this is the coordinate-wise clamp of x - v.
/// Throws std::domain_error if x lies outside Q.
Eigen::VectorXd mirror_step(const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                            const ProxGeometry& geom);

}  // namespace mirrormdp
