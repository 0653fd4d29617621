#include "mirrormdp/geometry.hpp"

#include <stdexcept>

namespace mirrormdp {

ProxGeometry::ProxGeometry(Eigen::VectorXd lo, Eigen::VectorXd hi, double p)
    : lower(std::move(lo)), upper(std::move(hi)), norm_p(p) {
  if (lower.size() != upper.size() || lower.size() == 0)
    throw std::invalid_argument("ProxGeometry: bound size mismatch");
  if ((lower.array() > upper.array()).any())
    throw std::invalid_argument("ProxGeometry: lower bound exceeds upper bound");
  if (!(norm_p >= 1.0))
    throw std::invalid_argument("ProxGeometry: norm_p must be >= 1");
}

ProxGeometry ProxGeometry::box(int dim, double lo, double hi, double p) {
  return ProxGeometry(Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi), p);
}

bool ProxGeometry::contains(const Eigen::VectorXd& x, double slack) const {
  if (x.size() != lower.size()) return false;
  return (x.array() >= lower.array() - slack).all() && (x.array() <= upper.array() + slack).all();
}

Eigen::VectorXd ProxGeometry::prox_center() const {
  return clamp(Eigen::VectorXd::Zero(lower.size()));
}

Eigen::VectorXd ProxGeometry::clamp(const Eigen::VectorXd& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

Eigen::VectorXd mirror_step(const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                            const ProxGeometry& geom) {
  if (x.size() != geom.lower.size() || v.size() != geom.lower.size())
    throw std::invalid_argument("mirror_step: dimension mismatch");
  if (!geom.contains(x)) throw std::domain_error("mirror_step: x outside the feasible box");
  return geom.clamp(x - v);
}

}  // namespace mirrormdp
