// Copyright 2026 The nspiggy Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nspiggy/matrix_sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nspiggy/error.hpp"
#include "fixed_set_oracle.hpp"
#include "point_cloud.hpp"

namespace nspiggy {
namespace detail {

PointCloud::PointCloud(const std::vector<Matrix>& points) : n_(points.size()) {
  if (points.empty()) return;
  dim_ = points.front().size();
  data_.resize(n_ * static_cast<std::size_t>(dim_));
  for (std::size_t i = 0; i < n_; ++i) {
    std::copy(points[i].data(), points[i].data() + dim_, data_.begin() + i * dim_);
  }
}

Vector principal_direction(const PointCloud& cloud) {
  const Eigen::Index d = cloud.dim();
  if (d == 1 || cloud.size() < 3) return Vector::Unit(d, 0);
  // second moments in one pass, then power iteration on the d x d matrix
  Vector mean = Vector::Zero(d);
  Matrix moment = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Map<const Vector> x(cloud.point(i), d);
    mean += x;
    moment.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  const auto n = static_cast<double>(cloud.size());
  mean /= n;
  Matrix cov = moment.selfadjointView<Eigen::Lower>();
  cov = cov / n - mean * mean.transpose();
  Vector v = Vector::Ones(d) / std::sqrt(static_cast<double>(d));
  for (int it = 0; it < 30; ++it) {
    const Vector w = cov * v;
    const double norm = w.norm();
    if (norm == 0.0) break;
    v = w / norm;
  }
  return v;
}

double squared_distance(const double* a, const double* b, Eigen::Index dim,
                        double cutoff) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double t = a[k] - b[k];
    s += t * t;
    if (s > cutoff) return s;
  }
  return s;
}

NearestIndex::NearestIndex(PointCloud cloud)
    : cloud_(std::move(cloud)), direction_(principal_direction(cloud_)) {
  const std::size_t n = cloud_.size();
  std::vector<std::pair<double, std::size_t>> keyed(n);
  for (std::size_t i = 0; i < n; ++i) {
    keyed[i] = {Eigen::Map<const Vector>(cloud_.point(i), cloud_.dim()).dot(direction_), i};
  }
  std::sort(keyed.begin(), keyed.end());
  order_.resize(n);
  keys_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    keys_[i] = keyed[i].first;
    order_[i] = keyed[i].second;
  }
}

double NearestIndex::distance(const double* q) const {
  const Eigen::Index d = cloud_.dim();
  const double key = Eigen::Map<const Vector>(q, d).dot(direction_);
  const auto pos = static_cast<std::ptrdiff_t>(
      std::lower_bound(keys_.begin(), keys_.end(), key) - keys_.begin());
  double best = std::numeric_limits<double>::infinity();
  std::ptrdiff_t hi = pos;
  std::ptrdiff_t lo = pos - 1;
  const auto n = static_cast<std::ptrdiff_t>(keys_.size());
  while (hi < n || lo >= 0) {
    const double dhi = hi < n ? keys_[hi] - key : std::numeric_limits<double>::infinity();
    const double dlo = lo >= 0 ? key - keys_[lo] : std::numeric_limits<double>::infinity();
    std::ptrdiff_t idx;
    double dk;
    if (dhi <= dlo) {
      idx = hi++;
      dk = dhi;
    } else {
      idx = lo--;
      dk = dlo;
    }
    if (dk * dk >= best) break;
    const double s = squared_distance(q, cloud_.point(order_[idx]), d, best);
    if (s < best) best = s;
  }
  return std::sqrt(best);
}

MergeIndex::MergeIndex(Eigen::Index dim, double radius)
    : dim_(dim), grid_dims_(std::min(dim, kGridDims)), radius_(radius) {}

std::size_t MergeIndex::CellHash::operator()(const Cell& c) const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto v : c) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ULL;
  return static_cast<std::size_t>(h);
}

MergeIndex::Cell MergeIndex::cell_of(const double* q) const {
  Cell c{};
  for (Eigen::Index k = 0; k < grid_dims_; ++k) {
    // a zero radius only merges exact duplicates; any cell size works then
    const double scaled = radius_ > 0.0 ? std::floor(q[k] / radius_) : q[k];
    constexpr double kLimit = 4e18;
    c[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(std::clamp(scaled, -kLimit, kLimit));
  }
  return c;
}

bool MergeIndex::has_within(const double* q) const {
  const double r2 = radius_ * radius_;
  const Cell centre = cell_of(q);
  Cell probe = centre;
  // visit the 3^grid_dims neighbouring cells
  std::array<int, kGridDims> offset{};
  offset.fill(-1);
  for (Eigen::Index k = grid_dims_; k < kGridDims; ++k) offset[static_cast<std::size_t>(k)] = 0;
  while (true) {
    for (std::size_t k = 0; k < kGridDims; ++k) probe[k] = centre[k] + offset[k];
    if (const auto it = cells_.find(probe); it != cells_.end()) {
      for (const std::size_t idx : it->second) {
        if (squared_distance(q, data_.data() + idx * dim_, dim_, r2) <= r2) return true;
      }
    }
    std::size_t k = 0;
    while (k < static_cast<std::size_t>(grid_dims_) && offset[k] == 1) offset[k++] = -1;
    if (k == static_cast<std::size_t>(grid_dims_)) break;
    ++offset[k];
  }
  return false;
}

void MergeIndex::insert(const double* q) {
  const std::size_t idx = data_.size() / static_cast<std::size_t>(dim_);
  data_.insert(data_.end(), q, q + dim_);
  cells_[cell_of(q)].push_back(idx);
}

}  // namespace detail

namespace {

void require_nonempty(const MatrixSet& s) {
  if (s.empty()) throw Error(ErrorKind::EmptySet, "empty set");
}

void require_same_shape(const MatrixSet& x, const MatrixSet& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "matrix sets have different point shapes");
  }
}

void validate_elements(const JacobianSet& elements) {
  if (elements.empty()) throw Error(ErrorKind::EmptySet, "empty packet");
  const auto p = elements.front().a.rows();
  const auto m = elements.front().b.cols();
  for (const auto& e : elements) {
    if (e.a.rows() != p || e.a.cols() != p || e.b.rows() != p || e.b.cols() != m) {
      throw Error(ErrorKind::DimensionMismatch, "packet elements have inconsistent shapes");
    }
  }
}

}  // namespace

MatrixPacket::MatrixPacket(JacobianSet elements, double rho)
    : elements_(std::move(elements)), rho_(rho) {
  validate_elements(elements_);
  if (!(rho_ >= 0.0 && rho_ < 1.0)) {
    throw Error(ErrorKind::RateCertification, "packet rho must lie in [0, 1)");
  }
  for (const auto& e : elements_) {
    const double norm = operator_norm(e.a);
    if (norm > rho_ + 1e-10) {
      std::ostringstream os;
      os << "packet element has operator norm " << norm << " above rho " << rho_;
      throw Error(ErrorKind::RateCertification, os.str());
    }
  }
}

MatrixPacket MatrixPacket::certify(JacobianSet elements) {
  validate_elements(elements);
  // power iteration approaches the norm from below; keep a margin so a
  // norm-one block is not certified from a slightly low estimate
  constexpr double kCertificationMargin = 1e-9;
  const double rho = max_operator_norm(elements);
  if (!(rho < 1.0 - kCertificationMargin)) {
    std::ostringstream os;
    os << "rate certification failure: measured operator norm " << rho;
    throw Error(ErrorKind::RateCertification, os.str());
  }
  return MatrixPacket(std::move(elements), rho);
}

double MatrixPacket::sup_b_norm() const {
  double s = 0.0;
  for (const auto& e : elements_) s = std::max(s, e.b.norm());
  return s;
}

MatrixSet::MatrixSet(std::vector<Matrix> points, double prune_tol)
    : points_(std::move(points)), prune_tol_(prune_tol) {
  if (!(prune_tol_ >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "prune_tol must be nonnegative");
  }
  for (const auto& p : points_) {
    if (p.rows() != points_.front().rows() || p.cols() != points_.front().cols()) {
      throw Error(ErrorKind::DimensionMismatch, "matrix set points have different shapes");
    }
  }
}

MatrixSet MatrixSet::with_prune_tol(double tol) const { return MatrixSet(points_, tol); }

MatrixSet MatrixSet::pruned() const {
  if (points_.size() < 2) return *this;
  detail::PointCloud cloud(points_);
  detail::MergeIndex index(cloud.dim(), prune_tol_);
  std::vector<Matrix> kept;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (index.has_within(cloud.point(i))) continue;
    index.insert(cloud.point(i));
    kept.push_back(points_[i]);
  }
  return MatrixSet(std::move(kept), prune_tol_);
}

double MatrixSet::sup_norm() const {
  double s = 0.0;
  for (const auto& p : points_) s = std::max(s, p.norm());
  return s;
}

double gap(const MatrixSet& x, const MatrixSet& y) {
  require_nonempty(x);
  require_nonempty(y);
  require_same_shape(x, y);
  detail::PointCloud cx(x.points());
  detail::NearestIndex index{detail::PointCloud(y.points())};
  double g = 0.0;
  for (std::size_t i = 0; i < cx.size(); ++i) g = std::max(g, index.distance(cx.point(i)));
  return g;
}

double hausdorff(const MatrixSet& x, const MatrixSet& y) {
  return std::max(gap(x, y), gap(y, x));
}

MatrixSet apply_elements(const JacobianSet& elements, const MatrixSet& x) {
  require_nonempty(x);
  if (elements.empty()) throw Error(ErrorKind::EmptySet, "empty set of Jacobian elements");
  for (const auto& e : elements) {
    if (e.a.cols() != x.rows() || e.b.rows() != e.a.rows() || e.b.cols() != x.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "packet and set dimensions do not match");
    }
  }
  std::vector<Matrix> out;
  out.reserve(elements.size() * x.size());
  for (const auto& point : x.points()) {
    for (const auto& e : elements) out.push_back(e.a * point + e.b);
  }
  return MatrixSet(std::move(out), x.prune_tol());
}

MatrixSet apply_packet(const MatrixPacket& packet, const MatrixSet& x) {
  return apply_elements(packet.elements(), x).pruned();
}

MatrixSet element_fixed_points(const MatrixPacket& packet, double prune_tol) {
  std::vector<Matrix> pts;
  pts.reserve(packet.size());
  for (const auto& e : packet.elements()) {
    const Matrix lhs = Matrix::Identity(e.a.rows(), e.a.cols()) - e.a;
    pts.push_back(lhs.partialPivLu().solve(e.b));
  }
  return MatrixSet(std::move(pts), prune_tol).pruned();
}

FixedSetResult fixed_set(const MatrixPacket& packet, const MatrixSet& x0, double tol,
                         const FixedSetOptions& options) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "fixed_set tolerance must be positive");
  require_nonempty(x0);
  const double prune = options.prune_tol.value_or(tol / 100.0);
  const double rho = packet.rho();
  const double threshold = tol * (1.0 - rho);

  FixedSetResult result;
  MatrixSet x = x0.with_prune_tol(prune).pruned();
  const double d0 = hausdorff(x, apply_elements(packet.elements(), x));
  if (d0 == 0.0) {
    result.set = std::move(x);
    return result;
  }
  int max_iters = options.safety_margin;
  if (rho > 0.0 && threshold < d0) {
    max_iters += static_cast<int>(std::ceil(std::log(threshold / d0) / std::log(rho)));
  }
  for (int k = 0; k < max_iters; ++k) {
    MatrixSet next = apply_packet(packet, x);
    if (next.size() > options.max_points) {
      std::ostringstream os;
      os << "set explosion: " << next.size() << " points after pruning at " << prune;
      throw Error(ErrorKind::SetExplosion, os.str());
    }
    const double d = hausdorff(next, x);
    result.step_distances.push_back(d);
    x = std::move(next);
    result.iterations = k + 1;
    if (d <= threshold) {
      result.set = std::move(x);
      return result;
    }
  }
  std::ostringstream os;
  os << "rate violation: no convergence within " << max_iters << " iterations (rho " << rho
     << ")";
  throw Error(ErrorKind::RateViolation, os.str());
}

std::vector<RateRow> verify_rate(const MatrixPacket& packet, const MatrixSet& x0, int k_max,
                                 double eval_tol) {
  require_nonempty(x0);
  const double rho = packet.rho();
  if (!(eval_tol > 0.0)) eval_tol = x0.prune_tol() > 0.0 ? x0.prune_tol() : 1e-10;
  const double d0 = hausdorff(x0, apply_elements(packet.elements(), x0));
  const detail::FixedSetOracle oracle(packet);
  std::vector<RateRow> rows;
  MatrixSet x = x0;
  for (int k = 0; k <= k_max; ++k) {
    if (k > 0) x = apply_packet(packet, x);
    const double dist =
        std::max(oracle.gap_to(x, eval_tol).upper, oracle.gap_from(x, eval_tol).upper);
    rows.push_back({k, dist, std::pow(rho, k) * d0 / (1.0 - rho)});
  }
  return rows;
}

namespace {

bool contains_element(const MatrixPacket& packet, const JacobianElement& e) {
  for (const auto& f : packet.elements()) {
    if (f.a.rows() == e.a.rows() && f.b.cols() == e.b.cols() &&
        (f.a - e.a).norm() <= 1e-12 && (f.b - e.b).norm() <= 1e-12) {
      return true;
    }
  }
  return false;
}

double pm_norm(const JacobianElement& a, const JacobianElement& b) {
  return std::max(operator_norm(a.a - b.a), (a.b - b.b).norm());
}

}  // namespace

bool fix_monotonicity_check(const MatrixPacket& small, const MatrixPacket& large, double tol) {
  if (small.state_dim() != large.state_dim() || small.param_dim() != large.param_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "packets have different dimensions");
  }
  for (const auto& e : small.elements()) {
    if (!contains_element(large, e)) {
      throw Error(ErrorKind::InvalidArgument,
                  "monotonicity check requires elements(J) to be a subset of elements(J')");
    }
  }
  bool same = small.size() == large.size();
  for (const auto& e : large.elements()) same = same && contains_element(small, e);
  if (same) return true;
  const detail::FixedSetOracle small_oracle(small);
  const MatrixSet& inner = small_oracle.cover(tol / 2.0);
  return detail::FixedSetOracle(large).gap_to(inner, tol / 4.0).upper + tol / 2.0 <= tol;
}

double packet_distance(const MatrixPacket& a, const MatrixPacket& b) {
  if (a.state_dim() != b.state_dim() || a.param_dim() != b.param_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "packets have different dimensions");
  }
  auto one_sided = [](const MatrixPacket& x, const MatrixPacket& y) {
    double g = 0.0;
    for (const auto& e : x.elements()) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& f : y.elements()) best = std::min(best, pm_norm(e, f));
      g = std::max(g, best);
    }
    return g;
  };
  return std::max(one_sided(a, b), one_sided(b, a));
}

LipschitzCheck fix_lipschitz_check(const MatrixPacket& j0, const MatrixPacket& j, double tol) {
  const double dist = packet_distance(j0, j);
  const double rho = std::max(j0.rho(), j.rho());
  LipschitzCheck out;
  out.rhs = (1.0 / (1.0 - rho) + j0.sup_b_norm() / ((1.0 - rho) * (1.0 - rho))) * dist;
  const detail::FixedSetOracle oracle0(j0);
  const detail::FixedSetOracle oracle(j);
  const MatrixSet& inner0 = oracle0.cover(tol);
  // inner0 ⊂ fix(J0) covers it within tol.
  out.lhs = std::max(oracle.gap_to(inner0, tol).upper, oracle.gap_from(inner0, tol).upper);
  return out;
}

std::vector<double> perturbed_fixed_iteration(const std::vector<MatrixPacket>& seq,
                                              const MatrixPacket& jbar, const MatrixSet& x0,
                                              double eval_tol) {
  const detail::FixedSetOracle oracle(jbar);
  std::vector<double> gaps;
  gaps.reserve(seq.size() + 1);
  MatrixSet x = x0;
  gaps.push_back(oracle.gap_to(x, eval_tol).upper);
  for (const auto& jk : seq) {
    x = apply_packet(jk, x);
    gaps.push_back(oracle.gap_to(x, eval_tol).upper);
  }
  return gaps;
}

}  // namespace nspiggy
