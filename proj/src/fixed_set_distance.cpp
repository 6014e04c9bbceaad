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

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "fixed_set_oracle.hpp"
#include "nspiggy/error.hpp"
#include "point_cloud.hpp"

namespace nspiggy {
namespace detail {

namespace {

[[noreturn]] void too_many_nodes(std::size_t cap) {
  std::ostringstream os;
  os << "set explosion: fixed-set distance needs more than " << cap << " cylinders";
  throw Error(ErrorKind::SetExplosion, os.str());
}

// Above this predicted size the direct cover costs more than the search.
constexpr double kDirectCoverPoints = 2e5;

void check_tol(double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "distance tolerance must be positive");
}

}  // namespace

FixedSetOracle::FixedSetOracle(const MatrixPacket& packet, std::size_t max_nodes)
    : packet_(&packet), max_nodes_(max_nodes) {
  const auto& first = packet.elements().front();
  const Matrix lhs = Matrix::Identity(first.a.rows(), first.a.cols()) - first.a;
  anchor_ = lhs.partialPivLu().solve(first.b);
  double rho = packet.rho();
  double spread = 0.0;
  for (const auto& e : packet.elements()) {
    images_.push_back(e.a * anchor_ + e.b);
    norms_.push_back(operator_norm(e.a));
    rho = std::max(rho, norms_.back());
    spread = std::max(spread, (images_.back() - anchor_).norm());
  }
  radius_ = spread / (1.0 - rho);
}

FixedSetOracle::Node FixedSetOracle::root() const {
  const auto p = anchor_.rows();
  return Node{Matrix::Identity(p, p), Matrix::Zero(p, anchor_.cols()), anchor_, 1.0};
}

FixedSetOracle::Node FixedSetOracle::child(const Node& parent, std::size_t j) const {
  const auto& e = (*packet_)[j];
  Matrix a = parent.a * e.a;
  // ‖A_w‖_F also bounds the operator norm and is much tighter than the
  // product of factor norms for products of non-commuting or diagonal blocks
  const double scale = std::min(parent.scale * norms_[j], a.norm());
  return Node{std::move(a), parent.a * e.b + parent.b, parent.a * images_[j] + parent.b, scale};
}

DistanceBounds FixedSetOracle::point_distance(const Matrix& q, double tol, double stop_below,
                                              double rel_tol) const {
  check_tol(tol);
  if (q.rows() != anchor_.rows() || q.cols() != anchor_.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "point and packet dimensions do not match");
  }
  double upper = (q - anchor_).norm();
  if (radius_ == 0.0) return {upper, upper};

  struct Entry {
    double lower;
    std::size_t id;
    bool operator<(const Entry& o) const { return lower > o.lower || (lower == o.lower && id > o.id); }
  };
  std::vector<Node> nodes;
  std::priority_queue<Entry> heap;
  nodes.push_back(root());
  heap.push({std::max(0.0, upper - radius_), 0});
  double discarded = std::numeric_limits<double>::infinity();
  while (!heap.empty()) {
    const Entry top = heap.top();
    if (top.lower >= upper - std::max(tol, rel_tol * upper) || upper <= stop_below) {
      return {std::min({top.lower, discarded, upper}), upper};
    }
    heap.pop();
    const Node parent = std::move(nodes[top.id]);
    for (std::size_t j = 0; j < packet_->size(); ++j) {
      Node c = child(parent, j);
      const double d = (q - c.center).norm();
      upper = std::min(upper, d);
      const double lower = std::max(0.0, d - c.scale * radius_);
      if (lower < upper - std::max(tol, rel_tol * upper)) {
        if (nodes.size() >= max_nodes_) too_many_nodes(max_nodes_);
        heap.push({lower, nodes.size()});
        nodes.push_back(std::move(c));
      } else {
        discarded = std::min(discarded, lower);
      }
    }
  }
  return {std::min(discarded, upper), upper};
}

const MatrixSet& FixedSetOracle::cover(double delta) const {
  check_tol(delta);
  auto it = covers_.find(delta);
  if (it != covers_.end()) return it->second;
  const double half = delta / 2.0;
  std::vector<Matrix> centers;
  std::vector<Node> stack{root()};
  std::size_t visited = 0;
  while (!stack.empty()) {
    Node n = std::move(stack.back());
    stack.pop_back();
    if (++visited > max_nodes_) too_many_nodes(max_nodes_);
    if (n.scale * radius_ <= half) {
      centers.push_back(std::move(n.center));
      continue;
    }
    for (std::size_t j = packet_->size(); j-- > 0;) stack.push_back(child(n, j));
  }
  MatrixSet set = MatrixSet(std::move(centers), half).pruned();
  return covers_.emplace(delta, std::move(set)).first->second;
}

double FixedSetOracle::predicted_cover_size(double delta) const {
  if (radius_ == 0.0) return 1.0;
  const double coarse = 1e-2 * radius_;
  if (delta >= coarse) return static_cast<double>(cover(delta).size());
  try {
    const auto n0 = static_cast<double>(cover(coarse).size());
    const auto n1 = static_cast<double>(cover(coarse / 4.0).size());
    const double exponent = std::max(0.0, std::log(n1 / n0) / std::log(4.0));
    return n1 * std::pow(coarse / 4.0 / delta, exponent);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SetExplosion) throw;
    return std::numeric_limits<double>::infinity();
  }
}

DistanceBounds FixedSetOracle::gap_to(const MatrixSet& x, double tol) const {
  check_tol(tol);
  if (x.empty()) throw Error(ErrorKind::EmptySet, "empty set");
  auto exact = [&] {
    DistanceBounds out{0.0, 0.0};
    for (const auto& p : x.points()) {
      const DistanceBounds d = point_distance(p, tol, out.lower);
      out.lower = std::max(out.lower, d.lower);
      out.upper = std::max(out.upper, d.upper);
    }
    out.upper = std::max(out.upper, out.lower);
    return out;
  };
  if (x.size() <= 32 || radius_ == 0.0) return exact();
  if (predicted_cover_size(tol) <= kDirectCoverPoints) {
    // every point of fix(J) is within tol of a cover point, so the nearest
    // cover point brackets each distance to width tol
    const NearestIndex index{PointCloud(cover(tol).points())};
    DistanceBounds out{0.0, 0.0};
    for (const auto& p : x.points()) {
      const double d = index.distance(p.data());
      out.lower = std::max(out.lower, d - tol);
      out.upper = std::max(out.upper, d);
    }
    out.lower = std::max(out.lower, 0.0);
    return out;
  }
  // A coarse cover brackets every point within delta; only points whose
  // bracket reaches above the running lower bound get an exact search.
  const double delta = std::max(tol, 1e-2 * radius_);
  const MatrixSet* coarse_cover = nullptr;
  try {
    coarse_cover = &cover(delta);
  } catch (const Error& e) {
    // slowly contracting packets: the cover is out of reach
    if (e.kind() != ErrorKind::SetExplosion) throw;
    return exact();
  }
  const NearestIndex index{PointCloud(coarse_cover->points())};
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) order.emplace_back(index.distance(x[i].data()), i);
  std::sort(order.begin(), order.end(),
            [](const auto& l, const auto& r) { return l.first > r.first || (l.first == r.first && l.second < r.second); });
  DistanceBounds out{0.0, 0.0};
  for (const auto& [coarse, i] : order) {
    if (coarse <= out.lower + tol) {
      out.upper = std::max(out.upper, coarse);
      break;
    }
    if (delta <= tol) {
      out.lower = std::max(out.lower, coarse - delta);
      out.upper = std::max(out.upper, coarse);
      continue;
    }
    const DistanceBounds d = point_distance(x[i], tol, out.lower);
    out.lower = std::max(out.lower, d.lower);
    out.upper = std::max(out.upper, std::min(d.upper, coarse));
  }
  out.upper = std::max(out.upper, out.lower);
  return out;
}

DistanceBounds FixedSetOracle::gap_from(const MatrixSet& x, double tol) const {
  check_tol(tol);
  if (x.empty()) throw Error(ErrorKind::EmptySet, "empty set");
  if (x.rows() != anchor_.rows() || x.cols() != anchor_.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "set and packet dimensions do not match");
  }
  const NearestIndex index{PointCloud(x.points())};
  double lower = index.distance(anchor_.data());
  if (radius_ == 0.0) return {lower, lower};
  if (predicted_cover_size(tol) <= kDirectCoverPoints) {
    for (const auto& c : cover(tol).points()) lower = std::max(lower, index.distance(c.data()));
    return {lower, lower + tol};
  }

  struct Entry {
    double upper;
    std::size_t id;
    bool operator<(const Entry& o) const { return upper < o.upper || (upper == o.upper && id > o.id); }
  };
  std::vector<Node> nodes;
  std::priority_queue<Entry> heap;
  nodes.push_back(root());
  heap.push({lower + radius_, 0});
  double discarded = lower;
  while (!heap.empty()) {
    const Entry top = heap.top();
    if (top.upper <= lower + tol) return {lower, std::max({top.upper, discarded, lower})};
    heap.pop();
    const Node parent = std::move(nodes[top.id]);
    for (std::size_t j = 0; j < packet_->size(); ++j) {
      Node c = child(parent, j);
      const double d = index.distance(c.center.data());
      lower = std::max(lower, d);
      const double upper = d + c.scale * radius_;
      if (upper > lower + tol) {
        if (nodes.size() >= max_nodes_) too_many_nodes(max_nodes_);
        heap.push({upper, nodes.size()});
        nodes.push_back(std::move(c));
      } else {
        discarded = std::max(discarded, upper);
      }
    }
  }
  return {lower, std::max(discarded, lower)};
}

}  // namespace detail

DistanceBounds distance_to_fixed_set(const MatrixPacket& packet, const Matrix& point, double tol) {
  return detail::FixedSetOracle(packet).point_distance(point, tol);
}

DistanceBounds gap_to_fixed_set(const MatrixPacket& packet, const MatrixSet& x, double tol) {
  return detail::FixedSetOracle(packet).gap_to(x, tol);
}

DistanceBounds gap_from_fixed_set(const MatrixPacket& packet, const MatrixSet& x, double tol) {
  return detail::FixedSetOracle(packet).gap_from(x, tol);
}

DistanceBounds hausdorff_to_fixed_set(const MatrixPacket& packet, const MatrixSet& x,
                                      double tol) {
  const detail::FixedSetOracle oracle(packet);
  const DistanceBounds to = oracle.gap_to(x, tol);
  const DistanceBounds from = oracle.gap_from(x, tol);
  return {std::max(to.lower, from.lower), std::max(to.upper, from.upper)};
}

}  // namespace nspiggy
