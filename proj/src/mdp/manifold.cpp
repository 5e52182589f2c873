#include "recourse/mdp/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "recourse/common/error.hpp"

namespace recourse::mdp {

double state_distance(std::span<const double> a, std::span<const double> b,
                      const std::vector<bool>& categorical) {
  double total = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    total += categorical[j] ? (a[j] == b[j] ? 0.0 : 1.0) : std::abs(a[j] - b[j]);
  }
  return total;
}

ManifoldIndex::ManifoldIndex(const std::vector<State>& reference, std::vector<bool> categorical,
                             std::size_t leaf_size)
    : leaf_size_(std::max<std::size_t>(1, leaf_size)), categorical_(std::move(categorical)) {
  if (reference.empty()) throw Error(ErrorCode::kEmptyReference, "manifold reference set is empty");
  dim_ = categorical_.size();
  if (dim_ == 0) throw Error(ErrorCode::kDimensionMismatch, "manifold index needs at least one feature");
  for (const auto& row : reference) {
    if (row.size() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "reference row width differs from the feature count");
    }
  }
  row_ids_.resize(reference.size());
  std::iota(row_ids_.begin(), row_ids_.end(), 0);
  points_.resize(reference.size() * dim_);
  // build() permutes row_ids_; points_ is filled from the final order.
  nodes_.reserve(2 * reference.size() / leaf_size_ + 2);
  build(reference, 0, reference.size());
  for (std::size_t i = 0; i < row_ids_.size(); ++i) {
    std::copy(reference[row_ids_[i]].begin(), reference[row_ids_[i]].end(),
              points_.begin() + static_cast<long>(i * dim_));
  }
}

std::size_t ManifoldIndex::build(const std::vector<State>& ref, std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end});
  box_lo_.resize((id + 1) * dim_, std::numeric_limits<double>::infinity());
  box_hi_.resize((id + 1) * dim_, -std::numeric_limits<double>::infinity());
  for (std::size_t i = begin; i < end; ++i) {
    const State& row = ref[row_ids_[i]];
    for (std::size_t j = 0; j < dim_; ++j) {
      box_lo_[id * dim_ + j] = std::min(box_lo_[id * dim_ + j], row[j]);
      box_hi_[id * dim_ + j] = std::max(box_hi_[id * dim_ + j], row[j]);
    }
  }
  if (end - begin <= leaf_size_) return id;

  std::size_t split_dim = 0;
  double widest = -1.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    const double spread = box_hi_[id * dim_ + j] - box_lo_[id * dim_ + j];
    if (spread > widest) {
      widest = spread;
      split_dim = j;
    }
  }
  if (widest <= 0.0) return id;  // all points identical

  const std::size_t mid = begin + (end - begin) / 2;
  auto first = row_ids_.begin() + static_cast<long>(begin);
  std::nth_element(first, row_ids_.begin() + static_cast<long>(mid), row_ids_.begin() + static_cast<long>(end),
                   [&](std::size_t x, std::size_t y) {
                     const double vx = ref[x][split_dim];
                     const double vy = ref[y][split_dim];
                     return vx < vy || (vx == vy && x < y);
                   });
  const std::size_t left = build(ref, begin, mid);
  const std::size_t right = build(ref, mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double ManifoldIndex::lower_bound(std::size_t node, std::span<const double> query) const {
  const double* lo = box_lo_.data() + node * dim_;
  const double* hi = box_hi_.data() + node * dim_;
  double total = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    const double q = query[j];
    if (categorical_[j]) {
      // Every point in the box mismatches when q lies outside the code range.
      if (q < lo[j] || q > hi[j]) total += 1.0;
    } else if (q < lo[j]) {
      total += std::abs(q - lo[j]);
    } else if (q > hi[j]) {
      total += std::abs(q - hi[j]);
    }
  }
  return total;
}

void ManifoldIndex::search(std::size_t node, std::span<const double> query, double& best,
                           std::size_t& best_row) const {
  const Node& n = nodes_[node];
  if (n.left == 0) {
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const double* p = points_.data() + i * dim_;
      double total = 0.0;
      bool pruned = false;
      for (std::size_t j = 0; j < dim_; ++j) {
        total += categorical_[j] ? (query[j] == p[j] ? 0.0 : 1.0) : std::abs(query[j] - p[j]);
        if (total > best) {
          pruned = true;
          break;
        }
      }
      if (pruned) continue;
      if (total < best || (total == best && row_ids_[i] < best_row)) {
        best = total;
        best_row = row_ids_[i];
      }
    }
    return;
  }
  const double lb_left = lower_bound(n.left, query);
  const double lb_right = lower_bound(n.right, query);
  const bool left_first = lb_left <= lb_right;
  const std::size_t near = left_first ? n.left : n.right;
  const std::size_t far = left_first ? n.right : n.left;
  const double lb_near = left_first ? lb_left : lb_right;
  const double lb_far = left_first ? lb_right : lb_left;
  // Ties are kept (<=) so the lowest row among equal distances is found.
  if (lb_near <= best) search(near, query, best, best_row);
  if (lb_far <= best) search(far, query, best, best_row);
}

std::pair<double, std::size_t> ManifoldIndex::find_nearest(std::span<const double> query) const {
  if (size() == 0) throw Error(ErrorCode::kEmptyReference, "manifold reference set is empty");
  if (query.size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "query width differs from the manifold index");
  }
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_row = std::numeric_limits<std::size_t>::max();
  search(0, query, best, best_row);
  return {best, best_row};
}

double ManifoldIndex::distance(std::span<const double> query) const { return find_nearest(query).first; }

std::size_t ManifoldIndex::nearest(std::span<const double> query) const { return find_nearest(query).second; }

}  // namespace recourse::mdp
