#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "recourse/mdp/types.hpp"

namespace recourse::mdp {

// l1 distance between two states: |difference| summed over numerical
// features plus one per mismatching categorical code.
double state_distance(std::span<const double> a, std::span<const double> b,
                      const std::vector<bool>& categorical);

// Exact 1-nearest-neighbour distance to a fixed reference set. A k-d tree
// with per-node bounding boxes; pruning uses a lower bound computed with the
// same per-feature terms as state_distance, so results equal a linear scan.
class ManifoldIndex {
 public:
  ManifoldIndex() = default;
  ManifoldIndex(const std::vector<State>& reference, std::vector<bool> categorical,
                std::size_t leaf_size = 16);

  std::size_t size() const { return dim_ == 0 ? 0 : points_.size() / dim_; }
  std::size_t dim() const { return dim_; }

  double distance(std::span<const double> query) const;
  // Row (in reference order) of a nearest neighbour; lowest row on ties.
  std::size_t nearest(std::span<const double> query) const;

 private:
  struct Node {
    std::size_t begin;
    std::size_t end;
    std::size_t left = 0;   // 0 = leaf
    std::size_t right = 0;
  };

  std::pair<double, std::size_t> find_nearest(std::span<const double> query) const;
  std::size_t build(const std::vector<State>& ref, std::size_t begin, std::size_t end);
  double lower_bound(std::size_t node, std::span<const double> query) const;
  void search(std::size_t node, std::span<const double> query, double& best, std::size_t& best_row) const;

  std::size_t dim_ = 0;
  std::size_t leaf_size_ = 16;
  std::vector<bool> categorical_;
  std::vector<double> points_;        // reordered, row-major
  std::vector<std::size_t> row_ids_;  // original row of each stored point
  std::vector<Node> nodes_;
  std::vector<double> box_lo_;        // per node, dim_ values
  std::vector<double> box_hi_;
};

}  // namespace recourse::mdp
