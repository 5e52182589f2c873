#pragma once

#include <cstddef>
#include <vector>

namespace recourse {

// MDP state: scaled values for numerical features, integer codes for
// categorical ones, in schema order.
using State = std::vector<double>;

// Changes exactly one feature. `feature` is the index into the state vector;
// `delta` is in state units (scaled for numerical, +-1 for categorical).
struct Action {
  std::size_t feature = 0;
  double delta = 0.0;

  friend bool operator==(const Action&, const Action&) = default;
};

struct WeightedState {
  double probability;
  State state;
};

}  // namespace recourse
