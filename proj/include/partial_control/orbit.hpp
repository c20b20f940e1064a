#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "state.hpp"

namespace partial_control {

/// Time series of a (possibly) controlled orbit. Step n maps states[n] to
/// states[n + 1] = (f(states[n]) + disturbances[n]) + controls[n].
struct ControlledOrbit {
  std::vector<State> states;
  std::vector<State> disturbances;
  std::vector<State> controls;
  std::vector<double> control_norms;
  /// First step index whose state lies outside Q.
  std::optional<std::size_t> escaped_at;
  std::uint64_t seed = 0;
  /// Control bound the orbit was run with (0 for uncontrolled runs).
  double u0 = 0.0;

  std::size_t steps() const { return controls.size(); }
  double max_control_norm() const {
    double m = 0.0;
    for (double v : control_norms) m = v > m ? v : m;
    return m;
  }
};

}  // namespace partial_control
