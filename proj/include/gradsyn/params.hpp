#pragma once

#include "gradsyn/errors.hpp"

namespace gradsyn {

/// Hyperparameters of the search and of s-value evaluation.
///
/// theta_m in (0, 1] damps the OR combination (which overestimates when
/// alternatives share descendants); theta_r >= 1 lifts the AND combination
/// (which underestimates for the same reason). Reaction values are clamped
/// back into [0, 1] after the theta_r lift.
struct SearchParams {
  /// Default success probability assigned to open (unexpanded, unpurchasable)
  /// molecules during search. Zero is allowed: it makes the search blind to
  /// reactions with several unresolved reactants.
  double s0 = 0.05;
  double theta_m = 1.0;
  double theta_r = 1.0;
  /// s0 substitute used when evaluating a final graph (default: open nodes
  /// count as failures).
  double eval_s0 = 0.0;
  int max_fixed_point_sweeps = 256;
  double fixed_point_tol = 1e-12;

  void validate() const {
    if (!(s0 >= 0.0 && s0 < 1.0)) throw InvalidInputError("s0 must lie in [0, 1)");
    if (!(theta_m > 0.0 && theta_m <= 1.0)) throw InvalidInputError("theta_m must lie in (0, 1]");
    if (!(theta_r >= 1.0)) throw InvalidInputError("theta_r must be >= 1");
    if (!(eval_s0 >= 0.0 && eval_s0 < 1.0)) throw InvalidInputError("eval_s0 must lie in [0, 1)");
    if (max_fixed_point_sweeps <= 0) throw InvalidInputError("max_fixed_point_sweeps must be positive");
    if (!(fixed_point_tol > 0.0)) throw InvalidInputError("fixed_point_tol must be positive");
  }
};

}  // namespace gradsyn
