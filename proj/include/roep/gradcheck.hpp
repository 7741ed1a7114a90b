#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "roep/rng.hpp"

namespace roep::nn {

/// Central-difference step. Truncation error grows as h^2 and rounding error
/// as eps * |f| / h; near cbrt(eps) ~ 6e-6 the two balance for O(1) inputs.
/// Smaller steps let rounding dominate for losses of magnitude ~10.
inline constexpr double kGradcheckStep = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-6;
/// Denominator floor of the relative error. Central differences carry
/// ~1e-10 absolute rounding noise, which is only meaningful relative to
/// gradients well above that scale.
inline constexpr double kRelativeErrorFloor = 1e-3;

/// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric);
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric);

/// Central differences of `f` with respect to every entry of `x`. Entries are
/// restored after probing.
std::vector<double> numeric_gradient(const std::function<double()>& f, std::span<double> x,
                                     double step = kGradcheckStep);

struct GradcheckEntry {
  std::string name;
  double max_relative_error = 0.0;
  int instances = 0;

  bool passed() const { return max_relative_error < kGradcheckTolerance; }
};

/// Finite-difference checks of every layer and loss on random instances.
std::vector<GradcheckEntry> layer_gradchecks(Rng& rng, int instances = 100);

}  // namespace roep::nn
