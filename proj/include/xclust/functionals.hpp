#pragma once

#include <span>
#include <string>
#include <vector>

#include "xclust/core.hpp"

namespace xclust {

enum class TimeWeight { One, Rising, Falling };  // g(t) = 1, t, 1 - t
enum class SpatialShape { Ramp, Step };

/// Separable test functional f(t, x) = scale * g(t) * h(||x||) where
///   Ramp: h(r) = (min(r / level, 2) - 1)_+   (continuous, zero below level)
///   Step: h(r) = 1{r > level}                (validation only)
/// Both vanish for ||x|| <= level, so level is the support floor u_f.
struct TestFunctional {
  double scale = 1.0;
  TimeWeight time = TimeWeight::One;
  SpatialShape shape = SpatialShape::Ramp;
  double level = 1.0;

  double time_factor(double t) const {
    switch (time) {
      case TimeWeight::One: return 1.0;
      case TimeWeight::Rising: return t;
      case TimeWeight::Falling: return 1.0 - t;
    }
    return 1.0;
  }

  double spatial(double r) const {
    if (shape == SpatialShape::Step) return r > level ? 1.0 : 0.0;
    const double v = std::min(r / level, 2.0) - 1.0;
    return v > 0.0 ? v : 0.0;
  }

  double operator()(double t, double norm_x) const {
    return scale * time_factor(t) * spatial(norm_x);
  }

  double operator()(double t, std::span<const double> x, Norm norm) const {
    return (*this)(t, norm_of(x, norm));
  }

  double support_floor() const { return level; }

  /// Radii at which h is not smooth (jump for Step, kinks for Ramp).
  std::vector<double> breakpoints() const {
    if (shape == SpatialShape::Step) return {level};
    return {level, 2.0 * level};
  }

  std::string id() const;
  void validate() const;
};

TestFunctional step_functional(double scale, double level = 1.0);
TestFunctional ramp_functional(double scale, TimeWeight time, double level);

/// The nine continuous ramp functionals: g in {1, t, 1 - t} x s in {0.5, 1, 2}.
std::vector<TestFunctional> functional_library(double level);

}  // namespace xclust
