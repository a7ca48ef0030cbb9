#include "xclust/functionals.hpp"

#include <cmath>
#include <sstream>

namespace xclust {

std::string TestFunctional::id() const {
  std::ostringstream os;
  os << (shape == SpatialShape::Ramp ? "ramp" : "step") << "(s=" << scale << ",g=";
  switch (time) {
    case TimeWeight::One: os << "1"; break;
    case TimeWeight::Rising: os << "t"; break;
    case TimeWeight::Falling: os << "1-t"; break;
  }
  os << ",u=" << level << ')';
  return os.str();
}

void TestFunctional::validate() const {
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw ParameterError("test functional scale must be finite and nonnegative");
  }
  if (!(level > 0.0) || !std::isfinite(level)) {
    throw ParameterError("test functional level must be positive");
  }
}

TestFunctional step_functional(double scale, double level) {
  return TestFunctional{scale, TimeWeight::One, SpatialShape::Step, level};
}

TestFunctional ramp_functional(double scale, TimeWeight time, double level) {
  return TestFunctional{scale, time, SpatialShape::Ramp, level};
}

std::vector<TestFunctional> functional_library(double level) {
  std::vector<TestFunctional> out;
  for (auto g : {TimeWeight::One, TimeWeight::Rising, TimeWeight::Falling}) {
    for (double s : {0.5, 1.0, 2.0}) out.push_back(ramp_functional(s, g, level));
  }
  return out;
}

}  // namespace xclust
