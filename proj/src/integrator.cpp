#include "qst/integrator.hpp"

namespace qst {

std::vector<double> uniform_samples(double t0, double t1, int count) {
  if (count < 2) throw std::invalid_argument("need at least two samples");
  std::vector<double> out(static_cast<std::size_t>(count));
  const double dt = (t1 - t0) / (count - 1);
  for (int i = 0; i < count; ++i) out[i] = t0 + i * dt;
  out.back() = t1;
  return out;
}

}  // namespace qst
