#include "rpt/special.hpp"

#include <cmath>
#include <stdexcept>

namespace rpt::num {

double chi_mean(int d, double sigma) {
  if (d < 1) throw std::domain_error("chi_mean: d must be >= 1");
  if (!(sigma > 0.0)) throw std::domain_error("chi_mean: sigma must be > 0");
  const double log_ratio =
      std::lgamma((d + 1) / 2.0) - std::lgamma(d / 2.0);
  return sigma * std::sqrt(2.0) * std::exp(log_ratio);
}

}  // namespace rpt::num
