#include "rpt/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "rpt/rng.hpp"

namespace rpt::num {

double spectral_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0)
    throw std::domain_error("spectral_norm: empty matrix");

  // Fixed stream so the start vector is deterministic yet has no special
  // alignment with the singular vectors.
  RngStream rng(0x5EC7A11ULL, {"spectral_norm"});
  Vector v = rng.sphere_vector(m.cols());

  double sigma = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vector w = m.transpose() * (m * v);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;  // v landed in the null space of M
    v = w / wn;
    const double next = std::sqrt((m * v).squaredNorm());
    if (std::abs(next - sigma) <= 1e-12 * std::max(1.0, next)) return next;
    sigma = next;
  }
  return sigma;
}

}  // namespace rpt::num
