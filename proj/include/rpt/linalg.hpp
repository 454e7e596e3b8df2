#pragma once

#include "rpt/types.hpp"

namespace rpt::num {

// Largest singular value via power iteration on M^T M with a fixed
// pseudo-random start vector. Terminates after at most 1e4 iterations or
// when the relative change drops below 1e-12.
double spectral_norm(const Matrix& m);

}  // namespace rpt::num
