#pragma once

namespace rpt::num {

// Exact expected Euclidean norm of a d-dimensional N(0, sigma^2 I) vector:
// sigma * sqrt(2) * Gamma((d+1)/2) / Gamma(d/2). Always <= sigma * sqrt(d).
double chi_mean(int d, double sigma);

}  // namespace rpt::num
