#ifndef HOSPMORT_POLYA_GAMMA_HPP
#define HOSPMORT_POLYA_GAMMA_HPP

#include "hospmort/rng.hpp"

namespace hospmort {

// One exact draw from PG(1, c) using the alternating-series accept/reject
// sampler on the tilted Jacobi density (truncation point 0.64). The law
// depends on c only through |c|, and negative c consumes the stream exactly
// as |c| does. Throws InputError for non-finite c.
double sample_pg1(double c, RngStream& rng);

// E[PG(1, c)] = tanh(c/2) / (2c), with the limit 1/4 at c = 0.
double pg1_mean(double c);

// Var[PG(1, c)] = (sinh(c) - c) / (4 c^3 cosh^2(c/2)), limit 1/24 at c = 0.
double pg1_variance(double c);

// Log of the standard normal CDF, accurate in the far lower tail.
double log_normal_cdf(double x);

}  // namespace hospmort

#endif  // HOSPMORT_POLYA_GAMMA_HPP
