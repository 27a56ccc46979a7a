#pragma once

namespace smaq {

double normal_pdf(double x);
double normal_cdf(double x);

/// Inverse standard normal CDF; p must lie in (0, 1). Accurate to ~1e-15.
double normal_quantile(double p);

}  // namespace smaq
