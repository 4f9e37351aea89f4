#include "enrollsim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace enrollsim::rng {

std::uint64_t Engine::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Engine::below: n must be positive");
  // Reject draws below the largest multiple of n that fits in 2^64.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    std::uint64_t r = gen_();
    if (r >= threshold) return r % n;
  }
}

std::int64_t Engine::binomial(std::int64_t n, double p) {
  if (n < 0) throw std::invalid_argument("Engine::binomial: n must be >= 0");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("Engine::binomial: p must be in [0,1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;

  if (n < 16) {
    std::int64_t k = 0;
    for (std::int64_t i = 0; i < n; ++i)
      if (next_unit() < p) ++k;
    return k;
  }

  // Count successes by jumping geometric gaps between them. Each gap
  // G = 1 + floor(log(U) / log1p(-p)) is the index distance to the next
  // success; stop once the jumps pass n trials.
  const double log_q = std::log1p(-p);
  std::int64_t k = 0;
  double pos = 0.0;
  for (;;) {
    double u = next_unit();
    // u == 0 would send the gap to infinity; treat as "no further success".
    if (u <= 0.0) return k;
    pos += std::floor(std::log(u) / log_q) + 1.0;
    if (pos > static_cast<double>(n)) return k;
    ++k;
  }
}

std::int64_t Engine::poisson(double lambda) {
  if (!(lambda >= 0.0))
    throw std::invalid_argument("Engine::poisson: lambda must be >= 0");
  if (lambda == 0.0) return 0;
  const double limit = std::exp(-lambda);
  std::int64_t k = 0;
  double prod = next_unit();
  while (prod > limit) {
    ++k;
    prod *= next_unit();
  }
  return k;
}

}  // namespace enrollsim::rng
