#include "ebwtpc/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace ebwtpc {

void PoissonModel::validate() const {
  if (!(m > 0) || !(n > 0) || !(r > 0) || t <= 0)
    throw std::invalid_argument("PoissonModel: m, n, r, t must be positive");
  if (!(epsilon >= 0) || !(epsilon < 1))
    throw std::invalid_argument("PoissonModel: epsilon must be in [0,1)");
  if (k <= 0 || static_cast<double>(k) >= r)
    throw std::domain_error("PoissonModel: need 0 < k < r");
}

double lambda(const PoissonModel& model) {
  model.validate();
  return model.t * model.m * ((model.r - model.k) / model.n) *
         std::pow(1.0 - model.epsilon, model.k);
}

double lambda_prime(const PoissonModel& model) {
  if (!(model.m > 0) || !(model.n > 0) || !(model.r > 0))
    throw std::invalid_argument("PoissonModel: m, n, r must be positive");
  return model.m * model.r / model.n;
}

double poisson_cdf(double mu, long z) {
  if (!(mu > 0)) throw std::invalid_argument("poisson_cdf: mu must be positive");
  if (z < 0) return 0.0;
  double term = std::exp(-mu);
  double sum = term, comp = 0.0;
  for (long i = 1; i <= z; ++i) {
    term *= mu / static_cast<double>(i);
    double y = term - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum < 1.0 ? sum : 1.0;
}

std::pair<long, long> poisson_band(double mean, double alpha) {
  if (!(alpha > 0) || !(alpha < 1)) throw std::invalid_argument("poisson_band: alpha in (0,1)");
  const double half = alpha / 2.0;
  double term = std::exp(-mean);
  double cdf = term;
  long lo = -1, hi = -1;
  // lo: first z with CDF(z) > alpha/2, so that P(X < lo) = CDF(lo-1) <= alpha/2.
  // hi: first z with CDF(z) >= 1 - alpha/2, so that P(X > hi) <= alpha/2.
  long z = 0;
  const long z_max = static_cast<long>(mean + 40.0 * std::sqrt(mean) + 200.0);
  for (;; ++z) {
    if (lo < 0 && cdf > half) lo = z;
    if (cdf >= 1.0 - half) {
      hi = z;
      break;
    }
    if (z > z_max) {  // numeric tail; CDF has saturated within rounding
      hi = z;
      break;
    }
    term *= mean / static_cast<double>(z + 1);
    cdf += term;
  }
  if (lo < 0) lo = z;
  return {lo, hi};
}

std::pair<long, long> cluster_length_band(const PoissonModel& model, double alpha) {
  return poisson_band(lambda(model), alpha);
}

namespace {

// log C(y, e) for small e.
double log_choose(long y, int e) {
  return std::lgamma(static_cast<double>(y) + 1.0) - std::lgamma(static_cast<double>(e) + 1.0) -
         std::lgamma(static_cast<double>(y - e) + 1.0);
}

}  // namespace

double condition2_lower_bound(const PoissonModel& model, long delta) {
  if (delta < 0) throw std::invalid_argument("condition2_lower_bound: delta must be >= 0");
  const double lam = lambda(model);
  const long y = static_cast<long>(std::ceil(model.t * lam)) + delta;
  const double cdf = poisson_cdf(model.t * lam, y);

  static constexpr double kCe[4] = {1.0, 1.0, 2.0 / 3.0, 2.0 / 9.0};
  double inner;
  if (model.epsilon == 0.0) {
    inner = 1.0;  // only the e = 0 term survives
  } else {
    const double log_eps = std::log(model.epsilon);
    const double log_1me = std::log1p(-model.epsilon);
    inner = 0.0;
    for (int e = 0; e <= 3 && e <= y; ++e) {
      double lg = log_choose(y, e) + static_cast<double>(y - e) * log_1me +
                  static_cast<double>(e) * log_eps + std::log(kCe[e]);
      inner += std::exp(lg);
    }
    if (inner > 1.0) inner = 1.0;
  }
  const double expo = model.r - static_cast<double>(model.k);
  double bound = cdf * std::exp(expo * std::log(inner));
  if (bound < 0.0) bound = 0.0;
  if (bound > 1.0) bound = 1.0;
  return bound;
}

std::pair<double, long> condition2_lower_bound_max(const PoissonModel& model) {
  const double lam = lambda(model);
  const long delta_max = 3 * static_cast<long>(std::ceil(model.t * lam));
  double best = 0.0;
  long best_delta = 0;
  for (long d = 0; d <= delta_max; ++d) {
    double b = condition2_lower_bound(model, d);
    if (b > best) {
      best = b;
      best_delta = d;
    }
  }
  return {best, best_delta};
}

}  // namespace ebwtpc
