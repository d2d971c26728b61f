#include "clickshield/poisson_model.hpp"

#include <cmath>
#include <stdexcept>

namespace clickshield {

ModelParams::ModelParams(std::uint64_t pool_size, std::uint64_t click_count)
    : pool_size_(pool_size), click_count_(click_count) {
  if (pool_size == 0) {
    throw std::invalid_argument("pool_size must be >= 1");
  }
}

Lambda::Lambda(double value) : value_(value) {
  if (!std::isfinite(value) || value < 0.0) {
    throw std::invalid_argument("lambda must be finite and >= 0");
  }
}

Lambda lambda_of(const ModelParams& params) {
  return Lambda(static_cast<double>(params.click_count()) /
                static_cast<double>(params.pool_size()));
}

double expected_repeats(Lambda lambda) {
  // lambda + e^{-lambda} - 1 == lambda + expm1(-lambda); the naive form
  // loses ~all significant digits for lambda << 1.
  return lambda.value() + std::expm1(-lambda.value());
}

double expected_repeats_series(Lambda lambda, std::uint32_t cutoff) {
  if (cutoff < 2) {
    throw std::invalid_argument("series cutoff must be >= 2");
  }
  const double lam = lambda.value();
  // term_c = lambda^c e^{-lambda} / c!, started at c = 2.
  double term = 0.5 * lam * lam * std::exp(-lam);
  double sum = 0.0;
  for (std::uint32_t c = 2; c <= cutoff; ++c) {
    sum += static_cast<double>(c - 1) * term;
    term *= lam / static_cast<double>(c + 1);
  }
  return sum;
}

double loss_factor(const ModelParams& params) {
  if (params.click_count() == 0) {
    throw std::domain_error("loss factor undefined for zero clicks");
  }
  const Lambda lam = lambda_of(params);
  return expected_repeats(lam) / lam.value();
}

double loss_upper_bound(const ModelParams& params) {
  return 0.5 * static_cast<double>(params.click_count()) /
         static_cast<double>(params.pool_size());
}

bool should_discard_repeat(const ModelParams& params, double threshold) {
  if (!std::isfinite(threshold) || threshold <= 0.0 || threshold >= 1.0) {
    throw std::invalid_argument("threshold must be in (0, 1)");
  }
  return loss_upper_bound(params) < threshold;
}

}  // namespace clickshield
