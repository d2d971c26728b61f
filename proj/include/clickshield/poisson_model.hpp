#pragma once

#include <cstdint>

namespace clickshield {

/// Window statistics for one (net, destination) pair: the size A of the
/// source net's address pool and the click count C observed from it.
class ModelParams {
public:
  /// Throws std::invalid_argument when pool_size == 0.
  ModelParams(std::uint64_t pool_size, std::uint64_t click_count);

  std::uint64_t pool_size() const noexcept { return pool_size_; }
  std::uint64_t click_count() const noexcept { return click_count_; }

private:
  std::uint64_t pool_size_;
  std::uint64_t click_count_;
};

/// Dimensionless click intensity C/A. Non-negative and finite by
/// construction.
class Lambda {
public:
  /// Throws std::invalid_argument when value is negative or not finite.
  explicit Lambda(double value);

  double value() const noexcept { return value_; }

private:
  double value_;
};

/// lambda = C/A.
Lambda lambda_of(const ModelParams& params);

/// Mean number of clicks beyond the first landing on one address when
/// clicks hit A addresses uniformly at random with intensity lambda:
///   N(lambda) = lambda + e^{-lambda} - 1.
/// Evaluated as lambda + expm1(-lambda) so the small-lambda regime (where
/// the result is ~lambda^2/2) does not lose accuracy to cancellation.
double expected_repeats(Lambda lambda);

/// Truncated-series route to the same quantity:
///   sum_{c=2}^{cutoff} (c-1) * lambda^c e^{-lambda} / c!
/// Successive Poisson terms come from the recurrence
/// term_{c+1} = term_c * lambda/(c+1); every term is non-negative, so the
/// sum accumulates without cancellation. Independent check for
/// expected_repeats. Requires cutoff >= 2.
double expected_repeats_series(Lambda lambda, std::uint32_t cutoff);

/// Expected fraction of genuine clicks forfeited if every repeated click
/// from a net is dropped: L(A,C) = N(C/A) * A / C. Lives in [0, 1).
/// Throws std::domain_error when click_count == 0.
double loss_factor(const ModelParams& params);

/// First-order ceiling on the loss factor: 0.5 * C / A. L(A,C) stays
/// strictly below it for C >= 1.
double loss_upper_bound(const ModelParams& params);

/// Threshold rule applied to a repeated click: discard while the loss
/// ceiling stays below the operator's budget, i.e. 0.5*C/A < threshold.
/// Ties mean accept. C counts prior clicks only; threshold must be in
/// (0, 1) or std::invalid_argument is thrown.
bool should_discard_repeat(const ModelParams& params, double threshold);

}  // namespace clickshield
