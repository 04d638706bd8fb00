// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adq/bins.hpp"

namespace adq {

/// (v - min) / (max - min); every output is 0.5 when max == min.
/// Throws EmptyInput, NonFiniteValue.
std::vector<double> minmax_normalize(std::span<const double> values);

/// Elementwise rep_hat + div_hat. Throws LengthMismatch.
std::vector<double> importance(std::span<const double> rep_hat, std::span<const double> div_hat);

/// r_n = alpha * I_n + (1 - alpha) * N(n) / sum N. An unnormalized weight,
/// not a probability. Throws BadAlpha, InvalidArgument for non-positive masses.
std::vector<double> raw_ratios(std::span<const double> importances, std::span<const std::size_t> masses,
                               double alpha);

/// floor(rho * M).
std::size_t keep_budget(double rho, std::size_t items);

/// Integer quotas for the budget B = floor(rho * M). Wants w_n = r_n * N(n)
/// are scaled to B; bins whose share exceeds N(n) saturate and their surplus
/// is re-split over the rest (water filling), then the floor slack goes to
/// unsaturated bins by largest fractional remainder (ties to the lower bin).
/// All-zero wants fall back to masses. Throws BadKeepRatio, LengthMismatch.
std::vector<std::size_t> quota_counts(std::span<const double> ratios, std::span<const std::size_t> masses,
                                      double rho, std::size_t items);

/// The uniform plan (equal keep fraction in every bin): quota_counts with w_n = N(n).
std::vector<std::size_t> uniform_quotas(std::span<const std::size_t> masses, double rho, std::size_t items);

/// Uniform draw without replacement of quotas[n] members from bins[n], using
/// the (seed, n) Draw substream. Output is sorted by id. Throws QuotaExceedsBin.
std::vector<std::size_t> draw_samples(std::span<const Bin> bins, std::span<const std::size_t> quotas,
                                      std::uint64_t seed);

struct ScoreTable {
  std::vector<double> rep, div;
  std::vector<double> rep_hat, div_hat;
  std::vector<double> importance;
  bool proxy_rep = false;

  std::size_t size() const noexcept { return rep.size(); }
};

/// Normalizes both columns and sums them. Throws LengthMismatch, EmptyInput.
ScoreTable build_score_table(std::vector<double> rep, std::vector<double> div, bool proxy_rep = false);

/// CSV: bin,rep,div,rep_hat,div_hat,importance (17 significant digits).
/// Proxy representativeness adds a leading "# rep=proxy-rep" comment line.
std::string score_table_to_csv(const ScoreTable& table);
ScoreTable score_table_from_csv(const std::string& text);

struct SamplingPlan {
  double alpha = 0.0;
  double rho = 1.0;
  std::size_t budget = 0;
  std::vector<std::size_t> masses;
  std::vector<double> ratios;
  std::vector<std::size_t> quotas;
};

SamplingPlan make_plan(const ScoreTable& scores, std::span<const std::size_t> masses, double alpha, double rho);

/// Throws InvariantViolation unless q_n <= N(n), sum q <= B and sum q >= B - m.
void validate_plan(const SamplingPlan& plan);

/// {"alpha":..., "rho":..., "budget":..., "quotas":[...]} plus masses and ratios.
std::string plan_to_json(const SamplingPlan& plan);
SamplingPlan plan_from_json(const std::string& text);

}  // namespace adq
