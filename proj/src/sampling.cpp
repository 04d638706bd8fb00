// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "adq/error.hpp"
#include "adq/rng.hpp"
#include "adq/sampling.hpp"
#include "json.hpp"

namespace adq {

std::vector<double> minmax_normalize(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::EmptyInput, "cannot normalize an empty list");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw Error(Errc::NonFiniteValue, "score " + std::to_string(i));
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo, max = *hi;
  std::vector<double> out(values.size(), 0.5);
  if (max == min) return out;
  const double range = max - min;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - min) / range;
  return out;
}

std::vector<double> importance(std::span<const double> rep_hat, std::span<const double> div_hat) {
  if (rep_hat.size() != div_hat.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(rep_hat.size()) + " rep scores vs " +
                                          std::to_string(div_hat.size()) + " div scores");
  }
  std::vector<double> out(rep_hat.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rep_hat[i] + div_hat[i];
  return out;
}

std::vector<double> raw_ratios(std::span<const double> importances, std::span<const std::size_t> masses,
                               double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::BadAlpha, "alpha must lie in [0, 1]");
  if (importances.size() != masses.size()) throw Error(Errc::LengthMismatch, "importance and mass counts differ");
  std::size_t total = 0;
  for (auto mass : masses) {
    if (mass == 0) throw Error(Errc::InvalidArgument, "bin masses must be positive");
    total += mass;
  }
  std::vector<double> out(masses.size());
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = alpha * importances[n] +
             (1.0 - alpha) * (static_cast<double>(masses[n]) / static_cast<double>(total));
  }
  return out;
}

std::size_t keep_budget(double rho, std::size_t items) {
  if (!(rho > 0.0 && rho <= 1.0)) throw Error(Errc::BadKeepRatio, "rho must lie in (0, 1]");
  return std::min(items, static_cast<std::size_t>(std::floor(rho * static_cast<double>(items))));
}

namespace {

std::vector<std::size_t> apportion(std::span<const double> wants, std::span<const std::size_t> masses,
                                   std::size_t budget) {
  const std::size_t m = masses.size();
  std::vector<double> weights(wants.begin(), wants.end());
  if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0.0) {
    for (std::size_t n = 0; n < m; ++n) weights[n] = static_cast<double>(masses[n]);
  }

  std::vector<bool> saturated(m, false);
  std::vector<double> share(m, 0.0);
  // Water filling: saturate bins whose share reaches capacity, re-split the rest.
  for (bool changed = true; changed;) {
    changed = false;
    double open_weight = 0.0;
    std::size_t open_budget = budget;
    for (std::size_t n = 0; n < m; ++n) {
      if (saturated[n]) {
        open_budget -= std::min(open_budget, masses[n]);
      } else {
        open_weight += weights[n];
      }
    }
    for (std::size_t n = 0; n < m; ++n) {
      if (saturated[n]) continue;
      share[n] = open_weight > 0.0 ? static_cast<double>(open_budget) * (weights[n] / open_weight) : 0.0;
      if (share[n] >= static_cast<double>(masses[n])) {
        saturated[n] = true;
        changed = true;
      }
    }
  }

  std::vector<std::size_t> quotas(m);
  std::size_t assigned = 0;
  for (std::size_t n = 0; n < m; ++n) {
    quotas[n] = saturated[n] ? masses[n] : std::min(masses[n], static_cast<std::size_t>(std::floor(share[n])));
    assigned += quotas[n];
  }

  // Largest remainder for the floor slack; ties go to the lower bin index.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double fa = saturated[a] ? -1.0 : share[a] - std::floor(share[a]);
    const double fb = saturated[b] ? -1.0 : share[b] - std::floor(share[b]);
    return fa > fb;
  });
  while (assigned < budget) {
    bool progressed = false;
    for (auto n : order) {
      if (assigned == budget) break;
      if (quotas[n] < masses[n]) {
        ++quotas[n];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return quotas;
}

}  // namespace

std::vector<std::size_t> quota_counts(std::span<const double> ratios, std::span<const std::size_t> masses, double rho,
                                      std::size_t items) {
  if (ratios.size() != masses.size()) throw Error(Errc::LengthMismatch, "ratio and mass counts differ");
  if (masses.empty()) throw Error(Errc::EmptyInput, "no bins");
  const std::size_t budget = keep_budget(rho, items);
  std::vector<double> wants(ratios.size());
  for (std::size_t n = 0; n < wants.size(); ++n) {
    if (!std::isfinite(ratios[n]) || ratios[n] < 0.0) throw Error(Errc::InvalidArgument, "ratios must be >= 0");
    wants[n] = ratios[n] * static_cast<double>(masses[n]);
  }
  return apportion(wants, masses, budget);
}

std::vector<std::size_t> uniform_quotas(std::span<const std::size_t> masses, double rho, std::size_t items) {
  std::vector<double> ones(masses.size(), 1.0);
  return quota_counts(ones, masses, rho, items);
}

std::vector<std::size_t> draw_samples(std::span<const Bin> bins, std::span<const std::size_t> quotas,
                                      std::uint64_t seed) {
  if (bins.size() != quotas.size()) throw Error(Errc::LengthMismatch, "one quota per bin required");
  for (std::size_t n = 0; n < bins.size(); ++n) {
    if (quotas[n] > bins[n].size()) {
      throw Error(Errc::QuotaExceedsBin, "bin " + std::to_string(n + 1) + " quota " + std::to_string(quotas[n]) +
                                             " > size " + std::to_string(bins[n].size()));
    }
  }
  std::vector<std::vector<std::size_t>> picks(bins.size());
  const auto count = static_cast<std::ptrdiff_t>(bins.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < count; ++b) {
    const auto n = static_cast<std::size_t>(b);
    // Partial Fisher-Yates over a copy of the members.
    std::vector<std::size_t> members = bins[n].members;
    rng::Philox gen(seed, rng::substream(rng::Stream::Draw, n));
    for (std::size_t i = 0; i < quotas[n]; ++i) {
      const std::size_t j = i + gen.below(members.size() - i);
      std::swap(members[i], members[j]);
    }
    members.resize(quotas[n]);
    picks[n] = std::move(members);
  }
  std::vector<std::size_t> coreset;
  for (const auto& p : picks) coreset.insert(coreset.end(), p.begin(), p.end());
  std::sort(coreset.begin(), coreset.end());
  return coreset;
}

ScoreTable build_score_table(std::vector<double> rep, std::vector<double> div, bool proxy_rep) {
  if (rep.size() != div.size()) throw Error(Errc::LengthMismatch, "rep and div column lengths differ");
  ScoreTable table;
  table.rep_hat = minmax_normalize(rep);
  table.div_hat = minmax_normalize(div);
  table.importance = importance(table.rep_hat, table.div_hat);
  table.rep = std::move(rep);
  table.div = std::move(div);
  table.proxy_rep = proxy_rep;
  return table;
}

namespace {

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

}  // namespace

std::string score_table_to_csv(const ScoreTable& table) {
  std::string out;
  if (table.proxy_rep) out += "# rep=proxy-rep\n";
  out += "bin,rep,div,rep_hat,div_hat,importance\n";
  for (std::size_t n = 0; n < table.size(); ++n) {
    out += std::to_string(n + 1) + "," + format_double(table.rep[n]) + "," + format_double(table.div[n]) + "," +
           format_double(table.rep_hat[n]) + "," + format_double(table.div_hat[n]) + "," +
           format_double(table.importance[n]) + "\n";
  }
  return out;
}

ScoreTable score_table_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool proxy = false;
  bool header = false;
  std::vector<double> rep, div;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("proxy-rep") != std::string::npos) proxy = true;
      continue;
    }
    if (!header) {
      if (line.rfind("bin,rep,div", 0) != 0) throw Error(Errc::ConfigError, "score CSV header missing");
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() < 3) throw Error(Errc::ConfigError, "score CSV row has " + std::to_string(cells.size()) + " cells");
    try {
      if (std::stoul(cells[0]) != rep.size() + 1) throw Error(Errc::ConfigError, "score CSV bins out of order");
      rep.push_back(std::stod(cells[1]));
      div.push_back(std::stod(cells[2]));
    } catch (const std::logic_error&) {
      throw Error(Errc::ConfigError, "malformed score CSV row: " + line);
    }
  }
  // Normalized columns are recomputed from the raw scores.
  return build_score_table(std::move(rep), std::move(div), proxy);
}

SamplingPlan make_plan(const ScoreTable& scores, std::span<const std::size_t> masses, double alpha, double rho) {
  if (scores.size() != masses.size()) throw Error(Errc::LengthMismatch, "score rows vs bin count");
  SamplingPlan plan;
  plan.alpha = alpha;
  plan.rho = rho;
  plan.masses.assign(masses.begin(), masses.end());
  plan.ratios = raw_ratios(scores.importance, masses, alpha);
  const std::size_t items = std::accumulate(masses.begin(), masses.end(), std::size_t{0});
  plan.budget = keep_budget(rho, items);
  plan.quotas = quota_counts(plan.ratios, masses, rho, items);
  return plan;
}

void validate_plan(const SamplingPlan& plan) {
  if (plan.quotas.size() != plan.masses.size()) throw Error(Errc::InvariantViolation, "quota/mass length mismatch");
  std::size_t total = 0;
  for (std::size_t n = 0; n < plan.quotas.size(); ++n) {
    if (plan.quotas[n] > plan.masses[n]) {
      throw Error(Errc::InvariantViolation, "bin " + std::to_string(n + 1) + " quota exceeds its mass");
    }
    total += plan.quotas[n];
  }
  if (total > plan.budget) throw Error(Errc::InvariantViolation, "quotas exceed the budget");
  if (total + plan.quotas.size() < plan.budget) throw Error(Errc::InvariantViolation, "quotas undershoot B - m");
}

std::string plan_to_json(const SamplingPlan& plan) {
  nlohmann::json doc;
  doc["alpha"] = plan.alpha;
  doc["rho"] = plan.rho;
  doc["budget"] = plan.budget;
  doc["quotas"] = plan.quotas;
  doc["masses"] = plan.masses;
  doc["ratios"] = plan.ratios;
  return doc.dump(2) + "\n";
}

SamplingPlan plan_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    SamplingPlan plan;
    plan.alpha = doc.at("alpha").get<double>();
    plan.rho = doc.at("rho").get<double>();
    plan.budget = doc.at("budget").get<std::size_t>();
    plan.quotas = doc.at("quotas").get<std::vector<std::size_t>>();
    plan.masses = doc.value("masses", std::vector<std::size_t>{});
    plan.ratios = doc.value("ratios", std::vector<double>{});
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, std::string("plan JSON: ") + e.what());
  }
}

}  // namespace adq
