#include "collab/metrics/metrics.hpp"

#include <algorithm>

namespace collab::metrics {

std::size_t d_max(const Trajectory& history, const Trajectory& rat) {
  std::size_t d = 0;
  for (const auto& a : history) {
    if (d == rat.size()) break;
    if (a == rat[d]) ++d;
  }
  return d;
}

TesResult tes_detail(const Trajectory& history, const RatSet& rats, const MetricConfig& cfg) {
  if (rats.empty()) throw EmptyRatSet();
  const double b2 = cfg.beta * cfg.beta;
  const double n = static_cast<double>(history.size());
  TesResult best;
  best.value = -1.0;
  for (std::size_t j = 0; j < rats.size(); ++j) {
    const auto& rat = rats[j];
    std::size_t d = d_max(history, rat);
    double value;
    if (rat.empty())
      value = history.empty() ? 1.0 : 0.0;
    else if (d == rat.size() && history.size() == rat.size())
      value = 1.0;  // exact match; avoids rounding in the general formula
    else
      value = (1.0 + b2) * static_cast<double>(d) / (static_cast<double>(rat.size()) + b2 * n);
    if (value > best.value) best = TesResult{value, j, d};
  }
  return best;
}

double tes(const Trajectory& history, const RatSet& rats, const MetricConfig& cfg) {
  return tes_detail(history, rats, cfg).value;
}

double ites(const Trajectory& actions, const Trajectory& history, const RatSet& rats,
            const MetricConfig& cfg) {
  if (rats.empty()) throw EmptyRatSet();
  if (actions.empty()) return 0.0;
  Trajectory extended = history;
  extended.insert(extended.end(), actions.begin(), actions.end());
  return tes(extended, rats, cfg) - tes(history, rats, cfg);
}

double pc(const std::vector<Trajectory>& histories, const std::vector<RatSet>& rat_sets,
          const MetricConfig& cfg) {
  if (histories.size() != rat_sets.size() || histories.empty())
    throw Error("pc: histories and RAT sets must cover the same nonempty set of agents");
  double sum = 0.0;
  for (std::size_t k = 0; k < histories.size(); ++k) sum += tes(histories[k], rat_sets[k], cfg);
  return sum / static_cast<double>(histories.size());
}

std::optional<double> collaboration_rate(const std::vector<double>& event_ites,
                                         std::size_t required) {
  if (required == 0) return std::nullopt;
  std::size_t hits = 0;
  std::size_t limit = std::min(required, event_ites.size());
  for (std::size_t i = 0; i < limit; ++i)
    if (event_ites[i] > 0) ++hits;
  return static_cast<double>(hits) / static_cast<double>(required);
}

std::size_t lcs_length(const Trajectory& a, const Trajectory& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const Trajectory& candidate, const Trajectory& reference, const MetricConfig& cfg) {
  if (candidate.empty() && reference.empty()) return 1.0;
  if (candidate.empty() || reference.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0) return 0.0;
  const double r = lcs / static_cast<double>(reference.size());
  const double p = lcs / static_cast<double>(candidate.size());
  const double b2 = cfg.beta * cfg.beta;
  return (1.0 + b2) * r * p / (r + b2 * p);
}

}  // namespace collab::metrics
