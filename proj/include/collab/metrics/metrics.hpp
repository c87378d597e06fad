#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "collab/common.hpp"

namespace collab::metrics {

using Trajectory = std::vector<std::string>;  // canonical action strings
using RatSet = std::vector<Trajectory>;

struct MetricConfig {
  double beta = 0.95;
};

class EmptyRatSet : public Error {
 public:
  EmptyRatSet() : Error("RAT set is empty") {}
};

// Length of the longest RAT prefix g_1..g_d that occurs in order as a
// subsequence of `history`. Greedy left-to-right matching is exact for
// prefixes.
std::size_t d_max(const Trajectory& history, const Trajectory& rat);

struct TesResult {
  double value = 0.0;
  std::size_t rat_index = 0;  // lowest index among ties
  std::size_t d = 0;
};

// max_j (1+b^2) d_j / (m_j + b^2 n). An empty RAT scores 1 against an empty
// history and 0 otherwise.
TesResult tes_detail(const Trajectory& history, const RatSet& rats, const MetricConfig& cfg = {});
double tes(const Trajectory& history, const RatSet& rats, const MetricConfig& cfg = {});

// tes(history ++ actions) - tes(history).
double ites(const Trajectory& actions, const Trajectory& history, const RatSet& rats,
            const MetricConfig& cfg = {});

// Mean TES over agents; histories[k] is scored against rat_sets[k].
double pc(const std::vector<Trajectory>& histories, const std::vector<RatSet>& rat_sets,
          const MetricConfig& cfg = {});

// Fraction of the first `required` events with positive ITES. nullopt when
// required == 0 (not applicable).
std::optional<double> collaboration_rate(const std::vector<double>& event_ites,
                                         std::size_t required);
inline std::optional<double> ic(const std::vector<double>& request_ites, std::size_t required) {
  return collaboration_rate(request_ites, required);
}
inline std::optional<double> rc(const std::vector<double>& response_ites, std::size_t required) {
  return collaboration_rate(response_ites, required);
}

std::size_t lcs_length(const Trajectory& a, const Trajectory& b);

// LCS F-measure with recall against `reference` and precision against
// `candidate`, weighted by beta.
double rouge_l(const Trajectory& candidate, const Trajectory& reference,
               const MetricConfig& cfg = {});

}  // namespace collab::metrics
