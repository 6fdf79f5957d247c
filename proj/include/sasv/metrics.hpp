// sasv/metrics.hpp
//
// Copyright 2022  sasvkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sasv/score_file.hpp"
#include "sasv/trial.hpp"

namespace sasv {

/// Scores split into the positive class (target trials) and the negative
/// class of the metric at hand (nontargets, spoofs, or their union).
struct LabeledScores {
  std::vector<double> positives;
  std::vector<double> negatives;
};

struct RocPoint {
  double threshold;
  double far;  // accepted negatives / negatives
  double frr;  // rejected positives / positives
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;  // interpolated crossing abscissa
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
};

namespace detail {

inline void check_labeled_scores(const LabeledScores& scores) {
  if (scores.positives.empty()) throw std::invalid_argument("no positive scores");
  if (scores.negatives.empty()) throw std::invalid_argument("no negative scores");
  for (double s : scores.positives)
    if (!std::isfinite(s)) throw std::invalid_argument("non-finite positive score");
  for (double s : scores.negatives)
    if (!std::isfinite(s)) throw std::invalid_argument("non-finite negative score");
}

}  // namespace detail

/// Detection error tradeoff sweep.  The decision rule is accept iff
/// score >= threshold; one point per distinct observed score, bracketed by
/// -inf (accept everything) and +inf (reject everything) sentinels.
/// FAR is non-increasing and FRR non-decreasing along the returned list.
inline std::vector<RocPoint> roc_points(const LabeledScores& scores) {
  detail::check_labeled_scores(scores);
  std::vector<double> pos = scores.positives;
  std::vector<double> neg = scores.negatives;
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  std::vector<double> thresholds;
  thresholds.reserve(pos.size() + neg.size() + 2);
  thresholds.push_back(-std::numeric_limits<double>::infinity());
  std::merge(pos.begin(), pos.end(), neg.begin(), neg.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const double n_pos = static_cast<double>(pos.size());
  const double n_neg = static_cast<double>(neg.size());
  std::vector<RocPoint> points;
  points.reserve(thresholds.size());
  for (double t : thresholds) {
    auto below_pos = std::lower_bound(pos.begin(), pos.end(), t) - pos.begin();
    auto below_neg = std::lower_bound(neg.begin(), neg.end(), t) - neg.begin();
    const double frr = static_cast<double>(below_pos) / n_pos;
    const double far = static_cast<double>(neg.size() - below_neg) / n_neg;
    points.push_back(RocPoint{t, far, frr});
  }
  return points;
}

/// Equal error rate of the empirical FAR/FRR step curves.
///
/// With d_k = FAR_k - FRR_k over the threshold sweep (d is non-increasing,
/// starting at +1 and ending at -1), let j be the first index with d_j <= 0:
///   - exact tie (d_j == 0): eer = (FAR_j + FRR_j) / 2 at threshold t_j;
///   - otherwise, with i = j - 1, the rates are interpolated linearly
///     between points i and j and the EER is their crossing:
///       eer = ((FAR_i + FRR_i) * (-d_j) + (FAR_j + FRR_j) * d_i)
///             / (2 * (d_i - d_j))
/// The reported threshold is interpolated the same way; when the bracket
/// ends at the +inf sentinel the finite endpoint is reported instead.
inline EerResult eer(const LabeledScores& scores) {
  const std::vector<RocPoint> points = roc_points(scores);
  std::size_t j = 0;
  while (j < points.size() && points[j].far - points[j].frr > 0.0) ++j;
  // points.front() is the accept-all sentinel (d = +1) and points.back() the
  // reject-all sentinel (d = -1), so 0 < j < points.size() always.

  EerResult result;
  result.n_positive = scores.positives.size();
  result.n_negative = scores.negatives.size();

  const RocPoint& b = points[j];
  const double db = b.far - b.frr;
  if (db == 0.0) {
    result.eer = (b.far + b.frr) / 2.0;
    result.threshold = b.threshold;
    return result;
  }
  const RocPoint& a = points[j - 1];
  const double da = a.far - a.frr;
  result.eer = ((a.far + a.frr) * (-db) + (b.far + b.frr) * da) / (2.0 * (da - db));
  if (std::isinf(b.threshold))
    result.threshold = a.threshold;
  else if (std::isinf(a.threshold))
    result.threshold = b.threshold;
  else
    result.threshold = a.threshold + (da / (da - db)) * (b.threshold - a.threshold);
  return result;
}

/// The three challenge metrics plus a pooled per-attack breakdown
/// (each attack's spoof trials against all targets).  A metric whose
/// negative class is empty in the protocol is absent, not zero.
struct EerReport {
  std::optional<EerResult> sv;    // targets vs nontargets
  std::optional<EerResult> spf;   // targets vs spoofs
  std::optional<EerResult> sasv;  // targets vs nontargets + spoofs
  std::map<std::string, EerResult> per_attack;
};

/// Computes the report from a scored protocol.  The scores must be exactly
/// a scored copy of the protocol (validate_against_protocol is empty).
inline EerReport evaluate(const ScoreSet& scores, const TrialProtocol& protocol) {
  ValidationReport validation = validate_against_protocol(scores, protocol);
  if (!validation.empty())
    throw std::invalid_argument("scores do not match protocol:\n" + validation.to_string());

  std::vector<double> targets, nontargets, spoofs;
  std::map<std::string, std::vector<double>> attack_scores;
  for (const auto& r : scores.records) {
    switch (r.trial.trial_type) {
      case TrialType::kTarget: targets.push_back(r.score); break;
      case TrialType::kNontarget: nontargets.push_back(r.score); break;
      case TrialType::kSpoof:
        spoofs.push_back(r.score);
        attack_scores[r.trial.attack_type].push_back(r.score);
        break;
    }
  }
  if (targets.empty()) throw std::invalid_argument("no target trials");

  EerReport report;
  if (!nontargets.empty()) report.sv = eer(LabeledScores{targets, nontargets});
  if (!spoofs.empty()) report.spf = eer(LabeledScores{targets, spoofs});
  std::vector<double> all_negatives = nontargets;
  all_negatives.insert(all_negatives.end(), spoofs.begin(), spoofs.end());
  if (!all_negatives.empty()) report.sasv = eer(LabeledScores{targets, all_negatives});
  for (auto& [attack, neg] : attack_scores)
    report.per_attack.emplace(attack, eer(LabeledScores{targets, neg}));
  return report;
}

}  // namespace sasv
