// sasv/fusion.hpp
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

#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "sasv/score_file.hpp"
#include "sasv/trial.hpp"

namespace sasv {

/// Optional per-source affine rescaling before summing.  The plain
/// score-sum baseline uses kNone (raw, uncalibrated scores); kMinMax maps
/// each source's fitted [min, max] onto [0, 1] and is a labelled extension.
class ScoreNormalizer {
 public:
  enum class Kind { kNone, kMinMax };

  static ScoreNormalizer none() { return ScoreNormalizer(); }

  static ScoreNormalizer fit_min_max(const ScoreSet& asv_reference,
                                     const ScoreSet& cm_reference) {
    ScoreNormalizer n;
    n.kind_ = Kind::kMinMax;
    fit_source(asv_reference, "asv", n.asv_min_, n.asv_max_);
    fit_source(cm_reference, "cm", n.cm_min_, n.cm_max_);
    return n;
  }

  Kind kind() const { return kind_; }

  double apply_asv(double score) const {
    return kind_ == Kind::kNone ? score : (score - asv_min_) / (asv_max_ - asv_min_);
  }

  double apply_cm(double score) const {
    return kind_ == Kind::kNone ? score : (score - cm_min_) / (cm_max_ - cm_min_);
  }

 private:
  static void fit_source(const ScoreSet& reference, const char* name, double& lo,
                         double& hi) {
    if (reference.empty())
      throw std::invalid_argument(std::string("min-max fit: empty ") + name +
                                  " reference score set");
    lo = std::numeric_limits<double>::infinity();
    hi = -std::numeric_limits<double>::infinity();
    for (const auto& r : reference.records) {
      lo = r.score < lo ? r.score : lo;
      hi = r.score > hi ? r.score : hi;
    }
    if (!(hi > lo))
      throw std::invalid_argument(std::string("min-max fit: degenerate ") + name +
                                  " reference (max must exceed min)");
  }

  Kind kind_ = Kind::kNone;
  double asv_min_ = 0.0, asv_max_ = 1.0;
  double cm_min_ = 0.0, cm_max_ = 1.0;
};

/// Score-sum fusion: per trial, the (optionally normalized) ASV and CM
/// scores are added.  The two sets must score the identical trial list;
/// output follows the ASV set's order.
inline ScoreSet score_sum(const ScoreSet& asv, const ScoreSet& cm,
                          const ScoreNormalizer& normalizer = ScoreNormalizer::none()) {
  std::unordered_map<std::string, const ScoreRecord*> cm_by_key;
  cm_by_key.reserve(cm.records.size());
  for (const auto& r : cm.records) cm_by_key.emplace(trial_key(r.trial), &r);

  ScoreSet fused;
  fused.records.reserve(asv.records.size());
  for (const auto& r : asv.records) {
    auto it = cm_by_key.find(trial_key(r.trial));
    if (it == cm_by_key.end())
      throw std::invalid_argument("trial (" + r.trial.speaker_model + ", " +
                                  r.trial.test_utterance + ") missing from cm scores");
    if (it->second->trial != r.trial)
      throw std::invalid_argument("trial metadata differs between sources for (" +
                                  r.trial.speaker_model + ", " + r.trial.test_utterance +
                                  ")");
    fused.records.push_back(ScoreRecord{
        r.trial, normalizer.apply_asv(r.score) + normalizer.apply_cm(it->second->score)});
  }
  if (cm.records.size() != asv.records.size())
    throw std::invalid_argument("cm scores cover trials absent from asv scores");
  return fused;
}

}  // namespace sasv
