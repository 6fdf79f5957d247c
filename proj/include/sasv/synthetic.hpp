// sasv/synthetic.hpp
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

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sasv/embedding.hpp"
#include "sasv/mlp.hpp"
#include "sasv/random.hpp"
#include "sasv/score_file.hpp"
#include "sasv/trial.hpp"

namespace sasv {

/// Controls for the synthetic fixtures.  Score separabilities are d' values
/// between unit-variance Gaussians, so the expected EER of each pair is
/// Phi(-d'/2).  Everything is deterministic from `seed`.
struct SynthSpec {
  std::size_t n_target = 1000;
  std::size_t n_nontarget = 1000;
  std::size_t n_spoof = 1000;
  double dprime_sv = 2.0;   // target vs nontarget separation
  double dprime_spf = 2.0;  // target vs spoof separation
  std::size_t spk_dim = 8;
  std::size_t cm_dim = 4;
  std::uint64_t seed = 1;
  std::size_t n_speakers = 8;
  std::size_t n_enroll_per_speaker = 3;
  std::size_t n_train_bonafide_per_speaker = 8;
  std::size_t n_train_spoof_per_speaker = 8;
};

namespace detail {

inline void validate(const SynthSpec& spec) {
  if (spec.n_target < 1) throw std::invalid_argument("need at least one target trial");
  if (spec.n_nontarget + spec.n_spoof < 1)
    throw std::invalid_argument("need at least one nontarget or spoof trial");
  if (!(spec.dprime_sv >= 0) || !(spec.dprime_spf >= 0) ||
      !std::isfinite(spec.dprime_sv) || !std::isfinite(spec.dprime_spf))
    throw std::invalid_argument("d' separabilities must be finite and >= 0");
  if (spec.spk_dim < 1 || spec.cm_dim < 1)
    throw std::invalid_argument("embedding dimensions must be >= 1");
  if (spec.n_speakers < 1) throw std::invalid_argument("need at least one speaker");
  if (spec.n_nontarget > 0 && spec.n_speakers < 2)
    throw std::invalid_argument("nontarget trials require at least two speakers");
  if (spec.n_enroll_per_speaker < 1)
    throw std::invalid_argument("need at least one enrollment utterance per speaker");
}

inline std::string zero_pad(std::size_t value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

inline std::string speaker_id(std::size_t i) { return "SPK" + zero_pad(i + 1, 3); }

}  // namespace detail

struct SynthScores {
  TrialProtocol protocol;
  ScoreSet scores;
};

/// Protocol plus Gaussian scores: targets ~ N(+d'_sv/2, 1), nontargets ~
/// N(-d'_sv/2, 1), spoofs ~ N(d'_sv/2 - d'_spf, 1), so each negative class
/// sits d' below the targets and the expected pairwise EER is Phi(-d'/2).
inline SynthScores synth_scores(const SynthSpec& spec) {
  detail::validate(spec);
  Rng rng(spec.seed);

  EnrollmentMap enrollment;
  for (std::size_t s = 0; s < spec.n_speakers; ++s) {
    std::vector<std::string> utts;
    for (std::size_t k = 0; k < spec.n_enroll_per_speaker; ++k)
      utts.push_back(detail::speaker_id(s) + "_enr_" + detail::zero_pad(k + 1, 2));
    enrollment.add(detail::speaker_id(s), std::move(utts));
  }

  std::vector<Trial> trials;
  trials.reserve(spec.n_target + spec.n_nontarget + spec.n_spoof);
  for (std::size_t i = 0; i < spec.n_target; ++i)
    trials.push_back(Trial{detail::speaker_id(i % spec.n_speakers),
                           "T" + detail::zero_pad(i + 1, 6), std::string(kBonafide),
                           TrialType::kTarget});
  for (std::size_t i = 0; i < spec.n_nontarget; ++i)
    trials.push_back(Trial{detail::speaker_id(i % spec.n_speakers),
                           "N" + detail::zero_pad(i + 1, 6), std::string(kBonafide),
                           TrialType::kNontarget});
  for (std::size_t i = 0; i < spec.n_spoof; ++i)
    trials.push_back(Trial{detail::speaker_id(i % spec.n_speakers),
                           "S" + detail::zero_pad(i + 1, 6),
                           "A" + detail::zero_pad(i % 6 + 1, 2), TrialType::kSpoof});

  const double target_mean = spec.dprime_sv / 2.0;
  const double nontarget_mean = -spec.dprime_sv / 2.0;
  const double spoof_mean = target_mean - spec.dprime_spf;

  ScoreSet scores;
  scores.records.reserve(trials.size());
  for (const auto& trial : trials) {
    double mean = 0.0;
    switch (trial.trial_type) {
      case TrialType::kTarget: mean = target_mean; break;
      case TrialType::kNontarget: mean = nontarget_mean; break;
      case TrialType::kSpoof: mean = spoof_mean; break;
    }
    scores.records.push_back(ScoreRecord{trial, rng.normal(mean, 1.0)});
  }
  return SynthScores{make_protocol(std::move(trials), std::move(enrollment)),
                     std::move(scores)};
}

struct SynthEmbeddings {
  TrialProtocol protocol;        // evaluation protocol with enrollment map
  EmbeddingStore speaker;        // speaker embeddings for every utterance
  EmbeddingStore cm;             // countermeasure embeddings for every utterance
  std::vector<TrainingLabel> train_labels;  // disjoint training pool
  ScoreSet asv_scores;           // cosine baseline over the protocol
  ScoreSet cm_scores;            // projection onto the CM axis over the protocol
};

/// Clustered Gaussian embeddings with analytically controlled separability.
/// Speaker utterances sit around per-speaker centers scaled by d'_sv
/// (orthonormal centers when n_speakers <= spk_dim); CM embeddings form a
/// bona fide / spoof cluster pair +-d'_spf/2 apart along a fixed axis, so
/// the axis projection scores have d' = d'_spf exactly.  Spoofed
/// utterances mimic the claimed speaker's cluster: only the CM embedding
/// tells them apart.
inline SynthEmbeddings synth_embeddings(const SynthSpec& spec) {
  detail::validate(spec);
  Rng rng(spec.seed);

  // Speaker cluster centers, mutually orthonormal when they fit.
  std::vector<std::vector<double>> centers;
  for (std::size_t s = 0; s < spec.n_speakers; ++s) {
    std::vector<double> c(spec.spk_dim);
    for (double& v : c) v = rng.normal();
    if (spec.n_speakers <= spec.spk_dim)
      for (const auto& prev : centers) {
        double dot = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) dot += c[i] * prev[i];
        for (std::size_t i = 0; i < c.size(); ++i) c[i] -= dot * prev[i];
      }
    double norm = 0.0;
    for (double v : c) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < 1e-9) throw std::runtime_error("degenerate speaker center draw");
    for (double& v : c) v /= norm;
    centers.push_back(std::move(c));
  }

  std::vector<double> cm_axis(spec.cm_dim);
  for (double& v : cm_axis) v = rng.normal();
  double axis_norm = 0.0;
  for (double v : cm_axis) axis_norm += v * v;
  axis_norm = std::sqrt(axis_norm);
  for (double& v : cm_axis) v /= axis_norm;

  EmbeddingStore speaker_store(spec.spk_dim);
  EmbeddingStore cm_store(spec.cm_dim);

  auto draw_speaker_emb = [&](std::size_t spk) {
    std::vector<double> v(spec.spk_dim);
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = spec.dprime_sv * centers[spk][i] + rng.normal();
    return v;
  };
  auto draw_cm_emb = [&](bool bona) {
    const double shift = (bona ? 0.5 : -0.5) * spec.dprime_spf;
    std::vector<double> v(spec.cm_dim);
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = shift * cm_axis[i] + rng.normal();
    return v;
  };
  auto add_utt = [&](const std::string& id, std::size_t spk, bool bona) {
    speaker_store.add(id, draw_speaker_emb(spk));
    cm_store.add(id, draw_cm_emb(bona));
  };

  EnrollmentMap enrollment;
  for (std::size_t s = 0; s < spec.n_speakers; ++s) {
    std::vector<std::string> utts;
    for (std::size_t k = 0; k < spec.n_enroll_per_speaker; ++k) {
      std::string id = detail::speaker_id(s) + "_enr_" + detail::zero_pad(k + 1, 2);
      add_utt(id, s, true);
      utts.push_back(std::move(id));
    }
    enrollment.add(detail::speaker_id(s), std::move(utts));
  }

  std::vector<TrainingLabel> train_labels;
  for (std::size_t s = 0; s < spec.n_speakers; ++s) {
    for (std::size_t k = 0; k < spec.n_train_bonafide_per_speaker; ++k) {
      std::string id = detail::speaker_id(s) + "_trn_b" + detail::zero_pad(k + 1, 2);
      add_utt(id, s, true);
      train_labels.push_back(TrainingLabel{std::move(id), detail::speaker_id(s),
                                           std::string(kBonafide)});
    }
    for (std::size_t k = 0; k < spec.n_train_spoof_per_speaker; ++k) {
      std::string id = detail::speaker_id(s) + "_trn_s" + detail::zero_pad(k + 1, 2);
      add_utt(id, s, false);
      train_labels.push_back(TrainingLabel{std::move(id), detail::speaker_id(s),
                                           "A" + detail::zero_pad(k % 3 + 1, 2)});
    }
  }

  std::vector<Trial> trials;
  trials.reserve(spec.n_target + spec.n_nontarget + spec.n_spoof);
  for (std::size_t i = 0; i < spec.n_target; ++i) {
    const std::size_t spk = i % spec.n_speakers;
    std::string id = "T" + detail::zero_pad(i + 1, 6);
    add_utt(id, spk, true);
    trials.push_back(
        Trial{detail::speaker_id(spk), std::move(id), std::string(kBonafide),
              TrialType::kTarget});
  }
  for (std::size_t i = 0; i < spec.n_nontarget; ++i) {
    const std::size_t claimed = i % spec.n_speakers;
    const std::size_t actual = (claimed + 1 + i % (spec.n_speakers - 1)) % spec.n_speakers;
    std::string id = "N" + detail::zero_pad(i + 1, 6);
    add_utt(id, actual, true);
    trials.push_back(
        Trial{detail::speaker_id(claimed), std::move(id), std::string(kBonafide),
              TrialType::kNontarget});
  }
  for (std::size_t i = 0; i < spec.n_spoof; ++i) {
    const std::size_t claimed = i % spec.n_speakers;
    std::string id = "S" + detail::zero_pad(i + 1, 6);
    add_utt(id, claimed, false);  // speaker embedding mimics the claimed speaker
    trials.push_back(Trial{detail::speaker_id(claimed), std::move(id),
                           "A" + detail::zero_pad(i % 3 + 4, 2), TrialType::kSpoof});
  }

  TrialProtocol protocol = make_protocol(std::move(trials), std::move(enrollment));
  ScoreSet asv = cosine_scores(protocol, speaker_store, speaker_store);
  ScoreSet cm_scores;
  cm_scores.records.reserve(protocol.trials.size());
  for (const auto& trial : protocol.trials) {
    const auto& emb = cm_store.at(trial.test_utterance);
    double dot = 0.0;
    for (std::size_t i = 0; i < emb.size(); ++i) dot += emb[i] * cm_axis[i];
    cm_scores.records.push_back(ScoreRecord{trial, dot});
  }

  return SynthEmbeddings{std::move(protocol),  std::move(speaker_store),
                         std::move(cm_store),  std::move(train_labels),
                         std::move(asv),       std::move(cm_scores)};
}

}  // namespace sasv
