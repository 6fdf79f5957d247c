// sasv/trial.hpp
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

#include <initializer_list>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sasv/text_io.hpp"

namespace sasv {

// Trial vocabulary.  The ASV protocols label every trial with one of three
// types; tokens are exact and case-sensitive.  Both token tables live here
// so a corpus variant (e.g. "-" for bona fide) can be added in one place.
enum class TrialType { kTarget, kNontarget, kSpoof };

inline constexpr std::string_view kBonafide = "bonafide";

inline std::optional<TrialType> trial_type_from_token(std::string_view token) {
  if (token == "target") return TrialType::kTarget;
  if (token == "nontarget") return TrialType::kNontarget;
  if (token == "spoof") return TrialType::kSpoof;
  return std::nullopt;
}

inline std::string_view to_token(TrialType type) {
  switch (type) {
    case TrialType::kTarget: return "target";
    case TrialType::kNontarget: return "nontarget";
    case TrialType::kSpoof: return "spoof";
  }
  return "?";
}

/// One evaluation unit: a claimed speaker model and a test utterance,
/// annotated with the attack id ("bonafide" for genuine speech) and the
/// trial type.  Bona fide <=> not a spoof trial, by construction.
struct Trial {
  std::string speaker_model;
  std::string test_utterance;
  std::string attack_type;
  TrialType trial_type = TrialType::kTarget;

  bool is_bonafide() const { return attack_type == kBonafide; }

  bool operator==(const Trial&) const = default;
};

inline std::string trial_key(const Trial& t) {
  return t.speaker_model + ' ' + t.test_utterance;
}

/// Builds a Trial enforcing the field invariants; `line` feeds error messages.
inline Trial make_trial(std::string speaker_model, std::string test_utterance,
                        std::string attack_type, TrialType trial_type,
                        std::size_t line = 0) {
  if (speaker_model.empty() || test_utterance.empty())
    throw ParseError(line, "empty speaker model or test utterance");
  const bool bonafide = attack_type == kBonafide;
  if (bonafide == (trial_type == TrialType::kSpoof))
    throw ParseError(line, "bonafide/spoof inconsistency: attack type '" + attack_type +
                               "' with trial type '" + std::string(to_token(trial_type)) + "'");
  return Trial{std::move(speaker_model), std::move(test_utterance),
               std::move(attack_type), trial_type};
}

/// Speaker model -> ordered enrollment utterance list, in file order.
class EnrollmentMap {
 public:
  void add(std::string speaker, std::vector<std::string> utterances,
           std::size_t line = 0) {
    if (utterances.empty())
      throw ParseError(line, "speaker '" + speaker + "' has no enrollment utterances");
    if (index_.count(speaker))
      throw ParseError(line, "duplicate speaker '" + speaker + "'");
    std::unordered_set<std::string_view> seen;
    for (const auto& u : utterances)
      if (!seen.insert(u).second)
        throw ParseError(line, "duplicate enrollment utterance '" + u +
                                   "' for speaker '" + speaker + "'");
    index_.emplace(speaker, entries_.size());
    entries_.emplace_back(std::move(speaker), std::move(utterances));
  }

  const std::vector<std::string>* find(const std::string& speaker) const {
    auto it = index_.find(speaker);
    return it == index_.end() ? nullptr : &entries_[it->second].second;
  }

  bool contains(const std::string& speaker) const { return index_.count(speaker) != 0; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  const std::vector<std::pair<std::string, std::vector<std::string>>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::vector<std::string>>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Ordered trial list plus the enrollment map.  The map may be empty for
/// metrics-only workflows; embedding-based scoring requires it.
struct TrialProtocol {
  std::vector<Trial> trials;
  EnrollmentMap enrollment;
};

/// Parses a 4-column protocol file: speaker_model test_utterance attack_type
/// trial_type.  Lines split on whitespace runs; blank and '#' lines skipped.
inline std::vector<Trial> parse_protocol(std::istream& in) {
  std::vector<Trial> trials;
  std::unordered_set<std::string> keys;
  textio::LineReader reader(in);
  std::string line;
  std::size_t lineno = 0;
  while (reader.next(line, lineno)) {
    auto fields = textio::split_fields(line);
    if (fields.size() != 4)
      throw ParseError(lineno, "expected 4 fields, got " + std::to_string(fields.size()));
    auto type = trial_type_from_token(fields[3]);
    if (!type)
      throw ParseError(lineno, "unknown trial type token '" + std::string(fields[3]) + "'");
    Trial trial = make_trial(std::string(fields[0]), std::string(fields[1]),
                             std::string(fields[2]), *type, lineno);
    if (!keys.insert(trial_key(trial)).second)
      throw ParseError(lineno, "duplicate trial (" + trial.speaker_model + ", " +
                                   trial.test_utterance + ")");
    trials.push_back(std::move(trial));
  }
  if (trials.empty()) throw ParseError(0, "no trials");
  return trials;
}

inline void write_protocol(std::ostream& out, std::span<const Trial> trials) {
  for (const auto& t : trials)
    out << t.speaker_model << ' ' << t.test_utterance << ' ' << t.attack_type << ' '
        << to_token(t.trial_type) << '\n';
}

/// Parses an enrollment map file: one speaker per line, followed by its
/// enrollment utterance ids.
inline EnrollmentMap parse_enrollment_map(std::istream& in) {
  EnrollmentMap map;
  textio::LineReader reader(in);
  std::string line;
  std::size_t lineno = 0;
  while (reader.next(line, lineno)) {
    auto fields = textio::split_fields(line);
    std::vector<std::string> utterances;
    utterances.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) utterances.emplace_back(fields[i]);
    map.add(std::string(fields[0]), std::move(utterances), lineno);
  }
  return map;
}

inline void write_enrollment_map(std::ostream& out, const EnrollmentMap& map) {
  for (const auto& [speaker, utterances] : map.entries()) {
    out << speaker;
    for (const auto& u : utterances) out << ' ' << u;
    out << '\n';
  }
}

/// Assembles and validates a protocol.  Throws unless there is at least one
/// target trial, at least one nontarget or spoof trial, no duplicate
/// (speaker, utterance) pair, and — when an enrollment map is attached —
/// every trial's speaker is enrolled.
inline TrialProtocol make_protocol(std::vector<Trial> trials, EnrollmentMap enrollment) {
  std::size_t n_target = 0, n_negative = 0;
  std::unordered_set<std::string> keys;
  for (const auto& t : trials) {
    if (t.trial_type == TrialType::kTarget)
      ++n_target;
    else
      ++n_negative;
    if (!keys.insert(trial_key(t)).second)
      throw ParseError(0, "duplicate trial (" + t.speaker_model + ", " +
                              t.test_utterance + ")");
    if (!enrollment.empty() && !enrollment.contains(t.speaker_model))
      throw ParseError(0, "speaker '" + t.speaker_model + "' missing from enrollment map");
  }
  if (n_target == 0) throw ParseError(0, "protocol has no target trials");
  if (n_negative == 0) throw ParseError(0, "protocol has no nontarget or spoof trials");
  return TrialProtocol{std::move(trials), std::move(enrollment)};
}

/// Trials whose type is in `types`, in protocol order.
inline std::vector<Trial> subset(std::span<const Trial> trials,
                                 std::initializer_list<TrialType> types) {
  bool keep[3] = {false, false, false};
  for (TrialType t : types) keep[static_cast<int>(t)] = true;
  std::vector<Trial> result;
  for (const auto& t : trials)
    if (keep[static_cast<int>(t.trial_type)]) result.push_back(t);
  return result;
}

inline std::vector<Trial> subset(const TrialProtocol& protocol,
                                 std::initializer_list<TrialType> types) {
  return subset(std::span<const Trial>(protocol.trials), types);
}

}  // namespace sasv
