// sasv/score_file.hpp
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
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sasv/text_io.hpp"
#include "sasv/trial.hpp"

namespace sasv {

/// A scored trial.  Larger score means more target-like.  Scores are
/// unitless and must be finite.
struct ScoreRecord {
  Trial trial;
  double score = 0.0;

  bool operator==(const ScoreRecord&) const = default;
};

/// Ordered score records with unique (speaker, utterance) pairs.
struct ScoreSet {
  std::vector<ScoreRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  bool operator==(const ScoreSet&) const = default;
};

/// Parses a 5-column score file: the 4 protocol columns plus a decimal score.
inline ScoreSet parse_scores(std::istream& in) {
  ScoreSet set;
  std::unordered_set<std::string> keys;
  textio::LineReader reader(in);
  std::string line;
  std::size_t lineno = 0;
  while (reader.next(line, lineno)) {
    auto fields = textio::split_fields(line);
    if (fields.size() != 5)
      throw ParseError(lineno, "expected 5 fields, got " + std::to_string(fields.size()));
    auto type = trial_type_from_token(fields[3]);
    if (!type)
      throw ParseError(lineno, "unknown trial type token '" + std::string(fields[3]) + "'");
    auto score = textio::parse_double(fields[4]);
    if (!score)
      throw ParseError(lineno, "unparsable score '" + std::string(fields[4]) + "'");
    if (!std::isfinite(*score))
      throw ParseError(lineno, "non-finite score '" + std::string(fields[4]) + "'");
    Trial trial = make_trial(std::string(fields[0]), std::string(fields[1]),
                             std::string(fields[2]), *type, lineno);
    if (!keys.insert(trial_key(trial)).second)
      throw ParseError(lineno, "duplicate trial (" + trial.speaker_model + ", " +
                                   trial.test_utterance + ")");
    set.records.push_back(ScoreRecord{std::move(trial), *score});
  }
  return set;
}

inline void write_scores(std::ostream& out, const ScoreSet& scores) {
  for (const auto& r : scores.records)
    out << r.trial.speaker_model << ' ' << r.trial.test_utterance << ' '
        << r.trial.attack_type << ' ' << to_token(r.trial.trial_type) << ' '
        << textio::format_double(r.score) << '\n';
}

/// Differences between a score file and the protocol it claims to cover.
/// An empty report means the scores are exactly a scored copy of the
/// protocol, in any order.
struct ValidationReport {
  std::vector<Trial> missing;                       // in protocol, not scored
  std::vector<Trial> extra;                         // scored, not in protocol
  std::vector<std::pair<Trial, Trial>> mismatched;  // (protocol trial, scored trial)

  bool empty() const { return missing.empty() && extra.empty() && mismatched.empty(); }

  std::string to_string() const {
    std::ostringstream out;
    auto describe = [](const Trial& t) {
      std::string s = t.speaker_model + ' ' + t.test_utterance + ' ' + t.attack_type +
                      ' ' + std::string(to_token(t.trial_type));
      return s;
    };
    for (const auto& t : missing) out << "missing: " << describe(t) << '\n';
    for (const auto& t : extra) out << "extra: " << describe(t) << '\n';
    for (const auto& [p, s] : mismatched)
      out << "mismatch: protocol has '" << describe(p) << "', scores have '"
          << describe(s) << "'\n";
    return out.str();
  }
};

/// Order-insensitive comparison of a submission against the protocol.
/// Problems are reported, not thrown, so a submitter sees all of them.
inline ValidationReport validate_against_protocol(const ScoreSet& scores,
                                                  const TrialProtocol& protocol) {
  ValidationReport report;
  std::unordered_map<std::string, const Trial*> scored;
  scored.reserve(scores.records.size());
  for (const auto& r : scores.records) scored.emplace(trial_key(r.trial), &r.trial);

  std::unordered_set<std::string> protocol_keys;
  protocol_keys.reserve(protocol.trials.size());
  for (const auto& t : protocol.trials) {
    protocol_keys.insert(trial_key(t));
    auto it = scored.find(trial_key(t));
    if (it == scored.end())
      report.missing.push_back(t);
    else if (*it->second != t)
      report.mismatched.emplace_back(t, *it->second);
  }
  for (const auto& r : scores.records)
    if (!protocol_keys.count(trial_key(r.trial))) report.extra.push_back(r.trial);
  return report;
}

/// The six headline rates, as fractions in [0, 1].
struct ResultsSummary {
  double dev_sasv_eer = 0.0;
  double dev_sv_eer = 0.0;
  double dev_spf_eer = 0.0;
  double eval_sasv_eer = 0.0;
  double eval_sv_eer = 0.0;
  double eval_spf_eer = 0.0;
};

/// Writes the results line: six percent values, two decimals each,
/// space-separated, dev triple then eval triple, trailing newline.
inline void write_results(std::ostream& out, const ResultsSummary& summary) {
  const double rates[6] = {summary.dev_sasv_eer,  summary.dev_sv_eer,  summary.dev_spf_eer,
                           summary.eval_sasv_eer, summary.eval_sv_eer, summary.eval_spf_eer};
  for (int i = 0; i < 6; ++i) {
    if (!(rates[i] >= 0.0 && rates[i] <= 1.0))
      throw std::invalid_argument("results rate out of [0,1]: " +
                                  textio::format_double(rates[i]));
    if (i) out << ' ';
    out << textio::format_fixed2(100.0 * rates[i]);
  }
  out << '\n';
}

}  // namespace sasv
