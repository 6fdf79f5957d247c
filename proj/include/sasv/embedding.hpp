// sasv/embedding.hpp
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
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sasv/score_file.hpp"
#include "sasv/text_io.hpp"
#include "sasv/trial.hpp"

namespace sasv {

/// Utterance id -> fixed-dimension real vector.  The file format is a
/// "#dim D" header followed by one "utt v1 .. vD" line per utterance;
/// arithmetic downstream is 64-bit regardless of file precision.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  void add(std::string utterance, std::vector<double> values, std::size_t line = 0) {
    if (values.size() != dim_)
      throw ParseError(line, "utterance '" + utterance + "' has " +
                                 std::to_string(values.size()) + " components, expected " +
                                 std::to_string(dim_));
    for (double v : values)
      if (!std::isfinite(v))
        throw ParseError(line, "non-finite component for utterance '" + utterance + "'");
    if (index_.count(utterance))
      throw ParseError(line, "duplicate utterance '" + utterance + "'");
    index_.emplace(utterance, entries_.size());
    entries_.emplace_back(std::move(utterance), std::move(values));
  }

  const std::vector<double>* find(const std::string& utterance) const {
    auto it = index_.find(utterance);
    return it == index_.end() ? nullptr : &entries_[it->second].second;
  }

  const std::vector<double>& at(const std::string& utterance) const {
    const auto* v = find(utterance);
    if (!v) throw std::out_of_range("no embedding for utterance '" + utterance + "'");
    return *v;
  }

  const std::vector<std::pair<std::string, std::vector<double>>>& entries() const {
    return entries_;
  }

 private:
  std::size_t dim_;
  std::vector<std::pair<std::string, std::vector<double>>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline EmbeddingStore parse_embeddings(std::istream& in) {
  // The header looks like a comment, so comments are handled by hand here:
  // the first content line must be "#dim D"; any other '#' line is skipped.
  textio::LineReader reader(in, /*keep_comments=*/true);
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  bool have_header = false;
  EmbeddingStore store(1);
  while (reader.next(line, lineno)) {
    auto fields = textio::split_fields(line);
    if (!have_header) {
      if (fields.size() != 2 || fields[0] != "#dim")
        throw ParseError(lineno, "expected '#dim D' header");
      auto d = textio::parse_int(fields[1]);
      if (!d || *d <= 0)
        throw ParseError(lineno, "invalid dimension '" + std::string(fields[1]) + "'");
      dim = static_cast<std::size_t>(*d);
      store = EmbeddingStore(dim);
      have_header = true;
      continue;
    }
    if (textio::is_comment(line)) continue;
    if (fields.size() != dim + 1)
      throw ParseError(lineno, "expected utterance id plus " + std::to_string(dim) +
                                   " components, got " + std::to_string(fields.size()) +
                                   " fields");
    std::vector<double> values(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      auto v = textio::parse_double(fields[i + 1]);
      if (!v) throw ParseError(lineno, "unparsable component '" + std::string(fields[i + 1]) + "'");
      values[i] = *v;
    }
    store.add(std::string(fields[0]), std::move(values), lineno);
  }
  if (!have_header) throw ParseError(0, "missing '#dim D' header");
  return store;
}

inline void write_embeddings(std::ostream& out, const EmbeddingStore& store) {
  out << "#dim " << store.dim() << '\n';
  for (const auto& [utterance, values] : store.entries()) {
    out << utterance;
    for (double v : values) out << ' ' << textio::format_double(v);
    out << '\n';
  }
}

/// Componentwise mean of the listed utterances' embeddings — the standard
/// way multiple enrollment utterances compose one speaker embedding.
inline std::vector<double> enrollment_embedding(const EmbeddingStore& store,
                                                std::span<const std::string> utterances) {
  if (utterances.empty()) throw std::invalid_argument("empty enrollment utterance list");
  std::vector<double> mean(store.dim(), 0.0);
  for (const auto& utt : utterances) {
    const auto& v = store.at(utt);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(utterances.size());
  for (double& m : mean) m *= inv;
  return mean;
}

inline double cosine_score(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero-norm vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Cosine ASV baseline over a protocol: enrollment embeddings are averaged
/// per speaker, test utterances scored against them.
inline ScoreSet cosine_scores(const TrialProtocol& protocol,
                              const EmbeddingStore& enroll_store,
                              const EmbeddingStore& test_store) {
  if (protocol.enrollment.empty())
    throw std::invalid_argument("protocol has no enrollment map");
  ScoreSet out;
  out.records.reserve(protocol.trials.size());
  std::unordered_map<std::string, std::vector<double>> speaker_embedding;
  for (const auto& trial : protocol.trials) {
    auto it = speaker_embedding.find(trial.speaker_model);
    if (it == speaker_embedding.end()) {
      const auto* utts = protocol.enrollment.find(trial.speaker_model);
      if (!utts)
        throw std::invalid_argument("speaker '" + trial.speaker_model +
                                    "' missing from enrollment map");
      it = speaker_embedding
               .emplace(trial.speaker_model, enrollment_embedding(enroll_store, *utts))
               .first;
    }
    const double score = cosine_score(it->second, test_store.at(trial.test_utterance));
    out.records.push_back(ScoreRecord{trial, score});
  }
  return out;
}

}  // namespace sasv
