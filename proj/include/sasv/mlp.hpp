// sasv/mlp.hpp
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
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sasv/embedding.hpp"
#include "sasv/random.hpp"
#include "sasv/score_file.hpp"
#include "sasv/text_io.hpp"
#include "sasv/trial.hpp"

namespace sasv {

/// Hyperparameters for the embedding-fusion backend.  The seed fully
/// determines initialization, trial sampling and shuffling.
struct TrainingConfig {
  std::uint64_t seed = 42;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  std::vector<std::size_t> hidden_dims = {256, 128, 64};
  // target : nontarget : spoof composition of the sampled training trials;
  // all zero means exhaustive pairing with no subsampling.
  double target_ratio = 1.0;
  double nontarget_ratio = 1.0;
  double spoof_ratio = 2.0;
  // Held-out loss stopping rule: stop after this many epochs without
  // improvement and keep the best parameters.  0 disables it.
  std::size_t early_stop_patience = 0;
};

inline void validate(const TrainingConfig& config) {
  if (config.epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (config.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate))
    throw std::invalid_argument("learning rate must be finite and >= 0");
  if (config.hidden_dims.empty())
    throw std::invalid_argument("at least one hidden layer is required");
  for (std::size_t d : config.hidden_dims)
    if (d == 0) throw std::invalid_argument("hidden dimensions must be positive");
  if (config.target_ratio < 0 || config.nontarget_ratio < 0 || config.spoof_ratio < 0)
    throw std::invalid_argument("sampling ratios must be >= 0");
}

// ---------------------------------------------------------------------------
// Model

/// Fully-connected network scoring the concatenated [enrollment speaker,
/// test speaker, test CM] embedding.  Hidden layers use the leaky rectifier
/// (slope 0.01), the single output unit is logistic, so scores live in
/// (0, 1).  All arithmetic is double precision and strictly sequential, so
/// identical inputs give bit-identical results.
class MlpBackend {
 public:
  struct Layer {
    std::size_t in = 0, out = 0;
    std::vector<double> weights;  // row-major [out][in]
    std::vector<double> biases;   // [out]

    bool operator==(const Layer&) const = default;
  };

  struct Gradients {
    std::vector<Layer> layers;  // same shapes as the model, weight/bias grads
  };

  MlpBackend() = default;

  /// Fan-in scaled uniform initialization: weights ~ U(+-sqrt(3/fan_in))
  /// drawn layer by layer in row-major order, biases zero.
  static MlpBackend init(const std::vector<std::size_t>& layer_dims, Rng& rng) {
    check_dims(layer_dims);
    MlpBackend m;
    m.dims_ = layer_dims;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
      Layer layer;
      layer.in = layer_dims[l];
      layer.out = layer_dims[l + 1];
      layer.weights.resize(layer.in * layer.out);
      layer.biases.assign(layer.out, 0.0);
      const double limit = std::sqrt(3.0 / static_cast<double>(layer.in));
      for (double& w : layer.weights) w = rng.uniform(-limit, limit);
      m.layers_.push_back(std::move(layer));
    }
    return m;
  }

  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  const std::vector<Layer>& layers() const { return layers_; }
  double leaky_slope() const { return kLeakySlope; }

  /// Score in (0, 1) for one input vector.
  double forward(std::span<const double> input) const {
    std::vector<std::vector<double>> activations;
    return run_forward(input, &activations);
  }

  /// Binary cross-entropy of one example; when `grads` is non-null the
  /// parameter gradients are accumulated (added) into it.
  double accumulate(std::span<const double> input, double label,
                    Gradients* grads) const {
    std::vector<std::vector<double>> acts;  // acts[0] = input, acts[l] post-activation
    run_forward(input, &acts);
    const double z = output_z_;
    // Stable BCE from the pre-activation: softplus(z) - label * z.
    const double loss = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - label * z;
    if (!grads) return loss;

    // delta for the logistic output under BCE reduces to (score - label).
    std::vector<double> delta{logistic(z) - label};
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Layer& layer = layers_[l];
      Layer& g = grads->layers[l];
      const std::vector<double>& prev = acts[l];
      for (std::size_t r = 0; r < layer.out; ++r) {
        g.biases[r] += delta[r];
        double* grow = &g.weights[r * layer.in];
        for (std::size_t c = 0; c < layer.in; ++c) grow[c] += delta[r] * prev[c];
      }
      if (l == 0) break;
      std::vector<double> next(layer.in, 0.0);
      for (std::size_t r = 0; r < layer.out; ++r) {
        const double* wrow = &layer.weights[r * layer.in];
        for (std::size_t c = 0; c < layer.in; ++c) next[c] += wrow[c] * delta[r];
      }
      // chain through the leaky rectifier of layer l-1
      const std::vector<double>& z_prev = pre_activations_[l - 1];
      for (std::size_t c = 0; c < layer.in; ++c)
        next[c] *= z_prev[c] > 0.0 ? 1.0 : kLeakySlope;
      delta = std::move(next);
    }
    return loss;
  }

  Gradients make_gradients() const {
    Gradients g;
    g.layers.reserve(layers_.size());
    for (const auto& layer : layers_) {
      Layer zero;
      zero.in = layer.in;
      zero.out = layer.out;
      zero.weights.assign(layer.weights.size(), 0.0);
      zero.biases.assign(layer.biases.size(), 0.0);
      g.layers.push_back(std::move(zero));
    }
    return g;
  }

  /// params -= scale * grads
  void step(const Gradients& grads, double scale) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Layer& layer = layers_[l];
      const Layer& g = grads.layers[l];
      for (std::size_t i = 0; i < layer.weights.size(); ++i)
        layer.weights[i] -= scale * g.weights[i];
      for (std::size_t i = 0; i < layer.biases.size(); ++i)
        layer.biases[i] -= scale * g.biases[i];
    }
  }

  // Flat parameter indexing (weights then biases, layer by layer); used by
  // serialization and by finite-difference checks.
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
    return n;
  }

  double parameter(std::size_t index) const { return *locate(index); }
  void set_parameter(std::size_t index, double value) {
    *const_cast<double*>(locate(index)) = value;
  }

  std::vector<double> flatten(const Gradients& grads) const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& l : grads.layers) {
      flat.insert(flat.end(), l.weights.begin(), l.weights.end());
      flat.insert(flat.end(), l.biases.begin(), l.biases.end());
    }
    return flat;
  }

  bool operator==(const MlpBackend&) const = default;

  /// Versioned text format; values use shortest-round-trip rendering, so
  /// write -> read -> write is byte-identical and parameters are exact.
  void write(std::ostream& out) const {
    out << "sasv-mlp-v1\n";
    out << "layer_dims";
    for (std::size_t d : dims_) out << ' ' << d;
    out << '\n';
    out << "activation leaky_relu " << textio::format_double(kLeakySlope)
        << " logistic\n";
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      out << "layer " << l << '\n';
      for (std::size_t r = 0; r < layer.out; ++r) {
        for (std::size_t c = 0; c < layer.in; ++c) {
          if (c) out << ' ';
          out << textio::format_double(layer.weights[r * layer.in + c]);
        }
        out << '\n';
      }
      for (std::size_t r = 0; r < layer.out; ++r) {
        if (r) out << ' ';
        out << textio::format_double(layer.biases[r]);
      }
      out << '\n';
    }
  }

  static MlpBackend read(std::istream& in) {
    textio::LineReader reader(in);
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&](const char* what) {
      if (!reader.next(line, lineno))
        throw ParseError(lineno, std::string("unexpected end of model file, expected ") + what);
      return textio::split_fields(line);
    };

    auto magic = next_line("format magic");
    if (magic.size() != 1 || magic[0] != "sasv-mlp-v1")
      throw ParseError(lineno, "unknown model format (expected sasv-mlp-v1)");

    auto dim_fields = next_line("layer_dims");
    if (dim_fields.size() < 4 || dim_fields[0] != "layer_dims")
      throw ParseError(lineno, "expected 'layer_dims d_in h.. 1'");
    std::vector<std::size_t> dims;
    for (std::size_t i = 1; i < dim_fields.size(); ++i) {
      auto d = textio::parse_int(dim_fields[i]);
      if (!d || *d <= 0) throw ParseError(lineno, "invalid layer dimension");
      dims.push_back(static_cast<std::size_t>(*d));
    }
    check_dims(dims);

    auto act = next_line("activation");
    if (act.size() != 4 || act[0] != "activation" || act[1] != "leaky_relu" ||
        act[3] != "logistic")
      throw ParseError(lineno, "expected 'activation leaky_relu <slope> logistic'");
    auto slope = textio::parse_double(act[2]);
    if (!slope || *slope != kLeakySlope)
      throw ParseError(lineno, "unsupported leaky_relu slope");

    MlpBackend m;
    m.dims_ = dims;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      auto header = next_line("layer header");
      if (header.size() != 2 || header[0] != "layer" ||
          textio::parse_int(header[1]) != static_cast<long long>(l))
        throw ParseError(lineno, "expected 'layer " + std::to_string(l) + "'");
      Layer layer;
      layer.in = dims[l];
      layer.out = dims[l + 1];
      layer.weights.resize(layer.in * layer.out);
      layer.biases.resize(layer.out);
      for (std::size_t r = 0; r < layer.out; ++r) {
        auto row = next_line("weight row");
        if (row.size() != layer.in)
          throw ParseError(lineno, "weight row has " + std::to_string(row.size()) +
                                       " values, expected " + std::to_string(layer.in));
        for (std::size_t c = 0; c < layer.in; ++c)
          layer.weights[r * layer.in + c] = parse_value(row[c], lineno);
      }
      auto biases = next_line("bias row");
      if (biases.size() != layer.out)
        throw ParseError(lineno, "bias row has " + std::to_string(biases.size()) +
                                     " values, expected " + std::to_string(layer.out));
      for (std::size_t r = 0; r < layer.out; ++r)
        layer.biases[r] = parse_value(biases[r], lineno);
      m.layers_.push_back(std::move(layer));
    }
    return m;
  }

 private:
  static constexpr double kLeakySlope = 0.01;
  // Pre-activations are clamped here before the logistic so the score stays
  // strictly inside (0, 1) in double precision.
  static constexpr double kLogisticClamp = 36.0;

  static void check_dims(const std::vector<std::size_t>& dims) {
    if (dims.size() < 3)
      throw std::invalid_argument("layer_dims needs input, hidden and output entries");
    for (std::size_t d : dims)
      if (d == 0) throw std::invalid_argument("layer dimensions must be positive");
    if (dims.back() != 1) throw std::invalid_argument("output layer must have dimension 1");
  }

  static double parse_value(std::string_view field, std::size_t lineno) {
    auto v = textio::parse_double(field);
    if (!v || !std::isfinite(*v))
      throw ParseError(lineno, "invalid parameter value '" + std::string(field) + "'");
    return *v;
  }

  static double logistic(double z) {
    z = std::clamp(z, -kLogisticClamp, kLogisticClamp);
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }

  // Fills acts[0..L-1] (input and hidden post-activations), stores hidden
  // pre-activations and the clamped output pre-activation, returns the score.
  double run_forward(std::span<const double> input,
                     std::vector<std::vector<double>>* acts) const {
    if (layers_.empty()) throw std::logic_error("uninitialized model");
    if (input.size() != input_dim())
      throw std::invalid_argument("input has dimension " + std::to_string(input.size()) +
                                  ", model expects " + std::to_string(input_dim()));
    pre_activations_.assign(layers_.size() - 1, {});
    acts->clear();
    acts->emplace_back(input.begin(), input.end());
    std::vector<double> current(input.begin(), input.end());
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      std::vector<double> z(layer.out);
      for (std::size_t r = 0; r < layer.out; ++r) {
        double sum = layer.biases[r];
        const double* wrow = &layer.weights[r * layer.in];
        for (std::size_t c = 0; c < layer.in; ++c) sum += wrow[c] * current[c];
        z[r] = sum;
      }
      pre_activations_[l] = z;
      for (double& v : z) v = v > 0.0 ? v : kLeakySlope * v;
      acts->push_back(z);
      current = std::move(z);
    }
    const Layer& out_layer = layers_.back();
    double z = out_layer.biases[0];
    for (std::size_t c = 0; c < out_layer.in; ++c) z += out_layer.weights[c] * current[c];
    output_z_ = std::clamp(z, -kLogisticClamp, kLogisticClamp);
    return logistic(output_z_);
  }

  const double* locate(std::size_t index) const {
    for (const auto& layer : layers_) {
      if (index < layer.weights.size()) return &layer.weights[index];
      index -= layer.weights.size();
      if (index < layer.biases.size()) return &layer.biases[index];
      index -= layer.biases.size();
    }
    throw std::out_of_range("parameter index out of range");
  }

  std::vector<std::size_t> dims_;
  std::vector<Layer> layers_;
  // scratch owned by the model to avoid reallocation churn; guarded use in
  // accumulate()/run_forward() keeps results independent of call history
  mutable std::vector<std::vector<double>> pre_activations_;
  mutable double output_z_ = 0.0;
};

// ---------------------------------------------------------------------------
// Training trials

/// Per-utterance ground truth for the training pool: the speaker and either
/// "bonafide" or the attack id.  File format: one "utterance speaker attack"
/// line per utterance.
struct TrainingLabel {
  std::string utterance;
  std::string speaker;
  std::string attack_type;

  bool is_bonafide() const { return attack_type == kBonafide; }
  bool operator==(const TrainingLabel&) const = default;
};

inline std::vector<TrainingLabel> parse_training_labels(std::istream& in) {
  std::vector<TrainingLabel> labels;
  std::unordered_set<std::string> seen;
  textio::LineReader reader(in);
  std::string line;
  std::size_t lineno = 0;
  while (reader.next(line, lineno)) {
    auto fields = textio::split_fields(line);
    if (fields.size() != 3)
      throw ParseError(lineno, "expected 3 fields (utterance speaker attack), got " +
                                   std::to_string(fields.size()));
    if (!seen.insert(std::string(fields[0])).second)
      throw ParseError(lineno, "duplicate utterance '" + std::string(fields[0]) + "'");
    labels.push_back(TrainingLabel{std::string(fields[0]), std::string(fields[1]),
                                   std::string(fields[2])});
  }
  return labels;
}

inline void write_training_labels(std::ostream& out, std::span<const TrainingLabel> labels) {
  for (const auto& l : labels)
    out << l.utterance << ' ' << l.speaker << ' ' << l.attack_type << '\n';
}

/// One training pair: enrollment utterance(s), a test utterance, and the
/// accept/reject label.  `category` records which sampling pool it came
/// from (Target / Nontarget / Spoof).
struct TrainingExample {
  std::vector<std::string> enroll_utts;
  std::string test_utterance;
  int label = 0;
  TrialType category = TrialType::kTarget;
};

struct TrainingTrialSet {
  std::vector<TrainingExample> examples;
  std::size_t target_pool = 0;     // exhaustive pool sizes before sampling
  std::size_t nontarget_pool = 0;
  std::size_t spoof_pool = 0;
  std::vector<std::string> notes;  // e.g. speakers that yield no positive pairs
};

/// Builds labelled training pairs from the utterance pool:
///   label 1: unordered pairs of bona fide utterances of one speaker;
///   label 0: unordered cross-speaker bona fide pairs, and every spoofed
///            utterance paired against its claimed speaker's bona fide
///            utterances.
/// With all ratios zero the pairing is exhaustive; otherwise pools are
/// subsampled (seeded shuffle) to the target:nontarget:spoof composition.
inline TrainingTrialSet build_training_trials(std::span<const TrainingLabel> labels,
                                              const TrainingConfig& config) {
  validate(config);
  TrainingTrialSet result;

  std::vector<std::string> speakers;  // first-seen order
  std::unordered_map<std::string, std::size_t> speaker_index;
  std::vector<std::vector<const TrainingLabel*>> bonafide, spoofed;
  for (const auto& label : labels) {
    auto [it, inserted] = speaker_index.emplace(label.speaker, speakers.size());
    if (inserted) {
      speakers.push_back(label.speaker);
      bonafide.emplace_back();
      spoofed.emplace_back();
    }
    (label.is_bonafide() ? bonafide : spoofed)[it->second].push_back(&label);
  }

  std::vector<TrainingExample> targets, nontargets, spoofs;
  for (std::size_t s = 0; s < speakers.size(); ++s) {
    for (std::size_t i = 0; i < bonafide[s].size(); ++i)
      for (std::size_t j = i + 1; j < bonafide[s].size(); ++j)
        targets.push_back(TrainingExample{{bonafide[s][i]->utterance},
                                          bonafide[s][j]->utterance,
                                          1,
                                          TrialType::kTarget});
    if (bonafide[s].size() < 2)
      result.notes.push_back("speaker '" + speakers[s] +
                             "' has fewer than 2 bona fide utterances; no positive pairs");
  }
  for (std::size_t a = 0; a < speakers.size(); ++a)
    for (std::size_t b = a + 1; b < speakers.size(); ++b)
      for (const auto* u : bonafide[a])
        for (const auto* v : bonafide[b])
          nontargets.push_back(
              TrainingExample{{u->utterance}, v->utterance, 0, TrialType::kNontarget});
  for (std::size_t s = 0; s < speakers.size(); ++s) {
    if (!spoofed[s].empty() && bonafide[s].empty()) {
      result.notes.push_back("speaker '" + speakers[s] +
                             "' has spoofed utterances but no bona fide enrollment side");
      continue;
    }
    for (const auto* sp : spoofed[s])
      for (const auto* u : bonafide[s])
        spoofs.push_back(
            TrainingExample{{u->utterance}, sp->utterance, 0, TrialType::kSpoof});
  }

  result.target_pool = targets.size();
  result.nontarget_pool = nontargets.size();
  result.spoof_pool = spoofs.size();

  const double ratios[3] = {config.target_ratio, config.nontarget_ratio,
                            config.spoof_ratio};
  std::vector<TrainingExample>* pools[3] = {&targets, &nontargets, &spoofs};
  const bool exhaustive = ratios[0] == 0 && ratios[1] == 0 && ratios[2] == 0;
  if (!exhaustive) {
    Rng rng(config.seed);
    double scale = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k)
      if (ratios[k] > 0 && !pools[k]->empty())
        scale = std::min(scale, static_cast<double>(pools[k]->size()) / ratios[k]);
    if (std::isinf(scale)) scale = 0.0;
    for (int k = 0; k < 3; ++k) {
      std::size_t want = ratios[k] > 0
                             ? std::min(pools[k]->size(),
                                        static_cast<std::size_t>(scale * ratios[k]))
                             : 0;
      rng.shuffle(*pools[k]);
      pools[k]->resize(want);
    }
  }
  for (auto* pool : pools)
    result.examples.insert(result.examples.end(), pool->begin(), pool->end());
  return result;
}

// ---------------------------------------------------------------------------
// Feature assembly and training

/// The three embedding sources consumed by the backend.  speaker_enroll and
/// speaker_test may point at the same combined store.
struct StoreSet {
  const EmbeddingStore* speaker_enroll = nullptr;
  const EmbeddingStore* speaker_test = nullptr;
  const EmbeddingStore* cm = nullptr;
};

/// Backend input: [mean enrollment speaker emb | test speaker emb | test CM
/// emb], concatenated in that fixed order.
inline std::vector<double> fusion_features(const StoreSet& stores,
                                           std::span<const std::string> enroll_utts,
                                           const std::string& test_utterance) {
  std::vector<double> features =
      enrollment_embedding(*stores.speaker_enroll, enroll_utts);
  const auto& test = stores.speaker_test->at(test_utterance);
  features.insert(features.end(), test.begin(), test.end());
  const auto& cm = stores.cm->at(test_utterance);
  features.insert(features.end(), cm.begin(), cm.end());
  return features;
}

inline std::size_t fusion_input_dim(const StoreSet& stores) {
  return stores.speaker_enroll->dim() + stores.speaker_test->dim() + stores.cm->dim();
}

struct TrainResult {
  MlpBackend model;
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;    // mean BCE over the training set
  std::vector<double> holdout_losses;  // filled when a holdout set is given
  std::size_t best_epoch = 0;          // 1-based; epoch whose parameters were kept
  std::size_t epochs_run = 0;
};

namespace detail {

struct FeatureMatrix {
  std::vector<double> values;  // n rows of dim, row-major
  std::vector<double> labels;
  std::size_t dim = 0;

  std::size_t rows() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }
};

inline FeatureMatrix assemble_features(std::span<const TrainingExample> examples,
                                       const StoreSet& stores) {
  FeatureMatrix m;
  m.dim = fusion_input_dim(stores);
  m.values.reserve(examples.size() * m.dim);
  m.labels.reserve(examples.size());
  for (const auto& ex : examples) {
    auto f = fusion_features(stores, ex.enroll_utts, ex.test_utterance);
    m.values.insert(m.values.end(), f.begin(), f.end());
    m.labels.push_back(static_cast<double>(ex.label));
  }
  return m;
}

inline double mean_loss(const MlpBackend& model, const FeatureMatrix& m) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    total += model.accumulate(m.row(i), m.labels[i], nullptr);
  return total / static_cast<double>(m.rows());
}

}  // namespace detail

/// Minimizes mean binary cross-entropy with plain mini-batch gradient
/// descent.  Fully reproducible from the seed; aborts with a diagnostic if
/// the loss goes non-finite.
inline TrainResult mlp_train(std::span<const TrainingExample> examples,
                             const StoreSet& stores, const TrainingConfig& config,
                             std::span<const TrainingExample> holdout = {}) {
  validate(config);
  if (examples.empty()) throw std::invalid_argument("empty training trial list");

  const detail::FeatureMatrix train = detail::assemble_features(examples, stores);
  const detail::FeatureMatrix held = detail::assemble_features(holdout, stores);

  std::vector<std::size_t> dims;
  dims.push_back(train.dim);
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(1);

  Rng rng(config.seed);
  TrainResult result;
  result.model = MlpBackend::init(dims, rng);
  result.initial_loss = detail::mean_loss(result.model, train);

  std::vector<std::size_t> order(train.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  MlpBackend::Gradients grads = result.model.make_gradients();
  std::optional<MlpBackend> best_model;
  double best_holdout = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      grads = result.model.make_gradients();
      for (std::size_t k = start; k < stop; ++k)
        result.model.accumulate(train.row(order[k]), train.labels[order[k]], &grads);
      result.model.step(grads, config.learning_rate / static_cast<double>(stop - start));
    }
    const double loss = detail::mean_loss(result.model, train);
    if (!std::isfinite(loss))
      throw std::runtime_error("training diverged: non-finite loss after epoch " +
                               std::to_string(epoch));
    result.epoch_losses.push_back(loss);
    result.epochs_run = epoch;

    if (held.rows() > 0) {
      const double hl = detail::mean_loss(result.model, held);
      result.holdout_losses.push_back(hl);
      if (config.early_stop_patience > 0) {
        if (hl < best_holdout) {
          best_holdout = hl;
          best_model = result.model;
          result.best_epoch = epoch;
          since_best = 0;
        } else if (++since_best >= config.early_stop_patience) {
          break;
        }
      }
    }
  }
  if (best_model) {
    result.model = std::move(*best_model);
  } else {
    result.best_epoch = result.epochs_run;
  }
  return result;
}

/// Scores every protocol trial with the trained backend.  Enrollment
/// embeddings are averaged once per speaker; a missing embedding raises an
/// error naming the utterance.
inline ScoreSet backend_score(const MlpBackend& model, const TrialProtocol& protocol,
                              const StoreSet& stores) {
  if (protocol.enrollment.empty())
    throw std::invalid_argument("protocol has no enrollment map");
  std::unordered_map<std::string, std::vector<double>> enroll_cache;
  ScoreSet out;
  out.records.reserve(protocol.trials.size());
  for (const auto& trial : protocol.trials) {
    auto it = enroll_cache.find(trial.speaker_model);
    if (it == enroll_cache.end()) {
      const auto* utts = protocol.enrollment.find(trial.speaker_model);
      if (!utts)
        throw std::invalid_argument("speaker '" + trial.speaker_model +
                                    "' missing from enrollment map");
      it = enroll_cache
               .emplace(trial.speaker_model,
                        enrollment_embedding(*stores.speaker_enroll, *utts))
               .first;
    }
    std::vector<double> features = it->second;
    const auto& test = stores.speaker_test->at(trial.test_utterance);
    features.insert(features.end(), test.begin(), test.end());
    const auto& cm = stores.cm->at(trial.test_utterance);
    features.insert(features.end(), cm.begin(), cm.end());
    out.records.push_back(ScoreRecord{trial, model.forward(features)});
  }
  return out;
}

}  // namespace sasv
