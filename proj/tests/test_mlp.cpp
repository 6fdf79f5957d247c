// tests/test_mlp.cpp
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

#include "sasv/mlp.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "mlp_oracle.hpp"
#include "sasv/random.hpp"
#include "sasv/synthetic.hpp"

using namespace sasv;

namespace {

std::vector<double> random_input(Rng& rng, std::size_t dim, double scale = 1.0) {
  std::vector<double> x(dim);
  for (double& v : x) v = scale * rng.normal();
  return x;
}

std::vector<TrainingLabel> parse_labels(const std::string& text) {
  std::istringstream in(text);
  return parse_training_labels(in);
}

}  // namespace

TEST_CASE("all-zero parameters score one half for every input") {
  Rng rng(1);
  MlpBackend model = MlpBackend::init({4, 3, 3, 3, 1}, rng);
  for (std::size_t i = 0; i < model.parameter_count(); ++i) model.set_parameter(i, 0.0);
  for (int round = 0; round < 10; ++round) {
    auto x = random_input(rng, 4, 3.0);
    CHECK(model.forward(x) == 0.5);
  }
}

TEST_CASE("input concatenation order matters") {
  Rng rng(2);
  MlpBackend model = MlpBackend::init({4, 3, 3, 3, 1}, rng);
  std::vector<double> x{0.3, -0.8, 1.2, 0.1};
  std::vector<double> permuted{-0.8, 0.3, 1.2, 0.1};
  CHECK(model.forward(x) != model.forward(permuted));
}

TEST_CASE("forward matches an independent hand-rolled pass") {
  Rng rng(7);
  MlpBackend model = MlpBackend::init({4, 3, 3, 3, 1}, rng);
  for (int round = 0; round < 25; ++round) {
    auto x = random_input(rng, 4, 2.0);
    const double got = model.forward(x);
    const double expected = sasv_test::oracle_forward(model, x).score;
    CHECK(std::fabs(got - expected) <= 1e-12);
    CHECK(got > 0.0);
    CHECK(got < 1.0);
  }
}

TEST_CASE("forward stays finite and inside (0,1) on bounded inputs") {
  Rng rng(8);
  MlpBackend model = MlpBackend::init({6, 5, 4, 3, 1}, rng);
  for (int round = 0; round < 200; ++round) {
    std::vector<double> x(6);
    for (double& v : x) v = rng.uniform(-10.0, 10.0);
    const double y = model.forward(x);
    REQUIRE(std::isfinite(y));
    REQUIRE(y > 0.0);
    REQUIRE(y < 1.0);
  }
}

TEST_CASE("forward rejects dimension mismatches") {
  Rng rng(9);
  MlpBackend model = MlpBackend::init({4, 3, 3, 3, 1}, rng);
  std::vector<double> too_short{1.0, 2.0};
  CHECK_THROWS_WITH(model.forward(too_short),
                    Catch::Matchers::ContainsSubstring("dimension"));
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(10);
  int checked = 0;
  while (checked < 6) {
    MlpBackend model = MlpBackend::init({4, 3, 3, 3, 1}, rng);
    auto x = random_input(rng, 4);
    const double label = rng.below(2) ? 1.0 : 0.0;
    auto trace = sasv_test::oracle_forward(model, x);
    // keep clear of rectifier kinks and logistic saturation, where finite
    // differences are not informative
    if (trace.min_abs_hidden_z < 1e-3 || std::fabs(trace.output_z) > 30.0) continue;
    const double err = sasv_test::max_gradient_error(model, x, label, 1e-5);
    CHECK(err < 1e-4);
    ++checked;
  }
}

TEST_CASE("model files round trip exactly") {
  Rng rng(11);
  MlpBackend model = MlpBackend::init({5, 4, 3, 2, 1}, rng);
  std::ostringstream out;
  model.write(out);
  std::istringstream in(out.str());
  MlpBackend reparsed = MlpBackend::read(in);
  CHECK(reparsed == model);

  std::ostringstream again;
  reparsed.write(again);
  CHECK(again.str() == out.str());
}

TEST_CASE("model reader rejects malformed files") {
  auto read = [](const std::string& text) {
    std::istringstream in(text);
    return MlpBackend::read(in);
  };
  CHECK_THROWS_WITH(read(""), Catch::Matchers::ContainsSubstring("unexpected end"));
  CHECK_THROWS_WITH(read("other-format\n"),
                    Catch::Matchers::ContainsSubstring("unknown model format"));
  CHECK_THROWS_WITH(read("sasv-mlp-v1\nlayer_dims 2 2\n"),
                    Catch::Matchers::ContainsSubstring("layer_dims"));
  CHECK_THROWS_WITH(
      read("sasv-mlp-v1\nlayer_dims 2 2 2 1\nactivation relu 0.01 logistic\n"),
      Catch::Matchers::ContainsSubstring("activation"));
  CHECK_THROWS_WITH(
      read("sasv-mlp-v1\nlayer_dims 2 2 2 1\nactivation leaky_relu 0.01 logistic\n"
           "layer 0\n1 2\n3\n"),
      Catch::Matchers::ContainsSubstring("weight row"));
}

TEST_CASE("training labels parse and reject duplicates") {
  auto labels = parse_labels("u1 s1 bonafide\nu2 s1 A01\n");
  REQUIRE(labels.size() == 2);
  CHECK(labels[0].is_bonafide());
  CHECK_FALSE(labels[1].is_bonafide());
  CHECK_THROWS_WITH(parse_labels("u1 s1 bonafide\nu1 s2 A01\n"),
                    Catch::Matchers::ContainsSubstring("duplicate utterance"));
  CHECK_THROWS_WITH(parse_labels("u1 s1\n"),
                    Catch::Matchers::ContainsSubstring("expected 3 fields"));
}

TEST_CASE("exhaustive pairing: 2 speakers x 2 bona fide utts") {
  auto labels = parse_labels(
      "a1 A bonafide\n"
      "a2 A bonafide\n"
      "b1 B bonafide\n"
      "b2 B bonafide\n");
  TrainingConfig config;
  config.target_ratio = config.nontarget_ratio = config.spoof_ratio = 0;  // exhaustive
  TrainingTrialSet trials = build_training_trials(labels, config);
  CHECK(trials.target_pool == 2);     // {a1,a2}, {b1,b2}
  CHECK(trials.nontarget_pool == 4);  // a-utt vs b-utt combinations
  CHECK(trials.spoof_pool == 0);
  CHECK(trials.examples.size() == 6);

  std::size_t positives = 0;
  for (const auto& ex : trials.examples) positives += ex.label;
  CHECK(positives == 2);
}

TEST_CASE("spoofed test utterances always get label zero") {
  auto labels = parse_labels(
      "a1 A bonafide\n"
      "a2 A bonafide\n"
      "sp1 A A01\n"
      "sp2 A A02\n");
  TrainingConfig config;
  config.target_ratio = config.nontarget_ratio = config.spoof_ratio = 0;
  TrainingTrialSet trials = build_training_trials(labels, config);
  CHECK(trials.spoof_pool == 4);  // 2 spoofs x 2 bona fide enrollment utts
  for (const auto& ex : trials.examples)
    if (ex.category == TrialType::kSpoof) {
      CHECK(ex.label == 0);
      CHECK((ex.test_utterance == "sp1" || ex.test_utterance == "sp2"));
    }
}

TEST_CASE("speakers without enough bona fide utterances are reported, not fatal") {
  auto labels = parse_labels(
      "a1 A bonafide\n"
      "a2 A bonafide\n"
      "b1 B bonafide\n"
      "c1 C A01\n");
  TrainingConfig config;
  config.target_ratio = config.nontarget_ratio = config.spoof_ratio = 0;
  TrainingTrialSet trials = build_training_trials(labels, config);
  CHECK(trials.target_pool == 1);
  REQUIRE(trials.notes.size() >= 2);
  bool b_noted = false, c_noted = false;
  for (const auto& note : trials.notes) {
    if (note.find("'B'") != std::string::npos) b_noted = true;
    if (note.find("'C'") != std::string::npos) c_noted = true;
  }
  CHECK(b_noted);
  CHECK(c_noted);
}

TEST_CASE("sampling follows the configured ratios and is seed-deterministic") {
  std::ostringstream text;
  for (int s = 0; s < 6; ++s)
    for (int u = 0; u < 6; ++u) {
      text << "s" << s << "b" << u << " s" << s << " bonafide\n";
      text << "s" << s << "x" << u << " s" << s << " A0" << (u % 3 + 1) << "\n";
    }
  auto labels = parse_labels(text.str());

  TrainingConfig config;
  config.seed = 99;
  config.target_ratio = 1;
  config.nontarget_ratio = 1;
  config.spoof_ratio = 2;
  TrainingTrialSet a = build_training_trials(labels, config);
  TrainingTrialSet b = build_training_trials(labels, config);

  std::size_t n_t = 0, n_n = 0, n_s = 0;
  for (const auto& ex : a.examples) {
    n_t += ex.category == TrialType::kTarget;
    n_n += ex.category == TrialType::kNontarget;
    n_s += ex.category == TrialType::kSpoof;
  }
  CHECK(n_t == n_n);
  CHECK(n_s == 2 * n_t);

  REQUIRE(a.examples.size() == b.examples.size());
  for (std::size_t i = 0; i < a.examples.size(); ++i) {
    CHECK(a.examples[i].test_utterance == b.examples[i].test_utterance);
    CHECK(a.examples[i].enroll_utts == b.examples[i].enroll_utts);
  }

  config.seed = 100;  // a different seed reorders the sampled pools
  TrainingTrialSet c = build_training_trials(labels, config);
  bool any_difference = c.examples.size() != a.examples.size();
  for (std::size_t i = 0; !any_difference && i < a.examples.size(); ++i)
    any_difference = a.examples[i].test_utterance != c.examples[i].test_utterance;
  CHECK(any_difference);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  SynthSpec spec;
  spec.n_target = 4;
  spec.n_nontarget = 4;
  spec.n_spoof = 4;
  spec.n_speakers = 3;
  spec.spk_dim = 4;
  spec.cm_dim = 2;
  spec.seed = 21;
  SynthEmbeddings data = synth_embeddings(spec);
  StoreSet stores{&data.speaker, &data.speaker, &data.cm};

  TrainingConfig config;
  config.seed = 5;
  config.epochs = 3;
  config.hidden_dims = {4, 4, 4};
  config.learning_rate = 0.0;
  TrainingTrialSet trials = build_training_trials(data.train_labels, config);
  TrainResult result = mlp_train(trials.examples, stores, config);

  Rng rng(config.seed);
  std::vector<std::size_t> dims{fusion_input_dim(stores), 4, 4, 4, 1};
  MlpBackend untouched = MlpBackend::init(dims, rng);
  CHECK(result.model == untouched);
  for (double loss : result.epoch_losses) CHECK(loss == result.initial_loss);
}

TEST_CASE("training is bit-deterministic for a fixed config") {
  SynthSpec spec;
  spec.n_target = 4;
  spec.n_nontarget = 4;
  spec.n_spoof = 4;
  spec.n_speakers = 3;
  spec.spk_dim = 4;
  spec.cm_dim = 2;
  spec.seed = 22;
  spec.n_train_bonafide_per_speaker = 4;
  spec.n_train_spoof_per_speaker = 4;
  SynthEmbeddings data = synth_embeddings(spec);
  StoreSet stores{&data.speaker, &data.speaker, &data.cm};

  TrainingConfig config;
  config.seed = 6;
  config.epochs = 5;
  config.batch_size = 16;
  config.hidden_dims = {8, 6, 4};
  TrainingTrialSet trials = build_training_trials(data.train_labels, config);
  TrainResult first = mlp_train(trials.examples, stores, config);
  TrainResult second = mlp_train(trials.examples, stores, config);
  CHECK(first.model == second.model);
  CHECK(first.epoch_losses == second.epoch_losses);
}

TEST_CASE("loss decreases over the first epoch and separable data trains to 99%") {
  SynthSpec spec;
  spec.n_target = 50;
  spec.n_nontarget = 50;
  spec.n_spoof = 50;
  spec.n_speakers = 4;
  spec.spk_dim = 8;
  spec.cm_dim = 4;
  spec.dprime_sv = 6.0;
  spec.dprime_spf = 6.0;
  spec.seed = 23;
  SynthEmbeddings data = synth_embeddings(spec);
  StoreSet stores{&data.speaker, &data.speaker, &data.cm};

  TrainingConfig config;
  config.seed = 7;
  config.epochs = 50;
  config.batch_size = 32;
  config.learning_rate = 0.05;
  config.hidden_dims = {16, 12, 8};
  TrainingTrialSet trials = build_training_trials(data.train_labels, config);
  TrainResult result = mlp_train(trials.examples, stores, config);

  REQUIRE_FALSE(result.epoch_losses.empty());
  CHECK(result.epoch_losses.front() < result.initial_loss);

  std::size_t correct = 0;
  for (const auto& ex : trials.examples) {
    auto f = fusion_features(stores, ex.enroll_utts, ex.test_utterance);
    const double y = result.model.forward(f);
    correct += (y >= 0.5) == (ex.label == 1);
  }
  const double accuracy =
      static_cast<double>(correct) / static_cast<double>(trials.examples.size());
  CHECK(accuracy >= 0.99);
}

TEST_CASE("held-out early stopping keeps the best epoch and can stop early") {
  SynthSpec spec;
  spec.n_target = 4;
  spec.n_nontarget = 4;
  spec.n_spoof = 4;
  spec.n_speakers = 3;
  spec.spk_dim = 4;
  spec.cm_dim = 2;
  spec.seed = 24;
  SynthEmbeddings data = synth_embeddings(spec);
  StoreSet stores{&data.speaker, &data.speaker, &data.cm};

  TrainingConfig config;
  config.seed = 8;
  config.epochs = 40;
  config.hidden_dims = {6, 4, 3};
  config.learning_rate = 0.05;
  config.early_stop_patience = 3;
  TrainingTrialSet trials = build_training_trials(data.train_labels, config);
  REQUIRE(trials.examples.size() > 10);
  std::vector<TrainingExample> holdout(trials.examples.begin(),
                                       trials.examples.begin() + 8);
  std::vector<TrainingExample> train(trials.examples.begin() + 8, trials.examples.end());

  TrainResult result = mlp_train(train, stores, config, holdout);
  CHECK(result.holdout_losses.size() == result.epochs_run);
  CHECK(result.best_epoch >= 1);
  CHECK(result.best_epoch <= result.epochs_run);
}

TEST_CASE("empty training lists and divergence are rejected") {
  SynthSpec spec;
  spec.n_target = 2;
  spec.n_nontarget = 2;
  spec.n_spoof = 2;
  spec.n_speakers = 2;
  spec.spk_dim = 2;
  spec.cm_dim = 2;
  spec.seed = 25;
  SynthEmbeddings data = synth_embeddings(spec);
  StoreSet stores{&data.speaker, &data.speaker, &data.cm};
  TrainingConfig config;
  CHECK_THROWS_WITH(mlp_train({}, stores, config),
                    Catch::Matchers::ContainsSubstring("empty training"));
}

TEST_CASE("backend_score covers the protocol and is deterministic") {
  SynthSpec spec;
  spec.n_target = 12;
  spec.n_nontarget = 12;
  spec.n_spoof = 12;
  spec.n_speakers = 4;
  spec.spk_dim = 4;
  spec.cm_dim = 2;
  spec.seed = 26;
  SynthEmbeddings data = synth_embeddings(spec);
  StoreSet stores{&data.speaker, &data.speaker, &data.cm};

  Rng rng(30);
  std::vector<std::size_t> dims{fusion_input_dim(stores), 5, 4, 3, 1};
  MlpBackend model = MlpBackend::init(dims, rng);

  ScoreSet scores = backend_score(model, data.protocol, stores);
  CHECK(validate_against_protocol(scores, data.protocol).empty());
  ScoreSet again = backend_score(model, data.protocol, stores);
  CHECK(scores == again);
}

TEST_CASE("trials sharing enrollment and test utterance get identical scores") {
  EnrollmentMap enrollment;
  enrollment.add("s1", {"e1", "e2"});
  enrollment.add("s2", {"e1", "e2"});  // same enrollment list on purpose
  std::vector<Trial> trials{
      Trial{"s1", "t1", "bonafide", TrialType::kTarget},
      Trial{"s2", "t1", "bonafide", TrialType::kNontarget},
  };
  TrialProtocol protocol = make_protocol(trials, enrollment);

  EmbeddingStore spk(3), cm(2);
  Rng rng(31);
  for (const char* id : {"e1", "e2", "t1"}) {
    std::vector<double> v{rng.normal(), rng.normal(), rng.normal()};
    spk.add(id, v);
  }
  cm.add("t1", {rng.normal(), rng.normal()});
  StoreSet stores{&spk, &spk, &cm};

  std::vector<std::size_t> dims{8, 4, 3, 2, 1};
  MlpBackend model = MlpBackend::init(dims, rng);
  ScoreSet scores = backend_score(model, protocol, stores);
  REQUIRE(scores.size() == 2);
  CHECK(scores.records[0].score == scores.records[1].score);
}

TEST_CASE("backend_score names the missing utterance") {
  EnrollmentMap enrollment;
  enrollment.add("s1", {"e1"});
  std::vector<Trial> trials{
      Trial{"s1", "t1", "bonafide", TrialType::kTarget},
      Trial{"s1", "t_missing", "bonafide", TrialType::kNontarget},
  };
  TrialProtocol protocol = make_protocol(trials, enrollment);
  EmbeddingStore spk(2), cm(2);
  spk.add("e1", {1.0, 0.0});
  spk.add("t1", {0.0, 1.0});
  cm.add("t1", {1.0, 1.0});
  StoreSet stores{&spk, &spk, &cm};
  Rng rng(32);
  MlpBackend model = MlpBackend::init({6, 3, 2, 2, 1}, rng);
  CHECK_THROWS_WITH(backend_score(model, protocol, stores),
                    Catch::Matchers::ContainsSubstring("t_missing"));
}
