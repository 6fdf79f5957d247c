// tools/sasvkit_main.cpp
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

// Command-line front end: validate and evaluate submissions, run the two
// fusion baselines, and generate synthetic fixtures.
//
// Exit codes: 0 success, 1 semantic/validation failure, 2 I/O or parse
// failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sasv/sasv.hpp"

namespace {

namespace fs = std::filesystem;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown by command bodies to force a specific exit code (e.g. a non-empty
// validation report is a result, not an exception trace).
struct ExitWith {
  int code;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish_output(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

sasv::ScoreSet load_scores(const std::string& path) {
  auto in = open_input(path);
  return sasv::parse_scores(in);
}

std::vector<sasv::Trial> load_trials(const std::string& path) {
  auto in = open_input(path);
  return sasv::parse_protocol(in);
}

sasv::TrialProtocol load_protocol(const std::string& protocol_path,
                                  const std::string& enroll_path = {}) {
  sasv::EnrollmentMap enrollment;
  if (!enroll_path.empty()) {
    auto in = open_input(enroll_path);
    enrollment = sasv::parse_enrollment_map(in);
  }
  return sasv::make_protocol(load_trials(protocol_path), std::move(enrollment));
}

sasv::EmbeddingStore load_embeddings(const std::string& path) {
  auto in = open_input(path);
  return sasv::parse_embeddings(in);
}

void print_config(const CLI::App* cmd) {
  std::cout << "# resolved configuration\n";
  std::istringstream dump(cmd->config_to_str(/*default_also=*/true,
                                             /*write_description=*/false));
  std::string line;
  while (std::getline(dump, line))
    if (!line.empty()) std::cout << "#   " << line << '\n';
}

std::string percent(double rate) { return sasv::textio::format_fixed2(100.0 * rate); }

void print_report(const sasv::EerReport& report, bool per_attack,
                  const std::string& prefix = {}) {
  auto line = [&](const char* name, const std::optional<sasv::EerResult>& r,
                  const char* missing) {
    std::cout << prefix << name << ": ";
    if (r)
      std::cout << percent(r->eer) << "%  (threshold "
                << sasv::textio::format_double(r->threshold) << ", " << r->n_positive
                << "+/" << r->n_negative << "- trials)\n";
    else
      std::cout << "n/a (no " << missing << " trials)\n";
  };
  line("SASV-EER", report.sasv, "negative");
  line("SV-EER", report.sv, "nontarget");
  line("SPF-EER", report.spf, "spoof");
  if (per_attack && !report.per_attack.empty()) {
    std::cout << prefix << "per-attack SPF-EER:\n";
    for (const auto& [attack, r] : report.per_attack)
      std::cout << prefix << "  " << attack << ": " << percent(r.eer) << "%  ("
                << r.n_negative << " trials)\n";
  }
}

double require(const std::optional<sasv::EerResult>& r, const char* which) {
  if (!r)
    throw std::invalid_argument(std::string("results file needs the ") + which +
                                " EER, but its trial subset is empty");
  return r->eer;
}

// --------------------------------------------------------------------------
// validate

struct ValidateArgs {
  std::string protocol, scores;
};

void run_validate(const ValidateArgs& args) {
  sasv::TrialProtocol protocol = load_protocol(args.protocol);
  sasv::ScoreSet scores = load_scores(args.scores);
  sasv::ValidationReport report = sasv::validate_against_protocol(scores, protocol);
  if (report.empty()) {
    std::cout << "OK: " << scores.size() << " scored trials cover the protocol\n";
    return;
  }
  std::cout << report.to_string();
  std::cout << "FAILED: " << report.missing.size() << " missing, "
            << report.extra.size() << " extra, " << report.mismatched.size()
            << " mismatched\n";
  throw ExitWith{1};
}

// --------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string protocol, scores;
  std::string dev_protocol, dev_scores, eval_protocol, eval_scores;
  std::string team;
  std::string out_dir = ".";
  bool per_attack = false;
};

sasv::EerReport evaluate_pair(const std::string& protocol_path,
                              const std::string& scores_path) {
  sasv::TrialProtocol protocol = load_protocol(protocol_path);
  sasv::ScoreSet scores = load_scores(scores_path);
  return sasv::evaluate(scores, protocol);
}

void run_evaluate(const EvaluateArgs& args) {
  const bool single = !args.protocol.empty();
  const bool both = !args.dev_protocol.empty() && !args.eval_protocol.empty();
  if (single == both)
    throw CLI::ValidationError(
        "evaluate", "give either --protocol/--scores or the dev+eval quartet");
  if (single) {
    print_report(evaluate_pair(args.protocol, args.scores), args.per_attack);
    return;
  }
  sasv::EerReport dev = evaluate_pair(args.dev_protocol, args.dev_scores);
  sasv::EerReport eval = evaluate_pair(args.eval_protocol, args.eval_scores);
  std::cout << "dev:\n";
  print_report(dev, args.per_attack, "  ");
  std::cout << "eval:\n";
  print_report(eval, args.per_attack, "  ");
  if (!args.team.empty()) {
    sasv::ResultsSummary summary;
    summary.dev_sasv_eer = require(dev.sasv, "dev SASV");
    summary.dev_sv_eer = require(dev.sv, "dev SV");
    summary.dev_spf_eer = require(dev.spf, "dev SPF");
    summary.eval_sasv_eer = require(eval.sasv, "eval SASV");
    summary.eval_sv_eer = require(eval.sv, "eval SV");
    summary.eval_spf_eer = require(eval.spf, "eval SPF");
    const fs::path path = fs::path(args.out_dir) / ("results_" + args.team + ".csv");
    auto out = open_output(path);
    sasv::write_results(out, summary);
    finish_output(out, path);
    std::cout << "wrote " << path.string() << '\n';
  }
}

// --------------------------------------------------------------------------
// fuse

struct FuseArgs {
  std::string asv, cm, out;
  std::string normalizer = "none";
  std::string fit_asv, fit_cm;
  std::string team, split = "dev", out_dir = ".";
};

fs::path resolve_scores_path(const std::string& out, const std::string& team,
                             const std::string& split, const std::string& out_dir) {
  if (!out.empty()) return out;
  if (team.empty())
    throw CLI::ValidationError("output", "give --out, or --team (and --split) for "
                                         "challenge-style naming");
  return fs::path(out_dir) / ("scores_" + split + "_" + team + ".txt");
}

void run_fuse(const FuseArgs& args) {
  sasv::ScoreSet asv = load_scores(args.asv);
  sasv::ScoreSet cm = load_scores(args.cm);
  sasv::ScoreNormalizer normalizer = sasv::ScoreNormalizer::none();
  if (args.normalizer == "minmax") {
    sasv::ScoreSet asv_ref = args.fit_asv.empty() ? asv : load_scores(args.fit_asv);
    sasv::ScoreSet cm_ref = args.fit_cm.empty() ? cm : load_scores(args.fit_cm);
    normalizer = sasv::ScoreNormalizer::fit_min_max(asv_ref, cm_ref);
  } else if (args.normalizer != "none") {
    throw CLI::ValidationError("--normalizer", "must be 'none' or 'minmax'");
  }
  sasv::ScoreSet fused = sasv::score_sum(asv, cm, normalizer);
  const fs::path path = resolve_scores_path(args.out, args.team, args.split, args.out_dir);
  auto out = open_output(path);
  sasv::write_scores(out, fused);
  finish_output(out, path);
  std::cout << "wrote " << path.string() << " (" << fused.size() << " trials)\n";
}

// --------------------------------------------------------------------------
// backend train / score

struct TrainArgs {
  std::string labels, spk_emb, spk_test_emb, cm_emb, out;
  std::uint64_t seed = 42;
  std::size_t epochs = 30;
  std::size_t batch = 128;
  double lr = 1e-3;
  std::string hidden = "256,128,64";
  std::string ratios = "1,1,2";
  double holdout_frac = 0.1;
  std::size_t patience = 0;
};

std::vector<double> parse_number_list(const std::string& text, const char* what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = sasv::textio::parse_double(item);
    if (!v) throw CLI::ValidationError(what, "'" + text + "' is not a comma list");
    values.push_back(*v);
  }
  if (values.empty()) throw CLI::ValidationError(what, "empty list");
  return values;
}

sasv::TrainingConfig make_training_config(const TrainArgs& args) {
  sasv::TrainingConfig config;
  config.seed = args.seed;
  config.epochs = args.epochs;
  config.batch_size = args.batch;
  config.learning_rate = args.lr;
  config.hidden_dims.clear();
  for (double d : parse_number_list(args.hidden, "--hidden")) {
    if (d < 1 || d != static_cast<std::size_t>(d))
      throw CLI::ValidationError("--hidden", "dimensions must be positive integers");
    config.hidden_dims.push_back(static_cast<std::size_t>(d));
  }
  auto ratios = parse_number_list(args.ratios, "--ratios");
  if (ratios.size() != 3)
    throw CLI::ValidationError("--ratios", "expected target,nontarget,spoof");
  config.target_ratio = ratios[0];
  config.nontarget_ratio = ratios[1];
  config.spoof_ratio = ratios[2];
  config.early_stop_patience = args.patience;
  return config;
}

void run_backend_train(const TrainArgs& args) {
  auto labels_in = open_input(args.labels);
  std::vector<sasv::TrainingLabel> labels = sasv::parse_training_labels(labels_in);
  sasv::EmbeddingStore spk = load_embeddings(args.spk_emb);
  std::optional<sasv::EmbeddingStore> spk_test;
  if (!args.spk_test_emb.empty()) spk_test = load_embeddings(args.spk_test_emb);
  sasv::EmbeddingStore cm = load_embeddings(args.cm_emb);
  sasv::StoreSet stores{&spk, spk_test ? &*spk_test : &spk, &cm};

  sasv::TrainingConfig config = make_training_config(args);
  sasv::TrainingTrialSet trials = sasv::build_training_trials(labels, config);
  for (const auto& note : trials.notes) std::cout << "note: " << note << '\n';
  std::cout << "pools: " << trials.target_pool << " target, " << trials.nontarget_pool
            << " nontarget, " << trials.spoof_pool << " spoof; sampled "
            << trials.examples.size() << " training trials\n";

  std::vector<sasv::TrainingExample> train = trials.examples;
  std::vector<sasv::TrainingExample> holdout;
  if (config.early_stop_patience > 0 && args.holdout_frac > 0) {
    sasv::Rng rng(config.seed ^ 0x5a5a5a5a5a5a5a5aULL);
    rng.shuffle(train);
    const std::size_t n_hold =
        static_cast<std::size_t>(args.holdout_frac * static_cast<double>(train.size()));
    holdout.assign(train.end() - static_cast<std::ptrdiff_t>(n_hold), train.end());
    train.resize(train.size() - n_hold);
  }

  sasv::TrainResult result = sasv::mlp_train(train, stores, config, holdout);
  std::cout << "loss: initial " << sasv::textio::format_double(result.initial_loss);
  if (!result.epoch_losses.empty())
    std::cout << ", final " << sasv::textio::format_double(result.epoch_losses.back());
  std::cout << " after " << result.epochs_run << " epochs";
  if (config.early_stop_patience > 0)
    std::cout << " (kept epoch " << result.best_epoch << ")";
  std::cout << '\n';

  auto out = open_output(args.out);
  result.model.write(out);
  finish_output(out, args.out);
  std::cout << "wrote " << args.out << '\n';
}

struct BackendScoreArgs {
  std::string model, protocol, enroll, spk_emb, spk_test_emb, cm_emb, out;
  std::string team, split = "dev", out_dir = ".";
};

void run_backend_score(const BackendScoreArgs& args) {
  auto model_in = open_input(args.model);
  sasv::MlpBackend model = sasv::MlpBackend::read(model_in);
  sasv::TrialProtocol protocol = load_protocol(args.protocol, args.enroll);
  sasv::EmbeddingStore spk = load_embeddings(args.spk_emb);
  std::optional<sasv::EmbeddingStore> spk_test;
  if (!args.spk_test_emb.empty()) spk_test = load_embeddings(args.spk_test_emb);
  sasv::EmbeddingStore cm = load_embeddings(args.cm_emb);
  sasv::StoreSet stores{&spk, spk_test ? &*spk_test : &spk, &cm};

  sasv::ScoreSet scores = sasv::backend_score(model, protocol, stores);
  const fs::path path = resolve_scores_path(args.out, args.team, args.split, args.out_dir);
  auto out = open_output(path);
  sasv::write_scores(out, scores);
  finish_output(out, path);
  std::cout << "wrote " << path.string() << " (" << scores.size() << " trials)\n";
}

// --------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out_dir;
  std::size_t n_target = 1000, n_nontarget = 1000, n_spoof = 1000;
  double dprime_sv = 2.0, dprime_spf = 2.0;
  std::uint64_t seed = 1;
  std::size_t n_speakers = 8, n_enroll = 3;
  std::size_t spk_dim = 8, cm_dim = 4;
  std::size_t n_train_bona = 8, n_train_spoof = 8;
};

sasv::SynthSpec make_synth_spec(const SynthArgs& args) {
  sasv::SynthSpec spec;
  spec.n_target = args.n_target;
  spec.n_nontarget = args.n_nontarget;
  spec.n_spoof = args.n_spoof;
  spec.dprime_sv = args.dprime_sv;
  spec.dprime_spf = args.dprime_spf;
  spec.seed = args.seed;
  spec.n_speakers = args.n_speakers;
  spec.n_enroll_per_speaker = args.n_enroll;
  spec.spk_dim = args.spk_dim;
  spec.cm_dim = args.cm_dim;
  spec.n_train_bonafide_per_speaker = args.n_train_bona;
  spec.n_train_spoof_per_speaker = args.n_train_spoof;
  return spec;
}

template <typename WriteFn>
void write_file(const fs::path& dir, const char* name, WriteFn&& write_fn) {
  const fs::path path = dir / name;
  auto out = open_output(path);
  write_fn(out);
  finish_output(out, path);
  std::cout << "wrote " << path.string() << '\n';
}

void run_synth_scores(const SynthArgs& args) {
  sasv::SynthScores data = sasv::synth_scores(make_synth_spec(args));
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  write_file(dir, "protocol.txt",
             [&](std::ostream& o) { sasv::write_protocol(o, data.protocol.trials); });
  write_file(dir, "enrollment.txt",
             [&](std::ostream& o) { sasv::write_enrollment_map(o, data.protocol.enrollment); });
  write_file(dir, "scores.txt", [&](std::ostream& o) { sasv::write_scores(o, data.scores); });
}

void run_synth_embeddings(const SynthArgs& args) {
  sasv::SynthEmbeddings data = sasv::synth_embeddings(make_synth_spec(args));
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  write_file(dir, "protocol.txt",
             [&](std::ostream& o) { sasv::write_protocol(o, data.protocol.trials); });
  write_file(dir, "enrollment.txt",
             [&](std::ostream& o) { sasv::write_enrollment_map(o, data.protocol.enrollment); });
  write_file(dir, "speaker_embeddings.txt",
             [&](std::ostream& o) { sasv::write_embeddings(o, data.speaker); });
  write_file(dir, "cm_embeddings.txt",
             [&](std::ostream& o) { sasv::write_embeddings(o, data.cm); });
  write_file(dir, "train_labels.txt",
             [&](std::ostream& o) { sasv::write_training_labels(o, data.train_labels); });
  write_file(dir, "asv_scores.txt",
             [&](std::ostream& o) { sasv::write_scores(o, data.asv_scores); });
  write_file(dir, "cm_scores.txt",
             [&](std::ostream& o) { sasv::write_scores(o, data.cm_scores); });
}

void add_synth_options(CLI::App* cmd, SynthArgs& args, bool embeddings) {
  cmd->add_option("--out-dir", args.out_dir, "output directory")->required();
  cmd->add_option("--n-target", args.n_target, "number of target trials");
  cmd->add_option("--n-nontarget", args.n_nontarget, "number of nontarget trials");
  cmd->add_option("--n-spoof", args.n_spoof, "number of spoof trials");
  cmd->add_option("--dprime-sv", args.dprime_sv, "target/nontarget separability d'");
  cmd->add_option("--dprime-spf", args.dprime_spf, "target/spoof separability d'");
  cmd->add_option("--seed", args.seed, "generator seed");
  cmd->add_option("--n-speakers", args.n_speakers, "number of speakers");
  cmd->add_option("--n-enroll", args.n_enroll, "enrollment utterances per speaker");
  if (embeddings) {
    cmd->add_option("--spk-dim", args.spk_dim, "speaker embedding dimension");
    cmd->add_option("--cm-dim", args.cm_dim, "CM embedding dimension");
    cmd->add_option("--n-train-bona", args.n_train_bona,
                    "bona fide training utterances per speaker");
    cmd->add_option("--n-train-spoof", args.n_train_spoof,
                    "spoofed training utterances per speaker");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SASV evaluation and fusion toolkit"};
  app.require_subcommand(1);

  ValidateArgs validate_args;
  CLI::App* cmd_validate = app.add_subcommand(
      "validate", "check that a score file covers a protocol exactly");
  cmd_validate->add_option("--protocol", validate_args.protocol, "protocol file")->required();
  cmd_validate->add_option("--scores", validate_args.scores, "score file")->required();
  cmd_validate->set_config("--config");
  cmd_validate->callback([&] { run_validate(validate_args); });

  EvaluateArgs eval_args;
  CLI::App* cmd_evaluate =
      app.add_subcommand("evaluate", "compute SASV/SV/SPF EERs from scored trials");
  cmd_evaluate->add_option("--protocol", eval_args.protocol, "protocol file");
  cmd_evaluate->add_option("--scores", eval_args.scores, "score file");
  cmd_evaluate->add_option("--dev-protocol", eval_args.dev_protocol, "dev protocol file");
  cmd_evaluate->add_option("--dev-scores", eval_args.dev_scores, "dev score file");
  cmd_evaluate->add_option("--eval-protocol", eval_args.eval_protocol, "eval protocol file");
  cmd_evaluate->add_option("--eval-scores", eval_args.eval_scores, "eval score file");
  cmd_evaluate->add_option("--team", eval_args.team,
                           "write results_{team}.csv (dev+eval mode)");
  cmd_evaluate->add_option("--out-dir", eval_args.out_dir, "directory for results file");
  cmd_evaluate->add_flag("--per-attack", eval_args.per_attack, "per-attack breakdown");
  cmd_evaluate->set_config("--config");
  cmd_evaluate->callback([&] { run_evaluate(eval_args); });

  FuseArgs fuse_args;
  CLI::App* cmd_fuse =
      app.add_subcommand("fuse", "score-sum fusion of ASV and CM score files");
  cmd_fuse->add_option("--asv", fuse_args.asv, "ASV score file")->required();
  cmd_fuse->add_option("--cm", fuse_args.cm, "CM score file")->required();
  cmd_fuse->add_option("--out", fuse_args.out, "fused score file");
  cmd_fuse->add_option("--normalizer", fuse_args.normalizer, "none|minmax")
      ->default_str("none");
  cmd_fuse->add_option("--fit-asv", fuse_args.fit_asv,
                       "reference scores for the ASV min-max fit (default: --asv)");
  cmd_fuse->add_option("--fit-cm", fuse_args.fit_cm,
                       "reference scores for the CM min-max fit (default: --cm)");
  cmd_fuse->add_option("--team", fuse_args.team, "team name for challenge-style naming");
  cmd_fuse->add_option("--split", fuse_args.split, "dev|eval (for --team naming)");
  cmd_fuse->add_option("--out-dir", fuse_args.out_dir, "directory for --team naming");
  cmd_fuse->set_config("--config");
  cmd_fuse->callback([&] {
    print_config(cmd_fuse);
    run_fuse(fuse_args);
  });

  CLI::App* cmd_backend =
      app.add_subcommand("backend", "embedding-fusion MLP backend");
  cmd_backend->require_subcommand(1);

  TrainArgs train_args;
  CLI::App* cmd_train = cmd_backend->add_subcommand("train", "train the MLP backend");
  cmd_train->add_option("--labels", train_args.labels,
                        "training labels (utterance speaker attack)")->required();
  cmd_train->add_option("--spk-emb", train_args.spk_emb, "speaker embeddings")->required();
  cmd_train->add_option("--spk-test-emb", train_args.spk_test_emb,
                        "test-side speaker embeddings (default: --spk-emb)");
  cmd_train->add_option("--cm-emb", train_args.cm_emb, "CM embeddings")->required();
  cmd_train->add_option("--out", train_args.out, "model file")->required();
  cmd_train->add_option("--seed", train_args.seed, "seed");
  cmd_train->add_option("--epochs", train_args.epochs, "training epochs");
  cmd_train->add_option("--batch", train_args.batch, "mini-batch size");
  cmd_train->add_option("--lr", train_args.lr, "learning rate");
  cmd_train->add_option("--hidden", train_args.hidden, "hidden dims, e.g. 256,128,64");
  cmd_train->add_option("--ratios", train_args.ratios,
                        "target,nontarget,spoof sampling ratios (0,0,0 = exhaustive)");
  cmd_train->add_option("--holdout-frac", train_args.holdout_frac,
                        "held-out fraction when --patience > 0");
  cmd_train->add_option("--patience", train_args.patience,
                        "early-stop patience in epochs (0 = off)");
  cmd_train->set_config("--config");
  cmd_train->callback([&] {
    print_config(cmd_train);
    run_backend_train(train_args);
  });

  BackendScoreArgs bscore_args;
  CLI::App* cmd_bscore =
      cmd_backend->add_subcommand("score", "score a protocol with a trained backend");
  cmd_bscore->add_option("--model", bscore_args.model, "model file")->required();
  cmd_bscore->add_option("--protocol", bscore_args.protocol, "protocol file")->required();
  cmd_bscore->add_option("--enroll", bscore_args.enroll, "enrollment map file")->required();
  cmd_bscore->add_option("--spk-emb", bscore_args.spk_emb, "speaker embeddings")->required();
  cmd_bscore->add_option("--spk-test-emb", bscore_args.spk_test_emb,
                         "test-side speaker embeddings (default: --spk-emb)");
  cmd_bscore->add_option("--cm-emb", bscore_args.cm_emb, "CM embeddings")->required();
  cmd_bscore->add_option("--out", bscore_args.out, "output score file");
  cmd_bscore->add_option("--team", bscore_args.team, "team name for challenge-style naming");
  cmd_bscore->add_option("--split", bscore_args.split, "dev|eval (for --team naming)");
  cmd_bscore->add_option("--out-dir", bscore_args.out_dir, "directory for --team naming");
  cmd_bscore->set_config("--config");
  cmd_bscore->callback([&] {
    print_config(cmd_bscore);
    run_backend_score(bscore_args);
  });

  CLI::App* cmd_synth = app.add_subcommand("synth", "generate synthetic fixtures");
  cmd_synth->require_subcommand(1);

  SynthArgs synth_score_args;
  CLI::App* cmd_synth_scores = cmd_synth->add_subcommand(
      "scores", "protocol + Gaussian scores with known EERs");
  add_synth_options(cmd_synth_scores, synth_score_args, /*embeddings=*/false);
  cmd_synth_scores->set_config("--config");
  cmd_synth_scores->callback([&] {
    print_config(cmd_synth_scores);
    run_synth_scores(synth_score_args);
  });

  SynthArgs synth_emb_args;
  CLI::App* cmd_synth_emb = cmd_synth->add_subcommand(
      "embeddings", "clustered embeddings + training labels + baseline scores");
  add_synth_options(cmd_synth_emb, synth_emb_args, /*embeddings=*/true);
  cmd_synth_emb->set_config("--config");
  cmd_synth_emb->callback([&] {
    print_config(cmd_synth_emb);
    run_synth_embeddings(synth_emb_args);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ExitWith& e) {
    return e.code;
  } catch (const sasv::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
