#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qacgen/augmentor.hpp"
#include "qacgen/classifier.hpp"
#include "qacgen/metrics.hpp"
#include "qacgen/schema.hpp"

namespace qacgen {

// One run, declaratively. Defaults are the published experiment settings.
struct ExperimentConfig {
  std::string task = "imdb";  // builtin id or task spec JSON path
  std::string train_path;     // labeled pool for few-shot sampling (JSONL)
  std::string test_path;      // held-out labeled set (JSONL)
  std::string qa_corpus_path;
  std::string qa_format = "canonical";  // canonical | squad
  std::string unlabeled_path;           // optional, for self-training
  std::string eda_lexicon_path;         // optional, for baseline:eda

  std::string backend = "ngram";
  nlohmann::json backend_params = nlohmann::json::object();
  std::string classifier = "bow";
  nlohmann::json classifier_params = nlohmann::json::object();

  std::string mode = "conda_few_shot";
  std::size_t shots = 8;
  std::size_t n_per_label = 450;
  std::size_t k = 20;
  std::size_t max_new_tokens = 200;
  int qac_epochs = 3;
  int adapt_epochs = 3;
  int classifier_epochs = 4;
  std::size_t batch_size = 32;
  std::vector<std::uint64_t> restart_seeds{13, 42, 77};
  int self_train_iterations = 3;
  bool self_train_reinit = false;
  bool lowercase = true;
  std::size_t threads = 1;
  std::string output_dir = "runs/default";

  // Directory of the file the config was loaded from; relative paths were
  // resolved against it. Not serialized.
  std::filesystem::path base_dir;

  nlohmann::ordered_json to_json() const;
  // Missing keys keep their defaults; unknown keys are a ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& j);
  // Relative paths inside the file resolve against the file's directory.
  static ExperimentConfig load(const std::filesystem::path& path);
  // FNV-1a of the canonical JSON form.
  std::string digest() const;
};

inline const std::vector<std::string>& protocol_modes() {
  static const std::vector<std::string> modes{"conda_few_shot", "conda_zero_shot", "ablation_minus_da",
                                              "ablation_minus_few_shot", "few_shot_only"};
  return modes;
}
// Throws ConfigError unless the mode is a protocol mode or "baseline:<name>".
void check_mode(const std::string& mode);

struct ExperimentData {
  TaskSpec task;
  std::vector<LabeledExample> pool;
  std::vector<LabeledExample> test;
  std::vector<QATriple> qa_corpus;
};

ExperimentData load_experiment_data(const ExperimentConfig& config);

struct SeedScore {
  std::uint64_t seed = 0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
};

struct EvalResult {
  std::string mode;
  std::string task;
  std::vector<SeedScore> per_seed;
  MeanStd micro;
  MeanStd macro;
  std::string config_digest;

  // Recomputes the aggregates from per_seed.
  void aggregate();
  nlohmann::ordered_json to_json() const;
  static EvalResult from_json(const nlohmann::json& j);
};

struct RestartRecord {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::optional<FewShotSet> few_shot;
  std::optional<SyntheticDataset> synthetic;
  std::optional<LeakageReport> leakage;
  std::vector<LabeledExample> training_set;
  int classifier_epochs = 0;
  nlohmann::ordered_json fingerprints = nlohmann::ordered_json::object();
  ClassifierPtr classifier;
  F1Scores scores;
};

struct ProtocolRun {
  EvalResult result;
  std::vector<RestartRecord> restarts;
  std::optional<PipelineState> general_generator;
};

// Per-restart stream seeds derived from the restart seed.
struct RestartSeeds {
  std::uint64_t few_shot, adapt, generation, classifier, augmenter;
  explicit RestartSeeds(std::uint64_t restart_seed);
};

// For every restart seed: resample the few-shot set (all modes but
// zero-shot), run the mode's pipeline, train the classifier
// (classifier_epochs, or update-step parity epochs for few_shot_only), and
// score the test set. Failed restarts are recorded; fewer than two successes
// raise ProtocolError.
ProtocolRun run_protocol(const ExperimentConfig& config, const ExperimentData& data);
ProtocolRun run_protocol(const ExperimentConfig& config);

struct SelfTrainIteration {
  int iteration = 0;  // 0 = the incoming state, before any pseudo-labeling
  std::size_t training_size = 0;
  std::map<std::string, std::size_t> pseudo_labels;
  std::optional<F1Scores> scores;
};

struct SelfTrainResult {
  ClassifierPtr state;
  std::vector<SelfTrainIteration> iterations;
};

struct SelfTrainOptions {
  int iterations = 3;
  int epochs = 4;
  std::uint64_t seed = 0;
  bool reinitialize = false;
  const std::vector<LabeledExample>* eval_set = nullptr;
  // Sees each iteration's exact training multiset.
  std::function<void(int iteration, const std::vector<LabeledExample>&)> observer;
};

// Each iteration pseudo-labels every unlabeled text with the current
// classifier and trains on labeled + pseudo-labeled, with no filtering.
SelfTrainResult self_train(ClassifierPtr state, std::span<const LabeledExample> labeled,
                           std::span<const std::string> unlabeled, const SelfTrainOptions& options);

}  // namespace qacgen
