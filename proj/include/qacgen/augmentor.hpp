#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qacgen/genbackend.hpp"
#include "qacgen/qacformat.hpp"
#include "qacgen/schema.hpp"

namespace qacgen {

enum class Stage { raw, qac_tuned, adapted };
std::string to_string(Stage stage);

// Stage-tagged generator: raw (pretrained), qac_tuned (general context
// generator) or adapted (target-task context generator).
struct PipelineState {
  Stage stage = Stage::raw;
  BackendPtr backend;
  std::vector<std::pair<Stage, std::string>> fingerprints;
  std::size_t qa_corpus_size = 0;
  std::size_t adaptation_docs = 0;
  SerializeOptions serialize;

  static PipelineState from_raw(BackendPtr backend, SerializeOptions serialize = {});
  const std::string& fingerprint(Stage s) const;
  nlohmann::ordered_json to_json() const;
};

// Serializes the QA corpus and fine-tunes a raw backend on it.
PipelineState build_general_generator(const PipelineState& raw, std::span<const QATriple> qa_corpus,
                                      int epochs = 3, std::uint64_t seed = 0);

// Casts the few-shot set to QAC documents and fine-tunes a qac_tuned state further.
PipelineState adapt_to_task(const PipelineState& state, const FewShotSet& few_shot,
                            const TaskSpec& spec, int epochs = 3, std::uint64_t seed = 0);

inline constexpr int kMaxGenerationAttempts = 10;

// Everything after the context marker up to the first end-of-text token,
// line starting with "question:", or blank line; whitespace trimmed.
std::string extract_context(std::string_view raw, std::string_view end_of_text = "<|endoftext|>");

struct GeneratedSample {
  LabeledExample example;
  SampleProvenance provenance;
};

// Sample `sample_index` of class `class_index`. Its seed is
// mix64(policy.seed, class_index, sample_index); attempt a > 1 uses
// mix64(seed, a). Throws GenerationError after kMaxGenerationAttempts empty
// extractions.
GeneratedSample generate_one(const PipelineState& state, const TaskSpec& spec,
                             std::size_t class_index, std::size_t sample_index,
                             const SamplingPolicy& policy);

// n_per_label samples for every class, grouped by class in task class order. Accepts
// qac_tuned (zero-shot, no-adaptation ablation) or adapted states. `threads`
// only changes scheduling, never the result.
SyntheticDataset generate_synthetic(const PipelineState& state, const TaskSpec& spec,
                                    std::size_t n_per_label, const SamplingPolicy& policy,
                                    std::size_t threads = 1);

// Contexts for (question, answer) pairs, e.g. to augment a QA dev set.
// Pair j uses the seed mix64(policy.seed, 0, j); outputs failing the triple
// invariants are retried like empty ones.
std::vector<QATriple> generate_for_qa_pairs(const PipelineState& state,
                                            std::span<const std::pair<std::string, std::string>> pairs,
                                            const SamplingPolicy& policy);

// Synthetic samples first, then the few-shot examples. No deduplication.
std::vector<LabeledExample> assemble_training_set(const SyntheticDataset& synthetic,
                                                  const FewShotSet* few_shot);

struct LeakageReport {
  std::map<std::string, std::size_t> per_class;          // samples containing their own label word
  std::map<std::string, std::size_t> per_class_samples;  // samples per class
  std::size_t total = 0;
  std::size_t samples = 0;
  std::size_t duplicates = 0;  // samples whose text repeats an earlier sample

  double duplicate_rate() const { return samples ? static_cast<double>(duplicates) / samples : 0.0; }
  nlohmann::ordered_json to_json() const;
};

LeakageReport leakage_report(const SyntheticDataset& synthetic, const TaskSpec& spec);

// {"text","label","prompt","seed","backend","attempts"} per line.
std::string synthetic_to_jsonl(const SyntheticDataset& synthetic);
SyntheticDataset synthetic_from_jsonl(const std::filesystem::path& path, const std::string& task_id);

}  // namespace qacgen
