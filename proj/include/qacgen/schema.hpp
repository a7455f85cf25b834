#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qacgen {

inline constexpr const char* kQuestionMarker = "question:";
inline constexpr const char* kAnswerMarker = "answer:";
inline constexpr const char* kContextMarker = "context:";

struct QATriple {
  std::string question;
  std::string answer;
  std::string context;

  bool operator==(const QATriple&) const = default;
};

// Returns a description of the first violated invariant, or nullopt when the
// triple is valid: each field non-empty after trimming, and no line of any
// field starts with a reserved marker (case-insensitive, leading blanks
// ignored).
std::optional<std::string> validate(const QATriple& triple);

struct LabeledExample {
  std::string text;
  std::string label;

  bool operator==(const LabeledExample&) const = default;
};

class TaskSpec {
 public:
  // Normalizes classes and verbalized labels to lowercase and checks every
  // invariant; throws PreconditionError on violation.
  TaskSpec(std::string task_id, std::vector<std::string> classes, std::string question,
           std::map<std::string, std::string> verbalizer);

  const std::string& task_id() const { return task_id_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::string& question() const { return question_; }
  const std::map<std::string, std::string>& verbalizer() const { return verbalizer_; }

  bool has_class(const std::string& label) const;
  // Position of `label` in classes(); throws NotFoundError.
  std::size_t class_index(const std::string& label) const;
  // Throws NotFoundError for labels outside the class set.
  const std::string& verbalize(const std::string& label) const;

  nlohmann::ordered_json to_json() const;
  static TaskSpec from_json(const nlohmann::json& j);

 private:
  std::string task_id_;
  std::vector<std::string> classes_;
  std::string question_;
  std::map<std::string, std::string> verbalizer_;
};

struct FewShotSet {
  std::string task_id;
  std::vector<LabeledExample> examples;
  std::size_t shots_per_label = 8;
};

struct SampleProvenance {
  std::string prompt;
  std::uint64_t seed = 0;
  std::string backend;
  int attempts = 1;
};

struct SyntheticDataset {
  std::string task_id;
  std::vector<LabeledExample> samples;
  std::vector<SampleProvenance> provenance;  // parallel to samples
};

std::vector<std::string> builtin_task_ids();
// Table of dataset questions and verbalized labels for imdb, yelp, sst2,
// yahoo, nyt and agnews. Throws NotFoundError naming the known ids.
TaskSpec builtin_task(const std::string& task_id);

// Per-class uniform sampling without replacement. Duplicate texts within a
// class are collapsed to their first occurrence before sampling. Output is
// grouped by class in task class order. Throws PreconditionError naming the first
// class with fewer than `shots` distinct texts.
FewShotSet sample_few_shot(std::span<const LabeledExample> pool, const TaskSpec& spec,
                           std::size_t shots, std::uint64_t seed);

// JSON-lines {"text": ..., "label": ...}. Labels are lowercased on read.
std::vector<LabeledExample> read_labeled_jsonl(const std::filesystem::path& path);
std::string labeled_to_jsonl(std::span<const LabeledExample> examples);

// Accepts either a builtin id or a path to a task spec JSON document.
TaskSpec load_task(const std::string& id_or_path);

}  // namespace qacgen
