#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qacgen/schema.hpp"

namespace qacgen {

// One serialized (question, answer, context) triple:
//   "question: {q}\nanswer: {a}\ncontext: {c}"
struct QacDocument {
  std::string text;
  bool operator==(const QacDocument&) const = default;
};

struct SerializeOptions {
  bool lowercase = true;
};

// Field normalization applied by serialize_qac: optional ASCII lowercasing,
// newline runs flattened to one space, surrounding whitespace trimmed.
QATriple normalize(const QATriple& triple, SerializeOptions opts = {});

// Throws SerializationError when the triple violates its invariants.
QacDocument serialize_qac(const QATriple& triple, SerializeOptions opts = {});

// Inverse of serialize_qac. The question and answer may wrap over several
// lines (joined with a space); the context runs to the end of the document.
// Throws ParseError carrying the 1-based offending line.
QATriple parse_qac(const QacDocument& doc);

// Two-marker prompt "question: {q}\nanswer: {a}\ncontext:" (no trailing space).
std::string qa_prompt(const std::string& question, const std::string& answer,
                      SerializeOptions opts = {});

// (spec.question, verbalizer[label], text). Throws CastError.
QATriple cast_example(const LabeledExample& ex, const TaskSpec& spec);
std::vector<QacDocument> cast_dataset(const FewShotSet& few_shot, const TaskSpec& spec,
                                      SerializeOptions opts = {});

struct RejectedLine {
  int line = 0;
  std::string reason;
};

struct IngestResult {
  std::vector<QATriple> triples;
  std::size_t skipped_unanswerable = 0;
  std::vector<RejectedLine> rejected;
  std::vector<std::string> warnings;

  nlohmann::ordered_json stats_json() const;
};

// SQuAD v1.1 layout: data[] -> paragraphs[] -> qas[] -> answers[].text.
// First answer wins; questions with no answers are skipped and counted.
// Structural errors throw IngestError with a JSON path.
IngestResult ingest_squad(const nlohmann::json& root);

// JSON-lines {"question","answer","context"}; invalid lines are rejected by
// line number. Throws IoError when the file cannot be read.
IngestResult ingest_canonical(const std::filesystem::path& path);

std::string canonical_jsonl(std::span<const QATriple> triples);

// Fine-tuning corpus file: each document followed by an optional
// end-of-text line and a blank line.
std::string write_corpus(std::span<const QacDocument> docs,
                         const std::optional<std::string>& end_of_text);
std::vector<QacDocument> read_corpus(std::string_view text,
                                     const std::optional<std::string>& end_of_text);

}  // namespace qacgen
