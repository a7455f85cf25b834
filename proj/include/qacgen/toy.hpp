#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qacgen/harness.hpp"
#include "qacgen/schema.hpp"

namespace qacgen::toy {

// Two-class toy task. Texts of each class come from their own grammar: a
// sequence of pseudo-words where each position draws a class word with
// probability class_word_prob and a shared neutral word otherwise. The QA
// corpus pairs grammar contexts with the answers "good"/"bad" (plus a
// share of neutral contexts with other answers), so a general context
// generator can learn class vocabulary the few-shot set never shows.
struct Options {
  std::uint64_t seed = 2024;
  std::size_t class_vocabulary = 120;
  std::size_t neutral_vocabulary = 300;
  std::size_t min_words = 6;
  std::size_t max_words = 10;
  double class_word_prob = 0.5;
  std::size_t pool_per_class = 100;
  std::size_t test_per_class = 200;
  std::size_t unlabeled = 20;
  std::size_t qa_triples = 200;
  double qa_neutral_share = 0.2;
};

struct Fixture {
  TaskSpec task;
  std::vector<LabeledExample> pool;
  std::vector<LabeledExample> test;
  std::vector<std::string> unlabeled;
  std::vector<QATriple> qa_corpus;
  std::vector<std::vector<std::string>> class_words;  // parallel to task.classes()
  std::vector<std::string> neutral_words;
};

Fixture make_fixture(const Options& options = {});

// Config for the desk-scale experiment: 8 shots, 50 samples per label, k=5,
// 60 new tokens, order-16 n-gram generator.
ExperimentConfig experiment_config(const std::string& mode);

// Writes task.json, pool.jsonl, test.jsonl, unlabeled.jsonl, qa.jsonl and
// config.json (mode conda_few_shot, output_dir "out") into `dir`.
void write_fixture(const Fixture& fixture, const std::filesystem::path& dir);

}  // namespace qacgen::toy
