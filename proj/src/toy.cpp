#include "qacgen/toy.hpp"

#include <set>

#include "qacgen/qacformat.hpp"
#include "qacgen/rng.hpp"
#include "qacgen/util.hpp"

namespace qacgen::toy {

namespace {

std::vector<std::string> make_words(Rng& rng, std::size_t n, std::set<std::string>& taken) {
  std::vector<std::string> out;
  while (out.size() < n) {
    const std::size_t len = 3 + rng.below(4);
    std::string w;
    for (std::size_t i = 0; i < len; ++i) w.push_back(static_cast<char>('a' + rng.below(26)));
    if (taken.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

std::string make_text(Rng& rng, const Options& o, const std::vector<std::string>* class_words,
                      const std::vector<std::string>& neutral) {
  const std::size_t n = o.min_words + rng.below(o.max_words - o.min_words + 1);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) {
    if (class_words && rng.uniform() < o.class_word_prob) {
      words.push_back((*class_words)[rng.below(class_words->size())]);
    } else {
      words.push_back(neutral[rng.below(neutral.size())]);
    }
  }
  return join(words, " ") + ".";
}

}  // namespace

Fixture make_fixture(const Options& o) {
  TaskSpec task("toy", {"pos", "neg"}, "is this text good or bad?", {{"pos", "good"}, {"neg", "bad"}});
  Fixture f{task, {}, {}, {}, {}, {}, {}};
  Rng rng(o.seed);
  // Reserved strings never appear as grammar words.
  std::set<std::string> taken{"good", "bad", "question", "answer", "context", "maybe", "mixed"};
  for (std::size_t c = 0; c < task.classes().size(); ++c) {
    f.class_words.push_back(make_words(rng, o.class_vocabulary, taken));
  }
  f.neutral_words = make_words(rng, o.neutral_vocabulary, taken);

  auto text_of = [&](std::size_t c) { return make_text(rng, o, &f.class_words[c], f.neutral_words); };
  for (std::size_t c = 0; c < task.classes().size(); ++c) {
    for (std::size_t i = 0; i < o.pool_per_class; ++i) f.pool.push_back({text_of(c), task.classes()[c]});
  }
  for (std::size_t i = 0; i < o.test_per_class; ++i) {
    for (std::size_t c = 0; c < task.classes().size(); ++c) f.test.push_back({text_of(c), task.classes()[c]});
  }
  for (std::size_t i = 0; i < o.unlabeled; ++i) f.unlabeled.push_back(text_of(i % task.classes().size()));

  const std::vector<std::string> questions{"how was the day?", "what was the mood?", "how did it feel?",
                                           "was it nice?"};
  const std::vector<std::string> other_answers{"maybe", "mixed"};
  const auto neutral_count = static_cast<std::size_t>(o.qa_neutral_share * static_cast<double>(o.qa_triples));
  for (std::size_t i = 0; i < o.qa_triples; ++i) {
    const auto& q = questions[rng.below(questions.size())];
    if (i < neutral_count) {
      f.qa_corpus.push_back({q, other_answers[rng.below(other_answers.size())],
                             make_text(rng, o, nullptr, f.neutral_words)});
    } else {
      const std::size_t c = i % task.classes().size();
      f.qa_corpus.push_back({q, task.verbalize(task.classes()[c]), text_of(c)});
    }
  }
  return f;
}

ExperimentConfig experiment_config(const std::string& mode) {
  ExperimentConfig c;
  c.task = "task.json";
  c.train_path = "pool.jsonl";
  c.test_path = "test.jsonl";
  c.qa_corpus_path = "qa.jsonl";
  c.unlabeled_path = "unlabeled.jsonl";
  c.backend = "ngram";
  c.backend_params = {{"order", 16}, {"alpha", 1e-4}};
  c.mode = mode;
  c.shots = 8;
  c.n_per_label = 50;
  c.k = 5;
  c.max_new_tokens = 60;
  c.output_dir = "out";
  return c;
}

void write_fixture(const Fixture& f, const std::filesystem::path& dir) {
  write_file_atomic(dir / "task.json", f.task.to_json().dump(2) + "\n");
  write_file_atomic(dir / "pool.jsonl", labeled_to_jsonl(f.pool));
  write_file_atomic(dir / "test.jsonl", labeled_to_jsonl(f.test));
  std::string unlabeled;
  for (const auto& t : f.unlabeled) unlabeled += nlohmann::json({{"text", t}}).dump() + "\n";
  write_file_atomic(dir / "unlabeled.jsonl", unlabeled);
  write_file_atomic(dir / "qa.jsonl", canonical_jsonl(f.qa_corpus));
  write_file_atomic(dir / "config.json", experiment_config("conda_few_shot").to_json().dump(2) + "\n");
}

}  // namespace qacgen::toy
