#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "qacgen/augmentor.hpp"
#include "qacgen/errors.hpp"
#include "qacgen/ngram_backend.hpp"
#include "qacgen/rng.hpp"
#include "qacgen/toy.hpp"
#include "qacgen/util.hpp"

using namespace qacgen;

namespace {

// Returns a canned continuation chosen by the sampling seed, so retry logic
// can be driven deterministically.
class ScriptedBackend final : public GeneratorBackend {
 public:
  explicit ScriptedBackend(std::function<std::string(std::uint64_t)> script) : script_(std::move(script)) {}
  std::string kind() const override { return "scripted"; }
  BackendPtr fine_tune(std::span<const QacDocument>, int, std::uint64_t) const override {
    return std::make_shared<ScriptedBackend>(script_);
  }
  std::vector<TokenId> tokenize(std::string_view) const override { return {}; }
  std::vector<double> next_token_distribution(std::span<const TokenId>) const override { return {1.0}; }
  const std::vector<std::string>& vocabulary() const override { return vocab_; }
  std::optional<std::string> end_of_text_token() const override { return "<|endoftext|>"; }
  std::string fingerprint() const override { return "scripted"; }
  std::string sample(std::string_view, const SamplingPolicy& policy) const override {
    return script_(policy.seed);
  }
  nlohmann::json to_json() const override { return {{"kind", "scripted"}}; }

 private:
  std::function<std::string(std::uint64_t)> script_;
  std::vector<std::string> vocab_{"x"};
};

const toy::Fixture& fixture() {
  static const toy::Fixture f = toy::make_fixture();
  return f;
}

PipelineState toy_general() {
  auto raw = PipelineState::from_raw(std::make_shared<NGramBackend>(16, 1e-4));
  return build_general_generator(raw, fixture().qa_corpus, 3, 0);
}

SamplingPolicy toy_policy(std::uint64_t seed) {
  SamplingPolicy p;
  p.k = 5;
  p.max_new_tokens = 60;
  p.seed = seed;
  return p;
}

SyntheticDataset fake_synthetic(const std::string& task, const TaskSpec& spec, std::size_t n) {
  SyntheticDataset s{task, {}, {}};
  for (const auto& c : spec.classes()) {
    for (std::size_t i = 0; i < n; ++i) {
      s.samples.push_back({c + " sample " + std::to_string(i), c});
      s.provenance.push_back({});
    }
  }
  return s;
}

}  // namespace

TEST(Stages, TransitionsAreEnforced) {
  auto raw = PipelineState::from_raw(std::make_shared<NGramBackend>(2, 1.0));
  const auto& spec = fixture().task;
  auto few = sample_few_shot(fixture().pool, spec, 8, 1);
  EXPECT_THROW(adapt_to_task(raw, few, spec), StateError);
  EXPECT_THROW(generate_synthetic(raw, spec, 1, toy_policy(1)), StateError);
  EXPECT_THROW(raw.fingerprint(Stage::adapted), StateError);

  auto general = build_general_generator(raw, fixture().qa_corpus);
  EXPECT_EQ(general.stage, Stage::qac_tuned);
  EXPECT_EQ(general.qa_corpus_size, fixture().qa_corpus.size());
  EXPECT_THROW(build_general_generator(general, fixture().qa_corpus), StateError);

  auto adapted = adapt_to_task(general, few, spec);
  EXPECT_EQ(adapted.stage, Stage::adapted);
  EXPECT_EQ(adapted.adaptation_docs, 16u);
  EXPECT_THROW(adapt_to_task(adapted, few, spec), StateError);
  EXPECT_EQ(adapted.fingerprint(Stage::raw), raw.fingerprint(Stage::raw));
  EXPECT_EQ(adapted.fingerprint(Stage::qac_tuned), general.backend->fingerprint());
  EXPECT_NE(adapted.fingerprint(Stage::adapted), adapted.fingerprint(Stage::qac_tuned));
  // Adapting never mutates the general generator.
  EXPECT_EQ(general.backend->fingerprint(), general.fingerprint(Stage::qac_tuned));

  FewShotSet other = few;
  other.task_id = "imdb";
  EXPECT_THROW(adapt_to_task(general, other, spec), PreconditionError);
  EXPECT_THROW(build_general_generator(raw, {}), PreconditionError);
}

TEST(ExtractContext, WorkedExamples) {
  EXPECT_EQ(extract_context("  the movie was great\nquestion: x"), "the movie was great");
  EXPECT_EQ(extract_context("line one\nline two\n\nquestion: more"), "line one\nline two");
  EXPECT_EQ(extract_context("\n  text"), "text");
  EXPECT_EQ(extract_context("abc<|endoftext|>def"), "abc");
  EXPECT_EQ(extract_context("QUESTION: foo"), "");
  EXPECT_EQ(extract_context("plain"), "plain");
  EXPECT_EQ(extract_context("one\n   \ntwo"), "one");
}

TEST(ExtractContext, IdempotentAndNeverLonger) {
  const std::vector<std::string> pieces{"a", "b", " ", "\n", "\n\n", "question:", "Question: ", "<|endoftext|>", "ctx"};
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    for (std::size_t j = 0, n = rng.below(12); j < n; ++j) s += pieces[rng.below(pieces.size())];
    auto once = extract_context(s);
    EXPECT_LE(once.size(), s.size());
    EXPECT_EQ(extract_context(once), once) << '[' << s << ']';
    EXPECT_EQ(once.find("<|endoftext|>"), std::string::npos);
  }
}

TEST(Generation, TemplatePromptAndProvenance) {
  const auto& spec = fixture().task;
  auto adapted = adapt_to_task(toy_general(), sample_few_shot(fixture().pool, spec, 8, 3), spec);
  auto synth = generate_synthetic(adapted, spec, 5, toy_policy(7));
  ASSERT_EQ(synth.samples.size(), 10u);
  ASSERT_EQ(synth.provenance.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& label = spec.classes()[i / 5];
    EXPECT_EQ(synth.samples[i].label, label);
    EXPECT_FALSE(synth.samples[i].text.empty());
    EXPECT_EQ(synth.provenance[i].prompt, "question: " + spec.question() + "\nanswer: " + spec.verbalize(label) + "\ncontext:");
    EXPECT_EQ(synth.provenance[i].backend, "ngram:" + adapted.fingerprint(Stage::adapted));
    EXPECT_GE(synth.provenance[i].attempts, 1);
    EXPECT_FALSE(validate({spec.question(), spec.verbalize(label), synth.samples[i].text}).has_value());
  }
}

TEST(Generation, CardinalityAndOrderIndependence) {
  const auto& spec = fixture().task;
  auto general = toy_general();
  auto policy = toy_policy(21);
  auto serial = generate_synthetic(general, spec, 7, policy, 1);
  auto parallel = generate_synthetic(general, spec, 7, policy, 4);
  ASSERT_EQ(serial.samples.size(), 14u);
  EXPECT_EQ(serial.samples, parallel.samples);
  for (std::size_t c = 2; c-- > 0;) {
    for (std::size_t i = 7; i-- > 0;) {
      auto one = generate_one(general, spec, c, i, policy);
      EXPECT_EQ(one.example, serial.samples[c * 7 + i]);
      EXPECT_EQ(one.provenance.seed, serial.provenance[c * 7 + i].seed);
    }
  }
  EXPECT_THROW(generate_synthetic(general, spec, 0, policy), PreconditionError);
  auto different = generate_synthetic(general, spec, 7, toy_policy(22));
  EXPECT_NE(different.samples, serial.samples);
}

TEST(Generation, RetriesUseDerivedSeeds) {
  const std::uint64_t base = 5;
  const auto first = mix64(base, 0, 0);
  auto backend = std::make_shared<ScriptedBackend>([first](std::uint64_t seed) {
    return seed == first ? std::string("\n\nquestion: nothing") : std::string(" usable text\n\nquestion:");
  });
  auto state = build_general_generator(PipelineState::from_raw(backend), fixture().qa_corpus);
  auto one = generate_one(state, fixture().task, 0, 0, toy_policy(base));
  EXPECT_EQ(one.example.text, "usable text");
  EXPECT_EQ(one.provenance.attempts, 2);
  EXPECT_EQ(one.provenance.seed, mix64(first, 2));

  auto dead = build_general_generator(
      PipelineState::from_raw(std::make_shared<ScriptedBackend>([](std::uint64_t) { return std::string("<|endoftext|>"); })),
      fixture().qa_corpus);
  EXPECT_THROW(generate_one(dead, fixture().task, 0, 0, toy_policy(base)), GenerationError);
}

TEST(Generation, QaPairsProduceValidTriples) {
  auto general = toy_general();
  std::vector<std::pair<std::string, std::string>> pairs{{"Is this text good or bad?", "good"},
                                                         {"is this text good or bad?", "bad"}};
  auto triples = generate_for_qa_pairs(general, pairs, toy_policy(4));
  ASSERT_EQ(triples.size(), 2u);
  EXPECT_EQ(triples[0].question, "is this text good or bad?");
  for (const auto& t : triples) EXPECT_FALSE(validate(t).has_value());
  std::vector<std::pair<std::string, std::string>> bad{{"", "x"}};
  EXPECT_THROW(generate_for_qa_pairs(general, bad, toy_policy(4)), PreconditionError);
}

TEST(Assembly, CountsAndOrdering) {
  const auto& spec = fixture().task;
  auto synth = fake_synthetic("toy", spec, 450);
  auto few = sample_few_shot(fixture().pool, spec, 8, 1);
  auto with = assemble_training_set(synth, &few);
  ASSERT_EQ(with.size(), 916u);
  EXPECT_TRUE(std::equal(synth.samples.begin(), synth.samples.end(), with.begin()));
  EXPECT_TRUE(std::equal(few.examples.begin(), few.examples.end(), with.begin() + 900));
  EXPECT_EQ(assemble_training_set(synth, nullptr).size(), 900u);
  synth.task_id = "imdb";
  EXPECT_THROW(assemble_training_set(synth, &few), AssemblyError);
}

TEST(Leakage, WorkedExample) {
  const auto& spec = fixture().task;
  SyntheticDataset s{"toy",
                     {{"Good stuff", "pos"}, {"bad", "pos"}, {"so bad", "neg"}, {"good", "neg"}, {"Good stuff", "pos"}},
                     {}};
  auto r = leakage_report(s, spec);
  EXPECT_EQ(r.per_class.at("pos"), 2u);
  EXPECT_EQ(r.per_class.at("neg"), 1u);
  EXPECT_EQ(r.total, 3u);
  EXPECT_EQ(r.samples, 5u);
  EXPECT_EQ(r.duplicates, 1u);
  EXPECT_DOUBLE_EQ(r.duplicate_rate(), 0.2);
}

TEST(Leakage, MatchesBruteForce) {
  const auto& spec = fixture().task;
  const std::vector<std::string> words{"good", "GOOD", "bad", "Bad", "goodness", "neutral", "go od", "x"};
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    SyntheticDataset s{"toy", {}, {}};
    for (std::size_t i = 0, n = rng.below(30); i < n; ++i) {
      std::string text;
      for (std::size_t w = 0, nw = 1 + rng.below(4); w < nw; ++w) text += words[rng.below(words.size())] + " ";
      s.samples.push_back({text, spec.classes()[rng.below(2)]});
    }
    std::map<std::string, std::size_t> expected{{"pos", 0}, {"neg", 0}};
    std::size_t dups = 0;
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
      const auto& ex = s.samples[i];
      if (oracle::contains_icase(ex.text, spec.verbalize(ex.label))) ++expected[ex.label];
      for (std::size_t j = 0; j < i; ++j) {
        if (s.samples[j].text == ex.text) {
          ++dups;
          break;
        }
      }
    }
    auto r = leakage_report(s, spec);
    EXPECT_EQ(r.per_class, expected);
    EXPECT_EQ(r.total, expected["pos"] + expected["neg"]);
    EXPECT_EQ(r.duplicates, dups);
  }
}

TEST(Persistence, SyntheticJsonlRoundTrip) {
  const auto& spec = fixture().task;
  auto synth = generate_synthetic(toy_general(), spec, 3, toy_policy(2));
  auto path = std::filesystem::temp_directory_path() / "qacgen_synth_roundtrip.jsonl";
  write_file_atomic(path, synthetic_to_jsonl(synth));
  auto back = synthetic_from_jsonl(path, "toy");
  EXPECT_EQ(back.samples, synth.samples);
  for (std::size_t i = 0; i < synth.samples.size(); ++i) {
    EXPECT_EQ(back.provenance[i].seed, synth.provenance[i].seed);
    EXPECT_EQ(back.provenance[i].prompt, synth.provenance[i].prompt);
    EXPECT_EQ(back.provenance[i].backend, synth.provenance[i].backend);
  }
  std::filesystem::remove(path);
}
