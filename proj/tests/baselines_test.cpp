#include <gtest/gtest.h>

#include <cmath>

#include "qacgen/baselines.hpp"
#include "qacgen/errors.hpp"
#include "qacgen/rng.hpp"
#include "qacgen/toy.hpp"
#include "qacgen/util.hpp"

using namespace qacgen;

namespace {

const TaskSpec& toy_task() {
  static const TaskSpec spec = toy::make_fixture().task;
  return spec;
}

LexiconSynonyms film_lexicon() {
  return LexiconSynonyms({{"film", {"movie", "picture", "film"}}, {"rocks", {"rules"}}});
}

// Step-by-step replay of the four EDA operations, written independently of
// the library for a fixed lexicon and sentence.
std::vector<std::string> replay_eda(std::vector<std::string> w, const EdaPolicy& p, std::uint64_t variant) {
  const auto lex = film_lexicon();
  auto syn = [&](const std::string& s) { return lex.synonyms(s); };
  Rng rng(mix64(p.seed, variant));
  const double len = static_cast<double>(w.size());
  const auto n_sr = static_cast<std::size_t>(std::ceil(p.alpha_sr * len));
  const auto n_ri = static_cast<std::size_t>(std::ceil(p.alpha_ri * len));
  const auto n_rs = static_cast<std::size_t>(std::ceil(p.alpha_rs * len));

  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] != "the" && !syn(w[i]).empty()) cand.push_back(i);
  if (n_sr > 0 && !cand.empty()) {
    for (std::size_t j = cand.size() - 1; j > 0; --j) std::swap(cand[j], cand[rng.below(j + 1)]);
    for (std::size_t r = 0; r < std::min(n_sr, cand.size()); ++r) {
      auto s = syn(w[cand[r]]);
      w[cand[r]] = s[rng.below(s.size())];
    }
  }
  for (std::size_t r = 0; r < n_ri; ++r) {
    for (int a = 0; a < 10; ++a) {
      auto s = syn(w[rng.below(w.size())]);
      if (s.empty()) continue;
      auto pick = s[rng.below(s.size())];
      w.insert(w.begin() + static_cast<long>(rng.below(w.size() + 1)), pick);
      break;
    }
  }
  for (std::size_t r = 0; r < n_rs; ++r) {
    auto i = rng.below(w.size());
    auto j = rng.below(w.size());
    std::swap(w[i], w[j]);
  }
  if (w.size() > 1) {
    std::vector<std::string> kept;
    for (auto& x : w)
      if (rng.uniform() >= p.p_rd) kept.push_back(x);
    if (kept.empty()) kept.push_back(w[rng.below(w.size())]);
    w = kept;
  }
  return w;
}

}  // namespace

TEST(Lexicon, FiltersQueryWordAndDuplicates) {
  auto lex = film_lexicon();
  EXPECT_EQ(lex.synonyms("film"), (std::vector<std::string>{"movie", "picture"}));
  EXPECT_TRUE(lex.synonyms("unknown").empty());
  EXPECT_TRUE(is_stopword("The"));
  EXPECT_FALSE(is_stopword("film"));
}

TEST(Eda, AllZeroPolicyIsIdentity) {
  EdaPolicy p{0, 0, 0, 0, 4, 123};
  LabeledExample ex{"The  film, rocks!", "pos"};
  for (const auto& v : eda_augment(ex, p, film_lexicon())) EXPECT_EQ(v, ex);
}

TEST(Eda, SingleWordNeverEmpties) {
  EdaPolicy p;
  p.p_rd = 0.9;
  p.n_aug = 50;
  for (const auto& v : eda_augment({"wow", "pos"}, p, LexiconSynonyms())) EXPECT_EQ(v.text, "wow");
  p.p_rd = 1.0;
  for (const auto& v : eda_augment({"two words", "pos"}, p, LexiconSynonyms())) {
    EXPECT_EQ(split_words(v.text).size(), 1u);
  }
}

TEST(Eda, MatchesIndependentReplay) {
  const std::vector<std::string> words{"the", "film", "rocks"};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    EdaPolicy p{0.5, 0.4, 0.3, 0.2, 3, seed};
    auto got = eda_augment({"the film rocks", "pos"}, p, film_lexicon());
    ASSERT_EQ(got.size(), 3u);
    for (std::size_t v = 0; v < 3; ++v) {
      EXPECT_EQ(got[v].text, join(replay_eda(words, p, v), " ")) << "seed " << seed << " variant " << v;
      EXPECT_EQ(got[v].label, "pos");
    }
  }
}

TEST(Eda, RejectsBadPolicies) {
  EdaPolicy p;
  p.alpha_sr = 1.5;
  EXPECT_THROW(eda_augment({"x", "pos"}, p, LexiconSynonyms()), PreconditionError);
  p = {};
  p.n_aug = 0;
  EXPECT_THROW(eda_augment({"x", "pos"}, p, LexiconSynonyms()), PreconditionError);
  EXPECT_THROW(eda_augment({"   ", "pos"}, EdaPolicy{}, LexiconSynonyms()), PreconditionError);
}

TEST(Lambada, FormatAndPrompt) {
  const auto& spec = toy_task();
  EXPECT_EQ(lambada_format({"nice one", "pos"}, spec), "good [SEP] nice one");
  EXPECT_EQ(lambada_prompt("neg", spec), "bad [SEP]");
  EXPECT_THROW(lambada_prompt("neutral", spec), CastError);
  // The prompt is a prefix of the formatted example, so generation continues it.
  auto doc = lambada_format({"x y", "neg"}, spec);
  EXPECT_EQ(doc.rfind(lambada_prompt("neg", spec), 0), 0u);
  EXPECT_EQ(trim(doc.substr(lambada_prompt("neg", spec).size())), "x y");
}

TEST(Registry, BuiltinsDuplicatesAndUnknown) {
  AugmenterRegistry reg;
  EXPECT_TRUE(reg.contains("identity"));
  EXPECT_TRUE(reg.contains("eda"));
  EXPECT_THROW(reg.add("eda", reg.get("identity")), PreconditionError);
  EXPECT_THROW(reg.get("back-translation"), NotFoundError);
  reg.add("upper", [](const LabeledExample& ex, std::uint64_t) {
    return std::vector<LabeledExample>{{ex.text + "!", ex.label}};
  });
  EXPECT_EQ(reg.get("upper")({"a", "pos"}, 0).front().text, "a!");
}

TEST(AugmentToCount, ReachesExactCountPerLabel) {
  const auto& spec = toy_task();
  std::vector<LabeledExample> sources;
  for (int i = 0; i < 8; ++i) {
    sources.push_back({"great fun film " + std::to_string(i), "pos"});
    sources.push_back({"dull slow film " + std::to_string(i), "neg"});
  }
  const auto& eda = AugmenterRegistry::global().get("eda");
  auto out = augment_to_count(eda, sources, spec, 450, 77);
  ASSERT_EQ(out.size(), 900u);
  for (std::size_t i = 0; i < 900; ++i) EXPECT_EQ(out[i].label, i < 450 ? "pos" : "neg");
  EXPECT_EQ(out, augment_to_count(eda, sources, spec, 450, 77));

  auto ident = augment_to_count(AugmenterRegistry::global().get("identity"), sources, spec, 20, 0);
  EXPECT_EQ(ident[0].text, sources[0].text);
  EXPECT_EQ(ident[8].text, sources[0].text);  // cycles through the 8 sources

  std::vector<LabeledExample> only_pos{{"a", "pos"}};
  EXPECT_THROW(augment_to_count(eda, only_pos, spec, 5, 0), GenerationError);
}
