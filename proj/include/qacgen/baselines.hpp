#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qacgen/schema.hpp"

namespace qacgen {

struct EdaPolicy {
  double alpha_sr = 0.1;
  double alpha_ri = 0.1;
  double alpha_rs = 0.1;
  double p_rd = 0.1;
  std::size_t n_aug = 1;
  std::uint64_t seed = 0;

  void check() const;
};

class SynonymProvider {
 public:
  virtual ~SynonymProvider() = default;
  // Deterministic, possibly empty, never contains `word` itself.
  virtual std::vector<std::string> synonyms(const std::string& word) const = 0;
};

// In-memory lexicon; the query word is filtered out of its own entry.
class LexiconSynonyms final : public SynonymProvider {
 public:
  LexiconSynonyms() = default;
  explicit LexiconSynonyms(std::map<std::string, std::vector<std::string>> entries);
  // JSON-lines {"word": [synonyms...]}; several keys per line are allowed.
  static LexiconSynonyms from_jsonl(const std::filesystem::path& path);

  std::vector<std::string> synonyms(const std::string& word) const override;

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

// Fixed English stopword list used by synonym replacement (version 1).
const std::vector<std::string>& eda_stopwords();
bool is_stopword(const std::string& word);

// Produces policy.n_aug variants of `ex`. Variant v draws from
// Rng(mix64(policy.seed, v)) and applies, in order, to the whitespace words
// (L = original word count):
//   SR  candidates = positions of non-stopwords with synonyms (left to right),
//       shuffled by Fisher-Yates (j = L'-1 down to 1, swap j with below(j+1));
//       the first ceil(alpha_sr*L) get syns[below(|syns|)].
//   RI  ceil(alpha_ri*L) times: up to 10 tries of w = words[below(n)]; on the
//       first w with synonyms insert syns[below(|syns|)] at below(n+1).
//   RS  ceil(alpha_rs*L) times: i = below(n), j = below(n), swap.
//   RD  if n > 1: keep each word iff uniform() >= p_rd; if nothing survives
//       keep words[below(n)].
// A variant whose word sequence is unchanged reproduces ex.text verbatim.
std::vector<LabeledExample> eda_augment(const LabeledExample& ex, const EdaPolicy& policy,
                                        const SynonymProvider& lexicon);

inline constexpr const char* kLambadaSeparator = "[SEP]";

// "{v(label)} [SEP] {text}" and "{v(label)} [SEP]". Throw CastError for
// labels outside the task.
std::string lambada_format(const LabeledExample& ex, const TaskSpec& spec);
std::string lambada_prompt(const std::string& label, const TaskSpec& spec);

// Example-level augmenter: (example, seed) -> augmented examples.
using Augmenter = std::function<std::vector<LabeledExample>(const LabeledExample&, std::uint64_t seed)>;

// Name -> augmenter. "identity" and "eda" (default policy, empty lexicon)
// are built in; external engines (back-translation, paraphrasers) register
// here.
class AugmenterRegistry {
 public:
  static AugmenterRegistry& global();

  AugmenterRegistry();
  void add(const std::string& name, Augmenter augmenter);  // duplicate -> PreconditionError
  const Augmenter& get(const std::string& name) const;      // unknown -> NotFoundError
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Augmenter> augmenters_;
};

// Count matching: cycles through each class's source examples, in order,
// collecting augmenter outputs (source i in round r uses seed
// mix64(seed, r, i)) until the class holds exactly n_per_label samples.
// Throws GenerationError when a full round yields nothing for a class.
std::vector<LabeledExample> augment_to_count(const Augmenter& augmenter,
                                             std::span<const LabeledExample> sources,
                                             const TaskSpec& spec, std::size_t n_per_label,
                                             std::uint64_t seed);

}  // namespace qacgen
