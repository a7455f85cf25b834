#include "qacgen/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "qacgen/errors.hpp"
#include "qacgen/rng.hpp"
#include "qacgen/util.hpp"

namespace qacgen {

void EdaPolicy::check() const {
  for (double f : {alpha_sr, alpha_ri, alpha_rs, p_rd}) {
    if (!(f >= 0.0 && f <= 1.0)) throw PreconditionError("EDA fractions must lie in [0, 1]");
  }
  if (n_aug < 1) throw PreconditionError("EDA n_aug must be >= 1");
}

LexiconSynonyms::LexiconSynonyms(std::map<std::string, std::vector<std::string>> entries)
    : entries_(std::move(entries)) {}

LexiconSynonyms LexiconSynonyms::from_jsonl(const std::filesystem::path& path) {
  std::map<std::string, std::vector<std::string>> entries;
  for (const auto& row : read_jsonl(path)) {
    if (!row.is_object()) throw IngestError(path.string() + ": lexicon rows must be objects");
    for (const auto& [word, syns] : row.items()) {
      auto& dst = entries[word];
      for (const auto& s : syns) dst.push_back(s.get<std::string>());
    }
  }
  return LexiconSynonyms(std::move(entries));
}

std::vector<std::string> LexiconSynonyms::synonyms(const std::string& word) const {
  auto it = entries_.find(word);
  if (it == entries_.end()) return {};
  std::vector<std::string> out;
  for (const auto& s : it->second) {
    if (s != word && std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

const std::vector<std::string>& eda_stopwords() {
  static const std::vector<std::string> words{
      "i",       "me",     "my",      "myself", "we",     "our",     "ours",       "ourselves",
      "you",     "your",   "yours",   "yourself", "yourselves", "he", "him",      "his",
      "himself", "she",    "her",     "hers",   "herself", "it",     "its",        "itself",
      "they",    "them",   "their",   "theirs", "themselves", "what", "which",   "who",
      "whom",    "this",   "that",    "these",  "those",  "am",      "is",         "are",
      "was",     "were",   "be",      "been",   "being",  "have",    "has",        "had",
      "having",  "do",     "does",    "did",    "doing",  "a",       "an",         "the",
      "and",     "but",    "if",      "or",     "because", "as",     "until",      "while",
      "of",      "at",     "by",      "for",    "with",   "about",   "against",    "between",
      "into",    "through", "during", "before", "after",  "above",   "below",      "to",
      "from",    "up",     "down",    "in",     "out",    "on",      "off",        "over",
      "under",   "again",  "further", "then",   "once",   "here",    "there",      "when",
      "where",   "why",    "how",     "all",    "any",    "both",    "each",       "few",
      "more",    "most",   "other",   "some",   "such",   "no",      "nor",        "not",
      "only",    "own",    "same",    "so",     "than",   "too",     "very",       "s",
      "t",       "can",    "will",    "just",   "don",    "should",  "now",        ""};
  return words;
}

bool is_stopword(const std::string& word) {
  static const std::unordered_set<std::string> set(eda_stopwords().begin(), eda_stopwords().end());
  return set.count(to_lower(word)) != 0;
}

namespace {

std::size_t op_count(double fraction, std::size_t length) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(length)));
}

std::vector<std::string> eda_variant(std::vector<std::string> words, const EdaPolicy& policy,
                                     const SynonymProvider& lexicon, Rng& rng) {
  const std::size_t length = words.size();

  // Synonym replacement.
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!is_stopword(words[i]) && !lexicon.synonyms(words[i]).empty()) candidates.push_back(i);
  }
  const std::size_t n_sr = op_count(policy.alpha_sr, length);
  if (n_sr > 0 && !candidates.empty()) {
    for (std::size_t j = candidates.size() - 1; j >= 1; --j) {
      std::swap(candidates[j], candidates[rng.below(j + 1)]);
    }
    for (std::size_t r = 0; r < std::min(n_sr, candidates.size()); ++r) {
      auto syns = lexicon.synonyms(words[candidates[r]]);
      words[candidates[r]] = syns[rng.below(syns.size())];
    }
  }

  // Random insertion.
  const std::size_t n_ri = op_count(policy.alpha_ri, length);
  for (std::size_t r = 0; r < n_ri; ++r) {
    for (int attempt = 0; attempt < 10; ++attempt) {
      const auto& w = words[rng.below(words.size())];
      auto syns = lexicon.synonyms(w);
      if (syns.empty()) continue;
      auto syn = syns[rng.below(syns.size())];
      auto pos = rng.below(words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), std::move(syn));
      break;
    }
  }

  // Random swap.
  const std::size_t n_rs = op_count(policy.alpha_rs, length);
  for (std::size_t r = 0; r < n_rs; ++r) {
    auto i = rng.below(words.size());
    auto j = rng.below(words.size());
    std::swap(words[i], words[j]);
  }

  // Random deletion; the last remaining word always survives.
  if (words.size() > 1) {
    std::vector<std::string> kept;
    for (const auto& w : words) {
      if (rng.uniform() >= policy.p_rd) kept.push_back(w);
    }
    if (kept.empty()) kept.push_back(words[rng.below(words.size())]);
    words = std::move(kept);
  }
  return words;
}

}  // namespace

std::vector<LabeledExample> eda_augment(const LabeledExample& ex, const EdaPolicy& policy,
                                        const SynonymProvider& lexicon) {
  policy.check();
  const auto words = split_words(ex.text);
  if (words.empty()) throw PreconditionError("EDA needs at least one word");
  std::vector<LabeledExample> out;
  out.reserve(policy.n_aug);
  for (std::size_t v = 0; v < policy.n_aug; ++v) {
    Rng rng(mix64(policy.seed, v));
    auto variant = eda_variant(words, policy, lexicon, rng);
    out.push_back({variant == words ? ex.text : join(variant, " "), ex.label});
  }
  return out;
}

std::string lambada_format(const LabeledExample& ex, const TaskSpec& spec) {
  return lambada_prompt(ex.label, spec) + " " + ex.text;
}

std::string lambada_prompt(const std::string& label, const TaskSpec& spec) {
  if (!spec.has_class(label)) {
    throw CastError("label '" + label + "' is not a class of task '" + spec.task_id() + "'");
  }
  return spec.verbalize(label) + " " + kLambadaSeparator;
}

AugmenterRegistry& AugmenterRegistry::global() {
  static AugmenterRegistry registry;
  return registry;
}

AugmenterRegistry::AugmenterRegistry() {
  augmenters_["identity"] = [](const LabeledExample& ex, std::uint64_t) {
    return std::vector<LabeledExample>{ex};
  };
  augmenters_["eda"] = [](const LabeledExample& ex, std::uint64_t seed) {
    static const LexiconSynonyms empty;
    EdaPolicy policy;
    policy.seed = seed;
    return eda_augment(ex, policy, empty);
  };
}

void AugmenterRegistry::add(const std::string& name, Augmenter augmenter) {
  if (augmenters_.count(name)) throw PreconditionError("augmenter '" + name + "' already registered");
  augmenters_[name] = std::move(augmenter);
}

const Augmenter& AugmenterRegistry::get(const std::string& name) const {
  auto it = augmenters_.find(name);
  if (it == augmenters_.end()) {
    throw NotFoundError("unknown augmenter '" + name + "'; known: " + join(names(), ", "));
  }
  return it->second;
}

bool AugmenterRegistry::contains(const std::string& name) const { return augmenters_.count(name) != 0; }

std::vector<std::string> AugmenterRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : augmenters_) out.push_back(k);
  return out;
}

std::vector<LabeledExample> augment_to_count(const Augmenter& augmenter,
                                             std::span<const LabeledExample> sources,
                                             const TaskSpec& spec, std::size_t n_per_label,
                                             std::uint64_t seed) {
  std::vector<LabeledExample> out;
  out.reserve(n_per_label * spec.classes().size());
  for (const auto& cls : spec.classes()) {
    std::vector<const LabeledExample*> own;
    for (const auto& ex : sources) {
      if (ex.label == cls) own.push_back(&ex);
    }
    if (own.empty()) throw GenerationError("no source examples for class '" + cls + "'");
    std::size_t have = 0;
    for (std::uint64_t round = 0; have < n_per_label; ++round) {
      std::size_t produced = 0;
      for (std::size_t i = 0; i < own.size() && have < n_per_label; ++i) {
        for (auto& aug : augmenter(*own[i], mix64(seed, round, i))) {
          if (have == n_per_label) break;
          if (trim(aug.text).empty()) continue;
          aug.label = cls;
          out.push_back(std::move(aug));
          ++have;
          ++produced;
        }
      }
      if (produced == 0) throw GenerationError("augmenter produced nothing for class '" + cls + "'");
    }
  }
  return out;
}

}  // namespace qacgen
