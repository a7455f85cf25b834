#include "qacgen/ngram_backend.hpp"

#include <algorithm>
#include <cstring>

#include "qacgen/errors.hpp"
#include "qacgen/util.hpp"

namespace qacgen {

namespace {

// '\n' = 0, ' '..'~' = 1..95, end-of-text = 96.
constexpr TokenId kNewline = 0;
constexpr TokenId kEot = 96;
constexpr std::size_t kVocabSize = 97;

const std::vector<std::string>& char_vocabulary() {
  static const std::vector<std::string> vocab = [] {
    std::vector<std::string> v{"\n"};
    for (char c = ' '; c <= '~'; ++c) v.emplace_back(1, c);
    v.emplace_back(NGramBackend::kEndOfText);
    return v;
  }();
  return vocab;
}

TokenId char_token(char c) {
  if (c == '\n') return kNewline;
  if (c >= ' ' && c <= '~') return static_cast<TokenId>(c - ' ' + 1);
  return 1;  // space
}

}  // namespace

NGramBackend::NGramBackend(int order, double alpha) : order_(order), alpha_(alpha) {
  if (order_ < 1) throw PreconditionError("ngram order must be >= 1");
  if (!(alpha_ > 0.0)) throw PreconditionError("ngram smoothing must be > 0");
  fingerprint_ = compute_fingerprint();
}

TokenId NGramBackend::eot_id() const { return kEot; }

const std::vector<std::string>& NGramBackend::vocabulary() const { return char_vocabulary(); }

std::vector<TokenId> NGramBackend::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  out.reserve(text.size());
  std::size_t i = 0;
  const std::string_view eot = kEndOfText;
  while (i < text.size()) {
    if (text.substr(i, eot.size()) == eot) {
      out.push_back(kEot);
      i += eot.size();
    } else {
      out.push_back(char_token(text[i]));
      ++i;
    }
  }
  return out;
}

std::string NGramBackend::context_key(std::span<const TokenId> prefix) const {
  const std::size_t h = static_cast<std::size_t>(order_ - 1);
  std::string key(h, static_cast<char>(kEot));
  const std::size_t take = std::min(h, prefix.size());
  for (std::size_t i = 0; i < take; ++i) {
    key[h - take + i] = static_cast<char>(prefix[prefix.size() - take + i]);
  }
  return key;
}

BackendPtr NGramBackend::fine_tune(std::span<const QacDocument> corpus, int epochs,
                                   std::uint64_t /*seed*/) const {
  if (corpus.empty()) throw PreconditionError("fine_tune: corpus is empty");
  if (epochs < 1) throw PreconditionError("fine_tune: epochs must be >= 1");
  auto next = std::make_shared<NGramBackend>(*this);
  const auto weight = static_cast<std::uint64_t>(epochs);
  for (const auto& doc : corpus) {
    auto tokens = tokenize(doc.text);
    tokens.push_back(kEot);
    std::vector<TokenId> history;
    history.reserve(tokens.size());
    for (TokenId t : tokens) {
      auto& row = next->table_[context_key(history)];
      row.total += weight;
      row.next[t] += weight;
      history.push_back(t);
    }
  }
  next->fingerprint_ = next->compute_fingerprint();
  return next;
}

std::vector<double> NGramBackend::next_token_distribution(std::span<const TokenId> prefix) const {
  const double denom_alpha = alpha_ * static_cast<double>(kVocabSize);
  std::vector<double> probs(kVocabSize);
  auto it = table_.find(context_key(prefix));
  if (it == table_.end()) {
    std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(kVocabSize));
    return probs;
  }
  const double denom = static_cast<double>(it->second.total) + denom_alpha;
  std::fill(probs.begin(), probs.end(), alpha_ / denom);
  for (const auto& [tok, c] : it->second.next) {
    probs[static_cast<std::size_t>(tok)] = (static_cast<double>(c) + alpha_) / denom;
  }
  return probs;
}

std::uint64_t NGramBackend::count(std::span<const TokenId> context, TokenId next) const {
  auto it = table_.find(context_key(context));
  if (it == table_.end()) return 0;
  auto jt = it->second.next.find(next);
  return jt == it->second.next.end() ? 0 : jt->second;
}

std::uint64_t NGramBackend::row_total(std::span<const TokenId> context) const {
  auto it = table_.find(context_key(context));
  return it == table_.end() ? 0 : it->second.total;
}

std::string NGramBackend::compute_fingerprint() const {
  std::vector<const Table::value_type*> rows;
  rows.reserve(table_.size());
  for (const auto& kv : table_) rows.push_back(&kv);
  std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->first < b->first; });
  Fnv1a h;
  h.update("ngram").update_u64(static_cast<std::uint64_t>(order_));
  std::uint64_t alpha_bits;
  static_assert(sizeof(alpha_bits) == sizeof(alpha_));
  std::memcpy(&alpha_bits, &alpha_, sizeof(alpha_));
  h.update_u64(alpha_bits);
  for (const auto* row : rows) {
    h.update_u64(row->first.size()).update(row->first);
    for (const auto& [tok, c] : row->second.next) {
      h.update_u64(static_cast<std::uint64_t>(tok)).update_u64(c);
    }
  }
  return h.hex();
}

nlohmann::json NGramBackend::to_json() const {
  std::vector<std::string> keys;
  keys.reserve(table_.size());
  for (const auto& kv : table_) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& key : keys) {
    std::vector<int> context(key.begin(), key.end());
    nlohmann::json next = nlohmann::json::array();
    for (const auto& [tok, c] : table_.at(key).next) next.push_back({tok, c});
    rows.push_back({{"context", context}, {"next", next}});
  }
  return {{"kind", kind()},   {"order", order_},         {"alpha", alpha_},
          {"rows", rows},     {"fingerprint", fingerprint_}};
}

std::shared_ptr<const NGramBackend> NGramBackend::from_json(const nlohmann::json& j) {
  try {
    auto b = std::make_shared<NGramBackend>(j.at("order").get<int>(), j.at("alpha").get<double>());
    for (const auto& row : j.at("rows")) {
      std::string key;
      for (int t : row.at("context")) key.push_back(static_cast<char>(t));
      auto& r = b->table_[key];
      for (const auto& pair : row.at("next")) {
        auto tok = pair.at(0).get<TokenId>();
        auto c = pair.at(1).get<std::uint64_t>();
        if (tok < 0 || static_cast<std::size_t>(tok) >= kVocabSize) {
          throw ConfigError("ngram state: token id out of range");
        }
        r.next[tok] += c;
        r.total += c;
      }
    }
    b->fingerprint_ = b->compute_fingerprint();
    if (j.contains("fingerprint") && j.at("fingerprint").get<std::string>() != b->fingerprint_) {
      throw ConfigError("ngram state: fingerprint mismatch");
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed ngram state: ") + e.what());
  }
}

}  // namespace qacgen
