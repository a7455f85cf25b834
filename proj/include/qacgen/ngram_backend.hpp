#pragma once

#include <unordered_map>

#include "qacgen/genbackend.hpp"

namespace qacgen {

// Character-level n-gram model with additive smoothing:
//   P(t | h) = (count(h, t) + alpha) / (count(h) + alpha * |V|)
// where h is the previous order-1 tokens. Documents are left-padded with
// end-of-text tokens and terminated by one. The vocabulary is '\n', the 95
// printable ASCII characters and the end-of-text token; other bytes are
// folded to a space. Training adds counts, so it is order-insensitive and
// ignores the seed; `epochs` multiplies the counts.
class NGramBackend final : public GeneratorBackend {
 public:
  static constexpr const char* kEndOfText = "<|endoftext|>";

  struct Row {
    std::uint64_t total = 0;
    std::map<TokenId, std::uint64_t> next;
  };
  // Keys are contexts encoded one byte per token id.
  using Table = std::unordered_map<std::string, Row>;

  explicit NGramBackend(int order = 2, double alpha = 1.0);

  std::string kind() const override { return "ngram"; }
  BackendPtr fine_tune(std::span<const QacDocument> corpus, int epochs,
                       std::uint64_t seed) const override;
  std::vector<TokenId> tokenize(std::string_view text) const override;
  std::vector<double> next_token_distribution(std::span<const TokenId> prefix) const override;
  const std::vector<std::string>& vocabulary() const override;
  std::optional<std::string> end_of_text_token() const override { return std::string(kEndOfText); }
  std::string fingerprint() const override { return fingerprint_; }
  nlohmann::json to_json() const override;
  static std::shared_ptr<const NGramBackend> from_json(const nlohmann::json& j);

  int order() const { return order_; }
  double alpha() const { return alpha_; }
  TokenId eot_id() const;
  std::uint64_t count(std::span<const TokenId> context, TokenId next) const;
  std::uint64_t row_total(std::span<const TokenId> context) const;
  const Table& table() const { return table_; }

 private:
  std::string context_key(std::span<const TokenId> prefix) const;
  std::string compute_fingerprint() const;

  int order_;
  double alpha_;
  Table table_;
  std::string fingerprint_;
};

}  // namespace qacgen
