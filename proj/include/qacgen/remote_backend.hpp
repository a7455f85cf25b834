#pragma once

#include "qacgen/genbackend.hpp"

namespace qacgen {

// Wire format of the remote generation protocol:
//   request  {"prefix": str, "k": int, "max_new_tokens": int, "seed": uint64}
//   response {"continuation": str}
struct GenerationRequest {
  std::string prefix;
  std::size_t k = 20;
  std::size_t max_new_tokens = 200;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static GenerationRequest from_json(const nlohmann::json& j);
};

// Answers protocol requests from a local backend state. Stop tokens are the
// backend's defaults.
nlohmann::json handle_generation_request(const GeneratorBackend& backend, const nlohmann::json& request);

// Frozen model behind an HTTP endpoint (POST {path}). Only sample() works;
// training and distribution queries raise CapabilityError.
class RemoteBackend final : public GeneratorBackend {
 public:
  RemoteBackend(std::string host, int port, std::string path = "/generate",
                bool deterministic = false, std::optional<std::string> end_of_text = std::nullopt);

  std::string kind() const override { return "remote"; }
  BackendPtr fine_tune(std::span<const QacDocument> corpus, int epochs,
                       std::uint64_t seed) const override;
  std::vector<TokenId> tokenize(std::string_view text) const override;
  std::vector<double> next_token_distribution(std::span<const TokenId> prefix) const override;
  const std::vector<std::string>& vocabulary() const override;
  std::optional<std::string> end_of_text_token() const override { return end_of_text_; }
  std::string fingerprint() const override;
  bool deterministic() const override { return deterministic_; }
  std::string sample(std::string_view prefix, const SamplingPolicy& policy) const override;
  nlohmann::json to_json() const override;

 private:
  std::string host_;
  int port_;
  std::string path_;
  bool deterministic_;
  std::optional<std::string> end_of_text_;
};

}  // namespace qacgen
