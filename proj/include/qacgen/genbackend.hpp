#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qacgen/qacformat.hpp"
#include "qacgen/rng.hpp"

namespace qacgen {

using TokenId = std::int32_t;

struct SamplingPolicy {
  std::size_t k = 20;
  std::size_t max_new_tokens = 200;
  std::set<std::string> stop_tokens;
  std::uint64_t seed = 0;

  // Throws PreconditionError when k or max_new_tokens is zero.
  void check() const;
};

class GeneratorBackend;
using BackendPtr = std::shared_ptr<const GeneratorBackend>;

// A trainable autoregressive text model. States are immutable: fine_tune
// returns a new state and leaves the receiver untouched, so one state may be
// sampled from several threads at once.
class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;

  virtual std::string kind() const = 0;

  // Pure state transition; same (state, corpus, epochs, seed) gives the same
  // fingerprint. Throws PreconditionError for an empty corpus or epochs < 1,
  // CapabilityError when the backend cannot be trained.
  virtual BackendPtr fine_tune(std::span<const QacDocument> corpus, int epochs,
                               std::uint64_t seed) const = 0;

  virtual std::vector<TokenId> tokenize(std::string_view text) const = 0;
  // Sums to 1 and is a deterministic function of (state, prefix).
  virtual std::vector<double> next_token_distribution(std::span<const TokenId> prefix) const = 0;
  virtual const std::vector<std::string>& vocabulary() const = 0;
  virtual std::optional<std::string> end_of_text_token() const = 0;

  // Stable content hash of the state.
  virtual std::string fingerprint() const = 0;
  std::string backend_id() const { return kind() + ":" + fingerprint(); }

  // Whether sample() is a pure function of (state, prefix, policy). Pipelines
  // record, but do not assert, reproducibility for non-deterministic backends.
  virtual bool deterministic() const { return true; }

  // Continuation of `prefix` under the policy, excluding the prefix and any
  // stop token. Defaults to top_k_sample over next_token_distribution.
  virtual std::string sample(std::string_view prefix, const SamplingPolicy& policy) const;

  virtual nlohmann::json to_json() const = 0;
};

// Indices of the k most probable entries, ties broken by lower index.
std::vector<std::size_t> top_k_indices(std::span<const double> probs, std::size_t k);

// One draw from `probs` restricted to its top-k and renormalized. Consumes
// exactly one value from the stream: u = rng.uniform(), then the first
// index (in top-k order) whose cumulative renormalized mass exceeds u.
std::size_t top_k_draw(std::span<const double> probs, std::size_t k, Rng& rng);

// Autoregressive top-k sampling with the policy's seeded stream; stops on a
// stop token or after max_new_tokens.
std::string top_k_sample(const GeneratorBackend& backend, std::string_view prefix,
                         const SamplingPolicy& policy);

// Stop set used by the pipeline when the policy leaves it empty: the
// backend's end-of-text token, if any.
SamplingPolicy with_default_stops(SamplingPolicy policy, const GeneratorBackend& backend);

std::string fingerprint(const GeneratorBackend& backend);

using BackendFactory = std::function<BackendPtr(const nlohmann::json& params)>;

// Backend registry keyed by identifier. "ngram" and "remote" are built in.
class BackendRegistry {
 public:
  static BackendRegistry& global();

  void add(const std::string& id, BackendFactory factory);
  BackendPtr create(const std::string& id, const nlohmann::json& params = nlohmann::json::object()) const;
  std::vector<std::string> ids() const;

 private:
  BackendRegistry();
  std::map<std::string, BackendFactory> factories_;
};

// Restores a persisted backend state (the output of to_json()).
BackendPtr load_backend(const nlohmann::json& state);

}  // namespace qacgen
