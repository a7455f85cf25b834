#include "qacgen/genbackend.hpp"

#include <algorithm>
#include <numeric>

#include "qacgen/errors.hpp"
#include "qacgen/ngram_backend.hpp"
#include "qacgen/remote_backend.hpp"

namespace qacgen {

void SamplingPolicy::check() const {
  if (k < 1) throw PreconditionError("sampling policy: k must be >= 1");
  if (max_new_tokens < 1) throw PreconditionError("sampling policy: max_new_tokens must be >= 1");
}

std::string GeneratorBackend::sample(std::string_view prefix, const SamplingPolicy& policy) const {
  return top_k_sample(*this, prefix, policy);
}

std::vector<std::size_t> top_k_indices(std::span<const double> probs, std::size_t k) {
  std::vector<std::size_t> idx(probs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return probs[a] > probs[b] || (probs[a] == probs[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

std::size_t top_k_draw(std::span<const double> probs, std::size_t k, Rng& rng) {
  if (probs.empty()) throw PreconditionError("empty distribution");
  auto top = top_k_indices(probs, k);
  double mass = 0.0;
  for (auto i : top) mass += probs[i];
  const double u = rng.uniform() * mass;
  double acc = 0.0;
  for (auto i : top) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return top.back();
}

std::string top_k_sample(const GeneratorBackend& backend, std::string_view prefix,
                         const SamplingPolicy& policy) {
  policy.check();
  const auto& vocab = backend.vocabulary();
  std::vector<TokenId> tokens = backend.tokenize(prefix);
  Rng rng(policy.seed);
  std::string out;
  for (std::size_t step = 0; step < policy.max_new_tokens; ++step) {
    auto probs = backend.next_token_distribution(tokens);
    auto next = static_cast<TokenId>(top_k_draw(probs, policy.k, rng));
    const auto& piece = vocab.at(static_cast<std::size_t>(next));
    if (policy.stop_tokens.count(piece)) break;
    out += piece;
    tokens.push_back(next);
  }
  return out;
}

SamplingPolicy with_default_stops(SamplingPolicy policy, const GeneratorBackend& backend) {
  if (policy.stop_tokens.empty()) {
    if (auto eot = backend.end_of_text_token()) policy.stop_tokens.insert(*eot);
  }
  return policy;
}

std::string fingerprint(const GeneratorBackend& backend) { return backend.fingerprint(); }

BackendRegistry& BackendRegistry::global() {
  static BackendRegistry registry;
  return registry;
}

BackendRegistry::BackendRegistry() {
  factories_["ngram"] = [](const nlohmann::json& p) -> BackendPtr {
    return std::make_shared<NGramBackend>(p.value("order", 2), p.value("alpha", 1.0));
  };
  factories_["remote"] = [](const nlohmann::json& p) -> BackendPtr {
    if (!p.contains("host") || !p.contains("port")) {
      throw ConfigError("remote backend needs 'host' and 'port'");
    }
    std::optional<std::string> eot;
    if (p.contains("end_of_text")) eot = p.at("end_of_text").get<std::string>();
    return std::make_shared<RemoteBackend>(p.at("host").get<std::string>(), p.at("port").get<int>(),
                                           p.value("path", std::string("/generate")),
                                           p.value("deterministic", false), eot);
  };
}

void BackendRegistry::add(const std::string& id, BackendFactory factory) {
  if (factories_.count(id)) throw PreconditionError("backend '" + id + "' already registered");
  factories_[id] = std::move(factory);
}

BackendPtr BackendRegistry::create(const std::string& id, const nlohmann::json& params) const {
  auto it = factories_.find(id);
  if (it == factories_.end()) {
    std::string known;
    for (const auto& [k, _] : factories_) known += (known.empty() ? "" : ", ") + k;
    throw NotFoundError("unknown backend '" + id + "'; known backends: " + known);
  }
  return it->second(params);
}

std::vector<std::string> BackendRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : factories_) out.push_back(k);
  return out;
}

BackendPtr load_backend(const nlohmann::json& state) {
  const auto kind = state.value("kind", std::string());
  if (kind == "ngram") return NGramBackend::from_json(state);
  if (kind == "remote") return BackendRegistry::global().create("remote", state);
  throw NotFoundError("cannot restore backend of kind '" + kind + "'");
}

}  // namespace qacgen
