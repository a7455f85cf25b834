#include "qacgen/remote_backend.hpp"

#include <httplib.h>

#include "qacgen/errors.hpp"
#include "qacgen/util.hpp"

namespace qacgen {

nlohmann::json GenerationRequest::to_json() const {
  return {{"prefix", prefix}, {"k", k}, {"max_new_tokens", max_new_tokens}, {"seed", seed}};
}

GenerationRequest GenerationRequest::from_json(const nlohmann::json& j) {
  try {
    GenerationRequest r;
    r.prefix = j.at("prefix").get<std::string>();
    r.k = j.at("k").get<std::size_t>();
    r.max_new_tokens = j.at("max_new_tokens").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("generation request: ") + e.what(), 1);
  }
}

nlohmann::json handle_generation_request(const GeneratorBackend& backend, const nlohmann::json& request) {
  auto req = GenerationRequest::from_json(request);
  SamplingPolicy policy;
  policy.k = req.k;
  policy.max_new_tokens = req.max_new_tokens;
  policy.seed = req.seed;
  policy = with_default_stops(policy, backend);
  return {{"continuation", backend.sample(req.prefix, policy)}};
}

RemoteBackend::RemoteBackend(std::string host, int port, std::string path, bool deterministic,
                             std::optional<std::string> end_of_text)
    : host_(std::move(host)),
      port_(port),
      path_(std::move(path)),
      deterministic_(deterministic),
      end_of_text_(std::move(end_of_text)) {}

BackendPtr RemoteBackend::fine_tune(std::span<const QacDocument>, int, std::uint64_t) const {
  throw CapabilityError("remote backend at " + host_ + ":" + std::to_string(port_) +
                        " is frozen and cannot be fine-tuned");
}

std::vector<TokenId> RemoteBackend::tokenize(std::string_view) const {
  throw CapabilityError("remote backend does not expose its tokenizer");
}

std::vector<double> RemoteBackend::next_token_distribution(std::span<const TokenId>) const {
  throw CapabilityError("remote backend does not expose next-token distributions");
}

const std::vector<std::string>& RemoteBackend::vocabulary() const {
  static const std::vector<std::string> empty;
  return empty;
}

std::string RemoteBackend::fingerprint() const {
  return Fnv1a().update(host_).update(":" + std::to_string(port_)).update(path_).hex();
}

std::string RemoteBackend::sample(std::string_view prefix, const SamplingPolicy& policy) const {
  policy.check();
  GenerationRequest req{std::string(prefix), policy.k, policy.max_new_tokens, policy.seed};
  httplib::Client client(host_, port_);
  client.set_read_timeout(120, 0);
  auto res = client.Post(path_, req.to_json().dump(), "application/json");
  if (!res) {
    throw GenerationError("remote backend " + host_ + ":" + std::to_string(port_) + ": " +
                          httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw GenerationError("remote backend returned HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body).at("continuation").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw GenerationError(std::string("remote backend: malformed response: ") + e.what());
  }
}

nlohmann::json RemoteBackend::to_json() const {
  nlohmann::json j{{"kind", kind()}, {"host", host_}, {"port", port_}, {"path", path_},
                   {"deterministic", deterministic_}};
  if (end_of_text_) j["end_of_text"] = *end_of_text_;
  return j;
}

}  // namespace qacgen
