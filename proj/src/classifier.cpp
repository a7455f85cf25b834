#include "qacgen/classifier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "qacgen/errors.hpp"
#include "qacgen/rng.hpp"
#include "qacgen/util.hpp"

namespace qacgen {

BowClassifier::BowClassifier(std::vector<std::string> classes, Params params)
    : classes_(std::move(classes)), params_(params), bias_(classes_.size(), 0.0) {
  if (classes_.empty()) throw PreconditionError("classifier needs at least one class");
  if (params_.batch_size < 1) throw PreconditionError("batch_size must be >= 1");
  if (!(params_.learning_rate > 0)) throw PreconditionError("learning_rate must be > 0");
}

std::vector<std::string> BowClassifier::features(std::string_view text) {
  std::vector<std::string> out;
  for (auto& w : split_words(text)) {
    auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
    std::size_t b = 0, e = w.size();
    while (b < e && is_punct(w[b])) ++b;
    while (e > b && is_punct(w[e - 1])) --e;
    if (e > b) out.push_back(to_lower(std::string_view(w).substr(b, e - b)));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> BowClassifier::scores(std::string_view text) const {
  std::vector<double> s = bias_;
  for (const auto& f : features(text)) {
    auto it = weights_.find(f);
    if (it == weights_.end()) continue;
    for (std::size_t c = 0; c < s.size(); ++c) s[c] += it->second[c];
  }
  return s;
}

ClassifierPtr BowClassifier::train(std::span<const LabeledExample> examples, int epochs,
                                   std::uint64_t seed) const {
  if (epochs < 1) throw PreconditionError("classifier epochs must be >= 1");
  if (examples.empty()) throw PreconditionError("classifier training set is empty");
  const std::size_t m = classes_.size();
  std::vector<std::vector<std::string>> feats;
  std::vector<std::size_t> targets;
  feats.reserve(examples.size());
  for (const auto& ex : examples) {
    auto it = std::find(classes_.begin(), classes_.end(), ex.label);
    if (it == classes_.end()) throw PreconditionError("training label '" + ex.label + "' is not a class");
    targets.push_back(static_cast<std::size_t>(it - classes_.begin()));
    feats.push_back(features(ex.text));
  }

  auto next = std::make_shared<BowClassifier>(*this);
  for (const auto& fs : feats) {
    for (const auto& f : fs) next->weights_.try_emplace(f, m, 0.0);
  }

  std::vector<std::size_t> order(examples.size());
  std::vector<double> bias_grad(m);
  std::map<std::string, std::vector<double>> grad;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix64(seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t j = order.size() - 1; j >= 1; --j) std::swap(order[j], order[rng.below(j + 1)]);

    for (std::size_t start = 0; start < order.size(); start += params_.batch_size) {
      const std::size_t end = std::min(order.size(), start + params_.batch_size);
      std::fill(bias_grad.begin(), bias_grad.end(), 0.0);
      grad.clear();
      for (std::size_t b = start; b < end; ++b) {
        const auto i = order[b];
        auto s = next->bias_;
        for (const auto& f : feats[i]) {
          const auto& w = next->weights_.at(f);
          for (std::size_t c = 0; c < m; ++c) s[c] += w[c];
        }
        const double mx = *std::max_element(s.begin(), s.end());
        double z = 0.0;
        for (auto& v : s) z += (v = std::exp(v - mx));
        for (std::size_t c = 0; c < m; ++c) {
          const double g = s[c] / z - (c == targets[i] ? 1.0 : 0.0);
          bias_grad[c] += g;
          if (g == 0.0) continue;
          for (const auto& f : feats[i]) {
            auto [it, _] = grad.try_emplace(f, m, 0.0);
            it->second[c] += g;
          }
        }
      }
      const double step = params_.learning_rate / static_cast<double>(end - start);
      for (std::size_t c = 0; c < m; ++c) next->bias_[c] -= step * bias_grad[c];
      for (const auto& [f, g] : grad) {
        auto& w = next->weights_.at(f);
        for (std::size_t c = 0; c < m; ++c) w[c] -= step * (g[c] + params_.l2 * w[c]);
      }
      ++next->steps_;
    }
  }
  return next;
}

ClassifierPtr BowClassifier::reinitialized() const {
  return std::make_shared<BowClassifier>(classes_, params_);
}

std::vector<std::string> BowClassifier::predict(std::span<const std::string> texts) const {
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto s = scores(t);
    std::size_t best = 0;
    for (std::size_t c = 1; c < s.size(); ++c) {
      if (s[c] > s[best]) best = c;
    }
    out.push_back(classes_[best]);
  }
  return out;
}

nlohmann::json BowClassifier::to_json() const {
  nlohmann::json w = nlohmann::json::object();
  for (const auto& [f, v] : weights_) w[f] = v;
  return {{"kind", kind()},
          {"classes", classes_},
          {"learning_rate", params_.learning_rate},
          {"l2", params_.l2},
          {"batch_size", params_.batch_size},
          {"bias", bias_},
          {"weights", w},
          {"steps", steps_}};
}

std::shared_ptr<const BowClassifier> BowClassifier::from_json(const nlohmann::json& j) {
  try {
    Params p;
    p.learning_rate = j.at("learning_rate").get<double>();
    p.l2 = j.at("l2").get<double>();
    p.batch_size = j.at("batch_size").get<std::size_t>();
    auto c = std::make_shared<BowClassifier>(j.at("classes").get<std::vector<std::string>>(), p);
    c->bias_ = j.at("bias").get<std::vector<double>>();
    for (const auto& [f, v] : j.at("weights").items()) c->weights_[f] = v.get<std::vector<double>>();
    c->steps_ = j.at("steps").get<std::uint64_t>();
    if (c->bias_.size() != c->classes_.size()) throw ConfigError("classifier state: bias size mismatch");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed classifier state: ") + e.what());
  }
}

ClassifierRegistry& ClassifierRegistry::global() {
  static ClassifierRegistry registry;
  return registry;
}

ClassifierRegistry::ClassifierRegistry() {
  factories_["bow"] = [](const std::vector<std::string>& classes, const nlohmann::json& p) -> ClassifierPtr {
    BowClassifier::Params params;
    params.learning_rate = p.value("learning_rate", params.learning_rate);
    params.l2 = p.value("l2", params.l2);
    params.batch_size = p.value("batch_size", params.batch_size);
    return std::make_shared<BowClassifier>(classes, params);
  };
}

void ClassifierRegistry::add(const std::string& id, ClassifierFactory factory) {
  if (factories_.count(id)) throw PreconditionError("classifier '" + id + "' already registered");
  factories_[id] = std::move(factory);
}

ClassifierPtr ClassifierRegistry::create(const std::string& id, const std::vector<std::string>& classes,
                                         const nlohmann::json& params) const {
  auto it = factories_.find(id);
  if (it == factories_.end()) throw NotFoundError("unknown classifier '" + id + "'");
  return it->second(classes, params);
}

ClassifierPtr load_classifier(const nlohmann::json& state) {
  if (state.value("kind", std::string()) == "bow") return BowClassifier::from_json(state);
  throw NotFoundError("cannot restore classifier of kind '" + state.value("kind", std::string()) + "'");
}

}  // namespace qacgen
