#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qacgen/schema.hpp"

namespace qacgen {

class ClassifierBackend;
using ClassifierPtr = std::shared_ptr<const ClassifierBackend>;

// Target-task classifier. Like generator backends, states are immutable and
// train() returns the continued state.
class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;

  virtual std::string kind() const = 0;
  // Continues training from this state. Deterministic given the seed.
  virtual ClassifierPtr train(std::span<const LabeledExample> examples, int epochs,
                              std::uint64_t seed) const = 0;
  // Untrained state with the same classes and hyperparameters.
  virtual ClassifierPtr reinitialized() const = 0;
  // Total: every text gets one of classes().
  virtual std::vector<std::string> predict(std::span<const std::string> texts) const = 0;
  virtual const std::vector<std::string>& classes() const = 0;
  virtual std::size_t batch_size() const = 0;
  virtual std::uint64_t steps_trained() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

// Multinomial logistic regression over binary bag-of-words features, trained
// by mini-batch SGD with an epoch-seeded shuffle. Prediction ties go to the
// lowest class index.
class BowClassifier final : public ClassifierBackend {
 public:
  struct Params {
    double learning_rate = 0.5;
    double l2 = 0.0;
    std::size_t batch_size = 32;
  };

  BowClassifier(std::vector<std::string> classes, Params params);

  std::string kind() const override { return "bow"; }
  ClassifierPtr train(std::span<const LabeledExample> examples, int epochs,
                      std::uint64_t seed) const override;
  ClassifierPtr reinitialized() const override;
  std::vector<std::string> predict(std::span<const std::string> texts) const override;
  const std::vector<std::string>& classes() const override { return classes_; }
  std::size_t batch_size() const override { return params_.batch_size; }
  std::uint64_t steps_trained() const override { return steps_; }
  nlohmann::json to_json() const override;
  static std::shared_ptr<const BowClassifier> from_json(const nlohmann::json& j);

  // Lowercased whitespace tokens with surrounding punctuation stripped, deduplicated.
  static std::vector<std::string> features(std::string_view text);
  std::vector<double> scores(std::string_view text) const;

 private:
  std::vector<std::string> classes_;
  Params params_;
  std::vector<double> bias_;
  std::map<std::string, std::vector<double>> weights_;
  std::uint64_t steps_ = 0;
};

using ClassifierFactory =
    std::function<ClassifierPtr(const std::vector<std::string>& classes, const nlohmann::json& params)>;

class ClassifierRegistry {
 public:
  static ClassifierRegistry& global();

  void add(const std::string& id, ClassifierFactory factory);
  ClassifierPtr create(const std::string& id, const std::vector<std::string>& classes,
                       const nlohmann::json& params = nlohmann::json::object()) const;

 private:
  ClassifierRegistry();
  std::map<std::string, ClassifierFactory> factories_;
};

ClassifierPtr load_classifier(const nlohmann::json& state);

}  // namespace qacgen
