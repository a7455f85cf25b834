#include "qacgen/schema.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "qacgen/errors.hpp"
#include "qacgen/rng.hpp"
#include "qacgen/util.hpp"

namespace qacgen {

namespace {

// Stream tag separating few-shot resampling from every generation stream.
constexpr std::uint64_t kFewShotStream = 0x66657773686f74ULL;  // "fewshot"

bool line_has_marker(std::string_view field) {
  for (const auto& line : split_lines(field)) {
    auto t = trim(line);
    for (const char* marker : {kQuestionMarker, kAnswerMarker, kContextMarker}) {
      if (starts_with_icase(t, marker)) return true;
    }
  }
  return false;
}

}  // namespace

std::optional<std::string> validate(const QATriple& triple) {
  const std::pair<const char*, const std::string*> fields[] = {
      {"question", &triple.question}, {"answer", &triple.answer}, {"context", &triple.context}};
  for (const auto& [name, value] : fields) {
    if (trim(*value).empty()) return std::string(name) + " is empty";
    if (line_has_marker(*value)) return std::string(name) + " contains a reserved marker";
  }
  return std::nullopt;
}

TaskSpec::TaskSpec(std::string task_id, std::vector<std::string> classes, std::string question,
                   std::map<std::string, std::string> verbalizer)
    : task_id_(std::move(task_id)), question_(trim(question)) {
  if (task_id_.empty()) throw PreconditionError("task_id is empty");
  if (classes.empty()) throw PreconditionError("task '" + task_id_ + "' has no classes");
  if (question_.empty() || question_.back() != '?') {
    throw PreconditionError("task '" + task_id_ + "': question must end with '?'");
  }
  std::set<std::string> seen;
  for (auto& c : classes) {
    std::string lc = to_lower(trim(c));
    if (lc.empty()) throw PreconditionError("task '" + task_id_ + "': empty class identifier");
    if (!seen.insert(lc).second) {
      throw PreconditionError("task '" + task_id_ + "': duplicate class '" + lc + "'");
    }
    classes_.push_back(std::move(lc));
  }
  std::map<std::string, std::string> normalized;
  for (const auto& [k, v] : verbalizer) normalized[to_lower(trim(k))] = to_lower(trim(v));
  std::set<std::string> words;
  for (const auto& c : classes_) {
    auto it = normalized.find(c);
    if (it == normalized.end() || it->second.empty()) {
      throw PreconditionError("task '" + task_id_ + "': verbalizer has no word for class '" + c + "'");
    }
    const auto& word = it->second;
    if (split_words(word).size() != 1 || word.find_first_of(" \t\r\n") != std::string::npos) {
      throw PreconditionError("task '" + task_id_ + "': verbalized label '" + word +
                              "' is not a single word");
    }
    if (!words.insert(word).second) {
      throw PreconditionError("task '" + task_id_ + "': verbalizer is not injective ('" + word + "')");
    }
    verbalizer_[c] = word;
  }
  if (normalized.size() != classes_.size()) {
    throw PreconditionError("task '" + task_id_ + "': verbalizer maps labels outside the class set");
  }
}

bool TaskSpec::has_class(const std::string& label) const {
  return verbalizer_.count(label) != 0;
}

std::size_t TaskSpec::class_index(const std::string& label) const {
  auto it = std::find(classes_.begin(), classes_.end(), label);
  if (it == classes_.end()) {
    throw NotFoundError("label '" + label + "' is not a class of task '" + task_id_ + "'");
  }
  return static_cast<std::size_t>(it - classes_.begin());
}

const std::string& TaskSpec::verbalize(const std::string& label) const {
  auto it = verbalizer_.find(label);
  if (it == verbalizer_.end()) {
    throw NotFoundError("label '" + label + "' is not a class of task '" + task_id_ + "'");
  }
  return it->second;
}

nlohmann::ordered_json TaskSpec::to_json() const {
  nlohmann::ordered_json j;
  j["task_id"] = task_id_;
  j["question"] = question_;
  j["classes"] = classes_;
  nlohmann::ordered_json verb = nlohmann::ordered_json::object();
  for (const auto& c : classes_) verb[c] = verbalizer_.at(c);
  j["verbalizer"] = verb;
  return j;
}

TaskSpec TaskSpec::from_json(const nlohmann::json& j) {
  try {
    return TaskSpec(j.at("task_id").get<std::string>(),
                    j.at("classes").get<std::vector<std::string>>(),
                    j.at("question").get<std::string>(),
                    j.at("verbalizer").get<std::map<std::string, std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed task spec: ") + e.what());
  }
}

std::vector<std::string> builtin_task_ids() {
  return {"imdb", "yelp", "sst2", "yahoo", "nyt", "agnews"};
}

TaskSpec builtin_task(const std::string& task_id) {
  // Class identifiers double as verbalized labels for the catalog.
  auto identity = [](const std::vector<std::string>& labels) {
    std::map<std::string, std::string> m;
    for (const auto& l : labels) m[l] = l;
    return m;
  };
  auto make = [&](const std::string& question, std::vector<std::string> labels) {
    auto verb = identity(labels);
    return TaskSpec(task_id, std::move(labels), question, std::move(verb));
  };
  const std::string topic_question = "what is this document about?";
  std::string id = to_lower(task_id);
  if (id == "imdb") return make("is this movie good or bad?", {"good", "bad"});
  if (id == "yelp") return make("how is the service?", {"awful", "bad", "fine", "good", "excellent"});
  if (id == "sst2") return make("is this sentence positive or negative?", {"positive", "negative"});
  if (id == "yahoo") {
    return make(topic_question, {"sports", "society", "science", "health", "politics", "education",
                                 "computer", "business", "entertainment", "relationship"});
  }
  // Four labels, as in the published table (the dataset appendix mentions five genres).
  if (id == "nyt") return make(topic_question, {"arts", "business", "politics", "sports"});
  if (id == "agnews") return make(topic_question, {"sports", "business", "technology", "politics"});
  throw NotFoundError("unknown task '" + task_id + "'; known tasks: " + join(builtin_task_ids(), ", "));
}

FewShotSet sample_few_shot(std::span<const LabeledExample> pool, const TaskSpec& spec,
                           std::size_t shots, std::uint64_t seed) {
  if (shots == 0) throw PreconditionError("shots must be >= 1");
  FewShotSet out{spec.task_id(), {}, shots};
  out.examples.reserve(shots * spec.classes().size());
  for (std::size_t ci = 0; ci < spec.classes().size(); ++ci) {
    const auto& cls = spec.classes()[ci];
    std::vector<std::size_t> candidates;
    std::unordered_set<std::string> texts;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool[i].label == cls && texts.insert(pool[i].text).second) candidates.push_back(i);
    }
    if (candidates.size() < shots) {
      throw PreconditionError("pool has " + std::to_string(candidates.size()) +
                              " distinct examples of class '" + cls + "', need " +
                              std::to_string(shots));
    }
    // Partial Fisher-Yates: position j swaps with a uniform pick from [j, n).
    Rng rng(mix64(seed, kFewShotStream, ci));
    for (std::size_t j = 0; j < shots; ++j) {
      std::size_t pick = j + rng.below(candidates.size() - j);
      std::swap(candidates[j], candidates[pick]);
      out.examples.push_back(pool[candidates[j]]);
    }
  }
  return out;
}

std::vector<LabeledExample> read_labeled_jsonl(const std::filesystem::path& path) {
  std::vector<LabeledExample> out;
  for (const auto& row : read_jsonl(path)) {
    try {
      LabeledExample ex{row.at("text").get<std::string>(), to_lower(trim(row.at("label").get<std::string>()))};
      if (trim(ex.text).empty()) throw IngestError(path.string() + ": empty text");
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw IngestError(path.string() + ": " + e.what());
    }
  }
  return out;
}

std::string labeled_to_jsonl(std::span<const LabeledExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    nlohmann::ordered_json j;
    j["text"] = ex.text;
    j["label"] = ex.label;
    out += j.dump();
    out += '\n';
  }
  return out;
}

TaskSpec load_task(const std::string& id_or_path) {
  auto ids = builtin_task_ids();
  if (std::find(ids.begin(), ids.end(), to_lower(id_or_path)) != ids.end()) {
    return builtin_task(id_or_path);
  }
  if (!std::filesystem::exists(id_or_path)) return builtin_task(id_or_path);  // NotFoundError
  try {
    return TaskSpec::from_json(nlohmann::json::parse(read_file(id_or_path)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(id_or_path + ": " + e.what());
  }
}

}  // namespace qacgen
