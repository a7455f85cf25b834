#include "qacgen/augmentor.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "qacgen/errors.hpp"
#include "qacgen/rng.hpp"
#include "qacgen/util.hpp"

namespace qacgen {

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::raw:
      return "raw";
    case Stage::qac_tuned:
      return "qac_tuned";
    case Stage::adapted:
      return "adapted";
  }
  return "unknown";
}

PipelineState PipelineState::from_raw(BackendPtr backend, SerializeOptions serialize) {
  if (!backend) throw PreconditionError("null backend");
  PipelineState s;
  s.stage = Stage::raw;
  s.fingerprints.emplace_back(Stage::raw, backend->fingerprint());
  s.backend = std::move(backend);
  s.serialize = serialize;
  return s;
}

const std::string& PipelineState::fingerprint(Stage s) const {
  for (const auto& [stage, fp] : fingerprints) {
    if (stage == s) return fp;
  }
  throw StateError("pipeline never reached stage " + to_string(s));
}

nlohmann::ordered_json PipelineState::to_json() const {
  nlohmann::ordered_json j;
  j["stage"] = to_string(stage);
  j["backend"] = backend ? backend->kind() : "";
  nlohmann::ordered_json fps = nlohmann::ordered_json::object();
  for (const auto& [s, fp] : fingerprints) fps[to_string(s)] = fp;
  j["fingerprints"] = fps;
  j["qa_corpus_size"] = qa_corpus_size;
  j["adaptation_docs"] = adaptation_docs;
  return j;
}

PipelineState build_general_generator(const PipelineState& raw, std::span<const QATriple> qa_corpus,
                                      int epochs, std::uint64_t seed) {
  if (raw.stage != Stage::raw) {
    throw StateError("QAC fine-tuning needs a raw state, got " + to_string(raw.stage));
  }
  if (qa_corpus.empty()) throw PreconditionError("QA corpus is empty");
  std::vector<QacDocument> docs;
  docs.reserve(qa_corpus.size());
  for (const auto& t : qa_corpus) docs.push_back(serialize_qac(t, raw.serialize));
  PipelineState next = raw;
  next.backend = raw.backend->fine_tune(docs, epochs, seed);
  next.stage = Stage::qac_tuned;
  next.fingerprints.emplace_back(Stage::qac_tuned, next.backend->fingerprint());
  next.qa_corpus_size = qa_corpus.size();
  return next;
}

PipelineState adapt_to_task(const PipelineState& state, const FewShotSet& few_shot,
                            const TaskSpec& spec, int epochs, std::uint64_t seed) {
  if (state.stage != Stage::qac_tuned) {
    throw StateError("domain adaptation needs a qac_tuned state, got " + to_string(state.stage));
  }
  if (few_shot.task_id != spec.task_id()) {
    throw PreconditionError("few-shot set belongs to task '" + few_shot.task_id + "', not '" +
                            spec.task_id() + "'");
  }
  auto docs = cast_dataset(few_shot, spec, state.serialize);
  PipelineState next = state;
  next.backend = state.backend->fine_tune(docs, epochs, seed);
  next.stage = Stage::adapted;
  next.fingerprints.emplace_back(Stage::adapted, next.backend->fingerprint());
  next.adaptation_docs = docs.size();
  return next;
}

std::string extract_context(std::string_view raw, std::string_view end_of_text) {
  if (!end_of_text.empty()) {
    auto pos = raw.find(end_of_text);
    if (pos != std::string_view::npos) raw = raw.substr(0, pos);
  }
  std::size_t cut = raw.size();
  std::size_t line_start = 0;
  for (int line = 0; line_start <= raw.size(); ++line) {
    auto nl = raw.find('\n', line_start);
    auto text = raw.substr(line_start, nl == std::string_view::npos ? raw.npos : nl - line_start);
    auto t = trim(text);
    if (starts_with_icase(t, kQuestionMarker) || (line > 0 && t.empty())) {
      cut = line_start;
      break;
    }
    if (nl == std::string_view::npos) break;
    line_start = nl + 1;
  }
  return std::string(trim(raw.substr(0, cut)));
}

namespace {

template <typename Accept>
std::pair<std::string, std::pair<std::uint64_t, int>> sample_with_retries(
    const PipelineState& state, const std::string& prompt, std::uint64_t seed,
    const SamplingPolicy& policy, Accept accept) {
  SamplingPolicy p = with_default_stops(policy, *state.backend);
  const std::string eot = state.backend->end_of_text_token().value_or("");
  for (int attempt = 1; attempt <= kMaxGenerationAttempts; ++attempt) {
    p.seed = attempt == 1 ? seed : mix64(seed, static_cast<std::uint64_t>(attempt));
    auto context = extract_context(state.backend->sample(prompt, p), eot);
    if (!context.empty() && accept(context)) return {context, {p.seed, attempt}};
  }
  throw GenerationError("no usable context after " + std::to_string(kMaxGenerationAttempts) +
                        " attempts for prompt: " + prompt);
}

void check_generation_state(const PipelineState& state) {
  if (state.stage == Stage::raw) {
    throw StateError("generation needs a qac_tuned or adapted state, got raw");
  }
}

}  // namespace

GeneratedSample generate_one(const PipelineState& state, const TaskSpec& spec,
                             std::size_t class_index, std::size_t sample_index,
                             const SamplingPolicy& policy) {
  check_generation_state(state);
  const auto& label = spec.classes().at(class_index);
  const auto prompt = qa_prompt(spec.question(), spec.verbalize(label), state.serialize);
  const auto seed = mix64(policy.seed, class_index, sample_index);
  auto [text, meta] = sample_with_retries(state, prompt, seed, policy, [](const std::string&) { return true; });
  return {{std::move(text), label}, {prompt, meta.first, state.backend->backend_id(), meta.second}};
}

SyntheticDataset generate_synthetic(const PipelineState& state, const TaskSpec& spec,
                                    std::size_t n_per_label, const SamplingPolicy& policy,
                                    std::size_t threads) {
  check_generation_state(state);
  policy.check();
  if (n_per_label < 1) throw PreconditionError("n_per_label must be >= 1");
  const std::size_t m = spec.classes().size();
  const std::size_t total = n_per_label * m;
  std::vector<std::optional<GeneratedSample>> slots(total);

  std::atomic<std::size_t> cursor{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    while (true) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= total) return;
      try {
        slots[i] = generate_one(state, spec, i / n_per_label, i % n_per_label, policy);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        cursor.store(total);
        return;
      }
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, total));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  SyntheticDataset out{spec.task_id(), {}, {}};
  out.samples.reserve(total);
  out.provenance.reserve(total);
  for (auto& s : slots) {
    out.samples.push_back(std::move(s->example));
    out.provenance.push_back(std::move(s->provenance));
  }
  return out;
}

std::vector<QATriple> generate_for_qa_pairs(const PipelineState& state,
                                            std::span<const std::pair<std::string, std::string>> pairs,
                                            const SamplingPolicy& policy) {
  check_generation_state(state);
  policy.check();
  if (pairs.empty()) throw PreconditionError("no (question, answer) pairs given");
  std::vector<QATriple> out;
  out.reserve(pairs.size());
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const auto& [q, a] = pairs[j];
    QATriple base = normalize({q, a, "x"}, state.serialize);
    if (auto err = validate({q, a, "x"})) {
      throw PreconditionError("pair " + std::to_string(j) + ": " + *err);
    }
    const auto prompt = qa_prompt(q, a, state.serialize);
    auto [context, meta] = sample_with_retries(
        state, prompt, mix64(policy.seed, 0, j), policy,
        [&](const std::string& c) { return !validate({base.question, base.answer, c}); });
    out.push_back({base.question, base.answer, std::move(context)});
  }
  return out;
}

std::vector<LabeledExample> assemble_training_set(const SyntheticDataset& synthetic,
                                                  const FewShotSet* few_shot) {
  if (few_shot && few_shot->task_id != synthetic.task_id) {
    throw AssemblyError("synthetic data is for task '" + synthetic.task_id +
                        "' but few-shot data is for '" + few_shot->task_id + "'");
  }
  std::vector<LabeledExample> out = synthetic.samples;
  if (few_shot) out.insert(out.end(), few_shot->examples.begin(), few_shot->examples.end());
  return out;
}

LeakageReport leakage_report(const SyntheticDataset& synthetic, const TaskSpec& spec) {
  LeakageReport r;
  for (const auto& c : spec.classes()) {
    r.per_class[c] = 0;
    r.per_class_samples[c] = 0;
  }
  std::unordered_set<std::string> seen;
  for (const auto& s : synthetic.samples) {
    ++r.samples;
    ++r.per_class_samples[s.label];
    if (!seen.insert(s.text).second) ++r.duplicates;
    if (!spec.has_class(s.label)) continue;
    if (to_lower(s.text).find(to_lower(spec.verbalize(s.label))) != std::string::npos) {
      ++r.per_class[s.label];
      ++r.total;
    }
  }
  return r;
}

nlohmann::ordered_json LeakageReport::to_json() const {
  nlohmann::ordered_json j;
  j["per_class"] = per_class;
  j["total"] = total;
  j["duplicates"] = duplicates;
  j["per_class_samples"] = per_class_samples;
  j["samples"] = samples;
  j["duplicate_rate"] = duplicate_rate();
  return j;
}

std::string synthetic_to_jsonl(const SyntheticDataset& synthetic) {
  std::string out;
  for (std::size_t i = 0; i < synthetic.samples.size(); ++i) {
    const auto& s = synthetic.samples[i];
    nlohmann::ordered_json j;
    j["text"] = s.text;
    j["label"] = s.label;
    if (i < synthetic.provenance.size()) {
      const auto& p = synthetic.provenance[i];
      j["prompt"] = p.prompt;
      j["seed"] = p.seed;
      j["backend"] = p.backend;
      j["attempts"] = p.attempts;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

SyntheticDataset synthetic_from_jsonl(const std::filesystem::path& path, const std::string& task_id) {
  SyntheticDataset out{task_id, {}, {}};
  for (const auto& row : read_jsonl(path)) {
    out.samples.push_back({row.at("text").get<std::string>(), row.at("label").get<std::string>()});
    out.provenance.push_back({row.value("prompt", std::string()), row.value("seed", std::uint64_t{0}),
                              row.value("backend", std::string()), row.value("attempts", 1)});
  }
  return out;
}

}  // namespace qacgen
