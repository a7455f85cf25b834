#include "qacgen/harness.hpp"

#include <algorithm>
#include <set>

#include "qacgen/baselines.hpp"
#include "qacgen/errors.hpp"
#include "qacgen/qacformat.hpp"
#include "qacgen/rng.hpp"
#include "qacgen/util.hpp"

namespace qacgen {

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = task;
  j["train_path"] = train_path;
  j["test_path"] = test_path;
  j["qa_corpus_path"] = qa_corpus_path;
  j["qa_format"] = qa_format;
  j["unlabeled_path"] = unlabeled_path;
  j["eda_lexicon_path"] = eda_lexicon_path;
  j["backend"] = backend;
  j["backend_params"] = backend_params;
  j["classifier"] = classifier;
  j["classifier_params"] = classifier_params;
  j["mode"] = mode;
  j["shots"] = shots;
  j["n_per_label"] = n_per_label;
  j["k"] = k;
  j["max_new_tokens"] = max_new_tokens;
  j["qac_epochs"] = qac_epochs;
  j["adapt_epochs"] = adapt_epochs;
  j["classifier_epochs"] = classifier_epochs;
  j["batch_size"] = batch_size;
  j["restart_seeds"] = restart_seeds;
  j["self_train_iterations"] = self_train_iterations;
  j["self_train_reinit"] = self_train_reinit;
  j["lowercase"] = lowercase;
  j["threads"] = threads;
  j["output_dir"] = output_dir;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  const auto known = c.to_json();
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("task", c.task);
    get("train_path", c.train_path);
    get("test_path", c.test_path);
    get("qa_corpus_path", c.qa_corpus_path);
    get("qa_format", c.qa_format);
    get("unlabeled_path", c.unlabeled_path);
    get("eda_lexicon_path", c.eda_lexicon_path);
    get("backend", c.backend);
    if (j.contains("backend_params")) c.backend_params = j.at("backend_params");
    get("classifier", c.classifier);
    if (j.contains("classifier_params")) c.classifier_params = j.at("classifier_params");
    get("mode", c.mode);
    get("shots", c.shots);
    get("n_per_label", c.n_per_label);
    get("k", c.k);
    get("max_new_tokens", c.max_new_tokens);
    get("qac_epochs", c.qac_epochs);
    get("adapt_epochs", c.adapt_epochs);
    get("classifier_epochs", c.classifier_epochs);
    get("batch_size", c.batch_size);
    get("restart_seeds", c.restart_seeds);
    get("self_train_iterations", c.self_train_iterations);
    get("self_train_reinit", c.self_train_reinit);
    get("lowercase", c.lowercase);
    get("threads", c.threads);
    get("output_dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  if (c.qa_format != "canonical" && c.qa_format != "squad") {
    throw ConfigError("qa_format must be 'canonical' or 'squad'");
  }
  if (c.restart_seeds.empty()) throw ConfigError("restart_seeds is empty");
  if (c.shots < 1 || c.n_per_label < 1 || c.k < 1 || c.max_new_tokens < 1 || c.batch_size < 1 ||
      c.qac_epochs < 1 || c.adapt_epochs < 1 || c.classifier_epochs < 1) {
    throw ConfigError("counts and epochs must be >= 1");
  }
  check_mode(c.mode);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto c = from_json(j);
  const auto base = std::filesystem::absolute(path).parent_path().lexically_normal();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(c.train_path);
  resolve(c.test_path);
  resolve(c.qa_corpus_path);
  resolve(c.unlabeled_path);
  resolve(c.eda_lexicon_path);
  if (!builtin_task_ids().empty()) {
    auto ids = builtin_task_ids();
    if (std::find(ids.begin(), ids.end(), to_lower(c.task)) == ids.end()) resolve(c.task);
  }
  c.base_dir = base;
  return c;
}

std::string ExperimentConfig::digest() const {
  // Key order of to_json() is fixed, so dump() is canonical. Paths are hashed
  // relative to the config file, and settings that cannot change results are
  // left out, so a copied experiment directory keeps its digest.
  auto j = to_json();
  j.erase("output_dir");
  j.erase("threads");
  if (!base_dir.empty()) {
    for (const char* key : {"task", "train_path", "test_path", "qa_corpus_path", "unlabeled_path", "eda_lexicon_path"}) {
      const std::filesystem::path p = j[key].get<std::string>();
      if (p.is_absolute()) {
        auto rel = p.lexically_relative(base_dir);
        if (!rel.empty() && *rel.begin() != "..") j[key] = rel.string();
      }
    }
  }
  return Fnv1a().update(j.dump()).hex();
}

void check_mode(const std::string& mode) {
  const auto& modes = protocol_modes();
  if (std::find(modes.begin(), modes.end(), mode) != modes.end()) return;
  if (mode.starts_with("baseline:") && mode.size() > 9) return;
  throw ConfigError("unknown mode '" + mode + "'");
}

ExperimentData load_experiment_data(const ExperimentConfig& config) {
  ExperimentData data{load_task(config.task), {}, {}, {}};
  if (config.test_path.empty()) throw ConfigError("config has no test_path");
  data.test = read_labeled_jsonl(config.test_path);
  if (config.mode != "conda_zero_shot") {
    if (config.train_path.empty()) throw ConfigError("mode '" + config.mode + "' needs train_path");
    data.pool = read_labeled_jsonl(config.train_path);
  }
  const bool needs_qa = config.mode.starts_with("conda_") || config.mode.starts_with("ablation_");
  if (needs_qa) {
    if (config.qa_corpus_path.empty()) throw ConfigError("mode '" + config.mode + "' needs qa_corpus_path");
    IngestResult ingested = config.qa_format == "squad"
                                ? ingest_squad(nlohmann::json::parse(read_file(config.qa_corpus_path)))
                                : ingest_canonical(config.qa_corpus_path);
    data.qa_corpus = std::move(ingested.triples);
  }
  return data;
}

void EvalResult::aggregate() {
  std::vector<double> mi, ma;
  for (const auto& s : per_seed) {
    mi.push_back(s.micro_f1);
    ma.push_back(s.macro_f1);
  }
  micro = mean_std(mi);
  macro = mean_std(ma);
}

nlohmann::ordered_json EvalResult::to_json() const {
  nlohmann::ordered_json j;
  j["mode"] = mode;
  j["task"] = task;
  nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
  for (const auto& s : per_seed) {
    nlohmann::ordered_json e;
    e["seed"] = s.seed;
    e["micro_f1"] = s.micro_f1;
    e["macro_f1"] = s.macro_f1;
    seeds.push_back(e);
  }
  j["per_seed"] = seeds;
  j["mean"] = {{"micro_f1", micro.mean}, {"macro_f1", macro.mean}};
  j["std"] = {{"micro_f1", micro.std}, {"macro_f1", macro.std}};
  j["config_digest"] = config_digest;
  return j;
}

EvalResult EvalResult::from_json(const nlohmann::json& j) {
  EvalResult r;
  r.mode = j.at("mode").get<std::string>();
  r.task = j.at("task").get<std::string>();
  for (const auto& s : j.at("per_seed")) {
    r.per_seed.push_back({s.at("seed").get<std::uint64_t>(), s.at("micro_f1").get<double>(),
                          s.at("macro_f1").get<double>()});
  }
  r.config_digest = j.value("config_digest", std::string());
  r.aggregate();
  return r;
}

RestartSeeds::RestartSeeds(std::uint64_t s)
    : few_shot(s),
      adapt(mix64(s, 1)),
      generation(mix64(s, 2)),
      classifier(mix64(s, 3)),
      augmenter(mix64(s, 4)) {}

namespace {

std::vector<std::string> texts_of(std::span<const LabeledExample> xs) {
  std::vector<std::string> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.text);
  return out;
}

std::vector<std::string> labels_of(std::span<const LabeledExample> xs) {
  std::vector<std::string> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.label);
  return out;
}

SamplingPolicy make_policy(const ExperimentConfig& config, std::uint64_t seed) {
  SamplingPolicy p;
  p.k = config.k;
  p.max_new_tokens = config.max_new_tokens;
  p.seed = seed;
  return p;
}

// LAMBADA baseline: label-prefixed language-model fine-tuning of the raw
// backend on the few-shot set, then label-prompted generation.
SyntheticDataset lambada_generate(const PipelineState& raw, const FewShotSet& few_shot,
                                  const TaskSpec& spec, const ExperimentConfig& config,
                                  const RestartSeeds& seeds) {
  std::vector<QacDocument> docs;
  for (const auto& ex : few_shot.examples) {
    auto text = lambada_format({flatten_newlines(ex.text), ex.label}, spec);
    docs.push_back({config.lowercase ? to_lower(text) : text});
  }
  auto tuned = raw.backend->fine_tune(docs, config.adapt_epochs, seeds.adapt);
  auto policy = with_default_stops(make_policy(config, seeds.generation), *tuned);
  const std::string eot = tuned->end_of_text_token().value_or("");
  SyntheticDataset out{spec.task_id(), {}, {}};
  for (std::size_t ci = 0; ci < spec.classes().size(); ++ci) {
    const auto& label = spec.classes()[ci];
    const auto prompt = lambada_prompt(label, spec);
    for (std::size_t i = 0; i < config.n_per_label; ++i) {
      const auto seed = mix64(seeds.generation, ci, i);
      std::string text;
      int attempt = 1;
      for (; attempt <= kMaxGenerationAttempts; ++attempt) {
        policy.seed = attempt == 1 ? seed : mix64(seed, static_cast<std::uint64_t>(attempt));
        text = extract_context(tuned->sample(prompt, policy), eot);
        if (!text.empty()) break;
      }
      if (text.empty()) throw GenerationError("LAMBADA: no usable text for prompt: " + prompt);
      out.samples.push_back({text, label});
      out.provenance.push_back({prompt, policy.seed, "lambada:" + tuned->fingerprint(), attempt});
    }
  }
  return out;
}

SyntheticDataset augmenter_generate(const std::string& name, const FewShotSet& few_shot,
                                    const TaskSpec& spec, const ExperimentConfig& config,
                                    const RestartSeeds& seeds) {
  Augmenter augmenter;
  if (name == "eda" && !config.eda_lexicon_path.empty()) {
    auto lexicon = std::make_shared<LexiconSynonyms>(LexiconSynonyms::from_jsonl(config.eda_lexicon_path));
    augmenter = [lexicon](const LabeledExample& ex, std::uint64_t seed) {
      EdaPolicy policy;
      policy.seed = seed;
      return eda_augment(ex, policy, *lexicon);
    };
  } else {
    augmenter = AugmenterRegistry::global().get(name);
  }
  auto samples = augment_to_count(augmenter, few_shot.examples, spec, config.n_per_label, seeds.augmenter);
  SyntheticDataset out{spec.task_id(), std::move(samples), {}};
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.provenance.push_back({"", seeds.augmenter, "augmenter:" + name, 1});
  }
  return out;
}

}  // namespace

ProtocolRun run_protocol(const ExperimentConfig& config, const ExperimentData& data) {
  check_mode(config.mode);
  const auto& spec = data.task;
  const auto& mode = config.mode;
  const std::size_t m = spec.classes().size();
  const bool zero_shot = mode == "conda_zero_shot";
  const bool uses_generator = mode.starts_with("conda_") || mode.starts_with("ablation_");
  const bool adapts = mode == "conda_few_shot" || mode == "ablation_minus_few_shot";
  const bool keeps_few_shot = mode != "conda_zero_shot" && mode != "ablation_minus_few_shot";
  const std::string baseline = mode.starts_with("baseline:") ? mode.substr(9) : "";

  if (data.test.empty()) throw PreconditionError("test set is empty");
  if (!baseline.empty() && baseline != "lambada") AugmenterRegistry::global().get(baseline);

  ProtocolRun run;
  run.result.mode = mode;
  run.result.task = spec.task_id();
  run.result.config_digest = config.digest();

  const SerializeOptions serialize{config.lowercase};
  std::optional<PipelineState> raw;
  if (uses_generator || baseline == "lambada") {
    raw = PipelineState::from_raw(BackendRegistry::global().create(config.backend, config.backend_params),
                                  serialize);
  }
  if (uses_generator) {
    run.general_generator = build_general_generator(*raw, data.qa_corpus, config.qac_epochs, 0);
  }

  const auto test_texts = texts_of(data.test);
  const auto test_gold = labels_of(data.test);
  const auto reference_size = (config.n_per_label + config.shots) * m;

  for (auto restart_seed : config.restart_seeds) {
    RestartRecord rec;
    rec.seed = restart_seed;
    const RestartSeeds seeds(restart_seed);
    try {
      if (!zero_shot) rec.few_shot = sample_few_shot(data.pool, spec, config.shots, seeds.few_shot);

      if (uses_generator) {
        PipelineState state = *run.general_generator;
        if (adapts) state = adapt_to_task(state, *rec.few_shot, spec, config.adapt_epochs, seeds.adapt);
        rec.fingerprints = state.to_json()["fingerprints"];
        rec.synthetic = generate_synthetic(state, spec, config.n_per_label,
                                           make_policy(config, seeds.generation), config.threads);
      } else if (baseline == "lambada") {
        rec.synthetic = lambada_generate(*raw, *rec.few_shot, spec, config, seeds);
        rec.fingerprints["raw"] = raw->backend->fingerprint();
      } else if (!baseline.empty()) {
        rec.synthetic = augmenter_generate(baseline, *rec.few_shot, spec, config, seeds);
      }

      if (rec.synthetic) {
        rec.leakage = leakage_report(*rec.synthetic, spec);
        rec.training_set = assemble_training_set(*rec.synthetic, keeps_few_shot ? &*rec.few_shot : nullptr);
      } else {
        rec.training_set = rec.few_shot->examples;
      }

      rec.classifier_epochs = config.classifier_epochs;
      if (mode == "few_shot_only") {
        rec.classifier_epochs = static_cast<int>(
            parity_epochs(reference_size, static_cast<std::uint64_t>(config.classifier_epochs),
                          rec.training_set.size(), config.batch_size)
                .epochs);
      }
      auto params = config.classifier_params;
      if (!params.contains("batch_size")) params["batch_size"] = config.batch_size;
      auto classifier = ClassifierRegistry::global().create(config.classifier, spec.classes(), params);
      rec.classifier = classifier->train(rec.training_set, rec.classifier_epochs, seeds.classifier);
      const auto pred = rec.classifier->predict(test_texts);
      rec.scores = micro_macro_f1(test_gold, pred, spec.classes());
      rec.ok = true;
      run.result.per_seed.push_back({restart_seed, rec.scores.micro, rec.scores.macro});
    } catch (const Error& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    run.restarts.push_back(std::move(rec));
  }

  run.result.aggregate();
  if (run.result.per_seed.size() < 2) {
    std::string why;
    for (const auto& r : run.restarts) {
      if (!r.ok) why += "\n  seed " + std::to_string(r.seed) + ": " + r.error;
    }
    throw ProtocolError("only " + std::to_string(run.result.per_seed.size()) +
                        " restart(s) succeeded; at least 2 are required" + why);
  }
  return run;
}

ProtocolRun run_protocol(const ExperimentConfig& config) {
  return run_protocol(config, load_experiment_data(config));
}

SelfTrainResult self_train(ClassifierPtr state, std::span<const LabeledExample> labeled,
                           std::span<const std::string> unlabeled, const SelfTrainOptions& options) {
  if (!state) throw PreconditionError("self_train: null classifier");
  if (options.iterations < 1) throw PreconditionError("self_train: iterations must be >= 1");
  if (unlabeled.empty()) throw PreconditionError("self_train: no unlabeled texts");

  SelfTrainResult result;
  auto score = [&](const ClassifierPtr& c) -> std::optional<F1Scores> {
    if (!options.eval_set || options.eval_set->empty()) return std::nullopt;
    auto pred = c->predict(texts_of(*options.eval_set));
    return micro_macro_f1(labels_of(*options.eval_set), pred, c->classes());
  };
  result.iterations.push_back({0, labeled.size(), {}, score(state)});

  for (int it = 1; it <= options.iterations; ++it) {
    std::vector<std::string> pseudo;
    try {
      pseudo = state->predict(unlabeled);
    } catch (const Error& e) {
      throw Error("self-training iteration " + std::to_string(it) + ": " + e.what());
    }
    std::vector<LabeledExample> train(labeled.begin(), labeled.end());
    SelfTrainIteration stats;
    stats.iteration = it;
    for (const auto& c : state->classes()) stats.pseudo_labels[c] = 0;
    for (std::size_t i = 0; i < unlabeled.size(); ++i) {
      train.push_back({unlabeled[i], pseudo[i]});
      ++stats.pseudo_labels[pseudo[i]];
    }
    stats.training_size = train.size();
    if (options.observer) options.observer(it, train);
    auto base = options.reinitialize ? state->reinitialized() : state;
    try {
      state = base->train(train, options.epochs, mix64(options.seed, static_cast<std::uint64_t>(it)));
    } catch (const Error& e) {
      throw Error("self-training iteration " + std::to_string(it) + ": " + e.what());
    }
    stats.scores = score(state);
    result.iterations.push_back(std::move(stats));
  }
  result.state = state;
  return result;
}

}  // namespace qacgen
