#include "qacgen/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "qacgen/errors.hpp"
#include "qacgen/qacformat.hpp"
#include "qacgen/rng.hpp"
#include "qacgen/util.hpp"

namespace qacgen::cli {

namespace fs = std::filesystem;

namespace {

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

std::string seed_file(const char* stem, std::uint64_t seed, const char* ext) {
  return std::string(stem) + "_seed" + std::to_string(seed) + ext;
}

std::string pct(const MeanStd& v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << 100.0 * v.mean << " ± " << 100.0 * v.std;
  return ss.str();
}

// Refuses to reuse an output directory created by a different config.
void check_resume(const fs::path& dir, const std::string& digest, bool force) {
  const auto snapshot = dir / "config.json";
  if (force || !fs::exists(snapshot)) return;
  auto j = nlohmann::json::parse(read_file(snapshot));
  const auto previous = j.value("config_digest", std::string());
  if (previous != digest) {
    throw ConfigError(dir.string() + " holds results for config " + previous + ", not " + digest +
                      " (use --force to overwrite)");
  }
}

EvalResult load_result(const fs::path& dir) {
  const auto path = dir / "eval_result.json";
  if (!fs::exists(path)) throw NotFoundError("no eval_result.json in " + dir.string());
  return EvalResult::from_json(nlohmann::json::parse(read_file(path)));
}

}  // namespace

fs::path resolve_output_dir(const ExperimentConfig& config, const fs::path& config_path) {
  fs::path out(config.output_dir);
  if (out.is_absolute()) return out;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) return fs::path(root) / out;
  return config_path.parent_path() / out;
}

int cmd_ingest(const IngestArgs& args, std::ostream& out, std::ostream& err) {
  try {
    IngestResult result;
    if (args.format == "squad") {
      nlohmann::json root;
      try {
        root = nlohmann::json::parse(read_file(args.input));
      } catch (const nlohmann::json::exception& e) {
        throw IngestError(args.input.string() + ": " + e.what());
      }
      result = ingest_squad(root);
    } else if (args.format == "canonical") {
      result = ingest_canonical(args.input);
    } else {
      throw ConfigError("unknown ingest format '" + args.format + "'");
    }
    auto stats_path = args.stats.value_or(fs::path(args.output.string() + ".stats.json"));
    auto stats = result.stats_json();
    stats["format"] = args.format;
    stats["input"] = args.input.string();
    write_file_atomic(args.output, canonical_jsonl(result.triples));
    write_file_atomic(stats_path, dump(stats));
    for (const auto& w : result.warnings) err << "warning: " << w << "\n";
    out << "ingested " << result.triples.size() << " triples (" << result.skipped_unanswerable
        << " unanswerable skipped, " << result.rejected.size() << " rejected) -> " << args.output.string()
        << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "ingest failed: " << e.what() << "\n";
    return 1;
  }
}

void write_run_outputs(const ProtocolRun& run, const ExperimentConfig& config, const fs::path& dir) {
  const auto digest = config.digest();
  auto snapshot = config.to_json();
  snapshot["config_digest"] = digest;

  nlohmann::ordered_json fingerprints;
  fingerprints["config_digest"] = digest;
  if (run.general_generator) fingerprints["general"] = run.general_generator->to_json();
  nlohmann::ordered_json leakage;
  leakage["config_digest"] = digest;
  nlohmann::ordered_json restarts = nlohmann::ordered_json::array();
  nlohmann::ordered_json per_restart_fp = nlohmann::ordered_json::object();
  nlohmann::ordered_json per_restart_leak = nlohmann::ordered_json::object();

  for (const auto& r : run.restarts) {
    const auto key = std::to_string(r.seed);
    nlohmann::ordered_json rj;
    rj["seed"] = r.seed;
    rj["ok"] = r.ok;
    if (!r.ok) rj["error"] = r.error;
    rj["training_size"] = r.training_set.size();
    rj["classifier_epochs"] = r.classifier_epochs;
    restarts.push_back(rj);
    per_restart_fp[key] = r.fingerprints;
    if (r.leakage) per_restart_leak[key] = r.leakage->to_json();
    if (r.synthetic) write_file_atomic(dir / seed_file("generated", r.seed, ".jsonl"), synthetic_to_jsonl(*r.synthetic));
    if (r.ok) {
      write_file_atomic(dir / seed_file("train", r.seed, ".jsonl"), labeled_to_jsonl(r.training_set));
      nlohmann::ordered_json state;
      state["config_digest"] = digest;
      state["classifier"] = r.classifier->to_json();
      write_file_atomic(dir / seed_file("classifier", r.seed, ".json"), state.dump() + "\n");
    }
  }
  fingerprints["restarts"] = per_restart_fp;
  leakage["restarts"] = per_restart_leak;
  nlohmann::ordered_json restart_log;
  restart_log["config_digest"] = digest;
  restart_log["restarts"] = restarts;

  // The general generator G_Q is shared by all restarts; its state can be
  // served to other processes with `qacgen serve`.
  if (run.general_generator) {
    write_file_atomic(dir / "generator.json", run.general_generator->backend->to_json().dump() + "\n");
  }
  write_file_atomic(dir / "config.json", dump(snapshot));
  write_file_atomic(dir / "fingerprints.json", dump(fingerprints));
  write_file_atomic(dir / "leakage.json", dump(leakage));
  write_file_atomic(dir / "restarts.json", dump(restart_log));
  write_file_atomic(dir / "eval_result.json", dump(run.result.to_json()));
  write_file_atomic(dir / "results.md", markdown_table({run.result}) + "\nconfig digest: " + digest + "\n");
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  try {
    auto config = ExperimentConfig::load(args.config);
    const auto dir = resolve_output_dir(config, args.config);
    check_resume(dir, config.digest(), args.force);
    auto run = run_protocol(config);
    write_run_outputs(run, config, dir);
    for (const auto& r : run.restarts) {
      if (!r.ok) err << "restart " << r.seed << " failed: " << r.error << "\n";
    }
    out << config.mode << " on " << run.result.task << ": macro-F1 " << pct(run.result.macro)
        << ", micro-F1 " << pct(run.result.micro) << " -> " << dir.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return 1;
  }
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  try {
    if (args.axis != "n_per_label" && args.axis != "shots" && args.axis != "k") {
      throw ConfigError("sweep axis must be n_per_label, shots or k");
    }
    if (args.values.empty()) throw ConfigError("sweep needs at least one value");
    for (std::size_t i = 1; i < args.values.size(); ++i) {
      if (args.values[i] <= args.values[i - 1]) throw ConfigError("sweep values must be ascending");
    }
    const auto base = ExperimentConfig::load(args.config);
    const auto root = resolve_output_dir(base, args.config) / ("sweep_" + args.axis);
    const auto data = load_experiment_data(base);

    nlohmann::ordered_json series;
    series["axis"] = args.axis;
    series["config_digest"] = base.digest();
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    std::string csv = "value,ok,macro_f1_mean,macro_f1_std,micro_f1_mean,micro_f1_std\n";
    for (auto value : args.values) {
      ExperimentConfig c = base;
      if (args.axis == "n_per_label") c.n_per_label = value;
      if (args.axis == "shots") c.shots = value;
      if (args.axis == "k") c.k = value;
      const auto dir = root / std::to_string(value);
      c.output_dir = dir.string();
      nlohmann::ordered_json p;
      p["value"] = value;
      try {
        auto run = run_protocol(c, data);
        write_run_outputs(run, c, dir);
        p["ok"] = true;
        p["macro_f1"] = {{"mean", run.result.macro.mean}, {"std", run.result.macro.std}};
        p["micro_f1"] = {{"mean", run.result.micro.mean}, {"std", run.result.micro.std}};
        std::ostringstream row;
        row << std::setprecision(17) << value << ",1," << run.result.macro.mean << "," << run.result.macro.std
            << "," << run.result.micro.mean << "," << run.result.micro.std << "\n";
        csv += row.str();
        out << args.axis << "=" << value << ": macro-F1 " << pct(run.result.macro) << "\n";
      } catch (const Error& e) {
        p["ok"] = false;
        p["error"] = e.what();
        csv += std::to_string(value) + ",0,,,,\n";
        err << args.axis << "=" << value << " failed: " << e.what() << "\n";
      }
      points.push_back(p);
    }
    series["points"] = points;
    write_file_atomic(root / "series.json", dump(series));
    write_file_atomic(root / "series.csv", csv);
    return 0;
  } catch (const std::exception& e) {
    err << "sweep failed: " << e.what() << "\n";
    return 1;
  }
}

std::vector<std::string> read_unlabeled(const fs::path& path) {
  std::vector<std::string> texts;
  for (const auto& row : read_jsonl(path)) {
    auto text = row.is_string() ? row.get<std::string>() : row.at("text").get<std::string>();
    if (!trim(text).empty()) texts.push_back(std::move(text));
  }
  return texts;
}

int cmd_selftrain(const SelfTrainArgs& args, std::ostream& out, std::ostream& err) {
  try {
    auto config = ExperimentConfig::load(args.config);
    const auto dir = resolve_output_dir(config, args.config);
    const auto digest = config.digest();
    if (!fs::exists(dir / "eval_result.json")) {
      throw NotFoundError("no completed run in " + dir.string() + "; run `qacgen run " +
                          args.config.string() + "` first");
    }
    auto prior = load_result(dir);
    if (prior.config_digest != digest) {
      throw ConfigError("run in " + dir.string() + " was made with a different config");
    }
    auto unlabeled_path = args.unlabeled.value_or(fs::path(config.unlabeled_path));
    if (unlabeled_path.empty()) throw ConfigError("no unlabeled data given");
    const auto unlabeled = read_unlabeled(unlabeled_path);
    if (unlabeled.empty()) throw PreconditionError("unlabeled file " + unlabeled_path.string() + " is empty");
    const auto test = read_labeled_jsonl(config.test_path);

    nlohmann::ordered_json report;
    report["config_digest"] = digest;
    report["iterations"] = config.self_train_iterations;
    nlohmann::ordered_json per_restart = nlohmann::ordered_json::array();
    std::ostringstream md;
    md << "| Seed | Iteration | Train size | Mi-F1 | Ma-F1 |\n|---|---|---|---|---|\n";
    for (const auto& s : prior.per_seed) {
      auto state_json = nlohmann::json::parse(read_file(dir / seed_file("classifier", s.seed, ".json")));
      auto classifier = load_classifier(state_json.at("classifier"));
      auto labeled = read_labeled_jsonl(dir / seed_file("train", s.seed, ".jsonl"));
      SelfTrainOptions opts;
      opts.iterations = config.self_train_iterations;
      opts.epochs = config.classifier_epochs;
      opts.seed = mix64(s.seed, 5);
      opts.reinitialize = config.self_train_reinit;
      opts.eval_set = &test;
      auto result = self_train(classifier, labeled, unlabeled, opts);
      nlohmann::ordered_json rj;
      rj["seed"] = s.seed;
      nlohmann::ordered_json its = nlohmann::ordered_json::array();
      for (const auto& it : result.iterations) {
        nlohmann::ordered_json ij;
        ij["iteration"] = it.iteration;
        ij["training_size"] = it.training_size;
        ij["pseudo_labels"] = it.pseudo_labels;
        ij["micro_f1"] = it.scores->micro;
        ij["macro_f1"] = it.scores->macro;
        its.push_back(ij);
        md << "| " << s.seed << " | " << it.iteration << " | " << it.training_size << " | " << std::fixed
           << std::setprecision(2) << 100 * it.scores->micro << " | " << 100 * it.scores->macro << " |\n";
      }
      rj["per_iteration"] = its;
      per_restart.push_back(rj);
    }
    report["restarts"] = per_restart;
    write_file_atomic(dir / "selftrain.json", dump(report));
    write_file_atomic(dir / "selftrain.md", md.str());
    out << md.str();
    return 0;
  } catch (const std::exception& e) {
    err << "selftrain failed: " << e.what() << "\n";
    return 1;
  }
}

std::string markdown_table(const std::vector<EvalResult>& results) {
  std::ostringstream md;
  md << "| Task | Mode | Mi-F1 | Ma-F1 | Restarts |\n|---|---|---|---|---|\n";
  for (const auto& r : results) {
    md << "| " << r.task << " | " << r.mode << " | " << pct(r.micro) << " | " << pct(r.macro) << " | "
       << r.per_seed.size() << " |\n";
  }
  return md.str();
}

int cmd_report(const std::vector<fs::path>& dirs, std::ostream& out, std::ostream& err) {
  try {
    if (dirs.empty()) throw ConfigError("report needs at least one run directory");
    std::vector<EvalResult> results;
    for (const auto& d : dirs) results.push_back(load_result(d));
    out << markdown_table(results);
    return 0;
  } catch (const std::exception& e) {
    err << "report failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace qacgen::cli
