#include <httplib.h>

#include <CLI11.hpp>
#include <iostream>

#include "qacgen/cli.hpp"
#include "qacgen/errors.hpp"
#include "qacgen/remote_backend.hpp"
#include "qacgen/toy.hpp"
#include "qacgen/util.hpp"

using namespace qacgen;

int main(int argc, char** argv) {
  CLI::App app{"qacgen: question-answer-context data augmentation for few-shot text classification"};
  app.require_subcommand(1);

  cli::IngestArgs ingest;
  std::string stats_path;
  auto* ingest_cmd = app.add_subcommand("ingest", "Convert a QA corpus into canonical JSONL triples");
  ingest_cmd->add_option("--format", ingest.format, "Input format")->check(CLI::IsMember({"squad", "canonical"}));
  ingest_cmd->add_option("input", ingest.input, "Input file")->required();
  ingest_cmd->add_option("-o,--output", ingest.output, "Canonical JSONL output")->required();
  ingest_cmd->add_option("--stats", stats_path, "Stats JSON output (default: <output>.stats.json)");

  cli::RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the experiment protocol described by a config");
  run_cmd->add_option("config", run.config, "Experiment config JSON")->required();
  run_cmd->add_flag("--force", run.force, "Overwrite results of a different config");

  cli::SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run the protocol for each value of one hyperparameter");
  sweep_cmd->add_option("config", sweep.config, "Experiment config JSON")->required();
  sweep_cmd->add_option("--axis", sweep.axis, "Swept field")
      ->required()
      ->check(CLI::IsMember({"n_per_label", "shots", "k"}));
  sweep_cmd->add_option("--values", sweep.values, "Ascending values")->required()->delimiter(',');

  cli::SelfTrainArgs selftrain;
  std::string unlabeled;
  auto* st_cmd = app.add_subcommand("selftrain", "Self-train the classifiers of a completed run");
  st_cmd->add_option("config", selftrain.config, "Experiment config JSON")->required();
  st_cmd->add_option("--unlabeled", unlabeled, "Unlabeled texts (JSONL with a text field)");

  std::vector<std::filesystem::path> report_dirs;
  auto* report_cmd = app.add_subcommand("report", "Markdown table of finished runs");
  report_cmd->add_option("dirs", report_dirs, "Run output directories")->required();

  std::filesystem::path toy_dir;
  std::uint64_t toy_seed = toy::Options{}.seed;
  auto* toy_cmd = app.add_subcommand("toy", "Write the two-grammar toy task and its config");
  toy_cmd->add_option("dir", toy_dir, "Output directory")->required();
  toy_cmd->add_option("--seed", toy_seed, "Fixture seed");

  std::string serve_state, serve_host = "127.0.0.1";
  int serve_port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Serve a saved backend state over the remote generation protocol");
  serve_cmd->add_option("state", serve_state, "Backend state JSON")->required();
  serve_cmd->add_option("--host", serve_host, "Bind address");
  serve_cmd->add_option("--port", serve_port, "Port");

  CLI11_PARSE(app, argc, argv);

  if (*ingest_cmd) {
    if (!stats_path.empty()) ingest.stats = stats_path;
    return cli::cmd_ingest(ingest, std::cout, std::cerr);
  }
  if (*run_cmd) return cli::cmd_run(run, std::cout, std::cerr);
  if (*sweep_cmd) return cli::cmd_sweep(sweep, std::cout, std::cerr);
  if (*st_cmd) {
    if (!unlabeled.empty()) selftrain.unlabeled = unlabeled;
    return cli::cmd_selftrain(selftrain, std::cout, std::cerr);
  }
  if (*report_cmd) return cli::cmd_report(report_dirs, std::cout, std::cerr);
  try {
    if (*toy_cmd) {
      toy::Options o;
      o.seed = toy_seed;
      toy::write_fixture(toy::make_fixture(o), toy_dir);
      std::cout << "wrote toy task to " << toy_dir.string() << "\n";
      return 0;
    }
    if (*serve_cmd) {
      auto backend = load_backend(nlohmann::json::parse(read_file(serve_state)));
      httplib::Server server;
      server.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
        try {
          res.set_content(handle_generation_request(*backend, nlohmann::json::parse(req.body)).dump(),
                          "application/json");
        } catch (const std::exception& e) {
          res.status = 400;
          res.set_content(nlohmann::json({{"error", e.what()}}).dump(), "application/json");
        }
      });
      std::cout << "serving " << backend->backend_id() << " on " << serve_host << ":" << serve_port << "\n";
      return server.listen(serve_host, serve_port) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
