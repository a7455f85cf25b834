#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qacgen/harness.hpp"

namespace qacgen::cli {

// Overrides the root that relative output_dir values resolve against
// (default: the config file's directory).
inline constexpr const char* kOutputRootEnv = "QACGEN_OUTPUT_ROOT";

std::filesystem::path resolve_output_dir(const ExperimentConfig& config,
                                         const std::filesystem::path& config_path);

struct IngestArgs {
  std::string format = "squad";  // squad | canonical
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<std::filesystem::path> stats;  // default: <output>.stats.json
};
int cmd_ingest(const IngestArgs& args, std::ostream& out, std::ostream& err);

struct RunArgs {
  std::filesystem::path config;
  bool force = false;  // overwrite an output_dir holding a different config
};
int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);

// Writes every artifact of one protocol run into `dir`.
void write_run_outputs(const ProtocolRun& run, const ExperimentConfig& config,
                       const std::filesystem::path& dir);

struct SweepArgs {
  std::filesystem::path config;
  std::string axis;  // n_per_label | shots | k
  std::vector<std::size_t> values;
};
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);

struct SelfTrainArgs {
  std::filesystem::path config;
  std::optional<std::filesystem::path> unlabeled;  // default: config.unlabeled_path
};
int cmd_selftrain(const SelfTrainArgs& args, std::ostream& out, std::ostream& err);

// Markdown table over the eval_result.json files in `dirs`.
int cmd_report(const std::vector<std::filesystem::path>& dirs, std::ostream& out, std::ostream& err);

std::string markdown_table(const std::vector<EvalResult>& results);

// Unlabeled texts: JSON-lines with a "text" field.
std::vector<std::string> read_unlabeled(const std::filesystem::path& path);

}  // namespace qacgen::cli
