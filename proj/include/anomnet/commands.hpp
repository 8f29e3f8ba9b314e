#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "anomnet/config.hpp"

namespace anomnet::cli {

/// Failure tagged with the pipeline stage that raised it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error(message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct CommandContext {
  RunConfig config;
  std::ostream* log = nullptr;  // null when --quiet
};

/// Writes the synthetic dataset to `path` (default <out>/synthetic.csv).
void cmd_synth(const CommandContext& ctx, std::filesystem::path path);
/// Labels config.input; writes labeled.csv, report.txt, report.csv under <out>.
void cmd_label(const CommandContext& ctx, bool relabel);
/// Trains a conventionally initialised network on a labeled CSV.
void cmd_train(const CommandContext& ctx);
/// Conventional network against the GA-initialised one; writes the full report tree.
void cmd_compare(const CommandContext& ctx);
/// Confusion matrix, metrics and ROC of a saved model on a labeled CSV.
void cmd_eval(const CommandContext& ctx, const std::filesystem::path& model_path);
/// ROC curves only.
void cmd_roc(const CommandContext& ctx, const std::filesystem::path& model_path);

/// Full command line entry point. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace anomnet::cli
