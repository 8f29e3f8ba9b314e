#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "anomnet/data.hpp"
#include "anomnet/ga.hpp"
#include "anomnet/labeling.hpp"
#include "anomnet/mlp.hpp"

namespace anomnet {

/// Everything a CLI run needs. The defaults are a 2-10-4 tansig network
/// trained by SCG and a GA with 20 cycles of 15 individuals.
struct RunConfig {
  std::filesystem::path input;
  std::vector<std::string> retained;
  std::vector<std::string> discarded;
  std::vector<std::string> ignored;

  SyntheticSpec synth = five_blob_spec();
  LabelingConfig labeling;
  std::map<int, LabelingConfig> class_labeling;
  int hidden_size = 10;
  TrainingConfig training;
  GaConfig ga;
  SplitRatios split;

  std::uint64_t seed = 1;
  std::filesystem::path out = "out";

  void validate() const;
};

/// Sectioned key-value text:
///
///   seed = 7
///   [data]      input, retained, discarded, ignore (comma-separated names)
///   [synth]     blobs ("cx cy sx sy count; ..."), scatter, box ("xmin xmax ymin ymax")
///   [labeling]  num_clusters, knn_k, pa_score_multiplier
///   [labeling.class.<id>]  same keys, override for one class
///   [mlp]       hidden, max_epochs, patience, sigma, lambda, goal
///   [ga]        cycles, population, alpha, mutation_rate, selection_rate, goal,
///               fitness (overall | per_class_mean), parallel
///   [split]     train, validation, test
///
/// Unknown keys are rejected.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Writes every setting in the format parse_config reads. With
/// `include_runtime` false, the output directory and the parallel switch are
/// left out; neither affects results.
void write_config(std::ostream& out, const RunConfig& cfg, bool include_runtime = true);

}  // namespace anomnet
