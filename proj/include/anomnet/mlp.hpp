#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "anomnet/data.hpp"
#include "anomnet/matrix.hpp"

namespace anomnet {

/// One-hidden-layer network shape.
struct Topology {
  int input_size = 2;
  int hidden_size = 10;
  int output_size = 4;

  /// (input+1)*hidden + (hidden+1)*output.
  std::size_t genome_length() const;
  void validate() const;

  friend bool operator==(const Topology&, const Topology&) = default;
};

/// All weights and biases in canonical order: hidden weights (row-major,
/// hidden x input), hidden biases, output weights (row-major, output x hidden),
/// output biases.
using WeightVector = std::vector<double>;

/// Uniform draws from [0,1].
WeightVector init_weights(const Topology& topology, std::uint64_t seed);
/// Returns `injected` unchanged after checking its length.
WeightVector init_weights(const Topology& topology, const WeightVector& injected);

/// tanh hidden layer, tanh output layer.
std::vector<double> forward(std::span<const double> weights, const Topology& topology,
                            std::span<const double> x);

/// Inputs with one-hot targets, one row per example.
struct Batch {
  Matrix inputs;
  Matrix targets;

  std::size_t size() const { return inputs.rows(); }
  bool empty() const { return inputs.rows() == 0; }
};

/// Features as inputs and the anomaly label (ND, CNA, CPA, PA) as a one-hot target.
Batch make_batch(const Dataset& ds, int output_size = kNumAnomalyLabels);
/// Class index of each row of a batch (position of the 1 in the target).
std::vector<int> batch_classes(const Batch& batch);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Mean squared error over every output component of every example, and its
/// exact gradient by backpropagation.
LossAndGradient mse_and_gradient(std::span<const double> weights, const Topology& topology,
                                 const Batch& batch);
double mse(std::span<const double> weights, const Topology& topology, const Batch& batch);

struct TrainingConfig {
  int max_epochs = 200;
  /// Consecutive epochs without a new validation minimum before stopping.
  int patience = 6;
  double sigma = 5e-5;
  double lambda = 5e-7;
  double goal = 0.0;
  double min_gradient = 1e-10;
  double min_step = 1e-10;

  void validate() const;
};

enum class StopReason { Goal, Patience, MaxEpochs, ScgConverged };
std::string_view to_string(StopReason reason);

struct EpochRecord {
  double train_mse = 0.0;
  /// NaN when there is no validation set.
  double validation_mse = std::numeric_limits<double>::quiet_NaN();
};

struct TrainedModel {
  Topology topology;
  WeightVector weights;
  std::vector<EpochRecord> history;
  StopReason stop_reason = StopReason::MaxEpochs;
  /// Epoch (1-based) whose weights were kept; 0 means the initial weights.
  int best_epoch = 0;
};

/// Scaled conjugate gradient on the full training batch. With a non-empty
/// validation batch, training stops after `patience` epochs without a new
/// validation minimum, and the best-validation weights are returned.
TrainedModel train_scg(const WeightVector& initial, const Topology& topology, const Batch& train,
                       const Batch& validation, const TrainingConfig& cfg);

/// Argmax of the outputs, lowest index on ties.
int argmax(std::span<const double> outputs);
int predict_class(const TrainedModel& model, std::span<const double> x);

/// "topology <in> <hidden> <out>" followed by one weight per line.
void write_model(std::ostream& out, const TrainedModel& model);
TrainedModel read_model(std::istream& in);

}  // namespace anomnet
