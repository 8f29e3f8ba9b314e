#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "anomnet/eval.hpp"
#include "anomnet/mlp.hpp"

namespace anomnet {

struct Individual {
  WeightVector genome;
  std::optional<double> fitness;
};

enum class FitnessMode {
  /// Overall test misclassification rate.
  Overall,
  /// Mean over target classes of the per-class error.
  PerClassMean,
};

struct GaConfig {
  int cycles = 20;
  int population_size = 15;
  double crossover_alpha = 0.3;
  double mutation_rate = 0.1;
  double selection_rate = 0.7;
  double goal = 0.0;
  FitnessMode fitness_mode = FitnessMode::Overall;
  /// Evaluate the individuals of a cycle concurrently.
  bool parallel = true;
  std::uint64_t seed = 1;

  void validate() const;
};

using Rng = std::mt19937_64;

/// population_size genomes drawn uniformly from [0,1].
std::vector<Individual> init_population(const GaConfig& cfg, const Topology& topology);

/// Blend crossover at 1-based cut `cut` (2 <= cut <= n-1): genes before the
/// cut are copied from the infant's own parent, genes from the cut onward are
/// alpha * own + (1 - alpha) * other.
std::pair<WeightVector, WeightVector> crossover(const WeightVector& parent1, const WeightVector& parent2,
                                                std::size_t cut, double alpha);

/// Random draws that drive one mutation decision.
struct MutationDraws {
  double trigger = 1.0;    // uniform [0,1); mutate when below the rate
  std::size_t gene = 0;    // 0-based gene index
  double magnitude = 0.0;  // uniform (0,1)
  double direction = 0.0;  // uniform [0,1); < 0.5 decreases the gene
};

MutationDraws draw_mutation(std::size_t genome_length, Rng& rng);
/// Deterministic part of mutation; the mutated gene is clamped to [0,1].
WeightVector apply_mutation(WeightVector genome, const MutationDraws& draws, double mutation_rate);
Individual mutate(Individual infant, const GaConfig& cfg, Rng& rng);

/// Fixed data and training setup shared by every fitness evaluation.
struct FitnessContext {
  Topology topology;
  Batch train;
  Batch validation;
  Batch test;
  TrainingConfig training;
  FitnessMode mode = FitnessMode::Overall;
  /// Receives a message when a training run fails.
  std::function<void(const std::string&)> diagnostics;
};

/// Confusion matrix of a trained model on a batch, one class per output neuron.
ConfusionMatrix evaluate_model(const TrainedModel& model, const Batch& batch);

/// Trains from the genome and returns the test error; 1.0 if training fails.
double evaluate_fitness(const WeightVector& genome, const FitnessContext& ctx);
/// Evaluates and caches the fitness on the individual.
double evaluate_fitness(Individual& individual, const FitnessContext& ctx);

/// Sorted best-first; the best floor(rate * size) are kept outright, the
/// remaining slots are drawn without replacement from the rest with weights
/// 1/sqrt(rank) (rank 1 = best of the rest).
std::vector<Individual> select(std::vector<Individual> population, const GaConfig& cfg, Rng& rng);

enum class GaStopReason { Cycles, Goal };
std::string_view to_string(GaStopReason reason);

struct CycleRecord {
  int cycle = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  WeightVector best_genome;
};

struct GaRun {
  std::vector<CycleRecord> cycles;
  Individual best;
  TrainedModel best_model;
  GaStopReason stop_reason = GaStopReason::Cycles;
  /// Trainings actually run (cache hits excluded).
  int evaluations = 0;
};

GaRun run_ga(const GaConfig& cfg, const FitnessContext& ctx);

void write_cycles_csv(std::ostream& out, const GaRun& run);

struct Comparison {
  TrainedModel nn_model;
  ConfusionMatrix nn_confusion;
  double nn_error = 0.0;
  GaRun ga;
  ConfusionMatrix ga_confusion;
  double ga_error = 0.0;
};

/// Conventional MLP (random initial weights from `seed`) against the
/// GA-evolved initial weights, both trained with the same configuration.
Comparison compare(const FitnessContext& ctx, const GaConfig& cfg, std::uint64_t seed);

}  // namespace anomnet
