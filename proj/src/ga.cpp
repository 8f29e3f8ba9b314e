#include "anomnet/ga.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>
#include <unordered_map>

#include "anomnet/data.hpp"
#include "anomnet/errors.hpp"

namespace anomnet {

void GaConfig::validate() const {
  if (cycles < 1) throw ArgumentError("ga: cycles must be >= 1");
  if (population_size < 1) throw ArgumentError("ga: population_size must be >= 1");
  for (double rate : {crossover_alpha, mutation_rate, selection_rate}) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ArgumentError("ga: rates must lie in [0,1]");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct GenomeHash {
  std::size_t operator()(const WeightVector& g) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : g) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &v, sizeof bits);
      h = splitmix64(h ^ bits);
    }
    return static_cast<std::size_t>(h);
  }
};

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace

std::vector<Individual> init_population(const GaConfig& cfg, const Topology& topology) {
  cfg.validate();
  std::vector<Individual> population;
  population.reserve(static_cast<std::size_t>(cfg.population_size));
  for (int i = 0; i < cfg.population_size; ++i) {
    population.push_back({init_weights(topology, splitmix64(cfg.seed ^ static_cast<std::uint64_t>(i + 1))), {}});
  }
  return population;
}

std::pair<WeightVector, WeightVector> crossover(const WeightVector& parent1, const WeightVector& parent2,
                                                std::size_t cut, double alpha) {
  const std::size_t n = parent1.size();
  if (parent2.size() != n) throw ArgumentError("crossover: parents differ in length");
  if (n < 3 || cut < 2 || cut > n - 1) {
    throw ArgumentError("crossover: cut " + std::to_string(cut) + " outside [2, " + std::to_string(n - 1) + "]");
  }
  WeightVector infant1 = parent1;
  WeightVector infant2 = parent2;
  for (std::size_t j = cut - 1; j < n; ++j) {
    infant1[j] = parent1[j] * alpha + parent2[j] * (1.0 - alpha);
    infant2[j] = parent2[j] * alpha + parent1[j] * (1.0 - alpha);
  }
  return {std::move(infant1), std::move(infant2)};
}

MutationDraws draw_mutation(std::size_t genome_length, Rng& rng) {
  MutationDraws d;
  d.trigger = uniform01(rng);
  d.gene = std::uniform_int_distribution<std::size_t>(0, genome_length - 1)(rng);
  do {
    d.magnitude = uniform01(rng);
  } while (d.magnitude == 0.0);
  d.direction = uniform01(rng);
  return d;
}

WeightVector apply_mutation(WeightVector genome, const MutationDraws& draws, double mutation_rate) {
  if (!(draws.trigger < mutation_rate)) return genome;
  if (draws.gene >= genome.size()) throw ArgumentError("apply_mutation: gene index out of range");
  const double sign = draws.direction < 0.5 ? -1.0 : 1.0;
  genome[draws.gene] = std::clamp(genome[draws.gene] + sign * draws.magnitude, 0.0, 1.0);
  return genome;
}

Individual mutate(Individual infant, const GaConfig& cfg, Rng& rng) {
  const MutationDraws draws = draw_mutation(infant.genome.size(), rng);
  if (draws.trigger < cfg.mutation_rate) {
    infant.genome = apply_mutation(std::move(infant.genome), draws, cfg.mutation_rate);
    infant.fitness.reset();
  }
  return infant;
}

ConfusionMatrix evaluate_model(const TrainedModel& model, const Batch& batch) {
  ConfusionMatrix m(model.topology.output_size);
  const auto targets = batch_classes(batch);
  for (std::size_t i = 0; i < batch.size(); ++i) m.add(targets[i], predict_class(model, batch.inputs.row(i)));
  return m;
}

double evaluate_fitness(const WeightVector& genome, const FitnessContext& ctx) {
  try {
    const auto model = train_scg(init_weights(ctx.topology, genome), ctx.topology, ctx.train, ctx.validation,
                                 ctx.training);
    const auto m = evaluate_model(model, ctx.test);
    return ctx.mode == FitnessMode::Overall ? test_error(m) : mean_class_error(m);
  } catch (const std::exception& e) {
    if (ctx.diagnostics) ctx.diagnostics(std::string("fitness evaluation failed: ") + e.what());
    return 1.0;
  }
}

double evaluate_fitness(Individual& individual, const FitnessContext& ctx) {
  individual.fitness = evaluate_fitness(individual.genome, ctx);
  return *individual.fitness;
}

std::vector<Individual> select(std::vector<Individual> population, const GaConfig& cfg, Rng& rng) {
  for (const auto& ind : population) {
    if (!ind.fitness) throw ArgumentError("select: individual without fitness");
  }
  std::stable_sort(population.begin(), population.end(),
                   [](const Individual& a, const Individual& b) { return *a.fitness < *b.fitness; });
  const std::size_t size = population.size();
  const auto keep = std::min(
      size, static_cast<std::size_t>(std::floor(cfg.selection_rate * static_cast<double>(size) + 1e-9)));

  std::vector<Individual> pool(population.begin(), population.begin() + static_cast<std::ptrdiff_t>(keep));
  std::vector<std::size_t> rest;
  std::vector<double> weight;
  for (std::size_t i = keep; i < size; ++i) {
    rest.push_back(i);
    weight.push_back(1.0 / std::sqrt(static_cast<double>(i - keep + 1)));
  }
  while (!rest.empty()) {
    double total = 0.0;
    for (double w : weight) total += w;
    const double u = uniform01(rng) * total;
    std::size_t pick = 0;
    double acc = weight[0];
    while (pick + 1 < rest.size() && acc <= u) acc += weight[++pick];
    pool.push_back(population[rest[pick]]);
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(pick));
    weight.erase(weight.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return pool;
}

std::string_view to_string(GaStopReason reason) {
  return reason == GaStopReason::Goal ? "goal" : "cycles";
}

GaRun run_ga(const GaConfig& cfg, const FitnessContext& ctx) {
  cfg.validate();
  ctx.topology.validate();
  if (ctx.train.empty()) throw ArgumentError("run_ga: empty training split");
  if (ctx.test.empty()) throw ArgumentError("run_ga: empty test split");

  std::unordered_map<WeightVector, double, GenomeHash> cache;
  Rng rng(splitmix64(cfg.seed ^ 0x5851f42d4c957f2dULL));
  std::vector<Individual> population = init_population(cfg, ctx.topology);
  const std::size_t genes = ctx.topology.genome_length();

  GaRun run;
  for (int cycle = 1;; ++cycle) {
    // Evaluate every distinct genome not seen before.
    std::vector<const WeightVector*> pending;
    for (auto& ind : population) {
      if (ind.fitness) continue;
      if (auto it = cache.find(ind.genome); it != cache.end()) {
        ind.fitness = it->second;
      } else if (std::none_of(pending.begin(), pending.end(), [&](const WeightVector* g) { return *g == ind.genome; })) {
        pending.push_back(&ind.genome);
      }
    }
    std::vector<double> results(pending.size());
    const auto count = static_cast<std::ptrdiff_t>(pending.size());
#pragma omp parallel for schedule(dynamic, 1) if (cfg.parallel)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      results[static_cast<std::size_t>(i)] = evaluate_fitness(*pending[static_cast<std::size_t>(i)], ctx);
    }
    for (std::size_t i = 0; i < pending.size(); ++i) cache.emplace(*pending[i], results[i]);
    run.evaluations += static_cast<int>(pending.size());
    for (auto& ind : population) {
      if (!ind.fitness) ind.fitness = cache.at(ind.genome);
    }

    const auto best_it = std::min_element(population.begin(), population.end(), [](const auto& a, const auto& b) {
      return *a.fitness < *b.fitness;
    });
    double sum = 0.0;
    for (const auto& ind : population) sum += *ind.fitness;
    run.cycles.push_back({cycle, *best_it->fitness, sum / static_cast<double>(population.size()), best_it->genome});
    run.best = *best_it;

    if (*best_it->fitness <= cfg.goal) {
      run.stop_reason = GaStopReason::Goal;
      break;
    }
    if (cycle >= cfg.cycles) {
      run.stop_reason = GaStopReason::Cycles;
      break;
    }

    const Individual elite = *best_it;
    auto pool = select(std::move(population), cfg, rng);
    std::vector<Individual> offspring;
    for (std::size_t i = 0; i < pool.size(); i += 2) {
      const Individual& a = pool[i];
      const Individual& b = pool[(i + 1) % pool.size()];
      const auto cut = std::uniform_int_distribution<std::size_t>(2, genes - 1)(rng);
      auto [g1, g2] = crossover(a.genome, b.genome, cut, cfg.crossover_alpha);
      offspring.push_back(mutate({std::move(g1), {}}, cfg, rng));
      offspring.push_back(mutate({std::move(g2), {}}, cfg, rng));
    }
    population.clear();
    population.push_back(elite);
    for (std::size_t i = 0; population.size() < static_cast<std::size_t>(cfg.population_size); ++i) {
      population.push_back(std::move(offspring[i]));
    }
  }

  run.best_model = train_scg(init_weights(ctx.topology, run.best.genome), ctx.topology, ctx.train, ctx.validation,
                             ctx.training);
  return run;
}

void write_cycles_csv(std::ostream& out, const GaRun& run) {
  out << "cycle,best_fitness,mean_fitness\n";
  for (const auto& c : run.cycles) {
    out << c.cycle << ',' << format_double(c.best_fitness) << ',' << format_double(c.mean_fitness) << '\n';
  }
}

Comparison compare(const FitnessContext& ctx, const GaConfig& cfg, std::uint64_t seed) {
  if (ctx.test.empty()) throw ArgumentError("empty test split");
  Comparison result;
  result.nn_model = train_scg(init_weights(ctx.topology, seed), ctx.topology, ctx.train, ctx.validation,
                              ctx.training);
  result.nn_confusion = evaluate_model(result.nn_model, ctx.test);
  result.nn_error = test_error(result.nn_confusion);

  GaConfig ga_cfg = cfg;
  ga_cfg.seed = seed;
  result.ga = run_ga(ga_cfg, ctx);
  result.ga_confusion = evaluate_model(result.ga.best_model, ctx.test);
  result.ga_error = test_error(result.ga_confusion);
  return result;
}

}  // namespace anomnet
