#include "anomnet/mlp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "anomnet/errors.hpp"

namespace anomnet {

std::size_t Topology::genome_length() const {
  return static_cast<std::size_t>((input_size + 1) * hidden_size + (hidden_size + 1) * output_size);
}

void Topology::validate() const {
  if (input_size < 1 || hidden_size < 1 || output_size < 1) {
    throw ArgumentError("topology sizes must be >= 1");
  }
}

WeightVector init_weights(const Topology& topology, std::uint64_t seed) {
  topology.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  WeightVector w(topology.genome_length());
  for (double& x : w) x = unit(rng);
  return w;
}

WeightVector init_weights(const Topology& topology, const WeightVector& injected) {
  topology.validate();
  if (injected.size() != topology.genome_length()) {
    throw ArgumentError("injected weight vector has length " + std::to_string(injected.size()) +
                        ", topology needs " + std::to_string(topology.genome_length()));
  }
  return injected;
}

namespace {

// Offsets of the four blocks inside the flat weight vector.
struct Layout {
  std::size_t in, hid, out;
  std::size_t w1 = 0, b1, w2, b2;

  explicit Layout(const Topology& t)
      : in(static_cast<std::size_t>(t.input_size)),
        hid(static_cast<std::size_t>(t.hidden_size)),
        out(static_cast<std::size_t>(t.output_size)) {
    b1 = hid * in;
    w2 = b1 + hid;
    b2 = w2 + out * hid;
  }
};

void check_weights(std::span<const double> weights, const Topology& topology) {
  topology.validate();
  if (weights.size() != topology.genome_length()) {
    throw ArgumentError("weight vector has length " + std::to_string(weights.size()) + ", topology needs " +
                        std::to_string(topology.genome_length()));
  }
}

void forward_into(std::span<const double> w, const Layout& L, std::span<const double> x,
                  std::vector<double>& hidden, std::vector<double>& output) {
  for (std::size_t h = 0; h < L.hid; ++h) {
    double a = w[L.b1 + h];
    const double* row = &w[L.w1 + h * L.in];
    for (std::size_t i = 0; i < L.in; ++i) a += row[i] * x[i];
    hidden[h] = std::tanh(a);
  }
  for (std::size_t o = 0; o < L.out; ++o) {
    double a = w[L.b2 + o];
    const double* row = &w[L.w2 + o * L.hid];
    for (std::size_t h = 0; h < L.hid; ++h) a += row[h] * hidden[h];
    output[o] = std::tanh(a);
  }
}

void check_batch(const Batch& batch, const Topology& topology) {
  if (batch.empty()) throw ArgumentError("empty batch");
  if (batch.inputs.cols() != static_cast<std::size_t>(topology.input_size) ||
      batch.targets.cols() != static_cast<std::size_t>(topology.output_size) ||
      batch.targets.rows() != batch.inputs.rows()) {
    throw ArgumentError("batch shape does not match topology " + std::to_string(topology.input_size) + "-" +
                        std::to_string(topology.hidden_size) + "-" + std::to_string(topology.output_size));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<double> forward(std::span<const double> weights, const Topology& topology,
                            std::span<const double> x) {
  check_weights(weights, topology);
  if (x.size() != static_cast<std::size_t>(topology.input_size)) {
    throw ArgumentError("forward: input has " + std::to_string(x.size()) + " values, network expects " +
                        std::to_string(topology.input_size));
  }
  const Layout L(topology);
  std::vector<double> hidden(L.hid), output(L.out);
  forward_into(weights, L, x, hidden, output);
  return output;
}

Batch make_batch(const Dataset& ds, int output_size) {
  Batch batch{ds.feature_matrix(), Matrix(ds.size(), static_cast<std::size_t>(output_size))};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds[i].label) throw ArgumentError("make_batch: sample " + std::to_string(i) + " has no label");
    const int cls = static_cast<int>(*ds[i].label);
    if (cls >= output_size) throw ArgumentError("make_batch: label outside output range");
    batch.targets(i, static_cast<std::size_t>(cls)) = 1.0;
  }
  return batch;
}

std::vector<int> batch_classes(const Batch& batch) {
  std::vector<int> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) out[i] = argmax(batch.targets.row(i));
  return out;
}

LossAndGradient mse_and_gradient(std::span<const double> weights, const Topology& topology,
                                 const Batch& batch) {
  check_weights(weights, topology);
  check_batch(batch, topology);
  const Layout L(topology);
  const double scale = 1.0 / static_cast<double>(batch.size() * L.out);

  LossAndGradient result;
  result.gradient.assign(weights.size(), 0.0);
  auto& g = result.gradient;
  std::vector<double> hidden(L.hid), output(L.out), delta_out(L.out), delta_hid(L.hid);
  double sse = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto x = batch.inputs.row(n);
    const auto t = batch.targets.row(n);
    forward_into(weights, L, x, hidden, output);
    for (std::size_t o = 0; o < L.out; ++o) {
      const double err = output[o] - t[o];
      sse += err * err;
      delta_out[o] = 2.0 * scale * err * (1.0 - output[o] * output[o]);
    }
    std::fill(delta_hid.begin(), delta_hid.end(), 0.0);
    for (std::size_t o = 0; o < L.out; ++o) {
      const double d = delta_out[o];
      double* grow = &g[L.w2 + o * L.hid];
      const double* wrow = &weights[L.w2 + o * L.hid];
      for (std::size_t h = 0; h < L.hid; ++h) {
        grow[h] += d * hidden[h];
        delta_hid[h] += d * wrow[h];
      }
      g[L.b2 + o] += d;
    }
    for (std::size_t h = 0; h < L.hid; ++h) {
      const double d = delta_hid[h] * (1.0 - hidden[h] * hidden[h]);
      double* grow = &g[L.w1 + h * L.in];
      for (std::size_t i = 0; i < L.in; ++i) grow[i] += d * x[i];
      g[L.b1 + h] += d;
    }
  }
  result.loss = sse * scale;
  return result;
}

double mse(std::span<const double> weights, const Topology& topology, const Batch& batch) {
  check_weights(weights, topology);
  check_batch(batch, topology);
  const Layout L(topology);
  std::vector<double> hidden(L.hid), output(L.out);
  double sse = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    forward_into(weights, L, batch.inputs.row(n), hidden, output);
    const auto t = batch.targets.row(n);
    for (std::size_t o = 0; o < L.out; ++o) sse += (output[o] - t[o]) * (output[o] - t[o]);
  }
  return sse / static_cast<double>(batch.size() * L.out);
}

// ---------------------------------------------------------------------------
// Scaled conjugate gradient

void TrainingConfig::validate() const {
  if (max_epochs < 1) throw ArgumentError("training: max_epochs must be >= 1");
  if (patience < 1) throw ArgumentError("training: patience must be >= 1");
  if (!(sigma > 0) || !(lambda > 0)) throw ArgumentError("training: sigma and lambda must be > 0");
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Goal: return "goal";
    case StopReason::Patience: return "patience";
    case StopReason::MaxEpochs: return "max_epochs";
    case StopReason::ScgConverged: return "scg_converged";
  }
  return "?";
}

TrainedModel train_scg(const WeightVector& initial, const Topology& topology, const Batch& train,
                       const Batch& validation, const TrainingConfig& cfg) {
  cfg.validate();
  check_weights(initial, topology);
  check_batch(train, topology);
  const bool use_validation = !validation.empty();
  if (use_validation) check_batch(validation, topology);

  const std::size_t n = initial.size();
  WeightVector w = initial;
  auto current = mse_and_gradient(w, topology, train);
  if (!std::isfinite(current.loss)) throw TrainingError("non-finite training loss at epoch 0", 0);

  std::vector<double> r(n), r_old(n), p(n), s(n), trial(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = -current.gradient[i];
  p = r;

  double lambda = cfg.lambda;
  double lambda_bar = 0.0;
  double delta = 0.0;
  bool success = true;
  std::size_t accepted = 0;

  TrainedModel model;
  model.topology = topology;
  double best_validation = std::numeric_limits<double>::infinity();
  WeightVector best_weights = w;
  int validation_fails = 0;
  bool stopped = false;

  for (int epoch = 1; epoch <= cfg.max_epochs && !stopped; ++epoch) {
    bool converged = false;
    const double p_sq = dot(p, p);
    const double r_sq = dot(r, r);
    if (std::sqrt(r_sq) < cfg.min_gradient || p_sq == 0.0) {
      converged = true;
    } else {
      if (success) {
        // Second-order information from a gradient difference along p.
        const double sigma_k = cfg.sigma / std::sqrt(p_sq);
        for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] + sigma_k * p[i];
        const auto probe = mse_and_gradient(trial, topology, train);
        for (std::size_t i = 0; i < n; ++i) s[i] = (probe.gradient[i] - current.gradient[i]) / sigma_k;
        delta = dot(p, s);
      }
      delta += (lambda - lambda_bar) * p_sq;
      if (delta <= 0.0) {
        // Make the Hessian estimate positive definite.
        lambda_bar = 2.0 * (lambda - delta / p_sq);
        delta = -delta + lambda * p_sq;
        lambda = lambda_bar;
      }

      const double mu = dot(p, r);
      const double alpha = mu / delta;
      for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] + alpha * p[i];
      auto next = mse_and_gradient(trial, topology, train);
      if (!std::isfinite(next.loss)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch), epoch);
      }
      const double comparison = 2.0 * delta * (current.loss - next.loss) / (mu * mu);

      if (comparison >= 0.0) {
        const double step = std::abs(alpha) * std::sqrt(p_sq);
        w = trial;
        current = std::move(next);
        r_old = r;
        for (std::size_t i = 0; i < n; ++i) r[i] = -current.gradient[i];
        lambda_bar = 0.0;
        success = true;
        ++accepted;
        if (accepted % n == 0) {
          p = r;
        } else {
          const double beta = (dot(r, r) - dot(r, r_old)) / mu;
          for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        }
        if (comparison >= 0.75) lambda *= 0.25;
        if (step < cfg.min_step || std::sqrt(dot(r, r)) < cfg.min_gradient) converged = true;
      } else {
        lambda_bar = lambda;
        success = false;
      }
      if (comparison < 0.25) lambda += delta * (1.0 - comparison) / p_sq;
      if (!std::isfinite(lambda) || lambda > 1e100) converged = true;
    }

    EpochRecord rec;
    rec.train_mse = current.loss;
    if (use_validation) {
      rec.validation_mse = mse(w, topology, validation);
      if (rec.validation_mse < best_validation) {
        best_validation = rec.validation_mse;
        best_weights = w;
        model.best_epoch = epoch;
        validation_fails = 0;
      } else if (rec.validation_mse > best_validation) {
        ++validation_fails;
      }
    }
    model.history.push_back(rec);

    if (current.loss <= cfg.goal) {
      model.stop_reason = StopReason::Goal;
      stopped = true;
    } else if (converged) {
      model.stop_reason = StopReason::ScgConverged;
      stopped = true;
    } else if (use_validation && validation_fails >= cfg.patience) {
      model.stop_reason = StopReason::Patience;
      stopped = true;
    } else if (epoch == cfg.max_epochs) {
      model.stop_reason = StopReason::MaxEpochs;
      stopped = true;
    }
  }

  if (use_validation) {
    model.weights = std::move(best_weights);
  } else {
    model.weights = std::move(w);
    model.best_epoch = static_cast<int>(model.history.size());
  }
  return model;
}

int argmax(std::span<const double> outputs) {
  int best = 0;
  for (std::size_t i = 1; i < outputs.size(); ++i) {
    if (outputs[i] > outputs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

int predict_class(const TrainedModel& model, std::span<const double> x) {
  return argmax(forward(model.weights, model.topology, x));
}

void write_model(std::ostream& out, const TrainedModel& model) {
  out << "topology " << model.topology.input_size << ' ' << model.topology.hidden_size << ' '
      << model.topology.output_size << '\n';
  for (double w : model.weights) out << format_double(w) << '\n';
}

TrainedModel read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("model file is empty");
  std::istringstream head(line);
  std::string keyword;
  TrainedModel model;
  if (!(head >> keyword >> model.topology.input_size >> model.topology.hidden_size >>
        model.topology.output_size) ||
      keyword != "topology") {
    throw ParseError("model file: expected 'topology <in> <hidden> <out>' on the first line");
  }
  model.topology.validate();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
    if (ec != std::errc() || ptr != line.data() + line.size()) {
      throw ParseError("model file: bad weight '" + line + "'");
    }
    model.weights.push_back(value);
  }
  if (model.weights.size() != model.topology.genome_length()) {
    throw ParseError("model file: " + std::to_string(model.weights.size()) + " weights, topology needs " +
                     std::to_string(model.topology.genome_length()));
  }
  return model;
}

}  // namespace anomnet
