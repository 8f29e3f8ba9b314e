#include "anomnet/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "anomnet/errors.hpp"

namespace anomnet::cli {

namespace fs = std::filesystem;

namespace {

template <typename F>
auto stage(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string> label_names() {
  std::vector<std::string> names;
  for (int c = 0; c < kNumAnomalyLabels; ++c) names.emplace_back(to_string(static_cast<AnomalyLabel>(c)));
  return names;
}

std::string metric_cell(Metric m) { return m ? format_double(*m) : "NaN"; }

CsvSchema schema_for(const RunConfig& cfg) {
  CsvSchema schema;
  for (const auto& name : cfg.ignored) schema.roles[name] = ColumnRole::Ignore;
  return schema;
}

Dataset load_input(const RunConfig& cfg) {
  if (cfg.input.empty()) throw ArgumentError("no input dataset (set [data] input or pass a path)");
  return load_csv(cfg.input, schema_for(cfg));
}

Dataset load_labeled(const RunConfig& cfg) {
  Dataset ds = load_input(cfg);
  if (!ds.has_labels()) throw ArgumentError(cfg.input.string() + " has no 'label' column; run 'label' first");
  return ds;
}

std::vector<std::size_t> feature_indices(const Dataset& ds, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& name : names) {
    const auto& all = ds.feature_names();
    auto it = std::find(all.begin(), all.end(), name);
    if (it == all.end()) throw ArgumentError("unknown feature '" + name + "'");
    out.push_back(static_cast<std::size_t>(it - all.begin()));
  }
  return out;
}

Topology topology_for(const Dataset& ds, const RunConfig& cfg) {
  return {static_cast<int>(ds.dimension()), cfg.hidden_size, kNumAnomalyLabels};
}

FitnessContext fitness_context(const Split& split, const Topology& topology, const RunConfig& cfg) {
  FitnessContext ctx;
  ctx.topology = topology;
  ctx.train = make_batch(split.train);
  ctx.validation = split.validation.empty() ? Batch{} : make_batch(split.validation);
  ctx.test = make_batch(split.test);
  ctx.training = cfg.training;
  ctx.mode = cfg.ga.fitness_mode;
  return ctx;
}

Split split_labeled(const Dataset& ds, const RunConfig& cfg) {
  Split split = stratified_split(ds, cfg.split, cfg.seed);
  if (split.train.empty()) throw ArgumentError("empty training split");
  if (split.test.empty()) throw ArgumentError("empty test split");
  return split;
}

struct ModelReport {
  ConfusionMatrix confusion;
  std::vector<std::optional<RocCurve>> roc;  // per class; empty when undefined
};

ModelReport evaluate_report(const TrainedModel& model, const Batch& batch) {
  ModelReport report;
  report.confusion = ConfusionMatrix(model.topology.output_size, label_names());
  const auto targets = batch_classes(batch);
  std::vector<std::vector<double>> outputs;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    outputs.push_back(forward(model.weights, model.topology, batch.inputs.row(i)));
    report.confusion.add(targets[i], argmax(outputs.back()));
  }
  for (int c = 0; c < model.topology.output_size; ++c) {
    std::vector<double> scores(batch.size());
    std::unique_ptr<bool[]> positives(new bool[batch.size()]);
    long pos = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      scores[i] = outputs[i][static_cast<std::size_t>(c)];
      positives[i] = targets[i] == c;
      pos += positives[i];
    }
    if (pos == 0 || pos == static_cast<long>(batch.size())) {
      report.roc.emplace_back();
    } else {
      report.roc.emplace_back(roc_curve(scores, std::span<const bool>(positives.get(), batch.size())));
    }
  }
  return report;
}

void write_metrics_csv(std::ostream& out, const ConfusionMatrix& m) {
  const auto pr = precision_recall(m);
  out << "class,precision,recall,tpr,fpr\n";
  for (int c = 0; c < m.num_classes(); ++c) {
    const auto rates = tpr_fpr(m, c);
    out << m.class_names()[static_cast<std::size_t>(c)] << ',' << metric_cell(pr[static_cast<std::size_t>(c)].precision)
        << ',' << metric_cell(pr[static_cast<std::size_t>(c)].recall) << ',' << metric_cell(rates.tpr) << ','
        << metric_cell(rates.fpr) << '\n';
  }
  out << "test_error," << format_double(test_error(m)) << ",,,\n";
}

void write_rates_row(std::ostream& out, const std::string& name, const ConfusionMatrix& m) {
  out << name;
  for (int c = 0; c < m.num_classes(); ++c) {
    const auto r = tpr_fpr(m, c);
    out << ',' << metric_cell(r.tpr) << ',' << metric_cell(r.fpr);
  }
  out << '\n';
}

void write_rates_header(std::ostream& out) {
  out << "model";
  for (const auto& n : label_names()) out << ',' << n << "_tpr," << n << "_fpr";
  out << '\n';
}

// Confusion text/CSV, metrics and per-class ROC CSVs for one model.
void write_model_outputs(const fs::path& dir, const std::string& prefix, const std::string& title,
                         const ModelReport& report) {
  write_file(dir / (prefix + "confusion.txt"), [&](std::ostream& o) { write_confusion_text(o, report.confusion, title); });
  write_file(dir / (prefix + "confusion.csv"), [&](std::ostream& o) { write_confusion_csv(o, report.confusion); });
  write_file(dir / (prefix + "metrics.csv"), [&](std::ostream& o) { write_metrics_csv(o, report.confusion); });
  const auto names = label_names();
  for (std::size_t c = 0; c < report.roc.size(); ++c) {
    if (!report.roc[c]) continue;
    write_file(dir / (prefix + "roc_" + names[c] + ".csv"), [&](std::ostream& o) { write_roc_csv(o, *report.roc[c]); });
  }
}

void write_roc_charts(const fs::path& dir, const std::vector<std::pair<std::string, const ModelReport*>>& models) {
  const auto names = label_names();
  for (std::size_t c = 0; c < names.size(); ++c) {
    std::vector<RocSeries> series;
    for (const auto& [name, report] : models) {
      if (report->roc[c]) series.push_back({name, &*report->roc[c]});
    }
    if (series.empty()) continue;
    write_file(dir / ("roc_" + names[c] + ".svg"),
               [&](std::ostream& o) { write_roc_svg(o, series, "ROC, class " + names[c] + " vs rest"); });
  }
}

void log_line(const CommandContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << '\n';
}

}  // namespace

void cmd_synth(const CommandContext& ctx, fs::path path) {
  const RunConfig& cfg = ctx.config;
  if (path.empty()) path = cfg.out / "synthetic.csv";
  const Dataset ds = stage("synth", [&] { return generate_synthetic(cfg.synth, cfg.seed); });
  stage("write", [&] { write_file(path, [&](std::ostream& o) { write_csv(o, ds); }); });
  log_line(ctx, "n=" + std::to_string(ds.size()) + " d=" + std::to_string(ds.dimension()) + " -> " + path.string());
}

void cmd_label(const CommandContext& ctx, bool relabel) {
  const RunConfig& cfg = ctx.config;
  Dataset ds = stage("load", [&] { return load_input(cfg); });
  const bool has_label_column =
      std::any_of(ds.samples().begin(), ds.samples().end(), [](const Sample& s) { return s.label.has_value(); });
  if (has_label_column && !relabel) {
    throw StageError("label", cfg.input.string() + " already has a 'label' column; pass --relabel to overwrite it");
  }
  for (Sample& s : ds.samples()) s.label.reset();

  Dataset labeled;
  std::vector<LabelingReport> reports;
  std::optional<NormalizationParams> params;
  if (ds.has_classes()) {
    SupervisedConfig scfg;
    stage("label", [&] {
      scfg.retained = feature_indices(ds, cfg.retained);
      scfg.discarded = feature_indices(ds, cfg.discarded);
    });
    scfg.labeling = cfg.labeling;
    scfg.labeling.seed = cfg.seed;
    for (auto [id, c] : cfg.class_labeling) {
      c.seed = cfg.seed;
      scfg.per_class.emplace(id, c);
    }
    auto result = stage("label", [&] { return label_supervised(ds, scfg); });
    labeled = std::move(result.labeled);
    reports = std::move(result.reports);
  } else {
    auto [normalized, p] = stage("normalize", [&] { return minmax_normalize(ds); });
    params = p;
    LabelingConfig lcfg = cfg.labeling;
    lcfg.seed = cfg.seed;
    auto result = stage("label", [&] { return label_dataset(normalized, lcfg); });
    result.report.name = "dataset";
    labeled = std::move(result.labeled);
    reports.push_back(std::move(result.report));
  }

  stage("write", [&] {
    write_file(cfg.out / "labeled.csv", [&](std::ostream& o) { write_csv(o, labeled); });
    write_file(cfg.out / "report.txt", [&](std::ostream& o) {
      for (std::size_t i = 0; i < reports.size(); ++i) {
        if (i) o << '\n';
        write_report_text(o, reports[i]);
      }
    });
    write_file(cfg.out / "report.csv", [&](std::ostream& o) { write_report_csv(o, reports); });
    if (params) write_file(cfg.out / "normalization.txt", [&](std::ostream& o) { params->write(o); });
  });
  for (const auto& r : reports) {
    log_line(ctx, r.name + ": points=" + std::to_string(r.points) + " clusters=" + std::to_string(r.clusters) +
                      " ND=" + std::to_string(r.nd) + " CNA=" + std::to_string(r.cna) + " CPA=" +
                      std::to_string(r.cpa) + " PA=" + std::to_string(r.pa));
  }
}

void cmd_train(const CommandContext& ctx) {
  const RunConfig& cfg = ctx.config;
  const Dataset ds = stage("load", [&] { return load_labeled(cfg); });
  const Split split = stage("split", [&] { return split_labeled(ds, cfg); });
  const Topology topology = topology_for(ds, cfg);
  const FitnessContext fctx = fitness_context(split, topology, cfg);
  const TrainedModel model = stage("train", [&] {
    return train_scg(init_weights(topology, cfg.seed), topology, fctx.train, fctx.validation, cfg.training);
  });
  const ModelReport report = stage("evaluate", [&] { return evaluate_report(model, fctx.test); });

  stage("write", [&] {
    write_file(cfg.out / "model.txt", [&](std::ostream& o) { write_model(o, model); });
    write_file(cfg.out / "history.csv", [&](std::ostream& o) {
      o << "epoch,train_mse,validation_mse\n";
      for (std::size_t e = 0; e < model.history.size(); ++e) {
        o << e + 1 << ',' << format_double(model.history[e].train_mse) << ','
          << format_double(model.history[e].validation_mse) << '\n';
      }
    });
    write_model_outputs(cfg.out, "", "Test NN Confusion Matrix", report);
    write_roc_charts(cfg.out, {{"NN", &report}});
  });
  log_line(ctx, "NN test error " + format_percent(test_error(report.confusion)) + " (stop: " +
                    std::string(to_string(model.stop_reason)) + ", epochs: " + std::to_string(model.history.size()) +
                    ")");
}

void cmd_compare(const CommandContext& ctx) {
  const RunConfig& cfg = ctx.config;
  const Dataset ds = stage("load", [&] { return load_labeled(cfg); });
  const Split split = stage("split", [&] { return split_labeled(ds, cfg); });
  const Topology topology = topology_for(ds, cfg);
  FitnessContext fctx = fitness_context(split, topology, cfg);
  if (ctx.log) fctx.diagnostics = [&ctx](const std::string& msg) { log_line(ctx, msg); };

  const Comparison cmp = stage("compare", [&] { return compare(fctx, cfg.ga, cfg.seed); });
  const ModelReport nn = stage("evaluate", [&] { return evaluate_report(cmp.nn_model, fctx.test); });
  const ModelReport ga = stage("evaluate", [&] { return evaluate_report(cmp.ga.best_model, fctx.test); });
  const std::string summary =
      "NN test error " + format_percent(cmp.nn_error) + ", GA test error " + format_percent(cmp.ga_error);

  stage("write", [&] {
    const fs::path& dir = cfg.out;
    write_file(dir / "config_used.ini", [&](std::ostream& o) { write_config(o, cfg, false); });
    write_file(dir / "summary.txt", [&](std::ostream& o) {
      o << summary << '\n';
      o << "nn_stop_reason = " << to_string(cmp.nn_model.stop_reason) << '\n';
      o << "ga_stop_reason = " << to_string(cmp.ga.stop_reason) << '\n';
      o << "ga_cycles = " << cmp.ga.cycles.size() << '\n';
      o << "ga_evaluations = " << cmp.ga.evaluations << '\n';
      o << "ga_best_fitness = " << format_double(*cmp.ga.best.fitness) << '\n';
      o << "split = " << split.train.size() << '/' << split.validation.size() << '/' << split.test.size() << '\n';
    });
    write_file(dir / "comparison.csv", [&](std::ostream& o) {
      o << "model,test_error,stop_reason\n";
      o << "NN," << format_double(cmp.nn_error) << ',' << to_string(cmp.nn_model.stop_reason) << '\n';
      o << "GA," << format_double(cmp.ga_error) << ',' << to_string(cmp.ga.stop_reason) << '\n';
    });
    write_file(dir / "tpr_fpr.csv", [&](std::ostream& o) {
      write_rates_header(o);
      write_rates_row(o, "NN", nn.confusion);
      write_rates_row(o, "GA", ga.confusion);
    });
    write_model_outputs(dir, "nn_", "Test NN Confusion Matrix", nn);
    write_model_outputs(dir, "ga_", "Test GA Confusion Matrix", ga);
    write_roc_charts(dir, {{"NN", &nn}, {"GA", &ga}});
    write_file(dir / "nn_model.txt", [&](std::ostream& o) { write_model(o, cmp.nn_model); });
    write_file(dir / "ga_best_model.txt", [&](std::ostream& o) { write_model(o, cmp.ga.best_model); });
    write_file(dir / "ga_cycles.csv", [&](std::ostream& o) { write_cycles_csv(o, cmp.ga); });
  });
  log_line(ctx, summary);
}

namespace {

struct LoadedModel {
  TrainedModel model;
  Batch batch;
};

LoadedModel load_for_eval(const RunConfig& cfg, const fs::path& model_path) {
  TrainedModel model = stage("load", [&] {
    std::ifstream in(model_path);
    if (!in) throw IoError("cannot open model " + model_path.string());
    return read_model(in);
  });
  const Dataset ds = stage("load", [&] { return load_labeled(cfg); });
  if (static_cast<std::size_t>(model.topology.input_size) != ds.dimension()) {
    throw StageError("eval", "model expects " + std::to_string(model.topology.input_size) +
                                 " inputs but the dataset has " + std::to_string(ds.dimension()) + " features");
  }
  if (model.topology.output_size != kNumAnomalyLabels) {
    throw StageError("eval", "model has " + std::to_string(model.topology.output_size) + " outputs, expected " +
                                 std::to_string(kNumAnomalyLabels));
  }
  return {std::move(model), make_batch(ds)};
}

}  // namespace

void cmd_eval(const CommandContext& ctx, const fs::path& model_path) {
  const RunConfig& cfg = ctx.config;
  const auto loaded = load_for_eval(cfg, model_path);
  const ModelReport report = stage("evaluate", [&] { return evaluate_report(loaded.model, loaded.batch); });
  stage("write", [&] {
    write_model_outputs(cfg.out, "", "Confusion Matrix", report);
    write_file(cfg.out / "tpr_fpr.csv", [&](std::ostream& o) {
      write_rates_header(o);
      write_rates_row(o, "model", report.confusion);
    });
    write_roc_charts(cfg.out, {{"model", &report}});
  });
  log_line(ctx, "test error " + format_percent(test_error(report.confusion)) + " over " +
                    std::to_string(report.confusion.total()) + " samples");
}

void cmd_roc(const CommandContext& ctx, const fs::path& model_path) {
  const RunConfig& cfg = ctx.config;
  const auto loaded = load_for_eval(cfg, model_path);
  const ModelReport report = stage("evaluate", [&] { return evaluate_report(loaded.model, loaded.batch); });
  stage("write", [&] {
    const auto names = label_names();
    for (std::size_t c = 0; c < report.roc.size(); ++c) {
      if (!report.roc[c]) {
        log_line(ctx, "class " + names[c] + ": ROC undefined (needs positive and negative samples)");
        continue;
      }
      write_file(cfg.out / ("roc_" + names[c] + ".csv"), [&](std::ostream& o) { write_roc_csv(o, *report.roc[c]); });
      log_line(ctx, "class " + names[c] + ": AUC " + format_double(report.roc[c]->auc));
    }
    write_roc_charts(cfg.out, {{"model", &report}});
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anomaly taxonomy labeling and GA-initialised MLP training"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool quiet = false;
  app.add_option("--config", config_path, "Sectioned key-value config file");
  app.add_option("--seed", seed, "Random seed (overrides the config)");
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  app.add_flag("--quiet", quiet, "Suppress progress output");

  std::string input, synth_path, model_path;
  bool relabel = false, sequential = false;

  auto* synth = app.add_subcommand("synth", "Generate the synthetic 2-D dataset");
  synth->add_option("output", synth_path, "Output CSV (default <out>/synthetic.csv)");
  auto* label = app.add_subcommand("label", "Label a dataset with ND/CNA/CPA/PA");
  label->add_option("input", input, "Input CSV (default [data] input)");
  label->add_flag("--relabel", relabel, "Overwrite an existing label column");
  auto* train = app.add_subcommand("train", "Train a conventionally initialised network");
  train->add_option("input", input, "Labeled CSV");
  auto* cmp = app.add_subcommand("compare", "Conventional vs GA-initialised network");
  cmp->add_option("input", input, "Labeled CSV");
  cmp->add_flag("--sequential", sequential, "Evaluate GA fitness sequentially");
  auto* eval = app.add_subcommand("eval", "Evaluate a saved model on a labeled CSV");
  eval->add_option("--model", model_path, "Model file")->required();
  eval->add_option("input", input, "Labeled CSV");
  auto* roc = app.add_subcommand("roc", "Per-class ROC curves of a saved model");
  roc->add_option("--model", model_path, "Model file")->required();
  roc->add_option("input", input, "Labeled CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    CommandContext ctx;
    ctx.config = stage("config", [&] { return config_path.empty() ? RunConfig{} : load_config(config_path); });
    if (seed) ctx.config.seed = *seed;
    if (!out_dir.empty()) ctx.config.out = out_dir;
    if (!input.empty()) ctx.config.input = input;
    if (sequential) ctx.config.ga.parallel = false;
    ctx.log = quiet ? nullptr : &out;

    if (*synth) cmd_synth(ctx, synth_path);
    else if (*label) cmd_label(ctx, relabel);
    else if (*train) cmd_train(ctx);
    else if (*cmp) cmd_compare(ctx);
    else if (*eval) cmd_eval(ctx, model_path);
    else if (*roc) cmd_roc(ctx, model_path);
  } catch (const StageError& e) {
    err << "error [" << e.stage() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace anomnet::cli
