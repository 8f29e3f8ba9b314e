#include "anomnet/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "anomnet/errors.hpp"

namespace anomnet {

namespace pt = boost::property_tree;

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split_list(const std::string& value, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = strip(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T number(const std::string& where, const std::string& value) {
  T out{};
  const std::string v = strip(value);
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError("config " + where + ": '" + value + "' is not a valid number");
  }
  return out;
}

bool boolean(const std::string& where, const std::string& value) {
  const std::string v = strip(value);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError("config " + where + ": '" + value + "' is not a boolean");
}

void apply_labeling(LabelingConfig& cfg, const std::string& where, const std::string& key, const std::string& value) {
  if (key == "num_clusters") cfg.num_clusters = number<int>(where, value);
  else if (key == "knn_k") cfg.knn_k = number<int>(where, value);
  else if (key == "pa_score_multiplier") cfg.pa_score_multiplier = number<double>(where, value);
  else throw ParseError("config: unknown key " + where);
}

std::vector<Blob> parse_blobs(const std::string& where, const std::string& value) {
  std::vector<Blob> blobs;
  for (const auto& item : split_list(value, ';')) {
    std::istringstream in(item);
    Blob b;
    if (!(in >> b.center_x >> b.center_y >> b.spread_x >> b.spread_y >> b.count) || !(in >> std::ws).eof()) {
      throw ParseError("config " + where + ": blob '" + item + "' must be 'cx cy sx sy count'");
    }
    blobs.push_back(b);
  }
  return blobs;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

}  // namespace

void RunConfig::validate() const {
  labeling.validate();
  for (const auto& [id, c] : class_labeling) c.validate();
  training.validate();
  ga.validate();
  split.validate();
  if (hidden_size < 1) throw ArgumentError("config: mlp.hidden must be >= 1");
}

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
  }

  RunConfig cfg;
  // Per-class labeling sections start from the finished [labeling] section.
  for (const auto& [name, node] : tree) {
    if (name.rfind("labeling.class.", 0) != 0) continue;
    const int id = number<int>(name, name.substr(std::string("labeling.class.").size()));
    cfg.class_labeling.try_emplace(id);
  }
  for (const auto& [name, node] : tree) {
    if (node.empty() && node.data().empty() && name != "seed" && name != "out") continue;  // empty section
    if (node.empty()) {
      if (name == "seed") cfg.seed = number<std::uint64_t>(name, node.data());
      else if (name == "out") cfg.out = strip(node.data());
      else throw ParseError("config: unknown top-level key '" + name + "'");
      continue;
    }
    for (const auto& [key, child] : node) {
      const std::string where = name + "." + key;
      const std::string& value = child.data();
      if (name == "data") {
        if (key == "input") cfg.input = strip(value);
        else if (key == "retained") cfg.retained = split_list(value, ',');
        else if (key == "discarded") cfg.discarded = split_list(value, ',');
        else if (key == "ignore") cfg.ignored = split_list(value, ',');
        else throw ParseError("config: unknown key " + where);
      } else if (name == "synth") {
        if (key == "blobs") cfg.synth.blobs = parse_blobs(where, value);
        else if (key == "scatter") cfg.synth.scatter_count = number<int>(where, value);
        else if (key == "box") {
          std::istringstream box(value);
          if (!(box >> cfg.synth.box_min_x >> cfg.synth.box_max_x >> cfg.synth.box_min_y >> cfg.synth.box_max_y)) {
            throw ParseError("config " + where + ": expected 'xmin xmax ymin ymax'");
          }
        } else throw ParseError("config: unknown key " + where);
      } else if (name == "labeling") {
        apply_labeling(cfg.labeling, where, key, value);
      } else if (name.rfind("labeling.class.", 0) == 0) {
        continue;
      } else if (name == "mlp") {
        if (key == "hidden") cfg.hidden_size = number<int>(where, value);
        else if (key == "max_epochs") cfg.training.max_epochs = number<int>(where, value);
        else if (key == "patience") cfg.training.patience = number<int>(where, value);
        else if (key == "sigma") cfg.training.sigma = number<double>(where, value);
        else if (key == "lambda") cfg.training.lambda = number<double>(where, value);
        else if (key == "goal") cfg.training.goal = number<double>(where, value);
        else throw ParseError("config: unknown key " + where);
      } else if (name == "ga") {
        if (key == "cycles") cfg.ga.cycles = number<int>(where, value);
        else if (key == "population") cfg.ga.population_size = number<int>(where, value);
        else if (key == "alpha") cfg.ga.crossover_alpha = number<double>(where, value);
        else if (key == "mutation_rate") cfg.ga.mutation_rate = number<double>(where, value);
        else if (key == "selection_rate") cfg.ga.selection_rate = number<double>(where, value);
        else if (key == "goal") cfg.ga.goal = number<double>(where, value);
        else if (key == "parallel") cfg.ga.parallel = boolean(where, value);
        else if (key == "fitness") {
          const std::string v = strip(value);
          if (v == "overall") cfg.ga.fitness_mode = FitnessMode::Overall;
          else if (v == "per_class_mean") cfg.ga.fitness_mode = FitnessMode::PerClassMean;
          else throw ParseError("config " + where + ": expected 'overall' or 'per_class_mean'");
        } else throw ParseError("config: unknown key " + where);
      } else if (name == "split") {
        if (key == "train") cfg.split.train = number<double>(where, value);
        else if (key == "validation") cfg.split.validation = number<double>(where, value);
        else if (key == "test") cfg.split.test = number<double>(where, value);
        else throw ParseError("config: unknown key " + where);
      } else {
        throw ParseError("config: unknown section [" + name + "]");
      }
    }
  }
  for (auto& [id, override_cfg] : cfg.class_labeling) {
    override_cfg = cfg.labeling;
    const std::string name = "labeling.class." + std::to_string(id);
    for (const auto& [key, child] : tree.get_child(pt::ptree::path_type(name, '/'))) {
      apply_labeling(override_cfg, name + "." + key, key, child.data());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& cfg, bool include_runtime) {
  out << "seed = " << cfg.seed << '\n';
  if (include_runtime) out << "out = " << cfg.out.string() << '\n';
  out << '\n';
  out << "[data]\ninput = " << cfg.input.string() << "\nretained = " << join(cfg.retained)
      << "\ndiscarded = " << join(cfg.discarded) << "\nignore = " << join(cfg.ignored) << "\n\n";
  out << "[synth]\nblobs = ";
  for (std::size_t i = 0; i < cfg.synth.blobs.size(); ++i) {
    const Blob& b = cfg.synth.blobs[i];
    out << (i ? "; " : "") << format_double(b.center_x) << ' ' << format_double(b.center_y) << ' '
        << format_double(b.spread_x) << ' ' << format_double(b.spread_y) << ' ' << b.count;
  }
  out << "\nscatter = " << cfg.synth.scatter_count << "\nbox = " << format_double(cfg.synth.box_min_x) << ' '
      << format_double(cfg.synth.box_max_x) << ' ' << format_double(cfg.synth.box_min_y) << ' '
      << format_double(cfg.synth.box_max_y) << "\n\n";
  auto labeling = [&](const std::string& section, const LabelingConfig& l) {
    out << '[' << section << "]\nnum_clusters = " << l.num_clusters << "\nknn_k = " << l.knn_k
        << "\npa_score_multiplier = " << format_double(l.pa_score_multiplier) << "\n\n";
  };
  labeling("labeling", cfg.labeling);
  for (const auto& [id, l] : cfg.class_labeling) labeling("labeling.class." + std::to_string(id), l);
  out << "[mlp]\nhidden = " << cfg.hidden_size << "\nmax_epochs = " << cfg.training.max_epochs
      << "\npatience = " << cfg.training.patience << "\nsigma = " << format_double(cfg.training.sigma)
      << "\nlambda = " << format_double(cfg.training.lambda) << "\ngoal = " << format_double(cfg.training.goal)
      << "\n\n";
  out << "[ga]\ncycles = " << cfg.ga.cycles << "\npopulation = " << cfg.ga.population_size
      << "\nalpha = " << format_double(cfg.ga.crossover_alpha) << "\nmutation_rate = "
      << format_double(cfg.ga.mutation_rate) << "\nselection_rate = " << format_double(cfg.ga.selection_rate)
      << "\ngoal = " << format_double(cfg.ga.goal) << "\nfitness = "
      << (cfg.ga.fitness_mode == FitnessMode::Overall ? "overall" : "per_class_mean")
      << '\n';
  if (include_runtime) out << "parallel = " << (cfg.ga.parallel ? "true" : "false") << '\n';
  out << '\n';
  out << "[split]\ntrain = " << format_double(cfg.split.train) << "\nvalidation = "
      << format_double(cfg.split.validation) << "\ntest = " << format_double(cfg.split.test) << '\n';
}

}  // namespace anomnet
