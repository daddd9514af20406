#include "plab/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "plab/ops.hpp"
#include "plab/parallel.hpp"

namespace plab {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Every recognised key and its default.
const ConfigValues& defaults() {
  static const ConfigValues d{
      {"experiment.kind", ""},
      {"experiment.seed", "42"},
      {"experiment.out", "plab_out"},
      {"data.source", "synthetic"},
      {"data.n", "2000"},
      {"data.k", "4"},
      {"data.channels", "3"},
      {"data.size", "16"},
      {"data.noise_level", "0.1"},
      {"data.contrast", "0.05"},
      {"data.classes", "10"},
      {"data.examples", "100"},
      {"model.arch", "smallconv"},
      {"model.checkpoint", ""},
      {"train.epochs", "30"},
      {"train.batch", "32"},
      {"train.lr", "0.05"},
      {"train.momentum", "0.9"},
      {"train.warmup", "0"},
      {"train.adversarial", "0"},
      {"train.adv_eps", "0.0313725"},
      {"train.adv_steps", "7"},
      {"train.adv_step", "0.01"},
      {"train.adv_clean_weight", "0.5"},
      {"noise.dist", "gauss"},
      {"noise.sigma_init", "0"},
      {"noise.sigma_inner", "0"},
      {"noise.sigma_param", "0"},
      {"noise.apply_in_training", "0"},
      {"attack.descriptor", "pgd:eps=0.0313725,steps=40,step=0.00784314"},
      {"defense.descriptor", ""},
      {"sweep.families", "fc,cd,svd,gauss,uniform,laplace"},
      {"sweep.fc", ""},
      {"sweep.cd", ""},
      {"sweep.svd", ""},
      {"sweep.gauss", ""},
      {"sweep.uniform", ""},
      {"sweep.laplace", ""},
      {"sweep.trials", "1"},
      {"transfer.rows", "empty|fc:0.5|cd:2|svd:0.375|gauss:0.06|uniform:0.0462|laplace:0.0849"},
      {"transfer.cols", "fc:0.5|cd:2|svd:0.375|gauss:0.06|uniform:0.0462|laplace:0.0849"},
      {"recovery.sigmas", "0,0.01,0.02,0.03,0.05,0.07,0.1,0.15,0.2,0.3"},
      {"recovery.trials", "100"},
      {"recovery.example", "0"},
      {"instability.iters", "100"},
      {"instability.fd_step", "0.0001"},
      {"instability.tol", "0.000001"},
  };
  return d;
}

std::string qualify(const std::string& key) {
  return key.find('.') == std::string::npos ? "experiment." + key : key;
}

double get_double(const ConfigValues& v, const std::string& key) {
  const std::string& s = v.at(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
  }
}

std::uint64_t get_uint(const ConfigValues& v, const std::string& key) {
  const std::string& s = v.at(key);
  try {
    std::size_t used = 0;
    if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
    const unsigned long long d = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + s + "'");
  }
}

bool get_bool(const ConfigValues& v, const std::string& key) {
  const std::string& s = v.at(key);
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  throw ConfigError("key '" + key + "': expected 0/1 or true/false, got '" + s + "'");
}

std::vector<double> get_doubles(const ConfigValues& v, const std::string& key) {
  std::vector<double> out;
  for (const std::string& item : split_list(v.at(key), ',')) {
    ConfigValues one{{key, item}};
    out.push_back(get_double(one, key));
  }
  return out;
}

bool is_defense_descriptor(const std::string& s) {
  return s.rfind("channel:", 0) == 0 || s.rfind("noise:", 0) == 0 || s.rfind("trials:", 0) == 0;
}

DefenseConfig defense_from(const std::string& s) {
  if (s.empty()) return {};
  if (is_defense_descriptor(s)) return DefenseConfig::parse(s);
  DefenseConfig d;
  const Channel c = Channel::parse(s);
  if (c.kind != Channel::Kind::empty) d.channel = c;
  return d;
}

template <typename Fn>
auto with_key(const std::string& key, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.find("'" + key + "'") != std::string::npos) throw;
    throw ConfigError("key '" + key + "': " + what);
  } catch (const Error& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

}  // namespace

ConfigValues parse_config_text(const std::string& text, const std::string& origin) {
  ConfigValues values;
  std::string section = "experiment";
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    values[section + "." + key] = trim(line.substr(eq + 1));
  }
  return values;
}

ConfigValues read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_overrides(ConfigValues& values, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
    values[qualify(trim(o.substr(0, eq)))] = trim(o.substr(eq + 1));
  }
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"train",           "attack",     "channel-sweep", "transfer",
                                              "recovery-window", "instability"};
  return kinds;
}

std::vector<double> default_strengths(const std::string& family) {
  if (family == "fc") return {1.0, 0.8, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
  if (family == "cd") return {8, 7, 6, 5, 4, 3, 2, 1};
  if (family == "svd") return {1.0, 0.75, 0.5, 0.375, 0.25, 0.1875, 0.125, 0.0625};
  if (family == "gauss" || family == "uniform" || family == "laplace") {
    return {0.0, 0.01, 0.02, 0.03, 0.05, 0.07, 0.1, 0.15, 0.2, 0.3};
  }
  throw ConfigError("unknown channel family '" + family + "'");
}

ExperimentConfig ExperimentConfig::from_values(const ConfigValues& values) {
  ConfigValues v = defaults();
  for (const auto& [key, value] : values) {
    if (!v.count(key)) throw ConfigError("unknown configuration key '" + key + "'");
    v[key] = value;
  }
  ExperimentConfig c;
  c.kind = v.at("experiment.kind");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end()) {
    std::string list;
    for (const auto& k : kinds) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("key 'experiment.kind': unknown experiment kind '" + c.kind + "' (valid kinds: " + list + ")");
  }
  c.seed = get_uint(v, "experiment.seed");
  c.out_dir = v.at("experiment.out");
  if (c.out_dir.empty()) throw ConfigError("key 'experiment.out': output directory must not be empty");

  c.data_source = v.at("data.source");
  c.synthetic.n = get_uint(v, "data.n");
  c.synthetic.k = get_uint(v, "data.k");
  c.synthetic.channels = get_uint(v, "data.channels");
  c.synthetic.size = get_uint(v, "data.size");
  c.synthetic.noise_level = get_double(v, "data.noise_level");
  c.synthetic.contrast = get_double(v, "data.contrast");
  c.binary_classes = get_uint(v, "data.classes");
  c.examples = get_uint(v, "data.examples");
  if (c.examples == 0) throw ConfigError("key 'data.examples': must be >= 1");
  if (c.data_source != "synthetic" && !fs::exists(c.data_source)) {
    throw ConfigError("key 'data.source': file '" + c.data_source + "' does not exist");
  }

  c.arch = v.at("model.arch");
  const auto& archs = known_architectures();
  if (std::find(archs.begin(), archs.end(), c.arch) == archs.end()) {
    throw ConfigError("key 'model.arch': unknown architecture '" + c.arch + "'");
  }
  c.checkpoint = v.at("model.checkpoint");
  if (!c.checkpoint.empty() && !fs::exists(c.checkpoint)) {
    throw ConfigError("key 'model.checkpoint': file '" + c.checkpoint + "' does not exist");
  }

  c.train.epochs = get_uint(v, "train.epochs");
  c.train.batch = get_uint(v, "train.batch");
  c.train.lr = get_double(v, "train.lr");
  c.train.momentum = get_double(v, "train.momentum");
  c.train.warmup = get_uint(v, "train.warmup");
  c.train.seed = c.seed;
  c.adversarial_training = get_bool(v, "train.adversarial");
  c.adv.eps = get_double(v, "train.adv_eps");
  c.adv.pgd_steps = get_uint(v, "train.adv_steps");
  c.adv.step_size = get_double(v, "train.adv_step");
  c.adv.clean_weight = get_double(v, "train.adv_clean_weight");
  c.adv.adv_weight = 1.0 - c.adv.clean_weight;
  with_key("train.adv_clean_weight", [&] { c.adv.validate(); });
  if (c.train.batch == 0) throw ConfigError("key 'train.batch': must be >= 1");
  if (!(c.train.lr >= 0.0)) throw ConfigError("key 'train.lr': must be non-negative");

  c.train.noise.dist = with_key("noise.dist", [&] { return parse_noise_kind(v.at("noise.dist")); });
  c.train.noise.sigma_init = get_double(v, "noise.sigma_init");
  c.train.noise.sigma_inner = get_double(v, "noise.sigma_inner");
  c.train.noise.sigma_param = get_double(v, "noise.sigma_param");
  c.train.noise.apply_in_training = get_bool(v, "noise.apply_in_training");
  with_key("noise.sigma_init", [&] { c.train.noise.validate(); });

  c.attack = v.at("attack.descriptor");
  with_key("attack.descriptor", [&] { return AttackConfig::parse(c.attack); });
  c.defense = with_key("defense.descriptor", [&] { return defense_from(v.at("defense.descriptor")); });

  c.sweep_families = split_list(v.at("sweep.families"), ',');
  for (const auto& f : c.sweep_families) {
    const std::string key = "sweep." + f;
    if (!v.count(key)) throw ConfigError("key 'sweep.families': unknown channel family '" + f + "'");
    c.sweep_strengths[f] = v.at(key).empty() ? default_strengths(f) : get_doubles(v, key);
    for (double s : c.sweep_strengths[f]) {
      with_key(key, [&] { Channel::parse(f + ":" + format_double(s)); });
    }
  }
  c.sweep_trials = get_uint(v, "sweep.trials");
  if (c.sweep_trials == 0) throw ConfigError("key 'sweep.trials': must be >= 1");

  c.transfer_rows = split_list(v.at("transfer.rows"), '|');
  for (const auto& r : c.transfer_rows) with_key("transfer.rows", [&] { Channel::parse(r); });
  c.transfer_cols = split_list(v.at("transfer.cols"), '|');
  for (const auto& col : c.transfer_cols) with_key("transfer.cols", [&] { defense_from(col); });

  c.recovery_sigmas = get_doubles(v, "recovery.sigmas");
  for (double s : c.recovery_sigmas)
    if (s < 0.0) throw ConfigError("key 'recovery.sigmas': sigmas must be non-negative");
  c.recovery_trials = get_uint(v, "recovery.trials");
  if (c.recovery_trials == 0) throw ConfigError("key 'recovery.trials': must be >= 1");
  c.recovery_example = get_uint(v, "recovery.example");

  c.hessian.iters = get_uint(v, "instability.iters");
  c.hessian.fd_step = get_double(v, "instability.fd_step");
  c.hessian.tol = get_double(v, "instability.tol");
  if (c.hessian.iters == 0) throw ConfigError("key 'instability.iters': must be >= 1");
  if (!(c.hessian.fd_step > 0.0)) throw ConfigError("key 'instability.fd_step': must be positive");

  c.resolved = v;
  return c;
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.data_source == "synthetic") return gen_synthetic(cfg.synthetic, cfg.seed);
  Dataset d = load_binary_dataset(cfg.data_source, cfg.binary_classes);
  // Binary batches carry no split; hold out the last 20%.
  const std::size_t cut = d.size() - d.size() / 5;
  for (std::size_t i = cut; i < d.size(); ++i) d.splits[i] = Split::test;
  return d;
}

Model obtain_model(const ExperimentConfig& cfg, const Dataset& data) {
  if (!cfg.checkpoint.empty()) return load_checkpoint(cfg.checkpoint);
  const Dataset train_split = data.subset(Split::train);
  Model m = build_model(cfg.arch, data.image_shape(), data.num_classes, cfg.seed);
  if (cfg.adversarial_training) return train_adversarial(std::move(m), train_split, cfg.adv, cfg.train).model;
  return train(std::move(m), train_split, cfg.train).model;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

namespace {

class CsvFile {
 public:
  CsvFile(const std::string& path, const std::string& header) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write '" + path + "'");
    out_ << header << '\n';
  }
  template <typename... Fields>
  void row(const Fields&... fields) {
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << cell(fields)), ...);
    out_ << '\n';
  }
  ~CsvFile() = default;
  void close() {
    out_.close();
    if (!out_) throw Error("failed writing '" + path_ + "'");
  }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  std::string path_;
  std::ofstream out_;
};

}  // namespace

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  CsvFile f(path, "family,strength,delta_c,clean_acc,adv_acc");
  for (const auto& r : rows) f.row(r.family, r.strength, r.delta_c, r.clean_acc, r.adv_acc);
  f.close();
}

void write_transfer_csv(const std::string& path, const TransferMatrix& tm) {
  CsvFile f(path, "attack_row,defense_col,accuracy");
  for (std::size_t r = 0; r < tm.rows.size(); ++r)
    for (std::size_t c = 0; c < tm.cols.size(); ++c) f.row(tm.rows[r], tm.cols[c], tm.cells[r][c]);
  f.close();
}

void write_recovery_csv(const std::string& path, const RecoveryCurve& curve) {
  CsvFile f(path, "sigma,freq_orig,freq_adv,freq_other,trials");
  for (std::size_t i = 0; i < curve.sigmas.size(); ++i) {
    f.row(curve.sigmas[i], curve.freq_original[i], curve.freq_adversarial[i], curve.freq_other[i], curve.trials);
  }
  f.close();
}

void write_instability_csv(const std::string& path, const std::vector<InstabilityRow>& rows) {
  CsvFile f(path, "example_id,kind,m1_orig,m1_adv_class,m1_min_class,m2,anomaly");
  for (const auto& r : rows) {
    f.row(r.example_id, r.adversarial ? "adv" : "nat", r.m1_orig, r.m1_adv_class, r.m1_min_class, r.m2, r.anomaly);
  }
  f.close();
}

namespace {

struct Examples {
  std::vector<Tensor> xs;
  std::vector<int> labels;
};

Examples test_examples(const Dataset& data, std::size_t n) {
  const Dataset test = data.subset(Split::test);
  if (test.empty()) throw ArgumentError("dataset has no test examples");
  Examples e;
  for (std::size_t i = 0; i < std::min(n, test.size()); ++i) {
    e.xs.push_back(test.images[i]);
    e.labels.push_back(test.labels[i]);
  }
  return e;
}

std::vector<AttackResult> attack_all(const Model& m, const Examples& ex, const AttackConfig& attack,
                                     const NoiseConfig& noise, const Rng& rng) {
  std::vector<AttackResult> out(ex.xs.size());
  parallel_for(ex.xs.size(), [&](std::size_t i) {
    Rng r = rng.derive(i);
    out[i] = run_attack(m, ex.xs[i], static_cast<std::size_t>(ex.labels[i]), attack, noise, r);
  });
  return out;
}

void write_manifest(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "# plab experiment manifest\n";
  out << "# plab_version = " << kVersion << "\n";
  out << "# checkpoint_format = " << kCheckpointVersion << "\n";
  out << "# csv_precision = 6\n";
  std::string section;
  for (const auto& [key, value] : cfg.resolved) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      out << "\n[" << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = " << value << "\n";
  }
  out.close();
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  RunResult result;
  bool created_dir = false;
  auto output = [&](const std::string& name) {
    const std::string path = (fs::path(cfg.out_dir) / name).string();
    result.files.push_back(path);
    return path;
  };
  try {
    if (!fs::exists(cfg.out_dir)) created_dir = fs::create_directories(cfg.out_dir);
    const Dataset data = load_dataset(cfg);
    const Rng base(cfg.seed, 0x6578);  // experiment streams

    if (cfg.kind == "train") {
      const Dataset train_split = data.subset(Split::train);
      Model m = build_model(cfg.arch, data.image_shape(), data.num_classes, cfg.seed);
      TrainResult tr = cfg.adversarial_training ? train_adversarial(std::move(m), train_split, cfg.adv, cfg.train)
                                                : train(std::move(m), train_split, cfg.train);
      save_checkpoint(tr.model, output("model.plab"));
      CsvFile f(output("train.csv"), "epoch,loss,train_acc");
      for (const auto& h : tr.history) f.row(h.epoch, h.loss, h.accuracy);
      f.close();
      const Dataset test = data.subset(Split::test);
      CsvFile s(output("train_summary.csv"), "clean_test_acc");
      s.row(test.empty() ? 0.0 : accuracy(tr.model, test));
      s.close();
    } else {
      const Model m = obtain_model(cfg, data);
      const Examples ex = test_examples(data, cfg.examples);
      const AttackConfig attack = AttackConfig::parse(cfg.attack);

      if (cfg.kind == "attack") {
        const auto results = attack_all(m, ex, attack, cfg.defense.noise, base.derive(1));
        std::vector<Tensor> adv;
        for (const auto& r : results) adv.push_back(r.x_adv);
        CsvFile f(output("attack.csv"), "example_id,label,success,delta_adv,linf,queries");
        for (std::size_t i = 0; i < results.size(); ++i) {
          f.row(i, ex.labels[i], results[i].success, results[i].delta_adv, results[i].linf, results[i].queries);
        }
        f.close();
        double mean_delta = 0.0;
        for (const auto& r : results) mean_delta += r.delta_adv / static_cast<double>(results.size());
        CsvFile s(output("attack_summary.csv"), "attack,defense,clean_acc,adv_acc,mean_delta_adv");
        s.row(attack.descriptor(), cfg.defense.descriptor(),
              evaluate_defense(m, cfg.defense, ex.xs, ex.labels, base.derive(2)),
              evaluate_defense(m, cfg.defense, adv, ex.labels, base.derive(3)), mean_delta);
        s.close();
      } else if (cfg.kind == "channel-sweep") {
        const auto results = attack_all(m, ex, attack, NoiseConfig{}, base.derive(1));
        std::vector<Tensor> adv;
        for (const auto& r : results) adv.push_back(r.x_adv);
        std::vector<SweepRow> rows;
        for (std::size_t f = 0; f < cfg.sweep_families.size(); ++f) {
          const std::string& fam = cfg.sweep_families[f];
          const Channel family = Channel::parse(fam + ":" + format_double(cfg.sweep_strengths.at(fam).front()));
          const auto part = channel_sweep(m, family, cfg.sweep_strengths.at(fam), adv, ex.xs, ex.labels,
                                          base.derive(2, f), cfg.sweep_trials);
          rows.insert(rows.end(), part.begin(), part.end());
        }
        write_sweep_csv(output("sweep.csv"), rows);
      } else if (cfg.kind == "transfer") {
        std::vector<TransferRow> rows;
        for (const auto& r : cfg.transfer_rows) {
          const Channel c = Channel::parse(r);
          TransferRow row{c.kind == Channel::Kind::empty ? "empty" : c.descriptor(), std::nullopt};
          if (c.kind != Channel::Kind::empty) {
            AttackConfig a = attack;
            a.channel_in_loop = c;
            row.attack = a;
          }
          rows.push_back(row);
        }
        std::vector<std::pair<std::string, DefenseConfig>> cols;
        for (const auto& col : cfg.transfer_cols) cols.emplace_back(col, defense_from(col));
        write_transfer_csv(output("transfer.csv"), transfer_matrix(m, rows, cols, ex.xs, ex.labels, base.derive(1)));
      } else if (cfg.kind == "recovery-window") {
        const Dataset test = data.subset(Split::test);
        if (cfg.recovery_example >= test.size()) {
          throw ConfigError("key 'recovery.example': index " + std::to_string(cfg.recovery_example) +
                            " is outside the test split (" + std::to_string(test.size()) + " examples)");
        }
        const Tensor& x = test.images[cfg.recovery_example];
        const auto label = static_cast<std::size_t>(test.labels[cfg.recovery_example]);
        Rng r = base.derive(1);
        const AttackResult a = run_attack(m, x, label, attack, NoiseConfig{}, r);
        if (!a.success) throw Error("attack failed on the recovery example; no adversarial image to analyse");
        const std::size_t adv_label = argmax(forward(m, a.x_adv));
        write_recovery_csv(output("recovery.csv"), recovery_window(m, x, a.x_adv, label, adv_label,
                                                                   cfg.recovery_sigmas, cfg.recovery_trials,
                                                                   base.derive(2)));
      } else if (cfg.kind == "instability") {
        const auto results = attack_all(m, ex, attack, NoiseConfig{}, base.derive(1));
        std::vector<InstabilityRow> rows(2 * ex.xs.size());
        std::vector<char> keep(rows.size(), 0);
        parallel_for(ex.xs.size(), [&](std::size_t i) {
          const auto label = static_cast<std::size_t>(ex.labels[i]);
          if (argmax(forward(m, ex.xs[i])) != label) return;
          rows[2 * i] = instability_row(m, ex.xs[i], label, i, false, cfg.hessian);
          keep[2 * i] = 1;
          if (results[i].success) {
            rows[2 * i + 1] = instability_row(m, results[i].x_adv, label, i, true, cfg.hessian);
            keep[2 * i + 1] = 1;
          }
        });
        std::vector<InstabilityRow> kept;
        for (std::size_t i = 0; i < rows.size(); ++i)
          if (keep[i]) kept.push_back(rows[i]);
        write_instability_csv(output("instability.csv"), kept);
      }
    }
    write_manifest(output("manifest.txt"), cfg);
    result.message = "wrote " + std::to_string(result.files.size()) + " files to " + cfg.out_dir;
  } catch (const std::exception& e) {
    std::error_code ec;
    for (const auto& f : result.files) fs::remove(f, ec);
    if (created_dir) fs::remove(cfg.out_dir, ec);  // only removes an empty directory
    result.files.clear();
    result.exit_code = dynamic_cast<const ConfigError*>(&e) ? 2 : 1;
    result.message = e.what();
  }
  return result;
}

RunResult run_experiment(const ConfigValues& values) {
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::from_values(values);
  } catch (const Error& e) {
    return RunResult{2, e.what(), {}};
  }
  return run_experiment(cfg);
}

}  // namespace plab
