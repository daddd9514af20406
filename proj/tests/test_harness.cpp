#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "plab/error.hpp"
#include "plab/harness.hpp"

using namespace plab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("plab_harness_" + name);
  fs::remove_all(p);
  return p;
}

// A fast configuration: tiny data, a short training run, small attacks.
ConfigValues quick(const std::string& kind, const fs::path& out) {
  ConfigValues v;
  v["experiment.kind"] = kind;
  v["experiment.out"] = out.string();
  v["data.n"] = "80";
  v["data.examples"] = "6";
  v["train.epochs"] = "2";
  v["attack.descriptor"] = "pgd:eps=0.03,steps=3,step=0.01";
  v["sweep.families"] = "fc,gauss";
  v["sweep.fc"] = "1,0.5";
  v["sweep.gauss"] = "0,0.1";
  v["transfer.rows"] = "empty|fc:0.5|gauss:0.1";
  v["transfer.cols"] = "fc:0.5|gauss:0.1";
  v["recovery.sigmas"] = "0,0.1,0.5";
  v["recovery.trials"] = "10";
  v["instability.iters"] = "5";
  return v;
}

class ThreadsGuard {
 public:
  explicit ThreadsGuard(const char* value) {
    if (const char* old = std::getenv("PLAB_THREADS")) saved_ = old;
    setenv("PLAB_THREADS", value, 1);
  }
  ~ThreadsGuard() {
    if (saved_.empty()) unsetenv("PLAB_THREADS");
    else setenv("PLAB_THREADS", saved_.c_str(), 1);
  }

 private:
  std::string saved_;
};

}  // namespace

TEST(Config, ParsesSectionsAndComments) {
  const ConfigValues v = parse_config_text(
      "kind = attack\n"
      "# comment\n"
      "; another\n"
      "[data]\n"
      "n = 50   \n"
      "\n"
      "[attack]\n"
      "descriptor = cw:c=0.01,steps=10\n");
  EXPECT_EQ(v.at("experiment.kind"), "attack");
  EXPECT_EQ(v.at("data.n"), "50");
  EXPECT_EQ(v.at("attack.descriptor"), "cw:c=0.01,steps=10");
}

TEST(Config, MalformedLinesNameTheOrigin) {
  try {
    parse_config_text("[data]\nthis line has no equals\n", "exp.ini");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("exp.ini"), std::string::npos);
  }
  EXPECT_THROW(read_config_file("/nonexistent/plab.ini"), Error);
}

TEST(Config, OverridesTakePrecedence) {
  ConfigValues v = parse_config_text("seed = 1\n[train]\nepochs = 3\n");
  apply_overrides(v, {"seed=9", "train.epochs=5", "noise.sigma_init=0.2"});
  EXPECT_EQ(v.at("experiment.seed"), "9");
  EXPECT_EQ(v.at("train.epochs"), "5");
  EXPECT_EQ(v.at("noise.sigma_init"), "0.2");
  EXPECT_THROW(apply_overrides(v, {"no_equals_sign"}), ConfigError);
}

TEST(Config, ResolvesDefaults) {
  const ExperimentConfig c = ExperimentConfig::from_values({{"experiment.kind", "train"}});
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.synthetic.n, 2000u);
  EXPECT_EQ(c.synthetic.k, 4u);
  EXPECT_EQ(c.arch, "smallconv");
  EXPECT_EQ(c.train.epochs, 30u);
  EXPECT_EQ(c.resolved.at("data.noise_level"), "0.1");
  EXPECT_EQ(c.sweep_strengths.at("cd"), default_strengths("cd"));
}

TEST(Config, ErrorsNameTheKey) {
  const auto message = [](const ConfigValues& v) {
    try {
      ExperimentConfig::from_values(v);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message({{"experiment.kind", "train"}, {"train.epochz", "3"}}).find("train.epochz"), std::string::npos);
  EXPECT_NE(message({{"experiment.kind", "train"}, {"train.lr", "fast"}}).find("train.lr"), std::string::npos);
  EXPECT_NE(message({{"experiment.kind", "attack"}, {"attack.descriptor", "pgd:eps=x"}}).find("attack.descriptor"),
            std::string::npos);
  const std::string kind = message({{"experiment.kind", "bogus"}});
  for (const auto& k : experiment_kinds()) EXPECT_NE(kind.find(k), std::string::npos) << k;
}

TEST(Dataset, BinaryBatchFormat) {
  const fs::path p = scratch("batch.bin");
  std::string bytes;
  for (int r = 0; r < 2; ++r) {
    bytes.push_back(static_cast<char>(r * 7));
    for (int i = 0; i < 3072; ++i) bytes.push_back(static_cast<char>(i == 0 ? 255 : (i == 1 ? 0 : i % 256)));
  }
  std::ofstream(p, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  const Dataset d = load_binary_dataset(p.string());
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.labels[1], 7);
  EXPECT_EQ(d.image_shape(), (Shape{3, 32, 32}));
  EXPECT_EQ(d.images[0][0], 1.0);
  EXPECT_EQ(d.images[0][1], 0.0);
  EXPECT_DOUBLE_EQ(d.images[0][1024], (1024 % 256) / 255.0);

  std::ofstream(p, std::ios::binary).write(bytes.data(), 3072);
  EXPECT_THROW(load_binary_dataset(p.string()), FormatError);
  bytes[0] = static_cast<char>(12);
  std::ofstream(p, std::ios::binary).write(bytes.data(), 3073);
  EXPECT_THROW(load_binary_dataset(p.string()), FormatError);
  fs::remove(p);
}

TEST(Dataset, SyntheticTemplatesAndDeterminism) {
  SyntheticConfig sc;
  sc.n = 40;
  sc.noise_level = 0.0;
  const Dataset d = gen_synthetic(sc, 3);
  for (std::size_t i = 0; i < d.size(); ++i)
    EXPECT_EQ(d.images[i], synthetic_template(static_cast<std::size_t>(d.labels[i]), sc));
  sc.noise_level = 0.1;
  const Dataset a = gen_synthetic(sc, 4), b = gen_synthetic(sc, 4);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.labels, b.labels);
  std::vector<int> count(sc.k, 0);
  for (int y : a.labels) ++count[y];
  for (int c : count) EXPECT_EQ(c, 10);
  EXPECT_EQ(a.subset(Split::train).size(), 32u);
  sc.k = 11;
  EXPECT_THROW(gen_synthetic(sc, 1), ConfigError);
}

TEST(Run, TrainWritesCheckpointAndCsv) {
  const fs::path out = scratch("train");
  const RunResult r = run_experiment(quick("train", out));
  ASSERT_EQ(r.exit_code, 0) << r.message;
  EXPECT_EQ(slurp(out / "model.plab").substr(0, 4), "PLAB");
  EXPECT_EQ(first_line(out / "train.csv"), "epoch,loss,train_acc");
  EXPECT_TRUE(fs::exists(out / "manifest.txt"));
  fs::remove_all(out);
}

TEST(Run, UnknownKindExitsTwo) {
  const RunResult r = run_experiment(ConfigValues{{"experiment.kind", "fly"}});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.message.find("channel-sweep"), std::string::npos);
}

TEST(Run, RuntimeFailureRemovesPartialOutput) {
  const fs::path out = scratch("fail");
  const fs::path bad = scratch("corrupt.plab");
  std::ofstream(bad) << "not a checkpoint";
  ConfigValues v = quick("transfer", out);
  v["model.checkpoint"] = bad.string();
  const RunResult r = run_experiment(v);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_TRUE(r.files.empty());
  EXPECT_FALSE(fs::exists(out));

  // A missing checkpoint is a configuration error.
  v["model.checkpoint"] = (out / "missing.plab").string();
  EXPECT_EQ(run_experiment(v).exit_code, 2);
  fs::remove(bad);
}

TEST(Run, CsvHeadersMatchSchemas) {
  const fs::path out = scratch("headers");
  const std::vector<std::pair<std::string, std::pair<std::string, std::string>>> cases{
      {"channel-sweep", {"sweep.csv", "family,strength,delta_c,clean_acc,adv_acc"}},
      {"transfer", {"transfer.csv", "attack_row,defense_col,accuracy"}},
      {"recovery-window", {"recovery.csv", "sigma,freq_orig,freq_adv,freq_other,trials"}},
      {"instability", {"instability.csv", "example_id,kind,m1_orig,m1_adv_class,m1_min_class,m2,anomaly"}},
  };
  for (const auto& [kind, file] : cases) {
    ConfigValues v = quick(kind, out / kind);
    if (kind == "recovery-window") v["attack.descriptor"] = "pgd:eps=0.3,steps=20,step=0.02";
    const RunResult r = run_experiment(v);
    ASSERT_EQ(r.exit_code, 0) << kind << ": " << r.message;
    EXPECT_EQ(first_line(out / kind / file.first), file.second) << kind;
  }
  fs::remove_all(out);
}

// Same config and seed: byte-identical outputs, whatever the worker count;
// the manifest alone reproduces the run.
TEST(Run, DeterministicAcrossRepeatsWorkersAndManifest) {
  const fs::path root = scratch("determinism");
  for (const std::string kind : {"attack", "channel-sweep", "transfer", "instability"}) {
    ConfigValues v = quick(kind, root / (kind + "_a"));
    v["defense.descriptor"] = "channel:gauss:0.05;trials:3";
    std::string first;
    {
      ThreadsGuard g("1");
      ASSERT_EQ(run_experiment(v).exit_code, 0);
    }
    v["experiment.out"] = (root / (kind + "_b")).string();
    {
      ThreadsGuard g("3");
      ASSERT_EQ(run_experiment(v).exit_code, 0);
    }
    ConfigValues from_manifest = read_config_file((root / (kind + "_a") / "manifest.txt").string());
    from_manifest["experiment.out"] = (root / (kind + "_c")).string();
    ASSERT_EQ(run_experiment(from_manifest).exit_code, 0);
    for (const auto& entry : fs::directory_iterator(root / (kind + "_a"))) {
      if (entry.path().extension() != ".csv") continue;
      const std::string name = entry.path().filename().string();
      const std::string a = slurp(entry.path());
      EXPECT_EQ(a, slurp(root / (kind + "_b") / name)) << kind << "/" << name;
      EXPECT_EQ(a, slurp(root / (kind + "_c") / name)) << kind << "/" << name << " from manifest";
    }
  }
  fs::remove_all(root);
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("cli");
  const std::string cli = PLAB_CLI_PATH;
  EXPECT_EQ(WEXITSTATUS(std::system((cli + " fly > /dev/null 2>&1").c_str())), 2);
  EXPECT_EQ(WEXITSTATUS(std::system((cli + " train train.bogus=1 > /dev/null 2>&1").c_str())), 2);
  EXPECT_EQ(WEXITSTATUS(std::system((cli + " > /dev/null 2>&1").c_str())), 2);
  const std::string ok = cli + " train --out " + out.string() + " --seed 7 data.n=40 train.epochs=1 > /dev/null 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(ok.c_str())), 0);
  EXPECT_TRUE(fs::exists(out / "model.plab"));
  EXPECT_NE(slurp(out / "manifest.txt").find("seed = 7"), std::string::npos);
  fs::remove_all(out);
}
