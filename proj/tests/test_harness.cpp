#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "grem/config.hpp"
#include "grem/experiments.hpp"
#include "grem/rng.hpp"

using namespace grem;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(
[general]
seed = 7

[ehrenfest-check]
n2_max = 6
t_grid = 0.2,0.5,0.8
tol = 1e-10

[pi-check]
n2_max = 6
lambdas = 0.1,1,10
tol = 1e-10

[aging-curve]
regimes = BelowFT,AtFT
alpha1 = 0.2222222222222222
alpha2 = 0.6666666666666666
p = 0.1
psi = 1
k1 = 16
eps_rel1 = 1e-9
eps_rel2 = 1e-5
thetas = 0.5,1
tws = 0.1,0.01
replicas = 300
gap_tol = 1

[clock-scaling]
alpha1 = 0.2222222222222222
alpha2 = 0.6666666666666666
p = 0.1
psi = 1
k1 = 16
eps_rel = 1e-4
epsilons = 1e-3
r_gamma_prime = 1
r_gamma1 = 1e-4
r_weighted = 1
r_synthetic = 1
replicas_gamma_prime = 400
replicas_gamma1 = 400
replicas_weighted = 400
replicas_synthetic = 400
synthetic_alpha = 0.5
tol = 1
synthetic_tol = 1
)";

Config small() {
  std::istringstream is(kSmall);
  return Config::parse(is);
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("grem_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST(Config, ParsesTypedValues) {
  const auto c = small();
  EXPECT_EQ(c.integer("general", "seed"), 7);
  EXPECT_EQ(c.reals("pi-check", "lambdas").size(), 3u);
  EXPECT_EQ(c.real("pi-check", "tol"), 1e-10);
  EXPECT_EQ(c.real("pi-check", "missing", 2.5), 2.5);
  EXPECT_THROW(c.real("pi-check", "missing"), std::invalid_argument);
  EXPECT_THROW(c.integer("pi-check", "tol"), std::invalid_argument);
}

TEST(Config, MalformedLineReported) {
  std::istringstream is("[a]\nx = 1\nthis is not a pair\n");
  try {
    Config::parse(is);
    FAIL() << "expected a parse error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
  }
}

TEST(Config, HashIgnoresOrderAndTracksValues) {
  std::istringstream a("[s]\nx = 1\ny = 2\n[t]\nz = 3\n"), b("[t]\nz = 3\n[s]\ny = 2\nx = 1\n");
  auto ca = Config::parse(a), cb = Config::parse(b);
  EXPECT_EQ(ca.hash(), cb.hash());
  cb.set("s", "x", "1.5");
  EXPECT_NE(ca.hash(), cb.hash());
}

TEST(Streams, SameTripleSameStream) {
  Rng a = derive_stream(5, "tag", 3), b = derive_stream(5, "tag", 3);
  for (int k = 0; k < 16; ++k) EXPECT_EQ(a(), b());
}

TEST(Streams, NoCollisionsOverAMillionDerivations) {
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  const char* tags[] = {"xi1", "xi2", "aging", "scaling"};
  for (std::uint64_t i = 0; i < 250000; ++i)
    for (const char* t : tags) {
      Rng r = derive_stream(42, t, i);
      const auto hi = r(), lo = r();
      EXPECT_TRUE(seen.insert({hi, lo}).second);
    }
  EXPECT_EQ(seen.size(), 1000000u);
}

TEST(Harness, UnknownExperimentRejected) {
  EXPECT_FALSE(is_experiment("frobnicate"));
  EXPECT_THROW(validate_experiment("frobnicate", small()), std::invalid_argument);
  for (const auto& n : experiment_names()) EXPECT_TRUE(is_experiment(n));
}

TEST(Harness, EhrenfestCheckPasses) {
  const auto r = run_experiment("ehrenfest-check", small(), 1);
  EXPECT_TRUE(r.pass());
}

TEST(Harness, MalformedConfigLeavesNoOutput) {
  auto c = small();
  c.set("aging-curve", "tws", "0.01,0.1");
  const auto out = scratch("malformed");
  RunOptions opt;
  opt.outDir = out.string();
  EXPECT_THROW(run(c, {"ehrenfest-check", "aging-curve"}, opt), std::invalid_argument);
  EXPECT_FALSE(fs::exists(out));
  auto d = small();
  d.set("pi-check", "lambdas", "-1");
  EXPECT_THROW(run(d, {"pi-check"}, opt), std::invalid_argument);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Harness, RerunsAreByteIdentical) {
  const auto c = small();
  const auto a = scratch("rerun_a"), b = scratch("rerun_b");
  RunOptions oa, ob;
  oa.outDir = a.string();
  ob.outDir = b.string();
  const auto ma = run(c, {"ehrenfest-check", "pi-check", "aging-curve"}, oa);
  const auto mb = run(c, {"ehrenfest-check", "pi-check", "aging-curve"}, ob);
  ASSERT_EQ(ma.files, mb.files);
  for (const auto& f : ma.files) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(manifest["experiments"].size(), 3u);
  EXPECT_TRUE(manifest.contains("config_hash"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Harness, WorkerCountInvariance) {
  const auto c = small();
  std::vector<std::string> csv;
  for (int w : {1, 4, 16}) {
    const auto out = scratch("workers_" + std::to_string(w));
    RunOptions opt;
    opt.outDir = out.string();
    opt.workers = w;
    run(c, {"aging-curve", "clock-scaling"}, opt);
    csv.push_back(slurp(out / "aging-curve.aging.csv") + slurp(out / "clock-scaling.clock_scaling.csv"));
    fs::remove_all(out);
  }
  EXPECT_EQ(csv[0], csv[1]);
  EXPECT_EQ(csv[0], csv[2]);
}

TEST(Harness, SeedOverride) {
  const auto c = small();
  RunOptions opt;
  EXPECT_EQ(resolve_seed(c, opt), 7u);
  opt.seed = 99;
  EXPECT_EQ(resolve_seed(c, opt), 99u);
}

TEST(Harness, JsonFormat) {
  const auto j = nlohmann::json::parse(csv_to_json("# schema=1\na,b\n1,x\n2.5,y\n"));
  ASSERT_EQ(j["rows"].size(), 2u);
  EXPECT_EQ(j["rows"][1]["a"], 2.5);
  EXPECT_EQ(j["rows"][0]["b"], "x");
  const auto out = scratch("json");
  RunOptions opt;
  opt.outDir = out.string();
  opt.format = "json";
  const auto m = run(small(), {"pi-check"}, opt);
  EXPECT_TRUE(fs::exists(out / "pi-check.pi.json"));
  opt.format = "xml";
  EXPECT_THROW(run(small(), {"pi-check"}, opt), std::invalid_argument);
  fs::remove_all(out);
}
