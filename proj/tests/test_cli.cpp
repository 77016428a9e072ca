#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sys/wait.h>

#include "cli.hpp"
#include "test_support.hpp"

using namespace jacobound;
using namespace jacobound::testing;
using cli::RunConfig;

namespace {

RunConfig config(std::string command, std::string model, std::string center) {
  RunConfig cfg;
  cfg.command = std::move(command);
  cfg.model = fixture(model);
  if (!center.empty()) cfg.center = fixture(center);
  return cfg;
}

Json parse(const cli::Report& r) {
  EXPECT_EQ(r.exit_code, cli::ok) << r.text;
  return Json::parse(r.text);
}

struct Process {
  int status = -1;
  std::string out;
};

Process run_binary(const std::string& args) {
  Process p;
  const std::string cmd = std::string(JACOBOUND_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return p;
  std::array<char, 4096> buf{};
  for (std::size_t n; (n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0;) p.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  p.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return p;
}

}  // namespace

TEST(CliGrid, ParseAndValues) {
  const auto lin = cli::grid_values(cli::parse_grid("0,1,5"));
  ASSERT_EQ(lin.size(), 5u);
  EXPECT_DOUBLE_EQ(lin[2], 0.5);
  EXPECT_EQ(lin.back(), 1.0);
  const auto log = cli::grid_values(cli::parse_grid("0.01,1,3,log"));
  EXPECT_NEAR(log[1], 0.1, 1e-15);
  EXPECT_EQ(log.back(), 1.0);
  EXPECT_THROW(cli::parse_grid("1,0,3"), cli::ConfigError);
  EXPECT_THROW(cli::parse_grid("0,1,3,log"), cli::ConfigError);
  EXPECT_THROW(cli::parse_grid("a,b"), cli::ConfigError);
  EXPECT_THROW(cli::parse_grid("0,1,0"), cli::ConfigError);
}

TEST(CliFormat, NonFiniteValues) {
  EXPECT_EQ(cli::format_real(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(cli::json_real(-std::numeric_limits<double>::infinity()), Json("-inf"));
  EXPECT_EQ(cli::format_real(0.1), "0.10000000000000001");
}

TEST(CliLipschitz, OneLayerNet) {
  RunConfig cfg = config("lipschitz", "one_layer.json", "center_1d.json");
  cfg.radius = 0.3;
  cfg.methods = {"all"};
  cfg.samples = 20;
  const Json doc = parse(cli::run(cfg));
  EXPECT_EQ(doc["schema_version"], 1);
  const Json& v = doc["results"][0]["values"];
  for (auto m : {"sampled", "recurjac-b", "recurjac-f0", "recurjac-f1", "fastlip", "naive"})
    EXPECT_DOUBLE_EQ(v[m].get<double>(), 2.0) << m;
}

TEST(CliLipschitz, GridIsMonotoneAndOrdered) {
  RunConfig cfg = config("lipschitz", "trained_mlp.json", "");
  cfg.inputs = fixture("trained_inputs.json");
  cfg.indices = {0, 4};
  cfg.grid = cli::parse_grid("0.01,3,10,log");
  cfg.methods = {"all"};
  cfg.samples = 100;
  const Json doc = parse(cli::run(cfg));
  ASSERT_EQ(doc["results"].size(), 20u);
  double prev = 0.0, naive = -1.0;
  for (std::size_t i = 0; i < doc["results"].size(); ++i) {
    const Json& v = doc["results"][i]["values"];
    if (i == 10) prev = 0.0;
    const double rj = v["recurjac-b"].get<double>();
    EXPECT_GE(rj, prev);
    prev = rj;
    EXPECT_LE(v["sampled"].get<double>(), rj + 1e-9);
    EXPECT_LE(rj, v["fastlip"].get<double>() * (1 + 1e-12));
    EXPECT_LE(v["fastlip"].get<double>(), v["naive"].get<double>() * (1 + 1e-12));
    if (naive >= 0) EXPECT_EQ(v["naive"].get<double>(), naive);
    naive = v["naive"].get<double>();
  }
}

TEST(CliLipschitz, CsvOutput) {
  RunConfig cfg = config("lipschitz", "one_layer.json", "center_1d.json");
  cfg.grid = cli::parse_grid("0,1,2");
  cfg.methods = {"naive"};
  cfg.format = "csv";
  const auto r = cli::run(cfg);
  EXPECT_EQ(r.exit_code, cli::ok);
  EXPECT_EQ(r.text, "input,radius,naive\n0,0,2\n0,1,2\n");
}

TEST(CliJacobian, BoundsAndLevels) {
  RunConfig cfg = config("jacobian", "leaky_two_layer.json", "center_2d.json");
  cfg.radius = 0.5;
  cfg.all_levels = true;
  const Json doc = parse(cli::run(cfg));
  const Json& item = doc["results"][0];
  EXPECT_EQ(item["levels"].size(), 2u);
  EXPECT_EQ(item["direction"], "backward");
  const Network net = load_network(fixture("leaky_two_layer.json"));
  const BoundPair bp =
      recurjac_backward(net, IntervalPropagation{}(net, Ball{Vector::Zero(2), 0.5, Norm::linf})).jacobian();
  for (Index k = 0; k < 2; ++k) {
    EXPECT_DOUBLE_EQ(item["lower"][0][k].get<double>(), bp.lower(0, k));
    EXPECT_DOUBLE_EQ(item["upper"][0][k].get<double>(), bp.upper(0, k));
  }
}

TEST(CliCertify, TwoClassRunnerUpEqualsUntargeted) {
  std::mt19937_64 rng(1);
  const std::string model = ::testing::TempDir() + "/two_class.json";
  const Network net = random_net(rng, {2, 6, 2}, Activation::relu());
  save_model(model, net);
  RunConfig cfg;
  cfg.command = "certify";
  cfg.model = model;
  cfg.center = fixture("center_2d.json");
  cfg.radius = 5.0;
  cfg.target_modes = {"runner-up", "untargeted"};
  const Json doc = parse(cli::run(cfg));
  const Json& modes = doc["results"][0]["modes"];
  EXPECT_EQ(modes["runner-up"]["radius"], modes["untargeted"]["radius"]);
  EXPECT_GT(modes["runner-up"]["radius"].get<double>(), 0.0);
}

TEST(CliCertify, TrainedFixture) {
  RunConfig cfg = config("certify", "trained_mlp.json", "");
  cfg.inputs = fixture("trained_inputs.json");
  cfg.indices = {0, 1, 2};
  cfg.radius = 5.0;
  cfg.intervals = 5;
  cfg.target_modes = {"untargeted", "runner-up", "random", "least-likely"};
  const Json doc = parse(cli::run(cfg));
  ASSERT_EQ(doc["results"].size(), 3u);
  for (const auto& item : doc["results"]) {
    ASSERT_FALSE(item["skipped"].get<bool>());
    const double all = item["modes"]["untargeted"]["radius"].get<double>();
    EXPECT_GT(all, 0.0);
    for (auto mode : {"runner-up", "random", "least-likely"})
      EXPECT_LE(all, item["modes"][mode]["radius"].get<double>()) << mode;
  }
  EXPECT_TRUE(doc["mean_radius"]["runner-up"].is_number());
}

TEST(CliCertify, MisclassifiedIsSkippedOrRefused) {
  const std::string dir = ::testing::TempDir();
  const std::string inputs = dir + "/mislabeled.json";
  {
    std::ofstream f(inputs);
    f << R"([{"x": [0.5], "label": 0}])";
  }
  // Class 1 wins at x = 0.5.
  const std::string model = dir + "/two_out.json";
  save_model(model, Network({Layer{(Matrix(2, 1) << 1.0, 2.0).finished(), Vector::Zero(2), std::nullopt}}));
  RunConfig cfg;
  cfg.command = "certify";
  cfg.model = model;
  cfg.inputs = inputs;
  cfg.radius = 1.0;
  const auto soft = cli::run(cfg);
  ASSERT_EQ(soft.exit_code, cli::ok) << soft.text;
  EXPECT_TRUE(Json::parse(soft.text)["results"][0]["skipped"].get<bool>());
  cfg.strict = true;
  EXPECT_EQ(cli::run(cfg).exit_code, cli::refused);
}

TEST(CliLandscape, NoStationaryIsInfinite) {
  RunConfig cfg = config("landscape", "no_stationary.json", "center_1d.json");
  cfg.radius = 10.0;
  const Json doc = parse(cli::run(cfg));
  EXPECT_EQ(doc["results"][0]["radius"], "inf");
  EXPECT_EQ(doc["results"][0]["witness"], 0);
  EXPECT_EQ(doc["results"][0]["sign"], "positive");
}

TEST(CliOracle, EnumerationAndCap) {
  RunConfig cfg = config("oracle", "leaky_two_layer.json", "center_2d.json");
  cfg.radius = 1.0;
  cfg.samples = 50;
  Json doc = parse(cli::run(cfg));
  EXPECT_TRUE(doc["results"][0]["enumeration"].contains("patterns"));
  cfg.cap = 0;
  doc = parse(cli::run(cfg));
  EXPECT_TRUE(doc["results"][0]["enumeration"].contains("error"));
}

TEST(CliErrors, ExitCodes) {
  RunConfig cfg = config("lipschitz", "one_layer.json", "center_1d.json");
  cfg.radius = 1.0;
  cfg.p = "3";
  EXPECT_EQ(cli::run(cfg).exit_code, cli::config_error);
  cfg.p = "inf";
  cfg.methods = {"crown"};
  EXPECT_EQ(cli::run(cfg).exit_code, cli::config_error);
  cfg.methods = {};
  cfg.radius.reset();
  EXPECT_EQ(cli::run(cfg).exit_code, cli::config_error);
  cfg.radius = 1.0;
  cfg.model = fixture("mismatch.json");
  EXPECT_EQ(cli::run(cfg).exit_code, cli::model_error);
  cfg.model = fixture("unknown_activation.json");
  EXPECT_EQ(cli::run(cfg).exit_code, cli::model_error);
  cfg.model = fixture("one_layer.json");
  cfg.center = fixture("center_2d.json");
  EXPECT_EQ(cli::run(cfg).exit_code, cli::model_error);
  cfg.command = "bogus";
  EXPECT_EQ(cli::run(cfg).exit_code, cli::config_error);
}

TEST(CliBinary, DeterministicAndExitCodes) {
  const std::string model = " --model " + fixture("trained_mlp.json");
  const std::string args = "lipschitz" + model + " --inputs " + fixture("trained_inputs.json") +
                           " --index 0,1 --radius-grid 0.01,1,4,log --method all --samples 50 --seed 3 --threads 2";
  const Process a = run_binary(args), b = run_binary(args);
  EXPECT_EQ(a.status, 0);
  EXPECT_FALSE(a.out.empty());
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(Json::parse(a.out)["schema_version"], 1);

  EXPECT_EQ(run_binary("lipschitz" + model).status, 2);
  EXPECT_EQ(run_binary("lipschitz --model " + fixture("mismatch.json") + " --center " + fixture("center_2d.json") +
                       " --radius 1")
                .status,
            3);
  EXPECT_EQ(run_binary("frobnicate").status, 2);
}
