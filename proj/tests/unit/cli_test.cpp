//
// Copyright 2026 The heatchain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//


#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "config.hpp"

namespace heatchain::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("heatchain_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return RunCli(args, out_, err_);
  }
  std::string Path(const std::string& name) const { return (dir_ / name).string(); }
  static std::string Slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  }
  void WriteFile(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST(Config, ParsesChainFromText) {
  std::istringstream in(
      "# chain\n"
      "n_cells=5\nparticles = 1000\nt_left=1.0\nt_right=2.0\n"
      "rate_fn=sqrt_product\nrate_cap=50\nseed=42\n");
  Config c;
  c.LoadText(in);
  c.ApplyDefaults({});
  const ChainConfig cfg = c.Chain();
  EXPECT_EQ(cfg.n_cells, 5);
  EXPECT_EQ(cfg.particles_per_cell, 1000);
  EXPECT_EQ(cfg.t_left, 1.0);
  EXPECT_EQ(cfg.t_right, 2.0);
  EXPECT_EQ(cfg.rate_fn, RateFunctionSpec::SqrtProduct());
  EXPECT_EQ(cfg.rate_cap, 50.0);
  EXPECT_EQ(cfg.master_seed, 42u);
}

TEST(Config, Errors) {
  auto load = [](const std::string& text) {
    std::istringstream in(text);
    Config c;
    c.LoadText(in);
    c.ApplyDefaults({});
    return c;
  };
  try {
    load("n_cells=3\nfoo=1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'foo'"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(load("n_cells=3\nn_cells=4\n"), ConfigError);
  EXPECT_THROW(load("just words\n"), ConfigError);
  try {
    load("t_left=0\n").Chain();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("t_left"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
  try {
    load("n_cells=three\n").Chain();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("n_cells"), std::string::npos);
  }
  const Config c = load("");
  try {
    c.Raw("state");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("state"), std::string::npos);
  }
}

TEST(Config, ListsAndAutoValues) {
  std::istringstream in("m_list=100, 1000;10000\ne0=1 2 3\nrate_cap=auto\nt_right=4\n");
  Config c;
  c.LoadText(in);
  c.ApplyDefaults({});
  EXPECT_EQ(c.GetIntList("m_list"), (std::vector<int>{100, 1000, 10000}));
  EXPECT_EQ(c.State("e0", 3)->vector(), (std::vector<double>{1, 2, 3}));
  EXPECT_THROW(c.State("e0", 2), ConfigError);
  EXPECT_DOUBLE_EQ(c.Chain().rate_cap, 200.0);
}

TEST_F(CliTest, FlagOverridesFile) {
  WriteFile("run.cfg", "particles=1000\nn_cells=2\nt_end=0.01\n");
  ASSERT_EQ(Run({"simulate", "--config", Path("run.cfg"), "--particles=2000", "--out", Path("o")}),
            kExitOk)
      << err_.str();
  const std::string manifest = Slurp(dir_ / "o" / kManifestName);
  EXPECT_NE(manifest.find("\nparticles=2000\n"), std::string::npos) << manifest;
  EXPECT_NE(manifest.find("\nn_cells=2\n"), std::string::npos);
}

TEST_F(CliTest, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(Run({"frobnicate"}), kExitUsage);
  EXPECT_NE(err_.str().find("unknown subcommand"), std::string::npos);
  EXPECT_NE(err_.str().find("verify-ness"), std::string::npos);
  EXPECT_EQ(Run({}), kExitUsage);
}

TEST_F(CliTest, ConfigErrorsExitWithUsageCode) {
  WriteFile("bad.cfg", "n_cells=3\nbogus_key=1\n");
  EXPECT_EQ(Run({"equilibrium", "--config", Path("bad.cfg"), "--out", Path("o")}), kExitUsage);
  EXPECT_NE(err_.str().find("bogus_key"), std::string::npos);
  EXPECT_NE(err_.str().find("line 2"), std::string::npos);
  EXPECT_EQ(Run({"equilibrium", "--t_left=0", "--out", Path("o")}), kExitUsage);
  EXPECT_NE(err_.str().find("t_left"), std::string::npos);
  EXPECT_EQ(Run({"moments", "--out", Path("o")}), kExitUsage);
  EXPECT_NE(err_.str().find("state"), std::string::npos);
}

TEST_F(CliTest, HelpListsEveryKeyWithDefault) {
  for (const std::string& name : SubcommandNames()) {
    ASSERT_EQ(Run({name, "--help"}), kExitOk) << name;
    const std::string help = out_.str();
    std::istringstream lines(help);
    std::string line;
    int keys = 0;
    while (std::getline(lines, line)) {
      const auto pos = line.find("--");
      if (pos == std::string::npos) continue;
      const std::string flag = line.substr(pos + 2, line.find_first_of(" =", pos) - pos - 2);
      if (flag == "help" || flag == "config" || flag == "out") continue;
      if (FindKey(flag) == nullptr) continue;
      ++keys;
      EXPECT_NE(help.find("[default: ", pos), std::string::npos) << name << " --" << flag;
    }
    EXPECT_GT(keys, 0) << name;
  }
}

TEST_F(CliTest, EquilibriumConstantRate) {
  ASSERT_EQ(Run({"equilibrium", "--rate_fn=constant:1", "--n_cells=3", "--t_left=1",
                 "--t_right=2", "--tol=1e-13", "--out", Path("eq")}),
            kExitOk)
      << err_.str();
  std::ifstream f(dir_ / "eq" / "equilibrium.csv");
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "i,E_star");
  const double expected[] = {1.25, 1.5, 1.75};
  for (int i = 0; i < 3; ++i) {
    std::string row;
    ASSERT_TRUE(std::getline(f, row));
    const auto comma = row.find(',');
    EXPECT_EQ(std::stoi(row.substr(0, comma)), i + 1);
    EXPECT_NEAR(std::stod(row.substr(comma + 1)), expected[i], 1e-10);
  }
  std::ifstream k(dir_ / "eq" / "kappa.csv");
  std::getline(k, header);
  std::string row;
  std::getline(k, row);
  EXPECT_NEAR(std::stod(row.substr(0, row.find(','))), 0.5, 1e-10);
}

TEST_F(CliTest, MomentsSigmaIsTridiagonal) {
  ASSERT_EQ(Run({"moments", "--n_cells=3", "--state=1,1,1", "--out", Path("m")}), kExitOk)
      << err_.str();
  std::ifstream f(dir_ / "m" / "sigma.csv");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "i,j,value");
  int rows = 0;
  while (std::getline(f, line)) {
    int i = 0, j = 0;
    double v = 0;
    char c1 = 0, c2 = 0;
    std::istringstream(line) >> i >> c1 >> j >> c2 >> v;
    if (std::abs(i - j) > 1) EXPECT_EQ(v, 0.0) << line;
    if (std::abs(i - j) == 1) EXPECT_LT(v, 0.0) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 9);
}

TEST_F(CliTest, VerifyBetaPasses) {
  EXPECT_EQ(Run({"verify-beta", "--out", Path("b")}), kExitOk) << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "b" / "report.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "b" / "report.txt"));
}

TEST_F(CliTest, VerificationFailureGivesOneLineReason) {
  // Listing M in decreasing order makes the monotone-approach check fail.
  EXPECT_EQ(Run({"verify-beta", "--m_list=1000000,1000", "--out", Path("b")}),
            kExitVerificationFailed);
  const std::string e = err_.str();
  EXPECT_EQ(e.rfind("FAIL ", 0), 0u) << e;
  EXPECT_NE(e.find("check=ratio_approaches_1"), std::string::npos) << e;
  EXPECT_EQ(e.find('\n'), e.size() - 1);
  EXPECT_TRUE(fs::exists(dir_ / "b" / kManifestName));
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  const fs::path env_dir = dir_ / "env";
  setenv(kOutEnv, env_dir.c_str(), 1);
  const int status = Run({"ode", "--t_end=0.1"});
  unsetenv(kOutEnv);
  ASSERT_EQ(status, kExitOk) << err_.str();
  EXPECT_TRUE(fs::exists(env_dir / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(env_dir / kManifestName));
}

TEST_F(CliTest, ManifestReplayIsByteIdentical) {
  const std::vector<std::vector<std::string>> runs = {
      {"simulate", "--n_cells=3", "--particles=50", "--t_end=0.5", "--seed=9", "--plot=true"},
      {"sde-meso", "--n_paths=20", "--t_end=0.2", "--particles=100"},
      {"sde-clt", "--n_paths=50", "--t_end=0.2", "--dt=0.01"},
      {"moments", "--n_cells=2", "--state=1,1.5", "--n_samples=2000"},
  };
  for (std::size_t r = 0; r < runs.size(); ++r) {
    std::vector<std::string> first = runs[r];
    first.insert(first.end(), {"--out", Path("a" + std::to_string(r))});
    ASSERT_EQ(Run(first), kExitOk) << err_.str();
    const fs::path a = dir_ / ("a" + std::to_string(r));
    ASSERT_EQ(Run({runs[r][0], "--config", (a / kManifestName).string(), "--out",
                   Path("b" + std::to_string(r))}),
              kExitOk)
        << err_.str();
    const fs::path b = dir_ / ("b" + std::to_string(r));
    int manifests = 0;
    int csvs = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      const std::string name = entry.path().filename().string();
      if (name == kManifestName) ++manifests;
      if (entry.path().extension() != ".csv") continue;
      ++csvs;
      EXPECT_EQ(Slurp(entry.path()), Slurp(b / name)) << runs[r][0] << " " << name;
    }
    EXPECT_EQ(manifests, 1);
    EXPECT_GT(csvs, 0);
  }
}

}  // namespace
}  // namespace heatchain::cli
