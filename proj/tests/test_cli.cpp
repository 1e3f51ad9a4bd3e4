#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <qstrat/comb.hpp>
#include <qstrat/json_io.hpp>
#include <qstrat/sweep.hpp>

namespace qstrat {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(QSTRAT_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("qstrat_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Cli, DistanceJsonOutput) {
  const auto r = run("distance --a identity:2 --b gadc:1:0 --n 1 --json");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = parse_json(r.out);
  EXPECT_NEAR(number_from_json(j["value"]), 1.0, 1e-7);
  EXPECT_EQ(j["quantity"], "distance");
  EXPECT_EQ(j["mode"], "adaptive");
  EXPECT_EQ(j["solver"]["status"], "optimal");
}

TEST(Cli, DminOfIdenticalChannels) {
  const auto r = run("dmin --a gadc:0.2:0.3 --b gadc:0.2:0.3 --epsilon 0.05 --mode parallel --json");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(number_from_json(parse_json(r.out)["value"]), -std::log2(0.95), 1e-6);
}

TEST(Cli, BadInputsExitNonzero) {
  auto r = run("dmax --a gadc:1.5:0 --b identity:2");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("position 5"), std::string::npos) << r.out;
  EXPECT_NE(run("distance --a identity:2").code, 0);
  EXPECT_NE(run("distance --a identity:2 --b identity:2 --mode sideways").code, 0);
  EXPECT_NE(run("sweep").code, 0);
  EXPECT_NE(run("frobnicate").code, 0);
}

TEST(Cli, VerifyExitCodes) {
  const auto dir = scratch_dir("verify");
  const auto good = dir / "good.json";
  const auto bad = dir / "bad.json";
  std::ofstream(good) << dump_json(strategy_to_json(n_fold_sequential_choi(gadc_choi({0.3, 0.5}), 2)));
  auto half = identity_choi(2);
  half.op *= 0.5;
  std::ofstream(bad) << dump_json(strategy_to_json(half));
  const auto g = run("verify --comb " + good.string());
  EXPECT_EQ(g.code, 0) << g.out;
  EXPECT_NE(g.out.find("pass"), std::string::npos);
  const auto b = run("verify --comb " + bad.string());
  EXPECT_EQ(b.code, 1) << b.out;
  EXPECT_NE(b.out.find("fail"), std::string::npos);
  EXPECT_EQ(run("verify --comb " + (dir / "absent.json").string()).code, 1);
}

TEST(Cli, SweepResumeAndPlot) {
  const auto dir = scratch_dir("sweep");
  const auto config = dir / "config.json";
  const auto csv = dir / "grid.csv";
  std::ofstream(config) << R"({"channel_a": "gadc:0.2:0", "channel_b": "gadc:0.3:0", "n_values": [1, 2],
    "sweep_param": "noise", "grid": [0.1, 0.4, 0.7], "quantities": ["distance"],
    "modes": ["adaptive", "parallel"], "output_path": ")"
                        << csv.string() << "\"}";
  auto r = run("sweep --config " + config.string() + " --jobs 2 --quiet");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto first = slurp(csv);
  EXPECT_EQ(read_csv_file(csv.string()).size(), 12u);

  r = run("sweep --config " + config.string() + " --resume --quiet");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("0 cells evaluated"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(csv), first);

  const auto svg = dir / "gap.svg";
  r = run("plot --csv " + csv.string() + " --quantity distance --out " + svg.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto text = slurp(svg);
  EXPECT_EQ(text.rfind("<svg", 0), 0u);
  EXPECT_NE(text.find("n=2"), std::string::npos);

  r = run("plot --csv " + csv.string() + " --quantity dmin --out " + (dir / "none.svg").string());
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, PresetsParse) {
  for (const char* name : {"fig3", "fig4", "fig5"}) {
    const auto c = sweep_config_from_json(read_json_file(std::string(QSTRAT_PRESET_DIR) + "/" + name + ".json"));
    EXPECT_NO_THROW(c.validate()) << name;
    EXPECT_EQ(c.modes.size(), 2u);
  }
}

}  // namespace
}  // namespace qstrat
