#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + KNL_CLI_PATH + "\" " + args +
                          " > cli_scratch/stdout.log 2>&1";
  int rc = std::system(cmd.c_str());
#ifdef _WIN32
  return rc;
#else
  return WEXITSTATUS(rc);
#endif
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

void write_config(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

nlohmann::ordered_json desk_problem() {
  return {{"interior", {8, 8}},
          {"h", 1.0},
          {"n_opt", 4},
          {"sigma", {{"background", 1.0}}},
          {"sources", {{3.0, 4.0}}}};
}

struct Scratch {
  Scratch() { fs::create_directories("cli_scratch"); }
};
Scratch scratch_init;

}  // namespace

TEST_CASE("cli: selftest passes and the fault hook fails") {
  CHECK(run_cli("selftest") == 0);
  CHECK(run_cli("selftest --fault") != 0);
}

TEST_CASE("cli: convergence output shape and determinism") {
  nlohmann::ordered_json cfg = {
      {"problem", desk_problem()},
      {"m_max", 8},
      {"m_stride", 4},
      {"shifts", {{0.5, 0.0}, {0.1, 1.0}}},
      {"variants", {"gauss", "radau"}},
  };
  write_config("cli_scratch/conv.json", cfg);
  REQUIRE(run_cli("--config cli_scratch/conv.json --output cli_scratch/run1 "
                  "convergence") == 0);
  std::string text = slurp("cli_scratch/run1/convergence.csv");
  auto lines = lines_of(text);
  REQUIRE(lines.size() == 2 + 2 * 2 * 2);  // schema + header + rows
  CHECK(lines[0].rfind("# schema:", 0) == 0);
  CHECK(lines[1] ==
        "m,shift_re,shift_im,variant,rel_error_fro,phi_used,objective,"
        "wall_ms");
  for (size_t i = 2; i < lines.size(); ++i) {
    CHECK(lines[i].find("gauss") != std::string::npos ==
          (lines[i].find("radau") == std::string::npos));
    CHECK(lines[i].find("kn") == std::string::npos);
    // wall_ms column empty when timing is off
    CHECK(lines[i].back() == ',');
  }
  CHECK(text.find("\r") == std::string::npos);

  REQUIRE(run_cli("--config cli_scratch/conv.json --output cli_scratch/run2 "
                  "convergence") == 0);
  CHECK(slurp("cli_scratch/run2/convergence.csv") == text);
}

TEST_CASE("cli: degenerate sweep equals the matching convergence rows") {
  nlohmann::ordered_json base = {
      {"problem", desk_problem()},
      {"m_max", 8},
      {"m_stride", 8},
      {"shifts", {{0.5, 0.0}}},
      {"variants", {"gauss", "radau", "average"}},
  };
  write_config("cli_scratch/deg.json", base);
  REQUIRE(run_cli("--config cli_scratch/deg.json --output cli_scratch/deg_c "
                  "convergence") == 0);
  REQUIRE(run_cli("--config cli_scratch/deg.json --output cli_scratch/deg_s "
                  "sweep") == 0);
  auto conv = lines_of(slurp("cli_scratch/deg_c/convergence.csv"));
  auto sweep = lines_of(slurp("cli_scratch/deg_s/sweep.csv"));
  REQUIRE(conv.size() == sweep.size());
  for (size_t i = 2; i < conv.size(); ++i) CHECK(conv[i] == sweep[i]);
}

TEST_CASE("cli: kn rows carry the damper value") {
  nlohmann::ordered_json cfg = {
      {"problem", desk_problem()},
      {"m_max", 6},
      {"m_stride", 6},
      {"shifts", {{0.5, 0.0}}},
      {"variants", {"gauss", "kn"}},
      {"phi_policy", {{"fixed", 2.5}}},
  };
  write_config("cli_scratch/kn.json", cfg);
  REQUIRE(run_cli("--config cli_scratch/kn.json --output cli_scratch/kn "
                  "convergence") == 0);
  auto lines = lines_of(slurp("cli_scratch/kn/convergence.csv"));
  bool saw_kn = false;
  for (size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].find(",kn,") != std::string::npos) {
      saw_kn = true;
      CHECK(lines[i].find(",2.5,") != std::string::npos);
    } else {
      CHECK(lines[i].find(",gauss,") != std::string::npos);
      CHECK(lines[i].find(",2.5,") == std::string::npos);
    }
  }
  CHECK(saw_kn);
}

TEST_CASE("cli: optimize reports a warning below the contour threshold") {
  nlohmann::ordered_json cfg = {
      {"problem", desk_problem()},
      {"m_max", 8},
      {"m_stride", 4},
      {"phi_policy", {{"optimize", {{"every", 1}, {"average_window", 3}}}}},
  };
  write_config("cli_scratch/opt_small.json", cfg);
  REQUIRE(run_cli("--config cli_scratch/opt_small.json --output "
                  "cli_scratch/opt_small optimize") == 0);
  auto report = nlohmann::ordered_json::parse(
      slurp("cli_scratch/opt_small/optimize.json"));
  REQUIRE(report["checkpoints"].size() == 2);
  for (const auto& entry : report["checkpoints"]) {
    CHECK(entry.contains("warning"));
    CHECK_FALSE(entry.contains("phi"));
  }
}

TEST_CASE("cli: optimize emits a full checkpoint record above the threshold") {
  nlohmann::ordered_json cfg = {
      {"problem", desk_problem()},
      {"m_max", 24},
      {"m_stride", 24},
      {"contour_pts", 64},
      {"phi_policy", {{"optimize", {{"every", 1}, {"average_window", 5}}}}},
      {"optimize",
       {{"validation_shifts", {{0.5, 0.0}, {0.0, 0.2}}},
        {"grid_points", 12}}},
  };
  write_config("cli_scratch/opt.json", cfg);
  REQUIRE(run_cli("--config cli_scratch/opt.json --output cli_scratch/opt "
                  "optimize") == 0);
  auto report =
      nlohmann::ordered_json::parse(slurp("cli_scratch/opt/optimize.json"));
  REQUIRE(report["checkpoints"].size() == 1);
  const auto& entry = report["checkpoints"][0];
  CHECK(entry["m"] == 24);
  CHECK(entry["phi"].get<double>() > 0.0);
  CHECK(entry["averaged_phi"].get<double>() ==
        doctest::Approx(entry["phi"].get<double>()));
  CHECK(entry["objective"].get<double>() > 0.0);
  CHECK(entry["d"].get<double>() > 0.0);
  CHECK(entry["delta"].get<double>() > 0.0);
  CHECK(entry.contains("skipped_nodes"));
  CHECK(entry["cheated_phi"].get<double>() > 0.0);
}

TEST_CASE("cli: state snapshots and cross sections") {
  nlohmann::ordered_json cfg = {
      {"problem", desk_problem()},
      {"m_max", 10},
      {"variants", {"gauss", "radau", "kn"}},
      {"phi_policy", {{"fixed", 1.0}}},
      {"state",
       {{"omega", 0.3}, {"times", {0.0, 1.0}}}},
  };
  write_config("cli_scratch/state.json", cfg);
  REQUIRE(run_cli("--config cli_scratch/state.json --output cli_scratch/state "
                  "state") == 0);
  for (const std::string v : {"gauss", "radau", "kn"}) {
    for (int t : {0, 1})
      CHECK(fs::exists("cli_scratch/state/snapshot_" + v + "_" +
                       std::to_string(t) + ".csv"));
    CHECK(fs::exists("cli_scratch/state/cross_section_" + v + ".csv"));
  }
  // identical grid header across variants
  auto g = lines_of(slurp("cli_scratch/state/snapshot_gauss_0.csv"));
  auto k = lines_of(slurp("cli_scratch/state/snapshot_kn_0.csv"));
  REQUIRE(g.size() == k.size());
  CHECK(g[1] == k[1]);
  // snapshot grid: header + x row + ny rows; desk 8x8 with n_opt 4 -> 16x16
  CHECK(g.size() == 2 + 16);
}

TEST_CASE("cli: missing config is an error") {
  CHECK(run_cli("convergence") != 0);
  CHECK(run_cli("--config cli_scratch/does_not_exist.json convergence") != 0);
}
