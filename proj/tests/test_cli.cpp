#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "schtau/experiment.hpp"

using namespace schtau;
using Catch::Approx;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SCHTAU_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("seed ranges parse inclusively") {
  const auto r = cli::parse_seed_range("1..100");
  REQUIRE(r.lo == 1);
  REQUIRE(r.hi == 100);
  REQUIRE(r.count() == 100);
  const auto single = cli::parse_seed_range("5");
  REQUIRE(single.lo == 5);
  REQUIRE(single.hi == 5);
  REQUIRE_THROWS_AS(cli::parse_seed_range("7..3"), cli::ValidationError);
  REQUIRE_THROWS_AS(cli::parse_seed_range("abc"), cli::ValidationError);
}

TEST_CASE("flags override config-file values") {
  const std::string conf = "/tmp/schtau_test_conf1.cfg";
  write_file(conf, "# comment line\ntau = 1\nwindow = -7 7  # trailing comment\n");
  const auto cfg = cli::parse_config(
      {"schtau-simulate", "--config", conf, "--tau", "2", "--seeds", "3..9"});
  REQUIRE(cfg.tau == 2.0);
  REQUIRE(cfg.window_lo == -7.0);
  REQUIRE(cfg.window_hi == 7.0);
  REQUIRE(cfg.seeds.lo == 3);
  REQUIRE(cfg.seeds.hi == 9);
}

TEST_CASE("unknown config keys are reported by name") {
  const std::string conf = "/tmp/schtau_test_conf2.cfg";
  write_file(conf, "tau = 1\nbogus-key = 3\n");
  try {
    cli::parse_config({"schtau-simulate", "--config", conf, "--window", "-1", "1"});
    FAIL("expected a parse error");
  } catch (const CLI::ParseError& e) {
    REQUIRE(std::string(e.what()).find("bogus-key") != std::string::npos);
  }
}

TEST_CASE("missing required window names the field") {
  try {
    cli::parse_config({"schtau-simulate", "--tau", "1"});
    FAIL("expected a validation error");
  } catch (const cli::ValidationError& e) {
    REQUIRE(std::string(e.what()).find("window") != std::string::npos);
  }
}

TEST_CASE("E and E-rule are mutually exclusive") {
  REQUIRE_THROWS_AS(
      cli::parse_config({"anderson-spectrum", "--L", "10", "--E", "10", "--E-rule",
                         "L/tau", "--window", "-1", "1"}),
      cli::ValidationError);
  const auto cfg = cli::parse_config(
      {"anderson-spectrum", "--L", "10", "--E-rule", "L/tau", "--tau", "2",
       "--window", "-1", "1"});
  REQUIRE(cfg.resolved_E() == Approx(5.0));
  const auto top = cli::parse_config({"top-regime", "--L", "10"});
  REQUIRE(top.resolved_E() == Approx(100.0));
}

TEST_CASE("emitted configs re-parse to an equal config") {
  const auto cfg = cli::parse_config({"compare-critical", "--L", "25", "--tau", "1",
                                      "--E-rule", "L/tau", "--window", "-12", "12",
                                      "--seeds", "1..200", "--n-steps", "5000"});
  const std::string conf = "/tmp/schtau_test_conf3.cfg";
  write_file(conf, cli::emit_config(cfg));
  const auto again = cli::parse_config({"compare-critical", "--config", conf});
  REQUIRE(again.tau == cfg.tau);
  REQUIRE(again.L == cfg.L);
  REQUIRE(again.e_rule == cfg.e_rule);
  REQUIRE(again.window_lo == cfg.window_lo);
  REQUIRE(again.window_hi == cfg.window_hi);
  REQUIRE(again.n_steps == cfg.n_steps);
  REQUIRE(again.seeds.lo == cfg.seeds.lo);
  REQUIRE(again.seeds.hi == cfg.seeds.hi);
  REQUIRE(again.format == cfg.format);
  REQUIRE(again.grid_points == cfg.grid_points);
}

TEST_CASE("cli: exit codes and deterministic output") {
  REQUIRE(run_cli("--definitely-not-a-flag") == 2);
  REQUIRE(run_cli("schtau-simulate --tau 1") == 2);           // missing window
  REQUIRE(run_cli("schtau-simulate --window -7 7 --output /nonexistent-dir/x.csv "
                  "--n-steps 100 --tau 0") == 1);             // unwritable path

  const std::string out = "/tmp/schtau_test_sim.csv";
  const std::string args = "schtau-simulate --tau 0 --window -7 7 --seeds 1..1 "
                           "--n-steps 2000 --output " + out;
  REQUIRE(run_cli(args) == 0);
  const std::string first = slurp(out);
  REQUIRE(run_cli(args) == 0);
  REQUIRE(slurp(out) == first);  // byte-for-byte deterministic

  // picket fence rows
  std::istringstream in(first);
  std::string line;
  std::vector<double> lambdas;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      REQUIRE(line == "seed,k,lambda");
      saw_header = true;
      continue;
    }
    const auto p = line.rfind(',');
    lambdas.push_back(std::stod(line.substr(p + 1)));
  }
  REQUIRE(lambdas.size() == 3);
  REQUIRE(lambdas[0] == Approx(-2.0 * M_PI).margin(1e-8));
  REQUIRE(lambdas[1] == Approx(0.0).margin(1e-8));
  REQUIRE(lambdas[2] == Approx(2.0 * M_PI).margin(1e-8));
}

TEST_CASE("cli: json output mirrors the csv schema") {
  const std::string out = "/tmp/schtau_test_sim.json";
  REQUIRE(run_cli("schtau-simulate --tau 0 --window -7 7 --seeds 1..2 --n-steps 500 "
                  "--format json --output " + out) == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  REQUIRE(j["metadata"]["command"] == "schtau-simulate");
  REQUIRE(j["metadata"]["tau"] == "0");
  REQUIRE(j["columns"] == nlohmann::json({"seed", "k", "lambda"}));
  REQUIRE(j["rows"].size() == 6);
}

TEST_CASE("cli: anderson spectrum emits (seed, mu, lambda) with metadata") {
  const std::string out = "/tmp/schtau_test_and.csv";
  REQUIRE(run_cli("anderson-spectrum --L 10 --E-rule L/tau --tau 1 --window -6 6 "
                  "--seeds 1..3 --output " + out) == 0);
  const std::string text = slurp(out);
  REQUIRE(text.find("# ell_E = ") != std::string::npos);
  REQUIRE(text.find("# E_prime = ") != std::string::npos);
  REQUIRE(text.find("seed,mu,lambda") != std::string::npos);
}

TEST_CASE("cli: remaining commands produce well-formed outputs") {
  const std::string dir = "/tmp/schtau_test_cmds";
  std::system(("mkdir -p " + dir).c_str());
  REQUIRE(run_cli("schtau-intensity --tau 1 --window -6.3 6.3 --grid-points 64 "
                  "--output " + dir + "/int.csv") == 0);
  REQUIRE(slurp(dir + "/int.csv").find("# truncation_N = ") != std::string::npos);

  REQUIRE(run_cli("shape-sample --tau 1 --winding 1 --seeds 1..4 --n-steps 400 "
                  "--output " + dir + "/shape.csv") == 0);
  REQUIRE(slurp(dir + "/shape.csv").find("seed,U,beta_end,l2_norm,center_hat,decay_hat") !=
          std::string::npos);

  REQUIRE(run_cli("compare-critical --L 8 --E-rule L/tau --tau 1 --window -10 10 "
                  "--seeds 1..12 --n-steps 2000 --output " + dir + "/cmp.csv") == 0);
  const std::string cmp = slurp(dir + "/cmp.csv");
  REQUIRE(cmp.find("# ks_distance = ") != std::string::npos);
  REQUIRE(cmp.find("anderson,") != std::string::npos);
  REQUIRE(cmp.find("schtau,") != std::string::npos);

  REQUIRE(run_cli("anderson-shape --L 8 --E-rule L/tau --tau 1 --window -10 10 "
                  "--seeds 1..10 --output " + dir + "/ash.csv") == 0);
  const std::string ash = slurp(dir + "/ash.csv");
  REQUIRE(ash.find("seed,mu,lambda,center") != std::string::npos);
  REQUIRE(ash.find("# decay_rate_hat = ") != std::string::npos);

  REQUIRE(run_cli("top-regime --L 6 --seeds 1..2 --output " + dir + "/top.csv") == 0);
  REQUIRE(slurp(dir + "/top.csv").find("# max_deviation = ") != std::string::npos);

  REQUIRE(run_cli("norm-demo --tau 1 --E-prime 200 --seeds 1..2 --n-steps 4000 "
                  "--output " + dir + "/nd.csv") == 0);
  REQUIRE(slurp(dir + "/nd.csv").find("# g_norm_sq = ") != std::string::npos);
}

TEST_CASE("cli: seed offset environment variable shifts the ensemble") {
  const std::string out_a = "/tmp/schtau_test_off_a.csv";
  const std::string out_b = "/tmp/schtau_test_off_b.csv";
  const std::string out_c = "/tmp/schtau_test_off_c.csv";
  REQUIRE(run_cli("schtau-simulate --tau 1 --window -3 3 --seeds 2..2 --n-steps 500 "
                  "--output " + out_a) == 0);
  const std::string base = std::string(SCHTAU_CLI_PATH) +
                           " schtau-simulate --tau 1 --window -3 3 --seeds 1..1 "
                           "--n-steps 500 --output " + out_b;
  REQUIRE(WEXITSTATUS(std::system(("SCHTAU_SEED_OFFSET=1 " + base + " >/dev/null 2>&1").c_str())) == 0);
  REQUIRE(WEXITSTATUS(std::system(("SCHTAU_SEED_OFFSET=7 " + std::string(SCHTAU_CLI_PATH) +
                                   " schtau-simulate --tau 1 --window -3 3 --seeds 1..1 --n-steps 500 --output " +
                                   out_c + " >/dev/null 2>&1").c_str())) == 0);
  auto rows_of = [](const std::string& text) {
    std::istringstream in(text);
    std::string line, rows;
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#' && line.find("seed") == std::string::npos)
        rows += line.substr(line.find(',')) + "\n";
    return rows;
  };
  // offset 1 with seeds 1..1 draws the same noise as seeds 2..2
  REQUIRE(rows_of(slurp(out_b)) == rows_of(slurp(out_a)));
  REQUIRE(rows_of(slurp(out_c)) != rows_of(slurp(out_a)));
}
