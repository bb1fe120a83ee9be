#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "schtau/anderson.hpp"
#include "schtau/noise.hpp"
#include "schtau/parallel.hpp"
#include "schtau/spectrum.hpp"
#include "schtau/stats.hpp"
#include "schtau/version.hpp"

namespace schtau::cli {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SeedRange {
  long lo = 1;
  long hi = 1;
  long count() const { return hi - lo + 1; }
};

// "a..b" (inclusive) or a single integer.
inline SeedRange parse_seed_range(const std::string& text) {
  SeedRange r;
  const auto pos = text.find("..");
  try {
    if (pos == std::string::npos) {
      r.lo = r.hi = std::stol(text);
    } else {
      r.lo = std::stol(text.substr(0, pos));
      r.hi = std::stol(text.substr(pos + 2));
    }
  } catch (const std::exception&) {
    throw ValidationError("seeds: expected an integer or a range like 1..100, got '" + text + "'");
  }
  if (r.hi < r.lo) throw ValidationError("seeds: empty range '" + text + "'");
  return r;
}

enum class ERule { kNone, kLOverTau, kLSquared };
enum class Format { kCsv, kJson };

struct ExperimentConfig {
  std::string command;
  double tau = 1.0;
  double L = 0.0;
  double E = 0.0;  // 0 = not set
  ERule e_rule = ERule::kNone;
  bool has_window = false;
  double window_lo = 0.0, window_hi = 0.0;
  std::size_t n_steps = 10000;
  int N = 0;  // matrix size; 0 = derive from the mesh rule
  SeedRange seeds;
  std::string output;  // empty = <command>.<format>
  Format format = Format::kCsv;
  int jobs = parallel::default_jobs();
  int grid_points = 513;
  int winding = 0;
  double z_re = 0.0, z_im = 1.0;
  double E_prime = 1000.0;
  long seed_offset = 0;  // SCHTAU_SEED_OFFSET

  double resolved_E() const {
    switch (e_rule) {
      case ERule::kLOverTau:
        return L / tau;
      case ERule::kLSquared:
        return L * L;
      case ERule::kNone:
        return E;
    }
    return E;
  }
  std::string output_path() const {
    if (!output.empty()) return output;
    return command + (format == Format::kCsv ? ".csv" : ".json");
  }
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {
      "schtau-simulate", "schtau-intensity", "schtau-resolvent",
      "shape-sample",    "anderson-spectrum", "anderson-shape",
      "compare-critical", "top-regime",       "norm-demo"};
  return names;
}

// ---------------------------------------------------------------------------
// Parsing: flags override config-file values; the file is plain
// `key = value` lines with `#` comments, keys named like the long flags.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// One config line "key = v1 v2" becomes tokens {--key, v1, v2}.
inline std::vector<std::string> config_file_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config file not readable: " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config file: expected `key = value`, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError("config file: empty key in '" + line + "'");
    tokens.push_back("--" + key);
    std::istringstream vs(value);
    std::string piece;
    while (vs >> piece) tokens.push_back(piece);
  }
  return tokens;
}

inline void add_common_options(CLI::App* sub, ExperimentConfig& cfg,
                               std::string& seeds_text, std::string& format_text,
                               std::string& config_path) {
  sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  sub->add_option("--config", config_path, "config file with key = value lines");
  sub->add_option("--seeds", seeds_text, "seed range, e.g. 1..100");
  sub->add_option("--output", cfg.output, "output file path");
  sub->add_option("--format", format_text, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--jobs", cfg.jobs, "parallel workers")->check(CLI::PositiveNumber);
}

}  // namespace detail

// Parses argv (and an optional --config file; flags win). Throws
// CLI::ParseError for malformed flags and ValidationError for semantic
// problems; exit codes are assigned in main().
inline ExperimentConfig parse_config(const std::vector<std::string>& argv_tokens) {
  ExperimentConfig cfg;
  std::string seeds_text = "1..1";
  std::string format_text = "csv";
  std::string config_path;

  CLI::App app{"stochastic spectral simulations for the critical 1-d continuum Anderson regime"};
  app.require_subcommand(1);
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name, "");
    detail::add_common_options(sub, cfg, seeds_text, format_text, config_path);
    sub->add_option("--tau", cfg.tau, "noise strength tau");
    sub->add_option("--n-steps", cfg.n_steps, "integrator steps per unit time");
    sub->add_option("--window", [&cfg](const std::vector<std::string>& vals) {
          if (vals.size() != 2) return false;
          cfg.window_lo = std::stod(vals[0]);
          cfg.window_hi = std::stod(vals[1]);
          cfg.has_window = true;
          return true;
        },
        "spectral window: two reals a b")
        ->expected(2);
    sub->add_option("--L", cfg.L, "domain length");
    sub->add_option("--E", cfg.E, "energy level (exclusive with --E-rule)");
    sub->add_option("--E-rule", [&cfg](const std::vector<std::string>& vals) {
          if (vals.size() != 1) return false;
          if (vals[0] == "L/tau")
            cfg.e_rule = ERule::kLOverTau;
          else if (vals[0] == "L^2")
            cfg.e_rule = ERule::kLSquared;
          else
            return false;
          return true;
        },
        "energy rule: L/tau | L^2");
    sub->add_option("--N", cfg.N, "interior grid points (0 = mesh rule)");
    sub->add_option("--grid-points", cfg.grid_points, "evaluation grid size");
    sub->add_option("--winding", cfg.winding, "winding class n of the shape sampler");
    sub->add_option("--z-re", cfg.z_re, "Re z for resolvent commands");
    sub->add_option("--z-im", cfg.z_im, "Im z for resolvent commands");
    sub->add_option("--E-prime", cfg.E_prime, "rotation frequency E'");
    subs[name] = sub;
  }

  // first pass just to find the subcommand and any --config
  if (argv_tokens.empty()) throw ValidationError("missing command");
  const std::string command = argv_tokens.front();
  if (std::find(command_names().begin(), command_names().end(), command) ==
      command_names().end()) {
    if (command == "-h" || command == "--help") {
      throw CLI::CallForHelp();
    }
    throw ValidationError("unknown command '" + command + "'");
  }
  std::vector<std::string> cli_rest(argv_tokens.begin() + 1, argv_tokens.end());
  std::vector<std::string> file_tokens;
  for (std::size_t i = 0; i + 1 < cli_rest.size(); ++i) {
    if (cli_rest[i] == "--config") {
      file_tokens = detail::config_file_tokens(cli_rest[i + 1]);
      break;
    }
  }

  std::vector<std::string> tokens;
  tokens.push_back(command);
  tokens.insert(tokens.end(), file_tokens.begin(), file_tokens.end());
  tokens.insert(tokens.end(), cli_rest.begin(), cli_rest.end());
  std::reverse(tokens.begin(), tokens.end());  // CLI11 consumes from the back
  app.parse(tokens);

  cfg.command = command;
  cfg.seeds = parse_seed_range(seeds_text);
  cfg.format = format_text == "json" ? Format::kJson : Format::kCsv;
  if (const char* off = std::getenv("SCHTAU_SEED_OFFSET")) {
    try {
      cfg.seed_offset = std::stol(off);
    } catch (const std::exception&) {
      throw ValidationError("SCHTAU_SEED_OFFSET must be an integer");
    }
  }

  // semantic validation
  const bool needs_window =
      command == "schtau-simulate" || command == "schtau-intensity" ||
      command == "schtau-resolvent" || command == "anderson-spectrum" ||
      command == "anderson-shape" || command == "compare-critical";
  if (needs_window && !cfg.has_window)
    throw ValidationError(command + ": missing required field `window`");
  if (!cfg.has_window) {
    cfg.window_lo = -7.0;
    cfg.window_hi = 7.0;
  }
  if (cfg.has_window && !(cfg.window_lo < cfg.window_hi))
    throw ValidationError("window: requires lo < hi");
  if (!(cfg.tau >= 0.0)) throw ValidationError("tau: must be >= 0");
  if (cfg.n_steps == 0) throw ValidationError("n-steps: must be positive");

  const bool needs_L = command == "anderson-spectrum" || command == "anderson-shape" ||
                       command == "compare-critical" || command == "top-regime";
  if (needs_L) {
    if (!(cfg.L > 0.0)) throw ValidationError(command + ": missing required field `L`");
    if (cfg.E != 0.0 && cfg.e_rule != ERule::kNone)
      throw ValidationError("E and E-rule are mutually exclusive");
    if (command == "top-regime" && cfg.E == 0.0 && cfg.e_rule == ERule::kNone)
      cfg.e_rule = ERule::kLSquared;
    if (cfg.E == 0.0 && cfg.e_rule == ERule::kNone)
      throw ValidationError(command + ": set either `E` or `E-rule`");
    if (cfg.e_rule == ERule::kLOverTau && !(cfg.tau > 0.0))
      throw ValidationError("E-rule L/tau requires tau > 0");
    if (!(cfg.resolved_E() > 0.0)) throw ValidationError("E: must resolve to a positive energy");
  }
  if (command == "schtau-intensity" && !(cfg.tau > 0.0))
    throw ValidationError("schtau-intensity: tau must be > 0");
  if (cfg.grid_points < 2) throw ValidationError("grid-points: must be >= 2");
  return cfg;
}

// Round-trip companion of parse_config: a config file that reproduces cfg.
inline std::string emit_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "# schtau " << kVersion << " experiment config\n";
  out << "tau = " << num(cfg.tau) << "\n";
  if (cfg.L > 0.0) out << "L = " << num(cfg.L) << "\n";
  if (cfg.e_rule == ERule::kLOverTau) out << "E-rule = L/tau\n";
  if (cfg.e_rule == ERule::kLSquared) out << "E-rule = L^2\n";
  if (cfg.E != 0.0) out << "E = " << num(cfg.E) << "\n";
  if (cfg.has_window)
    out << "window = " << num(cfg.window_lo) << " " << num(cfg.window_hi) << "\n";
  out << "n-steps = " << cfg.n_steps << "\n";
  if (cfg.N != 0) out << "N = " << cfg.N << "\n";
  out << "seeds = " << cfg.seeds.lo << ".." << cfg.seeds.hi << "\n";
  if (!cfg.output.empty()) out << "output = " << cfg.output << "\n";
  out << "format = " << (cfg.format == Format::kJson ? "json" : "csv") << "\n";
  out << "grid-points = " << cfg.grid_points << "\n";
  out << "winding = " << cfg.winding << "\n";
  out << "z-re = " << num(cfg.z_re) << "\n";
  out << "z-im = " << num(cfg.z_im) << "\n";
  out << "E-prime = " << num(cfg.E_prime) << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Output writing.
// ---------------------------------------------------------------------------

namespace detail {

using MetaList = std::vector<std::pair<std::string, std::string>>;

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}
inline std::string fmt(long v) { return std::to_string(v); }

struct Table {
  MetaList meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline void write_table(const ExperimentConfig& cfg, const Table& table) {
  std::ofstream out(cfg.output_path(), std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + cfg.output_path());
  if (cfg.format == Format::kCsv) {
    for (const auto& [k, v] : table.meta) out << "# " << k << " = " << v << "\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c)
      out << table.columns[c] << (c + 1 < table.columns.size() ? "," : "");
    out << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c)
        out << row[c] << (c + 1 < row.size() ? "," : "");
      out << "\n";
    }
  } else {
    nlohmann::ordered_json j;
    nlohmann::ordered_json meta;
    for (const auto& [k, v] : table.meta) meta[k] = v;
    j["metadata"] = meta;
    j["columns"] = table.columns;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) rows.push_back(row);
    j["rows"] = std::move(rows);
    out << j.dump(2) << "\n";
  }
  if (!out) throw std::runtime_error("failed writing output file: " + cfg.output_path());
}

inline MetaList base_metadata(const ExperimentConfig& cfg) {
  MetaList m;
  m.emplace_back("version", kVersion);
  m.emplace_back("rng", kRngName);
  m.emplace_back("normal_sampling", kNormalMethod);
  m.emplace_back("command", cfg.command);
  m.emplace_back("tau", fmt(cfg.tau));
  m.emplace_back("n_steps", std::to_string(cfg.n_steps));
  m.emplace_back("seeds", std::to_string(cfg.seeds.lo) + ".." + std::to_string(cfg.seeds.hi));
  m.emplace_back("seed_offset", std::to_string(cfg.seed_offset));
  const bool uses_window =
      cfg.command != "shape-sample" && cfg.command != "norm-demo";
  if (uses_window)
    m.emplace_back("window", fmt(cfg.window_lo) + " " + fmt(cfg.window_hi));
  return m;
}

inline std::uint64_t seed_at(const ExperimentConfig& cfg, long i) {
  return static_cast<std::uint64_t>(cfg.seeds.lo + i + cfg.seed_offset);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Command implementations.
// ---------------------------------------------------------------------------

namespace detail {

inline void run_schtau_simulate(const ExperimentConfig& cfg, Table& t) {
  const long n = cfg.seeds.count();
  std::vector<std::vector<double>> found(static_cast<std::size_t>(n));
  parallel::parallel_for(static_cast<std::size_t>(n), cfg.jobs, [&](std::size_t i) {
    const auto bundle = noise::sample_bundle(seed_at(cfg, static_cast<long>(i)), cfg.n_steps);
    found[i] = spectrum::locate_eigenvalues(bundle, cfg.tau, cfg.window_lo, cfg.window_hi);
  });
  t.columns = {"seed", "k", "lambda"};
  for (long i = 0; i < n; ++i)
    for (std::size_t k = 0; k < found[static_cast<std::size_t>(i)].size(); ++k)
      t.rows.push_back({std::to_string(cfg.seeds.lo + i), std::to_string(k),
                        fmt(found[static_cast<std::size_t>(i)][k])});
}

inline void run_schtau_intensity(const ExperimentConfig& cfg, Table& t) {
  std::vector<double> grid(static_cast<std::size_t>(cfg.grid_points));
  for (int i = 0; i < cfg.grid_points; ++i)
    grid[static_cast<std::size_t>(i)] =
        cfg.window_lo + (cfg.window_hi - cfg.window_lo) * i / (cfg.grid_points - 1);
  const auto prof = spectrum::intensity_density(cfg.tau, grid);
  t.meta.emplace_back("truncation_N", std::to_string(prof.truncation_N));
  t.columns = {"lambda", "density"};
  for (std::size_t i = 0; i < prof.lambdas.size(); ++i)
    t.rows.push_back({fmt(prof.lambdas[i]), fmt(prof.density[i])});
}

inline void run_schtau_resolvent(const ExperimentConfig& cfg, Table& t) {
  const std::complex<double> z{cfg.z_re, cfg.z_im};
  const long n = cfg.seeds.count();
  struct Row {
    double lambda, rel_err;
  };
  std::vector<std::vector<Row>> res(static_cast<std::size_t>(n));
  parallel::parallel_for(static_cast<std::size_t>(n), cfg.jobs, [&](std::size_t i) {
    const auto bundle = noise::sample_bundle(seed_at(cfg, static_cast<long>(i)), cfg.n_steps);
    const auto roots =
        spectrum::locate_eigenvalues(bundle, cfg.tau, cfg.window_lo, cfg.window_hi);
    for (double lam : roots) {
      const auto point = spectrum::eigenvector(bundle, cfg.tau, lam);
      const auto r = spectrum::resolvent_apply(bundle, cfg.tau, z, point.psi);
      const std::complex<double> target = 1.0 / (lam - z);
      double err_sq = 0.0;
      const double dt = bundle.dt;
      for (std::size_t j = 0; j < r.size(); ++j) {
        const double w = (j == 0 || j + 1 == r.size()) ? 0.5 : 1.0;
        err_sq += w * dt *
                  (std::norm(r[j][0] - target * point.psi[j][0]) +
                   std::norm(r[j][1] - target * point.psi[j][1]));
      }
      res[i].push_back({lam, std::sqrt(err_sq)});  // psi has unit norm
    }
  });
  t.meta.emplace_back("z", fmt(cfg.z_re) + "+" + fmt(cfg.z_im) + "i");
  t.columns = {"seed", "lambda", "resolvent_rel_err"};
  for (long i = 0; i < n; ++i)
    for (const auto& row : res[static_cast<std::size_t>(i)])
      t.rows.push_back({std::to_string(cfg.seeds.lo + i), fmt(row.lambda), fmt(row.rel_err)});
}

inline void run_shape_sample(const ExperimentConfig& cfg, Table& t) {
  const long n = cfg.seeds.count();
  struct Row {
    double U, beta_end, l2, center, decay;
  };
  std::vector<Row> rows(static_cast<std::size_t>(n));
  parallel::parallel_for(static_cast<std::size_t>(n), cfg.jobs, [&](std::size_t i) {
    const auto s = spectrum::sample_universal_shape(
        cfg.tau, cfg.winding, seed_at(cfg, static_cast<long>(i)), cfg.n_steps);
    const auto prof = s.profile();
    double l2 = 0.0;
    const double dt = 1.0 / static_cast<double>(cfg.n_steps);
    for (std::size_t j = 0; j + 1 < prof.size(); ++j)
      l2 += 0.5 * (prof[j] + prof[j + 1]) * dt;
    const auto fit = stats::shape_fit(prof);
    rows[i] = {s.U, s.beta.back(), std::sqrt(l2), fit.center_hat, fit.decay_rate_hat};
  });
  t.meta.emplace_back("winding", std::to_string(cfg.winding));
  t.columns = {"seed", "U", "beta_end", "l2_norm", "center_hat", "decay_hat"};
  for (long i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    t.rows.push_back({std::to_string(cfg.seeds.lo + i), fmt(r.U), fmt(r.beta_end),
                      fmt(r.l2), fmt(r.center), fmt(r.decay)});
  }
}

struct AndersonRun {
  double E = 0.0, ell = 0.0, Eprime = 0.0, h = 0.0;
  int N = 0;
  double mu_lo = 0.0, mu_hi = 0.0;
};

inline AndersonRun anderson_setup(const ExperimentConfig& cfg, bool top_mesh) {
  AndersonRun a;
  a.E = cfg.resolved_E();
  a.ell = anderson::ell_E(cfg.L, a.E);
  a.Eprime = anderson::e_prime(cfg.L, a.E);
  a.N = cfg.N > 0 ? cfg.N
                  : (top_mesh ? anderson::mesh_points_top(cfg.L, a.E)
                              : anderson::mesh_points_critical(cfg.L, a.E));
  a.h = cfg.L / static_cast<double>(a.N + 1);
  const double se = std::sqrt(a.E);
  a.mu_lo = a.E + (cfg.window_lo - 2.0 * a.ell) * se / cfg.L;
  a.mu_hi = a.E + (cfg.window_hi - 2.0 * a.ell) * se / cfg.L;
  return a;
}

inline void anderson_metadata(const AndersonRun& a, const ExperimentConfig& cfg, Table& t) {
  t.meta.emplace_back("L", fmt(cfg.L));
  t.meta.emplace_back("E", fmt(a.E));
  t.meta.emplace_back("ell_E", fmt(a.ell));
  t.meta.emplace_back("E_prime", fmt(a.Eprime));
  t.meta.emplace_back("N", std::to_string(a.N));
  t.meta.emplace_back("h", fmt(a.h));
}

inline void run_anderson_spectrum(const ExperimentConfig& cfg, Table& t) {
  const auto a = anderson_setup(cfg, false);
  const long n = cfg.seeds.count();
  struct Row {
    double mu, lambda;
  };
  std::vector<std::vector<Row>> res(static_cast<std::size_t>(n));
  parallel::parallel_for(static_cast<std::size_t>(n), cfg.jobs, [&](std::size_t i) {
    const auto m = anderson::discretize(cfg.L, a.N, seed_at(cfg, static_cast<long>(i)));
    anderson::EigenWindowOptions opt;
    opt.want_vectors = false;
    const auto pairs = anderson::eigen_window(m, a.mu_lo, a.mu_hi, opt);
    for (const auto& p : pairs)
      res[i].push_back({p.mu, anderson::recenter(p.mu, a.E, cfg.L)});
  });
  anderson_metadata(a, cfg, t);
  t.columns = {"seed", "mu", "lambda"};
  for (long i = 0; i < n; ++i)
    for (const auto& row : res[static_cast<std::size_t>(i)])
      t.rows.push_back({std::to_string(cfg.seeds.lo + i), fmt(row.mu), fmt(row.lambda)});
}

inline void run_anderson_shape(const ExperimentConfig& cfg, Table& t) {
  const auto a = anderson_setup(cfg, false);
  const long n = cfg.seeds.count();
  struct PerSeed {
    std::vector<double> mus, lambdas, centers;
    std::vector<std::vector<double>> profiles;  // |psi^E|^2
  };
  std::vector<PerSeed> res(static_cast<std::size_t>(n));
  parallel::parallel_for(static_cast<std::size_t>(n), cfg.jobs, [&](std::size_t i) {
    const std::uint64_t seed = seed_at(cfg, static_cast<long>(i));
    const auto m = anderson::discretize(cfg.L, a.N, seed);
    const auto pairs = anderson::eigen_window(m, a.mu_lo, a.mu_hi);
    const auto rescaled = anderson::rescale_spectrum(pairs, a.E, cfg.L);
    rng::Stream centers(seed, 10);
    for (std::size_t k = 0; k < rescaled.size(); ++k) {
      const auto& r = rescaled[k];
      if (!r.converged) continue;
      std::vector<double> prof(r.psiE.size());
      for (std::size_t j = 0; j < prof.size(); ++j)
        prof[j] = r.psiE[j][0] * r.psiE[j][0] + r.psiE[j][1] * r.psiE[j][1];
      const double c = stats::profile_center_draw(prof, centers.uniform(k));
      res[i].mus.push_back(r.mu);
      res[i].lambdas.push_back(r.lambda);
      res[i].centers.push_back(c);
      res[i].profiles.push_back(std::move(prof));
    }
  });

  std::vector<std::vector<double>> profiles;
  std::vector<double> centers;
  t.columns = {"seed", "mu", "lambda", "center"};
  for (long i = 0; i < n; ++i) {
    const auto& p = res[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < p.mus.size(); ++k) {
      t.rows.push_back({std::to_string(cfg.seeds.lo + i), fmt(p.mus[k]),
                        fmt(p.lambdas[k]), fmt(p.centers[k])});
      profiles.push_back(p.profiles[k]);
      centers.push_back(p.centers[k]);
    }
  }
  anderson_metadata(a, cfg, t);
  t.meta.emplace_back("n_vectors", std::to_string(profiles.size()));
  if (profiles.size() >= 8) {
    const auto decay = stats::ensemble_shape_decay(profiles, centers);
    t.meta.emplace_back("decay_rate_hat", fmt(decay.decay_rate_hat));
    t.meta.emplace_back("decay_r_squared", fmt(decay.r_squared));
  }
}

inline void run_compare_critical(const ExperimentConfig& cfg, Table& t) {
  const auto a = anderson_setup(cfg, false);
  const long n = cfg.seeds.count();
  std::vector<std::vector<double>> anderson_gaps(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> schtau_gaps(static_cast<std::size_t>(n));
  parallel::parallel_for(static_cast<std::size_t>(2 * n), cfg.jobs, [&](std::size_t w) {
    const std::size_t i = w / 2;
    const std::uint64_t seed = seed_at(cfg, static_cast<long>(i));
    if (w % 2 == 0) {
      const auto m = anderson::discretize(cfg.L, a.N, seed);
      anderson::EigenWindowOptions opt;
      opt.want_vectors = false;
      const auto pairs = anderson::eigen_window(m, a.mu_lo, a.mu_hi, opt);
      std::vector<double> lams;
      for (const auto& p : pairs) lams.push_back(anderson::recenter(p.mu, a.E, cfg.L));
      anderson_gaps[i] = stats::spacing_statistics(lams, cfg.window_lo, cfg.window_hi);
    } else {
      const auto bundle = noise::sample_bundle(seed, cfg.n_steps);
      const auto lams =
          spectrum::locate_eigenvalues(bundle, cfg.tau, cfg.window_lo, cfg.window_hi);
      schtau_gaps[i] = stats::spacing_statistics(lams, cfg.window_lo, cfg.window_hi);
    }
  });
  std::vector<double> ga, gs;
  t.columns = {"source", "seed", "spacing"};
  for (long i = 0; i < n; ++i) {
    for (double g : anderson_gaps[static_cast<std::size_t>(i)]) {
      t.rows.push_back({"anderson", std::to_string(cfg.seeds.lo + i), fmt(g)});
      ga.push_back(g);
    }
  }
  for (long i = 0; i < n; ++i) {
    for (double g : schtau_gaps[static_cast<std::size_t>(i)]) {
      t.rows.push_back({"schtau", std::to_string(cfg.seeds.lo + i), fmt(g)});
      gs.push_back(g);
    }
  }
  anderson_metadata(a, cfg, t);
  t.meta.emplace_back("n_anderson_spacings", std::to_string(ga.size()));
  t.meta.emplace_back("n_schtau_spacings", std::to_string(gs.size()));
  if (!ga.empty() && !gs.empty())
    t.meta.emplace_back("ks_distance", fmt(stats::ks_distance(ga, gs)));
}

inline void run_top_regime(const ExperimentConfig& cfg, Table& t) {
  const auto a = anderson_setup(cfg, true);
  const long n = cfg.seeds.count();
  std::vector<std::vector<double>> res(static_cast<std::size_t>(n));
  parallel::parallel_for(static_cast<std::size_t>(n), cfg.jobs, [&](std::size_t i) {
    const auto m = anderson::discretize(cfg.L, a.N, seed_at(cfg, static_cast<long>(i)));
    anderson::EigenWindowOptions opt;
    opt.want_vectors = false;
    const auto pairs = anderson::eigen_window(m, a.mu_lo, a.mu_hi, opt);
    for (const auto& p : pairs) res[i].push_back(anderson::recenter(p.mu, a.E, cfg.L));
  });
  std::vector<double> all;
  t.columns = {"seed", "lambda", "dev"};
  for (long i = 0; i < n; ++i) {
    for (double lam : res[static_cast<std::size_t>(i)]) {
      t.rows.push_back({std::to_string(cfg.seeds.lo + i), fmt(lam),
                        fmt(std::abs(std::remainder(lam, 2.0 * spectrum::kPi)))});
      all.push_back(lam);
    }
  }
  anderson_metadata(a, cfg, t);
  if (!all.empty())
    t.meta.emplace_back("max_deviation", fmt(stats::picket_fence_deviation(all)));
}

inline void run_norm_demo(const ExperimentConfig& cfg, Table& t) {
  const std::complex<double> z{cfg.z_re, cfg.z_im};
  const long n = cfg.seeds.count();
  std::vector<stats::NormResolventDemo> res(static_cast<std::size_t>(n));
  parallel::parallel_for(static_cast<std::size_t>(n), cfg.jobs, [&](std::size_t i) {
    const auto bundle = noise::sample_bundle(seed_at(cfg, static_cast<long>(i)), cfg.n_steps);
    res[i] = stats::norm_resolvent_demo(bundle, cfg.tau, cfg.E_prime, z);
  });
  t.meta.emplace_back("E_prime", fmt(cfg.E_prime));
  t.meta.emplace_back("z", fmt(cfg.z_re) + "+" + fmt(cfg.z_im) + "i");
  if (n > 0) t.meta.emplace_back("g_norm_sq", fmt(res[0].g_norm_sq));
  t.columns = {"seed", "norm_extended", "norm_limit"};
  for (long i = 0; i < n; ++i) {
    const auto& r = res[static_cast<std::size_t>(i)];
    t.rows.push_back(
        {std::to_string(cfg.seeds.lo + i), fmt(r.norm_extended), fmt(r.norm_limit)});
  }
}

}  // namespace detail

// Executes one experiment; returns the process exit code.
inline int run(const ExperimentConfig& cfg) {
  detail::Table t;
  t.meta = detail::base_metadata(cfg);
  if (cfg.command == "schtau-simulate")
    detail::run_schtau_simulate(cfg, t);
  else if (cfg.command == "schtau-intensity")
    detail::run_schtau_intensity(cfg, t);
  else if (cfg.command == "schtau-resolvent")
    detail::run_schtau_resolvent(cfg, t);
  else if (cfg.command == "shape-sample")
    detail::run_shape_sample(cfg, t);
  else if (cfg.command == "anderson-spectrum")
    detail::run_anderson_spectrum(cfg, t);
  else if (cfg.command == "anderson-shape")
    detail::run_anderson_shape(cfg, t);
  else if (cfg.command == "compare-critical")
    detail::run_compare_critical(cfg, t);
  else if (cfg.command == "top-regime")
    detail::run_top_regime(cfg, t);
  else if (cfg.command == "norm-demo")
    detail::run_norm_demo(cfg, t);
  else
    throw ValidationError("unknown command '" + cfg.command + "'");
  detail::write_table(cfg, t);
  return 0;
}

inline void print_usage(std::FILE* out) {
  std::fprintf(out, "usage: schtau <command> [options]\n\ncommands:\n");
  for (const auto& name : command_names()) std::fprintf(out, "  %s\n", name.c_str());
  std::fprintf(out,
               "\ncommon options: --tau --window a b --seeds a..b --n-steps --L --E\n"
               "  --E-rule L/tau|L^2 --N --output path --format csv|json --jobs\n"
               "  --config file (key = value lines, flags take precedence)\n"
               "environment: SCHTAU_SEED_OFFSET shifts every seed\n");
}

inline int main(int argc, char** argv) {
  std::vector<std::string> tokens(argv + 1, argv + argc);
  try {
    const ExperimentConfig cfg = parse_config(tokens);
    return run(cfg);
  } catch (const CLI::CallForHelp&) {
    print_usage(stdout);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n\n", e.what());
    print_usage(stderr);
    return 2;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n\n", e.what());
    print_usage(stderr);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 1;
  }
}

}  // namespace schtau::cli
