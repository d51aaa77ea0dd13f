// qcf: experiment runner for the force-based quasicontinuum chain.
//
//   qcf <patch-test|coercivity|infsup|convergence|dump-operator|eig-scan> [options]
//
// Exit status: 0 when every inequality / tolerance checked by the run holds,
// 1 when one fails, 2 on bad input.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qcf/qcf.hpp"

namespace {

using namespace qcf;
using nlohmann::json;

struct RunConfig {
  std::string command;
  std::string config_file;
  double phiF = 1.0;
  double phi2F = -0.05;
  std::string potential;  // "lj" switches to coefficients from phi''(F), phi''(2F)
  std::vector<double> F{0.9, 1.0, 1.1};
  std::vector<int> N_list;
  std::optional<int> K;
  std::optional<double> K_ratio;
  int M_factor = 4;
  std::vector<double> p_list{1.0, 2.0, 4.0};
  unsigned jobs = 1;
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 1;
  std::string op = "Eqcf";
  std::string load = "cos";
  double tol = 1e-13;
  int linf_samples = 0;

  Coefficients coefficients() const {
    if (potential == "lj") return Coefficients::from_potential(lennard_jones(), F.front());
    return {phiF, phi2F};
  }

  int k_for(int n) const {
    if (K) return *K;
    const double r = K_ratio.value_or(0.25);
    return static_cast<int>(std::lround(r * n));
  }

  DomainSpec domain(int n) const { return {n, k_for(n), M_factor * n}; }

  ConfigEcho echo() const {
    auto list = [](const auto& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : ",") + format_real(static_cast<double>(x));
      return s;
    };
    ConfigEcho e{{"command", command}};
    if (!config_file.empty()) e.emplace_back("config", config_file);
    if (potential.empty()) {
      e.emplace_back("phiF", format_real(phiF));
      e.emplace_back("phi2F", format_real(phi2F));
    } else {
      const Coefficients c = coefficients();
      e.emplace_back("potential", potential);
      e.emplace_back("F", list(F));
      e.emplace_back("phiF", format_real(c.phiF));
      e.emplace_back("phi2F", format_real(c.phi2F));
    }
    e.emplace_back("N-list", list(N_list));
    if (K) e.emplace_back("K", std::to_string(*K));
    else e.emplace_back("K-ratio", format_real(K_ratio.value_or(0.25)));
    e.emplace_back("M-factor", std::to_string(M_factor));
    e.emplace_back("p-list", list(p_list));
    e.emplace_back("jobs", std::to_string(jobs));
    e.emplace_back("format", format);
    e.emplace_back("seed", std::to_string(seed));
    if (command == "dump-operator") e.emplace_back("operator", op);
    if (command == "convergence") e.emplace_back("load", load);
    if (command == "patch-test") e.emplace_back("tol", format_real(tol));
    if (command == "infsup") e.emplace_back("linf-samples", std::to_string(linf_samples));
    return e;
  }
};

// Output sink: a file or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void write_summary(std::ostream& os, const json& summary) {
  for (const auto& [k, v] : summary.items()) os << "# " << k << '=' << v.dump() << '\n';
}

template <class Row, class CsvWriter>
void emit(const RunConfig& cfg, const std::vector<Row>& rows, const json& summary,
          CsvWriter&& csv) {
  Output out(cfg.out);
  if (cfg.format == "json") {
    out.stream() << report_json(cfg.echo(), rows, summary).dump(2) << '\n';
  } else {
    csv(out.stream(), cfg.echo(), rows);
    write_summary(out.stream(), summary);
  }
}

double slope_or_nan(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return std::nan("");
  return loglog_slope(x, y);
}

json real_or_null(double x) { return std::isnan(x) ? json(nullptr) : real_json(x); }

// ---------------------------------------------------------------- patch-test

struct PatchRow {
  double F;
  int N, K;
  PatchTestResult r;
};

void to_json(json& j, const PatchRow& p) {
  j = {{"F", p.F}, {"N", p.N}, {"K", p.K}, {"max_residual", p.r.max_residual},
       {"scale", p.r.scale}, {"relative", p.r.relative()}};
}

int cmd_patch_test(RunConfig cfg) {
  if (cfg.N_list.empty()) cfg.N_list = {16, 32, 64};
  const PairPotential lj = lennard_jones();
  struct Point {
    double F;
    DomainSpec spec;
  };
  std::vector<Point> points;
  for (double F : cfg.F) {
    for (int n : cfg.N_list) {
      if (cfg.K || cfg.K_ratio) {
        points.push_back({F, DomainSpec(n, cfg.k_for(n), n)});
      } else {
        for (int k = 2; 2 * k <= n; ++k) points.push_back({F, DomainSpec(n, k, n)});
      }
    }
  }
  const auto rows = parallel_map(points.size(), cfg.jobs, [&](std::size_t i) {
    const Point& p = points[i];
    return PatchRow{p.F, p.spec.N, p.spec.K, patch_test(lj, p.F, p.spec)};
  });
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.r.relative());
  const bool ok = worst <= cfg.tol;
  emit(cfg, rows, {{"max_relative_residual", worst}, {"pass", ok}},
       [](std::ostream& os, const ConfigEcho& echo, const std::vector<PatchRow>& rs) {
         write_config_echo(os, echo);
         os << "F,N,K,max_residual,scale,relative\n";
         for (const auto& r : rs) {
           os << format_real(r.F) << ',' << r.N << ',' << r.K << ','
              << format_real(r.r.max_residual) << ',' << format_real(r.r.scale) << ','
              << format_real(r.r.relative()) << '\n';
         }
       });
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------- coercivity

int cmd_coercivity(RunConfig cfg) {
  if (cfg.N_list.empty()) cfg.N_list = {256, 512, 1024, 2048};
  const Coefficients c = cfg.coefficients();
  for (int n : cfg.N_list) cfg.domain(n).validate();
  const auto rows = parallel_map(cfg.N_list.size(), cfg.jobs, [&](std::size_t i) {
    return coercivity_row(c, cfg.domain(cfg.N_list[i]));
  });
  bool ok = true;
  std::vector<double> ns, vals;
  for (const auto& r : rows) {
    ok = ok && r.witness_value >= r.rayleigh_min - 1e-9 * std::max(1.0, std::abs(r.rayleigh_min));
    if (r.rayleigh_min < 0.0) {
      ns.push_back(r.N);
      vals.push_back(-r.rayleigh_min);
    }
  }
  json summary = {{"negative_points", ns.size()},
                  {"slope_abs_rayleigh_min", real_or_null(c.phi2F == 0.0 ? std::nan("")
                                                                         : slope_or_nan(ns, vals))},
                  {"pass", ok}};
  emit(cfg, rows, summary, write_coercivity_csv);
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------- infsup

int cmd_infsup(RunConfig cfg) {
  if (cfg.N_list.empty()) cfg.N_list = {64, 128, 256, 512, 1024};
  const Coefficients c = cfg.coefficients();
  for (int n : cfg.N_list) cfg.domain(n).validate();
  const auto per_n = parallel_map(cfg.N_list.size(), cfg.jobs, [&](std::size_t i) {
    return infsup_rows(c, cfg.domain(cfg.N_list[i]), cfg.p_list);
  });
  std::vector<InfSupScanRow> rows;
  for (const auto& block : per_n) rows.insert(rows.end(), block.begin(), block.end());

  bool ok = true;
  json summary = json::object();
  std::map<std::pair<BoundKind, double>, std::pair<std::vector<double>, std::vector<double>>> series;
  for (const auto& r : rows) {
    auto& [x, y] = series[{r.kind, r.p}];
    x.push_back(r.N);
    y.push_back(r.value);
  }
  for (const auto& [key, xy] : series) {
    const auto& [kind, p] = key;
    const std::string name = std::string("slope_") + to_string(kind) + "_p" + format_real(p);
    if (kind != BoundKind::lower_bound) summary[name] = real_or_null(slope_or_nan(xy.first, xy.second));
  }
  // exact p = 2 never exceeds its interface-strain upper bound; the upper
  // bounds obey C N^(-1/p) once N >= 2K + 2
  for (const auto& r : rows) {
    const DomainSpec spec = cfg.domain(r.N);
    if (r.kind == BoundKind::exact) {
      for (const auto& u : rows) {
        if (u.N == r.N && u.kind == BoundKind::upper_bound && u.p == 2.0) {
          ok = ok && r.value <= u.value * (1.0 + 1e-10);
        }
      }
    }
    if (r.kind == BoundKind::upper_bound && r.N >= 2 * spec.K + 2) {
      ok = ok && r.value <= infsup_p_upper_constant(c, r.p) * std::pow(r.N, -1.0 / r.p) * (1.0 + 1e-12);
    }
    if (r.kind == BoundKind::lower_bound) {
      ok = ok && std::abs(r.value - 0.5 * c.qcf_margin()) <= 1e-14 * std::max(1.0, c.phiF);
    }
  }
  if (cfg.linf_samples > 0) {
    std::mt19937_64 rng(cfg.seed);
    json search = json::array();
    for (int n : cfg.N_list) {
      const StrainOperator e = assemble_Eqcf(c, cfg.domain(n));
      const double best = linf_l1_candidate_search(e, rng, cfg.linf_samples);
      const double gamma = rdd_margin(e);
      if (gamma > 0.0) ok = ok && best >= 0.5 * gamma - 1e-12;
      search.push_back({{"N", n}, {"min_response", best}});
    }
    summary["linf_l1_candidate_search"] = search;
  }
  summary["pass"] = ok;
  emit(cfg, rows, summary, write_infsup_csv);
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------- convergence

ForceField make_load(const RunConfig& cfg, const DomainSpec& spec) {
  if (cfg.load == "cos") return ForceField::cosine();
  if (cfg.load.rfind("const:", 0) == 0) return ForceField::constant(std::stod(cfg.load.substr(6)));
  if (cfg.load == "random") {
    std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(spec.N));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SiteField f(IndexRange::sites(spec.M), spec.eps());
    for (double& x : f.values()) x = u(rng);
    return ForceField::from_samples(std::move(f));
  }
  throw std::invalid_argument("unknown load '" + cfg.load + "' (cos, const:<value>, random)");
}

int cmd_convergence(RunConfig cfg) {
  if (cfg.N_list.empty()) cfg.N_list = {16, 32, 64, 128};
  const Coefficients c = cfg.coefficients();
  for (int n : cfg.N_list) {
    const DomainSpec spec = cfg.domain(n);
    if (spec.M < n + 2) throw std::invalid_argument("M-factor too small: need M >= N + 2");
    make_load(cfg, spec);
  }
  const auto rows = parallel_map(cfg.N_list.size(), cfg.jobs, [&](std::size_t i) {
    const DomainSpec spec = cfg.domain(cfg.N_list[i]);
    return error_report(c, make_load(cfg, spec), spec);
  });
  bool ok = true;
  std::vector<double> eps, err;
  for (const auto& r : rows) {
    ok = ok && r.all_hold();
    eps.push_back(r.eps);
    err.push_back(r.err_strain_inf);
  }
  bool positive = true;
  for (double e : err) positive = positive && e > 0.0;
  json summary = {{"slope_err_vs_eps", real_or_null(positive ? slope_or_nan(eps, err) : std::nan(""))},
                  {"pass", ok}};
  emit(cfg, rows, summary, write_error_reports_csv);
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------- dump-operator

template <class Op>
void dump(const RunConfig& cfg, const Op& op) {
  Output out(cfg.out);
  if (cfg.format == "json") {
    json triples = json::array();
    for (int i = op.row_range().first; i <= op.row_range().last; ++i) {
      for (auto [j, a] : op.row_entries(i)) triples.push_back({i, j, a});
    }
    out.stream() << json{{"config", config_json(cfg.echo())}, {"triples", triples}}.dump(2) << '\n';
  } else {
    write_config_echo(out.stream(), cfg.echo());
    out.stream() << "row,col,value\n";
    write_triples(out.stream(), op);
  }
}

int cmd_dump_operator(RunConfig cfg) {
  if (cfg.N_list.empty()) cfg.N_list = {8};
  if (cfg.N_list.size() != 1) throw std::invalid_argument("dump-operator takes a single N");
  const Coefficients c = cfg.coefficients();
  const DomainSpec spec = cfg.domain(cfg.N_list.front());
  const int N = spec.N;
  // La and Ea are dumped on the computational chain -N..N.
  if (cfg.op == "La") dump(cfg, assemble_La(c, N, spec.eps()));
  else if (cfg.op == "Llqc") dump(cfg, assemble_Llqc(c, spec));
  else if (cfg.op == "Lqcf") dump(cfg, assemble_Lqcf(c, spec));
  else if (cfg.op == "Ea") dump(cfg, assemble_Ea(c, N, spec.eps()));
  else if (cfg.op == "Eqcf") dump(cfg, assemble_Eqcf(c, spec));
  else throw std::invalid_argument("unknown operator '" + cfg.op + "'");
  return 0;
}

// ---------------------------------------------------------------- eig-scan

struct EigRow {
  int N, K;
  SpectrumSummary s;
};

void to_json(json& j, const EigRow& r) {
  j = {{"N", r.N}, {"K", r.K}, {"min_real", r.s.min_real}, {"max_abs_imag", r.s.max_abs_imag}};
}

int cmd_eig_scan(RunConfig cfg) {
  if (cfg.N_list.empty()) cfg.N_list = {16, 32, 64, 128};
  const Coefficients c = cfg.coefficients();
  for (int n : cfg.N_list) cfg.domain(n).validate();
  const auto rows = parallel_map(cfg.N_list.size(), cfg.jobs, [&](std::size_t i) {
    const DomainSpec spec = cfg.domain(cfg.N_list[i]);
    return EigRow{spec.N, spec.K, qcf_spectrum(c, spec)};
  });
  bool all_positive = true;
  for (const auto& r : rows) all_positive = all_positive && r.s.min_real > 0.0;
  emit(cfg, rows, {{"all_real_parts_positive", all_positive}},
       [](std::ostream& os, const ConfigEcho& echo, const std::vector<EigRow>& rs) {
         write_config_echo(os, echo);
         os << "N,K,min_real,max_abs_imag\n";
         for (const auto& r : rs) {
           os << r.N << ',' << r.K << ',' << format_real(r.s.min_real) << ','
              << format_real(r.s.max_abs_imag) << '\n';
         }
       });
  return 0;  // exploratory: no acceptance attached
}

// Flat key=value config files: report malformed lines and unknown keys with
// their line numbers before handing the file to the option parser.
void check_config_file(const std::string& path, const CLI::App& app) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' || line[first] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(n) + ": expected key=value, got '" +
                               line + "'");
    }
    std::string key = line.substr(first, eq - first);
    key.erase(key.find_last_not_of(" \t") + 1);
    if (key == "config" || app.get_option_no_throw("--" + key) == nullptr) {
      throw std::runtime_error(path + ":" + std::to_string(n) + ": unknown key '" + key + "'");
    }
  }
}

std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Force-based quasicontinuum experiments"};
  app.failure_message(CLI::FailureMessage::help);
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value file; command-line flags override it");

  RunConfig cfg;
  app.add_option("--phiF", cfg.phiF, "phi''(F)");
  app.add_option("--phi2F", cfg.phi2F, "phi''(2F)");
  app.add_option("--potential", cfg.potential, "take coefficients from a potential")
      ->check(CLI::IsMember({"lj"}));
  app.add_option("--F", cfg.F, "macroscopic strain(s); the first one sets the coefficients")
      ->delimiter(',');
  app.add_option("--N-list", cfg.N_list, "computational half-widths N")->delimiter(',');
  auto* k_opt = app.add_option("--K", cfg.K, "atomistic half-width (fixed)");
  auto* r_opt = app.add_option("--K-ratio", cfg.K_ratio, "atomistic half-width as K = ratio N");
  k_opt->excludes(r_opt);
  app.add_option("--M-factor", cfg.M_factor, "reference half-width M = factor N")
      ->check(CLI::PositiveNumber);
  app.add_option("--p-list", cfg.p_list, "exponents p for inf-sup upper bounds")->delimiter(',');
  app.add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", cfg.out, "output file, '-' for stdout")->required();
  app.add_option("--format", cfg.format)->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--operator", cfg.op, "operator for dump-operator")
      ->check(CLI::IsMember({"La", "Llqc", "Lqcf", "Ea", "Eqcf"}));
  app.add_option("--load", cfg.load, "load for convergence: cos, const:<value>, random");
  app.add_option("--tol", cfg.tol, "patch-test tolerance (scale-relative)");
  app.add_option("--linf-samples", cfg.linf_samples,
                 "infsup: random strains for the l^inf-l^1 candidate search");

  const std::map<std::string, int (*)(RunConfig)> commands{
      {"patch-test", cmd_patch_test},   {"coercivity", cmd_coercivity},
      {"infsup", cmd_infsup},           {"convergence", cmd_convergence},
      {"dump-operator", cmd_dump_operator}, {"eig-scan", cmd_eig_scan}};
  for (const auto& [name, fn] : commands) {
    app.add_subcommand(name)->fallthrough()->footer("Common options: run 'qcf --help'.");
  }

  try {
    if (const std::string path = find_config_arg(argc, argv); !path.empty()) {
      check_config_file(path, app);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (const auto* sub : app.get_subcommands()) cfg.command = sub->get_name();
  if (auto* opt = app.get_option("--config"); opt->count() > 0) cfg.config_file = opt->as<std::string>();
  if (cfg.F.empty()) cfg.F = {1.0};

  try {
    return commands.at(cfg.command)(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
