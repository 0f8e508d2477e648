// Command-line front end: single-point rates, distance and monitor-tap
// sweeps, figure-style curve families, and the Monte Carlo estimation run.
// Exit codes: 0 on success (including nonpositive rates), 1 on configuration
// errors, 2 on numerical or I/O failures.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <thread>
#include <vector>

#include "cvmdi/config.hpp"

namespace {

using namespace cvmdi;

struct GlobalOpts {
  std::string config_path;
  std::string case_override, geometry_override, pe_override;
  std::string rin_mode = "substitution";
  std::vector<std::string> sets;
  std::string out_path;
  bool seed_given = false;
  std::uint64_t seed = 1;
};

RunConfig load_config(const GlobalOpts& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : RunConfig::from_file(g.config_path);
  for (const auto& kv : g.sets) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!g.case_override.empty()) cfg.case_id = case_from_name(g.case_override);
  if (!g.geometry_override.empty()) cfg.geometry = geometry_from_name(g.geometry_override);
  if (!g.pe_override.empty()) cfg.pe_mode = pe_mode_from_name(g.pe_override);
  if (g.seed_given) cfg.seed = g.seed;
  cfg.validate();
  return cfg;
}

std::ostream& open_output(const GlobalOpts& g, std::ofstream& file) {
  if (g.out_path.empty()) return std::cout;
  file.open(g.out_path);
  if (!file) throw NumericalError("cannot open output file: " + g.out_path);
  return file;
}

// Evaluates grid points in parallel while keeping the row order by index.
template <typename Fn>
std::vector<SweepRow> parallel_rows(std::size_t count, Fn&& fn) {
  std::vector<SweepRow> rows(count);
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, 8u);
  if (count < 16 || workers == 1) {
    for (std::size_t i = 0; i < count; ++i) rows[i] = fn(i);
    return rows;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t b = w * chunk, e = std::min(count, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&rows, &fn, b, e]() {
      for (std::size_t i = b; i < e; ++i) rows[i] = fn(i);
    });
  }
  for (auto& t : pool) t.join();
  return rows;
}

SweepRow evaluate_point(const RunConfig& cfg, double l_ab, const std::string& mode) {
  ChannelParams ch = cfg.channel_at(l_ab);
  double l_ac = cfg.geometry == Geometry::Symmetric ? 0.5 * l_ab : 0.0;
  double l_bc = l_ab - l_ac;
  try {
    ProtocolParams p = mode == "estimated" ? cfg.protocol_estimated() : cfg.protocol();
    KeyRateBreakdown kr =
        secret_key_rate(cfg.case_id, p, ch, negative_epr_attack(ch), cfg.finite_size(),
                        cfg.pe_mode);
    return make_row(cfg, l_ac, l_bc, kr, mode);
  } catch (const NumericalError&) {
    return skipped_row(cfg, l_ac, l_bc, mode);
  }
}

int cmd_rate(const GlobalOpts& g, double l_ab) {
  RunConfig cfg = load_config(g);
  ChannelParams ch = cfg.channel_at(l_ab);
  double l_ac = cfg.geometry == Geometry::Symmetric ? 0.5 * l_ab : 0.0;
  // Numerical failures propagate here: one requested point, exit code 2.
  KeyRateBreakdown kr = secret_key_rate(cfg.case_id, cfg.protocol(), ch,
                                        negative_epr_attack(ch), cfg.finite_size(), cfg.pe_mode);
  std::ofstream file;
  std::ostream& out = open_output(g, file);
  out << sweep_csv_header() << "\n"
      << to_csv(make_row(cfg, l_ac, l_ab - l_ac, kr, "realistic")) << "\n";
  return 0;
}

std::vector<double> make_grid(double from, double to, double step) {
  if (step <= 0.0 || from > to) throw ConfigError("invalid grid: need from <= to and step > 0");
  std::vector<double> g;
  for (double v = from; v <= to + 0.5 * step; v += step) g.push_back(v);
  if (g.empty()) throw ConfigError("empty grid");
  return g;
}

int cmd_scan_distance(const GlobalOpts& g, double from, double to, double step) {
  RunConfig cfg = load_config(g);
  std::vector<double> grid = make_grid(from, to, step);
  auto rows = parallel_rows(grid.size(),
                            [&](std::size_t i) { return evaluate_point(cfg, grid[i], "realistic"); });
  std::ofstream file;
  std::ostream& out = open_output(g, file);
  out << sweep_csv_header() << "\n";
  for (const auto& r : rows) out << to_csv(r) << "\n";
  return 0;
}

int cmd_scan_eta(const GlobalOpts& g, double eta_from, double eta_to, double eta_step,
                 double from, double to, double step) {
  RunConfig cfg = load_config(g);
  if (cfg.case_id == CaseId::Untrusted)
    throw ConfigError("scan-eta needs a monitored case (alice|bob|both)");
  std::vector<double> etas = make_grid(eta_from, eta_to, eta_step);
  for (double e : etas)
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("eta_m grid values must lie in (0,1)");
  std::vector<double> dists = make_grid(from, to, step);
  std::size_t total = etas.size() * dists.size();
  auto rows = parallel_rows(total, [&](std::size_t i) {
    RunConfig point = cfg;
    double eta = etas[i / dists.size()];
    point.eta_m_alice = eta;
    point.eta_m_bob = eta;
    return evaluate_point(point, dists[i % dists.size()], "realistic");
  });
  std::ofstream file;
  std::ostream& out = open_output(g, file);
  out << sweep_csv_header() << "\n";
  for (const auto& r : rows) out << to_csv(r) << "\n";
  return 0;
}

void write_curve(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw NumericalError("cannot write " + path.string());
  out << sweep_csv_header() << "\n";
  for (const auto& r : rows) out << to_csv(r) << "\n";
}

int cmd_reproduce(const GlobalOpts& g, int figure, const std::string& out_dir) {
  RunConfig base = load_config(g);
  std::filesystem::path dir(out_dir.empty() ? "figures" : out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw NumericalError("cannot create output directory: " + dir.string());

  auto curve = [&](RunConfig cfg, const std::vector<double>& grid, const std::string& mode) {
    return parallel_rows(grid.size(),
                         [&](std::size_t i) { return evaluate_point(cfg, grid[i], mode); });
  };

  if (figure == 2) {
    std::vector<double> grid = make_grid(0.5, 40.0, 0.5);
    for (CaseId c : {CaseId::AliceOnly, CaseId::BobOnly, CaseId::Both}) {
      for (Geometry geo : {Geometry::Symmetric, Geometry::Asymmetric}) {
        RunConfig cfg = base;
        cfg.case_id = c;
        cfg.geometry = geo;
        std::string panel = std::string(case_name(c)) + "_" +
                            (geo == Geometry::Symmetric ? "sym" : "asym");
        cfg.v_rin = 0.0;
        write_curve(dir / ("fig2_" + panel + "_est.csv"), curve(cfg, grid, "estimated"));
        for (double vr : {0.1, 0.2, 0.4}) {
          cfg.v_rin = vr;
          char name[64];
          std::snprintf(name, sizeof(name), "fig2_%s_rin%.1f.csv", panel.c_str(), vr);
          write_curve(dir / name, curve(cfg, grid, "realistic"));
        }
      }
    }
    return 0;
  }
  if (figure == 3 || figure == 4) {
    Geometry geo = figure == 3 ? Geometry::Symmetric : Geometry::Asymmetric;
    std::vector<double> grid =
        figure == 3 ? make_grid(0.25, 8.0, 0.25) : make_grid(0.5, 30.0, 0.5);
    for (CaseId c : {CaseId::Untrusted, CaseId::AliceOnly, CaseId::BobOnly, CaseId::Both}) {
      RunConfig cfg = base;
      cfg.case_id = c;
      cfg.geometry = geo;
      cfg.v_rin = 0.0;
      std::string name = "fig" + std::to_string(figure) + "_" +
                         (figure == 3 ? "sym_" : "asym_") + case_name(c) + ".csv";
      write_curve(dir / name, curve(cfg, grid, "realistic"));
    }
    return 0;
  }
  if (figure == 5) {
    std::vector<double> etas = make_grid(0.05, 0.95, 0.05);
    etas.push_back(0.99);
    etas.push_back(0.999);
    std::vector<double> dists = make_grid(1.0, 50.0, 1.0);
    for (CaseId c : {CaseId::AliceOnly, CaseId::BobOnly, CaseId::Both}) {
      RunConfig cfg = base;
      cfg.case_id = c;
      cfg.geometry = Geometry::Asymmetric;
      cfg.v_rin = 0.0;
      std::size_t total = etas.size() * dists.size();
      auto rows = parallel_rows(total, [&](std::size_t i) {
        RunConfig point = cfg;
        double eta = etas[i / dists.size()];
        point.eta_m_alice = eta;
        point.eta_m_bob = eta;
        return evaluate_point(point, dists[i % dists.size()], "realistic");
      });
      write_curve(dir / ("fig5_" + std::string(case_name(c)) + "_surface.csv"), rows);
    }
    return 0;
  }
  throw ConfigError("unknown figure id (expected 2|3|4|5)");
}

int cmd_estimate(const GlobalOpts& g, std::size_t samples, double l_ab) {
  RunConfig cfg = load_config(g);
  if (samples < 100) throw ConfigError("estimate needs at least 100 samples");
  if (cfg.case_id == CaseId::Untrusted)
    throw ConfigError("estimate needs a monitored case (alice|bob|both)");
  ChannelParams ch = cfg.channel_at(l_ab);
  ProtocolParams p = case_effective(cfg.protocol(), cfg.case_id);
  FiniteSizeParams fs = cfg.finite_size();

  Pcg32 rng(cfg.seed, 0);
  EstimationSamples data = simulate_channel_data(p, ch, samples, rng);
  EstimationResult est = ml_estimators(data);
  Side side = cfg.case_id == CaseId::BobOnly ? Side::Bob : Side::Alice;
  MonitorMoments mm = monitor_moments(p, side);
  est.eps_s_hat = eps_s_from_moments(mm.coefficient, mm.var_m3, p.v());
  est.se_eps_s = mm.var_m3 * std::sqrt(2.0 / static_cast<double>(samples)) / mm.coefficient;

  Observables obs;
  obs.case_id = cfg.case_id;
  obs.t1_hat = est.t1_hat;
  obs.t2_hat = est.t2_hat;
  obs.sigma1_sq = est.sigma1_sq_hat;
  obs.sigma2_sq = est.sigma2_sq_hat;
  obs.mon_coeff_a = cfg.case_id != CaseId::BobOnly ? mm.coefficient : 0.0;
  obs.mon_coeff_b = cfg.case_id == CaseId::BobOnly
                        ? mm.coefficient
                        : (cfg.case_id == CaseId::Both
                               ? monitor_moments(p, Side::Bob).coefficient
                               : 0.0);
  obs.eps_s_hat = est.eps_s_hat;
  ScanResult scan = scan_coupled_params(obs, ScanGrid{}, p, fs);

  KeyRateBreakdown ideal = secret_key_rate(cfg.case_id, p, ch, negative_epr_attack(ch), fs);
  WorstCaseParams wc = worst_case_adjust(est, p, ch, fs.eps_pe);
  KeyRateBreakdown worst = secret_key_rate(cfg.case_id, wc.params, wc.channel,
                                           negative_epr_attack(wc.channel), fs);

  std::ofstream file;
  std::ostream& out = open_output(g, file);
  char buf[256];
  out << "# estimation report (seed " << cfg.seed << ", samples " << samples << ")\n";
  out << "quantity,estimate,standard_error\n";
  std::snprintf(buf, sizeof(buf), "t1,%.10g,%.10g\n", est.t1_hat, est.se_t1); out << buf;
  std::snprintf(buf, sizeof(buf), "t2,%.10g,%.10g\n", est.t2_hat, est.se_t2); out << buf;
  std::snprintf(buf, sizeof(buf), "sigma1_sq,%.10g,%.10g\n", est.sigma1_sq_hat, est.se_sigma1_sq); out << buf;
  std::snprintf(buf, sizeof(buf), "sigma2_sq,%.10g,%.10g\n", est.sigma2_sq_hat, est.se_sigma2_sq); out << buf;
  std::snprintf(buf, sizeof(buf), "eps_s,%.10g,%.10g\n", est.eps_s_hat, est.se_eps_s); out << buf;
  std::snprintf(buf, sizeof(buf), "scan_min_rate,%.10g,\n", scan.rate); out << buf;
  std::snprintf(buf, sizeof(buf), "scan_t_s,%.10g,\n", scan.t_s); out << buf;
  std::snprintf(buf, sizeof(buf), "rate_ideal,%.10g,\n", ideal.rate); out << buf;
  std::snprintf(buf, sizeof(buf), "rate_worst_case,%.10g,\n", worst.rate); out << buf;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-size CV-MDI secret key rates with source-noise monitoring"};
  app.require_subcommand(1);
  GlobalOpts g;
  app.add_option("--config", g.config_path, "key=value config file");
  app.add_option("--case", g.case_override, "untrusted|alice|bob|both");
  app.add_option("--geometry", g.geometry_override, "symmetric|asymmetric");
  app.add_option("--pe-mode", g.pe_override, "ideal|worst_case");
  app.add_option("--rin-mode", g.rin_mode, "substitution|sample_level");
  app.add_option("--set", g.sets, "override a config key (key=value)");
  app.add_option("--out", g.out_path, "output file (default stdout) or directory for reproduce");
  auto* seed_opt = app.add_option("--seed", g.seed, "root RNG seed");

  double l_ab = 10.0, from = 2.0, to = 50.0, step = 0.5;
  double eta_from = 0.1, eta_to = 0.9, eta_step = 0.1;
  int figure = 3;
  std::size_t samples = 1000000;
  std::string out_dir;

  auto* rate = app.add_subcommand("rate", "one point: header plus a single CSV row");
  rate->fallthrough();
  rate->add_option("--l-ab", l_ab, "total distance in km")->required();

  auto* scan = app.add_subcommand("scan-distance", "CSV rows over a distance grid");
  scan->fallthrough();
  scan->add_option("--from", from, "start km")->required();
  scan->add_option("--to", to, "end km")->required();
  scan->add_option("--step", step, "step km")->required();

  auto* scaneta = app.add_subcommand("scan-eta", "CSV rows over (eta_m, distance)");
  scaneta->fallthrough();
  scaneta->add_option("--eta-from", eta_from)->required();
  scaneta->add_option("--eta-to", eta_to)->required();
  scaneta->add_option("--eta-step", eta_step)->required();
  scaneta->add_option("--from", from, "start km")->required();
  scaneta->add_option("--to", to, "end km")->required();
  scaneta->add_option("--step", step, "step km")->required();

  auto* rep = app.add_subcommand("reproduce", "write the preset curve families as CSV files");
  rep->fallthrough();
  rep->add_option("figure", figure, "2|3|4|5")->required();
  rep->add_option("--out", out_dir, "output directory (default: figures)");

  auto* est = app.add_subcommand("estimate", "simulate, estimate, scan, and report rates");
  est->fallthrough();
  est->add_option("--samples", samples, "number of channel symbols");
  est->add_option("--l-ab", l_ab, "total distance in km");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (rate->parsed()) return cmd_rate(g, l_ab);
    if (scan->parsed()) return cmd_scan_distance(g, from, to, step);
    if (scaneta->parsed()) return cmd_scan_eta(g, eta_from, eta_to, eta_step, from, to, step);
    if (rep->parsed()) return cmd_reproduce(g, figure, out_dir);
    if (est->parsed()) return cmd_estimate(g, samples, l_ab);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
