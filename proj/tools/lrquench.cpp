// lrquench: batch front end over the library. Subcommands reproduce the
// desk-scale experiments and emit CSV (the contract), JSON sidecars (full
// config echo + seeds, replayable), and optional SVG plots.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "lrq/disorder.hpp"
#include "lrq/dmft.hpp"
#include "lrq/ed_oracle.hpp"
#include "lrq/fidelity.hpp"
#include "lrq/io.hpp"
#include "lrq/model.hpp"
#include "lrq/quench.hpp"
#include "lrq/spectral.hpp"
#include "lrq/util.hpp"
#include "lrq/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  bool out_dir_set = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
};

lrq::ModelParams params_from_config(const lrq::RunConfig& cfg) {
  lrq::ModelParams p;
  p.L = static_cast<int>(cfg.get_int("L", 64));
  p.alpha = cfg.get_double("alpha", 0.5);
  p.M_alpha = cfg.get_double("M_alpha", -4.0 * M_PI);
  p.J = cfg.get_double("J", 1.0);
  p.sigma = cfg.get_double("sigma", 1.0);
  p.U = cfg.get_double("U", 1.0);
  p.mu = cfg.get_double("mu", 0.0);
  p.kac = cfg.get_bool("kac", true);
  p.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  p.validate();
  return p;
}

lrq::DisorderModel model_from_config(const lrq::RunConfig& cfg) {
  const std::string m = cfg.get_string("model", "independent");
  if (m == "independent") return lrq::DisorderModel::independent;
  if (m == "circulant") return lrq::DisorderModel::circulant;
  throw std::invalid_argument("config key 'model': expected independent|circulant");
}

std::vector<double> times_from_config(const lrq::RunConfig& cfg) {
  const double t_max = cfg.get_double("t_max", 10.0);
  const int n_times = static_cast<int>(cfg.get_int("n_times", 512));
  if (t_max < 0.0 || n_times < 2)
    throw std::invalid_argument("config: t_max >= 0 and n_times >= 2 required");
  return lrq::linspace(0.0, t_max, static_cast<std::size_t>(n_times));
}

json params_to_json(const lrq::ModelParams& p) {
  return json{{"L", p.L},     {"alpha", p.alpha}, {"M_alpha", p.M_alpha},
              {"J", p.J},     {"sigma", p.sigma}, {"U", p.U},
              {"mu", p.mu},   {"kac", p.kac},     {"seed", p.seed}};
}

void write_sidecar(const fs::path& path, const lrq::RunConfig& cfg,
                   const lrq::ModelParams& p, const std::string& command,
                   const json& extra) {
  json j;
  j["command"] = command;
  j["version"] = lrq::kVersion;
  j["params"] = params_to_json(p);
  json echo;
  for (const auto& [k, v] : cfg.entries()) echo[k] = v;
  j["config"] = echo;
  j["extra"] = extra;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f << j.dump(2) << "\n";
}

void apply_overrides(lrq::ModelParams& p, const CommonArgs& args) {
  if (args.seed_set) p.seed = args.seed;
}

fs::path resolve_out_dir(const CommonArgs& args) {
  std::string dir = args.out_dir_set ? args.out_dir : ".";
  if (const char* env = std::getenv("LRQUENCH_OUT")) dir = env;
  fs::path out(dir);
  fs::create_directories(out);
  return out;
}

int effective_workers(const lrq::RunConfig& cfg, const CommonArgs& args) {
  int w = args.workers > 0 ? args.workers
                           : static_cast<int>(cfg.get_int("workers", 0));
  if (w <= 0) w = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, w);
}

// ---------------------------------------------------------------------------

int cmd_dos(const CommonArgs& args) {
  const auto cfg = lrq::RunConfig::parse_file(args.config_path);
  lrq::ModelParams p = params_from_config(cfg);
  apply_overrides(p, args);
  const auto model = model_from_config(cfg);
  const int n_real = static_cast<int>(cfg.get_int("n_realizations", 8));
  const fs::path out = resolve_out_dir(args);

  // pooled eigenvalues across realizations: the prediction is an ensemble
  // statement, so the comparison uses the ensemble spectrum
  std::vector<double> pooled;
  for (int r = 0; r < n_real; ++r) {
    const auto spec = lrq::DisorderSpec::from_params(p, model, static_cast<std::uint64_t>(r));
    const auto s = lrq::eigensolve(lrq::sample_matrix(p, spec), false,
                                   "dos realization " + std::to_string(r));
    pooled.insert(pooled.end(), s.eigenvalues.begin(), s.eigenvalues.end());
  }
  std::sort(pooled.begin(), pooled.end());

  lrq::CsvWriter evcsv({"eigenvalue"});
  for (double v : pooled) evcsv.add_row({v});
  evcsv.write((out / "eigenvalues.csv").string());

  json extra;
  extra["n_realizations"] = n_real;
  bool ok = true;
  std::string report_text;
  std::string matches_csv = "predicted_lambda,matched_lambda,relative_error\n";

  if (p.sigma == 0.0) {
    report_text = "bulk_empty = 1\nwarning = clean spectrum; semicircle comparison not applicable\n";
    extra["warning"] = "sigma = 0: degenerate bulk, prediction skipped";
    std::cout << "[dos] sigma = 0: clean spectrum, comparison skipped\n";
  } else if (p.alpha < 1.0 && p.M_alpha != 0.0) {
    const auto pred = lrq::predicted_dos(p, lrq::dispersion(p));
    const double margin = cfg.get_double("margin", 0.05 * pred.J);
    const auto rep = lrq::compare_spectrum(pooled, pred, margin);
    report_text = rep.to_text();
    matches_csv = rep.matches_csv();
    extra["ks_distance"] = rep.ks_distance;
    extra["max_relative_error"] = rep.max_relative_error;
    extra["predicted_outliers"] = rep.matches.size();
    ok = rep.unmatched_predicted == 0;
    std::cout << "[dos] KS = " << rep.ks_distance
              << ", predicted outliers = " << rep.matches.size()
              << ", max rel err = " << rep.max_relative_error << "\n";
  } else {
    // alpha >= 1 or no mean profile: KS against the bare semicircle only
    lrq::PredictedDOS pred;
    pred.J = p.J * (p.sigma > 0.0 ? p.sigma : 1.0);
    const double margin = cfg.get_double("margin", 0.05 * pred.J);
    const auto rep = lrq::compare_spectrum(pooled, pred, margin);
    report_text = rep.to_text();
    extra["ks_distance"] = rep.ks_distance;
    std::cout << "[dos] KS = " << rep.ks_distance << " (no outlier prediction at alpha = "
              << p.alpha << ")\n";
  }
  {
    std::ofstream f(out / "dos_report.txt", std::ios::binary);
    f << report_text;
  }
  {
    std::ofstream f(out / "dos_matches.csv", std::ios::binary);
    f << matches_csv;
  }
  if (cfg.get_bool("svg", true)) {
    // histogram (Freedman-Diaconis bins) + semicircle curve + outlier marks
    const std::size_t n = pooled.size();
    const double q1 = pooled[n / 4], q3 = pooled[3 * n / 4];
    double bw = 2.0 * (q3 - q1) / std::cbrt(static_cast<double>(n));
    if (bw <= 0.0) bw = 0.1;
    const double lo = pooled.front(), hi = pooled.back();
    const int nbins = std::max(1, static_cast<int>((hi - lo) / bw));
    std::vector<double> bx(static_cast<std::size_t>(nbins)), by(static_cast<std::size_t>(nbins), 0.0);
    for (double v : pooled) {
      int b = std::min(nbins - 1, static_cast<int>((v - lo) / (hi - lo) * nbins));
      by[static_cast<std::size_t>(b)] += 1.0;
    }
    for (int b = 0; b < nbins; ++b) {
      bx[static_cast<std::size_t>(b)] = lo + (b + 0.5) * (hi - lo) / nbins;
      by[static_cast<std::size_t>(b)] /= static_cast<double>(n) * (hi - lo) / nbins;
    }
    lrq::SvgPlot plot(640, 400);
    plot.add_series(bx, by, "steelblue");
    if (p.sigma > 0.0) {
      const double Jeff = p.J * p.sigma;
      std::vector<double> sx, sy;
      for (int k = 0; k <= 400; ++k) {
        const double x = -2.0 * Jeff + 4.0 * Jeff * k / 400.0;
        sx.push_back(x);
        sy.push_back(lrq::semicircle_density(x, Jeff));
      }
      plot.add_series(sx, sy, "crimson");
      if (p.alpha < 1.0 && p.M_alpha != 0.0) {
        std::vector<double> marks;
        for (const auto& o : lrq::predicted_dos(p, lrq::dispersion(p)).outliers)
          marks.push_back(o.lambda);
        plot.add_vertical_marks(marks, "crimson");
      }
    }
    plot.write((out / "dos.svg").string());
  }
  write_sidecar(out / "dos_meta.json", cfg, p, "dos", extra);
  return ok ? 0 : 1;
}

int cmd_quench(const CommonArgs& args) {
  const auto cfg = lrq::RunConfig::parse_file(args.config_path);
  lrq::ModelParams p = params_from_config(cfg);
  apply_overrides(p, args);
  const auto model = model_from_config(cfg);
  const int n_real = static_cast<int>(cfg.get_int("n_realizations", 1));
  const auto times = times_from_config(cfg);
  const fs::path out = resolve_out_dir(args);
  const int workers = effective_workers(cfg, args);

  json extra;
  lrq::QuenchResult result;
  if (p.sigma == 0.0) {
    const auto spec = lrq::jomega_momentum_clean(p, lrq::dispersion(p), p.L / 2);
    result = lrq::evolve_observable(spec, p.U, times);
    extra["tier"] = "clean-momentum";
  } else {
    const auto ens = lrq::ensemble_quench(p, model, n_real, times, workers);
    result = ens.mean;
    extra["tier"] = p.L <= 128 ? "exact" : "averaged";
    extra["plateaus"] = ens.plateaus;
  }

  lrq::CsvWriter csv({"t", "d", "stderr"});
  for (std::size_t k = 0; k < times.size(); ++k)
    csv.add_row({times[k], result.values[k],
                 result.stderrs.empty() ? 0.0 : result.stderrs[k]});
  csv.write((out / "quench.csv").string());

  extra["reference_value"] = result.reference_value;
  extra["plateau_defined"] = result.plateau_defined;
  if (result.plateau_defined) extra["plateau"] = result.plateau;
  extra["secular_warning"] = result.secular_warning;
  extra["n_realizations"] = n_real;

  if (cfg.get_bool("svg", true)) {
    lrq::SvgPlot plot(640, 400);
    plot.add_series(times, result.values, "steelblue");
    plot.write((out / "quench.svg").string());
  }
  write_sidecar(out / "quench_meta.json", cfg, p, "quench", extra);
  std::cout << "[quench] d(0) = " << result.values.front();
  if (result.plateau_defined) std::cout << ", plateau = " << result.plateau;
  std::cout << "\n";
  // invariant: d(0) == reference value exactly
  return result.values.front() == result.reference_value ? 0 : 1;
}

int cmd_fidelity(const CommonArgs& args) {
  const auto cfg = lrq::RunConfig::parse_file(args.config_path);
  lrq::ModelParams p = params_from_config(cfg);
  apply_overrides(p, args);
  const int n_real = static_cast<int>(cfg.get_int("n_realizations", 1));
  const auto times = times_from_config(cfg);
  const fs::path out = resolve_out_dir(args);
  const std::string tier = cfg.get_string("tier", p.L <= 64 ? "exact" : "averaged");

  std::vector<double> mean(times.size(), 0.0);
  bool ok = true;
  json extra;
  extra["tier"] = tier;
  for (int r = 0; r < n_real; ++r) {
    const auto dspec =
        lrq::DisorderSpec::from_params(p, lrq::DisorderModel::independent,
                                       static_cast<std::uint64_t>(r));
    const auto pair = lrq::paired_spectra(p, dspec);
    const auto res = tier == "exact" ? lrq::fidelity_series_exact(pair, p.U, times)
                                     : lrq::fidelity_series_averaged(pair, p.U, times);
    lrq::CsvWriter csv({"t", "F"});
    for (std::size_t k = 0; k < times.size(); ++k) {
      csv.add_row({times[k], res.values[k]});
      mean[k] += res.values[k] / n_real;
    }
    csv.write((out / ("fidelity_r" + std::to_string(r) + ".csv")).string());
    if (res.values.front() != 1.0) ok = false;
    for (double raw : res.raw)
      if (raw - 1.0 > 1e-10) ok = false;  // 1 - F must not go significantly negative
    if (pair.trivial) extra["trivial_realization_" + std::to_string(r)] = true;
  }
  lrq::CsvWriter agg({"t", "F_mean"});
  for (std::size_t k = 0; k < times.size(); ++k) agg.add_row({times[k], mean[k]});
  agg.write((out / "fidelity_mean.csv").string());
  if (cfg.get_bool("svg", true)) {
    lrq::SvgPlot plot(640, 400);
    plot.add_series(times, mean, "steelblue");
    plot.write((out / "fidelity.svg").string());
  }
  extra["n_realizations"] = n_real;
  write_sidecar(out / "fidelity_meta.json", cfg, p, "fidelity", extra);
  std::cout << "[fidelity] max(1-F_mean) = "
            << 1.0 - *std::min_element(mean.begin(), mean.end()) << "\n";
  return ok ? 0 : 1;
}

int cmd_dmft_check(const CommonArgs& args) {
  const auto cfg = lrq::RunConfig::parse_file(args.config_path);
  lrq::ModelParams p = params_from_config(cfg);
  apply_overrides(p, args);
  const fs::path out = resolve_out_dir(args);
  using lrq::cplx;

  const double mu = p.mu, w = cfg.get_double("omega", 0.7);
  const double eps0 = cfg.get_double("eps0", 0.8);
  bool ok = true;
  json extra;

  // 1/N fits for flat (kac on/off) and mixed corrections
  lrq::CsvWriter table({"N", "flat_kac", "flat_unscaled", "mixed"});
  std::vector<double> logN, lk, lu, lm;
  for (int e = 4; e <= 12; ++e) {
    const int N = 1 << e;
    const cplx Gf = lrq::hilbert_transform(lrq::DOSModel(lrq::FlatLRModel{eps0, N}),
                                           cplx(mu, w));
    const double ck = std::abs(lrq::weiss_field_flat(Gf, eps0, N, mu, w, true) - cplx(mu, w));
    const double cu = std::abs(lrq::weiss_field_flat(Gf, eps0, N, mu, w, false) - cplx(mu, w));
    const lrq::MixedModel mm{p.J, {3.0 * p.J, -2.5 * p.J}, N};
    const cplx Gm = lrq::hilbert_transform(lrq::DOSModel(mm), cplx(mu, w));
    const double cm = std::abs(lrq::weiss_field_mixed(Gm, mm, mu, w) -
                               lrq::weiss_field_semicircle(Gm, mm.J, mu, w));
    table.add_row({static_cast<double>(N), ck, cu, cm});
    logN.push_back(std::log(static_cast<double>(N)));
    lk.push_back(std::log(ck));
    lu.push_back(std::log(cu));
    lm.push_back(std::log(cm));
  }
  const double sk = lrq::fit_line(logN, lk).slope;
  const double su = lrq::fit_line(logN, lu).slope;
  const double sm = lrq::fit_line(logN, lm).slope;
  extra["fit_flat_kac"] = sk;
  extra["fit_flat_unscaled"] = su;
  extra["fit_mixed"] = sm;
  for (double s : {sk, su, sm})
    if (std::abs(s + 1.0) > 0.1) ok = false;

  // reciprocal round trip on 50 Matsubara-like points
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double om = 0.1 * std::pow(1000.0, k / 49.0);
    const cplx xi(mu, om);
    const cplx g = lrq::hilbert_semicircle(xi, p.J);
    worst = std::max(worst,
                     std::abs(lrq::reciprocal_semicircle(g, p.J) - xi) / std::abs(xi));
  }
  extra["reciprocal_max_residual"] = worst;
  if (worst > 1e-8) ok = false;

  table.write((out / "dmft_check.csv").string());
  write_sidecar(out / "dmft_meta.json", cfg, p, "dmft-check", extra);
  std::cout << "[dmft-check] fit exponents: " << sk << ", " << su << ", " << sm
            << "; reciprocal residual " << worst << (ok ? " (ok)" : " (FAIL)") << "\n";
  return ok ? 0 : 1;
}

int cmd_oracle_compare(const CommonArgs& args) {
  const auto cfg = lrq::RunConfig::parse_file(args.config_path);
  lrq::ModelParams p = params_from_config(cfg);
  apply_overrides(p, args);
  if (p.L > 6) p.L = 4;  // oracle sizes only
  p.sigma = 0.0;
  const fs::path out = resolve_out_dir(args);
  const auto times = times_from_config(cfg);

  const Eigen::MatrixXd h = lrq::build_clean_hopping_matrix(p);
  const auto sp = lrq::eigensolve(h, true);
  const auto basis = lrq::make_basis(p.L, p.L / 2, p.L / 2);
  const Eigen::MatrixXd orbitals = sp.eigenvectors->leftCols(p.L / 2);
  const Eigen::VectorXd psi0 = lrq::slater_determinant_state(orbitals, basis);
  const auto fs_state = lrq::build_fermi_sea(sp, p.L / 2);
  const auto jom = lrq::jomega_double_occupancy(fs_state);

  lrq::CsvWriter table({"U", "max_abs_error", "ratio_to_next"});
  std::vector<double> errs;
  const std::vector<double> us = cfg.get_doubles("U_list", {0.2, 0.1, 0.05, 0.025});
  for (double U : us) {
    const auto upt = lrq::evolve_observable(jom, U, times);
    const auto ed = lrq::exact_quench_double_occupancy(h, U, basis, psi0, times);
    double mx = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k)
      mx = std::max(mx, std::abs(upt.values[k] - ed[k]));
    errs.push_back(mx);
  }
  json extra;
  std::cout << "[oracle-compare] UPT-vs-ED error scaling:\n";
  for (std::size_t i = 0; i < us.size(); ++i) {
    const double ratio = (i + 1 < errs.size() && errs[i + 1] > 0.0)
                             ? errs[i] / errs[i + 1]
                             : 0.0;
    table.add_row({us[i], errs[i], ratio});
    std::cout << "  U = " << us[i] << ": max|d_UPT - d_ED| = " << errs[i]
              << (ratio > 0 ? "  (ratio to next: " + std::to_string(ratio) + ")" : "")
              << "\n";
  }
  extra["U_list"] = us;
  extra["errors"] = errs;
  table.write((out / "oracle_compare.csv").string());
  write_sidecar(out / "oracle_meta.json", cfg, p, "oracle-compare", extra);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"long-range disordered Fermi-Hubbard desk-scale experiments"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "path to key = value config file")
        ->required();
    sub->add_option("--out", args.out_dir, "output directory")
        ->each([&](const std::string&) { args.out_dir_set = true; });
    sub->add_option("--seed", args.seed, "override the config seed")
        ->each([&](const std::string&) { args.seed_set = true; });
    sub->add_option("--workers", args.workers, "ensemble worker threads");
  };

  auto* dos = app.add_subcommand("dos", "density of states vs prediction");
  auto* quench = app.add_subcommand("quench", "double-occupancy quench dynamics");
  auto* fidelity = app.add_subcommand("fidelity", "fidelity decay between paired spectra");
  auto* dmft = app.add_subcommand("dmft-check", "Weiss-field identity checks");
  auto* oracle = app.add_subcommand("oracle-compare", "UPT vs exact diagonalization");
  for (auto* sub : {dos, quench, fidelity, dmft, oracle}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    if (dos->parsed()) return cmd_dos(args);
    if (quench->parsed()) return cmd_quench(args);
    if (fidelity->parsed()) return cmd_fidelity(args);
    if (dmft->parsed()) return cmd_dmft_check(args);
    if (oracle->parsed()) return cmd_oracle_compare(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
