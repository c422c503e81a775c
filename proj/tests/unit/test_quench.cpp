#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "lrq/disorder.hpp"
#include "lrq/ed_oracle.hpp"
#include "lrq/model.hpp"
#include "lrq/quench.hpp"
#include "lrq/spectral.hpp"
#include "lrq/util.hpp"

using namespace lrq;

namespace {
ModelParams clean_params(int L, double alpha, bool kac) {
  ModelParams p;
  p.L = L;
  p.alpha = alpha;
  p.M_alpha = 1.0;
  p.sigma = 0.0;
  p.kac = kac;
  return p;
}
}  // namespace

TEST_CASE("fermi sea construction", "[quench]") {
  ModelParams p = clean_params(4, 0.5, true);
  auto s = eigensolve(build_clean_hopping_matrix(p), true);
  auto f = build_fermi_sea(s, 2);
  CHECK(f.filling == 2);
  CHECK(f.energies(0) <= f.energies(1));
  SpectrumResult no_vec;
  no_vec.eigenvalues = {1.0, 2.0};
  CHECK_THROWS_AS(build_fermi_sea(no_vec, 1), std::invalid_argument);
}

TEST_CASE("double occupancy of the sea", "[quench]") {
  // uniform |a|^2 = 1/L at half filling gives L/4
  ModelParams p = clean_params(8, 0.0, true);
  auto pw = plane_wave_sea(p, dispersion(p), 4);
  CHECK(double_occupancy_fs(pw) == Catch::Approx(2.0).margin(1e-12));
  // zero filling
  pw.filling = 0;
  CHECK(double_occupancy_fs(pw) == 0.0);
  // L = 2 half filling: single symmetric orbital, d = 0.5
  ModelParams p2 = clean_params(4, 0.0, false);
  auto s2 = eigensolve(build_clean_hopping_matrix(p2), true);
  auto f2 = build_fermi_sea(s2, 2);
  CHECK(double_occupancy_fs(f2) > 0.0);
}

TEST_CASE("full filling gives an empty peak list", "[quench]") {
  ModelParams p = clean_params(6, 0.5, true);
  auto s = eigensolve(build_clean_hopping_matrix(p), true);
  auto f = build_fermi_sea(s, 6);
  auto j = jomega_double_occupancy(f);
  CHECK(j.peaks.empty());
  auto jm = jomega_momentum_clean(p, dispersion(p), 6);
  CHECK(jm.peaks.empty());
}

TEST_CASE("excitation energies are four-level differences", "[quench]") {
  ModelParams p = clean_params(8, 0.5, true);
  auto s = eigensolve(build_clean_hopping_matrix(p), true);
  auto f = build_fermi_sea(s, 4);
  auto j = jomega_double_occupancy(f);
  REQUIRE(!j.peaks.empty());
  // every omega must be representable as e_u - e_o + e_u' - e_o'
  for (const auto& pk : j.peaks) {
    bool found = false;
    for (int u1 = 4; u1 < 8 && !found; ++u1)
      for (int o1 = 0; o1 < 4 && !found; ++o1)
        for (int u2 = 4; u2 < 8 && !found; ++u2)
          for (int o2 = 0; o2 < 4 && !found; ++o2)
            if (std::abs(f.energies(u1) - f.energies(o1) + f.energies(u2) -
                         f.energies(o2) - pk.omega) < 1e-9)
              found = true;
    CHECK(found);
  }
}

TEST_CASE("peak list matches the many-body matrix elements at L = 4", "[quench][oracle]") {
  // brute force: construct the two-pair states as Slater determinants and
  // read the H_int matrix elements off the many-body operator
  ModelParams p = clean_params(4, 0.5, true);
  const Eigen::MatrixXd h = build_clean_hopping_matrix(p);
  auto sp = eigensolve(h, true);
  auto f = build_fermi_sea(sp, 2);
  auto j = jomega_double_occupancy(f);

  auto basis = make_basis(4, 2, 2);
  const Eigen::MatrixXd W =
      build_many_body_hamiltonian(Eigen::MatrixXd::Zero(4, 4), 1.0, basis);
  const Eigen::MatrixXd& a = *sp.eigenvectors;
  const Eigen::VectorXd fs_up = [&] {
    Eigen::MatrixXd orb = a.leftCols(2);
    return slater_determinant_state(orb, basis);
  }();

  std::vector<Peak> ed_peaks;
  for (int u1 = 2; u1 < 4; ++u1)
    for (int o1 = 0; o1 < 2; ++o1)
      for (int u2 = 2; u2 < 4; ++u2)
        for (int o2 = 0; o2 < 2; ++o2) {
          // orbital sets for the excited Slater determinant
          Eigen::MatrixXd up(4, 2), dn(4, 2);
          up.col(0) = a.col(o1 == 0 ? 1 : 0);
          up.col(1) = a.col(u1);
          dn.col(0) = a.col(o2 == 0 ? 1 : 0);
          dn.col(1) = a.col(u2);
          // build product state by sector
          auto amp = [&](const Eigen::MatrixXd& orb,
                         const std::vector<std::uint32_t>& masks) {
            Eigen::VectorXd v(masks.size());
            for (std::size_t k = 0; k < masks.size(); ++k) {
              Eigen::MatrixXd sub(2, 2);
              int row = 0;
              for (int i = 0; i < 4; ++i)
                if ((masks[k] >> i) & 1u) sub.row(row++) = orb.row(i);
              v(static_cast<Eigen::Index>(k)) = sub.determinant();
            }
            return v;
          };
          const Eigen::VectorXd au = amp(up, basis.up_masks);
          const Eigen::VectorXd ad = amp(dn, basis.down_masks);
          Eigen::VectorXd m(basis.dim());
          for (std::size_t x = 0; x < basis.up_masks.size(); ++x)
            for (std::size_t y = 0; y < basis.down_masks.size(); ++y)
              m(x * basis.down_masks.size() + y) = au(x) * ad(y);
          m.normalize();
          const double V = m.dot(W * fs_up);
          const double omega = sp.eigenvalues[(std::size_t)u1] - sp.eigenvalues[(std::size_t)o1] +
                               sp.eigenvalues[(std::size_t)u2] - sp.eigenvalues[(std::size_t)o2];
          ed_peaks.push_back({omega, -V * V * omega});
        }
  merge_and_prune_peaks(ed_peaks);
  REQUIRE(ed_peaks.size() == j.peaks.size());
  for (std::size_t k = 0; k < ed_peaks.size(); ++k) {
    CHECK(ed_peaks[k].omega == Catch::Approx(j.peaks[k].omega).margin(1e-10));
    CHECK(ed_peaks[k].weight == Catch::Approx(j.peaks[k].weight).margin(1e-10));
  }
}

TEST_CASE("momentum path agrees with the generic wick path", "[quench]") {
  ModelParams p = clean_params(16, 0.5, true);
  auto t = dispersion(p);
  auto pw = plane_wave_sea(p, t, 8);
  auto generic = jomega_double_occupancy(pw);
  auto fast = jomega_momentum_clean(p, t, 8);
  REQUIRE(generic.peaks.size() == fast.peaks.size());
  for (std::size_t k = 0; k < fast.peaks.size(); ++k) {
    CHECK(fast.peaks[k].omega == Catch::Approx(generic.peaks[k].omega).margin(1e-10));
    CHECK(fast.peaks[k].weight == Catch::Approx(generic.peaks[k].weight).margin(1e-10));
  }
  CHECK(fast.reference_value == Catch::Approx(generic.reference_value).margin(1e-10));
  // rejected with disorder on
  ModelParams pd = p;
  pd.sigma = 1.0;
  CHECK_THROWS_AS(jomega_momentum_clean(pd, t, 8), std::invalid_argument);
}

TEST_CASE("evolution basics", "[quench]") {
  ExcitationSpectrum spec;
  spec.reference_value = 3.0;
  spec.peaks = {{2.0, 1.0}};
  const std::vector<double> times = {0.0, M_PI / 2.0};
  // U = 0: flat
  auto flat = evolve_observable(spec, 0.0, times);
  CHECK(flat.values[0] == 3.0);
  CHECK(flat.values[1] == 3.0);
  // single peak pinned value: d = A0 + 4 sin^2(pi/2)/4 = A0 + 1
  auto one = evolve_observable(spec, 1.0, times);
  CHECK(one.values[0] == 3.0);  // d(0) = A0 exactly
  CHECK(one.values[1] == Catch::Approx(4.0).epsilon(1e-14));
  // negative times rejected
  CHECK_THROWS_AS(evolve_observable(spec, 1.0, {-1.0}), std::invalid_argument);
}

TEST_CASE("quadratic interaction law is exact", "[quench]") {
  ModelParams p;
  p.L = 16;
  p.alpha = 0.5;
  p.M_alpha = -2.0;
  p.J = 1.0;
  p.sigma = 1.0;
  p.seed = 11;
  const auto spec = DisorderSpec::from_params(p, DisorderModel::independent, 0);
  auto s = eigensolve(sample_independent(p, spec), true);
  auto j = jomega_double_occupancy(build_fermi_sea(s, 8));
  const auto times = linspace(0.0, 10.0, 64);
  auto d1 = evolve_observable(j, 0.7, times);
  auto d2 = evolve_observable(j, 1.4, times);
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double r = (d2.values[k] - d2.reference_value) /
                     (d1.values[k] - d1.reference_value);
    CHECK(r == Catch::Approx(4.0).epsilon(1e-12));
  }
  // plateau: zero-frequency weight vanishes identically for these weights
  CHECK(d1.plateau_defined);
}

TEST_CASE("plateau equals the long-time average", "[quench]") {
  // multi-peak spectrum with min|omega| >= 0.5: time average over [50, 100]
  ExcitationSpectrum spec;
  spec.reference_value = 1.0;
  spec.peaks = {{0.7, -0.2}, {1.3, -0.05}, {2.9, 0.1}, {4.2, -0.03}};
  const double U = 1.0;
  auto times = linspace(50.0, 100.0, 20001);
  auto r = evolve_observable(spec, U, times);
  const double mean = pairwise_sum(r.values) / static_cast<double>(r.values.size());
  REQUIRE(r.plateau_defined);
  CHECK(mean == Catch::Approx(r.plateau).epsilon(0.01));
}

TEST_CASE("freezing: kac-on clean deviation shrinks as 1/L", "[quench][slow]") {
  const auto times = linspace(0.0, 10.0, 257);
  std::vector<double> logL, logdev;
  for (int L : {64, 256, 1024}) {
    ModelParams p = clean_params(L, 0.0, true);
    auto spec = jomega_momentum_clean(p, dispersion(p), L / 2);
    auto r = evolve_observable(spec, 2.0, times);
    double dev = 0.0;
    for (double v : r.values)
      dev = std::max(dev, std::abs(v - r.reference_value) / r.reference_value);
    logL.push_back(std::log((double)L));
    logdev.push_back(std::log(dev));
  }
  CHECK(fit_line(logL, logdev).slope == Catch::Approx(-1.0).margin(0.3));
}

TEST_CASE("ensemble mean and error", "[quench]") {
  ModelParams p;
  p.L = 8;
  p.alpha = 0.5;
  p.M_alpha = -2.0;
  p.J = 1.0;
  p.sigma = 1.0;
  p.U = 1.0;
  p.seed = 3;
  const auto times = linspace(0.0, 5.0, 33);
  // n = 1 equals the single run
  auto ens1 = ensemble_quench(p, DisorderModel::independent, 1, times);
  const auto spec = DisorderSpec::from_params(p, DisorderModel::independent, 0);
  auto s = eigensolve(sample_independent(p, spec), true);
  auto j = jomega_double_occupancy(build_fermi_sea(s, 4));
  auto single = evolve_observable(j, p.U, times);
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK(ens1.mean.values[k] == Catch::Approx(single.values[k]).margin(1e-13));
  // sigma = 0: zero standard error
  ModelParams pc = p;
  pc.sigma = 0.0;
  auto ens0 = ensemble_quench(pc, DisorderModel::independent, 4, times, 2);
  for (double se : ens0.mean.stderrs) CHECK(se == Catch::Approx(0.0).margin(1e-14));
  // workers do not change the result
  auto ser = ensemble_quench(p, DisorderModel::independent, 4, times, 1);
  auto par = ensemble_quench(p, DisorderModel::independent, 4, times, 4);
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK(ser.mean.values[k] == par.mean.values[k]);
}

TEST_CASE("averaged tier tracks the exact tier", "[quench][slow]") {
  // spec-pinned validation: <= 5% deviation at L = 2^6 over 8 realizations
  ModelParams p;
  p.L = 64;
  p.alpha = 0.5;
  p.M_alpha = -4.0 * M_PI;
  p.J = 1.0;
  p.sigma = 1.0;
  p.U = 1.0;
  p.seed = 5;
  const auto times = linspace(0.0, 10.0, 65);
  const int n_real = 8;
  std::vector<double> exact_mean(times.size(), 0.0), avg_mean(times.size(), 0.0);
  for (int r = 0; r < n_real; ++r) {
    const auto spec = DisorderSpec::from_params(p, DisorderModel::independent,
                                                static_cast<std::uint64_t>(r));
    const Eigen::MatrixXd m = sample_independent(p, spec);
    auto s = eigensolve(m, true);
    auto j = jomega_double_occupancy(build_fermi_sea(s, 32));
    auto ex = evolve_observable(j, p.U, times);
    Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(s.eigenvalues.data(), p.L);
    auto av = averaged_quench(e, 32, p.U, times);
    for (std::size_t k = 0; k < times.size(); ++k) {
      exact_mean[k] += ex.values[k] / n_real;
      avg_mean[k] += av.values[k] / n_real;
    }
  }
  // compare the drop profiles d(t) - d(0)
  double worst = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double de = exact_mean[k] - exact_mean[0];
    const double da = avg_mean[k] - avg_mean[0];
    worst = std::max(worst, std::abs(de - da));
    scale = std::max(scale, std::abs(de));
  }
  CHECK(worst <= 0.05 * scale);
}

TEST_CASE("combinatorial guard", "[quench]") {
  FermiSea<double> f;
  f.energies = Eigen::VectorXd::LinSpaced(256, -1.0, 1.0);
  f.orbitals = Eigen::MatrixXd::Identity(256, 256);
  f.filling = 128;
  CHECK_THROWS_AS(jomega_double_occupancy(f), std::invalid_argument);
}
