#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lrq/ed_oracle.hpp"
#include "lrq/fidelity.hpp"
#include "lrq/model.hpp"
#include "lrq/util.hpp"

using namespace lrq;

namespace {
ModelParams fid_params(int L, double M0) {
  ModelParams p;
  p.L = L;
  p.alpha = 0.5;
  p.M_alpha = M0;
  p.J = 1.0;
  p.sigma = 1.0;
  p.kac = true;
  p.seed = 17;
  return p;
}
}  // namespace

TEST_CASE("paired spectra bookkeeping", "[fidelity]") {
  // M_alpha = 0: nothing is modified
  ModelParams p0 = fid_params(16, 0.0);
  auto spec = DisorderSpec::from_params(p0, DisorderModel::independent, 0);
  auto pair0 = paired_spectra(p0, spec);
  CHECK(pair0.trivial);
  CHECK(pair0.modified_indices.empty());

  // M0 = -2pi, L = 64: modified count equals the predicted outlier count
  ModelParams p = fid_params(64, -2.0 * M_PI);
  auto spec64 = DisorderSpec::from_params(p, DisorderModel::independent, 0);
  auto pair = paired_spectra(p, spec64);
  auto pred = predicted_dos(p, dispersion(p));
  CHECK(pair.modified_indices.size() == pred.outliers.size());
  CHECK_FALSE(pair.trivial);
  CHECK(std::is_sorted(pair.eps.begin(), pair.eps.end()));
  CHECK(std::is_sorted(pair.eps_prime.begin(), pair.eps_prime.end()));
  // unmodified levels agree
  std::vector<char> mod(pair.eps.size(), 0);
  for (int k : pair.modified_indices) mod[(std::size_t)k] = 1;
  for (std::size_t k = 0; k < pair.eps.size(); ++k)
    if (!mod[k]) CHECK(pair.eps[k] == pair.eps_prime[k]);
}

TEST_CASE("fidelity trivial limits", "[fidelity]") {
  ModelParams p = fid_params(16, -2.0 * M_PI);
  auto spec = DisorderSpec::from_params(p, DisorderModel::independent, 1);
  auto pair = paired_spectra(p, spec);
  const auto times = linspace(0.0, 8.0, 33);

  // t = 0 and U -> 0
  for (auto tier : {0, 1}) {
    auto res = tier == 0 ? fidelity_series_exact(pair, 1.0, times)
                         : fidelity_series_averaged(pair, 1.0, times);
    CHECK(res.values.front() == 1.0);
    auto res0 = tier == 0 ? fidelity_series_exact(pair, 0.0, times)
                          : fidelity_series_averaged(pair, 0.0, times);
    for (double v : res0.values) CHECK(v == 1.0);
    // raw 1 - F never significantly negative
    for (double raw : res.raw) CHECK(raw <= 1.0 + 1e-10);
  }

  // eps == eps_prime: every bracket cancels identically
  SpectrumPair same = pair;
  same.eps_prime = same.eps;
  same.modified_indices.clear();
  same.trivial = true;
  auto res = fidelity_series_exact(same, 1.0, times);
  for (double v : res.values) CHECK(v == 1.0);
}

TEST_CASE("swapping the spectra leaves F invariant", "[fidelity]") {
  ModelParams p = fid_params(16, -2.0 * M_PI);
  auto spec = DisorderSpec::from_params(p, DisorderModel::independent, 2);
  auto pair = paired_spectra(p, spec);
  SpectrumPair swapped = pair;
  std::swap(swapped.eps, swapped.eps_prime);
  const auto times = linspace(0.0, 8.0, 17);
  auto a = fidelity_series_exact(pair, 0.5, times);
  auto b = fidelity_series_exact(swapped, 0.5, times);
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK(a.raw[k] == Catch::Approx(b.raw[k]).margin(1e-12));
}

TEST_CASE("second order matches exact evolution at L = 4", "[fidelity][oracle]") {
  // shared-eigenvector construction, both many-body Hamiltonians explicit
  const int L = 4;
  ModelParams p = fid_params(L, -2.0 * M_PI);
  auto dspec = DisorderSpec::from_params(p, DisorderModel::independent, 3);
  ModelParams p0 = p;
  p0.M_alpha = 0.0;
  const Eigen::MatrixXd m0 = sample_independent(p0, dspec);
  auto s = eigensolve(m0, true);

  SpectrumPair pair;
  pair.eps = s.eigenvalues;
  pair.eps_prime = s.eigenvalues;
  pair.orbitals = *s.eigenvectors;
  pair.filling = 2;
  // move the top level by hand (a definite, well-separated modification)
  pair.eps_prime[3] += 1.3;
  pair.modified_indices = {3};

  const auto times = linspace(0.0, 10.0, 101);
  const Eigen::MatrixXd& a = pair.orbitals;
  auto basis = make_basis(L, 2, 2);
  const Eigen::VectorXd psi0 = slater_determinant_state(a.leftCols(2), basis);

  auto exact_error = [&](double U) {
    Eigen::VectorXd e0 = Eigen::Map<const Eigen::VectorXd>(pair.eps.data(), L);
    Eigen::VectorXd e1 = Eigen::Map<const Eigen::VectorXd>(pair.eps_prime.data(), L);
    const Eigen::MatrixXd h0 = a * e0.asDiagonal() * a.transpose();
    const Eigen::MatrixXd h1 = a * e1.asDiagonal() * a.transpose();
    const Eigen::MatrixXd H0 = build_many_body_hamiltonian(h0, U, basis);
    const Eigen::MatrixXd Ha = build_many_body_hamiltonian(h1, U, basis);
    const auto fed = exact_fidelity(psi0, H0, Ha, times);
    const auto fpt = fidelity_series_exact(pair, U, times);
    double mx = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k)
      mx = std::max(mx, std::abs(fed[k] - fpt.raw[k]));
    return mx;
  };

  const double e_hi = exact_error(0.05);
  const double e_lo = exact_error(0.025);
  // 1 - F starts at U^2; the perturbative error is O(U^3), so halving U
  // should cut the deviation by at least ~6
  CHECK(e_hi / e_lo >= 6.0);
}

TEST_CASE("averaged tier approximates the exact tier", "[fidelity][slow]") {
  ModelParams p = fid_params(64, -2.0 * M_PI);
  const auto times = linspace(0.0, 10.0, 65);
  double worst_ratio = 0.0;
  for (int r = 0; r < 2; ++r) {
    auto spec = DisorderSpec::from_params(p, DisorderModel::independent,
                                          static_cast<std::uint64_t>(r));
    auto pair = paired_spectra(p, spec);
    auto ex = fidelity_series_exact(pair, 1.0, times);
    auto av = fidelity_series_averaged(pair, 1.0, times);
    double mex = 0.0, mav = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      mex = std::max(mex, 1.0 - ex.raw[k]);
      mav = std::max(mav, 1.0 - av.raw[k]);
    }
    worst_ratio = std::max(worst_ratio, std::max(mex / mav, mav / mex));
  }
  // moment substitution is a leading-order approximation; the scale must match
  CHECK(worst_ratio < 2.0);
}

TEST_CASE("porter-thomas law", "[fidelity]") {
  // normalization, mean, second moment by quadrature over (0, 60]
  const int n = 600000;
  const double h = 60.0 / n;
  double norm = 0.0, mean = 0.0, second = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = (i + 0.5) * h;
    const double f = porter_thomas_pdf(z) * h;
    norm += f;
    mean += z * f;
    second += z * z * f;
  }
  CHECK(norm == Catch::Approx(1.0).margin(1e-6));
  CHECK(mean == Catch::Approx(1.0).margin(1e-6));
  CHECK(second == Catch::Approx(3.0).margin(1e-5));
  CHECK_THROWS_AS(porter_thomas_pdf(0.0), std::invalid_argument);

  // sampled z = L |a|^2 against the limit CDF
  auto z = sample_unit_vector_component(1024, 100000, 99);
  double zm = 0.0;
  for (double v : z) zm += v;
  CHECK(zm / z.size() == Catch::Approx(1.0).margin(0.02));
  CHECK(ks_distance(z, porter_thomas_cdf) < 0.01);

  // L = 3 exact law by quadrature of the Beta(1/2, 1) density
  auto z3 = sample_unit_vector_component(3, 100000, 7);
  auto cdf3 = [&](double zz) {
    const double y = zz / 3.0;
    const int m = 2000;
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += unit_component_pdf((i + 0.5) * y / m, 3) * y / m;
    return acc;
  };
  CHECK(ks_distance(z3, cdf3) < 0.02);
}
