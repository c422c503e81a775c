#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace lrq {

// Physical parameters of the long-range Fermi-Hubbard chain. The paper uses
// both N and L for the site count; this codebase uses L everywhere.
struct ModelParams {
  int L = 8;               // site count, even and >= 4
  double alpha = 0.5;      // power-law exponent of the hopping envelope
  double M_alpha = 1.0;    // mean hopping scale
  double J = 1.0;          // semicircle radius parameter (bulk radius is 2*J*sigma)
  double sigma = 0.0;      // dimensionless disorder strength; 0 = clean
  double U = 0.0;          // on-site interaction
  double mu = 0.0;         // chemical potential
  bool kac = true;         // Kac rescaling of the mean hopping profile
  std::uint64_t seed = 1;

  void validate() const {
    if (L < 4 || L % 2 != 0)
      throw std::invalid_argument("ModelParams: L must be even and >= 4");
    if (alpha < 0.0) throw std::invalid_argument("ModelParams: alpha must be >= 0");
    if (sigma < 0.0) throw std::invalid_argument("ModelParams: sigma must be >= 0");
  }

  void require_semicircle_scale() const {
    if (J <= 0.0) throw std::invalid_argument("ModelParams: J must be > 0 here");
  }

  void require_strong_long_range() const {
    if (alpha >= 1.0)
      throw std::invalid_argument("ModelParams: operation requires alpha < 1");
  }
};

// Kac factor c_alpha = (1-alpha) * 2^(1-alpha) * L^(alpha-1) when enabled,
// 1 otherwise. Rejected for alpha >= 1 with the flag on: the formula vanishes
// or changes sign there, outside the regime it is meant for.
inline double kac_factor(double alpha, int L, bool kac) {
  if (!kac) return 1.0;
  if (alpha < 0.0 || alpha >= 1.0)
    throw std::invalid_argument("kac_factor: kac rescaling requires 0 <= alpha < 1");
  return (1.0 - alpha) * std::pow(2.0, 1.0 - alpha) *
         std::pow(static_cast<double>(L), alpha - 1.0);
}

// Clean single-particle energies of the long-range hopping chain,
//   eps_n = -c_alpha * sum_{r=1}^{L/2} cos(2 pi n r / L) / r^alpha,
// tabulated for every mode n in (-L/2, L/2]. The finite sum is normative;
// the integral form is only a large-L approximation. Energies exclude the
// M_alpha factor: physical mode energies are mu + M_alpha * eps_n.
struct DispersionTable {
  int L = 0;
  double alpha = 0.0;
  bool kac_applied = false;
  std::vector<double> eps;  // index i holds mode n = i - L/2 + 1

  int min_mode() const { return -L / 2 + 1; }
  int max_mode() const { return L / 2; }

  double at(int n) const {
    const int i = n - min_mode();
    if (i < 0 || i >= static_cast<int>(eps.size()))
      throw std::out_of_range("DispersionTable: mode index out of range");
    return eps[static_cast<std::size_t>(i)];
  }

  std::vector<double> sorted() const {
    std::vector<double> s = eps;
    std::sort(s.begin(), s.end());
    return s;
  }
};

inline DispersionTable dispersion(const ModelParams& p) {
  p.validate();
  const double c = kac_factor(p.alpha, p.L, p.kac);
  DispersionTable t;
  t.L = p.L;
  t.alpha = p.alpha;
  t.kac_applied = p.kac;
  t.eps.resize(static_cast<std::size_t>(p.L));
  const double two_pi_over_L = 2.0 * M_PI / static_cast<double>(p.L);
  for (int n = t.min_mode(); n <= t.max_mode(); ++n) {
    double s = 0.0;
    for (int r = 1; r <= p.L / 2; ++r) {
      s += std::cos(two_pi_over_L * n * r) / std::pow(static_cast<double>(r), p.alpha);
    }
    t.eps[static_cast<std::size_t>(n - t.min_mode())] = -c * s;
  }
  return t;
}

// Bond weight making the circulant's spectrum reproduce the dispersion sum
// exactly: each distance d < L/2 appears twice per row while the cosine sum
// counts it once, so those bonds carry weight 1/2; the antipodal bond d = L/2
// appears once and carries weight 1.
inline double bond_weight(int dist, int L) { return dist == L / 2 ? 1.0 : 0.5; }

// Clean (sigma -> 0) hopping matrix: symmetric circulant with
// entry(i,j) = -c_alpha * M_alpha * w(d) / d^alpha at periodic distance d,
// mu on the diagonal. Its eigenvalues equal {mu + M_alpha * eps_n} exactly.
inline Eigen::MatrixXd build_clean_hopping_matrix(const ModelParams& p) {
  p.validate();
  const double c = kac_factor(p.alpha, p.L, p.kac);
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(p.L, p.L, 0.0);
  for (int d = 1; d <= p.L / 2; ++d) {
    const double v = -c * p.M_alpha * bond_weight(d, p.L) /
                     std::pow(static_cast<double>(d), p.alpha);
    for (int i = 0; i < p.L; ++i) {
      const int j = (i + d) % p.L;
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  m.diagonal().setConstant(p.mu);
  return m;
}

struct HalfFillingMu {
  double mu = 0.0;
  bool degenerate = false;
};

// Half-filling chemical potential: midpoint of the two middle levels so that
// exactly L/2 levels lie below it. A degenerate Fermi level returns the
// common value with the flag set; occupation then proceeds lowest-index-first.
inline HalfFillingMu half_filling_mu(const std::vector<double>& sorted_spectrum) {
  const std::size_t n = sorted_spectrum.size();
  if (n < 2 || n % 2 != 0)
    throw std::invalid_argument("half_filling_mu: spectrum length must be even and >= 2");
  if (!std::is_sorted(sorted_spectrum.begin(), sorted_spectrum.end()))
    throw std::invalid_argument("half_filling_mu: spectrum must be sorted ascending");
  const double lo = sorted_spectrum[n / 2 - 1];
  const double hi = sorted_spectrum[n / 2];
  HalfFillingMu out;
  out.degenerate = (lo == hi);
  out.mu = out.degenerate ? lo : 0.5 * (lo + hi);
  return out;
}

}  // namespace lrq
