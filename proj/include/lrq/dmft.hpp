#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace lrq {

using cplx = std::complex<double>;

struct MatsubaraGrid {
  double beta = 64.0;
  int n_max = 512;

  MatsubaraGrid() = default;
  MatsubaraGrid(double beta_, int n_max_) : beta(beta_), n_max(n_max_) {
    if (beta <= 0.0 || n_max < 1)
      throw std::invalid_argument("MatsubaraGrid: beta > 0 and n_max >= 1 required");
  }

  double frequency(int n) const { return (2.0 * n + 1.0) * M_PI / beta; }
};

struct GreenFunction {
  MatsubaraGrid grid;
  std::vector<cplx> values;  // one per n = 0 .. n_max-1

  GreenFunction() = default;
  explicit GreenFunction(const MatsubaraGrid& g) : grid(g), values(g.n_max) {}
};

// The three density-of-states models whose Hilbert transforms and Weiss
// fields are checked: an isolated level plus an accumulation point (flat_lr),
// the pure semicircle, and the semicircle with discrete outliers (mixed).
struct FlatLRModel {
  double eps0 = 0.0;
  int N = 2;
};
struct SemicircleModel {
  double J = 1.0;
};
struct MixedModel {
  double J = 1.0;
  std::vector<double> outliers;
  int N = 2;
};
using DOSModel = std::variant<FlatLRModel, SemicircleModel, MixedModel>;

namespace dmft_detail {

// Branch of sqrt(xi^2 - 4J^2) for which (xi - s)/(2J^2) -> 1/xi at infinity:
// the root on the same side as xi.
inline cplx edge_sqrt(cplx xi, double J) {
  cplx s = std::sqrt(xi * xi - 4.0 * J * J);
  if ((std::conj(s) * xi).real() < 0.0) s = -s;
  return s;
}

}  // namespace dmft_detail

inline cplx hilbert_semicircle(cplx xi, double J) {
  if (J <= 0.0) throw std::invalid_argument("hilbert_semicircle: J > 0 required");
  if (xi.imag() == 0.0 && std::abs(xi.real()) < 2.0 * J)
    throw std::invalid_argument("hilbert_semicircle: real xi inside the support");
  return (xi - dmft_detail::edge_sqrt(xi, J)) / (2.0 * J * J);
}

// Hilbert transform rho~(xi) = int rho(e)/(xi - e) de for each DOS model.
// The mixed model normalizes total weight to one (bulk weight 1 - n_out/N);
// the supplement's literal expression weights the bulk by 1/N, which does not
// integrate to one against the outlier sum.
inline cplx hilbert_transform(const DOSModel& model, cplx xi) {
  return std::visit(
      [&](const auto& m) -> cplx {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, FlatLRModel>) {
          if (m.N < 2) throw std::invalid_argument("hilbert_transform: N >= 2");
          const double wN = static_cast<double>(m.N);
          return (1.0 / wN) / (xi - m.eps0) + ((wN - 1.0) / wN) / xi;
        } else if constexpr (std::is_same_v<T, SemicircleModel>) {
          return hilbert_semicircle(xi, m.J);
        } else {
          if (m.N < 2) throw std::invalid_argument("hilbert_transform: N >= 2");
          const double wN = static_cast<double>(m.N);
          const double bulk_weight = 1.0 - static_cast<double>(m.outliers.size()) / wN;
          cplx v = bulk_weight * hilbert_semicircle(xi, m.J);
          for (double lam : m.outliers) v += (1.0 / wN) / (xi - lam);
          return v;
        }
      },
      model);
}

// R[rho~(G)] = J^2 G + 1/G for the semicircle; the defining identity
// R[rho~(xi)] = xi holds on the image of the physical branch.
inline cplx reciprocal_semicircle(cplx g, double J = 1.0) {
  if (g == cplx(0.0, 0.0))
    throw std::invalid_argument("reciprocal_semicircle: g must be nonzero");
  return J * J * g + 1.0 / g;
}

// Weiss field of the isolated-level-plus-accumulation-point DOS, explicit
// closed form; the square-root sheet is fixed at every call by agreement with
// the large-N expansion (kac: i w + mu - (1/N) eps0/(eps0 G - 1); unscaled,
// eps0 -> N eps0: i w + mu - (1/(4N)) (eps0+1)^2/(eps0 G^2)).
inline cplx weiss_field_flat(cplx G, double eps0, int N, double mu, double omega,
                             bool kac = true) {
  if (N < 2) throw std::invalid_argument("weiss_field_flat: N >= 2");
  if (G == cplx(0.0, 0.0)) throw std::invalid_argument("weiss_field_flat: G != 0");
  const double e0 = kac ? eps0 : eps0 * static_cast<double>(N);
  const double wN = static_cast<double>(N);
  const cplx base = cplx(mu, omega) + 1.0 / G;
  const cplx a = wN + e0 + e0 * wN * G;
  const cplx b2 = (e0 - wN + e0 * wN * G) * (e0 - wN + e0 * wN * G) + 4.0 * e0 * wN;
  const cplx root = std::sqrt(b2);
  const cplx cand1 = base - (a - root) / (2.0 * wN * G);
  const cplx cand2 = base - (a + root) / (2.0 * wN * G);
  cplx target;
  if (kac) {
    target = cplx(mu, omega) - (1.0 / wN) * e0 / (e0 * G - 1.0);
  } else {
    target = cplx(mu, omega) - (1.0 / (4.0 * wN)) * (eps0 + 1.0) * (eps0 + 1.0) /
                                   (eps0 * G * G);
  }
  const cplx pick = std::abs(cand1 - target) <= std::abs(cand2 - target) ? cand1 : cand2;
  // expansion agreement is the branch certificate; at huge N a mismatch means
  // the wrong sheet
  if (N >= 4096) {
    const double rel = std::abs(pick - target) / std::max(1.0, std::abs(target));
    if (rel > 1e-3)
      throw std::runtime_error("weiss_field_flat: branch selection failed (residual " +
                               std::to_string(rel) + ")");
  }
  return pick;
}

inline cplx weiss_field_semicircle(cplx G, double J, double mu, double omega) {
  return cplx(mu, omega) - J * J * G;
}

struct NewtonFailure : std::runtime_error {
  cplx G, last_xi;
  double residual;
  NewtonFailure(cplx G_, cplx xi_, double res)
      : std::runtime_error("weiss_field_mixed: Newton inversion failed (residual " +
                           std::to_string(res) + ")"),
        G(G_), last_xi(xi_), residual(res) {}
};

// Inverts xi -> hilbert_transform(mixed, xi) by Newton iteration from the
// semicircle closed form, then assembles G0^-1 = i w + mu + 1/G - R_mixed[G].
inline cplx invert_mixed_hilbert(const MixedModel& m, cplx G, double tol = 1e-10,
                                 int max_iter = 100) {
  cplx xi = reciprocal_semicircle(G, m.J);
  for (int it = 0; it < max_iter; ++it) {
    const cplx f = hilbert_transform(DOSModel(m), xi) - G;
    if (std::abs(f) <= tol) return xi;
    // derivative of the mixed transform
    const double wN = static_cast<double>(m.N);
    const double bulk_weight = 1.0 - static_cast<double>(m.outliers.size()) / wN;
    const cplx s = dmft_detail::edge_sqrt(xi, m.J);
    cplx df = bulk_weight * (1.0 - xi / s) / (2.0 * m.J * m.J);
    for (double lam : m.outliers) df -= (1.0 / wN) / ((xi - lam) * (xi - lam));
    xi -= f / df;
  }
  const double res = std::abs(hilbert_transform(DOSModel(m), xi) - G);
  if (res <= tol) return xi;
  throw NewtonFailure(G, xi, res);
}

inline cplx weiss_field_mixed(cplx G, const MixedModel& m, double mu, double omega) {
  if (m.N < 2) throw std::invalid_argument("weiss_field_mixed: N >= 2");
  const cplx xi = invert_mixed_hilbert(m, G);
  return cplx(mu, omega) + 1.0 / G - xi;
}

// Sigma = G0^-1 - G^-1 pointwise on a shared grid.
inline GreenFunction self_energy(const GreenFunction& G0, const GreenFunction& G) {
  if (G0.grid.beta != G.grid.beta || G0.grid.n_max != G.grid.n_max)
    throw std::invalid_argument("self_energy: Matsubara grids differ");
  GreenFunction sigma(G.grid);
  for (std::size_t n = 0; n < sigma.values.size(); ++n) {
    if (G0.values[n] == cplx(0.0, 0.0) || G.values[n] == cplx(0.0, 0.0))
      throw std::invalid_argument("self_energy: zero Green-function value at n = " +
                                  std::to_string(n));
    sigma.values[n] = 1.0 / G0.values[n] - 1.0 / G.values[n];
  }
  return sigma;
}

}  // namespace lrq
