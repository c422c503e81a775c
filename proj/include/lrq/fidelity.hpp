#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lrq/disorder.hpp"
#include "lrq/model.hpp"
#include "lrq/rng.hpp"
#include "lrq/spectral.hpp"
#include "lrq/util.hpp"

namespace lrq {

// Two spectra sharing one eigenvector set: eps from the pure random matrix
// (M_alpha = 0), eps_prime with the levels predicted to leave the semicircle
// moved to their Eq.-(3)-type positions lambda_n. Comparing independently
// sampled eigenvector sets instead would hit the orthogonality catastrophe.
struct SpectrumPair {
  std::vector<double> eps;        // ascending
  std::vector<double> eps_prime;  // differs from eps on modified_indices only
  Eigen::MatrixXd orbitals;       // shared eigenvectors, columns ordered as eps
  std::vector<int> modified_indices;
  int filling = 0;
  bool trivial = false;  // no modified levels: F == 1 identically
};

// Builds the pair: diagonalize one M_alpha = 0 independent-disorder sample,
// then move the most extreme levels to the predicted outlier positions.
// Positive outliers replace the top levels (largest first), negative ones the
// bottom levels, which keeps eps_prime sorted whenever the outliers clear the
// bulk edge; which levels move, and to where, is this artifact's
// operationalization of "only the levels outside the semicircle differ".
inline SpectrumPair paired_spectra(const ModelParams& p, const DisorderSpec& spec) {
  p.validate();
  p.require_semicircle_scale();
  if (spec.model != DisorderModel::independent)
    throw std::invalid_argument("paired_spectra: model must be independent");

  ModelParams p0 = p;
  p0.M_alpha = 0.0;
  const Eigen::MatrixXd m = sample_independent(p0, spec);
  SpectrumResult s = eigensolve(m, true, "paired_spectra");

  SpectrumPair pair;
  pair.eps = s.eigenvalues;
  pair.eps_prime = s.eigenvalues;
  pair.orbitals = *s.eigenvectors;
  pair.filling = p.L / 2;

  const PredictedDOS pred = predicted_dos(p, dispersion(p));
  std::vector<double> lam_pos, lam_neg;
  for (const auto& o : pred.outliers) {
    (o.lambda >= 0.0 ? lam_pos : lam_neg).push_back(o.lambda);
  }
  std::sort(lam_pos.begin(), lam_pos.end());
  std::sort(lam_neg.begin(), lam_neg.end());

  const int L = p.L;
  for (std::size_t k = 0; k < lam_pos.size(); ++k) {
    const int idx = L - 1 - static_cast<int>(lam_pos.size() - 1 - k);
    pair.eps_prime[static_cast<std::size_t>(idx)] = lam_pos[k];
    pair.modified_indices.push_back(idx);
  }
  for (std::size_t k = 0; k < lam_neg.size(); ++k) {
    pair.eps_prime[k] = lam_neg[k];
    pair.modified_indices.push_back(static_cast<int>(k));
  }
  std::sort(pair.modified_indices.begin(), pair.modified_indices.end());
  pair.trivial = pair.modified_indices.empty();
  return pair;
}

struct FidelityResult {
  std::vector<double> times;
  std::vector<double> values;     // clamped to [0, 1]
  std::vector<double> raw;        // perturbative values before clamping
  bool trivial = false;
  std::uint64_t seed = 0;
};

namespace fidelity_detail {

// f(omega, t) = int_0^t e^{i omega s} ds; the second-order bracket for a
// transition whose unprimed/primed energies are (w, wp) is |f(w) - f(wp)|^2/4,
// identically zero when w == wp, t^2-limited at zero denominators.
inline std::complex<double> f_kernel(double omega, double t) {
  if (std::abs(omega) * t < 1e-8) {
    // series: t + i omega t^2/2 - ...
    return {t, 0.5 * omega * t * t};
  }
  const std::complex<double> num =
      std::complex<double>(std::cos(omega * t) - 1.0, std::sin(omega * t));
  return num / std::complex<double>(0.0, omega);
}

inline double bracket(double w, double wp, double t) {
  if (w == wp) return 0.0;
  const std::complex<double> d = f_kernel(w, t) - f_kernel(wp, t);
  return 0.25 * std::norm(d);
}

}  // namespace fidelity_detail

// Second-order fidelity with explicit eigenvector amplitudes:
//   1 - F(t) = 4U^2 [ 2 sum_{l1 unocc, l2 occ} |S_{l1 l2}|^2 B(D, D')
//                   + sum_{quads} |V_m|^2 B(W, W') ],
//   S_{l1 l2} = sum_i a_{i,l1} a_{i,l2} rho_i   (one pair, spectator sea),
//   V_m      = sum_i a_{i,l1} a_{i,l2} a_{i,l3} a_{i,l4} (one pair per spin),
// where D = e_{l1}-e_{l2}, W = e_{l1}-e_{l2}+e_{l3}-e_{l4} and primes use
// eps_prime. B(x, x) = 0, so only transitions touching a modified level
// contribute; the sums below skip everything else.
inline FidelityResult fidelity_series_exact(const SpectrumPair& pair, double U,
                                            const std::vector<double>& times) {
  using fidelity_detail::bracket;
  const int L = static_cast<int>(pair.eps.size());
  const int nocc = pair.filling;
  const int nuno = L - nocc;
  for (double t : times)
    if (t < 0.0) throw std::invalid_argument("fidelity_series_exact: times >= 0");
  if (pair.orbitals.rows() != L || pair.orbitals.cols() != L)
    throw std::invalid_argument("fidelity_series_exact: coefficient shape mismatch");

  std::vector<char> modified(static_cast<std::size_t>(L), 0);
  for (int k : pair.modified_indices) modified[static_cast<std::size_t>(k)] = 1;

  Eigen::VectorXd rho = Eigen::VectorXd::Zero(L);
  for (int i = 0; i < L; ++i)
    for (int l = 0; l < nocc; ++l) rho(i) += pair.orbitals(i, l) * pair.orbitals(i, l);

  FidelityResult res;
  res.times = times;
  res.trivial = pair.trivial;
  res.raw.assign(times.size(), 0.0);

  if (!pair.trivial) {
    // single-pair terms (factor 2 for the two spin species)
    for (int u = nocc; u < L; ++u)
      for (int o = 0; o < nocc; ++o) {
        if (!modified[static_cast<std::size_t>(u)] && !modified[static_cast<std::size_t>(o)])
          continue;
        double S = 0.0;
        for (int i = 0; i < L; ++i)
          S += pair.orbitals(i, u) * pair.orbitals(i, o) * rho(i);
        const double S2 = 2.0 * S * S;
        const double w = pair.eps[static_cast<std::size_t>(u)] -
                         pair.eps[static_cast<std::size_t>(o)];
        const double wp = pair.eps_prime[static_cast<std::size_t>(u)] -
                          pair.eps_prime[static_cast<std::size_t>(o)];
        for (std::size_t k = 0; k < times.size(); ++k)
          res.raw[k] += S2 * bracket(w, wp, times[k]);
      }

    // two-pair terms: skip quadruples with no modified member
    const int npair = nuno * nocc;
    Eigen::MatrixXd P(L, npair);
    std::vector<double> w_pair(static_cast<std::size_t>(npair)),
        wp_pair(static_cast<std::size_t>(npair));
    std::vector<char> pair_mod(static_cast<std::size_t>(npair), 0);
    for (int u = 0; u < nuno; ++u)
      for (int o = 0; o < nocc; ++o) {
        const int c = u * nocc + o;
        for (int i = 0; i < L; ++i)
          P(i, c) = pair.orbitals(i, nocc + u) * pair.orbitals(i, o);
        w_pair[static_cast<std::size_t>(c)] =
            pair.eps[static_cast<std::size_t>(nocc + u)] - pair.eps[static_cast<std::size_t>(o)];
        wp_pair[static_cast<std::size_t>(c)] =
            pair.eps_prime[static_cast<std::size_t>(nocc + u)] -
            pair.eps_prime[static_cast<std::size_t>(o)];
        pair_mod[static_cast<std::size_t>(c)] =
            modified[static_cast<std::size_t>(nocc + u)] || modified[static_cast<std::size_t>(o)];
      }
    for (int a = 0; a < npair; ++a) {
      for (int b = 0; b < npair; ++b) {
        const bool touched = pair_mod[static_cast<std::size_t>(a)] ||
                             pair_mod[static_cast<std::size_t>(b)];
        if (!touched) continue;
        const double w = w_pair[static_cast<std::size_t>(a)] + w_pair[static_cast<std::size_t>(b)];
        const double wp =
            wp_pair[static_cast<std::size_t>(a)] + wp_pair[static_cast<std::size_t>(b)];
        if (w == wp) continue;
        const double V = P.col(a).dot(P.col(b));
        const double V2 = V * V;
        for (std::size_t k = 0; k < times.size(); ++k)
          res.raw[k] += V2 * bracket(w, wp, times[k]);
      }
    }
  }

  res.values.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    res.raw[k] = 1.0 - 4.0 * U * U * res.raw[k];
    res.values[k] = std::clamp(res.raw[k], 0.0, 1.0);
  }
  return res;
}

// Averaged-coefficient tier. Amplitude products become random-unit-vector
// ensemble moments: <|V|^2> = 1/L^3 for the two-pair element, and
// <|S|^2> = 1/(2 L^2) for the single-pair one, where column orthogonality
// cancels the mean-field part of S exactly and the row-normalization
// constraint halves the residual variance (checked against sampled
// eigenvector statistics). With a constant <|V|^2> the two-pair sum runs over
// ALL quadruples, the untouched ones contributing zero through
// B(W, W) = 0, and collapses to a two-dimensional time integral:
//   sum_m |f(W_m) - f(W'_m)|^2 =
//       int_0^t int_0^t [ A(s-s')^2 + A'(s-s')^2 - B(s,s')^2 - B~(s,s')^2 ] ds ds'
// with A(tau) = Pu(tau) conj(Po(tau)), Pu/Po the unoccupied/occupied phase
// sums, B(s,s') the mixed unprimed/primed correlator, and B~ its primed twin.
// A - B has only modified-level terms, so the cancellation between the large
// A^2 and B^2 pieces is done analytically and the integrand costs O(n_mod).
// The integral is evaluated by incremental trapezoid prefix sums on a uniform
// grid and interpolated to the requested times.
inline FidelityResult fidelity_series_averaged(const SpectrumPair& pair, double U,
                                               const std::vector<double>& times) {
  using fidelity_detail::bracket;
  using cplx = std::complex<double>;
  const int L = static_cast<int>(pair.eps.size());
  const int nocc = pair.filling;
  double t_max = 0.0;
  for (double t : times) {
    if (t < 0.0) throw std::invalid_argument("fidelity_series_averaged: times >= 0");
    t_max = std::max(t_max, t);
  }

  FidelityResult res;
  res.times = times;
  res.trivial = pair.trivial;
  res.raw.assign(times.size(), 0.0);

  std::vector<char> modified(static_cast<std::size_t>(L), 0);
  for (int k : pair.modified_indices) modified[static_cast<std::size_t>(k)] = 1;

  if (!pair.trivial && t_max > 0.0) {
    const double s2_avg = 0.5 / (static_cast<double>(L) * L);
    const double v2_avg = 1.0 / (static_cast<double>(L) * L * L);

    // single-pair terms, directly at the requested times
    for (int u = nocc; u < L; ++u)
      for (int o = 0; o < nocc; ++o) {
        if (!modified[static_cast<std::size_t>(u)] && !modified[static_cast<std::size_t>(o)])
          continue;
        const double w = pair.eps[static_cast<std::size_t>(u)] -
                         pair.eps[static_cast<std::size_t>(o)];
        const double wp = pair.eps_prime[static_cast<std::size_t>(u)] -
                          pair.eps_prime[static_cast<std::size_t>(o)];
        for (std::size_t k = 0; k < times.size(); ++k)
          res.raw[k] += 2.0 * s2_avg * bracket(w, wp, times[k]);
      }

    // two-pair sum via the quadrature above
    double e_span = 0.0;
    for (int l = 0; l < L; ++l) {
      e_span = std::max(e_span, std::abs(pair.eps[static_cast<std::size_t>(l)]));
      e_span = std::max(e_span, std::abs(pair.eps_prime[static_cast<std::size_t>(l)]));
    }
    const double w_axis = 2.0 * e_span;  // per-axis frequency bound of the integrand
    int steps = static_cast<int>(std::ceil(t_max * w_axis / (2.0 * M_PI) * 24.0));
    steps = std::clamp(steps, 512, 16384);
    const int ng = steps + 1;
    const double h = t_max / steps;

    std::vector<int> mod_list(pair.modified_indices.begin(), pair.modified_indices.end());
    const int nm = static_cast<int>(mod_list.size());

    // per-node phase tables; full sums and modified-only sums
    std::vector<cplx> Pu(ng), Po(ng), Pu_p(ng), Po_p(ng);
    Eigen::MatrixXcd ph_mod(ng, nm), ph_mod_p(ng, nm);
    for (int j = 0; j < ng; ++j) {
      const double s = h * j;
      cplx pu(0, 0), po(0, 0), pup(0, 0), pop(0, 0);
      for (int l = 0; l < L; ++l) {
        const cplx e = std::polar(1.0, pair.eps[static_cast<std::size_t>(l)] * s);
        const cplx ep = std::polar(1.0, pair.eps_prime[static_cast<std::size_t>(l)] * s);
        if (l < nocc) {
          po += e;
          pop += ep;
        } else {
          pu += e;
          pup += ep;
        }
      }
      Pu[static_cast<std::size_t>(j)] = pu;
      Po[static_cast<std::size_t>(j)] = po;
      Pu_p[static_cast<std::size_t>(j)] = pup;
      Po_p[static_cast<std::size_t>(j)] = pop;
      for (int m = 0; m < nm; ++m) {
        const int l = mod_list[static_cast<std::size_t>(m)];
        ph_mod(j, m) = std::polar(1.0, pair.eps[static_cast<std::size_t>(l)] * s);
        ph_mod_p(j, m) = std::polar(1.0, pair.eps_prime[static_cast<std::size_t>(l)] * s);
      }
    }
    std::vector<char> mod_is_occ(static_cast<std::size_t>(nm), 0);
    for (int m = 0; m < nm; ++m)
      mod_is_occ[static_cast<std::size_t>(m)] = mod_list[static_cast<std::size_t>(m)] < nocc;

    // N(s_r, s_c), real part; stable differences carry only modified levels
    auto integrand = [&](int r, int c) {
      const int dj = std::abs(r - c);
      cplx pu_t = (r >= c) ? Pu[dj] : std::conj(Pu[dj]);
      cplx po_t = (r >= c) ? Po[dj] : std::conj(Po[dj]);
      cplx pu_tp = (r >= c) ? Pu_p[dj] : std::conj(Pu_p[dj]);
      cplx po_tp = (r >= c) ? Po_p[dj] : std::conj(Po_p[dj]);
      // modified-level corrections: d_u = sum_mod e^{i e s} conj-parts etc.
      cplx du(0, 0), do_(0, 0), dup(0, 0), dop(0, 0);
      cplx mu(0, 0), mo(0, 0), mup(0, 0), mop(0, 0);
      for (int m = 0; m < nm; ++m) {
        const cplx tau_term = (r >= c)
            ? ph_mod(dj, m)
            : std::conj(ph_mod(dj, m));
        const cplx tau_term_p = (r >= c)
            ? ph_mod_p(dj, m)
            : std::conj(ph_mod_p(dj, m));
        const cplx mixed = ph_mod(r, m) * std::conj(ph_mod_p(c, m));
        const cplx mixed_sw = ph_mod_p(r, m) * std::conj(ph_mod(c, m));
        if (mod_is_occ[static_cast<std::size_t>(m)]) {
          do_ += tau_term;
          dop += tau_term_p;
          mo += mixed;
          mop += mixed_sw;
        } else {
          du += tau_term;
          dup += tau_term_p;
          mu += mixed;
          mup += mixed_sw;
        }
      }
      // Mu = Pu - du + mu, etc.; A - B = (Pu - Mu) conj(Po) + Mu conj(Po - Mo)
      const cplx Mu = pu_t - du + mu;
      const cplx Mo = po_t - do_ + mo;
      const cplx Mu_p = pu_tp - dup + mup;
      const cplx Mo_p = po_tp - dop + mop;
      const cplx A = pu_t * std::conj(po_t);
      const cplx Ap = pu_tp * std::conj(po_tp);
      const cplx B = Mu * std::conj(Mo);
      const cplx Bp = Mu_p * std::conj(Mo_p);
      const cplx AmB = (pu_t - Mu) * std::conj(po_t) + Mu * (std::conj(po_t) - std::conj(Mo));
      const cplx ApmBp =
          (pu_tp - Mu_p) * std::conj(po_tp) + Mu_p * (std::conj(po_tp) - std::conj(Mo_p));
      return (AmB * (A + B) + ApmBp * (Ap + Bp)).real();
    };

    // Incremental square prefix with trapezoid edge weights. Re N is
    // symmetric in (r,c), so the j-th row and column sums coincide.
    std::vector<double> T(static_cast<std::size_t>(ng), 0.0);
    const double n00 = integrand(0, 0);
    double inner = n00;  // plain sum over r,c <= j
    double row0 = n00;   // sum over c <= j of N(0,c)
    std::vector<double> rowbuf;
    for (int j = 1; j < ng; ++j) {
      rowbuf.resize(static_cast<std::size_t>(j) + 1);
      double rowsum = 0.0;
      for (int c = 0; c <= j; ++c) {
        rowbuf[static_cast<std::size_t>(c)] = integrand(j, c);
        rowsum += rowbuf[static_cast<std::size_t>(c)];
      }
      inner += 2.0 * rowsum - rowbuf[static_cast<std::size_t>(j)];
      row0 += rowbuf[0];  // N(0,j) = N(j,0)
      const double njj = rowbuf[static_cast<std::size_t>(j)];
      const double n0j = rowbuf[0];
      T[static_cast<std::size_t>(j)] =
          h * h * (inner - row0 - rowsum + 0.25 * (n00 + 2.0 * n0j + njj));
    }

    for (std::size_t k = 0; k < times.size(); ++k) {
      const double t = times[k];
      const double x = t / h;
      const int j0 = std::clamp(static_cast<int>(std::floor(x)), 0, ng - 1);
      const int j1 = std::min(j0 + 1, ng - 1);
      const double frac = x - j0;
      const double Tt = T[static_cast<std::size_t>(j0)] * (1.0 - frac) +
                        T[static_cast<std::size_t>(j1)] * frac;
      res.raw[k] += v2_avg * 0.25 * Tt;
    }
  }

  res.values.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    res.raw[k] = 1.0 - 4.0 * U * U * res.raw[k];
    res.values[k] = std::clamp(res.raw[k], 0.0, 1.0);
  }
  return res;
}

// Porter-Thomas limit law for z = L |a|^2 of a random unit vector component.
inline double porter_thomas_pdf(double z) {
  if (z <= 0.0) throw std::invalid_argument("porter_thomas_pdf: z must be > 0");
  return std::exp(-0.5 * z) / std::sqrt(2.0 * M_PI * z);
}

inline double porter_thomas_cdf(double z) {
  if (z <= 0.0) return 0.0;
  return std::erf(std::sqrt(0.5 * z));
}

// Exact finite-L density of y = |a|^2: Beta(1/2, (L-1)/2).
inline double unit_component_pdf(double y, int L) {
  if (L < 3) throw std::invalid_argument("unit_component_pdf: L >= 3");
  if (y <= 0.0 || y >= 1.0) return 0.0;
  const double logc = std::lgamma(0.5 * L) - 0.5 * std::log(M_PI) -
                      std::lgamma(0.5 * (L - 1));
  return std::exp(logc) * std::pow(1.0 - y, 0.5 * (L - 3)) / std::sqrt(y);
}

// Samples z = L * (first component)^2 of uniformly random unit vectors in
// dimension L (normalized Gaussian vectors).
inline std::vector<double> sample_unit_vector_component(int L, int n_samples,
                                                        std::uint64_t seed) {
  if (L < 3) throw std::invalid_argument("sample_unit_vector_component: L >= 3");
  GaussianStream g(seed);
  std::vector<double> out(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    double first = g.next();
    double norm2 = first * first;
    for (int k = 1; k < L; ++k) {
      const double x = g.next();
      norm2 += x * x;
    }
    out[static_cast<std::size_t>(s)] = static_cast<double>(L) * first * first / norm2;
  }
  return out;
}

// Kolmogorov-Smirnov distance of a sample against a CDF.
template <class Cdf>
double ks_distance(std::vector<double> sample, Cdf cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    ks = std::max(ks, std::max(std::abs(f - static_cast<double>(i) / n),
                               std::abs(f - static_cast<double>(i + 1) / n)));
  }
  return ks;
}

}  // namespace lrq
