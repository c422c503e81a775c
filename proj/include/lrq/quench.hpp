#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include "lrq/disorder.hpp"
#include "lrq/model.hpp"
#include "lrq/spectral.hpp"
#include "lrq/util.hpp"

namespace lrq {

// Fermi sea over a single-particle eigenbasis; both spin species share the
// same occupied orbital set (half filling is the paper's setting). Orbitals
// are columns, ordered ascending in energy; degenerate levels fill
// lowest-column-first, which is deterministic because the eigensolver's
// column order is part of the state.
template <class Scalar>
struct FermiSea {
  Eigen::VectorXd energies;  // ascending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> orbitals;
  int filling = 0;

  int L() const { return static_cast<int>(energies.size()); }
};

inline FermiSea<double> build_fermi_sea(const SpectrumResult& s, int filling) {
  if (!s.eigenvectors)
    throw std::invalid_argument("build_fermi_sea: eigenvectors required");
  const int L = static_cast<int>(s.eigenvalues.size());
  if (filling < 0 || filling > L)
    throw std::invalid_argument("build_fermi_sea: filling out of range");
  FermiSea<double> f;
  f.energies = Eigen::Map<const Eigen::VectorXd>(s.eigenvalues.data(), L);
  f.orbitals = *s.eigenvectors;
  f.filling = filling;
  return f;
}

// Sum over sites of the squared occupied density: <A>_0 = sum_i rho_i^2 with
// rho_i = sum_{l occ} |a_{i,l}|^2 (Wick factorization on the product state).
template <class Scalar>
double double_occupancy_fs(const FermiSea<Scalar>& f) {
  if (f.orbitals.rows() != f.energies.size())
    throw std::invalid_argument("double_occupancy_fs: eigenvectors missing or mismatched");
  const int L = f.L();
  double out = 0.0;
  for (int i = 0; i < L; ++i) {
    double rho = 0.0;
    for (int l = 0; l < f.filling; ++l) rho += std::norm(f.orbitals(i, l));
    out += rho * rho;
  }
  return out;
}

struct Peak {
  double omega = 0.0;
  double weight = 0.0;
};

// J(omega) as a finite weighted set of delta peaks. Weights carry no factor
// of U; the 4U^2 prefactor lives in evolve_observable, so the same spectrum
// serves every interaction strength.
struct ExcitationSpectrum {
  std::vector<Peak> peaks;       // ascending omega, degenerate omegas merged
  double reference_value = 0.0;  // <A>_0
  double reference_energy = 0.0; // <H_0>_0 (per spin sector, both included)
};

// Sort, merge peaks with |omega_i - omega_j| <= tol into one, drop weights
// below 1e-14 of the largest magnitude.
inline void merge_and_prune_peaks(std::vector<Peak>& peaks, double tol = 1e-12) {
  std::sort(peaks.begin(), peaks.end(),
            [](const Peak& a, const Peak& b) { return a.omega < b.omega; });
  std::vector<Peak> merged;
  for (const Peak& p : peaks) {
    if (!merged.empty() && p.omega - merged.back().omega <= tol) {
      merged.back().weight += p.weight;
    } else {
      merged.push_back(p);
    }
  }
  double wmax = 0.0;
  for (const Peak& p : merged) wmax = std::max(wmax, std::abs(p.weight));
  std::vector<Peak> out;
  for (const Peak& p : merged)
    if (std::abs(p.weight) >= 1e-14 * wmax) out.push_back(p);
  peaks = std::move(out);
}

// Exact-enumeration J(omega) for the double occupancy. Intermediate states
// are one up particle-hole pair (l1 unocc, l2 occ) times one down pair
// (l3 unocc, l4 occ); for each,
//   omega_m = e_l1 - e_l2 + e_l3 - e_l4,
//   V_m     = sum_i a*_{i,l1} a_{i,l2} a*_{i,l3} a_{i,l4},
//   weight  = -|V_m|^2 * omega_m.
// This is the energy-resolved golden-rule weight of the kinetic-energy
// transfer: by total-energy conservation the double occupancy absorbs
// -sum_k e_k dn_k, which pins the weight to -|V|^2 omega. Cost is (L/2)^4
// quadruples times an O(L) contraction, hence the size guard.
template <class Scalar>
ExcitationSpectrum jomega_double_occupancy(const FermiSea<Scalar>& f,
                                           bool allow_large = false) {
  const int L = f.L();
  if (L > 128 && !allow_large)
    throw std::invalid_argument(
        "jomega_double_occupancy: L > 128 with exact vectors; "
        "use the averaged tier or pass allow_large");
  if (f.orbitals.rows() != L)
    throw std::invalid_argument("jomega_double_occupancy: eigenvectors required");
  const int nocc = f.filling;
  const int nuno = L - nocc;

  ExcitationSpectrum spec;
  spec.reference_value = double_occupancy_fs(f);
  double e0 = 0.0;
  for (int l = 0; l < nocc; ++l) e0 += 2.0 * f.energies(l);
  spec.reference_energy = e0;
  if (nocc == 0 || nuno == 0) return spec;  // Pauli-blocked: no excitations

  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  // pair products: column (u,o) holds conj(a_{i,u}) * a_{i,o}
  const int npair = nuno * nocc;
  Mat P(L, npair);
  std::vector<double> pair_omega(static_cast<std::size_t>(npair));
  for (int u = 0; u < nuno; ++u)
    for (int o = 0; o < nocc; ++o) {
      const int c = u * nocc + o;
      for (int i = 0; i < L; ++i) {
        if constexpr (std::is_same_v<Scalar, double>) {
          P(i, c) = f.orbitals(i, nocc + u) * f.orbitals(i, o);
        } else {
          P(i, c) = std::conj(f.orbitals(i, nocc + u)) * f.orbitals(i, o);
        }
      }
      pair_omega[static_cast<std::size_t>(c)] =
          f.energies(nocc + u) - f.energies(o);
    }

  std::vector<Peak> peaks;
  peaks.reserve(static_cast<std::size_t>(npair) * static_cast<std::size_t>(npair));
  // Gram blocks: V(c_up, c_dn) = P.col(c_up)^T P.col(c_dn) (plain transpose:
  // the conjugation pattern is already in the pair products).
  const int block = 256;
  for (int c0 = 0; c0 < npair; c0 += block) {
    const int bw = std::min(block, npair - c0);
    Mat G = P.middleCols(c0, bw).transpose() * P;
    for (int a = 0; a < bw; ++a) {
      const double w_up = pair_omega[static_cast<std::size_t>(c0 + a)];
      for (int b = 0; b < npair; ++b) {
        const double v2 = std::norm(G(a, b));
        const double omega = w_up + pair_omega[static_cast<std::size_t>(b)];
        peaks.push_back({omega, -v2 * omega});
      }
    }
  }
  merge_and_prune_peaks(peaks);
  spec.peaks = std::move(peaks);
  return spec;
}

// Canonical mode ordering 0, 1, -1, 2, -2, ..., L/2: degenerate clean levels
// fill in this order, deterministically.
inline std::vector<int> canonical_mode_order(int L) {
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(L));
  order.push_back(0);
  for (int n = 1; n < L / 2; ++n) {
    order.push_back(n);
    order.push_back(-n);
  }
  order.push_back(L / 2);
  return order;
}

// Occupied mode set of the clean chain at the given filling: modes sorted by
// (M_alpha * eps_n, canonical position).
inline std::vector<int> clean_occupied_modes(const ModelParams& p,
                                             const DispersionTable& t, int filling) {
  std::vector<int> order = canonical_mode_order(p.L);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return p.M_alpha * t.at(a) < p.M_alpha * t.at(b);
  });
  order.resize(static_cast<std::size_t>(filling));
  return order;
}

// Plane-wave eigenbasis of the clean chain as a complex Fermi sea, columns
// ordered by (energy, canonical mode position). Used to cross-check the
// momentum-conserving fast path against the generic Wick machinery.
inline FermiSea<std::complex<double>> plane_wave_sea(const ModelParams& p,
                                                     const DispersionTable& t,
                                                     int filling) {
  std::vector<int> order = canonical_mode_order(p.L);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return p.M_alpha * t.at(a) < p.M_alpha * t.at(b);
  });
  FermiSea<std::complex<double>> f;
  f.filling = filling;
  f.energies.resize(p.L);
  f.orbitals.resize(p.L, p.L);
  const double norm = 1.0 / std::sqrt(static_cast<double>(p.L));
  for (int k = 0; k < p.L; ++k) {
    const int n = order[static_cast<std::size_t>(k)];
    f.energies(k) = p.mu + p.M_alpha * t.at(n);
    for (int i = 0; i < p.L; ++i) {
      const double phase = 2.0 * M_PI * i * n / static_cast<double>(p.L);
      f.orbitals(i, k) = std::polar(norm, phase);
    }
  }
  return f;
}

// Clean (sigma = 0) fast path: plane-wave amplitudes reduce the Wick
// contraction to momentum conservation l1 - l2 + l3 - l4 = 0 (mod L), with
// |V|^2 = 1/L^2 per conserving quadruple. One power of L cheaper than the
// generic path, which it must reproduce exactly.
inline ExcitationSpectrum jomega_momentum_clean(const ModelParams& p,
                                                const DispersionTable& t,
                                                int filling) {
  if (p.sigma != 0.0)
    throw std::invalid_argument("jomega_momentum_clean: requires sigma = 0");
  const int L = p.L;
  std::vector<int> occ = clean_occupied_modes(p, t, filling);
  std::vector<char> is_occ(static_cast<std::size_t>(L), 0);
  auto mode_slot = [L](int n) { return ((n % L) + L) % L; };
  for (int n : occ) is_occ[static_cast<std::size_t>(mode_slot(n))] = 1;

  std::vector<double> mode_energy(static_cast<std::size_t>(L));
  for (int n = t.min_mode(); n <= t.max_mode(); ++n)
    mode_energy[static_cast<std::size_t>(mode_slot(n))] = p.mu + p.M_alpha * t.at(n);

  ExcitationSpectrum spec;
  double a0 = 0.0, e0 = 0.0;
  // uniform |a|^2 = 1/L: <A>_0 = L * (filling/L)^2
  a0 = static_cast<double>(filling) * filling / static_cast<double>(L);
  for (int n : occ) e0 += 2.0 * (p.mu + p.M_alpha * t.at(n));
  spec.reference_value = a0;
  spec.reference_energy = e0;

  std::vector<int> unocc;
  for (int s = 0; s < L; ++s)
    if (!is_occ[static_cast<std::size_t>(s)]) unocc.push_back(s);
  std::vector<int> occs;
  for (int s = 0; s < L; ++s)
    if (is_occ[static_cast<std::size_t>(s)]) occs.push_back(s);
  if (occs.empty() || unocc.empty()) return spec;

  const double v2 = 1.0 / (static_cast<double>(L) * static_cast<double>(L));
  std::vector<Peak> peaks;
  // conservation: l4 = l1 - l2 + l3 (mod L), must be occupied
  for (int l1 : unocc)
    for (int l2 : occs) {
      const double w12 = mode_energy[static_cast<std::size_t>(l1)] -
                         mode_energy[static_cast<std::size_t>(l2)];
      for (int l3 : unocc) {
        const int l4 = (((l1 - l2 + l3) % L) + L) % L;
        if (!is_occ[static_cast<std::size_t>(l4)]) continue;
        const double omega =
            w12 + mode_energy[static_cast<std::size_t>(l3)] -
            mode_energy[static_cast<std::size_t>(l4)];
        peaks.push_back({omega, -v2 * omega});
      }
    }
  merge_and_prune_peaks(peaks);
  spec.peaks = std::move(peaks);
  return spec;
}

struct QuenchResult {
  std::vector<double> times;
  std::vector<double> values;           // d(t)
  std::vector<double> stderrs;          // empty unless ensemble-averaged
  double plateau = 0.0;
  bool plateau_defined = false;
  bool secular_warning = false;         // significant weight at omega = 0
  double reference_value = 0.0;
  std::uint64_t seed = 0;
  int n_realizations = 1;
};

inline double quench_kernel(double omega, double t) {
  if (std::abs(omega) <= 1e-12) return 0.25 * t * t;
  const double s = std::sin(0.5 * omega * t);
  return s * s / (omega * omega);
}

// d(t) = <A>_0 + 4U^2 sum_m w_m K(omega_m, t), K = sin^2(omega t/2)/omega^2
// with the analytic t^2/4 limit at omega = 0. The delta integral is done
// exactly peak by peak; no broadening. plateau = <A>_0 + 2U^2 sum w/omega^2
// (time average of sin^2), defined when the omega = 0 weight is negligible.
inline QuenchResult evolve_observable(const ExcitationSpectrum& spec, double U,
                                      const std::vector<double>& times) {
  for (double t : times)
    if (t < 0.0) throw std::invalid_argument("evolve_observable: times must be >= 0");
  QuenchResult r;
  r.times = times;
  r.values.resize(times.size());
  r.reference_value = spec.reference_value;

  std::vector<double> terms(spec.peaks.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    for (std::size_t m = 0; m < spec.peaks.size(); ++m)
      terms[m] = spec.peaks[m].weight * quench_kernel(spec.peaks[m].omega, t);
    r.values[k] = spec.reference_value + 4.0 * U * U * pairwise_sum(terms);
  }

  double total_abs = 0.0, zero_abs = 0.0, plateau_sum = 0.0;
  for (const Peak& p : spec.peaks) {
    total_abs += std::abs(p.weight);
    if (std::abs(p.omega) <= 1e-12)
      zero_abs += std::abs(p.weight);
    else
      plateau_sum += p.weight / (p.omega * p.omega);
  }
  if (zero_abs > 1e-12 * total_abs && total_abs > 0.0) {
    r.secular_warning = true;
  } else {
    r.plateau = spec.reference_value + 2.0 * U * U * plateau_sum;
    r.plateau_defined = true;
  }
  return r;
}

namespace detail {

// <rho_i^2> for one row of a random orthogonal matrix with L/2 occupied
// columns: rho ~ Beta(L/4, L/4), so <rho^2> = 1/4 + 1/(4(L/2+1)).
inline double averaged_reference_value(int L) {
  const double var = 0.25 / (0.5 * L + 1.0);
  return L * (0.25 + var);
}

}  // namespace detail

// Disorder-averaged tier for L beyond the exact-enumeration wall: eigenvector
// products are replaced by their random-unit-vector ensemble average
// <|V_m|^2> = 1/L^3 (Porter-Thomas moments at leading order), after which the
// peak sum collapses to a one-dimensional time integral of the factorized
// pair correlator
//   sum_m omega_m K(omega_m, t) = 1/2 int_0^t Im[(P_u(s) conj(P_o(s)))^2] ds,
//   P_u(s) = sum_{l unocc} e^{i e_l s},  P_o(s) = sum_{l occ} e^{i e_l s},
// evaluated by composite Simpson quadrature on a grid resolving the largest
// level splitting. The plateau uses the exact pair-convolution sum.
inline QuenchResult averaged_quench(const Eigen::VectorXd& energies_sorted, int filling,
                                    double U, const std::vector<double>& times) {
  const int L = static_cast<int>(energies_sorted.size());
  if (filling < 0 || filling > L)
    throw std::invalid_argument("averaged_quench: filling out of range");
  QuenchResult r;
  r.times = times;
  r.values.resize(times.size());
  r.reference_value = detail::averaged_reference_value(L);

  const double vbar = 1.0 / (static_cast<double>(L) * L * L);
  const double span = energies_sorted(L - 1) - energies_sorted(0);
  const double omega_max = std::max(4.0 * span, 1.0);
  double t_max = 0.0;
  for (double t : times) {
    if (t < 0.0) throw std::invalid_argument("averaged_quench: times must be >= 0");
    t_max = std::max(t_max, t);
  }

  // cumulative Simpson on a uniform grid; 20 points per shortest period
  const double h_target = 2.0 * M_PI / omega_max / 20.0;
  auto correlator = [&](double s) {
    std::complex<double> pu(0.0, 0.0), po(0.0, 0.0);
    for (int l = 0; l < L; ++l) {
      const std::complex<double> ph = std::polar(1.0, energies_sorted(l) * s);
      if (l < filling)
        po += ph;
      else
        pu += ph;
    }
    const std::complex<double> q = pu * std::conj(po);
    return (q * q).imag();
  };

  // integral value at each requested time via cumulative fine-grid Simpson
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  double acc = 0.0;
  double t_prev = 0.0;
  for (std::size_t oi : order) {
    const double t = times[oi];
    const double seg = t - t_prev;
    if (seg > 0.0) {
      const int nsub = std::max(2, static_cast<int>(std::ceil(seg / h_target / 2.0)) * 2);
      const double h = seg / nsub;
      double simpson = correlator(t_prev) + correlator(t);
      for (int k = 1; k < nsub; ++k)
        simpson += correlator(t_prev + k * h) * (k % 2 ? 4.0 : 2.0);
      acc += simpson * h / 3.0;
      t_prev = t;
    }
    //   sum_m w_m K = -vbar * acc / 2
    r.values[oi] = r.reference_value - 4.0 * U * U * vbar * 0.5 * acc;
  }

  // plateau: 2U^2 sum w/omega^2 = -2U^2 vbar sum_q 1/omega_q over the pair
  // convolution (omega_q = w_i + w_j, all strictly positive off degeneracy)
  const int nocc = filling, nuno = L - filling;
  if (nocc > 0 && nuno > 0) {
    std::vector<double> pair_w(static_cast<std::size_t>(nocc) * nuno);
    std::size_t c = 0;
    for (int u = filling; u < L; ++u)
      for (int o = 0; o < filling; ++o)
        pair_w[c++] = energies_sorted(u) - energies_sorted(o);
    double inv_sum = 0.0;
    bool secular = false;
    for (double wi : pair_w)
      for (double wj : pair_w) {
        const double om = wi + wj;
        if (std::abs(om) <= 1e-12) {
          secular = true;
          continue;
        }
        inv_sum += 1.0 / om;
      }
    r.secular_warning = secular;
    r.plateau = r.reference_value - 2.0 * U * U * vbar * inv_sum;
    r.plateau_defined = !secular;
  }
  return r;
}

struct EnsembleQuenchResult {
  QuenchResult mean;
  std::vector<double> plateaus;  // per realization, when defined
};

// Mean and standard error of d(t) over disorder realizations, realization r
// seeded by sub_seed(seed, r). The exact tier runs for L <= 128, the
// averaged tier beyond; realizations are independent and run on `workers`
// threads, combined in index order so the result is deterministic.
inline EnsembleQuenchResult ensemble_quench(const ModelParams& p, DisorderModel model,
                                            int n_realizations,
                                            const std::vector<double>& times,
                                            int workers = 1) {
  p.validate();
  if (n_realizations < 1)
    throw std::invalid_argument("ensemble_quench: need at least one realization");
  const bool exact_tier = p.L <= 128;

  std::vector<QuenchResult> results(static_cast<std::size_t>(n_realizations));
  std::vector<std::string> failures(static_cast<std::size_t>(n_realizations));

  auto run_one = [&](int r) {
    try {
      DisorderSpec spec = DisorderSpec::from_params(p, model, static_cast<std::uint64_t>(r));
      const Eigen::MatrixXd m = sample_matrix(p, spec);
      if (exact_tier) {
        SpectrumResult s = eigensolve(m, true, "realization " + std::to_string(r));
        FermiSea<double> f = build_fermi_sea(s, p.L / 2);
        ExcitationSpectrum j = jomega_double_occupancy(f);
        results[static_cast<std::size_t>(r)] = evolve_observable(j, p.U, times);
      } else {
        SpectrumResult s = eigensolve(m, false, "realization " + std::to_string(r));
        Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(s.eigenvalues.data(),
                                                              p.L);
        results[static_cast<std::size_t>(r)] = averaged_quench(e, p.L / 2, p.U, times);
      }
      results[static_cast<std::size_t>(r)].seed = sub_seed(p.seed, static_cast<std::uint64_t>(r));
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(r)] =
          "realization " + std::to_string(r) + ": " + e.what();
    }
  };

  if (workers <= 1) {
    for (int r = 0; r < n_realizations; ++r) run_one(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < n_realizations; r = next.fetch_add(1))
          run_one(r);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures)
    if (!f.empty()) throw std::runtime_error("ensemble_quench: " + f);

  EnsembleQuenchResult out;
  out.mean.times = times;
  out.mean.values.assign(times.size(), 0.0);
  out.mean.stderrs.assign(times.size(), 0.0);
  out.mean.n_realizations = n_realizations;
  out.mean.seed = p.seed;
  const double n = static_cast<double>(n_realizations);
  std::vector<double> buf(static_cast<std::size_t>(n_realizations));
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (int r = 0; r < n_realizations; ++r)
      buf[static_cast<std::size_t>(r)] = results[static_cast<std::size_t>(r)].values[k];
    const double mean = pairwise_sum(buf) / n;
    out.mean.values[k] = mean;
    if (n_realizations > 1) {
      double ss = 0.0;
      for (double v : buf) ss += (v - mean) * (v - mean);
      out.mean.stderrs[k] = std::sqrt(ss / (n - 1.0) / n);
    }
  }
  double ref = 0.0, plat = 0.0;
  int plat_n = 0;
  for (const auto& r : results) {
    ref += r.reference_value;
    if (r.plateau_defined) {
      out.plateaus.push_back(r.plateau);
      plat += r.plateau;
      ++plat_n;
    }
  }
  out.mean.reference_value = ref / n;
  if (plat_n == n_realizations) {
    out.mean.plateau = plat / n;
    out.mean.plateau_defined = true;
  }
  return out;
}

}  // namespace lrq
