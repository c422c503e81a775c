#pragma once

#include <Eigen/Dense>
#include <bit>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace lrq {

// Exact diagonalization for tiny systems; the ground truth against which the
// perturbative formulas are validated. Basis ordering: up-spin creation
// operators site-ascending, then down-spin, so a full configuration is
// (up mask, down mask) and the state index is up_index * dim_down + down_index
// with lexicographically ordered masks per sector.
struct ManyBodyBasis {
  int L = 0;
  int n_up = 0;
  int n_down = 0;
  std::vector<std::uint32_t> up_masks;    // lexicographic
  std::vector<std::uint32_t> down_masks;  // lexicographic
  std::vector<int> up_index;              // mask -> sector index, -1 outside
  std::vector<int> down_index;

  std::size_t dim() const { return up_masks.size() * down_masks.size(); }
};

inline std::vector<std::uint32_t> sector_masks(int L, int n) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t m = 0; m < (1u << L); ++m)
    if (std::popcount(m) == n) out.push_back(m);
  return out;
}

inline ManyBodyBasis make_basis(int L, int n_up, int n_down) {
  if (L > 8) throw std::invalid_argument("make_basis: hard cap L <= 8");
  if (n_up < 0 || n_up > L || n_down < 0 || n_down > L)
    throw std::invalid_argument("make_basis: bad particle counts");
  ManyBodyBasis b;
  b.L = L;
  b.n_up = n_up;
  b.n_down = n_down;
  b.up_masks = sector_masks(L, n_up);
  b.down_masks = sector_masks(L, n_down);
  b.up_index.assign(1u << L, -1);
  b.down_index.assign(1u << L, -1);
  for (std::size_t k = 0; k < b.up_masks.size(); ++k) b.up_index[b.up_masks[k]] = static_cast<int>(k);
  for (std::size_t k = 0; k < b.down_masks.size(); ++k) b.down_index[b.down_masks[k]] = static_cast<int>(k);
  return b;
}

// Applies c_i^dag c_j within one spin sector; Jordan-Wigner parity from the
// bit count between the two sites. Returns false when the move annihilates.
inline bool hop(std::uint32_t mask, int i, int j, std::uint32_t& out, int& sign) {
  if (((mask >> j) & 1u) == 0u) return false;
  std::uint32_t m1 = mask & ~(1u << j);
  if ((m1 >> i) & 1u) return false;
  auto parity_below = [](std::uint32_t m, int k) {
    return std::popcount(m & ((1u << k) - 1u));
  };
  int s = (parity_below(mask, j) + parity_below(m1, i)) % 2;
  out = m1 | (1u << i);
  sign = s ? -1 : 1;
  return true;
}

// H = sum_{ij,sigma} h(i,j) c^dag_{i sigma} c_{j sigma} + U sum_i n_up n_down,
// with the single-particle matrix h carrying any chemical potential on its
// diagonal. Dense and real symmetric.
inline Eigen::MatrixXd build_many_body_hamiltonian(const Eigen::MatrixXd& h, double U,
                                                   const ManyBodyBasis& b) {
  if (h.rows() != b.L || h.cols() != b.L)
    throw std::invalid_argument("build_many_body_hamiltonian: matrix size != L");
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("build_many_body_hamiltonian: h must be symmetric");
  const std::size_t DU = b.up_masks.size(), DD = b.down_masks.size();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(DU * DD, DU * DD);
  // up-sector hopping
  for (std::size_t a = 0; a < DU; ++a) {
    const std::uint32_t mu = b.up_masks[a];
    for (int i = 0; i < b.L; ++i)
      for (int j = 0; j < b.L; ++j) {
        if (i == j || h(i, j) == 0.0) continue;
        std::uint32_t m2;
        int s;
        if (!hop(mu, i, j, m2, s)) continue;
        const std::size_t a2 = static_cast<std::size_t>(b.up_index[m2]);
        for (std::size_t c = 0; c < DD; ++c)
          H(a2 * DD + c, a * DD + c) += h(i, j) * s;
      }
  }
  // down-sector hopping
  for (std::size_t c = 0; c < DD; ++c) {
    const std::uint32_t md = b.down_masks[c];
    for (int i = 0; i < b.L; ++i)
      for (int j = 0; j < b.L; ++j) {
        if (i == j || h(i, j) == 0.0) continue;
        std::uint32_t m2;
        int s;
        if (!hop(md, i, j, m2, s)) continue;
        const std::size_t c2 = static_cast<std::size_t>(b.down_index[m2]);
        for (std::size_t a = 0; a < DU; ++a)
          H(a * DD + c2, a * DD + c) += h(i, j) * s;
      }
  }
  // diagonal: single-particle diagonal + interaction
  for (std::size_t a = 0; a < DU; ++a) {
    const std::uint32_t mu = b.up_masks[a];
    double e_up = 0.0;
    for (int i = 0; i < b.L; ++i)
      if ((mu >> i) & 1u) e_up += h(i, i);
    for (std::size_t c = 0; c < DD; ++c) {
      const std::uint32_t md = b.down_masks[c];
      double e = e_up;
      for (int i = 0; i < b.L; ++i)
        if ((md >> i) & 1u) e += h(i, i);
      e += U * std::popcount(mu & md);
      H(a * DD + c, a * DD + c) += e;
    }
  }
  return H;
}

// Slater determinant with the given orbitals (columns of `orbitals`) occupied
// in both spin sectors: amplitude on (mu, md) is det(orbitals[sites(mu), :])
// times the same for md. Row ordering site-ascending matches the operator
// ordering above, so no extra signs appear.
inline Eigen::VectorXd slater_determinant_state(const Eigen::MatrixXd& orbitals,
                                                const ManyBodyBasis& b) {
  if (orbitals.rows() != b.L || orbitals.cols() != b.n_up || b.n_up != b.n_down)
    throw std::invalid_argument("slater_determinant_state: orbital shape mismatch");
  const std::size_t DU = b.up_masks.size(), DD = b.down_masks.size();
  auto sector_amp = [&](const std::vector<std::uint32_t>& masks) {
    Eigen::VectorXd amp(masks.size());
    const int n = static_cast<int>(orbitals.cols());
    for (std::size_t k = 0; k < masks.size(); ++k) {
      Eigen::MatrixXd sub(n, n);
      int row = 0;
      for (int i = 0; i < b.L; ++i)
        if ((masks[k] >> i) & 1u) sub.row(row++) = orbitals.row(i);
      amp(static_cast<Eigen::Index>(k)) = sub.determinant();
    }
    return amp;
  };
  const Eigen::VectorXd au = sector_amp(b.up_masks);
  const Eigen::VectorXd ad = sector_amp(b.down_masks);
  Eigen::VectorXd psi(DU * DD);
  for (std::size_t a = 0; a < DU; ++a)
    for (std::size_t c = 0; c < DD; ++c) psi(a * DD + c) = au(a) * ad(c);
  const double nrm = psi.norm();
  if (nrm <= 0.0) throw std::runtime_error("slater_determinant_state: zero norm");
  return psi / nrm;
}

// Diagonal of the double-occupancy operator in this basis.
inline Eigen::VectorXd double_occupancy_diagonal(const ManyBodyBasis& b) {
  const std::size_t DU = b.up_masks.size(), DD = b.down_masks.size();
  Eigen::VectorXd d(DU * DD);
  for (std::size_t a = 0; a < DU; ++a)
    for (std::size_t c = 0; c < DD; ++c)
      d(a * DD + c) = static_cast<double>(std::popcount(b.up_masks[a] & b.down_masks[c]));
  return d;
}

// Spectral-decomposition propagator holder: evolve any state to any time.
struct ExactPropagator {
  Eigen::VectorXd energies;
  Eigen::MatrixXd modes;

  explicit ExactPropagator(const Eigen::MatrixXd& H) {
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("ExactPropagator: H must be Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("ExactPropagator: diagonalization failed");
    energies = es.eigenvalues();
    modes = es.eigenvectors();
  }

  Eigen::VectorXcd evolve(const Eigen::VectorXcd& psi0, double t) const {
    Eigen::VectorXcd c = modes.transpose() * psi0;
    for (Eigen::Index k = 0; k < c.size(); ++k)
      c(k) *= std::exp(std::complex<double>(0.0, -energies(k) * t));
    return modes * c;
  }
};

inline std::vector<Eigen::VectorXcd> exact_evolve(const Eigen::VectorXcd& psi0,
                                                  const Eigen::MatrixXd& H,
                                                  const std::vector<double>& times) {
  ExactPropagator prop(H);
  std::vector<Eigen::VectorXcd> out;
  out.reserve(times.size());
  for (double t : times) {
    Eigen::VectorXcd psi = prop.evolve(psi0, t);
    if (std::abs(psi.norm() - 1.0) > 1e-10)
      throw std::runtime_error("exact_evolve: norm drift");
    out.push_back(std::move(psi));
  }
  return out;
}

inline double exact_double_occupancy(const Eigen::VectorXcd& psi, const ManyBodyBasis& b) {
  const Eigen::VectorXd d = double_occupancy_diagonal(b);
  if (psi.size() != d.size())
    throw std::invalid_argument("exact_double_occupancy: basis mismatch");
  double s = 0.0;
  for (Eigen::Index k = 0; k < psi.size(); ++k) s += std::norm(psi(k)) * d(k);
  return s;
}

// d(t) for a quench from `psi0` under H = h + U * interaction.
inline std::vector<double> exact_quench_double_occupancy(const Eigen::MatrixXd& h, double U,
                                                         const ManyBodyBasis& b,
                                                         const Eigen::VectorXd& psi0,
                                                         const std::vector<double>& times) {
  const Eigen::MatrixXd H = build_many_body_hamiltonian(h, U, b);
  ExactPropagator prop(H);
  const Eigen::VectorXd d = double_occupancy_diagonal(b);
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    const Eigen::VectorXcd psi = prop.evolve(psi0.cast<std::complex<double>>(), t);
    double s = 0.0;
    for (Eigen::Index k = 0; k < psi.size(); ++k) s += std::norm(psi(k)) * d(k);
    out.push_back(s);
  }
  return out;
}

// |<psi0| e^{i t H0} e^{-i t Ha} |psi0>|^2 via two spectral decompositions.
inline std::vector<double> exact_fidelity(const Eigen::VectorXd& psi0,
                                          const Eigen::MatrixXd& H0,
                                          const Eigen::MatrixXd& Ha,
                                          const std::vector<double>& times) {
  if (H0.rows() != Ha.rows())
    throw std::invalid_argument("exact_fidelity: basis mismatch");
  ExactPropagator p0(H0), pa(Ha);
  std::vector<double> out;
  out.reserve(times.size());
  const Eigen::VectorXcd psi = psi0.cast<std::complex<double>>();
  for (double t : times) {
    const Eigen::VectorXcd right = pa.evolve(psi, t);
    const Eigen::VectorXcd left = p0.evolve(psi, t);
    const std::complex<double> ov = left.dot(right);  // conjugates the left factor
    out.push_back(std::norm(ov));
  }
  return out;
}

}  // namespace lrq
