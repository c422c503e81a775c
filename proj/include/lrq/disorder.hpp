#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "lrq/model.hpp"
#include "lrq/rng.hpp"

namespace lrq {

enum class DisorderModel : std::uint32_t { circulant = 0, independent = 1 };

// entry_sigma is never set by hand: it is sigma * J / sqrt(L), the per-entry
// standard deviation that makes the independent-entry bulk a semicircle of
// radius 2*J*sigma. The main text's sigma^2 = J^2/L^2 convention is exposed
// as VarianceConvention::main_text but is inconsistent with that radius; the
// radius was confirmed numerically before freezing the default.
enum class VarianceConvention { radius, main_text };

struct DisorderSpec {
  DisorderModel model = DisorderModel::independent;
  double entry_sigma = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t realization_index = 0;

  static DisorderSpec from_params(const ModelParams& p, DisorderModel model,
                                  std::uint64_t realization_index = 0,
                                  VarianceConvention conv = VarianceConvention::radius) {
    p.validate();
    DisorderSpec s;
    s.model = model;
    s.seed = p.seed;
    s.realization_index = realization_index;
    const double scale = conv == VarianceConvention::radius
                             ? std::sqrt(static_cast<double>(p.L))
                             : static_cast<double>(p.L);
    s.entry_sigma = p.sigma * p.J / scale;
    return s;
  }
};

inline int periodic_distance(int i, int j, int L) {
  if (i < 0 || i >= L || j < 0 || j >= L)
    throw std::invalid_argument("periodic_distance: site index out of range");
  const int d = std::abs(i - j);
  return std::min(d, L - d);
}

// Shared-amplitude (circulant) disorder: one Gaussian t_d per distance, with
// mean c_alpha * M_alpha / d^alpha, placed as entry (i,j) = -w(d) * t_d.
// Draw order is d = 1..L/2, one deviate per distance.
inline Eigen::MatrixXd sample_circulant(const ModelParams& p, const DisorderSpec& spec) {
  p.validate();
  if (spec.model != DisorderModel::circulant)
    throw std::invalid_argument("sample_circulant: spec.model must be circulant");
  const double c = kac_factor(p.alpha, p.L, p.kac);
  GaussianStream g(sub_seed(spec.seed, spec.realization_index));
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(p.L, p.L, 0.0);
  for (int d = 1; d <= p.L / 2; ++d) {
    const double mean = c * p.M_alpha / std::pow(static_cast<double>(d), p.alpha);
    const double t = mean + spec.entry_sigma * g.next();
    const double v = -bond_weight(d, p.L) * t;
    for (int i = 0; i < p.L; ++i) {
      const int j = (i + d) % p.L;
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  m.diagonal().setConstant(p.mu);
  return m;
}

// Independent-entry disorder: one Gaussian per unordered pair (i<j), mean
// equal to the clean matrix entry, std entry_sigma, mirrored below the
// diagonal. Draw order is row-major over the upper triangle.
inline Eigen::MatrixXd sample_independent(const ModelParams& p, const DisorderSpec& spec) {
  p.validate();
  if (spec.model != DisorderModel::independent)
    throw std::invalid_argument("sample_independent: spec.model must be independent");
  const double c = kac_factor(p.alpha, p.L, p.kac);
  GaussianStream g(sub_seed(spec.seed, spec.realization_index));
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(p.L, p.L, 0.0);
  for (int i = 0; i < p.L; ++i) {
    for (int j = i + 1; j < p.L; ++j) {
      const int d = periodic_distance(i, j, p.L);
      const double mean = -c * p.M_alpha * bond_weight(d, p.L) /
                          std::pow(static_cast<double>(d), p.alpha);
      const double v = mean + spec.entry_sigma * g.next();
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  m.diagonal().setConstant(p.mu);
  return m;
}

inline Eigen::MatrixXd sample_matrix(const ModelParams& p, const DisorderSpec& spec) {
  return spec.model == DisorderModel::circulant ? sample_circulant(p, spec)
                                                : sample_independent(p, spec);
}

// Binary cache format, bit-exact:
//   offset 0:  8-byte magic "LRQMAT01"
//   offset 8:  uint32 L (little-endian)
//   offset 12: uint32 model enum (0 = circulant, 1 = independent)
//   offset 16: uint64 seed
//   offset 24: uint64 realization_index
//   offset 32: L*L little-endian IEEE-754 doubles, row-major.
inline constexpr char kMatrixMagic[8] = {'L', 'R', 'Q', 'M', 'A', 'T', '0', '1'};

inline void save_matrix(const std::string& path, const Eigen::MatrixXd& m,
                        const DisorderSpec& spec) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_matrix: cannot open " + path);
  const std::uint32_t L = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t model = static_cast<std::uint32_t>(spec.model);
  f.write(kMatrixMagic, 8);
  f.write(reinterpret_cast<const char*>(&L), 4);
  f.write(reinterpret_cast<const char*>(&model), 4);
  f.write(reinterpret_cast<const char*>(&spec.seed), 8);
  f.write(reinterpret_cast<const char*>(&spec.realization_index), 8);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      f.write(reinterpret_cast<const char*>(&v), 8);
    }
  if (!f) throw std::runtime_error("save_matrix: write failed for " + path);
}

inline Eigen::MatrixXd load_matrix(const std::string& path, DisorderSpec* spec_out = nullptr) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_matrix: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMatrixMagic, 8) != 0)
    throw std::runtime_error("load_matrix: bad magic in " + path);
  std::uint32_t L = 0, model = 0;
  std::uint64_t seed = 0, idx = 0;
  f.read(reinterpret_cast<char*>(&L), 4);
  f.read(reinterpret_cast<char*>(&model), 4);
  f.read(reinterpret_cast<char*>(&seed), 8);
  f.read(reinterpret_cast<char*>(&idx), 8);
  Eigen::MatrixXd m(L, L);
  for (std::uint32_t i = 0; i < L; ++i)
    for (std::uint32_t j = 0; j < L; ++j) {
      double v;
      f.read(reinterpret_cast<char*>(&v), 8);
      m(i, j) = v;
    }
  if (!f) throw std::runtime_error("load_matrix: truncated file " + path);
  if (spec_out) {
    spec_out->model = static_cast<DisorderModel>(model);
    spec_out->seed = seed;
    spec_out->realization_index = idx;
  }
  return m;
}

}  // namespace lrq
