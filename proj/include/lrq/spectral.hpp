#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrq/model.hpp"

namespace lrq {

struct SpectrumResult {
  std::vector<double> eigenvalues;          // sorted ascending
  std::optional<Eigen::MatrixXd> eigenvectors;  // orthonormal columns, same order
  double residual_bound = 0.0;              // max_i ||M v_i - lambda_i v_i||_2
};

// Dense symmetric eigendecomposition. The contract, not the routine, is
// normative: sorted eigenvalues, and when vectors are requested the residual
// ||M v - lambda v|| must stay below 1e-8 * ||M||_F.
inline SpectrumResult eigensolve(const Eigen::MatrixXd& m, bool want_vectors,
                                 const std::string& context = {}) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("eigensolve: matrix must be square");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12)
    throw std::invalid_argument("eigensolve: matrix not symmetric (max |M-M^T| = " +
                                std::to_string(asym) + ")");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.compute(m, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolve: convergence failure" +
                             (context.empty() ? std::string() : " [" + context + "]"));
  SpectrumResult r;
  r.eigenvalues.assign(solver.eigenvalues().data(),
                       solver.eigenvalues().data() + m.rows());
  if (want_vectors) {
    r.eigenvectors = solver.eigenvectors();
    const Eigen::MatrixXd resid =
        m * (*r.eigenvectors) - (*r.eigenvectors) * solver.eigenvalues().asDiagonal();
    r.residual_bound = resid.colwise().norm().maxCoeff();
    const double limit = 1e-8 * m.norm();
    if (r.residual_bound > limit)
      throw std::runtime_error("eigensolve: residual bound violated" +
                               (context.empty() ? std::string() : " [" + context + "]"));
  }
  return r;
}

struct PredictedDOS {
  double J = 0.0;  // effective semicircle radius parameter (bulk radius 2J)
  double epsilon_star = 0.0;  // J / M_alpha
  struct Outlier {
    int mode = 0;
    double lambda = 0.0;
  };
  std::vector<Outlier> outliers;  // |lambda| > 2J, sorted ascending in lambda
};

// Eq.-(3)-type prediction: modes whose clean energy x = M_alpha * eps_n lies
// outside the disorder scale (|x| > J) are expelled from the semicircle bulk
// to lambda = x + J^2/x; boundary modes |x| = J belong to the bulk. The
// effective radius parameter is J*sigma, which the paper-anchored runs keep
// at J by using sigma = 1.
inline PredictedDOS predicted_dos(const ModelParams& p, const DispersionTable& t) {
  p.validate();
  p.require_semicircle_scale();
  p.require_strong_long_range();
  if (p.M_alpha == 0.0 && p.sigma <= 0.0)
    throw std::invalid_argument("predicted_dos: need disorder (sigma > 0)");
  PredictedDOS out;
  out.J = p.J * (p.sigma > 0.0 ? p.sigma : 1.0);
  if (p.M_alpha != 0.0) out.epsilon_star = out.J / p.M_alpha;
  for (int n = t.min_mode(); n <= t.max_mode(); ++n) {
    const double x = p.M_alpha * t.at(n);
    if (std::abs(x) > out.J) {
      out.outliers.push_back({n, x + out.J * out.J / x});
    }
  }
  std::sort(out.outliers.begin(), out.outliers.end(),
            [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
  return out;
}

inline double semicircle_density(double lambda, double J) {
  if (J <= 0.0) throw std::invalid_argument("semicircle_density: J must be > 0");
  const double s = 4.0 * J * J - lambda * lambda;
  if (s <= 0.0) return 0.0;
  return std::sqrt(s) / (2.0 * M_PI * J * J);
}

inline double semicircle_cdf(double lambda, double J) {
  if (J <= 0.0) throw std::invalid_argument("semicircle_cdf: J must be > 0");
  if (lambda <= -2.0 * J) return 0.0;
  if (lambda >= 2.0 * J) return 1.0;
  const double s = std::sqrt(4.0 * J * J - lambda * lambda);
  const double v = 0.5 + lambda * s / (4.0 * M_PI * J * J) +
                   std::asin(lambda / (2.0 * J)) / M_PI;
  return std::clamp(v, 0.0, 1.0);
}

struct OutlierMatch {
  double predicted = 0.0;
  double matched = 0.0;       // NaN when nothing was available
  double relative_error = 0.0;  // |matched - predicted| / |predicted|
  bool found = false;
};

struct ComparisonReport {
  double J = 0.0;
  double margin = 0.0;
  std::size_t total_count = 0;
  std::size_t bulk_count = 0;
  double ks_distance = 0.0;        // bulk sub-CDF vs semicircle CDF
  bool bulk_empty = false;
  std::vector<OutlierMatch> matches;           // one per separated predicted outlier
  std::size_t predicted_in_margin = 0;         // predictions absorbed into the bulk band
  std::size_t unmatched_predicted = 0;
  std::size_t unmatched_empirical = 0;
  double max_relative_error = 0.0;

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "J = " << J << "\n"
       << "margin = " << margin << "\n"
       << "total_count = " << total_count << "\n"
       << "bulk_count = " << bulk_count << "\n"
       << "bulk_empty = " << (bulk_empty ? 1 : 0) << "\n"
       << "ks_distance = " << ks_distance << "\n"
       << "predicted_outliers = " << matches.size() << "\n"
       << "predicted_in_margin = " << predicted_in_margin << "\n"
       << "unmatched_predicted = " << unmatched_predicted << "\n"
       << "unmatched_empirical = " << unmatched_empirical << "\n"
       << "max_relative_error = " << max_relative_error << "\n";
    return os.str();
  }

  std::string matches_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "predicted_lambda,matched_lambda,relative_error\n";
    for (const auto& m : matches) {
      os << m.predicted << ",";
      if (m.found)
        os << m.matched << "," << m.relative_error << "\n";
      else
        os << "nan,nan\n";
    }
    return os.str();
  }
};

// Compares an eigenvalue set (one realization or several pooled) against the
// predicted DOS. Eigenvalues with |lambda| <= 2J + margin count as bulk; the
// same band absorbs near-edge predictions, since finite-size edge
// fluctuations (~ L^{-2/3}) make them inseparable from the bulk. The KS
// statistic uses the bulk sub-CDF normalized by the TOTAL count, matching the
// prediction's normalization where the semicircle carries the full spectral
// weight; mass pushed outside the band therefore registers as distance.
inline ComparisonReport compare_spectrum(const std::vector<double>& eigenvalues_sorted,
                                         const PredictedDOS& predicted,
                                         double margin = -1.0) {
  if (margin < 0.0) margin = 0.05 * predicted.J;
  const double J = predicted.J;
  const double edge = 2.0 * J + margin;

  ComparisonReport rep;
  rep.J = J;
  rep.margin = margin;
  rep.total_count = eigenvalues_sorted.size();

  std::vector<double> bulk;
  std::vector<double> empirical_outliers;
  std::size_t below_band = 0;
  for (double x : eigenvalues_sorted) {
    if (std::abs(x) <= edge)
      bulk.push_back(x);
    else
      empirical_outliers.push_back(x);
    if (x < -edge) ++below_band;
  }
  rep.bulk_count = bulk.size();
  rep.bulk_empty = bulk.empty();

  if (!bulk.empty()) {
    std::sort(bulk.begin(), bulk.end());
    const double n_total = static_cast<double>(rep.total_count);
    double ks = 0.0;
    for (std::size_t i = 0; i < bulk.size(); ++i) {
      const double f = semicircle_cdf(bulk[i], J);
      const double lo = static_cast<double>(below_band + i) / n_total;
      const double hi = static_cast<double>(below_band + i + 1) / n_total;
      ks = std::max(ks, std::max(std::abs(f - lo), std::abs(f - hi)));
    }
    rep.ks_distance = ks;
  }

  // Greedy one-to-one matching, most extreme predictions first; ties in the
  // empirical candidates resolve toward smaller lambda.
  std::vector<PredictedDOS::Outlier> separated;
  for (const auto& o : predicted.outliers) {
    if (std::abs(o.lambda) > edge)
      separated.push_back(o);
    else
      ++rep.predicted_in_margin;
  }
  std::sort(separated.begin(), separated.end(), [](const auto& a, const auto& b) {
    return std::abs(a.lambda) > std::abs(b.lambda);
  });
  std::vector<bool> used(empirical_outliers.size(), false);
  for (const auto& o : separated) {
    OutlierMatch m;
    m.predicted = o.lambda;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < empirical_outliers.size(); ++k) {
      if (used[k]) continue;
      const double d = std::abs(empirical_outliers[k] - o.lambda);
      if (d < best || (d == best && empirical_outliers[k] < empirical_outliers[best_k])) {
        best = d;
        best_k = k;
      }
    }
    if (std::isfinite(best)) {
      used[best_k] = true;
      m.matched = empirical_outliers[best_k];
      m.relative_error = best / std::abs(o.lambda);
      m.found = true;
      rep.max_relative_error = std::max(rep.max_relative_error, m.relative_error);
    } else {
      m.matched = std::numeric_limits<double>::quiet_NaN();
      m.relative_error = std::numeric_limits<double>::infinity();
      ++rep.unmatched_predicted;
    }
    rep.matches.push_back(m);
  }
  rep.unmatched_empirical =
      static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  return rep;
}

}  // namespace lrq
