#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lrq/ed_oracle.hpp"
#include "lrq/model.hpp"
#include "lrq/spectral.hpp"

using namespace lrq;

TEST_CASE("two-site sector spectra", "[ed]") {
  const double t = 0.7, U = 1.9;
  Eigen::MatrixXd h(2, 2);
  h << 0, -t, -t, 0;

  // U = 0: {-2t, 0, 0, 2t}
  auto b = make_basis(2, 1, 1);
  auto H0 = build_many_body_hamiltonian(h, 0.0, b);
  auto s0 = eigensolve(H0, false);
  CHECK(s0.eigenvalues[0] == Catch::Approx(-2 * t));
  CHECK(s0.eigenvalues[1] == Catch::Approx(0.0).margin(1e-12));
  CHECK(s0.eigenvalues[2] == Catch::Approx(0.0).margin(1e-12));
  CHECK(s0.eigenvalues[3] == Catch::Approx(2 * t));

  // textbook half-filled spectrum {0, U, (U +- sqrt(U^2 + 16 t^2))/2}
  auto H = build_many_body_hamiltonian(h, U, b);
  auto s = eigensolve(H, false);
  const double disc = std::sqrt(U * U + 16.0 * t * t);
  std::vector<double> expect = {0.0, U, 0.5 * (U - disc), 0.5 * (U + disc)};
  std::sort(expect.begin(), expect.end());
  for (int k = 0; k < 4; ++k)
    CHECK(s.eigenvalues[(std::size_t)k] == Catch::Approx(expect[(std::size_t)k]).margin(1e-12));

  // atomic limit: diagonal with U * (double occupancy)
  Eigen::MatrixXd hz = Eigen::MatrixXd::Zero(2, 2);
  auto Hat = build_many_body_hamiltonian(hz, U, b);
  CHECK((Hat - Eigen::MatrixXd(double_occupancy_diagonal(b).asDiagonal() * U))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("single-particle sector reproduces the input spectrum", "[ed]") {
  ModelParams p;
  p.L = 6;
  p.alpha = 0.5;
  p.M_alpha = 1.3;
  p.kac = false;
  const Eigen::MatrixXd h = build_clean_hopping_matrix(p);
  auto b = make_basis(6, 1, 0);
  auto H = build_many_body_hamiltonian(h, 3.0, b);  // U irrelevant with one spin
  auto s = eigensolve(H, false);
  auto sh = eigensolve(h, false);
  for (int k = 0; k < 6; ++k)
    CHECK(s.eigenvalues[(std::size_t)k] == Catch::Approx(sh.eigenvalues[(std::size_t)k]).margin(1e-10));
}

TEST_CASE("dimension cap", "[ed]") {
  CHECK_THROWS_AS(make_basis(9, 4, 4), std::invalid_argument);
}

TEST_CASE("slater state reproduces wick double occupancy", "[ed]") {
  ModelParams p;
  p.L = 4;
  p.alpha = 0.5;
  p.M_alpha = 1.0;
  p.kac = true;
  const Eigen::MatrixXd h = build_clean_hopping_matrix(p);
  auto sp = eigensolve(h, true);
  auto b = make_basis(4, 2, 2);
  const Eigen::MatrixXd orbitals = sp.eigenvectors->leftCols(2);
  const Eigen::VectorXd psi = slater_determinant_state(orbitals, b);
  // <FS| H(U=0) |FS> equals the sum of occupied energies
  auto H0 = build_many_body_hamiltonian(h, 0.0, b);
  const double e = psi.dot(H0 * psi);
  CHECK(e == Catch::Approx(2.0 * (sp.eigenvalues[0] + sp.eigenvalues[1])).margin(1e-10));
  // d from the state vs Wick on the orbitals
  double wick = 0.0;
  for (int i = 0; i < 4; ++i) {
    double rho = 0.0;
    for (int l = 0; l < 2; ++l) rho += orbitals(i, l) * orbitals(i, l);
    wick += rho * rho;
  }
  const double d = psi.dot(Eigen::MatrixXd(double_occupancy_diagonal(b).asDiagonal()) * psi);
  CHECK(d == Catch::Approx(wick).margin(1e-12));
}

TEST_CASE("evolution conserves norm, energy and eigenstate observables", "[ed]") {
  const double t = 1.0, U = 0.8;
  Eigen::MatrixXd h(2, 2);
  h << 0, -t, -t, 0;
  auto b = make_basis(2, 1, 1);
  auto H = build_many_body_hamiltonian(h, U, b);
  ExactPropagator prop(H);

  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(4);
  psi0(0) = std::complex<double>(0.6, 0.0);
  psi0(3) = std::complex<double>(0.0, 0.8);
  const double e_start = (psi0.adjoint() * H.cast<std::complex<double>>() * psi0)(0).real();

  Eigen::VectorXcd psi = psi0;
  for (int step = 0; step < 1000; ++step) psi = prop.evolve(psi, 0.01);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-9);
  const double e_end = (psi.adjoint() * H.cast<std::complex<double>>() * psi)(0).real();
  CHECK(std::abs(e_end - e_start) < 1e-9);

  // eigenstate input only picks up a phase
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  Eigen::VectorXcd ground = es.eigenvectors().col(0).cast<std::complex<double>>();
  const double d_before = exact_double_occupancy(ground, b);
  const Eigen::VectorXcd evolved = prop.evolve(ground, 3.7);
  CHECK(exact_double_occupancy(evolved, b) == Catch::Approx(d_before).margin(1e-12));

  // t = 0 is the identity
  CHECK((prop.evolve(psi0, 0.0) - psi0).norm() < 1e-14);
}

TEST_CASE("exact fidelity is one for identical hamiltonians", "[ed]") {
  Eigen::MatrixXd h(2, 2);
  h << 0, -1, -1, 0;
  auto b = make_basis(2, 1, 1);
  auto H = build_many_body_hamiltonian(h, 0.5, b);
  Eigen::VectorXd psi0 = Eigen::VectorXd::Zero(4);
  psi0(1) = 1.0;
  auto f = exact_fidelity(psi0, H, H, {0.0, 0.5, 2.0});
  for (double v : f) CHECK(v == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("two-site ground state double occupancy", "[ed]") {
  // U = 0 symmetric orbital gives d = 0.5
  Eigen::MatrixXd h(2, 2);
  h << 0, -1, -1, 0;
  auto b = make_basis(2, 1, 1);
  auto H = build_many_body_hamiltonian(h, 0.0, b);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  Eigen::VectorXcd g = es.eigenvectors().col(0).cast<std::complex<double>>();
  CHECK(exact_double_occupancy(g, b) == Catch::Approx(0.5).margin(1e-12));
}
