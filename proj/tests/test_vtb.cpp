#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "vtb/chargebasis.hpp"
#include "vtb/vtb.hpp"

using namespace vtb;

namespace {

CircuitSpec transmon(double ej, double ec, double ng) {
  CircuitSpec s;
  s.n_nodes = 1;
  s.ec_matrix = Mat::Constant(1, 1, ec);
  s.offset_charges = Vec::Constant(1, ng);
  s.energy_shift = ej;
  s.cosine_terms.push_back({ej, IVec::Ones(1), 0.0});
  return s;
}

CircuitSpec fig3a(double flux) { return flux_qubit_spec(1.0, 1.0 / 60, 50.0 / 60, 0.8, flux); }

}  // namespace

TEST_CASE("ground-state overlap against quadrature") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 2;
    LocalBasis a = oracle::random_local(n, rng), b = oracle::random_local(n, rng);
    IVec j = IVec::Zero(n);
    if (trial % 3 == 1) j(0) = 1;
    if (trial % 3 == 2) j(n - 1) = -1;
    const double exact = oracle::gaussian_overlap_quadrature(a, b, j);
    CHECK(std::abs(gs_overlap(a, b, j) - exact) < 1e-10);
    CHECK(std::abs(gs_overlap(a, b, j) - gs_overlap(b, a, IVec(-j))) < 1e-14);
  }
  std::mt19937_64 r2(22);
  LocalBasis a = oracle::random_local(2, r2);
  CHECK(gs_overlap(a, a, IVec::Zero(2)) == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("neighbor list against an exhaustive lattice scan") {
  auto spec = fig3a(0.5);
  auto minima = find_minima(spec);
  NeighborOptions no;
  auto locals = scheme_bases(spec, minima, Scheme::IP, no);
  for (double eps : {1e-2, 1e-4, 1e-8, 1e-12}) {
    no.epsilon = eps;
    auto list = select_neighbors(locals, no);
    std::set<std::tuple<int, int, int, int>> got, want;
    for (const auto& e : list) got.insert({e.m_left, e.m_right, e.j(0), e.j(1)});
    for (int ml = 0; ml < 2; ++ml)
      for (int mr = 0; mr < 2; ++mr)
        for (int j0 = -3; j0 <= 3; ++j0)
          for (int j1 = -3; j1 <= 3; ++j1) {
            IVec j(2);
            j << j0, j1;
            if (gs_overlap(locals[ml], locals[mr], j) >= eps || (j0 == 0 && j1 == 0)) want.insert({ml, mr, j0, j1});
          }
    CHECK(got == want);
    for (const auto& e : list) CHECK(got.count({e.m_right, e.m_left, -e.j(0), -e.j(1)}) == 1);
  }
  no.epsilon = 0.999999;
  auto tight = select_neighbors(locals, no);
  for (const auto& e : tight) CHECK(e.j.cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("excitation-aware criterion reduces to the ground-state overlap") {
  CHECK(excited_overlap(1e-3, 1.0, 0) == Catch::Approx(1e-3));
  CHECK(excited_overlap(1e-3, 1.0, 3) >= 1e-3);
  CHECK(excited_overlap(1e-3, 1.0, 5) >= excited_overlap(1e-3, 1.0, 3));
}

TEST_CASE("assembled matrices are Hermitian and incremental assembly matches") {
  auto spec = flux_qubit_spec(1.0, 1.0 / 60, 50.0 / 60, 0.8, 0.47, 0.2, 0.3);
  auto minima = find_minima(spec);
  NeighborOptions no;
  auto locals = scheme_bases(spec, minima, Scheme::P, no);
  fock::FockBasis basis(2, 3);
  no.epsilon = 1e-4;
  auto coarse = select_neighbors(locals, no);
  no.epsilon = 1e-9;
  auto fine = select_neighbors(locals, no);
  TBSystem once = assemble(spec, locals, basis, fine);
  CHECK((once.h - once.h.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((once.s - once.s.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
  Assembler inc(spec, locals, basis);
  inc.add(coarse);
  const std::size_t again = inc.add(coarse);
  CHECK(again == 0);
  inc.add(fine);
  TBSystem step = inc.system();
  CHECK((step.h - once.h).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((step.s - once.s).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("canonical orthogonalization removes duplicated basis vectors") {
  std::mt19937_64 rng(23);
  const int n = 6;
  Mat h0 = oracle::random_spd(n, -2.0, 3.0, rng);
  Mat s0 = oracle::random_spd(n, 0.5, 1.5, rng);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ref(h0, s0);
  TBSystem sys;
  Mat dup(2 * n, n);
  dup << Mat::Identity(n, n), Mat::Identity(n, n);
  sys.h = (dup * h0 * dup.transpose()).cast<cplx>();
  sys.s = (dup * s0 * dup.transpose()).cast<cplx>();
  auto r = lowdin_solve(sys, 1e-10, 4);
  CHECK(r.retained == n);
  for (int k = 0; k < 4; ++k) CHECK(r.energies(k) == Catch::Approx(ref.eigenvalues()(k)).epsilon(1e-10));
  TBSystem zero;
  zero.h = CMat::Zero(3, 3);
  zero.s = CMat::Zero(3, 3);
  CHECK_THROWS_AS(lowdin_solve(zero, 1e-10, 1), Error);
}

TEST_CASE("transmon converges to the charge-basis spectrum") {
  auto spec = transmon(20.0, 0.4, 0.25);
  Vec exact = oracle::dense_charge_spectrum(spec, 30, 4);
  TBOptions o;
  o.sigma_max = 20;
  auto r = solve_tight_binding(spec, o);
  REQUIRE(r.energies.size() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(r.energies(k) >= exact(k) - 1e-9);
    CHECK(r.energies(k) - exact(k) < 1e-6);
  }
}

TEST_CASE("energies are variational and non-increasing in sigma_max") {
  auto spec = flux_qubit_spec(1.0, 1.0 / 60, 50.0 / 60, 0.8, 0.47, 0.2, 0.3);
  Vec exact = oracle::dense_charge_spectrum(spec, 8, 4);
  Vec prev;
  for (int sigma = 0; sigma <= 5; ++sigma) {
    TBOptions o;
    o.sigma_max = sigma;
    auto r = solve_tight_binding(spec, o);
    for (Eigen::Index k = 0; k < r.energies.size(); ++k) CHECK(r.energies(k) >= exact(k) - 1e-9);
    if (prev.size() == r.energies.size())
      for (Eigen::Index k = 0; k < r.energies.size(); ++k) CHECK(r.energies(k) <= prev(k) + 1e-9);
    prev = r.energies;
  }
}

TEST_CASE("spectrum is periodic in offset charge and flux") {
  TBOptions o;
  o.sigma_max = 3;
  auto a = solve_tight_binding(flux_qubit_spec(1.0, 0.2, 10.0, 0.8, 0.5, 0.3, 0.1), o);
  auto b = solve_tight_binding(flux_qubit_spec(1.0, 0.2, 10.0, 0.8, 0.5, 1.3, -0.9), o);
  CHECK((a.energies - b.energies).cwiseAbs().maxCoeff() < 1e-9);
  auto c = solve_tight_binding(fig3a(0.47), o);
  auto d = solve_tight_binding(fig3a(1.47), o);
  CHECK((c.energies - d.energies).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("all schemes agree when every minimum has the same curvature") {
  auto spec = fig3a(0.5);
  TBOptions o;
  o.sigma_max = 3;
  o.scheme = Scheme::IP;
  auto ip = solve_tight_binding(spec, o);
  o.scheme = Scheme::P;
  auto p = solve_tight_binding(spec, o);
  CHECK((ip.energies - p.energies).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("anharmonic correction lowers the single-state estimate") {
  auto spec = transmon(10.0, 0.5, 0.0);
  auto minima = find_minima(spec);
  LocalBasis l{minima[0].theta, normal_modes(spec.ec_matrix, minima[0].hessian)};
  NeighborOptions no;
  auto r = anharmonic_optimize(spec, l, no);
  fock::FockBasis ground(1, 0);
  std::vector<LocalBasis> one{l};
  TBSystem sys = assemble(spec, one, ground, select_neighbors(one, no));
  const double base = sys.h(0, 0).real() / sys.s(0, 0).real();
  CHECK(r.energy <= base);
  CHECK(r.lambda.size() == 1);
  // A cosine well is softer than its harmonic approximation: the state widens.
  CHECK(r.lambda(0) > 1.0);
}

TEST_CASE("localization ratios") {
  auto spec = fig3a(0.5);
  auto minima = find_minima(spec);
  NeighborOptions no;
  auto locals = scheme_bases(spec, minima, Scheme::P, no);
  Mat r = localization_ratios(locals);
  CHECK((r - r.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.minCoeff() > 1.0);
}

TEST_CASE("nonzero counting") {
  CMat m = CMat::Zero(3, 3);
  m(0, 0) = 1.0;
  m(1, 2) = cplx(0, 1e-14);
  m(2, 1) = 0.5;
  CHECK(count_nnz(m) == 2);
  CHECK(count_nnz(m, 1e-16) == 3);
}

TEST_CASE("scheme names") {
  CHECK(parse_scheme("IPAC") == Scheme::IPAC);
  CHECK(parse_scheme("pac") == Scheme::PAC);
  CHECK(std::string(to_string(Scheme::P)) == "P");
  CHECK_THROWS_AS(parse_scheme("proper"), Error);
}
