// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Arguments select a subset, e.g.
// `acceptance 2 6`.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>

#include "oracles.hpp"
#include "vtb/chargebasis.hpp"
#include "vtb/vtb.hpp"

using namespace vtb;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

template <class M>
double max_abs(const Eigen::MatrixBase<M>& m) {
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

double max_residual(const Vec& a, const Vec& b, int levels) {
  double r = 0.0;
  for (int k = 0; k < levels; ++k) r = std::max(r, std::abs(a(k) - b(k)));
  return r;
}

TBResult tb(const CircuitSpec& spec, Scheme scheme, int sigma, int levels = 4) {
  TBOptions o;
  o.scheme = scheme;
  o.sigma_max = sigma;
  o.levels = levels;
  return solve_tight_binding(spec, o);
}

TBResult tb(const CircuitSpec& spec, const std::vector<Minimum>& minima, Scheme scheme, int sigma, int levels = 4) {
  TBOptions o;
  o.scheme = scheme;
  o.sigma_max = sigma;
  o.levels = levels;
  return solve_tight_binding(spec, minima, o);
}

// Charge-basis reference at the largest n_cut where successive cutoffs agree to 1 kHz.
ReferenceSpectrum reference(const CircuitSpec& spec) {
  auto r = converged_reference(spec, 4, 4, 24, 1e-6, 4.0);
  if (!r.converged) throw Error(ErrorCode::NoConvergence, "charge reference did not converge");
  return r;
}

// Flux qubit, EJ/ECJ = 60, ECg/ECJ = 50: flux sweep at sigma_max 5 and the
// half-flux point at sigma_max 10.
Outcome criterion1() {
  double worst = 0.0, worst_flux = 0.0;
  int bad = 0;
  std::string per_point;
  for (int i = 0; i <= 10; ++i) {
    const double flux = 0.45 + 0.01 * i;
    auto spec = flux_qubit_spec(1.0, 1.0 / 60, 50.0 / 60, 0.8, flux);
    auto ref = reference(spec);
    auto r = tb(spec, Scheme::IP, 5);
    const double res = max_residual(r.energies, ref.energies, 4);
    if (res >= 1e-3) ++bad;
    if (res > worst) worst = res, worst_flux = flux;
    per_point += fmt(" %.2f:%.3g", flux, res * 1e3);
  }
  auto spec = flux_qubit_spec(1.0, 1.0 / 60, 50.0 / 60, 0.8, 0.5);
  const double res10 = max_residual(tb(spec, Scheme::IP, 10).energies, reference(spec).energies, 4);
  Outcome o;
  o.pass = bad == 0 && res10 < 1e-6;
  o.detail = fmt("sigma5: %d/11 points >= 1 MHz, worst %.4f MHz at flux %.2f; sigma10 at 0.5: %.3g kHz | MHz per point:",
                 bad, worst * 1e3, worst_flux, res10 * 1e6) +
             per_point;
  return o;
}

Outcome criterion2() {
  auto spec = flux_qubit_spec(1.0, 1.0 / 60, 50.0 / 60, 0.8, 0.47, 0.2, 0.3);
  auto ref = reference(spec);
  auto r = tb(spec, Scheme::IP, 1);
  auto eta = eta_metrics(r.energies, ref.energies);
  const double err = max_residual(r.energies, ref.energies, 4);
  Outcome o;
  o.pass = eta.eta_avg < 7e-3 && err < 25e-3;
  o.detail = fmt("eta_avg %.4e (< 7e-3), max abs error %.3f MHz (< 25 MHz), n_h %lld", eta.eta_avg, err * 1e3, r.n_h);
  return o;
}

// EJ/ECJ = 5, half flux, n_g2 = 0: offset-charge sweep of n_g1.
Outcome criterion3() {
  double worst = 0.0, shift = 0.0;
  for (int i = 0; i <= 10; ++i) {
    const double ng = 0.1 * i;
    auto spec = flux_qubit_spec(1.0, 0.2, 10.0, 0.8, 0.5, ng, 0.0);
    auto ref = reference(spec);
    auto r = tb(spec, Scheme::IP, 5);
    worst = std::max(worst, max_residual(r.energies, ref.energies, 4));
    auto moved = tb(flux_qubit_spec(1.0, 0.2, 10.0, 0.8, 0.5, ng + 1.0, 0.0), Scheme::IP, 5);
    shift = std::max(shift, max_residual(r.energies, moved.energies, 4));
  }
  Outcome o;
  o.pass = worst < 1e-3 && shift < 1e-6;
  o.detail = fmt("max residual %.4f MHz over 11 points (< 1 MHz), n_g1 -> n_g1+1 shift %.2e GHz (< 1e-6)", worst * 1e3,
                 shift);
  return o;
}

// Current mirror with three big junctions. The five-node charge basis is not
// converged to 1 kHz at desk scale; n_cut 6 is used and the 5 -> 6 change is
// charged against the tolerance.
struct MirrorThree {
  CircuitSpec spec = current_mirror_spec(3, 0.2, 35, 45, 10, 0.0);
  std::vector<Minimum> minima = find_minima(spec);
  Vec ref5, ref6;
  std::map<std::pair<Scheme, int>, Vec> tb;

  MirrorThree() {
    ChargeBasisConfig c;
    c.n_cut = 5;
    ref5 = lowest_eigs(build_sparse_h(spec, c), 4);
    c.n_cut = 6;
    ref6 = lowest_eigs(build_sparse_h(spec, c), 4);
  }
  const Vec& energies(Scheme s, int sigma) {
    auto key = std::make_pair(s, sigma);
    auto it = this->tb.find(key);
    if (it == this->tb.end()) it = this->tb.emplace(key, ::tb(spec, minima, s, sigma).energies).first;
    return it->second;
  }
  double ref_uncertainty() const {
    double d = 0.0;
    for (int k = 0; k < 4; ++k) d = std::max(d, std::abs(ref5(k) - ref6(k)) / ref6(k));
    return d;
  }
};

MirrorThree& mirror_three() {
  static MirrorThree m;
  return m;
}

Outcome criterion4() {
  auto& m = mirror_three();
  const Vec& e = m.energies(Scheme::IPAC, 2);
  auto eta = eta_metrics(e, m.ref6);
  const double unc = m.ref_uncertainty();
  Outcome o;
  o.pass = eta.eta_avg + unc <= 1.5e-2;
  o.detail = fmt("IPAC sigma2 eta_avg %.4e vs n_cut 6 (+ reference uncertainty %.2e) <= 1.5e-2, max abs error %.1f MHz",
                 eta.eta_avg, unc, max_residual(e, m.ref6, 4) * 1e3);
  return o;
}

Outcome criterion5() {
  const double tol = 1e-6;
  std::string detail;
  bool pass = true;

  // (a) monotone in sigma_max on five big junctions.
  {
    auto spec = current_mirror_spec(5, 0.2, 35, 45, 10, 0.0);
    auto minima = find_minima(spec);
    Vec prev;
    bool mono = true;
    std::string e0;
    for (int sigma = 1; sigma <= 3; ++sigma) {
      Vec e = tb(spec, minima, Scheme::IP, sigma).energies;
      if (prev.size())
        for (int k = 0; k < 4; ++k) mono = mono && e(k) <= prev(k) + tol;
      e0 += fmt(" %.6f", e(0));
      prev = e;
    }
    pass = pass && mono;
    detail += fmt("(a) N_B=5 IP monotone %s, E0 sigma1..3:%s; ", mono ? "yes" : "NO", e0.c_str());
  }

  // (b) upper bound where the oracle converges (N_B=2) or nearly so (N_B=3).
  {
    auto spec = current_mirror_spec(2, 0.2, 35, 45, 10, 0.0);
    auto minima = find_minima(spec);
    auto ref = reference(spec);
    double slack = 1e300;
    for (Scheme s : {Scheme::IP, Scheme::P, Scheme::IPAC, Scheme::PAC})
      for (int sigma = 1; sigma <= 4; ++sigma) {
        Vec e = tb(spec, minima, s, sigma).energies;
        for (int k = 0; k < 4; ++k) slack = std::min(slack, e(k) - ref.energies(k));
      }
    auto& m = mirror_three();
    double slack3 = 1e300;
    for (Scheme s : {Scheme::IP, Scheme::P, Scheme::IPAC, Scheme::PAC}) {
      const Vec& e = m.energies(s, 2);
      for (int k = 0; k < 4; ++k) slack3 = std::min(slack3, e(k) - m.ref6(k) + std::abs(m.ref5(k) - m.ref6(k)));
    }
    const bool ok = slack >= -tol && slack3 >= -tol;
    pass = pass && ok;
    detail += fmt("(b) min E_tb - E_exact: N_B=2 %.3e GHz (n_cut %d), N_B=3 %.3e GHz; ", slack, ref.n_cut, slack3);
  }

  // (c) every other scheme at or below the improper one at equal sigma_max.
  {
    auto& m = mirror_three();
    const Vec& ip = m.energies(Scheme::IP, 2);
    double worst = -1e300;
    for (Scheme s : {Scheme::P, Scheme::IPAC, Scheme::PAC}) {
      const Vec& e = m.energies(s, 2);
      for (int k = 0; k < 4; ++k) worst = std::max(worst, e(k) - ip(k));
    }
    const bool ok = worst <= tol;
    pass = pass && ok;
    detail += fmt("(c) N_B=3 sigma2 max(E_scheme - E_IP) %.3e GHz", worst);
  }
  return {pass, detail};
}

Outcome criterion6() {
  using fock::FockBasis;
  std::mt19937_64 rng(606);
  const int trials = 200;
  double trans = 0.0, sq = 0.0, block = 0.0, bog = 0.0, gs = 0.0;
  auto cutoff = [](int n) { return n == 1 ? 70 : 26; };
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < trials; ++t) {
    const int n = 1 + t % 2;
    const int sigma = t % 7;
    FockBasis b(n, sigma);
    auto big = oracle::make_space(n, cutoff(n));
    const auto rows = oracle::embed(big, b);
    Mat xi = oracle::random_frame(n, 0.6, 1.5, rng);

    Vec c(n);
    for (int i = 0; i < n; ++i) c(i) = 0.8 * u(rng);
    Vec theta = xi * c * std::sqrt(2.0);
    CMat ref_t = oracle::restrict(big, b, oracle::translation(big, xi, theta).cast<cplx>());
    trans = std::max(trans, max_abs(CMat(fock::translation_matrix(b, xi, theta).cast<cplx>()) - ref_t));

    Mat xp = xi * oracle::random_frame(n, 0.85, 1.18, rng);
    Mat cols = oracle::squeezed_states(big, b, xi, xp);
    Mat ref_s(b.dim(), b.dim());
    for (Eigen::Index i = 0; i < b.dim(); ++i) ref_s.row(i) = cols.row(rows[i]);
    sq = std::max(sq, max_abs(Mat(fock::squeeze_matrix(b, fock::bogoliubov(xi, xp)) - ref_s)));

    Mat xl = xi * oracle::random_frame(n, 0.87, 1.15, rng);
    Mat xr = xi * oracle::random_frame(n, 0.87, 1.15, rng);
    Vec lambda(n);
    for (int i = 0; i < n; ++i) lambda(i) = 0.6 * u(rng);
    Mat sl = oracle::squeezed_states(big, b, xi, xl);
    Mat sr = oracle::squeezed_states(big, b, xi, xr);
    const CVec l = lambda.cast<cplx>(), zero = CVec::Zero(n);
    CMat disp = oracle::mode_exponential(big, zero, l) * (oracle::mode_exponential(big, -l, zero) * sr.cast<cplx>());
    Mat ref_b = sl.transpose() * disp.real();
    Mat got_b = fock::squeezed_displaced_block(b, fock::bogoliubov(xi, xl), fock::bogoliubov(xi, xr), lambda);
    block = std::max(block, max_abs(Mat(got_b - ref_b)));

    auto bo = fock::bogoliubov(oracle::random_frame(n, 0.3, 3.0, rng), oracle::random_frame(n, 0.3, 3.0, rng));
    bog = std::max(bog, max_abs(Mat(bo.u * bo.u.transpose() - bo.v * bo.v.transpose() - Mat::Identity(n, n))));

    LocalBasis la = oracle::random_local(n, rng), lb = oracle::random_local(n, rng);
    IVec j = IVec::Zero(n);
    if (t % 3 == 1) j(0) = 1;
    if (t % 3 == 2) j(n - 1) = -1;
    gs = std::max(gs, std::abs(gs_overlap(la, lb, j) - oracle::gaussian_overlap_quadrature(la, lb, j)));
  }
  Outcome o;
  o.pass = trans < 1e-9 && sq < 1e-9 && block < 1e-9 && bog < 1e-10 && gs < 1e-10;
  o.detail = fmt("%d trials, max entrywise error: translation %.2e, squeeze %.2e, squeezed-displaced %.2e (< 1e-9); "
                 "Bogoliubov %.2e (< 1e-10); gs_overlap %.2e (< 1e-10)",
                 trials, trans, sq, block, bog, gs);
  return o;
}

Outcome criterion7() {
  struct Named {
    const char* name;
    CircuitSpec spec;
  };
  const std::vector<Named> circuits = {
      {"flux_qubit(60,50)", flux_qubit_spec(1.0, 1.0 / 60, 50.0 / 60, 0.8, 0.47, 0.2, 0.3)},
      {"flux_qubit(5,50)", flux_qubit_spec(1.0, 0.2, 10.0, 0.8, 0.5)},
      {"current_mirror(2)", current_mirror_spec(2, 0.2, 35, 45, 10, 0.13)},
      {"current_mirror(3)", current_mirror_spec(3, 0.2, 35, 45, 10, 0.0)},
      {"current_mirror(5)", current_mirror_spec(5, 0.2, 35, 45, 10, 0.3)}};
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  double worst_g = 0.0, worst_h = 0.0;
  for (const auto& c : circuits) {
    const int n = c.spec.n_nodes;
    for (int k = 0; k < 100; ++k) {
      Vec x(n);
      for (int i = 0; i < n; ++i) x(i) = u(rng);
      const Vec g = potential_gradient(c.spec, x);
      const Mat hs = potential_hessian(c.spec, x);
      Vec fd_g(n);
      Mat fd_h(n, n);
      const double hg = 1e-5, hh = 1e-4;
      for (int i = 0; i < n; ++i) {
        Vec ei = Vec::Zero(n);
        ei(i) = hg;
        fd_g(i) = (potential(c.spec, x + ei) - potential(c.spec, x - ei)) / (2 * hg);
        ei(i) = hh;
        for (int j = 0; j < n; ++j) {
          Vec ej = Vec::Zero(n);
          ej(j) = hh;
          fd_h(i, j) = (potential(c.spec, x + ei + ej) - potential(c.spec, x + ei - ej) -
                        potential(c.spec, x - ei + ej) + potential(c.spec, x - ei - ej)) /
                       (4 * hh * hh);
        }
      }
      worst_g = std::max(worst_g, (fd_g - g).norm() / g.norm());
      worst_h = std::max(worst_h, (fd_h - hs).norm() / hs.norm());
    }
  }
  Outcome o;
  o.pass = worst_g < 1e-6 && worst_h < 1e-5;
  o.detail = fmt("%zu circuits x 100 points: gradient rel. error %.2e (< 1e-6), Hessian rel. error %.2e (< 1e-5)",
                 circuits.size(), worst_g, worst_h);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("criterion %d: %s  [%.1f s] %s\n", id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
