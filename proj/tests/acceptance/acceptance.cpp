// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "lattes_forge/dynamics.hpp"
#include "lattes_forge/elliptic.hpp"
#include "lattes_forge/lattes.hpp"
#include "lattes_forge/perturbation.hpp"
#include "oracles.hpp"

using namespace lattes_forge;
using namespace lattes_forge::perturbation;
using elliptic::TorusParameter;
using lattes::LattesInstance;
using lattes::LattesSpec;

namespace {

const Complex kI(0.0, 1.0);
const Complex kGamma0(1.0 / 3.0, 1.0);

struct Outcome {
  bool pass = false;
  std::string detail;
};

LattesSpec make(Complex gamma, int a, int tag) { return LattesSpec(TorusParameter(gamma), a, lattes::case_from_int(tag)); }

std::string fmt(const char* pattern, double x) {
  char buf[96];
  std::snprintf(buf, sizeof buf, pattern, x);
  return buf;
}

Outcome lemma1_grid() {
  auto start = std::chrono::steady_clock::now();
  double worst = 0.0, worst_kappa = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      auto d = elliptic::theta_data(TorusParameter(Complex(-0.4 + 0.2 * i, 0.8 + 0.2 * j)));
      worst = std::max(worst, d.lemma1_residual);
      worst_kappa = std::max(worst_kappa, d.kappa_residual);
    }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream s;
  s << "max |lambda/v + mu/w| = " << worst << ", max kappa gap = " << worst_kappa << ", " << secs << " s";
  return {worst < 1e-8 && worst_kappa < 1e-8 && secs < 10.0, s.str()};
}

Outcome square_lattice() {
  Complex w = elliptic::theta_data(TorusParameter(kI)).w;
  double err = std::abs(w + 1.0);
  return {err < 1e-10, fmt("|w(i) + 1| = %.3g", err)};
}

Outcome semiconjugacy() {
  double worst = 0.0;
  bool degrees = true;
  for (Complex gamma : {kI, kGamma0})
    for (auto [a, tag] : {std::pair{2, 1}, {3, 2}, {3, 3}}) {
      LattesSpec s = make(gamma, a, tag);
      auto f = lattes::build_rational_map(s);
      worst = std::max(worst, lattes::verify_semiconjugacy(f, s, 200, 20240601));
      degrees = degrees && f.effective_degree() == a * a;
    }
  return {worst < 1e-9 && degrees,
          fmt("max held-out residual %.3g", worst) + (degrees ? ", degrees a^2" : ", DEGREE MISMATCH")};
}

Outcome multipliers() {
  double worst2 = 0.0, worst3 = 0.0;
  for (Complex gamma : {kI, kGamma0}) {
    auto f = LattesInstance::build(make(gamma, 3, 2));
    for (SpherePoint p : {SpherePoint(Complex(0.0)), SpherePoint::infinity(), SpherePoint(f.theta.v),
                          SpherePoint(f.theta.w)})
      worst2 = std::max(worst2, std::abs(dynamics::find_cycle(f.map, p, 1).multiplier - 9.0));
    auto h = LattesInstance::build(make(gamma, 3, 3));
    for (SpherePoint p : {SpherePoint(Complex(0.0)), SpherePoint(h.theta.v)}) {
      auto c = dynamics::find_cycle(h.map, p, 2);
      worst3 = std::max(worst3, c.period == 2 ? std::abs(c.multiplier - 81.0) : 1e300);
    }
  }
  std::ostringstream s;
  s << "case 2 |m - 9| <= " << worst2 << ", case 3 |m - 81| <= " << worst3;
  return {worst2 < 1e-6 && worst3 < 1e-5, s.str()};
}

Outcome lemma3() {
  bool ok = true;
  std::ostringstream s;
  for (auto [a, tag] : {std::pair{2, 1}, {3, 2}, {3, 3}}) {
    auto start = std::chrono::steady_clock::now();
    Lemma3Report r = verify_lemma3(make(kGamma0, a, tag));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    double err = std::abs(r.c_measured - r.c_expected);
    ok = ok && err < 1e-6 && r.residual < 1e-6 && secs < 30.0;
    s << "case " << tag << ": c = " << r.c_measured.real() << " (|err| " << err << ", " << secs << " s); ";
  }
  return {ok, s.str()};
}

Outcome limits(ConvergenceTable& table, const LattesInstance& base, const RationalPair& pair, int sub) {
  const auto& rows = table.rows;
  for (const auto& r : rows)
    if (!r.ok) return {false, "row k = " + std::to_string(r.k) + " failed: " + r.error};
  std::ostringstream s;
  if (sub == 1) {
    bool ok = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
      for (auto [prev, cur] : {std::pair{rows[i - 1].s_k, rows[i].s_k}, {rows[i - 1].t_k, rows[i].t_k}}) {
        double ratio = std::abs(prev) / std::abs(cur);
        ok = ok && ratio > 2.0 && ratio < 8.0;
        s << ratio << " ";
      }
    return {ok, "successive |s_k|, |t_k| ratios (a^2 = 4) " + s.str()};
  }
  if (sub == 2) {
    bool ok = table.monotone && rows.back().deviation < 1e-3;
    for (const auto& r : rows) s << "k=" << r.k << ": " << r.deviation << " ";
    return {ok, "|s_k/t_k + sigma^2/tau^2| " + s.str() + "(need < 1e-3 at k = 6)"};
  }
  // a^(2k) s_k / sigma^2 against its limit -lambda / (x' - v')
  Complex sigma = pair.sigma(kGamma0);
  Complex slope = case_constant(base.spec) * base.theta.v;
  auto tracked = tracked_limits(base);
  double slope_gap = std::abs((tracked.x_dot - tracked.v_dot) - slope);
  Complex limit = -base.theta.lambda / (tracked.x_dot - tracked.v_dot);
  double dev = std::abs(rows.back().u_x / (sigma * sigma) - limit);
  for (const auto& r : rows) s << "k=" << r.k << ": " << std::abs(r.u_x / (sigma * sigma) - limit) << " ";
  return {dev < 1e-3 && slope_gap < 1e-6, "|a^2k s_k/sigma^2 + lambda/(x'-v')| " + s.str() + "(need < 1e-3 at k = 6)"};
}

Outcome construction(const LattesInstance& base, const RationalPair& pair) {
  bool ok = true;
  std::ostringstream s;
  double previous = 1e300;
  for (int k = 3; k <= 6; ++k) {
    try {
      ConstructionResult r = solve_gamma_k(base.spec, pair, k);
      double d = std::abs(r.gamma_k - kGamma0);
      double worst = 0.0;
      bool repelling = true;
      for (const auto& c : r.certificate.certificates) {
        worst = std::max(worst, c.landing_residual);
        repelling = repelling && c.repelling;
      }
      ok = ok && d < previous && repelling && worst < 1e-8 && r.certificate.postcritical_count > 4;
      previous = d;
      s << "k=" << k << ": |gamma_k - gamma0| " << d << ", #P " << r.certificate.postcritical_count << "; ";
    } catch (const Error& e) {
      ok = false;
      s << "k=" << k << ": " << e.what() << "; ";
    }
  }
  auto f = certify_strictly_pcf(base.map, critical_value_set(base.map));
  ok = ok && f.postcritical_count == 4;
  s << "f_gamma0 #P " << f.postcritical_count;
  return {ok, s.str()};
}

Outcome oracles(const LattesInstance& base, const RationalPair& pair) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double worst = 0.0;
  int count = 0;
  for (Complex gamma : {kI, kGamma0, Complex(-0.2, 1.5)}) {
    TorusParameter g(gamma);
    for (int i = 0; i < 50;) {
      double s = u(rng), t = u(rng);
      Complex z = s + t * gamma;
      if (std::abs(z) < 0.05) continue;
      Complex a = elliptic::weierstrass_p({s, t}, g), b = oracle::weierstrass_p_lattice(z, gamma);
      worst = std::max(worst, std::abs(a - b) / (1.0 + std::abs(b)));
      ++i;
      ++count;
    }
  }
  auto x = make_marked_point(base, pair, 3, Family::X);
  double gap = std::abs(solve_collision(base, x).value - solve_collision_naive(base, x).value);
  std::ostringstream s;
  s << count << " points: max rel |p - lattice sum| " << worst << "; |s_3(u) - s_3(t)| " << gap;
  return {worst < 1e-8 && gap < 1e-10, s.str()};
}

Outcome branches() {
  auto inst = LattesInstance::build(make(kGamma0, 3, 3));
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  int agree = 0, total = 0;
  while (total < 20) {
    Complex z(n(rng), n(rng));
    if (dynamics::critical_distance_estimate(inst.map, z) < 0.05) continue;
    SpherePoint target = dynamics::eval(inst.map, z);
    SpherePoint seed = z + Complex(1e-3 * n(rng), 1e-3 * n(rng));
    SpherePoint found = dynamics::pullback_branch(inst.map, target, seed);
    double best = 2.0;
    SpherePoint closest;
    for (const auto& p : dynamics::preimages(inst.map, target))
      if (chordal_distance(p, seed) < best) {
        best = chordal_distance(p, seed);
        closest = p;
      }
    if (chordal_distance(found, closest) < 1e-9) ++agree;
    ++total;
  }
  return {agree == total, std::to_string(agree) + "/" + std::to_string(total) + " queries return the closest preimage"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* title, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", std::to_string(id).c_str(), title, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "lambda/v + mu/w = 0 on a 5x5 grid", lemma1_grid);
  report(2, "w(i) = -1", square_lattice);
  report(3, "semiconjugacy and degree", semiconjugacy);
  report(4, "multipliers of the postcritical cycles", multipliers);
  report(5, "case constants c", lemma3);

  const auto base = LattesInstance::build(make(kGamma0, 2, 1));
  const RationalPair pair = standard_parameters(Rational(1, 3), Rational(1), 2);
  auto start = std::chrono::steady_clock::now();
  ConvergenceTable table = convergence_table(base.spec, pair, 3, 6, {}, false, 1);
  report(6, "(i) s_k, t_k scale like a^-2k",
         [&] { return limits(table, base, pair, 1); });
  report(6, "(ii) s_k/t_k -> -sigma^2/tau^2", [&] { return limits(table, base, pair, 2); });
  report(6, "(iii) a^2k s_k/sigma^2 limit", [&] { return limits(table, base, pair, 3); });
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("  criterion 6 runtime %.2f s (budget 300 s)\n", secs);
  report(7, "construction and certification of g_k, k = 3..6", [&] { return construction(base, pair); });
  report(8, "oracle equivalence", [&] { return oracles(base, pair); });
  report(9, "brute-force branch check", branches);

  std::printf("%d criterion line(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
