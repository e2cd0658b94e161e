#include "lattes_forge/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace lattes_forge::perturbation {

using dynamics::ChartJet;
using dynamics::CycleData;
using elliptic::RationalTorusPoint;
using elliptic::Theta;
using lattes::LattesInstance;
using lattes::LattesSpec;

namespace {

Rational rational_power(int a, int k) {
  Rational p(1);
  for (int i = 0; i < k; ++i) p *= Rational(a);
  return p;
}

double a2k(int a, int k) { return std::pow(static_cast<double>(a) * a, k); }

Complex critical_value_of(const LattesInstance& instance, Family family) {
  return family == Family::X ? instance.theta.v : instance.theta.w;
}

}  // namespace

RationalPair standard_parameters(const Rational& x0, const Rational& y0, int a) {
  require(a != 0, "a must be nonzero");
  for (const auto& [name, value] : {std::pair{"x0", x0}, std::pair{"y0", y0}}) {
    if (!value.denominator_coprime_with(2LL * a)) {
      std::ostringstream msg;
      msg << "denominator " << value.den() << " of " << name << " = " << value.to_string()
          << " is not coprime with 2 and a = " << a;
      fail(ErrorCode::CoprimalityViolation, msg.str());
    }
  }
  if (!(y0 > Rational(0))) fail(ErrorCode::InvalidArgument, "y0 must be positive");
  return {-x0, Rational(1), y0, Rational(0)};
}

RationalMapCoeffs PerturbedFamily::member(Complex parameter) const {
  if (std::abs(1.0 + parameter) == 0.0) fail(ErrorCode::InvalidArgument, "t = -1 collapses the family");
  if (parameter == Complex(0.0)) return base_map;
  return base_map.scaled(1.0 + parameter);
}

std::string_view to_string(Family family) noexcept { return family == Family::X ? "X" : "Y"; }

MarkedPreperiodicPoint mark_torus_point(const LattesInstance& instance, const RationalTorusPoint& address,
                                        const MarkOptions& options) {
  const LattesSpec& spec = instance.spec;
  MarkedPreperiodicPoint m;
  m.torus_address = address;

  // Exact itinerary: stop at the first point whose Theta-image repeats.
  std::vector<RationalTorusPoint> orbit{address.reduced()};
  bool closed = false;
  for (int n = 1; n <= 100000 && !closed; ++n) {
    RationalTorusPoint next = lattes::torus_endo(spec, orbit.back());
    for (int j = 0; j < n; ++j)
      if (next.same_theta_image(orbit[j])) {
        m.preperiod = j;
        m.period = n - j;
        closed = true;
        break;
      }
    if (!closed) orbit.push_back(next);
  }
  if (!closed) fail(ErrorCode::NoCycleDetected, "torus orbit did not close");
  m.itinerary = orbit;

  Theta theta(spec.gamma());
  for (const auto& p : orbit) m.forward_orbit.push_back(theta(p));
  m.position = m.forward_orbit.front();

  bool lands_in_postcritical = false;
  for (std::size_t i = 0; i < orbit.size(); ++i) {
    bool critical = !orbit[i].in_half_lattice() && lattes::torus_endo(spec, orbit[i]).in_half_lattice();
    if (critical) m.critical_steps.push_back(static_cast<int>(i));
    if (static_cast<int>(i) >= m.preperiod && orbit[i].in_half_lattice()) lands_in_postcritical = true;
  }
  m.degenerate = lands_in_postcritical || !m.critical_steps.empty();
  if (m.degenerate && !options.allow_degenerate) {
    std::ostringstream msg;
    msg << "orbit of " << address.s.to_string() << " + " << address.t.to_string() << " gamma "
        << (lands_in_postcritical ? "lands in {0, inf, v, w}" : "passes through a critical point");
    fail(ErrorCode::PostcriticalCollision, msg.str());
  }

  auto cert = dynamics::classify_orbit(instance.map, m.position, options.max_iter, {options.tol, 64});
  if (!cert) fail(ErrorCode::NoCycleDetected, "no cycle detected along the marked orbit");
  if (cert->preperiod != m.preperiod || cert->period != m.period) {
    std::ostringstream msg;
    msg << "numerical certificate (" << cert->preperiod << ", " << cert->period << ") disagrees with the exact "
        << "itinerary (" << m.preperiod << ", " << m.period << ")";
    fail(ErrorCode::ValidationFailed, msg.str());
  }
  m.certificate = *cert;
  if (!m.degenerate) {
    if (!cert->repelling) fail(ErrorCode::NotRepelling, "marked orbit lands on a non-repelling cycle");
    for (const auto& q : cert->cycle.points)
      for (const auto& p : lattes::postcritical_set(spec))
        if (chordal_distance(p, q) < 1e-6)
          fail(ErrorCode::PostcriticalCollision, "landing cycle meets the postcritical set");
  }
  return m;
}

MarkedPreperiodicPoint make_marked_point(const LattesInstance& instance, const RationalPair& pair, int k,
                                         Family family, const MarkOptions& options) {
  require(k >= 1, "k must be at least 1");
  Rational scale = Rational(1) / rational_power(instance.spec.a(), k);
  RationalTorusPoint offset = family == Family::X ? RationalTorusPoint{pair.alpha, pair.alpha_prime}
                                                  : RationalTorusPoint{pair.beta, pair.beta_prime};
  RationalTorusPoint base = family == Family::X ? RationalTorusPoint{Rational(1, 2), Rational(0)}
                                                : RationalTorusPoint{Rational(0), Rational(1, 2)};
  RationalTorusPoint address{base.s + offset.s * scale, base.t + offset.t * scale};
  MarkedPreperiodicPoint m = mark_torus_point(instance, address, options);
  m.k = k;
  m.family = family;
  m.offset = offset;
  return m;
}

namespace {

struct ChainState {
  std::vector<SpherePoint> chain;
  CycleData cycle;
  std::vector<Complex> offsets;
};

bool is_critical_step(const MarkedPreperiodicPoint& m, int i) {
  return std::find(m.critical_steps.begin(), m.critical_steps.end(), i) != m.critical_steps.end();
}

// Solves g(z) = target next to the critical point c from the quadratic
// model, choosing the root whose offset points along `hint`.
std::optional<Complex> critical_pullback_offset(const RationalMapCoeffs& g, const SpherePoint& target,
                                                const SpherePoint& c, const std::optional<Complex>& hint,
                                                SpherePoint& out) {
  const Chart sc = c.preferred_chart(), tc = target.preferred_chart();
  const Complex x0 = c.coordinate(sc), goal = target.coordinate(tc);
  ChartJet jet = dynamics::chart_jet(g, sc, x0, tc);
  if (!std::isfinite(std::abs(jet.value)) || jet.d2 == Complex(0.0)) return std::nullopt;
  Complex root = std::sqrt(jet.d1 * jet.d1 - 2.0 * jet.d2 * (jet.value - goal));
  Complex e1 = (-jet.d1 + root) / jet.d2, e2 = (-jet.d1 - root) / jet.d2;
  Complex e = e1;
  if (hint && std::real(e2 * std::conj(*hint)) > std::real(e1 * std::conj(*hint))) e = e2;
  if (std::abs(e) == 0.0) {
    out = c;
    return Complex(0.0);
  }
  Complex x = x0 + e;
  for (int iter = 0; iter < 40; ++iter) {
    ChartJet j = dynamics::chart_jet(g, sc, x, tc);
    if (j.d1 == Complex(0.0)) break;
    Complex step = (j.value - goal) / j.d1;
    x -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(x))) break;
  }
  if (!(std::abs(x - (x0 + e)) <= 0.5 * std::abs(e))) return std::nullopt;
  out = SpherePoint::from_chart(sc, x);
  return x - x0;
}

// Newton from `seed` is trusted only if its first step is well inside the
// distance to the nearest critical point.
bool regular_step_safe(const RationalMapCoeffs& g, const SpherePoint& target, const SpherePoint& seed) {
  const Chart sc = seed.preferred_chart(), tc = target.preferred_chart();
  ChartJet jet = dynamics::chart_jet(g, sc, seed.coordinate(sc), tc);
  if (!std::isfinite(std::abs(jet.value)) || jet.d1 == Complex(0.0)) return false;
  double newton = std::abs((jet.value - target.coordinate(tc)) / jet.d1);
  double radius = jet.d2 == Complex(0.0) ? std::numeric_limits<double>::infinity() : std::abs(jet.d1 / jet.d2);
  return newton <= 0.25 * radius;
}

std::optional<ChainState> advance(const RationalMapCoeffs& g, const MarkedPreperiodicPoint& m,
                                  const ChainState& from, const TrackOptions& options) {
  try {
    ChainState to;
    to.cycle = dynamics::refine_cycle(g, from.cycle.points, {options.tol, 20});
    for (std::size_t i = 0; i < to.cycle.points.size(); ++i)
      if (chordal_distance(to.cycle.points[i], from.cycle.points[i]) > 0.25) return std::nullopt;
    const int l = m.preperiod;
    to.chain.resize(l + 1);
    to.chain[l] = to.cycle.points[0];
    std::vector<Complex> offsets_reversed;
    int critical_index = static_cast<int>(m.critical_steps.size());
    for (int i = l - 1; i >= 0; --i) {
      if (is_critical_step(m, i)) {
        --critical_index;
        std::optional<Complex> hint;
        if (critical_index < static_cast<int>(from.offsets.size()) && from.offsets[critical_index] != Complex(0.0))
          hint = from.offsets[critical_index];
        else if (critical_index < static_cast<int>(options.branch_hints.size()))
          hint = options.branch_hints[critical_index];
        auto offset = critical_pullback_offset(g, to.chain[i + 1], m.forward_orbit[i], hint, to.chain[i]);
        if (!offset) return std::nullopt;
        offsets_reversed.push_back(*offset);
        continue;
      }
      if (!regular_step_safe(g, to.chain[i + 1], from.chain[i])) return std::nullopt;
      to.chain[i] = dynamics::pullback_branch(g, to.chain[i + 1], from.chain[i], {options.tol, 60, false});
      if (chordal_distance(to.chain[i], from.chain[i]) > 0.25) return std::nullopt;
    }
    to.offsets.assign(offsets_reversed.rbegin(), offsets_reversed.rend());
    return to;
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::NoConvergence:
      case ErrorCode::BranchAmbiguity:
      case ErrorCode::IndeterminatePoint: return std::nullopt;
      default: throw;
    }
  }
}

double conjugacy_residual(const RationalMapCoeffs& g, const ChainState& s) {
  double r = s.cycle.residual;
  for (std::size_t i = 0; i + 1 < s.chain.size(); ++i)
    r = std::max(r, chordal_distance(dynamics::eval(g, s.chain[i]), s.chain[i + 1]));
  return r;
}

}  // namespace

TrackResult track_marked_point(const PerturbedFamily& family, const MarkedPreperiodicPoint& marked, Complex t,
                               const TrackOptions& options) {
  require(options.steps >= 1, "tracking needs at least one step");
  const RationalMapCoeffs f = family.member(0.0);
  ChainState state;
  state.chain.assign(marked.forward_orbit.begin(), marked.forward_orbit.begin() + marked.preperiod + 1);
  std::vector<SpherePoint> cycle(marked.forward_orbit.begin() + marked.preperiod, marked.forward_orbit.end());
  state.cycle = dynamics::refine_cycle(f, cycle, {options.tol, 20});

  TrackResult result;
  if (t == Complex(0.0)) {
    result.point = marked.position;
    result.chain = state.chain;
    result.cycle = state.cycle;
    result.critical_offsets.assign(marked.critical_steps.size(), Complex(0.0));
    result.conjugacy_residual = conjugacy_residual(f, state);
    return result;
  }
  (void)family.member(t);

  const double nominal = 1.0 / options.steps;
  double s = 0.0, ds = nominal;
  int halvings = 0;
  RationalMapCoeffs g = f;
  while (s < 1.0) {
    double next = std::min(1.0, s + ds);
    RationalMapCoeffs trial_map = family.member(t * next);
    auto trial = advance(trial_map, marked, state, options);
    if (!trial) {
      ds *= 0.5;
      if (++halvings > options.max_halvings) {
        std::ostringstream msg;
        msg << "tracking to t = " << t << " broke down at s = " << s;
        fail(ErrorCode::ContinuationBreakdown, msg.str());
      }
      continue;
    }
    state = std::move(*trial);
    g = std::move(trial_map);
    s = next;
    ds = std::min(nominal, 2.0 * ds);
  }
  if (!state.cycle.repelling()) fail(ErrorCode::ContinuationBreakdown, "landing cycle stopped repelling");
  result.point = state.chain.front();
  result.chain = state.chain;
  result.cycle = state.cycle;
  result.critical_offsets = state.offsets;
  result.conjugacy_residual = conjugacy_residual(g, state);
  return result;
}

double case_constant(const LattesSpec& spec) {
  const double a2 = static_cast<double>(spec.a()) * spec.a();
  switch (spec.case_tag()) {
    case lattes::CaseTag::EvenZero: return -1.0;
    case lattes::CaseTag::OddZero: return a2 / (1.0 - a2);
    case lattes::CaseTag::OddHalf: return -a2 / (1.0 + a2);
  }
  return 0.0;
}

namespace {

// Central differences at h, h/2, h/4 with two Richardson steps; returns the
// estimate and the size of the last correction.
std::pair<Complex, double> tracked_derivative(const PerturbedFamily& family, const MarkedPreperiodicPoint& m,
                                              double h) {
  auto d = [&](double step) {
    Complex plus = track_marked_point(family, m, step).point.finite();
    Complex minus = track_marked_point(family, m, -step).point.finite();
    return (plus - minus) / (2.0 * step);
  };
  Complex d0 = d(h), d1 = d(h / 2), d2 = d(h / 4);
  Complex r0 = (4.0 * d1 - d0) / 3.0, r1 = (4.0 * d2 - d1) / 3.0;
  Complex r2 = (16.0 * r1 - r0) / 15.0;
  return {r2, std::abs(r2 - r1)};
}

}  // namespace

TrackedLimits tracked_limits(const LattesInstance& instance, double h) {
  if (!(h >= 1e-7 && h <= 1e-3)) fail(ErrorCode::InvalidArgument, "h must lie in [1e-7, 1e-3]");
  PerturbedFamily family{instance.spec, instance.map, 0.0};
  MarkOptions options;
  options.allow_degenerate = true;
  auto x_inf = mark_torus_point(instance, {Rational(1, 2), Rational(0)}, options);
  auto y_inf = mark_torus_point(instance, {Rational(0), Rational(1, 2)}, options);
  TrackedLimits out;
  std::tie(out.x_dot, out.x_error) = tracked_derivative(family, x_inf, h);
  std::tie(out.y_dot, out.y_error) = tracked_derivative(family, y_inf, h);
  out.v_dot = instance.theta.v;
  out.w_dot = instance.theta.w;
  const double c = case_constant(instance.spec);
  out.x_dot_closed = (1.0 + c) * instance.theta.v;
  out.y_dot_closed = (1.0 + c) * instance.theta.w;
  return out;
}

TrackedLimits tracked_limits(const LattesSpec& spec, double h) {
  return tracked_limits(LattesInstance::build(spec), h);
}

Lemma3Report verify_lemma3(const LattesInstance& instance, double h) {
  Lemma3Report r;
  r.limits = tracked_limits(instance, h);
  const Complex v = instance.theta.v, w = instance.theta.w;
  r.c_from_x = (r.limits.x_dot - r.limits.v_dot) / v;
  r.c_from_y = (r.limits.y_dot - r.limits.w_dot) / w;
  r.c_measured = 0.5 * (r.c_from_x + r.c_from_y);
  r.c_expected = case_constant(instance.spec);
  r.residual = std::abs(r.c_from_x - r.c_from_y);
  r.error_estimate = std::max(r.limits.x_error / std::abs(v), r.limits.y_error / std::abs(w));
  const double allowed = std::max(100.0 * r.error_estimate, 1e-8);
  if (r.residual > allowed) {
    std::ostringstream msg;
    msg << "(x' - v')/v = " << r.c_from_x << " but (y' - w')/w = " << r.c_from_y;
    fail(ErrorCode::LemmaViolation, msg.str());
  }
  if (std::abs(r.limits.x_dot - r.limits.x_dot_closed) > allowed * std::abs(v) ||
      std::abs(r.limits.y_dot - r.limits.y_dot_closed) > allowed * std::abs(w)) {
    std::ostringstream msg;
    msg << "tracked derivatives " << r.limits.x_dot << ", " << r.limits.y_dot << " differ from the closed forms "
        << r.limits.x_dot_closed << ", " << r.limits.y_dot_closed;
    fail(ErrorCode::LemmaViolation, msg.str());
  }
  return r;
}

Lemma3Report verify_lemma3(const LattesSpec& spec, double h) { return verify_lemma3(LattesInstance::build(spec), h); }

void require_feasible(int a, int k) {
  if (a2k(a, k) > 1e8) {
    std::ostringstream msg;
    msg << "a^(2k) = " << a2k(a, k) << " exceeds 1e8 (a = " << a << ", k = " << k
        << "); the collision cannot be resolved in double precision";
    fail(ErrorCode::PrecisionExhausted, msg.str());
  }
}

namespace {

struct CollisionEval {
  Complex value;
  std::vector<Complex> offsets;
};

// position(t) - (1 + t) * critical value, unscaled.
CollisionEval collision_gap(const LattesInstance& instance, const MarkedPreperiodicPoint& marked, Complex t,
                            const TrackOptions& options) {
  PerturbedFamily family{instance.spec, instance.map, 0.0};
  TrackResult r = track_marked_point(family, marked, t, options);
  Complex cv = critical_value_of(instance, marked.family);
  return {r.point.finite() - (1.0 + t) * cv, r.critical_offsets};
}

Complex collision_slope(const LattesInstance& instance, const MarkedPreperiodicPoint& marked) {
  return case_constant(instance.spec) * critical_value_of(instance, marked.family);
}

}  // namespace

Complex rescaled_collision_fn(const LattesInstance& instance, const MarkedPreperiodicPoint& marked, Complex u,
                              const TrackOptions& options) {
  const double scale = a2k(instance.spec.a(), marked.k);
  return scale * collision_gap(instance, marked, u / scale, options).value;
}

Complex limit_u(const LattesInstance& instance, const MarkedPreperiodicPoint& marked) {
  require(marked.offset.has_value(), "limit_u needs a marked point built from a rational pair");
  const Complex gamma = instance.spec.gamma().value();
  const Complex z = marked.offset->s.to_double() + marked.offset->t.to_double() * gamma;
  const Complex coefficient = marked.family == Family::X ? instance.theta.lambda : instance.theta.mu;
  return -coefficient * z * z / collision_slope(instance, marked);
}

namespace {

// Secant on F with the first step taken from the limiting slope.
// Root x is returned in `value`; callers convert to t and u.
template <class F>
CollisionResult secant_solve(F&& fn, Complex x0, Complex slope, double tol, int max_iter,
                             const MarkedPreperiodicPoint& marked, const TrackOptions& base_track) {
  TrackOptions track = base_track;
  auto evaluate = [&](Complex x) {
    CollisionEval e = fn(x, track);
    if (track.branch_hints.empty()) track.branch_hints = e.offsets;
    return e.value;
  };
  CollisionResult out;
  out.k = marked.k;
  out.family = marked.family;
  Complex xa = x0, fa = evaluate(xa);
  Complex xb = xa - fa / slope;
  int iters = 1;
  Complex best_x = xa;
  double best_f = std::abs(fa);
  while (best_f >= tol && iters < max_iter) {
    Complex fb = evaluate(xb);
    ++iters;
    if (std::abs(fb) < best_f) {
      best_f = std::abs(fb);
      best_x = xb;
    }
    if (best_f < tol) break;
    Complex denom = fb - fa;
    if (denom == Complex(0.0)) break;
    Complex xc = xb - fb * (xb - xa) / denom;
    if (std::abs(xc - xb) <= 4.0 * kEps * std::abs(xb)) break;
    xa = xb;
    fa = fb;
    xb = xc;
  }
  if (!(best_f < 10.0 * tol)) {
    std::ostringstream msg;
    msg << "collision solve for k = " << marked.k << " stalled at residual " << best_f;
    fail(ErrorCode::NoConvergence, msg.str());
  }
  out.value = best_x;
  out.residual = best_f;
  out.newton_iters = iters;
  out.branch_hints = track.branch_hints;
  return out;
}

}  // namespace

CollisionResult solve_collision(const LattesInstance& instance, const MarkedPreperiodicPoint& marked,
                                const CollisionOptions& options) {
  require_feasible(instance.spec.a(), marked.k);
  const double scale = a2k(instance.spec.a(), marked.k);
  const double tol = std::max(options.tol, 64.0 * kEps * scale);
  auto fn = [&](Complex u, const TrackOptions& track) {
    CollisionEval e = collision_gap(instance, marked, u / scale, track);
    e.value *= scale;
    return e;
  };
  CollisionResult r = secant_solve(fn, limit_u(instance, marked), collision_slope(instance, marked), tol,
                                   options.max_iter, marked, options.track);
  r.rescaled = r.value;
  r.value /= scale;
  return r;
}

CollisionResult solve_collision_naive(const LattesInstance& instance, const MarkedPreperiodicPoint& marked,
                                      const CollisionOptions& options) {
  require_feasible(instance.spec.a(), marked.k);
  const double scale = a2k(instance.spec.a(), marked.k);
  const double tol = std::max(options.tol, 64.0 * kEps * scale) / scale;
  auto fn = [&](Complex t, const TrackOptions& track) { return collision_gap(instance, marked, t, track); };
  CollisionResult r = secant_solve(fn, limit_u(instance, marked) / scale, collision_slope(instance, marked), tol,
                                   options.max_iter, marked, options.track);
  r.rescaled = r.value * scale;
  r.residual *= scale;
  return r;
}

std::vector<SpherePoint> critical_value_set(const RationalMapCoeffs& g, double tol, double cluster) {
  std::vector<SpherePoint> out;
  for (const auto& c : dynamics::critical_points(g, tol)) {
    SpherePoint v = dynamics::eval(g, c.point);
    bool seen = std::any_of(out.begin(), out.end(), [&](const SpherePoint& p) { return chordal_distance(p, v) < cluster; });
    if (!seen) out.push_back(v);
  }
  return out;
}

CertifyReport certify_strictly_pcf(const RationalMapCoeffs& g, const std::vector<SpherePoint>& crit_values,
                                   const CertifyOptions& options) {
  CertifyReport report;
  report.critical_values = crit_values;
  std::vector<SpherePoint> postcritical;
  auto add = [&](const SpherePoint& p) {
    bool seen = std::any_of(postcritical.begin(), postcritical.end(),
                            [&](const SpherePoint& q) { return chordal_distance(p, q) < options.cluster; });
    if (!seen) postcritical.push_back(p);
  };
  for (const auto& cv : crit_values) {
    auto cert = dynamics::classify_orbit(g, cv, options.max_iter, {options.tol, 64});
    if (!cert) {
      std::ostringstream msg;
      msg << "orbit of critical value " << cv << " does not land on a cycle within " << options.max_iter
          << " iterates";
      fail(ErrorCode::NotPCF, msg.str());
    }
    if (!cert->repelling) {
      std::ostringstream msg;
      msg << "critical value " << cv << " reaches a cycle with multiplier " << cert->cycle.multiplier;
      // A gradual approach means an infinite orbit attracted to the cycle.
      if (cert->landing_residual > 1e3 * kEps) fail(ErrorCode::NotPCF, msg.str() + " without landing on it");
      fail(ErrorCode::NotRepelling, msg.str());
    }
    for (const auto& p : cert->orbit) add(p);
    for (const auto& p : cert->cycle.points) add(p);
    report.certificates.push_back(*cert);
  }
  report.postcritical_count = static_cast<int>(postcritical.size());
  report.lattes_witness = report.postcritical_count == 4;
  report.non_lattes_witness = report.postcritical_count > 4;
  return report;
}

namespace {

struct GammaEval {
  LattesInstance instance;
  MarkedPreperiodicPoint x, y;
  CollisionResult s, t;
  Complex h;
};

GammaEval evaluate_gamma(const LattesSpec& spec0, Complex gamma, const RationalPair& pair, int k,
                         const ConstructOptions& options, const std::vector<Complex>& y_hints) {
  LattesSpec spec(elliptic::TorusParameter(gamma), spec0.a(), spec0.case_tag());
  LattesInstance instance = LattesInstance::build(spec, kDefaultTol, options.build);
  MarkOptions mark;
  mark.allow_degenerate = true;
  auto x = make_marked_point(instance, pair, k, Family::X, mark);
  auto y = make_marked_point(instance, pair, k, Family::Y, mark);
  CollisionOptions collision = options.collision;
  auto s = solve_collision(instance, x, collision);
  collision.track.branch_hints = y_hints;
  auto t = solve_collision(instance, y, collision);
  Complex h = s.value / t.value - 1.0;
  return {std::move(instance), std::move(x), std::move(y), s, t, h};
}

}  // namespace

ConstructionResult solve_gamma_k(const LattesSpec& spec0, const RationalPair& pair, int k,
                                 const ConstructOptions& options) {
  require_feasible(spec0.a(), k);
  const Complex gamma0 = spec0.gamma().value();
  GammaEval a = evaluate_gamma(spec0, gamma0, pair, k, options, {});
  RationalMapCoeffs f_base = a.instance.map;
  // Second point from a Newton step on the limit -sigma^2/tau^2 - 1.
  const Complex sig = pair.sigma(gamma0), ta = pair.tau(gamma0);
  Complex dsig = pair.alpha_prime.to_double(), dta = pair.beta_prime.to_double();
  Complex limit_slope = -(2.0 * sig * dsig * ta * ta - 2.0 * sig * sig * ta * dta) / (ta * ta * ta * ta);
  Complex gamma_b = gamma0 - a.h / limit_slope;
  if (!(std::abs(gamma_b - gamma0) < 0.5)) gamma_b = gamma0 + Complex(0.0, 1e-3);
  std::vector<Complex> hints = a.t.branch_hints;
  GammaEval b = evaluate_gamma(spec0, gamma_b, pair, k, options, hints);
  int iterations = 2;
  Complex gamma_a = gamma0;
  while (std::abs(b.h) >= options.tol) {
    if (iterations >= options.max_iter)
      fail(ErrorCode::NoConvergence, "gamma secant did not converge for k = " + std::to_string(k));
    Complex denom = b.h - a.h;
    if (denom == Complex(0.0)) fail(ErrorCode::NoConvergence, "gamma secant stalled");
    Complex gamma_c = gamma_b - b.h * (gamma_b - gamma_a) / denom;
    if (!(gamma_c.imag() > 0.0)) fail(ErrorCode::NoConvergence, "gamma secant left the upper half plane");
    if (std::abs(gamma_c - gamma_b) <= 4.0 * kEps * std::abs(gamma_b)) break;
    hints = b.t.branch_hints;
    GammaEval c = evaluate_gamma(spec0, gamma_c, pair, k, options, hints);
    ++iterations;
    gamma_a = gamma_b;
    a = std::move(b);
    b = std::move(c);
    gamma_b = gamma_c;
  }
  if (!(std::abs(b.h) < 10.0 * options.tol))
    fail(ErrorCode::NoConvergence, "gamma secant stalled for k = " + std::to_string(k));

  ConstructionResult out;
  out.k = k;
  out.gamma0 = gamma0;
  out.gamma_k = gamma_b;
  out.r_k = b.s.value;
  out.s = b.s;
  out.t = b.t;
  out.f_base = f_base;
  out.g_k = b.instance.map.scaled(1.0 + out.r_k);
  out.ratio_residual = std::abs(b.h);
  out.iterations = iterations;
  out.degenerate_marking = b.x.degenerate || b.y.degenerate;
  out.distance_to_base = std::abs(out.gamma_k - gamma0) + std::abs(out.r_k);
  out.map_distance = projective_distance(out.g_k, f_base);

  PerturbedFamily family{b.instance.spec, b.instance.map, 0.0};
  TrackOptions track = options.collision.track;
  SpherePoint moved = track_marked_point(family, b.x, out.r_k, track).point;
  out.collision_gap = chordal_distance(moved, SpherePoint((1.0 + out.r_k) * b.instance.theta.v));

  out.certificate = certify_strictly_pcf(out.g_k, critical_value_set(out.g_k), options.certify);
  return out;
}

ConvergenceTable convergence_table(const LattesSpec& spec0, const RationalPair& pair, int k_min, int k_max,
                                   const ConstructOptions& options, bool construct, int threads) {
  require(k_min >= 1 && k_max >= k_min, "invalid k range");
  const LattesInstance base = LattesInstance::build(spec0, kDefaultTol, options.build);
  const Complex gamma0 = spec0.gamma().value();
  const Complex sig = pair.sigma(gamma0), ta = pair.tau(gamma0);
  const double c = case_constant(spec0);

  ConvergenceTable table;
  table.rows.resize(k_max - k_min + 1);
  auto fill = [&](std::size_t index) {
    TableRow& row = table.rows[index];
    row.k = k_min + static_cast<int>(index);
    row.target = -sig * sig / (ta * ta);
    try {
      require_feasible(spec0.a(), row.k);
      MarkOptions mark;
      mark.allow_degenerate = true;
      auto x = make_marked_point(base, pair, row.k, Family::X, mark);
      auto y = make_marked_point(base, pair, row.k, Family::Y, mark);
      auto s = solve_collision(base, x, options.collision);
      auto t = solve_collision(base, y, options.collision);
      row.s_k = s.value;
      row.t_k = t.value;
      row.u_x = s.rescaled;
      row.u_y = t.rescaled;
      row.ratio = s.value / t.value;
      row.deviation = std::abs(row.ratio - row.target);
      row.rescaled_deviation = std::abs(s.rescaled / (sig * sig) + base.theta.lambda / (c * base.theta.v));
      if (construct) {
        auto result = solve_gamma_k(spec0, pair, row.k, options);
        row.constructed = true;
        row.gamma_k = result.gamma_k;
        row.r_k = result.r_k;
        row.gamma_distance = std::abs(result.gamma_k - gamma0);
        row.certified = result.certificate.non_lattes_witness;
        row.postcritical_count = result.certificate.postcritical_count;
      }
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();
      row.error_code = e.code();
    }
  };
  const int n = static_cast<int>(table.rows.size());
  const int workers = std::clamp(threads, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fill(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int i = w; i < n; i += workers) fill(i);
      });
    for (auto& th : pool) th.join();
  }

  table.monotone = true;
  bool any = false;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    TableRow& row = table.rows[i];
    if (row.k < 3) continue;
    if (!row.ok) {
      table.monotone = false;
      continue;
    }
    any = true;
    if (i > 0 && table.rows[i - 1].ok && table.rows[i - 1].k >= 3) {
      row.converging = row.deviation < table.rows[i - 1].deviation;
      table.monotone = table.monotone && row.converging;
    }
  }
  table.monotone = table.monotone && any;
  return table;
}

}  // namespace lattes_forge::perturbation
