#include "lattes_forge/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace lattes_forge::dynamics {
namespace {

bool finite(Complex z) noexcept { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// sum c[i] x^(D-i): the polynomial seen from the inverted chart.
PolyJet reversed_jet(std::span<const Complex> c, Complex x) noexcept {
  Complex p{0.0}, d1{0.0}, d2{0.0};
  for (auto coefficient : c) {
    d2 = d2 * x + 2.0 * d1;
    d1 = d1 * x + p;
    p = p * x + coefficient;
  }
  return {p, d1, d2};
}

Complex reversed_value(std::span<const Complex> c, Complex x) noexcept {
  Complex p{0.0};
  for (auto coefficient : c) p = p * x + coefficient;
  return p;
}

std::pair<PolyJet, PolyJet> numerator_denominator(const RationalMapCoeffs& f, Chart source, Complex x) {
  if (source == Chart::Finite) return {horner_jet(f.num(), x), horner_jet(f.den(), x)};
  return {reversed_jet(f.num(), x), reversed_jet(f.den(), x)};
}

Complex form_value(std::span<const Complex> c, const SpherePoint& z) {
  Chart chart = z.preferred_chart();
  Complex x = z.coordinate(chart);
  return chart == Chart::Finite ? horner(c, x) : reversed_value(c, x);
}

double coefficient_norm(std::span<const Complex> c) {
  double s = 0.0;
  for (auto x : c) s += std::abs(x);
  return s;
}

}  // namespace

SpherePoint eval(const RationalMapCoeffs& f, const SpherePoint& z) {
  Chart chart = z.preferred_chart();
  Complex x = z.coordinate(chart);
  Complex p, q;
  if (chart == Chart::Finite) {
    p = horner(f.num(), x);
    q = horner(f.den(), x);
  } else {
    p = reversed_value(f.num(), x);
    q = reversed_value(f.den(), x);
  }
  if (std::max(std::abs(p), std::abs(q)) < 1e-300)
    fail(ErrorCode::IndeterminatePoint, "numerator and denominator vanish together");
  return SpherePoint(p, q);
}

ChartJet chart_jet(const RationalMapCoeffs& f, Chart source, Complex x, Chart target) {
  auto [n, m] = numerator_denominator(f, source, x);
  const PolyJet& a = target == Chart::Finite ? n : m;
  const PolyJet& b = target == Chart::Finite ? m : n;
  Complex cross = a.d1 * b.value - a.value * b.d1;
  Complex b2 = b.value * b.value;
  ChartJet jet;
  jet.value = a.value / b.value;
  jet.d1 = cross / b2;
  jet.d2 = (a.d2 * b.value - a.value * b.d2) / b2 - 2.0 * b.d1 * cross / (b2 * b.value);
  return jet;
}

Complex derivative(const RationalMapCoeffs& f, const SpherePoint& z, Chart source, Chart target) {
  return chart_jet(f, source, z.coordinate(source), target).d1;
}

ChartDerivative derivative(const RationalMapCoeffs& f, const SpherePoint& z) {
  ChartDerivative d;
  d.source = z.preferred_chart();
  d.target = eval(f, z).preferred_chart();
  d.value = derivative(f, z, d.source, d.target);
  return d;
}

double spherical_derivative(const RationalMapCoeffs& f, const SpherePoint& z) {
  Chart source = z.preferred_chart();
  Complex x = z.coordinate(source);
  Chart target = eval(f, z).preferred_chart();
  ChartJet jet = chart_jet(f, source, x, target);
  return std::abs(jet.d1) * (1.0 + std::norm(x)) / (1.0 + std::norm(jet.value));
}

std::vector<RootCluster> critical_points(const RationalMapCoeffs& f, double tol) {
  require(tol > 0.0, "tolerance must be positive");
  auto w = f.wronskian();
  const double scale = coefficient_norm(w);
  if (scale == 0.0) fail(ErrorCode::RootCountMismatch, "Wronskian vanishes identically");
  auto clusters = homogeneous_roots(w, std::sqrt(tol));
  const int expected = 2 * f.degree() - 2;
  int total = 0;
  for (const auto& c : clusters) {
    total += c.multiplicity;
    if (c.multiplicity == 1 && std::abs(form_value(w, c.point)) > 1e-6 * scale) {
      std::ostringstream msg;
      msg << "polished critical point " << c.point << " is not a zero of the Wronskian";
      fail(ErrorCode::RootCountMismatch, msg.str());
    }
  }
  if (total != expected)
    fail(ErrorCode::RootCountMismatch,
         "found " + std::to_string(total) + " critical points, expected " + std::to_string(expected));
  return clusters;
}

namespace {

void evaluate_cycle(const RationalMapCoeffs& f, const std::vector<SpherePoint>& pts, CycleData& out) {
  const std::size_t p = pts.size();
  out.points = pts;
  out.period = static_cast<int>(p);
  out.multiplier = 1.0;
  out.residual = 0.0;
  out.contains_critical = false;
  for (std::size_t i = 0; i < p; ++i) {
    const SpherePoint& next = pts[(i + 1) % p];
    out.residual = std::max(out.residual, chordal_distance(eval(f, pts[i]), next));
    out.multiplier *= derivative(f, pts[i], pts[i].preferred_chart(), next.preferred_chart());
    if (spherical_derivative(f, pts[i]) < 1e-6) out.contains_critical = true;
  }
}

}  // namespace

CycleData refine_cycle(const RationalMapCoeffs& f, std::vector<SpherePoint> pts, const CycleOptions& options) {
  require(!pts.empty(), "a cycle needs at least one point");
  const std::size_t p = pts.size();
  std::vector<Chart> charts(p);
  std::vector<Complex> x(p), F(p), d(p), delta(p);
  double previous_step = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < options.max_iter; ++iter) {
    for (std::size_t i = 0; i < p; ++i) {
      charts[i] = pts[i].preferred_chart();
      x[i] = pts[i].coordinate(charts[i]);
    }
    Complex A{1.0}, B{0.0};
    for (std::size_t i = 0; i < p; ++i) {
      std::size_t j = (i + 1) % p;
      ChartJet jet = chart_jet(f, charts[i], x[i], charts[j]);
      if (!finite(jet.value) || !finite(jet.d1))
        fail(ErrorCode::NoConvergence, "cycle iterate left the chart");
      F[i] = jet.value - x[j];
      d[i] = jet.d1;
      A *= d[i];
      B = d[i] * B + F[i];
    }
    Complex denom = 1.0 - A;
    if (std::abs(denom) < 1e-14) fail(ErrorCode::NoConvergence, "cycle multiplier is 1; Newton is singular");
    // delta_{i+1} = d_i delta_i + F_i closed up by delta_p = delta_0.
    delta[0] = B / denom;
    for (std::size_t i = 0; i + 1 < p; ++i) delta[i + 1] = d[i] * delta[i] + F[i];
    double step = 0.0;
    for (auto v : delta) step = std::max(step, std::abs(v));
    double damp = step > 0.5 ? 0.5 / step : 1.0;
    for (std::size_t i = 0; i < p; ++i) pts[i] = SpherePoint::from_chart(charts[i], x[i] + damp * delta[i]);

    CycleData out;
    evaluate_cycle(f, pts, out);
    bool stalled = iter > 2 && step >= 0.5 * previous_step && step < 1e-10;
    if (out.residual <= options.tol || (stalled && out.residual <= 1e3 * options.tol)) return out;
    previous_step = step;
  }
  fail(ErrorCode::NoConvergence, "cycle Newton did not converge in " + std::to_string(options.max_iter) +
                                     " iterations");
}

CycleData find_cycle(const RationalMapCoeffs& f, const SpherePoint& seed, int period, const CycleOptions& options) {
  require(period >= 1, "period must be at least 1");
  std::vector<SpherePoint> pts{seed};
  for (int i = 1; i < period; ++i) pts.push_back(eval(f, pts.back()));
  CycleData cycle = refine_cycle(f, pts, options);
  const double same = std::max(1e-7, std::sqrt(options.tol));
  for (int q = 1; q < period; ++q) {
    if (period % q != 0) continue;
    bool repeats = true;
    for (int i = 0; i + q < period && repeats; ++i)
      repeats = chordal_distance(cycle.points[i], cycle.points[i + q]) < same;
    if (repeats) {
      std::vector<SpherePoint> shorter(cycle.points.begin(), cycle.points.begin() + q);
      return refine_cycle(f, shorter, options);
    }
  }
  return cycle;
}

CycleData continue_cycle(const MapPath& path, const CycleData& cycle, const ContinuationOptions& options) {
  require(options.steps >= 1, "continuation needs at least one step");
  CycleData current = cycle;
  double s = 0.0;
  const double nominal = 1.0 / options.steps;
  double ds = nominal;
  while (s < 1.0) {
    double next = std::min(1.0, s + ds);
    bool ok = false;
    CycleData trial;
    try {
      trial = refine_cycle(path(next), current.points, {options.tol, 20});
      double moved = 0.0;
      for (std::size_t i = 0; i < trial.points.size(); ++i)
        moved = std::max(moved, chordal_distance(trial.points[i], current.points[i]));
      ok = moved < 0.25;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoConvergence) throw;
    }
    if (!ok) {
      ds *= 0.5;
      if (ds < options.min_step) fail(ErrorCode::ContinuationBreakdown, "continuation step underflow");
      continue;
    }
    if (!trial.repelling()) fail(ErrorCode::ContinuationBreakdown, "continued cycle is no longer repelling");
    current = trial;
    s = next;
    ds = std::min(nominal, 2.0 * ds);
  }
  return current;
}

CycleData continue_cycle(const RationalMapCoeffs& f0, const CycleData& cycle, const RationalMapCoeffs& f1,
                         int steps, double tol) {
  require(f0.degree() == f1.degree(), "continuation endpoints must have equal degree");
  Complex inner{0.0};
  for (std::size_t i = 0; i < f0.num().size(); ++i)
    inner += std::conj(f0.num()[i]) * f1.num()[i] + std::conj(f0.den()[i]) * f1.den()[i];
  Complex phase = std::abs(inner) > 0.0 ? std::conj(inner) / std::abs(inner) : Complex(1.0);
  auto path = [&](double s) {
    std::vector<Complex> num(f0.num().size()), den(f0.den().size());
    for (std::size_t i = 0; i < num.size(); ++i) {
      num[i] = (1.0 - s) * f0.num()[i] + s * phase * f1.num()[i];
      den[i] = (1.0 - s) * f0.den()[i] + s * phase * f1.den()[i];
    }
    return RationalMapCoeffs(std::move(num), std::move(den));
  };
  return continue_cycle(path, cycle, {steps, tol, 1e-9});
}

double guard_radius() noexcept { return 10.0 * std::cbrt(kEps); }

double critical_distance_estimate(const RationalMapCoeffs& f, const SpherePoint& z) {
  Chart source = z.preferred_chart();
  ChartJet jet = chart_jet(f, source, z.coordinate(source), eval(f, z).preferred_chart());
  if (jet.d2 == Complex(0.0)) return std::numeric_limits<double>::infinity();
  return std::abs(jet.d1) / std::abs(jet.d2);
}

std::vector<SpherePoint> preimages(const RationalMapCoeffs& f, const SpherePoint& target) {
  std::vector<Complex> h(f.num().size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = target.hw() * f.num()[i] - target.hz() * f.den()[i];
  std::vector<SpherePoint> out;
  for (const auto& c : homogeneous_roots(h, 0.0))
    for (int m = 0; m < c.multiplicity; ++m) out.push_back(c.point);
  return out;
}

SpherePoint pullback_branch(const RationalMapCoeffs& f, const SpherePoint& target, const SpherePoint& near,
                            const PullbackOptions& options) {
  if (critical_distance_estimate(f, near) < guard_radius()) {
    std::ostringstream msg;
    msg << "seed " << near << " lies within the guard radius of a critical point";
    fail(ErrorCode::BranchAmbiguity, msg.str());
  }
  const Chart tc = target.preferred_chart();
  const Complex goal = target.coordinate(tc);
  SpherePoint z = near;
  double previous = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int iter = 0; iter < options.max_iter && !converged; ++iter) {
    Chart sc = z.preferred_chart();
    Complex x = z.coordinate(sc);
    ChartJet jet = chart_jet(f, sc, x, tc);
    if (!finite(jet.value)) fail(ErrorCode::NoConvergence, "pullback iterate maps outside the target chart");
    if (jet.d1 == Complex(0.0)) fail(ErrorCode::BranchAmbiguity, "pullback hit a critical point");
    Complex step = (jet.value - goal) / jet.d1;
    double size = std::abs(step);
    if (size > 0.5) step *= 0.5 / size;
    x -= step;
    z = SpherePoint::from_chart(sc, x);
    converged = size <= options.tol * (1.0 + std::abs(x)) ||
                (iter > 2 && size >= 0.5 * previous && size < 1e-9);
    previous = size;
  }
  if (!converged) fail(ErrorCode::NoConvergence, "pullback Newton did not converge");

  if (options.verify_closest) {
    auto all = preimages(f, target);
    std::sort(all.begin(), all.end(), [&](const SpherePoint& a, const SpherePoint& b) {
      return chordal_distance(a, near) < chordal_distance(b, near);
    });
    if (all.size() >= 2 && chordal_distance(all[0], all[1]) < 10.0 * guard_radius())
      fail(ErrorCode::BranchAmbiguity, "two preimages are within the guard radius near the seed");
    if (chordal_distance(all[0], z) > 1e-8)
      fail(ErrorCode::BranchAmbiguity, "Newton converged to a preimage other than the nearest one");
  }
  return z;
}

std::optional<OrbitCertificate> classify_orbit(const RationalMapCoeffs& f, const SpherePoint& z, int max_iter,
                                               const ClassifyOptions& options) {
  require(max_iter >= 1, "max_iter must be at least 1");
  std::vector<SpherePoint> orbit{z};
  orbit.reserve(max_iter + 1);
  for (int n = 1; n <= max_iter; ++n) {
    orbit.push_back(eval(f, orbit.back()));
    const int first = std::max(0, n - options.window);
    double best = std::numeric_limits<double>::infinity();
    for (int m = first; m < n; ++m) best = std::min(best, chordal_distance(orbit[n], orbit[m]));
    if (!(best < options.tol)) continue;
    // Smallest period among returns within twice the best distance.
    int period = 0;
    for (int m = n - 1; m >= first; --m)
      if (chordal_distance(orbit[n], orbit[m]) <= 2.0 * best) {
        period = n - m;
        break;
      }
    CycleData cycle;
    try {
      cycle = find_cycle(f, orbit[n - period], period);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoConvergence) throw;
      continue;
    }
    for (int l = 0; l <= n; ++l) {
      double dist = std::numeric_limits<double>::infinity();
      std::size_t nearest = 0;
      for (std::size_t j = 0; j < cycle.points.size(); ++j) {
        double d = chordal_distance(orbit[l], cycle.points[j]);
        if (d < dist) {
          dist = d;
          nearest = j;
        }
      }
      if (dist > options.tol) continue;
      OrbitCertificate cert;
      cert.preperiod = l;
      cert.period = cycle.period;
      cert.landing_residual = dist;
      std::rotate(cycle.points.begin(), cycle.points.begin() + static_cast<std::ptrdiff_t>(nearest),
                  cycle.points.end());
      cert.cycle = cycle;
      cert.repelling = cycle.repelling();
      const int keep = std::min<int>(static_cast<int>(orbit.size()), l + cycle.period);
      cert.orbit.assign(orbit.begin(), orbit.begin() + keep);
      return cert;
    }
  }
  return std::nullopt;
}

namespace {

void shade_rows(const RationalMapCoeffs& f, const RenderOptions& o, int row_begin, int row_end,
                std::vector<double>& shading) {
  const double pixel = 2.0 * o.half_width / o.width;
  const double half_height = pixel * o.height / 2.0;
  for (int row = row_begin; row < row_end; ++row) {
    for (int col = 0; col < o.width; ++col) {
      Complex c = o.center + Complex(-o.half_width + (col + 0.5) * pixel, half_height - (row + 0.5) * pixel);
      SpherePoint z(c);
      double sum = 0.0;
      for (int n = 0; n < o.max_iter; ++n) {
        double d = spherical_derivative(f, z);
        sum += std::clamp(std::log(d), -20.0, 20.0);
        z = eval(f, z);
      }
      shading[static_cast<std::size_t>(row) * o.width + col] = sum / o.max_iter;
    }
  }
}

}  // namespace

Image julia_render(const RationalMapCoeffs& f, const RenderOptions& o) {
  require(o.width >= 16 && o.height >= 16, "render grid must be at least 16 x 16");
  require(o.max_iter >= 1 && o.half_width > 0.0, "invalid render options");
  Image image;
  image.width = o.width;
  image.height = o.height;
  image.shading.assign(static_cast<std::size_t>(o.width) * o.height, 0.0);
  const int threads = std::clamp(o.threads, 1, o.height);
  if (threads == 1) {
    shade_rows(f, o, 0, o.height, image.shading);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      int begin = o.height * t / threads, end = o.height * (t + 1) / threads;
      pool.emplace_back([&, begin, end] { shade_rows(f, o, begin, end, image.shading); });
    }
    for (auto& th : pool) th.join();
  }
  image.rgb.resize(image.shading.size() * 3);
  for (std::size_t i = 0; i < image.shading.size(); ++i) {
    // Expanding pixels warm, contracting ones dark blue.
    double u = 0.5 + 0.5 * std::tanh(image.shading[i] / 2.0);
    image.rgb[3 * i] = static_cast<std::uint8_t>(std::lround(255.0 * u));
    image.rgb[3 * i + 1] = static_cast<std::uint8_t>(std::lround(255.0 * u * u));
    image.rgb[3 * i + 2] = static_cast<std::uint8_t>(std::lround(255.0 * std::sqrt(1.0 - u)));
  }
  return image;
}

std::string to_ppm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(image.rgb.begin(), image.rgb.end());
  return out;
}

}  // namespace lattes_forge::dynamics
