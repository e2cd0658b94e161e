#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lattes_forge/core.hpp"
#include "lattes_forge/polynomial.hpp"
#include "lattes_forge/rational_map.hpp"
#include "lattes_forge/sphere.hpp"

namespace lattes_forge::dynamics {

// Homogeneous evaluation (P(Z,W) : Q(Z,W)), computed in whichever chart
// keeps the argument bounded by 1.
SpherePoint eval(const RationalMapCoeffs& f, const SpherePoint& z);

struct ChartJet {
  Complex value;
  Complex d1;
  Complex d2;
};

// f written in coordinates: x is a coordinate in `source`, the result is in
// `target`, with first and second derivatives.
ChartJet chart_jet(const RationalMapCoeffs& f, Chart source, Complex x, Chart target);

struct ChartDerivative {
  Chart source = Chart::Finite;
  Chart target = Chart::Finite;
  Complex value;
};

// df/dz in the preferred charts of z and f(z).
ChartDerivative derivative(const RationalMapCoeffs& f, const SpherePoint& z);
Complex derivative(const RationalMapCoeffs& f, const SpherePoint& z, Chart source, Chart target);

// |f'| measured in the chordal metric; independent of charts.
double spherical_derivative(const RationalMapCoeffs& f, const SpherePoint& z);

// Critical points with multiplicity (zeros of P'Q - PQ' as a form of degree
// 2D - 2), clustered at radius sqrt(tol).
std::vector<RootCluster> critical_points(const RationalMapCoeffs& f, double tol = kDefaultTol);

struct CycleData {
  std::vector<SpherePoint> points;
  int period = 1;
  Complex multiplier;
  double residual = 0.0;
  bool contains_critical = false;

  bool repelling() const noexcept { return std::abs(multiplier) > 1.0; }
};

struct CycleOptions {
  double tol = 1e-12;
  int max_iter = 60;
};

// Newton on f^period(z) = z by multiple shooting from the orbit of `seed`.
// A smaller true period is detected and reported.
CycleData find_cycle(const RationalMapCoeffs& f, const SpherePoint& seed, int period,
                     const CycleOptions& options = {});
// Newton from explicit approximations of all cycle points.
CycleData refine_cycle(const RationalMapCoeffs& f, std::vector<SpherePoint> guess,
                       const CycleOptions& options = {});

// Map at path parameter s in [0, 1].
using MapPath = std::function<RationalMapCoeffs(double)>;

struct ContinuationOptions {
  int steps = 8;
  double tol = 1e-12;
  double min_step = 1e-9;
};

// Follows a repelling cycle along a path of maps, halving the step on Newton
// failure.  Throws ContinuationBreakdown when the step underflows or the cycle
// stops being repelling.
CycleData continue_cycle(const MapPath& path, const CycleData& cycle, const ContinuationOptions& options = {});
// Straight coefficient segment from f0 to f1 (phases aligned first).
CycleData continue_cycle(const RationalMapCoeffs& f0, const CycleData& cycle, const RationalMapCoeffs& f1,
                         int steps, double tol = 1e-12);

struct PullbackOptions {
  double tol = 1e-13;
  int max_iter = 60;
  // Also enumerate all preimages and insist the result is the nearest one.
  bool verify_closest = false;
};

// 10 eps^(1/3): minimum distance from a critical point, in units of the
// local scale |f'/f''|, for an unambiguous inverse branch.
double guard_radius() noexcept;

// Estimated distance from z to the nearest critical point, |f'/f''|.
double critical_distance_estimate(const RationalMapCoeffs& f, const SpherePoint& z);

// Solves f(z) = target by Newton from `near`.
SpherePoint pullback_branch(const RationalMapCoeffs& f, const SpherePoint& target, const SpherePoint& near,
                            const PullbackOptions& options = {});

// All D preimages of target, with multiplicity.
std::vector<SpherePoint> preimages(const RationalMapCoeffs& f, const SpherePoint& target);

struct OrbitCertificate {
  int preperiod = 0;
  int period = 1;
  double landing_residual = 0.0;
  CycleData cycle;
  bool repelling = false;
  // Iterates 0..preperiod + period - 1 of the start point.
  std::vector<SpherePoint> orbit;
};

struct ClassifyOptions {
  double tol = 1e-8;
  int window = 64;
};

// Iterates until a near-return within tol, polishes the cycle and reports the
// minimal preperiod: the first iterate within tol of the polished cycle.
// std::nullopt means no cycle was detected in max_iter.
std::optional<OrbitCertificate> classify_orbit(const RationalMapCoeffs& f, const SpherePoint& z, int max_iter,
                                               const ClassifyOptions& options = {});

struct RenderOptions {
  int width = 256;
  int height = 256;
  int max_iter = 64;
  Complex center{0.0};
  double half_width = 2.0;
  int threads = 1;
};

struct Image {
  int width = 0;
  int height = 0;
  // Mean log spherical derivative along the orbit, row-major.
  std::vector<double> shading;
  std::vector<std::uint8_t> rgb;
};

Image julia_render(const RationalMapCoeffs& f, const RenderOptions& options);
// Binary P6.
std::string to_ppm(const Image& image);

}  // namespace lattes_forge::dynamics
