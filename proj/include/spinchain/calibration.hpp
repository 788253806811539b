#pragma once

// Pulse calibration: multi-start Nelder-Mead on the mean infidelity over the
// five calibration states, with noiseless evolution over one slot.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "spinchain/dynamics.hpp"
#include "spinchain/parallel.hpp"

namespace spinchain {

struct NelderMeadOptions {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double diameter_tolerance = 1e-10;
  double target_value = 1e-9;
  int max_iterations = 5000;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
};

/// Minimizes f from an initial simplex {x0, x0 + steps_i e_i}.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x0,
                                    const std::vector<double>& steps,
                                    const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  if (n == 0 || steps.size() != n) throw std::invalid_argument("nelder_mead: bad dimensions");
  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += steps[i];
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<std::vector<double>> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      p2[i] = pts[order[i]];
      v2[i] = vals[order[i]];
    }
    pts.swap(p2);
    vals.swap(v2);
  };
  auto diameter = [&] {
    double d = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k) d = std::max(d, std::abs(pts[i][k] - pts[0][k]));
    return d;
  };
  auto along = [&](const std::vector<double>& c, const std::vector<double>& p, double s) {
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = c[k] + s * (p[k] - c[k]);
    return out;
  };

  int it = 0;
  sort_simplex();
  for (; it < opt.max_iterations; ++it) {
    if (vals[0] < opt.target_value || diameter() < opt.diameter_tolerance) break;
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / static_cast<double>(n);

    const auto xr = along(centroid, pts[n], -opt.reflection);
    const double fr = f(xr);
    if (fr < vals[0]) {
      const auto xe = along(centroid, pts[n], -opt.reflection * opt.expansion);
      const double fe = f(xe);
      if (fe < fr) {
        pts[n] = xe;
        vals[n] = fe;
      } else {
        pts[n] = xr;
        vals[n] = fr;
      }
    } else if (fr < vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
    } else {
      const bool outside = fr < vals[n];
      const auto xc = outside ? along(centroid, xr, opt.contraction)
                              : along(centroid, pts[n], opt.contraction);
      const double fc = f(xc);
      if (fc < std::min(fr, vals[n])) {
        pts[n] = xc;
        vals[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          pts[i] = along(pts[0], pts[i], opt.shrink);
          vals[i] = f(pts[i]);
        }
      }
    }
    sort_simplex();
  }
  return {pts[0], vals[0], it};
}

struct ParameterBounds {
  double amplitude_min = 1e-9;  // amplitudes live in (0, amplitude_max]
  double amplitude_max = 50.0;
  double width_min = 1e-4;
  double width_max = 1.0;
};

struct CalibrationProblem {
  GateKind gate = GateKind::swap;
  ParameterBounds bounds;
  IntegratorConfig integrator;

  /// 2 for SWAP (A, W), 4 for the CNOTs (A1, W1, A2, W2).
  std::size_t parameter_count() const { return gate == GateKind::swap ? 2 : 4; }

  bool in_bounds(const std::vector<double>& p) const {
    if (p.size() != parameter_count()) return false;
    for (std::size_t i = 0; i < p.size(); i += 2) {
      if (!(p[i] >= bounds.amplitude_min && p[i] <= bounds.amplitude_max)) return false;
      if (!(p[i + 1] >= bounds.width_min && p[i + 1] <= bounds.width_max)) return false;
    }
    return true;
  }

  GateSpec gate_for(const std::vector<double>& p) const {
    if (gate == GateKind::swap) {
      return GateSpec::swap(QubitIndex{1}, QubitIndex{2}, {p[0], p[1]});
    }
    GateSpec g = GateSpec::cnot(QubitIndex{1}, QubitIndex{2}, {p[0], p[1]}, {p[2], p[3]});
    g.kind = gate;
    return g;
  }

  std::vector<double> reference_parameters() const {
    using namespace reference_pulses;
    if (gate == GateKind::swap) return {swap.amplitude, swap.width};
    return {cnot_1.amplitude, cnot_1.width, cnot_2.amplitude, cnot_2.width};
  }
};

/// |dd>, |du>, |ud>, |uu> and their uniform superposition.
inline std::array<QuantumState, 5> calibration_states() {
  const double h = 0.5;
  return {QuantumState::basis("00"), QuantumState::basis("01"), QuantumState::basis("10"),
          QuantumState::basis("11"), QuantumState{2, CVector::Constant(4, complex{h, 0.0})}};
}

struct CalibrationResult {
  std::vector<double> parameters;
  double objective = 1.0;  // 1 - mean fidelity
  std::array<double, 5> state_fidelities{};
  std::vector<double> areas;           // full-line A sqrt(pi W)
  std::vector<double> windowed_areas;  // over the unit slot
  std::size_t start_index = 0;
  int iterations = 0;
  bool success = false;
};

inline constexpr double kCalibrationSuccessThreshold = 1e-5;

inline CalibrationResult evaluate_parameters(const std::vector<double>& p,
                                             const CalibrationProblem& problem) {
  if (!problem.in_bounds(p)) throw std::out_of_range("calibration parameters out of bounds");
  const auto schedule = schedule_sequence({problem.gate_for(p)}, false, 1.0);
  const Eigen::Matrix4cd u = slot_propagator(schedule.slots.front(), problem.integrator);
  const Eigen::Matrix4cd g = ideal_gate_in_frame(problem.gate);
  CalibrationResult r;
  r.parameters = p;
  double sum = 0.0;
  const auto states = calibration_states();
  for (std::size_t k = 0; k < states.size(); ++k) {
    const CVector& v = states[k].amplitudes();
    r.state_fidelities[k] = std::norm((g * v).dot(u * v));
    sum += r.state_fidelities[k];
  }
  r.objective = std::max(0.0, 1.0 - sum / 5.0);
  for (std::size_t i = 0; i < p.size(); i += 2) {
    const GaussianPulse pulse{p[i], p[i + 1], 0.5};
    r.areas.push_back(pulse_area(pulse));
    r.windowed_areas.push_back(windowed_area(pulse, 0.0, 1.0));
  }
  r.success = r.objective < kCalibrationSuccessThreshold;
  return r;
}

inline double objective(const std::vector<double>& p, const CalibrationProblem& problem) {
  return evaluate_parameters(p, problem).objective;
}

/// Reference values (when inside the bounds) followed by `count` shifted Halton
/// points: amplitudes uniform, widths log-uniform.
inline std::vector<std::vector<double>> default_seeds(const CalibrationProblem& problem,
                                                      std::uint64_t rng_seed,
                                                      std::size_t count = 16) {
  std::vector<std::vector<double>> seeds;
  if (auto t1 = problem.reference_parameters(); problem.in_bounds(t1)) seeds.push_back(t1);
  const std::size_t dims = problem.parameter_count();
  constexpr std::array<int, 4> primes{2, 3, 5, 7};
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> shift(dims);
  for (auto& s : shift) s = unit(rng);
  auto radical_inverse = [](std::size_t i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % static_cast<std::size_t>(base));
      i /= static_cast<std::size_t>(base);
    }
    return r;
  };
  const auto& b = problem.bounds;
  for (std::size_t k = 1; k <= count; ++k) {
    std::vector<double> p(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      const double u = std::fmod(radical_inverse(k, primes[d]) + shift[d], 1.0);
      if (d % 2 == 0) {
        p[d] = b.amplitude_min + u * (b.amplitude_max - b.amplitude_min);
      } else {
        p[d] = b.width_min * std::pow(b.width_max / b.width_min, u);
      }
    }
    seeds.push_back(std::move(p));
  }
  return seeds;
}

/// Multi-start Nelder-Mead from `seeds` plus `quasi_random_starts` Halton
/// points drawn from rng_seed. The best start wins, ties to the lower index.
inline CalibrationResult calibrate(const CalibrationProblem& problem,
                                   std::vector<std::vector<double>> seeds,
                                   std::uint64_t rng_seed,
                                   std::size_t quasi_random_starts = 16,
                                   std::size_t workers = 1,
                                   const NelderMeadOptions& options = {}) {
  if (seeds.empty()) throw std::invalid_argument("calibrate needs at least one seed");
  for (const auto& s : seeds) {
    if (s.size() != problem.parameter_count()) {
      throw std::invalid_argument("seed has wrong parameter count");
    }
  }
  if (quasi_random_starts > 0) {
    auto extra = default_seeds(problem, rng_seed, quasi_random_starts);
    if (problem.in_bounds(problem.reference_parameters())) extra.erase(extra.begin());
    seeds.insert(seeds.end(), extra.begin(), extra.end());
  }
  const double penalty = 10.0;
  auto penalized = [&](const std::vector<double>& p) {
    return problem.in_bounds(p) ? objective(p, problem) : penalty;
  };
  const auto runs = parallel_map(seeds.size(), workers, [&](std::size_t i) {
    std::vector<double> start = seeds[i];
    const auto& b = problem.bounds;
    for (std::size_t d = 0; d < start.size(); d += 2) {
      start[d] = std::clamp(start[d], b.amplitude_min, b.amplitude_max);
      start[d + 1] = std::clamp(start[d + 1], b.width_min, b.width_max);
    }
    std::vector<double> steps(start.size());
    for (std::size_t d = 0; d < start.size(); ++d) {
      steps[d] = -0.1 * start[d];  // step inward so the simplex starts in bounds
    }
    return nelder_mead(penalized, start, steps, options);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (runs[i].value < runs[best].value) best = i;
  }
  CalibrationResult r;
  if (problem.in_bounds(runs[best].x)) {
    r = evaluate_parameters(runs[best].x, problem);
  } else {
    r.parameters = runs[best].x;
    r.objective = 1.0;
  }
  r.start_index = best;
  r.iterations = runs[best].iterations;
  return r;
}

}  // namespace spinchain
