#pragma once

// Transport of a two-qubit payload from sites (1, 2) to (N-1, N) with one
// CNOT and a SWAP cascade, on a line or on a two-row ladder.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinchain/dynamics.hpp"
#include "spinchain/parallel.hpp"

namespace spinchain {

enum class TopologyKind { line_1d, square_2d };
enum class GateOrder { cnot_first, cnot_last };

inline std::string to_string(TopologyKind k) { return k == TopologyKind::line_1d ? "1d" : "2d"; }
inline std::string to_string(GateOrder o) {
  return o == GateOrder::cnot_first ? "cnot-first" : "cnot-last";
}

/// line_1d couples (n, n+1). square_2d is a ladder of N/2 rungs; rung k holds
/// qubits (2k-1, 2k) and the legs couple (2k-1, 2k+1) and (2k, 2k+2).
struct ChainTopology {
  TopologyKind kind = TopologyKind::line_1d;
  int num_qubits = 2;

  void validate() const {
    if (num_qubits < 2) throw std::invalid_argument("chain needs at least two qubits");
    if (kind == TopologyKind::square_2d && num_qubits % 2 != 0) {
      throw std::invalid_argument("square_2d needs an even qubit count");
    }
  }

  bool coupled(QubitIndex a, QubitIndex b) const {
    const int lo = std::min(a.value, b.value), hi = std::max(a.value, b.value);
    if (lo < 1 || hi > num_qubits || lo == hi) return false;
    if (kind == TopologyKind::line_1d) return hi - lo == 1;
    return (hi - lo == 2) || (hi - lo == 1 && lo % 2 == 1);
  }
};

struct TransportCircuit {
  ChainTopology topology;
  GateOrder order = GateOrder::cnot_first;
  std::vector<std::vector<GateSpec>> slots;

  std::size_t slot_count() const { return slots.size(); }
  std::size_t count(GateKind k) const {
    std::size_t n = 0;
    for (const auto& s : slots)
      for (const auto& g : s) n += g.kind == k;
    return n;
  }
  PulseSchedule schedule(double alpha = 1.0) const { return schedule_slots(slots, alpha); }
};

inline TransportCircuit build_transport_circuit(const ChainTopology& topo, GateOrder order,
                                                const PulseSet& pulses = {}) {
  topo.validate();
  const int n = topo.num_qubits;
  auto q = [](int v) { return QubitIndex{v}; };
  std::vector<std::vector<GateSpec>> swaps;
  if (topo.kind == TopologyKind::line_1d) {
    // second payload qubit walks to N, then the first one to N-1
    for (int k = 2; k < n; ++k) swaps.push_back({GateSpec::swap(q(k), q(k + 1), pulses.swap)});
    for (int k = 1; k < n - 1; ++k) swaps.push_back({GateSpec::swap(q(k), q(k + 1), pulses.swap)});
  } else {
    for (int rung = 1; rung < n / 2; ++rung) {
      swaps.push_back({GateSpec::swap(q(2 * rung), q(2 * rung + 2), pulses.swap),
                       GateSpec::swap(q(2 * rung - 1), q(2 * rung + 1), pulses.swap)});
    }
  }
  TransportCircuit c{topo, order, {}};
  if (order == GateOrder::cnot_first) {
    c.slots.push_back({GateSpec::cnot(q(1), q(2), pulses.cnot_1, pulses.cnot_2)});
    c.slots.insert(c.slots.end(), swaps.begin(), swaps.end());
  } else {
    c.slots = std::move(swaps);
    c.slots.push_back({GateSpec::cnot(q(n - 1), q(n), pulses.cnot_1, pulses.cnot_2)});
  }
  for (const auto& s : c.slots)
    for (const auto& g : s) {
      if (!topo.coupled(g.first, g.second)) throw std::logic_error("gate on uncoupled pair");
    }
  return c;
}

/// sin(theta/2)|0> + e^{i phi} cos(theta/2)|1>
struct ParamState {
  double theta = 0.0;
  double phi = 0.0;

  Eigen::Vector2cd amplitudes() const {
    return {complex{std::sin(0.5 * theta), 0.0}, std::polar(std::cos(0.5 * theta), phi)};
  }
};

inline Eigen::Matrix2cd projector(const Eigen::Vector2cd& v) { return v * v.adjoint(); }

/// Expected two-qubit output CNOT(|q1>|q2>).
inline QuantumState transport_target(const Eigen::Vector2cd& q1, const Eigen::Vector2cd& q2) {
  const std::array<Eigen::Vector2cd, 2> in{q1, q2};
  const auto psi = QuantumState::product(in);
  return {2, ideal_gate(GateKind::cnot) * psi.amplitudes()};
}

/// Output pair (N-1, N) of a noisy transport run. Input is
/// rho_q1 (x) rho_q2 (x) |0><0|^(N-2).
///
/// Qubits join the simulated register at the start of their first gate slot,
/// carrying their closed-form idle evolution, and are traced out after their
/// last gate unless they are outputs. Since the noise is local this gives
/// the same reduced state as evolving the full chain.
inline DensityMatrix transport_output(const TransportCircuit& circuit,
                                      const Eigen::Matrix2cd& rho_q1,
                                      const Eigen::Matrix2cd& rho_q2, const NoiseModel& noise,
                                      const IntegratorConfig& cfg = {}, double alpha = 1.0) {
  noise.validate();
  const int n = circuit.topology.num_qubits;
  const std::size_t slots = circuit.slots.size();
  std::vector<std::optional<std::size_t>> first(n + 1), last(n + 1);
  for (std::size_t k = 0; k < slots; ++k) {
    for (const auto& g : circuit.slots[k]) {
      for (auto qi : {g.first, g.second}) {
        check_qubit(qi, n);
        if (!first[qi.value]) first[qi.value] = k;
        last[qi.value] = k;
      }
    }
  }
  auto initial = [&](int qv) -> Eigen::Matrix2cd {
    if (qv == 1) return rho_q1;
    if (qv == 2) return rho_q2;
    return projector(qubit_states::zero());
  };
  auto is_output = [&](int qv) { return qv >= n - 1; };

  std::vector<int> reg;  // register position -> physical qubit
  CMatrix rho = CMatrix::Identity(1, 1);
  auto position = [&](int qv) {
    const auto it = std::find(reg.begin(), reg.end(), qv);
    return static_cast<int>(it - reg.begin()) + 1;
  };
  auto enter = [&](int qv, double t) {
    rho = kron(rho, evolve_idle_qubit(initial(qv), noise, t));
    reg.push_back(qv);
  };

  for (std::size_t k = 0; k < slots; ++k) {
    const double start = alpha * static_cast<double>(k);
    for (int qv = 1; qv <= n; ++qv) {
      if (first[qv] == k) enter(qv, start);
    }
    std::vector<GateSpec> local;
    for (auto g : circuit.slots[k]) {
      g.first = QubitIndex{position(g.first.value)};
      g.second = QubitIndex{position(g.second.value)};
      local.push_back(std::move(g));
    }
    const auto slot = schedule_slots({local}, alpha).slots.front();
    const int width = static_cast<int>(reg.size());
    evolve_lindblad_slot(rho, width, slot, noise, cfg);
    check_trace(rho, start + alpha);

    std::vector<QubitIndex> keep;
    std::vector<int> kept;
    for (int p = 0; p < width; ++p) {
      const int qv = reg[p];
      if (last[qv] == k && !is_output(qv)) continue;
      keep.push_back(QubitIndex{p + 1});
      kept.push_back(qv);
    }
    if (static_cast<int>(kept.size()) != width) {
      rho = reduce_to(DensityMatrix{width, rho}, keep).entries();
      reg = std::move(kept);
    }
  }
  const double end = alpha * static_cast<double>(slots);
  for (int qv : {n - 1, n}) {
    if (std::find(reg.begin(), reg.end(), qv) == reg.end()) enter(qv, end);
  }
  const int width = static_cast<int>(reg.size());
  const std::array<QubitIndex, 2> outs{QubitIndex{position(n - 1)}, QubitIndex{position(n)}};
  return reduce_to(DensityMatrix{width, rho}, outs);
}

/// Same output computed on the full 2^N register.
inline DensityMatrix transport_output_full(const TransportCircuit& circuit,
                                           const Eigen::Matrix2cd& rho_q1,
                                           const Eigen::Matrix2cd& rho_q2,
                                           const NoiseModel& noise,
                                           const IntegratorConfig& cfg = {},
                                           double alpha = 1.0) {
  const int n = circuit.topology.num_qubits;
  CMatrix rho = kron(rho_q1, rho_q2);
  for (int k = 3; k <= n; ++k) rho = kron(rho, projector(qubit_states::zero()));
  const auto out = evolve_lindblad({n, rho}, circuit.schedule(alpha), noise, cfg);
  return partial_trace_keep_last_two(out);
}

/// Fidelity of the output pair against CNOT|q1 q2>. Without noise the run
/// uses the pure-state propagator.
inline double transport_fidelity(const TransportCircuit& circuit, const Eigen::Vector2cd& q1,
                                 const Eigen::Vector2cd& q2, const NoiseModel& noise,
                                 const IntegratorConfig& cfg = {}, double alpha = 1.0) {
  const auto target = transport_target(q1, q2);
  if (!noise.active()) {
    const int n = circuit.topology.num_qubits;
    std::vector<Eigen::Vector2cd> qs(n, qubit_states::zero());
    qs[0] = q1;
    qs[1] = q2;
    IntegratorConfig pure = cfg;
    pure.method = StepMethod::trotter_step;
    const auto out = evolve_unitary(QuantumState::product(qs), circuit.schedule(alpha), pure);
    return fidelity(partial_trace_keep_last_two(DensityMatrix::from_pure(out)), target);
  }
  return fidelity(transport_output(circuit, projector(q1), projector(q2), noise, cfg, alpha),
                  target);
}

inline double transport_fidelity(const TransportCircuit& circuit, const ParamState& q2,
                                 const NoiseModel& noise, const IntegratorConfig& cfg = {}) {
  return transport_fidelity(circuit, qubit_states::plus(), q2.amplitudes(), noise, cfg);
}

// ---------------------------------------------------------------------------
// Gate-order maps over the second input qubit.

/// Output of a transport circuit as an affine function of rho_q2, sampled on
/// |0>, |1>, |+>, |+i>, which span the single-qubit density matrices.
struct TransportChannel {
  std::array<CMatrix, 4> outputs;

  static std::array<Eigen::Vector2cd, 4> probes() {
    const double s = 1.0 / std::sqrt(2.0);
    return {qubit_states::zero(), qubit_states::one(), qubit_states::plus(),
            Eigen::Vector2cd(s, complex{0.0, s})};
  }

  static TransportChannel sample(const TransportCircuit& circuit, const Eigen::Vector2cd& q1,
                                 const NoiseModel& noise, const IntegratorConfig& cfg,
                                 std::size_t workers = 1) {
    const auto pr = probes();
    const auto outs = parallel_map(4, workers, [&](std::size_t j) {
      return transport_output(circuit, projector(q1), projector(pr[j]), noise, cfg).entries();
    });
    TransportChannel ch;
    for (std::size_t j = 0; j < 4; ++j) ch.outputs[j] = outs[j];
    return ch;
  }

  /// rho = a|0><0| + b|1><1| + c|+><+| + d|+i><+i|
  CMatrix apply(const Eigen::Matrix2cd& rho) const {
    const double c = 2.0 * rho(1, 0).real();
    const double d = 2.0 * rho(1, 0).imag();
    const double a = rho(0, 0).real() - 0.5 * (c + d);
    const double b = rho(1, 1).real() - 0.5 * (c + d);
    return a * outputs[0] + b * outputs[1] + c * outputs[2] + d * outputs[3];
  }
};

struct Grid {
  std::vector<double> theta;
  std::vector<double> phi;

  /// Inclusive uniform grid over theta in [0, pi] and phi in [0, 2 pi].
  static Grid uniform(std::size_t rows, std::size_t cols) {
    if (rows < 2 || cols < 2) throw std::invalid_argument("grid needs at least 2x2 points");
    Grid g;
    for (std::size_t i = 0; i < rows; ++i)
      g.theta.push_back(std::numbers::pi * double(i) / double(rows - 1));
    for (std::size_t j = 0; j < cols; ++j)
      g.phi.push_back(2.0 * std::numbers::pi * double(j) / double(cols - 1));
    return g;
  }
};

struct FidelityMap {
  Grid grid;
  std::vector<std::vector<double>> f_cnot_first;  // [theta][phi]
  std::vector<std::vector<double>> f_cnot_last;

  double delta(std::size_t i, std::size_t j) const {
    return f_cnot_first[i][j] - f_cnot_last[i][j];
  }
  std::vector<std::vector<double>> delta() const {
    std::vector<std::vector<double>> d(grid.theta.size(), std::vector<double>(grid.phi.size()));
    for (std::size_t i = 0; i < d.size(); ++i)
      for (std::size_t j = 0; j < d[i].size(); ++j) d[i][j] = delta(i, j);
    return d;
  }
};

/// Delta F = F(cnot-first) - F(cnot-last) on the 4-qubit square for input
/// |+>|q2(theta, phi)>. Each order is sampled as a channel once; grid rows
/// are then filled in parallel.
inline FidelityMap fidelity_difference_map(const Grid& grid, const NoiseModel& noise,
                                           const IntegratorConfig& cfg = {},
                                           std::size_t workers = 1,
                                           const PulseSet& pulses = {}) {
  if (grid.theta.empty() || grid.phi.empty()) throw std::invalid_argument("empty grid");
  const ChainTopology square{TopologyKind::square_2d, 4};
  const auto plus = qubit_states::plus();
  const auto first = TransportChannel::sample(
      build_transport_circuit(square, GateOrder::cnot_first, pulses), plus, noise, cfg, workers);
  const auto last = TransportChannel::sample(
      build_transport_circuit(square, GateOrder::cnot_last, pulses), plus, noise, cfg, workers);
  FidelityMap map{grid, {}, {}};
  using Row = std::pair<std::vector<double>, std::vector<double>>;
  auto rows = parallel_map(grid.theta.size(), workers, [&](std::size_t i) {
    Row r;
    for (double phi : grid.phi) {
      const ParamState q2{grid.theta[i], phi};
      const auto v = q2.amplitudes();
      const auto target = transport_target(plus, v);
      const Eigen::Matrix2cd rho = projector(v);
      r.first.push_back(fidelity(DensityMatrix{2, first.apply(rho)}, target));
      r.second.push_back(fidelity(DensityMatrix{2, last.apply(rho)}, target));
    }
    return r;
  });
  for (auto& r : rows) {
    map.f_cnot_first.push_back(std::move(r.first));
    map.f_cnot_last.push_back(std::move(r.second));
  }
  return map;
}

struct ContourPoint {
  double theta;
  double phi;
};

struct ContourSegment {
  ContourPoint a;
  ContourPoint b;
};

/// Zero level set of values[theta][phi] by marching squares with linear
/// interpolation along cell edges.
inline std::vector<ContourSegment> zero_contour(const Grid& grid,
                                                const std::vector<std::vector<double>>& values) {
  std::vector<ContourSegment> segs;
  const std::size_t rows = grid.theta.size(), cols = grid.phi.size();
  auto crossing = [&](std::size_t i0, std::size_t j0, std::size_t i1, std::size_t j1) {
    const double v0 = values[i0][j0], v1 = values[i1][j1];
    const double s = v0 / (v0 - v1);
    return ContourPoint{grid.theta[i0] + s * (grid.theta[i1] - grid.theta[i0]),
                        grid.phi[j0] + s * (grid.phi[j1] - grid.phi[j0])};
  };
  for (std::size_t i = 0; i + 1 < rows; ++i) {
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      // corners in cyclic order: (i,j) (i,j+1) (i+1,j+1) (i+1,j)
      const std::array<std::pair<std::size_t, std::size_t>, 4> c{
          {{i, j}, {i, j + 1}, {i + 1, j + 1}, {i + 1, j}}};
      std::vector<ContourPoint> pts;
      for (int e = 0; e < 4; ++e) {
        const auto [i0, j0] = c[e];
        const auto [i1, j1] = c[(e + 1) % 4];
        if ((values[i0][j0] > 0.0) != (values[i1][j1] > 0.0)) {
          pts.push_back(crossing(i0, j0, i1, j1));
        }
      }
      for (std::size_t p = 0; p + 1 < pts.size(); p += 2) segs.push_back({pts[p], pts[p + 1]});
    }
  }
  return segs;
}

struct CosineFit {
  double a = 0.0;
  double b = 0.0;
  double rms_residual = 0.0;
  double theta_spread = 0.0;  // standard deviation of the contour thetas
  std::size_t points = 0;
};

/// Least-squares theta(phi) = a cos(2 phi) + b over contour endpoints.
inline CosineFit fit_cos2phi(const std::vector<ContourSegment>& segs) {
  std::vector<ContourPoint> pts;
  for (const auto& s : segs) {
    pts.push_back(s.a);
    pts.push_back(s.b);
  }
  CosineFit fit;
  fit.points = pts.size();
  if (pts.size() < 2) return fit;
  Eigen::MatrixXd design(pts.size(), 2);
  Eigen::VectorXd rhs(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    design(k, 0) = std::cos(2.0 * pts[k].phi);
    design(k, 1) = 1.0;
    rhs(k) = pts[k].theta;
  }
  const Eigen::Vector2d sol = design.colPivHouseholderQr().solve(rhs);
  fit.a = sol(0);
  fit.b = sol(1);
  const Eigen::VectorXd res = design * sol - rhs;
  fit.rms_residual = std::sqrt(res.squaredNorm() / double(pts.size()));
  const double mean = rhs.mean();
  fit.theta_spread = std::sqrt((rhs.array() - mean).square().mean());
  return fit;
}

}  // namespace spinchain
