#pragma once

// Time evolution under a PulseSchedule: exact-exponential stepping for pure
// states, and fixed-step RK4 on the Lindblad master equation
//
//   d rho/dt = -i [H(t), rho] + sum_n (L_n rho L_n^+ - 1/2 {L_n^+ L_n, rho})
//
// with L_n = sqrt(gamma) sigma_z^n (dephasing) or sqrt(gamma) sigma_-^n
// (amplitude damping) on every site. Nothing here forms a 2^N x 2^N
// Hamiltonian.

#include <bit>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinchain/hamiltonians.hpp"
#include "spinchain/operators.hpp"

namespace spinchain {

enum class NoiseKind { none, dephasing, amplitude_damping };

inline std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::none:
      return "none";
    case NoiseKind::dephasing:
      return "dephasing";
    case NoiseKind::amplitude_damping:
      return "amplitude_damping";
  }
  return "?";
}

/// Uniform per-site noise; gamma in units of 1/tau0.
struct NoiseModel {
  NoiseKind kind = NoiseKind::none;
  double gamma = 0.0;

  void validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
      throw std::invalid_argument("noise rate must be finite and non-negative");
    }
  }
  bool active() const { return kind != NoiseKind::none && gamma > 0.0; }

  static NoiseModel none() { return {}; }
  static NoiseModel dephasing(double g) { return {NoiseKind::dephasing, g}; }
  static NoiseModel amplitude_damping(double g) { return {NoiseKind::amplitude_damping, g}; }
};

enum class StepMethod { trotter_step, rk4 };

struct IntegratorConfig {
  double dt = 1e-3;
  StepMethod method = StepMethod::trotter_step;
};

/// Thrown when the Lindblad trace drifts beyond kTraceAbortTolerance.
class IntegratorAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kTraceAbortTolerance = 1e-6;

inline std::size_t steps_in(double duration, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  const double ratio = duration / dt;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-6 || n < 1.0) {
    throw std::invalid_argument("time step " + std::to_string(dt) +
                                " does not divide slot duration " + std::to_string(duration));
  }
  return static_cast<std::size_t>(n);
}

namespace detail {

inline Eigen::Matrix4cd expm_hermitian(const Eigen::Matrix4cd& h, double dt) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(h);
  Eigen::Vector4cd phases;
  for (int i = 0; i < 4; ++i) phases(i) = std::exp(-kI * es.eigenvalues()(i) * dt);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline LocalOperator pair_operator(const ScheduledGate& g, const Eigen::Matrix4cd& m) {
  return LocalOperator::pair(g.gate.first, g.gate.second, m);
}

/// out = -i [sum_k H_k, rho] + D(rho).
inline void lindblad_rhs_into(const CMatrix& rho, int n_qubits,
                              const std::vector<LocalOperator>& hamiltonian,
                              const NoiseModel& noise, CMatrix& out) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  out.setZero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& h : hamiltonian) {
    accumulate_left(h, n_qubits, rho.data(), out.data(), dim, -kI);
    accumulate_right(h, n_qubits, rho.data(), out.data(), kI);
  }
  if (!noise.active()) return;
  const double g = noise.gamma;
  const complex* r = rho.data();
  complex* o = out.data();
  if (noise.kind == NoiseKind::dephasing) {
    for (std::size_t b = 0; b < dim; ++b) {
      for (std::size_t a = 0; a < dim; ++a) {
        o[a + b * dim] += (-2.0 * g * std::popcount(a ^ b)) * r[a + b * dim];
      }
    }
  } else {
    const int n = n_qubits;
    for (std::size_t b = 0; b < dim; ++b) {
      const int zeros_b = n - std::popcount(b);
      for (std::size_t a = 0; a < dim; ++a) {
        const int zeros_a = n - std::popcount(a);
        complex acc = (-0.5 * g * (zeros_a + zeros_b)) * r[a + b * dim];
        // sigma_- = |1><0| feeds (a, b) from (a ^ m, b ^ m) wherever both bits are set.
        for (std::size_t common = a & b; common != 0; common &= common - 1) {
          const std::size_t m = common & (~common + 1);
          acc += g * r[(a ^ m) + (b ^ m) * dim];
        }
        o[a + b * dim] += acc;
      }
    }
  }
}

}  // namespace detail

/// Right-hand side of the master equation at time t for the whole schedule.
inline DensityMatrix lindblad_rhs(const DensityMatrix& rho, const PulseSchedule& schedule,
                                  const NoiseModel& noise, double t) {
  std::vector<LocalOperator> h;
  for (auto& term : assemble_chain_hamiltonian(schedule, t)) {
    h.push_back(term.op.scaled(term.coefficient));
  }
  CMatrix out;
  detail::lindblad_rhs_into(rho.entries(), rho.num_qubits(), h, noise, out);
  return {rho.num_qubits(), std::move(out)};
}

/// Closed-form action of the single-site noise on an idle qubit.
inline Eigen::Matrix2cd evolve_idle_qubit(const Eigen::Matrix2cd& rho, const NoiseModel& noise,
                                          double duration) {
  if (!noise.active() || duration <= 0.0) return rho;
  Eigen::Matrix2cd out = rho;
  const double g = noise.gamma;
  if (noise.kind == NoiseKind::dephasing) {
    const double c = std::exp(-2.0 * g * duration);
    out(0, 1) *= c;
    out(1, 0) *= c;
  } else {
    const double p = std::exp(-g * duration);
    out(0, 0) = rho(0, 0) * p;
    out(1, 1) = rho(1, 1) + rho(0, 0) * (1.0 - p);
    out(0, 1) *= std::sqrt(p);
    out(1, 0) *= std::sqrt(p);
  }
  return out;
}

using StateObserver = std::function<void(double t, const CVector& psi)>;
using DensityObserver = std::function<void(double t, const CMatrix& rho)>;

namespace detail {

inline void schroedinger_rhs(const CVector& psi, int n, const std::vector<LocalOperator>& h,
                             CVector& out) {
  out.setZero(psi.size());
  for (const auto& op : h) accumulate_left(op, n, psi.data(), out.data(), 1, -kI);
}

}  // namespace detail

/// Pure-state evolution. With trotter_step each step applies
/// exp(-i H(t + dt) dt), exponentiated exactly on each gate's pair.
inline QuantumState evolve_unitary(const QuantumState& psi0, const PulseSchedule& schedule,
                                   const IntegratorConfig& cfg,
                                   const StateObserver& observe = {}) {
  const int n = psi0.num_qubits();
  for (const auto& slot : schedule.slots)
    for (const auto& g : slot.gates) {
      check_qubit(g.gate.first, n);
      check_qubit(g.gate.second, n);
    }
  CVector psi = psi0.amplitudes();
  CVector next(psi.size());
  CVector k1, k2, k3, k4, tmp;
  for (const auto& slot : schedule.slots) {
    const std::size_t steps = steps_in(slot.end - slot.start, cfg.dt);
    auto ops_at = [&](double t) {
      std::vector<LocalOperator> ops;
      for (const auto& g : slot.gates) ops.push_back(detail::pair_operator(g, gate_block(g, t)));
      return ops;
    };
    for (std::size_t i = 1; i <= steps; ++i) {
      const double t = slot.start + static_cast<double>(i) * cfg.dt;
      const double t_prev = t - cfg.dt;
      if (cfg.method == StepMethod::trotter_step) {
        for (const auto& g : slot.gates) {
          const auto u = detail::pair_operator(g, detail::expm_hermitian(gate_block(g, t), cfg.dt));
          next.setZero();
          detail::accumulate_left(u, n, psi.data(), next.data(), 1, 1.0);
          psi.swap(next);
        }
      } else {
        const double h = cfg.dt;
        detail::schroedinger_rhs(psi, n, ops_at(t_prev), k1);
        tmp = psi + 0.5 * h * k1;
        detail::schroedinger_rhs(tmp, n, ops_at(t_prev + 0.5 * h), k2);
        tmp = psi + 0.5 * h * k2;
        detail::schroedinger_rhs(tmp, n, ops_at(t_prev + 0.5 * h), k3);
        tmp = psi + h * k3;
        detail::schroedinger_rhs(tmp, n, ops_at(t), k4);
        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      if (observe) observe(t, psi);
    }
  }
  return {n, std::move(psi)};
}

/// Unitary of a single-slot, two-qubit schedule under trotter stepping.
inline Eigen::Matrix4cd slot_propagator(const Slot& slot, const IntegratorConfig& cfg) {
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
  const std::size_t steps = steps_in(slot.end - slot.start, cfg.dt);
  if (slot.gates.size() != 1) throw std::invalid_argument("slot_propagator needs one gate");
  const auto& g = slot.gates.front();
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t = slot.start + static_cast<double>(i) * cfg.dt;
    u = detail::expm_hermitian(gate_block(g, t), cfg.dt) * u;
  }
  return u;
}

/// RK4 over one slot, in place. Gates in the slot must already use indices
/// of rho's register.
inline void evolve_lindblad_slot(CMatrix& rho, int n_qubits, const Slot& slot,
                                 const NoiseModel& noise, const IntegratorConfig& cfg,
                                 const DensityObserver& observe = {}) {
  const std::size_t steps = steps_in(slot.end - slot.start, cfg.dt);
  if (slot.gates.empty() && !noise.active()) {
    if (observe) {
      for (std::size_t i = 1; i <= steps; ++i) observe(slot.start + double(i) * cfg.dt, rho);
    }
    return;
  }
  auto ops_at = [&](double t) {
    std::vector<LocalOperator> ops;
    ops.reserve(slot.gates.size());
    for (const auto& g : slot.gates) ops.push_back(detail::pair_operator(g, gate_block(g, t)));
    return ops;
  };
  const double h = cfg.dt;
  CMatrix k, acc, stage;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t0 = slot.start + static_cast<double>(i - 1) * h;
    const auto ops_mid = ops_at(t0 + 0.5 * h);
    detail::lindblad_rhs_into(rho, n_qubits, ops_at(t0), noise, k);
    acc = k;
    stage = rho + (0.5 * h) * k;
    detail::lindblad_rhs_into(stage, n_qubits, ops_mid, noise, k);
    acc += 2.0 * k;
    stage = rho + (0.5 * h) * k;
    detail::lindblad_rhs_into(stage, n_qubits, ops_mid, noise, k);
    acc += 2.0 * k;
    stage = rho + h * k;
    detail::lindblad_rhs_into(stage, n_qubits, ops_at(t0 + h), noise, k);
    acc += k;
    rho += (h / 6.0) * acc;
    if (observe) observe(t0 + h, rho);
  }
}

inline void check_trace(const CMatrix& rho, double t) {
  const double drift = std::abs(rho.trace() - complex{1.0, 0.0});
  if (!(drift <= kTraceAbortTolerance)) {
    throw IntegratorAbort("trace drift " + std::to_string(drift) + " at t = " +
                          std::to_string(t));
  }
}

inline void check_density_input(const DensityMatrix& rho) {
  if (std::abs(rho.trace() - complex{1.0, 0.0}) > 1e-8 || rho.hermiticity_error() > 1e-10) {
    throw std::invalid_argument("input is not a unit-trace Hermitian density matrix");
  }
}

inline DensityMatrix evolve_lindblad(const DensityMatrix& rho0, const PulseSchedule& schedule,
                                     const NoiseModel& noise, const IntegratorConfig& cfg,
                                     const DensityObserver& observe = {}) {
  noise.validate();
  check_density_input(rho0);
  const int n = rho0.num_qubits();
  for (const auto& slot : schedule.slots)
    for (const auto& g : slot.gates) {
      check_qubit(g.gate.first, n);
      check_qubit(g.gate.second, n);
    }
  CMatrix rho = rho0.entries();
  for (const auto& slot : schedule.slots) {
    evolve_lindblad_slot(rho, n, slot, noise, cfg, observe);
    check_trace(rho, slot.end);
  }
  return {n, std::move(rho)};
}

/// Ideal unitary for a gate kind; the rotated CNOT is expressed in its frame.
inline Eigen::Matrix4cd ideal_gate_in_frame(GateKind k) {
  if (k != GateKind::cnot_rotated) return ideal_gate(k);
  const Eigen::Matrix4cd r = kron(control_frame_rotation(), pauli(Pauli::identity));
  return r * ideal_gate(GateKind::cnot) * r.adjoint();
}

/// Fidelity of one gate, stretched to alpha*tau0, against G|in>.
inline double gate_fidelity(const QuantumState& input, const GateSpec& gate,
                            const NoiseModel& noise, double alpha,
                            const IntegratorConfig& cfg = {}) {
  if (input.num_qubits() != 2) throw std::invalid_argument("gate_fidelity needs two qubits");
  if (!(alpha > 0.0)) throw std::invalid_argument("duration factor must be positive");
  GateSpec g = gate;
  g.first = QubitIndex{1};
  g.second = QubitIndex{2};
  const auto schedule = schedule_sequence({g}, false, alpha);
  const auto out = evolve_lindblad(DensityMatrix::from_pure(input), schedule, noise, cfg);
  const QuantumState target{2, ideal_gate_in_frame(gate.kind) * input.amplitudes()};
  return fidelity(out, target);
}

}  // namespace spinchain
