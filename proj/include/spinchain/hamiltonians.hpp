#pragma once

// Gate Hamiltonians as term lists, plus pulse scheduling of gate sequences.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinchain/operators.hpp"
#include "spinchain/pulses.hpp"

namespace spinchain {

enum class GateKind { swap, cnot, cnot_rotated };

inline std::string to_string(GateKind k) {
  switch (k) {
    case GateKind::swap:
      return "SWAP";
    case GateKind::cnot:
      return "CNOT";
    case GateKind::cnot_rotated:
      return "CNOT_rotated";
  }
  return "?";
}

/// A gate on an ordered qubit pair. For the CNOT variants `first` is the
/// control and `second` the target. SWAP uses shapes[0]; the CNOTs use
/// shapes[0] for J^1 and shapes[1] for J^2.
struct GateSpec {
  GateKind kind = GateKind::swap;
  QubitIndex first{1};
  QubitIndex second{2};
  std::vector<PulseShape> shapes;

  static GateSpec swap(QubitIndex a, QubitIndex b, PulseShape s = reference_pulses::swap) {
    return {GateKind::swap, a, b, {s}};
  }
  static GateSpec cnot(QubitIndex control, QubitIndex target,
                       PulseShape j1 = reference_pulses::cnot_1, PulseShape j2 = reference_pulses::cnot_2) {
    return {GateKind::cnot, control, target, {j1, j2}};
  }
  static GateSpec cnot_rotated(QubitIndex control, QubitIndex target,
                               PulseShape j1 = reference_pulses::cnot_1,
                               PulseShape j2 = reference_pulses::cnot_2) {
    return {GateKind::cnot_rotated, control, target, {j1, j2}};
  }

  bool shares_qubit(const GateSpec& o) const {
    return first == o.first || first == o.second || second == o.first || second == o.second;
  }

  void validate() const {
    if (first == second) throw std::invalid_argument("gate acts on identical qubits");
    const std::size_t need = kind == GateKind::swap ? 1 : 2;
    if (shapes.size() != need) {
      throw std::invalid_argument(to_string(kind) + " needs " + std::to_string(need) +
                                  " pulse shapes");
    }
  }
};

/// J(t) * op
struct HamiltonianTerm {
  GaussianPulse pulse;
  LocalOperator op;

  double coefficient(double t) const { return pulse_value(pulse, t); }
};

/// J(t) (XX + YY + ZZ)
inline std::vector<HamiltonianTerm> build_swap_terms(QubitIndex a, QubitIndex b,
                                                     const GaussianPulse& j) {
  if (a == b) throw std::invalid_argument("SWAP on identical qubits");
  return {
      {j, LocalOperator::pauli_pair(a, Pauli::x, b, Pauli::x)},
      {j, LocalOperator::pauli_pair(a, Pauli::y, b, Pauli::y)},
      {j, LocalOperator::pauli_pair(a, Pauli::z, b, Pauli::z)},
  };
}

/// J1(t) (I X + Z I) + J2(t) Z X, control first.
inline std::vector<HamiltonianTerm> build_cnot_terms(QubitIndex control, QubitIndex target,
                                                     const GaussianPulse& j1,
                                                     const GaussianPulse& j2) {
  if (control == target) throw std::invalid_argument("CNOT on identical qubits");
  return {
      {j1, LocalOperator::single(target, pauli(Pauli::x))},
      {j1, LocalOperator::single(control, pauli(Pauli::z))},
      {j2, LocalOperator::pauli_pair(control, Pauli::z, target, Pauli::x)},
  };
}

/// J1(t) (I X - X I) - J2(t) X X: the CNOT Hamiltonian in the frame where the
/// control is rotated by control_frame_rotation().
inline std::vector<HamiltonianTerm> build_rotated_cnot_terms(QubitIndex control,
                                                             QubitIndex target,
                                                             const GaussianPulse& j1,
                                                             const GaussianPulse& j2) {
  if (control == target) throw std::invalid_argument("CNOT on identical qubits");
  return {
      {j1, LocalOperator::single(target, pauli(Pauli::x))},
      {j1, LocalOperator::single(control, -pauli(Pauli::x))},
      {j2, LocalOperator::pair(control, target, -kron(pauli(Pauli::x), pauli(Pauli::x)))},
  };
}

/// exp(i pi/4 sigma_y): maps sigma_z to -sigma_x under R (.) R^dagger.
inline Eigen::Matrix2cd control_frame_rotation() {
  const double c = std::cos(std::numbers::pi / 4.0);
  const double s = std::sin(std::numbers::pi / 4.0);
  return (c * pauli(Pauli::identity) + kI * s * pauli(Pauli::y)).eval();
}

/// Places a unit-slot gate into the slot starting at `start` of length alpha.
inline std::vector<HamiltonianTerm> build_gate_terms(const GateSpec& g, double start,
                                                     double alpha) {
  g.validate();
  auto place = [&](const PulseShape& s) {
    GaussianPulse p = rescale(s, alpha);
    p.center += start;
    return p;
  };
  switch (g.kind) {
    case GateKind::swap:
      return build_swap_terms(g.first, g.second, place(g.shapes[0]));
    case GateKind::cnot:
      return build_cnot_terms(g.first, g.second, place(g.shapes[0]), place(g.shapes[1]));
    case GateKind::cnot_rotated:
      return build_rotated_cnot_terms(g.first, g.second, place(g.shapes[0]),
                                      place(g.shapes[1]));
  }
  throw std::logic_error("unknown gate kind");
}

/// Ideal two-qubit unitary, first qubit most significant.
inline Eigen::Matrix4cd ideal_gate(GateKind k) {
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
  if (k == GateKind::swap) {
    u(0, 0) = u(1, 2) = u(2, 1) = u(3, 3) = 1.0;
  } else {
    u(0, 0) = u(1, 1) = u(2, 3) = u(3, 2) = 1.0;
  }
  return u;
}

struct ScheduledGate {
  GateSpec gate;
  std::vector<HamiltonianTerm> terms;
};

/// One pulse window. Gates in the same slot act on disjoint pairs.
struct Slot {
  double start = 0.0;
  double end = 0.0;
  std::vector<ScheduledGate> gates;
};

struct PulseSchedule {
  double slot_duration = 1.0;
  std::vector<Slot> slots;

  double total_time() const { return slots.empty() ? 0.0 : slots.back().end; }
  std::size_t gate_count() const {
    std::size_t n = 0;
    for (const auto& s : slots) n += s.gates.size();
    return n;
  }
};

/// Explicit slot layout; rejects intersecting pairs within a slot.
inline PulseSchedule schedule_slots(const std::vector<std::vector<GateSpec>>& layout,
                                    double alpha = 1.0) {
  if (!(alpha > 0.0)) throw std::invalid_argument("slot duration factor must be positive");
  PulseSchedule out;
  out.slot_duration = alpha;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    Slot slot;
    slot.start = alpha * static_cast<double>(k);
    slot.end = alpha * static_cast<double>(k + 1);
    for (std::size_t i = 0; i < layout[k].size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (layout[k][i].shares_qubit(layout[k][j])) {
          throw std::invalid_argument("gates in slot " + std::to_string(k + 1) +
                                      " act on intersecting pairs");
        }
      }
      slot.gates.push_back({layout[k][i], build_gate_terms(layout[k][i], slot.start, alpha)});
    }
    out.slots.push_back(std::move(slot));
  }
  return out;
}

/// One slot per gate; with parallel_pairs a gate joins the current slot when
/// it is disjoint from everything already in it. Slot k is centered at
/// (k - 1/2) alpha.
inline PulseSchedule schedule_sequence(const std::vector<GateSpec>& gates, bool parallel_pairs,
                                       double alpha = 1.0) {
  std::vector<std::vector<GateSpec>> layout;
  for (const auto& g : gates) {
    g.validate();
    const bool join = parallel_pairs && !layout.empty() &&
                      std::none_of(layout.back().begin(), layout.back().end(),
                                   [&](const GateSpec& o) { return o.shares_qubit(g); });
    if (join) {
      layout.back().push_back(g);
    } else {
      layout.push_back({g});
    }
  }
  return schedule_slots(layout, alpha);
}

struct EvaluatedTerm {
  double coefficient;
  LocalOperator op;
};

/// Terms of every gate whose slot contains t (closed at the final slot end).
inline std::vector<EvaluatedTerm> assemble_chain_hamiltonian(const PulseSchedule& schedule,
                                                             double t) {
  std::vector<EvaluatedTerm> out;
  for (std::size_t k = 0; k < schedule.slots.size(); ++k) {
    const auto& s = schedule.slots[k];
    const bool last = k + 1 == schedule.slots.size();
    if (t < s.start || t > s.end || (t == s.end && !last)) continue;
    for (const auto& g : s.gates) {
      for (const auto& term : g.terms) out.push_back({term.coefficient(t), term.op});
    }
  }
  return out;
}

/// Sum of a gate's terms at time t as a 4x4 block on (first, second).
inline Eigen::Matrix4cd gate_block(const ScheduledGate& g, double t) {
  Eigen::Matrix4cd h = Eigen::Matrix4cd::Zero();
  const Eigen::Matrix2cd id = pauli(Pauli::identity);
  for (const auto& term : g.terms) {
    const double c = term.coefficient(t);
    const auto& tg = term.op.targets();
    if (tg.size() == 2) {
      if (tg[0] == g.gate.first && tg[1] == g.gate.second) {
        h += c * term.op.block();
      } else {
        throw std::logic_error("gate term targets do not match gate pair");
      }
    } else if (tg[0] == g.gate.first) {
      h += c * kron(term.op.block(), id);
    } else if (tg[0] == g.gate.second) {
      h += c * kron(id, term.op.block());
    } else {
      throw std::logic_error("gate term target outside gate pair");
    }
  }
  return h;
}

}  // namespace spinchain
