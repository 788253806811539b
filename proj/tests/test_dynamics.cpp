#include <gtest/gtest.h>

#include <random>

#include "spinchain/dynamics.hpp"

using namespace spinchain;

namespace {

const QubitIndex q1{1}, q2{2}, q3{3}, q4{4};

DensityMatrix random_density(int nq, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  const auto d = Eigen::Index{1} << nq;
  CMatrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = complex{n(rng), n(rng)};
  CMatrix rho = a * a.adjoint();
  return {nq, rho / rho.trace()};
}

PulseSchedule idle_schedule(double duration) {
  PulseSchedule s;
  s.slot_duration = duration;
  s.slots.push_back(Slot{0.0, duration, {}});
  return s;
}

// Column-major vectorized Lindblad generator built from dense Kronecker
// products: vec(A X B) = (B^T (x) A) vec(X).
CMatrix dense_generator(const CMatrix& h, const std::vector<CMatrix>& jumps) {
  const auto d = h.rows();
  const CMatrix id = CMatrix::Identity(d, d);
  CMatrix l = -kI * (kron(id, h) - kron(h.transpose(), id));
  for (const auto& j : jumps) {
    const CMatrix jj = j.adjoint() * j;
    l += kron(j.conjugate(), j) - 0.5 * kron(id, jj) - 0.5 * kron(jj.transpose(), id);
  }
  return l;
}

std::vector<CMatrix> dense_jumps(const NoiseModel& noise, int n) {
  std::vector<CMatrix> out;
  if (!noise.active()) return out;
  const Pauli p = noise.kind == NoiseKind::dephasing ? Pauli::z : Pauli::minus;
  for (int q = 1; q <= n; ++q) {
    out.push_back(std::sqrt(noise.gamma) * embed(LocalOperator::single(QubitIndex{q}, pauli(p)), n));
  }
  return out;
}

CVector vec(const CMatrix& m) { return Eigen::Map<const CVector>(m.data(), m.size()); }

QuantumState plus_zero() {
  const std::array<Eigen::Vector2cd, 2> q{qubit_states::plus(), qubit_states::zero()};
  return QuantumState::product(q);
}

}  // namespace

TEST(Unitary, EmptyScheduleLeavesStateAlone) {
  const auto psi = plus_zero();
  const auto out = evolve_unitary(psi, PulseSchedule{}, IntegratorConfig{});
  EXPECT_TRUE(out.amplitudes() == psi.amplitudes());
}

TEST(Unitary, SwapMovesPlus) {
  const auto out = evolve_unitary(plus_zero(), schedule_sequence({GateSpec::swap(q1, q2)}, false),
                                  IntegratorConfig{});
  const std::array<Eigen::Vector2cd, 2> t{qubit_states::zero(), qubit_states::plus()};
  EXPECT_GE(fidelity(out, QuantumState::product(t)), 0.999999);
}

TEST(Unitary, NormPreservedEveryStep) {
  double worst = 0.0;
  evolve_unitary(plus_zero(), schedule_sequence({GateSpec::cnot(q1, q2)}, false),
                 IntegratorConfig{}, [&](double, const CVector& psi) {
                   worst = std::max(worst, std::abs(psi.norm() - 1.0));
                 });
  EXPECT_LT(worst, 1e-12);
}

TEST(Unitary, StepHalvingConverges) {
  for (auto g : {GateSpec::swap(q1, q2), GateSpec::cnot(q1, q2)}) {
    const auto s = schedule_sequence({g}, false);
    const QuantumState target{2, ideal_gate(g.kind) * plus_zero().amplitudes()};
    const double f1 = fidelity(evolve_unitary(plus_zero(), s, {1e-3}), target);
    const double f2 = fidelity(evolve_unitary(plus_zero(), s, {5e-4}), target);
    EXPECT_LT(std::abs(f1 - f2), 1e-8);
  }
}

TEST(Unitary, ExponentialAndRk4StepsAgree) {
  const auto s = schedule_sequence({GateSpec::cnot(q1, q2), GateSpec::swap(q2, q3)}, false);
  const std::array<Eigen::Vector2cd, 3> q{qubit_states::plus(), qubit_states::one(),
                                          qubit_states::zero()};
  const auto psi = QuantumState::product(q);
  const auto a = evolve_unitary(psi, s, {1e-3, StepMethod::trotter_step});
  const auto b = evolve_unitary(psi, s, {1e-3, StepMethod::rk4});
  EXPECT_GT(fidelity(a, b), 1.0 - 1e-8);
}

TEST(Unitary, RejectsBadStep) {
  const auto s = schedule_sequence({GateSpec::swap(q1, q2)}, false);
  EXPECT_THROW(evolve_unitary(plus_zero(), s, {0.0}), std::invalid_argument);
  EXPECT_THROW(evolve_unitary(plus_zero(), s, {0.3}), std::invalid_argument);
  const auto wide = schedule_sequence({GateSpec::swap(q2, q3)}, false);
  EXPECT_THROW(evolve_unitary(plus_zero(), wide, {}), std::out_of_range);
}

TEST(LindbladRhs, MatchesDenseSuperoperator) {
  std::mt19937_64 rng(17);
  const std::vector<PulseSchedule> schedules{
      schedule_slots({{GateSpec::cnot(q1, q2)}, {GateSpec::swap(q1, q2)}}),
      schedule_slots({{GateSpec::cnot(q1, q2)}, {GateSpec::swap(q2, q3)}}),
      schedule_slots({{GateSpec::cnot_rotated(q3, q4)},
                      {GateSpec::swap(q2, q4), GateSpec::swap(q1, q3)}})};
  for (int n : {2, 3, 4}) {
    const auto& s = schedules[static_cast<std::size_t>(n - 2)];
    for (auto noise : {NoiseModel::none(), NoiseModel::dephasing(0.37),
                       NoiseModel::amplitude_damping(0.53)}) {
      const auto rho = random_density(n, rng);
      for (double t : {0.45, 1.52}) {
        const auto d = Eigen::Index{1} << n;
        CMatrix h = CMatrix::Zero(d, d);
        for (const auto& term : assemble_chain_hamiltonian(s, t)) {
          h += term.coefficient * embed(term.op, n);
        }
        const CVector expect = dense_generator(h, dense_jumps(noise, n)) * vec(rho.entries());
        const auto got = lindblad_rhs(rho, s, noise, t);
        EXPECT_LT((vec(got.entries()) - expect).cwiseAbs().maxCoeff(), 1e-12)
            << "n=" << n << " noise=" << to_string(noise.kind) << " t=" << t;
      }
    }
  }
}

TEST(Lindblad, ZeroRateMatchesUnitary) {
  const auto s = schedule_sequence({GateSpec::cnot(q1, q2)}, false);
  const auto psi = plus_zero();
  const auto pure = evolve_unitary(psi, s, {});
  for (auto noise : {NoiseModel::dephasing(0.0), NoiseModel::amplitude_damping(0.0)}) {
    const auto rho = evolve_lindblad(DensityMatrix::from_pure(psi), s, noise, {});
    EXPECT_NEAR(fidelity(rho, pure), 1.0, 1e-9);
  }
  const auto tiny = evolve_lindblad(DensityMatrix::from_pure(psi), s, NoiseModel::dephasing(1e-8), {});
  EXPECT_NEAR(fidelity(tiny, pure), 1.0, 1e-6);
}

TEST(Lindblad, DephasingClosedForm) {
  const double gamma = 0.7;
  const QuantumState plus{1, qubit_states::plus()};
  const auto rho0 = DensityMatrix::from_pure(plus);
  const double t_end = 5.0 / gamma;
  const double dt = t_end / 5000.0;
  double worst_coh = 0.0, worst_pop = 0.0;
  evolve_lindblad(rho0, idle_schedule(t_end), NoiseModel::dephasing(gamma), {dt},
                  [&](double t, const CMatrix& rho) {
                    const double expect = 0.5 * std::exp(-2.0 * gamma * t);
                    worst_coh = std::max(worst_coh, std::abs(rho(0, 1) - expect) / expect);
                    worst_pop = std::max(worst_pop, std::abs(rho(0, 0).real() - 0.5));
                  });
  EXPECT_LT(worst_coh, 1e-6);
  EXPECT_LT(worst_pop, 1e-14);
}

TEST(Lindblad, AmplitudeDampingClosedForm) {
  const double gamma = 0.3;
  const Eigen::Vector2cd v(std::sqrt(0.8), std::sqrt(0.2));
  const auto rho0 = DensityMatrix::from_pure({1, v});
  const double t_end = 5.0 / gamma;
  const double dt = t_end / 5000.0;
  double worst_pop = 0.0, worst_coh = 0.0;
  evolve_lindblad(rho0, idle_schedule(t_end), NoiseModel::amplitude_damping(gamma), {dt},
                  [&](double t, const CMatrix& rho) {
                    const double p = 0.8 * std::exp(-gamma * t);
                    const double c = std::sqrt(0.16) * std::exp(-0.5 * gamma * t);
                    worst_pop = std::max(worst_pop, std::abs(rho(0, 0).real() - p) / p);
                    worst_coh = std::max(worst_coh, std::abs(rho(0, 1) - c) / c);
                  });
  EXPECT_LT(worst_pop, 1e-6);
  EXPECT_LT(worst_coh, 1e-6);
}

TEST(Lindblad, IdleQubitHelperMatchesIntegrator) {
  std::mt19937_64 rng(23);
  const auto rho = random_density(1, rng);
  for (auto noise : {NoiseModel::dephasing(0.2), NoiseModel::amplitude_damping(0.2)}) {
    const auto out = evolve_lindblad(rho, idle_schedule(3.0), noise, {1e-3});
    const Eigen::Matrix2cd closed = evolve_idle_qubit(rho.entries(), noise, 3.0);
    EXPECT_LT((out.entries() - CMatrix(closed)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Lindblad, PhysicalAlongTrajectory) {
  const auto s = schedule_slots({{GateSpec::cnot(q1, q2)},
                                 {GateSpec::swap(q2, q4), GateSpec::swap(q1, q3)}});
  std::mt19937_64 rng(29);
  const auto rho0 = random_density(4, rng);
  for (auto noise : {NoiseModel::dephasing(0.1), NoiseModel::amplitude_damping(0.1)}) {
    double tr = 0.0, herm = 0.0, eig = 0.0;
    int k = 0;
    evolve_lindblad(rho0, s, noise, {}, [&](double, const CMatrix& rho) {
      tr = std::max(tr, std::abs(rho.trace() - complex(1.0)));
      herm = std::max(herm, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
      if (++k % 100 == 0) eig = std::min(eig, DensityMatrix{4, rho}.min_eigenvalue());
    });
    EXPECT_LT(tr, 1e-8);
    EXPECT_LT(herm, 1e-10);
    EXPECT_GT(eig, -1e-8);
  }
}

TEST(Lindblad, InputValidation) {
  CMatrix bad = CMatrix::Identity(2, 2);
  EXPECT_THROW(evolve_lindblad({1, bad}, idle_schedule(1.0), NoiseModel::dephasing(0.1), {}),
               std::invalid_argument);
  const auto rho = DensityMatrix::from_pure(QuantumState::basis("0"));
  EXPECT_THROW(evolve_lindblad(rho, idle_schedule(1.0), NoiseModel::dephasing(-1.0), {}),
               std::invalid_argument);
}

TEST(Lindblad, TraceDriftAborts) {
  CMatrix rho = CMatrix::Identity(2, 2) * 0.5;
  EXPECT_NO_THROW(check_trace(rho, 0.0));
  rho(0, 0) += 1e-5;
  EXPECT_THROW(check_trace(rho, 0.0), IntegratorAbort);
}

TEST(Lindblad, StepHalvingConverges) {
  for (auto noise : {NoiseModel::dephasing(0.1), NoiseModel::amplitude_damping(0.1)}) {
    for (auto g : {GateSpec::swap(q1, q2), GateSpec::cnot(q1, q2)}) {
      const double f1 = gate_fidelity(plus_zero(), g, noise, 1.0, {1e-3});
      const double f2 = gate_fidelity(plus_zero(), g, noise, 1.0, {5e-4});
      EXPECT_LT(std::abs(f1 - f2), 1e-7);
    }
  }
}

TEST(GateFidelity, NoiselessAnyDuration) {
  for (double alpha : {1.0, 2.5, 10.0}) {
    EXPECT_GE(gate_fidelity(plus_zero(), GateSpec::swap(q1, q2), NoiseModel::none(), alpha),
              0.999999);
    EXPECT_GE(gate_fidelity(plus_zero(), GateSpec::cnot(q1, q2), NoiseModel::none(), alpha),
              0.999999);
  }
  EXPECT_THROW(gate_fidelity(plus_zero(), GateSpec::swap(q1, q2), NoiseModel::none(), 0.0),
               std::invalid_argument);
}

TEST(GateFidelity, NonIncreasingInRate) {
  for (auto kind : {NoiseKind::dephasing, NoiseKind::amplitude_damping}) {
    for (auto g : {GateSpec::swap(q1, q2), GateSpec::cnot(q1, q2)}) {
      double prev = 1.0;
      for (double gamma : {0.0, 0.001, 0.01, 0.1, 0.5}) {
        const double f = gate_fidelity(plus_zero(), g, {kind, gamma}, 1.0);
        EXPECT_LE(f, prev + 1e-12);
        prev = f;
      }
    }
  }
}

TEST(GateFidelity, DephasingOfSwapBoundedByBlockStructure) {
  // |00> is an eigenstate of the SWAP Hamiltonian and the single-excitation
  // block dephases at rate 2 gamma, so F <= (1 + exp(-2 gamma T)) / 2.
  for (double gamma : {0.001, 0.01, 0.1}) {
    const double f = gate_fidelity(plus_zero(), GateSpec::swap(q1, q2),
                                   NoiseModel::dephasing(gamma), 1.0);
    EXPECT_LE(f, 0.5 * (1.0 + std::exp(-2.0 * gamma)) + 1e-9);
  }
}
