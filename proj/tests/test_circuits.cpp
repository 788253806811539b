#include <gtest/gtest.h>

#include <numbers>

#include "spinchain/circuits.hpp"

using namespace spinchain;

namespace {

constexpr double kPi = std::numbers::pi;

TransportCircuit circuit(TopologyKind k, int n, GateOrder o,
                         const PulseSet& p = PulseSet::area_matched()) {
  return build_transport_circuit({k, n}, o, p);
}

std::vector<std::pair<int, int>> pairs(const std::vector<GateSpec>& slot) {
  std::vector<std::pair<int, int>> out;
  for (const auto& g : slot) out.emplace_back(g.first.value, g.second.value);
  return out;
}

CVector vec(const CMatrix& m) { return Eigen::Map<const CVector>(m.data(), m.size()); }

// Full-register RK4 on the vectorized master equation with a dense
// generator rebuilt at each stage time.
CMatrix dense_oracle_output(const TransportCircuit& c, const CMatrix& rho0,
                            const NoiseModel& noise, double dt) {
  const int n = c.topology.num_qubits;
  const auto d = Eigen::Index{1} << n;
  const CMatrix id = CMatrix::Identity(d, d);
  const Pauli p = noise.kind == NoiseKind::dephasing ? Pauli::z : Pauli::minus;
  CMatrix diss = CMatrix::Zero(d * d, d * d);
  for (int q = 1; q <= n; ++q) {
    const CMatrix j = std::sqrt(noise.gamma) * embed(LocalOperator::single(QubitIndex{q}, pauli(p)), n);
    const CMatrix jj = j.adjoint() * j;
    diss += kron(j.conjugate(), j) - 0.5 * kron(id, jj) - 0.5 * kron(jj.transpose(), id);
  }
  const auto sched = c.schedule();
  auto generator = [&](double t, std::size_t slot) {
    CMatrix h = CMatrix::Zero(d, d);
    for (const auto& g : sched.slots[slot].gates)
      for (const auto& term : g.terms) h += term.coefficient(t) * embed(term.op, n);
    return CMatrix(-kI * (kron(id, h) - kron(h.transpose(), id)) + diss);
  };
  CVector v = vec(rho0);
  for (std::size_t s = 0; s < sched.slots.size(); ++s) {
    const auto steps = static_cast<int>(std::lround(1.0 / dt));
    for (int i = 0; i < steps; ++i) {
      const double t = sched.slots[s].start + i * dt;
      const CMatrix l0 = generator(t, s), lm = generator(t + dt / 2, s), l1 = generator(t + dt, s);
      const CVector k1 = l0 * v;
      const CVector k2 = lm * (v + dt / 2 * k1);
      const CVector k3 = lm * (v + dt / 2 * k2);
      const CVector k4 = l1 * (v + dt * k3);
      v += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
  }
  return Eigen::Map<const CMatrix>(v.data(), d, d);
}

}  // namespace

TEST(Topology, Couplings) {
  const ChainTopology line{TopologyKind::line_1d, 5};
  EXPECT_TRUE(line.coupled(QubitIndex{2}, QubitIndex{3}));
  EXPECT_FALSE(line.coupled(QubitIndex{1}, QubitIndex{3}));
  const ChainTopology sq{TopologyKind::square_2d, 6};
  EXPECT_TRUE(sq.coupled(QubitIndex{1}, QubitIndex{2}));
  EXPECT_TRUE(sq.coupled(QubitIndex{1}, QubitIndex{3}));
  EXPECT_TRUE(sq.coupled(QubitIndex{4}, QubitIndex{6}));
  EXPECT_FALSE(sq.coupled(QubitIndex{2}, QubitIndex{3}));
  EXPECT_FALSE(sq.coupled(QubitIndex{1}, QubitIndex{4}));
  EXPECT_THROW((ChainTopology{TopologyKind::square_2d, 5}.validate()), std::invalid_argument);
  EXPECT_THROW(build_transport_circuit({TopologyKind::square_2d, 7}, GateOrder::cnot_first),
               std::invalid_argument);
}

TEST(TransportCircuitTest, SmallLayouts) {
  const auto n3 = circuit(TopologyKind::line_1d, 3, GateOrder::cnot_first);
  ASSERT_EQ(n3.slot_count(), 3u);
  EXPECT_EQ(n3.slots[0].front().kind, GateKind::cnot);
  EXPECT_EQ(pairs(n3.slots[1]), (std::vector<std::pair<int, int>>{{2, 3}}));
  EXPECT_EQ(pairs(n3.slots[2]), (std::vector<std::pair<int, int>>{{1, 2}}));

  const auto n4 = circuit(TopologyKind::line_1d, 4, GateOrder::cnot_first);
  ASSERT_EQ(n4.slot_count(), 5u);
  const std::vector<std::pair<int, int>> expect{{1, 2}, {2, 3}, {3, 4}, {1, 2}, {2, 3}};
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(pairs(n4.slots[k]).front(), expect[k]);

  const auto sq = circuit(TopologyKind::square_2d, 4, GateOrder::cnot_first);
  ASSERT_EQ(sq.slot_count(), 2u);
  EXPECT_EQ(pairs(sq.slots[1]), (std::vector<std::pair<int, int>>{{2, 4}, {1, 3}}));
  EXPECT_DOUBLE_EQ(sq.schedule().total_time(), 2.0);

  const auto last = circuit(TopologyKind::square_2d, 4, GateOrder::cnot_last);
  EXPECT_EQ(last.slots.back().front().kind, GateKind::cnot);
  EXPECT_EQ(pairs(last.slots.back()), (std::vector<std::pair<int, int>>{{3, 4}}));
}

TEST(TransportCircuitTest, GateCounts) {
  for (int n = 3; n <= 8; ++n) {
    for (auto o : {GateOrder::cnot_first, GateOrder::cnot_last}) {
      const auto c = circuit(TopologyKind::line_1d, n, o);
      EXPECT_EQ(c.count(GateKind::swap), std::size_t(2 * (n - 2)));
      EXPECT_EQ(c.count(GateKind::cnot), 1u);
      EXPECT_EQ(c.slot_count(), std::size_t(2 * (n - 2) + 1));
    }
  }
  for (int n = 4; n <= 12; n += 2) {
    const auto c = circuit(TopologyKind::square_2d, n, GateOrder::cnot_first);
    // two legs of N/2 - 1 hops each, paired into N/2 - 1 slots
    EXPECT_EQ(c.count(GateKind::swap), std::size_t(n - 2));
    EXPECT_EQ(c.count(GateKind::cnot), 1u);
    EXPECT_EQ(c.slot_count(), std::size_t(n / 2));
  }
}

TEST(ParamStateTest, Amplitudes) {
  for (double th : {0.0, 0.7, kPi / 2, 2.9, kPi})
    for (double ph : {0.0, 1.3, 2 * kPi}) {
      EXPECT_NEAR((ParamState{th, ph}).amplitudes().norm(), 1.0, 1e-15);
    }
  EXPECT_TRUE((ParamState{kPi, 0.4}).amplitudes().isApprox(qubit_states::zero(), 1e-15));
  EXPECT_NEAR(std::abs((ParamState{0.0, 0.0}).amplitudes()(1)), 1.0, 1e-15);
}

TEST(TransportTarget, CnotTruthTable) {
  const auto t = transport_target(qubit_states::one(), qubit_states::zero());
  EXPECT_NEAR(std::abs(t.amplitudes()(3)), 1.0, 1e-15);
}

TEST(Transport, NoiselessFidelityIsOne) {
  for (int n : {3, 5}) {
    for (auto o : {GateOrder::cnot_first, GateOrder::cnot_last}) {
      EXPECT_GE(transport_fidelity(circuit(TopologyKind::line_1d, n, o), qubit_states::plus(),
                                   qubit_states::zero(), NoiseModel::none()),
                1.0 - 1e-6);
    }
  }
  for (int n : {4, 8}) {
    for (auto o : {GateOrder::cnot_first, GateOrder::cnot_last}) {
      EXPECT_GE(transport_fidelity(circuit(TopologyKind::square_2d, n, o), ParamState{1.1, 0.3},
                                   NoiseModel::none()),
                1.0 - 1e-6);
    }
  }
}

TEST(Transport, ActiveRegisterMatchesFullRegister) {
  const Eigen::Matrix2cd r1 = projector(qubit_states::plus());
  const Eigen::Matrix2cd r2 = projector(ParamState{1.2, 0.8}.amplitudes());
  const std::vector<std::pair<TopologyKind, int>> cases{
      {TopologyKind::line_1d, 3}, {TopologyKind::line_1d, 5}, {TopologyKind::square_2d, 4},
      {TopologyKind::square_2d, 6}};
  for (auto [k, n] : cases)
    for (auto o : {GateOrder::cnot_first, GateOrder::cnot_last})
      for (auto noise : {NoiseModel::dephasing(0.1), NoiseModel::amplitude_damping(0.1)}) {
        const auto c = circuit(k, n, o);
        const auto a = transport_output(c, r1, r2, noise);
        const auto b = transport_output_full(c, r1, r2, noise);
        EXPECT_LT((a.entries() - b.entries()).cwiseAbs().maxCoeff(), 1e-9)
            << to_string(k) << " N=" << n << " " << to_string(o);
      }
}

TEST(Transport, FullRegisterMatchesDenseOracle) {
  const auto c = circuit(TopologyKind::square_2d, 4, GateOrder::cnot_first);
  const Eigen::Matrix2cd r1 = projector(qubit_states::plus());
  const Eigen::Matrix2cd r2 = projector(qubit_states::zero());
  CMatrix rho0 = kron(kron(kron(r1, r2), projector(qubit_states::zero())),
                      projector(qubit_states::zero()));
  for (auto noise : {NoiseModel::dephasing(0.1), NoiseModel::amplitude_damping(0.1)}) {
    const auto full = transport_output_full(c, r1, r2, noise, {2e-3});
    const CMatrix oracle = partial_trace_keep_last_two({4, dense_oracle_output(c, rho0, noise, 2e-3)}).entries();
    const auto target = transport_target(qubit_states::plus(), qubit_states::zero());
    EXPECT_NEAR(fidelity(full, target), fidelity(DensityMatrix{2, oracle}, target), 1e-9);
  }
}

TEST(Transport, OrderMatters) {
  for (auto noise : {NoiseModel::dephasing(0.1), NoiseModel::amplitude_damping(0.1)}) {
    const double a = transport_fidelity(circuit(TopologyKind::square_2d, 4, GateOrder::cnot_first),
                                        qubit_states::plus(), qubit_states::zero(), noise);
    const double b = transport_fidelity(circuit(TopologyKind::square_2d, 4, GateOrder::cnot_last),
                                        qubit_states::plus(), qubit_states::zero(), noise);
    EXPECT_GT(std::abs(a - b), 1e-4);
  }
}

TEST(Transport, NoiseLowersFidelityWithLength) {
  double prev = 1.0;
  for (int n : {4, 6, 8}) {
    const double f = transport_fidelity(circuit(TopologyKind::square_2d, n, GateOrder::cnot_first),
                                        qubit_states::plus(), qubit_states::zero(),
                                        NoiseModel::amplitude_damping(0.05));
    EXPECT_LT(f, prev);
    prev = f;
  }
}

TEST(Channel, MatchesDirectEvaluation) {
  const auto c = circuit(TopologyKind::square_2d, 4, GateOrder::cnot_last);
  for (auto noise : {NoiseModel::dephasing(0.1), NoiseModel::amplitude_damping(0.1)}) {
    const auto ch = TransportChannel::sample(c, qubit_states::plus(), noise, {});
    for (auto ps : {ParamState{0.3, 4.0}, ParamState{2.0, 1.1}, ParamState{kPi, 0.0}}) {
      const Eigen::Matrix2cd rho = projector(ps.amplitudes());
      const auto direct = transport_output(c, projector(qubit_states::plus()), rho, noise);
      EXPECT_LT((ch.apply(rho) - direct.entries()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Map, EdgeRowMatchesChainDifference) {
  const auto grid = Grid::uniform(5, 4);
  const auto noise = NoiseModel::amplitude_damping(0.1);
  const auto map = fidelity_difference_map(grid, noise, {}, 2, PulseSet::area_matched());
  const double first = transport_fidelity(circuit(TopologyKind::square_2d, 4, GateOrder::cnot_first),
                                          qubit_states::plus(), qubit_states::zero(), noise);
  const double last = transport_fidelity(circuit(TopologyKind::square_2d, 4, GateOrder::cnot_last),
                                         qubit_states::plus(), qubit_states::zero(), noise);
  for (std::size_t j = 0; j < grid.phi.size(); ++j) {
    EXPECT_NEAR(map.delta(4, j), first - last, 1e-12);
  }
}

TEST(Map, WorkerIndependent) {
  const auto grid = Grid::uniform(6, 5);
  const auto a = fidelity_difference_map(grid, NoiseModel::dephasing(0.1), {}, 1);
  const auto b = fidelity_difference_map(grid, NoiseModel::dephasing(0.1), {}, 4);
  EXPECT_EQ(a.f_cnot_first, b.f_cnot_first);
  EXPECT_EQ(a.f_cnot_last, b.f_cnot_last);
  EXPECT_THROW(Grid::uniform(1, 4), std::invalid_argument);
}

TEST(Contour, RecoversKnownCosineCurve) {
  const auto grid = Grid::uniform(81, 81);
  std::vector<std::vector<double>> v(81, std::vector<double>(81));
  for (std::size_t i = 0; i < 81; ++i)
    for (std::size_t j = 0; j < 81; ++j)
      v[i][j] = grid.theta[i] - (0.3 * std::cos(2 * grid.phi[j]) + 1.7);
  const auto segs = zero_contour(grid, v);
  ASSERT_FALSE(segs.empty());
  for (const auto& s : segs) {
    EXPECT_NEAR(s.a.theta, 0.3 * std::cos(2 * s.a.phi) + 1.7, 2e-3);
  }
  const auto fit = fit_cos2phi(segs);
  EXPECT_NEAR(fit.a, 0.3, 2e-3);
  EXPECT_NEAR(fit.b, 1.7, 2e-3);
  EXPECT_LT(fit.rms_residual, 2e-3);
}

TEST(Contour, EmptyWhenNoSignChange) {
  const auto grid = Grid::uniform(4, 4);
  const std::vector<std::vector<double>> v(4, std::vector<double>(4, -1.0));
  EXPECT_TRUE(zero_contour(grid, v).empty());
  EXPECT_EQ(fit_cos2phi({}).points, 0u);
}
