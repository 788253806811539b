#pragma once

// Pauli algebra on N-qubit registers.
//
// Basis convention: |0> is the +1 eigenstate of sigma_z, and qubit 1 is the
// most significant bit, so the label b1 b2 ... bN sits at index
// sum_k b_k 2^(N-k).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace spinchain {

using complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr complex kI{0.0, 1.0};

/// 1-based site label along the chain.
struct QubitIndex {
  int value = 1;

  constexpr QubitIndex() = default;
  constexpr explicit QubitIndex(int v) : value(v) {}

  friend constexpr bool operator==(QubitIndex, QubitIndex) = default;
  friend constexpr auto operator<=>(QubitIndex, QubitIndex) = default;
};

inline void check_qubit(QubitIndex q, int n_qubits) {
  if (q.value < 1 || q.value > n_qubits) {
    throw std::out_of_range("qubit " + std::to_string(q.value) +
                            " outside [1, " + std::to_string(n_qubits) + "]");
  }
}

/// Bit mask of qubit q inside an n-qubit basis index.
inline std::size_t qubit_mask(QubitIndex q, int n_qubits) {
  return std::size_t{1} << (n_qubits - q.value);
}

enum class Pauli { identity, x, y, z, minus };

inline Eigen::Matrix2cd pauli(Pauli kind) {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  switch (kind) {
    case Pauli::identity:
      m(0, 0) = 1.0;
      m(1, 1) = 1.0;
      break;
    case Pauli::x:
      m(0, 1) = 1.0;
      m(1, 0) = 1.0;
      break;
    case Pauli::y:
      m(0, 1) = -kI;
      m(1, 0) = kI;
      break;
    case Pauli::z:
      m(0, 0) = 1.0;
      m(1, 1) = -1.0;
      break;
    case Pauli::minus:
      // (sigma_x - i sigma_y) / 2 = |1><0|
      m(1, 0) = 1.0;
      break;
  }
  return m;
}

/// Kronecker product of two small dense matrices.
inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// A 2x2 or 4x4 block acting on one or two named qubits. For two targets the
/// block index is 2*bit(targets[0]) + bit(targets[1]).
class LocalOperator {
 public:
  LocalOperator(std::vector<QubitIndex> targets, CMatrix block)
      : targets_(std::move(targets)), block_(std::move(block)) {
    if (targets_.empty() || targets_.size() > 2) {
      throw std::invalid_argument("LocalOperator needs one or two targets");
    }
    const auto dim = Eigen::Index{1} << targets_.size();
    if (block_.rows() != dim || block_.cols() != dim) {
      throw std::invalid_argument("LocalOperator block dimension must be 2^targets");
    }
    if (targets_.size() == 2 && targets_[0] == targets_[1]) {
      throw std::invalid_argument("LocalOperator targets must be distinct");
    }
  }

  static LocalOperator single(QubitIndex q, const CMatrix& m) { return {{q}, m}; }

  static LocalOperator pair(QubitIndex a, QubitIndex b, const CMatrix& m) {
    return {{a, b}, m};
  }

  static LocalOperator pauli_pair(QubitIndex a, Pauli pa, QubitIndex b, Pauli pb) {
    return pair(a, b, kron(pauli(pa), pauli(pb)));
  }

  const std::vector<QubitIndex>& targets() const { return targets_; }
  const CMatrix& block() const { return block_; }

  LocalOperator scaled(complex s) const { return {targets_, s * block_}; }

 private:
  std::vector<QubitIndex> targets_;
  CMatrix block_;
};

/// Pure state of n qubits.
class QuantumState {
 public:
  QuantumState(int n_qubits, CVector amplitudes)
      : n_(n_qubits), amps_(std::move(amplitudes)) {
    if (n_ < 1 || amps_.size() != (Eigen::Index{1} << n_)) {
      throw std::invalid_argument("state length must be 2^n_qubits");
    }
  }

  /// Computational basis state from a label such as "0110".
  static QuantumState basis(const std::string& bits) {
    const int n = static_cast<int>(bits.size());
    CVector v = CVector::Zero(Eigen::Index{1} << n);
    std::size_t idx = 0;
    for (char c : bits) {
      if (c != '0' && c != '1') throw std::invalid_argument("basis label must be 0/1");
      idx = (idx << 1) | static_cast<std::size_t>(c == '1');
    }
    v(static_cast<Eigen::Index>(idx)) = 1.0;
    return {n, v};
  }

  /// Tensor product |q1>|q2>...|qn> of single-qubit amplitude pairs.
  static QuantumState product(std::span<const Eigen::Vector2cd> qubits) {
    if (qubits.empty()) throw std::invalid_argument("product of zero qubits");
    CVector v = qubits[0];
    for (std::size_t k = 1; k < qubits.size(); ++k) {
      CVector next(v.size() * 2);
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        next(2 * i) = v(i) * qubits[k](0);
        next(2 * i + 1) = v(i) * qubits[k](1);
      }
      v = std::move(next);
    }
    return {static_cast<int>(qubits.size()), v};
  }

  int num_qubits() const { return n_; }
  std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
  const CVector& amplitudes() const { return amps_; }
  CVector& amplitudes() { return amps_; }
  double norm() const { return amps_.norm(); }

 private:
  int n_;
  CVector amps_;
};

namespace qubit_states {
inline Eigen::Vector2cd zero() { return {1.0, 0.0}; }
inline Eigen::Vector2cd one() { return {0.0, 1.0}; }
inline Eigen::Vector2cd plus() { return Eigen::Vector2cd(1.0, 1.0) / std::sqrt(2.0); }
}  // namespace qubit_states

/// Density matrix of n qubits, column-major 2^n x 2^n.
class DensityMatrix {
 public:
  DensityMatrix(int n_qubits, CMatrix entries) : n_(n_qubits), m_(std::move(entries)) {
    const auto d = Eigen::Index{1} << n_;
    if (n_ < 1 || m_.rows() != d || m_.cols() != d) {
      throw std::invalid_argument("density matrix must be 2^n x 2^n");
    }
  }

  static DensityMatrix from_pure(const QuantumState& psi) {
    return {psi.num_qubits(), psi.amplitudes() * psi.amplitudes().adjoint()};
  }

  int num_qubits() const { return n_; }
  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& entries() const { return m_; }
  CMatrix& entries() { return m_; }

  complex trace() const { return m_.trace(); }

  double hermiticity_error() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m_ + m_.adjoint()),
                                              Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

 private:
  int n_;
  CMatrix m_;
};

/// Tensor product of two density matrices; b's qubits follow a's.
inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return {a.num_qubits() + b.num_qubits(), kron(a.entries(), b.entries())};
}

namespace detail {

/// Positions (from the least significant end) of the targets, plus the
/// ascending list used to expand a compressed counter into a base index.
template <int K>
struct TargetBits {
  std::array<std::size_t, K> mask{};  // in target order
  std::array<int, K> sorted_pos{};    // ascending bit positions

  TargetBits(std::span<const QubitIndex> targets, int n_qubits) {
    for (int j = 0; j < K; ++j) {
      check_qubit(targets[j], n_qubits);
      mask[j] = qubit_mask(targets[j], n_qubits);
      sorted_pos[j] = n_qubits - targets[j].value;
    }
    std::sort(sorted_pos.begin(), sorted_pos.end());
  }

  std::size_t base(std::size_t counter) const {
    for (int j = 0; j < K; ++j) {
      const std::size_t low = counter & ((std::size_t{1} << sorted_pos[j]) - 1);
      counter = ((counter >> sorted_pos[j]) << (sorted_pos[j] + 1)) | low;
    }
    return counter;
  }

  std::array<std::size_t, (1 << K)> offsets() const {
    std::array<std::size_t, (1 << K)> off{};
    for (int s = 0; s < (1 << K); ++s) {
      std::size_t o = 0;
      for (int j = 0; j < K; ++j) {
        if ((s >> (K - 1 - j)) & 1) o |= mask[j];
      }
      off[s] = o;
    }
    return off;
  }
};

/// out[r, c] += factor * sum_k B[sub(r), k] in[r_k, c] along the row index
/// (left multiplication), over `cols` columns with leading dimension `ld`.
template <int K>
void left_apply(const complex* block, const TargetBits<K>& tb, const complex* in,
                complex* out, std::size_t dim, std::size_t cols, complex factor) {
  constexpr int S = 1 << K;
  const auto off = tb.offsets();
  std::array<complex, S * S> b{};
  for (int i = 0; i < S; ++i)
    for (int k = 0; k < S; ++k) b[i * S + k] = factor * block[i + k * S];
  const std::size_t bases = dim >> K;
  for (std::size_t c = 0; c < cols; ++c) {
    const complex* col_in = in + c * dim;
    complex* col_out = out + c * dim;
    for (std::size_t cnt = 0; cnt < bases; ++cnt) {
      const std::size_t r0 = tb.base(cnt);
      std::array<complex, S> v;
      for (int k = 0; k < S; ++k) v[k] = col_in[r0 | off[k]];
      for (int i = 0; i < S; ++i) {
        complex acc = 0.0;
        for (int k = 0; k < S; ++k) acc += b[i * S + k] * v[k];
        col_out[r0 | off[i]] += acc;
      }
    }
  }
}

/// out[r, c] += factor * sum_k in[r, c_k] B[k, sub(c)] (right multiplication).
template <int K>
void right_apply(const complex* block, const TargetBits<K>& tb, const complex* in,
                 complex* out, std::size_t dim, complex factor) {
  constexpr int S = 1 << K;
  const auto off = tb.offsets();
  std::array<complex, S * S> b{};
  for (int k = 0; k < S; ++k)
    for (int j = 0; j < S; ++j) b[k * S + j] = factor * block[k + j * S];
  const std::size_t bases = dim >> K;
  for (std::size_t cnt = 0; cnt < bases; ++cnt) {
    const std::size_t c0 = tb.base(cnt);
    std::array<const complex*, S> cin;
    std::array<complex*, S> cout;
    for (int k = 0; k < S; ++k) {
      cin[k] = in + (c0 | off[k]) * dim;
      cout[k] = out + (c0 | off[k]) * dim;
    }
    for (std::size_t r = 0; r < dim; ++r) {
      std::array<complex, S> v;
      for (int k = 0; k < S; ++k) v[k] = cin[k][r];
      for (int j = 0; j < S; ++j) {
        complex acc = 0.0;
        for (int k = 0; k < S; ++k) acc += v[k] * b[k * S + j];
        cout[j][r] += acc;
      }
    }
  }
}

inline void accumulate_left(const LocalOperator& op, int n_qubits, const complex* in,
                            complex* out, std::size_t cols, complex factor) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  if (op.targets().size() == 1) {
    left_apply<1>(op.block().data(), TargetBits<1>(op.targets(), n_qubits), in, out, dim,
                  cols, factor);
  } else {
    left_apply<2>(op.block().data(), TargetBits<2>(op.targets(), n_qubits), in, out, dim,
                  cols, factor);
  }
}

/// out += factor * in * M, where M is the embedded block (not its adjoint).
inline void accumulate_right(const LocalOperator& op, int n_qubits, const complex* in,
                             complex* out, complex factor) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  if (op.targets().size() == 1) {
    right_apply<1>(op.block().data(), TargetBits<1>(op.targets(), n_qubits), in, out, dim,
                   factor);
  } else {
    right_apply<2>(op.block().data(), TargetBits<2>(op.targets(), n_qubits), in, out, dim,
                   factor);
  }
}

}  // namespace detail

/// Dense 2^n x 2^n matrix of a local operator. Only meant for small n.
inline CMatrix embed(const LocalOperator& op, int n_qubits) {
  if (n_qubits < 1 || n_qubits > 12) throw std::invalid_argument("embed: n out of range");
  for (auto q : op.targets()) check_qubit(q, n_qubits);
  const auto dim = Eigen::Index{1} << n_qubits;
  CMatrix out = CMatrix::Zero(dim, dim);
  CMatrix id = CMatrix::Identity(dim, dim);
  detail::accumulate_left(op, n_qubits, id.data(), out.data(), static_cast<std::size_t>(dim),
                          1.0);
  return out;
}

inline QuantumState apply_local_to_state(const LocalOperator& op, const QuantumState& psi) {
  for (auto q : op.targets()) check_qubit(q, psi.num_qubits());
  CVector out = CVector::Zero(psi.amplitudes().size());
  detail::accumulate_left(op, psi.num_qubits(), psi.amplitudes().data(), out.data(), 1, 1.0);
  return {psi.num_qubits(), std::move(out)};
}

/// E rho
inline DensityMatrix apply_local_left(const LocalOperator& op, const DensityMatrix& rho) {
  for (auto q : op.targets()) check_qubit(q, rho.num_qubits());
  CMatrix out = CMatrix::Zero(rho.entries().rows(), rho.entries().cols());
  detail::accumulate_left(op, rho.num_qubits(), rho.entries().data(), out.data(), rho.dim(),
                          1.0);
  return {rho.num_qubits(), std::move(out)};
}

/// rho E^dagger
inline DensityMatrix apply_local_right(const LocalOperator& op, const DensityMatrix& rho) {
  for (auto q : op.targets()) check_qubit(q, rho.num_qubits());
  const LocalOperator adj(op.targets(), op.block().adjoint());
  CMatrix out = CMatrix::Zero(rho.entries().rows(), rho.entries().cols());
  detail::accumulate_right(adj, rho.num_qubits(), rho.entries().data(), out.data(), 1.0);
  return {rho.num_qubits(), std::move(out)};
}

/// Reduced density matrix on `keep` (in the given order), tracing out every
/// other qubit. The first kept qubit becomes qubit 1 of the result.
inline DensityMatrix reduce_to(const DensityMatrix& rho, std::span<const QubitIndex> keep) {
  const int n = rho.num_qubits();
  const int k = static_cast<int>(keep.size());
  if (k < 1 || k > n) throw std::invalid_argument("reduce_to: bad keep list");
  std::vector<std::size_t> keep_masks;
  std::size_t keep_all = 0;
  for (auto q : keep) {
    check_qubit(q, n);
    const auto m = qubit_mask(q, n);
    if (keep_all & m) throw std::invalid_argument("reduce_to: repeated qubit");
    keep_all |= m;
    keep_masks.push_back(m);
  }
  std::vector<std::size_t> traced_masks;
  for (int q = 1; q <= n; ++q) {
    const auto m = qubit_mask(QubitIndex{q}, n);
    if (!(keep_all & m)) traced_masks.push_back(m);
  }
  const std::size_t kdim = std::size_t{1} << k;
  const std::size_t tdim = std::size_t{1} << traced_masks.size();
  auto expand = [](std::size_t bits, const std::vector<std::size_t>& masks) {
    std::size_t out = 0;
    const std::size_t cnt = masks.size();
    for (std::size_t j = 0; j < cnt; ++j) {
      if ((bits >> (cnt - 1 - j)) & 1) out |= masks[j];
    }
    return out;
  };
  std::vector<std::size_t> kidx(kdim), tidx(tdim);
  for (std::size_t a = 0; a < kdim; ++a) kidx[a] = expand(a, keep_masks);
  for (std::size_t t = 0; t < tdim; ++t) tidx[t] = expand(t, traced_masks);

  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(kdim), static_cast<Eigen::Index>(kdim));
  const auto& m = rho.entries();
  for (std::size_t b = 0; b < kdim; ++b) {
    for (std::size_t a = 0; a < kdim; ++a) {
      complex acc = 0.0;
      for (std::size_t t = 0; t < tdim; ++t) {
        acc += m(static_cast<Eigen::Index>(kidx[a] | tidx[t]),
                 static_cast<Eigen::Index>(kidx[b] | tidx[t]));
      }
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
    }
  }
  return {k, std::move(out)};
}

/// Tr_{1..N-2} rho.
inline DensityMatrix partial_trace_keep_last_two(const DensityMatrix& rho) {
  const int n = rho.num_qubits();
  if (n < 2) throw std::invalid_argument("partial trace needs at least two qubits");
  if (n == 2) return rho;
  const std::array<QubitIndex, 2> keep{QubitIndex{n - 1}, QubitIndex{n}};
  return reduce_to(rho, keep);
}

namespace detail {

inline constexpr double kPositivityTolerance = 1e-8;

/// Eigenvalues at round-off level relative to the largest are zeroed before
/// taking roots; otherwise sqrt(1e-17) noise leaks into the fidelity.
inline Eigen::VectorXd clip_roundoff(Eigen::VectorXd ev) {
  const double cut = 64.0 * std::numeric_limits<double>::epsilon() *
                     std::max(1.0, ev.cwiseAbs().maxCoeff()) * double(ev.size());
  for (auto& x : ev)
    if (x < cut) x = 0.0;
  return ev;
}

/// Hermitian square root of a positive semidefinite matrix.
inline CMatrix psd_sqrt(const CMatrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
  if (es.eigenvalues().minCoeff() < -kPositivityTolerance) {
    throw std::domain_error(std::string("fidelity: ") + what + " is not positive semidefinite");
  }
  const Eigen::VectorXd ev = clip_roundoff(es.eigenvalues()).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2.
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  const CMatrix sa = detail::psd_sqrt(a.entries(), "first argument");
  detail::psd_sqrt(b.entries(), "second argument");
  const CMatrix inner = sa * b.entries() * sa;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (inner + inner.adjoint()),
                                            Eigen::EigenvaluesOnly);
  const double root_sum = detail::clip_roundoff(es.eigenvalues()).cwiseSqrt().sum();
  return std::clamp(root_sum * root_sum, 0.0, 1.0);
}

/// <psi|rho|psi>, the fidelity against a pure target.
inline double fidelity(const DensityMatrix& rho, const QuantumState& target) {
  if (rho.dim() != target.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  const auto& v = target.amplitudes();
  return std::clamp((v.adjoint() * rho.entries() * v)(0, 0).real(), 0.0, 1.0);
}

/// |<a|b>|^2
inline double fidelity(const QuantumState& a, const QuantumState& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  return std::norm(a.amplitudes().dot(b.amplitudes()));
}

}  // namespace spinchain
