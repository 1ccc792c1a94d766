#ifndef BANDSVD_TESTS_SUPPORT_HPP
#define BANDSVD_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstring>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bandsvd/matrix.hpp"
#include "bandsvd/testgen.hpp"

namespace bandsvd::test {

inline DenseMatrix<double> gaussian(Index rows, Index cols, std::uint64_t seed) {
  SeededRng rng(seed);
  DenseMatrix<double> m(rows, cols);
  for (auto& x : m.span()) x = rng.normal();
  return m;
}

template <typename S>
bool bitwise_equal(std::span<const S> a, std::span<const S> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(S)) == 0;
}

template <typename S>
bool bitwise_equal(const DenseMatrix<S>& a, const DenseMatrix<S>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && bitwise_equal(a.span(), b.span());
}

template <typename T>
bool bitwise_equal(const std::vector<T>& a, const std::vector<T>& b) {
  return bitwise_equal(std::span<const T>(a), std::span<const T>(b));
}

/// Q = H_0 H_1 ... H_{ts-1} from a geqrt tile (vectors below the diagonal).
inline Eigen::MatrixXd geqrt_q(const Eigen::MatrixXd& tile, std::span<const double> tau) {
  const Index ts = tile.rows();
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(ts, ts);
  for (Index k = ts - 1; k >= 0; --k) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(ts);
    v(k) = 1;
    v.tail(ts - k - 1) = tile.col(k).tail(ts - k - 1);
    q -= tau[k] * v * (v.transpose() * q);
  }
  return q;
}

/// Q of a tsqrt on the (2 ts) x ts stack; reflector k is [e_k; B(:, k)].
inline Eigen::MatrixXd tsqrt_q(const Eigen::MatrixXd& b, std::span<const double> tau) {
  const Index ts = b.rows();
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(2 * ts, 2 * ts);
  for (Index k = ts - 1; k >= 0; --k) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * ts);
    v(k) = 1;
    v.tail(ts) = b.col(k);
    q -= tau[k] * v * (v.transpose() * q);
  }
  return q;
}

inline std::vector<double> widen(const std::vector<float>& v) { return {v.begin(), v.end()}; }
inline std::vector<double> widen(const std::vector<double>& v) { return v; }

}  // namespace bandsvd::test

#endif  // BANDSVD_TESTS_SUPPORT_HPP
