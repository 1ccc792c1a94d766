#ifndef BANDSVD_TESTGEN_HPP
#define BANDSVD_TESTGEN_HPP

// Test matrices with known singular values, an independent one-sided Jacobi
// oracle, and the relative error metric used by the accuracy table.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "bandsvd/matrix.hpp"

namespace bandsvd {

// SplitMix64 run in counter mode: the i-th draw of a stream is
// mix(seed + (i + 1) * 0x9e3779b97f4a7c15), so a stream is a pure function of
// (seed, position) and identical on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z);
  static std::uint64_t at(std::uint64_t seed, std::uint64_t counter) {
    return mix(seed + (counter + 1) * 0x9e3779b97f4a7c15ull);
  }

  std::uint64_t next() { return at(seed_, counter_++); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; the second variate of each pair is kept.
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0;
};

enum class Spectrum { arithmetic, logarithmic, quarter_circle };

std::string_view to_string(Spectrum s);
Spectrum parse_spectrum(std::string_view name);

struct SpectrumSpec {
  Spectrum kind = Spectrum::arithmetic;
  Index n = 1;
};

/// The n values of the spectrum on [0, 1], descending.
std::vector<double> spectrum_values(const SpectrumSpec& spec, SeededRng& rng);

/// n x n matrix of independent standard normals.
DenseMatrix<double> random_gaussian(Index n, SeededRng& rng);

/// Haar orthogonal matrix: Q of a Gaussian matrix with R's diagonal made
/// nonnegative.
DenseMatrix<double> random_orthogonal(Index n, SeededRng& rng);

template <typename S>
struct TestMatrix {
  DenseMatrix<S> a;
  std::vector<double> values;  // descending, exact up to fp64 rounding
};

TestMatrix<double> make_test_matrix_fp64(const SpectrumSpec& spec, SeededRng& rng);

/// A = U * diag(sigma) * V with independent Haar U and V, stored in S.
template <typename S>
TestMatrix<S> make_test_matrix(const SpectrumSpec& spec, SeededRng& rng) {
  TestMatrix<double> t = make_test_matrix_fp64(spec, rng);
  return {t.a.template cast<S>(), std::move(t.values)};
}

/// One-sided Jacobi singular values, descending. Throws ConvergenceError
/// after 30 sweeps.
std::vector<double> oracle_svdvals(const Eigen::MatrixXd& a);

template <typename S>
std::vector<double> oracle_svdvals(const DenseMatrix<S>& a) {
  if (!a.is_square()) {
    throw ShapeError("oracle needs a square matrix, got " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()));
  }
  return oracle_svdvals(a.to_double());
}

/// ||computed - reference||_F / ||reference||_F.
double max_relative_error(std::span<const double> computed, std::span<const double> reference);

}  // namespace bandsvd

#endif  // BANDSVD_TESTGEN_HPP
