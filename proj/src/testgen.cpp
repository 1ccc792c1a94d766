#include "bandsvd/testgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/QR>

namespace bandsvd {

std::uint64_t SeededRng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double SeededRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double SeededRng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  have_spare_ = true;
  return r * std::cos(t);
}

std::string_view to_string(Spectrum s) {
  switch (s) {
    case Spectrum::arithmetic:
      return "arithmetic";
    case Spectrum::logarithmic:
      return "logarithmic";
    case Spectrum::quarter_circle:
      return "quarter_circle";
  }
  return "unknown";
}

Spectrum parse_spectrum(std::string_view name) {
  if (name == "arithmetic") return Spectrum::arithmetic;
  if (name == "logarithmic") return Spectrum::logarithmic;
  if (name == "quarter_circle" || name == "quarter-circle") return Spectrum::quarter_circle;
  throw ConfigError("unknown spectrum '" + std::string(name) + "'");
}

std::vector<double> spectrum_values(const SpectrumSpec& spec, SeededRng& rng) {
  if (spec.n < 1) throw ShapeError("spectrum size must be positive");
  const Index n = spec.n;
  std::vector<double> v(static_cast<std::size_t>(n));
  switch (spec.kind) {
    case Spectrum::arithmetic:
      for (Index i = 1; i <= n; ++i) v[i - 1] = static_cast<double>(i) / static_cast<double>(n);
      break;
    case Spectrum::logarithmic:
      for (Index i = 1; i <= n; ++i) {
        v[i - 1] = n == 1 ? 1.0
                          : std::pow(10.0, -6.0 * static_cast<double>(n - i) /
                                               static_cast<double>(n - 1));
      }
      break;
    case Spectrum::quarter_circle:
      for (auto& x : v) {
        for (;;) {
          const double c = rng.uniform();
          if (rng.uniform() <= std::sqrt(1.0 - c * c)) {
            x = c;
            break;
          }
        }
      }
      break;
  }
  std::sort(v.begin(), v.end(), [](double a, double b) { return a > b; });
  return v;
}

DenseMatrix<double> random_gaussian(Index n, SeededRng& rng) {
  DenseMatrix<double> g(n, n);
  for (auto& x : g.span()) x = rng.normal();
  return g;
}

DenseMatrix<double> random_orthogonal(Index n, SeededRng& rng) {
  if (n < 1) throw ShapeError("orthogonal matrix size must be positive");
  const DenseMatrix<double> g = random_gaussian(n, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g.eigen());
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return DenseMatrix<double>(std::move(q));
}

TestMatrix<double> make_test_matrix_fp64(const SpectrumSpec& spec, SeededRng& rng) {
  std::vector<double> sigma = spectrum_values(spec, rng);
  const DenseMatrix<double> u = random_orthogonal(spec.n, rng);
  const DenseMatrix<double> v = random_orthogonal(spec.n, rng);
  const Eigen::Map<const Eigen::VectorXd> s(sigma.data(), spec.n);
  Eigen::MatrixXd a = u.eigen() * s.asDiagonal() * v.eigen();
  return {DenseMatrix<double>(std::move(a)), std::move(sigma)};
}

std::vector<double> oracle_svdvals(const Eigen::MatrixXd& input) {
  Eigen::MatrixXd a = input;
  const Index n = a.cols();
  const double eps = std::numeric_limits<double>::epsilon();
  constexpr int kMaxSweeps = 30;

  bool converged = n < 2;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        auto ap = a.col(p);
        auto aq = a.col(q);
        const double alpha = ap.squaredNorm();
        const double beta = aq.squaredNorm();
        const double gamma = ap.dot(aq);
        if (std::abs(gamma) <= eps * std::sqrt(alpha) * std::sqrt(beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Index i = 0; i < a.rows(); ++i) {
          const double x = ap(i);
          const double y = aq(i);
          ap(i) = c * x - s * y;
          aq(i) = s * x + c * y;
        }
      }
    }
  }
  if (!converged) {
    throw ConvergenceError("one-sided Jacobi did not converge in " + std::to_string(kMaxSweeps) +
                           " sweeps");
  }
  std::vector<double> values(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) values[j] = a.col(j).norm();
  std::sort(values.begin(), values.end(), [](double x, double y) { return x > y; });
  return values;
}

double max_relative_error(std::span<const double> computed, std::span<const double> reference) {
  if (computed.size() != reference.size()) {
    throw ShapeError("value lists differ in length: " + std::to_string(computed.size()) +
                     " vs " + std::to_string(reference.size()));
  }
  double num = 0;
  double den = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = computed[i] - reference[i];
    num += d * d;
    den += reference[i] * reference[i];
  }
  if (den == 0) throw DegenerateInputError("reference values are all zero");
  return std::sqrt(num) / std::sqrt(den);
}

}  // namespace bandsvd
