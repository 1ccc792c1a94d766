#include "bandsvd/accuracy.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "bandsvd/svdvals.hpp"

namespace bandsvd {

std::uint64_t accuracy_seed(std::uint64_t seed, Index n, Spectrum spectrum, int index) {
  const std::uint64_t stream = SeededRng::at(seed, static_cast<std::uint64_t>(n));
  return SeededRng::at(stream, static_cast<std::uint64_t>(spectrum) * 1000003u +
                                   static_cast<std::uint64_t>(index));
}

AccuracyCell accuracy_cell(Index n, PrecisionKind precision, int count, std::uint64_t seed,
                           const KernelConfig& cfg, exec::Backend& backend) {
  AccuracyCell cell;
  cell.n = n;
  cell.precision = precision;
  for (std::size_t s = 0; s < kSpectra.size(); ++s) {
    for (int i = 0; i < count; ++i) {
      try {
        SeededRng rng(accuracy_seed(seed, n, kSpectra[s], i));
        const double err = dispatch_precision(precision, [&](auto tag) {
          using S = decltype(tag);
          const TestMatrix<S> t = make_test_matrix<S>({kSpectra[s], n}, rng);
          const auto v = svdvals(t.a, cfg, backend);
          const std::vector<double> computed(v.begin(), v.end());
          return max_relative_error(computed, t.values);
        });
        cell.per_spectrum[s] = std::max(cell.per_spectrum[s], err);
        cell.max_error = std::max(cell.max_error, err);
        ++cell.matrices;
      } catch (const std::exception& e) {
        if (cell.ok) cell.error = e.what();
        cell.ok = false;
      }
    }
  }
  return cell;
}

void write_accuracy_csv(std::ostream& out, std::span<const AccuracyCell> cells) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(17);
  s << "size,precision,arithmetic,logarithmic,quarter_circle,max_error,matrices,status\n";
  for (const auto& c : cells) {
    s << c.n << ',' << to_string(c.precision);
    for (double e : c.per_spectrum) s << ',' << e;
    s << ',' << c.max_error << ',' << c.matrices << ',';
    if (c.ok) {
      s << "ok";
    } else {
      std::string msg = c.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      s << "failed: " << msg;
    }
    s << '\n';
  }
  out << s.str();
}

}  // namespace bandsvd
