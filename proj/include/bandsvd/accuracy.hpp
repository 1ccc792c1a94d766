#ifndef BANDSVD_ACCURACY_HPP
#define BANDSVD_ACCURACY_HPP

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>

#include "bandsvd/exec.hpp"
#include "bandsvd/kernels.hpp"
#include "bandsvd/testgen.hpp"

namespace bandsvd {

inline constexpr std::array<Spectrum, 3> kSpectra{Spectrum::arithmetic, Spectrum::logarithmic,
                                                  Spectrum::quarter_circle};

// One cell of the accuracy table: the worst relative error over `count`
// constructed matrices of each spectrum.
struct AccuracyCell {
  Index n = 0;
  PrecisionKind precision = PrecisionKind::fp64;
  std::array<double, 3> per_spectrum{};  // indexed like kSpectra
  double max_error = 0;
  std::size_t matrices = 0;
  bool ok = true;
  std::string error;  // first failure, if any
};

/// Seed of matrix `index` of `spectrum` at size n.
std::uint64_t accuracy_seed(std::uint64_t seed, Index n, Spectrum spectrum, int index);

AccuracyCell accuracy_cell(Index n, PrecisionKind precision, int count, std::uint64_t seed,
                           const KernelConfig& cfg, exec::Backend& backend);

void write_accuracy_csv(std::ostream& out, std::span<const AccuracyCell> cells);

}  // namespace bandsvd

#endif  // BANDSVD_ACCURACY_HPP
