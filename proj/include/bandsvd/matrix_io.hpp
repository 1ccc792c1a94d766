#ifndef BANDSVD_MATRIX_IO_HPP
#define BANDSVD_MATRIX_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <variant>
#include <vector>

#include "bandsvd/matrix.hpp"

namespace bandsvd {

// Binary matrix file:
//   "BSVD" | version u32 = 1 | dtype u32 (1 fp64, 2 fp32, 3 fp16) |
//   rows u64 | cols u64 | column-major payload
// All integers and elements little-endian.
inline constexpr char kMatrixMagic[4] = {'B', 'S', 'V', 'D'};
inline constexpr std::uint32_t kMatrixFormatVersion = 1;

using AnyMatrix = std::variant<DenseMatrix<double>, DenseMatrix<float>, DenseMatrix<half>>;

PrecisionKind precision_of(const AnyMatrix& m);

/// Converts to the requested storage precision (no-op when it already matches).
AnyMatrix convert(const AnyMatrix& m, PrecisionKind target);

AnyMatrix read_matrix(std::istream& in);
AnyMatrix read_matrix(const std::filesystem::path& path);

template <typename S>
void write_matrix(const DenseMatrix<S>& m, std::ostream& out);
template <typename S>
void write_matrix(const DenseMatrix<S>& m, const std::filesystem::path& path);
void write_matrix(const AnyMatrix& m, const std::filesystem::path& path);

/// Significant digits needed to round-trip a value of the given precision.
int roundtrip_digits(PrecisionKind k);

/// One value per line with round-trip precision.
template <typename T>
void write_values_csv(std::span<const T> values, PrecisionKind k, std::ostream& out);

std::vector<double> read_values_csv(std::istream& in);

}  // namespace bandsvd

#endif  // BANDSVD_MATRIX_IO_HPP
