#ifndef BANDSVD_PRECISION_HPP
#define BANDSVD_PRECISION_HPP

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string_view>

#include <Eigen/Core>

namespace bandsvd {

using Index = Eigen::Index;
using half = Eigen::half;

enum class PrecisionKind : std::uint32_t { fp64 = 1, fp32 = 2, fp16 = 3 };

// Storage scalar -> arithmetic scalar. Half values are only ever stored;
// every operation on them happens in float and the result is rounded back
// when it is written to matrix storage.
template <typename Storage>
struct PrecisionTraits;

template <>
struct PrecisionTraits<double> {
  using Compute = double;
  static constexpr PrecisionKind kind = PrecisionKind::fp64;
  static constexpr std::string_view name = "fp64";
};

template <>
struct PrecisionTraits<float> {
  using Compute = float;
  static constexpr PrecisionKind kind = PrecisionKind::fp32;
  static constexpr std::string_view name = "fp32";
};

template <>
struct PrecisionTraits<half> {
  using Compute = float;
  static constexpr PrecisionKind kind = PrecisionKind::fp16;
  static constexpr std::string_view name = "fp16";
};

template <typename Storage>
using compute_t = typename PrecisionTraits<Storage>::Compute;

/// Unit roundoff of the arithmetic type used for `Storage` (2^-52, 2^-23).
template <typename Storage>
constexpr compute_t<Storage> compute_epsilon() {
  return std::numeric_limits<compute_t<Storage>>::epsilon();
}

template <typename Storage>
inline compute_t<Storage> to_compute(Storage v) {
  return static_cast<compute_t<Storage>>(v);
}

template <typename Storage>
inline Storage to_storage(compute_t<Storage> v) {
  return static_cast<Storage>(v);
}

/// Runtime description of a precision.
struct Precision {
  PrecisionKind kind;
  std::size_t storage_width;
  std::size_t compute_width;
  double epsilon;

  static constexpr Precision of(PrecisionKind k) {
    switch (k) {
      case PrecisionKind::fp64:
        return {k, 8, 8, std::numeric_limits<double>::epsilon()};
      case PrecisionKind::fp32:
        return {k, 4, 4, std::numeric_limits<float>::epsilon()};
      case PrecisionKind::fp16:
        break;
    }
    return {PrecisionKind::fp16, 2, 4, std::numeric_limits<float>::epsilon()};
  }
};

constexpr std::string_view to_string(PrecisionKind k) {
  switch (k) {
    case PrecisionKind::fp64:
      return "fp64";
    case PrecisionKind::fp32:
      return "fp32";
    case PrecisionKind::fp16:
      return "fp16";
  }
  return "unknown";
}

/// Calls `f(Storage{})` with the storage scalar matching `k`.
template <typename F>
decltype(auto) dispatch_precision(PrecisionKind k, F&& f) {
  switch (k) {
    case PrecisionKind::fp32:
      return f(float{});
    case PrecisionKind::fp16:
      return f(half{});
    case PrecisionKind::fp64:
    default:
      return f(double{});
  }
}

}  // namespace bandsvd

#endif  // BANDSVD_PRECISION_HPP
