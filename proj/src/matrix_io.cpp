#include "bandsvd/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace bandsvd {
namespace {

static_assert(sizeof(half) == 2);

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xffu);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in, const char* field) {
  std::array<unsigned char, sizeof(U)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw FormatError(std::string("truncated header: missing ") + field);
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<U>(v);
}

template <typename S>
struct Bits;
template <>
struct Bits<double> {
  using type = std::uint64_t;
};
template <>
struct Bits<float> {
  using type = std::uint32_t;
};
template <>
struct Bits<half> {
  using type = std::uint16_t;
};

template <typename S>
typename Bits<S>::type to_bits(S v) {
  typename Bits<S>::type b;
  std::memcpy(&b, static_cast<const void*>(&v), sizeof(b));
  return b;
}

template <typename S>
S from_bits(typename Bits<S>::type b) {
  S v;
  std::memcpy(static_cast<void*>(&v), &b, sizeof(b));
  return v;
}

template <typename S>
DenseMatrix<S> read_payload(std::istream& in, std::uint64_t rows, std::uint64_t cols) {
  using B = typename Bits<S>::type;
  DenseMatrix<S> m(static_cast<Index>(rows), static_cast<Index>(cols));
  const std::size_t count = static_cast<std::size_t>(rows * cols);
  std::vector<unsigned char> raw(count * sizeof(B));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw FormatError("truncated payload: expected " + std::to_string(raw.size()) +
                      " bytes, got " + std::to_string(in.gcount()));
  }
  S* out = m.data();
  for (std::size_t i = 0; i < count; ++i) {
    B b = 0;
    for (std::size_t k = 0; k < sizeof(B); ++k) {
      b = static_cast<B>(b | (static_cast<B>(raw[i * sizeof(B) + k]) << (8 * k)));
    }
    out[i] = from_bits<S>(b);
  }
  return m;
}

}  // namespace

PrecisionKind precision_of(const AnyMatrix& m) {
  return std::visit([](const auto& x) { return PrecisionTraits<typename std::decay_t<decltype(x)>::Scalar>::kind; }, m);
}

AnyMatrix convert(const AnyMatrix& m, PrecisionKind target) {
  return std::visit(
      [target](const auto& x) -> AnyMatrix {
        return dispatch_precision(target, [&](auto tag) -> AnyMatrix {
          return x.template cast<decltype(tag)>();
        });
      },
      m);
}

AnyMatrix read_matrix(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4) throw FormatError("truncated header: missing magic");
  if (std::memcmp(magic, kMatrixMagic, 4) != 0) throw FormatError("bad magic: expected \"BSVD\"");
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kMatrixFormatVersion) {
    throw FormatError("unsupported version " + std::to_string(version));
  }
  const auto dtype = get_le<std::uint32_t>(in, "dtype");
  const auto rows = get_le<std::uint64_t>(in, "rows");
  const auto cols = get_le<std::uint64_t>(in, "cols");
  constexpr std::uint64_t kMaxExtent = std::uint64_t{1} << 31;
  if (rows > kMaxExtent || cols > kMaxExtent) {
    throw FormatError("rows/cols too large: " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  switch (dtype) {
    case 1:
      return read_payload<double>(in, rows, cols);
    case 2:
      return read_payload<float>(in, rows, cols);
    case 3:
      return read_payload<half>(in, rows, cols);
    default:
      throw FormatError("unknown dtype code " + std::to_string(dtype));
  }
}

AnyMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_matrix(in);
}

template <typename S>
void write_matrix(const DenseMatrix<S>& m, std::ostream& out) {
  out.write(kMatrixMagic, 4);
  put_le<std::uint32_t>(out, kMatrixFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(PrecisionTraits<S>::kind));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (const S& v : m.span()) put_le(out, to_bits(v));
  if (!out) throw FormatError("write failed");
}

template <typename S>
void write_matrix(const DenseMatrix<S>& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_matrix(m, out);
}

void write_matrix(const AnyMatrix& m, const std::filesystem::path& path) {
  std::visit([&](const auto& x) { write_matrix(x, path); }, m);
}

int roundtrip_digits(PrecisionKind k) { return k == PrecisionKind::fp64 ? 17 : 9; }

template <typename T>
void write_values_csv(std::span<const T> values, PrecisionKind k, std::ostream& out) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << std::setprecision(roundtrip_digits(k));
  for (const T& v : values) buf << static_cast<double>(v) << '\n';
  out << buf.str();
}

std::vector<double> read_values_csv(std::istream& in) {
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(std::stod(line));
  }
  return out;
}

template void write_matrix(const DenseMatrix<double>&, std::ostream&);
template void write_matrix(const DenseMatrix<float>&, std::ostream&);
template void write_matrix(const DenseMatrix<half>&, std::ostream&);
template void write_matrix(const DenseMatrix<double>&, const std::filesystem::path&);
template void write_matrix(const DenseMatrix<float>&, const std::filesystem::path&);
template void write_matrix(const DenseMatrix<half>&, const std::filesystem::path&);
template void write_values_csv(std::span<const double>, PrecisionKind, std::ostream&);
template void write_values_csv(std::span<const float>, PrecisionKind, std::ostream&);

}  // namespace bandsvd
