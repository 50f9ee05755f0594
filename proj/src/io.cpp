#include "graphlim/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace graphlim {

static_assert(std::endian::native == std::endian::little, "binary container assumes little-endian host");

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), res.ptr);
}

void write_csv(std::ostream& os, const StepFunction1D& f) {
  os << "k";
  for (std::size_t c = 0; c < f.dim(); ++c) os << ",value_" << c;
  os << '\n';
  for (std::size_t k = 0; k < f.size(); ++k) {
    os << k;
    for (double v : f.cell(k)) os << ',' << format_double(v);
    os << '\n';
  }
}

void write_csv(std::ostream& os, const StepFunction2D& f) {
  os << "k,l,value\n";
  for (std::size_t k = 0; k < f.size(); ++k)
    for (std::size_t l = 0; l < f.size(); ++l) os << k << ',' << l << ',' << format_double(f(k, l)) << '\n';
}

namespace {

constexpr char kMagic[4] = {'G', 'L', 'S', 'F'};
constexpr char kDtype[4] = {'f', '6', '4', '\0'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("read_binary: truncated header");
  return v;
}

void write_header(std::ostream& os, std::uint8_t rank, std::uint64_t n, std::uint64_t d) {
  os.write(kMagic, 4);
  put<std::uint8_t>(os, rank);
  put<std::uint64_t>(os, n);
  put<std::uint64_t>(os, d);
  os.write(kDtype, 4);
  put<std::uint8_t>(os, 1);
}

void write_values(std::ostream& os, std::span<const double> v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

}  // namespace

void write_binary(std::ostream& os, const StepFunction1D& f) {
  write_header(os, 1, f.size(), f.dim());
  write_values(os, f.values());
}

void write_binary(std::ostream& os, const StepFunction2D& f) {
  write_header(os, 2, f.size(), 1);
  write_values(os, f.values());
}

std::variant<StepFunction1D, StepFunction2D> read_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("read_binary: bad magic");
  const auto rank = get<std::uint8_t>(is);
  const auto n = get<std::uint64_t>(is);
  const auto d = get<std::uint64_t>(is);
  char dtype[4];
  is.read(dtype, 4);
  if (!is || std::memcmp(dtype, kDtype, 4) != 0) throw std::runtime_error("read_binary: unsupported dtype");
  if (get<std::uint8_t>(is) != 1) throw std::runtime_error("read_binary: only row-major layout is supported");
  if (n == 0 || d == 0 || (rank != 1 && rank != 2) || (rank == 2 && d != 1))
    throw std::runtime_error("read_binary: inconsistent header");
  const std::uint64_t count = rank == 1 ? n * d : n * n;
  std::vector<double> values(count);
  is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw std::runtime_error("read_binary: truncated payload");
  if (rank == 1) return StepFunction1D(UnitGrid(n), d, std::move(values));
  return StepFunction2D(UnitGrid(n), std::move(values));
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << contents;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace graphlim
