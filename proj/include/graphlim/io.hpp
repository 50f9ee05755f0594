#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "graphlim/grid.hpp"

namespace graphlim {

/// Decimal rendering with 17 significant digits, independent of the global
/// locale. Round-trips exactly.
std::string format_double(double v);

/// CSV: 1D rows are `k,value_0,...,value_{d-1}`; 2D rows are `k,l,value`.
/// Indices are zero-based.
void write_csv(std::ostream& os, const StepFunction1D& f);
void write_csv(std::ostream& os, const StepFunction2D& f);

/// Binary container: magic "GLSF", u8 rank (1|2), u64 N, u64 d, char[4]
/// dtype "f64", u8 row_major (=1), then N*d (rank 1) or N*N (rank 2)
/// little-endian IEEE doubles.
void write_binary(std::ostream& os, const StepFunction1D& f);
void write_binary(std::ostream& os, const StepFunction2D& f);
std::variant<StepFunction1D, StepFunction2D> read_binary(std::istream& is);

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace graphlim
