#pragma once

#include "mixscape/tensor.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace mixscape {

// Binary record: "MSLT", version byte, rank byte, extents (u64 LE),
// then elements (IEEE-754 binary64 LE).
inline constexpr unsigned char kTensorFormatVersion = 1;

void write_tensor(std::ostream& os, const Tensor& t);
/// Throws FormatError on bad magic/version or a truncated record.
Tensor read_tensor(std::istream& is);

// Little-endian primitives shared by the other binary formats.
void write_u64(std::ostream& os, std::uint64_t v);
std::uint64_t read_u64(std::istream& is);
void write_f64(std::ostream& os, double v);
double read_f64(std::istream& is);
void write_string(std::ostream& os, const std::string& s);
std::string read_string(std::istream& is);

/// A file of back-to-back tensor records.
void save_tensors(const std::filesystem::path& path, const std::vector<Tensor>& tensors);
std::vector<Tensor> load_tensors(const std::filesystem::path& path);

} // namespace mixscape
