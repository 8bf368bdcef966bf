#include "mixscape/tensor_io.hpp"

#include "mixscape/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace mixscape {

namespace {

constexpr char kMagic[4] = {'M', 'S', 'L', 'T'};
constexpr std::size_t kMaxRank = 8;

void read_exact(std::istream& is, char* dst, std::size_t n)
{
    is.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
        throw FormatError("truncated binary record");
}

} // namespace

void write_u64(std::ostream& os, std::uint64_t v)
{
    char buf[8];
    for (int i = 0; i < 8; ++i)
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(buf, 8);
}

std::uint64_t read_u64(std::istream& is)
{
    unsigned char buf[8];
    read_exact(is, reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& os, double v)
{
    write_u64(os, std::bit_cast<std::uint64_t>(v));
}

double read_f64(std::istream& is)
{
    return std::bit_cast<double>(read_u64(is));
}

void write_string(std::ostream& os, const std::string& s)
{
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is)
{
    const std::uint64_t n = read_u64(is);
    if (n > (1u << 20))
        throw FormatError("implausible string length in binary record");
    std::string s(n, '\0');
    read_exact(is, s.data(), n);
    return s;
}

void write_tensor(std::ostream& os, const Tensor& t)
{
    if (t.rank() == 0 || t.rank() > kMaxRank)
        throw ShapeError("cannot serialize tensor of rank " + std::to_string(t.rank()));
    os.write(kMagic, 4);
    os.put(static_cast<char>(kTensorFormatVersion));
    os.put(static_cast<char>(t.rank()));
    for (auto e : t.shape())
        write_u64(os, e);
    for (double v : t.data())
        write_f64(os, v);
}

Tensor read_tensor(std::istream& is)
{
    char magic[4];
    read_exact(is, magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("bad tensor magic");
    char hdr[2];
    read_exact(is, hdr, 2);
    if (static_cast<unsigned char>(hdr[0]) != kTensorFormatVersion)
        throw FormatError("unsupported tensor format version " +
                          std::to_string(static_cast<unsigned char>(hdr[0])));
    const auto rank = static_cast<unsigned char>(hdr[1]);
    if (rank == 0 || rank > kMaxRank)
        throw FormatError("invalid tensor rank " + std::to_string(rank));
    Shape shape(rank);
    std::uint64_t volume = 1;
    for (auto& e : shape) {
        e = read_u64(is);
        if (e == 0 || e > (1ull << 32))
            throw FormatError("invalid tensor extent");
        volume *= e;
        if (volume > (1ull << 32))
            throw FormatError("tensor too large");
    }
    std::vector<double> data(volume);
    for (auto& v : data)
        v = read_f64(is);
    return Tensor(std::move(shape), std::move(data));
}

void save_tensors(const std::filesystem::path& path, const std::vector<Tensor>& tensors)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw FormatError("cannot open " + path.string() + " for writing");
    for (const auto& t : tensors)
        write_tensor(os, t);
    if (!os)
        throw FormatError("write failed: " + path.string());
}

std::vector<Tensor> load_tensors(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw FormatError("cannot open " + path.string());
    std::vector<Tensor> out;
    while (is.peek() != std::char_traits<char>::eof())
        out.push_back(read_tensor(is));
    return out;
}

} // namespace mixscape
