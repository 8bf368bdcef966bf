#include "mixscape/encoders.hpp"

#include "mixscape/errors.hpp"
#include "mixscape/tensor_io.hpp"

#include <cstring>
#include <fstream>

namespace mixscape {

namespace {
constexpr char kMagic[4] = {'M', 'S', 'L', 'E'};
}

void save_checkpoint(const std::filesystem::path& path, const Mlp& net, const std::string& tag)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw FormatError("cannot open " + path.string() + " for writing");
    os.write(kMagic, 4);
    os.put(static_cast<char>(kCheckpointVersion));
    write_string(os, tag);
    os.put(net.frozen() ? 1 : 0);
    const auto widths = net.widths();
    write_u64(os, widths.size());
    for (auto w : widths)
        write_u64(os, w);
    for (const auto& l : net.layers()) {
        write_tensor(os, l.weight);
        write_tensor(os, l.bias);
    }
    if (!os)
        throw FormatError("write failed: " + path.string());
}

Mlp load_checkpoint(const std::filesystem::path& path, std::string* tag)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw FormatError("cannot open checkpoint " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError(path.string() + ": bad checkpoint magic");
    const int version = is.get();
    if (version != kCheckpointVersion)
        throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    std::string stored_tag = read_string(is);
    const int frozen = is.get();
    if (frozen != 0 && frozen != 1)
        throw FormatError(path.string() + ": truncated checkpoint header");
    const std::uint64_t n = read_u64(is);
    if (n < 2 || n > 64)
        throw FormatError(path.string() + ": implausible layer count");
    std::vector<std::size_t> widths(n);
    for (auto& w : widths)
        w = read_u64(is);

    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        Tensor w = read_tensor(is);
        Tensor b = read_tensor(is);
        if (w.shape() != Shape{widths[i + 1], widths[i]} || b.shape() != Shape{widths[i + 1]})
            throw FormatError(path.string() + ": parameter shapes disagree with the architecture descriptor");
        layers.push_back({std::move(w), std::move(b)});
    }
    if (is.peek() != std::char_traits<char>::eof())
        throw FormatError(path.string() + ": trailing bytes after checkpoint");
    Mlp net(std::move(layers));
    if (frozen)
        net.freeze();
    if (tag)
        *tag = std::move(stored_tag);
    return net;
}

Mlp load_checkpoint_expecting(const std::filesystem::path& path, const std::vector<std::size_t>& expected_widths,
                              std::string* tag)
{
    Mlp net = load_checkpoint(path, tag);
    if (net.widths() != expected_widths) {
        std::string got, want;
        for (auto w : net.widths())
            got += std::to_string(w) + " ";
        for (auto w : expected_widths)
            want += std::to_string(w) + " ";
        throw ConfigError(path.string() + ": checkpoint widths [" + got + "] do not match configuration [" + want +
                          "]");
    }
    return net;
}

} // namespace mixscape
