#pragma once

#include "mixscape/graph.hpp"
#include "mixscape/synthworld.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mixscape {

struct DenseLayer {
    Tensor weight; // [out × in]
    Tensor bias;   // [out]
};

/// Dense ReLU network: ReLU between layers, identity on the output.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<DenseLayer> layers);

    /// Kaiming-uniform weights (bound √(6 / fan_in)), zero biases.
    static Mlp init(const std::vector<std::size_t>& widths, std::uint64_t seed);

    std::vector<std::size_t> widths() const;
    std::size_t input_width() const;
    std::size_t output_width() const;
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

    bool frozen() const noexcept { return frozen_; }
    void freeze() noexcept { frozen_ = true; }

    /// Mutable parameter list in layer order (w0, b0, w1, b1, ...).
    /// Throws ContractError on a frozen network.
    std::vector<Tensor*> parameters();

    /// Batched inference without a graph: [n × in] → [n × out].
    Tensor forward(const Tensor& batch) const;

    struct Binding {
        std::vector<NodeId> params; // same order as parameters()
    };
    /// Puts the parameters on a graph. Tracking a frozen network is rejected.
    Binding bind(Graph& g, bool track) const;
    NodeId forward(Graph& g, const Binding& b, NodeId batch) const;

    friend bool operator==(const Mlp& a, const Mlp& b);

private:
    std::vector<DenseLayer> layers_;
    bool frozen_ = false;
};

// Layer widths of the three networks.
struct EncoderArchitecture {
    std::size_t embed_dim = 64;
    std::vector<std::size_t> audio_hidden = {128, 96};
    std::vector<std::size_t> image_hidden = {256, 96};
    std::vector<std::size_t> separator_hidden = {256, 128};

    std::vector<std::size_t> audio_widths(std::size_t signal_length) const;
    std::vector<std::size_t> image_widths(const RenderParams& rp) const;
    std::vector<std::size_t> separator_widths(std::size_t signal_length) const;
};

Tensor signal_batch(const std::vector<const Signal*>& signals);
Tensor image_batch(const std::vector<const GlyphImage*>& images);

Tensor encode_audio(const Mlp& params, const Signal& a);
Tensor encode_image(const Mlp& params, const GlyphImage& v);

/// Output of the separator: one 2d-vector whose halves are the two sources.
class SplitEmbedding {
public:
    explicit SplitEmbedding(Tensor full);

    const Tensor& full() const noexcept { return full_; }
    std::size_t half_dim() const noexcept { return full_.size() / 2; }
    std::span<const double> half1() const { return full_.data().first(half_dim()); }
    std::span<const double> half2() const { return full_.data().subspan(half_dim()); }
    Tensor half1_tensor() const;
    Tensor half2_tensor() const;

private:
    Tensor full_;
};

/// Runs the separator on a mixed signal. Throws ConfigError if the output
/// width is odd or differs from 2 · expected_half (when expected_half > 0).
SplitEmbedding separate(const Mlp& params, const Signal& a_mix, std::size_t expected_half = 0);

// Checkpoint: "MSLE", version byte, tag string, frozen byte, layer count and
// widths (u64 LE), then every parameter as a tensor record.
inline constexpr unsigned char kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Mlp& net, const std::string& tag = {});
/// Reads into a temporary and only returns a fully validated network.
/// Throws FormatError on bad magic/version/truncation.
Mlp load_checkpoint(const std::filesystem::path& path, std::string* tag = nullptr);
/// As load_checkpoint, additionally rejecting (ConfigError) a checkpoint whose
/// widths differ from `expected_widths`.
Mlp load_checkpoint_expecting(const std::filesystem::path& path, const std::vector<std::size_t>& expected_widths,
                              std::string* tag = nullptr);

} // namespace mixscape
