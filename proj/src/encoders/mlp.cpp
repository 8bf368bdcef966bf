#include "mixscape/encoders.hpp"

#include "mixscape/errors.hpp"
#include "mixscape/rng.hpp"

#include <cmath>

namespace mixscape {

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers))
{
    if (layers_.empty())
        throw ConfigError("an MLP needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.weight.rank() != 2 || l.bias.rank() != 1 || l.bias.extent(0) != l.weight.rows())
            throw ShapeError("layer " + std::to_string(i) + " has weight " + shape_string(l.weight.shape()) +
                             " and bias " + shape_string(l.bias.shape()));
        if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows())
            throw ShapeError("layer " + std::to_string(i) + " input width " + std::to_string(l.weight.cols()) +
                             " does not chain to previous output " + std::to_string(layers_[i - 1].weight.rows()));
    }
}

Mlp Mlp::init(const std::vector<std::size_t>& widths, std::uint64_t seed)
{
    if (widths.size() < 2)
        throw ConfigError("MLP widths need an input and an output");
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const std::size_t in = widths[i], out = widths[i + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(in));
        Tensor w({out, in});
        for (auto& x : w.data())
            x = rng.uniform(-bound, bound);
        layers.push_back({std::move(w), Tensor({out})});
    }
    return Mlp(std::move(layers));
}

std::vector<std::size_t> Mlp::widths() const
{
    std::vector<std::size_t> out;
    if (layers_.empty())
        return out;
    out.push_back(layers_.front().weight.cols());
    for (const auto& l : layers_)
        out.push_back(l.weight.rows());
    return out;
}

std::size_t Mlp::input_width() const
{
    return layers_.at(0).weight.cols();
}

std::size_t Mlp::output_width() const
{
    return layers_.at(layers_.size() - 1).weight.rows();
}

std::vector<Tensor*> Mlp::parameters()
{
    if (frozen_)
        throw ContractError("frozen encoder parameters cannot be handed out for updates");
    std::vector<Tensor*> out;
    for (auto& l : layers_) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    return out;
}

Tensor Mlp::forward(const Tensor& batch) const
{
    if (batch.rank() != 2 || batch.cols() != input_width())
        throw ShapeError("encoder input " + shape_string(batch.shape()) + " does not match input width " +
                         std::to_string(input_width()));
    Tensor x = batch;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const auto& l = layers_[li];
        const std::size_t n = x.rows(), out_w = l.weight.rows();
        Tensor y({n, out_w});
        const bool hidden = li + 1 < layers_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto xr = x.row(i);
            auto yr = y.row(i);
            for (std::size_t o = 0; o < out_w; ++o) {
                const double v = dot(xr, l.weight.row(o)) + l.bias[o];
                yr[o] = hidden && v < 0.0 ? 0.0 : v;
            }
        }
        x = std::move(y);
    }
    return x;
}

Mlp::Binding Mlp::bind(Graph& g, bool track) const
{
    if (track && frozen_)
        throw ContractError("frozen encoders cannot be tracked on a gradient graph");
    Binding b;
    for (const auto& l : layers_) {
        b.params.push_back(track ? g.parameter(l.weight) : g.constant(l.weight));
        b.params.push_back(track ? g.parameter(l.bias) : g.constant(l.bias));
    }
    return b;
}

NodeId Mlp::forward(Graph& g, const Binding& b, NodeId batch) const
{
    if (b.params.size() != 2 * layers_.size())
        throw ContractError("binding does not belong to this network");
    NodeId x = batch;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        x = g.linear(x, b.params[2 * li], b.params[2 * li + 1]);
        if (li + 1 < layers_.size())
            x = g.relu(x);
    }
    return x;
}

bool operator==(const Mlp& a, const Mlp& b)
{
    if (a.layers_.size() != b.layers_.size() || a.frozen_ != b.frozen_)
        return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i)
        if (!(a.layers_[i].weight == b.layers_[i].weight) || !(a.layers_[i].bias == b.layers_[i].bias))
            return false;
    return true;
}

std::vector<std::size_t> EncoderArchitecture::audio_widths(std::size_t signal_length) const
{
    std::vector<std::size_t> w{signal_length};
    w.insert(w.end(), audio_hidden.begin(), audio_hidden.end());
    w.push_back(embed_dim);
    return w;
}

std::vector<std::size_t> EncoderArchitecture::image_widths(const RenderParams& rp) const
{
    std::vector<std::size_t> w{rp.height * rp.width * 3};
    w.insert(w.end(), image_hidden.begin(), image_hidden.end());
    w.push_back(embed_dim);
    return w;
}

std::vector<std::size_t> EncoderArchitecture::separator_widths(std::size_t signal_length) const
{
    std::vector<std::size_t> w{signal_length};
    w.insert(w.end(), separator_hidden.begin(), separator_hidden.end());
    w.push_back(2 * embed_dim);
    return w;
}

} // namespace mixscape
