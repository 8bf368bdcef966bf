#include "mixscape/encoders.hpp"

#include "mixscape/errors.hpp"

namespace mixscape {

Tensor signal_batch(const std::vector<const Signal*>& signals)
{
    if (signals.empty())
        throw ShapeError("empty signal batch");
    const std::size_t len = signals.front()->samples.size();
    std::vector<double> data;
    data.reserve(signals.size() * len);
    for (const Signal* s : signals) {
        if (s->samples.size() != len)
            throw ShapeError("signal batch has mixed lengths");
        data.insert(data.end(), s->samples.values().begin(), s->samples.values().end());
    }
    return Tensor({signals.size(), len}, std::move(data));
}

Tensor image_batch(const std::vector<const GlyphImage*>& images)
{
    if (images.empty())
        throw ShapeError("empty image batch");
    const std::size_t len = images.front()->pixels.size();
    std::vector<double> data;
    data.reserve(images.size() * len);
    for (const GlyphImage* v : images) {
        if (v->pixels.size() != len)
            throw ShapeError("image batch has mixed dimensions");
        data.insert(data.end(), v->pixels.values().begin(), v->pixels.values().end());
    }
    return Tensor({images.size(), len}, std::move(data));
}

Tensor encode_audio(const Mlp& params, const Signal& a)
{
    return params.forward(signal_batch({&a})).reshaped({params.output_width()});
}

Tensor encode_image(const Mlp& params, const GlyphImage& v)
{
    return params.forward(image_batch({&v})).reshaped({params.output_width()});
}

SplitEmbedding::SplitEmbedding(Tensor full) : full_(std::move(full))
{
    if (full_.rank() != 1 || full_.size() % 2 != 0)
        throw ConfigError("split embedding needs an even-length vector, got " + shape_string(full_.shape()));
}

Tensor SplitEmbedding::half1_tensor() const
{
    const auto h = half1();
    return Tensor({h.size()}, std::vector<double>(h.begin(), h.end()));
}

Tensor SplitEmbedding::half2_tensor() const
{
    const auto h = half2();
    return Tensor({h.size()}, std::vector<double>(h.begin(), h.end()));
}

SplitEmbedding separate(const Mlp& params, const Signal& a_mix, std::size_t expected_half)
{
    const std::size_t out = params.output_width();
    if (out % 2 != 0)
        throw ConfigError("separator output width " + std::to_string(out) + " is odd");
    if (expected_half != 0 && out != 2 * expected_half)
        throw ConfigError("separator output width " + std::to_string(out) + " != 2 x " +
                          std::to_string(expected_half));
    return SplitEmbedding(params.forward(signal_batch({&a_mix})).reshaped({out}));
}

} // namespace mixscape
