#include "mixscape/encoders.hpp"
#include "mixscape/errors.hpp"
#include "mixscape/gradcheck.hpp"
#include "mixscape/rng.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace mixscape;
namespace fs = std::filesystem;

namespace {

fs::path scratch_file(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "mixscape_test_encoders";
    fs::create_directories(dir);
    return dir / name;
}

std::string file_bytes(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

// Single zero-bias layer whose weight is the identity.
Mlp identity_layer(std::size_t n)
{
    return Mlp({DenseLayer{Tensor::identity(n), Tensor({n})}});
}

} // namespace

TEST(Mlp, ArchitectureWidths)
{
    const EncoderArchitecture a;
    EXPECT_EQ(a.audio_widths(256), (std::vector<std::size_t>{256, 128, 96, 64}));
    EXPECT_EQ(a.image_widths(RenderParams{}), (std::vector<std::size_t>{32 * 32 * 3, 256, 96, 64}));
    EXPECT_EQ(a.separator_widths(256), (std::vector<std::size_t>{256, 256, 128, 128}));
    EXPECT_EQ(Mlp::init(a.audio_widths(256), 1).widths(), a.audio_widths(256));
}

TEST(Mlp, RejectsLayersThatDoNotChain)
{
    std::vector<DenseLayer> layers{{Tensor({4, 3}), Tensor({4})}, {Tensor({2, 5}), Tensor({2})}};
    EXPECT_THROW(Mlp{layers}, ShapeError);
}

TEST(Mlp, KaimingBoundAndZeroBias)
{
    const Mlp m = Mlp::init({50, 20, 10}, 3);
    for (const auto& l : m.layers()) {
        const double bound = std::sqrt(6.0 / static_cast<double>(l.weight.cols()));
        for (double w : l.weight.data())
            EXPECT_LE(std::abs(w), bound);
        for (double b : l.bias.data())
            EXPECT_EQ(b, 0.0);
    }
    EXPECT_EQ(Mlp::init({50, 20, 10}, 3), m);
    EXPECT_FALSE(Mlp::init({50, 20, 10}, 4) == m);
}

TEST(Encoders, ZeroSignalThroughIdentityLayerIsZero)
{
    const Signal zero{Tensor({16}), {0}};
    EXPECT_EQ(encode_audio(identity_layer(16), zero), Tensor({16}));
}

TEST(Encoders, BlackImageThroughZeroBiasNetIsZero)
{
    GlyphImage black;
    black.pixels = Tensor({4, 4, 3});
    const Mlp net = Mlp::init({48, 8, 5}, 2);
    EXPECT_EQ(encode_image(net, black), Tensor({5}));
}

TEST(Encoders, DeterministicForwardAndWidthCheck)
{
    const Roster r = desk_roster();
    const Signal s = synth_signal(r.at(1), 4, 0.1);
    const Mlp net = Mlp::init(EncoderArchitecture{}.audio_widths(256), 7);
    EXPECT_EQ(encode_audio(net, s), encode_audio(net, s));
    EXPECT_EQ(encode_audio(net, s).size(), 64u);
    const Signal short_signal{Tensor({100}), {0}};
    EXPECT_THROW(encode_audio(net, short_signal), ShapeError);
}

TEST(Separate, DeskHalvesAndViewIdentity)
{
    const Roster r = desk_roster();
    const Signal s = mix(synth_signal(r.at(0), 1, 0.1), synth_signal(r.at(5), 2, 0.1));
    const Mlp net = Mlp::init(EncoderArchitecture{}.separator_widths(256), 9);
    const SplitEmbedding e = separate(net, s, 64);
    ASSERT_EQ(e.full().size(), 128u);
    EXPECT_EQ(e.half_dim(), 64u);
    for (std::size_t i = 0; i < 64; ++i) {
        EXPECT_EQ(e.half1()[i], e.full()[i]);
        EXPECT_EQ(e.half2()[i], e.full()[64 + i]);
    }
}

TEST(Separate, WideOutputGivesTwoHalvesOf2048)
{
    const Mlp net = Mlp({DenseLayer{Tensor({4096, 8}), Tensor::filled({4096}, 0.5)}});
    const Signal s{Tensor::filled({8}, 0.1), {0}};
    const SplitEmbedding e = separate(net, s, 2048);
    EXPECT_EQ(e.half1().size(), 2048u);
    EXPECT_EQ(e.half2().size(), 2048u);
}

TEST(Separate, WidthMismatchIsAConfigError)
{
    const Signal s{Tensor::filled({8}, 0.1), {0}};
    EXPECT_THROW(separate(Mlp::init({8, 7}, 1), s), ConfigError);
    EXPECT_THROW(separate(Mlp::init({8, 10}, 1), s, 4), ConfigError);
}

TEST(Frozen, TrackingAFrozenNetworkIsRejected)
{
    Mlp net = Mlp::init({6, 4, 2}, 1);
    net.freeze();
    Graph g;
    EXPECT_THROW(net.bind(g, true), ContractError);
    EXPECT_THROW(net.parameters(), ContractError);
    EXPECT_NO_THROW(net.bind(g, false));
}

TEST(GradCheck, SeparatorForwardPass)
{
    const Mlp net = Mlp::init({12, 10, 8, 6}, 21);
    Rng rng(22);
    Tensor x({3, 12});
    for (auto& v : x.data())
        v = rng.uniform(-1, 1);
    const auto f = [&](Graph& g, NodeId xn) {
        const auto b = net.bind(g, false);
        const NodeId out = net.forward(g, b, xn);
        const NodeId h1 = g.normalize_rows(g.slice_cols(out, 0, 3));
        const NodeId h2 = g.normalize_rows(g.slice_cols(out, 3, 6));
        return g.sum(g.mul(h1, h2));
    };
    EXPECT_LT(finite_diff_check(f, x, 1e-6).max_rel_error, 1e-4);
}

TEST(Checkpoint, RoundTripIsByteExact)
{
    Mlp net = Mlp::init({10, 6, 4}, 5);
    const fs::path p = scratch_file("net.ckpt"), q = scratch_file("net2.ckpt");
    save_checkpoint(p, net, "tag-1");
    std::string tag;
    const Mlp back = load_checkpoint(p, &tag);
    EXPECT_EQ(back, net);
    EXPECT_EQ(tag, "tag-1");
    save_checkpoint(q, back, "tag-1");
    EXPECT_EQ(file_bytes(p), file_bytes(q));

    net.freeze();
    save_checkpoint(p, net);
    EXPECT_TRUE(load_checkpoint(p).frozen());
}

TEST(Checkpoint, TruncatedOrForeignFilesAreFormatErrors)
{
    const fs::path p = scratch_file("cut.ckpt");
    save_checkpoint(p, Mlp::init({10, 6, 4}, 5));
    const std::string bytes = file_bytes(p);
    {
        std::ofstream os(p, std::ios::binary | std::ios::trunc);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 20));
    }
    EXPECT_THROW(load_checkpoint(p), FormatError);
    {
        std::ofstream os(p, std::ios::binary | std::ios::trunc);
        os << "NOPE" << bytes.substr(4);
    }
    EXPECT_THROW(load_checkpoint(p), FormatError);
    {
        std::string v = bytes;
        v[4] = 42;
        std::ofstream os(p, std::ios::binary | std::ios::trunc);
        os << v;
    }
    EXPECT_THROW(load_checkpoint(p), FormatError);
}

TEST(Checkpoint, MismatchedWidthsAreConfigErrors)
{
    const fs::path p = scratch_file("dims.ckpt");
    save_checkpoint(p, Mlp::init({256, 256, 128, 128}, 5));
    EXPECT_NO_THROW(load_checkpoint_expecting(p, {256, 256, 128, 128}));
    EXPECT_THROW(load_checkpoint_expecting(p, {256, 256, 128, 64}), ConfigError);
}
