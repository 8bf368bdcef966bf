#include "mixscape/errors.hpp"
#include "mixscape/gradcheck.hpp"
#include "mixscape/graph.hpp"
#include "mixscape/rng.hpp"
#include "mixscape/tensor.hpp"
#include "mixscape/tensor_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mixscape;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed)
{
    Rng rng(seed);
    Tensor t({r, c});
    for (auto& v : t.data())
        v = rng.uniform(-1.0, 1.0);
    return t;
}

} // namespace

TEST(Tensor, MatmulMatchesScalarLoop)
{
    const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
    const Tensor b = Tensor::matrix({{5}, {6}});
    EXPECT_EQ(matmul(a, b), Tensor::matrix({{17}, {39}}));

    const Tensor x = random_matrix(5, 7, 1), y = random_matrix(7, 3, 2);
    const Tensor z = matmul(x, y);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            double s = 0;
            for (std::size_t k = 0; k < 7; ++k)
                s += x(i, k) * y(k, j);
            EXPECT_NEAR(z(i, j), s, 1e-14);
        }
}

TEST(Tensor, MatmulShapeErrorNamesBothShapes)
{
    try {
        matmul(Tensor({2, 3}), Tensor({2, 3}));
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    }
}

TEST(Tensor, IdentityIsNeutral)
{
    const Tensor x = random_matrix(4, 4, 3);
    EXPECT_EQ(matmul(x, Tensor::identity(4)), x);
    EXPECT_EQ(transpose(transpose(x)), x);
}

TEST(Tensor, RejectsNonPositiveExtents)
{
    EXPECT_THROW(Tensor({0, 3}), ShapeError);
    EXPECT_THROW(Tensor({2}, {1.0}), ShapeError);
}

TEST(Tensor, NormalizeDegenerateThrows)
{
    EXPECT_THROW(l2_normalize(Tensor::vector({0, 0, 0})), DegenerateVectorError);
    const Tensor n = l2_normalize(Tensor::vector({3, 4}));
    EXPECT_DOUBLE_EQ(n[0], 0.6);
    EXPECT_DOUBLE_EQ(n[1], 0.8);
}

TEST(Tensor, PairwiseDistance)
{
    const Tensor a = Tensor::matrix({{0, 0}, {1, 1}});
    const Tensor b = Tensor::matrix({{3, 4}});
    const Tensor d = pairwise_dist(a, b);
    EXPECT_DOUBLE_EQ(d(0, 0), 5.0);
    EXPECT_DOUBLE_EQ(d(1, 0), std::sqrt(4.0 + 9.0));
}

TEST(Tensor, CosineIsScaleInvariant)
{
    const std::vector<double> a{1, 2, 3}, b{-2, 0.5, 4};
    std::vector<double> a3{3, 6, 9};
    EXPECT_NEAR(cosine_similarity(a, b), cosine_similarity(a3, b), 1e-15);
}

TEST(Graph, BackwardRejectsNonScalarLoss)
{
    Graph g;
    const NodeId x = g.parameter(Tensor::vector({1, 2}));
    EXPECT_THROW(g.backward(x), ContractError);
}

TEST(Graph, UntouchedNodesGetZeroGradient)
{
    Graph g;
    const NodeId x = g.parameter(Tensor::vector({1, 2}));
    const NodeId unused = g.parameter(Tensor::vector({5}));
    g.backward(g.sum(g.mul(x, x)));
    EXPECT_EQ(g.grad(x), Tensor::vector({2, 4}));
    EXPECT_EQ(g.grad(unused), Tensor::vector({0}));
}

TEST(Graph, ConstantsAreNotTracked)
{
    Graph g;
    const NodeId c = g.constant(Tensor::vector({1}));
    const NodeId p = g.parameter(Tensor::vector({1}));
    EXPECT_FALSE(g.tracked(c));
    EXPECT_TRUE(g.tracked(g.add(c, p)));
    EXPECT_FALSE(g.tracked(g.scale(c, 2.0)));
}

TEST(GradCheck, LinearReluStack)
{
    const Tensor w = random_matrix(3, 4, 11), b = Tensor::vector({0.1, -0.2, 0.3});
    const Tensor x = random_matrix(5, 4, 12);
    const auto f = [&](Graph& g, NodeId xn) {
        const NodeId h = g.relu(g.linear(xn, g.constant(w), g.constant(b)));
        return g.sum(g.mul(h, h));
    };
    EXPECT_LT(finite_diff_check(f, x, 1e-6).max_rel_error, 1e-4);
}

TEST(GradCheck, WeightGradientOfLinear)
{
    const Tensor x = random_matrix(6, 4, 13);
    const Tensor w = random_matrix(3, 4, 14);
    const auto f = [&](Graph& g, NodeId wn) {
        const NodeId y = g.linear(g.constant(x), wn, g.constant(Tensor({3})));
        return g.sum(g.mul(y, g.transpose(g.transpose(y))));
    };
    EXPECT_LT(finite_diff_check(f, w, 1e-6).max_rel_error, 1e-4);
}

TEST(GradCheck, NormalizeAndDistance)
{
    const Tensor a = random_matrix(4, 5, 15), b = random_matrix(4, 5, 16);
    const auto f = [&](Graph& g, NodeId an) {
        const NodeId d = g.pairwise_dist(g.normalize_rows(an), g.normalize_rows(g.constant(b)));
        return g.sum(g.infonce_rows(d));
    };
    EXPECT_LT(finite_diff_check(f, a, 1e-6).max_rel_error, 1e-4);
}

TEST(GradCheck, SliceConcatTranspose)
{
    const Tensor x = random_matrix(3, 6, 17);
    const auto f = [&](Graph& g, NodeId xn) {
        const NodeId left = g.slice_cols(xn, 0, 3), right = g.slice_cols(xn, 3, 6);
        const NodeId both = g.concat_rows(left, g.scale(right, -1.5));
        return g.sum(g.mul(both, both));
    };
    EXPECT_LT(finite_diff_check(f, x, 1e-6).max_rel_error, 1e-4);
}

TEST(GradCheck, NonFiniteObjectiveThrows)
{
    const auto f = [](Graph& g, NodeId xn) { return g.sum(g.scale(xn, std::nan(""))); };
    EXPECT_THROW(finite_diff_check(f, Tensor::vector({1.0}), 1e-6), NumericError);
}

TEST(TensorIo, RoundTripIsBitExact)
{
    const Tensor t = random_matrix(3, 4, 21);
    std::stringstream ss;
    write_tensor(ss, t);
    EXPECT_EQ(read_tensor(ss), t);
}

TEST(TensorIo, RejectsBadMagicAndTruncation)
{
    std::stringstream bad("XXXX....");
    EXPECT_THROW(read_tensor(bad), FormatError);

    std::stringstream ss;
    write_tensor(ss, random_matrix(2, 2, 22));
    std::string bytes = ss.str();
    bytes.resize(bytes.size() - 3);
    std::stringstream cut(bytes);
    EXPECT_THROW(read_tensor(cut), FormatError);

    std::string versioned = ss.str();
    versioned[4] = 9;
    std::stringstream vs(versioned);
    EXPECT_THROW(read_tensor(vs), FormatError);
}

TEST(TensorIo, MultiRecordFile)
{
    const auto path = std::filesystem::temp_directory_path() / "mixscape_tensorcore_records.mslt";
    const std::vector<Tensor> ts{random_matrix(2, 3, 23), Tensor::vector({1, 2, 3})};
    save_tensors(path, ts);
    EXPECT_EQ(load_tensors(path), ts);
    std::filesystem::remove(path);
}

TEST(Rng, DerivedStreamsAreReproducible)
{
    Rng a(derive_seed(5, 1)), b(derive_seed(5, 1)), c(derive_seed(5, 2));
    EXPECT_EQ(a.next(), b.next());
    EXPECT_NE(Rng(derive_seed(5, 1)).next(), c.next());
}
