#include "mixscape/alignment.hpp"
#include "mixscape/errors.hpp"
#include "mixscape/gradcheck.hpp"
#include "mixscape/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace mixscape;

namespace {

std::vector<double> unit_vector(Rng& rng, std::size_t d)
{
    std::vector<double> v(d);
    double n = 0;
    for (auto& x : v) {
        x = rng.normal();
        n += x * x;
    }
    for (auto& x : v)
        x /= std::sqrt(n);
    return v;
}

double euclid(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

// -log(exp(-|a - b_j|) / Σ_k exp(-|a - b_k|)), written out without any
// stabilisation.
double scalar_infonce(const std::vector<double>& a, const std::vector<std::vector<double>>& b, std::size_t j)
{
    double denom = 0;
    for (const auto& bk : b)
        denom += std::exp(-euclid(a, bk));
    return -std::log(std::exp(-euclid(a, b[j])) / denom);
}

std::vector<double> normalized(std::span<const double> v)
{
    double n = 0;
    for (double x : v)
        n += x * x;
    std::vector<double> out(v.begin(), v.end());
    for (auto& x : out)
        x /= std::sqrt(n);
    return out;
}

// Term-by-term alignment objective: each (tuple, half) is one positive,
// negatives are the same half's ground truths of the other tuples, both
// directions, normalised by 2·B' with B' = 2B.
double scalar_alignment(const std::vector<SplitEmbedding>& batch,
                        const std::vector<std::pair<Tensor, Tensor>>& gt)
{
    const std::size_t b = batch.size();
    double total = 0;
    for (int half = 0; half < 2; ++half) {
        std::vector<std::vector<double>> av, ref;
        for (std::size_t j = 0; j < b; ++j) {
            av.push_back(normalized(half == 0 ? batch[j].half1() : batch[j].half2()));
            const Tensor& t = half == 0 ? gt[j].first : gt[j].second;
            ref.emplace_back(t.data().begin(), t.data().end());
        }
        for (std::size_t j = 0; j < b; ++j)
            total += scalar_infonce(av[j], ref, j) + scalar_infonce(ref[j], av, j);
    }
    return total / (2.0 * static_cast<double>(2 * b));
}

struct RandomBatch {
    std::vector<SplitEmbedding> split;
    std::vector<std::pair<Tensor, Tensor>> audio, image;
};

RandomBatch random_batch(std::size_t b, std::size_t d, std::uint64_t seed)
{
    Rng rng(seed);
    RandomBatch out;
    for (std::size_t j = 0; j < b; ++j) {
        Tensor full({2 * d});
        for (auto& x : full.data())
            x = rng.uniform(-2, 2);
        out.split.emplace_back(full);
        auto unit = [&] { auto v = unit_vector(rng, d); return Tensor({d}, v); };
        out.audio.emplace_back(unit(), unit());
        out.image.emplace_back(unit(), unit());
    }
    return out;
}

Tensor basis(std::size_t d, std::size_t i)
{
    Tensor e({d});
    e[i] = 1.0;
    return e;
}

Tensor rows(const std::vector<Tensor>& vs)
{
    Tensor m({vs.size(), vs.front().size()});
    for (std::size_t i = 0; i < vs.size(); ++i)
        std::copy(vs[i].data().begin(), vs[i].data().end(), m.row(i).begin());
    return m;
}

} // namespace

TEST(InfoNce, SingleCandidateIsZero)
{
    const Tensor a = rows({basis(3, 0)});
    EXPECT_EQ(infonce(0, a, a), 0.0);
}

TEST(InfoNce, TwoOrthonormalCandidates)
{
    const Tensor a = rows({basis(2, 0), basis(2, 1)});
    const Tensor b = rows({basis(2, 0), basis(2, 1)});
    EXPECT_NEAR(infonce(0, a, b), std::log(1.0 + std::exp(-std::sqrt(2.0))), 1e-10);
    EXPECT_NEAR(infonce(0, a, b), 0.217622, 1e-6);
}

TEST(InfoNce, StrictlyPositiveWithNegatives)
{
    const RandomBatch rb = random_batch(4, 5, 3);
    std::vector<Tensor> a, c;
    for (const auto& [x, y] : rb.audio) {
        a.push_back(x);
        c.push_back(y);
    }
    for (std::size_t j = 0; j < 4; ++j)
        EXPECT_GT(infonce(j, rows(a), rows(c)), 0.0);
}

TEST(InfoNce, MovingThePositiveCloserLowersTheLoss)
{
    Rng rng(5);
    std::vector<Tensor> a, b;
    for (int i = 0; i < 4; ++i) {
        a.emplace_back(Shape{6}, unit_vector(rng, 6));
        b.emplace_back(Shape{6}, unit_vector(rng, 6));
    }
    double prev = infonce(0, rows(a), rows(b));
    for (double t : {0.25, 0.5, 0.75, 1.0}) {
        Tensor moved({6});
        for (std::size_t i = 0; i < 6; ++i)
            moved[i] = (1 - t) * b[0][i] + t * a[0][i];
        auto bs = b;
        bs[0] = l2_normalize(moved);
        const double cur = infonce(0, rows(a), rows(bs));
        EXPECT_LT(cur, prev);
        prev = cur;
    }
}

TEST(InfoNce, RejectsRowsOffTheUnitSphere)
{
    const Tensor a = rows({Tensor::vector({2, 0}), basis(2, 1)});
    EXPECT_THROW(infonce(0, a, a), ContractError);
    const Tensor u = rows({basis(2, 0), basis(2, 1)});
    EXPECT_THROW(infonce(2, u, u), ContractError);
}

TEST(InfoNce, StableForLargeDistances)
{
    // Antipodal unit vectors keep every exponent bounded; the stable form must
    // agree with the naive one.
    const Tensor a = rows({basis(2, 0), Tensor::vector({-1, 0})});
    const Tensor b = rows({Tensor::vector({-1, 0}), basis(2, 0)});
    const double expected = -std::log(std::exp(-2.0) / (std::exp(-2.0) + 1.0));
    EXPECT_NEAR(infonce(0, a, b), expected, 1e-12);
}

TEST(Alignment, A2aMatchesScalarOracle)
{
    for (std::size_t b = 2; b <= 8; ++b) {
        const RandomBatch rb = random_batch(b, 5, 100 + b);
        EXPECT_NEAR(a2a_loss(rb.split, rb.audio), scalar_alignment(rb.split, rb.audio), 1e-10) << "B=" << b;
    }
}

TEST(Alignment, A2vMatchesScalarOracle)
{
    for (std::size_t b = 2; b <= 8; ++b) {
        const RandomBatch rb = random_batch(b, 5, 200 + b);
        EXPECT_NEAR(a2v_loss(rb.split, rb.image), scalar_alignment(rb.split, rb.image), 1e-10) << "B=" << b;
    }
}

TEST(Alignment, PerfectHalvesWithOrthogonalCrossPairs)
{
    // B = 2, d = 4: every half equals its ground truth, all other pairs orthogonal.
    std::vector<SplitEmbedding> split;
    std::vector<std::pair<Tensor, Tensor>> gt;
    for (std::size_t j = 0; j < 2; ++j) {
        Tensor full({8});
        full[j] = 1.0;
        full[4 + 2 + j] = 1.0;
        split.emplace_back(full);
        gt.emplace_back(basis(4, j), basis(4, 2 + j));
    }
    // Four InfoNCE sums, each over two directions, equal to log(1 + e^{-√2}).
    const double per_term = std::log(1.0 + std::exp(-std::sqrt(2.0)));
    const double expected = (2 * 2 * 2 * per_term) / (2.0 * 4.0);
    EXPECT_NEAR(a2a_loss(split, gt), expected, 1e-12);
    EXPECT_NEAR(a2a_loss(split, gt), scalar_alignment(split, gt), 1e-12);
}

TEST(Alignment, PermutationInvariance)
{
    RandomBatch rb = random_batch(6, 4, 7);
    const double before_a = a2a_loss(rb.split, rb.audio);
    const double before_v = a2v_loss(rb.split, rb.image);
    std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    RandomBatch p;
    for (auto i : perm) {
        p.split.push_back(rb.split[i]);
        p.audio.push_back(rb.audio[i]);
        p.image.push_back(rb.image[i]);
    }
    EXPECT_NEAR(a2a_loss(p.split, p.audio), before_a, 1e-12);
    EXPECT_NEAR(a2v_loss(p.split, p.image), before_v, 1e-12);
}

TEST(Alignment, NeedsTwoTuplesAndCompleteGroundTruth)
{
    const RandomBatch one = random_batch(1, 4, 8);
    EXPECT_THROW(a2a_loss(one.split, one.audio), ContractError);
    RandomBatch rb = random_batch(3, 4, 9);
    rb.audio.pop_back();
    EXPECT_THROW(a2a_loss(rb.split, rb.audio), DataError);
}

TEST(Alignment, CrossHalfNegativesPoolBothStreams)
{
    const RandomBatch rb = random_batch(3, 4, 10);
    AlignmentConfig cfg;
    cfg.cross_half_negatives = true;
    // Oracle: one stream of 2B positives with one shared candidate pool.
    std::vector<std::vector<double>> av, ref;
    for (int half = 0; half < 2; ++half)
        for (std::size_t j = 0; j < 3; ++j) {
            av.push_back(normalized(half == 0 ? rb.split[j].half1() : rb.split[j].half2()));
            const Tensor& t = half == 0 ? rb.audio[j].first : rb.audio[j].second;
            ref.emplace_back(t.data().begin(), t.data().end());
        }
    double total = 0;
    for (std::size_t j = 0; j < 6; ++j)
        total += scalar_infonce(av[j], ref, j) + scalar_infonce(ref[j], av, j);
    EXPECT_NEAR(a2a_loss(rb.split, rb.audio, cfg), total / 12.0, 1e-10);
}

TEST(TotalLoss, ModeDispatch)
{
    const RandomBatch rb = random_batch(4, 5, 11);
    const double a = a2a_loss(rb.split, rb.audio), v = a2v_loss(rb.split, rb.image);

    AlignmentConfig cfg;
    cfg.mode = AlignmentMode::A2APlusA2V;
    EXPECT_NEAR(total_loss(rb.split, rb.audio, rb.image, cfg), a + v, 1e-12);
    cfg.weight = 0.0;
    EXPECT_NEAR(total_loss(rb.split, rb.audio, rb.image, cfg), a, 1e-12);

    cfg = {};
    cfg.mode = AlignmentMode::A2A;
    const RandomBatch other = random_batch(4, 5, 12);
    EXPECT_EQ(total_loss(rb.split, rb.audio, rb.image, cfg), total_loss(rb.split, rb.audio, other.image, cfg));
    EXPECT_EQ(total_loss(rb.split, rb.audio, std::nullopt, cfg), a);

    cfg.mode = AlignmentMode::A2V;
    EXPECT_THROW(total_loss(rb.split, rb.audio, std::nullopt, cfg), DataError);
    EXPECT_EQ(total_loss(rb.split, std::nullopt, rb.image, cfg), v);
}

TEST(Alignment, ModeNames)
{
    EXPECT_STREQ(mode_name(AlignmentMode::A2APlusA2V), "A2A+A2V");
    EXPECT_EQ(parse_mode("A2V"), AlignmentMode::A2V);
    EXPECT_THROW(parse_mode("A2X"), ConfigError);
}

TEST(GradCheck, AlignmentLossesAtRandomPoints)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const RandomBatch rb = random_batch(3, 4, 300 + seed);
        Tensor x({3, 8});
        for (std::size_t j = 0; j < 3; ++j)
            std::copy(rb.split[j].full().data().begin(), rb.split[j].full().data().end(), x.row(j).begin());
        const GroundTruthPair audio = stack_ground_truth(rb.audio, 3);
        const GroundTruthPair image = stack_ground_truth(rb.image, 3);
        const auto fa = [&](Graph& g, NodeId xn) { return a2a_loss(g, xn, audio); };
        const auto fv = [&](Graph& g, NodeId xn) { return a2v_loss(g, xn, image); };
        EXPECT_LT(finite_diff_check(fa, x, 1e-6).max_rel_error, 1e-4);
        EXPECT_LT(finite_diff_check(fv, x, 1e-6).max_rel_error, 1e-4);
    }
}

TEST(Alignment, FewAdamFreeGradientStepsDescend)
{
    // Plain gradient descent on the separator output of a fixed batch.
    const RandomBatch rb = random_batch(4, 4, 13);
    const GroundTruthPair gt = stack_ground_truth(rb.audio, 4);
    Tensor x({4, 8});
    for (std::size_t j = 0; j < 4; ++j)
        std::copy(rb.split[j].full().data().begin(), rb.split[j].full().data().end(), x.row(j).begin());
    double prev = INFINITY;
    for (int step = 0; step < 10; ++step) {
        Graph g;
        const NodeId xn = g.parameter(x);
        const NodeId loss = a2a_loss(g, xn, gt);
        const double v = g.value(loss)[0];
        EXPECT_LT(v, prev);
        prev = v;
        g.backward(loss);
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] -= 0.5 * g.grad(xn)[i];
    }
}
