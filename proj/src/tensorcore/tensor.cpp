#include "mixscape/tensor.hpp"

#include "mixscape/errors.hpp"

#include <cmath>
#include <sstream>

namespace mixscape {

std::string shape_string(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i)
        os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

std::size_t shape_volume(const Shape& shape)
{
    std::size_t n = 1;
    for (auto e : shape) {
        if (e == 0)
            throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
        n *= e;
    }
    return n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_volume(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data))
{
    if (data_.size() != shape_volume(shape_))
        throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
}

Tensor Tensor::filled(Shape shape, double value)
{
    Tensor t(std::move(shape));
    for (auto& x : t.data_)
        x = value;
    return t;
}

Tensor Tensor::identity(std::size_t n)
{
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i)
        t(i, i) = 1.0;
    return t;
}

Tensor Tensor::vector(std::initializer_list<double> values)
{
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c)
            throw ShapeError("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::rows() const
{
    if (rank() != 2)
        throw ShapeError("expected a matrix, got shape " + shape_string(shape_));
    return shape_[0];
}

std::size_t Tensor::cols() const
{
    if (rank() != 2)
        throw ShapeError("expected a matrix, got shape " + shape_string(shape_));
    return shape_[1];
}

std::span<double> Tensor::row(std::size_t r)
{
    const std::size_t c = cols();
    return std::span<double>(data_).subspan(r * c, c);
}

std::span<const double> Tensor::row(std::size_t r) const
{
    const std::size_t c = cols();
    return std::span<const double>(data_).subspan(r * c, c);
}

Tensor Tensor::reshaped(Shape shape) const
{
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept
{
    for (double x : data_)
        if (!std::isfinite(x))
            return false;
    return true;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept
{
    // Four independent accumulators; fixed order keeps results reproducible.
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    const std::size_t n = a.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i)
        s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

double l2_norm(std::span<const double> v) noexcept
{
    return std::sqrt(dot(v, v));
}

Tensor matmul(const Tensor& a, const Tensor& b)
{
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
        throw ShapeError("matmul shape mismatch: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        auto orow = out.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a(i, p);
            if (av == 0.0)
                continue;
            const auto brow = b.row(p);
            for (std::size_t j = 0; j < n; ++j)
                orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& a)
{
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            out(j, i) = a(i, j);
    return out;
}

Tensor l2_normalize(const Tensor& v, double eps)
{
    const double n = l2_norm(v.data());
    if (!(n > eps))
        throw DegenerateVectorError("cannot normalize vector with norm " + std::to_string(n) +
                                    " (collapsed or untrained embedding)");
    Tensor out = v;
    for (auto& x : out.data())
        x /= n;
    return out;
}

Tensor l2_normalize_rows(const Tensor& m, double eps)
{
    Tensor out = m;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = out.row(i);
        const double n = l2_norm(r);
        if (!(n > eps))
            throw DegenerateVectorError("cannot normalize row " + std::to_string(i) + " with norm " +
                                        std::to_string(n));
        for (auto& x : r)
            x /= n;
    }
    return out;
}

Tensor pairwise_dist(const Tensor& a, const Tensor& b)
{
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
        throw ShapeError("pairwise_dist feature mismatch: " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
    const std::size_t n = a.rows(), m = b.rows(), d = a.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        const auto ai = a.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            const auto bj = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = ai[k] - bj[k];
                s += diff * diff;
            }
            out(i, j) = std::sqrt(s);
        }
    }
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw ShapeError("cosine_similarity length mismatch");
    const double na = l2_norm(a), nb = l2_norm(b);
    if (!(na > kNormFloor) || !(nb > kNormFloor))
        throw DegenerateVectorError("cosine similarity of a degenerate vector");
    return dot(a, b) / (na * nb);
}

} // namespace mixscape
