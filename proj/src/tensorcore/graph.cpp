#include "mixscape/graph.hpp"

#include "mixscape/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mixscape {

namespace {

void require_matrix(const Tensor& t, const char* op)
{
    if (t.rank() != 2)
        throw ShapeError(std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
}

void add_into(Tensor& dst, const Tensor& src)
{
    auto d = dst.data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] += s[i];
}

} // namespace

NodeId Graph::push(Tensor value, std::vector<std::size_t> inputs, Backprop backprop)
{
    bool tracked = false;
    for (auto i : inputs)
        tracked = tracked || nodes_[i].tracked;
    Node n;
    n.value = std::move(value);
    n.inputs = std::move(inputs);
    n.tracked = tracked;
    if (tracked)
        n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return NodeId{nodes_.size() - 1};
}

const Graph::Node& Graph::node(NodeId id) const
{
    if (id.index >= nodes_.size())
        throw ContractError("unknown graph node " + std::to_string(id.index));
    return nodes_[id.index];
}

Tensor& Graph::grad_slot(std::size_t index)
{
    Node& n = nodes_[index];
    if (n.grad.empty())
        n.grad = Tensor::zeros(n.value.shape());
    return n.grad;
}

NodeId Graph::constant(Tensor value)
{
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return NodeId{nodes_.size() - 1};
}

NodeId Graph::parameter(Tensor value)
{
    Node n;
    n.value = std::move(value);
    n.tracked = true;
    nodes_.push_back(std::move(n));
    return NodeId{nodes_.size() - 1};
}

const Tensor& Graph::value(NodeId id) const
{
    return node(id).value;
}

bool Graph::tracked(NodeId id) const
{
    return node(id).tracked;
}

NodeId Graph::matmul(NodeId a, NodeId b)
{
    Tensor out = mixscape::matmul(value(a), value(b));
    const auto ia = a.index, ib = b.index;
    return push(std::move(out), {ia, ib}, [ia, ib](const Tensor& g, Graph& graph) {
        if (graph.nodes_[ia].tracked)
            add_into(graph.grad_slot(ia),
                     mixscape::matmul(g, mixscape::transpose(graph.nodes_[ib].value)));
        if (graph.nodes_[ib].tracked)
            add_into(graph.grad_slot(ib),
                     mixscape::matmul(mixscape::transpose(graph.nodes_[ia].value), g));
    });
}

NodeId Graph::linear(NodeId x, NodeId w, NodeId b)
{
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    const Tensor& bv = value(b);
    require_matrix(xv, "linear");
    require_matrix(wv, "linear");
    if (xv.cols() != wv.cols() || bv.rank() != 1 || bv.extent(0) != wv.rows())
        throw ShapeError("linear shape mismatch: x " + shape_string(xv.shape()) + ", w " +
                         shape_string(wv.shape()) + ", b " + shape_string(bv.shape()));
    const std::size_t n = xv.rows(), out_w = wv.rows();
    Tensor out({n, out_w});
    for (std::size_t i = 0; i < n; ++i) {
        const auto xr = xv.row(i);
        auto orow = out.row(i);
        for (std::size_t o = 0; o < out_w; ++o)
            orow[o] = dot(xr, wv.row(o)) + bv[o];
    }
    const auto ix = x.index, iw = w.index, ib = b.index;
    return push(std::move(out), {ix, iw, ib}, [ix, iw, ib](const Tensor& g, Graph& graph) {
        const Tensor& xv = graph.nodes_[ix].value;
        const Tensor& wv = graph.nodes_[iw].value;
        const std::size_t n = g.rows(), out_w = g.cols(), in_w = xv.cols();
        if (graph.nodes_[ix].tracked) {
            Tensor& gx = graph.grad_slot(ix);
            for (std::size_t i = 0; i < n; ++i) {
                auto gr = gx.row(i);
                for (std::size_t o = 0; o < out_w; ++o) {
                    const double go = g(i, o);
                    if (go == 0.0)
                        continue;
                    const auto wr = wv.row(o);
                    for (std::size_t k = 0; k < in_w; ++k)
                        gr[k] += go * wr[k];
                }
            }
        }
        if (graph.nodes_[iw].tracked) {
            Tensor& gw = graph.grad_slot(iw);
            for (std::size_t o = 0; o < out_w; ++o) {
                auto gr = gw.row(o);
                for (std::size_t i = 0; i < n; ++i) {
                    const double go = g(i, o);
                    if (go == 0.0)
                        continue;
                    const auto xr = xv.row(i);
                    for (std::size_t k = 0; k < in_w; ++k)
                        gr[k] += go * xr[k];
                }
            }
        }
        if (graph.nodes_[ib].tracked) {
            Tensor& gb = graph.grad_slot(ib);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t o = 0; o < out_w; ++o)
                    gb[o] += g(i, o);
        }
    });
}

NodeId Graph::relu(NodeId x)
{
    Tensor out = value(x);
    for (auto& v : out.data())
        v = v > 0.0 ? v : 0.0;
    const auto ix = x.index;
    return push(std::move(out), {ix}, [ix](const Tensor& g, Graph& graph) {
        const Tensor& xv = graph.nodes_[ix].value;
        Tensor& gx = graph.grad_slot(ix);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (xv[i] > 0.0)
                gx[i] += g[i];
    });
}

NodeId Graph::add(NodeId a, NodeId b)
{
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.shape() != bv.shape())
        throw ShapeError("add shape mismatch: " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
    Tensor out = av;
    add_into(out, bv);
    const auto ia = a.index, ib = b.index;
    return push(std::move(out), {ia, ib}, [ia, ib](const Tensor& g, Graph& graph) {
        if (graph.nodes_[ia].tracked)
            add_into(graph.grad_slot(ia), g);
        if (graph.nodes_[ib].tracked)
            add_into(graph.grad_slot(ib), g);
    });
}

NodeId Graph::mul(NodeId a, NodeId b)
{
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.shape() != bv.shape())
        throw ShapeError("mul shape mismatch: " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] *= bv[i];
    const auto ia = a.index, ib = b.index;
    return push(std::move(out), {ia, ib}, [ia, ib](const Tensor& g, Graph& graph) {
        const Tensor& av = graph.nodes_[ia].value;
        const Tensor& bv = graph.nodes_[ib].value;
        if (graph.nodes_[ia].tracked) {
            Tensor& ga = graph.grad_slot(ia);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i] * bv[i];
        }
        if (graph.nodes_[ib].tracked) {
            Tensor& gb = graph.grad_slot(ib);
            for (std::size_t i = 0; i < g.size(); ++i)
                gb[i] += g[i] * av[i];
        }
    });
}

NodeId Graph::scale(NodeId x, double s)
{
    Tensor out = value(x);
    for (auto& v : out.data())
        v *= s;
    const auto ix = x.index;
    return push(std::move(out), {ix}, [ix, s](const Tensor& g, Graph& graph) {
        Tensor& gx = graph.grad_slot(ix);
        for (std::size_t i = 0; i < g.size(); ++i)
            gx[i] += s * g[i];
    });
}

NodeId Graph::sum(NodeId x)
{
    double s = 0.0;
    for (double v : value(x).data())
        s += v;
    const auto ix = x.index;
    return push(Tensor({1}, {s}), {ix}, [ix](const Tensor& g, Graph& graph) {
        Tensor& gx = graph.grad_slot(ix);
        for (auto& v : gx.data())
            v += g[0];
    });
}

NodeId Graph::transpose(NodeId x)
{
    Tensor out = mixscape::transpose(value(x));
    const auto ix = x.index;
    return push(std::move(out), {ix}, [ix](const Tensor& g, Graph& graph) {
        add_into(graph.grad_slot(ix), mixscape::transpose(g));
    });
}

NodeId Graph::slice_cols(NodeId x, std::size_t begin, std::size_t end)
{
    const Tensor& xv = value(x);
    require_matrix(xv, "slice_cols");
    if (begin >= end || end > xv.cols())
        throw ShapeError("slice_cols range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") outside " + shape_string(xv.shape()));
    const std::size_t n = xv.rows(), w = end - begin;
    Tensor out({n, w});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < w; ++j)
            out(i, j) = xv(i, begin + j);
    const auto ix = x.index;
    return push(std::move(out), {ix}, [ix, begin](const Tensor& g, Graph& graph) {
        Tensor& gx = graph.grad_slot(ix);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j)
                gx(i, begin + j) += g(i, j);
    });
}

NodeId Graph::concat_rows(NodeId a, NodeId b)
{
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_matrix(av, "concat_rows");
    require_matrix(bv, "concat_rows");
    if (av.cols() != bv.cols())
        throw ShapeError("concat_rows width mismatch: " + shape_string(av.shape()) + " vs " +
                         shape_string(bv.shape()));
    std::vector<double> data(av.values());
    data.insert(data.end(), bv.values().begin(), bv.values().end());
    Tensor out({av.rows() + bv.rows(), av.cols()}, std::move(data));
    const auto ia = a.index, ib = b.index;
    const std::size_t split = av.size();
    return push(std::move(out), {ia, ib}, [ia, ib, split](const Tensor& g, Graph& graph) {
        if (graph.nodes_[ia].tracked) {
            Tensor& ga = graph.grad_slot(ia);
            for (std::size_t i = 0; i < split; ++i)
                ga[i] += g[i];
        }
        if (graph.nodes_[ib].tracked) {
            Tensor& gb = graph.grad_slot(ib);
            for (std::size_t i = 0; i < gb.size(); ++i)
                gb[i] += g[split + i];
        }
    });
}

NodeId Graph::normalize_rows(NodeId x, double eps)
{
    Tensor out = l2_normalize_rows(value(x), eps);
    const auto ix = x.index;
    const std::size_t self = nodes_.size();
    return push(std::move(out), {ix}, [ix, self](const Tensor& g, Graph& graph) {
        const Tensor& xv = graph.nodes_[ix].value;
        const Tensor& yv = graph.nodes_[self].value;
        Tensor& gx = graph.grad_slot(ix);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            const auto yr = yv.row(i);
            const auto gr = g.row(i);
            const double n = l2_norm(xv.row(i));
            const double yg = dot(yr, gr);
            auto out = gx.row(i);
            for (std::size_t k = 0; k < yr.size(); ++k)
                out[k] += (gr[k] - yr[k] * yg) / n;
        }
    });
}

NodeId Graph::pairwise_dist(NodeId a, NodeId b)
{
    Tensor out = mixscape::pairwise_dist(value(a), value(b));
    const auto ia = a.index, ib = b.index;
    const std::size_t self = nodes_.size();
    return push(std::move(out), {ia, ib}, [ia, ib, self](const Tensor& g, Graph& graph) {
        const Tensor& av = graph.nodes_[ia].value;
        const Tensor& bv = graph.nodes_[ib].value;
        const Tensor& dv = graph.nodes_[self].value;
        const bool ta = graph.nodes_[ia].tracked, tb = graph.nodes_[ib].tracked;
        Tensor* ga = ta ? &graph.grad_slot(ia) : nullptr;
        Tensor* gb = tb ? &graph.grad_slot(ib) : nullptr;
        const std::size_t d = av.cols();
        for (std::size_t i = 0; i < dv.rows(); ++i) {
            for (std::size_t j = 0; j < dv.cols(); ++j) {
                const double dist = dv(i, j);
                // Subgradient 0 at coincident points.
                if (dist == 0.0 || g(i, j) == 0.0)
                    continue;
                const double c = g(i, j) / dist;
                const auto ar = av.row(i);
                const auto br = bv.row(j);
                for (std::size_t k = 0; k < d; ++k) {
                    const double diff = c * (ar[k] - br[k]);
                    if (ga)
                        (*ga)(i, k) += diff;
                    if (gb)
                        (*gb)(j, k) -= diff;
                }
            }
        }
    });
}

NodeId Graph::infonce_rows(NodeId dist)
{
    const Tensor& dv = value(dist);
    require_matrix(dv, "infonce_rows");
    if (dv.rows() != dv.cols())
        throw ShapeError("infonce_rows expects a square distance matrix, got " + shape_string(dv.shape()));
    const std::size_t n = dv.rows();
    Tensor out({n});
    for (std::size_t j = 0; j < n; ++j) {
        const auto r = dv.row(j);
        // logits are -d; max logit is -min d.
        const double m = -*std::min_element(r.begin(), r.end());
        double s = 0.0;
        for (double x : r)
            s += std::exp(-x - m);
        out[j] = r[j] + m + std::log(s);
    }
    const auto id = dist.index;
    return push(std::move(out), {id}, [id](const Tensor& g, Graph& graph) {
        const Tensor& dv = graph.nodes_[id].value;
        Tensor& gd = graph.grad_slot(id);
        const std::size_t n = dv.rows();
        std::vector<double> p(n);
        for (std::size_t j = 0; j < n; ++j) {
            const auto r = dv.row(j);
            const double m = -*std::min_element(r.begin(), r.end());
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                p[k] = std::exp(-r[k] - m);
                s += p[k];
            }
            for (std::size_t k = 0; k < n; ++k)
                gd(j, k) += g[j] * ((k == j ? 1.0 : 0.0) - p[k] / s);
        }
    });
}

void Graph::backward(NodeId loss)
{
    const Node& l = node(loss);
    if (l.value.size() != 1)
        throw ContractError("backward requires a scalar loss, got shape " + shape_string(l.value.shape()));
    for (auto& n : nodes_)
        n.grad = Tensor();
    grad_slot(loss.index)[0] = 1.0;
    for (std::size_t i = loss.index + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.tracked || n.grad.empty() || !n.backprop)
            continue;
        // The closure may reallocate other slots but never this node's grad.
        const Tensor g = n.grad;
        n.backprop(g, *this);
    }
    has_grads_ = true;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].grad.empty())
            grad_slot(i);
}

const Tensor& Graph::grad(NodeId id) const
{
    if (!has_grads_)
        throw ContractError("grad() called before backward()");
    return node(id).grad;
}

} // namespace mixscape
