#pragma once

#include "mixscape/tensor.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace mixscape {

struct NodeId {
    std::size_t index = 0;
};

/// Append-only reverse-mode tape. Each op records its output value and a
/// closure that scatters the output gradient into its inputs. Nodes only
/// reference earlier nodes, so a single reverse sweep is a valid
/// topological traversal.
///
/// A graph belongs to one training step on one thread.
class Graph {
public:
    NodeId constant(Tensor value);
    NodeId parameter(Tensor value);

    NodeId matmul(NodeId a, NodeId b);
    /// x · wᵀ + b for x [n×in], w [out×in], b [out].
    NodeId linear(NodeId x, NodeId w, NodeId b);
    NodeId relu(NodeId x);
    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId x, double s);
    NodeId sum(NodeId x);
    NodeId transpose(NodeId x);
    NodeId slice_cols(NodeId x, std::size_t begin, std::size_t end);
    NodeId concat_rows(NodeId a, NodeId b);
    NodeId normalize_rows(NodeId x, double eps = kNormFloor);
    NodeId pairwise_dist(NodeId a, NodeId b);
    /// Per-row distance-softmax contrastive loss of a square distance matrix:
    /// out_j = d_jj + log Σ_k exp(-d_jk).
    NodeId infonce_rows(NodeId dist);

    const Tensor& value(NodeId id) const;
    bool tracked(NodeId id) const;
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Populates gradients of every node reachable from a scalar loss.
    /// Throws ContractError if the loss is not a single element.
    void backward(NodeId loss);
    /// Gradient after backward(); zeros for nodes the loss does not touch.
    const Tensor& grad(NodeId id) const;

private:
    using Backprop = std::function<void(const Tensor& out_grad, Graph& g)>;

    struct Node {
        Tensor value;
        std::vector<std::size_t> inputs;
        bool tracked = false;
        Backprop backprop;
        Tensor grad;
    };

    NodeId push(Tensor value, std::vector<std::size_t> inputs, Backprop backprop);
    const Node& node(NodeId id) const;
    Tensor& grad_slot(std::size_t index);

    std::vector<Node> nodes_;
    bool has_grads_ = false;
};

} // namespace mixscape
