#pragma once

#include "mixscape/graph.hpp"

#include <functional>
#include <span>

namespace mixscape {

/// A scalar objective built on a fresh graph from the leaf holding x.
using ScalarObjective = std::function<NodeId(Graph& graph, NodeId x)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_coord = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Compares backward() against central differences with step h.
/// Relative error per coordinate is |numeric - analytic| / (|analytic| + 1e-8).
/// When `coords` is non-empty only those flat indices are probed.
/// Throws NumericError if the objective is non-finite at any probe.
GradCheckReport finite_diff_check(const ScalarObjective& f, const Tensor& x, double h,
                                  std::span<const std::size_t> coords = {});

} // namespace mixscape
