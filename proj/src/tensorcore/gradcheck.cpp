#include "mixscape/gradcheck.hpp"

#include "mixscape/errors.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace mixscape {

namespace {

double evaluate(const ScalarObjective& f, const Tensor& x)
{
    Graph g;
    const NodeId leaf = g.parameter(x);
    const Tensor& out = g.value(f(g, leaf));
    if (out.size() != 1)
        throw ContractError("finite_diff_check objective must be scalar, got " + shape_string(out.shape()));
    if (!std::isfinite(out[0]))
        throw NumericError("finite_diff_check: objective is not finite at a probe point");
    return out[0];
}

} // namespace

GradCheckReport finite_diff_check(const ScalarObjective& f, const Tensor& x, double h,
                                  std::span<const std::size_t> coords)
{
    if (!(h > 0.0))
        throw ContractError("finite difference step must be positive");

    Graph g;
    const NodeId leaf = g.parameter(x);
    const NodeId loss = f(g, leaf);
    if (!std::isfinite(g.value(loss)[0]))
        throw NumericError("finite_diff_check: objective is not finite at the base point");
    g.backward(loss);
    const Tensor analytic = g.grad(leaf);

    std::vector<std::size_t> all;
    if (coords.empty()) {
        all.resize(x.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        coords = all;
    }

    GradCheckReport report;
    Tensor probe = x;
    for (const std::size_t i : coords) {
        if (i >= x.size())
            throw ContractError("finite_diff_check coordinate out of range");
        const double orig = probe[i];
        probe[i] = orig + h;
        const double up = evaluate(f, probe);
        probe[i] = orig - h;
        const double down = evaluate(f, probe);
        probe[i] = orig;
        const double numeric = (up - down) / (2.0 * h);
        const double rel = std::abs(numeric - analytic[i]) / (std::abs(analytic[i]) + 1e-8);
        if (rel >= report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_coord = i;
            report.analytic = analytic[i];
            report.numeric = numeric;
        }
    }
    return report;
}

} // namespace mixscape
