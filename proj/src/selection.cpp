#include "scle/selection.hpp"

#include <algorithm>
#include <cmath>

namespace scle {

void SelectionConfig::validate() const {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        fail(ErrorKind::Config, "selection.tau must lie in [0,1]");
    }
    if (!(lambda_budget >= 0.0) || !std::isfinite(lambda_budget)) {
        fail(ErrorKind::Config, "selection.lambda_budget must be a finite nonnegative number");
    }
}

double phi(const GramSummary& gram, const std::vector<int>& active, double lambda,
           double lambda_budget) {
    const double total = gram.trace();
    if (!(total > 0.0)) {
        fail(ErrorKind::Degenerate, "score Gram has zero trace");
    }
    if (!(lambda > lambda_budget)) {
        return 0.0;
    }
    double selected = 0.0;
    for (int j : active) {
        if (j < 0 || j >= gram.m()) {
            fail(ErrorKind::Config, "active index out of range");
        }
        selected += gram.diag_b()[j];
    }
    return std::clamp(selected / total, 0.0, 1.0);
}

double phi(const GramSummary& gram, const CompositionRule& rule, double lambda,
           double lambda_budget) {
    if (rule.m() != gram.m()) {
        fail(ErrorKind::Config, "rule length does not match the Gram dimension");
    }
    return phi(gram, rule.active(), lambda, lambda_budget);
}

std::vector<SelectionTracePoint> selection_trace(const PathResult& path, const GramSummary& gram,
                                                 const SelectionConfig& config) {
    std::vector<SelectionTracePoint> trace;
    trace.reserve(path.breakpoints.size());
    for (const auto& bp : path.breakpoints) {
        trace.push_back({bp.lambda, static_cast<int>(bp.segment_active.size()),
                         phi(gram, bp.segment_active, bp.lambda, config.lambda_budget)});
    }
    return trace;
}

Selection select(const PathResult& path, const GramSummary& gram, const SelectionConfig& config) {
    config.validate();
    if (path.breakpoints.empty()) {
        fail(ErrorKind::Config, "cannot select lambda on an empty path");
    }
    const auto& bps = path.breakpoints;
    for (std::size_t k = 0; k < bps.size(); ++k) {
        if (!(bps[k].lambda > config.lambda_budget)) {
            break;
        }
        const double value = phi(gram, bps[k].segment_active, bps[k].lambda, config.lambda_budget);
        if (value > config.tau) {
            Selection out;
            out.lambda = bps[k].lambda;
            const double lower = k + 1 < bps.size() ? bps[k + 1].lambda : bps[k].lambda;
            out.rule_lambda = std::max(lower, config.lambda_budget);
            out.phi = value;
            out.active_count = static_cast<int>(bps[k].segment_active.size());
            return out;
        }
    }
    Selection out;
    out.lambda = config.lambda_budget;
    out.rule_lambda = std::max(config.lambda_budget, path.lambda_end());
    out.budget_reached = true;
    const CompositionRule rule = path.rule_at(out.rule_lambda);
    out.active_count = static_cast<int>(rule.active().size());
    out.phi = phi(gram, rule.active(), out.lambda, config.lambda_budget);
    return out;
}

double select_lambda(const PathResult& path, const GramSummary& gram,
                     const SelectionConfig& config) {
    return select(path, gram, config).lambda;
}

}  // namespace scle
