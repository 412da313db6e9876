#pragma once

#include <cstddef>
#include <vector>

#include "scle/tstep.hpp"

namespace scle {

struct SelectionConfig {
    double tau = 0.9;
    double lambda_budget = 0.0;  // computing-budget floor lambda*

    void validate() const;
};

/// Share of total score variability carried by the active scores, zeroed at or
/// below the budget: [sum_{j in active} G_jj / tr G] * 1(lambda > budget).
/// For p > 1, G_jj is the full trace tr(E u_j u_j').
double phi(const GramSummary& gram, const std::vector<int>& active, double lambda,
           double lambda_budget);
double phi(const GramSummary& gram, const CompositionRule& rule, double lambda,
           double lambda_budget);

struct SelectionTracePoint {
    double lambda;
    int active_count;
    double phi;
};

/// phi at every breakpoint, using the active set of the segment below it.
std::vector<SelectionTracePoint> selection_trace(const PathResult& path, const GramSummary& gram,
                                                 const SelectionConfig& config);

struct Selection {
    double lambda = 0.0;       // max{lambda : phi(lambda) > tau}, or the budget
    double rule_lambda = 0.0;  // where the rule is evaluated: lower end of the selected segment
    double phi = 0.0;
    int active_count = 0;
    bool budget_reached = false;
};

Selection select(const PathResult& path, const GramSummary& gram, const SelectionConfig& config);

double select_lambda(const PathResult& path, const GramSummary& gram,
                     const SelectionConfig& config);

}  // namespace scle
