#pragma once

#include <string>
#include <vector>

#include "scle/core.hpp"

namespace scle {

// T-Step: minimize 0.5 w'Gw - b'w + lambda * sum_j alpha_j |w_j| with b = diag(G).
// The pseudo-covariance c(w) = b - Gw drives the optimality conditions:
//   w_j != 0  =>  c_j = lambda * alpha_j * sign(w_j)
//   w_j == 0  =>  |c_j| <= lambda * alpha_j

struct TStepOptions {
    double kkt_tol = 1e-8;
    int max_sweeps = 10000;
    double change_tol = 1e-10;
};

struct KktReport {
    double max_active_violation = 0.0;
    double max_inactive_violation = 0.0;
    bool sign_consistent = true;

    double worst() const {
        return max_active_violation > max_inactive_violation ? max_active_violation
                                                             : max_inactive_violation;
    }
    bool passes(double tol) const { return sign_consistent && worst() <= tol; }
};

struct PathEvent {
    std::vector<int> entered;
    std::vector<int> left;
    bool terminal = false;

    std::string describe() const;
};

struct Breakpoint {
    double lambda = 0.0;
    CompositionRule rule;             // w evaluated at lambda; support excludes new entrants
    PathEvent event;
    std::vector<int> segment_active;  // active set on the segment just below lambda
};

struct PathStop {
    double lambda_min = 0.0;  // also the computing-budget floor
    int max_active = 0;       // 0 = unbounded
};

class PathResult {
public:
    std::vector<Breakpoint> breakpoints;
    double lambda_max = 0.0;
    std::vector<std::string> warnings;
    bool truncated = false;  // ended before lambda_min because of singularity or max_active

    /// Rule at any lambda in [last breakpoint, inf), by linear interpolation
    /// between breakpoints (the path is piecewise linear).
    CompositionRule rule_at(double lambda) const;
    double lambda_end() const { return breakpoints.empty() ? 0.0 : breakpoints.back().lambda; }
};

/// Smallest lambda for which w = 0 is optimal: max_j b_j / alpha_j.
double lambda_entry(const GramSummary& gram, const Vector& alpha);

double tstep_objective(const GramSummary& gram, const Vector& w, double lambda,
                       const Vector& alpha);

KktReport kkt_check(const GramSummary& gram, const CompositionRule& rule, double lambda,
                    const Vector& alpha);

/// Cyclic coordinate descent with soft-thresholding, followed by an exact
/// active-set polish. Throws Singular for an ill-posed lambda = 0 problem and
/// Convergence when the KKT certificate cannot be met.
CompositionRule solve_fixed_lambda(const GramSummary& gram, double lambda, const Vector& alpha,
                                   const TStepOptions& opts = {});

/// Piecewise-linear homotopy from lambda_max down to stop.lambda_min.
PathResult solve_path(const GramSummary& gram, const Vector& alpha, const PathStop& stop = {});

/// Exhaustive search over all 3^m sign patterns. Test oracle; refuses m > 12.
CompositionRule brute_force_oracle(const GramSummary& gram, double lambda, const Vector& alpha);

}  // namespace scle
