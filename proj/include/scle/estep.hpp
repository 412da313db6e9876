#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scle/selection.hpp"
#include "scle/tstep.hpp"

namespace scle {

/// Composition rule used for the preliminary estimate.
struct InitRule {
    enum class Kind { uniform, stochastic, fixed };

    Kind kind = Kind::uniform;
    std::uint64_t seed = 0;  // stochastic: Bernoulli(keep_prob) per score
    double keep_prob = 0.5;
    Vector weights;  // fixed

    static InitRule uniform() { return {}; }
    static InitRule stochastic(std::uint64_t seed, double keep_prob) {
        return {Kind::stochastic, seed, keep_prob, {}};
    }
    static InitRule fixed(Vector w) { return {Kind::fixed, 0, 0.0, std::move(w)}; }

    CompositionRule materialize(int m) const;
};

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 100;
    int max_halvings = 30;
};

/// Damped Newton solve of E_Fn u(theta, w0) = 0.
Vector preliminary_estimate(const ModelSpec& model, const DataMatrix& data, const Vector& init,
                            const InitRule& rule0 = {}, const NewtonOptions& opts = {});

/// E_Fn grad u(theta, w), a p x p matrix (row a, column b = d u_a / d theta_b).
/// Uses the model derivative when present, otherwise central differences with
/// step max(1e-6, 1e-6 |theta_k|).
Matrix mean_jacobian(const ModelSpec& model, const DataMatrix& data, const Vector& theta,
                     const CompositionRule& rule);

/// theta - [E_Fn grad u(theta, w)]^{-1} E_Fn u(theta, w). One linear solve.
Vector one_step_update(const ModelSpec& model, const DataMatrix& data, const Vector& theta_hat,
                       const CompositionRule& rule);

struct SandwichMatrices {
    Matrix sensitivity;  // K = -E_Fn grad u(theta, w)
    Matrix variability;  // centered empirical covariance of u_i(theta, w)
    Matrix godambe;      // K' J^{-1} K
    Vector theta;
    CompositionRule rule;
};

SandwichMatrices sandwich(const ModelSpec& model, const DataMatrix& data, const Vector& theta,
                          const CompositionRule& rule);

/// sqrt(diag(godambe^{-1}) / n).
Vector standard_errors(const SandwichMatrices& s, int n);

struct FitConfig {
    double tau = 0.9;
    double lambda_budget = 0.0;
    int refine_rounds = 2;
    Vector init;  // defaults to zeros
    InitRule init_rule;

    void validate(int p) const;
};

struct FitResult {
    Vector preliminary_theta;
    double selected_lambda = 0.0;
    CompositionRule rule;  // rule.lambda() is where the rule was evaluated
    Vector theta;
    SandwichMatrices sandwich;
    Vector std_errors;
    int iterations = 0;
    KktReport kkt;
    double phi = 0.0;
    bool budget_reached = false;
    int n_obs = 0;
    std::vector<std::string> labels;
    std::vector<std::string> warnings;
};

/// Full two-step pipeline. With `tstep_gram` set, the T-Step runs on that
/// (population) Gram instead of the empirical one and refinement leaves the
/// rule unchanged.
FitResult fit(const ModelSpec& model, const DataMatrix& data, const FitConfig& config,
              const GramSummary* tstep_gram = nullptr);

}  // namespace scle
