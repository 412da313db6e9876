#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "scle/core.hpp"

namespace scle {

enum class CovarianceKind {
    identity,
    diag_increasing,          // sigma_k^2 = k
    first10_uncorrelated_ar,  // I_10 block, then rho^{|j-k|} (rho defaults to 0.8)
    block6,                   // blocks of six, within-block correlation rho (0.6)
    meta_sqrt_corr,           // sigma_jj = j, sigma_jk = rho sqrt(jk)
    exchangeable,             // (1 - rho) I + rho 11'
    expdecay_sqrt,            // exp(-theta sqrt(2|j-k|))
    expdecay_sq,              // exp(-theta 2 (j-k)^2)
};

struct CovarianceSpec {
    CovarianceKind kind = CovarianceKind::identity;
    int dim = 1;
    std::optional<double> rho;  // correlation parameter, kind default when empty
    double theta = 0.0;         // decay rate for the expdecay kinds
};

std::string_view to_string(CovarianceKind kind);
CovarianceKind parse_covariance_kind(std::string_view name);
bool is_expdecay(CovarianceKind kind);

/// Exact covariance matrix for the spec. Throws ErrorKind::Model unless it is PD.
Matrix build_covariance(const CovarianceSpec& spec);

/// Distance delta(j, k) such that sigma_jk(theta) = exp(-theta * delta(j, k)).
/// Indices are zero-based.
double expdecay_distance(CovarianceKind kind, int j, int k);

enum class Family { common_location, exchangeable_location, pairwise_expdecay };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

struct AnalyticModel {
    Family family = Family::common_location;
    CovarianceSpec cov;
    Vector true_theta;                  // p = 1 for all built-in families
    std::optional<double> fisher_trace;  // m* = E||u_ML(theta*)||^2 when closed form

    /// Validates family/covariance compatibility and fills fisher_trace.
    static AnalyticModel make(Family family, CovarianceSpec cov, double theta);

    int m() const;
    int dim() const { return cov.dim; }
    /// Covariance of the data at the true parameter.
    Matrix covariance() const;
    /// Mean vector of the data at the true parameter.
    Vector mean() const;
};

/// Score model for the family, with known marginal variances (location) or
/// unit variances (pairwise). Partial scores are ordered (0,1), (0,2), ...,
/// (d-2,d-1) for the pairwise family.
ModelSpec make_model_spec(const AnalyticModel& model);

/// Common-location scores u_j = (x_j - theta) / sigma2_j.
ModelSpec common_location_model(const Vector& sigma2);

/// Pairwise bivariate-normal scores for the decay parameter of an expdecay kind.
ModelSpec pairwise_expdecay_model(int dim, CovarianceKind kind);

/// d/dtheta of the log bivariate normal density with unit variances and
/// correlation exp(-theta * djk).
double pairwise_expdecay_score(double theta, double xj, double xk, double djk);
/// d/dtheta of pairwise_expdecay_score.
double pairwise_expdecay_score_derivative(double theta, double xj, double xk, double djk);

/// Population score Gram at theta*. Exact for the location families; for the
/// pairwise family a seeded Monte Carlo estimate with the default draw count.
GramSummary population_gram(const AnalyticModel& model);

struct MonteCarloGram {
    GramSummary gram;
    Matrix std_error;  // per-entry Monte Carlo standard error
    long long draws;
};

/// Monte Carlo estimate of E[u u'] at theta*. Draws are split into fixed-size
/// chunks with per-chunk seeds, so the result does not depend on `threads`.
MonteCarloGram population_gram_mc(const AnalyticModel& model, long long draws,
                                  std::uint64_t seed, int threads = 1);

inline constexpr long long kDefaultGramDraws = 100000;
inline constexpr std::uint64_t kDefaultGramSeed = 20240607;

/// Closed-form population-optimal rule w*_lambda (independent common location
/// or exchangeable location).
CompositionRule analytic_optimal_rule(const AnalyticModel& model, double lambda);

/// (sum_j w_j X̄_j / sigma2_j) / (sum_j w_j / sigma2_j).
double profile_location_mcle(const CompositionRule& rule, const DataMatrix& data,
                             const Vector& sigma2);

/// rho^2 m / (rho^2 (m - 1) + 1).
double exchangeable_tradeoff_ratio(int m, double rho);

/// Full-likelihood Fisher information for the scalar parameter at theta*.
double full_information(const AnalyticModel& model);

/// Godambe information of the rule divided by the full information, computed
/// from a population Gram (K = w'b, J = w'Gw).
double asymptotic_relative_efficiency(const GramSummary& population, double full_info,
                                      const CompositionRule& rule);
double asymptotic_relative_efficiency(const AnalyticModel& model, const CompositionRule& rule);

}  // namespace scle
