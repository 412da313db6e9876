#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scle/estep.hpp"
#include "scle/models.hpp"

namespace scle {

/// n draws of N(mean, cov) through the lower Cholesky factor.
DataMatrix sample_mvn(const Vector& mean, const Matrix& cov, int n, std::uint64_t seed);

/// Full-likelihood estimate with the true covariance structure: the GLS mean
/// for the location families, the root of the full score for pairwise_expdecay.
Vector mle_reference(const AnalyticModel& model, const DataMatrix& data);

/// Mean full-likelihood score in theta for the expdecay covariance family
/// (zero-mean data, unit variances).
double expdecay_full_score(const AnalyticModel& model, const Matrix& second_moment, double theta);

enum class Comparator { mle, uniform_mcle, scle_path };

std::string_view to_string(Comparator c);
Comparator parse_comparator(std::string_view name);

struct ExperimentConfig {
    AnalyticModel model;
    int n = 50;
    int replications = 1000;
    std::uint64_t seed = 0;
    std::vector<Comparator> comparators{Comparator::mle, Comparator::uniform_mcle,
                                        Comparator::scle_path};
    double tau = 0.9;
    double lambda_budget = 0.0;
    int threads = 1;

    void validate() const;
    bool wants(Comparator c) const;
};

struct TrajectoryPoint {
    int active_count = 0;
    int reps = 0;            // replications whose path reached this count
    double lambda_mean = 0.0;
    double mse_scle = 0.0;
    double mse_mle = 0.0;    // over the same replications
    double mse_unif = 0.0;
    double ratio_mle = 0.0;  // MSE_MLE / MSE_SCLE
    double se_mle = 0.0;
    double ratio_unif = 0.0; // MSE_Unif / MSE_SCLE
    double se_unif = 0.0;
};

struct MseTrajectory {
    std::vector<TrajectoryPoint> points;
    std::string reference = "mle,uniform_mcle";
    int replications = 0;
    int failures = 0;
    std::vector<std::string> failure_messages;  // first few, for diagnosis
    double mse_mle = 0.0;
    double mse_unif = 0.0;
    double mse_selected = 0.0;          // SCLE at the tau-selected lambda
    double selected_count_mean = 0.0;
    bool valid() const { return replications > 0 && failures * 100 < replications; }
};

/// Replicated draw / preliminary / path / per-breakpoint one-step experiment.
/// Trajectories are aligned by active count. Results do not depend on threads.
MseTrajectory mse_experiment(const ExperimentConfig& config);

struct ReplicateFit {
    bool ok = false;
    Vector theta;
    Vector std_errors;
    int active_count = 0;
    std::string error;
};

/// Runs `fit` on `replications` independent samples of size n.
std::vector<ReplicateFit> replicate_fits(const AnalyticModel& model, int n, int replications,
                                         std::uint64_t seed, const FitConfig& config,
                                         int threads = 1);

struct ArePoint {
    double lambda;
    int active_count;
    double are;
};

/// Population-optimal rule (closed form where available, otherwise the fixed-
/// lambda solver on the population Gram) and its ARE at each grid value.
std::vector<ArePoint> are_curve(const AnalyticModel& model, const std::vector<double>& lambda_grid);
std::vector<ArePoint> are_curve(const AnalyticModel& model, const GramSummary& population,
                                const std::vector<double>& lambda_grid);

/// `count` values from lambda_max down to 0, evenly spaced.
std::vector<double> linear_lambda_grid(double lambda_max, int count);

}  // namespace scle
