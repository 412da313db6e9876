#include "scle/simulate.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "scle/random.hpp"

namespace scle {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RatioStats {
    double ratio = kNaN;
    double se = kNaN;
};

// Ratio of means of paired samples with a delta-method standard error.
RatioStats ratio_of_means(const std::vector<double>& num, const std::vector<double>& den) {
    const auto n = static_cast<double>(num.size());
    if (num.size() < 2) {
        return {};
    }
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i) {
        a += num[i];
        b += den[i];
    }
    a /= n;
    b /= n;
    double vaa = 0.0, vbb = 0.0, vab = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i) {
        vaa += (num[i] - a) * (num[i] - a);
        vbb += (den[i] - b) * (den[i] - b);
        vab += (num[i] - a) * (den[i] - b);
    }
    vaa /= n - 1.0;
    vbb /= n - 1.0;
    vab /= n - 1.0;
    RatioStats out;
    out.ratio = a / b;
    const double var = (vaa / (b * b) - 2.0 * a * vab / (b * b * b) + a * a * vbb / (b * b * b * b)) / n;
    out.se = std::sqrt(std::max(var, 0.0));
    return out;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return v.empty() ? kNaN : s / static_cast<double>(v.size());
}

Matrix expdecay_derivative(const AnalyticModel& model, const Matrix& sigma) {
    const int d = model.cov.dim;
    Matrix ds = Matrix::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
            if (j != k) {
                ds(j, k) = -expdecay_distance(model.cov.kind, j, k) * sigma(j, k);
            }
        }
    }
    return ds;
}

Matrix expdecay_sigma(const AnalyticModel& model, double theta) {
    CovarianceSpec spec = model.cov;
    spec.theta = theta;
    return build_covariance(spec);
}

double expdecay_loglik(const AnalyticModel& model, const Matrix& second_moment, double theta) {
    const Matrix sigma = expdecay_sigma(model, theta);
    Eigen::LLT<Matrix> llt(sigma);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * logdet - 0.5 * llt.solve(second_moment).trace();
}

}  // namespace

DataMatrix sample_mvn(const Vector& mean, const Matrix& cov, int n, std::uint64_t seed) {
    if (n < 1) {
        fail(ErrorKind::Config, "sample size must be positive");
    }
    if (mean.size() != cov.rows() || cov.rows() != cov.cols()) {
        fail(ErrorKind::Config, "mean and covariance dimensions disagree");
    }
    const Matrix lower = cholesky_lower(cov);
    Rng rng(seed);
    RowMatrix out(n, mean.size());
    fill_mvn(mean, lower, rng, out);
    return DataMatrix(std::move(out));
}

double expdecay_full_score(const AnalyticModel& model, const Matrix& second_moment, double theta) {
    const Matrix sigma = expdecay_sigma(model, theta);
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
        fail(ErrorKind::Model, "covariance is not positive definite at this theta");
    }
    const Matrix a = llt.solve(expdecay_derivative(model, sigma));
    return -0.5 * a.trace() + 0.5 * (a * llt.solve(second_moment)).trace();
}

Vector mle_reference(const AnalyticModel& model, const DataMatrix& data) {
    if (data.cols() != model.dim()) {
        fail(ErrorKind::Config, "data columns do not match the model dimension");
    }
    if (model.family != Family::pairwise_expdecay) {
        const Matrix sigma = model.covariance();
        Eigen::LLT<Matrix> llt(sigma);
        const Vector ones = Vector::Ones(sigma.rows());
        const Vector a = llt.solve(ones);
        return Vector::Constant(1, a.dot(data.column_means()) / a.dot(ones));
    }

    const Matrix x = data.values();
    const Matrix second = x.transpose() * x / static_cast<double>(data.rows());
    auto score = [&](double t) {
        try {
            return expdecay_full_score(model, second, t);
        } catch (const Error&) {
            return kNaN;
        }
    };

    // Log-spaced scan for downward sign changes, then a bracketed root solve.
    constexpr int kGrid = 120;
    const double lo = 1e-3, hi = 50.0;
    std::vector<double> grid(kGrid), values(kGrid);
    for (int i = 0; i < kGrid; ++i) {
        grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (kGrid - 1));
        values[i] = score(grid[i]);
    }
    double best = kNaN;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < kGrid; ++i) {
        if (!(std::isfinite(values[i]) && std::isfinite(values[i + 1]))) {
            continue;
        }
        if (!(values[i] > 0.0 && values[i + 1] <= 0.0)) {
            continue;
        }
        double root = grid[i + 1];
        if (values[i + 1] < 0.0) {
            boost::uintmax_t iters = 200;
            const auto bracket = boost::math::tools::toms748_solve(
                score, grid[i], grid[i + 1], values[i], values[i + 1],
                boost::math::tools::eps_tolerance<double>(52), iters);
            root = 0.5 * (bracket.first + bracket.second);
            if (std::abs(score(bracket.first)) < std::abs(score(root))) {
                root = bracket.first;
            }
            if (std::abs(score(bracket.second)) < std::abs(score(root))) {
                root = bracket.second;
            }
        }
        const double ll = expdecay_loglik(model, second, root);
        if (ll > best_ll) {
            best_ll = ll;
            best = root;
        }
    }
    if (!std::isfinite(best)) {
        fail(ErrorKind::Estimation, "full-likelihood score has no root in [1e-3, 50]");
    }
    return Vector::Constant(1, best);
}

std::string_view to_string(Comparator c) {
    switch (c) {
        case Comparator::mle: return "mle";
        case Comparator::uniform_mcle: return "uniform_mcle";
        case Comparator::scle_path: return "scle_path";
    }
    return "unknown";
}

Comparator parse_comparator(std::string_view name) {
    for (auto c : {Comparator::mle, Comparator::uniform_mcle, Comparator::scle_path}) {
        if (name == to_string(c)) {
            return c;
        }
    }
    fail(ErrorKind::Config, "unknown comparator '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
    if (n < 2) {
        fail(ErrorKind::Config, "simulate.n must be at least 2");
    }
    if (replications < 1) {
        fail(ErrorKind::Config, "simulate.replications must be at least 1");
    }
    if (comparators.empty()) {
        fail(ErrorKind::Config, "simulate.comparators must be nonempty");
    }
    SelectionConfig{tau, lambda_budget}.validate();
    if (!(tau > 0.0)) {
        fail(ErrorKind::Config, "selection.tau must lie in (0,1]");
    }
}

bool ExperimentConfig::wants(Comparator c) const {
    return std::find(comparators.begin(), comparators.end(), c) != comparators.end();
}

MseTrajectory mse_experiment(const ExperimentConfig& config) {
    config.validate();
    const ModelSpec spec = make_model_spec(config.model);
    const Vector alpha = spec.alpha();
    const Matrix lower = cholesky_lower(config.model.covariance());
    const Vector mean = config.model.mean();
    const double truth = config.model.true_theta[0];

    struct Step {
        int count;
        double lambda;
        double err2;
    };
    struct Rep {
        bool ok = false;
        std::string error;
        double err_mle = 0.0;
        double err_unif = 0.0;
        double err_sel = 0.0;
        int sel_count = 0;
        std::vector<Step> steps;
    };
    std::vector<Rep> reps(static_cast<std::size_t>(config.replications));

    parallel_for(reps.size(), config.threads, [&](std::size_t r) {
        Rep& rep = reps[r];
        try {
            Rng rng(mix_seed(config.seed, r));
            RowMatrix sample(config.n, config.model.dim());
            fill_mvn(mean, lower, rng, sample);
            const DataMatrix data(std::move(sample));
            const Vector prelim =
                preliminary_estimate(spec, data, config.model.true_theta, InitRule::uniform());
            rep.err_unif = std::pow(prelim[0] - truth, 2);
            if (config.wants(Comparator::mle)) {
                rep.err_mle = std::pow(mle_reference(config.model, data)[0] - truth, 2);
            }
            const GramSummary gram = empirical_gram(eval_scores(spec, prelim, data));
            const PathResult path = solve_path(gram, alpha, PathStop{config.lambda_budget, 0});
            const auto& bps = path.breakpoints;
            std::vector<bool> seen(static_cast<std::size_t>(spec.m) + 1, false);
            for (std::size_t k = 0; k + 1 < bps.size(); ++k) {
                const auto count = bps[k].segment_active.size();
                if (count == 0 || seen[count]) {
                    continue;
                }
                seen[count] = true;
                const double lam = bps[k + 1].lambda;
                const Vector theta = one_step_update(spec, data, prelim, path.rule_at(lam));
                rep.steps.push_back({static_cast<int>(count), lam, std::pow(theta[0] - truth, 2)});
            }
            const Selection sel = select(path, gram, SelectionConfig{config.tau, config.lambda_budget});
            const CompositionRule rule = path.rule_at(sel.rule_lambda);
            rep.sel_count = static_cast<int>(rule.active().size());
            rep.err_sel = std::pow(one_step_update(spec, data, prelim, rule)[0] - truth, 2);
            rep.ok = true;
        } catch (const Error& e) {
            rep.ok = false;
            rep.error = e.what();
            rep.steps.clear();
        }
    });

    MseTrajectory out;
    out.replications = config.replications;
    std::vector<double> all_mle, all_unif, all_sel, sel_counts;
    std::map<int, std::vector<const Step*>> by_count;
    std::map<int, std::vector<const Rep*>> owners;
    for (const Rep& rep : reps) {
        if (!rep.ok) {
            ++out.failures;
            if (out.failure_messages.size() < 5) {
                out.failure_messages.push_back(rep.error);
            }
            continue;
        }
        all_mle.push_back(rep.err_mle);
        all_unif.push_back(rep.err_unif);
        all_sel.push_back(rep.err_sel);
        sel_counts.push_back(rep.sel_count);
        for (const Step& s : rep.steps) {
            by_count[s.count].push_back(&s);
            owners[s.count].push_back(&rep);
        }
    }
    out.mse_mle = config.wants(Comparator::mle) ? mean_of(all_mle) : kNaN;
    out.mse_unif = mean_of(all_unif);
    out.mse_selected = mean_of(all_sel);
    out.selected_count_mean = mean_of(sel_counts);

    for (const auto& [count, steps] : by_count) {
        TrajectoryPoint pt;
        pt.active_count = count;
        pt.reps = static_cast<int>(steps.size());
        std::vector<double> scle, mle, unif, lam;
        for (std::size_t i = 0; i < steps.size(); ++i) {
            scle.push_back(steps[i]->err2);
            lam.push_back(steps[i]->lambda);
            mle.push_back(owners[count][i]->err_mle);
            unif.push_back(owners[count][i]->err_unif);
        }
        if (pt.reps < 2) {
            continue;
        }
        pt.lambda_mean = mean_of(lam);
        pt.mse_scle = mean_of(scle);
        pt.mse_unif = mean_of(unif);
        const RatioStats ru = ratio_of_means(unif, scle);
        pt.ratio_unif = ru.ratio;
        pt.se_unif = ru.se;
        if (config.wants(Comparator::mle)) {
            pt.mse_mle = mean_of(mle);
            const RatioStats rm = ratio_of_means(mle, scle);
            pt.ratio_mle = rm.ratio;
            pt.se_mle = rm.se;
        } else {
            pt.mse_mle = pt.ratio_mle = pt.se_mle = kNaN;
        }
        out.points.push_back(pt);
    }
    std::ostringstream ref;
    bool first = true;
    for (Comparator c : config.comparators) {
        if (c == Comparator::scle_path) {
            continue;
        }
        ref << (first ? "" : ",") << to_string(c);
        first = false;
    }
    out.reference = ref.str();
    return out;
}

std::vector<ReplicateFit> replicate_fits(const AnalyticModel& model, int n, int replications,
                                         std::uint64_t seed, const FitConfig& config, int threads) {
    if (n < 2 || replications < 1) {
        fail(ErrorKind::Config, "replicate_fits requires n >= 2 and replications >= 1");
    }
    const ModelSpec spec = make_model_spec(model);
    const Matrix lower = cholesky_lower(model.covariance());
    const Vector mean = model.mean();
    FitConfig cfg = config;
    if (cfg.init.size() == 0) {
        cfg.init = model.true_theta;
    }
    std::vector<ReplicateFit> out(static_cast<std::size_t>(replications));
    parallel_for(out.size(), threads, [&](std::size_t r) {
        try {
            Rng rng(mix_seed(seed, r));
            RowMatrix sample(n, model.dim());
            fill_mvn(mean, lower, rng, sample);
            const FitResult res = fit(spec, DataMatrix(std::move(sample)), cfg);
            out[r].ok = true;
            out[r].theta = res.theta;
            out[r].std_errors = res.std_errors;
            out[r].active_count = static_cast<int>(res.rule.active().size());
        } catch (const Error& e) {
            out[r].ok = false;
            out[r].error = e.what();
        }
    });
    return out;
}

std::vector<ArePoint> are_curve(const AnalyticModel& model, const GramSummary& population,
                                const std::vector<double>& lambda_grid) {
    const double full = full_information(model);
    const Vector alpha = Vector::Ones(population.m());
    const bool closed_form =
        model.family == Family::exchangeable_location ||
        (model.family == Family::common_location && model.covariance().isDiagonal(0.0));
    std::vector<ArePoint> out;
    out.reserve(lambda_grid.size());
    for (double lambda : lambda_grid) {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            fail(ErrorKind::Config, "lambda grid values must be finite and nonnegative");
        }
        const CompositionRule rule = closed_form ? analytic_optimal_rule(model, lambda)
                                                 : solve_fixed_lambda(population, lambda, alpha);
        out.push_back({lambda, static_cast<int>(rule.active().size()),
                       asymptotic_relative_efficiency(population, full, rule)});
    }
    return out;
}

std::vector<ArePoint> are_curve(const AnalyticModel& model, const std::vector<double>& lambda_grid) {
    return are_curve(model, population_gram(model), lambda_grid);
}

std::vector<double> linear_lambda_grid(double lambda_max, int count) {
    if (count < 2 || !(lambda_max > 0.0)) {
        fail(ErrorKind::Config, "lambda grid needs count >= 2 and lambda_max > 0");
    }
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        grid[i] = lambda_max * static_cast<double>(count - 1 - i) / (count - 1);
    }
    return grid;
}

}  // namespace scle
