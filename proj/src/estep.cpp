#include "scle/estep.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scle/random.hpp"

namespace scle {

namespace {

template <class F>
auto in_stage(const char* name, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(name) + ": " + e.what());
    }
}

void check_rule(const ModelSpec& model, const CompositionRule& rule) {
    if (rule.m() != model.m) {
        fail(ErrorKind::Config, "composition rule length does not match the number of scores");
    }
}

/// Combined per-observation scores u_i(theta, w) as a p x n matrix, evaluating
/// only the active sub-likelihoods.
Matrix active_combined(const ModelSpec& model, const DataMatrix& data, const Vector& theta,
                       const CompositionRule& rule) {
    if (rule.empty()) {
        return Matrix::Zero(model.p, data.rows());
    }
    const ScoreBatch batch = eval_scores_subset(model, theta, data, rule.active());
    Vector w(static_cast<Eigen::Index>(rule.active().size()));
    for (std::size_t r = 0; r < rule.active().size(); ++r) {
        w[static_cast<Eigen::Index>(r)] = rule.weights()[rule.active()[r]];
    }
    Matrix out(model.p, data.rows());
    for (int i = 0; i < data.rows(); ++i) {
        out.col(i) = batch.observation(i).transpose() * w;
    }
    return out;
}

Vector active_mean(const ModelSpec& model, const DataMatrix& data, const Vector& theta,
                   const CompositionRule& rule) {
    return active_combined(model, data, theta, rule).rowwise().mean();
}

Eigen::PartialPivLU<Matrix> factor_or_fail(const Matrix& a, const std::string& message) {
    Eigen::PartialPivLU<Matrix> lu(a);
    if (!a.allFinite() || a.cwiseAbs().maxCoeff() == 0.0 || !(lu.rcond() > 1e-14)) {
        fail(ErrorKind::Estimation, message);
    }
    return lu;
}

}  // namespace

CompositionRule InitRule::materialize(int m) const {
    switch (kind) {
        case Kind::uniform:
            return CompositionRule::uniform(m);
        case Kind::fixed:
            if (weights.size() != m) {
                fail(ErrorKind::Config, "fixed initial rule must have length m");
            }
            if (weights.isZero(0.0)) {
                fail(ErrorKind::Degenerate, "fixed initial rule is all zero");
            }
            return {weights, 0.0};
        case Kind::stochastic: {
            if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
                fail(ErrorKind::Config, "stochastic keep probability must lie in (0,1]");
            }
            Rng rng(mix_seed(seed, 0));
            std::bernoulli_distribution keep(keep_prob);
            Vector w = Vector::Zero(m);
            for (int j = 0; j < m; ++j) {
                w[j] = keep(rng) ? 1.0 : 0.0;
            }
            if (w.isZero(0.0)) {
                std::uniform_int_distribution<int> pick(0, m - 1);
                w[pick(rng)] = 1.0;
            }
            return {std::move(w), 0.0};
        }
    }
    return CompositionRule::uniform(m);
}

Matrix mean_jacobian(const ModelSpec& model, const DataMatrix& data, const Vector& theta,
                     const CompositionRule& rule) {
    check_rule(model, rule);
    const int p = model.p;
    if (rule.empty()) {
        return Matrix::Zero(p, p);
    }
    const auto& idx = rule.active();
    const auto k = static_cast<Eigen::Index>(idx.size());
    if (model.deriv_subset || model.deriv) {
        Matrix total = Matrix::Zero(p, p);
        Matrix block(model.deriv_subset ? k * p : static_cast<Eigen::Index>(model.m) * p, p);
        for (int i = 0; i < data.rows(); ++i) {
            block.setZero();
            if (model.deriv_subset) {
                model.deriv_subset(theta, data.row(i), idx, block);
                for (Eigen::Index r = 0; r < k; ++r) {
                    total += rule.weights()[idx[r]] * block.middleRows(r * p, p);
                }
            } else {
                model.deriv(theta, data.row(i), block);
                for (int j : idx) {
                    total += rule.weights()[j] * block.middleRows(static_cast<Eigen::Index>(j) * p, p);
                }
            }
        }
        total /= static_cast<double>(data.rows());
        if (!total.allFinite()) {
            fail(ErrorKind::Evaluation, "non-finite score derivative");
        }
        return total;
    }
    Matrix jac(p, p);
    for (int b = 0; b < p; ++b) {
        const double h = std::max(1e-6, 1e-6 * std::abs(theta[b]));
        Vector up = theta;
        Vector down = theta;
        up[b] += h;
        down[b] -= h;
        jac.col(b) = (active_mean(model, data, up, rule) - active_mean(model, data, down, rule)) /
                     (up[b] - down[b]);
    }
    return jac;
}

Vector preliminary_estimate(const ModelSpec& model, const DataMatrix& data, const Vector& init,
                            const InitRule& rule0, const NewtonOptions& opts) {
    model.validate();
    if (init.size() != model.p || !init.allFinite()) {
        fail(ErrorKind::Config, "initial value must be a finite vector of length p");
    }
    const CompositionRule rule = rule0.materialize(model.m);
    Vector theta = init;
    Vector score = active_mean(model, data, theta, rule);
    double norm = score.norm();
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (norm <= opts.tol) {
            return theta;
        }
        const Matrix jac = mean_jacobian(model, data, theta, rule);
        const auto lu = factor_or_fail(jac, "singular Jacobian in preliminary Newton iteration");
        const Vector step = -lu.solve(score);
        double t = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= opts.max_halvings; ++halving, t *= 0.5) {
            const Vector candidate = theta + t * step;
            try {
                const Vector cand_score = active_mean(model, data, candidate, rule);
                if (cand_score.allFinite() && cand_score.norm() < norm) {
                    theta = candidate;
                    score = cand_score;
                    norm = cand_score.norm();
                    accepted = true;
                    break;
                }
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Evaluation) {
                    throw;
                }
            }
        }
        if (!accepted) {
            // Floating-point floor: no step reduces the score any further.
            if (norm <= 1e-6 && step.norm() <= 1e-12 * (1.0 + theta.norm())) {
                return theta;
            }
            std::ostringstream msg;
            msg << "Newton line search failed at theta = " << theta.transpose()
                << " with score norm " << norm;
            fail(ErrorKind::Estimation, msg.str());
        }
    }
    if (norm <= opts.tol) {
        return theta;
    }
    std::ostringstream msg;
    msg << "preliminary Newton iteration did not converge; last theta = " << theta.transpose()
        << ", score norm " << norm;
    fail(ErrorKind::Convergence, msg.str());
}

Vector one_step_update(const ModelSpec& model, const DataMatrix& data, const Vector& theta_hat,
                       const CompositionRule& rule) {
    check_rule(model, rule);
    if (theta_hat.size() != model.p) {
        fail(ErrorKind::Config, "theta has the wrong length");
    }
    if (rule.empty()) {
        fail(ErrorKind::Estimation, "empty composition rule; use a smaller lambda");
    }
    const Vector score = active_mean(model, data, theta_hat, rule);
    const Matrix jac = mean_jacobian(model, data, theta_hat, rule);
    const auto lu = factor_or_fail(
        jac, "singular E-Step Hessian; a larger lambda gives fewer, better-conditioned terms");
    return theta_hat - lu.solve(score);
}

SandwichMatrices sandwich(const ModelSpec& model, const DataMatrix& data, const Vector& theta,
                          const CompositionRule& rule) {
    check_rule(model, rule);
    if (rule.empty()) {
        fail(ErrorKind::Estimation, "sandwich requires a nonempty composition rule");
    }
    SandwichMatrices out;
    out.theta = theta;
    out.rule = rule;
    out.sensitivity = -mean_jacobian(model, data, theta, rule);
    Matrix centered = active_combined(model, data, theta, rule);
    centered.colwise() -= centered.rowwise().mean();
    out.variability = centered * centered.transpose() / static_cast<double>(data.rows());
    out.variability = 0.5 * (out.variability + out.variability.transpose()).eval();
    Eigen::LLT<Matrix> llt(out.variability);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
        fail(ErrorKind::Singular,
             "score variability matrix is singular; a larger lambda keeps fewer scores");
    }
    out.godambe = out.sensitivity.transpose() * llt.solve(out.sensitivity);
    out.godambe = 0.5 * (out.godambe + out.godambe.transpose()).eval();
    return out;
}

Vector standard_errors(const SandwichMatrices& s, int n) {
    Eigen::PartialPivLU<Matrix> lu(s.godambe);
    if (!(lu.rcond() > 1e-14)) {
        return Vector::Constant(s.godambe.rows(), std::numeric_limits<double>::quiet_NaN());
    }
    const Matrix inv = lu.inverse();
    return (inv.diagonal() / static_cast<double>(n)).cwiseMax(0.0).cwiseSqrt();
}

void FitConfig::validate(int p) const {
    if (!(tau > 0.0 && tau <= 1.0)) {
        fail(ErrorKind::Config, "selection.tau must lie in (0,1]");
    }
    if (!(lambda_budget >= 0.0) || !std::isfinite(lambda_budget)) {
        fail(ErrorKind::Config, "selection.lambda_budget must be a finite nonnegative number");
    }
    if (refine_rounds < 0) {
        fail(ErrorKind::Config, "fit.refine_rounds must be nonnegative");
    }
    if (init.size() != 0 && init.size() != p) {
        fail(ErrorKind::Config, "fit.init must have length p");
    }
}

FitResult fit(const ModelSpec& model, const DataMatrix& data, const FitConfig& config,
              const GramSummary* tstep_gram) {
    model.validate();
    config.validate(model.p);
    if (tstep_gram && tstep_gram->m() != model.m) {
        fail(ErrorKind::Config, "supplied Gram does not match the number of scores");
    }
    const Vector alpha = model.alpha();
    const SelectionConfig selection{config.tau, config.lambda_budget};

    FitResult result;
    result.n_obs = data.rows();
    result.labels = model.labels;
    const Vector init = config.init.size() == 0 ? Vector::Zero(model.p) : config.init;
    result.preliminary_theta = in_stage("preliminary", [&] {
        return preliminary_estimate(model, data, init, config.init_rule);
    });

    auto gram_at = [&](const Vector& theta) {
        if (tstep_gram) {
            return *tstep_gram;
        }
        return in_stage("scores", [&] { return empirical_gram(eval_scores(model, theta, data)); });
    };

    GramSummary gram = gram_at(result.preliminary_theta);
    const PathResult path = in_stage("t-step", [&] {
        return solve_path(gram, alpha, PathStop{config.lambda_budget, 0});
    });
    result.warnings = path.warnings;
    const Selection sel = in_stage("selection", [&] { return select(path, gram, selection); });
    result.selected_lambda = sel.lambda;
    result.phi = sel.phi;
    result.budget_reached = sel.budget_reached;
    result.rule = path.rule_at(sel.rule_lambda);
    result.kkt = kkt_check(gram, result.rule, result.rule.lambda(), alpha);
    result.theta = in_stage("e-step", [&] {
        return one_step_update(model, data, result.preliminary_theta, result.rule);
    });

    for (int round = 0; round < config.refine_rounds; ++round) {
        if (!tstep_gram) {
            gram = gram_at(result.theta);
            result.rule = in_stage("refine t-step", [&] {
                if (sel.rule_lambda > 0.0) {
                    return solve_fixed_lambda(gram, sel.rule_lambda, alpha);
                }
                const PathResult again = solve_path(gram, alpha, PathStop{0.0, 0});
                return again.rule_at(again.lambda_end());
            });
            result.kkt = kkt_check(gram, result.rule, result.rule.lambda(), alpha);
        }
        if (result.rule.empty()) {
            break;
        }
        result.theta = in_stage("refine e-step", [&] {
            return one_step_update(model, data, result.theta, result.rule);
        });
        ++result.iterations;
    }

    result.sandwich =
        in_stage("sandwich", [&] { return sandwich(model, data, result.theta, result.rule); });
    result.std_errors = standard_errors(result.sandwich, data.rows());
    return result;
}

}  // namespace scle
