#include "scle/core.hpp"

#include <cmath>
#include <sstream>

namespace scle {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Config: return "configuration error";
        case ErrorKind::Input: return "input error";
        case ErrorKind::Evaluation: return "evaluation error";
        case ErrorKind::Model: return "model error";
        case ErrorKind::Singular: return "singularity error";
        case ErrorKind::Convergence: return "convergence error";
        case ErrorKind::Estimation: return "estimation error";
        case ErrorKind::Path: return "path error";
        case ErrorKind::Degenerate: return "degenerate input";
        case ErrorKind::Io: return "I/O error";
    }
    return "error";
}

void ModelSpec::validate() const {
    if (p < 1 || m < 1) {
        fail(ErrorKind::Config, "model requires p >= 1 and m >= 1");
    }
    if (!score) {
        fail(ErrorKind::Config, "model has no score function");
    }
    if (!labels.empty() && static_cast<int>(labels.size()) != m) {
        fail(ErrorKind::Config, "model labels must have length m");
    }
    if (penalty_weights.size() != 0) {
        if (penalty_weights.size() != m) {
            fail(ErrorKind::Config, "penalty weights must have length m");
        }
        if (!(penalty_weights.array() > 0.0).all() || !penalty_weights.allFinite()) {
            fail(ErrorKind::Config, "penalty weights must be positive and finite");
        }
    }
}

Vector ModelSpec::alpha() const {
    return penalty_weights.size() == 0 ? Vector::Ones(m) : penalty_weights;
}

DataMatrix::DataMatrix(RowMatrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
        fail(ErrorKind::Input, "data matrix must have at least one row and one column");
    }
    if (!values_.allFinite()) {
        for (Eigen::Index i = 0; i < values_.rows(); ++i) {
            for (Eigen::Index k = 0; k < values_.cols(); ++k) {
                if (!std::isfinite(values_(i, k))) {
                    std::ostringstream msg;
                    msg << "non-finite data value at row " << i << ", column " << k;
                    fail(ErrorKind::Input, msg.str());
                }
            }
        }
    }
}

Vector DataMatrix::column_means() const {
    return values_.colwise().mean().transpose();
}

ScoreBatch::ScoreBatch(int n, int m, int p, Vector theta)
    : n_(n), m_(m), p_(p), theta_(std::move(theta)),
      values_(static_cast<std::size_t>(n) * m * p, 0.0) {
    if (n < 1) {
        fail(ErrorKind::Input, "score batch must contain at least one observation");
    }
}

Matrix ScoreBatch::mean_scores() const {
    Matrix mean = Matrix::Zero(m_, p_);
    for (int i = 0; i < n_; ++i) {
        mean += observation(i);
    }
    return mean / static_cast<double>(n_);
}

GramSummary::GramSummary(Matrix gram, int n_obs, int p, Vector theta, bool check_psd)
    : n_obs_(n_obs), p_(p), theta_(std::move(theta)) {
    if (gram.rows() != gram.cols() || gram.rows() < 1) {
        fail(ErrorKind::Config, "Gram matrix must be square and non-empty");
    }
    if (!gram.allFinite()) {
        fail(ErrorKind::Input, "Gram matrix has non-finite entries");
    }
    gram_ = 0.5 * (gram + gram.transpose());
    diag_b_ = gram_.diagonal();
    if (check_psd) {
        const double scale = std::max(1.0, diag_b_.cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram_, Eigen::EigenvaluesOnly);
        if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < -1e-10 * scale) {
            fail(ErrorKind::Input, "Gram matrix is not positive semidefinite");
        }
    }
}

int GramSummary::support_bound() const {
    const int m_ = m();
    if (n_obs_ <= 0) {
        return m_;
    }
    const long long np = static_cast<long long>(n_obs_) * p_;
    return np < m_ ? static_cast<int>(np) : m_;
}

CompositionRule::CompositionRule(Vector weights, double lambda)
    : weights_(std::move(weights)), lambda_(lambda) {
    for (Eigen::Index j = 0; j < weights_.size(); ++j) {
        if (weights_[j] != 0.0) {
            active_.push_back(static_cast<int>(j));
            signs_.push_back(weights_[j] > 0.0 ? 1 : -1);
        }
    }
}

CompositionRule CompositionRule::unit(int m, int j) {
    Vector w = Vector::Zero(m);
    w[j] = 1.0;
    return {std::move(w), 0.0};
}

std::vector<std::pair<int, double>> CompositionRule::sparse() const {
    std::vector<std::pair<int, double>> out;
    out.reserve(active_.size());
    for (int j : active_) {
        out.emplace_back(j, weights_[j]);
    }
    return out;
}

namespace {

void check_inputs(const ModelSpec& model, const Vector& theta, const DataMatrix& data) {
    model.validate();
    if (theta.size() != model.p) {
        std::ostringstream msg;
        msg << "theta has length " << theta.size() << ", model expects p = " << model.p;
        fail(ErrorKind::Config, msg.str());
    }
    if (model.data_dim > 0 && data.cols() != model.data_dim) {
        std::ostringstream msg;
        msg << "data has " << data.cols() << " columns, model expects " << model.data_dim;
        fail(ErrorKind::Config, msg.str());
    }
}

[[noreturn]] void non_finite(const ModelSpec& model, int i, int j) {
    std::ostringstream msg;
    msg << "non-finite score at observation " << i << ", sub-likelihood " << j;
    if (!model.labels.empty()) {
        msg << " (" << model.labels[j] << ")";
    }
    fail(ErrorKind::Evaluation, msg.str());
}

}  // namespace

ScoreBatch eval_scores(const ModelSpec& model, const Vector& theta, const DataMatrix& data) {
    check_inputs(model, theta, data);
    ScoreBatch batch(data.rows(), model.m, model.p, theta);
    Matrix scratch(model.m, model.p);
    for (int i = 0; i < data.rows(); ++i) {
        scratch.setZero();
        model.score(theta, data.row(i), scratch);
        if (scratch.rows() != model.m || scratch.cols() != model.p) {
            fail(ErrorKind::Config, "score function changed output dimensions");
        }
        if (!scratch.allFinite()) {
            for (int j = 0; j < model.m; ++j) {
                if (!scratch.row(j).allFinite()) {
                    non_finite(model, i, j);
                }
            }
        }
        batch.observation(i) = scratch;
    }
    return batch;
}

ScoreBatch eval_scores_subset(const ModelSpec& model, const Vector& theta, const DataMatrix& data,
                              std::span<const int> indices) {
    check_inputs(model, theta, data);
    for (int j : indices) {
        if (j < 0 || j >= model.m) {
            fail(ErrorKind::Config, "sub-likelihood index out of range");
        }
    }
    const int k = static_cast<int>(indices.size());
    if (k == 0) {
        fail(ErrorKind::Config, "empty sub-likelihood selection");
    }
    ScoreBatch batch(data.rows(), k, model.p, theta);
    Matrix full(model.m, model.p);
    Matrix scratch(k, model.p);
    for (int i = 0; i < data.rows(); ++i) {
        if (model.score_subset) {
            scratch.setZero();
            model.score_subset(theta, data.row(i), indices, scratch);
        } else {
            full.setZero();
            model.score(theta, data.row(i), full);
            for (int r = 0; r < k; ++r) {
                scratch.row(r) = full.row(indices[r]);
            }
        }
        for (int r = 0; r < k; ++r) {
            if (!scratch.row(r).allFinite()) {
                non_finite(model, i, indices[r]);
            }
        }
        batch.observation(i) = scratch;
    }
    return batch;
}

GramSummary empirical_gram(const ScoreBatch& batch) {
    const auto all = batch.all();
    Matrix gram = Matrix::Zero(batch.m(), batch.m());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(all);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    gram /= static_cast<double>(batch.n());
    return GramSummary(std::move(gram), batch.n(), batch.p(), batch.theta(), false);
}

Vector cl_score_mean(const ScoreBatch& batch, const CompositionRule& rule) {
    if (rule.m() != batch.m()) {
        fail(ErrorKind::Config, "composition rule length does not match the number of scores");
    }
    Vector total = Vector::Zero(batch.p());
    for (int i = 0; i < batch.n(); ++i) {
        const auto u = batch.observation(i);
        for (int j : rule.active()) {
            total += rule.weights()[j] * u.row(j).transpose();
        }
    }
    return total / static_cast<double>(batch.n());
}

Matrix combined_scores(const ScoreBatch& batch, const CompositionRule& rule) {
    if (rule.m() != batch.m()) {
        fail(ErrorKind::Config, "composition rule length does not match the number of scores");
    }
    Matrix out = Matrix::Zero(batch.p(), batch.n());
    for (int i = 0; i < batch.n(); ++i) {
        const auto u = batch.observation(i);
        for (int j : rule.active()) {
            out.col(i) += rule.weights()[j] * u.row(j).transpose();
        }
    }
    return out;
}

}  // namespace scle
