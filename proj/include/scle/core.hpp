#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scle/error.hpp"

namespace scle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Writes the m x p matrix of partial scores u_j(theta; x) for one data row.
using ScoreFn = std::function<void(const Vector& theta, std::span<const double> row,
                                   Eigen::Ref<Matrix> out)>;

/// Writes the m stacked p x p derivative blocks (rows j*p .. j*p+p-1 hold
/// d u_j / d theta) for one data row. Output shape is (m*p) x p.
using DerivFn = std::function<void(const Vector& theta, std::span<const double> row,
                                   Eigen::Ref<Matrix> out)>;

/// Scores (or derivative blocks) restricted to `indices`: out has |indices|
/// rows of scores, or |indices|*p rows of derivative blocks.
using SubsetFn = std::function<void(const Vector& theta, std::span<const double> row,
                                    std::span<const int> indices, Eigen::Ref<Matrix> out)>;

/// A family of m unbiased partial scores in a p-dimensional parameter.
struct ModelSpec {
    int p = 1;
    int m = 1;
    int data_dim = 0;  // expected number of data columns; 0 disables the check
    ScoreFn score;
    DerivFn deriv;  // optional; central differences are used when empty
    SubsetFn score_subset;  // optional; lets E-Step work scale with |active|
    SubsetFn deriv_subset;  // optional
    std::vector<std::string> labels;
    Vector penalty_weights;  // alpha_j, defaults to all ones

    void validate() const;
    Vector alpha() const;
};

/// n x d table of i.i.d. observations, row-major so each observation is contiguous.
class DataMatrix {
public:
    DataMatrix() = default;
    explicit DataMatrix(RowMatrix values);

    int rows() const noexcept { return static_cast<int>(values_.rows()); }
    int cols() const noexcept { return static_cast<int>(values_.cols()); }
    std::span<const double> row(int i) const {
        return {values_.data() + static_cast<std::size_t>(i) * values_.cols(),
                static_cast<std::size_t>(values_.cols())};
    }
    const RowMatrix& values() const noexcept { return values_; }
    Vector column_means() const;

private:
    RowMatrix values_;
};

/// Per-observation partial scores. Storage is column-major m x (n*p): the
/// block of columns [i*p, i*p+p) is the m x p score matrix of observation i.
/// Memory use is n*m*p doubles.
class ScoreBatch {
public:
    ScoreBatch(int n, int m, int p, Vector theta);

    int n() const noexcept { return n_; }
    int m() const noexcept { return m_; }
    int p() const noexcept { return p_; }
    const Vector& theta() const noexcept { return theta_; }

    Eigen::Map<const Matrix> observation(int i) const {
        return {values_.data() + offset(i), m_, p_};
    }
    Eigen::Map<Matrix> observation(int i) { return {values_.data() + offset(i), m_, p_}; }
    Eigen::Map<const Matrix> all() const { return {values_.data(), m_, static_cast<Eigen::Index>(n_) * p_}; }

    /// (1/n) sum_i u_j(X_i) for every j, as an m x p matrix.
    Matrix mean_scores() const;

private:
    std::size_t offset(int i) const { return static_cast<std::size_t>(i) * m_ * p_; }

    int n_, m_, p_;
    Vector theta_;
    std::vector<double> values_;
};

/// Empirical (or population) m x m score Gram matrix and its diagonal.
class GramSummary {
public:
    /// Symmetrizes `gram` and validates numerical PSD-ness. n_obs = 0 marks a
    /// population Gram with no sample-size bound on the support.
    /// check_psd = false skips the factorization, for Grams built as sums of
    /// outer products.
    GramSummary(Matrix gram, int n_obs, int p, Vector theta = {}, bool check_psd = true);

    const Matrix& gram() const noexcept { return gram_; }
    const Vector& diag_b() const noexcept { return diag_b_; }
    int m() const noexcept { return static_cast<int>(gram_.rows()); }
    int n_obs() const noexcept { return n_obs_; }
    int p() const noexcept { return p_; }
    const Vector& theta() const noexcept { return theta_; }
    double trace() const { return diag_b_.sum(); }

    /// Theorem-style support bound min(n*p, m); m for population Grams.
    int support_bound() const;

private:
    Matrix gram_;
    Vector diag_b_;
    int n_obs_;
    int p_;
    Vector theta_;
};

/// A composition rule w with its support, signs and producing lambda.
class CompositionRule {
public:
    CompositionRule() = default;
    CompositionRule(Vector weights, double lambda);

    static CompositionRule uniform(int m) { return {Vector::Ones(m), 0.0}; }
    static CompositionRule unit(int m, int j);

    const Vector& weights() const noexcept { return weights_; }
    const std::vector<int>& active() const noexcept { return active_; }
    const std::vector<int>& signs() const noexcept { return signs_; }
    double lambda() const noexcept { return lambda_; }
    int m() const noexcept { return static_cast<int>(weights_.size()); }
    bool empty() const noexcept { return active_.empty(); }
    double l1_norm() const { return weights_.lpNorm<1>(); }
    std::vector<std::pair<int, double>> sparse() const;

private:
    Vector weights_;
    std::vector<int> active_;
    std::vector<int> signs_;
    double lambda_ = 0.0;
};

ScoreBatch eval_scores(const ModelSpec& model, const Vector& theta, const DataMatrix& data);

/// Scores of the listed sub-likelihoods only; the batch has m = |indices| and
/// row r corresponds to indices[r]. Uses score_subset when the model has one.
ScoreBatch eval_scores_subset(const ModelSpec& model, const Vector& theta, const DataMatrix& data,
                              std::span<const int> indices);

GramSummary empirical_gram(const ScoreBatch& batch);

/// E_Fn u(theta, w) = sum_j w_j (1/n) sum_i u_j(X_i). Touches active indices only.
Vector cl_score_mean(const ScoreBatch& batch, const CompositionRule& rule);

/// Combined score sum_j w_j u_j(theta; X_i) for each observation, as a p x n matrix.
Matrix combined_scores(const ScoreBatch& batch, const CompositionRule& rule);

}  // namespace scle
