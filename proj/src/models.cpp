#include "scle/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "scle/random.hpp"

namespace scle {

namespace {

constexpr std::array<std::pair<CovarianceKind, std::string_view>, 8> kCovarianceNames{{
    {CovarianceKind::identity, "identity"},
    {CovarianceKind::diag_increasing, "diag_increasing"},
    {CovarianceKind::first10_uncorrelated_ar, "first10_uncorrelated_ar"},
    {CovarianceKind::block6, "block6"},
    {CovarianceKind::meta_sqrt_corr, "meta_sqrt_corr"},
    {CovarianceKind::exchangeable, "exchangeable"},
    {CovarianceKind::expdecay_sqrt, "expdecay_sqrt"},
    {CovarianceKind::expdecay_sq, "expdecay_sq"},
}};

constexpr std::array<std::pair<Family, std::string_view>, 3> kFamilyNames{{
    {Family::common_location, "common_location"},
    {Family::exchangeable_location, "exchangeable_location"},
    {Family::pairwise_expdecay, "pairwise_expdecay"},
}};

double default_rho(CovarianceKind kind) {
    switch (kind) {
        case CovarianceKind::first10_uncorrelated_ar: return 0.8;
        case CovarianceKind::block6: return 0.6;
        default: return 0.0;
    }
}

bool is_diagonal(const Matrix& a) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            if (i != j && a(i, j) != 0.0) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace

std::string_view to_string(CovarianceKind kind) {
    for (const auto& [k, name] : kCovarianceNames) {
        if (k == kind) {
            return name;
        }
    }
    return "unknown";
}

CovarianceKind parse_covariance_kind(std::string_view name) {
    for (const auto& [k, n] : kCovarianceNames) {
        if (n == name) {
            return k;
        }
    }
    fail(ErrorKind::Config, "unknown covariance kind '" + std::string(name) + "'");
}

bool is_expdecay(CovarianceKind kind) {
    return kind == CovarianceKind::expdecay_sqrt || kind == CovarianceKind::expdecay_sq;
}

std::string_view to_string(Family family) {
    for (const auto& [f, name] : kFamilyNames) {
        if (f == family) {
            return name;
        }
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    for (const auto& [f, n] : kFamilyNames) {
        if (n == name) {
            return f;
        }
    }
    fail(ErrorKind::Config, "unknown model family '" + std::string(name) + "'");
}

double expdecay_distance(CovarianceKind kind, int j, int k) {
    const double lag = std::abs(j - k);
    switch (kind) {
        case CovarianceKind::expdecay_sqrt: return std::sqrt(2.0 * lag);
        case CovarianceKind::expdecay_sq: return 2.0 * lag * lag;
        default: fail(ErrorKind::Model, "distance is only defined for expdecay kinds");
    }
}

Matrix build_covariance(const CovarianceSpec& spec) {
    const int d = spec.dim;
    if (d < 1) {
        fail(ErrorKind::Model, "covariance dimension must be positive");
    }
    const double rho = spec.rho.value_or(default_rho(spec.kind));
    Matrix cov = Matrix::Identity(d, d);
    switch (spec.kind) {
        case CovarianceKind::identity:
            break;
        case CovarianceKind::diag_increasing:
            for (int k = 0; k < d; ++k) {
                cov(k, k) = k + 1.0;
            }
            break;
        case CovarianceKind::first10_uncorrelated_ar:
            for (int j = 10; j < d; ++j) {
                for (int k = 10; k < d; ++k) {
                    cov(j, k) = std::pow(rho, std::abs(j - k));
                }
            }
            break;
        case CovarianceKind::block6:
            for (int j = 0; j < d; ++j) {
                for (int k = 0; k < d; ++k) {
                    if (j != k && j / 6 == k / 6) {
                        cov(j, k) = rho;
                    }
                }
            }
            break;
        case CovarianceKind::meta_sqrt_corr:
            for (int j = 0; j < d; ++j) {
                for (int k = 0; k < d; ++k) {
                    cov(j, k) = j == k ? j + 1.0 : rho * std::sqrt((j + 1.0) * (k + 1.0));
                }
            }
            break;
        case CovarianceKind::exchangeable:
            cov = (1.0 - rho) * Matrix::Identity(d, d) + rho * Matrix::Ones(d, d);
            break;
        case CovarianceKind::expdecay_sqrt:
        case CovarianceKind::expdecay_sq:
            if (!(spec.theta > 0.0)) {
                fail(ErrorKind::Model, "expdecay covariance requires theta > 0");
            }
            for (int j = 0; j < d; ++j) {
                for (int k = 0; k < d; ++k) {
                    if (j != k) {
                        cov(j, k) = std::exp(-spec.theta * expdecay_distance(spec.kind, j, k));
                    }
                }
            }
            break;
    }
    Eigen::LLT<Matrix> llt(cov);
    const double min_pivot =
        llt.info() == Eigen::Success ? Matrix(llt.matrixL()).diagonal().minCoeff() : 0.0;
    if (llt.info() != Eigen::Success || min_pivot * min_pivot < 1e-14 * cov.diagonal().maxCoeff()) {
        std::ostringstream msg;
        msg << "covariance '" << to_string(spec.kind) << "' (dim " << d << ", rho " << rho
            << ") is not positive definite";
        fail(ErrorKind::Model, msg.str());
    }
    return cov;
}

AnalyticModel AnalyticModel::make(Family family, CovarianceSpec cov, double theta) {
    AnalyticModel model;
    model.family = family;
    switch (family) {
        case Family::common_location:
            if (is_expdecay(cov.kind)) {
                fail(ErrorKind::Model, "common_location requires a fixed covariance kind");
            }
            break;
        case Family::exchangeable_location: {
            const double rho = cov.rho.value_or(0.0);
            if (cov.kind != CovarianceKind::exchangeable || !(rho > 0.0 && rho < 1.0)) {
                fail(ErrorKind::Model,
                     "exchangeable_location requires an exchangeable covariance with 0 < rho < 1");
            }
            break;
        }
        case Family::pairwise_expdecay:
            if (!is_expdecay(cov.kind)) {
                fail(ErrorKind::Model, "pairwise_expdecay requires an expdecay covariance kind");
            }
            if (cov.dim < 2) {
                fail(ErrorKind::Model, "pairwise_expdecay requires dim >= 2");
            }
            if (!(theta > 0.0)) {
                fail(ErrorKind::Model, "pairwise_expdecay requires theta > 0");
            }
            cov.theta = theta;
            break;
    }
    if (!std::isfinite(theta)) {
        fail(ErrorKind::Model, "true theta must be finite");
    }
    model.cov = cov;
    model.true_theta = Vector::Constant(1, theta);
    const Matrix sigma = build_covariance(cov);
    if (family != Family::pairwise_expdecay) {
        const Vector ones = Vector::Ones(cov.dim);
        model.fisher_trace = ones.dot(sigma.llt().solve(ones));
    }
    return model;
}

int AnalyticModel::m() const {
    return family == Family::pairwise_expdecay ? cov.dim * (cov.dim - 1) / 2 : cov.dim;
}

Matrix AnalyticModel::covariance() const { return build_covariance(cov); }

Vector AnalyticModel::mean() const {
    if (family == Family::pairwise_expdecay) {
        return Vector::Zero(cov.dim);
    }
    return Vector::Constant(cov.dim, true_theta[0]);
}

ModelSpec common_location_model(const Vector& sigma2) {
    if (sigma2.size() < 1 || !(sigma2.array() > 0.0).all()) {
        fail(ErrorKind::Model, "marginal variances must be positive");
    }
    const int d = static_cast<int>(sigma2.size());
    ModelSpec spec;
    spec.p = 1;
    spec.m = d;
    spec.data_dim = d;
    const Vector inv = sigma2.cwiseInverse();
    spec.score = [inv](const Vector& theta, std::span<const double> row, Eigen::Ref<Matrix> out) {
        for (Eigen::Index j = 0; j < inv.size(); ++j) {
            out(j, 0) = (row[j] - theta[0]) * inv[j];
        }
    };
    spec.deriv = [inv](const Vector&, std::span<const double>, Eigen::Ref<Matrix> out) {
        out.col(0) = -inv;
    };
    spec.score_subset = [inv](const Vector& theta, std::span<const double> row,
                              std::span<const int> idx, Eigen::Ref<Matrix> out) {
        for (std::size_t r = 0; r < idx.size(); ++r) {
            out(static_cast<Eigen::Index>(r), 0) = (row[idx[r]] - theta[0]) * inv[idx[r]];
        }
    };
    spec.deriv_subset = [inv](const Vector&, std::span<const double>, std::span<const int> idx,
                              Eigen::Ref<Matrix> out) {
        for (std::size_t r = 0; r < idx.size(); ++r) {
            out(static_cast<Eigen::Index>(r), 0) = -inv[idx[r]];
        }
    };
    for (int j = 0; j < d; ++j) {
        spec.labels.push_back("X" + std::to_string(j + 1));
    }
    return spec;
}

double pairwise_expdecay_score(double theta, double xj, double xk, double djk) {
    if (!(theta * djk > 0.0)) {
        fail(ErrorKind::Evaluation, "pairwise score requires theta * distance > 0");
    }
    const double s = std::exp(-theta * djk);
    const double a = 1.0 - s * s;
    const double q = xj * xj + xk * xk - 2.0 * xj * xk * s;
    const double g = s * q / (a * a) - (s + xj * xk) / a;
    return g * s * djk;
}

double pairwise_expdecay_score_derivative(double theta, double xj, double xk, double djk) {
    if (!(theta * djk > 0.0)) {
        fail(ErrorKind::Evaluation, "pairwise score requires theta * distance > 0");
    }
    const double s = std::exp(-theta * djk);
    const double a = 1.0 - s * s;
    const double q = xj * xj + xk * xk - 2.0 * xj * xk * s;
    const double g = s * q / (a * a) - (s + xj * xk) / a;
    const double dg = q / (a * a) - 2.0 * s * xj * xk / (a * a) + 4.0 * s * s * q / (a * a * a) -
                      1.0 / a - 2.0 * s * (s + xj * xk) / (a * a);
    return -djk * djk * s * (s * dg + g);
}

ModelSpec pairwise_expdecay_model(int dim, CovarianceKind kind) {
    if (dim < 2 || !is_expdecay(kind)) {
        fail(ErrorKind::Model, "pairwise model requires dim >= 2 and an expdecay kind");
    }
    struct Pair {
        int j, k;
        double distance;
    };
    std::vector<Pair> pairs;
    ModelSpec spec;
    for (int j = 0; j < dim; ++j) {
        for (int k = j + 1; k < dim; ++k) {
            pairs.push_back({j, k, expdecay_distance(kind, j, k)});
            spec.labels.push_back("X" + std::to_string(j + 1) + ":X" + std::to_string(k + 1));
        }
    }
    spec.p = 1;
    spec.m = static_cast<int>(pairs.size());
    spec.data_dim = dim;
    spec.score = [pairs](const Vector& theta, std::span<const double> row, Eigen::Ref<Matrix> out) {
        for (std::size_t r = 0; r < pairs.size(); ++r) {
            const auto& pr = pairs[r];
            out(static_cast<Eigen::Index>(r), 0) =
                pairwise_expdecay_score(theta[0], row[pr.j], row[pr.k], pr.distance);
        }
    };
    spec.deriv = [pairs](const Vector& theta, std::span<const double> row, Eigen::Ref<Matrix> out) {
        for (std::size_t r = 0; r < pairs.size(); ++r) {
            const auto& pr = pairs[r];
            out(static_cast<Eigen::Index>(r), 0) =
                pairwise_expdecay_score_derivative(theta[0], row[pr.j], row[pr.k], pr.distance);
        }
    };
    spec.score_subset = [pairs](const Vector& theta, std::span<const double> row,
                                std::span<const int> idx, Eigen::Ref<Matrix> out) {
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const auto& pr = pairs[idx[r]];
            out(static_cast<Eigen::Index>(r), 0) =
                pairwise_expdecay_score(theta[0], row[pr.j], row[pr.k], pr.distance);
        }
    };
    spec.deriv_subset = [pairs](const Vector& theta, std::span<const double> row,
                                std::span<const int> idx, Eigen::Ref<Matrix> out) {
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const auto& pr = pairs[idx[r]];
            out(static_cast<Eigen::Index>(r), 0) =
                pairwise_expdecay_score_derivative(theta[0], row[pr.j], row[pr.k], pr.distance);
        }
    };
    return spec;
}

ModelSpec make_model_spec(const AnalyticModel& model) {
    if (model.family == Family::pairwise_expdecay) {
        return pairwise_expdecay_model(model.cov.dim, model.cov.kind);
    }
    return common_location_model(model.covariance().diagonal());
}

GramSummary population_gram(const AnalyticModel& model) {
    if (model.family == Family::pairwise_expdecay) {
        return population_gram_mc(model, kDefaultGramDraws, kDefaultGramSeed).gram;
    }
    const Matrix sigma = model.covariance();
    const Vector inv = sigma.diagonal().cwiseInverse();
    Matrix gram = inv.asDiagonal() * sigma * inv.asDiagonal();
    return GramSummary(std::move(gram), 0, 1, model.true_theta, false);
}

MonteCarloGram population_gram_mc(const AnalyticModel& model, long long draws,
                                  std::uint64_t seed, int threads) {
    if (draws < 2) {
        fail(ErrorKind::Config, "Monte Carlo Gram needs at least two draws");
    }
    constexpr long long kChunk = 8192;
    const ModelSpec spec = make_model_spec(model);
    const Matrix lower = cholesky_lower(model.covariance());
    const Vector mean = model.mean();
    const int m = spec.m;
    const std::size_t chunks = static_cast<std::size_t>((draws + kChunk - 1) / kChunk);

    struct Partial {
        Matrix sum, sum_sq;
    };
    std::vector<Partial> partials(chunks);
    parallel_for(chunks, threads, [&](std::size_t c) {
        const long long count = std::min(kChunk, draws - static_cast<long long>(c) * kChunk);
        Rng rng(mix_seed(seed, c));
        RowMatrix sample(count, model.cov.dim);
        fill_mvn(mean, lower, rng, sample);
        Matrix scores(m, count);
        Matrix one(m, 1);
        for (long long i = 0; i < count; ++i) {
            spec.score(model.true_theta,
                       {sample.data() + i * sample.cols(), static_cast<std::size_t>(sample.cols())},
                       one);
            scores.col(i) = one.col(0);
        }
        const Matrix squared = scores.array().square().matrix();
        partials[c].sum = scores * scores.transpose();
        partials[c].sum_sq = squared * squared.transpose();
    });

    Matrix sum = Matrix::Zero(m, m);
    Matrix sum_sq = Matrix::Zero(m, m);
    for (const auto& part : partials) {
        sum += part.sum;
        sum_sq += part.sum_sq;
    }
    const double n = static_cast<double>(draws);
    Matrix gram = sum / n;
    Matrix var = (sum_sq / n - gram.cwiseProduct(gram)).cwiseMax(0.0);
    Matrix se = (var / n).cwiseSqrt();
    return {GramSummary(std::move(gram), 0, 1, model.true_theta, false), std::move(se), draws};
}

CompositionRule analytic_optimal_rule(const AnalyticModel& model, double lambda) {
    if (!(lambda >= 0.0)) {
        fail(ErrorKind::Config, "lambda must be nonnegative");
    }
    const int m = model.m();
    if (model.family == Family::exchangeable_location) {
        const double rho = model.cov.rho.value_or(0.0);
        const double w = lambda < 1.0 ? (1.0 - lambda) / (rho * (m - 1) + 1.0) : 0.0;
        return {Vector::Constant(m, w), lambda};
    }
    if (model.family == Family::common_location) {
        const Matrix sigma = model.covariance();
        if (!is_diagonal(sigma)) {
            fail(ErrorKind::Model,
                 "no closed-form rule for correlated common location; use the T-Step solver on "
                 "the population Gram");
        }
        Vector w(m);
        for (int j = 0; j < m; ++j) {
            const double s2 = sigma(j, j);
            w[j] = s2 < 1.0 / lambda ? 1.0 - s2 * lambda : 0.0;
        }
        return {std::move(w), lambda};
    }
    fail(ErrorKind::Model,
         "no closed-form rule for the pairwise family; use the T-Step solver on the population "
         "Gram");
}

double profile_location_mcle(const CompositionRule& rule, const DataMatrix& data,
                             const Vector& sigma2) {
    if (rule.m() != sigma2.size() || data.cols() != sigma2.size()) {
        fail(ErrorKind::Config, "rule, data and variances must share the dimension m");
    }
    const Vector means = data.column_means();
    double num = 0.0;
    double den = 0.0;
    for (int j : rule.active()) {
        num += rule.weights()[j] * means[j] / sigma2[j];
        den += rule.weights()[j] / sigma2[j];
    }
    if (den == 0.0) {
        fail(ErrorKind::Degenerate, "composition rule has zero total weight");
    }
    return num / den;
}

double exchangeable_tradeoff_ratio(int m, double rho) {
    if (m < 1) {
        fail(ErrorKind::Config, "tradeoff ratio requires m >= 1");
    }
    const double r2 = rho * rho;
    return r2 * m / (r2 * (m - 1) + 1.0);
}

double full_information(const AnalyticModel& model) {
    const Matrix sigma = model.covariance();
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
        fail(ErrorKind::Model, "singular covariance");
    }
    if (model.family != Family::pairwise_expdecay) {
        const Vector ones = Vector::Ones(sigma.rows());
        return ones.dot(llt.solve(ones));
    }
    const int d = model.cov.dim;
    Matrix dsigma = Matrix::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
            if (j != k) {
                dsigma(j, k) = -expdecay_distance(model.cov.kind, j, k) * sigma(j, k);
            }
        }
    }
    const Matrix a = llt.solve(dsigma);
    return 0.5 * (a * a).trace();
}

double asymptotic_relative_efficiency(const GramSummary& population, double full_info,
                                      const CompositionRule& rule) {
    if (rule.m() != population.m()) {
        fail(ErrorKind::Config, "rule length does not match the Gram dimension");
    }
    if (!(full_info > 0.0)) {
        fail(ErrorKind::Model, "full information must be positive");
    }
    const Vector& w = rule.weights();
    const double k = w.dot(population.diag_b());
    const double j = w.dot(population.gram() * w);
    if (j <= 0.0) {
        if (std::abs(k) > 1e-12 * std::max(1.0, population.diag_b().maxCoeff())) {
            fail(ErrorKind::Model, "internal error: zero variability with nonzero sensitivity");
        }
        return 0.0;
    }
    return k * k / j / full_info;
}

double asymptotic_relative_efficiency(const AnalyticModel& model, const CompositionRule& rule) {
    return asymptotic_relative_efficiency(population_gram(model), full_information(model), rule);
}

}  // namespace scle
