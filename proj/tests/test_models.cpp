#include <doctest.h>

#include "scle/models.hpp"
#include "scle/tstep.hpp"
#include "support.hpp"

using namespace scle;
using testing_support::Gen;

namespace {

AnalyticModel location(CovarianceKind kind, int dim, std::optional<double> rho = std::nullopt) {
    return AnalyticModel::make(Family::common_location, {kind, dim, rho, 0.0}, 0.0);
}

AnalyticModel exchangeable(int m, double rho) {
    return AnalyticModel::make(Family::exchangeable_location,
                               {CovarianceKind::exchangeable, m, rho, 0.0}, 0.0);
}

}  // namespace

TEST_CASE("build_covariance: named structures") {
    CHECK(build_covariance({CovarianceKind::identity, 3}).isIdentity(0.0));

    const Matrix diag = build_covariance({CovarianceKind::diag_increasing, 3});
    CHECK(diag.isApprox(Eigen::Vector3d(1, 2, 3).asDiagonal().toDenseMatrix(), 0.0));

    const Matrix blocks = build_covariance({CovarianceKind::block6, 12});
    for (int j = 0; j < 12; ++j) {
        for (int k = 0; k < 12; ++k) {
            const double expected = j == k ? 1.0 : (j / 6 == k / 6 ? 0.6 : 0.0);
            CHECK(blocks(j, k) == expected);
        }
    }

    const Matrix ar = build_covariance({CovarianceKind::first10_uncorrelated_ar, 14});
    CHECK(ar.topLeftCorner(10, 10).isIdentity(0.0));
    CHECK(ar.topRightCorner(10, 4).isZero(0.0));
    CHECK(ar(10, 12) == doctest::Approx(0.64));
    CHECK(ar(13, 10) == doctest::Approx(0.512));

    const Matrix meta = build_covariance({CovarianceKind::meta_sqrt_corr, 4, 0.5});
    CHECK(meta(2, 2) == 3.0);
    CHECK(meta(1, 3) == doctest::Approx(0.5 * std::sqrt(8.0)));

    CovarianceSpec sq{CovarianceKind::expdecay_sq, 4};
    sq.theta = 0.2;
    const Matrix e = build_covariance(sq);
    CHECK(e(0, 2) == doctest::Approx(std::exp(-0.2 * 2.0 * 4.0)));
    CovarianceSpec rt{CovarianceKind::expdecay_sqrt, 4};
    rt.theta = 0.5;
    CHECK(build_covariance(rt)(3, 0) == doctest::Approx(std::exp(-0.5 * std::sqrt(6.0))));
}

TEST_CASE("build_covariance: PD boundary of the exchangeable matrix") {
    CHECK_NOTHROW(build_covariance({CovarianceKind::exchangeable, 3, 0.999}));
    try {
        build_covariance({CovarianceKind::exchangeable, 3, 1.0});
        FAIL("expected a model error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Model);
    }
    CHECK_THROWS_AS(build_covariance({CovarianceKind::meta_sqrt_corr, 5, 1.2}), Error);
}

TEST_CASE("AnalyticModel: compatibility checks") {
    CHECK_THROWS_AS(AnalyticModel::make(Family::pairwise_expdecay, {CovarianceKind::identity, 3}, 0.5), Error);
    CHECK_THROWS_AS(AnalyticModel::make(Family::pairwise_expdecay, {CovarianceKind::expdecay_sq, 3}, 0.0), Error);
    CHECK_THROWS_AS(AnalyticModel::make(Family::exchangeable_location, {CovarianceKind::identity, 3}, 0.0), Error);
    const AnalyticModel pw = AnalyticModel::make(Family::pairwise_expdecay, {CovarianceKind::expdecay_sq, 5}, 0.3);
    CHECK(pw.m() == 10);
    CHECK(!pw.fisher_trace.has_value());
    CHECK(location(CovarianceKind::diag_increasing, 3).fisher_trace.value() ==
          doctest::Approx(1.0 + 0.5 + 1.0 / 3.0));
}

TEST_CASE("population_gram: location families in closed form") {
    const GramSummary g = population_gram(location(CovarianceKind::diag_increasing, 3));
    CHECK(g.gram().isApprox(Eigen::Vector3d(1, 0.5, 1.0 / 3).asDiagonal().toDenseMatrix(), 1e-15));

    const GramSummary ex = population_gram(exchangeable(3, 0.5));
    Matrix expected = Matrix::Constant(3, 3, 0.5);
    expected.diagonal().setOnes();
    CHECK((ex.gram() - expected).cwiseAbs().maxCoeff() == 0.0);

    const AnalyticModel meta = location(CovarianceKind::meta_sqrt_corr, 6, 0.4);
    const Matrix s = meta.covariance();
    const GramSummary gm = population_gram(meta);
    for (int j = 0; j < 6; ++j) {
        for (int k = 0; k < 6; ++k) {
            CHECK(gm.gram()(j, k) == doctest::Approx(s(j, k) / (s(j, j) * s(k, k))).epsilon(1e-15));
        }
    }
}

TEST_CASE("population_gram: exchangeable entries agree with a 1e6-draw Monte Carlo oracle") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    const double rho = 0.5;
    Matrix acc = Matrix::Zero(3, 3);
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) {
        // x = sqrt(rho) * common + sqrt(1 - rho) * own, so corr = rho
        const double c = z(rng);
        Eigen::Vector3d u;
        for (int k = 0; k < 3; ++k) {
            u[k] = std::sqrt(rho) * c + std::sqrt(1 - rho) * z(rng);
        }
        acc += u * u.transpose();
    }
    acc /= draws;
    const GramSummary g = population_gram(exchangeable(3, rho));
    CHECK((acc - g.gram()).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("population_gram: pairwise Monte Carlo estimate matches an independent oracle") {
    const AnalyticModel model =
        AnalyticModel::make(Family::pairwise_expdecay, {CovarianceKind::expdecay_sqrt, 3}, 0.5);
    const MonteCarloGram lib = population_gram_mc(model, kDefaultGramDraws, kDefaultGramSeed);

    // Oracle: own sampler (explicit Cholesky of the 3x3 matrix) and finite-difference scores.
    const Matrix sigma = model.covariance();
    const Matrix lower = sigma.llt().matrixL();
    std::mt19937 rng(77);
    std::normal_distribution<double> z;
    const int draws = 1000000;
    Matrix sum = Matrix::Zero(3, 3), sum_sq = Matrix::Zero(3, 3);
    const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (int i = 0; i < draws; ++i) {
        const Eigen::Vector3d e(z(rng), z(rng), z(rng));
        const Eigen::Vector3d x = lower * e;
        Eigen::Vector3d u;
        for (int p = 0; p < 3; ++p) {
            const int a = pairs[p][0], b = pairs[p][1];
            u[p] = testing_support::pairwise_score_fd(0.5, x[a], x[b], std::sqrt(2.0 * (b - a)), 1e-4);
        }
        const Matrix outer = u * u.transpose();
        sum += outer;
        sum_sq += outer.cwiseProduct(outer);
    }
    const Matrix mean = sum / draws;
    const Matrix se = ((sum_sq / draws - mean.cwiseProduct(mean)) / draws).cwiseSqrt();
    for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
            const double tol = 3.0 * std::hypot(se(j, k), lib.std_error(j, k));
            CHECK(std::abs(lib.gram.gram()(j, k) - mean(j, k)) <= tol);
        }
    }
}

TEST_CASE("population_gram_mc does not depend on the thread count") {
    const AnalyticModel model =
        AnalyticModel::make(Family::pairwise_expdecay, {CovarianceKind::expdecay_sq, 4}, 0.2);
    const auto a = population_gram_mc(model, 30000, 3, 1);
    const auto b = population_gram_mc(model, 30000, 3, 4);
    CHECK((a.gram.gram() - b.gram.gram()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("analytic_optimal_rule: closed-form examples") {
    const auto indep = location(CovarianceKind::diag_increasing, 3);
    const CompositionRule w = analytic_optimal_rule(indep, 0.4);
    CHECK(w.weights()[0] == doctest::Approx(0.6));
    CHECK(w.weights()[1] == doctest::Approx(0.2));
    CHECK(w.weights()[2] == 0.0);
    CHECK(analytic_optimal_rule(indep, 1.5).empty());

    const CompositionRule ex = analytic_optimal_rule(exchangeable(3, 0.5), 0.2);
    for (int j = 0; j < 3; ++j) {
        CHECK(ex.weights()[j] == doctest::Approx(0.4));
    }
    CHECK(analytic_optimal_rule(exchangeable(3, 0.5), 1.0).empty());

    try {
        analytic_optimal_rule(location(CovarianceKind::meta_sqrt_corr, 5, 0.5), 0.1);
        FAIL("expected a model error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Model);
        CHECK(std::string(e.what()).find("solver") != std::string::npos);
    }
}

TEST_CASE("analytic rules pass the T-Step KKT certificate on the population Gram") {
    for (int m : {3, 10, 25}) {
        for (double rho : {0.25, 0.5, 0.75}) {
            const auto model = exchangeable(m, rho);
            const GramSummary g = population_gram(model);
            for (double lambda = 0.0; lambda <= 1.2; lambda += 0.05) {
                const auto rule = analytic_optimal_rule(model, lambda);
                CHECK(kkt_check(g, rule, lambda, Vector::Ones(m)).passes(1e-10));
            }
        }
        const auto indep = location(CovarianceKind::diag_increasing, m);
        const GramSummary g = population_gram(indep);
        for (double lambda = 0.0; lambda <= 1.2; lambda += 0.05) {
            CHECK(kkt_check(g, analytic_optimal_rule(indep, lambda), lambda, Vector::Ones(m)).passes(1e-10));
        }
    }
}

TEST_CASE("profile_location_mcle: weighted marginal means") {
    RowMatrix x(2, 2);
    x << 0.1, 0.2, 0.5, 0.8;
    const DataMatrix data(x);
    const Vector s2 = Eigen::Vector2d(1.0, 2.0);
    CHECK(profile_location_mcle(CompositionRule::uniform(2), data, s2) ==
          doctest::Approx((0.3 + 0.25) / 1.5).epsilon(1e-15));
    CHECK(profile_location_mcle(CompositionRule::unit(2, 0), data, s2) == doctest::Approx(0.3));
    CHECK(profile_location_mcle(CompositionRule::uniform(2), data, Vector::Ones(2)) == doctest::Approx(0.4));
    try {
        profile_location_mcle(CompositionRule(Vector::Zero(2), 0.0), data, s2);
        FAIL("expected a degenerate-rule error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Degenerate);
    }
}

TEST_CASE("exchangeable_tradeoff_ratio: formula values and shape") {
    CHECK(exchangeable_tradeoff_ratio(1, 0.3) == doctest::Approx(0.09));
    CHECK(exchangeable_tradeoff_ratio(5, 0.75) == doctest::Approx(2.8125 / 3.25).epsilon(1e-14));
    CHECK(exchangeable_tradeoff_ratio(5, 0.75) == doctest::Approx(0.86538).epsilon(1e-5));
    CHECK(exchangeable_tradeoff_ratio(9, 0.75) == doctest::Approx(0.92045).epsilon(1e-5));
    CHECK(exchangeable_tradeoff_ratio(50, 0.75) == doctest::Approx(0.98468).epsilon(1e-5));
    CHECK(exchangeable_tradeoff_ratio(40, 1.0) == doctest::Approx(1.0));
    for (double rho : {0.1, 0.5, 0.9}) {
        double prev = 0.0;
        for (int m = 1; m < 200; ++m) {
            const double t = exchangeable_tradeoff_ratio(m, rho);
            CHECK(t > prev);
            CHECK(t <= 1.0);
            prev = t;
        }
    }
}

TEST_CASE("ARE: independence identity, dense oracle, and rescaling invariance") {
    const auto indep = location(CovarianceKind::diag_increasing, 12);
    CHECK(asymptotic_relative_efficiency(indep, CompositionRule::uniform(12)) ==
          doctest::Approx(1.0).epsilon(1e-12));

    const auto meta = location(CovarianceKind::meta_sqrt_corr, 20, 0.5);
    const Matrix s = meta.covariance();
    // Oracle: explicit sensitivity, variability and full information with a
    // different factorization.
    const Vector w = Vector::Ones(20);
    double k = 0.0, j = 0.0;
    for (int a = 0; a < 20; ++a) {
        k += w[a] / s(a, a);
        for (int b = 0; b < 20; ++b) {
            j += w[a] * w[b] * s(a, b) / (s(a, a) * s(b, b));
        }
    }
    const Vector ones = Vector::Ones(20);
    const double info = ones.dot(s.fullPivLu().solve(ones));
    const double oracle = k * k / j / info;
    CHECK(asymptotic_relative_efficiency(meta, CompositionRule::uniform(20)) ==
          doctest::Approx(oracle).epsilon(1e-12));

    Gen gen(3);
    for (int t = 0; t < 20; ++t) {
        Vector v(20);
        for (int a = 0; a < 20; ++a) {
            v[a] = gen.uniform(0.0, 1.0);
        }
        const double c = gen.uniform(-5.0, 5.0);
        const double base = asymptotic_relative_efficiency(meta, CompositionRule(v, 0.0));
        CHECK(asymptotic_relative_efficiency(meta, CompositionRule(c * v, 0.0)) ==
              doctest::Approx(base).epsilon(1e-12));
        CHECK(base <= 1.0 + 1e-10);
    }
}

TEST_CASE("ARE of the exchangeable family does not depend on lambda") {
    for (double rho : {0.25, 0.5, 0.75}) {
        const auto model = exchangeable(8, rho);
        const double ref = asymptotic_relative_efficiency(model, analytic_optimal_rule(model, 0.5));
        for (double lambda = 0.01; lambda < 1.0; lambda += 0.07) {
            CHECK(asymptotic_relative_efficiency(model, analytic_optimal_rule(model, lambda)) ==
                  doctest::Approx(ref).epsilon(1e-10));
        }
    }
}

TEST_CASE("pairwise score: finite-difference agreement on a grid") {
    for (double theta : {0.2, 0.4, 0.6}) {
        for (double d : {std::sqrt(2.0), 2.0, 8.0}) {
            for (int xj = -2; xj <= 2; ++xj) {
                for (int xk = -2; xk <= 2; ++xk) {
                    const double u = pairwise_expdecay_score(theta, xj, xk, d);
                    const double oracle = testing_support::pairwise_score_fd(theta, xj, xk, d);
                    CHECK(std::abs(u - oracle) <= 1e-6 * std::max(1.0, std::abs(oracle)));

                    const double h = 1e-5;
                    const double du = (pairwise_expdecay_score(theta + h, xj, xk, d) -
                                       pairwise_expdecay_score(theta - h, xj, xk, d)) / (2 * h);
                    const double a = pairwise_expdecay_score_derivative(theta, xj, xk, d);
                    CHECK(std::abs(a - du) <= 1e-5 * std::max(1.0, std::abs(du)));
                }
            }
        }
    }
}

TEST_CASE("pairwise score: unbiased at the truth and vanishing for large theta") {
    const double theta = 0.4, d = std::sqrt(2.0);
    const double r = std::exp(-theta * d);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z;
    const int draws = 1000000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double a = z(rng);
        const double b = r * a + std::sqrt(1 - r * r) * z(rng);
        const double u = pairwise_expdecay_score(theta, a, b, d);
        sum += u;
        sum_sq += u * u;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
    CHECK(std::abs(mean) <= 4.0 * se);

    CHECK(std::abs(pairwise_expdecay_score(60.0, 1.3, -0.7, 1.0)) < 1e-20);
    CHECK_THROWS_AS(pairwise_expdecay_score(0.0, 1.0, 1.0, 1.0), Error);
    CHECK_THROWS_AS(pairwise_expdecay_score(-0.1, 1.0, 1.0, 1.0), Error);
}

TEST_CASE("full information of the pairwise family matches a numeric second derivative") {
    const AnalyticModel model =
        AnalyticModel::make(Family::pairwise_expdecay, {CovarianceKind::expdecay_sq, 5}, 0.3);
    // I(theta) = 0.5 tr((S^-1 S')^2); oracle via finite differences of log|S|
    // and tr(S^-1 S0) at S0 = S(theta*): E[-l''] = 0.5 d2/dt2 [log|S| + tr(S^-1 S0)].
    auto f = [&](double t) {
        CovarianceSpec c = model.cov;
        c.theta = t;
        const Matrix s = build_covariance(c);
        Eigen::LLT<Matrix> llt(s);
        const double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
        return 0.5 * (logdet + llt.solve(model.covariance()).trace());
    };
    const double h = 1e-4;
    const double oracle = (f(0.3 + h) - 2 * f(0.3) + f(0.3 - h)) / (h * h);
    CHECK(full_information(model) == doctest::Approx(oracle).epsilon(1e-5));
}
