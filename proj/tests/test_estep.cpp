#include <doctest.h>

#include <chrono>
#include <cmath>

#include "scle/estep.hpp"
#include "scle/models.hpp"
#include "scle/simulate.hpp"
#include "support.hpp"

using namespace scle;
using testing_support::Gen;

namespace {

DataMatrix normal_data(Gen& gen, int n, const Vector& mean, const Vector& sd) {
    RowMatrix x(n, mean.size());
    for (int i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < mean.size(); ++j) {
            x(i, j) = mean[j] + sd[j] * gen.normal();
        }
    }
    return DataMatrix(std::move(x));
}

Vector sigma2_linear(int m) {
    return Vector::LinSpaced(m, 1.0, m);
}

double weighted_mean_oracle(const DataMatrix& data, const Vector& w, const Vector& sigma2) {
    double num = 0.0;
    double den = 0.0;
    for (int j = 0; j < data.cols(); ++j) {
        double xbar = 0.0;
        for (int i = 0; i < data.rows(); ++i) {
            xbar += data.values()(i, j);
        }
        xbar /= data.rows();
        num += w[j] * xbar / sigma2[j];
        den += w[j] / sigma2[j];
    }
    return num / den;
}

template <class F>
double min_seconds(int repeats, F&& body) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

}  // namespace

TEST_CASE("InitRule materialization") {
    CHECK(InitRule::uniform().materialize(4).weights() == Vector::Ones(4));
    CHECK(InitRule::fixed(Eigen::Vector3d(0, 2, 0)).materialize(3).active() == std::vector<int>{1});
    CHECK_THROWS_AS(InitRule::fixed(Eigen::Vector2d(1, 1)).materialize(3), Error);
    CHECK_THROWS_AS(InitRule::fixed(Vector::Zero(3)).materialize(3), Error);
    const CompositionRule a = InitRule::stochastic(7, 0.5).materialize(50);
    const CompositionRule b = InitRule::stochastic(7, 0.5).materialize(50);
    CHECK(a.weights() == b.weights());
    CHECK(a.active().size() > 10);
    CHECK(a.active().size() < 40);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CHECK(InitRule::stochastic(seed, 1e-12).materialize(6).active().size() == 1);
    }
}

TEST_CASE("preliminary_estimate: location closed forms") {
    Gen gen(3);
    const int m = 6;
    const Vector sigma2 = sigma2_linear(m);
    const ModelSpec model = common_location_model(sigma2);
    const DataMatrix data = normal_data(gen, 40, Vector::Constant(m, 1.5), sigma2.cwiseSqrt());

    const Vector theta = preliminary_estimate(model, data, Vector::Constant(1, -3.0));
    CHECK(theta[0] == doctest::Approx(weighted_mean_oracle(data, Vector::Ones(m), sigma2)).epsilon(1e-13));

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const InitRule single = InitRule::stochastic(seed, 1e-12);
        const int j = single.materialize(m).active().front();
        const Vector root = preliminary_estimate(model, data, Vector::Zero(1), single);
        CHECK(root[0] == doctest::Approx(data.column_means()[j]).epsilon(1e-13));
    }
}

TEST_CASE("preliminary_estimate: exchangeable sanity at n = 10^4") {
    const AnalyticModel am = AnalyticModel::make(Family::exchangeable_location,
                                                 {CovarianceKind::exchangeable, 8, 0.5, 0.0}, 2.0);
    const DataMatrix data = sample_mvn(am.mean(), am.covariance(), 10000, 11);
    const Vector theta = preliminary_estimate(make_model_spec(am), data, Vector::Zero(1));
    // Uniform MCLE = grand mean, variance (1 + (m - 1) rho) / m per observation.
    const double sd = std::sqrt((1.0 + 7.0 * 0.5) / 8.0);
    CHECK(std::abs(theta[0] - 2.0) <= 5.0 * sd / std::sqrt(10000.0));
}

TEST_CASE("preliminary_estimate: failures") {
    const ModelSpec model = common_location_model(Vector::Ones(3));
    const DataMatrix data(RowMatrix::Ones(5, 3));
    CHECK_THROWS_AS(preliminary_estimate(model, data, Vector::Constant(1, NAN)), Error);

    ModelSpec flat = model;  // score independent of theta: singular Jacobian
    flat.score = [](const Vector&, std::span<const double> row, Eigen::Ref<Matrix> out) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            out(static_cast<Eigen::Index>(j), 0) = row[j] + 1.0;
        }
    };
    flat.deriv = nullptr;
    flat.score_subset = nullptr;
    flat.deriv_subset = nullptr;
    try {
        preliminary_estimate(flat, data, Vector::Zero(1));
        FAIL("expected an estimation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Estimation);
    }
}

TEST_CASE("one_step_update: fixed point and affine exactness") {
    Gen gen(21);
    for (int trial = 0; trial < 50; ++trial) {
        const int m = gen.integer(1, 12);
        const Vector sigma2 = Vector::LinSpaced(m, 0.5, 0.5 + m);
        const ModelSpec model = common_location_model(sigma2);
        const DataMatrix data = normal_data(gen, gen.integer(2, 60), Vector::Zero(m), sigma2.cwiseSqrt());
        Vector w(m);
        for (int j = 0; j < m; ++j) {
            w[j] = gen.uniform(0.0, 1.0) < 0.3 ? 0.0 : gen.uniform(0.1, 2.0);
        }
        if (w.isZero()) {
            w[0] = 1.0;
        }
        const CompositionRule rule(w, 0.1);
        const double profile = profile_location_mcle(rule, data, sigma2);
        CHECK(profile == doctest::Approx(weighted_mean_oracle(data, w, sigma2)).epsilon(1e-12));
        const Vector start = Vector::Constant(1, gen.uniform(-50.0, 50.0));
        const Vector one = one_step_update(model, data, start, rule);
        CHECK(std::abs(one[0] - profile) <= 1e-12 * std::max(1.0, std::abs(start[0])));
        const Vector again = one_step_update(model, data, one, rule);
        CHECK(std::abs(again[0] - one[0]) <= 1e-12);
    }
}

TEST_CASE("one_step_update: failures") {
    const ModelSpec model = common_location_model(Vector::Ones(3));
    const DataMatrix data(RowMatrix::Ones(5, 3));
    try {
        one_step_update(model, data, Vector::Zero(1), CompositionRule(Vector::Zero(3), 1.0));
        FAIL("expected an estimation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Estimation);
    }
    // Weights summing to zero cancel the Hessian.
    try {
        one_step_update(model, data, Vector::Zero(1), CompositionRule(Eigen::Vector3d(1, -1, 0), 1.0));
        FAIL("expected an estimation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Estimation);
        CHECK(std::string(e.what()).find("larger lambda") != std::string::npos);
    }
}

TEST_CASE("mean_jacobian: analytic derivative matches central differences") {
    const AnalyticModel am = AnalyticModel::make(Family::pairwise_expdecay,
                                                 {CovarianceKind::expdecay_sq, 5, {}, 0.2}, 0.2);
    const DataMatrix data = sample_mvn(am.mean(), am.covariance(), 300, 5);
    ModelSpec analytic = make_model_spec(am);
    ModelSpec numeric = analytic;
    numeric.deriv = nullptr;
    numeric.deriv_subset = nullptr;
    Gen gen(8);
    for (int trial = 0; trial < 10; ++trial) {
        Vector w(analytic.m);
        for (int j = 0; j < analytic.m; ++j) {
            w[j] = gen.uniform(0.0, 1.0) < 0.5 ? 0.0 : gen.uniform(0.2, 1.5);
        }
        w[trial % analytic.m] = 1.0;
        const CompositionRule rule(w, 0.0);
        const Vector theta = Vector::Constant(1, gen.uniform(0.1, 0.5));
        const Matrix a = mean_jacobian(analytic, data, theta, rule);
        const Matrix n = mean_jacobian(numeric, data, theta, rule);
        CHECK(std::abs(a(0, 0) - n(0, 0)) <= 1e-6 * std::max(1.0, std::abs(a(0, 0))));
    }
}

TEST_CASE("sandwich: independence identity and singleton rule") {
    Gen gen(13);
    const int m = 5;
    const Vector sigma2 = sigma2_linear(m);
    const ModelSpec model = common_location_model(sigma2);
    const DataMatrix data = normal_data(gen, 20000, Vector::Zero(m), sigma2.cwiseSqrt());
    const double info = sigma2.cwiseInverse().sum();

    const SandwichMatrices s = sandwich(model, data, Vector::Zero(1), CompositionRule::uniform(m));
    CHECK(s.sensitivity(0, 0) == doctest::Approx(info).epsilon(1e-12));
    CHECK(s.variability(0, 0) == doctest::Approx(info).epsilon(0.05));
    CHECK(s.godambe(0, 0) == doctest::Approx(info).epsilon(0.05));

    for (int j = 0; j < m; ++j) {
        const SandwichMatrices one = sandwich(model, data, Vector::Zero(1), CompositionRule::unit(m, j));
        // Single location score: K = 1/s2, J = var(x_j)/s2^2, so K^2/J = 1/var(x_j).
        double mean = 0.0;
        for (int i = 0; i < data.rows(); ++i) {
            mean += data.values()(i, j);
        }
        mean /= data.rows();
        double var = 0.0;
        for (int i = 0; i < data.rows(); ++i) {
            var += (data.values()(i, j) - mean) * (data.values()(i, j) - mean);
        }
        var /= data.rows();
        CHECK(one.godambe(0, 0) == doctest::Approx(1.0 / var).epsilon(1e-10));
        const Vector se = standard_errors(one, data.rows());
        CHECK(se[0] == doctest::Approx(std::sqrt(var / data.rows())).epsilon(1e-10));
    }
}

TEST_CASE("sandwich: Godambe information is invariant to rescaling the rule") {
    const AnalyticModel am = AnalyticModel::make(Family::pairwise_expdecay,
                                                 {CovarianceKind::expdecay_sqrt, 6, {}, 0.3}, 0.3);
    const ModelSpec model = make_model_spec(am);
    const DataMatrix data = sample_mvn(am.mean(), am.covariance(), 400, 9);
    Gen gen(14);
    for (int trial = 0; trial < 20; ++trial) {
        Vector w(model.m);
        for (int j = 0; j < model.m; ++j) {
            w[j] = gen.uniform(0.0, 1.0) < 0.4 ? 0.0 : gen.uniform(0.1, 2.0);
        }
        w[0] = 1.0;
        const double c = gen.uniform(0.01, 100.0);
        const Vector theta = Vector::Constant(1, 0.3);
        const SandwichMatrices a = sandwich(model, data, theta, CompositionRule(w, 0.0));
        const SandwichMatrices b = sandwich(model, data, theta, CompositionRule(c * w, 0.0));
        CHECK(std::abs(a.godambe(0, 0) - b.godambe(0, 0)) <= 1e-10 * a.godambe(0, 0));
        CHECK(b.sensitivity(0, 0) == doctest::Approx(c * a.sensitivity(0, 0)).epsilon(1e-12));
        CHECK(b.variability(0, 0) == doctest::Approx(c * c * a.variability(0, 0)).epsilon(1e-12));
    }
}

TEST_CASE("sandwich: singular variability") {
    const ModelSpec model = common_location_model(Vector::Ones(3));
    const DataMatrix constant(RowMatrix::Constant(10, 3, 2.0));
    try {
        sandwich(model, constant, Vector::Zero(1), CompositionRule::uniform(3));
        FAIL("expected a singular-variability error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Singular);
        CHECK(std::string(e.what()).find("larger lambda") != std::string::npos);
    }
    CHECK_THROWS_AS(sandwich(model, constant, Vector::Zero(1), CompositionRule(Vector::Zero(3), 1.0)), Error);
}

TEST_CASE("sandwich: cost follows the active set, not m") {
    Gen gen(15);
    const int n = 4000;
    auto run = [&](int m) {
        const ModelSpec model = common_location_model(Vector::Ones(m));
        const DataMatrix data = normal_data(gen, n, Vector::Zero(m), Vector::Ones(m));
        Vector w = Vector::Zero(m);
        w.head(5).setOnes();
        const CompositionRule rule(w, 0.5);
        return min_seconds(7, [&] { sandwich(model, data, Vector::Zero(1), rule); });
    };
    const double small = run(200);
    const double large = run(400);
    INFO("m = 200: " << small << " s, m = 400: " << large << " s");
    CHECK(large <= 1.5 * small + 2e-4);
}

TEST_CASE("fit: exchangeable location with the population Gram gives the grand mean") {
    for (double rho : {0.2, 0.5, 0.8}) {
        const AnalyticModel am = AnalyticModel::make(
            Family::exchangeable_location, {CovarianceKind::exchangeable, 6, rho, 0.0}, 1.0);
        const DataMatrix data = sample_mvn(am.mean(), am.covariance(), 80, 17);
        const GramSummary pop = population_gram(am);
        for (double tau : {0.5, 0.9, 1.0}) {
            FitConfig cfg;
            cfg.tau = tau;
            const FitResult res = fit(make_model_spec(am), data, cfg, &pop);
            REQUIRE(!res.rule.empty());
            CHECK(std::abs(res.theta[0] - data.values().mean()) <= 1e-10);
        }
    }
}

TEST_CASE("fit: determinism, refinement and diagnostics") {
    const AnalyticModel am = AnalyticModel::make(Family::common_location,
                                                 {CovarianceKind::diag_increasing, 12, {}, 0.0}, 0.0);
    const ModelSpec model = make_model_spec(am);
    const DataMatrix data = sample_mvn(am.mean(), am.covariance(), 50, 23);
    FitConfig cfg;
    const FitResult a = fit(model, data, cfg);
    const FitResult b = fit(model, data, cfg);
    CHECK(a.theta == b.theta);
    CHECK(a.std_errors == b.std_errors);
    CHECK(a.rule.weights() == b.rule.weights());
    CHECK(a.selected_lambda == b.selected_lambda);
    CHECK(a.iterations == 2);
    CHECK(a.kkt.passes(1e-8));
    CHECK(!a.rule.empty());
    CHECK(static_cast<int>(a.rule.active().size()) < model.m);
    CHECK(a.phi > cfg.tau);
    CHECK(std::isfinite(a.std_errors[0]));
    CHECK(a.std_errors[0] > 0.0);

    FitConfig none = cfg;
    none.refine_rounds = 0;
    const FitResult c = fit(model, data, none);
    CHECK(c.iterations == 0);
    CHECK(c.kkt.passes(1e-8));
    MESSAGE("refine 0 vs 2: " << c.theta[0] << " vs " << a.theta[0]);
}

TEST_CASE("fit: errors carry stage labels") {
    const ModelSpec model = common_location_model(Vector::Ones(3));
    const DataMatrix constant(RowMatrix::Constant(10, 3, 2.0));
    try {
        fit(model, constant, FitConfig{});
        FAIL("expected a failure");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).rfind("selection: ", 0) == 0);
        CHECK(e.kind() == ErrorKind::Degenerate);
    }
    RowMatrix single(1, 3);
    single << 1.0, 2.0, 4.0;
    try {
        fit(model, DataMatrix(single), FitConfig{});
        FAIL("expected a failure");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).rfind("sandwich: ", 0) == 0);
        CHECK(e.kind() == ErrorKind::Singular);
    }
    FitConfig bad;
    bad.tau = 0.0;
    CHECK_THROWS_AS(fit(model, constant, bad), Error);

    ModelSpec broken = model;
    broken.score = [](const Vector&, std::span<const double>, Eigen::Ref<Matrix> out) {
        out.setConstant(NAN);
    };
    broken.score_subset = nullptr;
    try {
        fit(broken, constant, FitConfig{});
        FAIL("expected an evaluation failure");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).rfind("preliminary: ", 0) == 0);
        CHECK(e.kind() == ErrorKind::Evaluation);
    }
}
