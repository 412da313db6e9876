#include <doctest.h>

#include <algorithm>

#include "scle/selection.hpp"
#include "support.hpp"

using namespace scle;
using testing_support::Gen;

namespace {

GramSummary diag123() {
    return GramSummary(Eigen::Vector3d(1.0, 0.5, 1.0 / 3.0).asDiagonal().toDenseMatrix(), 0, 1);
}

}  // namespace

TEST_CASE("phi: share of the score trace") {
    const GramSummary g = diag123();
    CHECK(phi(g, std::vector<int>{}, 1.0, 0.0) == 0.0);
    CHECK(phi(g, std::vector<int>{0, 1, 2}, 0.5, 0.0) == doctest::Approx(1.0));
    CHECK(phi(g, std::vector<int>{0}, 0.5, 0.0) == doctest::Approx(6.0 / 11.0));
    CHECK(phi(g, std::vector<int>{0, 1}, 0.5, 0.0) == doctest::Approx(9.0 / 11.0));
    CHECK(phi(g, std::vector<int>{0, 1, 2}, 0.5, 0.5) == 0.0);
    CHECK(phi(g, CompositionRule(Eigen::Vector3d(1.0, 0.0, 0.0), 0.5), 0.5, 0.0) ==
          doctest::Approx(6.0 / 11.0));
    try {
        phi(GramSummary(Matrix::Zero(3, 3), 0, 1), std::vector<int>{0}, 1.0, 0.0);
        FAIL("expected a degenerate-input error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Degenerate);
    }
}

TEST_CASE("select: separable Gram") {
    const GramSummary g = diag123();
    const PathResult path = solve_path(g, Vector::Ones(3));

    const Selection sel = select(path, g, {0.9, 0.0});
    CHECK(sel.lambda == doctest::Approx(1.0 / 3.0));
    CHECK(sel.phi == doctest::Approx(1.0));
    CHECK(sel.active_count == 3);
    CHECK(!sel.budget_reached);
    CHECK(select_lambda(path, g, {0.9, 0.0}) == sel.lambda);

    CHECK(select_lambda(path, g, {0.0, 0.0}) == doctest::Approx(1.0));
    CHECK(select_lambda(path, g, {0.5, 0.0}) == doctest::Approx(1.0));
    CHECK(select_lambda(path, g, {0.6, 0.0}) == doctest::Approx(0.5));

    const Selection budget = select(path, g, {0.9, 0.4});
    CHECK(budget.lambda == 0.4);
    CHECK(budget.budget_reached);
    CHECK(budget.rule_lambda == 0.4);
    CHECK(budget.phi == 0.0);
}

TEST_CASE("selection_trace lists phi per breakpoint") {
    const GramSummary g = diag123();
    const auto trace = selection_trace(solve_path(g, Vector::Ones(3)), g, {0.9, 0.0});
    REQUIRE(trace.size() == 4);
    CHECK(trace[0].phi == doctest::Approx(6.0 / 11.0));
    CHECK(trace[1].phi == doctest::Approx(9.0 / 11.0));
    CHECK(trace[2].phi == doctest::Approx(1.0));
    CHECK(trace[3].phi == 0.0);  // lambda = 0 is not above the budget
    CHECK(trace[2].active_count == 3);
}

TEST_CASE("selection properties on random Grams") {
    Gen gen(99);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = gen.integer(1, 9);
        const GramSummary g(gen.psd(m, m), 0, 1);
        const PathResult path = solve_path(g, Vector::Ones(m));
        const double tau = gen.uniform(0.05, 1.0);
        const double budget = gen.uniform(0.0, 0.6) * path.lambda_max;
        INFO("trial " << trial << ", tau " << tau << ", budget " << budget);
        const Selection sel = select(path, g, {tau, budget});
        CHECK(sel.lambda >= budget);

        // Appending breakpoints below the selection leaves it unchanged.
        PathResult extended = path;
        Breakpoint extra = extended.breakpoints.back();
        extra.lambda = extended.lambda_end() / 2.0;
        extra.segment_active.clear();
        if (extended.lambda_end() > 0.0 && extended.lambda_end() < sel.lambda) {
            extended.breakpoints.push_back(extra);
            CHECK(select(extended, g, {tau, budget}).lambda == sel.lambda);
        }

        // phi grows as lambda falls until the first leave event; lambda = 0
        // itself is never above the budget.
        const auto trace = selection_trace(path, g, {tau, 0.0});
        double prev = 0.0;
        bool left = false;
        for (std::size_t k = 0; k < trace.size(); ++k) {
            CHECK(trace[k].phi >= 0.0);
            CHECK(trace[k].phi <= 1.0);
            left = left || !path.breakpoints[k].event.left.empty();
            if (!left && trace[k].lambda > 0.0) {
                CHECK(trace[k].phi >= prev);
            }
            prev = trace[k].phi;
        }
        // The selection is the first breakpoint above tau.
        if (!sel.budget_reached) {
            for (const auto& pt : trace) {
                if (pt.lambda > sel.lambda) {
                    CHECK(pt.phi <= tau);
                }
            }
            CHECK(sel.phi > tau);
        }
    }
}

TEST_CASE("select: rule is taken at the lower end of the selected segment") {
    const GramSummary g = diag123();
    const PathResult path = solve_path(g, Vector::Ones(3));
    const Selection sel = select(path, g, {0.8, 0.0});
    CHECK(sel.lambda == doctest::Approx(0.5));
    CHECK(sel.rule_lambda == doctest::Approx(1.0 / 3.0));
    CHECK(path.rule_at(sel.rule_lambda).active().size() == 2);
}
