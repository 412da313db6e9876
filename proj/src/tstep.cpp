#include "scle/tstep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace scle {

namespace {

constexpr double kTieTolerance = 1e-12;
constexpr double kRcondFloor = 1e-12;

void validate_alpha(const GramSummary& gram, const Vector& alpha) {
    if (alpha.size() != gram.m()) {
        fail(ErrorKind::Config, "penalty weights must have length m");
    }
    if (!(alpha.array() > 0.0).all() || !alpha.allFinite()) {
        fail(ErrorKind::Config, "penalty weights must be positive and finite");
    }
}

double soft_threshold(double z, double t) {
    if (z > t) {
        return z - t;
    }
    if (z < -t) {
        return z + t;
    }
    return 0.0;
}

double kkt_scale(const GramSummary& gram) {
    return std::max(1.0, gram.diag_b().cwiseAbs().maxCoeff());
}

Matrix principal(const Matrix& g, const std::vector<int>& idx) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    Matrix sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index c = 0; c < k; ++c) {
            sub(a, c) = g(idx[a], idx[c]);
        }
    }
    return sub;
}

/// Exact active-set solution w_E = G_EE^{-1}(b_E - lambda alpha_E s_E), or
/// nothing when G_EE is not numerically PD.
std::optional<Vector> active_set_solution(const GramSummary& gram, const std::vector<int>& idx,
                                          const std::vector<int>& signs, double lambda,
                                          const Vector& alpha) {
    if (idx.empty()) {
        return Vector::Zero(gram.m());
    }
    Eigen::LLT<Matrix> llt(principal(gram.gram(), idx));
    if (llt.info() != Eigen::Success || llt.rcond() < kRcondFloor) {
        return std::nullopt;
    }
    const auto k = static_cast<Eigen::Index>(idx.size());
    Vector rhs(k);
    for (Eigen::Index a = 0; a < k; ++a) {
        rhs[a] = gram.diag_b()[idx[a]] - lambda * alpha[idx[a]] * signs[a];
    }
    const Vector sol = llt.solve(rhs);
    Vector w = Vector::Zero(gram.m());
    for (Eigen::Index a = 0; a < k; ++a) {
        w[idx[a]] = sol[a];
    }
    return w;
}

std::string join(const std::vector<int>& idx) {
    std::ostringstream out;
    for (std::size_t a = 0; a < idx.size(); ++a) {
        out << (a ? " " : "") << idx[a];
    }
    return out.str();
}

/// Per-segment linear solution on the active set: w_E(lambda) = base - lambda * dir.
struct Segment {
    std::vector<int> active;
    std::vector<int> signs;
    Vector base;  // G_EE^{-1} b_E
    Vector dir;   // G_EE^{-1} (alpha_E o s_E)
};

enum class FactorStatus { ok, jittered, unbounded };

FactorStatus factor_segment(const GramSummary& gram, const Vector& alpha, Segment& seg) {
    const auto k = static_cast<Eigen::Index>(seg.active.size());
    if (k == 0) {
        seg.base.resize(0);
        seg.dir.resize(0);
        return FactorStatus::ok;
    }
    const Matrix sub = principal(gram.gram(), seg.active);
    Vector b(k);
    Vector as(k);
    for (Eigen::Index a = 0; a < k; ++a) {
        b[a] = gram.diag_b()[seg.active[a]];
        as[a] = alpha[seg.active[a]] * seg.signs[a];
    }
    Eigen::LLT<Matrix> llt(sub);
    if (llt.info() == Eigen::Success && llt.rcond() >= kRcondFloor) {
        seg.base = llt.solve(b);
        seg.dir = llt.solve(as);
        return FactorStatus::ok;
    }
    const double jitter = 1e-10 * sub.trace() / static_cast<double>(k);
    Matrix ridge = sub;
    ridge.diagonal().array() += jitter;
    Eigen::LDLT<Matrix> ldlt(ridge);
    seg.base = ldlt.solve(b);
    seg.dir = ldlt.solve(as);
    // A singular system that is still consistent keeps the objective bounded;
    // otherwise the T-Step objective has no minimizer below this lambda.
    const double rb = (sub * seg.base - b).norm();
    const double rd = (sub * seg.dir - as).norm();
    if (!seg.base.allFinite() || !seg.dir.allFinite() || rb > 1e-6 * (b.norm() + 1e-300) ||
        rd > 1e-6 * (as.norm() + 1e-300)) {
        return FactorStatus::unbounded;
    }
    return FactorStatus::jittered;
}

CompositionRule segment_rule(const Segment& seg, int m, double lambda) {
    Vector w = Vector::Zero(m);
    for (std::size_t a = 0; a < seg.active.size(); ++a) {
        w[seg.active[a]] = seg.base[a] - lambda * seg.dir[a];
    }
    return {std::move(w), lambda};
}

/// Exact solve on the support of `rule` (and on that support with near-zero
/// weights dropped); returned only when it keeps the signs and passes KKT.
std::optional<CompositionRule> polish(const GramSummary& gram, const CompositionRule& rule,
                                      double lambda, const Vector& alpha, double tol) {
    const Vector& w = rule.weights();
    std::vector<std::vector<int>> supports{rule.active()};
    std::vector<int> trimmed;
    const double small = 1e-6 * std::max(1.0, w.cwiseAbs().maxCoeff());
    for (int j : rule.active()) {
        if (std::abs(w[j]) > small) {
            trimmed.push_back(j);
        }
    }
    if (trimmed.size() != rule.active().size()) {
        supports.push_back(trimmed);
    }
    for (const auto& support : supports) {
        std::vector<int> signs;
        for (int j : support) {
            signs.push_back(w[j] > 0.0 ? 1 : -1);
        }
        if (auto exact = active_set_solution(gram, support, signs, lambda, alpha)) {
            bool same_signs = true;
            for (std::size_t a = 0; a < support.size(); ++a) {
                same_signs = same_signs && (*exact)[support[a]] * signs[a] >= 0.0;
            }
            CompositionRule polished(*exact, lambda);
            if (same_signs && kkt_check(gram, polished, lambda, alpha).passes(tol)) {
                return polished;
            }
        }
    }
    return std::nullopt;
}

constexpr int kSubspaceEvery = 20;

[[noreturn]] void fail_unbounded(double lambda) {
    std::ostringstream msg;
    msg << "T-Step objective is unbounded below at lambda " << lambda
        << " (singular Gram with b outside its range); use a larger lambda";
    fail(ErrorKind::Singular, msg.str());
}

enum class FaceStep { moved, solved, unbounded };

/// One step on the orthant face of w (its support and signs). With a
/// nonsingular face Gram, moves toward the face minimizer and stops where a
/// weight reaches zero; the objective is convex along the segment, so it never
/// increases. With a singular face Gram, the face objective is linear along a
/// null direction v; moving along the descending sign of v until a weight
/// reaches zero also never increases it, and if no weight ever does, the ray
/// certifies that the objective is unbounded below.
FaceStep face_step(const GramSummary& gram, double lambda, const Vector& alpha, double tol,
                   Vector& w) {
    const CompositionRule current(w, lambda);
    if (current.empty()) {
        return FaceStep::moved;
    }
    const std::vector<int>& idx = current.active();
    const auto k = static_cast<Eigen::Index>(idx.size());
    Vector step = Vector::Zero(gram.m());
    double t = 1.0;
    if (const auto exact = active_set_solution(gram, idx, current.signs(), lambda, alpha)) {
        step = *exact - w;
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(principal(gram.gram(), idx));
        const Vector v = eig.eigenvectors().col(0);
        double slope = 0.0;  // derivative of the face objective along +v
        for (Eigen::Index a = 0; a < k; ++a) {
            const int j = idx[a];
            const double r = gram.diag_b()[j] - lambda * alpha[j] * current.signs()[a];
            slope -= v[a] * r;
        }
        const double dir = slope > 0.0 ? -1.0 : 1.0;
        for (Eigen::Index a = 0; a < k; ++a) {
            step[idx[a]] = dir * v[a];
        }
        t = std::numeric_limits<double>::infinity();
    }
    int hit = -1;
    for (int j : idx) {
        if (w[j] * step[j] < 0.0) {
            const double at = -w[j] / step[j];
            if (at < t) {
                t = at;
                hit = j;
            }
        }
    }
    if (!std::isfinite(t)) {
        return FaceStep::unbounded;
    }
    w += t * step;
    if (hit >= 0) {
        w[hit] = 0.0;
        return FaceStep::moved;
    }
    if (kkt_check(gram, CompositionRule(w, lambda), lambda, alpha).passes(tol)) {
        return FaceStep::solved;
    }
    return FaceStep::moved;
}

}  // namespace

std::string PathEvent::describe() const {
    std::ostringstream out;
    if (!entered.empty()) {
        out << "enter(" << join(entered) << ")";
    }
    if (!left.empty()) {
        out << (entered.empty() ? "" : ";") << "leave(" << join(left) << ")";
    }
    if (terminal) {
        out << (entered.empty() && left.empty() ? "" : ";") << "terminate";
    }
    return out.str();
}

double lambda_entry(const GramSummary& gram, const Vector& alpha) {
    validate_alpha(gram, alpha);
    return std::max(0.0, (gram.diag_b().array().abs() / alpha.array()).maxCoeff());
}

double tstep_objective(const GramSummary& gram, const Vector& w, double lambda,
                       const Vector& alpha) {
    return 0.5 * w.dot(gram.gram() * w) - gram.diag_b().dot(w) +
           lambda * alpha.dot(w.cwiseAbs());
}

KktReport kkt_check(const GramSummary& gram, const CompositionRule& rule, double lambda,
                    const Vector& alpha) {
    if (rule.m() != gram.m() || alpha.size() != gram.m()) {
        fail(ErrorKind::Config, "KKT check: inconsistent dimensions");
    }
    const Vector c = gram.diag_b() - gram.gram() * rule.weights();
    const double sign_slack = 1e-12 * kkt_scale(gram);
    KktReport report;
    for (int j = 0; j < gram.m(); ++j) {
        const double bound = lambda * alpha[j];
        const double w = rule.weights()[j];
        if (w != 0.0) {
            report.max_active_violation =
                std::max(report.max_active_violation, std::abs(std::abs(c[j]) - bound));
            // At lambda = 0 the conditions reduce to c = 0 and signs carry no information.
            if (lambda > 0.0 && c[j] * w < 0.0 && std::abs(c[j]) > sign_slack) {
                report.sign_consistent = false;
            }
        } else {
            report.max_inactive_violation =
                std::max(report.max_inactive_violation, std::abs(c[j]) - bound);
        }
    }
    return report;
}

CompositionRule solve_fixed_lambda(const GramSummary& gram, double lambda, const Vector& alpha,
                                   const TStepOptions& opts) {
    validate_alpha(gram, alpha);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        fail(ErrorKind::Config, "lambda must be a finite nonnegative number");
    }
    const int m = gram.m();
    const Matrix& g = gram.gram();
    const Vector& b = gram.diag_b();
    const double tol = opts.kkt_tol * kkt_scale(gram);

    if (lambda == 0.0) {
        if (gram.support_bound() < m) {
            fail(ErrorKind::Singular,
                 "lambda = 0 needs a nonsingular Gram, which fails when n*p < m; use lambda > 0");
        }
        Eigen::SelfAdjointEigenSolver<Matrix> eig(g, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (!(lo > 0.0) || hi / lo >= 1e12) {
            fail(ErrorKind::Singular,
                 "lambda = 0 needs a nonsingular Gram (condition number below 1e12); use "
                 "lambda > 0");
        }
        return {g.llt().solve(b), 0.0};
    }
    if (lambda >= lambda_entry(gram, alpha)) {
        return {Vector::Zero(m), lambda};
    }

    Vector w = Vector::Zero(m);
    Vector c = b;  // b - G w
    bool converged = false;
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (int j = 0; j < m; ++j) {
            const double gjj = g(j, j);
            if (gjj <= 0.0) {
                continue;
            }
            const double z = c[j] + gjj * w[j];
            const double updated = soft_threshold(z, lambda * alpha[j]) / gjj;
            const double delta = updated - w[j];
            if (delta != 0.0) {
                c.noalias() -= delta * g.col(j);
                w[j] = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (max_change < opts.change_tol * std::max(1.0, w.cwiseAbs().maxCoeff())) {
            converged = true;
            break;
        }
        if (sweep % kSubspaceEvery == kSubspaceEvery - 1) {
            switch (face_step(gram, lambda, alpha, tol, w)) {
                case FaceStep::solved:
                    return {w, lambda};
                case FaceStep::unbounded: {
                    fail_unbounded(lambda);
                }
                case FaceStep::moved:
                    break;
            }
            c = b - g * w;
        }
    }

    CompositionRule rule(w, lambda);
    if (!rule.empty()) {
        if (auto done = polish(gram, rule, lambda, alpha, tol)) {
            return *done;
        }
    }
    const KktReport report = kkt_check(gram, rule, lambda, alpha);
    if (!report.passes(tol)) {
        // A diverging iterate points along a null direction of G; it certifies
        // unboundedness when b'v exceeds the penalty lambda * sum alpha_j |v_j|.
        Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
        const double top = std::max(eig.eigenvalues().maxCoeff(), 0.0);
        Vector v = Vector::Zero(m);
        for (int k = 0; k < m && eig.eigenvalues()[k] <= 1e-10 * top; ++k) {
            v += eig.eigenvectors().col(k) * eig.eigenvectors().col(k).dot(w);
        }
        if (b.dot(v) > lambda * alpha.dot(v.cwiseAbs()) * (1.0 + 1e-9)) {
            fail_unbounded(lambda);
        }
        std::ostringstream msg;
        msg << "coordinate descent did not reach the KKT tolerance"
            << (converged ? "" : " within the sweep limit")
            << " (active violation " << report.max_active_violation << ", inactive violation "
            << report.max_inactive_violation << ", signs "
            << (report.sign_consistent ? "consistent" : "inconsistent") << ")";
        fail(ErrorKind::Convergence, msg.str());
    }
    return rule;
}

CompositionRule PathResult::rule_at(double lambda) const {
    if (breakpoints.empty()) {
        fail(ErrorKind::Config, "empty path");
    }
    const int m = breakpoints.front().rule.m();
    if (lambda >= breakpoints.front().lambda) {
        return {Vector::Zero(m), lambda};
    }
    if (lambda < breakpoints.back().lambda) {
        std::ostringstream msg;
        msg << "lambda " << lambda << " lies below the end of the path ("
            << breakpoints.back().lambda << ")";
        fail(ErrorKind::Config, msg.str());
    }
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
        const auto& hi = breakpoints[k];
        const auto& lo = breakpoints[k + 1];
        if (lambda <= hi.lambda && lambda >= lo.lambda) {
            if (lambda == lo.lambda) {
                return {lo.rule.weights(), lambda};
            }
            const double t = (lambda - lo.lambda) / (hi.lambda - lo.lambda);
            Vector w = lo.rule.weights() + t * (hi.rule.weights() - lo.rule.weights());
            return {std::move(w), lambda};
        }
    }
    return {breakpoints.back().rule.weights(), lambda};
}

PathResult solve_path(const GramSummary& gram, const Vector& alpha, const PathStop& stop) {
    validate_alpha(gram, alpha);
    if (!(stop.lambda_min >= 0.0)) {
        fail(ErrorKind::Config, "path lambda_min must be nonnegative");
    }
    const int m = gram.m();
    const Vector& b = gram.diag_b();
    const Matrix& g = gram.gram();

    PathResult result;
    result.lambda_max = lambda_entry(gram, alpha);
    const double lam_max = result.lambda_max;

    if (lam_max <= stop.lambda_min || lam_max == 0.0) {
        Breakpoint only;
        only.lambda = std::max(stop.lambda_min, lam_max);
        only.rule = CompositionRule(Vector::Zero(m), only.lambda);
        only.event.terminal = true;
        result.breakpoints.push_back(std::move(only));
        return result;
    }

    Segment seg;
    Breakpoint first;
    first.lambda = lam_max;
    first.rule = CompositionRule(Vector::Zero(m), lam_max);
    for (int j = 0; j < m; ++j) {
        if (std::abs(b[j]) / alpha[j] >= lam_max * (1.0 - kTieTolerance)) {
            first.event.entered.push_back(j);
            seg.active.push_back(j);
            seg.signs.push_back(b[j] >= 0.0 ? 1 : -1);
        }
    }

    const int support_bound = gram.support_bound();
    auto apply_factor = [&](double lam) -> bool {
        if (static_cast<int>(seg.active.size()) > support_bound) {
            result.warnings.push_back("active set would exceed min(n*p, m) at lambda " +
                                      std::to_string(lam) + "; path truncated");
            return false;
        }
        switch (factor_segment(gram, alpha, seg)) {
            case FactorStatus::ok:
                return true;
            case FactorStatus::jittered:
                result.warnings.push_back("near-singular active Gram at lambda " +
                                          std::to_string(lam) + "; solved with diagonal jitter");
                return true;
            case FactorStatus::unbounded:
                result.warnings.push_back("singular active Gram at lambda " + std::to_string(lam) +
                                          "; objective unbounded below, path truncated");
                return false;
        }
        return false;
    };

    if (stop.max_active > 0 && static_cast<int>(seg.active.size()) > stop.max_active) {
        first.event.terminal = true;
        result.truncated = true;
        result.breakpoints.push_back(std::move(first));
        return result;
    }
    if (!apply_factor(lam_max)) {
        first.event.terminal = true;
        result.truncated = true;
        result.breakpoints.push_back(std::move(first));
        return result;
    }
    first.segment_active = seg.active;
    result.breakpoints.push_back(first);

    double lam = lam_max;
    std::vector<int> just_entered = first.event.entered;
    std::vector<std::pair<int, int>> just_left;  // (index, sign it left with)
    int events = 1;
    const auto contains = [](const std::vector<int>& v, int j) {
        return std::find(v.begin(), v.end(), j) != v.end();
    };

    while (true) {
        std::vector<char> in_active(m, 0);
        for (int j : seg.active) {
            in_active[j] = 1;
        }
        // Next event: the largest lambda below the current one where an
        // inactive |c_j| reaches lambda*alpha_j or an active weight hits zero.
        const double ceiling = lam * (1.0 - kTieTolerance);
        struct Candidate {
            double lambda;
            int index;
            bool enter;
        };
        std::vector<Candidate> candidates;
        Vector gv = Vector::Zero(m);
        Vector gb = Vector::Zero(m);
        for (std::size_t a = 0; a < seg.active.size(); ++a) {
            gb += g.col(seg.active[a]) * seg.base[a];
            gv += g.col(seg.active[a]) * seg.dir[a];
        }
        for (int j = 0; j < m; ++j) {
            if (in_active[j]) {
                continue;
            }
            // An index that just left may only come back with the opposite sign.
            int left_sign = 0;
            for (const auto& [idx, sgn] : just_left) {
                if (idx == j) {
                    left_sign = sgn;
                }
            }
            const double c0 = b[j] - gb[j];  // c_j(lambda) = c0 + lambda * gv_j
            const double slope = gv[j];
            for (double sgn : {1.0, -1.0}) {
                if (sgn == left_sign) {
                    continue;
                }
                const double denom = sgn * alpha[j] - slope;
                if (denom == 0.0) {
                    continue;
                }
                const double at = c0 / denom;
                if (at > stop.lambda_min && at < ceiling) {
                    candidates.push_back({at, j, true});
                }
            }
        }
        for (std::size_t a = 0; a < seg.active.size(); ++a) {
            const int j = seg.active[a];
            if (contains(just_entered, j) || seg.dir[a] == 0.0) {
                continue;
            }
            const double at = seg.base[a] / seg.dir[a];
            if (at > stop.lambda_min && at < ceiling) {
                candidates.push_back({at, j, false});
            }
        }

        if (candidates.empty()) {
            Breakpoint last;
            last.lambda = stop.lambda_min;
            last.rule = segment_rule(seg, m, stop.lambda_min);
            last.event.terminal = true;
            result.breakpoints.push_back(std::move(last));
            break;
        }

        double next = 0.0;
        for (const auto& cand : candidates) {
            next = std::max(next, cand.lambda);
        }
        Breakpoint bp;
        bp.lambda = next;
        bp.rule = segment_rule(seg, m, next);
        std::vector<int> entering;
        std::vector<int> leaving;
        for (const auto& cand : candidates) {
            if (cand.lambda >= next * (1.0 - kTieTolerance) && cand.lambda <= next) {
                auto& list = cand.enter ? entering : leaving;
                if (!contains(list, cand.index)) {
                    list.push_back(cand.index);
                }
            }
        }
        std::sort(entering.begin(), entering.end());
        std::sort(leaving.begin(), leaving.end());

        // Leaving weights are exactly zero at the breakpoint.
        Vector w = bp.rule.weights();
        for (int j : leaving) {
            w[j] = 0.0;
        }
        bp.rule = CompositionRule(std::move(w), next);
        const Vector c = b - g * bp.rule.weights();

        Segment updated;
        std::vector<std::pair<int, int>> left_with;
        for (std::size_t a = 0; a < seg.active.size(); ++a) {
            if (!contains(leaving, seg.active[a])) {
                updated.active.push_back(seg.active[a]);
                updated.signs.push_back(seg.signs[a]);
            } else {
                left_with.emplace_back(seg.active[a], seg.signs[a]);
            }
        }
        for (int j : entering) {
            updated.active.push_back(j);
            updated.signs.push_back(c[j] >= 0.0 ? 1 : -1);
        }
        bp.event.entered = entering;
        bp.event.left = leaving;

        if (stop.max_active > 0 && static_cast<int>(updated.active.size()) > stop.max_active) {
            bp.event = PathEvent{};
            bp.event.terminal = true;
            result.truncated = true;
            result.breakpoints.push_back(std::move(bp));
            break;
        }
        seg = std::move(updated);
        if (!apply_factor(next)) {
            bp.event = PathEvent{};
            bp.event.terminal = true;
            result.truncated = true;
            result.breakpoints.push_back(std::move(bp));
            break;
        }
        bp.segment_active = seg.active;
        std::sort(bp.segment_active.begin(), bp.segment_active.end());
        result.breakpoints.push_back(std::move(bp));

        lam = next;
        just_entered = std::move(entering);
        just_left = std::move(left_with);
        if (++events > 10 * m) {
            fail(ErrorKind::Path, "homotopy exceeded 10*m events (cycling guard)");
        }
    }
    return result;
}

CompositionRule brute_force_oracle(const GramSummary& gram, double lambda, const Vector& alpha) {
    validate_alpha(gram, alpha);
    const int m = gram.m();
    if (m > 12) {
        fail(ErrorKind::Config, "brute-force oracle is limited to m <= 12");
    }
    if (!(lambda >= 0.0)) {
        fail(ErrorKind::Config, "lambda must be nonnegative");
    }
    const Matrix& g = gram.gram();
    const Vector& b = gram.diag_b();

    Vector best = Vector::Zero(m);
    double best_obj = 0.0;
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
        std::vector<int> idx;
        for (int j = 0; j < m; ++j) {
            if (mask & (1u << j)) {
                idx.push_back(j);
            }
        }
        const auto k = static_cast<Eigen::Index>(idx.size());
        Eigen::LLT<Matrix> llt(principal(g, idx));
        if (llt.info() != Eigen::Success || llt.rcond() < kRcondFloor) {
            continue;
        }
        Vector bk(k);
        Vector ak(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            bk[a] = b[idx[a]];
            ak[a] = alpha[idx[a]];
        }
        const Vector base = llt.solve(bk);
        const Matrix inv = llt.solve(Matrix::Identity(k, k));
        for (unsigned signs = 0; signs < (1u << k); ++signs) {
            Vector s(k);
            for (Eigen::Index a = 0; a < k; ++a) {
                s[a] = (signs & (1u << a)) ? -1.0 : 1.0;
            }
            const Vector wk = base - lambda * inv * ak.cwiseProduct(s);
            if (!(wk.cwiseProduct(s).array() > 0.0).all()) {
                continue;
            }
            Vector w = Vector::Zero(m);
            for (Eigen::Index a = 0; a < k; ++a) {
                w[idx[a]] = wk[a];
            }
            const double obj = tstep_objective(gram, w, lambda, alpha);
            if (obj < best_obj) {
                best_obj = obj;
                best = w;
            }
        }
    }
    return {std::move(best), lambda};
}

}  // namespace scle
