#include "scle/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>

#include "scle/io.hpp"
#include "scle/random.hpp"

namespace scle {

namespace {

std::string fmt(const char* format, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, x);
    return buf;
}

class Artifacts {
public:
    explicit Artifacts(std::string dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) {
            fail(ErrorKind::Io, "cannot create output directory '" + dir_ + "': " + ec.message());
        }
    }

    void write(const std::string& name, const std::string& text) {
        write_text_file((std::filesystem::path(dir_) / name).string(), text);
        names_.push_back(name);
    }

    const std::vector<std::string>& names() const { return names_; }

private:
    std::string dir_;
    std::vector<std::string> names_;
};

DataMatrix load_data(const RunConfig& cfg) {
    if (cfg.data_source == "csv") {
        DataMatrix data = read_data_csv(cfg.data_path);
        if (data.cols() != cfg.model.dim()) {
            fail(ErrorKind::Config, "data.path: " + std::to_string(data.cols()) +
                                        " columns, model.covariance.dim is " +
                                        std::to_string(cfg.model.dim()));
        }
        return data;
    }
    return sample_mvn(cfg.model.mean(), cfg.model.covariance(), cfg.data_n,
                      mix_seed(cfg.seed.value(), 0));
}

GramSummary population(const RunConfig& cfg, int threads) {
    if (cfg.model.family == Family::pairwise_expdecay) {
        return population_gram_mc(cfg.model, cfg.gram_draws, cfg.seed.value_or(kDefaultGramSeed),
                                  threads)
            .gram;
    }
    return population_gram(cfg.model);
}

std::string active_text(int count, int m) {
    return std::to_string(count) + "/" + std::to_string(m);
}

std::string run_fit(const RunConfig& cfg, Artifacts& out, int threads) {
    const DataMatrix data = load_data(cfg);
    const ModelSpec spec = make_model_spec(cfg.model);
    std::optional<GramSummary> pop;
    if (cfg.gram_source == "population") {
        pop = population(cfg, threads);
    }
    const FitResult res = fit(spec, data, cfg.fit, pop ? &*pop : nullptr);
    if (cfg.format == "json") {
        out.write("fit.json", dump_json(to_json(res)));
    } else {
        out.write("fit.csv", fit_summary_csv(res));
        out.write("rule.csv", rule_csv(res.rule, res.labels));
    }
    return "fit: theta=" + fmt("%.10g", res.theta[0]) + " se=" + fmt("%.4g", res.std_errors[0]) +
           " lambda=" + fmt("%.6g", res.selected_lambda) +
           " active=" + active_text(static_cast<int>(res.rule.active().size()), spec.m) +
           " phi=" + fmt("%.4f", res.phi);
}

std::string run_path(const RunConfig& cfg, Artifacts& out, int threads) {
    std::optional<GramSummary> gram;
    std::vector<std::string> labels;
    if (cfg.gram_source == "csv") {
        const RowMatrix g = read_csv_matrix(cfg.gram_path);
        gram.emplace(Matrix(g), 0, 1);
    } else if (cfg.gram_source == "population") {
        gram = population(cfg, threads);
        labels = make_model_spec(cfg.model).labels;
    } else {
        const DataMatrix data = load_data(cfg);
        const ModelSpec spec = make_model_spec(cfg.model);
        labels = spec.labels;
        const Vector init = cfg.fit.init.size() ? cfg.fit.init : cfg.model.true_theta;
        const Vector theta = preliminary_estimate(spec, data, init, cfg.fit.init_rule);
        gram = empirical_gram(eval_scores(spec, theta, data));
    }
    const PathResult path = solve_path(*gram, Vector::Ones(gram->m()), cfg.path);
    const Selection sel = select(path, *gram, cfg.selection);
    const auto trace = selection_trace(path, *gram, cfg.selection);
    if (cfg.format == "json") {
        Json doc = to_json(path);
        doc["selection"] = {{"lambda", sel.lambda},
                            {"rule_lambda", sel.rule_lambda},
                            {"phi", sel.phi},
                            {"active_count", sel.active_count},
                            {"budget_reached", sel.budget_reached}};
        out.write("path.json", dump_json(doc));
    } else {
        out.write("path.csv", path_csv(path, labels));
        out.write("selection.csv", selection_trace_csv(trace));
    }
    return "path: breakpoints=" + std::to_string(path.breakpoints.size()) +
           " lambda_max=" + fmt("%.6g", path.lambda_max) + " lambda=" + fmt("%.6g", sel.lambda) +
           " active=" + active_text(sel.active_count, gram->m()) + " phi=" + fmt("%.4f", sel.phi);
}

std::string run_are(const RunConfig& cfg, Artifacts& out, int threads) {
    const GramSummary pop = population(cfg, threads);
    const double lmax = cfg.are_lambda_max.value_or(lambda_entry(pop, Vector::Ones(pop.m())));
    const auto curve = are_curve(cfg.model, pop, linear_lambda_grid(lmax, cfg.are_grid_points));
    const PathResult path = solve_path(pop, Vector::Ones(pop.m()));
    const Selection sel = select(path, pop, cfg.selection);
    if (cfg.format == "json") {
        Json doc;
        doc["curve"] = to_json(curve);
        doc["selection"] = {{"lambda", sel.lambda},
                            {"phi", sel.phi},
                            {"active_count", sel.active_count}};
        out.write("are.json", dump_json(doc));
    } else {
        out.write("are.csv", are_csv(curve));
        out.write("selection.csv", selection_trace_csv(selection_trace(path, pop, cfg.selection)));
    }
    return "are: points=" + std::to_string(curve.size()) +
           " are(0)=" + fmt("%.6f", curve.back().are) + " lambda=" + fmt("%.6g", sel.lambda) +
           " active=" + active_text(sel.active_count, pop.m()) + " phi=" + fmt("%.4f", sel.phi);
}

std::string run_simulate(const RunConfig& cfg, Artifacts& out, int threads) {
    ExperimentConfig ec;
    ec.model = cfg.model;
    ec.n = cfg.sim_n;
    ec.replications = cfg.sim_replications;
    ec.seed = cfg.seed.value();
    ec.comparators = cfg.comparators;
    ec.tau = cfg.selection.tau;
    ec.lambda_budget = cfg.selection.lambda_budget;
    ec.threads = threads;
    const MseTrajectory traj = mse_experiment(ec);
    if (cfg.format == "json") {
        out.write("trajectory.json", dump_json(to_json(traj)));
    } else {
        out.write("trajectory.csv", trajectory_csv(traj));
    }
    if (!traj.valid()) {
        fail(ErrorKind::Estimation,
             std::to_string(traj.failures) + " of " + std::to_string(traj.replications) +
                 " replications failed (limit 1%); first: " +
                 (traj.failure_messages.empty() ? "" : traj.failure_messages.front()));
    }
    const TrajectoryPoint* best_mle = nullptr;
    const TrajectoryPoint* best_unif = nullptr;
    for (const auto& pt : traj.points) {
        if (!best_mle || pt.ratio_mle > best_mle->ratio_mle) {
            best_mle = &pt;
        }
        if (!best_unif || pt.ratio_unif > best_unif->ratio_unif) {
            best_unif = &pt;
        }
    }
    std::string line = "simulate: reps=" + std::to_string(traj.replications) +
                       " failures=" + std::to_string(traj.failures) +
                       " selected_active=" + fmt("%.2f", traj.selected_count_mean);
    if (best_mle && ec.wants(Comparator::mle)) {
        line += " max_mle_ratio=" + fmt("%.4f", best_mle->ratio_mle) + "@" +
                std::to_string(best_mle->active_count);
    }
    if (best_unif) {
        line += " max_unif_ratio=" + fmt("%.4f", best_unif->ratio_unif) + "@" +
                std::to_string(best_unif->active_count);
    }
    return line;
}

std::string run_covariance(const RunConfig& cfg, Artifacts& out) {
    const Matrix sigma = cfg.model.covariance();
    if (cfg.format == "json") {
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < sigma.rows(); ++r) {
            Json row = Json::array();
            for (Eigen::Index c = 0; c < sigma.cols(); ++c) {
                row.push_back(sigma(r, c));
            }
            rows.push_back(std::move(row));
        }
        out.write("covariance.json", dump_json(rows));
    } else {
        out.write("covariance.csv", matrix_csv(sigma));
    }
    return "covariance: kind=" + std::string(to_string(cfg.model.cov.kind)) +
           " dim=" + std::to_string(sigma.rows());
}

}  // namespace

RunOutcome run_command(const RunConfig& cfg, const std::string& out_dir, int threads) {
    const auto start = std::chrono::steady_clock::now();
    Artifacts out(out_dir);
    std::string line;
    if (cfg.command == "fit") {
        line = run_fit(cfg, out, threads);
    } else if (cfg.command == "path") {
        line = run_path(cfg, out, threads);
    } else if (cfg.command == "are") {
        line = run_are(cfg, out, threads);
    } else if (cfg.command == "simulate") {
        line = run_simulate(cfg, out, threads);
    } else if (cfg.command == "covariance") {
        line = run_covariance(cfg, out);
    } else {
        fail(ErrorKind::Config, "command '" + cfg.command + "' does not produce artifacts");
    }
    Json manifest;
    manifest["command"] = cfg.command;
    Json resolved = cfg.resolved;
    resolved["command"] = cfg.command;
    manifest["config"] = std::move(resolved);
    manifest["artifacts"] = out.names();
    out.write("manifest.json", dump_json(manifest));
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {line + " time=" + fmt("%.3f", secs) + "s", out.names()};
}

}  // namespace scle
