#include "scle/scle.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <optional>

#include "scle/io.hpp"
#include "scle/runner.hpp"

struct scle_config {
    scle::Json doc;
};

struct scle_data {
    scle::DataMatrix data;
};

struct scle_model {
    scle::ModelSpec spec;
    std::optional<scle::AnalyticModel> analytic;
};

struct scle_gram {
    scle::GramSummary gram;
};

struct scle_path {
    scle::PathResult path;
};

struct scle_fit {
    scle::FitResult result;
};

namespace {

thread_local std::string last_error;

scle_status status_of(scle::ErrorKind kind) {
    return static_cast<scle_status>(static_cast<int>(kind));
}

template <class F>
scle_status guard(F&& body) {
    try {
        body();
        last_error.clear();
        return SCLE_OK;
    } catch (const scle::Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return SCLE_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return SCLE_ERR_INTERNAL;
    }
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void need(const void* p, const char* what) {
    if (p == nullptr) {
        scle::fail(scle::ErrorKind::Config, std::string(what) + " must not be NULL");
    }
}

}  // namespace

extern "C" {

const char* scle_last_error(void) { return last_error.c_str(); }

const char* scle_status_name(scle_status status) {
    if (status == SCLE_OK) {
        return "ok";
    }
    if (status == SCLE_ERR_INTERNAL) {
        return "internal error";
    }
    if (status >= SCLE_ERR_CONFIG && status <= SCLE_ERR_IO) {
        return scle::to_string(static_cast<scle::ErrorKind>(status));
    }
    return "unknown status";
}

int scle_status_is_numerical(scle_status status) {
    switch (status) {
        case SCLE_ERR_EVALUATION:
        case SCLE_ERR_SINGULAR:
        case SCLE_ERR_CONVERGENCE:
        case SCLE_ERR_ESTIMATION:
        case SCLE_ERR_PATH:
        case SCLE_ERR_DEGENERATE:
        case SCLE_ERR_INTERNAL:
            return 1;
        default:
            return 0;
    }
}

const char* scle_version(void) { return "1.0.0"; }

void scle_string_free(char* s) { std::free(s); }

scle_status scle_config_new(scle_config** out) {
    return guard([&] {
        need(out, "out");
        *out = new scle_config{scle::Json::object()};
    });
}

scle_status scle_config_from_file(const char* path, scle_config** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new scle_config{scle::load_config_file(path)};
    });
}

scle_status scle_config_from_string(const char* json, scle_config** out) {
    return guard([&] {
        need(json, "json");
        need(out, "out");
        *out = new scle_config{scle::parse_config_text(json)};
    });
}

scle_status scle_config_set(scle_config* cfg, const char* assignment) {
    return guard([&] {
        need(cfg, "cfg");
        need(assignment, "assignment");
        scle::apply_override(cfg->doc, assignment);
    });
}

scle_status scle_config_resolved(const scle_config* cfg, char** json_out) {
    return guard([&] {
        need(cfg, "cfg");
        need(json_out, "json_out");
        *json_out = copy_string(scle::dump_json(scle::resolve_config(cfg->doc)));
    });
}

scle_status scle_config_validate(const scle_config* cfg, const char* command, char** diagnostics,
                                 size_t* count) {
    return guard([&] {
        need(cfg, "cfg");
        const auto diags =
            scle::validate_config(scle::resolve_config(cfg->doc), command ? command : "");
        std::string text;
        for (const auto& d : diags) {
            text += d + "\n";
        }
        if (count) {
            *count = diags.size();
        }
        if (diagnostics) {
            *diagnostics = copy_string(text);
        }
    });
}

scle_status scle_run(const scle_config* cfg, const char* command, const char* out_dir,
                     const char* format, int threads, char** summary) {
    return guard([&] {
        need(cfg, "cfg");
        need(out_dir, "out_dir");
        scle::Json doc = scle::resolve_config(cfg->doc);
        if (format != nullptr) {
            doc["output"]["format"] = format;
        }
        const scle::RunConfig run = scle::build_run_config(doc, command ? command : "");
        const scle::RunOutcome outcome = scle::run_command(run, out_dir, threads < 1 ? 1 : threads);
        if (summary) {
            *summary = copy_string(outcome.summary);
        }
    });
}

void scle_config_free(scle_config* cfg) { delete cfg; }

scle_status scle_data_from_array(const double* values, size_t n, size_t d, scle_data** out) {
    return guard([&] {
        need(values, "values");
        need(out, "out");
        scle::RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
        std::copy(values, values + n * d, m.data());
        *out = new scle_data{scle::DataMatrix(std::move(m))};
    });
}

scle_status scle_data_from_csv(const char* path, scle_data** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new scle_data{scle::read_data_csv(path)};
    });
}

size_t scle_data_rows(const scle_data* data) { return data ? static_cast<size_t>(data->data.rows()) : 0; }
size_t scle_data_cols(const scle_data* data) { return data ? static_cast<size_t>(data->data.cols()) : 0; }
void scle_data_free(scle_data* data) { delete data; }

scle_status scle_model_builtin(const char* family, const char* covariance_kind, int dim,
                               double rho, double theta, scle_model** out) {
    return guard([&] {
        need(family, "family");
        need(covariance_kind, "covariance_kind");
        need(out, "out");
        scle::CovarianceSpec cov;
        cov.kind = scle::parse_covariance_kind(covariance_kind);
        cov.dim = dim;
        if (!std::isnan(rho)) {
            cov.rho = rho;
        }
        const auto model = scle::AnalyticModel::make(scle::parse_family(family), cov, theta);
        *out = new scle_model{scle::make_model_spec(model), model};
    });
}

scle_status scle_model_custom(int p, int m, int d, scle_score_fn score, scle_deriv_fn deriv,
                              void* user, scle_model** out) {
    return guard([&] {
        need(reinterpret_cast<const void*>(score), "score");
        need(out, "out");
        scle::ModelSpec spec;
        spec.p = p;
        spec.m = m;
        spec.data_dim = d;
        using RowOut = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        spec.score = [=](const scle::Vector& theta, std::span<const double> row,
                         Eigen::Ref<scle::Matrix> result) {
            RowOut buf(m, p);
            if (score(user, theta.data(), static_cast<size_t>(p), row.data(), row.size(),
                      buf.data()) != 0) {
                scle::fail(scle::ErrorKind::Evaluation, "score callback reported failure");
            }
            result = buf;
        };
        if (deriv != nullptr) {
            spec.deriv = [=](const scle::Vector& theta, std::span<const double> row,
                             Eigen::Ref<scle::Matrix> result) {
                RowOut buf(static_cast<Eigen::Index>(m) * p, p);
                if (deriv(user, theta.data(), static_cast<size_t>(p), row.data(), row.size(),
                          buf.data()) != 0) {
                    scle::fail(scle::ErrorKind::Evaluation, "derivative callback reported failure");
                }
                result = buf;
            };
        }
        spec.validate();
        *out = new scle_model{std::move(spec), std::nullopt};
    });
}

int scle_model_p(const scle_model* model) { return model ? model->spec.p : 0; }
int scle_model_m(const scle_model* model) { return model ? model->spec.m : 0; }

scle_status scle_model_covariance(const scle_model* model, double* out) {
    return guard([&] {
        need(model, "model");
        need(out, "out");
        if (!model->analytic) {
            scle::fail(scle::ErrorKind::Model, "covariance is only known for built-in models");
        }
        const scle::RowMatrix sigma = model->analytic->covariance();
        std::copy(sigma.data(), sigma.data() + sigma.size(), out);
    });
}

scle_status scle_model_sample(const scle_model* model, size_t n, uint64_t seed, scle_data** out) {
    return guard([&] {
        need(model, "model");
        need(out, "out");
        if (!model->analytic) {
            scle::fail(scle::ErrorKind::Model, "sampling is only available for built-in models");
        }
        *out = new scle_data{scle::sample_mvn(model->analytic->mean(),
                                              model->analytic->covariance(),
                                              static_cast<int>(n), seed)};
    });
}

void scle_model_free(scle_model* model) { delete model; }

scle_status scle_gram_from_array(const double* values, size_t m, int n_obs, int p,
                                 scle_gram** out) {
    return guard([&] {
        need(values, "values");
        need(out, "out");
        scle::RowMatrix g(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        std::copy(values, values + m * m, g.data());
        *out = new scle_gram{scle::GramSummary(scle::Matrix(g), n_obs, p)};
    });
}

scle_status scle_gram_empirical(const scle_model* model, const double* theta,
                                const scle_data* data, scle_gram** out) {
    return guard([&] {
        need(model, "model");
        need(theta, "theta");
        need(data, "data");
        need(out, "out");
        const scle::Vector t = Eigen::Map<const scle::Vector>(theta, model->spec.p);
        *out = new scle_gram{scle::empirical_gram(scle::eval_scores(model->spec, t, data->data))};
    });
}

scle_status scle_gram_population(const scle_model* model, scle_gram** out) {
    return guard([&] {
        need(model, "model");
        need(out, "out");
        if (!model->analytic) {
            scle::fail(scle::ErrorKind::Model, "population Gram requires a built-in model");
        }
        *out = new scle_gram{scle::population_gram(*model->analytic)};
    });
}

size_t scle_gram_dim(const scle_gram* gram) { return gram ? static_cast<size_t>(gram->gram.m()) : 0; }

scle_status scle_gram_values(const scle_gram* gram, double* out) {
    return guard([&] {
        need(gram, "gram");
        need(out, "out");
        const scle::RowMatrix g = gram->gram.gram();
        std::copy(g.data(), g.data() + g.size(), out);
    });
}

scle_status scle_gram_lambda_max(const scle_gram* gram, double* out) {
    return guard([&] {
        need(gram, "gram");
        need(out, "out");
        *out = scle::lambda_entry(gram->gram, scle::Vector::Ones(gram->gram.m()));
    });
}

void scle_gram_free(scle_gram* gram) { delete gram; }

scle_status scle_tstep_solve(const scle_gram* gram, double lambda, double* w_out) {
    return guard([&] {
        need(gram, "gram");
        need(w_out, "w_out");
        const auto rule =
            scle::solve_fixed_lambda(gram->gram, lambda, scle::Vector::Ones(gram->gram.m()));
        std::copy(rule.weights().data(), rule.weights().data() + rule.m(), w_out);
    });
}

scle_status scle_path_solve(const scle_gram* gram, double lambda_min, scle_path** out) {
    return guard([&] {
        need(gram, "gram");
        need(out, "out");
        *out = new scle_path{scle::solve_path(gram->gram, scle::Vector::Ones(gram->gram.m()),
                                              scle::PathStop{lambda_min, 0})};
    });
}

size_t scle_path_size(const scle_path* path) { return path ? path->path.breakpoints.size() : 0; }

scle_status scle_path_breakpoint(const scle_path* path, size_t k, double* lambda, double* w_out,
                                 size_t* active_count) {
    return guard([&] {
        need(path, "path");
        if (k >= path->path.breakpoints.size()) {
            scle::fail(scle::ErrorKind::Config, "breakpoint index out of range");
        }
        const auto& bp = path->path.breakpoints[k];
        if (lambda) {
            *lambda = bp.lambda;
        }
        if (w_out) {
            std::copy(bp.rule.weights().data(), bp.rule.weights().data() + bp.rule.m(), w_out);
        }
        if (active_count) {
            *active_count = bp.rule.active().size();
        }
    });
}

scle_status scle_path_select(const scle_path* path, const scle_gram* gram, double tau,
                             double lambda_budget, double* lambda, double* phi,
                             size_t* active_count) {
    return guard([&] {
        need(path, "path");
        need(gram, "gram");
        const auto sel = scle::select(path->path, gram->gram, {tau, lambda_budget});
        if (lambda) {
            *lambda = sel.lambda;
        }
        if (phi) {
            *phi = sel.phi;
        }
        if (active_count) {
            *active_count = static_cast<size_t>(sel.active_count);
        }
    });
}

scle_status scle_path_to_csv(const scle_path* path, char** csv) {
    return guard([&] {
        need(path, "path");
        need(csv, "csv");
        *csv = copy_string(scle::path_csv(path->path));
    });
}

void scle_path_free(scle_path* path) { delete path; }

scle_status scle_fit_run(const scle_model* model, const scle_data* data, double tau,
                         double lambda_budget, int refine_rounds, const double* init,
                         scle_fit** out) {
    return guard([&] {
        need(model, "model");
        need(data, "data");
        need(out, "out");
        scle::FitConfig cfg;
        cfg.tau = tau;
        cfg.lambda_budget = lambda_budget;
        cfg.refine_rounds = refine_rounds;
        if (init) {
            cfg.init = Eigen::Map<const scle::Vector>(init, model->spec.p);
        } else if (model->analytic) {
            cfg.init = model->analytic->true_theta;
        }
        *out = new scle_fit{scle::fit(model->spec, data->data, cfg)};
    });
}

scle_status scle_fit_estimate(const scle_fit* fit, double* theta, double* se) {
    return guard([&] {
        need(fit, "fit");
        const auto& r = fit->result;
        if (theta) {
            std::copy(r.theta.data(), r.theta.data() + r.theta.size(), theta);
        }
        if (se) {
            std::copy(r.std_errors.data(), r.std_errors.data() + r.std_errors.size(), se);
        }
    });
}

double scle_fit_lambda(const scle_fit* fit) { return fit ? fit->result.selected_lambda : NAN; }
double scle_fit_phi(const scle_fit* fit) { return fit ? fit->result.phi : NAN; }
size_t scle_fit_active_count(const scle_fit* fit) {
    return fit ? fit->result.rule.active().size() : 0;
}

scle_status scle_fit_weights(const scle_fit* fit, double* weights_out) {
    return guard([&] {
        need(fit, "fit");
        need(weights_out, "weights_out");
        const auto& w = fit->result.rule.weights();
        std::copy(w.data(), w.data() + w.size(), weights_out);
    });
}

scle_status scle_fit_to_json(const scle_fit* fit, char** json) {
    return guard([&] {
        need(fit, "fit");
        need(json, "json");
        *json = copy_string(scle::dump_json(scle::to_json(fit->result)));
    });
}

void scle_fit_free(scle_fit* fit) { delete fit; }

}  // extern "C"
