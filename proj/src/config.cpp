#include "scle/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace scle {

namespace {

bool known_command(std::string_view command) {
    return std::find(std::begin(kCommands), std::end(kCommands), command) != std::end(kCommands);
}

void merge_into(Json& base, const Json& user) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        auto found = base.find(it.key());
        if (found != base.end() && found->is_object() && it->is_object()) {
            merge_into(*found, *it);
        } else {
            base[it.key()] = *it;
        }
    }
}

void unknown_keys(const Json& doc, const Json& defaults, const std::string& prefix,
                  std::vector<std::string>& out) {
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        const auto def = defaults.find(it.key());
        if (def == defaults.end()) {
            out.push_back(path + ": unknown field");
        } else if (def->is_object() && it->is_object()) {
            unknown_keys(*it, *def, path, out);
        } else if (def->is_object()) {
            out.push_back(path + ": must be an object");
        }
    }
}

// Typed access with diagnostics keyed by dotted path.
class Reader {
public:
    Reader(const Json& doc, std::vector<std::string>& diags) : doc_(doc), diags_(diags) {}

    const Json* at(const std::string& path) const {
        const Json* node = &doc_;
        std::size_t start = 0;
        while (start <= path.size()) {
            const auto dot = path.find('.', start);
            const std::string key = path.substr(start, dot == std::string::npos ? path.npos : dot - start);
            if (!node->is_object()) {
                return nullptr;
            }
            const auto it = node->find(key);
            if (it == node->end()) {
                return nullptr;
            }
            node = &*it;
            if (dot == std::string::npos) {
                break;
            }
            start = dot + 1;
        }
        return node;
    }

    bool is_null(const std::string& path) const {
        const Json* v = at(path);
        return v == nullptr || v->is_null();
    }

    std::optional<double> number(const std::string& path) {
        const Json* v = at(path);
        if (v == nullptr || v->is_null()) {
            return std::nullopt;
        }
        if (!v->is_number()) {
            diags_.push_back(path + ": must be a number");
            return std::nullopt;
        }
        const double x = v->get<double>();
        if (!std::isfinite(x)) {
            diags_.push_back(path + ": must be finite");
            return std::nullopt;
        }
        return x;
    }

    std::optional<long long> integer(const std::string& path) {
        const Json* v = at(path);
        if (v == nullptr || v->is_null()) {
            return std::nullopt;
        }
        if (!v->is_number_integer()) {
            diags_.push_back(path + ": must be an integer");
            return std::nullopt;
        }
        return v->get<long long>();
    }

    std::optional<std::string> string(const std::string& path) {
        const Json* v = at(path);
        if (v == nullptr || v->is_null()) {
            return std::nullopt;
        }
        if (!v->is_string()) {
            diags_.push_back(path + ": must be a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    void error(const std::string& message) { diags_.push_back(message); }

private:
    const Json& doc_;
    std::vector<std::string>& diags_;
};

template <class T>
bool one_of(const std::optional<std::string>& value, std::initializer_list<T> options) {
    return value && std::find(options.begin(), options.end(), *value) != options.end();
}

void require_file(Reader& r, const std::string& field, const std::optional<std::string>& path) {
    if (!path || path->empty()) {
        r.error(field + ": required when the source is csv");
    } else if (!std::filesystem::is_regular_file(*path)) {
        r.error(field + ": file '" + *path + "' does not exist");
    }
}

// Full validation; fills `out` when `out` is non-null and no problems were found.
std::vector<std::string> check(const Json& doc, std::string_view command, RunConfig* out) {
    std::vector<std::string> diags;
    if (!doc.is_object()) {
        return {"config: top level must be an object"};
    }
    unknown_keys(doc, default_config(), "", diags);
    Reader r(doc, diags);
    RunConfig cfg;
    cfg.resolved = doc;

    std::string cmd(command);
    if (cmd.empty() || cmd == "validate") {
        cmd = r.string("command").value_or(cmd);
    }
    // Without a concrete command, every referenced file and section is checked.
    const bool any = cmd == "validate";
    if (!known_command(cmd)) {
        r.error("command: must be one of fit, path, are, simulate, covariance, validate");
    }
    cfg.command = cmd;

    if (const Json* seed = r.at("seed"); seed && !seed->is_null()) {
        if (seed->is_number_unsigned()) {
            cfg.seed = seed->get<std::uint64_t>();
        } else if (seed->is_number_integer() && seed->get<long long>() >= 0) {
            cfg.seed = static_cast<std::uint64_t>(seed->get<long long>());
        } else {
            r.error("seed: must be a nonnegative integer");
        }
    }

    // model
    bool model_ok = true;
    std::optional<Family> family;
    std::optional<CovarianceKind> kind;
    try {
        family = parse_family(r.string("model.family").value_or(""));
    } catch (const Error&) {
        r.error("model.family: must be one of common_location, exchangeable_location, "
                "pairwise_expdecay");
        model_ok = false;
    }
    try {
        kind = parse_covariance_kind(r.string("model.covariance.kind").value_or(""));
    } catch (const Error&) {
        r.error("model.covariance.kind: unknown covariance kind");
        model_ok = false;
    }
    CovarianceSpec cov;
    const auto dim = r.integer("model.covariance.dim");
    if (!dim || *dim < 1 || *dim > 5000) {
        r.error("model.covariance.dim: must be an integer in [1, 5000]");
        model_ok = false;
    } else {
        cov.dim = static_cast<int>(*dim);
    }
    if (!r.is_null("model.covariance.rho")) {
        const auto rho = r.number("model.covariance.rho");
        if (!rho) {
            model_ok = false;
        }
        cov.rho = rho;
    }
    const auto theta = r.number("model.theta");
    if (!theta) {
        if (r.is_null("model.theta")) {
            r.error("model.theta: required");
        }
        model_ok = false;
    }
    if (model_ok) {
        cov.kind = *kind;
        cov.theta = *theta;
        try {
            build_covariance(cov);
            cfg.model = AnalyticModel::make(*family, cov, *theta);
        } catch (const Error& e) {
            r.error(std::string("model.covariance: ") + e.what());
            model_ok = false;
        }
    }

    // data
    const auto data_source = r.string("data.source");
    if (!one_of(data_source, {"generate", "csv"})) {
        r.error("data.source: must be generate or csv");
    } else {
        cfg.data_source = *data_source;
    }
    const auto data_n = r.integer("data.n");
    if (!data_n || *data_n < 1 || *data_n > 100000000) {
        r.error("data.n: must be a positive integer");
    } else {
        cfg.data_n = static_cast<int>(*data_n);
    }
    const bool needs_data = any || cmd == "fit" ||
                            (cmd == "path" && r.string("gram.source").value_or("") == "empirical");
    if (needs_data && cfg.data_source == "csv") {
        const auto path = r.string("data.path");
        require_file(r, "data.path", path);
        cfg.data_path = path.value_or("");
    }
    if (needs_data && !any && cfg.data_source == "generate" && !cfg.seed) {
        r.error("seed: required to generate data");
    }

    // gram
    const auto gram_source = r.string("gram.source");
    if (!one_of(gram_source, {"empirical", "population", "csv"})) {
        r.error("gram.source: must be empirical, population or csv");
    } else {
        cfg.gram_source = *gram_source;
        if (cfg.gram_source == "csv" && (any || cmd == "path")) {
            const auto path = r.string("gram.path");
            require_file(r, "gram.path", path);
            cfg.gram_path = path.value_or("");
        }
        if (cfg.gram_source == "csv" && cmd == "fit") {
            r.error("gram.source: fit accepts empirical or population");
        }
    }
    const auto draws = r.integer("gram.draws");
    if (!draws || *draws < 2) {
        r.error("gram.draws: must be an integer >= 2");
    } else {
        cfg.gram_draws = *draws;
    }

    // selection
    const auto tau = r.number("selection.tau");
    if (!tau || !(*tau > 0.0 && *tau <= 1.0)) {
        r.error("selection.tau must lie in (0,1]");
    } else {
        cfg.selection.tau = *tau;
    }
    const auto budget = r.number("selection.lambda_budget");
    if (!budget || *budget < 0.0) {
        r.error("selection.lambda_budget: must be a nonnegative number");
    } else {
        cfg.selection.lambda_budget = *budget;
    }
    cfg.fit.tau = cfg.selection.tau;
    cfg.fit.lambda_budget = cfg.selection.lambda_budget;

    // fit
    const auto rounds = r.integer("fit.refine_rounds");
    if (!rounds || *rounds < 0 || *rounds > 100) {
        r.error("fit.refine_rounds: must be an integer in [0, 100]");
    } else {
        cfg.fit.refine_rounds = static_cast<int>(*rounds);
    }
    if (const Json* init = r.at("fit.init"); init && !init->is_null()) {
        if (init->is_number()) {
            cfg.fit.init = Vector::Constant(1, init->get<double>());
        } else if (init->is_array() && !init->empty() &&
                   std::all_of(init->begin(), init->end(), [](const Json& v) { return v.is_number(); })) {
            cfg.fit.init.resize(static_cast<Eigen::Index>(init->size()));
            for (std::size_t k = 0; k < init->size(); ++k) {
                cfg.fit.init[static_cast<Eigen::Index>(k)] = (*init)[k].get<double>();
            }
        } else {
            r.error("fit.init: must be a number or an array of numbers");
        }
        if (cfg.fit.init.size() != 0 && cfg.fit.init.size() != 1) {
            r.error("fit.init: built-in models have p = 1");
        }
    } else if (model_ok) {
        cfg.fit.init = cfg.model.true_theta;
    }
    const auto init_rule = r.string("fit.init_rule");
    const auto keep = r.number("fit.keep_prob");
    if (!keep || !(*keep > 0.0 && *keep <= 1.0)) {
        r.error("fit.keep_prob: must lie in (0,1]");
    }
    if (!one_of(init_rule, {"uniform", "stochastic"})) {
        r.error("fit.init_rule: must be uniform or stochastic");
    } else if (*init_rule == "stochastic") {
        if (!cfg.seed) {
            r.error("seed: required for the stochastic initial rule");
        }
        cfg.fit.init_rule = InitRule::stochastic(cfg.seed.value_or(0), keep.value_or(0.5));
    }

    // path
    const auto lambda_min = r.number("path.lambda_min");
    if (!lambda_min || *lambda_min < 0.0) {
        r.error("path.lambda_min: must be a nonnegative number");
    } else {
        cfg.path.lambda_min = *lambda_min;
    }
    const auto max_active = r.integer("path.max_active");
    if (!max_active || *max_active < 0) {
        r.error("path.max_active: must be a nonnegative integer");
    } else {
        cfg.path.max_active = static_cast<int>(*max_active);
    }

    // are
    const auto grid = r.integer("are.grid_points");
    if (!grid || *grid < 2 || *grid > 100000) {
        r.error("are.grid_points: must be an integer in [2, 100000]");
    } else {
        cfg.are_grid_points = static_cast<int>(*grid);
    }
    if (!r.is_null("are.lambda_max")) {
        const auto lmax = r.number("are.lambda_max");
        if (!lmax || !(*lmax > 0.0)) {
            r.error("are.lambda_max: must be a positive number");
        } else {
            cfg.are_lambda_max = lmax;
        }
    }

    // simulate
    const auto sim_n = r.integer("simulate.n");
    if (!sim_n || *sim_n < 2) {
        r.error("simulate.n: must be an integer >= 2");
    } else {
        cfg.sim_n = static_cast<int>(*sim_n);
    }
    const auto reps = r.integer("simulate.replications");
    if (!reps || *reps < 1) {
        r.error("simulate.replications: must be a positive integer");
    } else {
        cfg.sim_replications = static_cast<int>(*reps);
    }
    const Json* comps = r.at("simulate.comparators");
    if (!comps || !comps->is_array() || comps->empty()) {
        r.error("simulate.comparators: must be a nonempty array");
    } else {
        for (const auto& c : *comps) {
            try {
                cfg.comparators.push_back(parse_comparator(c.is_string() ? c.get<std::string>() : ""));
            } catch (const Error&) {
                r.error("simulate.comparators: entries must be mle, uniform_mcle or scle_path");
            }
        }
    }
    if (cmd == "simulate" && !cfg.seed) {
        r.error("seed: required for simulate");
    }

    const auto format = r.string("output.format");
    if (!one_of(format, {"csv", "json"})) {
        r.error("output.format: must be csv or json");
    } else {
        cfg.format = *format;
    }

    if (out != nullptr && diags.empty()) {
        *out = std::move(cfg);
    }
    return diags;
}

}  // namespace

Json default_config() {
    return Json::parse(R"({
  "command": null,
  "seed": null,
  "model": {
    "family": "common_location",
    "covariance": {"kind": "identity", "dim": 3, "rho": null},
    "theta": 0.0
  },
  "data": {"source": "generate", "path": null, "n": 100},
  "gram": {"source": "empirical", "path": null, "draws": 100000},
  "selection": {"tau": 0.9, "lambda_budget": 0.0},
  "fit": {"refine_rounds": 2, "init": null, "init_rule": "uniform", "keep_prob": 0.5},
  "path": {"lambda_min": 0.0, "max_active": 0},
  "are": {"grid_points": 51, "lambda_max": null},
  "simulate": {"n": 50, "replications": 1000, "comparators": ["mle", "uniform_mcle", "scle_path"]},
  "output": {"format": "csv"}
})");
}

Json parse_config_text(const std::string& text) {
    try {
        Json doc = Json::parse(text);
        if (!doc.is_object()) {
            fail(ErrorKind::Config, "config: top level must be an object");
        }
        return doc;
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::Config, std::string("config: ") + e.what());
    }
}

Json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::Io, "cannot open config '" + path + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

Json resolve_config(const Json& user) {
    Json out = default_config();
    merge_into(out, user);
    return out;
}

void apply_override(Json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        fail(ErrorKind::Config, "override '" + std::string(assignment) + "' must look like key=value");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    Json value;
    try {
        value = Json::parse(text);
    } catch (const Json::parse_error&) {
        value = text;
    }
    Json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? key.npos : dot - start);
        if (part.empty()) {
            fail(ErrorKind::Config, "override key '" + key + "' has an empty component");
        }
        if (!node->is_object()) {
            fail(ErrorKind::Config, "override key '" + key + "' descends into a non-object");
        }
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) {
            *node = Json::object();
        }
        start = dot + 1;
    }
}

std::vector<std::string> validate_config(const Json& resolved, std::string_view command) {
    return check(resolved, command, nullptr);
}

RunConfig build_run_config(const Json& resolved, std::string_view command) {
    RunConfig cfg;
    const auto diags = check(resolved, command, &cfg);
    if (!diags.empty()) {
        std::ostringstream msg;
        for (std::size_t k = 0; k < diags.size(); ++k) {
            msg << (k ? "; " : "") << diags[k];
        }
        fail(ErrorKind::Config, msg.str());
    }
    return cfg;
}

}  // namespace scle
