#pragma once

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scle/estep.hpp"
#include "scle/models.hpp"
#include "scle/simulate.hpp"

namespace scle {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kCommands[] = {"fit",      "path",       "are",
                                                 "simulate", "covariance", "validate"};

/// Every recognised key with its default value. A null default accepts any
/// value of the documented type.
Json default_config();

/// Parses a JSON document; ErrorKind::Io / Config on failure.
Json load_config_file(const std::string& path);
Json parse_config_text(const std::string& text);

/// Defaults deep-merged with the user document. Unknown keys are kept so that
/// validation can report them.
Json resolve_config(const Json& user);

/// Applies "a.b.c=value". The value is read as JSON when it parses, otherwise
/// as a string.
void apply_override(Json& doc, std::string_view assignment);

/// All schema and range problems, each prefixed with its field path. Never
/// runs a pipeline.
std::vector<std::string> validate_config(const Json& resolved, std::string_view command);

struct RunConfig {
    std::string command;
    std::optional<std::uint64_t> seed;
    AnalyticModel model;

    std::string data_source;  // generate | csv
    std::string data_path;
    int data_n = 0;

    std::string gram_source;  // empirical | population | csv
    std::string gram_path;
    long long gram_draws = kDefaultGramDraws;

    SelectionConfig selection;
    FitConfig fit;
    PathStop path;

    int are_grid_points = 51;
    std::optional<double> are_lambda_max;

    int sim_n = 50;
    int sim_replications = 1000;
    std::vector<Comparator> comparators;

    std::string format = "csv";
    Json resolved;
};

/// Validates and converts. Throws ErrorKind::Config listing every diagnostic.
RunConfig build_run_config(const Json& resolved, std::string_view command);

}  // namespace scle
