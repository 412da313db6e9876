#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "scle/estep.hpp"
#include "scle/selection.hpp"
#include "scle/simulate.hpp"

namespace scle {

/// printf("%.17g"); non-finite values print as nan / inf / -inf.
std::string format_real(double x);

/// Numeric CSV reader. The first line is treated as a header when any of its
/// fields fails to parse as a number.
RowMatrix read_csv_matrix(const std::string& path);
DataMatrix read_data_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);

std::string matrix_csv(const Matrix& a, const std::vector<std::string>& header = {});
/// One row per breakpoint: lambda, event, active count, dense w.
std::string path_csv(const PathResult& path, const std::vector<std::string>& labels = {});
std::string selection_trace_csv(const std::vector<SelectionTracePoint>& trace);
std::string trajectory_csv(const MseTrajectory& traj);
std::string are_csv(const std::vector<ArePoint>& curve);
/// Flat summary: theta, se, lambda_hat, active_count, phi.
std::string fit_summary_csv(const FitResult& fit);
/// Sparse rule listing: index, label, weight.
std::string rule_csv(const CompositionRule& rule, const std::vector<std::string>& labels = {});

nlohmann::ordered_json to_json(const CompositionRule& rule,
                               const std::vector<std::string>& labels = {});
nlohmann::ordered_json to_json(const KktReport& kkt);
nlohmann::ordered_json to_json(const PathResult& path);
nlohmann::ordered_json to_json(const FitResult& fit);
nlohmann::ordered_json to_json(const MseTrajectory& traj);
nlohmann::ordered_json to_json(const std::vector<ArePoint>& curve);

/// Two-space indented JSON; non-finite reals become null.
std::string dump_json(const nlohmann::ordered_json& doc);

}  // namespace scle
