#include "scle/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace scle {

using nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    if (s.empty()) {
        return false;
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos) {
            return fields;
        }
        start = comma + 1;
    }
}

std::string label_or_index(const std::vector<std::string>& labels, int j) {
    return labels.empty() ? "w" + std::to_string(j + 1) : labels[j];
}

ordered_json vector_json(const Vector& v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
    }
    return out;
}

ordered_json matrix_json(const Matrix& a) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        out.push_back(vector_json(a.row(r).transpose()));
    }
    return out;
}

}  // namespace

std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

RowMatrix read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::Io, "cannot open '" + path + "'");
    }
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split(line);
        std::vector<double> parsed(fields.size());
        bool numeric = true;
        for (std::size_t k = 0; k < fields.size(); ++k) {
            numeric = numeric && parse_double(fields[k], parsed[k]);
        }
        if (!numeric) {
            if (rows == 0 && cols == 0) {
                cols = fields.size();  // header
                continue;
            }
            fail(ErrorKind::Input, path + ":" + std::to_string(line_no) + ": non-numeric field");
        }
        if (cols == 0) {
            cols = fields.size();
        }
        if (fields.size() != cols) {
            fail(ErrorKind::Input, path + ":" + std::to_string(line_no) + ": expected " +
                                       std::to_string(cols) + " fields, found " +
                                       std::to_string(fields.size()));
        }
        values.insert(values.end(), parsed.begin(), parsed.end());
        ++rows;
    }
    if (rows == 0) {
        fail(ErrorKind::Input, path + ": no data rows");
    }
    RowMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::copy(values.begin(), values.end(), out.data());
    return out;
}

DataMatrix read_data_csv(const std::string& path) {
    return DataMatrix(read_csv_matrix(path));
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorKind::Io, "cannot write '" + path + "'");
    }
    out << text;
    if (!out) {
        fail(ErrorKind::Io, "write failed for '" + path + "'");
    }
}

std::string matrix_csv(const Matrix& a, const std::vector<std::string>& header) {
    std::ostringstream out;
    for (std::size_t k = 0; k < header.size(); ++k) {
        out << (k ? "," : "") << header[k];
    }
    if (!header.empty()) {
        out << '\n';
    }
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            out << (c ? "," : "") << format_real(a(r, c));
        }
        out << '\n';
    }
    return out.str();
}

std::string path_csv(const PathResult& path, const std::vector<std::string>& labels) {
    std::ostringstream out;
    const int m = path.breakpoints.empty() ? 0 : path.breakpoints.front().rule.m();
    out << "lambda,event,active_count";
    for (int j = 0; j < m; ++j) {
        out << ',' << label_or_index(labels, j);
    }
    out << '\n';
    for (const auto& bp : path.breakpoints) {
        out << format_real(bp.lambda) << ',' << bp.event.describe() << ','
            << bp.rule.active().size();
        for (int j = 0; j < m; ++j) {
            out << ',' << format_real(bp.rule.weights()[j]);
        }
        out << '\n';
    }
    return out.str();
}

std::string selection_trace_csv(const std::vector<SelectionTracePoint>& trace) {
    std::ostringstream out;
    out << "lambda,active_count,phi\n";
    for (const auto& pt : trace) {
        out << format_real(pt.lambda) << ',' << pt.active_count << ',' << format_real(pt.phi)
            << '\n';
    }
    return out.str();
}

std::string trajectory_csv(const MseTrajectory& traj) {
    std::ostringstream out;
    out << "active_count,reps,lambda_mean,mse_scle,mse_mle,mse_unif,ratio_mle,se_mle,ratio_unif,"
           "se_unif\n";
    for (const auto& pt : traj.points) {
        out << pt.active_count << ',' << pt.reps << ',' << format_real(pt.lambda_mean) << ','
            << format_real(pt.mse_scle) << ',' << format_real(pt.mse_mle) << ','
            << format_real(pt.mse_unif) << ',' << format_real(pt.ratio_mle) << ','
            << format_real(pt.se_mle) << ',' << format_real(pt.ratio_unif) << ','
            << format_real(pt.se_unif) << '\n';
    }
    return out.str();
}

std::string are_csv(const std::vector<ArePoint>& curve) {
    std::ostringstream out;
    out << "lambda,active_count,are\n";
    for (const auto& pt : curve) {
        out << format_real(pt.lambda) << ',' << pt.active_count << ',' << format_real(pt.are)
            << '\n';
    }
    return out.str();
}

std::string fit_summary_csv(const FitResult& fit) {
    std::ostringstream head, row;
    const auto p = fit.theta.size();
    for (Eigen::Index a = 0; a < p; ++a) {
        head << "theta" << a + 1 << ',';
        row << format_real(fit.theta[a]) << ',';
    }
    for (Eigen::Index a = 0; a < p; ++a) {
        head << "se" << a + 1 << ',';
        row << format_real(fit.std_errors[a]) << ',';
    }
    head << "lambda_hat,active_count,phi\n";
    row << format_real(fit.selected_lambda) << ',' << fit.rule.active().size() << ','
        << format_real(fit.phi) << '\n';
    return head.str() + row.str();
}

std::string rule_csv(const CompositionRule& rule, const std::vector<std::string>& labels) {
    std::ostringstream out;
    out << "index,label,weight\n";
    for (const auto& [j, w] : rule.sparse()) {
        out << j + 1 << ',' << label_or_index(labels, j) << ',' << format_real(w) << '\n';
    }
    return out.str();
}

ordered_json to_json(const CompositionRule& rule, const std::vector<std::string>& labels) {
    ordered_json entries = ordered_json::array();
    for (const auto& [j, w] : rule.sparse()) {
        ordered_json e;
        e["index"] = j + 1;
        if (!labels.empty()) {
            e["label"] = labels[j];
        }
        e["weight"] = w;
        entries.push_back(std::move(e));
    }
    ordered_json out;
    out["lambda"] = rule.lambda();
    out["m"] = rule.m();
    out["active_count"] = rule.active().size();
    out["weights"] = std::move(entries);
    return out;
}

ordered_json to_json(const KktReport& kkt) {
    ordered_json out;
    out["max_active_violation"] = kkt.max_active_violation;
    out["max_inactive_violation"] = kkt.max_inactive_violation;
    out["sign_consistent"] = kkt.sign_consistent;
    return out;
}

ordered_json to_json(const PathResult& path) {
    ordered_json bps = ordered_json::array();
    for (const auto& bp : path.breakpoints) {
        ordered_json e;
        e["lambda"] = bp.lambda;
        e["event"] = bp.event.describe();
        e["entered"] = bp.event.entered;
        e["left"] = bp.event.left;
        e["segment_active"] = bp.segment_active;
        e["weights"] = vector_json(bp.rule.weights());
        bps.push_back(std::move(e));
    }
    ordered_json out;
    out["lambda_max"] = path.lambda_max;
    out["truncated"] = path.truncated;
    out["warnings"] = path.warnings;
    out["breakpoints"] = std::move(bps);
    return out;
}

ordered_json to_json(const FitResult& fit) {
    ordered_json out;
    out["n_obs"] = fit.n_obs;
    out["preliminary_theta"] = vector_json(fit.preliminary_theta);
    out["selected_lambda"] = fit.selected_lambda;
    out["budget_reached"] = fit.budget_reached;
    out["phi"] = fit.phi;
    out["rule"] = to_json(fit.rule, fit.labels);
    out["theta"] = vector_json(fit.theta);
    out["std_errors"] = vector_json(fit.std_errors);
    out["sensitivity"] = matrix_json(fit.sandwich.sensitivity);
    out["variability"] = matrix_json(fit.sandwich.variability);
    out["godambe"] = matrix_json(fit.sandwich.godambe);
    out["iterations"] = fit.iterations;
    out["kkt"] = to_json(fit.kkt);
    out["warnings"] = fit.warnings;
    return out;
}

ordered_json to_json(const MseTrajectory& traj) {
    ordered_json pts = ordered_json::array();
    for (const auto& pt : traj.points) {
        ordered_json e;
        e["active_count"] = pt.active_count;
        e["reps"] = pt.reps;
        e["lambda_mean"] = pt.lambda_mean;
        e["mse_scle"] = pt.mse_scle;
        e["mse_mle"] = pt.mse_mle;
        e["mse_unif"] = pt.mse_unif;
        e["ratio_mle"] = pt.ratio_mle;
        e["se_mle"] = pt.se_mle;
        e["ratio_unif"] = pt.ratio_unif;
        e["se_unif"] = pt.se_unif;
        pts.push_back(std::move(e));
    }
    ordered_json out;
    out["reference"] = traj.reference;
    out["replications"] = traj.replications;
    out["failures"] = traj.failures;
    out["failure_messages"] = traj.failure_messages;
    out["valid"] = traj.valid();
    out["mse_mle"] = traj.mse_mle;
    out["mse_unif"] = traj.mse_unif;
    out["mse_selected"] = traj.mse_selected;
    out["selected_count_mean"] = traj.selected_count_mean;
    out["points"] = std::move(pts);
    return out;
}

ordered_json to_json(const std::vector<ArePoint>& curve) {
    ordered_json out = ordered_json::array();
    for (const auto& pt : curve) {
        out.push_back({{"lambda", pt.lambda}, {"active_count", pt.active_count}, {"are", pt.are}});
    }
    return out;
}

std::string dump_json(const ordered_json& doc) {
    return doc.dump(2) + "\n";
}

}  // namespace scle
