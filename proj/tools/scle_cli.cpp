#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "scle/scle.h"

namespace {

struct Options {
    std::string config;
    std::vector<std::string> sets;
    std::string out = "scle_out";
    int threads = 1;
    std::string format;
};

int report(scle_status status) {
    std::cerr << "error: " << scle_status_name(status) << ": " << scle_last_error() << "\n";
    return scle_status_is_numerical(status) ? 2 : 1;
}

int run(const std::string& command, const Options& opt) {
    scle_config* cfg = nullptr;
    scle_status st = opt.config.empty() ? scle_config_new(&cfg)
                                        : scle_config_from_file(opt.config.c_str(), &cfg);
    if (st != SCLE_OK) {
        return report(st);
    }
    for (const auto& s : opt.sets) {
        if ((st = scle_config_set(cfg, s.c_str())) != SCLE_OK) {
            scle_config_free(cfg);
            return report(st);
        }
    }
    if (!opt.format.empty()) {
        scle_config_set(cfg, ("output.format=\"" + opt.format + "\"").c_str());
    }

    char* text = nullptr;
    size_t count = 0;
    st = scle_config_validate(cfg, command.c_str(), &text, &count);
    if (st != SCLE_OK) {
        scle_config_free(cfg);
        return report(st);
    }
    if (count > 0) {
        std::cerr << text;
        scle_string_free(text);
        scle_config_free(cfg);
        return 1;
    }
    scle_string_free(text);
    if (command == "validate") {
        std::cout << "config is valid\n";
        scle_config_free(cfg);
        return 0;
    }

    char* summary = nullptr;
    st = scle_run(cfg, command.c_str(), opt.out.c_str(), nullptr, opt.threads, &summary);
    scle_config_free(cfg);
    if (st != SCLE_OK) {
        return report(st);
    }
    std::cout << summary << "\n";
    scle_string_free(summary);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse composite likelihood estimation and selection"};
    app.require_subcommand(1);
    Options opt;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"fit", "Fit the two-step estimator to data"},
        {"path", "Compute the T-Step solution path and selection trace"},
        {"are", "Asymptotic relative efficiency curve of population-optimal rules"},
        {"simulate", "Monte Carlo MSE-ratio experiment"},
        {"covariance", "Export a covariance matrix"},
        {"validate", "Check a configuration without running it"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--set", opt.sets, "Dotted override key=value (repeatable)");
        sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
        sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--format", opt.format, "Artifact format")->check(CLI::IsMember({"csv", "json"}));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    for (const auto& [name, help] : commands) {
        if (app.got_subcommand(name)) {
            return run(name, opt);
        }
    }
    return 1;
}
