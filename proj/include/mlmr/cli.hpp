#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlmr/analysis.hpp"
#include "mlmr/config.hpp"
#include "mlmr/harness.hpp"

namespace mlmr {

namespace detail {

inline void print_matrix(std::ostream& os, const Matrix& m, const std::string& indent = "  ") {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        os << indent;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) os << ' ';
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.10g", m(i, j));
            os << buf;
        }
        os << '\n';
    }
}

inline nlohmann::json matrix_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void print_analysis(std::ostream& os, const InstanceAnalysis& a, bool as_json) {
    const double threshold = l_threshold(a);
    if (as_json) {
        nlohmann::json j;
        j["mu"] = matrix_json(a.mu);
        j["mu_star"] = a.mu_star;
        j["optimal_matching"] = a.optimal_matching.assignment;
        j["delta_min"] = a.delta_min;
        j["delta_max"] = a.delta_max;
        j["pi_min"] = a.pi_min;
        j["s_min"] = a.s_min;
        j["s_max"] = a.s_max;
        j["theta_min"] = a.theta_min;
        j["theta_max"] = a.theta_max;
        j["eps_min"] = a.eps_min;
        j["eps_max"] = a.eps_max;
        j["a_bound"] = a.a_bound;
        j["l_threshold"] = threshold;
        j["l_threshold_ceil"] = std::ceil(threshold);
        os << j.dump(2) << '\n';
        return;
    }
    os << "instance: M=" << a.num_users << " N=" << a.num_resources << "\n";
    os << "mu:\n";
    print_matrix(os, a.mu);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", a.mu_star);
    os << "mu_star: " << buf << "\n";
    os << "optimal_matching:";
    for (std::size_t i = 0; i < a.optimal_matching.size(); ++i)
        os << " " << i << "->" << a.optimal_matching[i];
    os << "\n";
    auto scalar = [&](const char* name, double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        os << name << ": " << buf << "\n";
    };
    scalar("delta_min", a.delta_min);
    scalar("delta_max", a.delta_max);
    scalar("pi_min", a.pi_min);
    os << "s_min: " << a.s_min << "\ns_max: " << a.s_max << "\n";
    scalar("theta_min", a.theta_min);
    scalar("theta_max", a.theta_max);
    scalar("eps_min", a.eps_min);
    scalar("eps_max", a.eps_max);
    scalar("a_bound", a.a_bound);
    scalar("l_threshold", threshold);
    os << "l_threshold_ceil: " << static_cast<std::uint64_t>(std::ceil(threshold)) << "\n";
}

}  // namespace detail

// All subcommands, exposed as a function so tests can drive it directly.
// argv excludes the program name.
inline int run_cli(std::vector<std::string> argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"Combinatorial bandit simulator for matching problems with Markovian rewards"};
    app.require_subcommand(1);

    std::string config_path;
    bool as_json = false;
    std::uint64_t bound_n = 0;
    double bound_l = 0.0;
    std::string out_dir = "out";
    std::string sweep_out;
    std::vector<double> sweep_l;
    std::uint64_t seed_override = 0;
    bool have_seed = false;

    auto* analyze = app.add_subcommand("analyze", "Print instance analysis (mu, gaps, thresholds)");
    analyze->add_option("config", config_path, "config file")->required();
    analyze->add_flag("--json", as_json, "emit JSON");

    auto* bound = app.add_subcommand("bound", "Evaluate the regret upper bounds");
    bound->add_option("config", config_path, "config file")->required();
    bound->add_option("--L", bound_l, "constant exploration L")->required();
    bound->add_option("--n", bound_n, "horizon n")->required();
    bound->add_flag("--json", as_json, "emit JSON");

    auto* run_cmd = app.add_subcommand("run", "Run the configured experiment and write CSV outputs");
    run_cmd->add_option("config", config_path, "config file")->required();
    run_cmd->add_option("--out", out_dir, "output directory (env MLMR_OUT_DIR overrides)");
    run_cmd->add_option("--seed", seed_override, "override config seed")->each([&](const std::string&) {
        have_seed = true;
    });

    auto* sweep = app.add_subcommand("sweep", "Run several constant-L values into one comparison CSV");
    sweep->add_option("config", config_path, "config file")->required();
    sweep->add_option("--L", sweep_l, "constant L values")->required()->delimiter(',');
    sweep->add_option("--out", sweep_out, "output CSV file (default stdout)");
    sweep->add_option("--seed", seed_override, "override config seed")->each([&](const std::string&) {
        have_seed = true;
    });

    std::reverse(argv.begin(), argv.end());
    try {
        app.parse(std::move(argv));
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*analyze) {
            const ExperimentConfig cfg = load_config(config_path);
            const auto a = analyze_instance(cfg.instance, cfg.policy.enumeration_cap);
            detail::print_analysis(out, a, as_json);
            return 0;
        }
        if (*bound) {
            const ExperimentConfig cfg = load_config(config_path);
            const auto a = analyze_instance(cfg.instance, cfg.policy.enumeration_cap);
            const double t1_bound = constant_l_bound(a, bound_l, bound_n);
            const bool has_sequence = cfg.policy.schedule && !cfg.policy.schedule->is_constant();
            double t2_bound = 0.0, b_constant = 0.0;
            std::uint64_t t1_slot = 0;
            if (has_sequence) {
                t2_bound = schedule_l_bound(a, *cfg.policy.schedule, bound_n);
                t1_slot = schedule_crossing_slot(a, *cfg.policy.schedule);
                b_constant = schedule_burn_in_constant(a, *cfg.policy.schedule, t1_slot);
            }
            if (as_json) {
                nlohmann::json j;
                j["L"] = bound_l;
                j["n"] = bound_n;
                j["l_threshold"] = l_threshold(a);
                j["a_bound"] = a.a_bound;
                j["constant_l_bound"] = t1_bound;
                j["constant_l_bound_without_a"] = t1_bound - a.a_bound;
                if (has_sequence) {
                    j["schedule"] = cfg.policy.schedule->label();
                    j["schedule_l_bound"] = t2_bound;
                    j["schedule_l_bound_without_a"] = t2_bound - a.a_bound;
                    j["crossing_slot"] = t1_slot;
                    j["burn_in_constant"] = b_constant;
                }
                out << j.dump(2) << '\n';
            } else {
                char buf[64];
                auto scalar = [&](const char* name, double v) {
                    std::snprintf(buf, sizeof(buf), "%.10g", v);
                    out << name << ": " << buf << "\n";
                };
                scalar("l_threshold", l_threshold(a));
                scalar("constant_l_bound", t1_bound);
                scalar("constant_l_bound_without_a", t1_bound - a.a_bound);
                if (has_sequence) {
                    out << "schedule: " << cfg.policy.schedule->label() << "\n";
                    scalar("schedule_l_bound", t2_bound);
                    scalar("schedule_l_bound_without_a", t2_bound - a.a_bound);
                    out << "crossing_slot: " << t1_slot << "\n";
                    scalar("burn_in_constant", b_constant);
                }
            }
            return 0;
        }
        if (*run_cmd) {
            ExperimentConfig cfg = load_config(config_path);
            if (have_seed) cfg.seed = seed_override;
            if (const char* env_dir = std::getenv("MLMR_OUT_DIR")) out_dir = env_dir;
            const RegretTrace trace = run(cfg);
            write_run_outputs(trace, out_dir);
            out << "wrote " << (std::filesystem::path(out_dir) / "trace.csv").string() << " and "
                << trace.steps.size() << " counts files\n";
            return 0;
        }
        if (*sweep) {
            ExperimentConfig cfg = load_config(config_path);
            if (have_seed) cfg.seed = seed_override;
            std::ostringstream csv;
            csv << "L,step,regret_mean,regret_se,regret_per_ln_n\n";
            for (const double l_value : sweep_l) {
                cfg.policy.kind = PolicyKind::mlmr;
                cfg.policy.schedule = ExplorationSchedule::constant(l_value);
                const RegretTrace trace = run(cfg);
                for (std::size_t row = 0; row < trace.steps.size(); ++row) {
                    csv << detail::format_double(l_value) << ',' << trace.steps[row] << ','
                        << detail::format_double(trace.regret_mean[row]) << ','
                        << detail::format_double(trace.regret_se[row]) << ','
                        << detail::format_double(trace.regret_per_ln_n[row]) << '\n';
                }
            }
            if (sweep_out.empty()) {
                out << csv.str();
            } else {
                std::ofstream os(sweep_out);
                if (!os) throw Error("cannot write " + sweep_out);
                os << csv.str();
                out << "wrote " << sweep_out << "\n";
            }
            return 0;
        }
    } catch (const mlmr::Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace mlmr
