#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mlmr/analysis.hpp"
#include "mlmr/config.hpp"
#include "mlmr/errors.hpp"
#include "mlmr/policies.hpp"
#include "mlmr/rng.hpp"

namespace mlmr {

// Aggregated Monte-Carlo trace: one row per checkpoint, means and standard
// errors over replications, plus the mean play-count matrix.
struct RegretTrace {
    std::vector<std::uint64_t> steps;
    std::vector<double> reward_mean;
    std::vector<double> reward_se;
    std::vector<double> regret_mean;
    std::vector<double> regret_se;
    std::vector<double> regret_per_ln_n;  // NaN at step 1 where ln(step) = 0
    std::vector<Matrix> counts_mean;
};

inline std::unique_ptr<Policy> make_policy(const ExperimentConfig& cfg) {
    const std::size_t m = cfg.instance.num_users;
    const std::size_t n = cfg.instance.num_resources;
    switch (cfg.policy.kind) {
        case PolicyKind::mlmr:
            return std::make_unique<MlmrPolicy>(m, n, *cfg.policy.schedule);
        case PolicyKind::ucb1_arms:
            return std::make_unique<Ucb1ArmsPolicy>(m, n, cfg.policy.ucb1_l,
                                                    cfg.policy.enumeration_cap);
        case PolicyKind::oracle:
            return std::make_unique<OraclePolicy>(cfg.instance);
        case PolicyKind::uniform_random:
            return std::make_unique<UniformRandomPolicy>(m, n);
    }
    throw ValidationError("config: unknown policy kind");
}

// One replication, seeded by derive_seed(cfg.seed, replication).
inline RunTrace run_replication(const ExperimentConfig& cfg, std::uint64_t replication) {
    RandomStream rng(derive_seed(cfg.seed, replication));
    auto policy = make_policy(cfg);
    return regret_trace(cfg.instance, *policy, cfg.horizon, rng, cfg.checkpoints);
}

// Deterministic reduction over replication index; the result does not depend
// on the order the replications were produced in.
inline RegretTrace aggregate_traces(const std::vector<RunTrace>& runs, std::size_t num_users,
                                    std::size_t num_resources) {
    if (runs.empty()) throw ValidationError("aggregate: no runs");
    const std::size_t rows = runs.front().steps.size();
    const double r = static_cast<double>(runs.size());

    RegretTrace out;
    out.steps = runs.front().steps;
    out.reward_mean.resize(rows);
    out.reward_se.resize(rows);
    out.regret_mean.resize(rows);
    out.regret_se.resize(rows);
    out.regret_per_ln_n.resize(rows);
    out.counts_mean.assign(rows, Matrix(num_users, num_resources, 0.0));

    for (std::size_t row = 0; row < rows; ++row) {
        double sum = 0.0;
        for (const auto& run : runs) sum += run.cumulative_reward[row];
        const double mean = sum / r;
        double sq = 0.0;
        for (const auto& run : runs) {
            const double d = run.cumulative_reward[row] - mean;
            sq += d * d;
        }
        const double se = runs.size() > 1 ? std::sqrt(sq / (r * (r - 1.0))) : 0.0;

        double regret_sum = 0.0;
        for (const auto& run : runs) regret_sum += run.regret[row];

        out.reward_mean[row] = mean;
        out.reward_se[row] = se;
        out.regret_mean[row] = regret_sum / r;
        out.regret_se[row] = se;
        const double step = static_cast<double>(out.steps[row]);
        out.regret_per_ln_n[row] =
            out.steps[row] > 1 ? out.regret_mean[row] / std::log(step)
                               : std::numeric_limits<double>::quiet_NaN();

        Matrix& counts = out.counts_mean[row];
        for (const auto& run : runs)
            for (std::size_t i = 0; i < num_users; ++i)
                for (std::size_t j = 0; j < num_resources; ++j)
                    counts(i, j) += static_cast<double>(run.counts[row](i, j));
        for (auto& c : counts) c /= r;
    }
    return out;
}

// Runs all replications and aggregates. Deterministic for a fixed config.
inline RegretTrace run(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<RunTrace> runs;
    runs.reserve(cfg.replications);
    for (std::uint64_t rep = 0; rep < cfg.replications; ++rep)
        runs.push_back(run_replication(cfg, rep));
    return aggregate_traces(runs, cfg.instance.num_users, cfg.instance.num_resources);
}

namespace detail {

// 17 significant digits: enough for doubles to round-trip exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_trace_csv(const RegretTrace& trace, std::ostream& os) {
    os << "step,reward_mean,reward_se,regret_mean,regret_se,regret_per_ln_n\n";
    for (std::size_t row = 0; row < trace.steps.size(); ++row) {
        os << trace.steps[row] << ',' << detail::format_double(trace.reward_mean[row]) << ','
           << detail::format_double(trace.reward_se[row]) << ','
           << detail::format_double(trace.regret_mean[row]) << ','
           << detail::format_double(trace.regret_se[row]) << ','
           << detail::format_double(trace.regret_per_ln_n[row]) << '\n';
    }
}

// Reads the six trace columns back (counts live in their own files).
inline RegretTrace read_trace_csv(std::istream& is) {
    RegretTrace trace;
    std::string line;
    if (!std::getline(is, line)) throw ParseError("trace csv: empty stream");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        auto next = [&]() -> std::string {
            if (!std::getline(ls, field, ',')) throw ParseError("trace csv: short row");
            return field;
        };
        trace.steps.push_back(std::strtoull(next().c_str(), nullptr, 10));
        trace.reward_mean.push_back(std::strtod(next().c_str(), nullptr));
        trace.reward_se.push_back(std::strtod(next().c_str(), nullptr));
        trace.regret_mean.push_back(std::strtod(next().c_str(), nullptr));
        trace.regret_se.push_back(std::strtod(next().c_str(), nullptr));
        trace.regret_per_ln_n.push_back(std::strtod(next().c_str(), nullptr));
    }
    return trace;
}

inline void write_counts_csv(const Matrix& counts, std::ostream& os) {
    for (std::size_t i = 0; i < counts.rows(); ++i) {
        for (std::size_t j = 0; j < counts.cols(); ++j) {
            if (j) os << ',';
            os << detail::format_double(counts(i, j));
        }
        os << '\n';
    }
}

inline Matrix read_counts_csv(std::istream& is) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        rows.emplace_back();
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) rows.back().push_back(std::strtod(field.c_str(), nullptr));
    }
    if (rows.empty()) throw ParseError("counts csv: empty stream");
    Matrix out(rows.size(), rows.front().size(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != out.cols()) throw ParseError("counts csv: ragged rows");
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = rows[i][j];
    }
    return out;
}

// trace.csv plus one counts_<step>.csv per checkpoint, under `dir`.
inline void write_run_outputs(const RegretTrace& trace, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "trace.csv");
        if (!os) throw Error("cannot write " + (dir / "trace.csv").string());
        write_trace_csv(trace, os);
    }
    for (std::size_t row = 0; row < trace.steps.size(); ++row) {
        const auto path = dir / ("counts_" + std::to_string(trace.steps[row]) + ".csv");
        std::ofstream os(path);
        if (!os) throw Error("cannot write " + path.string());
        write_counts_csv(trace.counts_mean[row], os);
    }
}

}  // namespace mlmr
