#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mlmr/errors.hpp"
#include "mlmr/grid.hpp"
#include "mlmr/markov.hpp"
#include "mlmr/matching.hpp"
#include "mlmr/policies.hpp"

namespace mlmr {

enum class PolicyKind { mlmr, ucb1_arms, oracle, uniform_random };

inline const char* to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::mlmr: return "mlmr";
        case PolicyKind::ucb1_arms: return "ucb1_arms";
        case PolicyKind::oracle: return "oracle";
        case PolicyKind::uniform_random: return "uniform_random";
    }
    return "?";
}

struct PolicyConfig {
    PolicyKind kind = PolicyKind::mlmr;
    std::optional<ExplorationSchedule> schedule;  // mlmr
    double ucb1_l = 2.0;                          // ucb1_arms
    std::uint64_t enumeration_cap = kDefaultEnumerationCap;
};

struct ExperimentConfig {
    ProblemInstance instance;
    PolicyConfig policy;
    std::uint64_t horizon = 0;
    std::uint64_t replications = 20;
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> checkpoints;  // empty -> default_checkpoints(horizon)
    bool assume_valid_chains = false;

    void validate() const {
        instance.validate(assume_valid_chains ? ChainChecks::assume_valid : ChainChecks::strict);
        if (horizon < instance.num_users * instance.num_resources)
            throw ValidationError("config: horizon must be >= M*N so initialization fits");
        if (replications == 0) throw ValidationError("config: replications must be positive");
        for (std::size_t k = 0; k < checkpoints.size(); ++k) {
            if (checkpoints[k] == 0 || checkpoints[k] > horizon)
                throw ValidationError("config: checkpoints must lie in [1, horizon]");
            if (k > 0 && checkpoints[k] <= checkpoints[k - 1])
                throw ValidationError("config: checkpoints must be strictly ascending");
        }
        if (policy.kind == PolicyKind::mlmr && !policy.schedule)
            throw ValidationError("config: mlmr policy requires a schedule");
    }
};

namespace detail {

struct Token {
    std::string text;
    std::size_t line;
};

inline std::vector<Token> tokenize_config(const std::string& text) {
    std::vector<Token> tokens;
    std::size_t line = 1;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back({cur, line});
            cur.clear();
        }
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '#') {
            flush();
            while (i < text.size() && text[i] != '\n') ++i;
            ++line;
            continue;
        }
        if (c == '\n') {
            flush();
            ++line;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
            flush();
        } else if (c == '{' || c == '}') {
            flush();
            tokens.push_back({std::string(1, c), line});
        } else {
            cur += c;
        }
    }
    flush();
    return tokens;
}

inline bool looks_numeric(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

class ConfigParser {
public:
    ConfigParser(const std::string& text, std::string origin)
        : tokens_(tokenize_config(text)), origin_(std::move(origin)) {}

    ExperimentConfig parse() {
        ExperimentConfig cfg;
        bool have_instance = false, have_policy = false, have_horizon = false;
        while (!at_end()) {
            const Token key = take();
            if (key.text == "instance") {
                parse_instance(cfg.instance);
                have_instance = true;
            } else if (key.text == "policy") {
                parse_policy(cfg.policy);
                have_policy = true;
            } else if (key.text == "horizon") {
                cfg.horizon = integer("horizon");
                have_horizon = true;
            } else if (key.text == "replications") {
                cfg.replications = integer("replications");
            } else if (key.text == "seed") {
                cfg.seed = integer("seed");
            } else if (key.text == "checkpoints") {
                while (!at_end() && looks_numeric(peek().text))
                    cfg.checkpoints.push_back(integer("checkpoint"));
            } else if (key.text == "assume_valid_chains") {
                cfg.assume_valid_chains = boolean("assume_valid_chains");
            } else {
                fail("unknown key '" + key.text + "'", key.line);
            }
        }
        if (!have_instance) fail("missing 'instance' block", last_line());
        if (!have_policy) fail("missing 'policy' block", last_line());
        if (!have_horizon) fail("missing 'horizon'", last_line());
        cfg.validate();
        return cfg;
    }

private:
    void parse_instance(ProblemInstance& inst) {
        expect("{");
        std::size_t users = 0, resources = 0;
        std::vector<char> filled;
        while (!at_end() && peek().text != "}") {
            const Token key = take();
            if (key.text == "users") {
                users = integer("users");
            } else if (key.text == "resources") {
                resources = integer("resources");
            } else if (key.text == "two_state") {
                require_dims(users, resources, key.line);
                parse_two_state(inst, users, resources, filled);
            } else if (key.text == "chain") {
                require_dims(users, resources, key.line);
                parse_chain(inst, users, resources, filled, key.line);
            } else {
                fail("unknown instance key '" + key.text + "'", key.line);
            }
        }
        expect("}");
        inst.num_users = users;
        inst.num_resources = resources;
        if (inst.chains.size() != users * resources || filled.size() != users * resources)
            throw ValidationError("config: instance must define a chain for every pair");
        for (std::size_t idx = 0; idx < filled.size(); ++idx) {
            if (!filled[idx])
                throw ValidationError("config: missing chain for pair (" +
                                      std::to_string(idx / resources) + "," +
                                      std::to_string(idx % resources) + ")");
        }
    }

    void require_dims(std::size_t users, std::size_t resources, std::size_t line) {
        if (users == 0 || resources == 0)
            fail("'users' and 'resources' must come before chain definitions", line);
    }

    void parse_two_state(ProblemInstance& inst, std::size_t users, std::size_t resources,
                         std::vector<char>& filled) {
        expect("{");
        Matrix p01, p10, theta0, theta1;
        std::vector<char> seen(4, 0);
        while (!at_end() && peek().text != "}") {
            const Token key = take();
            Matrix* target = nullptr;
            std::size_t slot = 0;
            if (key.text == "p01") { target = &p01; slot = 0; }
            else if (key.text == "p10") { target = &p10; slot = 1; }
            else if (key.text == "theta0") { target = &theta0; slot = 2; }
            else if (key.text == "theta1") { target = &theta1; slot = 3; }
            else fail("unknown two_state key '" + key.text + "'", key.line);
            *target = matrix_block(key.text, users, resources);
            seen[slot] = 1;
        }
        expect("}");
        for (const char s : seen)
            if (!s) throw ValidationError("config: two_state needs p01, p10, theta0 and theta1");
        inst.chains.resize(users * resources);
        filled.assign(users * resources, 1);
        for (std::size_t i = 0; i < users; ++i)
            for (std::size_t j = 0; j < resources; ++j)
                inst.chains[i * resources + j] =
                    two_state_chain(p01(i, j), p10(i, j), theta0(i, j), theta1(i, j));
    }

    void parse_chain(ProblemInstance& inst, std::size_t users, std::size_t resources,
                     std::vector<char>& filled, std::size_t line) {
        const std::uint64_t user = integer("chain user index");
        const std::uint64_t resource = integer("chain resource index");
        if (user >= users || resource >= resources)
            fail("chain index out of range", line);
        expect("{");
        ChainSpec spec;
        while (!at_end() && peek().text != "}") {
            const Token key = take();
            if (key.text == "states") {
                spec.num_states = integer("states");
            } else if (key.text == "transition") {
                if (spec.num_states == 0) fail("'states' must come before 'transition'", key.line);
                spec.transition = matrix_block("transition", spec.num_states, spec.num_states);
            } else if (key.text == "rewards") {
                while (!at_end() && looks_numeric(peek().text))
                    spec.rewards.push_back(number("reward"));
            } else {
                fail("unknown chain key '" + key.text + "'", key.line);
            }
        }
        expect("}");
        if (inst.chains.size() != users * resources) {
            inst.chains.resize(users * resources);
            filled.assign(users * resources, 0);
        }
        const std::size_t idx = user * resources + resource;
        if (filled[idx]) fail("duplicate chain for pair", line);
        inst.chains[idx] = std::move(spec);
        filled[idx] = 1;
    }

    void parse_policy(PolicyConfig& policy) {
        expect("{");
        bool have_name = false;
        while (!at_end() && peek().text != "}") {
            const Token key = take();
            if (key.text == "name") {
                const Token name = take();
                if (name.text == "mlmr") policy.kind = PolicyKind::mlmr;
                else if (name.text == "ucb1_arms") policy.kind = PolicyKind::ucb1_arms;
                else if (name.text == "oracle") policy.kind = PolicyKind::oracle;
                else if (name.text == "uniform_random") policy.kind = PolicyKind::uniform_random;
                else fail("unknown policy '" + name.text + "'", name.line);
                have_name = true;
            } else if (key.text == "schedule") {
                const Token form = take();
                if (form.text == "constant") {
                    policy.schedule = ExplorationSchedule::constant(number("L"));
                } else if (form.text == "log_log") {
                    policy.schedule = ExplorationSchedule::log_log(number("log_log coefficient"));
                } else if (form.text == "power") {
                    const double c = number("power coefficient");
                    const double a = number("power exponent");
                    policy.schedule = ExplorationSchedule::power(c, a);
                } else {
                    fail("unknown schedule form '" + form.text + "'", form.line);
                }
            } else if (key.text == "L") {
                policy.ucb1_l = number("L");
            } else if (key.text == "cap") {
                policy.enumeration_cap = integer("cap");
            } else {
                fail("unknown policy key '" + key.text + "'", key.line);
            }
        }
        expect("}");
        if (!have_name) fail("policy block needs 'name'", last_line());
    }

    // A brace-delimited matrix; each input line is one row.
    Matrix matrix_block(const std::string& what, std::size_t rows, std::size_t cols) {
        expect("{");
        std::vector<std::vector<double>> data;
        std::size_t current_line = 0;
        while (!at_end() && peek().text != "}") {
            const Token tok = take();
            if (!looks_numeric(tok.text)) fail("expected number in " + what + " matrix", tok.line);
            if (tok.line != current_line) {
                data.emplace_back();
                current_line = tok.line;
            }
            data.back().push_back(std::strtod(tok.text.c_str(), nullptr));
        }
        expect("}");
        if (data.size() != rows)
            throw ValidationError("config: " + what + " must have " + std::to_string(rows) +
                                  " rows (one per line), got " + std::to_string(data.size()));
        Matrix out(rows, cols, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            if (data[i].size() != cols)
                throw ValidationError("config: " + what + " row " + std::to_string(i) + " must have " +
                                      std::to_string(cols) + " entries, got " +
                                      std::to_string(data[i].size()));
            for (std::size_t j = 0; j < cols; ++j) out(i, j) = data[i][j];
        }
        return out;
    }

    bool at_end() const { return pos_ >= tokens_.size(); }
    std::size_t last_line() const { return tokens_.empty() ? 1 : tokens_.back().line; }

    const Token& peek() const {
        if (at_end()) throw ParseError(origin_ + ": unexpected end of file");
        return tokens_[pos_];
    }

    Token take() {
        if (at_end()) throw ParseError(origin_ + ": unexpected end of file");
        return tokens_[pos_++];
    }

    void expect(const std::string& text) {
        const Token tok = take();
        if (tok.text != text) fail("expected '" + text + "', got '" + tok.text + "'", tok.line);
    }

    double number(const std::string& what) {
        const Token tok = take();
        if (!looks_numeric(tok.text)) fail("expected number for " + what, tok.line);
        return std::strtod(tok.text.c_str(), nullptr);
    }

    std::uint64_t integer(const std::string& what) {
        const Token tok = take();
        char* end = nullptr;
        const unsigned long long v = std::strtoull(tok.text.c_str(), &end, 10);
        if (end != tok.text.c_str() + tok.text.size())
            fail("expected non-negative integer for " + what, tok.line);
        return static_cast<std::uint64_t>(v);
    }

    bool boolean(const std::string& what) {
        const Token tok = take();
        if (tok.text == "true") return true;
        if (tok.text == "false") return false;
        fail("expected true/false for " + what, tok.line);
        return false;
    }

    [[noreturn]] void fail(const std::string& message, std::size_t line) {
        throw ParseError(origin_ + ":" + std::to_string(line) + ": " + message);
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::string origin_;
};

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text,
                                     const std::string& origin = "<string>") {
    return detail::ConfigParser(text, origin).parse();
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path);
}

}  // namespace mlmr
