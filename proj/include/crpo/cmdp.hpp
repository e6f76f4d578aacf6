#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace crpo {

/// Finite constrained MDP. Channel 0 is the reward, channels 1..p are costs
/// with limits d_1..d_p. Rewards/costs are transition-dependent c_i(s,a,s').
/// Immutable after construction by convention; all solvers take it by const&.
struct TabularCmdp {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    double gamma = 0.0;
    double c_max = 1.0;
    std::vector<double> xi;          // [s]
    std::vector<double> transition;  // [s][a][s'] row-major
    // channel[0] = reward table, channel[i>=1] = cost table, each [s][a][s'].
    std::vector<std::vector<double>> channels;
    std::vector<double> limits;      // d_i for i = 1..p (size = channels.size()-1)

    std::size_t num_cost_channels() const { return limits.size(); }
    std::size_t num_channels() const { return channels.size(); }

    std::size_t sas(std::size_t s, std::size_t a, std::size_t sp) const {
        return (s * num_actions + a) * num_states + sp;
    }
    std::size_t sa(std::size_t s, std::size_t a) const { return s * num_actions + a; }

    double p(std::size_t s, std::size_t a, std::size_t sp) const {
        return transition[sas(s, a, sp)];
    }
    double cost(std::size_t channel, std::size_t s, std::size_t a, std::size_t sp) const {
        return channels[channel][sas(s, a, sp)];
    }

    /// Expected immediate cost c̄_i(s,a) = Σ_{s'} P(s'|s,a) c_i(s,a,s'), as a
    /// flat [s][a] table.
    std::vector<double> mean_cost(std::size_t channel) const {
        std::vector<double> out(num_states * num_actions, 0.0);
        for (std::size_t s = 0; s < num_states; ++s)
            for (std::size_t a = 0; a < num_actions; ++a) {
                double acc = 0.0;
                for (std::size_t sp = 0; sp < num_states; ++sp)
                    acc += p(s, a, sp) * cost(channel, s, a, sp);
                out[sa(s, a)] = acc;
            }
        return out;
    }
};

struct ValidationIssue {
    enum class Kind { RowNotStochastic, NegativeEntry, BadDiscount, BadInitialDist, BadCostEntry, BadShape };
    Kind kind;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
    std::string to_string() const {
        std::string out;
        for (const auto& i : issues) {
            out += i.detail;
            out += '\n';
        }
        return out;
    }
};

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(ValidationReport r)
        : std::runtime_error(r.to_string()), report(std::move(r)) {}
    ValidationReport report;
};

/// Checks every model invariant; the report lists all violations, not just
/// the first.
inline ValidationReport validate_report(const TabularCmdp& m) {
    using Kind = ValidationIssue::Kind;
    ValidationReport rep;
    auto add = [&rep](Kind k, std::string d) { rep.issues.push_back({k, std::move(d)}); };

    if (m.num_states == 0 || m.num_actions == 0) {
        add(Kind::BadShape, "num_states and num_actions must be positive");
        return rep;
    }
    const std::size_t S = m.num_states, A = m.num_actions;
    if (m.transition.size() != S * A * S) add(Kind::BadShape, "transition table has wrong size");
    if (m.xi.size() != S) add(Kind::BadShape, "initial distribution has wrong size");
    if (m.channels.empty()) add(Kind::BadShape, "reward channel missing");
    for (const auto& ch : m.channels)
        if (ch.size() != S * A * S) add(Kind::BadShape, "channel table has wrong size");
    if (m.channels.size() != m.limits.size() + 1)
        add(Kind::BadShape, "limits size must equal number of cost channels");
    if (!rep.ok()) return rep;

    if (!(m.gamma > 0.0 && m.gamma < 1.0))
        add(Kind::BadDiscount, "BadDiscount: gamma must lie in (0,1), got " + std::to_string(m.gamma));
    if (!(m.c_max > 0.0)) add(Kind::BadShape, "c_max must be positive");

    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            double row = 0.0;
            for (std::size_t sp = 0; sp < S; ++sp) {
                const double v = m.p(s, a, sp);
                if (v < 0.0)
                    add(Kind::NegativeEntry, "NegativeEntry: P(" + std::to_string(sp) + "|" +
                                                 std::to_string(s) + "," + std::to_string(a) + ")");
                row += v;
            }
            if (std::abs(row - 1.0) > 1e-12)
                add(Kind::RowNotStochastic, "RowNotStochastic(" + std::to_string(s) + "," +
                                                std::to_string(a) + "): sum=" + std::to_string(row));
        }

    double xsum = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        if (m.xi[s] < 0.0) add(Kind::BadInitialDist, "BadInitialDist: xi(" + std::to_string(s) + ") < 0");
        xsum += m.xi[s];
    }
    if (std::abs(xsum - 1.0) > 1e-12)
        add(Kind::BadInitialDist, "BadInitialDist: sum=" + std::to_string(xsum));

    for (std::size_t i = 0; i < m.channels.size(); ++i)
        for (std::size_t k = 0; k < m.channels[i].size(); ++k) {
            const double v = m.channels[i][k];
            if (v < 0.0 || v > m.c_max) {
                add(Kind::BadCostEntry,
                    "channel " + std::to_string(i) + " entry outside [0, c_max]");
                break;
            }
        }
    return rep;
}

/// Throwing wrapper around validate_report.
inline void validate(const TabularCmdp& m) {
    auto rep = validate_report(m);
    if (!rep.ok()) throw ValidationError(std::move(rep));
}

inline nlohmann::json to_json(const TabularCmdp& m) {
    const std::size_t S = m.num_states, A = m.num_actions;
    auto table3 = [&](const std::vector<double>& t) {
        nlohmann::json out = nlohmann::json::array();
        for (std::size_t s = 0; s < S; ++s) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t a = 0; a < A; ++a) {
                nlohmann::json inner = nlohmann::json::array();
                for (std::size_t sp = 0; sp < S; ++sp) inner.push_back(t[m.sas(s, a, sp)]);
                row.push_back(std::move(inner));
            }
            out.push_back(std::move(row));
        }
        return out;
    };
    nlohmann::json j;
    j["num_states"] = S;
    j["num_actions"] = A;
    j["gamma"] = m.gamma;
    j["c_max"] = m.c_max;
    j["xi"] = m.xi;
    j["P"] = table3(m.transition);
    j["c0"] = table3(m.channels.at(0));
    nlohmann::json costs = nlohmann::json::array();
    for (std::size_t i = 1; i < m.channels.size(); ++i) costs.push_back(table3(m.channels[i]));
    j["costs"] = std::move(costs);
    j["limits"] = m.limits;
    return j;
}

inline TabularCmdp cmdp_from_json(const nlohmann::json& j) {
    TabularCmdp m;
    m.num_states = j.at("num_states").get<std::size_t>();
    m.num_actions = j.at("num_actions").get<std::size_t>();
    m.gamma = j.at("gamma").get<double>();
    m.c_max = j.value("c_max", 1.0);
    m.xi = j.at("xi").get<std::vector<double>>();
    const std::size_t S = m.num_states, A = m.num_actions;
    auto table3 = [&](const nlohmann::json& t) {
        std::vector<double> out(S * A * S, 0.0);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t sp = 0; sp < S; ++sp)
                    out[m.sas(s, a, sp)] = t.at(s).at(a).at(sp).get<double>();
        return out;
    };
    m.transition = table3(j.at("P"));
    m.channels.push_back(table3(j.at("c0")));
    for (const auto& c : j.at("costs")) m.channels.push_back(table3(c));
    m.limits = j.at("limits").get<std::vector<double>>();
    return m;
}

}  // namespace crpo
