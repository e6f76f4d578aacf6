#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace crpo {

/// Tabular softmax policy over logits w(s,a):
/// pi(a|s) = exp(w(s,a)) / sum_a' exp(w(s,a')).
struct SoftmaxPolicy {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> logits;  // [s][a]

    SoftmaxPolicy() = default;
    SoftmaxPolicy(std::size_t S, std::size_t A)
        : num_states(S), num_actions(A), logits(S * A, 0.0) {}

    double& w(std::size_t s, std::size_t a) { return logits[s * num_actions + a]; }
    double w(std::size_t s, std::size_t a) const { return logits[s * num_actions + a]; }

    /// Probability row pi(.|s), computed with a max-shift for stability.
    std::vector<double> probs_row(std::size_t s) const {
        std::vector<double> row(num_actions);
        double mx = w(s, 0);
        for (std::size_t a = 1; a < num_actions; ++a) mx = std::max(mx, w(s, a));
        double z = 0.0;
        for (std::size_t a = 0; a < num_actions; ++a) {
            row[a] = std::exp(w(s, a) - mx);
            z += row[a];
        }
        for (std::size_t a = 0; a < num_actions; ++a) row[a] /= z;
        return row;
    }

    double prob(std::size_t s, std::size_t a) const { return probs_row(s)[a]; }

    /// Full [s][a] probability table.
    std::vector<double> probs() const {
        std::vector<double> table(num_states * num_actions);
        for (std::size_t s = 0; s < num_states; ++s) {
            auto row = probs_row(s);
            for (std::size_t a = 0; a < num_actions; ++a) table[s * num_actions + a] = row[a];
        }
        return table;
    }
};

/// Policy given directly by a probability table (e.g. extracted from an
/// occupancy measure). Rows must be normalized by the producer.
struct TablePolicy {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> table;  // [s][a]

    double prob(std::size_t s, std::size_t a) const { return table[s * num_actions + a]; }
};

/// Anything evaluation code needs from a policy is the probability table.
inline std::vector<double> probability_table(const SoftmaxPolicy& p) { return p.probs(); }
inline std::vector<double> probability_table(const TablePolicy& p) { return p.table; }

/// Mixes epsilon-uniform exploration into a probability table.
inline std::vector<double> mix_uniform(const std::vector<double>& table, std::size_t num_actions,
                                       double epsilon) {
    std::vector<double> out(table.size());
    const double u = 1.0 / static_cast<double>(num_actions);
    for (std::size_t k = 0; k < table.size(); ++k)
        out[k] = (1.0 - epsilon) * table[k] + epsilon * u;
    return out;
}

}  // namespace crpo
