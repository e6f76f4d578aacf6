#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "crpo/cmdp.hpp"
#include "crpo/policy.hpp"
#include "crpo/simplex.hpp"

namespace crpo {

class LpNumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Globally optimal feasible policy obtained from the occupancy-measure LP.
struct OccupancySolution {
    enum class Status { Optimal, Infeasible };
    Status status = Status::Infeasible;
    std::vector<double> nu;      // [s][a], empty when infeasible
    TablePolicy policy;          // extracted pi*(a|s)
    std::vector<double> j_star;  // J_0..J_p of pi* from the occupancy measure
};

/// pi(a|s) = nu(s,a) / sum_a' nu(s,a'); unvisited states get a uniform row.
inline TablePolicy extract_policy(const std::vector<double>& nu, std::size_t num_states,
                                  std::size_t num_actions) {
    TablePolicy pol;
    pol.num_states = num_states;
    pol.num_actions = num_actions;
    pol.table.assign(num_states * num_actions, 0.0);
    for (std::size_t s = 0; s < num_states; ++s) {
        double mass = 0.0;
        for (std::size_t a = 0; a < num_actions; ++a) mass += nu[s * num_actions + a];
        for (std::size_t a = 0; a < num_actions; ++a)
            pol.table[s * num_actions + a] =
                mass > 1e-12 ? nu[s * num_actions + a] / mass : 1.0 / static_cast<double>(num_actions);
    }
    return pol;
}

inline TablePolicy extract_policy(const OccupancySolution& sol) {
    return sol.policy;
}

/// Solves
///   max (1/(1-gamma)) sum nu(s,a) cbar_0(s,a)
///   s.t. sum_a nu(s',a) = (1-gamma) xi(s') + gamma sum_{s,a} P(s'|s,a) nu(s,a)
///        (1/(1-gamma)) sum nu(s,a) cbar_i(s,a) <= d_i
///        nu >= 0
/// with the in-repo dense simplex.
inline OccupancySolution solve_optimal(const TabularCmdp& m) {
    validate(m);
    const std::size_t S = m.num_states, A = m.num_actions, n = S * A;
    const std::size_t p = m.num_cost_channels();

    std::vector<std::vector<double>> cbar;
    cbar.reserve(p + 1);
    for (std::size_t i = 0; i <= p; ++i) cbar.push_back(m.mean_cost(i));

    std::vector<double> obj = cbar[0];  // constant 1/(1-gamma) dropped from the objective

    std::vector<std::vector<double>> a_eq(S, std::vector<double>(n, 0.0));
    std::vector<double> b_eq(S);
    for (std::size_t sp = 0; sp < S; ++sp) {
        for (std::size_t a = 0; a < A; ++a) a_eq[sp][m.sa(sp, a)] += 1.0;
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) a_eq[sp][m.sa(s, a)] -= m.gamma * m.p(s, a, sp);
        b_eq[sp] = (1.0 - m.gamma) * m.xi[sp];
    }

    std::vector<std::vector<double>> a_ub(p, std::vector<double>(n, 0.0));
    std::vector<double> b_ub(p);
    for (std::size_t i = 0; i < p; ++i) {
        a_ub[i] = cbar[i + 1];
        b_ub[i] = (1.0 - m.gamma) * m.limits[i];
    }

    SimplexSolver solver;
    auto res = solver.maximize(obj, a_eq, b_eq, a_ub, b_ub);
    OccupancySolution sol;
    if (res.status == SimplexSolver::Status::Infeasible) {
        sol.status = OccupancySolution::Status::Infeasible;
        return sol;
    }
    if (res.status != SimplexSolver::Status::Optimal)
        throw LpNumericalFailure("simplex failed on occupancy LP");

    sol.status = OccupancySolution::Status::Optimal;
    sol.nu = std::move(res.x);
    sol.policy = extract_policy(sol.nu, S, A);
    sol.j_star.assign(p + 1, 0.0);
    for (std::size_t i = 0; i <= p; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += sol.nu[k] * cbar[i][k];
        sol.j_star[i] = acc / (1.0 - m.gamma);
    }
    return sol;
}

inline nlohmann::json to_json(const OccupancySolution& sol, std::size_t num_states,
                              std::size_t num_actions) {
    nlohmann::json j;
    j["status"] = sol.status == OccupancySolution::Status::Optimal ? "optimal" : "infeasible";
    auto table2 = [&](const std::vector<double>& t) {
        nlohmann::json out = nlohmann::json::array();
        for (std::size_t s = 0; s < num_states; ++s) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t a = 0; a < num_actions; ++a) row.push_back(t[s * num_actions + a]);
            out.push_back(std::move(row));
        }
        return out;
    };
    if (sol.status == OccupancySolution::Status::Optimal) {
        j["nu"] = table2(sol.nu);
        j["policy"] = table2(sol.policy.table);
        j["j_star"] = sol.j_star;
    }
    return j;
}

}  // namespace crpo
