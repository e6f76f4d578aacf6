#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "crpo/cmdp.hpp"
#include "crpo/exact.hpp"
#include "crpo/lp_oracle.hpp"
#include "crpo/rng.hpp"

namespace crpo {

class InfeasibleGenerated : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Analytically solvable two-state fixture. Action a0 self-loops everywhere;
/// a1 moves s0 -> s1 and self-loops at s1. Reward 1 on landing in s1, cost 1
/// for every use of a1, limit 0.5, gamma 0.9, start at s0.
inline TabularCmdp make_twostate() {
    TabularCmdp m;
    m.num_states = 2;
    m.num_actions = 2;
    m.gamma = 0.9;
    m.c_max = 1.0;
    m.xi = {1.0, 0.0};
    m.transition.assign(8, 0.0);
    auto set_p = [&m](std::size_t s, std::size_t a, std::size_t sp) {
        m.transition[m.sas(s, a, sp)] = 1.0;
    };
    set_p(0, 0, 0);
    set_p(0, 1, 1);
    set_p(1, 0, 1);
    set_p(1, 1, 1);

    std::vector<double> reward(8, 0.0), cost(8, 0.0);
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t sp = 0; sp < 2; ++sp) {
                if (sp == 1) reward[m.sas(s, a, sp)] = 1.0;
                if (a == 1) cost[m.sas(s, a, sp)] = 1.0;
            }
    m.channels = {std::move(reward), std::move(cost)};
    m.limits = {0.5};
    return m;
}

/// Random Garnet-style CMDP: each (s,a) reaches `branching` distinct
/// successors with Dirichlet(1) probabilities; rewards and costs are i.i.d.
/// Uniform[0,1]. Limits are 0.75x the cost of the unconstrained-optimal
/// policy, so the constraints are active but a feasible policy exists
/// (verified with the occupancy LP; regenerated on a sub-seed otherwise).
inline TabularCmdp make_garnet(std::size_t num_states, std::size_t num_actions,
                               std::size_t branching, std::size_t p_costs, std::uint64_t seed,
                               double gamma = 0.9) {
    if (branching > num_states) throw std::invalid_argument("branching > num_states");

    for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
        Rng rng(Rng(seed).substream(attempt).next());
        TabularCmdp m;
        m.num_states = num_states;
        m.num_actions = num_actions;
        m.gamma = gamma;
        m.c_max = 1.0;
        m.xi.assign(num_states, 1.0 / static_cast<double>(num_states));
        m.transition.assign(num_states * num_actions * num_states, 0.0);

        std::vector<std::size_t> order(num_states);
        for (std::size_t s = 0; s < num_states; ++s)
            for (std::size_t a = 0; a < num_actions; ++a) {
                std::iota(order.begin(), order.end(), 0);
                for (std::size_t k = 0; k < branching; ++k)  // partial Fisher-Yates
                    std::swap(order[k], order[k + rng.uniform_index(num_states - k)]);
                double total = 0.0;
                std::vector<double> w(branching);
                for (std::size_t k = 0; k < branching; ++k) {
                    w[k] = -std::log(1.0 - rng.uniform());  // Exp(1) -> Dirichlet(1)
                    total += w[k];
                }
                for (std::size_t k = 0; k < branching; ++k)
                    m.transition[m.sas(s, a, order[k])] = w[k] / total;
            }

        m.channels.resize(p_costs + 1);
        for (auto& ch : m.channels) {
            ch.resize(num_states * num_actions * num_states);
            for (auto& v : ch) v = rng.uniform();
        }

        const auto unconstrained = value_iteration(m, 0);
        m.limits.resize(p_costs);
        for (std::size_t i = 0; i < p_costs; ++i)
            m.limits[i] = 0.75 * exact_q(m, unconstrained.policy, i + 1).j;

        if (solve_optimal(m).status == OccupancySolution::Status::Optimal) return m;
    }
    throw InfeasibleGenerated("no feasible Garnet after 10 attempts");
}

/// Gridworld with a goal that pays reward 1 and resets to the start, 0.1
/// slip, and a cost channel paying 1 on entering any listed cell.
/// Actions: 0 up, 1 down, 2 left, 3 right; state index = y*width + x.
inline TabularCmdp make_gridworld(std::size_t width, std::size_t height,
                                  const std::vector<std::size_t>& cost_cells, double d,
                                  std::uint64_t /*seed*/ = 0) {
    if (width < 2 || height < 2) throw std::invalid_argument("grid dimensions must be >= 2");
    const std::size_t S = width * height, A = 4;
    const std::size_t start = 0, goal = S - 1;

    TabularCmdp m;
    m.num_states = S;
    m.num_actions = A;
    m.gamma = 0.95;
    m.c_max = 1.0;
    m.xi.assign(S, 0.0);
    m.xi[start] = 1.0;
    m.transition.assign(S * A * S, 0.0);

    auto step = [&](std::size_t s, std::size_t dir) -> std::size_t {
        const long x = static_cast<long>(s % width), y = static_cast<long>(s / width);
        long nx = x, ny = y;
        if (dir == 0) ny = y - 1;
        if (dir == 1) ny = y + 1;
        if (dir == 2) nx = x - 1;
        if (dir == 3) nx = x + 1;
        if (nx < 0 || ny < 0 || nx >= static_cast<long>(width) || ny >= static_cast<long>(height))
            return s;  // bump into the wall
        return static_cast<std::size_t>(ny) * width + static_cast<std::size_t>(nx);
    };

    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            if (s == goal) {
                m.transition[m.sas(s, a, start)] = 1.0;  // absorbing via reset
                continue;
            }
            m.transition[m.sas(s, a, step(s, a))] += 0.9;
            for (std::size_t dir = 0; dir < 4; ++dir)
                m.transition[m.sas(s, a, step(s, dir))] += 0.025;
        }

    std::vector<double> reward(S * A * S, 0.0), cost(S * A * S, 0.0);
    std::vector<bool> is_cost(S, false);
    for (std::size_t c : cost_cells) is_cost.at(c) = true;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t sp = 0; sp < S; ++sp) {
                if (sp == goal) reward[m.sas(s, a, sp)] = 1.0;
                if (is_cost[sp]) cost[m.sas(s, a, sp)] = 1.0;
            }
    m.channels = {std::move(reward), std::move(cost)};
    m.limits = {d};
    return m;
}

/// The 5x5 benchmark used in tests: a cost wall spanning all of column 2
/// with a tight budget. There is no free detour, so the constrained optimum
/// must ration how often it crosses the wall and sits strictly below the
/// unconstrained return.
inline TabularCmdp make_gridworld_benchmark() {
    std::vector<std::size_t> wall;
    for (std::size_t y = 0; y < 5; ++y) wall.push_back(y * 5 + 2);
    return make_gridworld(5, 5, wall, 0.1);
}

}  // namespace crpo
