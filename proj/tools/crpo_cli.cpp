// Command-line front end: solve a model's occupancy LP, run seeded
// experiments (crpo / pdo / npg), compare algorithms across seeds, and
// sweep hyperparameters. All outputs are deterministic functions of
// (model, config, seed) and written atomically.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crpo/cmdp.hpp"
#include "crpo/crpo.hpp"
#include "crpo/envs.hpp"
#include "crpo/exact.hpp"
#include "crpo/lp_oracle.hpp"
#include "crpo/pdo.hpp"
#include "crpo/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitEmptyN0 = 3;

struct RunConfig {
    crpo::CrpoConfig crpo;
    double pdo_beta_dual = 0.01;
    double pdo_lambda_max = 0.0;
};

crpo::TabularCmdp load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    json j;
    in >> j;
    auto m = crpo::cmdp_from_json(j);
    crpo::validate(m);
    return m;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    in >> j;

    RunConfig cfg;
    cfg.crpo.t_max = j.value("t_max", std::size_t{1000});
    cfg.crpo.alpha = j.value("alpha", 0.1);
    cfg.crpo.eta = j.value("eta", 0.0);
    const std::string tie = j.value("tie_break", "first-index");
    if (tie == "first-index")
        cfg.crpo.tie_break = crpo::TieBreak::FirstIndex;
    else if (tie == "max-violation")
        cfg.crpo.tie_break = crpo::TieBreak::MaxViolation;
    else if (tie == "random")
        cfg.crpo.tie_break = crpo::TieBreak::Random;
    else
        throw std::runtime_error("unknown tie_break: " + tie);
    const std::string mode = j.value("eval_mode", "exact");
    if (mode == "td")
        cfg.crpo.eval_mode = crpo::EvalMode::Td;
    else if (mode == "exact")
        cfg.crpo.eval_mode = crpo::EvalMode::Exact;
    else
        throw std::runtime_error("unknown eval_mode: " + mode);
    if (j.contains("td")) {
        const auto& td = j.at("td");
        cfg.crpo.td.k_in = td.value("k_in", std::size_t{100000});
        cfg.crpo.td.sigma = td.value("sigma", 0.6);
        cfg.crpo.td.beta0 = td.value("beta0", 0.5);
    }
    if (j.contains("pdo")) {
        const auto& pd = j.at("pdo");
        cfg.pdo_beta_dual = pd.value("beta_dual", 0.01);
        cfg.pdo_lambda_max = pd.value("lambda_max", 0.0);
    }
    return cfg;
}

crpo::CrpoRunRecord run_algo(const std::string& algo, const crpo::TabularCmdp& model,
                             const RunConfig& cfg, std::uint64_t seed) {
    if (algo == "crpo") {
        auto c = cfg.crpo;
        c.seed = seed;
        return crpo::run_crpo(model, c);
    }
    if (algo == "npg") {
        auto c = cfg.crpo;
        c.seed = seed;
        return crpo::run_npg(model, c);
    }
    if (algo == "pdo") {
        crpo::PdoConfig p;
        p.t_max = cfg.crpo.t_max;
        p.alpha = cfg.crpo.alpha;
        p.beta_dual = cfg.pdo_beta_dual;
        p.lambda_max = cfg.pdo_lambda_max;
        p.td = cfg.crpo.td;
        p.eval_mode = cfg.crpo.eval_mode;
        p.seed = seed;
        return crpo::run_pdo(model, p);
    }
    throw std::runtime_error("unknown algorithm: " + algo);
}

void write_run_outputs(const fs::path& out_dir, const std::string& stem,
                       const crpo::CrpoRunRecord& rec, const std::vector<double>& limits,
                       std::uint64_t seed) {
    fs::create_directories(out_dir);
    crpo::write_file_atomic(out_dir / (stem + "_trace.csv"), crpo::trace_to_csv(rec));
    crpo::write_file_atomic(out_dir / (stem + "_summary.json"),
                            crpo::summary_json(rec, limits, seed).dump(2) + "\n");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) seeds.push_back(std::stoull(item));
    }
    return seeds;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(jobs, n); ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

int cmd_solve(const std::string& model_path, const std::string& out_dir) {
    crpo::TabularCmdp model;
    try {
        model = load_model(model_path);
    } catch (const crpo::ValidationError& e) {
        std::cerr << "model validation failed:\n" << e.what();
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "model load failed: " << e.what() << "\n";
        return kExitUsage;
    }
    const auto sol = crpo::solve_optimal(model);
    const auto j = crpo::to_json(sol, model.num_states, model.num_actions);
    std::cout << j.dump(2) << "\n";
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        crpo::write_file_atomic(fs::path(out_dir) / "solution.json", j.dump(2) + "\n");
    }
    return sol.status == crpo::OccupancySolution::Status::Optimal ? kExitOk : kExitInfeasible;
}

int cmd_run(const std::string& algo, const std::string& model_path,
            const std::string& config_path, const std::string& out_dir, std::uint64_t seed) {
    crpo::TabularCmdp model;
    RunConfig cfg;
    try {
        model = load_model(model_path);
        cfg = load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    const auto rec = run_algo(algo, model, cfg, seed);
    write_run_outputs(out_dir, algo, rec, model.limits, seed);
    if (algo == "crpo" && rec.empty_n0) {
        std::cerr << "warning: N_0 is empty; trace written anyway\n";
        return kExitEmptyN0;
    }
    return kExitOk;
}

int cmd_compare(const std::string& model_path, const std::string& crpo_cfg_path,
                const std::string& pdo_cfg_path, const std::string& seeds_text,
                const std::string& out_dir, std::size_t jobs) {
    const auto seeds = parse_seed_list(seeds_text);
    if (seeds.size() < 2) {
        std::cerr << "error: compare needs at least 2 seeds\n";
        return kExitUsage;
    }
    crpo::TabularCmdp model;
    RunConfig crpo_cfg, pdo_cfg;
    try {
        model = load_model(model_path);
        crpo_cfg = load_config(crpo_cfg_path);
        pdo_cfg = load_config(pdo_cfg_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    const auto sol = crpo::solve_optimal(model);
    if (sol.status != crpo::OccupancySolution::Status::Optimal) {
        std::cerr << "error: model is infeasible, nothing to compare against\n";
        return kExitInfeasible;
    }

    struct PerSeed {
        long crpo_ff = -1, pdo_ff = -1;
        double crpo_gap = 0.0, pdo_gap = 0.0;
    };
    std::vector<PerSeed> rows(seeds.size());
    fs::create_directories(out_dir);
    parallel_for(seeds.size(), jobs, [&](std::size_t i) {
        const auto crpo_rec = run_algo("crpo", model, crpo_cfg, seeds[i]);
        const auto pdo_rec = run_algo("pdo", model, pdo_cfg, seeds[i]);
        rows[i].crpo_ff = crpo::first_sustained_feasible(crpo_rec, model.limits);
        rows[i].pdo_ff = crpo::first_sustained_feasible(pdo_rec, model.limits);
        rows[i].crpo_gap = sol.j_star[0] - crpo_rec.n0_avg_exact_j[0];
        rows[i].pdo_gap = sol.j_star[0] - pdo_rec.n0_avg_exact_j[0];
        const std::string tag = "seed" + std::to_string(seeds[i]);
        write_run_outputs(fs::path(out_dir) / tag, "crpo", crpo_rec, model.limits, seeds[i]);
        write_run_outputs(fs::path(out_dir) / tag, "pdo", pdo_rec, model.limits, seeds[i]);
    });

    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v.size() % 2 ? v[v.size() / 2]
                            : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    };
    std::vector<double> cff, pff, cgap, pgap;
    for (const auto& r : rows) {
        // an unreached feasibility window counts as the horizon
        cff.push_back(r.crpo_ff < 0 ? double(crpo_cfg.crpo.t_max) : double(r.crpo_ff));
        pff.push_back(r.pdo_ff < 0 ? double(pdo_cfg.crpo.t_max) : double(r.pdo_ff));
        cgap.push_back(r.crpo_gap);
        pgap.push_back(r.pdo_gap);
    }
    json report;
    report["seeds"] = seeds;
    report["crpo"] = {{"median_first_feasible", median_of(cff)},
                      {"median_final_gap", median_of(cgap)}};
    report["pdo"] = {{"median_first_feasible", median_of(pff)},
                     {"median_final_gap", median_of(pgap)}};
    report["crpo_feasible_faster"] = median_of(cff) < median_of(pff);
    crpo::write_file_atomic(fs::path(out_dir) / "report.json", report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
    return kExitOk;
}

int cmd_sweep(const std::string& param, const std::string& values_text,
              const std::string& model_path, const std::string& config_path,
              const std::string& seeds_text, const std::string& out_dir, std::size_t jobs) {
    std::vector<double> values;
    {
        std::stringstream ss(values_text);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) values.push_back(std::stod(item));
    }
    if (values.empty()) {
        std::cerr << "error: sweep needs at least one value\n";
        return kExitUsage;
    }
    const auto seeds = parse_seed_list(seeds_text);
    crpo::TabularCmdp model;
    RunConfig base;
    try {
        model = load_model(model_path);
        base = load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    const auto sol = crpo::solve_optimal(model);
    if (sol.status != crpo::OccupancySolution::Status::Optimal) {
        std::cerr << "error: model is infeasible\n";
        return kExitInfeasible;
    }

    struct Row {
        double value = 0.0;
        std::uint64_t seed = 0;
        double final_gap = 0.0;
        double violation = 0.0;
        double final_j0 = 0.0;
    };
    std::vector<Row> rows(values.size() * seeds.size());
    parallel_for(rows.size(), jobs, [&](std::size_t idx) {
        const double value = values[idx / seeds.size()];
        const std::uint64_t seed = seeds[idx % seeds.size()];
        RunConfig cfg = base;
        std::string algo = "crpo";
        if (param == "eta")
            cfg.crpo.eta = value;
        else if (param == "alpha")
            cfg.crpo.alpha = value;
        else if (param == "beta_dual") {
            cfg.pdo_beta_dual = value;
            algo = "pdo";
        }
        const auto rec = run_algo(algo, model, cfg, seed);
        Row r;
        r.value = value;
        r.seed = seed;
        r.final_j0 = rec.n0_avg_exact_j[0];
        r.final_gap = sol.j_star[0] - r.final_j0;
        for (std::size_t i = 0; i < model.limits.size(); ++i)
            r.violation = std::max(r.violation, rec.n0_avg_exact_j[i + 1] - model.limits[i]);
        rows[idx] = r;
    });

    std::string csv = "value,seed,final_j0,final_gap,violation\n";
    for (const auto& r : rows)
        csv += crpo::format_double(r.value) + "," + std::to_string(r.seed) + "," +
               crpo::format_double(r.final_j0) + "," + crpo::format_double(r.final_gap) + "," +
               crpo::format_double(r.violation) + "\n";
    fs::create_directories(out_dir);
    crpo::write_file_atomic(fs::path(out_dir) / "sweep.csv", csv);

    json summary;
    summary["param"] = param;
    if (param == "eta") {
        // robustness statistic: spread of the per-value median final J_0
        std::vector<double> medians;
        for (std::size_t vi = 0; vi < values.size(); ++vi) {
            std::vector<double> j0s;
            for (std::size_t si = 0; si < seeds.size(); ++si)
                j0s.push_back(rows[vi * seeds.size() + si].final_j0);
            std::sort(j0s.begin(), j0s.end());
            medians.push_back(j0s.size() % 2 ? j0s[j0s.size() / 2]
                                             : 0.5 * (j0s[j0s.size() / 2 - 1] + j0s[j0s.size() / 2]));
        }
        const auto [mn, mx] = std::minmax_element(medians.begin(), medians.end());
        summary["eta_robustness_spread"] = *mx - *mn;
    }
    if (param == "beta_dual") {
        double best_value = values.front(), best_gap = 1e300;
        for (std::size_t vi = 0; vi < values.size(); ++vi) {
            double gap_sum = 0.0;
            for (std::size_t si = 0; si < seeds.size(); ++si)
                gap_sum += rows[vi * seeds.size() + si].final_gap;
            if (gap_sum < best_gap) {
                best_gap = gap_sum;
                best_value = values[vi];
            }
        }
        summary["best_value"] = best_value;
    }
    crpo::write_file_atomic(fs::path(out_dir) / "sweep_summary.json", summary.dump(2) + "\n");
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"constrained-MDP policy optimization experiments"};
    app.require_subcommand(1);

    std::string model_path, config_path, out_dir, algo = "crpo";
    std::string crpo_cfg_path, pdo_cfg_path, seeds_text = "0,1", param, values_text;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    auto* solve = app.add_subcommand("solve", "solve the occupancy-measure LP for a model");
    solve->add_option("--model", model_path, "model JSON path")->required();
    solve->add_option("--out", out_dir, "output directory");

    auto* run = app.add_subcommand("run", "run one seeded experiment");
    run->add_option("--algo", algo, "crpo | pdo | npg")
        ->check(CLI::IsMember({"crpo", "pdo", "npg"}));
    run->add_option("--model", model_path, "model JSON path")->required();
    run->add_option("--config", config_path, "config JSON path")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--seed", seed, "RNG seed");

    auto* compare = app.add_subcommand("compare", "compare crpo vs pdo across seeds");
    compare->add_option("--model", model_path)->required();
    compare->add_option("--crpo-config", crpo_cfg_path)->required();
    compare->add_option("--pdo-config", pdo_cfg_path)->required();
    compare->add_option("--seeds", seeds_text, "comma-separated seed list");
    compare->add_option("--out", out_dir)->required();
    compare->add_option("--jobs", jobs, "parallel runs");

    auto* sweep = app.add_subcommand("sweep", "sweep one hyperparameter");
    sweep->add_option("--param", param, "eta | alpha | beta_dual")
        ->check(CLI::IsMember({"eta", "alpha", "beta_dual"}))
        ->required();
    sweep->add_option("--values", values_text, "comma-separated values")->required();
    sweep->add_option("--model", model_path)->required();
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--seeds", seeds_text, "comma-separated seed list");
    sweep->add_option("--out", out_dir)->required();
    sweep->add_option("--jobs", jobs, "parallel runs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (solve->parsed()) return cmd_solve(model_path, out_dir);
        if (run->parsed()) return cmd_run(algo, model_path, config_path, out_dir, seed);
        if (compare->parsed())
            return cmd_compare(model_path, crpo_cfg_path, pdo_cfg_path, seeds_text, out_dir, jobs);
        if (sweep->parsed())
            return cmd_sweep(param, values_text, model_path, config_path, seeds_text, out_dir,
                             jobs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
