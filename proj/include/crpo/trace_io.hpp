#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crpo/crpo.hpp"

namespace crpo {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Write-temp-then-rename, so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

/// Flat per-iteration trace:
/// t,target,jbar_0..jbar_p,in_n0,exact_j_0..exact_j_p[,lambda_1..lambda_p]
inline std::string trace_to_csv(const CrpoRunRecord& rec) {
    if (rec.entries.empty()) return "t,target,in_n0\n";
    const std::size_t nch = rec.entries.front().exact_j.size();
    const bool has_lambda = !rec.entries.front().lambda.empty();

    std::string out = "t,target";
    for (std::size_t i = 0; i < nch; ++i) out += ",jbar_" + std::to_string(i);
    out += ",in_n0";
    for (std::size_t i = 0; i < nch; ++i) out += ",exact_j_" + std::to_string(i);
    if (has_lambda)
        for (std::size_t i = 1; i < nch; ++i) out += ",lambda_" + std::to_string(i);
    out += '\n';

    for (const auto& e : rec.entries) {
        out += std::to_string(e.t);
        out += ',';
        out += e.target.objective ? "objective"
                                  : "constraint(" + std::to_string(e.target.constraint_index) + ")";
        for (double v : e.jbar) out += ',' + format_double(v);
        out += e.in_n0 ? ",1" : ",0";
        for (double v : e.exact_j) out += ',' + format_double(v);
        for (double v : e.lambda) out += ',' + format_double(v);
        out += '\n';
    }
    return out;
}

inline nlohmann::json trace_to_json(const CrpoRunRecord& rec) {
    nlohmann::json iters = nlohmann::json::array();
    for (const auto& e : rec.entries) {
        nlohmann::json it;
        it["t"] = e.t;
        it["target"] = e.target.objective
                           ? "objective"
                           : "constraint(" + std::to_string(e.target.constraint_index) + ")";
        it["jbar"] = e.jbar;
        it["in_n0"] = e.in_n0;
        it["exact_j"] = e.exact_j;
        if (!e.lambda.empty()) it["lambda"] = e.lambda;
        iters.push_back(std::move(it));
    }
    nlohmann::json j;
    j["iterations"] = std::move(iters);
    j["n0"] = rec.n0;
    j["n0_avg_exact_j"] = rec.n0_avg_exact_j;
    j["empty_n0"] = rec.empty_n0;
    if (rec.selected) j["selected"] = *rec.selected;
    return j;
}

inline nlohmann::json summary_json(const CrpoRunRecord& rec, const std::vector<double>& limits,
                                   std::uint64_t seed) {
    nlohmann::json j;
    j["final_avg_j"] = rec.n0_avg_exact_j;
    j["n0_size"] = rec.n0.size();
    j["first_feasible_iter"] = first_sustained_feasible(rec, limits);
    j["seed"] = seed;
    return j;
}

}  // namespace crpo
