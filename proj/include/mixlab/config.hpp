#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mixlab/models.hpp"
#include "mixlab/subexp.hpp"

namespace mixlab {

struct BlocksConfig {
    double A = 8.0;
    std::int64_t pair_budget = 500;
    bool enforce_hypotheses = true;
};

struct ProjectiveConfig {
    double A = 9.0;
    double eps = 0.09;
    std::int64_t r = 2;
};

struct MixingConfig {
    std::vector<std::int64_t> lags;  // defaults to 1..max_lag
    std::int64_t max_lag = 10;
    bool single_coordinate = false;
    int window = 1;
};

struct FcltConfig {
    double grid_step = 0.05;
    std::int64_t reps = 2000;
    std::vector<double> eps_list{0.05, 0.1, 0.2};
    double p = 4.0;
    std::int64_t m_n = 1;
    double ks_tol = 0.05;
    double cov_tol = 0.06;
};

struct DeltaConfig {
    std::int64_t m = 1;
    double q = 4.0;
    double c_q = 4.0;
    double a_q = 1.0;
};

// Parsed and validated experiment configuration. Every numeric parameter is
// checked against the owning module's preconditions before any work starts;
// model construction itself enforces the distribution invariants.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    unsigned workers = 0;  // 0 = library default
    std::filesystem::path out_dir = "out";
    std::uint64_t config_hash = 0;

    std::unique_ptr<ArrayModel> model;
    std::optional<SubexpSpec> subexp;
    std::optional<BlocksConfig> blocks;
    std::optional<ProjectiveConfig> projective;
    MixingConfig mixing;
    FcltConfig fclt;
    DeltaConfig delta;

    static ExperimentConfig load(const std::filesystem::path& path);
    static ExperimentConfig parse(const std::string& json_text);
};

}  // namespace mixlab
