// mixlab: config-driven experiment runner for the block/mixing/FCLT
// verification suites.
//
// Exit codes: 0 success (all checks pass), 2 precondition or hypothesis
// failure, 3 tolerance failure, 4 internal invariant breach.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "mixlab/blocks.hpp"
#include "mixlab/config.hpp"
#include "mixlab/errors.hpp"
#include "mixlab/fclt.hpp"
#include "mixlab/io.hpp"
#include "mixlab/mixing.hpp"
#include "mixlab/oracle.hpp"
#include "mixlab/parallel.hpp"
#include "mixlab/subexp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mixlab;

namespace {

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
};

ExperimentConfig load_config(const CliOptions& opt) {
    ExperimentConfig cfg = ExperimentConfig::load(opt.config_path);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.workers) cfg.workers = *opt.workers;
    if (opt.out) cfg.out_dir = *opt.out;
    fs::create_directories(cfg.out_dir);
    return cfg;
}

unsigned workers_of(const ExperimentConfig& cfg) {
    return cfg.workers == 0 ? default_workers() : cfg.workers;
}

std::string fd(double v) { return format_double(v); }

json stamp(json j, const ExperimentConfig& cfg) {
    char hash_hex[24];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash));
    j["config_hash"] = hash_hex;
    j["seed"] = cfg.seed;
    j["schema"] = 1;
    return j;
}

std::vector<std::int64_t> profile_lags_for(const BlockPartition& part) {
    // lags needed by the rho-sum hypothesis: [a_j] per block, capped; the
    // lookup falls back to the nearest smaller lag, which over-estimates
    std::int64_t max_lag = 1;
    for (const auto& b : part.blocks)
        max_lag = std::max(max_lag, static_cast<std::int64_t>(b.a_j));
    max_lag = std::min<std::int64_t>(max_lag, 64);
    max_lag = std::min(max_lag, part.n - 1);
    std::vector<std::int64_t> lags;
    for (std::int64_t k = 1; k <= max_lag; ++k) lags.push_back(k);
    return lags;
}

json regularity_to_json(const RegularityReport& rep) {
    json j;
    j["scheme"] = rep.scheme == BlockScheme::Rho ? "rho" : "projective";
    j["seed"] = rep.seed;
    j["pair_budget"] = rep.pair_budget;
    j["pairs_evaluated"] = rep.samples.size();
    j["x_ratio"] = {{"min", rep.min_x_ratio},
                    {"max", rep.max_x_ratio},
                    {"lo", rep.x_lo},
                    {"hi", rep.x_hi},
                    {"pass", rep.x_pass}};
    j["y_ratio"] = {{"min", rep.min_y_ratio},
                    {"max", rep.max_y_ratio},
                    {"lo", rep.yz_lo},
                    {"hi", rep.yz_hi},
                    {"pass", rep.y_pass}};
    j["z_ratio"] = {{"min", rep.min_z_ratio},
                    {"max", rep.max_z_ratio},
                    {"lo", rep.yz_lo},
                    {"hi", rep.yz_hi},
                    {"pass", rep.z_pass}};
    j["xy_dev"] = {{"max", rep.max_xy_dev},
                   {"bound", rep.dev_bound},
                   {"pass", rep.dev_pass}};
    auto witness = [](const PairRatio& p) {
        return json{{"s1", p.s1},     {"s2", p.s2},
                    {"x", p.x_ratio}, {"y", p.y_ratio},
                    {"z", p.z_ratio}, {"dev", p.xy_dev}};
    };
    if (!rep.x_pass) j["x_ratio"]["witness"] = witness(rep.worst_x);
    if (!rep.y_pass) j["y_ratio"]["witness"] = witness(rep.worst_y);
    if (!rep.z_pass) j["z_ratio"]["witness"] = witness(rep.worst_z);
    if (!rep.dev_pass) j["xy_dev"]["witness"] = witness(rep.worst_dev);
    j["sandwich_ok"] = rep.sandwich_ok;
    j["gaps_ok"] = rep.gaps_ok;
    j["z_bound"] = {{"as_written", rep.z_bound_as_written},
                    {"ceil", rep.z_bound_ceil},
                    {"total", rep.z_bound_total}};
    j["sigma_ratio"] = rep.sigma_ratio;
    if (rep.scheme == BlockScheme::Projective) {
        j["hypothesis_a_gt_r"] = rep.proj_a_ok;
        j["hypothesis_aeps_gt_r"] = rep.proj_aeps_ok;
    }
    j["all_pass"] = rep.all_pass();
    return j;
}

void write_partition_csv(const fs::path& path, const BlockPartition& part,
                         std::uint64_t hash, std::uint64_t seed) {
    CsvWriter csv(path, hash, seed);
    csv.header({"j", "b_start", "b_end", "gap_len", "Y_norm", "Z_norm",
                "X_norm"});
    for (const auto& b : part.blocks)
        csv.row({std::to_string(b.j), std::to_string(b.block.lo),
                 std::to_string(b.block.hi), std::to_string(b.gap.size()),
                 fd(b.y_norm), fd(b.z_norm), fd(b.x_norm)});
}

// returns the exit code contribution of the hypothesis checks (0 or 2)
int check_rho_hypotheses(const ExperimentConfig& cfg,
                         const BlockPartition& part, json& report) {
    const double min_a = min_A_for_perturbation(0.5);
    report["min_A_for_half"] = min_a;
    if (cfg.blocks->A < min_a)
        std::cerr << "warning: A = " << cfg.blocks->A
                  << " < min_A_for_perturbation(1/2) = " << min_a
                  << "; E(A) bound exceeds 1/2\n";
    MixingProfile profile =
        coefficient_profile(*cfg.model, profile_lags_for(part));
    const double rho_sum = rho_sum_for_partition(part, profile);
    report["rho_sum"] = rho_sum;
    report["rho_sum_ok"] = rho_sum <= 0.25;
    if (rho_sum > 0.25) {
        char msg[128];
        std::snprintf(msg, sizeof(msg),
                      "hypothesis violated: sum_j rho(a_j) = %.4g > 1/4",
                      rho_sum);
        if (cfg.blocks->enforce_hypotheses) {
            throw PreconditionError(msg);
        }
        std::cerr << "warning: " << msg << "\n";
    }
    return 0;
}

int cmd_blocks(const ExperimentConfig& cfg) {
    if (!cfg.model) throw PreconditionError("blocks command needs a model");
    if (!cfg.blocks && !cfg.projective)
        throw PreconditionError(
            "blocks command needs a 'blocks' (+ 'subexp') or 'projective' "
            "section");
    CovarianceOracle oracle(*cfg.model);
    json report;
    BlockPartition part;
    if (cfg.blocks) {
        if (!cfg.subexp)
            throw PreconditionError("rho-scheme blocks need a 'subexp' section");
        part = construct_rho_blocks(oracle, *cfg.subexp, cfg.blocks->A);
        check_rho_hypotheses(cfg, part, report);
    } else {
        part = construct_projective_blocks(oracle, cfg.projective->A,
                                           cfg.projective->eps,
                                           cfg.projective->r);
        const auto delta = delta_coefficient(
            *cfg.model, cfg.projective->r,
            default_delta_ks(cfg.model->length(), cfg.projective->r));
        report["delta_at_r"] = delta.value;
        report["delta_provenance"] = provenance_name(delta.provenance);
        if (!(delta.value < 0.25)) {
            char msg[128];
            std::snprintf(msg, sizeof(msg),
                          "hypothesis violated: delta_n(r) = %.4g >= 1/4",
                          delta.value);
            throw PreconditionError(msg);
        }
        if (!(cfg.projective->A > static_cast<double>(cfg.projective->r)) ||
            !(cfg.projective->A * cfg.projective->eps >
              static_cast<double>(cfg.projective->r)))
            std::cerr << "warning: gap hypotheses A > r, A*eps > r do not "
                         "both hold; proposition bounds may be vacuous\n";
    }
    const std::int64_t budget = cfg.blocks ? cfg.blocks->pair_budget : 500;
    const auto reg = verify_regularity(part, oracle, budget, cfg.seed);
    report["regularity"] = regularity_to_json(reg);
    report["u_n"] = part.u();
    report["final_block_unconstrained"] = part.final_block_unconstrained;

    write_partition_csv(cfg.out_dir / "partition.csv", part, cfg.config_hash,
                        cfg.seed);
    std::ofstream(cfg.out_dir / "regularity.json")
        << stamp(report, cfg).dump(2) << "\n";
    for (const auto& line :
         {std::pair{"X ratio in [5/24, 7/2]", reg.x_pass},
          std::pair{"Y ratio in [1/2, 3/2]", reg.y_pass},
          std::pair{"Z ratio in [1/2, 3/2]", reg.z_pass},
          std::pair{"|Var(SX)/Var(SY) - 1| <= bound", reg.dev_pass}})
        std::cout << (line.second ? "[pass] " : "[FAIL] ") << line.first
                  << "\n";
    return reg.all_pass() ? 0 : 3;
}

int cmd_mixing(const ExperimentConfig& cfg) {
    if (!cfg.model) throw PreconditionError("mixing command needs a model");
    std::vector<std::int64_t> lags = cfg.mixing.lags;
    if (lags.empty())
        for (std::int64_t k = 1;
             k <= std::min(cfg.mixing.max_lag, cfg.model->length() - 1); ++k)
            lags.push_back(k);
    ProfileOptions opts;
    opts.scope = cfg.mixing.single_coordinate
                     ? ProfileScope::SingleCoordinate
                     : ProfileScope::FullPast;
    opts.window = cfg.mixing.window;
    const auto profile = coefficient_profile(*cfg.model, lags, opts);
    validate_profile_inequalities(profile);
    CsvWriter csv(cfg.out_dir / "profile.csv", cfg.config_hash, cfg.seed);
    csv.header({"lag", "rho", "phi", "alpha", "provenance"});
    for (const auto& e : profile.entries)
        csv.row({std::to_string(e.lag), fd(e.rho), fd(e.phi), fd(e.alpha),
                 provenance_name(e.provenance)});
    std::cout << "profile written (" << profile.entries.size() << " lags)\n";
    return 0;
}

int cmd_fclt(const ExperimentConfig& cfg) {
    if (!cfg.model) throw PreconditionError("fclt command needs a model");
    if (cfg.fclt.reps < 1000)
        throw PreconditionError(
            "fclt refuses reps < 1000 (underpowered statistics)");
    const unsigned workers = workers_of(cfg);
    CovarianceOracle oracle(*cfg.model);
    const auto grid = step_grid(cfg.fclt.grid_step);
    const auto tc = time_change(oracle, grid);
    const auto ens =
        build_paths(*cfg.model, tc, cfg.fclt.reps, cfg.seed, workers);
    write_ensemble(cfg.out_dir / "ensemble.bin", ens, cfg.config_hash);
    const auto stats = bm_statistics(ens);

    {
        CsvWriter csv(cfg.out_dir / "bm_cov.csv", cfg.config_hash, cfg.seed);
        std::vector<std::string> head{"t"};
        for (double t : grid) head.push_back(fd(t));
        csv.header(head);
        for (std::size_t a = 0; a < grid.size(); ++a) {
            std::vector<std::string> row{fd(grid[a])};
            for (std::size_t b = 0; b < grid.size(); ++b)
                row.push_back(fd(stats.cov[a][b]));
            csv.row(row);
        }
    }

    json summary;
    summary["ks_at_1"] = stats.ks_at_1;
    summary["max_cov_dev"] = stats.max_cov_dev;
    summary["increment_corr"] = stats.increment_corr;
    summary["reps"] = ens.reps;
    summary["n"] = ens.n;
    summary["model"] = ens.model_id;

    // Lindeberg rows need a partition; run them when the config carries one
    if (cfg.subexp && cfg.blocks) {
        const auto part =
            construct_rho_blocks(oracle, *cfg.subexp, cfg.blocks->A);
        const auto lin =
            lindeberg_max_report(*cfg.model, part, cfg.fclt.eps_list,
                                 cfg.fclt.reps, cfg.seed + 1, workers);
        CsvWriter csv(cfg.out_dir / "lindeberg.csv", cfg.config_hash,
                      cfg.seed);
        csv.header({"eps", "L2", "L2_se", "L1", "L1_se"});
        for (const auto& row : lin.rows)
            csv.row({fd(row.eps), fd(row.l2), fd(row.l2_se), fd(row.l1),
                     fd(row.l1_se)});
        const auto pb = path_block_closeness(*cfg.model, part, tc,
                                             cfg.fclt.reps, cfg.seed + 2,
                                             workers);
        summary["path_block_violations"] = pb.violations;
        summary["path_block_max_ratio"] = pb.max_gap_ratio;
        summary["path_block_literal_violations"] =
            pb.literal_crossing_violations;

        // maximal moment inequality over three spans, plus condition (C)
        const std::int64_t n = cfg.model->length();
        const std::vector<Interval> ranges{
            {1, std::max<std::int64_t>(2, n / 100)},
            {std::max<std::int64_t>(1, n / 20), std::max<std::int64_t>(2, n / 2)},
            {1, n}};
        const auto mi =
            maximal_inequality_check(*cfg.model, cfg.fclt.p, ranges,
                                     cfg.fclt.m_n, cfg.fclt.reps,
                                     cfg.seed + 3, workers);
        CsvWriter mcsv(cfg.out_dir / "maximal_ineq.csv", cfg.config_hash,
                       cfg.seed);
        mcsv.header({"lo", "hi", "lhs", "max_xi_p", "max_s2", "quotient"});
        for (const auto& rc : mi.ranges)
            mcsv.row({std::to_string(rc.range.lo), std::to_string(rc.range.hi),
                      fd(rc.lhs), fd(rc.max_xi_p), fd(rc.max_s2),
                      fd(rc.quotient)});
        summary["maximal_ineq_fitted_const"] = mi.fitted_const;

        const auto norms = estimate_block_max_norms(
            *cfg.model, part, cfg.fclt.p, cfg.fclt.reps, cfg.seed + 4,
            workers);
        summary["condition_c_ratio"] =
            condition_c_ratio(part, cfg.fclt.p, norms);
    }
    std::ofstream(cfg.out_dir / "bm_summary.json")
        << stamp(summary, cfg).dump(2) << "\n";

    std::printf("KS(W(1)) = %.4f (tol %.4f)\n", stats.ks_at_1,
                cfg.fclt.ks_tol);
    std::printf("max |cov - min(s,t)| = %.4f (tol %.4f)\n", stats.max_cov_dev,
                cfg.fclt.cov_tol);
    if (stats.ks_at_1 > cfg.fclt.ks_tol) {
        std::cerr << "tolerance failure: KS distance " << stats.ks_at_1
                  << " > " << cfg.fclt.ks_tol << "\n";
        return 3;
    }
    if (stats.max_cov_dev > cfg.fclt.cov_tol) {
        std::cerr << "tolerance failure: covariance deviation "
                  << stats.max_cov_dev << " > " << cfg.fclt.cov_tol << "\n";
        return 3;
    }
    return 0;
}

int cmd_subexp_check(const ExperimentConfig& cfg) {
    if (!cfg.subexp)
        throw PreconditionError("subexp-check needs a 'subexp' section");
    const auto& spec = *cfg.subexp;
    const auto rep = check_def1(spec, default_def1_grid(spec));
    json j;
    j["family"] = spec.describe();
    j["cond1"] = rep.cond1;
    j["cond2"] = rep.cond2;
    j["cond3"] = rep.cond3;
    j["fitted_C1"] = rep.fitted_c1;
    j["fitted_C2"] = rep.fitted_c2;
    std::ofstream(cfg.out_dir / "subexp_check.json")
        << stamp(j, cfg).dump(2) << "\n";

    CsvWriter csv(cfg.out_dir / "ratio_lemma.csv", cfg.config_hash, cfg.seed);
    csv.header({"p", "u", "ratio", "bound_unit", "quotient"});
    for (double p : {3.0, 4.0})
        for (std::int64_t u : {100, 1000, 10000, 100000}) {
            const auto r = ratio_lemma(spec, p, u);
            csv.row({fd(p), std::to_string(u), fd(r.ratio), fd(r.bound_unit),
                     fd(r.quotient())});
        }
    std::cout << "cond1=" << rep.cond1 << " cond2=" << rep.cond2
              << " cond3=" << rep.cond3 << " C1=" << rep.fitted_c1
              << " C2=" << rep.fitted_c2 << "\n";
    return rep.all() ? 0 : 3;
}

int cmd_delta(const ExperimentConfig& cfg) {
    if (!cfg.model) throw PreconditionError("delta command needs a model");
    const std::int64_t n = cfg.model->length();
    CsvWriter csv(cfg.out_dir / "delta.csv", cfg.config_hash, cfg.seed);
    csv.header({"m", "delta", "provenance", "alpha_sum_bound", "fitted_C_q"});
    std::vector<std::int64_t> lags;
    for (std::int64_t k = 1; k <= std::min<std::int64_t>(cfg.mixing.max_lag,
                                                         n - 1);
         ++k)
        lags.push_back(k);
    const auto profile = coefficient_profile(*cfg.model, lags);
    for (std::int64_t m = cfg.delta.m;
         m <= std::min<std::int64_t>(cfg.delta.m + 4, n - 1); ++m) {
        const auto d = delta_coefficient(*cfg.model, m, default_delta_ks(n, m));
        std::string bound_s = "";
        std::string cq_s = "";
        if (m <= lags.back()) {
            const auto b = alpha_sum_bound(profile, m, cfg.delta.q,
                                           cfg.delta.c_q, cfg.delta.a_q);
            bound_s = fd(b.bound);
            cq_s = b.raw_sum > 0.0
                       ? fd(d.value / (cfg.delta.a_q * b.raw_sum))
                       : "0";
        }
        csv.row({std::to_string(m), fd(d.value),
                 provenance_name(d.provenance), bound_s, cq_s});
    }
    std::cout << "delta table written\n";
    return 0;
}

int cmd_report(const ExperimentConfig& cfg) {
    json doc;
    if (cfg.subexp) {
        const auto rep = check_def1(*cfg.subexp, default_def1_grid(*cfg.subexp));
        doc["subexp"] = {{"family", cfg.subexp->describe()},
                         {"cond1", rep.cond1},
                         {"cond2", rep.cond2},
                         {"cond3", rep.cond3},
                         {"C1", rep.fitted_c1},
                         {"C2", rep.fitted_c2}};
    }
    if (cfg.model) {
        CovarianceOracle oracle(*cfg.model);
        doc["model"] = cfg.model->describe();
        doc["sigma_n"] = oracle.range_norm(1, cfg.model->length());
        if (cfg.blocks && cfg.subexp) {
            const auto part =
                construct_rho_blocks(oracle, *cfg.subexp, cfg.blocks->A);
            const auto reg = verify_regularity(part, oracle,
                                               cfg.blocks->pair_budget,
                                               cfg.seed);
            doc["blocks"] = regularity_to_json(reg);
        }
        if (cfg.projective) {
            const auto part = construct_projective_blocks(
                oracle, cfg.projective->A, cfg.projective->eps,
                cfg.projective->r);
            const auto reg = verify_regularity(part, oracle, 500, cfg.seed);
            doc["projective"] = regularity_to_json(reg);
        }
    }
    std::ofstream(cfg.out_dir / "report.json")
        << stamp(doc, cfg).dump(2) << "\n";
    std::cout << "report written\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "mixlab: regular-block construction, mixing coefficients and "
        "Brownian-limit checks for nonstationary triangular arrays"};
    app.require_subcommand(1);

    CliOptions opt;
    std::string command;
    for (const char* name :
         {"blocks", "fclt", "mixing", "subexp-check", "delta", "report"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config_path, "config JSON path")
            ->required();
        sub->add_option_function<std::uint64_t>(
            "--seed", [&opt](std::uint64_t v) { opt.seed = v; },
            "override the config seed");
        sub->add_option_function<unsigned>(
            "--workers", [&opt](unsigned v) { opt.workers = v; },
            "worker thread count");
        sub->add_option_function<std::string>(
            "--out", [&opt](const std::string& v) { opt.out = v; },
            "output directory");
        sub->callback([&command, name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const ExperimentConfig cfg = load_config(opt);
        if (command == "blocks") return cmd_blocks(cfg);
        if (command == "fclt") return cmd_fclt(cfg);
        if (command == "mixing") return cmd_mixing(cfg);
        if (command == "subexp-check") return cmd_subexp_check(cfg);
        if (command == "delta") return cmd_delta(cfg);
        if (command == "report") return cmd_report(cfg);
        std::cerr << "unknown command\n";
        return 2;
    } catch (const InvariantError& e) {
        std::cerr << "internal invariant breach: " << e.what() << "\n";
        return 4;
    } catch (const ToleranceError& e) {
        std::cerr << "tolerance failure: " << e.what() << "\n";
        return 3;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
