// Acceptance suite: one line per criterion, exit code = number of failures.
// Each criterion pins its tolerances in code; nothing is calibrated at run
// time. The CLI binary under test is argv[1] (used by the determinism
// criterion).

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mixlab/blocks.hpp"
#include "mixlab/fclt.hpp"
#include "mixlab/mixing.hpp"
#include "mixlab/models.hpp"
#include "mixlab/oracle.hpp"
#include "mixlab/parallel.hpp"
#include "mixlab/subexp.hpp"

using namespace mixlab;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, bool pass, const std::string& what,
            const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", idx,
                what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

MDepArrayModel fleet_iid(std::int64_t n) {
    return MDepArrayModel::iid(n, InnovationLaw::Gaussian);
}

MDepArrayModel fleet_mdep(std::int64_t n) {
    const double c = 1.0 / std::sqrt(2.0);
    return MDepArrayModel(n, 1, {{c, c}}, InnovationLaw::Gaussian);
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

// ---- criterion 1: rho-scheme proposition on the fleet at n = 1e5 ----------
void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::int64_t n = 100000;
    const auto iid = fleet_iid(n);
    const auto md = fleet_mdep(n);
    const auto chain = MarkovArrayModel::two_state(n, 0.3);
    const ArrayModel* fleet[] = {&iid, &md, &chain};
    const double e8 = e_perturbation(8.0);
    bool pass = true;
    double worst_dev = 0.0;
    std::string why;
    for (const ArrayModel* m : fleet) {
        CovarianceOracle oracle(*m);
        const auto part =
            construct_rho_blocks(oracle, SubexpSpec::power(1.0), 8.0);
        const auto rep = verify_regularity(part, oracle, 500, 1001);
        worst_dev = std::max(worst_dev, rep.max_xy_dev);
        if (!rep.all_pass() || rep.max_xy_dev > e8) {
            pass = false;
            why = m->describe();
        }
    }
    const double secs = elapsed_s(t0);
    if (secs > 300.0) pass = false;
    report(1, pass, "rho-scheme proposition constants on the fleet",
           fmt("max |Var(SX)/Var(SY)-1| = %.4f <= E(8) = %.4f, %.1fs%s",
               worst_dev, e8, secs, why.empty() ? "" : (" FAIL@" + why).c_str()));
}

// ---- criterion 2: projective proposition for MDep(m0=1) -------------------
void criterion2() {
    const std::int64_t n = 100000;
    const auto md = fleet_mdep(n);
    const auto delta = delta_coefficient(md, 2, default_delta_ks(n, 2));
    const double eps_max = max_eps_for_perturbation(0.5);
    CovarianceOracle oracle(md);
    const auto part = construct_projective_blocks(oracle, 9.0, 0.09, 2);
    const auto rep = verify_regularity(part, oracle, 500, 1002);
    const bool pass = delta.value == 0.0 && delta.value < 0.25 &&
                      0.09 <= eps_max && rep.all_pass() &&
                      rep.max_xy_dev <= d_perturbation(0.09);
    report(2, pass, "projective proposition for MDep(m0=1), r=2",
           fmt("delta_n(2) = %g, eps 0.09 <= %.6f, max dev %.4f <= D(0.09) = "
               "%.4f, ratios %s",
               delta.value, eps_max, rep.max_xy_dev, d_perturbation(0.09),
               rep.all_pass() ? "in range" : "OUT OF RANGE"));
}

// ---- criterion 3: root constants -------------------------------------------
void criterion3() {
    const double a = min_A_for_perturbation(0.5);
    const double e = max_eps_for_perturbation(0.5);
    const bool pass =
        std::abs(a - 7.7068) <= 1e-3 && std::abs(e - 0.091752) <= 1e-4;
    report(3, pass, "perturbation root constants",
           fmt("min_A(1/2) = %.6f, max_eps(1/2) = %.7f", a, e));
}

// ---- criterion 4: mixing oracle equivalence --------------------------------
void criterion4() {
    const auto chain = MarkovArrayModel::two_state(8, 0.3);
    bool pass = true;
    double worst = 0.0;
    for (std::int64_t k = 1; k <= 5; ++k) {
        const auto prof = coefficient_profile(chain, {k});
        const double lam = std::pow(0.4, static_cast<double>(k));
        const auto& e = prof.entries.front();
        // exhaustive event enumeration over all subset pairs
        const auto joint = markov_boundary_joint(chain, 1, k, false);
        double brute_phi = 0.0, brute_alpha = 0.0, brute_rho = 0.0;
        for (std::uint32_t A = 1; A < 4; ++A)
            for (std::uint32_t B = 1; B < 4; ++B) {
                double pa = 0, pb = 0, pab = 0;
                for (std::size_t a = 0; a < 2; ++a)
                    for (std::size_t b = 0; b < 2; ++b) {
                        const double p = joint.prob(a, b);
                        if (A >> a & 1u) pa += p;
                        if (B >> b & 1u) pb += p;
                        if ((A >> a & 1u) && (B >> b & 1u)) pab += p;
                    }
                brute_phi = std::max(brute_phi, std::abs(pab / pa - pb));
                brute_alpha = std::max(brute_alpha, std::abs(pab - pa * pb));
            }
        // +/-1 function maximization for the maximal correlation
        for (int f0 = -1; f0 <= 1; f0 += 2)
            for (int g0 = -1; g0 <= 1; g0 += 2) {
                double ef = 0, eg = 0, efg = 0;
                for (std::size_t a = 0; a < 2; ++a)
                    for (std::size_t b = 0; b < 2; ++b) {
                        const double p = joint.prob(a, b);
                        const double f = a == 0 ? f0 : -f0;
                        const double g = b == 0 ? g0 : -g0;
                        ef += p * f;
                        eg += p * g;
                        efg += p * f * g;
                    }
                const double vf = 1.0 - ef * ef, vg = 1.0 - eg * eg;
                if (vf > 1e-12 && vg > 1e-12)
                    brute_rho = std::max(
                        brute_rho, std::abs(efg - ef * eg) / std::sqrt(vf * vg));
            }
        worst = std::max(worst, std::abs(e.rho - lam));
        pass &= std::abs(e.rho - lam) <= 1e-10;
        pass &= std::abs(e.rho - brute_rho) <= 1e-10;
        pass &= std::abs(e.phi - brute_phi) <= 1e-12;
        pass &= std::abs(e.alpha - brute_alpha) <= 1e-12;
        pass &= e.rho <= 2.0 * std::sqrt(e.phi) + 1e-12;
    }
    report(4, pass, "mixing oracle equivalence on the two-state chain",
           fmt("max |rho(k) - 0.4^k| = %.2e over k <= 5; phi/alpha match "
               "enumeration to 1e-12",
               worst));
}

// ---- criterion 5: Brownian limit of the chain + negative control -----------
void criterion5() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto chain = MarkovArrayModel::two_state(10000, 0.3);
    CovarianceOracle oracle(chain);
    const auto tc = time_change(oracle, step_grid(0.05));
    const auto ens = build_paths(chain, tc, 2000, 5, default_workers());
    const auto st = bm_statistics(ens);

    // degenerate fully-correlated control: xi_k = eta_1 for all k
    const std::int64_t nc = 200;
    std::vector<std::vector<double>> coeffs;
    for (std::int64_t k = 1; k <= nc; ++k) {
        std::vector<double> row(static_cast<std::size_t>(nc), 0.0);
        row[static_cast<std::size_t>(k - 1)] = 1.0;
        coeffs.push_back(std::move(row));
    }
    const MDepArrayModel degen(nc, static_cast<int>(nc - 1), std::move(coeffs),
                               InnovationLaw::Gaussian);
    CovarianceOracle oc(degen);
    const auto tcc = time_change(oc, step_grid(0.05));
    const auto ensc = build_paths(degen, tcc, 1500, 6, default_workers());
    const auto stc = bm_statistics(ensc);

    const double secs = elapsed_s(t0);
    const bool pass = st.ks_at_1 <= 0.05 && st.max_cov_dev <= 0.06 &&
                      stc.max_cov_dev > 0.06 && secs <= 600.0;
    report(5, pass, "W_n Brownian limit (chain) + negative control",
           fmt("KS = %.4f <= 0.05, cov dev = %.4f <= 0.06; control dev = "
               "%.4f > 0.06; %.1fs",
               st.ks_at_1, st.max_cov_dev, stc.max_cov_dev, secs));
}

// ---- criterion 6: ratio lemma boundedness across families ------------------
void criterion6() {
    const SubexpSpec specs[] = {
        SubexpSpec::power(1.0), SubexpSpec::exp_log_pow(2.0),
        SubexpSpec::stretched(1.0, 0.5), SubexpSpec::iterated_log(1)};
    bool pass = true;
    double worst_spread = 0.0;
    for (const auto& spec : specs)
        for (double p : {3.0, 4.0}) {
            double lo = 1e300, hi = 0.0;
            for (std::int64_t u : {100, 1000, 10000, 100000}) {
                const double q = ratio_lemma(spec, p, u).quotient();
                lo = std::min(lo, q);
                hi = std::max(hi, q);
            }
            worst_spread = std::max(worst_spread, hi / lo);
            if (hi / lo > 3.0) pass = false;
        }
    report(6, pass, "ratio lemma quotient bounded across u = 1e2..1e5",
           fmt("worst spread factor %.3f <= 3", worst_spread));
}

// ---- criterion 7: maximal-Lindeberg trend in n ------------------------------
void criterion7() {
    const std::vector<double> eps{0.1};
    double l2[2], se[2];
    int i = 0;
    for (std::int64_t n : {1000, 10000}) {
        const auto iid = fleet_iid(n);
        CovarianceOracle oracle(iid);
        const auto part =
            construct_rho_blocks(oracle, SubexpSpec::power(1.0), 8.0);
        const auto rep = lindeberg_max_report(iid, part, eps, 5000, 707,
                                              default_workers());
        l2[i] = rep.rows[0].l2;
        se[i] = rep.rows[0].l2_se;
        ++i;
    }
    const bool factor2 = l2[1] <= 0.5 * l2[0];
    const bool separated = l2[1] + 2.0 * se[1] < l2[0] - 2.0 * se[0];
    report(7, factor2 && separated,
           "maximal-Lindeberg L2(0.1) halves from n = 1e3 to 1e4",
           fmt("L2 = %.4f +- %.4f at 1e3 vs %.4f +- %.4f at 1e4 (ratio "
               "%.3f; needs <= 0.5)",
               l2[0], se[0], l2[1], se[1], l2[1] / l2[0]));
}

// ---- criterion 8: pathwise block closeness ---------------------------------
void criterion8() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto chain = MarkovArrayModel::two_state(10000, 0.3);
    CovarianceOracle oracle(chain);
    const auto part = construct_rho_blocks(oracle, SubexpSpec::power(1.0), 8.0);
    const auto tc = time_change(oracle, step_grid(0.05));
    const auto chk =
        path_block_closeness(chain, part, tc, 10000, 808, default_workers());
    const bool pass = chk.violations == 0 && chk.reps == 10000;
    report(8, pass, "sup_t |W_n - W_blocks| <= max_j X_j / sigma_n pathwise",
           fmt("%lld/%lld violations, worst ratio %.4f, literal-crossing "
               "variant violates %lld, %.1fs",
               static_cast<long long>(chk.violations),
               static_cast<long long>(chk.reps), chk.max_gap_ratio,
               static_cast<long long>(chk.literal_crossing_violations),
               elapsed_s(t0)));
}

// ---- criterion 9: maximal moment inequality --------------------------------
void criterion9() {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    double worst = 0.0;
    const double p = 4.0;
    for (double flip : {0.3, 0.45}) {
        const auto chain = MarkovArrayModel::two_state(10000, flip);
        // hypothesis: phi_n(m_n) < 1/2 - eps with m_n = 1
        const auto prof = coefficient_profile(chain, {1});
        const double phi1 = prof.entries.front().phi;
        if (!(phi1 < 0.5 - 0.05)) {
            pass = false;
            continue;
        }
        const std::vector<Interval> ranges{{1, 100}, {51, 1050}, {1, 10000}};
        const auto rep =
            maximal_inequality_check(chain, p, ranges, 1, 10000, 909,
                                     default_workers());
        worst = std::max(worst, rep.fitted_const);
        if (rep.fitted_const >= 4.0 * p) pass = false;
    }
    report(9, pass, "maximal moment inequality fitted constant below 4p",
           fmt("worst fitted constant %.3f < %.1f (phi_n(1) verified < 1/2), "
               "%.1fs",
               worst, 4.0 * p, elapsed_s(t0)));
}

// ---- criterion 10: CLI determinism across worker counts --------------------
std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion10(const char* cli) {
    const fs::path dir = fs::temp_directory_path() / "mixlab_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "config.json";
    {
        std::ofstream cfg(cfg_path);
        cfg << R"({
  "schema_version": 1,
  "seed": 77,
  "model": {"kind": "markov", "n": 2000, "initial": [0.5, 0.5],
            "transition": [0.7, 0.3, 0.3, 0.7], "observable": [1.0, -1.0]},
  "subexp": {"family": "power", "q": 1.0},
  "blocks": {"A": 8.0, "enforce_hypotheses": false},
  "fclt": {"reps": 1000, "grid_step": 0.05}
})";
    }
    auto run = [&](const std::string& out, int workers) {
        std::ostringstream cmd;
        cmd << '"' << cli << '"' << " fclt --config " << cfg_path
            << " --workers " << workers << " --out " << (dir / out)
            << " > /dev/null 2>&1";
        return std::system(cmd.str().c_str());
    };
    const int r1 = run("a", 1);
    const int r2 = run("b", 4);
    const int r3 = run("c", 1);  // repeat of the first
    bool pass = r1 == 0 && r2 == 0 && r3 == 0;
    for (const char* f :
         {"bm_cov.csv", "lindeberg.csv", "ensemble.bin", "bm_summary.json"}) {
        const auto a = file_bytes(dir / "a" / f);
        const auto b = file_bytes(dir / "b" / f);
        const auto c = file_bytes(dir / "c" / f);
        if (a.empty() || a != b || a != c) pass = false;
    }
    report(10, pass, "byte-identical CLI outputs across runs and workers",
           pass ? "bm_cov.csv, lindeberg.csv, ensemble.bin, bm_summary.json"
                : "outputs differ or runs failed");
}

}  // namespace

int main(int argc, char** argv) {
    std::printf("mixlab acceptance suite\n");
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    if (argc > 1) {
        criterion10(argv[1]);
    } else {
        report(10, false, "CLI determinism", "CLI path not supplied");
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
