#include "mixlab/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mixlab/errors.hpp"
#include "mixlab/io.hpp"

namespace mixlab {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) {
    throw PreconditionError("config: " + what);
}

InnovationLaw parse_law(const std::string& s) {
    if (s == "gaussian") return InnovationLaw::Gaussian;
    if (s == "rademacher") return InnovationLaw::Rademacher;
    if (s == "bernoulli") return InnovationLaw::Bernoulli;
    bad("unknown innovation law '" + s + "'");
}

std::unique_ptr<ArrayModel> parse_model(const json& j) {
    if (!j.contains("kind")) bad("model.kind missing");
    const std::string kind = j.at("kind");
    const std::int64_t n = j.value("n", std::int64_t{0});
    if (n < 1) bad("model.n must be >= 1");
    if (kind == "markov") {
        std::vector<double> initial = j.at("initial").get<std::vector<double>>();
        std::vector<std::vector<double>> trans;
        if (j.contains("transitions"))
            for (const auto& t : j.at("transitions"))
                trans.push_back(t.get<std::vector<double>>());
        else
            trans.push_back(j.at("transition").get<std::vector<double>>());
        std::vector<std::vector<double>> obs;
        if (j.contains("observables"))
            for (const auto& f : j.at("observables"))
                obs.push_back(f.get<std::vector<double>>());
        else
            obs.push_back(j.at("observable").get<std::vector<double>>());
        return std::make_unique<MarkovArrayModel>(n, std::move(initial),
                                                  std::move(trans),
                                                  std::move(obs));
    }
    if (kind == "mdep") {
        const InnovationLaw law = parse_law(j.value("law", "gaussian"));
        const double p = j.value("bernoulli_p", 0.5);
        const int m0 = j.value("m0", 0);
        if (!j.contains("coeffs")) bad("mdep model needs 'coeffs'");
        std::vector<std::vector<double>> coeffs;
        for (const auto& c : j.at("coeffs"))
            coeffs.push_back(c.get<std::vector<double>>());
        return std::make_unique<MDepArrayModel>(n, m0, std::move(coeffs), law,
                                                p);
    }
    bad("unknown model kind '" + kind + "'");
}

SubexpSpec parse_subexp(const json& j) {
    const std::string family = j.value("family", "");
    SubexpSpec spec = [&] {
        if (family == "power") return SubexpSpec::power(j.at("q").get<double>());
        if (family == "exp_log_pow")
            return SubexpSpec::exp_log_pow(j.at("s").get<double>());
        if (family == "stretched")
            return SubexpSpec::stretched(j.at("c").get<double>(),
                                         j.at("alpha").get<double>());
        if (family == "iterated_log")
            return SubexpSpec::iterated_log(j.at("d").get<int>());
        bad("unknown subexp family '" + family + "'");
    }();
    spec.c0 = j.value("c0", spec.c0);
    spec.eps = j.value("eps", spec.eps);
    spec.delta = j.value("delta", spec.delta);
    if (!(spec.eps > 0.0 && spec.eps < 1.0))
        bad("subexp.eps must be in (0,1)");
    if (!(spec.delta > 0.0 && spec.delta < 1.0))
        bad("subexp.delta must be in (0,1)");
    return spec;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        bad(std::string("invalid JSON: ") + e.what());
    }
    if (j.value("schema_version", 0) != 1)
        bad("schema_version must be 1");
    if (!j.contains("seed")) bad("seed is mandatory");

    ExperimentConfig cfg;
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.workers = j.value("workers", 0u);
    cfg.out_dir = j.value("out", std::string("out"));
    cfg.config_hash = fnv1a64(j.dump());

    if (j.contains("model")) cfg.model = parse_model(j.at("model"));
    if (j.contains("subexp")) cfg.subexp = parse_subexp(j.at("subexp"));

    if (j.contains("blocks")) {
        BlocksConfig b;
        const auto& jb = j.at("blocks");
        b.A = jb.value("A", b.A);
        b.pair_budget = jb.value("pair_budget", b.pair_budget);
        b.enforce_hypotheses = jb.value("enforce_hypotheses", true);
        if (!(b.A > 1.0)) bad("blocks.A must be > 1");
        if (b.pair_budget < 0) bad("blocks.pair_budget must be >= 0");
        cfg.blocks = b;
    }
    if (j.contains("projective")) {
        ProjectiveConfig p;
        const auto& jp = j.at("projective");
        p.A = jp.value("A", p.A);
        p.eps = jp.value("eps", p.eps);
        p.r = jp.value("r", p.r);
        if (!(p.eps > 0.0 && p.eps < 1.0)) bad("projective.eps must be in (0,1)");
        if (p.r < 0) bad("projective.r must be >= 0");
        if (!(p.A > 0.0)) bad("projective.A must be > 0");
        // A > r and A*eps > r are proposition hypotheses, reported by the
        // blocks command rather than enforced here
        cfg.projective = p;
    }
    if (j.contains("mixing")) {
        const auto& jm = j.at("mixing");
        cfg.mixing.max_lag = jm.value("max_lag", cfg.mixing.max_lag);
        if (jm.contains("lags"))
            cfg.mixing.lags = jm.at("lags").get<std::vector<std::int64_t>>();
        cfg.mixing.single_coordinate =
            jm.value("scope", std::string("full_past")) == "single_coordinate";
        cfg.mixing.window = jm.value("window", 1);
        if (cfg.mixing.max_lag < 1) bad("mixing.max_lag must be >= 1");
        if (cfg.mixing.window < 1) bad("mixing.window must be >= 1");
    }
    if (j.contains("fclt")) {
        const auto& jf = j.at("fclt");
        cfg.fclt.grid_step = jf.value("grid_step", cfg.fclt.grid_step);
        cfg.fclt.reps = jf.value("reps", cfg.fclt.reps);
        if (jf.contains("eps_list"))
            cfg.fclt.eps_list = jf.at("eps_list").get<std::vector<double>>();
        cfg.fclt.p = jf.value("p", cfg.fclt.p);
        cfg.fclt.m_n = jf.value("m_n", cfg.fclt.m_n);
        cfg.fclt.ks_tol = jf.value("ks_tol", cfg.fclt.ks_tol);
        cfg.fclt.cov_tol = jf.value("cov_tol", cfg.fclt.cov_tol);
        if (!(cfg.fclt.grid_step > 0.0 && cfg.fclt.grid_step <= 1.0))
            bad("fclt.grid_step must be in (0,1]");
        if (cfg.fclt.reps < 1) bad("fclt.reps must be >= 1");
        if (!(cfg.fclt.p > 2.0)) bad("fclt.p must be > 2");
        for (double e : cfg.fclt.eps_list)
            if (!(e > 0.0)) bad("fclt.eps_list entries must be > 0");
    }
    if (j.contains("delta")) {
        const auto& jd = j.at("delta");
        cfg.delta.m = jd.value("m", cfg.delta.m);
        cfg.delta.q = jd.value("q", cfg.delta.q);
        cfg.delta.c_q = jd.value("C_q", cfg.delta.c_q);
        cfg.delta.a_q = jd.value("A_q", cfg.delta.a_q);
        if (cfg.delta.m < 1) bad("delta.m must be >= 1");
        if (!(cfg.delta.q > 2.0)) bad("delta.q must be > 2");
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) bad("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

}  // namespace mixlab
