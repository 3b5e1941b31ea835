#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mixlab/config.hpp"
#include "mixlab/errors.hpp"
#include "mixlab/io.hpp"

using namespace mixlab;
namespace fs = std::filesystem;

namespace {

const char* kConfig = R"({
  "schema_version": 1,
  "seed": 424242,
  "out": "test_out",
  "model": {
    "kind": "markov",
    "n": 100,
    "initial": [0.5, 0.5],
    "transition": [0.7, 0.3, 0.3, 0.7],
    "observable": [1.0, -1.0]
  },
  "subexp": {"family": "power", "q": 1.0},
  "blocks": {"A": 8.0, "pair_budget": 100},
  "fclt": {"reps": 2000, "grid_step": 0.05}
})";

}  // namespace

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 2.2181073012818836, 1e-17, 144.0, -0.4}) {
        double back;
        std::sscanf(format_double(v).c_str(), "%lf", &back);
        CHECK(back == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(144.0) == "144");
}

TEST_CASE("matrix files round-trip bit-exactly") {
    const fs::path path = fs::temp_directory_path() / "mixlab_test_matrix.bin";
    std::vector<double> data{1.0, -0.25, 3.14159, 1e-300, 0.0, 7.5};
    write_matrix(path, data, 2, 3, 99, 0xDEADBEEF);
    const auto m = read_matrix(path);
    CHECK(m.rows == 2);
    CHECK(m.cols == 3);
    CHECK(m.seed == 99);
    CHECK(m.config_hash == 0xDEADBEEF);
    CHECK(m.data == data);
    fs::remove(path);
}

TEST_CASE("csv writer embeds provenance and uses LF endings") {
    const fs::path path = fs::temp_directory_path() / "mixlab_test.csv";
    {
        CsvWriter csv(path, 0xABCD, 7);
        csv.header({"a", "b"});
        csv.row({"1", format_double(0.5)});
    }
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    CHECK(text.find("config_hash=000000000000abcd") != std::string::npos);
    CHECK(text.find("seed=7") != std::string::npos);
    CHECK(text.find("a,b\n1,0.5\n") != std::string::npos);
    CHECK(text.find('\r') == std::string::npos);
    fs::remove(path);
}

TEST_CASE("config parsing builds the model and validates ranges") {
    const auto cfg = ExperimentConfig::parse(kConfig);
    CHECK(cfg.seed == 424242);
    REQUIRE(cfg.model != nullptr);
    CHECK(cfg.model->length() == 100);
    CHECK(cfg.subexp.has_value());
    CHECK(cfg.blocks.has_value());
    CHECK(cfg.blocks->A == 8.0);
    CHECK(cfg.fclt.reps == 2000);
    CHECK(cfg.config_hash != 0);
}

TEST_CASE("config rejects bad input with precondition errors") {
    CHECK_THROWS_AS(ExperimentConfig::parse("{\"schema_version\": 2}"),
                    PreconditionError);
    CHECK_THROWS_AS(ExperimentConfig::parse("{\"schema_version\": 1}"),
                    PreconditionError);  // no seed
    CHECK_THROWS_AS(ExperimentConfig::parse("not json"), PreconditionError);

    // malformed transition matrix: row sums 0.9
    const char* bad = R"({
      "schema_version": 1, "seed": 1,
      "model": {"kind": "markov", "n": 10, "initial": [0.5, 0.5],
                "transition": [0.6, 0.3, 0.3, 0.7],
                "observable": [1.0, -1.0]}
    })";
    try {
        ExperimentConfig::parse(bad);
        FAIL("expected PreconditionError");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("row") != std::string::npos);
    }
}

TEST_CASE("identical configs hash identically, different ones differ") {
    const auto a = ExperimentConfig::parse(kConfig);
    const auto b = ExperimentConfig::parse(kConfig);
    CHECK(a.config_hash == b.config_hash);
    std::string other = kConfig;
    const auto pos = other.find("424242");
    other.replace(pos, 6, "424243");
    const auto c = ExperimentConfig::parse(other);
    CHECK(a.config_hash != c.config_hash);
}
