#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "mixlab/fclt.hpp"

namespace mixlab {

// shortest round-trip decimal form; locale-independent ('.' decimal point)
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view data);

// CSV with LF line endings and a leading comment line carrying the run
// provenance (schema, config hash, seed).
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::uint64_t config_hash,
              std::uint64_t seed);
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<std::string>& cells);
    ~CsvWriter();

private:
    std::ofstream out_;
};

// Binary matrix container: 8-byte magic "MXLBMAT1", u32 version, u32 pad,
// u64 rows, u64 cols, u64 seed, u64 config_hash, then rows*cols
// little-endian float64, row-major.
void write_matrix(const std::filesystem::path& path,
                  const std::vector<double>& data, std::uint64_t rows,
                  std::uint64_t cols, std::uint64_t seed,
                  std::uint64_t config_hash);

struct MatrixFile {
    std::uint64_t rows = 0, cols = 0, seed = 0, config_hash = 0;
    std::vector<double> data;
};

MatrixFile read_matrix(const std::filesystem::path& path);

void write_ensemble(const std::filesystem::path& path,
                    const PathEnsemble& ensemble, std::uint64_t config_hash);

}  // namespace mixlab
