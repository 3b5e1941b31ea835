#include "mixlab/io.hpp"

#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace mixlab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // trim to the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char probe[40];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        double back;
        std::sscanf(probe, "%lf", &back);
        if (back == v) return probe;
    }
    return buf;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     std::uint64_t config_hash, std::uint64_t seed)
    : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
    char head[96];
    std::snprintf(head, sizeof(head),
                  "# mixlab schema=1 config_hash=%016llx seed=%llu\n",
                  static_cast<unsigned long long>(config_hash),
                  static_cast<unsigned long long>(seed));
    out_ << head;
}

void CsvWriter::header(const std::vector<std::string>& columns) {
    row(columns);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

CsvWriter::~CsvWriter() = default;

namespace {

constexpr char kMagic[8] = {'M', 'X', 'L', 'B', 'M', 'A', 'T', '1'};

void put_u32(std::ofstream& o, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    o.write(b, 4);
}

void put_u64(std::ofstream& o, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    o.write(b, 8);
}

std::uint64_t get_u64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void write_matrix(const std::filesystem::path& path,
                  const std::vector<double>& data, std::uint64_t rows,
                  std::uint64_t cols, std::uint64_t seed,
                  std::uint64_t config_hash) {
    if (data.size() != rows * cols)
        throw std::invalid_argument("matrix shape mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out.write(kMagic, 8);
    put_u32(out, 1);
    put_u32(out, 0);
    put_u64(out, rows);
    put_u64(out, cols);
    put_u64(out, seed);
    put_u64(out, config_hash);
    for (double v : data) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64(out, bits);
    }
}

MatrixFile read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a mixlab matrix file");
    unsigned char ver[8];
    in.read(reinterpret_cast<char*>(ver), 8);
    if (ver[0] != 1) throw std::runtime_error("unsupported matrix version");
    MatrixFile m;
    m.rows = get_u64(in);
    m.cols = get_u64(in);
    m.seed = get_u64(in);
    m.config_hash = get_u64(in);
    m.data.resize(m.rows * m.cols);
    for (double& v : m.data) {
        const std::uint64_t bits = get_u64(in);
        std::memcpy(&v, &bits, 8);
    }
    if (!in) throw std::runtime_error("truncated matrix file");
    return m;
}

void write_ensemble(const std::filesystem::path& path,
                    const PathEnsemble& ensemble, std::uint64_t config_hash) {
    write_matrix(path, ensemble.paths,
                 static_cast<std::uint64_t>(ensemble.reps),
                 ensemble.grid.size(), ensemble.seed, config_hash);
}

}  // namespace mixlab
