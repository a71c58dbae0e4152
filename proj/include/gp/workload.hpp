#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "gp/rng.hpp"
#include "gp/sparse.hpp"

namespace gp {

// Square power-law matrix: rows and columns drawn independently from a
// Zipf(alpha) marginal; duplicates collapse, so sampling continues until
// target_nnz distinct coordinates exist.
struct PowerLawSpec {
    Index n = 1024;
    Index target_nnz = 16384;
    double alpha = 1.0;
    std::uint64_t seed = 0;
};

class ZipfSampler {
public:
    ZipfSampler(Index n, double alpha) : cdf_(static_cast<std::size_t>(n)) {
        double total = 0.0;
        for (Index r = 0; r < n; ++r) {
            total += std::pow(static_cast<double>(r + 1), -alpha);
            cdf_[static_cast<std::size_t>(r)] = total;
        }
        for (auto& c : cdf_) c /= total;
    }

    Index draw(Rng& rng) const {
        const double u = rng.next_double();
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        return static_cast<Index>(it - cdf_.begin());
    }

private:
    std::vector<double> cdf_;
};

template <typename T>
SparseMatrix<T> gen_powerlaw(const PowerLawSpec& spec) {
    if (spec.n < 1) throw SpecInfeasible("matrix dimension must be >= 1");
    if (spec.alpha <= 0.0) throw SpecInfeasible("alpha must be > 0");
    if (spec.target_nnz > spec.n * spec.n)
        throw SpecInfeasible("target_nnz " + std::to_string(spec.target_nnz) + " exceeds n^2");
    ZipfSampler zipf(spec.n, spec.alpha);
    Rng rng(spec.seed);
    std::unordered_map<std::uint64_t, T> cells;
    cells.reserve(static_cast<std::size_t>(spec.target_nnz) * 2);
    const std::int64_t max_draws = 200 * spec.target_nnz + 1000;
    std::int64_t draws = 0;
    while (static_cast<Index>(cells.size()) < spec.target_nnz && draws < max_draws) {
        const Index r = zipf.draw(rng);
        const Index c = zipf.draw(rng);
        const std::uint64_t key =
            (static_cast<std::uint64_t>(r) << 32) | static_cast<std::uint64_t>(c);
        cells[key] += T{1};
        ++draws;
    }
    std::vector<Triple<T>> triples;
    triples.reserve(cells.size());
    for (const auto& [key, val] : cells) {
        triples.push_back({static_cast<Index>(key >> 32),
                           static_cast<Index>(key & 0xffffffffULL), val});
    }
    return build_coo(std::move(triples), spec.n, spec.n);
}

namespace detail {

inline void format_value(std::string& out, std::int64_t v) {
    out += std::to_string(v);
}

inline void format_value(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

inline const char* mm_field_name(ValueKind k) {
    return k == ValueKind::int64 ? "integer" : "real";
}

}  // namespace detail

// Coordinate exchange format, "general" symmetry, 1-based on disk.
template <typename T>
void write_mm(const SparseMatrix<T>& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("io.FileError", "cannot open '" + path + "' for writing");
    std::string out;
    out += "%%MatrixMarket matrix coordinate ";
    out += detail::mm_field_name(m.value_kind());
    out += " general\n";
    out += std::to_string(m.nrows());
    out += " ";
    out += std::to_string(m.ncols());
    out += " ";
    out += std::to_string(m.nnz());
    out += "\n";
    for (const auto& t : m.triples()) {
        out += std::to_string(t.row + 1);
        out += " ";
        out += std::to_string(t.col + 1);
        out += " ";
        detail::format_value(out, t.val);
        out += "\n";
    }
    f << out;
}

// Probes the header field kind without reading the body.
inline ValueKind mm_value_kind(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("io.FileError", "cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw ParseError(1, "empty file");
    std::istringstream hdr(line);
    std::string banner, object, fmt, field, symmetry;
    hdr >> banner >> object >> fmt >> field >> symmetry;
    if (banner != "%%MatrixMarket") throw ParseError(1, "missing %%MatrixMarket banner");
    if (field == "integer") return ValueKind::int64;
    if (field == "real") return ValueKind::real64;
    throw UnsupportedFeature("field kind '" + field + "'");
}

template <typename T>
SparseMatrix<T> read_mm(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("io.FileError", "cannot open '" + path + "'");
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(f, line)) throw ParseError(1, "empty file");
    ++lineno;
    {
        std::istringstream hdr(line);
        std::string banner, object, fmt, field, symmetry;
        hdr >> banner >> object >> fmt >> field >> symmetry;
        if (banner != "%%MatrixMarket") throw ParseError(lineno, "missing %%MatrixMarket banner");
        if (object != "matrix") throw UnsupportedFeature("object '" + object + "'");
        if (fmt != "coordinate") throw UnsupportedFeature("format '" + fmt + "'");
        if (field != "integer" && field != "real")
            throw UnsupportedFeature("field kind '" + field + "'");
        if (symmetry != "general") throw UnsupportedFeature("symmetry '" + symmetry + "'");
    }

    // comments, then the size line
    Index nrows = 0, ncols = 0;
    std::int64_t nnz = 0;
    for (;;) {
        if (!std::getline(f, line)) throw ParseError(lineno, "missing size line");
        ++lineno;
        if (!line.empty() && line[0] == '%') continue;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream sz(line);
        if (!(sz >> nrows >> ncols >> nnz)) throw ParseError(lineno, "bad size line");
        break;
    }
    if (nrows < 0 || ncols < 0 || nnz < 0) throw ParseError(lineno, "negative size");

    std::vector<Triple<T>> triples;
    triples.reserve(static_cast<std::size_t>(nnz));
    for (std::int64_t i = 0; i < nnz; ++i) {
        if (!std::getline(f, line)) throw ParseError(lineno, "unexpected end of file");
        ++lineno;
        std::istringstream entry(line);
        Index r = 0, c = 0;
        T v{};
        if (!(entry >> r >> c >> v)) throw ParseError(lineno, "bad entry line");
        if (r < 1 || r > nrows)
            throw ParseError(lineno, "row index " + std::to_string(r) + " outside 1.." +
                                         std::to_string(nrows));
        if (c < 1 || c > ncols)
            throw ParseError(lineno, "col index " + std::to_string(c) + " outside 1.." +
                                         std::to_string(ncols));
        triples.push_back({r - 1, c - 1, v});
    }
    return build_coo(std::move(triples), nrows, ncols);
}

struct DegreeStats {
    std::vector<std::int64_t> row_degree;  // stored elements per row
    std::vector<std::int64_t> col_degree;
    std::int64_t row_max = 0;
    std::int64_t col_max = 0;
    double row_mean = 0.0;
    double col_mean = 0.0;
    double row_gini = 0.0;
    double col_gini = 0.0;
};

inline double gini(std::vector<std::int64_t> degrees) {
    if (degrees.empty()) return 0.0;
    std::sort(degrees.begin(), degrees.end());
    double total = 0.0, weighted = 0.0;
    for (std::size_t i = 0; i < degrees.size(); ++i) {
        total += static_cast<double>(degrees[i]);
        weighted += static_cast<double>(i + 1) * static_cast<double>(degrees[i]);
    }
    if (total == 0.0) return 0.0;
    const double n = static_cast<double>(degrees.size());
    return 2.0 * weighted / (n * total) - (n + 1.0) / n;
}

template <typename T>
DegreeStats degree_stats(const SparseMatrix<T>& m) {
    DegreeStats s;
    s.row_degree.assign(static_cast<std::size_t>(m.nrows()), 0);
    s.col_degree.assign(static_cast<std::size_t>(m.ncols()), 0);
    for (const auto& t : m.triples()) {
        ++s.row_degree[static_cast<std::size_t>(t.row)];
        ++s.col_degree[static_cast<std::size_t>(t.col)];
    }
    for (auto d : s.row_degree) s.row_max = std::max(s.row_max, d);
    for (auto d : s.col_degree) s.col_max = std::max(s.col_max, d);
    s.row_mean = m.nrows() > 0 ? static_cast<double>(m.nnz()) / static_cast<double>(m.nrows()) : 0.0;
    s.col_mean = m.ncols() > 0 ? static_cast<double>(m.nnz()) / static_cast<double>(m.ncols()) : 0.0;
    s.row_gini = gini(s.row_degree);
    s.col_gini = gini(s.col_degree);
    return s;
}

}  // namespace gp
