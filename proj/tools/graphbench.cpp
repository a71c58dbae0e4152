// graphbench: experiment harness over the graph-processor machine model.
//
// Subcommands
//   fig6     injection-rate sweep, randomized vs unique destinations
//   scaling  distributed SpGEMM cycles/throughput vs node count
//   sorter   merge-sorter pass/cycle model vs arity k
//   kernel   one distributed kernel run, JSON report
//   gen      power-law matrix generation to an exchange file
//
// Exit codes: 0 success, 2 configuration error, 3 runtime simulation error.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "gp/experiments.hpp"
#include "gp/report.hpp"

namespace {

using gp::Index;
using nlohmann::json;

std::vector<Index> parse_dims(const std::string& text) {
    std::vector<Index> dims;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, 'x')) {
        try {
            dims.push_back(static_cast<Index>(std::stoll(part)));
        } catch (const std::exception&) {
            throw gp::ConfigError("bad --dims component '" + part + "'");
        }
    }
    if (dims.empty()) throw gp::ConfigError("--dims must look like 8x8x8");
    return dims;
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw gp::ConfigError("config file '" + path + "' not readable");
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw gp::ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!cfg.is_object()) throw gp::ConfigError("config file must hold a JSON object");
    return cfg;
}

// Precedence: explicit flag > JSON config > compiled default. The variable
// already holds flag-or-default after parsing; JSON fills only untouched
// flags.
template <typename V>
void fill_from_json(const CLI::App& app, const std::string& flag, const json& cfg,
                    const std::string& key, V& var) {
    const CLI::Option* opt = app.get_option(flag);
    if (opt->count() > 0) return;
    if (!cfg.contains(key)) return;
    try {
        var = cfg.at(key).get<V>();
    } catch (const json::exception& e) {
        throw gp::ConfigError("config key '" + key + "': " + e.what());
    }
}

struct OutputTarget {
    std::string path;  // empty = stdout

    void write(const std::string& text) const {
        if (path.empty()) {
            std::cout << text;
            return;
        }
        std::ofstream out(path, std::ios::binary);
        if (!out) throw gp::ConfigError("cannot open output file '" + path + "'");
        out << text;
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// ---------------------------------------------------------------- fig6 ----

int cmd_fig6(const std::string& dims_text, Index buffer_depth, Index link_width,
             std::uint64_t seed, const std::vector<double>& rates, std::int64_t warmup,
             std::int64_t measure, const std::string& format, const OutputTarget& out) {
    gp::TorusConfig cfg;
    cfg.dims = parse_dims(dims_text);
    cfg.buffer_depth = buffer_depth;
    cfg.link_width = link_width;
    cfg.seed = seed;
    cfg.validate();
    if (rates.empty()) throw gp::ConfigError("rate sweep list is empty");
    for (double r : rates)
        if (r < 0.0 || r > 1.0) throw gp::ConfigError("injection rates must lie in [0, 1]");

    const auto res = gp::fig6_experiment(cfg, rates, warmup, measure);
    if (format == "json") {
        json rows = json::array();
        for (const auto& r : res.rows) {
            rows.push_back({{"pattern", gp::pattern_name(r.pattern)},
                            {"rate", r.rate},
                            {"accepted_rate", r.accepted_rate},
                            {"mean_latency", r.mean_latency},
                            {"p99_latency", r.p99_latency},
                            {"utilization", r.utilization},
                            {"stall_cycles", r.stall_cycles},
                            {"stable", r.stable}});
        }
        json doc = {{"rows", std::move(rows)},
                    {"saturation_randomized", res.saturation_randomized},
                    {"saturation_unique", res.saturation_unique},
                    {"ratio", res.ratio},
                    {"reference_ratio", 6.0}};
        out.write(doc.dump(2) + "\n");
    } else {
        std::string csv =
            "pattern,rate,accepted_rate,mean_latency,p99_latency,utilization,stall_cycles,"
            "stable\n";
        for (const auto& r : res.rows) {
            csv += std::string(gp::pattern_name(r.pattern)) + "," + fmt(r.rate) + "," +
                   fmt(r.accepted_rate) + "," + fmt(r.mean_latency) + "," +
                   std::to_string(r.p99_latency) + "," + fmt(r.utilization) + "," +
                   std::to_string(r.stall_cycles) + "," + (r.stable ? "1" : "0") + "\n";
        }
        csv += "summary,saturation_randomized=" + fmt(res.saturation_randomized) +
               ",saturation_unique=" + fmt(res.saturation_unique) + ",ratio=" + fmt(res.ratio) +
               ",reference_ratio=6.000000,,,\n";
        out.write(csv);
    }
    return 0;
}

// ------------------------------------------------------------- scaling ----

int cmd_scaling(Index n, Index nnz, double alpha, std::uint64_t seed,
                const std::vector<Index>& node_counts, const std::string& map_name,
                const std::string& format, const OutputTarget& out) {
    if (node_counts.empty()) throw gp::ConfigError("node count list is empty");
    gp::PowerLawSpec sa;
    sa.n = n;
    sa.target_nnz = nnz;
    sa.alpha = alpha;
    sa.seed = seed;
    gp::PowerLawSpec sb = sa;
    sb.seed = seed + 1;
    const gp::OwnerKind kind = gp::owner_kind_by_name(map_name);
    const auto rows =
        gp::scaling_experiment<std::int64_t>(sa, sb, node_counts, kind, seed);

    if (format == "json") {
        json arr = json::array();
        for (const auto& r : rows) {
            arr.push_back({{"nodes", r.nodes},
                           {"total_cycles", r.total_cycles},
                           {"partial_products", r.partial_products},
                           {"throughput_proxy", r.throughput_proxy},
                           {"load_imbalance", r.load_imbalance},
                           {"net_utilization", r.net_utilization}});
        }
        out.write(json{{"rows", std::move(arr)}}.dump(2) + "\n");
    } else {
        std::string csv =
            "nodes,total_cycles,partial_products,throughput_proxy,load_imbalance,"
            "net_utilization\n";
        for (const auto& r : rows) {
            csv += std::to_string(r.nodes) + "," + std::to_string(r.total_cycles) + "," +
                   std::to_string(r.partial_products) + "," + fmt(r.throughput_proxy) + "," +
                   fmt(r.load_imbalance) + "," + fmt(r.net_utilization) + "\n";
        }
        out.write(csv);
    }
    return 0;
}

// -------------------------------------------------------------- sorter ----

int cmd_sorter(std::int64_t n, const std::vector<std::int64_t>& ks, const std::string& format,
               const OutputTarget& out) {
    if (ks.empty()) throw gp::ConfigError("arity list is empty");
    for (std::int64_t k : ks) {
        if (k < 2 || (k & (k - 1)) != 0)
            throw gp::ConfigError("arity list must hold powers of two >= 2");
    }
    const auto rows = gp::sorter_experiment(n, ks);
    if (format == "json") {
        json arr = json::array();
        for (const auto& r : rows) {
            arr.push_back({{"n", r.n},
                           {"k", r.k},
                           {"passes", r.passes},
                           {"cycles", r.cycles},
                           {"ratio_vs_k2", r.ratio_vs_k2}});
        }
        out.write(json{{"rows", std::move(arr)}}.dump(2) + "\n");
    } else {
        std::string csv = "n,k,passes,cycles,ratio_vs_k2\n";
        for (const auto& r : rows) {
            csv += std::to_string(r.n) + "," + std::to_string(r.k) + "," +
                   std::to_string(r.passes) + "," + std::to_string(r.cycles) + "," +
                   fmt(r.ratio_vs_k2) + "\n";
        }
        out.write(csv);
    }
    return 0;
}

// -------------------------------------------------------------- kernel ----

template <typename T>
int run_kernel(const std::string& op, const gp::SparseMatrix<T>& a,
               const gp::SparseMatrix<T>& b, bool has_b, const std::string& semiring_name,
               T scalar, Index nodes, const std::string& map_name, std::uint64_t seed,
               const json& config_echo, const OutputTarget& out) {
    gp::Machine<T> mach(nodes);
    const gp::OwnerKind kind = gp::owner_kind_by_name(map_name);
    auto map_a = gp::OwnerMap::make(kind, a.nrows(), a.ncols(), nodes, seed);
    auto da = gp::distribute(a, map_a, mach, "a");

    gp::DistMatrix<T> result;
    gp::SimReport report;
    if (op == "spgemm") {
        if (!has_b) throw gp::ConfigError("spgemm needs --b or generated second operand");
        auto map_b = gp::OwnerMap::make(kind, b.nrows(), b.ncols(), nodes, seed);
        auto db = gp::distribute(b, map_b, mach, "b");
        auto s = gp::semiring_by_name<T>(semiring_name);
        std::tie(result, report) = gp::dist_spgemm(da, db, s, mach);
    } else if (op == "ewise-add" || op == "ewise-sub" || op == "ewise-mul" ||
               op == "ewise-div") {
        if (!has_b) throw gp::ConfigError("ewise ops need --b or generated second operand");
        auto map_b = gp::OwnerMap::make(kind, b.nrows(), b.ncols(), nodes, seed);
        auto db = gp::distribute(b, map_b, mach, "b");
        gp::EwiseOp<T> ew = op == "ewise-add"   ? gp::EwiseOp<T>::add_op()
                            : op == "ewise-sub" ? gp::EwiseOp<T>::sub_op()
                            : op == "ewise-mul" ? gp::EwiseOp<T>::mul_op()
                                                : gp::EwiseOp<T>::div_op();
        std::tie(result, report) = gp::dist_ewise(da, db, ew, mach);
    } else if (op == "apply-scalar") {
        std::tie(result, report) = gp::dist_apply_reduce(
            da, gp::ApplyReduceKind::scalar_apply, gp::ops::mul<T>, scalar, mach);
    } else if (op == "reduce-rows" || op == "reduce-cols") {
        std::tie(result, report) = gp::dist_apply_reduce(
            da,
            op == "reduce-rows" ? gp::ApplyReduceKind::reduce_rows
                                : gp::ApplyReduceKind::reduce_cols,
            gp::ops::add<T>, T{}, mach);
    } else {
        throw gp::ConfigError("unknown kernel op '" + op + "'");
    }

    json doc = gp::to_json(report, config_echo);
    doc["result"] = {{"nrows", result.nrows},
                     {"ncols", result.ncols},
                     {"nnz", result.total_nnz()}};
    out.write(doc.dump(2) + "\n");
    return 0;
}

int cmd_kernel(const std::string& op, const std::string& file_a, const std::string& file_b,
               const std::string& semiring_name, double scalar, Index nodes,
               const std::string& map_name, std::uint64_t seed, Index gen_n, Index gen_nnz,
               double gen_alpha, const OutputTarget& out) {
    if (nodes < 1) throw gp::ConfigError("--nodes must be at least 1");
    json echo = {{"op", op},           {"semiring", semiring_name}, {"nodes", nodes},
                 {"owner_map", map_name}, {"seed", seed}};

    const bool wants_b = op == "spgemm" || op.rfind("ewise-", 0) == 0;
    if (!file_a.empty()) {
        echo["a"] = file_a;
        if (!file_b.empty()) echo["b"] = file_b;
        const gp::ValueKind ka = gp::mm_value_kind(file_a);
        if (ka == gp::ValueKind::real64) {
            auto a = gp::read_mm<double>(file_a);
            gp::SparseMatrix<double> b;
            if (!file_b.empty()) b = gp::read_mm<double>(file_b);
            return run_kernel<double>(op, a, b, !file_b.empty(), semiring_name, scalar, nodes,
                                      map_name, seed, echo, out);
        }
        auto a = gp::read_mm<std::int64_t>(file_a);
        gp::SparseMatrix<std::int64_t> b;
        if (!file_b.empty()) b = gp::read_mm<std::int64_t>(file_b);
        return run_kernel<std::int64_t>(op, a, b, !file_b.empty(), semiring_name,
                                        static_cast<std::int64_t>(scalar), nodes, map_name,
                                        seed, echo, out);
    }

    gp::PowerLawSpec sa;
    sa.n = gen_n;
    sa.target_nnz = gen_nnz;
    sa.alpha = gen_alpha;
    sa.seed = seed;
    echo["workload"] = {{"n", sa.n}, {"nnz", sa.target_nnz}, {"alpha", sa.alpha}};
    auto a = gp::gen_powerlaw<std::int64_t>(sa);
    gp::SparseMatrix<std::int64_t> b;
    if (wants_b) {
        gp::PowerLawSpec sb = sa;
        sb.seed = seed + 1;
        b = gp::gen_powerlaw<std::int64_t>(sb);
    }
    return run_kernel<std::int64_t>(op, a, b, wants_b, semiring_name,
                                    static_cast<std::int64_t>(scalar), nodes, map_name, seed,
                                    echo, out);
}

// ----------------------------------------------------------------- gen ----

int cmd_gen(Index n, Index nnz, double alpha, std::uint64_t seed, const std::string& out_path) {
    if (out_path.empty()) throw gp::ConfigError("gen requires --out FILE");
    gp::PowerLawSpec spec;
    spec.n = n;
    spec.target_nnz = nnz;
    spec.alpha = alpha;
    spec.seed = seed;
    auto m = gp::gen_powerlaw<std::int64_t>(spec);
    gp::write_mm(m, out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph-processor machine model experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 18;
    std::string out_path;
    std::string format = "csv";
    app.add_option("--config", config_path, "JSON config file (flags override it)");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out_path, "output file (default stdout)");
    app.add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    // fig6
    auto* fig6 = app.add_subcommand("fig6", "randomized vs unique destination sweep")->fallthrough();
    std::string dims_text = "8x8x8";
    Index buffer_depth = 8, link_width = 1;
    std::vector<double> rates;
    std::int64_t warmup = 1500, measure = 3000;
    fig6->add_option("--dims", dims_text, "torus shape, e.g. 8x8x8");
    fig6->add_option("--buffer-depth", buffer_depth, "router input queue depth");
    fig6->add_option("--link-width", link_width, "packets per link per cycle");
    fig6->add_option("--rates", rates, "explicit injection-rate sweep list");
    fig6->add_option("--warmup", warmup, "warmup cycles per point");
    fig6->add_option("--measure", measure, "measured cycles per point");

    // scaling
    auto* scaling = app.add_subcommand("scaling", "dist_spgemm vs node count")->fallthrough();
    Index sc_n = 1024, sc_nnz = 4800;
    double sc_alpha = 1.0;
    std::vector<Index> node_counts{1, 4, 16, 64};
    std::string sc_map = "hashed-2d";
    scaling->add_option("--n", sc_n, "matrix dimension");
    scaling->add_option("--nnz", sc_nnz, "target stored elements");
    scaling->add_option("--alpha", sc_alpha, "Zipf exponent");
    scaling->add_option("--nodes", node_counts, "node counts to sweep");
    scaling->add_option("--owner-map", sc_map, "owner map kind");

    // sorter
    auto* sorter = app.add_subcommand("sorter", "merge sorter pass model")->fallthrough();
    std::int64_t so_n = 1 << 20;
    std::vector<std::int64_t> so_ks{2, 4, 8, 16, 32};
    sorter->add_option("--n", so_n, "records to sort");
    sorter->add_option("--k", so_ks, "merge arities (powers of two)");

    // kernel
    auto* kernel = app.add_subcommand("kernel", "one distributed kernel, JSON report")->fallthrough();
    std::string kn_op = "spgemm", kn_a, kn_b, kn_semiring = "plus_times",
                kn_map = "hashed-2d";
    double kn_scalar = 1.0;
    Index kn_nodes = 4, kn_gen_n = 256, kn_gen_nnz = 2048;
    double kn_gen_alpha = 1.0;
    kernel->add_option("--op", kn_op,
                       "spgemm | ewise-add|sub|mul|div | apply-scalar | reduce-rows|cols");
    kernel->add_option("--a", kn_a, "first operand exchange file");
    kernel->add_option("--b", kn_b, "second operand exchange file");
    kernel->add_option("--semiring", kn_semiring, "plus_times|min_plus|max_plus|or_and|max_min");
    kernel->add_option("--scalar", kn_scalar, "scalar for apply-scalar");
    kernel->add_option("--nodes", kn_nodes, "machine node count");
    kernel->add_option("--owner-map", kn_map, "owner map kind");
    kernel->add_option("--gen-n", kn_gen_n, "generated operand dimension (no --a)");
    kernel->add_option("--gen-nnz", kn_gen_nnz, "generated operand nnz");
    kernel->add_option("--gen-alpha", kn_gen_alpha, "generated operand exponent");

    // gen
    auto* gen = app.add_subcommand("gen", "write a power-law exchange file")->fallthrough();
    Index g_n = 1024, g_nnz = 16384;
    double g_alpha = 1.0;
    gen->add_option("--n", g_n, "matrix dimension");
    gen->add_option("--nnz", g_nnz, "target stored elements");
    gen->add_option("--alpha", g_alpha, "Zipf exponent");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const json cfg = load_config(config_path);
        fill_from_json(app, "--seed", cfg, "seed", seed);
        fill_from_json(app, "--out", cfg, "out", out_path);
        fill_from_json(app, "--format", cfg, "format", format);
        const OutputTarget out{out_path};

        if (fig6->parsed()) {
            fill_from_json(*fig6, "--dims", cfg, "dims", dims_text);
            fill_from_json(*fig6, "--buffer-depth", cfg, "buffer_depth", buffer_depth);
            fill_from_json(*fig6, "--link-width", cfg, "link_width", link_width);
            fill_from_json(*fig6, "--rates", cfg, "rates", rates);
            fill_from_json(*fig6, "--warmup", cfg, "warmup", warmup);
            fill_from_json(*fig6, "--measure", cfg, "measure", measure);
            if (rates.empty()) rates = gp::fig6_default_rates();
            return cmd_fig6(dims_text, buffer_depth, link_width, seed, rates, warmup, measure,
                            format, out);
        }
        if (scaling->parsed()) {
            fill_from_json(*scaling, "--n", cfg, "n", sc_n);
            fill_from_json(*scaling, "--nnz", cfg, "nnz", sc_nnz);
            fill_from_json(*scaling, "--alpha", cfg, "alpha", sc_alpha);
            fill_from_json(*scaling, "--nodes", cfg, "nodes", node_counts);
            fill_from_json(*scaling, "--owner-map", cfg, "owner_map", sc_map);
            return cmd_scaling(sc_n, sc_nnz, sc_alpha, seed, node_counts, sc_map, format, out);
        }
        if (sorter->parsed()) {
            fill_from_json(*sorter, "--n", cfg, "n", so_n);
            fill_from_json(*sorter, "--k", cfg, "k", so_ks);
            return cmd_sorter(so_n, so_ks, format, out);
        }
        if (kernel->parsed()) {
            fill_from_json(*kernel, "--op", cfg, "op", kn_op);
            fill_from_json(*kernel, "--a", cfg, "a", kn_a);
            fill_from_json(*kernel, "--b", cfg, "b", kn_b);
            fill_from_json(*kernel, "--semiring", cfg, "semiring", kn_semiring);
            fill_from_json(*kernel, "--scalar", cfg, "scalar", kn_scalar);
            fill_from_json(*kernel, "--nodes", cfg, "nodes", kn_nodes);
            fill_from_json(*kernel, "--owner-map", cfg, "owner_map", kn_map);
            fill_from_json(*kernel, "--gen-n", cfg, "gen_n", kn_gen_n);
            fill_from_json(*kernel, "--gen-nnz", cfg, "gen_nnz", kn_gen_nnz);
            fill_from_json(*kernel, "--gen-alpha", cfg, "gen_alpha", kn_gen_alpha);
            return cmd_kernel(kn_op, kn_a, kn_b, kn_semiring, kn_scalar, kn_nodes, kn_map, seed,
                              kn_gen_n, kn_gen_nnz, kn_gen_alpha, out);
        }
        if (gen->parsed()) {
            fill_from_json(*gen, "--n", cfg, "n", g_n);
            fill_from_json(*gen, "--nnz", cfg, "nnz", g_nnz);
            fill_from_json(*gen, "--alpha", cfg, "alpha", g_alpha);
            return cmd_gen(g_n, g_nnz, g_alpha, seed, out_path);
        }
    } catch (const gp::ConfigError& e) {
        std::cerr << e.code() << ": " << e.what() << "\n";
        return 2;
    } catch (const gp::SpecInfeasible& e) {
        // an impossible workload request is a configuration problem
        std::cerr << e.code() << ": " << e.what() << "\n";
        return 2;
    } catch (const gp::Error& e) {
        std::cerr << e.code() << ": " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
