#pragma once

#include <string>
#include <vector>

#include "gp/dist.hpp"
#include "gp/sorter.hpp"
#include "gp/torus.hpp"
#include "gp/workload.hpp"

namespace gp {

// Injection-rate sweep contrasting randomized against unique (fixed-partner)
// destinations. The saturation accepted rate per pattern is the accepted
// rate at the highest swept rate where delivery still tracks injection
// (accepted >= 99% of offered and the backlog stopped growing).
struct Fig6Row {
    TrafficPattern pattern;
    double rate = 0.0;
    double accepted_rate = 0.0;
    double mean_latency = 0.0;
    std::int64_t p99_latency = 0;
    double utilization = 0.0;
    std::int64_t stall_cycles = 0;
    bool stable = false;
};

struct Fig6Result {
    std::vector<Fig6Row> rows;
    double saturation_randomized = 0.0;
    double saturation_unique = 0.0;
    double ratio = 0.0;
};

inline std::vector<double> fig6_default_rates() {
    std::vector<double> rates;
    for (int i = 1; i <= 30; ++i) rates.push_back(i * 0.02);
    for (int i = 7; i <= 10; ++i) rates.push_back(i * 0.1);
    return rates;
}

inline Fig6Result fig6_experiment(const TorusConfig& cfg,
                                  const std::vector<double>& rates = fig6_default_rates(),
                                  std::int64_t warmup = 1500, std::int64_t measure = 3000) {
    Fig6Result out;
    for (TrafficPattern pattern : {TrafficPattern::randomized, TrafficPattern::unique}) {
        double saturation = 0.0;
        for (double rate : rates) {
            auto s = run_traffic(cfg, pattern, rate, warmup, measure);
            Fig6Row row;
            row.pattern = pattern;
            row.rate = rate;
            row.accepted_rate = s.accepted_rate;
            row.mean_latency = s.mean_latency();
            row.p99_latency = s.p99_latency();
            row.utilization = s.utilization;
            row.stall_cycles = s.stall_cycles;
            row.stable = s.accepted_rate >= 0.99 * rate && !s.saturation_not_reached;
            if (row.stable) saturation = std::max(saturation, s.accepted_rate);
            out.rows.push_back(row);
        }
        (pattern == TrafficPattern::randomized ? out.saturation_randomized
                                               : out.saturation_unique) = saturation;
    }
    out.ratio = out.saturation_unique > 0.0 ? out.saturation_randomized / out.saturation_unique
                                            : 0.0;
    return out;
}

// Node-count scaling of distributed SpGEMM on a fixed generated workload.
struct ScalingRow {
    Index nodes = 0;
    std::int64_t total_cycles = 0;
    std::int64_t partial_products = 0;
    double throughput_proxy = 0.0;
    double load_imbalance = 1.0;
    double net_utilization = 0.0;
};

template <typename T>
std::vector<ScalingRow> scaling_experiment(const PowerLawSpec& spec_a,
                                           const PowerLawSpec& spec_b,
                                           const std::vector<Index>& node_counts,
                                           OwnerKind kind, std::uint64_t map_seed) {
    const auto a = gen_powerlaw<T>(spec_a);
    const auto b = gen_powerlaw<T>(spec_b);
    std::vector<ScalingRow> rows;
    for (Index nodes : node_counts) {
        Machine<T> mach(nodes);
        auto map = OwnerMap::make(kind, a.nrows(), b.ncols(), nodes, map_seed);
        auto da = distribute(a, map, mach, "a");
        auto db = distribute(b, map, mach, "b");
        auto [c, rep] = dist_spgemm(da, db, plus_times<T>(), mach);
        ScalingRow row;
        row.nodes = nodes;
        row.total_cycles = rep.total_cycles;
        row.partial_products = rep.partial_products;
        row.throughput_proxy = rep.throughput_proxy;
        row.load_imbalance = rep.load_imbalance;
        const double phases = static_cast<double>(rep.net.phases);
        row.net_utilization = phases > 0 ? rep.net.utilization : 0.0;
        if (rep.net.makespan_cycles > 0) {
            // aggregate utilization over all shipping phases
            Machine<T> probe(nodes);
            const double cap =
                probe.has_network()
                    ? static_cast<double>(2 * probe.net_config().dims.size()) *
                          static_cast<double>(nodes) *
                          static_cast<double>(probe.net_config().link_width) *
                          static_cast<double>(rep.net.makespan_cycles)
                    : 0.0;
            row.net_utilization =
                cap > 0 ? static_cast<double>(rep.net.busy_link_cycles) / cap : 0.0;
        }
        rows.push_back(row);
    }
    return rows;
}

// Pass/cycle model sweep over merge arity for a fixed record count.
struct SorterRow {
    std::int64_t n = 0;
    std::int64_t k = 0;
    std::int64_t passes = 0;
    std::int64_t cycles = 0;
    double ratio_vs_k2 = 1.0;  // cycles(k=2) / cycles(k)
};

inline std::vector<SorterRow> sorter_experiment(std::int64_t n, const std::vector<std::int64_t>& ks) {
    std::vector<SorterRow> rows;
    const std::int64_t base = sorter_cycles(n, 2);
    for (std::int64_t k : ks) {
        SorterRow row;
        row.n = n;
        row.k = k;
        row.passes = sorter_passes(n, k);
        row.cycles = sorter_cycles(n, k);
        row.ratio_vs_k2 = row.cycles > 0 ? static_cast<double>(base) / static_cast<double>(row.cycles)
                                         : 1.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace gp
