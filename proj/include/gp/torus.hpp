#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "gp/error.hpp"
#include "gp/sparse.hpp"

namespace gp {

struct TorusConfig {
    std::vector<Index> dims;         // e.g. {8, 8, 8}
    Index buffer_depth = 8;          // packets per router input queue
    Index link_width = 1;            // packets per link per cycle
    Index pipeline_latency = 1;      // router cycles added at delivery
    std::uint64_t seed = 0;

    Index node_count() const {
        Index n = 1;
        for (Index d : dims) n *= d;
        return n;
    }

    void validate() const {
        if (dims.empty() || dims.size() > 6)
            throw ConfigError("torus dims must have 1..6 dimensions");
        for (Index d : dims)
            if (d < 2) throw ConfigError("every torus dimension must be >= 2");
        if (buffer_depth < 1) throw ConfigError("buffer_depth must be >= 1");
        if (link_width < 1) throw ConfigError("link_width must be >= 1");
    }
};

struct NodeCoord {
    std::vector<Index> coords;
    Index flat_id = 0;
};

// Mixed-radix encoding, coords[0] least significant.
Index flatten(const std::vector<Index>& coords, const TorusConfig& cfg);
NodeCoord unflatten(Index flat, const TorusConfig& cfg);

// One hop: dimension index plus direction (+1 or -1 along the ring).
struct Port {
    int dim = 0;
    int dir = +1;

    friend bool operator==(const Port&, const Port&) = default;
};

// Dimension-order routing: correct the lowest-index unequal dimension,
// taking the shorter wraparound arc; exact half-ring ties go positive.
Port route_next_hop(const NodeCoord& cur, const NodeCoord& dst, const TorusConfig& cfg);

// Sum of per-dimension minimal ring distances.
Index torus_distance(const NodeCoord& a, const NodeCoord& b, const TorusConfig& cfg);

// Matrix element or partial product in flight. Values travel as raw 64-bit
// payloads so the network is agnostic to the value kind.
struct Packet {
    Index src = 0;
    Index dst = 0;
    Index row = 0;
    Index col = 0;
    std::uint64_t raw_val = 0;
    int priority = 0;
    std::uint64_t header_aux = 0;  // opaque (error-correction bits etc.)
    std::int64_t inject_cycle = 0;
    std::int64_t deliver_cycle = -1;
    std::uint64_t id = 0;  // assigned at enqueue, unique per sim
};

struct NetStats {
    std::int64_t injected = 0;
    std::int64_t delivered = 0;
    std::int64_t total_latency_cycles = 0;
    std::int64_t stall_cycles = 0;
    std::vector<std::int64_t> link_busy_cycles;  // indexed by link id
    double accepted_rate = 0.0;  // delivered packets per node per cycle
    double utilization = 0.0;    // busy link-cycles / capacity link-cycles
    bool saturation_not_reached = false;
    std::vector<std::int64_t> latencies;  // per delivered packet, window only

    double mean_latency() const {
        return latencies.empty() ? 0.0
                                 : static_cast<double>(total_latency_cycles) /
                                       static_cast<double>(latencies.size());
    }
    std::int64_t p99_latency() const;
};

enum class TrafficPattern { randomized, unique, permutation, nearest_neighbor };

TrafficPattern pattern_by_name(const std::string& name);
const char* pattern_name(TrafficPattern p);

// Unidirectional links crossing the balanced cut along the largest dimension,
// counted one way. Bounds uniform-traffic throughput at
// 2 * link_width * bisection_links / node_count.
Index bisection_links(const TorusConfig& cfg);

// Cycle-stepped packet simulator. Per cycle: each node moves at most one
// pending packet into its injection queue, then every queue head either
// ejects (dst reached), advances one hop if the link has width left and the
// downstream queue has space, or stalls. Arrivals become visible next cycle.
// Fully deterministic: no RNG inside; traffic processes own the randomness.
class TorusSim {
public:
    explicit TorusSim(TorusConfig cfg);

    const TorusConfig& config() const { return cfg_; }
    Index node_count() const { return node_count_; }
    std::int64_t cycle() const { return cycle_; }

    // Appends to src's pending source queue; sets id and inject_cycle.
    void enqueue(Packet p);

    // Advances one cycle; delivered packets are appended to `out` if given.
    void step(std::vector<Packet>* out = nullptr);

    // Runs until every enqueued packet is delivered. The watchdog throws
    // SimulationStalled after 10000 cycles without progress.
    std::vector<Packet> run_until_drained();

    std::int64_t injected() const { return injected_; }
    std::int64_t delivered() const { return delivered_; }
    std::int64_t in_flight() const { return injected_ - delivered_; }
    // Packets actually resident in queues right now; equals in_flight().
    std::int64_t queued_packets() const;

    std::int64_t stall_cycles() const { return stall_cycles_; }
    std::int64_t total_latency() const { return total_latency_; }
    const std::vector<std::int64_t>& link_busy() const { return link_busy_; }
    Index link_count() const { return static_cast<Index>(link_busy_.size()); }

private:
    Index neighbor(Index node, Port p) const;
    std::size_t in_port(Port p) const { return static_cast<std::size_t>(2 * p.dim + (p.dir > 0 ? 0 : 1)); }
    std::size_t link_id(Index node, Port p) const {
        return static_cast<std::size_t>(node) * ports_per_node_ + in_port(p);
    }

    TorusConfig cfg_;
    Index node_count_ = 0;
    std::size_t ports_per_node_ = 0;  // 2 * dims
    std::vector<NodeCoord> coords_;   // cached per node

    // queues_[node][port]; port == ports_per_node_ is the injection queue.
    std::vector<std::vector<std::deque<Packet>>> queues_;
    std::vector<std::deque<Packet>> pending_;  // source-side, unbounded

    std::int64_t cycle_ = 0;
    std::int64_t injected_ = 0;
    std::int64_t delivered_ = 0;
    std::int64_t total_latency_ = 0;
    std::int64_t stall_cycles_ = 0;
    std::uint64_t next_packet_id_ = 0;
    std::int64_t last_progress_cycle_ = 0;
    std::vector<std::int64_t> link_busy_;

    // per-step scratch, kept here to avoid reallocation
    std::vector<std::int64_t> link_used_;
    std::vector<std::vector<Index>> occupancy_;
    std::vector<std::vector<Index>> accepted_;
    std::vector<std::vector<std::vector<Packet>>> incoming_;
};

// Open-loop traffic experiment: Bernoulli injection at `injection_rate`
// packets/node/cycle for warmup+measure cycles; stats cover the measurement
// window only. Deterministic per cfg.seed.
NetStats run_traffic(const TorusConfig& cfg, TrafficPattern pattern, double injection_rate,
                     std::int64_t warmup, std::int64_t measure);

}  // namespace gp
