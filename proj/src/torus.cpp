#include "gp/torus.hpp"

#include <algorithm>

#include "gp/rng.hpp"

namespace gp {

Index flatten(const std::vector<Index>& coords, const TorusConfig& cfg) {
    Index flat = 0;
    for (std::size_t i = cfg.dims.size(); i-- > 0;) {
        flat = flat * cfg.dims[i] + coords[i];
    }
    return flat;
}

NodeCoord unflatten(Index flat, const TorusConfig& cfg) {
    NodeCoord nc;
    nc.flat_id = flat;
    nc.coords.resize(cfg.dims.size());
    for (std::size_t i = 0; i < cfg.dims.size(); ++i) {
        nc.coords[i] = flat % cfg.dims[i];
        flat /= cfg.dims[i];
    }
    return nc;
}

Port route_next_hop(const NodeCoord& cur, const NodeCoord& dst, const TorusConfig& cfg) {
    for (std::size_t i = 0; i < cfg.dims.size(); ++i) {
        if (cur.coords[i] == dst.coords[i]) continue;
        const Index d = cfg.dims[i];
        const Index fwd = (dst.coords[i] - cur.coords[i] + d) % d;
        // shorter arc wins; exact half-ring tie goes positive
        const int dir = (2 * fwd <= d) ? +1 : -1;
        return {static_cast<int>(i), dir};
    }
    throw Error("net.RouteAtDestination", "route_next_hop called with cur == dst");
}

Index torus_distance(const NodeCoord& a, const NodeCoord& b, const TorusConfig& cfg) {
    Index total = 0;
    for (std::size_t i = 0; i < cfg.dims.size(); ++i) {
        const Index d = cfg.dims[i];
        const Index fwd = (b.coords[i] - a.coords[i] + d) % d;
        total += std::min(fwd, d - fwd);
    }
    return total;
}

std::int64_t NetStats::p99_latency() const {
    if (latencies.empty()) return 0;
    std::vector<std::int64_t> v = latencies;
    std::sort(v.begin(), v.end());
    const std::size_t idx = (v.size() * 99 + 99) / 100;  // ceil
    return v[std::min(idx, v.size()) - 1];
}

TrafficPattern pattern_by_name(const std::string& name) {
    if (name == "randomized") return TrafficPattern::randomized;
    if (name == "unique") return TrafficPattern::unique;
    if (name == "permutation") return TrafficPattern::permutation;
    if (name == "nearest-neighbor") return TrafficPattern::nearest_neighbor;
    throw ConfigError("unknown traffic pattern '" + name + "'");
}

const char* pattern_name(TrafficPattern p) {
    switch (p) {
        case TrafficPattern::randomized: return "randomized";
        case TrafficPattern::unique: return "unique";
        case TrafficPattern::permutation: return "permutation";
        case TrafficPattern::nearest_neighbor: return "nearest-neighbor";
    }
    return "?";
}

Index bisection_links(const TorusConfig& cfg) {
    std::size_t widest = 0;
    for (std::size_t i = 1; i < cfg.dims.size(); ++i) {
        if (cfg.dims[i] > cfg.dims[widest]) widest = i;
    }
    // two crossing points per ring (cut plane and wraparound), one column
    // of rings per remaining coordinate combination
    return 2 * (cfg.node_count() / cfg.dims[widest]);
}

TorusSim::TorusSim(TorusConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    node_count_ = cfg_.node_count();
    ports_per_node_ = 2 * cfg_.dims.size();
    coords_.reserve(static_cast<std::size_t>(node_count_));
    for (Index n = 0; n < node_count_; ++n) coords_.push_back(unflatten(n, cfg_));
    queues_.assign(static_cast<std::size_t>(node_count_),
                   std::vector<std::deque<Packet>>(ports_per_node_ + 1));
    pending_.resize(static_cast<std::size_t>(node_count_));
    link_busy_.assign(static_cast<std::size_t>(node_count_) * ports_per_node_, 0);
    link_used_.assign(link_busy_.size(), 0);
    occupancy_.assign(static_cast<std::size_t>(node_count_),
                      std::vector<Index>(ports_per_node_, 0));
    accepted_.assign(static_cast<std::size_t>(node_count_),
                     std::vector<Index>(ports_per_node_, 0));
    incoming_.assign(static_cast<std::size_t>(node_count_),
                     std::vector<std::vector<Packet>>(ports_per_node_));
}

Index TorusSim::neighbor(Index node, Port p) const {
    const auto& c = coords_[static_cast<std::size_t>(node)].coords;
    std::vector<Index> nc = c;
    const Index d = cfg_.dims[static_cast<std::size_t>(p.dim)];
    nc[static_cast<std::size_t>(p.dim)] = (c[static_cast<std::size_t>(p.dim)] + p.dir + d) % d;
    return flatten(nc, cfg_);
}

void TorusSim::enqueue(Packet p) {
    if (p.src < 0 || p.src >= node_count_) throw InvalidDestination(p.src, node_count_);
    if (p.dst < 0 || p.dst >= node_count_) throw InvalidDestination(p.dst, node_count_);
    p.id = next_packet_id_++;
    p.inject_cycle = cycle_;
    pending_[static_cast<std::size_t>(p.src)].push_back(p);
    ++injected_;
}

std::int64_t TorusSim::queued_packets() const {
    std::int64_t total = 0;
    for (const auto& q : pending_) total += static_cast<std::int64_t>(q.size());
    for (const auto& node : queues_)
        for (const auto& q : node) total += static_cast<std::int64_t>(q.size());
    return total;
}

void TorusSim::step(std::vector<Packet>* out) {
    // progress means router-to-router movement or delivery; source injection
    // alone must not keep the watchdog quiet
    bool progress = false;

    // source injection: at most one pending packet enters the injection queue
    for (Index n = 0; n < node_count_; ++n) {
        auto& pend = pending_[static_cast<std::size_t>(n)];
        auto& inj = queues_[static_cast<std::size_t>(n)][ports_per_node_];
        if (!pend.empty() && static_cast<Index>(inj.size()) < cfg_.buffer_depth) {
            inj.push_back(pend.front());
            pend.pop_front();
        }
    }

    // movement: snapshot in-port occupancy, then let each queue head eject,
    // advance, or stall; arrivals land in incoming_ and become visible next
    // cycle
    std::fill(link_used_.begin(), link_used_.end(), 0);
    for (Index n = 0; n < node_count_; ++n) {
        for (std::size_t q = 0; q < ports_per_node_; ++q) {
            occupancy_[static_cast<std::size_t>(n)][q] =
                static_cast<Index>(queues_[static_cast<std::size_t>(n)][q].size());
            accepted_[static_cast<std::size_t>(n)][q] = 0;
        }
    }

    const std::size_t nq = ports_per_node_ + 1;
    const std::size_t rotate = static_cast<std::size_t>(cycle_) % nq;
    for (Index n = 0; n < node_count_; ++n) {
        for (std::size_t qi = 0; qi < nq; ++qi) {
            auto& queue = queues_[static_cast<std::size_t>(n)][(qi + rotate) % nq];
            if (queue.empty()) continue;
            Packet& head = queue.front();
            if (head.dst == n) {
                head.deliver_cycle = cycle_ + cfg_.pipeline_latency;
                ++delivered_;
                total_latency_ += head.deliver_cycle - head.inject_cycle;
                if (out) out->push_back(head);
                queue.pop_front();
                progress = true;
                continue;
            }
            const Port port = route_next_hop(coords_[static_cast<std::size_t>(n)],
                                             coords_[static_cast<std::size_t>(head.dst)], cfg_);
            const std::size_t link = link_id(n, port);
            const Index v = neighbor(n, port);
            const std::size_t vp = in_port(port);
            const bool link_free = link_used_[link] < cfg_.link_width;
            // bubble flow control: a packet entering a ring (from injection
            // or from another dimension) must leave a free slot behind, so
            // it needs two free downstream entries; a packet continuing
            // along its ring needs one. This keeps every ring cycle from
            // filling completely, which is what would deadlock a wrapped
            // dimension under FIFO buffering.
            const std::size_t src_port = (qi + rotate) % nq;
            const bool continuing = src_port == vp;
            const Index required_free =
                continuing ? 1 : std::min<Index>(2, cfg_.buffer_depth);
            const bool space = occupancy_[static_cast<std::size_t>(v)][vp] +
                                   accepted_[static_cast<std::size_t>(v)][vp] + required_free <=
                               cfg_.buffer_depth;
            if (link_free && space) {
                ++link_used_[link];
                ++link_busy_[link];
                ++accepted_[static_cast<std::size_t>(v)][vp];
                incoming_[static_cast<std::size_t>(v)][vp].push_back(head);
                queue.pop_front();
                progress = true;
            } else {
                ++stall_cycles_;
            }
        }
    }

    for (Index n = 0; n < node_count_; ++n) {
        for (std::size_t p = 0; p < ports_per_node_; ++p) {
            auto& arr = incoming_[static_cast<std::size_t>(n)][p];
            for (Packet& pk : arr) queues_[static_cast<std::size_t>(n)][p].push_back(pk);
            arr.clear();
        }
    }

    ++cycle_;
    if (progress) {
        last_progress_cycle_ = cycle_;
    } else if (in_flight() > 0 && cycle_ - last_progress_cycle_ >= 10000) {
        throw SimulationStalled(cycle_);
    }
}

std::vector<Packet> TorusSim::run_until_drained() {
    std::vector<Packet> out;
    out.reserve(static_cast<std::size_t>(in_flight()));
    while (in_flight() > 0) step(&out);
    return out;
}

namespace {

// Fixed destination assignment for a traffic pattern; randomized draws per
// packet, the rest are static maps.
struct DestinationPolicy {
    TrafficPattern pattern;
    Index node_count;
    std::vector<Index> partner;  // unique pattern only

    Index draw(Index src, Rng& rng) const {
        switch (pattern) {
            case TrafficPattern::randomized: {
                const Index r = static_cast<Index>(
                    rng.next_below(static_cast<std::uint64_t>(node_count - 1)));
                return r >= src ? r + 1 : r;
            }
            case TrafficPattern::unique:
                return partner[static_cast<std::size_t>(src)];
            case TrafficPattern::permutation:
                // tornado-style half-ring shift over flat ids
                return (src + node_count / 2) % node_count;
            case TrafficPattern::nearest_neighbor:
                return -1;  // resolved by caller (needs coords)
        }
        return 0;
    }
};

}  // namespace

NetStats run_traffic(const TorusConfig& cfg, TrafficPattern pattern, double injection_rate,
                     std::int64_t warmup, std::int64_t measure) {
    cfg.validate();
    if (injection_rate < 0.0 || injection_rate > 1.0)
        throw ConfigError("injection_rate must be in [0, 1]");
    TorusSim sim(cfg);
    const Index n_nodes = sim.node_count();

    Rng rng(cfg.seed);
    DestinationPolicy policy{pattern, n_nodes, {}};
    if (pattern == TrafficPattern::unique) {
        Rng prng(cfg.seed ^ 0xd1b54a32d192ed03ULL);
        policy.partner = prng.derangement(n_nodes);
    }
    std::vector<Index> nn_partner;
    if (pattern == TrafficPattern::nearest_neighbor) {
        nn_partner.resize(static_cast<std::size_t>(n_nodes));
        for (Index s = 0; s < n_nodes; ++s) {
            NodeCoord c = unflatten(s, cfg);
            c.coords[0] = (c.coords[0] + 1) % cfg.dims[0];
            nn_partner[static_cast<std::size_t>(s)] = flatten(c.coords, cfg);
        }
    }

    NetStats stats;
    std::int64_t window_delivered = 0;
    std::int64_t stall_at_warmup = 0;
    std::vector<std::int64_t> busy_at_warmup;
    std::int64_t backlog_at_warmup = 0;
    std::vector<Packet> delivered;

    const std::int64_t total_cycles = warmup + measure;
    for (std::int64_t c = 0; c < total_cycles; ++c) {
        if (c == warmup) {
            stall_at_warmup = sim.stall_cycles();
            busy_at_warmup.assign(sim.link_busy().begin(), sim.link_busy().end());
            backlog_at_warmup = sim.in_flight();
        }
        for (Index node = 0; node < n_nodes; ++node) {
            if (rng.next_double() < injection_rate) {
                Packet p;
                p.src = node;
                p.dst = pattern == TrafficPattern::nearest_neighbor
                            ? nn_partner[static_cast<std::size_t>(node)]
                            : policy.draw(node, rng);
                sim.enqueue(p);
            }
        }
        delivered.clear();
        sim.step(&delivered);
        if (c >= warmup) {
            for (const Packet& p : delivered) {
                ++window_delivered;
                const std::int64_t lat = p.deliver_cycle - p.inject_cycle;
                stats.latencies.push_back(lat);
                stats.total_latency_cycles += lat;
            }
        }
    }

    stats.injected = sim.injected();
    stats.delivered = window_delivered;
    stats.stall_cycles = sim.stall_cycles() - stall_at_warmup;
    stats.link_busy_cycles.resize(sim.link_busy().size());
    std::int64_t busy_total = 0;
    for (std::size_t i = 0; i < stats.link_busy_cycles.size(); ++i) {
        const std::int64_t base = busy_at_warmup.empty() ? 0 : busy_at_warmup[i];
        stats.link_busy_cycles[i] = sim.link_busy()[i] - base;
        busy_total += stats.link_busy_cycles[i];
    }
    stats.accepted_rate = measure > 0 ? static_cast<double>(window_delivered) /
                                            (static_cast<double>(n_nodes) *
                                             static_cast<double>(measure))
                                      : 0.0;
    const double capacity = static_cast<double>(sim.link_count()) *
                            static_cast<double>(cfg.link_width) * static_cast<double>(measure);
    stats.utilization = capacity > 0 ? static_cast<double>(busy_total) / capacity : 0.0;
    // backlog still growing at window end means the offered rate exceeds the
    // delivered rate; informational only
    stats.saturation_not_reached = sim.in_flight() > backlog_at_warmup + n_nodes;
    return stats;
}

}  // namespace gp
