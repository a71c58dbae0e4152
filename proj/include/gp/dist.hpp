#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gp/node.hpp"
#include "gp/rng.hpp"

namespace gp {

enum class OwnerKind { block2d, block_row, hashed2d };

inline const char* owner_kind_name(OwnerKind k) {
    switch (k) {
        case OwnerKind::block2d: return "block-2d";
        case OwnerKind::block_row: return "block-row";
        case OwnerKind::hashed2d: return "hashed-2d";
    }
    return "?";
}

inline OwnerKind owner_kind_by_name(const std::string& name) {
    if (name == "block-2d") return OwnerKind::block2d;
    if (name == "block-row") return OwnerKind::block_row;
    if (name == "hashed-2d") return OwnerKind::hashed2d;
    throw ConfigError("unknown owner map kind '" + name + "'");
}

// Pure function mapping every (row, col) coordinate to its owning node.
// hashed-2d composes seeded row/column permutations with the 2D block map,
// which both balances heavy rows/columns and randomizes packet destinations.
struct OwnerMap {
    OwnerKind kind = OwnerKind::block2d;
    Index pr = 1;
    Index pc = 1;
    Index nrows = 0;
    Index ncols = 0;
    std::uint64_t seed = 0;
    std::vector<Index> row_perm;  // hashed-2d only
    std::vector<Index> col_perm;

    Index node_count() const { return pr * pc; }

    Index owner(Index row, Index col) const {
        Index r = row, c = col;
        if (kind == OwnerKind::hashed2d) {
            r = row_perm[static_cast<std::size_t>(row)];
            c = col_perm[static_cast<std::size_t>(col)];
        }
        const Index bs_r = (nrows + pr - 1) / pr;
        const Index bs_c = (ncols + pc - 1) / pc;
        const Index br = bs_r > 0 ? r / bs_r : 0;
        const Index bc = bs_c > 0 ? c / bs_c : 0;
        return br * pc + bc;
    }

    bool same_as(const OwnerMap& o) const {
        return kind == o.kind && pr == o.pr && pc == o.pc && nrows == o.nrows &&
               ncols == o.ncols && row_perm == o.row_perm && col_perm == o.col_perm;
    }

    static OwnerMap make(OwnerKind kind, Index nrows, Index ncols, Index nodes,
                         std::uint64_t seed = 0) {
        OwnerMap m;
        m.kind = kind;
        m.nrows = nrows;
        m.ncols = ncols;
        m.seed = seed;
        if (kind == OwnerKind::block_row) {
            m.pr = nodes;
            m.pc = 1;
        } else {
            Index pr = 1;
            for (Index d = 1; d * d <= nodes; ++d)
                if (nodes % d == 0) pr = d;
            m.pr = pr;
            m.pc = nodes / pr;
        }
        if (kind == OwnerKind::hashed2d) {
            Rng rr(seed ^ 0x6a09e667f3bcc909ULL);
            Rng rc(seed ^ 0xbb67ae8584caa73bULL);
            m.row_perm = rr.permutation(nrows);
            m.col_perm = rc.permutation(ncols);
        }
        return m;
    }

    // Owner map for a reduction result vector: the n entries are spread over
    // all nodes, keeping the hashed permutation along the surviving axis.
    OwnerMap vector_map(Axis axis) const {
        OwnerMap m;
        m.kind = kind;
        m.seed = seed;
        if (axis == Axis::rows) {  // result is nrows x 1
            m.nrows = nrows;
            m.ncols = 1;
            m.pr = node_count();
            m.pc = 1;
            m.row_perm = row_perm;
            if (kind == OwnerKind::hashed2d) m.col_perm = {0};
        } else {  // 1 x ncols
            m.nrows = 1;
            m.ncols = ncols;
            m.pr = 1;
            m.pc = node_count();
            m.col_perm = col_perm;
            if (kind == OwnerKind::hashed2d) m.row_perm = {0};
        }
        return m;
    }
};

// Default torus shape for a node count: up to three dimensions, each >= 2,
// as equal as possible (e.g. 64 -> 4x4x4, 16 -> 4x4, 8 -> 2x2x2).
inline std::vector<Index> default_dims(Index nodes) {
    std::vector<Index> factors;
    Index n = nodes;
    for (Index p = 2; p * p <= n; ++p) {
        while (n % p == 0) {
            factors.push_back(p);
            n /= p;
        }
    }
    if (n > 1) factors.push_back(n);
    std::vector<Index> dims{1, 1, 1};
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
        auto smallest = std::min_element(dims.begin(), dims.end());
        *smallest *= *it;
    }
    std::vector<Index> out;
    for (Index d : dims)
        if (d > 1) out.push_back(d);
    std::sort(out.begin(), out.end());
    return out;
}

// Aggregate network accounting over the communication phases of one
// distributed operation.
struct NetSummary {
    std::int64_t packets = 0;
    std::int64_t delivered = 0;
    std::int64_t makespan_cycles = 0;
    std::int64_t stall_cycles = 0;
    std::int64_t busy_link_cycles = 0;
    double utilization = 0.0;
    std::int64_t phases = 0;
};

struct SimReport {
    std::int64_t total_cycles = 0;
    std::vector<CycleLedger> per_node;
    NetSummary net;
    std::int64_t partial_products = 0;
    std::vector<std::int64_t> per_node_partials;     // generated
    std::vector<std::int64_t> per_node_accumulated;  // entering sorters
    std::vector<std::int64_t> per_node_stored;       // result shard nnz
    double load_imbalance = 1.0;  // max/mean generated partials
    double throughput_proxy = 0.0;

    void finalize() {
        if (!per_node_partials.empty()) {
            std::int64_t total = 0, mx = 0;
            for (auto v : per_node_partials) {
                total += v;
                mx = std::max(mx, v);
            }
            load_imbalance =
                total > 0 ? static_cast<double>(mx) * static_cast<double>(per_node_partials.size()) /
                                static_cast<double>(total)
                          : 1.0;
        }
        throughput_proxy = total_cycles > 0 ? static_cast<double>(partial_products) /
                                                  static_cast<double>(total_cycles)
                                            : 0.0;
    }
};

// Simulated machine: an array of accelerator nodes plus (for >1 node) the
// toroidal network. Single-threaded and deterministic per seed.
template <typename T>
class Machine {
public:
    explicit Machine(Index node_count, std::vector<Index> dims = {},
                     SorterConfig sorter = {32}, std::int64_t controller_overhead = 100,
                     TorusConfig net_template = {}) {
        if (node_count < 1) throw ConfigError("machine needs at least one node");
        net_ = net_template;
        net_.dims = dims.empty() ? default_dims(node_count) : std::move(dims);
        if (node_count > 1) {
            Index prod = 1;
            for (Index d : net_.dims) prod *= d;
            if (prod != node_count)
                throw GridMismatch("torus dims do not multiply to node count");
            net_.validate();
        }
        nodes_.resize(static_cast<std::size_t>(node_count));
        for (Index i = 0; i < node_count; ++i) {
            nodes_[static_cast<std::size_t>(i)].node_id = i;
            nodes_[static_cast<std::size_t>(i)].sorter = sorter;
            nodes_[static_cast<std::size_t>(i)].controller_overhead = controller_overhead;
        }
    }

    Index node_count() const { return static_cast<Index>(nodes_.size()); }
    NodeState<T>& node(Index i) { return nodes_[static_cast<std::size_t>(i)]; }
    const NodeState<T>& node(Index i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const TorusConfig& net_config() const { return net_; }
    bool has_network() const { return node_count() > 1; }

    struct PhaseNet {
        std::int64_t packets = 0;
        std::int64_t makespan = 0;
        std::int64_t stalls = 0;
        std::int64_t busy = 0;
        double utilization = 0.0;
    };

    // Ships one batch of cross-node packets through a fresh network run and
    // distributes deliveries per destination in delivery order.
    PhaseNet ship(const std::vector<std::vector<Packet>>& sends,
                  std::vector<std::vector<Packet>>& received) {
        received.assign(nodes_.size(), {});
        PhaseNet phase;
        std::int64_t count = 0;
        for (const auto& s : sends) count += static_cast<std::int64_t>(s.size());
        phase.packets = count;
        if (count == 0) return phase;
        if (!has_network())
            throw Error("dist.InternalError", "cross-node packet on single-node machine");
        TorusSim sim(net_);
        for (const auto& s : sends)
            for (const Packet& p : s) sim.enqueue(p);
        auto delivered = sim.run_until_drained();
        for (const Packet& p : delivered)
            received[static_cast<std::size_t>(p.dst)].push_back(p);
        phase.makespan = sim.cycle();
        phase.stalls = sim.stall_cycles();
        for (auto b : sim.link_busy()) phase.busy += b;
        const double cap = static_cast<double>(sim.link_count()) *
                           static_cast<double>(net_.link_width) *
                           static_cast<double>(phase.makespan);
        phase.utilization = cap > 0 ? static_cast<double>(phase.busy) / cap : 0.0;
        return phase;
    }

private:
    TorusConfig net_;
    std::vector<NodeState<T>> nodes_;
};

template <typename T>
struct DistMatrix {
    std::string handle;
    Index nrows = 0;
    Index ncols = 0;
    OwnerMap map;
    std::vector<SparseMatrix<T>> shards;  // indexed by node id

    std::int64_t total_nnz() const {
        std::int64_t n = 0;
        for (const auto& s : shards) n += s.nnz();
        return n;
    }
};

namespace detail {

template <typename T>
void fold_phase(NetSummary& net, const typename Machine<T>::PhaseNet& p) {
    net.packets += p.packets;
    net.delivered += p.packets;
    net.makespan_cycles += p.makespan;
    net.stall_cycles += p.stalls;
    net.busy_link_cycles += p.busy;
    ++net.phases;
}

// Max over nodes of the busiest module within one phase delta.
template <typename T>
std::int64_t phase_busy(const Machine<T>& m, const std::vector<CycleLedger>& before) {
    std::int64_t mx = 0;
    for (Index i = 0; i < m.node_count(); ++i) {
        const CycleLedger& now = m.node(i).ledger;
        const CycleLedger& b = before[static_cast<std::size_t>(i)];
        CycleLedger d;
        d.reader_cycles = now.reader_cycles - b.reader_cycles;
        d.writer_cycles = now.writer_cycles - b.writer_cycles;
        d.alu_cycles = now.alu_cycles - b.alu_cycles;
        d.sorter_cycles = now.sorter_cycles - b.sorter_cycles;
        d.comm_cycles = now.comm_cycles - b.comm_cycles;
        mx = std::max(mx, d.module_max());
    }
    return mx;
}

template <typename T>
std::vector<CycleLedger> snapshot(const Machine<T>& m) {
    std::vector<CycleLedger> out;
    out.reserve(static_cast<std::size_t>(m.node_count()));
    for (Index i = 0; i < m.node_count(); ++i) out.push_back(m.node(i).ledger);
    return out;
}

template <typename T>
std::vector<CycleLedger> ledger_delta(const Machine<T>& m,
                                      const std::vector<CycleLedger>& before) {
    std::vector<CycleLedger> out;
    for (Index i = 0; i < m.node_count(); ++i) {
        const CycleLedger& now = m.node(i).ledger;
        const CycleLedger& b = before[static_cast<std::size_t>(i)];
        CycleLedger d;
        d.reader_cycles = now.reader_cycles - b.reader_cycles;
        d.writer_cycles = now.writer_cycles - b.writer_cycles;
        d.alu_cycles = now.alu_cycles - b.alu_cycles;
        d.sorter_cycles = now.sorter_cycles - b.sorter_cycles;
        d.comm_cycles = now.comm_cycles - b.comm_cycles;
        d.controller_overhead_cycles =
            now.controller_overhead_cycles - b.controller_overhead_cycles;
        out.push_back(d);
    }
    return out;
}

}  // namespace detail

// Ships every element of `a` from its ingest stripe (block-row over the
// machine) to its owner through the network, then builds shards.
template <typename T>
DistMatrix<T> distribute(const SparseMatrix<T>& a, const OwnerMap& map, Machine<T>& mach,
                         const std::string& handle, SimReport* report = nullptr) {
    if (map.node_count() != mach.node_count())
        throw GridMismatch("owner map grid " + std::to_string(map.pr) + "x" +
                           std::to_string(map.pc) + " does not match machine of " +
                           std::to_string(mach.node_count()) + " nodes");
    if (map.nrows != a.nrows() || map.ncols != a.ncols())
        throw GridMismatch("owner map shaped for different matrix dimensions");
    const Index n_nodes = mach.node_count();
    const OwnerMap stripe = OwnerMap::make(OwnerKind::block_row, a.nrows(), a.ncols(), n_nodes);
    std::vector<std::vector<Triple<T>>> local(static_cast<std::size_t>(n_nodes));
    std::vector<std::vector<Packet>> sends(static_cast<std::size_t>(n_nodes));
    const auto before = detail::snapshot(mach);
    for (const auto& t : a.triples()) {
        const Index host = stripe.owner(t.row, t.col);
        const Index owner = map.owner(t.row, t.col);
        if (host == owner) {
            local[static_cast<std::size_t>(owner)].push_back(t);
        } else {
            sends[static_cast<std::size_t>(host)].push_back(
                comm_packetize(mach.node(host), t, owner, n_nodes));
        }
    }
    std::vector<std::vector<Packet>> received;
    auto phase = mach.ship(sends, received);
    DistMatrix<T> d;
    d.handle = handle;
    d.nrows = a.nrows();
    d.ncols = a.ncols();
    d.map = map;
    d.shards.resize(static_cast<std::size_t>(n_nodes));
    for (Index n = 0; n < n_nodes; ++n) {
        auto triples = std::move(local[static_cast<std::size_t>(n)]);
        for (const Packet& p : received[static_cast<std::size_t>(n)])
            triples.push_back(comm_depacketize<T>(mach.node(n), p));
        d.shards[static_cast<std::size_t>(n)] = build_coo(std::move(triples), a.nrows(), a.ncols());
    }
    if (report) {
        detail::fold_phase<T>(report->net, phase);
        report->total_cycles += detail::phase_busy(mach, before) + phase.makespan;
        report->per_node = detail::ledger_delta(mach, before);
    }
    return d;
}

// Test/IO oracle path: concatenates shards outside the machine model,
// charging zero cycles.
template <typename T>
SparseMatrix<T> gather(const DistMatrix<T>& d) {
    std::vector<Triple<T>> all;
    all.reserve(static_cast<std::size_t>(d.total_nnz()));
    for (const auto& s : d.shards) {
        auto t = s.triples();
        all.insert(all.end(), t.begin(), t.end());
    }
    return build_coo(std::move(all), d.nrows, d.ncols);
}

// Distributed SpGEMM, outer-product dataflow:
//   phase 1  B rows are shipped to the nodes holding matching A columns
//   phase 2  each node forms partial products A(i,k)*B(k,j) and routes each
//            to owner_C(i, j), one partial product per packet
//   phase 3  the k-way sorter plus ALU coalesce partials at the C owners
// Gathered result equals spgemm_ref exactly for exact value domains.
template <typename T>
std::pair<DistMatrix<T>, SimReport> dist_spgemm(const DistMatrix<T>& a, const DistMatrix<T>& b,
                                                const Semiring<T>& s, Machine<T>& mach,
                                                const OwnerMap* cmap_opt = nullptr) {
    if (a.ncols != b.nrows)
        throw DimensionMismatch("dist_spgemm: inner dimensions " + std::to_string(a.ncols) +
                                " vs " + std::to_string(b.nrows));
    const Index n_nodes = mach.node_count();
    if (a.map.node_count() != n_nodes || b.map.node_count() != n_nodes)
        throw GridMismatch("operands distributed over a different node count");
    const OwnerMap cmap = cmap_opt ? *cmap_opt
                                   : OwnerMap::make(a.map.kind, a.nrows, b.ncols, n_nodes,
                                                    a.map.seed + 1);

    SimReport report;
    report.per_node_partials.assign(static_cast<std::size_t>(n_nodes), 0);
    report.per_node_accumulated.assign(static_cast<std::size_t>(n_nodes), 0);
    report.per_node_stored.assign(static_cast<std::size_t>(n_nodes), 0);
    const auto op_start = detail::snapshot(mach);

    // B rows by inner index, with owning node per element
    struct BEntry {
        Index col;
        T val;
        Index owner;
    };
    std::vector<std::vector<BEntry>> brow(static_cast<std::size_t>(a.ncols));
    for (Index n = 0; n < n_nodes; ++n) {
        for (const auto& t : b.shards[static_cast<std::size_t>(n)].triples())
            brow[static_cast<std::size_t>(t.row)].push_back({t.col, t.val, n});
    }
    for (auto& row : brow) {
        std::sort(row.begin(), row.end(), [](const BEntry& x, const BEntry& y) {
            return x.col != y.col ? x.col < y.col : x.owner < y.owner;
        });
    }

    // which nodes need which inner index (they hold A(:,k))
    std::vector<std::vector<Index>> needers(static_cast<std::size_t>(a.ncols));
    for (Index n = 0; n < n_nodes; ++n) {
        std::vector<char> seen(static_cast<std::size_t>(a.ncols), 0);
        for (const auto& t : a.shards[static_cast<std::size_t>(n)].triples()) {
            if (!seen[static_cast<std::size_t>(t.col)]) {
                seen[static_cast<std::size_t>(t.col)] = 1;
                needers[static_cast<std::size_t>(t.col)].push_back(n);
            }
        }
    }

    // phase 1: operand alignment traffic
    auto before = detail::snapshot(mach);
    std::vector<std::vector<Packet>> sends(static_cast<std::size_t>(n_nodes));
    for (Index k = 0; k < a.ncols; ++k) {
        for (Index nd : needers[static_cast<std::size_t>(k)]) {
            for (const BEntry& e : brow[static_cast<std::size_t>(k)]) {
                if (e.owner == nd) continue;
                mach.node(e.owner).ledger.reader_cycles += 1;  // re-read for transmission
                sends[static_cast<std::size_t>(e.owner)].push_back(comm_packetize(
                    mach.node(e.owner), Triple<T>{k, e.col, e.val}, nd, n_nodes));
            }
        }
    }
    std::vector<std::vector<Packet>> received;
    auto phase1 = mach.ship(sends, received);
    report.total_cycles += detail::phase_busy(mach, before) + phase1.makespan;
    detail::fold_phase<T>(report.net, phase1);

    // per-node view of B rows: local elements plus received copies
    std::vector<std::map<Index, std::vector<std::pair<Index, T>>>> bview(
        static_cast<std::size_t>(n_nodes));
    for (Index k = 0; k < a.ncols; ++k) {
        for (const BEntry& e : brow[static_cast<std::size_t>(k)]) {
            bview[static_cast<std::size_t>(e.owner)][k].emplace_back(e.col, e.val);
        }
    }
    for (Index n = 0; n < n_nodes; ++n) {
        for (const Packet& p : received[static_cast<std::size_t>(n)]) {
            auto t = comm_depacketize<T>(mach.node(n), p);
            bview[static_cast<std::size_t>(n)][t.row].emplace_back(t.col, t.val);
        }
        for (auto& [k, row] : bview[static_cast<std::size_t>(n)]) std::sort(row.begin(), row.end());
    }

    // phase 2: partial product generation and routing
    before = detail::snapshot(mach);
    for (auto& sv : sends) sv.clear();
    std::vector<std::vector<Triple<T>>> local_partials(static_cast<std::size_t>(n_nodes));
    std::int64_t total_partials = 0;
    for (Index n = 0; n < n_nodes; ++n) {
        auto& node = mach.node(n);
        const auto at = a.shards[static_cast<std::size_t>(n)].triples();
        node.ledger.reader_cycles += static_cast<std::int64_t>(at.size());
        const auto& view = bview[static_cast<std::size_t>(n)];
        for (const auto& ae : at) {
            auto it = view.find(ae.col);
            if (it == view.end()) continue;
            for (const auto& [j, bv] : it->second) {
                const Triple<T> partial{ae.row, j, s.mul(ae.val, bv)};
                node.ledger.alu_cycles += 1;
                ++total_partials;
                ++report.per_node_partials[static_cast<std::size_t>(n)];
                const Index owner = cmap.owner(partial.row, partial.col);
                if (owner == n) {
                    local_partials[static_cast<std::size_t>(n)].push_back(partial);
                } else {
                    sends[static_cast<std::size_t>(n)].push_back(
                        comm_packetize(node, partial, owner, n_nodes));
                }
            }
        }
    }
    auto phase2 = mach.ship(sends, received);
    report.total_cycles += detail::phase_busy(mach, before) + phase2.makespan;
    detail::fold_phase<T>(report.net, phase2);
    report.partial_products = total_partials;

    // phase 3: sorter + ALU accumulation at the C owners
    before = detail::snapshot(mach);
    DistMatrix<T> c;
    c.handle = a.handle + "*" + b.handle;
    c.nrows = a.nrows;
    c.ncols = b.ncols;
    c.map = cmap;
    c.shards.resize(static_cast<std::size_t>(n_nodes));
    for (Index n = 0; n < n_nodes; ++n) {
        auto& node = mach.node(n);
        auto partials = std::move(local_partials[static_cast<std::size_t>(n)]);
        for (const Packet& p : received[static_cast<std::size_t>(n)])
            partials.push_back(comm_depacketize<T>(node, p));
        report.per_node_accumulated[static_cast<std::size_t>(n)] =
            static_cast<std::int64_t>(partials.size());
        node.ledger.sorter_cycles +=
            sorter_cycles(static_cast<std::int64_t>(partials.size()), node.sorter.k);
        std::stable_sort(partials.begin(), partials.end(),
                         [](const Triple<T>& x, const Triple<T>& y) {
                             return x.row != y.row ? x.row < y.row : x.col < y.col;
                         });
        node.ledger.alu_cycles += static_cast<std::int64_t>(partials.size());
        std::vector<Triple<T>> folded;
        for (const auto& t : partials) {
            if (!folded.empty() && folded.back().row == t.row && folded.back().col == t.col)
                folded.back().val = s.add(folded.back().val, t.val);
            else
                folded.push_back(t);
        }
        std::erase_if(folded, [&](const Triple<T>& t) { return t.val == s.zero; });
        node.ledger.writer_cycles += static_cast<std::int64_t>(folded.size());
        report.per_node_stored[static_cast<std::size_t>(n)] =
            static_cast<std::int64_t>(folded.size());
        c.shards[static_cast<std::size_t>(n)] =
            SparseMatrix<T>::adopt_coo(c.nrows, c.ncols, std::move(folded));
    }
    report.total_cycles += detail::phase_busy(mach, before);

    std::int64_t overhead = 0;
    for (Index n = 0; n < n_nodes; ++n) {
        mach.node(n).ledger.controller_overhead_cycles += mach.node(n).controller_overhead;
        overhead = std::max(overhead, mach.node(n).controller_overhead);
    }
    report.total_cycles += overhead;
    report.per_node = detail::ledger_delta(mach, op_start);
    report.finalize();
    return {std::move(c), std::move(report)};
}

// Dot operations: purely node-local; operands must share an owner map.
template <typename T>
std::pair<DistMatrix<T>, SimReport> dist_ewise(const DistMatrix<T>& a, const DistMatrix<T>& b,
                                               const EwiseOp<T>& op, Machine<T>& mach) {
    if (a.nrows != b.nrows || a.ncols != b.ncols)
        throw DimensionMismatch("dist_ewise: shapes differ");
    if (!a.map.same_as(b.map))
        throw OwnerMapMismatch("operands use different owner maps; redistribute one first");
    const Index n_nodes = mach.node_count();
    SimReport report;
    report.per_node_stored.assign(static_cast<std::size_t>(n_nodes), 0);
    const auto before = detail::snapshot(mach);
    DistMatrix<T> c;
    c.handle = a.handle + "." + b.handle;
    c.nrows = a.nrows;
    c.ncols = a.ncols;
    c.map = a.map;
    c.shards.resize(static_cast<std::size_t>(n_nodes));
    for (Index n = 0; n < n_nodes; ++n) {
        auto& node = mach.node(n);
        const auto& sa = a.shards[static_cast<std::size_t>(n)];
        const auto& sb = b.shards[static_cast<std::size_t>(n)];
        node.ledger.reader_cycles += sa.nnz() + sb.nnz();
        node.ledger.alu_cycles += sa.nnz() + sb.nnz();
        try {
            c.shards[static_cast<std::size_t>(n)] = ewise_ref(sa, sb, op);
        } catch (const DivisionByZero& e) {
            throw Error(e.code(), std::string(e.what()) + " on node " + std::to_string(n));
        }
        node.ledger.writer_cycles += c.shards[static_cast<std::size_t>(n)].nnz();
        report.per_node_stored[static_cast<std::size_t>(n)] =
            c.shards[static_cast<std::size_t>(n)].nnz();
        node.ledger.controller_overhead_cycles += node.controller_overhead;
    }
    report.total_cycles = detail::phase_busy(mach, before);
    std::int64_t overhead = 0;
    for (Index n = 0; n < n_nodes; ++n)
        overhead = std::max(overhead, mach.node(n).controller_overhead);
    report.total_cycles += overhead;
    report.per_node = detail::ledger_delta(mach, before);
    report.finalize();
    return {std::move(c), std::move(report)};
}

enum class ApplyReduceKind { scalar_apply, reduce_rows, reduce_cols, redistribute };

// op(k, A) family: scalar apply and redistribution keep or change placement
// without arithmetic; reductions fold per-row/col partials at the result
// vector's owners.
template <typename T>
std::pair<DistMatrix<T>, SimReport> dist_apply_reduce(const DistMatrix<T>& a,
                                                      ApplyReduceKind kind, BinOp<T> fn, T k,
                                                      Machine<T>& mach,
                                                      const OwnerMap* new_map = nullptr) {
    const Index n_nodes = mach.node_count();
    SimReport report;
    report.per_node_stored.assign(static_cast<std::size_t>(n_nodes), 0);
    const auto op_start = detail::snapshot(mach);
    DistMatrix<T> c;
    c.handle = a.handle + "'";

    if (kind == ApplyReduceKind::scalar_apply) {
        c.nrows = a.nrows;
        c.ncols = a.ncols;
        c.map = a.map;
        c.shards.resize(static_cast<std::size_t>(n_nodes));
        for (Index n = 0; n < n_nodes; ++n) {
            auto& node = mach.node(n);
            const auto& sa = a.shards[static_cast<std::size_t>(n)];
            node.ledger.reader_cycles += sa.nnz();
            node.ledger.alu_cycles += sa.nnz();
            c.shards[static_cast<std::size_t>(n)] = apply_scalar(fn, k, sa);
            node.ledger.writer_cycles += c.shards[static_cast<std::size_t>(n)].nnz();
            node.ledger.controller_overhead_cycles += node.controller_overhead;
        }
    } else if (kind == ApplyReduceKind::redistribute) {
        if (!new_map) throw ConfigError("redistribute needs a target owner map");
        if (new_map->node_count() != n_nodes)
            throw GridMismatch("target owner map grid does not match machine");
        c.nrows = a.nrows;
        c.ncols = a.ncols;
        c.map = *new_map;
        std::vector<std::vector<Triple<T>>> local(static_cast<std::size_t>(n_nodes));
        std::vector<std::vector<Packet>> sends(static_cast<std::size_t>(n_nodes));
        for (Index n = 0; n < n_nodes; ++n) {
            auto& node = mach.node(n);
            const auto st = a.shards[static_cast<std::size_t>(n)].triples();
            node.ledger.reader_cycles += static_cast<std::int64_t>(st.size());
            for (const auto& t : st) {
                const Index owner = new_map->owner(t.row, t.col);
                if (owner == n)
                    local[static_cast<std::size_t>(n)].push_back(t);
                else
                    sends[static_cast<std::size_t>(n)].push_back(
                        comm_packetize(node, t, owner, n_nodes));
            }
        }
        std::vector<std::vector<Packet>> received;
        auto phase = mach.ship(sends, received);
        detail::fold_phase<T>(report.net, phase);
        report.total_cycles += phase.makespan;
        c.shards.resize(static_cast<std::size_t>(n_nodes));
        for (Index n = 0; n < n_nodes; ++n) {
            auto& node = mach.node(n);
            auto triples = std::move(local[static_cast<std::size_t>(n)]);
            for (const Packet& p : received[static_cast<std::size_t>(n)])
                triples.push_back(comm_depacketize<T>(node, p));
            node.ledger.writer_cycles += static_cast<std::int64_t>(triples.size());
            c.shards[static_cast<std::size_t>(n)] = build_coo(std::move(triples), a.nrows, a.ncols);
            node.ledger.controller_overhead_cycles += node.controller_overhead;
        }
    } else {
        const Axis axis = kind == ApplyReduceKind::reduce_rows ? Axis::rows : Axis::cols;
        c.map = a.map.vector_map(axis);
        c.nrows = c.map.nrows;
        c.ncols = c.map.ncols;
        std::vector<std::vector<Triple<T>>> local(static_cast<std::size_t>(n_nodes));
        std::vector<std::vector<Packet>> sends(static_cast<std::size_t>(n_nodes));
        for (Index n = 0; n < n_nodes; ++n) {
            auto& node = mach.node(n);
            const auto& sa = a.shards[static_cast<std::size_t>(n)];
            node.ledger.reader_cycles += sa.nnz();
            node.ledger.alu_cycles += sa.nnz();
            const auto part = reduce(sa, axis, fn);
            for (const auto& t : part.triples()) {
                const Index owner = c.map.owner(t.row, t.col);
                if (owner == n)
                    local[static_cast<std::size_t>(n)].push_back(t);
                else
                    sends[static_cast<std::size_t>(n)].push_back(
                        comm_packetize(node, t, owner, n_nodes));
            }
        }
        std::vector<std::vector<Packet>> received;
        auto phase = mach.ship(sends, received);
        detail::fold_phase<T>(report.net, phase);
        report.total_cycles += phase.makespan;
        c.shards.resize(static_cast<std::size_t>(n_nodes));
        for (Index n = 0; n < n_nodes; ++n) {
            auto& node = mach.node(n);
            auto partials = std::move(local[static_cast<std::size_t>(n)]);
            for (const Packet& p : received[static_cast<std::size_t>(n)])
                partials.push_back(comm_depacketize<T>(node, p));
            node.ledger.sorter_cycles +=
                sorter_cycles(static_cast<std::int64_t>(partials.size()), node.sorter.k);
            std::stable_sort(partials.begin(), partials.end(),
                             [](const Triple<T>& x, const Triple<T>& y) {
                                 return x.row != y.row ? x.row < y.row : x.col < y.col;
                             });
            node.ledger.alu_cycles += static_cast<std::int64_t>(partials.size());
            std::vector<Triple<T>> folded;
            for (const auto& t : partials) {
                if (!folded.empty() && folded.back().row == t.row && folded.back().col == t.col)
                    folded.back().val = fn(folded.back().val, t.val);
                else
                    folded.push_back(t);
            }
            node.ledger.writer_cycles += static_cast<std::int64_t>(folded.size());
            c.shards[static_cast<std::size_t>(n)] =
                SparseMatrix<T>::adopt_coo(c.nrows, c.ncols, std::move(folded));
            node.ledger.controller_overhead_cycles += node.controller_overhead;
        }
    }

    for (Index n = 0; n < n_nodes; ++n) {
        report.per_node_stored[static_cast<std::size_t>(n)] =
            c.shards[static_cast<std::size_t>(n)].nnz();
    }
    report.total_cycles += detail::phase_busy(mach, op_start);
    std::int64_t overhead = 0;
    for (Index n = 0; n < n_nodes; ++n)
        overhead = std::max(overhead, mach.node(n).controller_overhead);
    report.total_cycles += overhead;
    report.per_node = detail::ledger_delta(mach, op_start);
    report.finalize();
    return {std::move(c), std::move(report)};
}

struct LoadReport {
    std::vector<std::int64_t> stored_nnz;
    std::vector<std::int64_t> generated_partials;
    std::vector<std::int64_t> accumulated_partials;
    double stored_imbalance = 1.0;
    double generated_imbalance = 1.0;
    double accumulated_imbalance = 1.0;
};

inline double max_over_mean(const std::vector<std::int64_t>& v) {
    if (v.empty()) return 1.0;
    std::int64_t total = 0, mx = 0;
    for (auto x : v) {
        total += x;
        mx = std::max(mx, x);
    }
    if (total == 0) return 1.0;
    return static_cast<double>(mx) * static_cast<double>(v.size()) / static_cast<double>(total);
}

template <typename T>
LoadReport balance_stats(const DistMatrix<T>& d) {
    LoadReport r;
    for (const auto& s : d.shards) r.stored_nnz.push_back(s.nnz());
    r.stored_imbalance = max_over_mean(r.stored_nnz);
    return r;
}

inline LoadReport balance_stats(const SimReport& rep) {
    LoadReport r;
    r.stored_nnz = rep.per_node_stored;
    r.generated_partials = rep.per_node_partials;
    r.accumulated_partials = rep.per_node_accumulated;
    r.stored_imbalance = max_over_mean(r.stored_nnz);
    r.generated_imbalance = max_over_mean(r.generated_partials);
    r.accumulated_imbalance = max_over_mean(r.accumulated_partials);
    return r;
}

}  // namespace gp
