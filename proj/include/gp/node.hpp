#pragma once

#include <cstring>
#include <map>
#include <string>

#include "gp/kernels.hpp"
#include "gp/sorter.hpp"
#include "gp/torus.hpp"

namespace gp {

// Value <-> raw 64-bit payload, so packets and sort records can carry either
// value kind without templating the network.
template <typename T>
std::uint64_t raw_bits(T v) {
    static_assert(sizeof(T) == 8);
    std::uint64_t out;
    std::memcpy(&out, &v, 8);
    return out;
}

template <typename T>
T from_bits(std::uint64_t raw) {
    static_assert(sizeof(T) == 8);
    T out;
    std::memcpy(&out, &raw, 8);
    return out;
}

// Per-module cycle totals for one node. Modules run concurrently within an
// instruction phase, so busy time is the max over modules plus the fixed
// controller setup cost.
struct CycleLedger {
    std::int64_t reader_cycles = 0;
    std::int64_t writer_cycles = 0;
    std::int64_t alu_cycles = 0;
    std::int64_t sorter_cycles = 0;
    std::int64_t comm_cycles = 0;
    std::int64_t controller_overhead_cycles = 0;

    CycleLedger& operator+=(const CycleLedger& o) {
        reader_cycles += o.reader_cycles;
        writer_cycles += o.writer_cycles;
        alu_cycles += o.alu_cycles;
        sorter_cycles += o.sorter_cycles;
        comm_cycles += o.comm_cycles;
        controller_overhead_cycles += o.controller_overhead_cycles;
        return *this;
    }

    std::int64_t module_max() const {
        std::int64_t m = reader_cycles;
        m = std::max(m, writer_cycles);
        m = std::max(m, alu_cycles);
        m = std::max(m, sorter_cycles);
        m = std::max(m, comm_cycles);
        return m;
    }

    std::int64_t busy_time() const { return module_max() + controller_overhead_cycles; }
};

enum class StreamOrder { row_major, col_major };

// One accelerator-based node: cacheless local store of matrix shards plus a
// cycle ledger for the reader/writer/ALU/sorter/comm modules.
template <typename T>
struct NodeState {
    Index node_id = 0;
    std::map<std::string, SparseMatrix<T>> local_store;
    SorterConfig sorter{32};
    std::int64_t controller_overhead = 100;
    CycleLedger ledger;

    const SparseMatrix<T>& shard(const std::string& handle) const {
        auto it = local_store.find(handle);
        if (it == local_store.end()) throw UnknownHandle(handle);
        return it->second;
    }
};

// Streams every stored element of the shard in the requested order, one
// reader cycle per element. Layouts whose storage order differs from the
// requested order pay a charged re-sort on the sorter module.
template <typename T>
std::vector<Triple<T>> reader_stream(NodeState<T>& st, const std::string& handle,
                                     StreamOrder order) {
    const SparseMatrix<T>& m = st.shard(handle);
    st.ledger.reader_cycles += m.nnz();
    const bool natural_col = m.layout() == Layout::csc;
    const bool want_col = order == StreamOrder::col_major;
    if (m.nnz() > 0 && want_col != natural_col)
        st.ledger.sorter_cycles += sorter_cycles(m.nnz(), st.sorter.k);
    auto t = m.triples();  // row-major canonical
    if (want_col) {
        std::sort(t.begin(), t.end(), [](const Triple<T>& a, const Triple<T>& b) {
            return a.col != b.col ? a.col < b.col : a.row < b.row;
        });
    }
    return t;
}

// Stores a stream already sorted in the target layout's canonical order;
// pointer-array generation rides along at no extra instruction cost.
template <typename T>
void writer_commit(NodeState<T>& st, const std::string& handle,
                   const std::vector<Triple<T>>& sorted, Index nrows, Index ncols,
                   Layout target) {
    const bool by_col = target == Layout::csc;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const auto& p = sorted[i - 1];
        const auto& c = sorted[i];
        const bool ok = by_col ? (p.col < c.col || (p.col == c.col && p.row < c.row))
                               : (p.row < c.row || (p.row == c.row && p.col < c.col));
        if (!ok) throw UnsortedInput("writer_commit");
    }
    st.ledger.writer_cycles += static_cast<std::int64_t>(sorted.size());
    std::vector<Triple<T>> canonical = sorted;
    if (by_col) {
        std::sort(canonical.begin(), canonical.end(), [](const Triple<T>& a, const Triple<T>& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
    }
    auto m = SparseMatrix<T>::adopt_coo(nrows, ncols, std::move(canonical));
    st.local_store.insert_or_assign(handle, convert(m, target));
}

// Index-match accumulation over a (row, col)-sorted stream; one ALU cycle
// per input element.
template <typename T>
std::vector<Triple<T>> alu_stream(NodeState<T>& st, const std::vector<Triple<T>>& in,
                                  BinOp<T> op) {
    st.ledger.alu_cycles += static_cast<std::int64_t>(in.size());
    std::vector<Triple<T>> out;
    out.reserve(in.size());
    for (const auto& t : in) {
        if (!out.empty()) {
            const auto& prev = out.back();
            if (t.row < prev.row || (t.row == prev.row && t.col < prev.col))
                throw UnsortedInput("alu_stream");
            if (t.row == prev.row && t.col == prev.col) {
                out.back().val = op(out.back().val, t.val);
                continue;
            }
        }
        out.push_back(t);
    }
    return out;
}

template <typename T>
Packet comm_packetize(NodeState<T>& st, const Triple<T>& el, Index dst, Index node_count,
                      int priority = 0) {
    if (dst < 0 || dst >= node_count) throw InvalidDestination(dst, node_count);
    st.ledger.comm_cycles += 1;
    Packet p;
    p.src = st.node_id;
    p.dst = dst;
    p.row = el.row;
    p.col = el.col;
    p.raw_val = raw_bits(el.val);
    p.priority = priority;
    return p;
}

template <typename T>
Triple<T> comm_depacketize(NodeState<T>& st, const Packet& p) {
    st.ledger.comm_cycles += 1;
    return {p.row, p.col, from_bits<T>(p.raw_val)};
}

// Table-I instruction descriptor for the local phase run by the controller.
template <typename T>
struct Instruction {
    enum class Kind {
        ewise_add, ewise_sub, ewise_mul, ewise_div,
        apply_scalar, reduce_rows, reduce_cols, spgemm
    };
    Kind kind;
    std::string a;
    std::string b;        // second operand handle (ewise, spgemm)
    std::string out;
    T scalar = T{};       // apply_scalar
    BinOp<T> scalar_fn = nullptr;   // apply_scalar / reduce
    Semiring<T> semiring = plus_times<T>();
};

// Sequences one instruction over resident shards: streams operands through
// reader, ALU (and sorter for spgemm partials), writes the result back, and
// returns the ledger delta. Busy time of the delta is
// max(active module cycles) + controller overhead.
template <typename T>
CycleLedger run_instruction(NodeState<T>& st, const Instruction<T>& instr) {
    using Kind = typename Instruction<T>::Kind;
    const CycleLedger before = st.ledger;

    auto charge_ewise = [&](const EwiseOp<T>& op) {
        const auto& a = st.shard(instr.a);
        const auto& b = st.shard(instr.b);
        st.ledger.reader_cycles += a.nnz() + b.nnz();
        auto c = ewise_ref(a, b, op);
        st.ledger.alu_cycles += a.nnz() + b.nnz();
        st.ledger.writer_cycles += c.nnz();
        st.local_store.insert_or_assign(instr.out, std::move(c));
    };

    switch (instr.kind) {
        case Kind::ewise_add: charge_ewise(EwiseOp<T>::add_op()); break;
        case Kind::ewise_sub: charge_ewise(EwiseOp<T>::sub_op()); break;
        case Kind::ewise_mul: charge_ewise(EwiseOp<T>::mul_op()); break;
        case Kind::ewise_div: charge_ewise(EwiseOp<T>::div_op()); break;
        case Kind::apply_scalar: {
            const auto& a = st.shard(instr.a);
            st.ledger.reader_cycles += a.nnz();
            st.ledger.alu_cycles += a.nnz();
            auto c = apply_scalar(instr.scalar_fn, instr.scalar, a);
            st.ledger.writer_cycles += c.nnz();
            st.local_store.insert_or_assign(instr.out, std::move(c));
            break;
        }
        case Kind::reduce_rows:
        case Kind::reduce_cols: {
            const auto& a = st.shard(instr.a);
            st.ledger.reader_cycles += a.nnz();
            st.ledger.alu_cycles += a.nnz();
            auto c = reduce(a, instr.kind == Kind::reduce_rows ? Axis::rows : Axis::cols,
                            instr.scalar_fn);
            st.ledger.writer_cycles += c.nnz();
            st.local_store.insert_or_assign(instr.out, std::move(c));
            break;
        }
        case Kind::spgemm: {
            const auto& a = st.shard(instr.a);
            const auto& b = st.shard(instr.b);
            st.ledger.reader_cycles += a.nnz() + b.nnz();
            // partial products: one per matching (i,k)x(k,j) pair
            const auto ac = convert(a, Layout::csc);
            const auto bc = convert(b, Layout::csr);
            if (a.ncols() != b.nrows()) throw DimensionMismatch("spgemm: inner dims");
            std::int64_t partials = 0;
            for (Index k = 0; k < a.ncols(); ++k) {
                const auto na = ac.ptr()[static_cast<std::size_t>(k) + 1] -
                                ac.ptr()[static_cast<std::size_t>(k)];
                const auto nb = bc.ptr()[static_cast<std::size_t>(k) + 1] -
                                bc.ptr()[static_cast<std::size_t>(k)];
                partials += na * nb;
            }
            st.ledger.sorter_cycles += sorter_cycles(partials, st.sorter.k);
            st.ledger.alu_cycles += partials;
            auto c = spgemm_ref(a, b, instr.semiring);
            st.ledger.writer_cycles += c.nnz();
            st.local_store.insert_or_assign(instr.out, std::move(c));
            break;
        }
    }

    CycleLedger delta;
    delta.reader_cycles = st.ledger.reader_cycles - before.reader_cycles;
    delta.writer_cycles = st.ledger.writer_cycles - before.writer_cycles;
    delta.alu_cycles = st.ledger.alu_cycles - before.alu_cycles;
    delta.sorter_cycles = st.ledger.sorter_cycles - before.sorter_cycles;
    delta.comm_cycles = st.ledger.comm_cycles - before.comm_cycles;
    delta.controller_overhead_cycles = st.controller_overhead;
    st.ledger.controller_overhead_cycles += st.controller_overhead;
    return delta;
}

// Controller utilities (conventional-CPU duties): charged overhead only.
template <typename T>
void controller_make_identity(NodeState<T>& st, const std::string& handle, Index n) {
    st.ledger.controller_overhead_cycles += st.controller_overhead;
    st.local_store.insert_or_assign(handle, identity_matrix<T>(n));
}

template <typename T>
bool controller_is_empty(NodeState<T>& st, const std::string& handle) {
    st.ledger.controller_overhead_cycles += st.controller_overhead;
    return st.shard(handle).nnz() == 0;
}

}  // namespace gp
