#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>

#include "gp/node.hpp"
#include "gp/rng.hpp"
#include "test_util.hpp"

using namespace gp;

namespace {

NodeState<std::int64_t> node_with(const std::string& handle, SparseMatrix<std::int64_t> m) {
    NodeState<std::int64_t> st;
    st.local_store.insert_or_assign(handle, std::move(m));
    return st;
}

}  // namespace

TEST_CASE("reader streams every element once, one cycle per element") {
    Rng rng(7);
    auto m = gptest::random_matrix<std::int64_t>(rng, 20, 20, 0.25);
    const auto nnz = m.nnz();
    auto st = node_with("a", convert(m, Layout::csr));
    auto out = reader_stream(st, "a", StreamOrder::row_major);
    CHECK(static_cast<Index>(out.size()) == nnz);
    CHECK(st.ledger.reader_cycles == nnz);
    CHECK(std::is_sorted(out.begin(), out.end(),
                         [](const Triple<std::int64_t>& a, const Triple<std::int64_t>& b) {
                             return a.row != b.row ? a.row < b.row : a.col < b.col;
                         }));
    // same multiset of elements as the canonical scan
    auto ref = m.triples();
    CHECK(out == ref);
}

TEST_CASE("empty shard: empty stream, zero cycles") {
    auto st = node_with("a", SparseMatrix<std::int64_t>(4, 4));
    auto out = reader_stream(st, "a", StreamOrder::col_major);
    CHECK(out.empty());
    CHECK(st.ledger.reader_cycles == 0);
    CHECK(st.ledger.sorter_cycles == 0);
}

TEST_CASE("CSR read col-major equals CSC-converted scan and charges a re-sort") {
    Rng rng(13);
    auto m = gptest::random_matrix<std::int64_t>(rng, 16, 24, 0.2);
    auto st = node_with("a", convert(m, Layout::csr));
    auto out = reader_stream(st, "a", StreamOrder::col_major);

    // oracle: convert to CSC, scan in storage (column-major) order
    auto csc = convert(m, Layout::csc);
    std::vector<Triple<std::int64_t>> ref;
    for (Index c = 0; c < csc.ncols(); ++c) {
        for (Index p = csc.ptr()[static_cast<std::size_t>(c)];
             p < csc.ptr()[static_cast<std::size_t>(c) + 1]; ++p) {
            ref.push_back({csc.idx()[static_cast<std::size_t>(p)], c,
                           csc.vals()[static_cast<std::size_t>(p)]});
        }
    }
    CHECK(out == ref);
    CHECK(st.ledger.reader_cycles == m.nnz());
    CHECK(st.ledger.sorter_cycles == sorter_cycles(m.nnz(), st.sorter.k));
}

TEST_CASE("CSC shard serves col-major with no re-sort charge") {
    Rng rng(14);
    auto m = gptest::random_matrix<std::int64_t>(rng, 10, 10, 0.3);
    auto st = node_with("a", convert(m, Layout::csc));
    reader_stream(st, "a", StreamOrder::col_major);
    CHECK(st.ledger.sorter_cycles == 0);
    reader_stream(st, "a", StreamOrder::row_major);
    CHECK(st.ledger.sorter_cycles == sorter_cycles(m.nnz(), st.sorter.k));
}

TEST_CASE("reader on missing handle throws UnknownHandle") {
    NodeState<std::int64_t> st;
    CHECK_THROWS_AS(reader_stream(st, "nope", StreamOrder::row_major), UnknownHandle);
}

TEST_CASE("writer_commit: sorted 3-element stream builds CSR with correct row-ptr") {
    NodeState<std::int64_t> st;
    std::vector<Triple<std::int64_t>> stream = {{0, 1, 5}, {1, 0, 6}, {2, 2, 7}};
    writer_commit(st, "c", stream, 3, 3, Layout::csr);
    const auto& m = st.shard("c");
    CHECK(m.layout() == Layout::csr);
    CHECK(m.ptr() == std::vector<Index>{0, 1, 2, 3});
    CHECK(m.idx() == std::vector<Index>{1, 0, 2});
    CHECK(st.ledger.writer_cycles == 3);
}

TEST_CASE("writer_commit: empty stream stores a valid empty matrix") {
    NodeState<std::int64_t> st;
    writer_commit(st, "c", {}, 5, 7, Layout::csc);
    CHECK(st.shard("c").nnz() == 0);
    CHECK(st.shard("c").nrows() == 5);
    CHECK(st.ledger.writer_cycles == 0);
}

TEST_CASE("writer_commit equals build_coo + convert oracle (property)") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        auto m = gptest::random_matrix<std::int64_t>(rng, 12, 12, 0.3);
        for (Layout target : {Layout::csr, Layout::csc}) {
            auto stream = m.triples();
            if (target == Layout::csc) {
                std::sort(stream.begin(), stream.end(),
                          [](const Triple<std::int64_t>& a, const Triple<std::int64_t>& b) {
                              return a.col != b.col ? a.col < b.col : a.row < b.row;
                          });
            }
            NodeState<std::int64_t> st;
            writer_commit(st, "c", stream, m.nrows(), m.ncols(), target);
            CHECK(st.shard("c") == convert(m, target));
            CHECK(st.ledger.writer_cycles == m.nnz());
        }
    }
}

TEST_CASE("writer_commit rejects an unsorted stream") {
    NodeState<std::int64_t> st;
    std::vector<Triple<std::int64_t>> stream = {{1, 0, 1}, {0, 0, 2}};
    CHECK_THROWS_AS(writer_commit(st, "c", stream, 2, 2, Layout::csr), UnsortedInput);
}

TEST_CASE("alu_stream accumulates exact index matches") {
    NodeState<std::int64_t> st;
    std::vector<Triple<std::int64_t>> in = {{0, 0, 2}, {0, 0, 3}};
    auto out = alu_stream(st, in, ops::add<std::int64_t>);
    CHECK(out == std::vector<Triple<std::int64_t>>{{0, 0, 5}});
    CHECK(st.ledger.alu_cycles == 2);
}

TEST_CASE("alu_stream with distinct keys is identity") {
    NodeState<std::int64_t> st;
    std::vector<Triple<std::int64_t>> in = {{0, 0, 1}, {0, 1, 2}, {3, 0, 3}};
    CHECK(alu_stream(st, in, ops::add<std::int64_t>) == in);
    CHECK(st.ledger.alu_cycles == 3);
}

TEST_CASE("alu_stream vs hash group-by oracle (property)") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Triple<std::int64_t>> in;
        const int n = 1 + static_cast<int>(rng.next_below(200));
        for (int i = 0; i < n; ++i) {
            in.push_back({static_cast<Index>(rng.next_below(8)),
                          static_cast<Index>(rng.next_below(8)),
                          static_cast<std::int64_t>(rng.next_below(19)) - 9});
        }
        std::stable_sort(in.begin(), in.end(),
                         [](const Triple<std::int64_t>& a, const Triple<std::int64_t>& b) {
                             return a.row != b.row ? a.row < b.row : a.col < b.col;
                         });
        std::map<std::pair<Index, Index>, std::int64_t> groups;
        for (const auto& t : in) groups[{t.row, t.col}] += t.val;

        NodeState<std::int64_t> st;
        auto out = alu_stream(st, in, ops::add<std::int64_t>);
        CHECK(out.size() == groups.size());
        for (const auto& t : out) CHECK(groups.at({t.row, t.col}) == t.val);
        CHECK(st.ledger.alu_cycles == n);
    }
}

TEST_CASE("alu_stream rejects unsorted input") {
    NodeState<std::int64_t> st;
    std::vector<Triple<std::int64_t>> in = {{1, 1, 1}, {0, 0, 1}};
    CHECK_THROWS_AS(alu_stream(st, in, ops::add<std::int64_t>), UnsortedInput);
}

TEST_CASE("packetize/depacketize round trip with priority passthrough") {
    NodeState<std::int64_t> st;
    st.node_id = 2;
    Triple<std::int64_t> el{3, 7, 42};
    Packet p = comm_packetize(st, el, 5, 8, 2);
    CHECK(p.src == 2);
    CHECK(p.dst == 5);
    CHECK(p.priority == 2);
    CHECK(comm_depacketize<std::int64_t>(st, p) == el);
    CHECK(st.ledger.comm_cycles == 2);

    CHECK_THROWS_AS(comm_packetize(st, el, 8, 8), InvalidDestination);
    CHECK_THROWS_AS(comm_packetize(st, el, -1, 8), InvalidDestination);
}

TEST_CASE("10,000 random elements round-trip as a multiset, both value kinds") {
    Rng rng(77);
    NodeState<double> st;
    std::vector<Triple<double>> in, back;
    for (int i = 0; i < 10000; ++i) {
        Triple<double> el{static_cast<Index>(rng.next_below(1000)),
                          static_cast<Index>(rng.next_below(1000)),
                          rng.next_double() * 100.0 - 50.0};
        in.push_back(el);
        back.push_back(comm_depacketize<double>(st, comm_packetize(st, el, 0, 1)));
    }
    auto key = [](const Triple<double>& a, const Triple<double>& b) {
        return std::tie(a.row, a.col, a.val) < std::tie(b.row, b.col, b.val);
    };
    std::sort(in.begin(), in.end(), key);
    std::sort(back.begin(), back.end(), key);
    CHECK(in == back);
}

TEST_CASE("run_instruction: ewise add of two nnz=1000 shards, exact ledger") {
    Rng rng(9);
    auto a = gptest::random_matrix<std::int64_t>(rng, 64, 64, 0.25);
    auto b = gptest::random_matrix<std::int64_t>(rng, 64, 64, 0.25);
    auto st = node_with("a", a);
    st.local_store.insert_or_assign("b", b);

    Instruction<std::int64_t> instr;
    instr.kind = Instruction<std::int64_t>::Kind::ewise_add;
    instr.a = "a";
    instr.b = "b";
    instr.out = "c";
    auto delta = run_instruction(st, instr);

    const auto na = a.nnz(), nb = b.nnz();
    auto ref = ewise_ref(a, b, EwiseOp<std::int64_t>::add_op());
    CHECK(delta.reader_cycles == na + nb);
    CHECK(delta.alu_cycles == na + nb);
    CHECK(delta.writer_cycles == ref.nnz());
    CHECK(delta.controller_overhead_cycles == 100);
    CHECK(delta.busy_time() == std::max({delta.reader_cycles, delta.alu_cycles,
                                         delta.writer_cycles}) + 100);
    CHECK(st.shard("c") == ref);
}

TEST_CASE("run_instruction: apply_scalar on empty shard costs controller overhead only") {
    auto st = node_with("a", SparseMatrix<std::int64_t>(8, 8));
    Instruction<std::int64_t> instr;
    instr.kind = Instruction<std::int64_t>::Kind::apply_scalar;
    instr.a = "a";
    instr.out = "c";
    instr.scalar = 3;
    instr.scalar_fn = ops::mul<std::int64_t>;
    auto delta = run_instruction(st, instr);
    CHECK(delta.module_max() == 0);
    CHECK(delta.busy_time() == 100);
    CHECK(st.shard("c").nnz() == 0);
}

TEST_CASE("run_instruction on missing handle throws UnknownHandle") {
    NodeState<std::int64_t> st;
    Instruction<std::int64_t> instr;
    instr.kind = Instruction<std::int64_t>::Kind::reduce_rows;
    instr.a = "missing";
    instr.out = "c";
    instr.scalar_fn = ops::add<std::int64_t>;
    CHECK_THROWS_AS(run_instruction(st, instr), UnknownHandle);
}

TEST_CASE("run_instruction results equal reference kernels (functional transparency)") {
    Rng rng(31);
    using I = Instruction<std::int64_t>;
    for (int trial = 0; trial < 10; ++trial) {
        auto a = gptest::random_matrix<std::int64_t>(rng, 20, 20, 0.15);
        auto b = gptest::random_matrix<std::int64_t>(rng, 20, 20, 0.15);
        auto st = node_with("a", a);
        st.local_store.insert_or_assign("b", b);

        I mul{I::Kind::ewise_mul, "a", "b", "m"};
        run_instruction(st, mul);
        CHECK(st.shard("m") == ewise_ref(a, b, EwiseOp<std::int64_t>::mul_op()));

        I gem{I::Kind::spgemm, "a", "b", "g"};
        gem.semiring = min_plus<std::int64_t>();
        run_instruction(st, gem);
        CHECK(st.shard("g") == spgemm_ref(a, b, min_plus<std::int64_t>()));

        I red{I::Kind::reduce_cols, "a", "", "r"};
        red.scalar_fn = ops::add<std::int64_t>;
        run_instruction(st, red);
        CHECK(st.shard("r") == reduce(a, Axis::cols, ops::add<std::int64_t>));
    }
}

TEST_CASE("run_instruction: spgemm sorter charge follows the partial-product count") {
    Rng rng(41);
    auto a = gptest::random_matrix<std::int64_t>(rng, 16, 16, 0.25);
    auto b = gptest::random_matrix<std::int64_t>(rng, 16, 16, 0.25);
    auto st = node_with("a", a);
    st.local_store.insert_or_assign("b", b);

    // oracle: count (i,k)x(k,j) pairs by brute force
    std::int64_t partials = 0;
    for (const auto& ta : a.triples())
        for (const auto& tb : b.triples())
            if (ta.col == tb.row) ++partials;

    Instruction<std::int64_t> instr{Instruction<std::int64_t>::Kind::spgemm, "a", "b", "c"};
    auto delta = run_instruction(st, instr);
    CHECK(delta.sorter_cycles == sorter_cycles(partials, st.sorter.k));
    CHECK(delta.alu_cycles == partials);
}

TEST_CASE("timing model is data-independent: cycles depend on counts, not values") {
    std::vector<Triple<std::int64_t>> small = {{0, 0, 1}, {1, 1, 2}};
    std::vector<Triple<std::int64_t>> large = {{0, 0, 1'000'000'007}, {1, 1, -987654321}};
    auto run = [](std::vector<Triple<std::int64_t>> t) {
        auto st = node_with("a", build_coo<std::int64_t>(t, 2, 2));
        Instruction<std::int64_t> i{Instruction<std::int64_t>::Kind::apply_scalar, "a", "", "c"};
        i.scalar = 7;
        i.scalar_fn = ops::mul<std::int64_t>;
        return run_instruction(st, i);
    };
    auto d1 = run(small), d2 = run(large);
    CHECK(d1.reader_cycles == d2.reader_cycles);
    CHECK(d1.alu_cycles == d2.alu_cycles);
    CHECK(d1.writer_cycles == d2.writer_cycles);
}

TEST_CASE("controller utilities: identity creation and emptiness checks") {
    NodeState<std::int64_t> st;
    controller_make_identity(st, "i", 4);
    CHECK(st.shard("i") == identity_matrix<std::int64_t>(4));
    CHECK(!controller_is_empty(st, "i"));
    st.local_store.insert_or_assign("z", SparseMatrix<std::int64_t>(3, 3));
    CHECK(controller_is_empty(st, "z"));
    CHECK(st.ledger.controller_overhead_cycles == 3 * st.controller_overhead);
    CHECK(st.ledger.module_max() == 0);
}
