#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>

#include "gp/rng.hpp"
#include "gp/sorter.hpp"

using namespace gp;

namespace {

std::vector<SortRecord> random_records(Rng& rng, std::int64_t n, Index key_space) {
    std::vector<SortRecord> recs;
    recs.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        SortRecord r;
        r.key.major = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(key_space)));
        r.key.minor = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(key_space)));
        r.val = static_cast<std::int64_t>(rng.next_below(1000));
        recs.push_back(r);
    }
    return recs;
}

// Independent oracle: std::stable_sort on (major, minor) only; stability of
// equal coordinates comes from the algorithm, matching the seq contract.
std::vector<SortRecord> oracle_sort(std::vector<SortRecord> recs) {
    for (std::size_t i = 0; i < recs.size(); ++i)
        recs[i].key.seq = static_cast<std::int64_t>(i);
    std::stable_sort(recs.begin(), recs.end(), [](const SortRecord& a, const SortRecord& b) {
        return a.key.major != b.key.major ? a.key.major < b.key.major
                                          : a.key.minor < b.key.minor;
    });
    return recs;
}

}  // namespace

TEST_CASE("pass count formula") {
    CHECK(sorter_passes(0, 2) == 0);
    CHECK(sorter_passes(1, 2) == 1);
    CHECK(sorter_passes(2, 2) == 1);
    CHECK(sorter_passes(10, 4) == 2);
    CHECK(sorter_passes(1 << 20, 32) == 4);
    CHECK(sorter_passes(1 << 20, 2) == 20);
}

TEST_CASE("k=32 vs k=2 cycle ratio is exactly 5 at n=2^20") {
    const std::int64_t n = 1 << 20;
    CHECK(sorter_cycles(n, 2) == n * 20);
    CHECK(sorter_cycles(n, 32) == n * 4);
    CHECK(sorter_cycles(n, 2) / sorter_cycles(n, 32) == 5);
}

TEST_CASE("already-sorted input keeps order, passes counted") {
    std::vector<SortRecord> recs;
    for (Index i = 0; i < 10; ++i) recs.push_back({{i, 0, 0}, i});
    auto [out, stats] = sort_records(recs, {4});
    REQUIRE(out.size() == 10);
    for (Index i = 0; i < 10; ++i) CHECK(out[static_cast<std::size_t>(i)].key.major == i);
    CHECK(stats.passes == 2);
    CHECK(stats.cycles == 20);
}

TEST_CASE("empty input") {
    auto [out, stats] = sort_records({}, {8});
    CHECK(out.empty());
    CHECK(stats.passes == 0);
    CHECK(stats.cycles == 0);
}

TEST_CASE("random records equal reference stable sort") {
    Rng rng(4242);
    auto recs = random_records(rng, 10000, 50);
    auto [out, stats] = sort_records(recs, {8});
    CHECK(out == oracle_sort(recs));
    CHECK(stats.passes == sorter_passes(10000, 8));
}

TEST_CASE("permutation, stability and pass model across k (property)") {
    Rng rng(77);
    for (int trial = 0; trial < 40; ++trial) {
        const std::int64_t n = static_cast<std::int64_t>(rng.next_below(3000));
        const std::int64_t ks[] = {2, 4, 8, 16, 32};
        const std::int64_t k = ks[rng.next_below(5)];
        auto recs = random_records(rng, n, 20);
        auto [out, stats] = sort_records(recs, {k});

        CHECK(out == oracle_sort(recs));  // permutation + stability in one shot
        CHECK(stats.passes == sorter_passes(n, k));
        CHECK(stats.cycles == n * stats.passes);

        // multiset equality on values, independent of key handling
        std::map<std::int64_t, int> in_count, out_count;
        for (const auto& r : recs) ++in_count[r.val];
        for (const auto& r : out) ++out_count[r.val];
        CHECK(in_count == out_count);
    }
}

TEST_CASE("cycle ratio bound for large n") {
    // integer pass counts make the 2-vs-32 ratio at least 4 for any n >= 2^20
    for (std::int64_t n : {(1 << 20) + 1, (1 << 21) + 7, (1 << 24) - 3}) {
        const double ratio = static_cast<double>(sorter_cycles(n, 2)) /
                             static_cast<double>(sorter_cycles(n, 32));
        CHECK(ratio >= 4.0);
    }
}

TEST_CASE("merge_k basics") {
    std::vector<std::vector<SortRecord>> runs = {
        {{{1, 0, 0}, 1}, {{3, 0, 1}, 3}},
        {{{2, 0, 2}, 2}, {{4, 0, 3}, 4}},
    };
    auto out = merge_k(runs, {2});
    REQUIRE(out.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(out[i].val == static_cast<std::int64_t>(i + 1));

    auto single = merge_k({runs[0]}, {2});
    CHECK(single == runs[0]);
}

TEST_CASE("merge_k of 32 random sorted runs equals concatenate-then-sort oracle") {
    Rng rng(8);
    std::vector<std::vector<SortRecord>> runs;
    std::vector<SortRecord> all;
    std::int64_t seq = 0;
    for (int r = 0; r < 32; ++r) {
        auto run = random_records(rng, 100, 40);
        for (auto& rec : run) rec.key.seq = seq++;
        std::sort(run.begin(), run.end(),
                  [](const SortRecord& a, const SortRecord& b) { return a.key < b.key; });
        all.insert(all.end(), run.begin(), run.end());
        runs.push_back(std::move(run));
    }
    auto out = merge_k(runs, {32});
    std::stable_sort(all.begin(), all.end(),
                     [](const SortRecord& a, const SortRecord& b) { return a.key < b.key; });
    CHECK(out == all);
}

TEST_CASE("merge_k detects an unsorted run lazily") {
    std::vector<std::vector<SortRecord>> runs = {
        {{{0, 0, 0}, 0}, {{5, 0, 1}, 0}},
        {{{3, 0, 2}, 0}, {{1, 0, 3}, 0}},  // inversion
    };
    CHECK_THROWS_AS(merge_k(runs, {4}), UnsortedRun);
}

TEST_CASE("merge_k rejects too many runs") {
    std::vector<std::vector<SortRecord>> runs(5);
    CHECK_THROWS_AS(merge_k(runs, {4}), Error);
}

TEST_CASE("coalesce folds duplicate coordinates in arrival order") {
    std::vector<SortRecord> in = {{{0, 0, 0}, 2}, {{0, 0, 1}, 3}, {{0, 1, 2}, 4}};
    auto out = coalesce(in, [](std::int64_t a, std::int64_t b) { return a + b; });
    REQUIRE(out.size() == 2);
    CHECK(out[0].val == 5);
    CHECK(out[1].val == 4);

    // all-distinct input passes through
    std::vector<SortRecord> distinct = {{{0, 0, 0}, 1}, {{0, 1, 1}, 2}, {{1, 0, 2}, 3}};
    CHECK(coalesce(distinct, [](std::int64_t a, std::int64_t b) { return a + b; }) == distinct);

    std::vector<SortRecord> unsorted = {{{1, 0, 0}, 1}, {{0, 0, 1}, 2}};
    CHECK_THROWS_AS(coalesce(unsorted, [](std::int64_t a, std::int64_t b) { return a + b; }),
                    UnsortedInput);
}

TEST_CASE("coalesce with max equals group-by oracle; idempotent after sort") {
    Rng rng(55);
    auto recs = random_records(rng, 5000, 15);
    auto [sorted, stats] = sort_records(recs, {8});
    auto maxop = [](std::int64_t a, std::int64_t b) { return std::max(a, b); };
    auto once = coalesce(sorted, maxop);
    CHECK(coalesce(once, maxop) == once);

    std::map<std::pair<Index, Index>, std::int64_t> groups;
    for (const auto& r : recs) {
        auto key = std::make_pair(r.key.major, r.key.minor);
        auto it = groups.find(key);
        if (it == groups.end())
            groups.emplace(key, r.val);
        else
            it->second = std::max(it->second, r.val);
    }
    REQUIRE(once.size() == groups.size());
    std::size_t i = 0;
    for (const auto& [key, val] : groups) {
        CHECK(once[i].key.major == key.first);
        CHECK(once[i].key.minor == key.second);
        CHECK(once[i].val == val);
        ++i;
    }
}
