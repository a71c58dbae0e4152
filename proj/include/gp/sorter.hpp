#pragma once

#include <cstdint>
#include <vector>

#include "gp/error.hpp"
#include "gp/sparse.hpp"

namespace gp {

// (major, minor) coordinate key with an arrival sequence number used as the
// stability tie-break (and as the deterministic fold order in coalesce).
struct SortKey {
    Index major = 0;
    Index minor = 0;
    std::int64_t seq = 0;

    friend auto operator<=>(const SortKey&, const SortKey&) = default;

    bool same_coord(const SortKey& o) const { return major == o.major && minor == o.minor; }
};

struct SortRecord {
    SortKey key;
    std::int64_t val = 0;

    friend bool operator==(const SortRecord&, const SortRecord&) = default;
};

// k-way merge sorter: k linear systolic cells modeled as a k-ary merge with
// a pass/cycle cost formula.
struct SorterConfig {
    std::int64_t k = 32;

    std::int64_t cells() const { return k; }
};

struct SortStats {
    std::int64_t n = 0;
    std::int64_t passes = 0;
    std::int64_t cycles = 0;       // effective memory cycles, n per pass
    std::int64_t comparisons = 0;  // actual key comparisons performed
};

// passes(n, k) = ceil(log_k(max(n, 2))) for n > 0, 0 for empty input.
inline std::int64_t sorter_passes(std::int64_t n, std::int64_t k) {
    if (n <= 0) return 0;
    const std::int64_t target = n < 2 ? 2 : n;
    std::int64_t passes = 0;
    std::int64_t capacity = 1;
    while (capacity < target) {
        passes += 1;
        if (capacity > target / k + 1) break;  // avoid overflow; capacity*k >= target
        capacity *= k;
    }
    return passes;
}

inline std::int64_t sorter_cycles(std::int64_t n, std::int64_t k) {
    return n * sorter_passes(n, k);
}

namespace detail {

// Binary min-heap merge of `count` sorted runs delimited by [begins, ends)
// into dst. Comparisons are tallied into `comparisons`.
class RunMerger {
public:
    struct Head {
        SortRecord rec;
        std::size_t run;
        std::size_t next;  // index of the following record within the run
    };

    explicit RunMerger(std::int64_t* comparisons) : comparisons_(comparisons) {}

    bool less(const SortKey& a, const SortKey& b) {
        ++*comparisons_;
        return a < b;
    }

    // Runs are (begin, end) index pairs into src. Ties on the full key fall
    // back to run index, so merging equal-keyed records stays stable.
    void merge(const std::vector<SortRecord>& src,
               const std::vector<std::pair<std::size_t, std::size_t>>& runs,
               std::vector<SortRecord>& dst, bool check_sorted) {
        heap_.clear();
        for (std::size_t r = 0; r < runs.size(); ++r) {
            if (runs[r].first < runs[r].second)
                push({src[runs[r].first], r, runs[r].first + 1});
        }
        while (!heap_.empty()) {
            Head h = heap_.front();
            pop();
            dst.push_back(h.rec);
            if (h.next < runs[h.run].second) {
                const SortRecord& nxt = src[h.next];
                if (check_sorted && nxt.key < h.rec.key) throw UnsortedRun(h.run);
                push({nxt, h.run, h.next + 1});
            }
        }
    }

private:
    bool head_less(const Head& a, const Head& b) {
        if (less(a.rec.key, b.rec.key)) return true;
        if (a.rec.key == b.rec.key) return a.run < b.run;
        return false;
    }

    void push(Head h) {
        heap_.push_back(h);
        std::size_t i = heap_.size() - 1;
        while (i > 0) {
            std::size_t p = (i - 1) / 2;
            if (!head_less(heap_[i], heap_[p])) break;
            std::swap(heap_[i], heap_[p]);
            i = p;
        }
    }

    void pop() {
        heap_.front() = heap_.back();
        heap_.pop_back();
        std::size_t i = 0;
        for (;;) {
            std::size_t l = 2 * i + 1, r = 2 * i + 2, m = i;
            if (l < heap_.size() && head_less(heap_[l], heap_[m])) m = l;
            if (r < heap_.size() && head_less(heap_[r], heap_[m])) m = r;
            if (m == i) break;
            std::swap(heap_[i], heap_[m]);
            i = m;
        }
    }

    std::vector<Head> heap_;
    std::int64_t* comparisons_;
};

}  // namespace detail

// Merge up to cfg.k sorted runs into one sorted run. The first inversion
// inside any input run raises UnsortedRun with that run's index.
inline std::vector<SortRecord> merge_k(const std::vector<std::vector<SortRecord>>& runs,
                                       const SorterConfig& cfg,
                                       std::int64_t* comparisons = nullptr) {
    if (cfg.k < 2) throw ConfigError("sorter arity k must be >= 2");
    if (static_cast<std::int64_t>(runs.size()) > cfg.k)
        throw Error("sorter.ArityExceeded",
                    std::to_string(runs.size()) + " runs exceed arity k=" + std::to_string(cfg.k));
    std::vector<SortRecord> flat;
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (const auto& r : runs) {
        const std::size_t b = flat.size();
        flat.insert(flat.end(), r.begin(), r.end());
        spans.emplace_back(b, flat.size());
    }
    std::int64_t scratch = 0;
    detail::RunMerger merger(comparisons ? comparisons : &scratch);
    std::vector<SortRecord> out;
    out.reserve(flat.size());
    merger.merge(flat, spans, out, /*check_sorted=*/true);
    return out;
}

// Full sort: input is treated as n runs of length 1 merged k at a time per
// pass. Sequence numbers are assigned from arrival order, so equal
// (major, minor) records keep their input order. Cycle accounting follows
// the pass model: n effective memory cycles per pass.
inline std::pair<std::vector<SortRecord>, SortStats> sort_records(std::vector<SortRecord> records,
                                                                 const SorterConfig& cfg) {
    if (cfg.k < 2) throw ConfigError("sorter arity k must be >= 2");
    const std::int64_t n = static_cast<std::int64_t>(records.size());
    SortStats stats;
    stats.n = n;
    stats.passes = sorter_passes(n, cfg.k);
    stats.cycles = n * stats.passes;
    for (std::size_t i = 0; i < records.size(); ++i)
        records[i].key.seq = static_cast<std::int64_t>(i);

    detail::RunMerger merger(&stats.comparisons);
    std::vector<SortRecord> scratch;
    scratch.reserve(records.size());
    std::size_t run_len = 1;
    while (run_len < records.size()) {
        scratch.clear();
        std::vector<std::pair<std::size_t, std::size_t>> spans;
        std::size_t begin = 0;
        while (begin < records.size()) {
            spans.clear();
            for (std::int64_t r = 0; r < cfg.k && begin < records.size(); ++r) {
                const std::size_t end = std::min(begin + run_len, records.size());
                spans.emplace_back(begin, end);
                begin = end;
            }
            merger.merge(records, spans, scratch, /*check_sorted=*/false);
        }
        records.swap(scratch);
        run_len *= static_cast<std::size_t>(cfg.k);
    }
    return {std::move(records), stats};
}

// Accumulate runs of equal (major, minor) coordinates with add-op, folding
// in arrival (seq) order. Input must already be sorted by coordinate.
template <typename Fold>
std::vector<SortRecord> coalesce(const std::vector<SortRecord>& sorted, Fold add_op) {
    std::vector<SortRecord> out;
    out.reserve(sorted.size());
    for (const auto& rec : sorted) {
        if (!out.empty()) {
            const SortKey& prev = out.back().key;
            if (rec.key.major < prev.major ||
                (rec.key.major == prev.major && rec.key.minor < prev.minor))
                throw UnsortedInput("coalesce");
            if (rec.key.same_coord(prev)) {
                out.back().val = add_op(out.back().val, rec.val);
                continue;
            }
        }
        out.push_back(rec);
    }
    return out;
}

}  // namespace gp
