#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <functional>
#include <vector>

#include "gp/error.hpp"

namespace gp {

using Index = std::int64_t;

enum class Layout { coo, csr, csc };

enum class ValueKind { int64, real64 };

inline const char* layout_name(Layout l) {
    switch (l) {
        case Layout::coo: return "coo";
        case Layout::csr: return "csr";
        case Layout::csc: return "csc";
    }
    return "?";
}

// One stored element in coordinate form.
template <typename T>
struct Triple {
    Index row = 0;
    Index col = 0;
    T val = T{};

    friend bool operator==(const Triple&, const Triple&) = default;
};

template <typename T>
constexpr ValueKind value_kind_of();
template <>
constexpr ValueKind value_kind_of<std::int64_t>() { return ValueKind::int64; }
template <>
constexpr ValueKind value_kind_of<double>() { return ValueKind::real64; }

// Sparse matrix in one of three layouts:
//   coo: `coo_` holds (row, col, val) triples, row-major sorted, unique coords
//   csr: `ptr_` (nrows+1 row starts), `idx_` column indices, `val_`
//   csc: `ptr_` (ncols+1 col starts), `idx_` row indices, `val_`
// Explicit zeros are stored; conversions never drop them.
template <typename T>
class SparseMatrix {
public:
    SparseMatrix() = default;

    SparseMatrix(Index nrows, Index ncols, Layout layout = Layout::coo)
        : nrows_(nrows), ncols_(ncols), layout_(layout) {
        if (layout != Layout::coo) {
            ptr_.assign(static_cast<std::size_t>((layout == Layout::csr ? nrows : ncols) + 1), 0);
        }
    }

    Index nrows() const { return nrows_; }
    Index ncols() const { return ncols_; }
    Layout layout() const { return layout_; }
    ValueKind value_kind() const { return value_kind_of<T>(); }

    Index nnz() const {
        return layout_ == Layout::coo ? static_cast<Index>(coo_.size())
                                      : static_cast<Index>(val_.size());
    }

    const std::vector<Triple<T>>& coo() const { return coo_; }
    const std::vector<Index>& ptr() const { return ptr_; }
    const std::vector<Index>& idx() const { return idx_; }
    const std::vector<T>& vals() const { return val_; }

    // Canonical triples: row-major sorted, regardless of layout.
    std::vector<Triple<T>> triples() const {
        std::vector<Triple<T>> out;
        out.reserve(static_cast<std::size_t>(nnz()));
        if (layout_ == Layout::coo) {
            out = coo_;
        } else if (layout_ == Layout::csr) {
            for (Index r = 0; r < nrows_; ++r) {
                for (Index p = ptr_[static_cast<std::size_t>(r)];
                     p < ptr_[static_cast<std::size_t>(r) + 1]; ++p) {
                    out.push_back({r, idx_[static_cast<std::size_t>(p)],
                                   val_[static_cast<std::size_t>(p)]});
                }
            }
        } else {
            for (Index c = 0; c < ncols_; ++c) {
                for (Index p = ptr_[static_cast<std::size_t>(c)];
                     p < ptr_[static_cast<std::size_t>(c) + 1]; ++p) {
                    out.push_back({idx_[static_cast<std::size_t>(p)], c,
                                   val_[static_cast<std::size_t>(p)]});
                }
            }
            std::sort(out.begin(), out.end(), [](const Triple<T>& a, const Triple<T>& b) {
                return a.row != b.row ? a.row < b.row : a.col < b.col;
            });
        }
        return out;
    }

    // Throws Error on any violated structural invariant.
    void validate() const {
        const char* code = "sparse.InvalidMatrix";
        if (nrows_ < 0 || ncols_ < 0) throw Error(code, "negative dimension");
        if (layout_ == Layout::coo) {
            if (!ptr_.empty() || !idx_.empty() || !val_.empty())
                throw Error(code, "coo matrix carries compressed arrays");
            for (std::size_t i = 0; i < coo_.size(); ++i) {
                const auto& t = coo_[i];
                if (t.row < 0 || t.row >= nrows_) throw Error(code, "row index out of range");
                if (t.col < 0 || t.col >= ncols_) throw Error(code, "col index out of range");
                if (i > 0) {
                    const auto& p = coo_[i - 1];
                    if (p.row > t.row || (p.row == t.row && p.col >= t.col))
                        throw Error(code, "coo not strictly row-major sorted");
                }
            }
            return;
        }
        const Index outer = layout_ == Layout::csr ? nrows_ : ncols_;
        const Index inner = layout_ == Layout::csr ? ncols_ : nrows_;
        if (static_cast<Index>(ptr_.size()) != outer + 1)
            throw Error(code, "pointer array has wrong length");
        if (ptr_.front() != 0) throw Error(code, "pointer array does not start at 0");
        if (ptr_.back() != static_cast<Index>(idx_.size()))
            throw Error(code, "pointer array does not end at nnz");
        if (idx_.size() != val_.size()) throw Error(code, "index/value length mismatch");
        for (Index o = 0; o < outer; ++o) {
            const Index b = ptr_[static_cast<std::size_t>(o)];
            const Index e = ptr_[static_cast<std::size_t>(o) + 1];
            if (b > e) throw Error(code, "pointer array decreases");
            for (Index p = b; p < e; ++p) {
                const Index ix = idx_[static_cast<std::size_t>(p)];
                if (ix < 0 || ix >= inner) throw Error(code, "inner index out of range");
                if (p > b && idx_[static_cast<std::size_t>(p) - 1] >= ix)
                    throw Error(code, "inner indices not strictly increasing");
            }
        }
    }

    // Builders used by the module operations below; they assume (and in
    // debug builds check) the canonical invariants.
    static SparseMatrix adopt_coo(Index nrows, Index ncols, std::vector<Triple<T>> sorted) {
        SparseMatrix m(nrows, ncols, Layout::coo);
        m.coo_ = std::move(sorted);
#ifndef NDEBUG
        m.validate();
#endif
        return m;
    }

    static SparseMatrix adopt_compressed(Index nrows, Index ncols, Layout layout,
                                         std::vector<Index> ptr, std::vector<Index> idx,
                                         std::vector<T> val) {
        assert(layout != Layout::coo);
        SparseMatrix m(nrows, ncols, layout);
        m.ptr_ = std::move(ptr);
        m.idx_ = std::move(idx);
        m.val_ = std::move(val);
#ifndef NDEBUG
        m.validate();
#endif
        return m;
    }

    // Logical equality: same shape and same canonical triples.
    friend bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
        return a.nrows_ == b.nrows_ && a.ncols_ == b.ncols_ && a.triples() == b.triples();
    }

private:
    Index nrows_ = 0;
    Index ncols_ = 0;
    Layout layout_ = Layout::coo;
    std::vector<Triple<T>> coo_;
    std::vector<Index> ptr_;
    std::vector<Index> idx_;
    std::vector<T> val_;
};

// Ingest arbitrary triples: bounds-check, sort row-major, combine duplicate
// coordinates in arrival order (default combiner: arithmetic +).
template <typename T>
SparseMatrix<T> build_coo(std::vector<Triple<T>> triples, Index nrows, Index ncols,
                          const std::function<T(T, T)>& combine = std::plus<T>{}) {
    for (const auto& t : triples) {
        if (t.row < 0 || t.row >= nrows) throw IndexOutOfRange("row", t.row, nrows);
        if (t.col < 0 || t.col >= ncols) throw IndexOutOfRange("col", t.col, ncols);
    }
    std::stable_sort(triples.begin(), triples.end(),
                     [](const Triple<T>& a, const Triple<T>& b) {
                         return a.row != b.row ? a.row < b.row : a.col < b.col;
                     });
    std::vector<Triple<T>> out;
    out.reserve(triples.size());
    for (const auto& t : triples) {
        if (!out.empty() && out.back().row == t.row && out.back().col == t.col) {
            out.back().val = combine(out.back().val, t.val);
        } else {
            out.push_back(t);
        }
    }
    return SparseMatrix<T>::adopt_coo(nrows, ncols, std::move(out));
}

namespace detail {

// Compress canonical triples along rows (csr) or columns (csc).
template <typename T>
SparseMatrix<T> compress(const SparseMatrix<T>& m, Layout target) {
    auto t = m.triples();
    const bool by_row = target == Layout::csr;
    if (!by_row) {
        std::sort(t.begin(), t.end(), [](const Triple<T>& a, const Triple<T>& b) {
            return a.col != b.col ? a.col < b.col : a.row < b.row;
        });
    }
    const Index outer = by_row ? m.nrows() : m.ncols();
    std::vector<Index> ptr(static_cast<std::size_t>(outer) + 1, 0);
    std::vector<Index> idx;
    std::vector<T> val;
    idx.reserve(t.size());
    val.reserve(t.size());
    for (const auto& e : t) {
        ++ptr[static_cast<std::size_t>(by_row ? e.row : e.col) + 1];
        idx.push_back(by_row ? e.col : e.row);
        val.push_back(e.val);
    }
    for (Index o = 0; o < outer; ++o) {
        ptr[static_cast<std::size_t>(o) + 1] += ptr[static_cast<std::size_t>(o)];
    }
    return SparseMatrix<T>::adopt_compressed(m.nrows(), m.ncols(), target, std::move(ptr),
                                             std::move(idx), std::move(val));
}

}  // namespace detail

// Layout conversion; the logical matrix (including explicit zeros) is preserved.
template <typename T>
SparseMatrix<T> convert(const SparseMatrix<T>& m, Layout target) {
    if (target == m.layout()) return m;
    if (target == Layout::coo)
        return SparseMatrix<T>::adopt_coo(m.nrows(), m.ncols(), m.triples());
    return detail::compress(m, target);
}

template <typename T>
SparseMatrix<T> identity_matrix(Index n, T one = T{1}) {
    std::vector<Triple<T>> t;
    t.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) t.push_back({i, i, one});
    return SparseMatrix<T>::adopt_coo(n, n, std::move(t));
}

}  // namespace gp
