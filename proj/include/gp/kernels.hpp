#pragma once

#include <functional>
#include <vector>

#include "gp/semiring.hpp"
#include "gp/sparse.hpp"

namespace gp {

// Reference (single-node, functional) semiring SpGEMM:
//   C(i,j) = add-reduce over k of mul(A(i,k), B(k,j))
// reduced in ascending k; entries equal to the add-identity are dropped.
// Gustavson row-by-row with a dense accumulator per row.
template <typename T>
SparseMatrix<T> spgemm_ref(const SparseMatrix<T>& a, const SparseMatrix<T>& b,
                           const Semiring<T>& s) {
    if (a.ncols() != b.nrows())
        throw DimensionMismatch("spgemm: " + std::to_string(a.nrows()) + "x" +
                                std::to_string(a.ncols()) + " * " + std::to_string(b.nrows()) +
                                "x" + std::to_string(b.ncols()));
    const auto ac = convert(a, Layout::csr);
    const auto bc = convert(b, Layout::csr);
    const std::size_t n = static_cast<std::size_t>(b.ncols());
    std::vector<T> acc(n, T{});
    std::vector<char> occupied(n, 0);
    std::vector<Index> touched;
    std::vector<Triple<T>> out;
    for (Index i = 0; i < a.nrows(); ++i) {
        touched.clear();
        for (Index pa = ac.ptr()[static_cast<std::size_t>(i)];
             pa < ac.ptr()[static_cast<std::size_t>(i) + 1]; ++pa) {
            const Index k = ac.idx()[static_cast<std::size_t>(pa)];
            const T av = ac.vals()[static_cast<std::size_t>(pa)];
            for (Index pb = bc.ptr()[static_cast<std::size_t>(k)];
                 pb < bc.ptr()[static_cast<std::size_t>(k) + 1]; ++pb) {
                const Index j = bc.idx()[static_cast<std::size_t>(pb)];
                const T prod = s.mul(av, bc.vals()[static_cast<std::size_t>(pb)]);
                auto ji = static_cast<std::size_t>(j);
                if (!occupied[ji]) {
                    occupied[ji] = 1;
                    acc[ji] = prod;
                    touched.push_back(j);
                } else {
                    acc[ji] = s.add(acc[ji], prod);
                }
            }
        }
        std::sort(touched.begin(), touched.end());
        for (Index j : touched) {
            auto ji = static_cast<std::size_t>(j);
            if (acc[ji] != s.zero) out.push_back({i, j, acc[ji]});
            occupied[ji] = 0;
        }
    }
    return SparseMatrix<T>::adopt_coo(a.nrows(), b.ncols(), std::move(out));
}

// Element-wise op on two matrices of equal shape. add/sub act on the union
// of patterns (absent element = 0); mul, div and user ops act on the
// intersection. div throws only when the divisor is an explicit stored zero.
template <typename T>
SparseMatrix<T> ewise_ref(const SparseMatrix<T>& a, const SparseMatrix<T>& b,
                          const EwiseOp<T>& op) {
    if (a.nrows() != b.nrows() || a.ncols() != b.ncols())
        throw DimensionMismatch("ewise: shapes differ");
    using Kind = typename EwiseOp<T>::Kind;
    const bool union_pattern = op.kind == Kind::add || op.kind == Kind::sub;
    const auto ta = convert(a, Layout::coo).coo();
    const auto tb = convert(b, Layout::coo).coo();
    std::vector<Triple<T>> out;
    std::size_t ia = 0, ib = 0;
    auto before = [](const Triple<T>& x, const Triple<T>& y) {
        return x.row != y.row ? x.row < y.row : x.col < y.col;
    };
    while (ia < ta.size() || ib < tb.size()) {
        if (ib == tb.size() || (ia < ta.size() && before(ta[ia], tb[ib]))) {
            if (union_pattern) out.push_back(ta[ia]);
            ++ia;
        } else if (ia == ta.size() || before(tb[ib], ta[ia])) {
            if (union_pattern) out.push_back({tb[ib].row, tb[ib].col, op.fn(T{}, tb[ib].val)});
            ++ib;
        } else {
            if (op.kind == Kind::div && tb[ib].val == T{})
                throw DivisionByZero(ta[ia].row, ta[ia].col);
            out.push_back({ta[ia].row, ta[ia].col, op.fn(ta[ia].val, tb[ib].val)});
            ++ia;
            ++ib;
        }
    }
    return SparseMatrix<T>::adopt_coo(a.nrows(), a.ncols(), std::move(out));
}

// B = op(k, A): the scalar is the first operand of `fn`. Pattern is
// unchanged unless drop_zeros is set, in which case results equal to zero
// are removed from storage.
template <typename T>
SparseMatrix<T> apply_scalar(BinOp<T> fn, T k, const SparseMatrix<T>& a,
                             bool drop_zeros = false) {
    auto t = a.triples();
    std::vector<Triple<T>> out;
    out.reserve(t.size());
    for (auto& e : t) {
        e.val = fn(k, e.val);
        if (!drop_zeros || e.val != T{}) out.push_back(e);
    }
    return SparseMatrix<T>::adopt_coo(a.nrows(), a.ncols(), std::move(out));
}

enum class Axis { rows, cols };

// Per-row (result nrows x 1) or per-column (1 x ncols) add-op reduction over
// stored elements; rows/columns with no stored element produce no entry.
template <typename T>
SparseMatrix<T> reduce(const SparseMatrix<T>& a, Axis axis, BinOp<T> add_op) {
    const auto src = axis == Axis::rows ? convert(a, Layout::csr) : convert(a, Layout::csc);
    const Index outer = axis == Axis::rows ? a.nrows() : a.ncols();
    std::vector<Triple<T>> out;
    for (Index o = 0; o < outer; ++o) {
        const Index b = src.ptr()[static_cast<std::size_t>(o)];
        const Index e = src.ptr()[static_cast<std::size_t>(o) + 1];
        if (b == e) continue;
        T v = src.vals()[static_cast<std::size_t>(b)];
        for (Index p = b + 1; p < e; ++p) v = add_op(v, src.vals()[static_cast<std::size_t>(p)]);
        if (axis == Axis::rows) out.push_back({o, 0, v});
        else out.push_back({0, o, v});
    }
    const Index rr = axis == Axis::rows ? a.nrows() : 1;
    const Index rc = axis == Axis::rows ? 1 : a.ncols();
    return SparseMatrix<T>::adopt_coo(rr, rc, std::move(out));
}

}  // namespace gp
