#pragma once

#include <string>
#include <vector>

#include "eventum/matrix.hpp"

namespace eventum {

/// Fixed-length word over {0..base-1}, deepest (oldest) entry first.
using Word = std::vector<int>;

/// Basis index of a word: entry 0 is the most significant digit, matching a
/// tensor product ordered deepest cell first.
inline Index word_to_index(const Word& w, int base) {
    Index idx = 0;
    for (int v : w) idx = idx * base + v;
    return idx;
}

inline Word index_to_word(Index idx, int base, int length) {
    Word w(static_cast<size_t>(length), 0);
    for (int i = length - 1; i >= 0; --i) {
        w[static_cast<size_t>(i)] = static_cast<int>(idx % base);
        idx /= base;
    }
    return w;
}

inline std::string word_label(const Word& w) {
    std::string s;
    for (size_t i = 0; i < w.size(); ++i) {
        if (i) s += '.';
        s += std::to_string(w[i]);
    }
    return s;
}

/// Cyclic left shift on a ring of n_cells base-ary registers: cell j receives
/// the previous content of cell j+1 (mod n_cells).
inline CMat ring_shift_unitary(int base, int n_cells, Index dim_cap = kDimCap) {
    Index dim = 1;
    for (int c = 0; c < n_cells; ++c) {
        dim *= base;
        if (dim > dim_cap) throw SizeError("ring_shift_unitary: dimension exceeds cap");
    }
    CMat u = CMat::Zero(dim, dim);
    for (Index in = 0; in < dim; ++in) {
        Word w = index_to_word(in, base, n_cells);
        Word rot(w.size());
        for (size_t j = 0; j < w.size(); ++j) rot[j] = w[(j + 1) % w.size()];
        u(word_to_index(rot, base), in) = 1.0;
    }
    return u;
}

/// Permutation matrix that reorders tensor factors. dims are the factor
/// dimensions in the old order; new_from_old[p] is the old factor that sits
/// at new position p. Conjugating by the result moves an operator between
/// the two orderings: M_new = P M_old P*.
inline CMat factor_permutation(const std::vector<Index>& dims,
                               const std::vector<size_t>& new_from_old) {
    Index dim = 1;
    for (Index d : dims) dim *= d;
    CMat p = CMat::Zero(dim, dim);
    const size_t n = dims.size();
    for (Index in = 0; in < dim; ++in) {
        // old multi-index, factor 0 most significant
        std::vector<Index> digits(n);
        Index rest = in;
        for (size_t i = n; i-- > 0;) {
            digits[i] = rest % dims[i];
            rest /= dims[i];
        }
        Index out = 0;
        for (size_t pos = 0; pos < n; ++pos) out = out * dims[new_from_old[pos]] + digits[new_from_old[pos]];
        p(out, in) = 1.0;
    }
    return p;
}

}  // namespace eventum
