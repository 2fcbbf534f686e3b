#pragma once

// Basis factorizations used by the simplex. Positions index basis columns;
// rows index constraint rows. Column j < n_struct comes from the structural
// matrix, column n_struct + i is the unit slack of row i.

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace bpool::lp {

struct ColumnStore {
    std::size_t n_struct = 0;
    std::size_t n_rows = 0;
    std::vector<std::size_t> start;  // n_struct + 1
    std::vector<std::size_t> row;
    std::vector<double> value;

    std::size_t size(std::size_t j) const noexcept { return j < n_struct ? start[j + 1] - start[j] : 1; }

    template <class F>
    void for_each(std::size_t j, F&& f) const {
        if (j < n_struct) {
            for (std::size_t p = start[j]; p < start[j + 1]; ++p) f(row[p], value[p]);
        } else {
            f(j - n_struct, 1.0);
        }
    }
};

/// (basis position, unpivoted row) pairs that must be swapped for slacks.
using SingularList = std::vector<std::pair<std::size_t, std::size_t>>;

class BasisFactor {
public:
    virtual ~BasisFactor() = default;
    /// Factor the basis whose k-th column is store column head[k].
    virtual SingularList factor(const ColumnStore& store, std::span<const std::size_t> head) = 0;
    /// In: right-hand side by row. Out: solution by basis position.
    virtual void ftran(std::vector<double>& v) const = 0;
    /// In: vector by basis position. Out: solution of B^T y = v by row.
    virtual void btran(std::vector<double>& v) const = 0;
    /// Column at position r replaced; alpha is the ftran of the entering column.
    virtual void update(std::size_t r, const std::vector<double>& alpha) = 0;
    virtual std::size_t n_updates() const noexcept = 0;
};

std::unique_ptr<BasisFactor> make_sparse_factor(std::size_t m);
std::unique_ptr<BasisFactor> make_dense_factor(std::size_t m);

}  // namespace bpool::lp
