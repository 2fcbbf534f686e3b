#pragma once

// Exhaustive basic-solution enumeration for small LPs. Independent of the
// simplex code: every vertex of {rows, bounds} is a choice of active rows,
// an equal number of basic variables, and a bound for every other variable.

#include "batterypool/lp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace oracle {

struct LpAnswer {
    bpool::LpStatus status = bpool::LpStatus::infeasible;
    double objective = 0.0;
    std::vector<double> x;
};

namespace detail {

/// Dense LU with partial pivoting; false when singular.
inline bool lu_factor(std::vector<double>& a, std::vector<int>& perm, int k) {
    perm.resize(k);
    for (int i = 0; i < k; ++i) perm[i] = i;
    for (int c = 0; c < k; ++c) {
        int p = c;
        for (int i = c + 1; i < k; ++i) {
            if (std::fabs(a[i * k + c]) > std::fabs(a[p * k + c])) p = i;
        }
        if (std::fabs(a[p * k + c]) < 1e-10) return false;
        if (p != c) {
            for (int j = 0; j < k; ++j) std::swap(a[p * k + j], a[c * k + j]);
            std::swap(perm[p], perm[c]);
        }
        for (int i = c + 1; i < k; ++i) {
            const double f = a[i * k + c] / a[c * k + c];
            a[i * k + c] = f;
            for (int j = c + 1; j < k; ++j) a[i * k + j] -= f * a[c * k + j];
        }
    }
    return true;
}

inline void lu_solve(const std::vector<double>& lu, const std::vector<int>& perm, int k, std::vector<double>& b) {
    std::vector<double> y(k);
    for (int i = 0; i < k; ++i) y[i] = b[perm[i]];
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < i; ++j) y[i] -= lu[i * k + j] * y[j];
    }
    for (int i = k - 1; i >= 0; --i) {
        for (int j = i + 1; j < k; ++j) y[i] -= lu[i * k + j] * y[j];
        y[i] /= lu[i * k + i];
    }
    b = y;
}

struct Dense {
    int n = 0, m = 0;
    std::vector<double> a;  // m x n row-major
    std::vector<double> b;
    std::vector<bpool::Relation> rel;
    std::vector<double> lo, up, c;
};

inline std::optional<std::pair<double, std::vector<double>>> best_vertex(const Dense& d, double tol) {
    const int n = d.n, m = d.m;
    std::vector<int> eq, ineq;
    for (int i = 0; i < m; ++i) {
        bool empty = true;
        for (int j = 0; j < n; ++j) empty = empty && d.a[i * n + j] == 0.0;
        // Equalities are enumerated like inequalities so that dependent
        // ones drop out of the active set; row_ok still enforces them.
        if (!empty) ineq.push_back(i);
    }
    std::optional<std::pair<double, std::vector<double>>> best;

    auto row_ok = [&](int i, double lhs) {
        const double s = lhs - d.b[i];
        switch (d.rel[i]) {
            case bpool::Relation::eq: return std::fabs(s) <= tol;
            case bpool::Relation::le: return s <= tol;
            case bpool::Relation::ge: return s >= -tol;
        }
        return false;
    };

    const int n_ineq = static_cast<int>(ineq.size());
    for (unsigned mask = 0; mask < (1u << n_ineq); ++mask) {
        std::vector<int> active = eq;
        for (int t = 0; t < n_ineq; ++t) {
            if (mask & (1u << t)) active.push_back(ineq[t]);
        }
        const int k = static_cast<int>(active.size());
        if (k > n) continue;
        // Basic variable subsets of size k.
        std::vector<int> basic(k);
        std::function<void(int, int)> choose;
        std::vector<char> is_basic(n, 0);
        auto evaluate = [&]() {
            std::vector<double> lu(k * k);
            for (int r = 0; r < k; ++r) {
                for (int cix = 0; cix < k; ++cix) lu[r * k + cix] = d.a[active[r] * n + basic[cix]];
            }
            std::vector<int> perm;
            if (k > 0 && !lu_factor(lu, perm, k)) return;
            std::vector<int> nonbasic;
            for (int j = 0; j < n; ++j) {
                if (!is_basic[j]) nonbasic.push_back(j);
            }
            std::vector<double> x(n, 0.0);
            std::function<void(std::size_t)> assign = [&](std::size_t t) {
                if (t == nonbasic.size()) {
                    std::vector<double> rhs(k);
                    for (int r = 0; r < k; ++r) {
                        double v = d.b[active[r]];
                        for (int j : nonbasic) v -= d.a[active[r] * n + j] * x[j];
                        rhs[r] = v;
                    }
                    if (k > 0) lu_solve(lu, perm, k, rhs);
                    for (int cix = 0; cix < k; ++cix) {
                        const int j = basic[cix];
                        if (rhs[cix] < d.lo[j] - tol || rhs[cix] > d.up[j] + tol) return;
                        x[j] = rhs[cix];
                    }
                    for (int i = 0; i < m; ++i) {
                        double lhs = 0.0;
                        for (int j = 0; j < n; ++j) lhs += d.a[i * n + j] * x[j];
                        if (!row_ok(i, lhs)) return;
                    }
                    double obj = 0.0;
                    for (int j = 0; j < n; ++j) obj += d.c[j] * x[j];
                    if (!best || obj > best->first) best = std::make_pair(obj, x);
                    return;
                }
                const int j = nonbasic[t];
                x[j] = d.lo[j];
                assign(t + 1);
                if (d.up[j] != d.lo[j]) {
                    x[j] = d.up[j];
                    assign(t + 1);
                }
            };
            assign(0);
        };
        choose = [&](int start, int depth) {
            if (depth == k) {
                evaluate();
                return;
            }
            for (int j = start; j <= n - (k - depth); ++j) {
                basic[depth] = j;
                is_basic[j] = 1;
                choose(j + 1, depth + 1);
                is_basic[j] = 0;
            }
        };
        choose(0, 0);
    }
    return best;
}

inline Dense densify(const bpool::LpProblem& p, double big) {
    Dense d;
    d.n = static_cast<int>(p.n_vars);
    d.m = static_cast<int>(p.rows.size());
    d.a.assign(d.m * d.n, 0.0);
    for (int i = 0; i < d.m; ++i) {
        const auto& row = p.rows[i];
        for (std::size_t k = 0; k < row.index.size(); ++k) d.a[i * d.n + row.index[k]] = row.value[k];
        d.b.push_back(row.rhs);
        d.rel.push_back(row.relation);
    }
    for (int j = 0; j < d.n; ++j) {
        d.lo.push_back(std::isfinite(p.var_lower[j]) ? p.var_lower[j] : -big);
        d.up.push_back(std::isfinite(p.var_upper[j]) ? p.var_upper[j] : big);
        d.c.push_back(p.objective[j]);
    }
    return d;
}

}  // namespace detail

/// Status and optimum by enumeration. Infinite bounds are replaced by ±big
/// and ±10·big; a growing optimum means the LP is unbounded.
inline LpAnswer brute_force_lp(const bpool::LpProblem& p, double big = 1e4, double tol = 1e-9) {
    LpAnswer out;
    const auto first = detail::best_vertex(detail::densify(p, big), tol);
    if (!first) {
        out.status = bpool::LpStatus::infeasible;
        return out;
    }
    bool has_infinite = false;
    for (std::size_t j = 0; j < p.n_vars; ++j) {
        has_infinite = has_infinite || !std::isfinite(p.var_lower[j]) || !std::isfinite(p.var_upper[j]);
    }
    if (has_infinite) {
        const auto second = detail::best_vertex(detail::densify(p, 10.0 * big), tol);
        if (second && second->first > first->first + 1e-6 * std::max(1.0, std::fabs(first->first))) {
            out.status = bpool::LpStatus::unbounded;
            return out;
        }
    }
    out.status = bpool::LpStatus::optimal;
    out.objective = first->first + p.objective_constant;
    out.x = first->second;
    return out;
}

}  // namespace oracle
