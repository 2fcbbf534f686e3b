// Two-phase bounded-variable primal simplex.
//
// Computational form: A x + s = b with one slack per row; slack bounds
// encode the relation (<=: s >= 0, >=: s <= 0, =: s = 0). Phase one
// minimizes the sum of bound violations of the basic variables, phase two
// minimizes -objective. Fixed variables are substituted out first and the
// remaining problem is split into independent blocks that are solved one
// after another.

#include "batterypool/lp.hpp"

#include "batterypool/error.hpp"
#include "factor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

namespace bpool {

namespace {

using lp::BasisFactor;
using lp::ColumnStore;

constexpr std::size_t kNone = static_cast<std::size_t>(-1);
constexpr double kHarris = 1e-9;
constexpr double kDegenerateStep = 1e-12;

enum class VarState : unsigned char { basic, lower, upper, free_zero };

/// One independent block after presolve, rows scaled to unit max-abs.
struct Block {
    std::vector<std::size_t> vars;  // original variable indices
    std::vector<std::size_t> rows;  // original row indices
    ColumnStore cols;
    std::vector<double> b;
    std::vector<Relation> relation;
};

struct BlockResult {
    LpStatus status = LpStatus::optimal;
    std::vector<double> x;
    std::size_t iterations = 0;
    double dual_infeasibility = 0.0;
    double infeasibility = 0.0;
};

using FactorMaker = std::unique_ptr<BasisFactor> (*)(std::size_t);

class Simplex {
public:
    Simplex(const Block& block, std::span<const double> lower, std::span<const double> upper,
            std::span<const double> cost, const SolverOptions& options, FactorMaker make, std::size_t budget)
        : cols_(block.cols),
          b_(block.b),
          m_(block.b.size()),
          n_(block.vars.size()),
          opt_(options),
          budget_(budget),
          factor_(make(block.b.size())) {
        const std::size_t total = n_ + m_;
        lo_.resize(total);
        up_.resize(total);
        cost_.assign(total, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            lo_[j] = lower[j];
            up_[j] = upper[j];
            cost_[j] = -cost[j];
        }
        for (std::size_t i = 0; i < m_; ++i) {
            switch (block.relation[i]) {
                case Relation::le: lo_[n_ + i] = 0.0; up_[n_ + i] = kInf; break;
                case Relation::ge: lo_[n_ + i] = -kInf; up_[n_ + i] = 0.0; break;
                case Relation::eq: lo_[n_ + i] = 0.0; up_[n_ + i] = 0.0; break;
            }
        }
        x_.assign(total, 0.0);
        state_.assign(total, VarState::lower);
        pos_.assign(total, kNone);
        head_.resize(m_);
        for (std::size_t j = 0; j < n_; ++j) place_nonbasic(j, lo_[j]);
        for (std::size_t i = 0; i < m_; ++i) {
            head_[i] = n_ + i;
            pos_[n_ + i] = i;
            state_[n_ + i] = VarState::basic;
        }
        y_.resize(m_);
        alpha_.resize(m_);
    }

    BlockResult run() {
        BlockResult out;
        refactor();
        bool fresh = true;
        std::size_t degenerate = 0;
        int stalled = 0;
        const double tf = opt_.tol_feas;
        const double td = opt_.tol_pivot;

        while (true) {
            // Phase selection and basic costs.
            bool phase1 = false;
            double sinf = 0.0;
            for (std::size_t k = 0; k < m_; ++k) {
                const std::size_t j = head_[k];
                const double v = x_[j];
                if (v < lo_[j] - tf) {
                    y_[k] = -1.0;
                    sinf += lo_[j] - v;
                    phase1 = true;
                } else if (v > up_[j] + tf) {
                    y_[k] = 1.0;
                    sinf += v - up_[j];
                    phase1 = true;
                } else {
                    y_[k] = 0.0;
                }
            }
            if (!phase1) {
                for (std::size_t k = 0; k < m_; ++k) y_[k] = cost_[head_[k]];
            }
            if (m_ > 0) factor_->btran(y_);

            // Pricing: Dantzig, or Bland after a long degenerate run.
            const bool bland = degenerate > 3 * m_;
            std::size_t q = kNone;
            double best = 0.0;
            int dir = 0;
            double worst_dual = 0.0;
            for (std::size_t j = 0; j < n_ + m_; ++j) {
                const VarState st = state_[j];
                if (st == VarState::basic) continue;
                double d = phase1 ? 0.0 : cost_[j];
                if (j < n_) {
                    for (std::size_t p = cols_.start[j]; p < cols_.start[j + 1]; ++p) d -= y_[cols_.row[p]] * cols_.value[p];
                } else {
                    d -= y_[j - n_];
                }
                double gain = 0.0;
                int s = 0;
                if (st == VarState::lower && d < 0.0 && up_[j] > lo_[j]) {
                    gain = -d;
                    s = 1;
                } else if (st == VarState::upper && d > 0.0) {
                    gain = d;
                    s = -1;
                } else if (st == VarState::free_zero && d != 0.0) {
                    gain = std::fabs(d);
                    s = d < 0.0 ? 1 : -1;
                }
                worst_dual = std::max(worst_dual, gain);
                if (gain <= td) continue;
                if (bland) {
                    if (q == kNone) {
                        q = j;
                        dir = s;
                    }
                } else if (gain > best) {
                    best = gain;
                    q = j;
                    dir = s;
                }
            }

            if (q == kNone) {
                if (!fresh) {
                    refactor();
                    fresh = true;
                    continue;
                }
                out.iterations = iterations_;
                out.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
                if (phase1) {
                    out.status = LpStatus::infeasible;
                    out.infeasibility = sinf;
                } else {
                    out.status = LpStatus::optimal;
                    out.dual_infeasibility = worst_dual;
                }
                return out;
            }

            if (iterations_ >= budget_) {
                throw ResourceError("simplex iteration limit of " + std::to_string(budget_) + " reached");
            }
            ++iterations_;

            std::fill(alpha_.begin(), alpha_.end(), 0.0);
            cols_.for_each(q, [&](std::size_t i, double v) { alpha_[i] = v; });
            if (m_ > 0) factor_->ftran(alpha_);

            const double range = up_[q] - lo_[q];
            std::size_t r = kNone;
            double theta = kInf;
            bool leave_at_upper = false;
            ratio_test(phase1, bland, dir, r, theta, leave_at_upper);

            if (std::isfinite(range) && range <= theta) {
                // Entering variable reaches its opposite bound first.
                apply_step(q, dir, range);
                place_nonbasic(q, dir > 0 ? up_[q] : lo_[q]);
                degenerate = 0;
                fresh = false;
                stalled = 0;
                continue;
            }
            if (r == kNone) {
                if (!fresh) {
                    refactor();
                    fresh = true;
                    continue;
                }
                if (!phase1) {
                    out.status = LpStatus::unbounded;
                    out.iterations = iterations_;
                    out.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
                    return out;
                }
                // Phase one always has a blocking variable in exact
                // arithmetic; a miss means the pivot column is noise.
                if (++stalled > 3) throw ResourceError("simplex phase one stalled on a degenerate direction");
                refactor();
                continue;
            }

            apply_step(q, dir, theta);
            const std::size_t out_var = head_[r];
            place_nonbasic(out_var, leave_at_upper ? up_[out_var] : lo_[out_var]);
            head_[r] = q;
            pos_[q] = r;
            state_[q] = VarState::basic;
            factor_->update(r, alpha_);
            degenerate = theta <= kDegenerateStep ? degenerate + 1 : 0;
            fresh = false;
            stalled = 0;
            if (factor_->n_updates() >= opt_.refactor_interval) {
                refactor();
                fresh = true;
            }
        }
    }

private:
    void place_nonbasic(std::size_t j, double value) {
        pos_[j] = kNone;
        if (std::isfinite(value)) {
            x_[j] = value;
            state_[j] = (value == up_[j] && value != lo_[j]) ? VarState::upper : VarState::lower;
            return;
        }
        if (std::isfinite(lo_[j])) {
            x_[j] = lo_[j];
            state_[j] = VarState::lower;
        } else if (std::isfinite(up_[j])) {
            x_[j] = up_[j];
            state_[j] = VarState::upper;
        } else {
            x_[j] = 0.0;
            state_[j] = VarState::free_zero;
        }
    }

    /// Nonbasic position nearest to the current value.
    double nearest_bound(std::size_t j) const {
        const double v = x_[j];
        const bool fl = std::isfinite(lo_[j]);
        const bool fu = std::isfinite(up_[j]);
        if (fl && fu) return (v - lo_[j] <= up_[j] - v) ? lo_[j] : up_[j];
        if (fl) return lo_[j];
        if (fu) return up_[j];
        return kInf;
    }

    void refactor() {
        for (std::size_t attempt = 0; attempt <= m_; ++attempt) {
            const auto singular = factor_->factor(cols_, head_);
            if (singular.empty()) break;
            for (const auto& [k, row] : singular) {
                const std::size_t j = head_[k];
                place_nonbasic(j, nearest_bound(j));
                const std::size_t slack = n_ + row;
                head_[k] = slack;
                pos_[slack] = k;
                state_[slack] = VarState::basic;
            }
        }
        // Basic values from the nonbasic ones.
        std::vector<double> rhs(b_);
        for (std::size_t j = 0; j < n_ + m_; ++j) {
            if (state_[j] == VarState::basic || x_[j] == 0.0) continue;
            const double v = x_[j];
            cols_.for_each(j, [&](std::size_t i, double a) { rhs[i] -= a * v; });
        }
        if (m_ > 0) factor_->ftran(rhs);
        for (std::size_t k = 0; k < m_; ++k) x_[head_[k]] = rhs[k];
    }

    void apply_step(std::size_t q, int dir, double theta) {
        if (theta == 0.0) return;
        x_[q] += dir * theta;
        for (std::size_t k = 0; k < m_; ++k) {
            if (alpha_[k] != 0.0) x_[head_[k]] -= dir * theta * alpha_[k];
        }
    }

    /// Bound that basic position k runs into when moving with slope delta,
    /// or NaN when it never blocks.
    double blocking_bound(std::size_t k, double delta, bool phase1, bool& upper) const {
        const std::size_t j = head_[k];
        const double v = x_[j];
        const double tf = opt_.tol_feas;
        if (delta > 0.0) {
            if (phase1 && v < lo_[j] - tf) {
                upper = false;
                return lo_[j];
            }
            if (phase1 && v > up_[j] + tf) return std::nan("");
            upper = true;
            return std::isfinite(up_[j]) ? up_[j] : std::nan("");
        }
        if (phase1 && v > up_[j] + tf) {
            upper = true;
            return up_[j];
        }
        if (phase1 && v < lo_[j] - tf) return std::nan("");
        upper = false;
        return std::isfinite(lo_[j]) ? lo_[j] : std::nan("");
    }

    void ratio_test(bool phase1, bool bland, int dir, std::size_t& r, double& theta, bool& leave_upper) const {
        const double tp = opt_.tol_pivot;
        r = kNone;
        theta = kInf;
        if (bland) {
            for (std::size_t k = 0; k < m_; ++k) {
                const double a = alpha_[k];
                if (std::fabs(a) <= tp) continue;
                const double delta = -dir * a;
                bool upper = false;
                const double bound = blocking_bound(k, delta, phase1, upper);
                if (std::isnan(bound)) continue;
                const double ratio = std::max((bound - x_[head_[k]]) / delta, 0.0);
                if (ratio < theta || (ratio == theta && r != kNone && head_[k] < head_[r])) {
                    theta = ratio;
                    r = k;
                    leave_upper = upper;
                }
            }
            return;
        }
        // Harris two-pass: widest step under relaxed bounds, then the
        // largest pivot among candidates that fit inside it.
        double relaxed = kInf;
        for (std::size_t k = 0; k < m_; ++k) {
            const double a = alpha_[k];
            if (std::fabs(a) <= tp) continue;
            const double delta = -dir * a;
            bool upper = false;
            const double bound = blocking_bound(k, delta, phase1, upper);
            if (std::isnan(bound)) continue;
            const double gap = delta > 0.0 ? bound - x_[head_[k]] : x_[head_[k]] - bound;
            relaxed = std::min(relaxed, (gap + kHarris) / std::fabs(delta));
        }
        if (!std::isfinite(relaxed)) return;
        double best_pivot = 0.0;
        for (std::size_t k = 0; k < m_; ++k) {
            const double a = alpha_[k];
            if (std::fabs(a) <= tp) continue;
            const double delta = -dir * a;
            bool upper = false;
            const double bound = blocking_bound(k, delta, phase1, upper);
            if (std::isnan(bound)) continue;
            const double gap = delta > 0.0 ? bound - x_[head_[k]] : x_[head_[k]] - bound;
            const double ratio = gap / std::fabs(delta);
            if (ratio <= relaxed && std::fabs(a) > best_pivot) {
                best_pivot = std::fabs(a);
                r = k;
                theta = std::max(ratio, 0.0);
                leave_upper = upper;
            }
        }
    }

    const ColumnStore& cols_;
    const std::vector<double>& b_;
    std::size_t m_, n_;
    SolverOptions opt_;
    std::size_t budget_;
    std::unique_ptr<BasisFactor> factor_;
    std::vector<double> lo_, up_, cost_, x_;
    std::vector<VarState> state_;
    std::vector<std::size_t> pos_, head_;
    std::vector<double> y_, alpha_;
    std::size_t iterations_ = 0;
};

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;  // root is the smallest index
    }

private:
    std::vector<std::size_t> parent_;
};

LpSolution run_solver(const LpProblem& problem, const SolverOptions& options, FactorMaker make) {
    problem.validate();
    if (!(options.tol_feas > 0.0) || !(options.tol_pivot > 0.0) || options.refactor_interval == 0) {
        throw ConfigError("solver tolerances must be positive");
    }
    const std::size_t n = problem.n_vars;
    const auto& lower = problem.var_lower;
    const auto& upper = problem.var_upper;

    LpSolution sol;
    sol.x.assign(n, 0.0);
    std::vector<char> fixed(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        if (lower[j] == upper[j]) {
            fixed[j] = 1;
            sol.x[j] = lower[j];
        }
    }

    // Reduced rows: fixed variables folded into the right-hand side.
    const std::size_t n_rows = problem.rows.size();
    std::vector<double> rhs(n_rows);
    std::vector<std::size_t> first_free(n_rows, kNone);
    UnionFind uf(n);
    for (std::size_t r = 0; r < n_rows; ++r) {
        const auto& row = problem.rows[r];
        double v = row.rhs;
        double scale = 0.0;
        for (std::size_t k = 0; k < row.index.size(); ++k) {
            const std::size_t j = row.index[k];
            scale = std::max(scale, std::fabs(row.value[k]));
            if (fixed[j]) {
                v -= row.value[k] * sol.x[j];
            } else if (row.value[k] != 0.0) {
                if (first_free[r] == kNone) {
                    first_free[r] = j;
                } else {
                    uf.unite(first_free[r], j);
                }
            }
        }
        rhs[r] = v;
        if (first_free[r] == kNone) {
            const double tol = options.tol_feas * std::max(1.0, scale);
            const bool ok = row.relation == Relation::eq   ? std::fabs(v) <= tol
                            : row.relation == Relation::le ? v >= -tol
                                                           : v <= tol;
            if (!ok) {
                sol.status = LpStatus::infeasible;
                sol.infeasibility = std::fabs(v);
                return sol;
            }
        }
    }

    // Blocks ordered by their smallest variable index.
    std::map<std::size_t, std::size_t> block_of_root;
    std::vector<Block> blocks;
    std::vector<std::size_t> local(n, kNone);
    std::vector<std::size_t> block_of_var(n, kNone);
    for (std::size_t j = 0; j < n; ++j) {
        if (fixed[j]) continue;
        const std::size_t root = uf.find(j);
        auto [it, inserted] = block_of_root.emplace(root, blocks.size());
        if (inserted) blocks.emplace_back();
        auto& blk = blocks[it->second];
        local[j] = blk.vars.size();
        blk.vars.push_back(j);
        block_of_var[j] = it->second;
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
        if (first_free[r] != kNone) blocks[block_of_var[first_free[r]]].rows.push_back(r);
    }

    const std::size_t cap =
        options.max_iterations ? options.max_iterations : 50 * (problem.n_vars + problem.rows.size());
    bool unbounded = false;
    double worst_dual = 0.0;

    for (auto& blk : blocks) {
        const std::size_t nb = blk.vars.size();
        const std::size_t mb = blk.rows.size();
        std::vector<double> lo(nb), up(nb), c(nb);
        for (std::size_t k = 0; k < nb; ++k) {
            lo[k] = lower[blk.vars[k]];
            up[k] = upper[blk.vars[k]];
            c[k] = problem.objective[blk.vars[k]];
        }

        if (mb == 0) {
            // Unconstrained variable: push to the better bound.
            const std::size_t j = blk.vars[0];
            double v = 0.0;
            if (c[0] > 0.0) {
                v = up[0];
            } else if (c[0] < 0.0) {
                v = lo[0];
            } else {
                v = std::isfinite(lo[0]) ? lo[0] : std::isfinite(up[0]) ? up[0] : 0.0;
            }
            if (!std::isfinite(v)) {
                unbounded = true;
                v = std::isfinite(lo[0]) ? lo[0] : std::isfinite(up[0]) ? up[0] : 0.0;
            }
            sol.x[j] = v;
            continue;
        }

        // Row-scaled column store.
        blk.cols.n_struct = nb;
        blk.cols.n_rows = mb;
        blk.b.resize(mb);
        blk.relation.resize(mb);
        std::vector<std::size_t> counts(nb + 1, 0);
        std::vector<double> row_scale(mb);
        for (std::size_t i = 0; i < mb; ++i) {
            const auto& row = problem.rows[blk.rows[i]];
            double big = 0.0;
            for (std::size_t k = 0; k < row.index.size(); ++k) {
                if (!fixed[row.index[k]] && row.value[k] != 0.0) {
                    big = std::max(big, std::fabs(row.value[k]));
                    ++counts[local[row.index[k]] + 1];
                }
            }
            row_scale[i] = 1.0 / big;
            blk.b[i] = rhs[blk.rows[i]] * row_scale[i];
            blk.relation[i] = row.relation;
        }
        std::partial_sum(counts.begin(), counts.end(), counts.begin());
        blk.cols.start = counts;
        blk.cols.row.resize(counts[nb]);
        blk.cols.value.resize(counts[nb]);
        std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
        for (std::size_t i = 0; i < mb; ++i) {
            const auto& row = problem.rows[blk.rows[i]];
            for (std::size_t k = 0; k < row.index.size(); ++k) {
                if (fixed[row.index[k]] || row.value[k] == 0.0) continue;
                const std::size_t p = fill[local[row.index[k]]]++;
                blk.cols.row[p] = i;
                blk.cols.value[p] = row.value[k] * row_scale[i];
            }
        }

        const std::size_t budget = cap > sol.iterations ? cap - sol.iterations : 0;
        Simplex simplex(blk, lo, up, c, options, make, budget);
        BlockResult res = simplex.run();
        sol.iterations += res.iterations;
        for (std::size_t k = 0; k < nb; ++k) sol.x[blk.vars[k]] = res.x[k];
        if (res.status == LpStatus::infeasible) {
            sol.status = LpStatus::infeasible;
            sol.infeasibility = res.infeasibility;
            return sol;
        }
        if (res.status == LpStatus::unbounded) unbounded = true;
        worst_dual = std::max(worst_dual, res.dual_infeasibility);
    }

    sol.status = unbounded ? LpStatus::unbounded : LpStatus::optimal;
    sol.dual_infeasibility = worst_dual;
    sol.objective_value = objective_at(problem, sol.x);
    return sol;
}

struct Registry {
    std::mutex mutex;
    std::map<std::string, LpBackend, std::less<>> backends;

    Registry() {
        backends.emplace("reference", [](const LpProblem& p, const SolverOptions& o) {
            return run_solver(p, o, &lp::make_sparse_factor);
        });
        backends.emplace("dense", [](const LpProblem& p, const SolverOptions& o) {
            return run_solver(p, o, &lp::make_dense_factor);
        });
    }
};

Registry& registry() {
    static Registry r;
    return r;
}

}  // namespace

LpSolution solve(const LpProblem& problem, const SolverOptions& options) {
    return run_solver(problem, options, &lp::make_sparse_factor);
}

LpSolution solve_with(const LpProblem& problem, std::string_view backend, const SolverOptions& options) {
    LpBackend fn;
    {
        auto& reg = registry();
        std::lock_guard lock(reg.mutex);
        const auto it = reg.backends.find(backend);
        if (it == reg.backends.end()) throw ConfigError("unknown LP backend '" + std::string(backend) + "'");
        fn = it->second;
    }
    return fn(problem, options);
}

void register_backend(std::string name, LpBackend backend) {
    if (name.empty() || !backend) throw ConfigError("backend needs a name and a callable");
    auto& reg = registry();
    std::lock_guard lock(reg.mutex);
    reg.backends[std::move(name)] = std::move(backend);
}

std::vector<std::string> backend_names() {
    auto& reg = registry();
    std::lock_guard lock(reg.mutex);
    std::vector<std::string> out;
    for (const auto& [name, fn] : reg.backends) out.push_back(name);
    return out;
}

bool has_backend(std::string_view name) {
    auto& reg = registry();
    std::lock_guard lock(reg.mutex);
    return reg.backends.find(name) != reg.backends.end();
}

}  // namespace bpool
