#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bpool {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { eq, le, ge };

struct LpRow {
    std::vector<std::size_t> index;
    std::vector<double> value;
    Relation relation = Relation::le;
    double rhs = 0.0;
};

/// Maximize objective·x + objective_constant subject to rows and bounds.
struct LpProblem {
    std::size_t n_vars = 0;
    std::vector<double> objective;
    double objective_constant = 0.0;
    std::vector<double> var_lower;
    std::vector<double> var_upper;
    std::vector<LpRow> rows;
    std::vector<std::string> var_names;  // empty, or one per variable

    std::size_t add_var(double lower, double upper, double cost, std::string name = {});
    std::size_t add_row(std::vector<std::size_t> index, std::vector<double> value, Relation relation, double rhs);

    /// Throws ShapeError / ValidationError when the invariants do not hold.
    void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded };
std::string to_string(LpStatus status);

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> x;
    double objective_value = 0.0;
    std::size_t iterations = 0;
    /// Largest reduced-cost sign violation at the final basis (scaled
    /// problem); zero or below tol_pivot when optimal.
    double dual_infeasibility = 0.0;
    /// Phase-one infeasibility left when status is infeasible.
    double infeasibility = 0.0;
};

struct SolverOptions {
    double tol_feas = 1e-7;
    double tol_pivot = 1e-9;
    /// 0 selects 50·(n_vars + n_rows).
    std::size_t max_iterations = 0;
    /// Updates between refactorizations of the basis.
    std::size_t refactor_interval = 100;
};

inline constexpr std::string_view kDefaultBackend = "reference";

/// Two-phase bounded-variable primal simplex with the default backend.
/// Throws ResourceError when the iteration cap is hit.
LpSolution solve(const LpProblem& problem, const SolverOptions& options = {});

/// Same contract as solve(), through a named backend. Built-ins:
/// "reference" (sparse LU with product-form updates) and "dense" (explicit
/// basis inverse). Throws ConfigError for unknown names.
LpSolution solve_with(const LpProblem& problem, std::string_view backend, const SolverOptions& options = {});

using LpBackend = std::function<LpSolution(const LpProblem&, const SolverOptions&)>;
void register_backend(std::string name, LpBackend backend);
std::vector<std::string> backend_names();
bool has_backend(std::string_view name);

/// Fixed-width text listing of bounds, objective and rows.
std::string dump_problem(const LpProblem& problem);

/// Largest absolute bound or row violation of x (unscaled).
double max_violation(const LpProblem& problem, std::span<const double> x);

/// objective·x + objective_constant.
double objective_at(const LpProblem& problem, std::span<const double> x);

}  // namespace bpool
