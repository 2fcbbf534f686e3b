#include "batterypool/lp.hpp"

#include "batterypool/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace bpool {

std::size_t LpProblem::add_var(double lower, double upper, double cost, std::string name) {
    objective.push_back(cost);
    var_lower.push_back(lower);
    var_upper.push_back(upper);
    if (!name.empty() || !var_names.empty()) {
        var_names.resize(n_vars);
        var_names.push_back(std::move(name));
    }
    return n_vars++;
}

std::size_t LpProblem::add_row(std::vector<std::size_t> index, std::vector<double> value, Relation relation,
                               double rhs) {
    rows.push_back(LpRow{std::move(index), std::move(value), relation, rhs});
    return rows.size() - 1;
}

void LpProblem::validate() const {
    if (objective.size() != n_vars || var_lower.size() != n_vars || var_upper.size() != n_vars) {
        throw ShapeError("objective and bound vectors must have n_vars entries");
    }
    if (!var_names.empty() && var_names.size() != n_vars) throw ShapeError("var_names must be empty or n_vars long");
    for (std::size_t j = 0; j < n_vars; ++j) {
        if (std::isnan(var_lower[j]) || std::isnan(var_upper[j]) || var_lower[j] > var_upper[j] ||
            var_lower[j] == kInf || var_upper[j] == -kInf) {
            throw ValidationError("bad bounds on variable " + std::to_string(j));
        }
        if (!std::isfinite(objective[j])) throw ValidationError("non-finite objective coefficient");
    }
    std::vector<std::size_t> seen(n_vars, static_cast<std::size_t>(-1));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.index.size() != row.value.size()) throw ShapeError("row " + std::to_string(r) + " is ragged");
        if (!std::isfinite(row.rhs)) throw ValidationError("row " + std::to_string(r) + " has non-finite rhs");
        for (std::size_t k = 0; k < row.index.size(); ++k) {
            const std::size_t j = row.index[k];
            if (j >= n_vars) throw ShapeError("row " + std::to_string(r) + " references a missing variable");
            if (seen[j] == r) throw ValidationError("row " + std::to_string(r) + " repeats a variable");
            seen[j] = r;
            if (!std::isfinite(row.value[k])) throw ValidationError("row " + std::to_string(r) + " non-finite coefficient");
        }
    }
}

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
    }
    return "?";
}

namespace {

std::string var_label(const LpProblem& p, std::size_t j) {
    if (!p.var_names.empty() && !p.var_names[j].empty()) return p.var_names[j];
    return "x" + std::to_string(j);
}

void appendf(std::string& out, const char* fmt, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, args...);
    out += buf;
}

}  // namespace

std::string dump_problem(const LpProblem& p) {
    std::string out;
    appendf(out, "LP %zu vars %zu rows maximize (constant %.17g)\n", p.n_vars, p.rows.size(),
            p.objective_constant);
    out += "VARIABLES\n";
    for (std::size_t j = 0; j < p.n_vars; ++j) {
        appendf(out, "  %-24s %24.17g %24.17g %24.17g\n", var_label(p, j).c_str(), p.var_lower[j], p.var_upper[j],
                p.objective[j]);
    }
    out += "ROWS\n";
    for (std::size_t r = 0; r < p.rows.size(); ++r) {
        const auto& row = p.rows[r];
        const char* rel = row.relation == Relation::eq ? "=" : row.relation == Relation::le ? "<=" : ">=";
        appendf(out, "  R%-8zu %-2s %24.17g\n", r, rel, row.rhs);
        for (std::size_t k = 0; k < row.index.size(); ++k) {
            appendf(out, "    %-24s %24.17g\n", var_label(p, row.index[k]).c_str(), row.value[k]);
        }
    }
    return out;
}

double max_violation(const LpProblem& p, std::span<const double> x) {
    if (x.size() != p.n_vars) throw ShapeError("point has the wrong dimension");
    double worst = 0.0;
    for (std::size_t j = 0; j < p.n_vars; ++j) {
        worst = std::max({worst, p.var_lower[j] - x[j], x[j] - p.var_upper[j]});
    }
    for (const auto& row : p.rows) {
        double lhs = 0.0;
        for (std::size_t k = 0; k < row.index.size(); ++k) lhs += row.value[k] * x[row.index[k]];
        const double d = lhs - row.rhs;
        switch (row.relation) {
            case Relation::eq: worst = std::max(worst, std::fabs(d)); break;
            case Relation::le: worst = std::max(worst, d); break;
            case Relation::ge: worst = std::max(worst, -d); break;
        }
    }
    return worst;
}

double objective_at(const LpProblem& p, std::span<const double> x) {
    if (x.size() != p.n_vars) throw ShapeError("point has the wrong dimension");
    double v = 0.0;
    for (std::size_t j = 0; j < p.n_vars; ++j) v += p.objective[j] * x[j];
    return v + p.objective_constant;
}

}  // namespace bpool
