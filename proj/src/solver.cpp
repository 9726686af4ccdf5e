#include "mval/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxBisectionIters = 200;
constexpr double kMassTolerance = 1e-13;

void check_inputs(std::span<const double> c, std::span<const double> q, double alpha) {
    if (c.size() != q.size())
        fail("ShapeMismatch", "weight and policy rows have different lengths");
    if (c.empty()) fail("EmptyTable", "empty action set");
    if (alpha == 0.0) fail("ZeroAlpha", "alpha = 0: no augmentation budget");
    if (!(alpha > 0.0) || alpha > 1.0)
        fail("InvalidAlpha", "alpha must be in (0, 1]");
    for (double v : c)
        if (!(v >= 0.0)) fail("NegativeEntry", "objective weight < 0");
}

double cell_cost(double c, double denom) {
    if (c == 0.0) return 0.0;
    if (denom <= 0.0) return kInf;
    return c / denom;
}

}  // namespace

double mval_objective(std::span<const double> c, std::span<const double> q,
                      double alpha, std::span<const double> pi) {
    double total = 0.0;
    for (std::size_t a = 0; a < c.size(); ++a)
        total += cell_cost(c[a], (1.0 - alpha) * q[a] + alpha * pi[a]);
    return total;
}

std::vector<double> minvar_ips_policy(std::span<const double> target_row,
                                      std::span<const double> m_row) {
    if (target_row.size() != m_row.size())
        fail("ShapeMismatch", "target and moment rows have different lengths");
    std::vector<double> out(target_row.size(), 0.0);
    double norm = 0.0;
    for (std::size_t a = 0; a < out.size(); ++a) {
        out[a] = target_row[a] * std::sqrt(m_row[a]);
        norm += out[a];
    }
    if (norm <= 0.0)
        fail("DegenerateWeights", "all pi_t * sqrt(m) weights are zero");
    for (double& v : out) v /= norm;
    return out;
}

std::pair<std::vector<double>, SolverDiagnostics> mval_solve_context(
    const ContextWeights& weights, std::span<const double> old_row, double alpha) {
    std::span<const double> c(weights.c);
    check_inputs(c, old_row, alpha);
    const std::size_t n = c.size();

    SolverDiagnostics diag;
    std::vector<double> pi(n, 0.0);

    double c_max = 0.0;
    for (double v : c) c_max = std::max(c_max, v);
    if (c_max == 0.0) {
        // Objective is constant; return the canonical uniform representative.
        diag.degenerate_weights = true;
        std::fill(pi.begin(), pi.end(), 1.0 / static_cast<double>(n));
        for (std::size_t a = 0; a < n; ++a) diag.active_set.push_back(a);
        return {pi, diag};
    }

    // Total mass allocated at a given multiplier. Strictly decreasing in
    // lambda wherever positive, so plain bisection is exact.
    auto fill = [&](double lambda, std::vector<double>& out) {
        double mass = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            double v = 0.0;
            if (c[a] > 0.0) {
                v = (std::sqrt(alpha * c[a] / lambda) - (1.0 - alpha) * old_row[a]) / alpha;
                if (v < 0.0) v = 0.0;
            }
            out[a] = v;
            mass += v;
        }
        return mass;
    };

    std::vector<double> scratch(n);
    double lambda = alpha * c_max;  // scale guess; bracket expansion fixes the rest
    double mass = fill(lambda, scratch);

    double lo = lambda, hi = lambda;
    while (mass > 1.0 && hi < 1e300) {
        hi *= 4.0;
        mass = fill(hi, scratch);
    }
    mass = fill(lo, scratch);
    while (mass < 1.0 && lo > 1e-300) {
        lo /= 4.0;
        mass = fill(lo, scratch);
    }

    // Invariant: mass(lo) >= 1 >= mass(hi).
    for (int iter = 0; iter < kMaxBisectionIters; ++iter) {
        lambda = 0.5 * (lo + hi);
        mass = fill(lambda, scratch);
        ++diag.bisection_iters;
        if (std::abs(mass - 1.0) <= kMassTolerance) break;
        if (mass > 1.0)
            lo = lambda;
        else
            hi = lambda;
    }

    pi = scratch;
    double total = 0.0;
    for (double v : pi) total += v;
    for (double& v : pi) v /= total;

    diag.lambda = lambda;
    double residual = -1.0;
    for (std::size_t a = 0; a < n; ++a) {
        if (pi[a] > 0.0) diag.active_set.push_back(a);
        residual += pi[a];
    }
    diag.simplex_residual = std::abs(residual);
    return {pi, diag};
}

namespace {

double binomial_points(int resolution, std::size_t actions) {
    // C(resolution + actions - 1, actions - 1)
    double v = 1.0;
    for (std::size_t i = 1; i < actions; ++i)
        v *= static_cast<double>(resolution + i) / static_cast<double>(i);
    return v;
}

// Exact greedy unit allocation: hand out the resolution grid units one at a
// time to the action with the largest marginal objective decrease. Optimal
// for separable convex per-action costs.
std::vector<int> greedy_grid_minimize(std::span<const double> c,
                                      std::span<const double> q, double alpha,
                                      int resolution) {
    const std::size_t n = c.size();
    const double step = 1.0 / static_cast<double>(resolution);
    auto cost_at = [&](std::size_t a, int t) {
        return cell_cost(c[a], (1.0 - alpha) * q[a] + alpha * step * t);
    };

    std::vector<int> units(n, 0);
    std::vector<double> gain(n);  // marginal decrease of the next unit
    for (std::size_t a = 0; a < n; ++a) gain[a] = cost_at(a, 0) - cost_at(a, 1);

    for (int u = 0; u < resolution; ++u) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < n; ++a)
            if (gain[a] > gain[best]) best = a;
        ++units[best];
        gain[best] = cost_at(best, units[best]) - cost_at(best, units[best] + 1);
    }
    return units;
}

std::vector<int> exhaustive_grid_minimize(std::span<const double> c,
                                          std::span<const double> q, double alpha,
                                          int resolution) {
    const std::size_t n = c.size();
    const double step = 1.0 / static_cast<double>(resolution);
    auto cost_at = [&](std::size_t a, int t) {
        return cell_cost(c[a], (1.0 - alpha) * q[a] + alpha * step * t);
    };

    std::vector<int> best(n, 0), current(n, 0);
    double best_obj = kInf;

    // Recursive composition of `resolution` units across actions; the last
    // coordinate absorbs the remainder.
    auto recurse = [&](auto&& self, std::size_t a, int remaining, double partial) -> void {
        if (a + 1 == n) {
            current[a] = remaining;
            const double obj = partial + cost_at(a, remaining);
            if (obj < best_obj) {
                best_obj = obj;
                best = current;
            }
            return;
        }
        for (int t = 0; t <= remaining; ++t) {
            current[a] = t;
            const double cost = cost_at(a, t);
            if (cost >= best_obj) continue;  // costs are non-negative
            self(self, a + 1, remaining - t, partial + cost);
        }
    };
    recurse(recurse, 0, resolution, 0.0);
    return best;
}

std::vector<double> units_to_row(const std::vector<int>& units, int resolution) {
    std::vector<double> out(units.size());
    for (std::size_t a = 0; a < units.size(); ++a)
        out[a] = static_cast<double>(units[a]) / static_cast<double>(resolution);
    return out;
}

void check_oracle_inputs(std::span<const double> c, std::span<const double> q,
                         double alpha, int resolution) {
    check_inputs(c, q, alpha);
    if (c.size() > 4) fail("TooManyActions", "grid oracle handles at most 4 actions");
    if (resolution < 1 || resolution > 2000)
        fail("ResolutionTooLarge", "grid resolution must be in [1, 2000]");
}

}  // namespace

std::vector<double> mval_grid_oracle(const ContextWeights& weights,
                                     std::span<const double> old_row, double alpha,
                                     int resolution) {
    std::span<const double> c(weights.c);
    check_oracle_inputs(c, old_row, alpha, resolution);
    if (binomial_points(resolution, c.size()) <= 4e6)
        return units_to_row(exhaustive_grid_minimize(c, old_row, alpha, resolution),
                            resolution);
    return units_to_row(greedy_grid_minimize(c, old_row, alpha, resolution), resolution);
}

std::vector<double> mval_grid_oracle_exhaustive(const ContextWeights& weights,
                                                std::span<const double> old_row,
                                                double alpha, int resolution) {
    std::span<const double> c(weights.c);
    check_oracle_inputs(c, old_row, alpha, resolution);
    return units_to_row(exhaustive_grid_minimize(c, old_row, alpha, resolution),
                        resolution);
}

std::optional<std::vector<double>> large_alpha_closed_form(
    std::span<const double> target_row, std::span<const double> m_row,
    std::span<const double> old_row, double alpha) {
    if (alpha <= 0.0 || alpha > 1.0) fail("InvalidAlpha", "alpha must be in (0, 1]");
    const std::vector<double> minvar = minvar_ips_policy(target_row, m_row);

    std::vector<double> pi(minvar.size());
    double sum = 0.0;
    for (std::size_t a = 0; a < pi.size(); ++a) {
        double v = (minvar[a] - (1.0 - alpha) * old_row[a]) / alpha;
        if (v < -1e-12) return std::nullopt;
        if (v < 0.0) v = 0.0;
        pi[a] = v;
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) return std::nullopt;
    for (double& v : pi) v /= sum;
    return pi;
}

double variance_decrease_single_sample(double epsilon, std::int64_t n_before, double y) {
    if (!(epsilon > 0.0) || epsilon >= 1.0)
        fail("InvalidEpsilon", "epsilon must be in (0, 1)");
    if (!(y > 0.0)) fail("NegativeEntry", "y must be positive");
    const double n = static_cast<double>(n_before);
    return y / (epsilon * (n * epsilon + 1.0));
}

std::pair<Policy, std::vector<SolverDiagnostics>> mval_policy_table(
    const Matrix& target, const Policy& p_old, const SecondMomentModel& m,
    double alpha) {
    if (!target.same_shape(p_old.table) || !target.same_shape(m.m))
        fail("ShapeMismatch", "target, logging policy and moment model shapes differ");

    Policy out;
    out.table = Matrix(target.rows, target.cols);
    std::vector<SolverDiagnostics> diags(target.rows);
    for (std::size_t x = 0; x < target.rows; ++x) {
        ContextWeights weights;
        weights.context_id = x;
        weights.c.resize(target.cols);
        for (std::size_t a = 0; a < target.cols; ++a)
            weights.c[a] = target(x, a) * target(x, a) * m(x, a);
        auto [row, diag] = mval_solve_context(weights, p_old.row(x), alpha);
        std::copy(row.begin(), row.end(), out.table.row(x).begin());
        diags[x] = std::move(diag);
    }
    return {std::move(out), std::move(diags)};
}

}  // namespace mval
