#ifndef DISCTREE_DISCREPANCY_HPP
#define DISCTREE_DISCREPANCY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace disctree {

// Exact 1D star discrepancy: D* = 1/(2n) + max_i |x_(i) - (2i-1)/(2n)|.
inline double star_discrepancy_1d(std::vector<double> values) {
    const std::size_t n = values.size();
    if (n == 0) throw std::domain_error("star_discrepancy_1d: empty input");
    std::sort(values.begin(), values.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double target = (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n));
        worst = std::max(worst, std::abs(values[i] - target));
    }
    return 1.0 / (2.0 * static_cast<double>(n)) + worst;
}

namespace detail {

// Recursive enumeration of anchor candidates, filtering the point set dimension
// by dimension. `closed_side` switches the counting rule: the open side counts
// x < a (the box [0,a) itself), the closed side counts x <= a except at a = 1
// where only x < 1 can ever be inside an anchored box.
inline void anchor_scan(const std::vector<Point>& points,
                        const std::vector<std::vector<double>>& candidates,
                        std::size_t dim,
                        const std::vector<std::size_t>& active,
                        double vol_prefix,
                        std::size_t n_total,
                        bool closed_side,
                        double& best) {
    const std::size_t d = candidates.size();
    for (double a : candidates[dim]) {
        std::vector<std::size_t> kept;
        kept.reserve(active.size());
        for (std::size_t idx : active) {
            const double x = points[idx][dim];
            bool in;
            if (closed_side)
                in = (a == 1.0) ? (x < 1.0) : (x <= a);
            else
                in = x < a;
            if (in) kept.push_back(idx);
        }
        const double vol = vol_prefix * a;
        if (dim + 1 == d) {
            const double frac = static_cast<double>(kept.size()) / static_cast<double>(n_total);
            const double value = closed_side ? frac - vol : vol - frac;
            best = std::max(best, value);
        } else {
            anchor_scan(points, candidates, dim + 1, kept, vol, n_total, closed_side, best);
        }
    }
}

inline std::vector<std::vector<double>> anchor_candidates(const std::vector<Point>& points,
                                                          std::size_t d) {
    std::vector<std::vector<double>> cand(d);
    for (std::size_t j = 0; j < d; ++j) {
        for (const auto& p : points) cand[j].push_back(p[j]);
        cand[j].push_back(1.0);
        std::sort(cand[j].begin(), cand[j].end());
        cand[j].erase(std::unique(cand[j].begin(), cand[j].end()), cand[j].end());
    }
    return cand;
}

inline double max_local_discrepancy(const std::vector<Point>& points,
                                    const std::vector<std::vector<double>>& candidates) {
    std::vector<std::size_t> all(points.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    double best = 0.0;
    anchor_scan(points, candidates, 0, all, 1.0, points.size(), false, best);
    anchor_scan(points, candidates, 0, all, 1.0, points.size(), true, best);
    return best;
}

}  // namespace detail

constexpr double kExactAnchorGuard = 2e6;

// Point-count cap for the automatic exact/grid choice in should_split.
constexpr std::size_t kAutoExactPointCap = 256;

// Exact star discrepancy by enumerating critical anchors. Guarded: the number
// of candidate anchors grows as n^d.
inline double star_discrepancy_exact(const std::vector<Point>& points) {
    const std::size_t n = points.size();
    if (n == 0) throw std::domain_error("star_discrepancy_exact: empty input");
    const std::size_t d = points.front().size();
    auto cand = detail::anchor_candidates(points, d);
    double grid_size = 1.0;
    for (const auto& c : cand) grid_size *= static_cast<double>(c.size());
    if (grid_size > kExactAnchorGuard)
        throw std::length_error("star_discrepancy_exact: anchor grid too large (" +
                                std::to_string(static_cast<long long>(grid_size)) +
                                " candidates); use grid or L2 mode");
    return detail::max_local_discrepancy(points, cand);
}

// Lower bound on D* from the regular anchor grid {1/k, ..., 1}^d. Uses a binned
// prefix-sum pass when the grid fits in memory, otherwise falls back to the
// enumeration engine.
inline double star_discrepancy_grid(const std::vector<Point>& points, std::size_t k) {
    const std::size_t n = points.size();
    if (n == 0) throw std::domain_error("star_discrepancy_grid: empty input");
    if (k < 2) throw std::invalid_argument("star_discrepancy_grid: resolution k must be >= 2");
    const std::size_t d = points.front().size();

    const std::size_t side = k + 2;
    double cells = 1.0;
    for (std::size_t j = 0; j < d; ++j) cells *= static_cast<double>(side);
    if (cells > 8e6) {
        std::vector<std::vector<double>> cand(d);
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t i = 1; i <= k; ++i)
                cand[j].push_back(static_cast<double>(i) / static_cast<double>(k));
        return detail::max_local_discrepancy(points, cand);
    }

    const std::size_t total = static_cast<std::size_t>(cells);
    std::vector<double> strict(total, 0.0), closed(total, 0.0);
    std::vector<std::size_t> stride(d);
    stride[d - 1] = 1;
    for (std::size_t j = d - 1; j-- > 0;) stride[j] = stride[j + 1] * side;

    const double kd = static_cast<double>(k);
    for (const auto& p : points) {
        std::size_t off_s = 0, off_c = 0;
        for (std::size_t j = 0; j < d; ++j) {
            const double xk = p[j] * kd;
            const auto c = static_cast<std::size_t>(std::floor(xk));
            // strict rule: x < i/k  <=>  floor(x*k) < i
            off_s += stride[j] * (c + 1);
            // closed rule: x <= i/k <=> e < i with e = c-1 on grid lines; x = 1 is
            // never inside an anchored box, so it is pushed past every anchor.
            std::size_t e;
            if (p[j] == 1.0)
                e = k + 1;
            else if (xk == std::floor(xk))
                e = c;  // c - 1, shifted by one for the histogram offset
            else
                e = c + 1;
            off_c += stride[j] * e;
        }
        strict[off_s] += 1.0;
        closed[off_c] += 1.0;
    }

    // In-place prefix sums along each dimension.
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t base = 0; base < total; ++base) {
            const std::size_t pos = (base / stride[j]) % side;
            if (pos > 0) {
                strict[base] += strict[base - stride[j]];
                closed[base] += closed[base - stride[j]];
            }
        }
    }

    double best = 0.0;
    std::vector<std::size_t> idx(d, 1);
    const double nd = static_cast<double>(n);
    while (true) {
        std::size_t off = 0;
        double vol = 1.0;
        for (std::size_t j = 0; j < d; ++j) {
            off += stride[j] * idx[j];
            vol *= static_cast<double>(idx[j]) / kd;
        }
        best = std::max(best, vol - strict[off] / nd);
        best = std::max(best, closed[off] / nd - vol);
        std::size_t j = d;
        while (j-- > 0) {
            if (++idx[j] <= k) break;
            idx[j] = 1;
            if (j == 0) return best;
        }
    }
}

// L2 star discrepancy via Warnock's closed form, O(n^2 d).
inline double l2_star_discrepancy(const std::vector<Point>& points) {
    const std::size_t n = points.size();
    if (n == 0) throw std::domain_error("l2_star_discrepancy: empty input");
    const std::size_t d = points.front().size();
    const double nd = static_cast<double>(n);

    double term1 = std::pow(1.0 / 3.0, static_cast<double>(d));

    double sum_single = 0.0;
    for (const auto& p : points) {
        double prod = 1.0;
        for (std::size_t kdim = 0; kdim < d; ++kdim) prod *= 1.0 - p[kdim] * p[kdim];
        sum_single += prod;
    }
    const double term2 = std::pow(2.0, 1.0 - static_cast<double>(d)) / nd * sum_single;

    double sum_pair = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double prod = 1.0;
            for (std::size_t kdim = 0; kdim < d; ++kdim)
                prod *= std::min(1.0 - points[i][kdim], 1.0 - points[j][kdim]);
            sum_pair += prod;
        }
    }
    const double term3 = sum_pair / (nd * nd);

    return std::sqrt(std::max(0.0, term1 - term2 + term3));
}

// max over coordinate projections of the exact 1D discrepancy; a cheap lower
// bound on the d-dimensional D*.
inline double projection_lower_bound(const std::vector<Point>& points) {
    const std::size_t n = points.size();
    if (n == 0) throw std::domain_error("projection_lower_bound: empty input");
    const std::size_t d = points.front().size();
    double best = 0.0;
    std::vector<double> coords(n);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) coords[i] = points[i][j];
        best = std::max(best, star_discrepancy_1d(coords));
    }
    return best;
}

enum class DiscrepancyMode { Exact, Grid, L2Surrogate, Auto };

inline std::string to_string(DiscrepancyMode m) {
    switch (m) {
        case DiscrepancyMode::Exact: return "exact";
        case DiscrepancyMode::Grid: return "grid";
        case DiscrepancyMode::L2Surrogate: return "l2";
        case DiscrepancyMode::Auto: return "auto";
    }
    return "?";
}

struct SplitDecisionConfig {
    double theta = 1.0;
    double c = 10.0;
    double epsilon = 0.001;
    DiscrepancyMode mode = DiscrepancyMode::Auto;
    std::size_t grid_resolution = 64;

    void validate() const {
        if (!(theta > 0.0)) throw std::invalid_argument("SplitDecisionConfig: theta must be > 0");
        if (!(c > 0.0)) throw std::invalid_argument("SplitDecisionConfig: c must be > 0");
        if (!(epsilon > 0.0 && epsilon < 1.0))
            throw std::invalid_argument("SplitDecisionConfig: epsilon must be in (0,1)");
        if (grid_resolution < 2)
            throw std::invalid_argument("SplitDecisionConfig: grid resolution must be >= 2");
    }
};

// Which rung of the decision ladder settled a split check.
enum class DecisionRung { UpperBound, EpsilonShortcut, ProjectionBound, Exact, Grid, L2 };

inline std::string to_string(DecisionRung r) {
    switch (r) {
        case DecisionRung::UpperBound: return "upper_bound";
        case DecisionRung::EpsilonShortcut: return "epsilon_shortcut";
        case DecisionRung::ProjectionBound: return "projection_bound";
        case DecisionRung::Exact: return "exact";
        case DecisionRung::Grid: return "grid";
        case DecisionRung::L2: return "l2";
    }
    return "?";
}

struct SplitDecision {
    bool split = false;
    DecisionRung rung = DecisionRung::UpperBound;
    double value = std::numeric_limits<double>::quiet_NaN();  // NaN when not computed
    double threshold = 0.0;
};

// Algorithm split check: compare the (estimated) star discrepancy of the
// rescaled cell points against T = theta*sqrt(N)/n_i.
inline SplitDecision should_split(const std::vector<Point>& unit_points,
                                  std::size_t n_i, std::size_t total_n, std::size_t d,
                                  const SplitDecisionConfig& cfg) {
    cfg.validate();
    if (n_i == 0 || unit_points.size() != n_i)
        throw std::invalid_argument("should_split: point count mismatch");

    SplitDecision dec;
    dec.threshold = cfg.theta * std::sqrt(static_cast<double>(total_n)) /
                    static_cast<double>(n_i);

    if (dec.threshold >= 1.0) {  // D* <= 1 always
        dec.split = false;
        dec.rung = DecisionRung::UpperBound;
        return dec;
    }
    if (dec.threshold <= cfg.epsilon) {
        dec.split = true;
        dec.rung = DecisionRung::EpsilonShortcut;
        return dec;
    }
    const double plb = projection_lower_bound(unit_points);
    if (plb > dec.threshold) {
        dec.split = true;
        dec.rung = DecisionRung::ProjectionBound;
        dec.value = plb;
        return dec;
    }

    DiscrepancyMode mode = cfg.mode;
    if (mode == DiscrepancyMode::Auto || mode == DiscrepancyMode::Exact) {
        // Auto keeps exact evaluation for small cells only; at d=2 the anchor
        // guard alone would admit ~1400 points and make large runs crawl.
        const bool worth_exact =
            mode == DiscrepancyMode::Exact || n_i <= kAutoExactPointCap;
        if (worth_exact) {
            auto cand = detail::anchor_candidates(unit_points, d);
            double grid_size = 1.0;
            for (const auto& c : cand) grid_size *= static_cast<double>(c.size());
            if (grid_size <= kExactAnchorGuard) {
                dec.value = detail::max_local_discrepancy(unit_points, cand);
                dec.rung = DecisionRung::Exact;
                dec.split = dec.value > dec.threshold;
                return dec;
            }
        }
        mode = DiscrepancyMode::Grid;
    }
    if (mode == DiscrepancyMode::Grid) {
        // Halve the resolution until the histogram fast path applies; anchors
        // at resolution k/2 nest inside those at k, so this stays a lower
        // bound on D*. Matters from d = 4 up, where (k+2)^d explodes.
        std::size_t k = cfg.grid_resolution;
        auto cells = [&](std::size_t kk) {
            return std::pow(static_cast<double>(kk + 2), static_cast<double>(d));
        };
        while (k > 3 && cells(k) > 8e6) k /= 2;
        dec.value = star_discrepancy_grid(unit_points, k);
        dec.rung = DecisionRung::Grid;
        dec.split = dec.value > dec.threshold;
        return dec;
    }
    dec.value = l2_star_discrepancy(unit_points);
    dec.rung = DecisionRung::L2;
    dec.split = dec.value > dec.threshold;
    return dec;
}

}  // namespace disctree

#endif  // DISCTREE_DISCREPANCY_HPP
