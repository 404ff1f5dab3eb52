#ifndef DISCTREE_ESTIMATOR_HPP
#define DISCTREE_ESTIMATOR_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include <json.hpp>

#include "discrepancy.hpp"
#include "geometry.hpp"
#include "partition.hpp"

namespace disctree {

// The (m-1) x d gap values g_jk of one cell.
struct GapTable {
    std::size_t m = 0;
    std::size_t d = 0;
    HyperRect cell;
    std::size_t count = 0;
    std::vector<double> gaps;  // gaps[j*(m-1) + (k-1)]

    double at(std::size_t j, std::size_t k) const { return gaps[j * (m - 1) + (k - 1)]; }
};

inline GapTable compute_gaps(const std::vector<Point>& cell_points,
                             const HyperRect& cell, std::size_t m) {
    if (cell_points.empty())
        throw std::domain_error("compute_gaps: cell has no points");
    if (m < 2) throw std::invalid_argument("compute_gaps: m must be >= 2");
    const std::size_t d = cell.dim();
    const double n = static_cast<double>(cell_points.size());

    GapTable table;
    table.m = m;
    table.d = d;
    table.cell = cell;
    table.count = cell_points.size();
    table.gaps.assign(d * (m - 1), 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = 1; k < m; ++k) {
            const double cut = cell.lower[j] +
                               cell.width(j) * static_cast<double>(k) / static_cast<double>(m);
            std::size_t below = 0;
            for (const auto& p : cell_points)
                if (p[j] < cut) ++below;
            table.gaps[j * (m - 1) + (k - 1)] =
                std::abs(static_cast<double>(below) / n -
                         static_cast<double>(k) / static_cast<double>(m));
        }
    }
    return table;
}

struct SplitChoice {
    std::size_t dim = 0;
    std::size_t bin = 1;
    double location = 0.0;
};

// Argmax over all gaps; ties broken by smallest dimension, then smallest bin.
inline SplitChoice select_split(const GapTable& table) {
    SplitChoice choice;
    double best = -1.0;
    for (std::size_t j = 0; j < table.d; ++j) {
        for (std::size_t k = 1; k < table.m; ++k) {
            if (table.at(j, k) > best) {
                best = table.at(j, k);
                choice.dim = j;
                choice.bin = k;
            }
        }
    }
    choice.location = table.cell.lower[choice.dim] +
                      table.cell.width(choice.dim) * static_cast<double>(choice.bin) /
                          static_cast<double>(table.m);
    return choice;
}

struct EstimatorConfig {
    std::size_t m = 3;
    double pseudo_count = 0.0;
    std::size_t max_depth = 50;
    SplitDecisionConfig split;  // carries theta, epsilon, c, discrepancy mode
    std::uint64_t seed = 0;

    double theta() const { return split.theta; }

    void validate() const {
        if (m < 2) throw std::invalid_argument("EstimatorConfig: m must be >= 2");
        if (max_depth < 1) throw std::invalid_argument("EstimatorConfig: max_depth must be >= 1");
        if (pseudo_count < 0.0)
            throw std::invalid_argument("EstimatorConfig: pseudo_count must be >= 0");
        split.validate();
    }
};

struct DecisionRecord {
    int leaf_id = 0;
    DecisionRung rung = DecisionRung::UpperBound;
    double value = 0.0;
    double threshold = 0.0;
    bool split = false;
};

struct RunReport {
    std::size_t sweeps = 0;
    std::size_t leaves = 0;
    std::vector<DecisionRecord> decisions;
};

inline nlohmann::ordered_json config_to_json(const EstimatorConfig& cfg) {
    return {{"m", cfg.m},
            {"theta", cfg.split.theta},
            {"epsilon", cfg.split.epsilon},
            {"c", cfg.split.c},
            {"pseudo_count", cfg.pseudo_count},
            {"max_depth", cfg.max_depth},
            {"disc_mode", to_string(cfg.split.mode)},
            {"grid_resolution", cfg.split.grid_resolution},
            {"seed", cfg.seed}};
}

inline nlohmann::ordered_json report_to_json(const RunReport& report,
                                             const EstimatorConfig& cfg) {
    nlohmann::ordered_json doc;
    doc["config"] = config_to_json(cfg);
    doc["sweeps"] = report.sweeps;
    doc["leaves"] = report.leaves;
    auto& arr = doc["decisions"] = nlohmann::ordered_json::array();
    for (const auto& d : report.decisions) {
        nlohmann::ordered_json jd;
        jd["leaf_id"] = d.leaf_id;
        jd["rung"] = to_string(d.rung);
        if (std::isnan(d.value))
            jd["value"] = nullptr;
        else
            jd["value"] = d.value;
        jd["threshold"] = d.threshold;
        jd["split"] = d.split;
        arr.push_back(std::move(jd));
    }
    return doc;
}

struct EstimateResult {
    PartitionTree tree;
    PiecewiseDensity density;
    RunReport report;
};

namespace detail {

// Split one leaf in place: children cells share the cut plane, points routed by
// the half-open convention, right mass computed by subtraction.
inline void split_leaf(PartitionTree& tree,
                       std::vector<std::vector<std::size_t>>& leaf_points,
                       const std::vector<Point>& all_points,
                       int leaf_id, std::size_t j, double s, double alpha) {
    auto& node = tree.nodes[static_cast<std::size_t>(leaf_id)];
    if (!(node.cell.lower[j] < s && s < node.cell.upper[j]))
        throw std::domain_error("split_leaf: location outside the open cell interval");
    if (node.count == 0)
        throw std::domain_error("split_leaf: empty leaf");

    HyperRect left_cell = node.cell;
    left_cell.upper[j] = s;
    HyperRect right_cell = node.cell;
    right_cell.lower[j] = s;

    std::vector<std::size_t> left_pts, right_pts;
    for (std::size_t idx : leaf_points[static_cast<std::size_t>(leaf_id)]) {
        if (all_points[idx][j] < s)
            left_pts.push_back(idx);
        else
            right_pts.push_back(idx);
    }

    const double n_i = static_cast<double>(node.count);
    const double left_mass =
        node.mass * (static_cast<double>(left_pts.size()) + alpha) / (n_i + 2.0 * alpha);
    const double right_mass = node.mass - left_mass;

    PartitionTree::Node left, right;
    left.cell = std::move(left_cell);
    left.count = left_pts.size();
    left.mass = left_mass;
    left.density = left_mass / rect_volume(left.cell);
    left.depth = node.depth + 1;
    right.cell = std::move(right_cell);
    right.count = right_pts.size();
    right.mass = right_mass;
    right.density = right_mass / rect_volume(right.cell);
    right.depth = node.depth + 1;

    const int left_id = static_cast<int>(tree.nodes.size());
    const int right_id = left_id + 1;
    tree.nodes.push_back(std::move(left));
    tree.nodes.push_back(std::move(right));
    leaf_points.push_back(std::move(left_pts));
    leaf_points.push_back(std::move(right_pts));

    auto& parent = tree.nodes[static_cast<std::size_t>(leaf_id)];
    parent.split_dim = static_cast<int>(j);
    parent.split_loc = s;
    parent.left = left_id;
    parent.right = right_id;
    leaf_points[static_cast<std::size_t>(leaf_id)].clear();
    leaf_points[static_cast<std::size_t>(leaf_id)].shrink_to_fit();
}

}  // namespace detail

// Sequential build of the partition: sweep all leaves, split every non-empty
// leaf whose discrepancy check demands it, stop when a sweep changes nothing.
inline EstimateResult estimate_density(const SampleSet& samples, const EstimatorConfig& cfg) {
    cfg.validate();
    samples.validate();
    const std::size_t d = samples.dim();
    const std::size_t total_n = samples.size();

    EstimateResult result;
    PartitionTree& tree = result.tree;
    tree.dimension = d;
    tree.theta = cfg.split.theta;

    PartitionTree::Node root;
    root.cell = HyperRect::unit_cube(d);
    root.count = total_n;
    root.mass = 1.0;
    root.density = 1.0;
    tree.nodes.push_back(std::move(root));

    std::vector<std::vector<std::size_t>> leaf_points(1);
    leaf_points[0].resize(total_n);
    for (std::size_t i = 0; i < total_n; ++i) leaf_points[0][i] = i;

    bool changed = true;
    while (changed) {
        changed = false;
        ++result.report.sweeps;
        const auto leaves = tree.leaf_ids();
        for (int leaf_id : leaves) {
            const auto& node = tree.nodes[static_cast<std::size_t>(leaf_id)];
            if (node.count == 0) continue;
            if (static_cast<std::size_t>(node.depth) >= cfg.max_depth) continue;

            std::vector<Point> cell_pts;
            cell_pts.reserve(node.count);
            for (std::size_t idx : leaf_points[static_cast<std::size_t>(leaf_id)])
                cell_pts.push_back(samples.points[idx]);
            const auto unit_pts = rescale_to_unit(cell_pts, node.cell);

            const SplitDecision dec = should_split(unit_pts, node.count, total_n, d, cfg.split);
            result.report.decisions.push_back(
                {leaf_id, dec.rung, dec.value, dec.threshold, dec.split});
            if (!dec.split) continue;

            const GapTable gaps = compute_gaps(cell_pts, node.cell, cfg.m);
            const SplitChoice choice = select_split(gaps);
            detail::split_leaf(tree, leaf_points, samples.points, leaf_id,
                               choice.dim, choice.location, cfg.pseudo_count);
            changed = true;
        }
    }

    result.report.leaves = tree.leaf_ids().size();
    result.density = PiecewiseDensity::from_tree(tree);
    return result;
}

inline bool max_depth_guard(const PartitionTree& tree, std::size_t max_depth) {
    for (int id : tree.leaf_ids())
        if (static_cast<std::size_t>(tree.nodes[static_cast<std::size_t>(id)].depth) > max_depth)
            return false;
    return true;
}

}  // namespace disctree

#endif  // DISCTREE_ESTIMATOR_HPP
