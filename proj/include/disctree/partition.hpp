#ifndef DISCTREE_PARTITION_HPP
#define DISCTREE_PARTITION_HPP

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geometry.hpp"

namespace disctree {

// Binary tree of split records. Leaves carry counts, masses and densities;
// internal nodes carry the split plane. Immutable once the estimator returns it.
struct PartitionTree {
    struct Node {
        HyperRect cell;
        int split_dim = -1;    // -1 for leaves
        double split_loc = 0.0;
        int left = -1;
        int right = -1;
        std::size_t count = 0;
        double mass = 0.0;
        double density = 0.0;
        int depth = 0;

        bool is_leaf() const { return split_dim < 0; }
    };

    std::vector<Node> nodes;  // nodes[0] is the root
    std::size_t dimension = 0;
    double theta = 0.0;

    std::vector<int> leaf_ids() const {
        std::vector<int> ids;
        for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
            if (nodes[i].is_leaf()) ids.push_back(i);
        return ids;
    }

    int locate_leaf(const Point& x) const {
        if (nodes.empty()) throw std::logic_error("PartitionTree: empty tree");
        if (!nodes[0].cell.contains(x))
            throw std::domain_error("locate_leaf: point outside root cell");
        int id = 0;
        while (!nodes[id].is_leaf()) {
            const Node& n = nodes[id];
            id = (x[static_cast<std::size_t>(n.split_dim)] < n.split_loc) ? n.left : n.right;
        }
        return id;
    }
};

// Flattened leaf list {r_i, d(r_i)} of the piecewise-constant density.
struct PiecewiseDensity {
    struct Cell {
        HyperRect rect;
        double density = 0.0;
        double mass = 0.0;
        std::size_t count = 0;
    };

    std::vector<Cell> cells;
    std::size_t dimension = 0;

    static PiecewiseDensity from_tree(const PartitionTree& tree) {
        PiecewiseDensity pd;
        pd.dimension = tree.dimension;
        for (int id : tree.leaf_ids()) {
            const auto& n = tree.nodes[static_cast<std::size_t>(id)];
            pd.cells.push_back({n.cell, n.density, n.mass, n.count});
        }
        return pd;
    }
};

inline double density_at(const PiecewiseDensity& pd, const Point& x) {
    if (x.size() != pd.dimension)
        throw std::domain_error("density_at: dimension mismatch");
    for (const auto& c : pd.cells)
        if (c.rect.contains(x)) return c.density;
    return 0.0;  // unreachable for a proper partition of [0,1]^d
}

// Exact integral of the piecewise-constant density over an axis box.
inline double integrate_over_rect(const PiecewiseDensity& pd, const HyperRect& query) {
    double total = 0.0;
    for (const auto& c : pd.cells) {
        double vol = 1.0;
        for (std::size_t j = 0; j < pd.dimension && vol > 0.0; ++j) {
            const double lo = std::max(c.rect.lower[j], query.lower[j]);
            const double hi = std::min(c.rect.upper[j], query.upper[j]);
            vol *= std::max(0.0, hi - lo);
        }
        total += c.density * vol;
    }
    return total;
}

// --- JSON serialization -----------------------------------------------------
//
// {dimension, theta, nodes:[{id, lower[], upper[], split_dim|null, split_loc|null,
//  left|null, right|null, count, mass, density}]}; ids are preorder indices.

inline nlohmann::ordered_json tree_to_json(const PartitionTree& tree) {
    // Remap internal indices to preorder ids.
    std::vector<int> order;
    order.reserve(tree.nodes.size());
    std::vector<int> stack{0};
    std::vector<int> preorder_id(tree.nodes.size(), -1);
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        preorder_id[static_cast<std::size_t>(id)] = static_cast<int>(order.size());
        order.push_back(id);
        const auto& n = tree.nodes[static_cast<std::size_t>(id)];
        if (!n.is_leaf()) {
            stack.push_back(n.right);
            stack.push_back(n.left);
        }
    }

    nlohmann::ordered_json doc;
    doc["dimension"] = tree.dimension;
    doc["theta"] = tree.theta;
    auto& arr = doc["nodes"] = nlohmann::ordered_json::array();
    for (int id : order) {
        const auto& n = tree.nodes[static_cast<std::size_t>(id)];
        nlohmann::ordered_json jn;
        jn["id"] = preorder_id[static_cast<std::size_t>(id)];
        jn["lower"] = n.cell.lower;
        jn["upper"] = n.cell.upper;
        if (n.is_leaf()) {
            jn["split_dim"] = nullptr;
            jn["split_loc"] = nullptr;
            jn["left"] = nullptr;
            jn["right"] = nullptr;
        } else {
            jn["split_dim"] = n.split_dim;
            jn["split_loc"] = n.split_loc;
            jn["left"] = preorder_id[static_cast<std::size_t>(n.left)];
            jn["right"] = preorder_id[static_cast<std::size_t>(n.right)];
        }
        jn["count"] = n.count;
        jn["mass"] = n.mass;
        jn["density"] = n.density;
        arr.push_back(std::move(jn));
    }
    return doc;
}

inline PartitionTree tree_from_json(const nlohmann::json& doc) {
    PartitionTree tree;
    tree.dimension = doc.at("dimension").get<std::size_t>();
    tree.theta = doc.at("theta").get<double>();
    const auto& arr = doc.at("nodes");
    tree.nodes.resize(arr.size());
    for (const auto& jn : arr) {
        auto id = jn.at("id").get<std::size_t>();
        PartitionTree::Node n;
        n.cell = HyperRect(jn.at("lower").get<std::vector<double>>(),
                           jn.at("upper").get<std::vector<double>>());
        if (!jn.at("split_dim").is_null()) {
            n.split_dim = jn.at("split_dim").get<int>();
            n.split_loc = jn.at("split_loc").get<double>();
            n.left = jn.at("left").get<int>();
            n.right = jn.at("right").get<int>();
        }
        n.count = jn.at("count").get<std::size_t>();
        n.mass = jn.at("mass").get<double>();
        n.density = jn.at("density").get<double>();
        tree.nodes[id] = std::move(n);
    }
    // Recover depths from the parent links.
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& n = tree.nodes[i];
        if (!n.is_leaf()) {
            tree.nodes[static_cast<std::size_t>(n.left)].depth = n.depth + 1;
            tree.nodes[static_cast<std::size_t>(n.right)].depth = n.depth + 1;
        }
    }
    return tree;
}

}  // namespace disctree

#endif  // DISCTREE_PARTITION_HPP
