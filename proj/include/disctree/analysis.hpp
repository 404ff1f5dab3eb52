#ifndef DISCTREE_ANALYSIS_HPP
#define DISCTREE_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geometry.hpp"
#include "partition.hpp"

namespace disctree {

// Two boxes are adjacent unless some dimension separates their centers by more
// than the half-widths; equality (shared faces and corners) counts as adjacent.
inline bool is_adjacent(const HyperRect& a, const HyperRect& b) {
    if (a.dim() != b.dim())
        throw std::domain_error("is_adjacent: dimension mismatch");
    for (std::size_t k = 0; k < a.dim(); ++k) {
        const double ca = 0.5 * (a.lower[k] + a.upper[k]);
        const double cb = 0.5 * (b.lower[k] + b.upper[k]);
        // small slack so boxes sharing a face computed as a/b of different
        // split chains (1/3 vs 2/3 etc.) still register as touching
        if (std::abs(ca - cb) > 0.5 * (a.width(k) + b.width(k)) + 1e-12)
            return false;
    }
    return true;
}

// Cell adjacency graph; node l is the virtual zero-density region when the
// plain cell graph is disconnected.
struct AdjacencyGraph {
    std::size_t cell_count = 0;
    bool has_virtual = false;
    std::vector<std::vector<int>> adj;

    std::size_t node_count() const { return cell_count + (has_virtual ? 1 : 0); }
    int virtual_id() const { return static_cast<int>(cell_count); }
};

namespace detail {

inline std::vector<int> connected_components(const std::vector<std::vector<int>>& adj) {
    std::vector<int> comp(adj.size(), -1);
    int next = 0;
    std::vector<int> stack;
    for (std::size_t s = 0; s < adj.size(); ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = next;
        stack.push_back(static_cast<int>(s));
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : adj[static_cast<std::size_t>(u)]) {
                if (comp[static_cast<std::size_t>(v)] < 0) {
                    comp[static_cast<std::size_t>(v)] = next;
                    stack.push_back(v);
                }
            }
        }
        ++next;
    }
    return comp;
}

}  // namespace detail

inline AdjacencyGraph build_adjacency_graph(const PiecewiseDensity& pd) {
    if (pd.cells.empty())
        throw std::invalid_argument("build_adjacency_graph: no cells");
    AdjacencyGraph g;
    g.cell_count = pd.cells.size();
    g.adj.resize(g.cell_count);
    for (std::size_t i = 0; i < g.cell_count; ++i) {
        for (std::size_t j = i + 1; j < g.cell_count; ++j) {
            if (is_adjacent(pd.cells[i].rect, pd.cells[j].rect)) {
                g.adj[i].push_back(static_cast<int>(j));
                g.adj[j].push_back(static_cast<int>(i));
            }
        }
    }

    const auto comp = detail::connected_components(g.adj);
    const int ncomp = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
    if (ncomp > 1) {
        g.has_virtual = true;
        g.adj.emplace_back();
        const int vid = g.virtual_id();
        for (int c = 0; c < ncomp; ++c) {
            int lowest = -1;
            for (std::size_t i = 0; i < g.cell_count; ++i) {
                if (comp[i] != c) continue;
                if (lowest < 0 ||
                    pd.cells[i].density < pd.cells[static_cast<std::size_t>(lowest)].density)
                    lowest = static_cast<int>(i);
            }
            g.adj[static_cast<std::size_t>(vid)].push_back(lowest);
            g.adj[static_cast<std::size_t>(lowest)].push_back(vid);
        }
    }
    return g;
}

// Cells whose density is strictly larger than every adjacent cell's density.
inline std::vector<int> detect_modes(const PiecewiseDensity& pd, const AdjacencyGraph& g) {
    std::vector<int> modes;
    for (std::size_t i = 0; i < g.cell_count; ++i) {
        bool is_mode = true;
        for (int j : g.adj[i]) {
            if (j == g.virtual_id() && g.has_virtual) continue;
            if (pd.cells[static_cast<std::size_t>(j)].density >= pd.cells[i].density) {
                is_mode = false;
                break;
            }
        }
        if (is_mode) modes.push_back(static_cast<int>(i));
    }
    return modes;
}

inline std::vector<int> detect_modes(const PiecewiseDensity& pd) {
    return detect_modes(pd, build_adjacency_graph(pd));
}

// Parent map and per-node density level from the decreasing-density sweep.
struct LevelSetTree {
    std::vector<int> parent;    // -1 for roots; index virtual_id is the virtual node
    std::vector<double> color;  // density level of each node
    bool has_virtual = false;
    std::size_t cell_count = 0;

    std::vector<int> leaves() const {
        std::vector<bool> has_child(parent.size(), false);
        for (int p : parent)
            if (p >= 0) has_child[static_cast<std::size_t>(p)] = true;
        std::vector<int> out;
        for (std::size_t i = 0; i < parent.size(); ++i)
            if (!has_child[i]) out.push_back(static_cast<int>(i));
        return out;
    }
};

inline LevelSetTree build_level_set_tree(const PiecewiseDensity& pd, const AdjacencyGraph& g) {
    const std::size_t n = g.node_count();
    LevelSetTree tree;
    tree.has_virtual = g.has_virtual;
    tree.cell_count = g.cell_count;
    tree.parent.assign(n, -1);
    tree.color.assign(n, 0.0);

    auto density_of = [&](int id) {
        return id == g.virtual_id() && g.has_virtual
                   ? 0.0
                   : pd.cells[static_cast<std::size_t>(id)].density;
    };

    // Decreasing density, ties by cell id; the virtual node (density 0) is last.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return density_of(a) > density_of(b);
    });

    // Union-find over inserted nodes; each component tracks its last-added cell.
    std::vector<int> uf(n), last_added(n, -1);
    std::iota(uf.begin(), uf.end(), 0);
    std::vector<bool> inserted(n, false);
    auto find = [&](int x) {
        while (uf[static_cast<std::size_t>(x)] != x) {
            uf[static_cast<std::size_t>(x)] =
                uf[static_cast<std::size_t>(uf[static_cast<std::size_t>(x)])];
            x = uf[static_cast<std::size_t>(x)];
        }
        return x;
    };

    for (int r : order) {
        tree.color[static_cast<std::size_t>(r)] = density_of(r);
        std::vector<int> touched;
        for (int nb : g.adj[static_cast<std::size_t>(r)]) {
            if (!inserted[static_cast<std::size_t>(nb)]) continue;
            const int root = find(nb);
            if (std::find(touched.begin(), touched.end(), root) == touched.end())
                touched.push_back(root);
        }
        if (!touched.empty()) {
            for (int root : touched) {
                tree.parent[static_cast<std::size_t>(last_added[static_cast<std::size_t>(root)])] = r;
                uf[static_cast<std::size_t>(root)] = r;
            }
        }
        inserted[static_cast<std::size_t>(r)] = true;
        last_added[static_cast<std::size_t>(find(r))] = r;
    }
    return tree;
}

inline LevelSetTree build_level_set_tree(const PiecewiseDensity& pd) {
    return build_level_set_tree(pd, build_adjacency_graph(pd));
}

inline nlohmann::ordered_json level_set_tree_to_json(const LevelSetTree& tree) {
    nlohmann::ordered_json doc;
    auto& arr = doc["nodes"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < tree.parent.size(); ++i) {
        nlohmann::ordered_json jn;
        jn["id"] = i;
        jn["color"] = tree.color[i];
        if (tree.parent[i] < 0)
            jn["parent"] = nullptr;
        else
            jn["parent"] = tree.parent[i];
        arr.push_back(std::move(jn));
    }
    return doc;
}

inline std::string level_set_tree_to_dot(const LevelSetTree& tree) {
    std::ostringstream out;
    out << "digraph levelset {\n";
    for (std::size_t i = 0; i < tree.parent.size(); ++i)
        out << "  n" << i << " [label=\"" << i << ":" << tree.color[i] << "\"];\n";
    for (std::size_t i = 0; i < tree.parent.size(); ++i)
        if (tree.parent[i] >= 0)
            out << "  n" << i << " -> n" << tree.parent[i] << ";\n";
    out << "}\n";
    return out.str();
}

}  // namespace disctree

#endif  // DISCTREE_ANALYSIS_HPP
