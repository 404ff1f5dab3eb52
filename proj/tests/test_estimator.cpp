#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "disctree/estimator.hpp"
#include "disctree/eval.hpp"

using namespace disctree;

TEST_CASE("compute_gaps") {
    const HyperRect cell = HyperRect::unit_cube(1);
    SUBCASE("evenly spread points give zero gaps") {
        auto table = compute_gaps({{1.0 / 6.0}, {3.0 / 6.0}, {5.0 / 6.0}}, cell, 3);
        CHECK(table.at(0, 1) == doctest::Approx(0.0));
        CHECK(table.at(0, 2) == doctest::Approx(0.0));
    }
    SUBCASE("clustered points") {
        auto table = compute_gaps({{0.1}, {0.2}, {0.3}, {0.4}}, cell, 3);
        CHECK(table.at(0, 1) == doctest::Approx(3.0 / 4.0 - 1.0 / 3.0));  // 5/12
        CHECK(table.at(0, 2) == doctest::Approx(1.0 - 2.0 / 3.0));        // 1/3
    }
    SUBCASE("single point with m=2") {
        auto table = compute_gaps({{0.9, 0.1}}, HyperRect::unit_cube(2), 2);
        CHECK(table.at(0, 1) == doctest::Approx(0.5));
        CHECK(table.at(1, 1) == doctest::Approx(0.5));
    }
    SUBCASE("empty cell rejected") {
        CHECK_THROWS_AS(compute_gaps({}, cell, 3), std::domain_error);
    }
    SUBCASE("gaps recomputable from the definition") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> unif(0.25, 0.75);
        std::vector<Point> pts;
        for (int i = 0; i < 37; ++i) pts.push_back({unif(rng), unif(rng)});
        const HyperRect box({0.25, 0.25}, {0.75, 0.75});
        auto table = compute_gaps(pts, box, 4);
        for (std::size_t j = 0; j < 2; ++j) {
            for (std::size_t k = 1; k < 4; ++k) {
                const double cut = box.lower[j] + box.width(j) * k / 4.0;
                std::size_t below = 0;
                for (const auto& p : pts)
                    if (p[j] < cut) ++below;
                CHECK(table.at(j, k) ==
                      doctest::Approx(std::abs(below / 37.0 - k / 4.0)).epsilon(1e-12));
                CHECK(table.at(j, k) >= 0.0);
                CHECK(table.at(j, k) <= 1.0);
            }
        }
    }
}

TEST_CASE("select_split") {
    SUBCASE("largest gap wins") {
        auto table = compute_gaps({{0.1}, {0.2}, {0.3}, {0.4}}, HyperRect::unit_cube(1), 3);
        auto choice = select_split(table);
        CHECK(choice.dim == 0);
        CHECK(choice.bin == 1);
        CHECK(choice.location == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("ties break to smallest dimension then bin") {
        GapTable table;
        table.m = 3;
        table.d = 2;
        table.cell = HyperRect::unit_cube(2);
        table.gaps = {0.25, 0.25, 0.25, 0.25};
        auto choice = select_split(table);
        CHECK(choice.dim == 0);
        CHECK(choice.bin == 1);
    }
    SUBCASE("absolute location in a shifted cell") {
        GapTable table;
        table.m = 2;
        table.d = 1;
        table.cell = HyperRect({0.5}, {1.0});
        table.gaps = {0.4};
        auto choice = select_split(table);
        CHECK(choice.location == doctest::Approx(0.75));
    }
}

TEST_CASE("split_cell mass bookkeeping") {
    auto make_leaf_tree = [](std::size_t n, double mass) {
        PartitionTree tree;
        tree.dimension = 1;
        PartitionTree::Node root;
        root.cell = HyperRect::unit_cube(1);
        root.count = n;
        root.mass = mass;
        root.density = mass;
        tree.nodes.push_back(root);
        return tree;
    };

    SUBCASE("empirical fractions with alpha=0") {
        auto tree = make_leaf_tree(10, 1.0);
        std::vector<Point> pts;
        for (int i = 0; i < 7; ++i) pts.push_back({0.05 * (i + 1)});
        for (int i = 0; i < 3; ++i) pts.push_back({0.6 + 0.1 * i});
        std::vector<std::vector<std::size_t>> leaf_pts{{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
        detail::split_leaf(tree, leaf_pts, pts, 0, 0, 0.5, 0.0);
        CHECK(tree.nodes[1].mass == doctest::Approx(0.7));
        CHECK(tree.nodes[2].mass == doctest::Approx(0.3));
        CHECK(tree.nodes[1].density == doctest::Approx(0.7 / 0.5));
    }
    SUBCASE("pseudo-count keeps both children positive") {
        auto tree = make_leaf_tree(10, 1.0);
        std::vector<Point> pts(10, Point{0.1});
        std::vector<std::vector<std::size_t>> leaf_pts{{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
        detail::split_leaf(tree, leaf_pts, pts, 0, 0, 0.5, 1.0);
        CHECK(tree.nodes[1].mass == doctest::Approx(11.0 / 12.0));
        CHECK(tree.nodes[2].mass == doctest::Approx(1.0 / 12.0));
    }
    SUBCASE("proportional share of the parent mass") {
        auto tree = make_leaf_tree(4, 0.5);
        std::vector<Point> pts{{0.1}, {0.2}, {0.7}, {0.8}};
        std::vector<std::vector<std::size_t>> leaf_pts{{0, 1, 2, 3}};
        detail::split_leaf(tree, leaf_pts, pts, 0, 0, 0.5, 0.0);
        CHECK(tree.nodes[1].mass == doctest::Approx(0.25));
        CHECK(tree.nodes[2].mass == doctest::Approx(0.25));
    }
    SUBCASE("split location must be interior") {
        auto tree = make_leaf_tree(1, 1.0);
        std::vector<Point> pts{{0.5}};
        std::vector<std::vector<std::size_t>> leaf_pts{{0}};
        CHECK_THROWS_AS(detail::split_leaf(tree, leaf_pts, pts, 0, 0, 1.0, 0.0),
                        std::domain_error);
    }
}

namespace {

void check_partition_invariants(const EstimateResult& est, std::size_t n) {
    double mass = 0.0, integral = 0.0;
    std::size_t count = 0;
    for (const auto& c : est.density.cells) {
        CHECK(c.density >= 0.0);
        CHECK(c.density == doctest::Approx(c.mass / rect_volume(c.rect)).epsilon(1e-9));
        mass += c.mass;
        integral += c.density * rect_volume(c.rect);
        count += c.count;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(count == n);
}

}  // namespace

TEST_CASE("estimate_density") {
    SUBCASE("huge theta keeps the root intact") {
        auto samples = sample_mixture(MixtureSpec::four_gaussian_grid(2), 100, 1);
        EstimatorConfig cfg;
        cfg.split.theta = 20.0;  // T = 20*10/100 = 2 >= 1 at the root
        auto est = estimate_density(samples, cfg);
        CHECK(est.density.cells.size() == 1);
        CHECK(est.density.cells[0].density == doctest::Approx(1.0));
    }
    SUBCASE("uniform data yields a near-trivial partition") {
        MixtureSpec uniform;
        uniform.family = MixtureSpec::Family::BetaProduct;
        uniform.dim = 2;
        uniform.weights = {1.0};
        uniform.betas = {std::vector<BetaParams>(2, {1.0, 1.0})};
        auto samples = sample_mixture(uniform, 1000, 2);
        EstimatorConfig cfg;
        auto est = estimate_density(samples, cfg);
        CHECK(est.density.cells.size() <= 10);
        for (const auto& c : est.density.cells) {
            CHECK(c.density >= 0.5);
            CHECK(c.density <= 2.0);
        }
        check_partition_invariants(est, 1000);
    }
    SUBCASE("four-mode data concentrates small cells near the modes") {
        auto samples = sample_mixture(MixtureSpec::four_gaussian_grid(2), 4000, 3);
        EstimatorConfig cfg;
        auto est = estimate_density(samples, cfg);
        CHECK(est.density.cells.size() > 4);
        check_partition_invariants(est, 4000);
        // density near a mode well above density in the far corner region
        CHECK(density_at(est.density, {0.25, 0.25}) > density_at(est.density, {0.01, 0.5}));
    }
    SUBCASE("determinism") {
        auto samples = sample_mixture(MixtureSpec::beta_bimodal(2), 1200, 4);
        EstimatorConfig cfg;
        auto a = estimate_density(samples, cfg);
        auto b = estimate_density(samples, cfg);
        CHECK(tree_to_json(a.tree).dump() == tree_to_json(b.tree).dump());
    }
    SUBCASE("no leaf with n_i <= theta*sqrt(N) is ever split") {
        auto samples = sample_mixture(MixtureSpec::four_gaussian_grid(2), 2000, 6);
        EstimatorConfig cfg;
        auto est = estimate_density(samples, cfg);
        for (const auto& d : est.report.decisions)
            if (d.split) CHECK(d.threshold < 1.0);
    }
    SUBCASE("input validation") {
        EstimatorConfig cfg;
        SampleSet empty;
        CHECK_THROWS_AS(estimate_density(empty, cfg), std::invalid_argument);
    }
}

TEST_CASE("max_depth guard") {
    auto samples = sample_mixture(MixtureSpec::four_gaussian_grid(2), 2000, 8);
    SUBCASE("depth 1 caps the tree at two leaves") {
        EstimatorConfig cfg;
        cfg.max_depth = 1;
        auto est = estimate_density(samples, cfg);
        CHECK(est.density.cells.size() <= 2);
        CHECK(max_depth_guard(est.tree, 1));
    }
    SUBCASE("binary tree bound") {
        EstimatorConfig cfg;
        cfg.max_depth = 3;
        auto est = estimate_density(samples, cfg);
        CHECK(est.density.cells.size() <= 8);
        CHECK(max_depth_guard(est.tree, 3));
    }
    SUBCASE("natural stopping binds before a generous depth cap") {
        EstimatorConfig cfg;
        cfg.max_depth = 40;
        auto samples2 = sample_mixture(MixtureSpec::four_gaussian_grid(2), 10000, 9);
        auto est = estimate_density(samples2, cfg);
        int max_depth_seen = 0;
        for (int id : est.tree.leaf_ids())
            max_depth_seen =
                std::max(max_depth_seen, est.tree.nodes[static_cast<std::size_t>(id)].depth);
        CHECK(max_depth_seen < 40);
    }
}

TEST_CASE("integration error respects the theoretical bound on exact-rung runs") {
    // d=1, small N: every decision lands on the exact rung, so the final
    // partition satisfies the per-cell discrepancy condition and the bound
    // |integral f*phat - mean f| <= theta*V/sqrt(N) must hold.
    auto spec = MixtureSpec::beta_bimodal(1);
    for (std::uint64_t seed : {21, 22, 23}) {
        auto samples = sample_mixture(spec, 400, seed);
        EstimatorConfig cfg;
        cfg.split.mode = DiscrepancyMode::Exact;
        cfg.split.epsilon = 1e-12;  // keep the shortcut rung out of play
        auto est = estimate_density(samples, cfg);
        for (const auto& d : est.report.decisions)
            CHECK((d.rung == DecisionRung::Exact || d.rung == DecisionRung::UpperBound ||
                   d.rung == DecisionRung::ProjectionBound));
        auto f = reference_f2(1);
        const double err = integration_error(est.density, samples, f);
        CHECK(err <= cfg.split.theta * f.vhk / std::sqrt(400.0) + 1e-12);
    }
}

TEST_CASE("run report serialization") {
    auto samples = sample_mixture(MixtureSpec::four_gaussian_grid(2), 500, 10);
    EstimatorConfig cfg;
    auto est = estimate_density(samples, cfg);
    auto doc = report_to_json(est.report, cfg);
    CHECK(doc["sweeps"].get<std::size_t>() == est.report.sweeps);
    CHECK(doc["leaves"].get<std::size_t>() == est.density.cells.size());
    CHECK(doc["decisions"].size() == est.report.decisions.size());
    CHECK(doc["config"]["theta"].get<double>() == cfg.split.theta);
    for (const auto& d : doc["decisions"]) {
        CHECK(d.contains("rung"));
        CHECK(d.contains("threshold"));
        CHECK(d.contains("split"));
    }
}
