#include <gtest/gtest.h>

#include <cmath>

#include "fsta/model.hpp"
#include "test_util.hpp"

using namespace fsta;

TEST(Distance, SameNodeIsZero) {
    const Instance inst = test::make_cvrp({{0, 0, 0}, {3, 4, 1}}, 10);
    EXPECT_EQ(distance(inst, 1, 1), 0.0);
}

TEST(Distance, ThreeFourFive) {
    const Instance inst = test::make_cvrp({{0, 0, 0}, {3, 4, 1}}, 10);
    EXPECT_DOUBLE_EQ(distance(inst, 0, 1), 5.0);
}

TEST(Distance, RoundedIntMatchesScalarReference) {
    const Instance inst = test::make_cvrp({{0, 0, 0}, {0.5, 0.5, 1}}, 10, DistanceMode::RoundedInt);
    const double reference = std::floor(std::sqrt(0.5 * 0.5 + 0.5 * 0.5) + 0.5);
    EXPECT_EQ(distance(inst, 0, 1), reference);
    EXPECT_EQ(distance(inst, 0, 1), 1.0);
}

TEST(Objective, EmptySolutionIsZero) {
    const Instance inst = test::make_cvrp({{0, 0, 0}, {2, 0, 1}}, 10);
    EXPECT_EQ(evaluate_objective(inst, Solution{}), 0.0);
}

TEST(Objective, OutAndBack) {
    const Instance inst = test::make_cvrp({{0, 0, 0}, {2, 0, 1}}, 10);
    EXPECT_DOUBLE_EQ(evaluate_objective(inst, Solution{{{1}}}), 4.0);
}

TEST(Objective, MatchesIndependentEdgeSum) {
    const Instance inst = test::make_cvrp({{0, 0, 0}, {1, 2, 1}, {4, 1, 1}, {-2, 3, 1}, {0.5, -1.5, 1}}, 10);
    const Solution sol{{{1, 2}, {4, 3}}};
    const double pts[5][2] = {{0, 0}, {1, 2}, {4, 1}, {-2, 3}, {0.5, -1.5}};
    auto d = [&](int i, int j) { return std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]); };
    const double expected = d(0, 1) + d(1, 2) + d(2, 0) + d(0, 4) + d(4, 3) + d(3, 0);
    EXPECT_NEAR(evaluate_objective(inst, sol), expected, 1e-12);
}

TEST(Objective, RejectsDuplicateCustomer) {
    const Instance inst = test::make_cvrp({{0, 0, 0}, {2, 0, 1}, {3, 0, 1}}, 10);
    EXPECT_THROW(evaluate_objective(inst, Solution{{{1, 1}, {2}}}), Error);
}

TEST(Feasibility, CapacityBoundaryIsInclusive) {
    const Instance inst = test::make_cvrp({{0, 0, 0}, {1, 0, 4}, {2, 0, 6}}, 10);
    EXPECT_TRUE(check_feasibility(inst, Solution{{{1, 2}}}).feasible);
    Instance tight = inst;
    tight.capacity = 9;
    const auto rep = check_feasibility(tight, Solution{{{1, 2}}});
    EXPECT_FALSE(rep.feasible);
    EXPECT_TRUE(rep.has(ViolationKind::CapacityExceeded));
}

TEST(Feasibility, TimeWindowMissed) {
    Instance inst = test::make_cvrp({{0, 0, 0}, {5, 0, 1}, {10, 0, 1}}, 10);
    inst.variant = Variant::VRPTW;
    inst.nodes[1].tw_open = 0;
    inst.nodes[1].tw_close = 100;
    inst.nodes[1].service_time = 5;
    inst.nodes[2].tw_open = 0;
    inst.nodes[2].tw_close = 12;
    const auto rep = check_feasibility(inst, Solution{{{1, 2}}});
    EXPECT_TRUE(rep.has(ViolationKind::TimeWindowMissed));
    EXPECT_TRUE(check_feasibility(inst, Solution{{{2}, {1}}}).feasible);
}

TEST(Feasibility, WaitingUntilWindowOpens) {
    Instance inst = test::make_cvrp({{0, 0, 0}, {1, 0, 1}, {2, 0, 1}}, 10);
    inst.variant = Variant::VRPTW;
    inst.nodes[1].tw_open = 5;
    inst.nodes[1].tw_close = 6;
    inst.nodes[1].service_time = 1;
    inst.nodes[2].tw_open = 0;
    inst.nodes[2].tw_close = 7;
    // Wait until 5, serve until 6, arrive at 7.
    EXPECT_TRUE(check_feasibility(inst, Solution{{{1, 2}}}).feasible);
    inst.nodes[2].tw_close = 6.5;
    EXPECT_FALSE(check_feasibility(inst, Solution{{{1, 2}}}).feasible);
}

TEST(Feasibility, BackhaulOrder) {
    Instance inst = test::make_cvrp({{0, 0, 0}, {1, 0, 1}, {2, 0, 1}, {3, 0, 1}}, 10);
    inst.variant = Variant::VRPB;
    inst.nodes[2].is_backhaul = true;
    const auto rep = check_feasibility(inst, Solution{{{1, 2, 3}}});
    EXPECT_TRUE(rep.has(ViolationKind::BackhaulOrder));
    EXPECT_TRUE(check_feasibility(inst, Solution{{{1, 3, 2}}}).feasible);
}

TEST(Feasibility, BackhaulLoadsAreSeparate) {
    Instance inst = test::make_cvrp({{0, 0, 0}, {1, 0, 6}, {2, 0, 6}}, 10);
    inst.variant = Variant::VRPB;
    inst.nodes[2].is_backhaul = true;
    EXPECT_TRUE(check_feasibility(inst, Solution{{{1, 2}}}).feasible);
}

TEST(Feasibility, OnePdpRunningLoad) {
    Instance inst = test::make_cvrp({{0, 0, 0}, {1, 0, 3}, {2, 0, -5}, {3, 0, 4}}, 5);
    inst.variant = Variant::OnePDP;
    // Prefix loads 3,-2,2: start load must lie in [2, C-3] = [2, 2].
    EXPECT_TRUE(check_feasibility(inst, Solution{{{1, 2, 3}}}).feasible);
    inst.capacity = 4;
    EXPECT_FALSE(check_feasibility(inst, Solution{{{1, 2, 3}}}).feasible);
}

TEST(Feasibility, CoverageDefects) {
    const Instance inst = test::make_cvrp({{0, 0, 0}, {1, 0, 1}, {2, 0, 1}}, 10);
    EXPECT_TRUE(check_feasibility(inst, Solution{{{1}}}).has(ViolationKind::CustomerCoverage));
    EXPECT_TRUE(check_feasibility(inst, Solution{{{1, 2, 1}}}).has(ViolationKind::CustomerCoverage));
    EXPECT_TRUE(check_feasibility(inst, Solution{{{1, 0, 2}}}).has(ViolationKind::CustomerCoverage));
}

TEST(Validate, RejectsBadInstances) {
    Instance inst = test::make_cvrp({{0, 0, 0}, {1, 0, 1}}, 10);
    EXPECT_NO_THROW(validate(inst));
    inst.nodes[1].demand = 11;
    EXPECT_THROW(validate(inst), Error);
    inst.nodes[1].demand = 1;
    inst.nodes[1].is_backhaul = true;
    EXPECT_THROW(validate(inst), Error);
    inst.nodes[1].is_backhaul = false;
    inst.variant = Variant::OnePDP;
    inst.nodes[1].demand = -3;
    EXPECT_NO_THROW(validate(inst));
    inst.nodes[1].demand = 0;
    EXPECT_THROW(validate(inst), Error);
}

TEST(EdgeSet, SingleRoute) {
    const EdgeSet e = edge_set(Solution{{{4, 7}}});
    EXPECT_EQ(e, EdgeSet({{0, 4}, {4, 7}, {0, 7}}));
}

TEST(EdgeSet, SingletonRouteCollapses) {
    const EdgeSet e = edge_set(Solution{{{3}}});
    ASSERT_EQ(e.size(), 1u);
    EXPECT_TRUE(e.contains(3, 0));
}

TEST(EdgeSet, DisjointRoutesUnion) {
    const Solution s{{{1, 2}, {3, 4}}};
    const EdgeSet a = edge_set(Solution{{{1, 2}}});
    const EdgeSet b = edge_set(Solution{{{3, 4}}});
    EXPECT_EQ(edge_set(s), a.united(b));
    EXPECT_TRUE(a.intersected(b).non_depot_edges().empty());
}

TEST(EdgeDiff, IdenticalIsEmpty) {
    const Solution s{{{1, 2, 3}}};
    EXPECT_TRUE(edge_diff(s, s).empty());
}

TEST(EdgeDiff, TwoOptChangesFourEdges) {
    const Solution before{{{1, 2, 3, 4, 5}}};
    const Solution after{{{1, 4, 3, 2, 5}}};
    // Removed {1,2},{4,5}; added {1,4},{2,5}.
    EXPECT_EQ(edge_diff(before, after), EdgeSet({{1, 2}, {4, 5}, {1, 4}, {2, 5}}));
}

TEST(EdgeDiff, Symmetric) {
    Rng rng(5);
    const Instance inst = test::small_instance(Variant::CVRP, 15, 3);
    for (int k = 0; k < 50; ++k) {
        const Solution a = test::random_solution(inst, rng);
        const Solution b = test::random_solution(inst, rng);
        EXPECT_EQ(edge_diff(a, b), edge_diff(b, a));
    }
}

TEST(EdgeSet, SetOperationsAgreeWithDefinition) {
    const EdgeSet a({{1, 2}, {2, 3}, {0, 1}});
    const EdgeSet b({{2, 3}, {3, 4}});
    EXPECT_EQ(a.minus(b), EdgeSet({{0, 1}, {1, 2}}));
    EXPECT_EQ(a.symmetric_difference(b), EdgeSet({{0, 1}, {1, 2}, {3, 4}}));
    EXPECT_TRUE(EdgeSet({{3, 2}}).is_subset_of(a));
    EXPECT_EQ(a.depot_edges(), EdgeSet({{0, 1}}));
}

TEST(SubInstance, RenumbersCustomers) {
    const Instance inst = test::make_cvrp({{0, 0, 0}, {1, 0, 1}, {2, 0, 2}, {3, 0, 3}}, 10);
    const SubInstance sub = sub_instance(inst, {3, 1});
    ASSERT_EQ(sub.instance.size(), 3);
    EXPECT_EQ(sub.instance.nodes[1].demand, 3);
    EXPECT_EQ(sub.original, (std::vector<int>{0, 3, 1}));
    EXPECT_THROW(sub_instance(inst, {4}), Error);
}
