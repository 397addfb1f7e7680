#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "fsta/gen_io.hpp"
#include "test_util.hpp"

using namespace fsta;

namespace {

std::string slurp(const std::string &name) {
    std::ifstream in(std::string(FSTA_FIXTURE_DIR) + "/" + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string error_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(Generate, LargeUniformInstance) {
    GenSpec spec;
    spec.n_customers = 1000;
    spec.capacity = 200;
    spec.seed = 7;
    const Instance inst = generate(spec);
    ASSERT_EQ(inst.customers(), 1000);
    EXPECT_EQ(inst.capacity, 200);
    for (int i = 1; i < inst.size(); ++i) {
        const double d = inst.nodes[i].demand;
        EXPECT_TRUE(d >= 1 && d <= 9 && d == std::floor(d));
        EXPECT_TRUE(inst.nodes[i].x >= 0 && inst.nodes[i].x <= 1);
        EXPECT_TRUE(inst.nodes[i].y >= 0 && inst.nodes[i].y <= 1);
    }
}

TEST(Generate, Deterministic) {
    GenSpec spec;
    spec.n_customers = 300;
    spec.seed = 11;
    EXPECT_EQ(generate(spec), generate(spec));
    GenSpec other = spec;
    other.seed = 12;
    EXPECT_NE(generate(spec), generate(other));
}

TEST(Generate, SkewedHeteroFrequencies) {
    GenSpec spec;
    spec.n_customers = 100000;
    spec.demand_model = DemandModel::SkewedHetero;
    spec.seed = 3;
    const Instance inst = generate(spec);
    std::map<int, int> count;
    for (int i = 1; i < inst.size(); ++i) ++count[static_cast<int>(inst.nodes[i].demand)];
    const double n = spec.n_customers;
    EXPECT_NEAR(count[9] / n, 0.2, 0.01);
    EXPECT_NEAR(count[1] / n, 0.2, 0.01);
    EXPECT_NEAR(count[5] / n, 0.04, 0.005);
}

TEST(Generate, ClusteredStaysInSquare) {
    GenSpec spec;
    spec.n_customers = 2000;
    spec.spatial = SpatialModel::Clustered;
    spec.clusters = 3;
    spec.seed = 2;
    const Instance inst = generate(spec);
    for (const auto &n : inst.nodes) {
        EXPECT_TRUE(n.x >= 0 && n.x <= 1);
        EXPECT_TRUE(n.y >= 0 && n.y <= 1);
    }
}

TEST(Generate, VariantFields) {
    GenSpec spec;
    spec.n_customers = 200;
    spec.seed = 5;
    spec.variant = Variant::VRPTW;
    const Instance tw = generate(spec);
    for (int i = 1; i < tw.size(); ++i) {
        const Node &n = tw.nodes[i];
        EXPECT_EQ(n.service_time, 0.2);
        EXPECT_LE(n.tw_open, n.tw_close);
        // Every customer is servable by its own route.
        FeasibilityReport rep;
        check_route(tw, Route{i}, 0, rep);
        EXPECT_TRUE(rep.feasible) << i;
    }
    spec.variant = Variant::VRPB;
    const Instance b = generate(spec);
    int backhauls = 0;
    for (const auto &n : b.nodes) backhauls += n.is_backhaul;
    EXPECT_GT(backhauls, 0);
    EXPECT_LT(backhauls, 200);
    spec.variant = Variant::OnePDP;
    const Instance p = generate(spec);
    int negative = 0;
    for (int i = 1; i < p.size(); ++i) negative += p.nodes[i].demand < 0;
    EXPECT_GT(negative, 0);
    EXPECT_LT(negative, 200);
}

TEST(Generate, RejectsInvalidSpec) {
    GenSpec spec;
    spec.n_customers = 0;
    EXPECT_THROW(generate(spec), Error);
    spec.n_customers = 5;
    spec.spatial = SpatialModel::Clustered;
    spec.clusters = 0;
    EXPECT_THROW(generate(spec), Error);
}

TEST(CvrpLib, TinyFixtureFields) {
    const Instance inst = parse_cvrplib(slurp("tiny3.vrp"));
    EXPECT_EQ(inst.id, "tiny3");
    EXPECT_EQ(inst.capacity, 10);
    ASSERT_EQ(inst.size(), 3);
    EXPECT_EQ(inst.nodes[1].demand, 4);
    EXPECT_EQ(inst.nodes[2].demand, 7);
    EXPECT_EQ(inst.nodes[2].x, 6);
    EXPECT_EQ(inst.distance_mode, DistanceMode::RoundedInt);
    EXPECT_EQ(distance(inst, 0, 1), 5);
}

TEST(CvrpLib, FixturesRoundTripByteIdentical) {
    for (const char *name : {"tiny3.vrp", "grid6.vrp", "decimal5.vrp"}) {
        const std::string text = slurp(name);
        ASSERT_FALSE(text.empty()) << name;
        const Instance inst = parse_cvrplib(text);
        EXPECT_EQ(write_cvrplib(inst), text) << name;
        EXPECT_EQ(parse_cvrplib(write_cvrplib(inst)), inst) << name;
    }
}

TEST(CvrpLib, DepotMovesToIndexZero) {
    const std::string text = "NAME : x\nCOMMENT : anything\nTYPE : CVRP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\n"
                             "CAPACITY : 5\nNODE_COORD_SECTION\n1 1 1\n2 7 7\n3 2 2\nDEMAND_SECTION\n1 1\n2 0\n3 2\n"
                             "DEPOT_SECTION\n2\n-1\nEOF\n";
    const Instance inst = parse_cvrplib(text);
    EXPECT_EQ(inst.nodes[0].x, 7);
    EXPECT_EQ(inst.nodes[1].demand, 1);
    EXPECT_EQ(inst.nodes[2].demand, 2);
}

TEST(CvrpLib, DimensionMismatchNamesSection) {
    std::string text = slurp("tiny3.vrp");
    text.replace(text.find("DIMENSION : 3"), 13, "DIMENSION : 4");
    const std::string msg = error_of([&] { parse_cvrplib(text); });
    EXPECT_NE(msg.find("NODE_COORD_SECTION"), std::string::npos) << msg;
}

TEST(CvrpLib, MissingSectionIsNamed) {
    std::string text = slurp("tiny3.vrp");
    text.erase(text.find("CAPACITY : 10\n"), 14);
    EXPECT_NE(error_of([&] { parse_cvrplib(text); }).find("CAPACITY"), std::string::npos);
}

TEST(CvrpLib, UnsupportedWeightType) {
    std::string text = slurp("tiny3.vrp");
    text.replace(text.find("EUC_2D"), 6, "GEO");
    EXPECT_NE(error_of([&] { parse_cvrplib(text); }).find("EDGE_WEIGHT_TYPE"), std::string::npos);
}

TEST(InstanceDocument, RoundTripAllVariants) {
    for (Variant v : {Variant::CVRP, Variant::VRPTW, Variant::VRPB, Variant::OnePDP}) {
        const Instance inst = test::small_instance(v, 25, 9);
        EXPECT_EQ(read_instance(write_instance(inst)), inst) << to_string(v);
    }
}

TEST(InstanceDocument, ErrorNamesField) {
    const Instance inst = test::small_instance(Variant::CVRP, 3, 1);
    std::string doc = write_instance(inst);
    const auto at = doc.find("\n2 ");
    const auto end = doc.find('\n', at + 1);
    doc.replace(at + 1, end - at - 1, "2 0.5 0.5 abc 0 0 inf 0");
    const std::string msg = error_of([&] { read_instance(doc); });
    EXPECT_NE(msg.find("demand"), std::string::npos) << msg;
}

TEST(Sweep, SingleCustomer) {
    const Instance inst = test::small_instance(Variant::CVRP, 1, 4);
    const Solution s = initial_solution_sweep(inst, SweepParams{}, MoveBudget::moves(10));
    EXPECT_EQ(s, Solution{{{1}}});
}

TEST(Sweep, EqualAnglesKeepIndexOrder) {
    const Instance inst = test::make_cvrp({{0, 0, 0}, {1, 1, 1}, {2, 2, 1}, {3, 3, 1}, {0.5, 0.5, 1}}, 10);
    EXPECT_EQ(sweep_order(inst), (std::vector<int>{1, 2, 3, 4}));
}

TEST(Sweep, FeasibleOnMediumInstance) {
    GenSpec spec;
    spec.n_customers = 200;
    spec.capacity = 50;
    spec.seed = 1;
    const Instance inst = generate(spec);
    const Solution s = initial_solution_sweep(inst, SweepParams{}, MoveBudget::moves(200, 1));
    const auto rep = check_feasibility(inst, s);
    EXPECT_TRUE(rep.feasible);
    for (const auto &r : s.routes) {
        double load = 0;
        for (int c : r) load += inst.nodes[c].demand;
        EXPECT_LE(load, 50);
    }
}

TEST(Sweep, FeasibleForEveryVariant) {
    for (Variant v : {Variant::VRPTW, Variant::VRPB, Variant::OnePDP}) {
        GenSpec spec;
        spec.variant = v;
        spec.n_customers = 60;
        spec.capacity = 30;
        spec.seed = 8;
        const Instance inst = generate(spec);
        const Solution s = initial_solution_sweep(inst, SweepParams{}, MoveBudget::moves(100, 2));
        EXPECT_TRUE(check_feasibility(inst, s).feasible) << to_string(v);
    }
}

TEST(SolutionDocument, RoundTrip) {
    const Solution s{{{3, 1}, {2}, {5, 4, 6}}};
    const auto doc = read_solution(write_solution(s, 12.5));
    EXPECT_EQ(doc.solution, s);
    EXPECT_EQ(doc.objective, 12.5);
    EXPECT_EQ(write_solution(s, 12.5), "objective 12.5\nroute 0: 0 3 1 0\nroute 1: 0 2 0\nroute 2: 0 5 4 6 0\n");
}

TEST(SolutionDocument, RejectsMissingDepot) {
    EXPECT_THROW(read_solution("objective 1\nroute 0: 0 3 1\n"), Error);
}

TEST(Prediction, RoundTripAndUnknownIndex) {
    const Instance inst = test::small_instance(Variant::CVRP, 5, 1);
    const EdgeSet e({{0, 1}, {2, 3}});
    EXPECT_EQ(read_prediction(write_prediction(inst.id, e), inst), e);
    const std::string bad = "instance " + inst.id + "\nunstable 2 9\n";
    EXPECT_NE(error_of([&] { read_prediction(bad, inst); }).find("unknown node index"), std::string::npos);
    EXPECT_THROW(read_prediction("instance other\n", inst), Error);
}

TEST(TraceStream, ThreeRecords) {
    TraceRecord a;
    a.kind = "step";
    a.instance_id = "x";
    a.iteration = 1;
    a.improvement = 0.5;
    a.before = Solution{{{1, 2}}};
    a.after = Solution{{{2, 1}}};
    TraceRecord b;
    b.kind = "subproblem";
    b.instance_id = "x";
    b.iteration = 1;
    b.subproblem_id = 0;
    b.route_pair = {0, 1};
    b.nar_labels = {{1, 1}, {2, 0}};
    b.ar_sequences = {ArSequence{{1, 2, 4, 3, 1}, "didi", true, 0.25}};
    TraceRecord c = b;
    c.subproblem_id = 1;
    const std::string text = write_trace_record(a) + write_trace_record(b) + write_trace_record(c);
    const auto recs = read_trace_stream(text);
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[0], a);
    EXPECT_EQ(recs[1], b);
    EXPECT_EQ(recs[2], c);
}

TEST(TraceStream, MalformedRecordIsRejected) {
    EXPECT_THROW(read_trace_stream(std::string_view("{\"kind\":\"subproblem\"}\n")), Error);
    EXPECT_THROW(read_trace_stream(std::string_view("not json\n")), Error);
}

TEST(Numbers, ShortestRoundTripForm) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(3), "3");
    EXPECT_EQ(format_number(kInf), "inf");
    const double x = 0.1 + 0.2;
    EXPECT_EQ(*parse_number(format_number(x)), x);
}
