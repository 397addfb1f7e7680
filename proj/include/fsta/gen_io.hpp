#pragma once

// Instance generation, sweep initial solutions, CVRPLib subset and the
// text formats for instances, solutions, predictions and trace streams.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fsta/backbone.hpp"
#include "fsta/model.hpp"
#include "fsta/problem_view.hpp"
#include "fsta/random.hpp"

namespace fsta {

// ---------------------------------------------------------------------------
// Numbers

/// Shortest representation that parses back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_number(std::string_view s) {
    double v = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<long long> parse_integer(std::string_view s) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

namespace detail {

inline std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::size_t k = 0;
    while (k < line.size()) {
        while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
        const std::size_t start = k;
        while (k < line.size() && !std::isspace(static_cast<unsigned char>(line[k]))) ++k;
        if (k > start) out.emplace_back(line.substr(start, k - start));
    }
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> lines_of(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string line(text.substr(start, end - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(std::move(line));
        start = end + 1;
    }
    if (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Generation

enum class DemandModel { Uniform1To9, SkewedHetero };
enum class SpatialModel { UniformSquare, Clustered };

inline DemandModel demand_model_from_string(const std::string &s) {
    if (s == "uniform_1_9") return DemandModel::Uniform1To9;
    if (s == "skewed_hetero") return DemandModel::SkewedHetero;
    throw Error("unknown demand model: " + s);
}

struct TimeWindowParams {
    double service_time = 0.2;
    double horizon = 18.0;
    double width_min = 0.5;
    double width_max = 2.0;
};

struct GenSpec {
    Variant variant = Variant::CVRP;
    int n_customers = 100;
    double capacity = 50.0;
    DemandModel demand_model = DemandModel::Uniform1To9;
    SpatialModel spatial = SpatialModel::UniformSquare;
    int clusters = 7;
    TimeWindowParams tw;
    double backhaul_fraction = 0.3;
    DistanceMode distance_mode = DistanceMode::EuclideanF64;
    std::uint64_t seed = 0;
    std::string id;  // empty: derived from the other fields

    void validate() const {
        if (n_customers < 1) throw Error("GenSpec.n_customers must be >= 1");
        if (spatial == SpatialModel::Clustered && clusters < 1) throw Error("GenSpec.clusters must be >= 1");
        if (capacity < 9.0) throw Error("GenSpec.capacity must be >= 9 (largest generated demand)");
        if (tw.service_time < 0.0) throw Error("GenSpec.tw.service_time must be >= 0");
        if (!(tw.width_min > 0.0) || tw.width_max < tw.width_min) throw Error("GenSpec.tw width range invalid");
        if (!(tw.horizon > 2.0 * std::numbers::sqrt2 + tw.service_time))
            throw Error("GenSpec.tw.horizon too short to reach every customer");
        if (backhaul_fraction < 0.0 || backhaul_fraction > 1.0)
            throw Error("GenSpec.backhaul_fraction must lie in [0,1]");
    }
};

inline int draw_demand(Rng &rng, DemandModel model) {
    if (model == DemandModel::Uniform1To9) return uniform_int(rng, 1, 9);
    // P(d) = 0.2 for d in {1,2,8,9}; 0.04 for d in {3..7}.
    static constexpr double weights[9] = {0.2, 0.2, 0.04, 0.04, 0.04, 0.04, 0.04, 0.2, 0.2};
    std::discrete_distribution<int> dist(std::begin(weights), std::end(weights));
    return dist(rng) + 1;
}

inline Instance generate(const GenSpec &spec) {
    spec.validate();
    Rng rng(spec.seed);
    Instance inst;
    inst.variant = spec.variant;
    inst.distance_mode = spec.distance_mode;
    inst.capacity = spec.capacity;
    inst.id = !spec.id.empty() ? spec.id
                               : std::string(to_string(spec.variant)) + "-n" + std::to_string(spec.n_customers) +
                                     "-s" + std::to_string(spec.seed);

    std::vector<Point> centers;
    if (spec.spatial == SpatialModel::Clustered)
        for (int k = 0; k < spec.clusters; ++k) centers.push_back({uniform01(rng), uniform01(rng)});
    std::normal_distribution<double> scatter(0.0, 0.05);
    auto place = [&]() -> Point {
        if (centers.empty()) return {uniform01(rng), uniform01(rng)};
        const Point c = centers[uniform_int(rng, 0, static_cast<int>(centers.size()) - 1)];
        auto coord = [&](double m) {
            for (;;) {
                const double v = m + scatter(rng);
                if (v >= 0.0 && v <= 1.0) return v;
            }
        };
        const double x = coord(c.x);
        return {x, coord(c.y)};
    };

    Node depot;
    depot.x = uniform01(rng);
    depot.y = uniform01(rng);
    inst.nodes.push_back(depot);
    for (int i = 0; i < spec.n_customers; ++i) {
        Node n;
        const Point p = place();
        n.x = p.x;
        n.y = p.y;
        n.demand = draw_demand(rng, spec.demand_model);
        switch (spec.variant) {
        case Variant::CVRP: break;
        case Variant::OnePDP:
            if (uniform01(rng) < 0.5) n.demand = -n.demand;
            break;
        case Variant::VRPB: n.is_backhaul = uniform01(rng) < spec.backhaul_fraction; break;
        case Variant::VRPTW: {
            n.service_time = spec.tw.service_time;
            const double to = point_distance(depot.point(), p, spec.distance_mode);
            const double lo = to, hi = spec.tw.horizon - n.service_time - to;
            const double center = lo + (hi - lo) * uniform01(rng);
            const double width = spec.tw.width_min + (spec.tw.width_max - spec.tw.width_min) * uniform01(rng);
            n.tw_open = std::max(0.0, center - width / 2);
            n.tw_close = center + width / 2;
            break;
        }
        }
        inst.nodes.push_back(n);
    }
    validate(inst);
    return inst;
}

// ---------------------------------------------------------------------------
// Sweep initial solution

struct SweepParams {
    int K_veh = 6;
    double alpha_init = 0.95;

    void validate() const {
        if (K_veh < 1) throw Error("SweepParams.K_veh must be >= 1");
        if (!(alpha_init > 0.0) || alpha_init > 1.0) throw Error("SweepParams.alpha_init must lie in (0,1]");
    }
};

/// Customers in angular order around the depot, starting at customer 1;
/// equal angles keep index order.
inline std::vector<int> sweep_order(const Instance &inst) {
    const Node &d = inst.nodes[0];
    std::vector<std::pair<double, int>> keyed;
    if (inst.customers() == 0) return {};
    const double ref = std::atan2(inst.nodes[1].y - d.y, inst.nodes[1].x - d.x);
    for (int c = 1; c < inst.size(); ++c) {
        double a = std::atan2(inst.nodes[c].y - d.y, inst.nodes[c].x - d.x) - ref;
        while (a < 0.0) a += 2 * std::numbers::pi;
        while (a >= 2 * std::numbers::pi) a -= 2 * std::numbers::pi;
        keyed.emplace_back(a, c);
    }
    std::stable_sort(keyed.begin(), keyed.end());
    std::vector<int> order;
    for (const auto &[a, c] : keyed) order.push_back(c);
    return order;
}

/// Builds feasible routes over `view` customers in the given order by
/// cheapest feasible insertion into the open route.
inline Solution greedy_routes(const ProblemView &view, const std::vector<int> &order) {
    Solution sol;
    Route current;
    std::vector<int> trial;
    for (int c : order) {
        double best = kInf;
        int best_pos = -1;
        for (std::size_t p = 0; p <= current.size(); ++p) {
            trial = current;
            trial.insert(trial.begin() + p, c);
            if (!view.route_variant_feasible(trial)) continue;
            const int prev = p == 0 ? 0 : current[p - 1];
            const int next = p == current.size() ? 0 : current[p];
            const double delta = view.dist(prev, c) + view.dist(c, next) - view.dist(prev, next);
            if (delta < best) {
                best = delta;
                best_pos = static_cast<int>(p);
            }
        }
        if (best_pos >= 0) {
            current.insert(current.begin() + best_pos, c);
            continue;
        }
        if (!current.empty()) sol.routes.push_back(std::move(current));
        current = {c};
        if (!view.route_variant_feasible(current))
            throw Error("customer " + std::to_string(c) + " cannot be served by a single route");
    }
    if (!current.empty()) sol.routes.push_back(std::move(current));
    return sol;
}

inline Solution initial_solution_sweep(const Instance &inst, const SweepParams &params, const MoveBudget &budget,
                                       BackboneMode mode = BackboneMode::PlainLs) {
    params.validate();
    validate(inst);
    for (int c = 1; c < inst.size(); ++c)
        if (std::abs(inst.nodes[c].demand) > inst.capacity)
            throw Error("customer " + std::to_string(c) + " demand exceeds capacity");

    const double target = params.alpha_init * params.K_veh * inst.capacity;
    std::vector<std::vector<int>> groups(1);
    double load = 0.0;
    for (int c : sweep_order(inst)) {
        const double d = std::abs(inst.nodes[c].demand);
        if (!groups.back().empty() && load + d > target) {
            groups.emplace_back();
            load = 0.0;
        }
        groups.back().push_back(c);
        load += d;
    }

    Solution out;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) continue;
        const SubInstance sub = sub_instance(inst, groups[g]);
        const ProblemView view = ProblemView::of(sub.instance);
        std::vector<int> order(groups[g].size());
        std::iota(order.begin(), order.end(), 1);
        Solution local = greedy_routes(view, order);
        MoveBudget b = budget;
        b.seed = derive_seed(budget.seed, g);
        local = solve_warm(view, local, b, mode).first;
        for (const auto &r : local.routes) {
            Route mapped;
            for (int c : r) mapped.push_back(sub.original[c]);
            out.routes.push_back(std::move(mapped));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CVRPLib subset

inline Instance parse_cvrplib(std::string_view text) {
    const auto lines = detail::lines_of(text);
    std::optional<std::string> name, weight_type;
    std::optional<long long> dimension;
    std::optional<double> capacity;
    struct Entry {
        long long id;
        double a, b;
    };
    std::vector<Entry> coords, demands;
    std::vector<long long> depots;
    bool seen_coord = false, seen_demand = false, seen_depot = false, depot_closed = false;
    enum class Sec { Header, Coord, Demand, Depot, Done } sec = Sec::Header;

    auto fail = [](std::size_t line, const std::string &msg) -> Error {
        return Error("line " + std::to_string(line + 1) + ": " + msg);
    };

    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::string line = detail::trim(lines[ln]);
        if (line.empty()) continue;
        const bool keyword = std::isalpha(static_cast<unsigned char>(line.front()));
        if (keyword) {
            std::string key = line, value;
            if (const auto colon = line.find(':'); colon != std::string::npos) {
                key = detail::trim(line.substr(0, colon));
                value = detail::trim(line.substr(colon + 1));
            }
            if (key == "EOF") {
                sec = Sec::Done;
                continue;
            }
            if (sec == Sec::Done) throw fail(ln, "content after EOF");
            if (key == "NODE_COORD_SECTION") {
                sec = Sec::Coord;
                seen_coord = true;
            } else if (key == "DEMAND_SECTION") {
                sec = Sec::Demand;
                seen_demand = true;
            } else if (key == "DEPOT_SECTION") {
                sec = Sec::Depot;
                seen_depot = true;
            } else if (key == "NAME") {
                name = value;
            } else if (key == "COMMENT") {
            } else if (key == "TYPE") {
                if (value != "CVRP") throw fail(ln, "unsupported TYPE " + value + " (only CVRP)");
            } else if (key == "DIMENSION") {
                dimension = parse_integer(value);
                if (!dimension || *dimension < 1) throw fail(ln, "malformed DIMENSION value");
            } else if (key == "CAPACITY") {
                capacity = parse_number(value);
                if (!capacity || !(*capacity > 0.0)) throw fail(ln, "malformed CAPACITY value");
            } else if (key == "EDGE_WEIGHT_TYPE") {
                if (value != "EUC_2D") throw fail(ln, "unsupported EDGE_WEIGHT_TYPE " + value + " (only EUC_2D)");
                weight_type = value;
            } else {
                throw fail(ln, "unknown keyword " + key);
            }
            continue;
        }
        const auto tok = detail::split_ws(line);
        switch (sec) {
        case Sec::Header: throw fail(ln, "data outside any section");
        case Sec::Done: throw fail(ln, "content after EOF");
        case Sec::Coord:
        case Sec::Demand: {
            const char *where = sec == Sec::Coord ? "NODE_COORD_SECTION" : "DEMAND_SECTION";
            const std::size_t want = sec == Sec::Coord ? 3 : 2;
            if (tok.size() != want) throw fail(ln, std::string("malformed ") + where + " entry");
            const auto id = parse_integer(tok[0]);
            const auto a = parse_number(tok[1]);
            const auto b = want == 3 ? parse_number(tok[2]) : std::optional<double>(0.0);
            if (!id || !a || !b) throw fail(ln, std::string("malformed ") + where + " entry");
            (sec == Sec::Coord ? coords : demands).push_back({*id, *a, *b});
            break;
        }
        case Sec::Depot: {
            if (tok.size() != 1) throw fail(ln, "malformed DEPOT_SECTION entry");
            const auto id = parse_integer(tok[0]);
            if (!id) throw fail(ln, "malformed DEPOT_SECTION entry");
            if (depot_closed) throw fail(ln, "DEPOT_SECTION entry after terminating -1");
            if (*id == -1)
                depot_closed = true;
            else
                depots.push_back(*id);
            break;
        }
        }
    }

    if (!name) throw Error("missing section NAME");
    if (!dimension) throw Error("missing section DIMENSION");
    if (!capacity) throw Error("missing section CAPACITY");
    if (!weight_type) throw Error("missing section EDGE_WEIGHT_TYPE");
    if (!seen_coord) throw Error("missing section NODE_COORD_SECTION");
    if (!seen_demand) throw Error("missing section DEMAND_SECTION");
    if (!seen_depot) throw Error("missing section DEPOT_SECTION");
    const auto n = static_cast<std::size_t>(*dimension);
    if (coords.size() != n)
        throw Error("DIMENSION mismatch in NODE_COORD_SECTION: expected " + std::to_string(n) + " entries, found " +
                    std::to_string(coords.size()));
    if (demands.size() != n)
        throw Error("DIMENSION mismatch in DEMAND_SECTION: expected " + std::to_string(n) + " entries, found " +
                    std::to_string(demands.size()));
    if (depots.size() != 1) throw Error("DEPOT_SECTION must list exactly one depot");

    // File ids 1..n, each once; the depot moves to index 0.
    std::vector<int> coord_at(n + 1, -1), demand_at(n + 1, -1);
    for (std::size_t k = 0; k < n; ++k) {
        const long long id = coords[k].id;
        if (id < 1 || id > static_cast<long long>(n) || coord_at[id] != -1)
            throw Error("NODE_COORD_SECTION: invalid or duplicate node id " + std::to_string(id));
        coord_at[id] = static_cast<int>(k);
    }
    for (std::size_t k = 0; k < n; ++k) {
        const long long id = demands[k].id;
        if (id < 1 || id > static_cast<long long>(n) || demand_at[id] != -1)
            throw Error("DEMAND_SECTION: invalid or duplicate node id " + std::to_string(id));
        demand_at[id] = static_cast<int>(k);
    }
    const long long depot_id = depots.front();
    if (depot_id < 1 || depot_id > static_cast<long long>(n))
        throw Error("DEPOT_SECTION: depot id " + std::to_string(depot_id) + " out of range");

    Instance inst;
    inst.id = *name;
    inst.variant = Variant::CVRP;
    inst.distance_mode = DistanceMode::RoundedInt;
    inst.capacity = *capacity;
    auto node_of = [&](long long id) {
        Node nd;
        nd.x = coords[coord_at[id]].a;
        nd.y = coords[coord_at[id]].b;
        nd.demand = demands[demand_at[id]].a;
        return nd;
    };
    inst.nodes.push_back(node_of(depot_id));
    for (long long id = 1; id <= static_cast<long long>(n); ++id)
        if (id != depot_id) inst.nodes.push_back(node_of(id));
    validate(inst);
    return inst;
}

inline std::string write_cvrplib(const Instance &inst) {
    if (inst.variant != Variant::CVRP) throw Error("CVRPLib output supports CVRP instances only");
    std::ostringstream os;
    os << "NAME : " << inst.id << '\n';
    os << "TYPE : CVRP\n";
    os << "DIMENSION : " << inst.size() << '\n';
    os << "EDGE_WEIGHT_TYPE : EUC_2D\n";
    os << "CAPACITY : " << format_number(inst.capacity) << '\n';
    os << "NODE_COORD_SECTION\n";
    for (int i = 0; i < inst.size(); ++i)
        os << i + 1 << ' ' << format_number(inst.nodes[i].x) << ' ' << format_number(inst.nodes[i].y) << '\n';
    os << "DEMAND_SECTION\n";
    for (int i = 0; i < inst.size(); ++i) os << i + 1 << ' ' << format_number(inst.nodes[i].demand) << '\n';
    os << "DEPOT_SECTION\n1\n-1\nEOF\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Instance document

inline std::string write_instance(const Instance &inst) {
    std::ostringstream os;
    os << "fsta-instance\n";
    os << "id " << inst.id << '\n';
    os << "variant " << to_string(inst.variant) << '\n';
    os << "distance_mode " << to_string(inst.distance_mode) << '\n';
    os << "capacity " << format_number(inst.capacity) << '\n';
    os << "nodes " << inst.size() << '\n';
    for (int i = 0; i < inst.size(); ++i) {
        const Node &n = inst.nodes[i];
        os << i << ' ' << format_number(n.x) << ' ' << format_number(n.y) << ' ' << format_number(n.demand) << ' '
           << format_number(n.service_time) << ' ' << format_number(n.tw_open) << ' ' << format_number(n.tw_close)
           << ' ' << (n.is_backhaul ? 1 : 0) << '\n';
    }
    os << "end\n";
    return os.str();
}

inline Instance read_instance(std::string_view text) {
    const auto lines = detail::lines_of(text);
    std::size_t ln = 0;
    auto fail = [&](const std::string &path, const std::string &msg) -> Error {
        return Error("instance document line " + std::to_string(ln + 1) + ": " + path + ": " + msg);
    };
    auto next = [&](const std::string &path) -> const std::string & {
        if (ln >= lines.size()) throw Error("instance document: unexpected end, expected " + path);
        return lines[ln];
    };
    auto field = [&](const std::string &key) {
        const std::string &line = next(key);
        if (line.rfind(key + ' ', 0) != 0) throw fail(key, "expected '" + key + " <value>'");
        std::string v = line.substr(key.size() + 1);
        ++ln;
        return v;
    };
    if (next("header") != "fsta-instance") throw fail("header", "expected 'fsta-instance'");
    ++ln;
    Instance inst;
    inst.id = field("id");
    try {
        inst.variant = variant_from_string(field("variant"));
    } catch (const Error &e) {
        --ln;
        throw fail("variant", e.what());
    }
    try {
        inst.distance_mode = distance_mode_from_string(field("distance_mode"));
    } catch (const Error &e) {
        --ln;
        throw fail("distance_mode", e.what());
    }
    const auto cap = parse_number(field("capacity"));
    if (!cap) {
        --ln;
        throw fail("capacity", "expected a number");
    }
    inst.capacity = *cap;
    const auto count = parse_integer(field("nodes"));
    if (!count || *count < 1) {
        --ln;
        throw fail("nodes", "expected a positive integer");
    }
    static const char *names[] = {"x", "y", "demand", "service_time", "tw_open", "tw_close"};
    for (long long i = 0; i < *count; ++i) {
        const std::string path = "nodes[" + std::to_string(i) + "]";
        const auto tok = detail::split_ws(next(path));
        if (tok.size() != 8) throw fail(path, "expected 8 fields");
        if (parse_integer(tok[0]) != i) throw fail(path + ".index", "expected " + std::to_string(i));
        double v[6];
        for (int f = 0; f < 6; ++f) {
            const auto x = parse_number(tok[f + 1]);
            if (!x) throw fail(path + "." + names[f], "expected a number");
            v[f] = *x;
        }
        if (tok[7] != "0" && tok[7] != "1") throw fail(path + ".is_backhaul", "expected 0 or 1");
        inst.nodes.push_back({v[0], v[1], v[2], v[3], v[4], v[5], tok[7] == "1"});
        ++ln;
    }
    if (next("end") != "end") throw fail("end", "expected 'end'");
    ++ln;
    if (ln != lines.size()) throw fail("end", "trailing content");
    try {
        validate(inst);
    } catch (const Error &e) {
        throw Error(std::string("instance document: ") + e.what());
    }
    return inst;
}

// ---------------------------------------------------------------------------
// Solution document

struct SolutionDocument {
    double objective = 0.0;
    Solution solution;
};

inline std::string write_solution(const Solution &sol, double objective) {
    std::ostringstream os;
    os << "objective " << format_number(objective) << '\n';
    for (std::size_t r = 0; r < sol.routes.size(); ++r) {
        os << "route " << r << ": 0";
        for (int c : sol.routes[r]) os << ' ' << c;
        os << " 0\n";
    }
    return os.str();
}

inline std::string write_solution(const Instance &inst, const Solution &sol) {
    return write_solution(sol, evaluate_objective(inst, sol));
}

inline SolutionDocument read_solution(std::string_view text) {
    const auto lines = detail::lines_of(text);
    auto fail = [](std::size_t ln, const std::string &path, const std::string &msg) {
        return Error("solution document line " + std::to_string(ln + 1) + ": " + path + ": " + msg);
    };
    if (lines.empty()) throw Error("solution document: missing objective line");
    SolutionDocument doc;
    const auto head = detail::split_ws(lines[0]);
    if (head.size() != 2 || head[0] != "objective") throw fail(0, "objective", "expected 'objective <real>'");
    const auto obj = parse_number(head[1]);
    if (!obj) throw fail(0, "objective", "expected a number");
    doc.objective = *obj;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        const std::size_t r = ln - 1;
        const std::string path = "routes[" + std::to_string(r) + "]";
        const auto tok = detail::split_ws(lines[ln]);
        if (tok.size() < 4 || tok[0] != "route" || tok[1] != std::to_string(r) + ":")
            throw fail(ln, path, "expected 'route " + std::to_string(r) + ": 0 ... 0'");
        if (tok[2] != "0" || tok.back() != "0") throw fail(ln, path, "route must start and end at depot 0");
        Route route;
        for (std::size_t k = 3; k + 1 < tok.size(); ++k) {
            const auto c = parse_integer(tok[k]);
            if (!c || *c <= 0 || *c > std::numeric_limits<int>::max())
                throw fail(ln, path + "[" + std::to_string(k - 3) + "]", "expected a customer index");
            route.push_back(static_cast<int>(*c));
        }
        if (route.empty()) throw fail(ln, path, "route is empty");
        doc.solution.routes.push_back(std::move(route));
    }
    return doc;
}

// ---------------------------------------------------------------------------
// Prediction document

inline std::string write_prediction(const std::string &instance_id, const EdgeSet &unstable) {
    std::ostringstream os;
    os << "instance " << instance_id << '\n';
    for (const auto &e : unstable) os << "unstable " << e.a << ' ' << e.b << '\n';
    return os.str();
}

/// Parses a prediction for `inst`; indices must name nodes of the instance.
inline EdgeSet read_prediction(std::string_view text, const Instance &inst) {
    const auto lines = detail::lines_of(text);
    if (lines.empty() || lines[0].rfind("instance ", 0) != 0)
        throw Error("prediction document line 1: header: expected 'instance <id>'");
    if (const std::string id = lines[0].substr(9); id != inst.id)
        throw Error("prediction document line 1: header: instance id '" + id + "' does not match '" + inst.id + "'");
    EdgeSet out;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        const auto tok = detail::split_ws(lines[ln]);
        const std::string where = "prediction document line " + std::to_string(ln + 1) + ": ";
        if (tok.size() != 3 || tok[0] != "unstable") throw Error(where + "expected 'unstable <i> <j>'");
        const auto i = parse_integer(tok[1]), j = parse_integer(tok[2]);
        if (!i || !j) throw Error(where + "expected integer node indices");
        if (*i < 0 || *j < 0 || *i >= inst.size() || *j >= inst.size())
            throw Error(where + "unknown node index");
        if (*i == *j) throw Error(where + "self loop");
        out.insert(static_cast<int>(*i), static_cast<int>(*j));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trace stream

/// Alternating delete/insert walk over one connected component of the edge
/// difference between consecutive solutions.
struct ArSequence {
    std::vector<int> nodes;   // walk; edge k joins nodes[k] and nodes[k+1]
    std::string stages;       // 'd' or 'i' per edge, starting with 'd'
    bool end_token = true;    // sequence terminated by the end marker
    double improvement = 0.0;
    friend bool operator==(const ArSequence &, const ArSequence &) = default;
};

/// kind "step": the solution pair of one improving iteration.
/// kind "subproblem": NAR labels and accepted AR sequences of one route pair.
struct TraceRecord {
    std::string kind;
    std::string instance_id;
    int iteration = 0;
    int subproblem_id = -1;
    std::pair<int, int> route_pair{-1, -1};
    std::vector<std::pair<int, int>> nar_labels;  // (node, label), ascending node
    std::vector<ArSequence> ar_sequences;
    double improvement = 0.0;
    Solution before;
    Solution after;
    friend bool operator==(const TraceRecord &, const TraceRecord &) = default;
};

inline nlohmann::json to_json(const TraceRecord &r) {
    using nlohmann::json;
    json j;
    j["kind"] = r.kind;
    j["instance_id"] = r.instance_id;
    j["iteration"] = r.iteration;
    j["improvement"] = r.improvement;
    if (r.kind == "step") {
        j["before"] = r.before.routes;
        j["after"] = r.after.routes;
    } else {
        j["subproblem_id"] = r.subproblem_id;
        j["route_pair"] = {r.route_pair.first, r.route_pair.second};
        json labels = json::array();
        for (const auto &[n, l] : r.nar_labels) labels.push_back({n, l});
        j["nar_labels"] = labels;
        json seqs = json::array();
        for (const auto &s : r.ar_sequences)
            seqs.push_back({{"nodes", s.nodes}, {"stages", s.stages}, {"end", s.end_token},
                            {"improvement", s.improvement}});
        j["ar_sequences"] = seqs;
    }
    return j;
}

inline std::string write_trace_record(const TraceRecord &r) { return to_json(r).dump() + '\n'; }

namespace detail {

inline const nlohmann::json &require(const nlohmann::json &j, const char *key, const std::string &path) {
    if (!j.is_object() || !j.contains(key)) throw Error(path + "." + key + ": missing");
    return j.at(key);
}

inline std::vector<Route> routes_from_json(const nlohmann::json &j, const std::string &path) {
    if (!j.is_array()) throw Error(path + ": expected an array of routes");
    std::vector<Route> routes;
    for (std::size_t r = 0; r < j.size(); ++r) {
        const auto &jr = j[r];
        const std::string p = path + "[" + std::to_string(r) + "]";
        if (!jr.is_array() || jr.empty()) throw Error(p + ": expected a nonempty array");
        Route route;
        for (const auto &c : jr) {
            if (!c.is_number_integer() || c.get<long long>() <= 0) throw Error(p + ": expected customer indices");
            route.push_back(c.get<int>());
        }
        routes.push_back(std::move(route));
    }
    return routes;
}

} // namespace detail

inline TraceRecord trace_record_from_json(const nlohmann::json &j, const std::string &path) {
    using detail::require;
    TraceRecord r;
    auto str = [&](const char *key) {
        const auto &v = require(j, key, path);
        if (!v.is_string()) throw Error(path + "." + key + ": expected a string");
        return v.get<std::string>();
    };
    auto integer = [&](const char *key) {
        const auto &v = require(j, key, path);
        if (!v.is_number_integer()) throw Error(path + "." + key + ": expected an integer");
        return v.get<int>();
    };
    r.kind = str("kind");
    r.instance_id = str("instance_id");
    r.iteration = integer("iteration");
    const auto &imp = require(j, "improvement", path);
    if (!imp.is_number()) throw Error(path + ".improvement: expected a number");
    r.improvement = imp.get<double>();
    if (r.kind == "step") {
        r.before.routes = detail::routes_from_json(require(j, "before", path), path + ".before");
        r.after.routes = detail::routes_from_json(require(j, "after", path), path + ".after");
        return r;
    }
    if (r.kind != "subproblem") throw Error(path + ".kind: expected 'step' or 'subproblem'");
    r.subproblem_id = integer("subproblem_id");
    const auto &rp = require(j, "route_pair", path);
    if (!rp.is_array() || rp.size() != 2 || !rp[0].is_number_integer() || !rp[1].is_number_integer())
        throw Error(path + ".route_pair: expected two integers");
    r.route_pair = {rp[0].get<int>(), rp[1].get<int>()};
    const auto &labels = require(j, "nar_labels", path);
    if (!labels.is_array()) throw Error(path + ".nar_labels: expected an array");
    for (std::size_t k = 0; k < labels.size(); ++k) {
        const auto &l = labels[k];
        const std::string p = path + ".nar_labels[" + std::to_string(k) + "]";
        if (!l.is_array() || l.size() != 2 || !l[0].is_number_integer() || !l[1].is_number_integer())
            throw Error(p + ": expected [node, label]");
        const int label = l[1].get<int>();
        if (label != 0 && label != 1) throw Error(p + ": label must be 0 or 1");
        r.nar_labels.emplace_back(l[0].get<int>(), label);
    }
    const auto &seqs = require(j, "ar_sequences", path);
    if (!seqs.is_array()) throw Error(path + ".ar_sequences: expected an array");
    for (std::size_t k = 0; k < seqs.size(); ++k) {
        const std::string p = path + ".ar_sequences[" + std::to_string(k) + "]";
        const auto &js = seqs[k];
        ArSequence s;
        const auto &nodes = require(js, "nodes", p);
        if (!nodes.is_array()) throw Error(p + ".nodes: expected an array");
        for (const auto &n : nodes) {
            if (!n.is_number_integer() || n.get<long long>() < 0) throw Error(p + ".nodes: expected node indices");
            s.nodes.push_back(n.get<int>());
        }
        const auto &stages = require(js, "stages", p);
        if (!stages.is_string()) throw Error(p + ".stages: expected a string");
        s.stages = stages.get<std::string>();
        if (s.stages.size() + 1 != s.nodes.size()) throw Error(p + ".stages: length must be nodes - 1");
        for (std::size_t t = 0; t < s.stages.size(); ++t)
            if (s.stages[t] != (t % 2 == 0 ? 'd' : 'i')) throw Error(p + ".stages: must alternate d,i from d");
        const auto &end = require(js, "end", p);
        if (!end.is_boolean()) throw Error(p + ".end: expected a boolean");
        s.end_token = end.get<bool>();
        const auto &si = require(js, "improvement", p);
        if (!si.is_number()) throw Error(p + ".improvement: expected a number");
        s.improvement = si.get<double>();
        r.ar_sequences.push_back(std::move(s));
    }
    return r;
}

inline std::vector<TraceRecord> read_trace_stream(std::istream &in) {
    std::vector<TraceRecord> out;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (detail::trim(line).empty()) continue;
        const std::string path = "trace line " + std::to_string(ln);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception &e) {
            throw Error(path + ": " + e.what());
        }
        out.push_back(trace_record_from_json(j, path));
    }
    return out;
}

inline std::vector<TraceRecord> read_trace_stream(std::string_view text) {
    std::istringstream in{std::string(text)};
    return read_trace_stream(in);
}

} // namespace fsta
