#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <set>

#include "brickdyn/brick_dynamics.hpp"

using namespace brickdyn;

namespace {

std::vector<PolyRegion> unit_squares(int x0, int x1, int y0, int y1) {
    std::vector<PolyRegion> cells;
    for (int x = x0; x < x1; ++x)
        for (int y = y0; y < y1; ++y)
            cells.push_back(make_box({static_cast<double>(x), static_cast<double>(y)},
                                     {static_cast<double>(x + 1), static_cast<double>(y + 1)}));
    return cells;
}

PolyRegion annulus(double r0, double r1, int n = 96) {
    PolyRegion a;
    a.outer = make_circle({0, 0}, r1, n);
    a.holes.push_back(make_circle({0, 0}, r0, n).reversed());
    return a;
}

// xorshift64; deterministic across platforms
struct Rng {
    std::uint64_t s;
    explicit Rng(std::uint64_t seed) : s(seed) {}
    std::uint64_t next() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        return s;
    }
    int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

}  // namespace

TEST_CASE("hexagonal complexes assemble and validate") {
    const BrickComplex c = hex_complex(make_box({-2, -2}, {2, 2}), {}, 0.4);
    REQUIRE(c.brick_count() > 10);
    const ValidationReport rep = validate_complex(c);
    CAPTURE(rep.issues);
    REQUIRE(rep.ok);
    CHECK(c.excluded.empty());

    // staircase window: brick areas add up to the window exactly
    double covered = 0.0;
    for (const auto& b : c.bricks) covered += area(b.region);
    CHECK(std::abs(covered - area(c.window)) < 1e-9 * covered);

    // every edge bounds one or two bricks and the back references agree
    for (std::size_t ei = 0; ei < c.edges.size(); ++ei) {
        const BrickEdge& e = c.edges[ei];
        REQUIRE(e.left >= 0);
        const auto& lst = c.bricks[static_cast<std::size_t>(e.left)].edges;
        CHECK(std::find(lst.begin(), lst.end(), static_cast<int>(ei)) != lst.end());
    }

    // annulus window: the inner disk becomes an excluded staircase pocket
    const BrickComplex ring = hex_complex(annulus(0.45, 1.0), {}, 0.1);
    REQUIRE(validate_complex(ring).ok);
    REQUIRE(ring.excluded.size() == 1);
    CHECK(area(ring.excluded.front()) > M_PI * 0.45 * 0.45);  // staircase over-covers the hole

    // exclusion disks drop cells the same way
    const BrickComplex punched =
        hex_complex(make_box({-2, -2}, {2, 2}), {make_disk({0, 0}, 0.3)}, 0.3);
    REQUIRE(validate_complex(punched).ok);
    REQUIRE(punched.excluded.size() == 1);
    for (const auto& b : punched.bricks)
        CHECK(region_gap(b.region, make_disk({0, 0}, 0.3)).distance > 0.0);
}

TEST_CASE("validation flags broken complexes") {
    // square grid: interior corners have four edges
    const BrickComplex grid = complex_from_cells(unit_squares(0, 3, 0, 3));
    const ValidationReport rep = validate_complex(grid);
    REQUIRE_FALSE(rep.ok);
    bool saw_valence = false;
    for (const auto& s : rep.issues) saw_valence |= s.find("valence 4") != std::string::npos;
    CHECK(saw_valence);

    // deleting one interior edge leaves two valence-2 vertices
    BrickComplex hexes = hex_complex(make_box({-2, -2}, {2, 2}), {}, 0.4);
    int victim = -1;
    for (std::size_t ei = 0; ei < hexes.edges.size(); ++ei) {
        const BrickEdge& e = hexes.edges[ei];
        if (e.right >= 0 && e.v0 >= 0) {
            victim = static_cast<int>(ei);
            break;
        }
    }
    REQUIRE(victim >= 0);
    hexes.edges.erase(hexes.edges.begin() + victim);
    for (auto& b : hexes.bricks) {
        std::vector<int> kept;
        for (int ei : b.edges) {
            if (ei == victim) continue;
            kept.push_back(ei > victim ? ei - 1 : ei);
        }
        b.edges = std::move(kept);
    }
    const ValidationReport broken = validate_complex(hexes);
    REQUIRE_FALSE(broken.ok);
    bool saw_two = false;
    for (const auto& s : broken.issues) saw_two |= s.find("valence 2") != std::string::npos;
    CHECK(saw_two);

    // tampered brick geometry breaks the tiling balance
    BrickComplex shrunk = hex_complex(make_box({-2, -2}, {2, 2}), {}, 0.4);
    shrunk.bricks[0].region = scale_region(shrunk.bricks[0].region, {0, 0}, 0.5);
    CHECK_FALSE(validate_complex(shrunk).ok);
}

TEST_CASE("cell soups with islands and bad inputs") {
    // a ring cell around a core: both interfaces are closed loop edges
    PolyRegion ring_cell;
    ring_cell.outer = make_box({0, 0}, {3, 3}).outer;
    ring_cell.holes.push_back(make_box({1, 1}, {2, 2}).outer.reversed());
    const PolyRegion core = make_box({1, 1}, {2, 2});
    const BrickComplex c = complex_from_cells({ring_cell, core});
    REQUIRE(c.brick_count() == 2);
    REQUIRE(c.edges.size() == 2);
    CHECK(c.vertices.empty());
    REQUIRE(validate_complex(c).ok);
    for (const auto& e : c.edges) CHECK(e.is_loop());

    // boundary tags: the ring's outer component is the window truncation
    const auto ring_parts = boundary_components(c, 0);
    REQUIRE(ring_parts.size() == 2);
    CHECK(ring_parts[0].kind == BoundaryKind::Line);
    CHECK(ring_parts[1].kind == BoundaryKind::Loop);
    const auto core_parts = boundary_components(c, 1);
    REQUIRE(core_parts.size() == 1);
    CHECK(core_parts[0].kind == BoundaryKind::Loop);
    CHECK_THROWS_AS(boundary_components(c, 7), UnknownBrickId);

    // overlapping cells and disconnected soups are rejected
    CHECK_THROWS_AS(complex_from_cells({make_box({0, 0}, {2, 1}), make_box({1, 0}, {3, 1})}),
                    InvalidRegion);
    CHECK_THROWS_AS(complex_from_cells({make_box({0, 0}, {1, 1}), make_box({5, 0}, {6, 1})}),
                    InvalidRegion);
}

TEST_CASE("complex serialization round trip") {
    const BrickComplex c =
        hex_complex(make_box({-1.5, -1.5}, {1.5, 1.5}), {make_disk({0.5, 0.5}, 0.2)}, 0.35);
    const std::string text = complex_to_text(c);
    const BrickComplex back = complex_from_text(text);
    CHECK(complex_to_text(back) == text);
    REQUIRE(back.brick_count() == c.brick_count());
    REQUIRE(back.edges.size() == c.edges.size());
    REQUIRE(back.vertices.size() == c.vertices.size());
    for (std::size_t i = 0; i < c.vertices.size(); ++i)
        CHECK(dist(back.vertices[i], c.vertices[i]) == 0.0);
    for (std::size_t i = 0; i < c.bricks.size(); ++i) {
        CHECK(back.bricks[i].atoms == c.bricks[i].atoms);
        CHECK(back.bricks[i].edges == c.bricks[i].edges);
        CHECK(area(back.bricks[i].region) == area(c.bricks[i].region));
    }
    CHECK(validate_complex(back).ok);

    CHECK_THROWS_AS(complex_from_text("brickcomplex 2\n"), GeometryError);
    CHECK_THROWS_AS(complex_from_text("brickcomplex 1\nvertices 4\n0 0\n"), GeometryError);
}

TEST_CASE("refinement splits bricks until free") {
    const PlaneMapSpec shift = map_translation(1.0, 0.0);

    // cells already below the displacement stay untouched
    const BrickComplex fine = hex_complex(make_box({-2, -2}, {2, 2}), {}, 0.4);
    const BrickComplex fine_out = free_refine(shift, fine);
    CHECK(fine_out.brick_count() == fine.brick_count());

    // one big hex gets cut down; every piece free, valid, inside the input
    const BrickComplex coarse = hex_complex(make_box({-5, -5}, {5, 5}), {}, 3.0);
    REQUIRE(coarse.brick_count() == 1);
    const BrickComplex refined = free_refine(shift, coarse);
    CAPTURE(validate_complex(refined).issues);
    REQUIRE(validate_complex(refined).ok);
    CHECK(refined.brick_count() > 10);
    double total = 0.0;
    for (const auto& b : refined.bricks) {
        CHECK(is_free(shift, b.region).verdict == Freeness::Free);
        for (Point2 p : b.region.outer.pts)
            CHECK(point_in_region(p, coarse.bricks[0].region) != PointLocation::Outside);
        total += area(b.region);
    }
    CHECK(std::abs(total - area(coarse.bricks[0].region)) < 1e-6);

    // a fixed point inside the window starves the splitter
    const PlaneMapSpec rot = map_rotation(2.0 * M_PI / 3.0);
    const BrickComplex around_origin = hex_complex(make_box({-1, -1}, {1, 1}), {}, 0.3);
    CHECK_THROWS_AS(free_refine(rot, around_origin), ResolutionFloor);
}

TEST_CASE("maximal free merging") {
    const PlaneMapSpec shift = map_translation(1.0, 0.0);
    const BrickComplex atoms = hex_complex(make_box({-2, -2}, {2, 2}), {}, 0.4);
    const BrickComplex merged = maximal_free(shift, atoms);
    CAPTURE(validate_complex(merged).issues);
    REQUIRE(validate_complex(merged).ok);
    CHECK(merged.brick_count() < atoms.brick_count());

    // outputs stay free; the atom ids partition the inputs
    std::set<int> seen;
    for (const auto& b : merged.bricks) {
        CHECK(is_free(shift, b.region).verdict == Freeness::Free);
        for (int a : b.atoms) {
            CHECK(seen.insert(a).second);
            REQUIRE(a >= 0);
            REQUIRE(a < atoms.brick_count());
        }
    }
    CHECK(static_cast<int>(seen.size()) == atoms.brick_count());

    // maximality: every adjacent union is certified not free
    for (auto [a, b] : merged.adjacent_pairs()) {
        const PolyRegion u =
            region_union_exact({merged.bricks[static_cast<std::size_t>(a)].region,
                                merged.bricks[static_cast<std::size_t>(b)].region});
        CHECK(is_free(shift, u).verdict == Freeness::NotFree);
    }

    // a far translation folds the whole window into one brick
    const BrickComplex all = hex_complex(make_box({0, 0}, {3, 3}), {}, 0.35);
    const BrickComplex one = maximal_free(map_translation(10.0, 0.0), all);
    REQUIRE(one.brick_count() == 1);
    CHECK(static_cast<int>(one.bricks[0].atoms.size()) == all.brick_count());
    CHECK(validate_complex(one).ok);
}

TEST_CASE("maximal free merging with pinned labels") {
    // Under a far translation everything merges into one brick; tagging two
    // atoms must keep them in distinct bricks while untagged cells still fold.
    const PlaneMapSpec far = map_translation(10.0, 0.0);
    const BrickComplex atoms = hex_complex(make_box({0, 0}, {3, 3}), {}, 0.35);
    REQUIRE(atoms.brick_count() >= 4);

    std::vector<int> labels(static_cast<std::size_t>(atoms.brick_count()), -1);
    labels[0] = 0;
    labels[static_cast<std::size_t>(atoms.brick_count() - 1)] = 1;
    const BrickComplex merged = maximal_free(far, atoms, {}, &labels);
    REQUIRE(merged.brick_count() == 2);
    CHECK(validate_complex(merged).ok);

    // each tagged atom landed in its own output brick
    int hold0 = -1, hold1 = -1;
    for (int i = 0; i < merged.brick_count(); ++i)
        for (int a : merged.bricks[static_cast<std::size_t>(i)].atoms) {
            if (a == 0) hold0 = i;
            if (a == atoms.brick_count() - 1) hold1 = i;
        }
    REQUIRE(hold0 >= 0);
    REQUIRE(hold1 >= 0);
    CHECK(hold0 != hold1);

    // size misuse is rejected
    std::vector<int> bad(3, -1);
    CHECK_THROWS_AS(maximal_free(far, atoms, {}, &bad), GeometryError);
}

TEST_CASE("digraph, phi, and the brick order") {
    const PlaneMapSpec m = map_translation(1.5, 0.0);
    const BrickComplex row = complex_from_cells(unit_squares(0, 4, 0, 1));
    const BrickDigraph d = build_digraph(m, row);
    REQUIRE(d.nodes == 4);
    CHECK(d.unknown_pairs.empty());
    CHECK(d.acyclic);

    // f([0,1]x[0,1]) = [1.5,2.5]x[0,1] reaches the second and third cells
    const std::set<std::pair<int, int>> want = {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}};
    CHECK(std::set<std::pair<int, int>>(d.arcs.begin(), d.arcs.end()) == want);

    CHECK(phi(d, {0}, PhiDirection::Plus) == std::vector<int>{1, 2});
    CHECK(phi(d, {2}, PhiDirection::Minus) == std::vector<int>{0, 1});
    CHECK_THROWS_AS(phi(d, {9}, PhiDirection::Plus), UnknownBrickId);

    // union law on every pair of singletons
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const auto fa = phi(d, {a}, PhiDirection::Plus);
            const auto fb = phi(d, {b}, PhiDirection::Plus);
            std::set<int> u(fa.begin(), fa.end());
            u.insert(fb.begin(), fb.end());
            CHECK(phi(d, {a, b}, PhiDirection::Plus) == std::vector<int>(u.begin(), u.end()));
        }

    CHECK(brick_leq(d, 0, 0));
    CHECK(brick_leq(d, 0, 3));
    CHECK_FALSE(brick_leq(d, 3, 0));
    CHECK_FALSE(brick_leq(d, 1, 0));
    CHECK_THROWS_AS(brick_leq(d, -1, 0), UnknownBrickId);

    // far translation: no arcs at all
    const BrickDigraph empty = build_digraph(map_translation(10.0, 0.0), row);
    CHECK(empty.arcs.empty());
    CHECK(empty.acyclic);

    // non-free bricks are rejected
    const BrickComplex slow = complex_from_cells(unit_squares(0, 4, 0, 1));
    CHECK_THROWS_AS(build_digraph(map_translation(0.5, 0.0), slow), GeometryError);
}

TEST_CASE("partial order properties on a merged decomposition") {
    const PlaneMapSpec shift = map_translation(1.0, 0.0);
    const BrickComplex merged =
        maximal_free(shift, hex_complex(make_box({-3, -3}, {3, 3}), {}, 0.4));
    const BrickDigraph d = build_digraph(shift, merged);
    REQUIRE(d.acyclic);
    const int n = d.nodes;
    REQUIRE(n >= 3);
    Rng rng(0x5eed5eedULL);
    for (int trial = 0; trial < 1000; ++trial) {
        const int a = rng.below(n), b = rng.below(n), c = rng.below(n);
        CHECK(brick_leq(d, a, a));
        if (brick_leq(d, a, b) && brick_leq(d, b, a)) CHECK(a == b);
        if (brick_leq(d, a, b) && brick_leq(d, b, c)) CHECK(brick_leq(d, a, c));
    }

    // adjacent bricks of a maximal decomposition are comparable
    for (auto [a, b] : merged.adjacent_pairs())
        CHECK((brick_leq(d, a, b) || brick_leq(d, b, a)));
}

TEST_CASE("closed chains certify recurrence") {
    const PlaneMapSpec rot = map_rotation(2.0 * M_PI / 3.0);
    const BrickComplex ring = hex_complex(annulus(0.45, 1.0), {}, 0.1);
    const BrickDigraph d = build_digraph(rot, ring);
    CHECK_FALSE(d.acyclic);
    CHECK_THROWS_AS(brick_leq(d, 0, 1), CyclicDigraph);

    const auto chain = find_closed_chain(rot, ring, d);
    REQUIRE(chain.has_value());
    REQUIRE(chain->bricks.size() >= 2);
    CHECK(chain->bricks.size() <= 3);
    REQUIRE(chain->powers.size() == chain->bricks.size());
    const int len = static_cast<int>(chain->bricks.size());
    for (int j = 0; j < len; ++j) {
        const int k = chain->powers[static_cast<std::size_t>(j)];
        REQUIRE(k >= 1);
        const auto& from = ring.brick_region(chain->bricks[static_cast<std::size_t>(j)]);
        const auto& to =
            ring.brick_region(chain->bricks[static_cast<std::size_t>((j + 1) % len)]);
        CHECK(iterate_pair_meets(rot, from, k, to).verdict == Freeness::NotFree);
        CHECK(is_free(rot, from).verdict == Freeness::Free);
    }

    // acyclic digraph: no chain
    const BrickComplex row = complex_from_cells(unit_squares(0, 4, 0, 1));
    const BrickDigraph dr = build_digraph(map_translation(1.5, 0.0), row);
    CHECK_FALSE(find_closed_chain(map_translation(1.5, 0.0), row, dr).has_value());

    // a fabricated cycle that geometry cannot certify exhausts the budget
    BrickDigraph fake;
    fake.nodes = 4;
    fake.arcs = {{0, 1}, {1, 0}};
    fake.out = {{1}, {0}, {}, {}};
    fake.in = {{1}, {0}, {}, {}};
    fake.acyclic = false;
    CHECK_THROWS_AS(find_closed_chain(map_translation(10.0, 0.0), row, fake, {}, 8),
                    PowerSearchBudgetExceeded);
}

TEST_CASE("edge orientation from the order") {
    const PlaneMapSpec shift = map_translation(1.0, 0.0);
    const BrickComplex merged =
        maximal_free(shift, hex_complex(make_box({-2, -2}, {2, 2}), {}, 0.4));
    const BrickDigraph d = build_digraph(shift, merged);
    const OrientedSkeleton sk = orient_edges(d, merged);

    int interior = 0;
    for (const auto& e : merged.edges) interior += e.right >= 0;
    CHECK(static_cast<int>(sk.oriented.size()) == interior);
    CHECK(sk.oriented.size() + sk.boundary_edges.size() == merged.edges.size());

    // each oriented edge is backed by the geometric one-step relation
    for (const auto& eo : sk.oriented) {
        const auto v = iterate_pair_meets(shift, merged.brick_region(eo.from_brick), 1,
                                          merged.brick_region(eo.to_brick));
        CHECK(v.verdict == Freeness::NotFree);
    }

    // unmerged free bricks are not maximal: some edge stays unoriented
    const BrickComplex atoms = hex_complex(make_box({-2, -2}, {2, 2}), {}, 0.4);
    const BrickDigraph da = build_digraph(shift, atoms);
    CHECK_THROWS_AS(orient_edges(da, atoms), OrientationConflict);

    // a 2-cycle between adjacent bricks cannot be oriented either
    const BrickComplex two = complex_from_cells(unit_squares(0, 2, 0, 1));
    BrickDigraph both;
    both.nodes = 2;
    both.arcs = {{0, 1}, {1, 0}};
    both.out = {{1}, {0}};
    both.in = {{1}, {0}};
    both.acyclic = false;
    CHECK_THROWS_AS(orient_edges(both, two), OrientationConflict);
}

TEST_CASE("regularity and order neighbourhoods") {
    const PlaneMapSpec shift = map_translation(1.0, 0.0);
    const BrickComplex merged =
        maximal_free(shift, hex_complex(make_box({-3, -3}, {3, 3}), {}, 0.4));
    const BrickDigraph d = build_digraph(shift, merged);

    int pos = 0, neg = 0;
    for (int b = 0; b < merged.brick_count(); ++b) {
        const RegularityVerdict v = classify_regularity(d, merged, b);
        pos += v.positively_regular;
        neg += v.negatively_regular;

        // positively regular bricks have a connected forward neighbourhood
        // unless the window truncates it
        if (v.positively_regular) {
            const UpsetConnectivity up = upset_connectivity(d, merged, b);
            CHECK(up.members.front() <= b);
            if (!up.touches_boundary) CHECK(up.connected);
        }
    }
    CHECK(pos > 0);
    CHECK(neg > 0);
    CHECK_THROWS_AS(classify_regularity(d, merged, merged.brick_count()), UnknownBrickId);
}
