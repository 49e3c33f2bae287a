#include <catch2/catch_amalgamated.hpp>

#include "brickdyn/geometry.hpp"

using namespace brickdyn;

TEST_CASE("segment intersection, generic crossing") {
    auto hit = segment_intersection({0, 0}, {1, 0}, {0.5, -1}, {0.5, 1});
    REQUIRE(hit.has_value());
    CHECK(hit->point.x == Catch::Approx(0.5));
    CHECK(hit->point.y == Catch::Approx(0.0).margin(1e-12));
    CHECK(hit->ta == Catch::Approx(0.5));
    CHECK(hit->tb == Catch::Approx(0.5));
}

TEST_CASE("segment intersection, disjoint and touching") {
    CHECK_FALSE(segment_intersection({0, 0}, {1, 0}, {0, 1}, {1, 1}).has_value());
    // Endpoint touching counts.
    auto hit = segment_intersection({0, 0}, {1, 0}, {1, 0}, {2, 5});
    REQUIRE(hit.has_value());
    CHECK(hit->ta == Catch::Approx(1.0));
    CHECK(hit->tb == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("segment intersection, collinear overlap returns smallest param_a") {
    auto hit = segment_intersection({0, 0}, {2, 0}, {1, 0}, {3, 0});
    REQUIRE(hit.has_value());
    CHECK(hit->point.x == Catch::Approx(1.0));
    CHECK(hit->ta == Catch::Approx(0.5));
    // Reversed roles: overlap starts at a's origin.
    auto hit2 = segment_intersection({1, 0}, {3, 0}, {0, 0}, {2, 0});
    REQUIRE(hit2.has_value());
    CHECK(hit2->ta == Catch::Approx(0.0).margin(1e-12));
    CHECK(hit2->point.x == Catch::Approx(1.0));
}

TEST_CASE("segment intersection rejects zero-length input") {
    CHECK_THROWS_AS(segment_intersection({0, 0}, {0, 0}, {0, 1}, {1, 1}), DegenerateSegment);
}

TEST_CASE("segment distance") {
    CHECK(segment_segment_dist({0, 0}, {1, 0}, {0, 1}, {1, 1}) == Catch::Approx(1.0));
    CHECK(segment_segment_dist({0, 0}, {1, 1}, {1, 0}, {0, 1}) == Catch::Approx(0.0));
    double ta = -1, tb = -1;
    segment_segment_dist({0, 0}, {2, 0}, {1, 1}, {1, 3}, &ta, &tb);
    CHECK(ta == Catch::Approx(0.5));
    CHECK(tb == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("polychain parametrization and sub-chains") {
    PolyChain c;
    c.pts = {{0, 0}, {1, 0}, {1, 1}};
    CHECK(c.length() == Catch::Approx(2.0));
    Point2 mid = c.point_at(0.5);
    CHECK(mid.x == Catch::Approx(1.0));
    CHECK(mid.y == Catch::Approx(0.0).margin(1e-12));
    PolyChain s = c.sub_chain(0.25, 0.75);
    CHECK(s.length() == Catch::Approx(1.0));
    CHECK(s.pts.front().x == Catch::Approx(0.5));
    CHECK(s.pts.back().y == Catch::Approx(0.5));
}

TEST_CASE("chain closest and intersections") {
    PolyChain a, b;
    a.pts = {{0, 0}, {2, 0}};
    b.pts = {{1, -1}, {1, 1}};
    auto hits = chain_intersections(a, b);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].param_a == Catch::Approx(0.5));
    CHECK(hits[0].param_b == Catch::Approx(0.5));

    b.pts = {{0, 1}, {2, 1}};
    auto c = chain_closest(a, b);
    CHECK(c.distance == Catch::Approx(1.0));
    CHECK(chain_intersections(a, b).empty());
}

TEST_CASE("chain simplicity") {
    PolyChain fig8;
    fig8.pts = {{0, 0}, {2, 2}, {2, 0}, {0, 2}};
    CHECK_FALSE(chain_is_simple(fig8));
    PolyChain l;
    l.pts = {{0, 0}, {1, 0}, {1, 1}};
    CHECK(chain_is_simple(l));
}

TEST_CASE("point in region with holes") {
    PolyRegion annulus;
    annulus.outer = make_circle({0, 0}, 2.0, 64);
    annulus.holes.push_back(make_circle({0, 0}, 1.0, 64).reversed());
    CHECK(point_in_region({1.5, 0}, annulus) == PointLocation::Inside);
    CHECK(point_in_region({0, 0}, annulus) == PointLocation::Outside);
    CHECK(point_in_region({3, 0}, annulus) == PointLocation::Outside);
    CHECK(point_in_region({2.0, 0}, annulus, {1e-6}) == PointLocation::Boundary);
}

TEST_CASE("point in unit square") {
    PolyRegion sq = make_box({0, 0}, {1, 1});
    CHECK(point_in_region({0.5, 0.5}, sq) == PointLocation::Inside);
    CHECK(point_in_region({1.5, 0.5}, sq) == PointLocation::Outside);
    GeomTol t;
    CHECK(point_in_region({1.0 + 0.5 * t.eps, 0.5}, sq, t) == PointLocation::Boundary);
}

TEST_CASE("region intersection verdicts") {
    GeomTol tol;
    PolyRegion a = make_box({0, 0}, {1, 1});

    SECTION("overlap") {
        PolyRegion b = make_box({0.5, 0.5}, {1.5, 1.5});
        auto v = region_intersects(a, b, tol);
        REQUIRE(v.rel == Relation::Intersecting);
        REQUIRE(v.witness.has_value());
        CHECK(point_in_region(*v.witness, a, tol) != PointLocation::Outside);
        CHECK(point_in_region(*v.witness, b, tol) != PointLocation::Outside);
    }
    SECTION("containment") {
        PolyRegion b = make_box({0.25, 0.25}, {0.75, 0.75});
        CHECK(region_intersects(a, b, tol).rel == Relation::Intersecting);
        CHECK(region_intersects(b, a, tol).rel == Relation::Intersecting);
    }
    SECTION("hole containment is disjoint") {
        PolyRegion annulus;
        annulus.outer = make_circle({0.5, 0.5}, 5.0, 64);
        annulus.holes.push_back(make_circle({0.5, 0.5}, 2.0, 64).reversed());
        PolyRegion b = make_box({0.25, 0.25}, {0.75, 0.75});
        auto v = region_intersects(annulus, b, tol);
        CHECK(v.rel == Relation::Disjoint);
        CHECK(v.gap > tol.eps);
    }
    SECTION("near touch within eps is intersecting") {
        PolyRegion b = make_box({1.0 + 0.5 * tol.eps, 0}, {2, 1});
        CHECK(region_intersects(a, b, tol).rel == Relation::Intersecting);
    }
    SECTION("gap above eps is disjoint with certified gap") {
        PolyRegion b = make_box({1.0 + 2.0 * tol.eps, 0}, {2, 1});
        auto v = region_intersects(a, b, tol);
        CHECK(v.rel == Relation::Disjoint);
        CHECK(v.gap == Catch::Approx(2.0 * tol.eps).epsilon(0.05));
    }
}

TEST_CASE("region vs chain") {
    PolyRegion a = make_box({0, 0}, {1, 1});
    PolyChain c;
    c.pts = {{-1, 0.5}, {2, 0.5}};
    CHECK(region_chain_intersects(a, c).rel == Relation::Intersecting);
    c.pts = {{-1, 2}, {2, 2}};
    auto v = region_chain_intersects(a, c);
    CHECK(v.rel == Relation::Disjoint);
    CHECK(v.gap == Catch::Approx(1.0));
    // Chain fully inside.
    c.pts = {{0.2, 0.2}, {0.8, 0.8}};
    CHECK(region_chain_intersects(a, c).rel == Relation::Intersecting);
}

TEST_CASE("capsule construction") {
    PolyChain spine;
    spine.pts = {{0, 0}, {1, 0}, {1, 1}};
    PolyRegion cap = make_capsule(spine, 0.1);
    validate_region(cap);
    CHECK(point_in_region({0.5, 0.0}, cap) == PointLocation::Inside);
    CHECK(point_in_region({1.0, 0.5}, cap) == PointLocation::Inside);
    CHECK(point_in_region({0.5, 0.5}, cap) == PointLocation::Outside);
    // Area close to length * width plus caps.
    CHECK(area(cap) == Catch::Approx(2.0 * 0.1 * 2.0 + M_PI * 0.01).epsilon(0.1));
}

TEST_CASE("signed area and normalization") {
    PolyRegion sq = make_box({0, 0}, {2, 2});
    CHECK(signed_area(sq.outer) == Catch::Approx(4.0));
    PolyRegion flipped;
    flipped.outer = sq.outer.reversed();
    normalize_orientation(flipped);
    CHECK(signed_area(flipped.outer) == Catch::Approx(4.0));
}
