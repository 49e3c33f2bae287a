#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "brickdyn/translation_arcs.hpp"

using namespace brickdyn;

namespace {

PolyRegion box_region(double x0, double y0, double x1, double y1) {
    PolyRegion r;
    r.outer.closed = true;
    r.outer.pts = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    return r;
}

// Inward-contracting polyline spiral: radius 8*pi down to 2*pi over one full
// turn. Under z -> z/2 the second iterate touches it at (2*pi, 0).
PolyChain sample_spiral(int n = 4096) {
    PolyChain c;
    c.pts.reserve(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) / n;
        const double r = 8 * M_PI - 6 * M_PI * t;
        c.pts.push_back({r * std::cos(2 * M_PI * t), r * std::sin(2 * M_PI * t)});
    }
    return c;
}

PolyRegion annulus_sector(double deg_center, double deg_half, double r0, double r1,
                          int steps = 16) {
    PolyRegion r;
    r.outer.closed = true;
    const double a0 = (deg_center - deg_half) * M_PI / 180.0;
    const double a1 = (deg_center + deg_half) * M_PI / 180.0;
    for (int i = 0; i <= steps; ++i) {
        const double a = a0 + (a1 - a0) * i / steps;
        r.outer.pts.push_back({r1 * std::cos(a), r1 * std::sin(a)});
    }
    for (int i = steps; i >= 0; --i) {
        const double a = a0 + (a1 - a0) * i / steps;
        r.outer.pts.push_back({r0 * std::cos(a), r0 * std::sin(a)});
    }
    return r;
}

}  // namespace

TEST_CASE("freeness verdicts on regions") {
    const auto shift = map_translation(1.0, 0.0);

    SECTION("small box clears its image") {
        const auto v = is_free(shift, box_region(0, 0, 0.9, 0.9));
        REQUIRE(v.verdict == Freeness::Free);
        REQUIRE(v.margin > 0.05);
    }
    SECTION("wide box meets its image, witness lies in both") {
        const auto v = is_free(shift, box_region(0, 0, 2, 2));
        REQUIRE(v.verdict == Freeness::NotFree);
        REQUIRE(v.witness.has_value());
        const PolyRegion x = box_region(0, 0, 2, 2);
        REQUIRE(point_in_region(*v.witness, x, {}) != PointLocation::Outside);
        const Point2 pre{v.witness->x - 1.0, v.witness->y};
        REQUIRE(point_in_region(pre, x, {}) != PointLocation::Outside);
    }
    SECTION("disk off the origin is free under halving") {
        const auto half = map_contraction(0.5);
        const auto v = is_free(half, make_disk({1.0, 0.0}, 0.15));
        REQUIRE(v.verdict == Freeness::Free);
    }
    SECTION("disk around the fixed point is not") {
        const auto half = map_contraction(0.5);
        const auto v = is_free(half, make_disk({0.0, 0.0}, 0.5));
        REQUIRE(v.verdict == Freeness::NotFree);
    }
}

TEST_CASE("spiral chain: free once, touching twice") {
    const auto half = map_contraction(0.5);
    const PolyChain spiral = sample_spiral();

    const auto once = is_free(half, spiral);
    REQUIRE(once.verdict == Freeness::Free);
    REQUIRE(once.margin > 1.0);

    const auto twice = iterate_meets(half, spiral, 2);
    REQUIRE(twice.verdict == Freeness::NotFree);
    REQUIRE(twice.witness.has_value());
    REQUIRE(dist(*twice.witness, Point2{2 * M_PI, 0.0}) < 0.01);
}

TEST_CASE("translation arc construction") {
    SECTION("pure shift gives the unit segment") {
        const auto shift = map_translation(1.0, 0.0);
        const auto ta = build_translation_arc(shift, {0, 0}, make_disk({0, 0}, 2.0));
        REQUIRE(check_translation_arc(shift, ta).ok());
        REQUIRE(dist(ta.arc.pts.front(), Point2{0, 0}) < 1e-6);
        REQUIRE(dist(ta.arc.pts.back(), Point2{1, 0}) < 1e-6);
        for (const auto& p : ta.arc.pts) {
            REQUIRE(std::abs(p.y) < 1e-6);
            REQUIRE(p.x > -1e-6);
            REQUIRE(p.x < 1.0 + 1e-6);
        }
        REQUIRE(is_free(shift, ta.free_disk).verdict == Freeness::Free);
    }
    SECTION("contraction walks toward the fixed point") {
        const auto half = map_contraction(0.5);
        const auto ta = build_translation_arc(half, {1, 0}, make_disk({1, 0}, 1.0));
        REQUIRE(check_translation_arc(half, ta).ok());
        REQUIRE(dist(ta.arc.pts.front(), Point2{1, 0}) < 1e-6);
        REQUIRE(dist(ta.arc.pts.back(), Point2{0.5, 0}) < 1e-6);
    }
    SECTION("one third rotation") {
        const auto rot = map_rotation(2 * M_PI / 3);
        const auto ta = build_translation_arc(rot, {0.5, 0}, make_disk({0.5, 0}, 0.8));
        const auto ck = check_translation_arc(rot, ta);
        REQUIRE(ck.ok());
        REQUIRE_FALSE(ck.periodic_case);
        REQUIRE(dist(ta.arc.pts.back(), eval_map(rot, {0.5, 0})) < 1e-6);
    }
    SECTION("half turn: the two-periodic case routes around the pivot") {
        const auto rot = map_rotation(M_PI);
        const auto ta = build_translation_arc(rot, {1, 0}, make_disk({1, 0}, 1.5));
        const auto ck = check_translation_arc(rot, ta);
        REQUIRE(ck.ok());
        REQUIRE(ck.periodic_case);
        REQUIRE(dist(ta.arc.pts.back(), Point2{-1, 0}) < 1e-6);
        // the arc must clear the fixed point at the origin
        REQUIRE(point_chain_dist({0, 0}, ta.arc) > 0.1);
    }
    SECTION("fixed base point is rejected") {
        const auto half = map_contraction(0.5);
        REQUIRE_THROWS_AS(build_translation_arc(half, {0, 0}, make_disk({0, 0}, 1.0)),
                          NoFreeScale);
    }
}

TEST_CASE("iterate disjointness or a recurrence certificate") {
    // non-recurrent maps: the arc misses every further iterate
    SECTION("shift and contraction arcs clear iterates 2..5") {
        for (const auto& m : {map_translation(1.0, 0.0), map_contraction(0.5)}) {
            const Point2 z = m.name.rfind("translation", 0) == 0 ? Point2{0, 0} : Point2{1, 0};
            const auto ta = build_translation_arc(m, z, make_disk(z, 1.0));
            for (int k = 2; k <= 5; ++k) {
                const auto v = iterate_meets(m, ta.arc, k);
                INFO(m.name << " k=" << k);
                REQUIRE(v.verdict == Freeness::Free);
            }
            REQUIRE_FALSE(brouwer_recurrence_test(m, ta, 10).has_value());
        }
    }
    // a periodic rotation: every far iterate returns, and the recurrence
    // test certifies it with a free disk meeting its third image
    SECTION("one third rotation recurs at power three") {
        const auto rot = map_rotation(2 * M_PI / 3);
        const auto ta = build_translation_arc(rot, {0.5, 0}, make_disk({0.5, 0}, 0.8));
        bool any_hit = false;
        for (int k = 2; k <= 5; ++k)
            if (iterate_meets(rot, ta.arc, k).verdict == Freeness::NotFree) any_hit = true;
        REQUIRE(any_hit);
        const auto w = brouwer_recurrence_test(rot, ta, 5);
        REQUIRE(w.has_value());
        REQUIRE(w->power <= 3);
        REQUIRE(is_free(rot, w->disk).verdict == Freeness::Free);
        REQUIRE(iterate_meets(rot, w->disk, w->power).verdict == Freeness::NotFree);
    }
    SECTION("spiral candidate recurs at power two") {
        const auto half = map_contraction(0.5);
        TranslationArc cand;
        cand.arc = sample_spiral();
        cand.base = cand.arc.pts.front();
        const auto w = brouwer_recurrence_test(half, cand, 5);
        REQUIRE(w.has_value());
        REQUIRE(w->power == 2);
        REQUIRE(is_free(half, w->disk).verdict == Freeness::Free);
        REQUIRE(iterate_meets(half, w->disk, 2).verdict == Freeness::NotFree);
    }
}

TEST_CASE("free disk chains from overlapping free pieces") {
    const auto rot = map_rotation(2 * M_PI / 3);

    SECTION("single sector closing up at power three") {
        const PolyRegion sector = annulus_sector(0.0, 25.0, 0.5, 0.95);
        REQUIRE(is_free(rot, sector).verdict == Freeness::Free);
        const auto dc = chain_from_free_sets(rot, {sector}, {5});
        REQUIRE(dc.disks.size() == 1);
        REQUIRE(dc.powers == std::vector<int>{3});
        REQUIRE(verify_disk_chain(rot, dc).ok);
    }
    SECTION("three sectors stepping by one") {
        const std::vector<PolyRegion> sectors = {annulus_sector(0.0, 25.0, 0.5, 0.95),
                                                 annulus_sector(120.0, 25.0, 0.5, 0.95),
                                                 annulus_sector(240.0, 25.0, 0.5, 0.95)};
        const auto dc = chain_from_free_sets(rot, sectors, {2, 2, 2});
        REQUIRE(dc.disks.size() == 3);
        REQUIRE(dc.powers == std::vector<int>{1, 1, 1});
        const auto rep = verify_disk_chain(rot, dc);
        INFO((rep.issues.empty() ? "" : rep.issues.front()));
        REQUIRE(rep.ok);
    }
    SECTION("verification rejects a broken chain") {
        DiskChain bad;
        bad.disks = {make_disk({0.5, 0}, 0.05), make_disk({0.5, 0.02}, 0.05)};
        bad.powers = {1, 1};
        REQUIRE_FALSE(verify_disk_chain(rot, bad).ok);  // disks overlap
    }
}

TEST_CASE("arc ladders along an orbit") {
    SECTION("contraction ladder stitches thirteen arcs") {
        const auto half = map_contraction(0.5);
        Orbit o = make_orbit(half, {1, 0}, 7);
        o.omega = Point2{0, 0};
        const int K = 6;
        const auto lad = build_arc_ladder(half, o, K, {}, {{0, 0}});
        REQUIRE(lad.arcs.size() == 2 * K + 1);
        for (int k = -K; k <= K; ++k) {
            INFO("arc " << k);
            const auto& ta = lad.arc(k);
            REQUIRE(check_translation_arc(half, ta).ok());
            REQUIRE(dist(ta.arc.pts.front(), o.sample(k)) < 1e-6);
            REQUIRE(dist(ta.arc.pts.back(), o.sample(k + 1)) < 1e-6);
        }
        // forward stitching: each arc leaves along the previous image_beta
        for (int k = 1; k <= K; ++k) {
            const auto& ta = lad.arc(k);
            REQUIRE(ta.germ_len >= 4e-6);
            const double u = 0.5 * ta.germ_len / ta.delta.length();
            const Point2 probe = ta.delta.point_at(u);
            REQUIRE(point_chain_dist(probe, lad.arc(k - 1).image_beta) < 1e-9);
        }
        // backward stitching: each image_beta arrives along the next delta
        for (int k = -K; k <= -1; ++k) {
            const auto& ta = lad.arc(k);
            REQUIRE(ta.germ_len >= 4e-6);
            const double len = ta.image_beta.length();
            const double u = 1.0 - 0.5 * ta.germ_len / len;
            const Point2 probe = ta.image_beta.point_at(u);
            REQUIRE(point_chain_dist(probe, lad.arc(k + 1).delta) < 1e-5);
        }
    }
    SECTION("shift ladder") {
        const auto shift = map_translation(1.0, 0.0);
        const Orbit o = make_orbit(shift, {0, 0}, 5);
        const auto lad = build_arc_ladder(shift, o, 4);
        REQUIRE(lad.arcs.size() == 9);
        for (int k = -4; k <= 4; ++k) REQUIRE(check_translation_arc(shift, lad.arc(k)).ok());
    }
    SECTION("declared limits are checked against the samples") {
        const auto half = map_contraction(0.5);
        Orbit o = make_orbit(half, {1, 0}, 7);
        o.alpha = Point2{0, 0};  // wrong: the backward orbit diverges
        REQUIRE_THROWS_AS(build_arc_ladder(half, o, 6, {}, {{0, 0}}), ConvergenceNotObserved);
    }
    SECTION("truncation must cover the ladder") {
        const auto shift = map_translation(1.0, 0.0);
        const Orbit o = make_orbit(shift, {0, 0}, 3);
        REQUIRE_THROWS_AS(build_arc_ladder(shift, o, 3), GeometryError);
    }
}
