#include <catch2/catch_amalgamated.hpp>

#include "brickdyn/fixed_point_index.hpp"
#include "brickdyn/plane_map.hpp"

using namespace brickdyn;

TEST_CASE("affine and rotation evaluate with exact inverses") {
    auto rot = map_rotation(M_PI / 3);
    Point2 p{0.3, -0.2};
    Point2 q = eval_map(rot, p);
    CHECK(dist(eval_inverse(rot, q), p) < 1e-14);
    CHECK(norm(q) == Catch::Approx(norm(p)));

    auto half = map_contraction(0.5);
    CHECK(eval_map(half, {1, 0}).x == Catch::Approx(0.5));
    CHECK(eval_iterate(half, {1, 0}, 3).x == Catch::Approx(0.125));
    CHECK(eval_iterate(half, {1, 0}, -2).x == Catch::Approx(4.0));
}

TEST_CASE("mobius disk automorphism") {
    auto m = map_mobius_disk(cpx{0.3, 0.1}, 0.7);
    Point2 p{0.5, 0.2};
    Point2 q = eval_map(m, p);
    CHECK(norm(q) < 1.0);
    CHECK(dist(eval_inverse(m, q), p) < 1e-12);
    CHECK_THROWS_AS(eval_map(m, {1.2, 0}), DomainEscape);
}

TEST_CASE("flow map matches the exact linear solution") {
    // z' = c z has time-1 map z -> e^c z.
    const cpx c{-0.4, 0.9};
    PolyField f;
    f.terms = {{c, 1, 0}};
    auto m = map_flow(f, 1.0, MapDomain::Plane, "linear_flow");
    const cpx z0{0.4, -0.3};
    const cpx expect = std::exp(c) * z0;
    CHECK(std::abs(to_cpx(eval_map(m, to_point(z0))) - expect) < 1e-10);
    CHECK(dist(eval_inverse(m, eval_map(m, to_point(z0))), to_point(z0)) < 1e-10);
    CHECK(m.approx_error < 1e-8);
    CHECK(m.lipschitz >= std::abs(std::exp(c)) * 0.9);
}

TEST_CASE("core twist rotates the core and fixes the far field") {
    auto tw = map_core_twist(M_PI, 0.25, 0.45);
    Point2 inner{0.1, 0.0};
    Point2 outer{0.7, 0.0};
    CHECK(dist(eval_map(tw, inner), Point2{-0.1, 0.0}) < 1e-12);
    CHECK(dist(eval_map(tw, outer), outer) < 1e-12);
    CHECK(dist(eval_inverse(tw, eval_map(tw, {0.3, 0.1})), {0.3, 0.1}) < 1e-12);
}

TEST_CASE("composition applies left factor first") {
    auto m = map_compose(map_translation(1, 0), map_contraction(0.5));
    CHECK(eval_map(m, {0, 0}).x == Catch::Approx(0.5));
    CHECK(dist(eval_inverse(m, eval_map(m, {0.2, 0.7})), {0.2, 0.7}) < 1e-12);
}

TEST_CASE("orbit sampling") {
    auto half = map_contraction(0.5);
    Orbit o = make_orbit(half, {1, 0}, 6);
    CHECK(o.samples.size() == 13);
    CHECK(o.sample(0).x == Catch::Approx(1.0));
    CHECK(o.sample(6).x == Catch::Approx(1.0 / 64.0));
    CHECK(o.sample(-6).x == Catch::Approx(64.0));
}

TEST_CASE("image of a chain under a nonlinear map tracks dense sampling") {
    auto m = map_mobius_disk(cpx{0.4, 0.0}, 0.0);
    PolyChain seg;
    seg.pts = {{-0.6, 0.3}, {0.6, 0.3}};  // a chord of the disk
    GeomTol tol;
    ImageChain img = image_polychain(m, seg, tol);
    REQUIRE(img.chain.pts.size() > 2);  // refinement happened

    // Oracle: dense forward samples must all be near the approximating chain.
    double worst = 0.0;
    for (int i = 0; i <= 100000; ++i) {
        Point2 p = lerp(seg.pts[0], seg.pts[1], i / 100000.0);
        worst = std::max(worst, point_chain_dist(eval_map(m, p), img.chain));
    }
    CHECK(worst <= tol.eps);
    CHECK(img.err_bound <= 4.0 * tol.eps);
}

TEST_CASE("image of a closed chain stays closed and simple") {
    auto m = map_mobius_disk(cpx{0.2, 0.3}, 1.1);
    PolyChain circle = make_circle({0, 0}, 0.5, 24);
    ImageChain img = image_polychain(m, circle, {});
    CHECK(img.chain.closed);
    CHECK(chain_is_simple(img.chain));
}

TEST_CASE("orientation check accepts rotations, rejects reflections") {
    BBox w;
    w.add({-1, -1});
    w.add({1, 1});
    CHECK(check_orientation(map_rotation(0.7), w));
    PlaneMapSpec refl;
    refl.name = "conj";
    refl.forward = [](Point2 p) { return Point2{p.x, -p.y}; };
    refl.inverse = refl.forward;
    CHECK_FALSE(check_orientation(refl, w));
}

TEST_CASE("fixed point location") {
    BBox w;
    w.add({-2, -2});
    w.add({2, 2});
    SECTION("contraction has the origin") {
        auto fps = locate_fixed_points(map_contraction(0.5), w, 24);
        REQUIRE(fps.size() == 1);
        CHECK(norm(fps[0].location) < 1e-9);
        CHECK(fps[0].residual < 1e-8);
        CHECK(fps[0].index_value == 1);
    }
    SECTION("translation has none") {
        CHECK(locate_fixed_points(map_translation(1, 0), w, 24).empty());
    }
    SECTION("mobius rotation about a displaced center") {
        // Conjugate rotation: fixed point where (z - a)/(1 - conj(a) z) = z.
        auto m = map_mobius_disk(cpx{0.0, 0.0}, M_PI / 2);
        BBox dw;
        dw.add({-0.9, -0.9});
        dw.add({0.9, 0.9});
        auto fps = locate_fixed_points(m, dw, 24);
        REQUIRE(fps.size() == 1);
        CHECK(norm(fps[0].location) < 1e-9);
        CHECK(fps[0].index_value == 1);
    }
}

// ------------------------------------------------------------- index suite

namespace {
int brute_index(const PlaneMapSpec& m, const PolyChain& loop, int n) {
    double total = 0.0;
    double prev = 0.0;
    bool have = false;
    double first = 0.0;
    for (int i = 0; i <= n; ++i) {
        Point2 p = loop.point_at(static_cast<double>(i % n) / n);
        Point2 d = eval_map(m, p) - p;
        double a = std::atan2(d.y, d.x);
        if (have) {
            double step = a - prev;
            while (step > M_PI) step -= 2 * M_PI;
            while (step < -M_PI) step += 2 * M_PI;
            total += step;
        } else {
            first = a;
            have = true;
        }
        prev = a;
    }
    (void)first;
    return static_cast<int>(std::lround(total / (2 * M_PI)));
}
}  // namespace

TEST_CASE("loop index on reference maps") {
    PolyChain circle = make_circle({0, 0}, 0.5, 64);

    SECTION("translation gives zero") {
        auto m = map_translation(1, 0);
        auto r = loop_index(m, circle);
        CHECK(r.value == 0);
        CHECK(r.value == brute_index(m, circle, 20000));
        CHECK(r.min_displacement == Catch::Approx(1.0));
    }
    SECTION("contraction toward the origin gives one") {
        auto m = map_contraction(0.5);
        auto r = loop_index(m, circle);
        CHECK(r.value == 1);
        CHECK(r.value == brute_index(m, circle, 20000));
    }
    SECTION("half-turn rotation gives one") {
        auto m = map_rotation(M_PI);
        auto r = loop_index(m, circle);
        CHECK(r.value == 1);
        CHECK(r.value == brute_index(m, circle, 20000));
    }
    SECTION("quadratic displacement winds twice") {
        PlaneMapSpec m;
        m.name = "z+z^2";
        m.forward = [](Point2 p) {
            const cpx z = to_cpx(p);
            return to_point(z + z * z);
        };
        m.inverse = m.forward;  // not used by the index
        PolyChain unit = make_circle({0, 0}, 1.0, 64);
        auto r = loop_index(m, unit);
        CHECK(r.value == 2);
        CHECK(r.value == brute_index(m, unit, 20000));
    }
    SECTION("loop through a fixed point is rejected") {
        PolyChain through;
        through.closed = true;
        through.pts = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
        CHECK_THROWS_AS(loop_index(map_contraction(0.5), through), FixedPointOnLoop);
    }
    SECTION("square loop far from the fixed point still gives one") {
        PolyChain sq;
        sq.closed = true;
        sq.pts = {{-2, -2}, {2, -2}, {2, 2}, {-2, 2}};
        CHECK(loop_index(map_contraction(0.5), sq).value == 1);
    }
}
