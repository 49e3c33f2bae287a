#pragma once

// Planar brick complexes: a tiling of a polygonal window by closed polygonal
// bricks, glued along shared boundary segments, with the vertex/edge/brick
// tables derived from the cell polygons.
//
// The cell list is the authoritative input. The builder snaps ring points
// into a shared vertex pool, splits segments at points that other cells
// placed in their interior (so refined cells still match their coarser
// neighbours segment for segment), matches shared segments, and then walks
// out vertices, edges and boundary loops. Every derived brick ring is
// rewritten in pool coordinates; two bricks that touch therefore agree on
// their common boundary bitwise, which keeps later unions exact.
//
// Vertices of the skeleton are the points where the local picture is not a
// single arc: meeting points of three or more segments, plus the rare
// valence-2 points where the bounding brick pair changes. Valence-2 points
// inside an edge are dissolved into the edge polyline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "brickdyn/geometry.hpp"

namespace brickdyn {

struct UnknownBrickId : GeometryError {
    using GeometryError::GeometryError;
};

// ===================================================================== types

struct BrickEdge {
    // Endpoint vertex ids; both -1 for a closed loop edge (a brick boundary
    // component that meets no vertex, e.g. around an island brick).
    int v0 = -1;
    int v1 = -1;
    // Simple polyline from v0 to v1 in pool coordinates; closed for loops.
    PolyChain geom;
    // Bricks bounded by this edge. `left` lies left of the geom direction
    // and is always a valid brick; `right` is -1 on the window boundary.
    int left = -1;
    int right = -1;

    bool is_loop() const { return v0 < 0; }
    bool on_window_boundary() const { return right < 0; }
};

struct Brick {
    PolyRegion region;
    std::vector<int> edges;
    // Input cell ids this brick absorbed; singleton until bricks get merged.
    std::vector<int> atoms;
};

struct BrickComplex {
    std::vector<Point2> vertices;
    std::vector<BrickEdge> edges;
    std::vector<Brick> bricks;
    // Outer boundary of the union of bricks, and the excluded pockets inside
    // it (window holes and dropped exclusion neighbourhoods). Bricks tile
    // window minus excluded exactly.
    PolyRegion window;
    std::vector<PolyRegion> excluded;

    int brick_count() const { return static_cast<int>(bricks.size()); }

    const PolyRegion& brick_region(int b) const {
        if (b < 0 || b >= brick_count()) throw UnknownBrickId("brick id out of range");
        return bricks[static_cast<std::size_t>(b)].region;
    }

    // Distinct brick pairs sharing at least one edge, each pair once (a<b).
    std::vector<std::pair<int, int>> adjacent_pairs() const {
        std::set<std::pair<int, int>> s;
        for (const auto& e : edges)
            if (e.right >= 0) s.insert(std::minmax(e.left, e.right));
        return {s.begin(), s.end()};
    }
};

// ============================================================== vertex pool

namespace detail {

// Deduplicates points within a snap radius on a uniform hash grid. Lookups
// return the nearest existing point within snap, so interning is stable
// against the fp noise of corner coordinates computed per cell.
class VertexPool {
  public:
    explicit VertexPool(double snap) : snap_(snap) {}

    int intern(Point2 p) {
        const long long gx = cell_of(p.x), gy = cell_of(p.y);
        int best = -1;
        double best_d = snap_;
        for (long long dx = -1; dx <= 1; ++dx)
            for (long long dy = -1; dy <= 1; ++dy) {
                auto it = buckets_.find(key(gx + dx, gy + dy));
                if (it == buckets_.end()) continue;
                for (int id : it->second) {
                    const double d = dist(pts_[static_cast<std::size_t>(id)], p);
                    if (d < best_d || (d == best_d && (best < 0 || id < best))) {
                        best = id;
                        best_d = d;
                    }
                }
            }
        if (best >= 0) return best;
        const int id = static_cast<int>(pts_.size());
        pts_.push_back(p);
        buckets_[key(gx, gy)].push_back(id);
        return id;
    }

    Point2 at(int id) const { return pts_[static_cast<std::size_t>(id)]; }
    int size() const { return static_cast<int>(pts_.size()); }

  private:
    long long cell_of(double v) const {
        return static_cast<long long>(std::floor(v / (2.0 * snap_)));
    }
    static std::uint64_t key(long long x, long long y) {
        return (static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ull) ^
               static_cast<std::uint64_t>(y);
    }

    double snap_;
    std::vector<Point2> pts_;
    std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
};

}  // namespace detail

// ================================================================== builder

// Assembles a complex from closed polygonal cells that tile a region of the
// plane. Cells must have pairwise disjoint interiors and match along shared
// boundary pieces up to the snap radius (eps/16); a point one cell places in
// the interior of a neighbour's segment subdivides that segment. Throws
// InvalidRegion when the soup is not a manifold tiling (overlapping cells, a
// segment shared by three cells, a pinched or disconnected window).
inline BrickComplex complex_from_cells(const std::vector<PolyRegion>& cells_in,
                                       const GeomTol& tol = {}) {
    const int ncells = static_cast<int>(cells_in.size());
    if (ncells == 0) throw InvalidRegion("complex_from_cells: no cells");
    const double snap = tol.eps / 16.0;
    detail::VertexPool pool(snap);

    // ---- ring point interning, consecutive duplicates collapsed
    std::vector<std::vector<std::vector<int>>> rings(static_cast<std::size_t>(ncells));
    for (int ci = 0; ci < ncells; ++ci) {
        PolyRegion r = cells_in[static_cast<std::size_t>(ci)];
        normalize_orientation(r);
        try {
            validate_region(r, tol);
        } catch (const GeometryError& e) {
            throw InvalidRegion("complex_from_cells: cell " + std::to_string(ci) + ": " +
                                e.what());
        }
        auto intern_ring = [&](const PolyChain& ring) {
            std::vector<int> ids;
            for (Point2 p : ring.pts) {
                const int id = pool.intern(p);
                if (ids.empty() || ids.back() != id) ids.push_back(id);
            }
            while (ids.size() > 1 && ids.front() == ids.back()) ids.pop_back();
            if (ids.size() < 3)
                throw InvalidRegion("complex_from_cells: cell " + std::to_string(ci) +
                                    " degenerates under snapping");
            return ids;
        };
        rings[static_cast<std::size_t>(ci)].push_back(intern_ring(r.outer));
        for (const auto& h : r.holes) rings[static_cast<std::size_t>(ci)].push_back(intern_ring(h));
    }

    // ---- primitive directed segments, cell interior on the left
    struct Prim {
        int a, b, cell;
    };
    std::vector<Prim> prims;
    for (int ci = 0; ci < ncells; ++ci)
        for (const auto& ring : rings[static_cast<std::size_t>(ci)]) {
            const int n = static_cast<int>(ring.size());
            for (int i = 0; i < n; ++i)
                prims.push_back({ring[static_cast<std::size_t>(i)],
                                 ring[static_cast<std::size_t>((i + 1) % n)], ci});
        }

    // ---- subdivide segments at pool points lying in their interior
    std::vector<int> by_x(static_cast<std::size_t>(pool.size()));
    for (int i = 0; i < pool.size(); ++i) by_x[static_cast<std::size_t>(i)] = i;
    std::sort(by_x.begin(), by_x.end(), [&](int i, int j) {
        const Point2 p = pool.at(i), q = pool.at(j);
        if (p.x != q.x) return p.x < q.x;
        if (p.y != q.y) return p.y < q.y;
        return i < j;
    });
    std::vector<double> xs(by_x.size());
    for (std::size_t i = 0; i < by_x.size(); ++i) xs[i] = pool.at(by_x[i]).x;
    const double line_tol = 2.0 * snap;

    struct CellSeg {
        int a, b, cell;
    };
    std::vector<CellSeg> segs;
    for (const Prim& pr : prims) {
        const Point2 A = pool.at(pr.a), B = pool.at(pr.b);
        const double len = dist(A, B);
        std::vector<std::pair<double, int>> cuts;
        const double xlo = std::min(A.x, B.x) - line_tol, xhi = std::max(A.x, B.x) + line_tol;
        const double ylo = std::min(A.y, B.y) - line_tol, yhi = std::max(A.y, B.y) + line_tol;
        auto it0 = std::lower_bound(xs.begin(), xs.end(), xlo);
        auto it1 = std::upper_bound(xs.begin(), xs.end(), xhi);
        for (auto it = it0; it != it1; ++it) {
            const int id = by_x[static_cast<std::size_t>(it - xs.begin())];
            if (id == pr.a || id == pr.b) continue;
            const Point2 p = pool.at(id);
            if (p.y < ylo || p.y > yhi) continue;
            double t = 0.0;
            if (point_segment_dist(p, A, B, &t) > line_tol) continue;
            if (t * len <= snap || (1.0 - t) * len <= snap) continue;
            cuts.emplace_back(t, id);
        }
        std::sort(cuts.begin(), cuts.end());
        int prev = pr.a;
        for (const auto& [t, id] : cuts) {
            segs.push_back({prev, id, pr.cell});
            prev = id;
        }
        segs.push_back({prev, pr.b, pr.cell});
    }

    // ---- match shared segments
    struct SegUse {
        int cell;
        bool fwd;  // cell traverses the segment min->max
    };
    std::map<std::pair<int, int>, std::vector<SegUse>> use;
    for (const CellSeg& s : segs) {
        const auto key = std::minmax(s.a, s.b);
        use[key].push_back({s.cell, s.a < s.b});
    }
    struct USeg {
        int a, b;  // directed so that `left` lies on the left
        int left = -1, right = -1;
    };
    std::vector<USeg> usegs;
    usegs.reserve(use.size());
    for (const auto& [key, v] : use) {
        if (v.size() > 2)
            throw InvalidRegion("complex_from_cells: segment shared by " +
                                std::to_string(v.size()) + " cells");
        if (v.size() == 2 && v[0].fwd == v[1].fwd)
            throw InvalidRegion("complex_from_cells: cells " + std::to_string(v[0].cell) +
                                " and " + std::to_string(v[1].cell) + " overlap along a segment");
        USeg u;
        u.a = v[0].fwd ? key.first : key.second;
        u.b = v[0].fwd ? key.second : key.first;
        u.left = v[0].cell;
        if (v.size() == 2) u.right = v[1].cell;
        usegs.push_back(u);
    }
    const int nu = static_cast<int>(usegs.size());

    // ---- rebuild brick rings in pool coordinates (subdivided)
    std::vector<std::multimap<int, int>> succ(static_cast<std::size_t>(ncells));
    for (int si = 0; si < static_cast<int>(segs.size()); ++si)
        succ[static_cast<std::size_t>(segs[static_cast<std::size_t>(si)].cell)].insert(
            {segs[static_cast<std::size_t>(si)].a, si});
    std::vector<Brick> bricks(static_cast<std::size_t>(ncells));
    {
        std::vector<char> seg_used(segs.size(), 0);
        for (int si = 0; si < static_cast<int>(segs.size()); ++si) {
            if (seg_used[static_cast<std::size_t>(si)]) continue;
            const int ci = segs[static_cast<std::size_t>(si)].cell;
            PolyChain ring;
            ring.closed = true;
            int cur = si;
            int at = -1;
            do {
                seg_used[static_cast<std::size_t>(cur)] = 1;
                ring.pts.push_back(pool.at(segs[static_cast<std::size_t>(cur)].a));
                at = segs[static_cast<std::size_t>(cur)].b;
                int nxt = -1;
                auto [lo, hi] = succ[static_cast<std::size_t>(ci)].equal_range(at);
                for (auto it = lo; it != hi; ++it)
                    if (!seg_used[static_cast<std::size_t>(it->second)]) {
                        if (nxt >= 0)
                            throw InvalidRegion("complex_from_cells: cell " + std::to_string(ci) +
                                                " boundary touches itself");
                        nxt = it->second;
                    }
                cur = nxt;
            } while (cur >= 0);
            if (at != segs[static_cast<std::size_t>(si)].a)
                throw InvalidRegion("complex_from_cells: cell " + std::to_string(ci) +
                                    " boundary does not close");
            auto& brick = bricks[static_cast<std::size_t>(ci)];
            if (brick.region.outer.pts.empty() ||
                std::abs(signed_area(ring)) > std::abs(signed_area(brick.region.outer))) {
                if (!brick.region.outer.pts.empty()) brick.region.holes.push_back(brick.region.outer);
                brick.region.outer = ring;
            } else {
                brick.region.holes.push_back(ring);
            }
        }
        for (int ci = 0; ci < ncells; ++ci) {
            auto& b = bricks[static_cast<std::size_t>(ci)];
            if (b.region.outer.pts.size() < 3)
                throw InvalidRegion("complex_from_cells: cell " + std::to_string(ci) +
                                    " produced no boundary");
            normalize_orientation(b.region);
            b.atoms = {ci};
        }
    }

    // ---- vertex classification
    std::vector<std::vector<int>> at_pt(static_cast<std::size_t>(pool.size()));
    for (int ui = 0; ui < nu; ++ui) {
        at_pt[static_cast<std::size_t>(usegs[static_cast<std::size_t>(ui)].a)].push_back(ui);
        at_pt[static_cast<std::size_t>(usegs[static_cast<std::size_t>(ui)].b)].push_back(ui);
    }
    auto brick_pair = [&](int ui) {
        const USeg& u = usegs[static_cast<std::size_t>(ui)];
        return std::minmax(u.left, u.right);
    };
    std::vector<char> is_vertex(static_cast<std::size_t>(pool.size()), 0);
    for (int p = 0; p < pool.size(); ++p) {
        const auto& inc = at_pt[static_cast<std::size_t>(p)];
        if (inc.empty()) continue;
        if (inc.size() == 1)
            throw InvalidRegion("complex_from_cells: dangling segment endpoint");
        if (inc.size() != 2 || brick_pair(inc[0]) != brick_pair(inc[1]))
            is_vertex[static_cast<std::size_t>(p)] = 1;
    }
    std::vector<int> vertex_id(static_cast<std::size_t>(pool.size()), -1);
    std::vector<Point2> vertices;
    for (int p = 0; p < pool.size(); ++p)
        if (is_vertex[static_cast<std::size_t>(p)]) {
            vertex_id[static_cast<std::size_t>(p)] = static_cast<int>(vertices.size());
            vertices.push_back(pool.at(p));
        }

    // ---- walk edges: maximal same-pair chains through valence-2 points
    std::vector<BrickEdge> edges;
    std::vector<char> useg_used(static_cast<std::size_t>(nu), 0);
    auto emit_edge = [&](int start_pt, int ui, bool fwd, bool loop) {
        const int L = fwd ? usegs[static_cast<std::size_t>(ui)].left
                          : usegs[static_cast<std::size_t>(ui)].right;
        const int R = fwd ? usegs[static_cast<std::size_t>(ui)].right
                          : usegs[static_cast<std::size_t>(ui)].left;
        BrickEdge e;
        e.geom.pts.push_back(pool.at(start_pt));
        int cur = ui;
        bool curfwd = fwd;
        int at = start_pt;
        for (;;) {
            useg_used[static_cast<std::size_t>(cur)] = 1;
            const USeg& u = usegs[static_cast<std::size_t>(cur)];
            at = curfwd ? u.b : u.a;
            if (loop && at == start_pt) break;
            e.geom.pts.push_back(pool.at(at));
            if (!loop && is_vertex[static_cast<std::size_t>(at)]) break;
            const auto& inc = at_pt[static_cast<std::size_t>(at)];
            const int nxt = inc[0] == cur ? inc[1] : inc[0];
            curfwd = usegs[static_cast<std::size_t>(nxt)].a == at;
            cur = nxt;
        }
        e.left = L;
        e.right = R;
        if (loop) {
            e.geom.closed = true;
        } else {
            e.v0 = vertex_id[static_cast<std::size_t>(start_pt)];
            e.v1 = vertex_id[static_cast<std::size_t>(at)];
        }
        if (e.left < 0) {  // keep the bounding brick on the left
            std::swap(e.left, e.right);
            std::reverse(e.geom.pts.begin(), e.geom.pts.end());
            std::swap(e.v0, e.v1);
        }
        edges.push_back(std::move(e));
    };
    for (int p = 0; p < pool.size(); ++p) {
        if (!is_vertex[static_cast<std::size_t>(p)]) continue;
        for (int ui : at_pt[static_cast<std::size_t>(p)]) {
            if (useg_used[static_cast<std::size_t>(ui)]) continue;
            emit_edge(p, ui, usegs[static_cast<std::size_t>(ui)].a == p, false);
        }
    }
    for (int ui = 0; ui < nu; ++ui)
        if (!useg_used[static_cast<std::size_t>(ui)])
            emit_edge(usegs[static_cast<std::size_t>(ui)].a, ui, true, true);

    for (int ei = 0; ei < static_cast<int>(edges.size()); ++ei) {
        const BrickEdge& e = edges[static_cast<std::size_t>(ei)];
        bricks[static_cast<std::size_t>(e.left)].edges.push_back(ei);
        if (e.right >= 0) bricks[static_cast<std::size_t>(e.right)].edges.push_back(ei);
    }

    // ---- window and excluded pockets from the boundary edge loops
    BrickComplex out;
    {
        std::vector<int> bnd;
        for (int ei = 0; ei < static_cast<int>(edges.size()); ++ei)
            if (edges[static_cast<std::size_t>(ei)].right < 0) bnd.push_back(ei);
        // boundary edges leaving / entering each vertex
        std::map<int, std::pair<int, int>> depart;  // vertex -> (#out, edge id)
        std::map<int, int> out_count, in_count;
        for (int ei : bnd) {
            const BrickEdge& e = edges[static_cast<std::size_t>(ei)];
            if (e.is_loop()) continue;
            out_count[e.v0] += 1;
            in_count[e.v1] += 1;
            if (depart.find(e.v0) == depart.end())
                depart[e.v0] = {1, ei};
            else
                depart[e.v0].first += 1;
        }
        for (const auto& [v, c] : out_count) {
            (void)v;
            if (c != 1)
                throw InvalidRegion("complex_from_cells: window boundary pinches at a vertex");
        }
        for (const auto& [v, c] : in_count)
            if (c != 1 || out_count[v] != 1)
                throw InvalidRegion("complex_from_cells: window boundary pinches at a vertex");
        std::vector<char> bnd_used(edges.size(), 0);
        std::vector<PolyChain> loops;
        for (int ei : bnd) {
            if (bnd_used[static_cast<std::size_t>(ei)]) continue;
            PolyChain loop;
            loop.closed = true;
            int cur = ei;
            for (;;) {
                bnd_used[static_cast<std::size_t>(cur)] = 1;
                const BrickEdge& e = edges[static_cast<std::size_t>(cur)];
                if (e.is_loop()) {
                    loop.pts = e.geom.pts;
                    break;
                }
                loop.pts.insert(loop.pts.end(), e.geom.pts.begin(), e.geom.pts.end() - 1);
                const int nxt = depart.at(e.v1).second;
                if (nxt == ei) break;
                cur = nxt;
            }
            loops.push_back(std::move(loop));
        }
        int outer = -1;
        for (int li = 0; li < static_cast<int>(loops.size()); ++li) {
            if (signed_area(loops[static_cast<std::size_t>(li)]) <= 0.0) continue;
            if (outer >= 0)
                throw InvalidRegion("complex_from_cells: cells form a disconnected window");
            outer = li;
        }
        if (outer < 0) throw InvalidRegion("complex_from_cells: no outer boundary loop");
        out.window.outer = loops[static_cast<std::size_t>(outer)];
        for (int li = 0; li < static_cast<int>(loops.size()); ++li) {
            if (li == outer) continue;
            PolyRegion ex;
            ex.outer = loops[static_cast<std::size_t>(li)].reversed();
            out.excluded.push_back(std::move(ex));
        }
    }

    out.vertices = std::move(vertices);
    out.edges = std::move(edges);
    out.bricks = std::move(bricks);
    return out;
}

// Exact union of regions whose boundaries agree segment for segment, as the
// bricks of one complex do. Shared segments cancel in pairs; the remaining
// segments are walked into the union's outer ring and holes.
inline PolyRegion region_union_exact(const std::vector<PolyRegion>& parts) {
    if (parts.empty()) throw InvalidRegion("region_union_exact: no parts");
    using Key = std::pair<std::pair<double, double>, std::pair<double, double>>;
    auto key_of = [](Point2 a, Point2 b) {
        return Key{{a.x, a.y}, {b.x, b.y}};
    };
    std::map<Key, std::pair<Point2, Point2>> live;
    auto feed = [&](Point2 a, Point2 b) {
        const auto rev = key_of(b, a);
        auto it = live.find(rev);
        if (it != live.end()) {
            live.erase(it);
            return;
        }
        if (!live.emplace(key_of(a, b), std::make_pair(a, b)).second)
            throw InvalidRegion("region_union_exact: duplicated segment");
    };
    for (const auto& r : parts) {
        PolyRegion n = r;
        normalize_orientation(n);
        auto ring = [&](const PolyChain& c) {
            const std::size_t np = c.pts.size();
            for (std::size_t i = 0; i < np; ++i) feed(c.pts[i], c.pts[(i + 1) % np]);
        };
        ring(n.outer);
        for (const auto& h : n.holes) ring(h);
    }
    if (live.empty()) throw InvalidRegion("region_union_exact: union has empty boundary");
    std::map<std::pair<double, double>, std::vector<Key>> from;
    for (const auto& [k, seg] : live) {
        (void)seg;
        from[k.first].push_back(k);
    }
    std::set<Key> used;
    std::vector<PolyChain> loops;
    for (const auto& [k0, seg0] : live) {
        if (used.count(k0)) continue;
        PolyChain loop;
        loop.closed = true;
        Key cur = k0;
        Point2 start = seg0.first;
        for (;;) {
            used.insert(cur);
            const auto& [a, b] = live.at(cur);
            loop.pts.push_back(a);
            if (b == start) break;
            const auto& outs = from.at({b.x, b.y});
            Key nxt{};
            int found = 0;
            for (const Key& cand : outs)
                if (!used.count(cand)) {
                    nxt = cand;
                    ++found;
                }
            if (found != 1)
                throw InvalidRegion("region_union_exact: boundary pinches or is open");
            cur = nxt;
        }
        loops.push_back(std::move(loop));
    }
    PolyRegion out;
    int outer = -1;
    double best = 0.0;
    for (int li = 0; li < static_cast<int>(loops.size()); ++li) {
        const double a = std::abs(signed_area(loops[static_cast<std::size_t>(li)]));
        if (a > best) {
            best = a;
            outer = li;
        }
    }
    for (int li = 0; li < static_cast<int>(loops.size()); ++li) {
        if (li == outer)
            out.outer = loops[static_cast<std::size_t>(li)];
        else
            out.holes.push_back(loops[static_cast<std::size_t>(li)]);
    }
    normalize_orientation(out);
    return out;
}

// =============================================================== hex tiling

// Tiles the window with flat-top hexagons of circumradius `cell`, keeping
// the cells that lie strictly inside the window and clear of every exclusion
// region. The kept cells approximate the window from inside; the window and
// the exclusion pockets of the returned complex are the staircase boundaries
// of that cell set, so the tiling invariant holds exactly. Corner
// coordinates come from one shared integer lattice, so neighbouring cells
// agree bitwise.
inline BrickComplex hex_complex(const PolyRegion& window,
                                const std::vector<PolyRegion>& exclusions, double cell,
                                const GeomTol& tol = {}) {
    if (cell <= 16.0 * tol.eps)
        throw GeometryError("hex_complex: cell size is below the resolution floor");
    PolyRegion win = window;
    normalize_orientation(win);
    validate_region(win, tol);
    std::vector<PolyRegion> avoid;
    for (const auto& h : win.holes) {
        PolyRegion r;
        r.outer = h;
        normalize_orientation(r);
        avoid.push_back(std::move(r));
    }
    for (const auto& ex : exclusions) {
        PolyRegion r = ex;
        normalize_orientation(r);
        avoid.push_back(std::move(r));
    }

    const BBox bb = win.bbox();
    const double hx = 0.5 * cell;                      // corner x = hx * a
    const double hy = 0.8660254037844386 * cell;        // corner y = hy * b
    static const int da[6] = {2, 1, -1, -2, -1, 1};
    static const int db[6] = {0, 1, 1, 0, -1, -1};
    const int qlo = static_cast<int>(std::floor((bb.lo.x - cell) / (1.5 * cell))) - 1;
    const int qhi = static_cast<int>(std::ceil((bb.hi.x + cell) / (1.5 * cell))) + 1;

    std::vector<PolyRegion> cells;
    for (int q = qlo; q <= qhi; ++q) {
        const int blo = static_cast<int>(std::floor((bb.lo.y - cell) / hy)) - 1;
        const int bhi = static_cast<int>(std::ceil((bb.hi.y + cell) / hy)) + 1;
        // centre row index r solves 2r + q = b
        for (int b2 = blo; b2 <= bhi; ++b2) {
            if ((b2 - q) % 2 != 0) continue;
            PolyRegion hex;
            hex.outer.closed = true;
            bool inside = true;
            for (int k = 0; k < 6 && inside; ++k) {
                const Point2 p{hx * (3 * q + da[k]), hy * (b2 + db[k])};
                hex.outer.pts.push_back(p);
                if (point_in_region(p, win, tol) != PointLocation::Inside) inside = false;
            }
            if (!inside) continue;
            bool clear = true;
            for (const auto& av : avoid) {
                if (region_intersects(hex, av, tol).rel != Relation::Disjoint) {
                    clear = false;
                    break;
                }
            }
            if (clear) cells.push_back(std::move(hex));
        }
    }
    if (cells.empty()) throw GeometryError("hex_complex: window admits no cells at this size");
    return complex_from_cells(cells, tol);
}

// =============================================================== validation

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> issues;

    void fail(std::string s) {
        ok = false;
        issues.push_back(std::move(s));
    }
};

// Structural soundness: interior vertices trivalent, edges simple and
// anchored at their vertices, every edge bounding one or two bricks with
// consistent back references, and the bricks tiling window minus excluded
// (area defect below eps times the skeleton length).
inline ValidationReport validate_complex(const BrickComplex& c, const GeomTol& tol = {}) {
    ValidationReport rep;
    const int nv = static_cast<int>(c.vertices.size());
    const int ne = static_cast<int>(c.edges.size());
    const int nb = c.brick_count();

    double skeleton_len = 0.0;
    std::vector<int> valence(static_cast<std::size_t>(nv), 0);
    std::vector<char> on_boundary(static_cast<std::size_t>(nv), 0);
    for (int ei = 0; ei < ne; ++ei) {
        const BrickEdge& e = c.edges[static_cast<std::size_t>(ei)];
        const std::string tag = "edge " + std::to_string(ei);
        if (e.left < 0 || e.left >= nb || e.right < -1 || e.right >= nb || e.right == e.left) {
            rep.fail(tag + ": bad brick references");
            continue;
        }
        if (e.geom.pts.size() < 2) {
            rep.fail(tag + ": empty geometry");
            continue;
        }
        skeleton_len += e.geom.length();
        if (!chain_is_simple(e.geom, tol)) rep.fail(tag + ": geometry is not simple");
        if (e.is_loop()) {
            if (!e.geom.closed || e.v1 >= 0) rep.fail(tag + ": malformed loop edge");
        } else {
            if (e.v0 < 0 || e.v0 >= nv || e.v1 < 0 || e.v1 >= nv) {
                rep.fail(tag + ": vertex ids out of range");
                continue;
            }
            if (dist(e.geom.pts.front(), c.vertices[static_cast<std::size_t>(e.v0)]) > tol.eps)
                rep.fail(tag + ": geometry does not start at vertex " + std::to_string(e.v0));
            if (dist(e.geom.pts.back(), c.vertices[static_cast<std::size_t>(e.v1)]) > tol.eps)
                rep.fail(tag + ": geometry does not end at vertex " + std::to_string(e.v1));
            valence[static_cast<std::size_t>(e.v0)] += 1;
            valence[static_cast<std::size_t>(e.v1)] += 1;
            if (e.on_window_boundary()) {
                on_boundary[static_cast<std::size_t>(e.v0)] = 1;
                on_boundary[static_cast<std::size_t>(e.v1)] = 1;
            }
        }
        auto backref = [&](int b) {
            const auto& lst = c.bricks[static_cast<std::size_t>(b)].edges;
            if (std::find(lst.begin(), lst.end(), ei) == lst.end())
                rep.fail(tag + ": brick " + std::to_string(b) + " does not list it");
        };
        backref(e.left);
        if (e.right >= 0) backref(e.right);
    }

    for (int v = 0; v < nv; ++v) {
        if (valence[static_cast<std::size_t>(v)] == 0) {
            rep.fail("vertex " + std::to_string(v) + ": orphaned");
            continue;
        }
        if (!on_boundary[static_cast<std::size_t>(v)] && valence[static_cast<std::size_t>(v)] != 3)
            rep.fail("vertex " + std::to_string(v) + ": interior valence " +
                     std::to_string(valence[static_cast<std::size_t>(v)]) + ", want 3");
    }

    double brick_area = 0.0;
    for (int b = 0; b < nb; ++b) {
        const Brick& br = c.bricks[static_cast<std::size_t>(b)];
        const std::string tag = "brick " + std::to_string(b);
        try {
            validate_region(br.region, tol);
        } catch (const GeometryError& e) {
            rep.fail(tag + ": " + e.what());
        }
        brick_area += area(br.region);
        for (int ei : br.edges) {
            if (ei < 0 || ei >= ne) {
                rep.fail(tag + ": edge id out of range");
                continue;
            }
            const BrickEdge& e = c.edges[static_cast<std::size_t>(ei)];
            if (e.left != b && e.right != b)
                rep.fail(tag + ": lists edge " + std::to_string(ei) + " it does not bound");
        }
    }

    try {
        validate_region(c.window, tol);
    } catch (const GeometryError& e) {
        rep.fail(std::string("window: ") + e.what());
    }
    double want = area(c.window);
    for (const auto& ex : c.excluded) {
        try {
            validate_region(ex, tol);
        } catch (const GeometryError& e) {
            rep.fail(std::string("excluded region: ") + e.what());
        }
        want -= area(ex);
    }
    const double budget = tol.eps * std::max(1.0, skeleton_len);
    if (std::abs(brick_area - want) > budget)
        rep.fail("tiling defect " + std::to_string(std::abs(brick_area - want)) +
                 " exceeds eps*skeleton " + std::to_string(budget));
    return rep;
}

// ====================================================== boundary components

enum class BoundaryKind {
    Loop,  // closed curve in the interior of the window
    Line,  // truncated component: runs along the window boundary
};

struct BoundaryComponent {
    PolyChain chain;
    BoundaryKind kind = BoundaryKind::Loop;
};

// Boundary components of one brick, one per region ring; a ring that carries
// a window-boundary edge is the truncation of an unbounded component and is
// tagged Line.
inline std::vector<BoundaryComponent> boundary_components(const BrickComplex& c, int b) {
    if (b < 0 || b >= c.brick_count())
        throw UnknownBrickId("boundary_components: brick id out of range");
    const Brick& br = c.bricks[static_cast<std::size_t>(b)];
    std::vector<BoundaryComponent> out;
    out.push_back({br.region.outer, BoundaryKind::Loop});
    for (const auto& h : br.region.holes) out.push_back({h, BoundaryKind::Loop});
    for (int ei : br.edges) {
        const BrickEdge& e = c.edges[static_cast<std::size_t>(ei)];
        if (!e.on_window_boundary()) continue;
        const Point2 probe = e.geom.point_at(0.5);
        double best = std::numeric_limits<double>::max();
        int best_ring = -1;
        for (int ri = 0; ri < static_cast<int>(out.size()); ++ri) {
            const double d = point_chain_dist(probe, out[static_cast<std::size_t>(ri)].chain);
            if (d < best) {
                best = d;
                best_ring = ri;
            }
        }
        if (best_ring >= 0) out[static_cast<std::size_t>(best_ring)].kind = BoundaryKind::Line;
    }
    return out;
}

// ============================================================ serialization

// Plain text, whitespace separated, doubles at full precision:
//
//   brickcomplex 1
//   vertices <n>        followed by n lines "x y"
//   edges <n>           followed by n lines "v0 v1 left right closed npts x y ..."
//   bricks <n>          followed per brick by
//                         atoms <k> ids..., edges <k> ids..., rings <k>,
//                         then k lines "npts x y ..." (outer ring first)
//   window              one ring line
//   excluded <n>        n ring lines
inline void write_complex(std::ostream& os, const BrickComplex& c) {
    os << std::setprecision(17);
    auto ring = [&](const PolyChain& ch) {
        os << ch.pts.size();
        for (Point2 p : ch.pts) os << ' ' << p.x << ' ' << p.y;
        os << '\n';
    };
    os << "brickcomplex 1\n";
    os << "vertices " << c.vertices.size() << '\n';
    for (Point2 p : c.vertices) os << p.x << ' ' << p.y << '\n';
    os << "edges " << c.edges.size() << '\n';
    for (const auto& e : c.edges) {
        os << e.v0 << ' ' << e.v1 << ' ' << e.left << ' ' << e.right << ' '
           << (e.geom.closed ? 1 : 0) << ' ';
        ring(e.geom);
    }
    os << "bricks " << c.bricks.size() << '\n';
    for (const auto& b : c.bricks) {
        os << "atoms " << b.atoms.size();
        for (int a : b.atoms) os << ' ' << a;
        os << "\nedges " << b.edges.size();
        for (int e : b.edges) os << ' ' << e;
        os << "\nrings " << 1 + b.region.holes.size() << '\n';
        ring(b.region.outer);
        for (const auto& h : b.region.holes) ring(h);
    }
    os << "window\n";
    ring(c.window.outer);
    os << "excluded " << c.excluded.size() << '\n';
    for (const auto& ex : c.excluded) ring(ex.outer);
}

inline BrickComplex read_complex(std::istream& is) {
    auto expect = [&](const char* word) {
        std::string tok;
        if (!(is >> tok) || tok != word)
            throw GeometryError(std::string("read_complex: expected '") + word + "', got '" +
                                tok + "'");
    };
    auto read_int = [&]() {
        long long v;
        if (!(is >> v)) throw GeometryError("read_complex: truncated input (int)");
        return static_cast<int>(v);
    };
    auto read_double = [&]() {
        double v;
        if (!(is >> v)) throw GeometryError("read_complex: truncated input (double)");
        return v;
    };
    auto read_ring = [&](bool closed) {
        PolyChain ch;
        ch.closed = closed;
        const int n = read_int();
        if (n < 0 || n > 100000000) throw GeometryError("read_complex: bad ring size");
        ch.pts.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double x = read_double();
            const double y = read_double();
            ch.pts.push_back({x, y});
        }
        return ch;
    };

    BrickComplex c;
    expect("brickcomplex");
    if (read_int() != 1) throw GeometryError("read_complex: unsupported version");
    expect("vertices");
    const int nv = read_int();
    for (int i = 0; i < nv; ++i) {
        const double x = read_double();
        const double y = read_double();
        c.vertices.push_back({x, y});
    }
    expect("edges");
    const int ne = read_int();
    for (int i = 0; i < ne; ++i) {
        BrickEdge e;
        e.v0 = read_int();
        e.v1 = read_int();
        e.left = read_int();
        e.right = read_int();
        const bool closed = read_int() != 0;
        e.geom = read_ring(closed);
        c.edges.push_back(std::move(e));
    }
    expect("bricks");
    const int nb = read_int();
    for (int i = 0; i < nb; ++i) {
        Brick b;
        expect("atoms");
        const int na = read_int();
        for (int k = 0; k < na; ++k) b.atoms.push_back(read_int());
        expect("edges");
        const int nbe = read_int();
        for (int k = 0; k < nbe; ++k) b.edges.push_back(read_int());
        expect("rings");
        const int nr = read_int();
        if (nr < 1) throw GeometryError("read_complex: brick without rings");
        b.region.outer = read_ring(true);
        for (int k = 1; k < nr; ++k) b.region.holes.push_back(read_ring(true));
        c.bricks.push_back(std::move(b));
    }
    expect("window");
    c.window.outer = read_ring(true);
    expect("excluded");
    const int nx = read_int();
    for (int i = 0; i < nx; ++i) {
        PolyRegion ex;
        ex.outer = read_ring(true);
        c.excluded.push_back(std::move(ex));
    }
    return c;
}

inline std::string complex_to_text(const BrickComplex& c) {
    std::ostringstream os;
    write_complex(os, c);
    return os.str();
}

inline BrickComplex complex_from_text(const std::string& text) {
    std::istringstream is(text);
    return read_complex(is);
}

}  // namespace brickdyn
