#pragma once

// Dynamics on a brick complex: freeness refinement, maximal free merging,
// the brick digraph with the induced one-step operators and order, closed
// chains, regularity, and the edge orientation the order induces.
//
// Everything is driven by one relation table: for bricks i, j the certified
// tri-state verdict of "f(brick_i) meets brick_j". The image of every brick
// is built once; a pair is Disjoint only when the measured gap clears the
// image error envelope, Intersecting only when it undercuts it. Merging
// exploits that freeness of a union decomposes over the table: a union of
// atoms is free exactly when every ordered atom pair is Disjoint, so the
// greedy merge never re-runs geometry.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "brickdyn/brick_complex.hpp"
#include "brickdyn/plane_map.hpp"
#include "brickdyn/translation_arcs.hpp"

namespace brickdyn {

struct ResolutionFloor : GeometryError {
    using GeometryError::GeometryError;
};
struct MergeDeadlock : GeometryError {
    using GeometryError::GeometryError;
};
struct UnresolvedAdjacentPair : GeometryError {
    using GeometryError::GeometryError;
};
struct CyclicDigraph : GeometryError {
    using GeometryError::GeometryError;
};
struct OrientationConflict : GeometryError {
    using GeometryError::GeometryError;
};
struct PowerSearchBudgetExceeded : GeometryError {
    using GeometryError::GeometryError;
};

// =========================================================== relation table

namespace detail {

// rel[i*n+j] answers "does f(cell_i) meet cell_j". Rows share one image
// build; the bbox prefilter certifies Disjoint only with the image error
// added to the gap. Unknown entries fall back to the pairwise predicate,
// which retries at tighter image targets.
struct RelationTable {
    int n = 0;
    std::vector<Relation> rel;

    Relation at(int i, int j) const {
        return rel[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                   static_cast<std::size_t>(j)];
    }
};

inline RelationTable cell_relations(const PlaneMapSpec& m, const std::vector<PolyRegion>& cells,
                                    const GeomTol& tol) {
    RelationTable t;
    t.n = static_cast<int>(cells.size());
    t.rel.assign(static_cast<std::size_t>(t.n) * static_cast<std::size_t>(t.n),
                 Relation::Unknown);
    struct Img {
        PolyRegion r;
        double err = 0.0;
        BBox box;
        bool ok = false;
    };
    std::vector<Img> imgs(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        try {
            imgs[i].r = image_region(m, cells[i], tol, tol.eps / 4.0, &imgs[i].err);
            imgs[i].box = imgs[i].r.bbox();
            imgs[i].ok = true;
        } catch (const GeometryError&) {
            imgs[i].ok = false;
        }
    }
    std::vector<BBox> boxes(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) boxes[j] = cells[j].bbox();

    for (int i = 0; i < t.n; ++i) {
        for (int j = 0; j < t.n; ++j) {
            Relation r = Relation::Unknown;
            if (imgs[static_cast<std::size_t>(i)].ok) {
                const Img& im = imgs[static_cast<std::size_t>(i)];
                if (im.box.gap(boxes[static_cast<std::size_t>(j)]) > im.err + tol.eps) {
                    r = Relation::Disjoint;
                } else {
                    try {
                        const RegionGap g =
                            region_gap(im.r, cells[static_cast<std::size_t>(j)], tol);
                        const FreeVerdict v =
                            classify_gap(g.distance, im.err, tol.eps, g.on_a, g.on_b);
                        if (v.verdict == Freeness::Free) r = Relation::Disjoint;
                        if (v.verdict == Freeness::NotFree) r = Relation::Intersecting;
                    } catch (const GeometryError&) {
                        // fall through to the pairwise predicate
                    }
                }
            }
            if (r == Relation::Unknown) {
                const FreeVerdict v = iterate_pair_meets(m, cells[static_cast<std::size_t>(i)],
                                                         1, cells[static_cast<std::size_t>(j)],
                                                         tol);
                if (v.verdict == Freeness::Free) r = Relation::Disjoint;
                if (v.verdict == Freeness::NotFree) r = Relation::Intersecting;
            }
            t.rel[static_cast<std::size_t>(i) * static_cast<std::size_t>(t.n) +
                  static_cast<std::size_t>(j)] = r;
        }
    }
    return t;
}

}  // namespace detail

// =============================================================== refinement

namespace detail {

// Internal: the chord search ran out of candidates. free_refine turns this
// into ResolutionFloor, since it means the brick cannot be subdivided at
// the current eps (chords shorter than 4*eps and pieces thinner than eps
// are inadmissible).
struct ChordExhausted : GeometryError {
    using GeometryError::GeometryError;
};

// Splits a hole-free region along an axis-aligned chord across its longer
// extent. The chord endpoints land in the interior of boundary segments (so
// the cut introduces valence-3 vertices once neighbours are rebuilt); cut
// lines through ring vertices are retried at shifted offsets. The cut
// fraction carries a jitter derived from the region's own bbox bits:
// sibling pieces inherit equal extents, and un-jittered midline cuts would
// meet the shared chord in one point from both sides, fusing two
// T-junctions into a valence-4 vertex.
inline std::pair<PolyRegion, PolyRegion> split_region_across(const PolyRegion& r,
                                                             const GeomTol& tol) {
    if (!r.holes.empty())
        throw GeometryError("split_region_across: regions with holes are not supported");
    const BBox bb = r.bbox();
    const double w = bb.hi.x - bb.lo.x, h = bb.hi.y - bb.lo.y;
    static const double shifts[9] = {0.0, 0.13, -0.13, 0.26, -0.26, 0.06, -0.06, 0.37, -0.37};
    auto mix = [](std::uint64_t acc, double v) {
        std::uint64_t x;
        std::memcpy(&x, &v, sizeof x);
        return acc ^ (x + 0x9e3779b97f4a7c15ull + (acc << 6) + (acc >> 2));
    };
    std::uint64_t hb = 0xb5ad4eceda1ce2a9ull;
    hb = mix(hb, bb.lo.x);
    hb = mix(hb, bb.lo.y);
    hb = mix(hb, bb.hi.x);
    hb = mix(hb, bb.hi.y);
    const double jitter = (static_cast<double>(hb % 4096) / 4096.0 - 0.5) * 0.22;
    const std::vector<Point2>& ring = r.outer.pts;
    const int n = static_cast<int>(ring.size());

    for (int axis_try = 0; axis_try < 2; ++axis_try) {
        const bool cut_x = (w >= h) == (axis_try == 0);  // coordinate held fixed on the chord
        const double lo = cut_x ? bb.lo.x : bb.lo.y;
        const double extent = cut_x ? w : h;
        for (double shift : shifts) {
            const double cut = lo + (0.5 + jitter + shift) * extent;
            struct Cross {
                double along;  // free coordinate, sort key
                int seg;
                double t;
                Point2 p;
            };
            std::vector<Cross> crossings;
            bool degenerate = false;
            for (int i = 0; i < n && !degenerate; ++i) {
                const Point2 a = ring[static_cast<std::size_t>(i)];
                const Point2 b = ring[static_cast<std::size_t>((i + 1) % n)];
                const double s0 = (cut_x ? a.x : a.y) - cut;
                const double s1 = (cut_x ? b.x : b.y) - cut;
                if (std::abs(s0) <= tol.eps * 1e-3 || std::abs(s1) <= tol.eps * 1e-3) {
                    degenerate = true;  // vertex on the cut line, retry shifted
                    break;
                }
                if ((s0 < 0.0) == (s1 < 0.0)) continue;
                const double t = s0 / (s0 - s1);
                const Point2 p = lerp(a, b, t);
                crossings.push_back({cut_x ? p.y : p.x, i, t, p});
            }
            if (degenerate || crossings.size() < 2 || crossings.size() % 2 != 0) continue;
            std::sort(crossings.begin(), crossings.end(),
                      [](const Cross& a, const Cross& b) { return a.along < b.along; });
            // inside intervals alternate starting at the first crossing
            int pick = -1;
            double best_len = 0.0;
            for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
                const double len = crossings[k + 1].along - crossings[k].along;
                if (len > best_len) {
                    best_len = len;
                    pick = static_cast<int>(k);
                }
            }
            if (pick < 0 || best_len <= 4.0 * tol.eps) continue;
            const Cross A = crossings[static_cast<std::size_t>(pick)];
            const Cross B = crossings[static_cast<std::size_t>(pick) + 1];

            // augmented ring with both chord endpoints inserted
            std::vector<Point2> aug;
            int ia = -1, ib = -1;
            for (int i = 0; i < n; ++i) {
                aug.push_back(ring[static_cast<std::size_t>(i)]);
                const bool hasA = A.seg == i, hasB = B.seg == i;
                if (hasA && hasB) {
                    if (A.t < B.t) {
                        ia = static_cast<int>(aug.size());
                        aug.push_back(A.p);
                        ib = static_cast<int>(aug.size());
                        aug.push_back(B.p);
                    } else {
                        ib = static_cast<int>(aug.size());
                        aug.push_back(B.p);
                        ia = static_cast<int>(aug.size());
                        aug.push_back(A.p);
                    }
                } else if (hasA) {
                    ia = static_cast<int>(aug.size());
                    aug.push_back(A.p);
                } else if (hasB) {
                    ib = static_cast<int>(aug.size());
                    aug.push_back(B.p);
                }
            }
            const int na = static_cast<int>(aug.size());
            auto side = [&](int from, int to) {
                PolyRegion piece;
                piece.outer.closed = true;
                for (int i = from; i != to; i = (i + 1) % na)
                    piece.outer.pts.push_back(aug[static_cast<std::size_t>(i)]);
                piece.outer.pts.push_back(aug[static_cast<std::size_t>(to)]);
                return piece;
            };
            PolyRegion p1 = side(ia, ib);
            PolyRegion p2 = side(ib, ia);
            try {
                normalize_orientation(p1);
                normalize_orientation(p2);
                validate_region(p1, tol);
                validate_region(p2, tol);
            } catch (const GeometryError&) {
                continue;
            }
            // eps^2: bricks near a fixed point legitimately shrink to the
            // diameter floor 4*eps, i.e. areas of order eps^2
            if (area(p1) < tol.eps * tol.eps || area(p2) < tol.eps * tol.eps) continue;
            // deterministic order: piece covering the low end of the cut axis first
            const double c1 = cut_x ? p1.bbox().lo.y : p1.bbox().lo.x;
            const double c2 = cut_x ? p2.bbox().lo.y : p2.bbox().lo.x;
            if (c2 < c1) std::swap(p1, p2);
            return {p1, p2};
        }
    }
    throw ChordExhausted("split_region_across: no admissible chord found");
}

}  // namespace detail

// Splits bricks until every one is certified free. Output bricks are
// contained in input bricks; regions that stay undecided once their diameter
// drops below 4*eps raise ResolutionFloor (points of the fixed set must be
// excluded from the window instead).
inline BrickComplex free_refine(const PlaneMapSpec& m, const BrickComplex& c,
                                const GeomTol& tol = {}) {
    std::vector<PolyRegion> out;
    for (const Brick& b : c.bricks) {
        std::vector<PolyRegion> todo{b.region};
        while (!todo.empty()) {
            PolyRegion r = std::move(todo.back());
            todo.pop_back();
            const FreeVerdict v = is_free(m, r, tol);
            if (v.verdict == Freeness::Free) {
                out.push_back(std::move(r));
                continue;
            }
            const BBox bb = r.bbox();
            const double diam = dist(bb.lo, bb.hi);
            const auto at_floor = [&](const std::string& how) {
                return ResolutionFloor(
                    "free_refine: brick near (" + std::to_string(0.5 * (bb.lo.x + bb.hi.x)) +
                    ", " + std::to_string(0.5 * (bb.lo.y + bb.hi.y)) +
                    ") still meets its image but " + how +
                    "; exclude the fixed set from the window");
            };
            if (diam < 4.0 * tol.eps)
                throw at_floor("its diameter " + std::to_string(diam) +
                               " is below the splitting floor");
            try {
                auto [r1, r2] = detail::split_region_across(r, tol);
                todo.push_back(std::move(r2));
                todo.push_back(std::move(r1));
            } catch (const detail::ChordExhausted&) {
                // eps-thin slivers hit the floor before the diameter does
                throw at_floor("no admissible chord splits it at this eps");
            }
        }
    }
    return complex_from_cells(out, tol);
}

// ================================================================== merging

// Greedy maximal free merging. Scans bricks by ascending id and merges the
// lowest-id brick with its lowest-id adjacent partner whenever the union is
// certified free, then restarts; a union is free exactly when all ordered
// atom pairs across the two groups are Disjoint in the relation table.
// Terminates when every adjacent union is certified NotFree; an adjacent
// union that stays Unknown is a deadlock and raises MergeDeadlock.
//
// labels, when given, has one entry per input brick; entries >= 0 tag bricks
// that must stay in distinct output bricks. Two groups both holding tagged
// atoms never merge (a tagged group may still absorb untagged cells), and
// such pairs are exempt from the deadlock check.
inline BrickComplex maximal_free(const PlaneMapSpec& m, const BrickComplex& c,
                                 const GeomTol& tol = {},
                                 const std::vector<int>* labels = nullptr) {
    const int n = c.brick_count();
    if (labels && static_cast<int>(labels->size()) != n)
        throw GeometryError("maximal_free: labels size mismatch");
    std::vector<PolyRegion> cells;
    cells.reserve(static_cast<std::size_t>(n));
    for (const Brick& b : c.bricks) cells.push_back(b.region);
    const detail::RelationTable table = detail::cell_relations(m, cells, tol);
    for (int i = 0; i < n; ++i) {
        if (table.at(i, i) == Relation::Intersecting)
            throw GeometryError("maximal_free: brick " + std::to_string(i) +
                                " is not free; run free_refine first");
        if (table.at(i, i) == Relation::Unknown)
            throw MergeDeadlock("maximal_free: brick " + std::to_string(i) +
                                " freeness undecided at eps; refine the complex");
    }

    std::map<int, std::vector<int>> members;  // group root -> sorted atom ids
    std::map<int, std::set<int>> adj;         // group root -> adjacent roots
    for (int i = 0; i < n; ++i) members[i] = {i};
    for (const auto& [a, b] : c.adjacent_pairs()) {
        adj[a].insert(b);
        adj[b].insert(a);
    }

    enum class UnionState { Free, NotFree, Undecided };
    auto union_state = [&](int g, int h) {
        bool unknown = false;
        for (int a : members[g])
            for (int b : members[h]) {
                const Relation ab = table.at(a, b), ba = table.at(b, a);
                if (ab == Relation::Intersecting || ba == Relation::Intersecting)
                    return UnionState::NotFree;
                if (ab == Relation::Unknown || ba == Relation::Unknown) unknown = true;
            }
        return unknown ? UnionState::Undecided : UnionState::Free;
    };
    auto tagged = [&](int g) {
        if (!labels) return false;
        for (int a : members[g])
            if ((*labels)[static_cast<std::size_t>(a)] >= 0) return true;
        return false;
    };

    for (;;) {
        bool merged = false;
        for (auto git = members.begin(); git != members.end() && !merged; ++git) {
            const int g = git->first;
            for (int h : adj[g]) {
                if (tagged(g) && tagged(h)) continue;
                if (union_state(g, h) != UnionState::Free) continue;
                // fold h into g (scan order guarantees g < h)
                auto& mg = members[g];
                auto& mh = members[h];
                std::vector<int> fused;
                std::merge(mg.begin(), mg.end(), mh.begin(), mh.end(),
                           std::back_inserter(fused));
                mg = std::move(fused);
                for (int x : adj[h]) {
                    if (x == g) continue;
                    adj[x].erase(h);
                    adj[x].insert(g);
                    adj[g].insert(x);
                }
                adj[g].erase(h);
                adj.erase(h);
                members.erase(h);
                merged = true;
                break;
            }
        }
        if (merged) continue;
        for (const auto& [g, nbrs] : adj)
            for (int h : nbrs)
                if (g < h && !(tagged(g) && tagged(h)) &&
                    union_state(g, h) == UnionState::Undecided)
                    throw MergeDeadlock("maximal_free: union of bricks " + std::to_string(g) +
                                        " and " + std::to_string(h) +
                                        " undecided at eps; refine or shrink eps");
        break;
    }

    std::vector<PolyRegion> merged_cells;
    std::vector<std::vector<int>> merged_atoms;
    for (const auto& [g, atom_ids] : members) {
        (void)g;
        std::vector<PolyRegion> parts;
        parts.reserve(atom_ids.size());
        for (int a : atom_ids) parts.push_back(cells[static_cast<std::size_t>(a)]);
        merged_cells.push_back(parts.size() == 1 ? parts.front() : region_union_exact(parts));
        merged_atoms.push_back(atom_ids);
    }
    BrickComplex out = complex_from_cells(merged_cells, tol);
    for (std::size_t i = 0; i < merged_atoms.size(); ++i) {
        // carry the original atom ids through (builder numbered positions)
        std::vector<int> atoms;
        for (int pos : out.bricks[i].atoms)
            for (int a : merged_atoms[static_cast<std::size_t>(pos)]) atoms.push_back(a);
        std::sort(atoms.begin(), atoms.end());
        out.bricks[i].atoms = std::move(atoms);
    }
    return out;
}

// ================================================================== digraph

struct BrickDigraph {
    int nodes = 0;
    // (b, b') with f(b) certified to meet b'; never b == b'.
    std::vector<std::pair<int, int>> arcs;
    // pairs left undecided (never adjacent ones; those throw at build time)
    std::vector<std::pair<int, int>> unknown_pairs;
    std::vector<std::vector<int>> out, in;
    bool acyclic = true;
};

namespace detail {

// Strongly connected components, iterative Tarjan; returns component id per
// node and the component sizes. Component ids follow discovery order.
inline void strongly_connected(const std::vector<std::vector<int>>& out, std::vector<int>& comp,
                               std::vector<int>& comp_size) {
    const int n = static_cast<int>(out.size());
    comp.assign(static_cast<std::size_t>(n), -1);
    comp_size.clear();
    std::vector<int> index(static_cast<std::size_t>(n), -1),
        low(static_cast<std::size_t>(n), 0);
    std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
    std::vector<int> stack;
    int next_index = 0;
    struct Frame {
        int v;
        std::size_t child;
    };
    for (int s = 0; s < n; ++s) {
        if (index[static_cast<std::size_t>(s)] >= 0) continue;
        std::vector<Frame> call{{s, 0}};
        index[static_cast<std::size_t>(s)] = low[static_cast<std::size_t>(s)] = next_index++;
        stack.push_back(s);
        on_stack[static_cast<std::size_t>(s)] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            const auto& nbrs = out[static_cast<std::size_t>(f.v)];
            if (f.child < nbrs.size()) {
                const int w = nbrs[f.child++];
                if (index[static_cast<std::size_t>(w)] < 0) {
                    index[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] =
                        next_index++;
                    stack.push_back(w);
                    on_stack[static_cast<std::size_t>(w)] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[static_cast<std::size_t>(w)]) {
                    low[static_cast<std::size_t>(f.v)] = std::min(
                        low[static_cast<std::size_t>(f.v)], index[static_cast<std::size_t>(w)]);
                }
                continue;
            }
            if (low[static_cast<std::size_t>(f.v)] == index[static_cast<std::size_t>(f.v)]) {
                const int cid = static_cast<int>(comp_size.size());
                int size = 0;
                for (;;) {
                    const int w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = 0;
                    comp[static_cast<std::size_t>(w)] = cid;
                    ++size;
                    if (w == f.v) break;
                }
                comp_size.push_back(size);
            }
            const int v = f.v;
            call.pop_back();
            if (!call.empty())
                low[static_cast<std::size_t>(call.back().v)] =
                    std::min(low[static_cast<std::size_t>(call.back().v)],
                             low[static_cast<std::size_t>(v)]);
        }
    }
}

}  // namespace detail

// Builds the one-step digraph over the bricks of a free decomposition. Every
// brick must be certified free (the table diagonal is re-checked). An
// Unknown verdict between adjacent bricks cannot be tolerated -- adjacency
// makes the pair order-relevant -- and raises UnresolvedAdjacentPair;
// non-adjacent Unknown pairs are recorded.
inline BrickDigraph build_digraph(const PlaneMapSpec& m, const BrickComplex& c,
                                  const GeomTol& tol = {}) {
    const int n = c.brick_count();
    std::vector<PolyRegion> cells;
    cells.reserve(static_cast<std::size_t>(n));
    for (const Brick& b : c.bricks) cells.push_back(b.region);
    const detail::RelationTable table = detail::cell_relations(m, cells, tol);

    std::set<std::pair<int, int>> adjacent;
    for (const auto& pr : c.adjacent_pairs()) adjacent.insert(pr);
    auto is_adjacent = [&](int i, int j) {
        return adjacent.count(std::minmax(i, j)) > 0;
    };

    BrickDigraph d;
    d.nodes = n;
    d.out.assign(static_cast<std::size_t>(n), {});
    d.in.assign(static_cast<std::size_t>(n), {});
    for (int i = 0; i < n; ++i) {
        if (table.at(i, i) != Relation::Disjoint)
            throw GeometryError("build_digraph: brick " + std::to_string(i) +
                                " is not certified free");
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            switch (table.at(i, j)) {
                case Relation::Intersecting:
                    d.arcs.emplace_back(i, j);
                    d.out[static_cast<std::size_t>(i)].push_back(j);
                    d.in[static_cast<std::size_t>(j)].push_back(i);
                    break;
                case Relation::Unknown:
                    if (is_adjacent(i, j))
                        throw UnresolvedAdjacentPair(
                            "build_digraph: adjacent bricks " + std::to_string(i) + ", " +
                            std::to_string(j) + " have an undecided overlap; shrink eps");
                    d.unknown_pairs.emplace_back(i, j);
                    break;
                case Relation::Disjoint:
                    break;
            }
        }
    }
    std::vector<int> comp, comp_size;
    detail::strongly_connected(d.out, comp, comp_size);
    d.acyclic = true;
    for (int s : comp_size)
        if (s > 1) d.acyclic = false;
    return d;
}

// ============================================================ one-step sets

enum class PhiDirection { Plus, Minus };

// One application of the transition operator: bricks meeting f(X) (Plus) or
// f^-1(X) (Minus). Unions distribute: phi(X union Y) = phi(X) union phi(Y).
inline std::vector<int> phi(const BrickDigraph& d, const std::vector<int>& xs,
                            PhiDirection dir) {
    std::set<int> acc;
    for (int x : xs) {
        if (x < 0 || x >= d.nodes) throw UnknownBrickId("phi: brick id out of range");
        const auto& nbrs =
            dir == PhiDirection::Plus ? d.out[static_cast<std::size_t>(x)]
                                      : d.in[static_cast<std::size_t>(x)];
        acc.insert(nbrs.begin(), nbrs.end());
    }
    return {acc.begin(), acc.end()};
}

// ==================================================================== order

// Reachability order: b <= b' when some forward arc path leads from b to b'
// (including the empty path). Only defined on acyclic digraphs.
inline bool brick_leq(const BrickDigraph& d, int b, int bp) {
    if (b < 0 || b >= d.nodes || bp < 0 || bp >= d.nodes)
        throw UnknownBrickId("brick_leq: brick id out of range");
    if (!d.acyclic)
        throw CyclicDigraph("brick_leq: digraph has a cycle, the brick order is undefined");
    if (b == bp) return true;
    std::vector<char> seen(static_cast<std::size_t>(d.nodes), 0);
    std::vector<int> queue{b};
    seen[static_cast<std::size_t>(b)] = 1;
    while (!queue.empty()) {
        const int v = queue.back();
        queue.pop_back();
        for (int w : d.out[static_cast<std::size_t>(v)]) {
            if (w == bp) return true;
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                queue.push_back(w);
            }
        }
    }
    return false;
}

// ============================================================ closed chains

// A cyclic certificate of recurrence at the brick scale: consecutive bricks
// satisfy f^{k_j}(b_j) meets b_{j+1 mod len}, every brick free.
struct ClosedChain {
    std::vector<int> bricks;
    std::vector<int> powers;
    std::vector<Point2> witnesses;
};

// Finds a shortest directed cycle of the digraph (none when acyclic) and
// re-certifies it geometrically: minimal powers searched from 1 up to
// `power_budget`, freeness of every brick re-checked.
inline std::optional<ClosedChain> find_closed_chain(const PlaneMapSpec& m,
                                                    const BrickComplex& c,
                                                    const BrickDigraph& d,
                                                    const GeomTol& tol = {},
                                                    int power_budget = 32) {
    std::vector<int> comp, comp_size;
    detail::strongly_connected(d.out, comp, comp_size);
    bool has_cycle = false;
    for (int s : comp_size)
        if (s > 1) has_cycle = true;
    if (!has_cycle) return std::nullopt;

    // shortest cycle: BFS inside the component of each start node
    std::vector<int> best_cycle;
    for (int s = 0; s < d.nodes; ++s) {
        if (comp_size[static_cast<std::size_t>(comp[static_cast<std::size_t>(s)])] < 2) continue;
        if (!best_cycle.empty() && static_cast<int>(best_cycle.size()) == 2) break;
        std::vector<int> dist(static_cast<std::size_t>(d.nodes), -1),
            parent(static_cast<std::size_t>(d.nodes), -1);
        std::vector<int> queue{s};
        dist[static_cast<std::size_t>(s)] = 0;
        int close_from = -1;
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const int v = queue[qi];
            if (close_from >= 0 &&
                dist[static_cast<std::size_t>(v)] + 1 >=
                    dist[static_cast<std::size_t>(close_from)] + 1)
                break;
            for (int w : d.out[static_cast<std::size_t>(v)]) {
                if (comp[static_cast<std::size_t>(w)] != comp[static_cast<std::size_t>(s)])
                    continue;
                if (w == s && close_from < 0) close_from = v;
                if (dist[static_cast<std::size_t>(w)] < 0) {
                    dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
                    parent[static_cast<std::size_t>(w)] = v;
                    queue.push_back(w);
                }
            }
        }
        if (close_from < 0) continue;
        std::vector<int> cycle;
        for (int v = close_from; v != -1; v = parent[static_cast<std::size_t>(v)])
            cycle.push_back(v);
        std::reverse(cycle.begin(), cycle.end());  // s ... close_from
        if (best_cycle.empty() || cycle.size() < best_cycle.size()) best_cycle = cycle;
    }
    if (best_cycle.empty()) return std::nullopt;  // unreachable

    ClosedChain chain;
    chain.bricks = best_cycle;
    const int len = static_cast<int>(best_cycle.size());
    for (int j = 0; j < len; ++j) {
        const PolyRegion& from =
            c.brick_region(chain.bricks[static_cast<std::size_t>(j)]);
        const PolyRegion& to =
            c.brick_region(chain.bricks[static_cast<std::size_t>((j + 1) % len)]);
        int found = -1;
        Point2 witness{};
        for (int k = 1; k <= power_budget; ++k) {
            const FreeVerdict v = iterate_pair_meets(m, from, k, to, tol);
            if (v.verdict == Freeness::NotFree) {
                found = k;
                witness = v.witness.value_or(Point2{});
                break;
            }
        }
        if (found < 0)
            throw PowerSearchBudgetExceeded(
                "find_closed_chain: no certified power up to " + std::to_string(power_budget) +
                " between bricks " + std::to_string(chain.bricks[static_cast<std::size_t>(j)]) +
                " and " +
                std::to_string(chain.bricks[static_cast<std::size_t>((j + 1) % len)]));
        chain.powers.push_back(found);
        chain.witnesses.push_back(witness);
    }
    for (int b : chain.bricks)
        if (is_free(m, c.brick_region(b), tol).verdict != Freeness::Free)
            throw GeometryError("find_closed_chain: chain brick " + std::to_string(b) +
                                " failed the freeness re-check");
    return chain;
}

// =============================================================== regularity

struct RegularityVerdict {
    // an adjacent brick receives f(b) / sends f(b') into b
    bool positively_regular = false;
    bool negatively_regular = false;
};

inline RegularityVerdict classify_regularity(const BrickDigraph& d, const BrickComplex& c,
                                             int b) {
    if (b < 0 || b >= d.nodes || b >= c.brick_count())
        throw UnknownBrickId("classify_regularity: brick id out of range");
    std::set<int> nbrs;
    for (int ei : c.bricks[static_cast<std::size_t>(b)].edges) {
        const BrickEdge& e = c.edges[static_cast<std::size_t>(ei)];
        if (e.right < 0) continue;
        nbrs.insert(e.left == b ? e.right : e.left);
    }
    RegularityVerdict v;
    for (int w : d.out[static_cast<std::size_t>(b)])
        if (nbrs.count(w)) v.positively_regular = true;
    for (int w : d.in[static_cast<std::size_t>(b)])
        if (nbrs.count(w)) v.negatively_regular = true;
    return v;
}

// ========================================================= edge orientation

struct EdgeOrientation {
    int edge = -1;
    // f(from_brick) meets to_brick; the oriented edge keeps from on its right
    int from_brick = -1;
    int to_brick = -1;
    // true when the orientation runs v1 -> v0 against the stored geometry
    bool geom_flipped = false;
};

struct OrientedSkeleton {
    std::vector<EdgeOrientation> oriented;
    std::vector<int> boundary_edges;  // single-brick edges stay unoriented
};

// Orients every interior edge so that the right brick maps across it into
// the left one. Exactly one direction must be certified per edge: both
// directions means a 2-cycle (no free maximal decomposition has one),
// neither contradicts maximality. A vertex with all three oriented edges
// outgoing (or all incoming) would close a 3-cycle and is rejected too.
inline OrientedSkeleton orient_edges(const BrickDigraph& d, const BrickComplex& c) {
    std::set<std::pair<int, int>> arcs(d.arcs.begin(), d.arcs.end());
    OrientedSkeleton sk;
    for (int ei = 0; ei < static_cast<int>(c.edges.size()); ++ei) {
        const BrickEdge& e = c.edges[static_cast<std::size_t>(ei)];
        if (e.on_window_boundary()) {
            sk.boundary_edges.push_back(ei);
            continue;
        }
        const bool rl = arcs.count({e.right, e.left}) > 0;
        const bool lr = arcs.count({e.left, e.right}) > 0;
        if (rl && lr)
            throw OrientationConflict("orient_edges: edge " + std::to_string(ei) +
                                      ": bricks map across it both ways (2-cycle)");
        if (!rl && !lr)
            throw OrientationConflict("orient_edges: edge " + std::to_string(ei) +
                                      ": neither side maps across; decomposition not maximal");
        EdgeOrientation eo;
        eo.edge = ei;
        eo.from_brick = rl ? e.right : e.left;
        eo.to_brick = rl ? e.left : e.right;
        eo.geom_flipped = lr;
        sk.oriented.push_back(eo);
    }
    std::vector<int> starts(c.vertices.size(), 0), ends(c.vertices.size(), 0);
    for (const EdgeOrientation& eo : sk.oriented) {
        const BrickEdge& e = c.edges[static_cast<std::size_t>(eo.edge)];
        if (e.is_loop()) continue;
        const int from_v = eo.geom_flipped ? e.v1 : e.v0;
        const int to_v = eo.geom_flipped ? e.v0 : e.v1;
        starts[static_cast<std::size_t>(from_v)] += 1;
        ends[static_cast<std::size_t>(to_v)] += 1;
    }
    for (int v = 0; v < static_cast<int>(c.vertices.size()); ++v) {
        if (starts[static_cast<std::size_t>(v)] >= 3)
            throw OrientationConflict("orient_edges: vertex " + std::to_string(v) +
                                      " is the initial point of three oriented edges");
        if (ends[static_cast<std::size_t>(v)] >= 3)
            throw OrientationConflict("orient_edges: vertex " + std::to_string(v) +
                                      " is the final point of three oriented edges");
    }
    return sk;
}

// ===================================================== order neighbourhoods

struct UpsetConnectivity {
    std::vector<int> members;  // bricks b' with b <= b', ascending
    bool connected = false;    // spatially, through shared edges
    bool touches_boundary = false;
};

// The forward order neighbourhood of a brick and whether it is spatially
// connected. On an unbounded surface the up-set of a positively regular
// brick is connected; a truncated window can cut it, so callers record
// `touches_boundary` instead of failing.
inline UpsetConnectivity upset_connectivity(const BrickDigraph& d, const BrickComplex& c,
                                            int b) {
    if (b < 0 || b >= d.nodes) throw UnknownBrickId("upset_connectivity: brick id out of range");
    if (!d.acyclic)
        throw CyclicDigraph("upset_connectivity: digraph has a cycle");
    std::vector<char> in_set(static_cast<std::size_t>(d.nodes), 0);
    std::vector<int> queue{b};
    in_set[static_cast<std::size_t>(b)] = 1;
    while (!queue.empty()) {
        const int v = queue.back();
        queue.pop_back();
        for (int w : d.out[static_cast<std::size_t>(v)])
            if (!in_set[static_cast<std::size_t>(w)]) {
                in_set[static_cast<std::size_t>(w)] = 1;
                queue.push_back(w);
            }
    }
    UpsetConnectivity up;
    for (int i = 0; i < d.nodes; ++i)
        if (in_set[static_cast<std::size_t>(i)]) up.members.push_back(i);

    // flood fill across shared edges, restricted to the up-set
    std::map<int, std::vector<int>> touch;
    for (const auto& e : c.edges) {
        if (e.right < 0) continue;
        if (in_set[static_cast<std::size_t>(e.left)] && in_set[static_cast<std::size_t>(e.right)]) {
            touch[e.left].push_back(e.right);
            touch[e.right].push_back(e.left);
        }
    }
    std::set<int> seen{b};
    std::vector<int> flood{b};
    while (!flood.empty()) {
        const int v = flood.back();
        flood.pop_back();
        for (int w : touch[v])
            if (!seen.count(w)) {
                seen.insert(w);
                flood.push_back(w);
            }
    }
    up.connected = static_cast<int>(seen.size()) == static_cast<int>(up.members.size());
    for (int v : up.members)
        for (int ei : c.bricks[static_cast<std::size_t>(v)].edges)
            if (c.edges[static_cast<std::size_t>(ei)].on_window_boundary())
                up.touches_boundary = true;
    return up;
}

}  // namespace brickdyn
