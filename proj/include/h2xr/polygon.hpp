#pragma once

// Semi-ideal geodesic polygons: validation, the equal-gap horocycle
// condition, and two independent admissibility tests (the horodisk vertex
// criterion and brute-force enumeration of inscribed polygons).

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "h2xr/hyp2.hpp"

namespace h2xr {

/// Convex polygon whose vertices alternate ideal / interior. Stored with the
/// cyclic order canonicalized: counterclockwise, slot 0 ideal. Edges inherit
/// the Jenkins-Serrin sign labels: an edge from an ideal vertex to the next
/// interior vertex is an A-edge (+inf data), interior to ideal is a B-edge.
class SemiIdealPolygon {
  public:
    SemiIdealPolygon() = default;
    /// Canonicalizes the cyclic order; throws on odd count or broken
    /// alternation.
    explicit SemiIdealPolygon(std::vector<PolyVertex> verts);

    int k() const { return static_cast<int>(verts_.size()) / 2; }
    int size() const { return static_cast<int>(verts_.size()); }
    const std::vector<PolyVertex>& vertices() const { return verts_; }
    const PolyVertex& vertex(int slot) const { return verts_[mod(slot)]; }

    const IdealPoint& ideal(int j) const { return std::get<IdealPoint>(verts_[mod(2 * j)]); }
    const DiskPoint& interior(int j) const { return std::get<DiskPoint>(verts_[mod(2 * j + 1)]); }

    /// Edge from slot i to slot i+1; even i gives an A-edge.
    GeodesicArc edge(int i) const { return geodesic_arc(vertex(i), vertex(i + 1)); }
    bool edge_is_a(int i) const { return mod(i) % 2 == 0; }

    SemiIdealPolygon transformed(const MobiusIsometry& iso) const;

  private:
    int mod(int i) const {
        int n = size();
        return ((i % n) + n) % n;
    }
    std::vector<PolyVertex> verts_;
};

struct PolygonViolation {
    std::string kind;  // "alternation", "convexity", "origin", "count"
    int index = -1;
    std::string detail;
};

struct ValidationReport {
    bool alternation_ok = false;
    bool convex_ok = false;
    bool origin_inside = false;
    std::vector<PolygonViolation> violations;
    bool valid() const { return alternation_ok && convex_ok && origin_inside; }
};

/// Report-style validation of raw vertex data (does not throw).
ValidationReport validate_semi_ideal(const std::vector<PolyVertex>& verts, double tol = 1e-9);
ValidationReport validate_semi_ideal(const SemiIdealPolygon& poly, double tol = 1e-9);

struct NeighborGapResult {
    double gap = 0.0;
    std::optional<Horocycle> common;  // set when |gap| < tol
};

/// Equal-gap test at ideal vertex j: signed Busemann gap between the two
/// neighboring interior vertices, and the common horocycle when it closes.
NeighborGapResult neighbor_horocycle_test(const SemiIdealPolygon& poly, int j, double tol = 1e-9);

/// Canonical horocycles through both neighbors of every ideal vertex.
/// Throws if some equal-gap condition fails beyond `tol`.
std::vector<Horocycle> canonical_horocycles(const SemiIdealPolygon& poly, double tol = 1e-9);

struct LemmaAdmissibility {
    bool admissible = false;
    /// Failure witness: interior vertex index j inside the closed horodisk at
    /// ideal vertex i.
    std::optional<std::pair<int, int>> witness;
    std::vector<Horocycle> horodisks;
    /// Smallest margin by which a tested vertex clears a horodisk
    /// (signed depth; negative is outside).
    double worst_depth = 0.0;
};

/// Vertex-in-horodisk admissibility criterion.
LemmaAdmissibility admissible_by_lemma(const SemiIdealPolygon& poly, double gap_tol = 1e-9,
                                       double depth_tol = 1e-9);

struct InscribedPolygon {
    std::vector<int> slots;  // parent vertex slots, cyclic order
    double gamma = 0.0;      // |Gamma(P)|
    double alpha = 0.0;
    double beta = 0.0;
    double margin() const { return std::min(gamma - 2.0 * alpha, gamma - 2.0 * beta); }
};

struct BruteForceAdmissibility {
    bool admissible = false;
    double min_margin = 0.0;      // over all inscribed polygons, absolute
    double min_margin_rel = 0.0;  // margin / |Gamma|
    InscribedPolygon worst;
    int polygons_tested = 0;
};

/// Enumerates every inscribed polygon (vertex subsets of size >= 3, != the
/// full polygon) and checks 2*alpha < |Gamma| and 2*beta < |Gamma| with edge
/// pieces truncated at the canonical horocycles shrunk by level `m`.
/// Throws if 2k > 20.
BruteForceAdmissibility admissible_brute_force(const SemiIdealPolygon& poly, double m,
                                               double gap_tol = 1e-9, double rel_eps = 1e-7);

/// Lengths of each edge's part outside the canonical horocycles shrunk by m.
/// For an equal-gap polygon each entry equals m.
std::vector<double> truncated_edge_lengths(const SemiIdealPolygon& poly, double m,
                                           double gap_tol = 1e-9);

/// Random convex semi-ideal polygon satisfying the equal-gap condition by
/// construction (interior vertices on horocycle intersections). Angular gaps
/// and horocycle levels are kept away from degeneracy so the admissibility
/// oracles are comparable at moderate truncation depth.
SemiIdealPolygon random_equal_gap_polygon(std::mt19937_64& rng, int k);

/// Plain-text polygon format: one vertex per line, "I <theta>" or
/// "P <x> <y>", cyclic order, '#' comments.
SemiIdealPolygon read_polygon_file(const std::string& path);
void write_polygon_file(const SemiIdealPolygon& poly, const std::string& path);

}  // namespace h2xr
