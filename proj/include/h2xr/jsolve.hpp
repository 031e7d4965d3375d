#pragma once

// Truncated Jenkins-Serrin problems: domain truncation, meshing, the
// nonlinear minimal-graph solve with capped +-M boundary data, and flux
// functionals.
//
// In the conformal disk model the hyperbolic minimal graph equation
// div(grad u / sqrt(1+|grad u|^2)) = 0 (hyperbolic operators) reduces to the
// Euclidean divergence form div0(grad0 u / W) = 0 with
// W = sqrt(1 + |grad0 u|^2 / lambda^2), lambda = 2/(1-|z|^2). All assembly
// happens in Euclidean coordinates with that weight.
//
// The solution climbs to +-M in thin layers along the A/B edges (width
// ~ e^-M) and sweeps the full 2M range around each interior vertex. The
// mesher resolves both: anisotropic geometric "wall bands" along the edges,
// polar fans with angle-graded spokes at the corners (the corner itself is
// cut at a tiny arc with natural boundary data), and an unstructured core.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "h2xr/polygon.hpp"

namespace h2xr {

enum class BoundaryTag : uint8_t { None = 0, AEdge, BEdge, HoroCut, CornerArc };

/// Truncation of an admissible polygon: every ideal vertex is replaced by a
/// horocycle arc at depth m below the canonical horocycle, every interior
/// vertex by a tiny circular arc (free boundary) that resolves the vertical
/// segment of the graph closure.
struct TruncatedDomain {
    SemiIdealPolygon poly;
    double m = 2.0;
    double cap = 10.0;
    double corner_radius = 0.0;
    double wall_floor = 0.0;            // innermost band row distance
    std::vector<Horocycle> cuts;        // one per ideal vertex, canonical + m
    std::vector<GeodesicArc> edges;     // polygon edges (2k)
    std::vector<double> span_lo, span_hi;  // per-edge carrier params after truncation

    int k() const { return poly.k(); }
    /// Interior test with slack > 0 shrinking the domain.
    bool contains(Cpx z, double slack = 0.0) const;
    double edge_distance(int edge_index, const DiskPoint& p) const;
};

TruncatedDomain make_truncated_domain(const SemiIdealPolygon& poly, double m, double cap,
                                      double corner_radius = 0.0);

struct BoundaryChain {
    BoundaryTag tag = BoundaryTag::None;
    int which = -1;  // edge slot for A/B, ideal index for cuts, interior index for corner arcs
    std::vector<int> nodes;  // ordered along the boundary walk
};

struct MeshQuality {
    double min_angle_core = 0.0;  // degrees, unstructured region
    double min_angle_all = 0.0;   // degrees, including anisotropic bands
    int nodes = 0;
    int triangles = 0;
};

struct TriMesh {
    std::vector<Cpx> pos;
    std::vector<std::array<int, 3>> tris;  // CCW
    std::vector<BoundaryTag> node_tag;
    std::vector<int> node_piece;     // chain index per boundary node, -1 inside
    std::vector<double> dirichlet;   // boundary value, NaN on free nodes
    std::vector<BoundaryChain> chains;
    double target_h = 0.05;
    MeshQuality quality;

    int n_nodes() const { return static_cast<int>(pos.size()); }
    int n_tris() const { return static_cast<int>(tris.size()); }
    bool is_dirichlet(int i) const { return !std::isnan(dirichlet[i]); }
};

enum class CutData { Profile, Linear };

struct MeshParams {
    double h = 0.05;       // target hyperbolic edge length
    double kappa = 0.25;   // max height increment across wall rows
    CutData cut_data = CutData::Profile;
    bool mirror_x = false;  // exact mirror symmetry across the y-axis
    double min_core_angle_deg = 20.0;
};

/// Mesh the truncated domain. Throws std::runtime_error on meshing failure
/// (non-conforming seams or core quality below the threshold).
TriMesh build_truncated_mesh(const TruncatedDomain& dom, const MeshParams& params);

struct SolveParams {
    double tol = 1e-10;       // scaled residual target
    int max_newton = 100;
    double h = 0.05;          // recorded target h (for downstream tolerances)
    bool verbose = false;
};

struct TriangleFields;

struct GraphSolution {
    std::shared_ptr<const TriMesh> mesh;
    std::shared_ptr<const TruncatedDomain> domain;
    std::vector<double> u;       // nodal values, normalized u(node nearest 0) = 0
    double shift = 0.0;          // subtracted constant
    double residual_norm = 0.0;  // final scaled residual
    int newton_iters = 0;

    const TriMesh& m() const { return *mesh; }
    const TriangleFields& fields() const;  // lazily cached per-triangle data

    mutable std::shared_ptr<const TriangleFields> fields_cache;
    mutable std::shared_ptr<void> locator_cache;  // managed by the flux module
};

/// Damped Newton solve of the discrete minimal graph equation with the
/// domain's Dirichlet data. Throws std::runtime_error carrying the last
/// residual when Newton fails to converge.
GraphSolution solve_minimal_graph(const TruncatedDomain& dom, const TriMesh& mesh,
                                  const SolveParams& params = {});

/// Same, with constant boundary data c replacing the +-M tags (test path).
GraphSolution solve_with_constant_data(const TruncatedDomain& dom, const TriMesh& mesh, double c,
                                       const SolveParams& params = {});

/// Per-triangle gradient, conformal weight W and metric factor.
struct TriangleFields {
    std::vector<Cpx> grad;
    std::vector<double> w;
    std::vector<double> lambda;
    std::vector<double> area;  // Euclidean
};
TriangleFields triangle_fields(const TriMesh& mesh, const std::vector<double>& u);

/// Energy-gradient residual of the discrete equation (free nodes only have
/// meaningful entries). Used by tests to verify solutions independently.
std::vector<double> discrete_residual(const TriMesh& mesh, const std::vector<double>& u);

struct FluxReport {
    double value = 0.0;   // F
    double length = 0.0;  // hyperbolic length of the curve
    double ratio = 0.0;   // |F| / length
    std::string curve;
};

/// Flux of the normalized gradient through a polyline (Euclidean vertices
/// inside the meshed region). The normal is the right-hand normal of the
/// travel direction, so a CCW boundary walk measures outward flux.
FluxReport flux_along(const GraphSolution& sol, const std::vector<Cpx>& polyline,
                      const std::string& name = "");

/// Flux along a tagged boundary chain (nudged inward for point location).
FluxReport flux_along_chain(const GraphSolution& sol, const BoundaryChain& chain,
                            double t0 = 0.0, double t1 = 1.0);

/// Hyperbolic length of a polyline.
double polyline_hyp_length(const std::vector<Cpx>& polyline);

/// P1 interpolation at a point; throws if the point lies outside the mesh.
double interpolate(const GraphSolution& sol, Cpx z);
Cpx interpolate_gradient(const GraphSolution& sol, Cpx z);

struct DivergenceTrend {
    std::vector<double> ratios;  // r_k = |F_k(T)| / |T|
    bool divergent = false;
};

/// Flux-ratio trend along a geodesic segment for a sequence of solutions on
/// a common subregion; flags divergence when the ratio exceeds 0.99 with a
/// positive trend.
DivergenceTrend divergence_indicator(const std::vector<GraphSolution>& sols, const DiskPoint& a,
                                     const DiskPoint& b);

/// Text dump (nodes, triangles, chains); read back with read_solution.
void write_solution(const GraphSolution& sol, const std::string& path);
GraphSolution read_solution(const std::string& path);

}  // namespace h2xr
