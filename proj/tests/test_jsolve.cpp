#include <doctest.h>

#include <cmath>

#include "h2xr/jsolve.hpp"

using namespace h2xr;

namespace {

SemiIdealPolygon symmetric_quadrilateral(double a = 0.5) {
    return SemiIdealPolygon({IdealPoint(kPi / 2), DiskPoint(a, 0.0), IdealPoint(3 * kPi / 2),
                             DiskPoint(-a, 0.0)});
}

}  // namespace

TEST_CASE("mesh the symmetric quadrilateral") {
    SemiIdealPolygon q = symmetric_quadrilateral();
    TruncatedDomain dom = make_truncated_domain(q, 2.0, 10.0);
    MeshParams prm;
    prm.h = 0.1;
    TriMesh mesh = build_truncated_mesh(dom, prm);
    CHECK(mesh.n_nodes() > 100);
    CHECK(mesh.quality.min_angle_core >= 20.0);
    // boundary combinatorics: 2 A chains, 2 B chains, 2 cuts, 2 corner arcs
    int na = 0, nb = 0, nc = 0, narc = 0;
    for (const auto& ch : mesh.chains) {
        if (ch.tag == BoundaryTag::AEdge) ++na;
        if (ch.tag == BoundaryTag::BEdge) ++nb;
        if (ch.tag == BoundaryTag::HoroCut) ++nc;
        if (ch.tag == BoundaryTag::CornerArc) ++narc;
    }
    CHECK(na == 2);
    CHECK(nb == 2);
    CHECK(nc == 2);
    CHECK(narc == 2);
    // all nodes inside the parent polygon
    for (int i = 0; i < mesh.n_nodes(); ++i) {
        for (int e = 0; e < q.size(); ++e) {
            CHECK(dom.edges[e].carrier.side_of(DiskPoint(mesh.pos[i])) > -1e-9);
        }
    }
}
