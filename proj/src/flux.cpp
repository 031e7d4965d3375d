#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "h2xr/jsolve.hpp"

namespace h2xr {

namespace {

double lambda_at(Cpx z) { return 2.0 / (1.0 - std::norm(z)); }

// Shared per-solution point locator: triangles bucketed by bounding box.
struct Locator {
    const TriMesh& mesh;
    double cell;
    std::unordered_map<int64_t, std::vector<int>> buckets;

    explicit Locator(const TriMesh& m) : mesh(m) {
        double mean_size = 0.0;
        for (const auto& t : m.tris) {
            Cpx a = m.pos[t[0]], b = m.pos[t[1]], c = m.pos[t[2]];
            mean_size += std::max({std::abs(b - a), std::abs(c - b), std::abs(a - c)});
        }
        cell = std::max(1e-6, 1.5 * mean_size / std::max(1, m.n_tris()));
        for (int t = 0; t < m.n_tris(); ++t) {
            auto [lo_x, hi_x] = std::minmax(
                {m.pos[m.tris[t][0]].real(), m.pos[m.tris[t][1]].real(), m.pos[m.tris[t][2]].real()});
            auto [lo_y, hi_y] = std::minmax(
                {m.pos[m.tris[t][0]].imag(), m.pos[m.tris[t][1]].imag(), m.pos[m.tris[t][2]].imag()});
            for (int64_t ix = idx(lo_x); ix <= idx(hi_x); ++ix)
                for (int64_t iy = idx(lo_y); iy <= idx(hi_y); ++iy)
                    buckets[key(ix, iy)].push_back(t);
        }
    }
    int64_t idx(double v) const { return static_cast<int64_t>(std::floor(v / cell)); }
    static int64_t key(int64_t ix, int64_t iy) { return (ix << 26) ^ (iy & 0x3FFFFFF); }

    // Barycentric coordinates of z in triangle t.
    std::array<double, 3> bary(int t, Cpx z) const {
        const auto& tri = mesh.tris[t];
        Cpx a = mesh.pos[tri[0]], b = mesh.pos[tri[1]], c = mesh.pos[tri[2]];
        double det = cross2(b - a, c - a);
        double w1 = cross2(z - a, c - a) / det;
        double w2 = cross2(b - a, z - a) / det;
        return {1.0 - w1 - w2, w1, w2};
    }

    // Triangle with the largest minimal barycentric coordinate; below
    // -tolerance means the point is outside the mesh.
    int locate(Cpx z, double tol = 1e-6) const {
        auto it = buckets.find(key(idx(z.real()), idx(z.imag())));
        int best_t = -1;
        double best = -std::numeric_limits<double>::infinity();
        if (it != buckets.end()) {
            for (int t : it->second) {
                auto bc = bary(t, z);
                double mn = std::min({bc[0], bc[1], bc[2]});
                if (mn > best) {
                    best = mn;
                    best_t = t;
                }
            }
        }
        if (best_t < 0 || best < -tol) return -1;
        return best_t;
    }
};

const Locator& locator_for(const GraphSolution& sol) {
    if (!sol.locator_cache) sol.locator_cache = std::make_shared<Locator>(*sol.mesh);
    return *std::static_pointer_cast<Locator>(sol.locator_cache);
}

}  // namespace

double polyline_hyp_length(const std::vector<Cpx>& polyline) {
    double len = 0.0;
    for (size_t i = 0; i + 1 < polyline.size(); ++i) {
        Cpx a = polyline[i], b = polyline[i + 1];
        len += std::abs(b - a) * (lambda_at(a) + 4.0 * lambda_at(0.5 * (a + b)) + lambda_at(b)) / 6.0;
    }
    return len;
}

double interpolate(const GraphSolution& sol, Cpx z) {
    const Locator& loc = locator_for(sol);
    int t = loc.locate(z, 1e-4);
    if (t < 0) throw std::runtime_error("interpolate: point outside the meshed region");
    auto bc = loc.bary(t, z);
    const auto& tri = sol.m().tris[t];
    return bc[0] * sol.u[tri[0]] + bc[1] * sol.u[tri[1]] + bc[2] * sol.u[tri[2]];
}

Cpx interpolate_gradient(const GraphSolution& sol, Cpx z) {
    const Locator& loc = locator_for(sol);
    int t = loc.locate(z, 1e-4);
    if (t < 0) throw std::runtime_error("interpolate: point outside the meshed region");
    return sol.fields().grad[t];
}

FluxReport flux_along(const GraphSolution& sol, const std::vector<Cpx>& polyline,
                      const std::string& name) {
    const Locator& loc = locator_for(sol);
    const TriMesh& mesh = sol.m();
    const TriangleFields& f = sol.fields();
    double h = mesh.target_h;

    double F = 0.0, L = 0.0;
    for (size_t i = 0; i + 1 < polyline.size(); ++i) {
        Cpx a = polyline[i], b = polyline[i + 1];
        double hyp = polyline_hyp_length({a, b});
        int pieces = std::max(1, static_cast<int>(std::ceil(hyp / (0.5 * h))));
        for (int p = 0; p < pieces; ++p) {
            Cpx p0 = a + (b - a) * (static_cast<double>(p) / pieces);
            Cpx p1 = a + (b - a) * (static_cast<double>(p + 1) / pieces);
            Cpx mid = 0.5 * (p0 + p1);
            int t = loc.locate(mid, 1e-4);
            if (t < 0) throw std::runtime_error("flux_along: curve exits the meshed region");
            Cpx dir = p1 - p0;
            double elen = std::abs(dir);
            if (elen == 0.0) continue;
            Cpx n(dir.imag() / elen, -dir.real() / elen);  // right-hand normal
            F += dot2(f.grad[t], n) / f.w[t] * elen;
            L += polyline_hyp_length({p0, p1});
        }
    }
    FluxReport rep;
    rep.value = F;
    rep.length = L;
    rep.ratio = L > 0.0 ? std::abs(F) / L : 0.0;
    rep.curve = name;
    return rep;
}

FluxReport flux_along_chain(const GraphSolution& sol, const BoundaryChain& chain, double t0,
                            double t1) {
    const TriMesh& mesh = sol.m();
    size_t n = chain.nodes.size();
    if (n < 2) throw std::invalid_argument("flux_along_chain: chain too short");
    size_t lo = static_cast<size_t>(t0 * (n - 1));
    size_t hi = static_cast<size_t>(t1 * (n - 1));
    hi = std::min(hi, n - 1);
    if (hi <= lo + 1) throw std::invalid_argument("flux_along_chain: empty chain segment");
    std::vector<Cpx> pts;
    for (size_t i = lo; i <= hi; ++i) pts.push_back(mesh.pos[chain.nodes[i]]);
    std::string name = "chain(tag=" + std::to_string(static_cast<int>(chain.tag)) +
                       ",which=" + std::to_string(chain.which) + ")";
    return flux_along(sol, pts, name);
}

DivergenceTrend divergence_indicator(const std::vector<GraphSolution>& sols, const DiskPoint& a,
                                     const DiskPoint& b) {
    GeodesicArc seg = geodesic_arc(a, b);
    std::vector<Cpx> pts;
    int n = 32;
    for (int i = 0; i <= n; ++i)
        pts.push_back(seg.carrier.point_at(seg.s_a + (seg.s_b - seg.s_a) * i / n).to_complex());
    DivergenceTrend trend;
    for (const auto& sol : sols) {
        FluxReport rep = flux_along(sol, pts, "divergence probe");
        trend.ratios.push_back(rep.ratio);
    }
    if (!trend.ratios.empty()) {
        double last = trend.ratios.back();
        trend.divergent = last > 0.99 && last > trend.ratios.front() - 1e-12 &&
                          trend.ratios.size() > 1;
    }
    return trend;
}

}  // namespace h2xr
