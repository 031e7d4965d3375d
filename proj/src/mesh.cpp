#include <algorithm>
#include <cstdio>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>

#include "h2xr/jsolve.hpp"

namespace h2xr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double wrap_2pi(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    return a;
}

// Height profile of the graph against a capped +-M edge, u(s) = -ln tanh(s/2).
double wall_profile(double s) {
    return -std::log(std::tanh(0.5 * std::max(s, 1e-300)));
}

// Fermi point: foot parameter s along the carrier, normal distance d on the
// interior (left) side.
Cpx fermi_point(const GeodesicCarrier& g, double s, double d) {
    double a = std::tanh(0.5 * s);
    Cpx zeta(0.0, std::tanh(0.5 * d));
    Cpx w = (zeta + a) / (1.0 + a * zeta);
    return g.to_axis.inverse().apply_complex(w);
}

double dist_to_carrier(const GeodesicCarrier& carrier, Cpx z) {
    Cpx w = carrier.to_axis.apply_complex(z);
    double denom = 1.0 - std::norm(w);
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    double y = w.imag();
    return 0.5 * std::acosh(1.0 + 8.0 * y * y / (denom * denom));
}

double hyp_dist_c(Cpx a, Cpx b) {
    double d2 = std::norm(a - b);
    return std::acosh(1.0 + 2.0 * d2 / ((1.0 - std::norm(a)) * (1.0 - std::norm(b))));
}

double hyp_seg_length(Cpx a, Cpx b) {
    auto lam = [](Cpx z) { return 2.0 / (1.0 - std::norm(z)); };
    return std::abs(b - a) * (lam(a) + 4.0 * lam(0.5 * (a + b)) + lam(b)) / 6.0;
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw std::runtime_error("mesher: root bracket failed");
    for (int it = 0; it < 90; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

uint64_t hash_mix(uint64_t a, uint64_t b, uint64_t c) {
    uint64_t h = a * 0x9E3779B97F4A7C15ull ^ (b + 0xD1B54A32D192ED03ull) * 0x94D049BB133111EBull;
    h ^= c * 0xBF58476D1CE4E5B9ull;
    h ^= h >> 31;
    h *= 0x7FB5D329728EA185ull;
    h ^= h >> 29;
    return h;
}

double hash_unit(uint64_t a, uint64_t b, uint64_t c) {  // in [-1, 1]
    return static_cast<double>(hash_mix(a, b, c) >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

// ----------------------------------------------------------------------
// Bowyer-Watson Delaunay. Used for the isotropic core only; the anisotropic
// parts of the mesh are triangulated structurally.
struct Delaunay {
    std::vector<Cpx> pts;
    struct Tri {
        int a, b, c;
        Cpx cc;
        double r2;
        bool alive = true;
    };
    std::vector<Tri> tris;

    static bool circumcircle(Cpx p1, Cpx p2, Cpx p3, Cpx& cc, double& r2) {
        Cpx d1 = p2 - p1, d2 = p3 - p1;
        double det = 2.0 * cross2(d1, d2);
        if (std::abs(det) < 1e-30) return false;
        double n1 = std::norm(d1), n2 = std::norm(d2);
        double ux = (d2.imag() * n1 - d1.imag() * n2) / det;
        double uy = (d1.real() * n2 - d2.real() * n1) / det;
        cc = p1 + Cpx(ux, uy);
        r2 = ux * ux + uy * uy;
        return true;
    }

    void add_tri(int a, int b, int c) {
        Tri t{a, b, c, {}, 0.0, true};
        if (!circumcircle(pts[a], pts[b], pts[c], t.cc, t.r2)) return;
        tris.push_back(t);
    }

    void triangulate(const std::vector<Cpx>& input) {
        pts = input;
        int n = static_cast<int>(pts.size());
        pts.emplace_back(-8.0, -8.0);
        pts.emplace_back(8.0, -8.0);
        pts.emplace_back(0.0, 11.0);
        add_tri(n, n + 1, n + 2);
        for (int p = 0; p < n; ++p) {
            std::vector<int> bad;
            for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
                if (!tris[t].alive) continue;
                if (std::norm(pts[p] - tris[t].cc) <= tris[t].r2 * (1.0 + 1e-12)) bad.push_back(t);
            }
            std::map<std::pair<int, int>, int> edge_count;
            for (int t : bad) {
                tris[t].alive = false;
                int v[3] = {tris[t].a, tris[t].b, tris[t].c};
                for (int e = 0; e < 3; ++e) {
                    int x = v[e], y = v[(e + 1) % 3];
                    edge_count[{std::min(x, y), std::max(x, y)}]++;
                }
            }
            for (const auto& [edge, count] : edge_count) {
                if (count != 1) continue;
                add_tri(edge.first, edge.second, p);
            }
        }
        for (auto& t : tris) {
            if (t.a >= n || t.b >= n || t.c >= n) t.alive = false;
        }
    }
};

// ----------------------------------------------------------------------

struct FanSide {
    int edge = -1;
    std::vector<int> seam_node;      // per band row
    std::vector<double> seam_foot;   // carrier param of each seam point
    std::vector<double> seam_theta;  // fan angle of each seam point
};

struct Fan {
    int corner = -1;
    MobiusIsometry to_frame;
    double phi_b = 0.0;  // frame direction of the outgoing B-edge at the corner
    double alpha = 0.0;  // interior angle
    std::vector<double> rings;
    std::vector<double> spokes;
    std::vector<std::vector<int>> grid;  // [ring][spoke]
    FanSide side_b, side_a;  // theta = 0 side (B-edge) and theta = alpha side (A-edge)
    int core_spoke_lo = 0, core_spoke_hi = 0;
};

struct Band {
    int edge = -1;
    std::vector<std::vector<int>> row_nodes;  // per row, ordered cut -> corner
    std::vector<int> cut_node;
};

struct Builder {
    const TruncatedDomain& dom;
    MeshParams prm;
    TriMesh mesh;
    double kappa, d_band, r_fan = 0.0;
    std::vector<double> rows;
    std::vector<Fan> fans;
    std::vector<Band> bands;
    std::vector<std::vector<int>> cut_middle;
    std::vector<char> tri_core;
    std::vector<std::pair<int, int>> interface_edges;
    std::set<int> iface_nodes;

    Builder(const TruncatedDomain& d, const MeshParams& p) : dom(d), prm(p) {
        kappa = prm.kappa > 0.0 ? prm.kappa : 5.0 * prm.h;
        d_band = 0.8 * prm.h;
        mesh.target_h = prm.h;
    }

    int add_node(Cpx z, BoundaryTag tag, double bc) {
        if (std::norm(z) >= 1.0 - kTauDisk) throw std::runtime_error("mesher: node escaped the disk");
        mesh.pos.push_back(z);
        mesh.node_tag.push_back(tag);
        mesh.node_piece.push_back(-1);
        mesh.dirichlet.push_back(bc);
        return static_cast<int>(mesh.pos.size()) - 1;
    }

    void add_tri(int a, int b, int c, bool core) {
        if (a == b || b == c || a == c) return;
        mesh.tris.push_back({a, b, c});
        tri_core.push_back(core ? 1 : 0);
    }

    void zip(const std::vector<int>& A, const std::vector<int>& B, bool core = false) {
        size_t i = 0, j = 0;
        while (i + 1 < A.size() || j + 1 < B.size()) {
            bool adv_a;
            if (i + 1 >= A.size())
                adv_a = false;
            else if (j + 1 >= B.size())
                adv_a = true;
            else
                adv_a = std::abs(mesh.pos[A[i + 1]] - mesh.pos[B[j]]) <=
                        std::abs(mesh.pos[B[j + 1]] - mesh.pos[A[i]]);
            if (adv_a) {
                add_tri(A[i], A[i + 1], B[j], core);
                ++i;
            } else {
                add_tri(A[i], B[j], B[j + 1], core);
                ++j;
            }
        }
    }

    double cut_value(Cpx z, int ideal_idx) const {
        int n = dom.poly.size();
        int edge_a = 2 * ideal_idx;
        int edge_b = ((2 * ideal_idx - 1) % n + n) % n;
        double sa = dist_to_carrier(dom.edges[edge_a].carrier, z);
        double sb = dist_to_carrier(dom.edges[edge_b].carrier, z);
        double v = wall_profile(sa) - wall_profile(sb);
        return std::clamp(v, -dom.cap, dom.cap);
    }

    void build_rows() {
        rows = {0.0};
        double d = dom.wall_floor;
        while (d < d_band * 0.999) {
            rows.push_back(d);
            d *= std::exp(kappa);
        }
        rows.push_back(d_band);
    }

    void build_fans() {
        int k = dom.k();
        double min_span = std::numeric_limits<double>::infinity();
        for (int i = 0; i < dom.poly.size(); ++i)
            min_span = std::min(min_span, dom.span_hi[i] - dom.span_lo[i]);
        r_fan = std::min(2.0 * prm.h, 0.42 * min_span);
        if (r_fan <= 2.0 * dom.corner_radius)
            throw std::runtime_error("mesher: domain too truncated for this mesh size");

        fans.resize(k);
        int R = static_cast<int>(rows.size()) - 1;
        for (int j = 0; j < k; ++j) {
            Fan& f = fans[j];
            f.corner = j;
            DiskPoint q = dom.poly.interior(j);
            Cpx qz = q.to_complex();
            f.to_frame = MobiusIsometry::translation_to_origin(q);
            int eb = 2 * j + 1, ea = 2 * j;
            const GeodesicArc& arc_b = dom.edges[eb];
            const GeodesicArc& arc_a = dom.edges[ea];
            double delta = 1e-5;
            Cpx wb = f.to_frame.apply_complex(arc_b.carrier.point_at(arc_b.s_a + delta).to_complex());
            Cpx wa = f.to_frame.apply_complex(arc_a.carrier.point_at(arc_a.s_b - delta).to_complex());
            f.phi_b = std::arg(wb);
            f.alpha = wrap_2pi(std::arg(wa) - f.phi_b);
            if (f.alpha <= 0.05 || f.alpha >= kPi + 0.05)
                throw std::runtime_error("mesher: corner angle out of range");
            double theta_cap = std::asin(std::min(1.0, std::sinh(d_band) / std::sinh(r_fan)));
            if (f.alpha < 2.0 * theta_cap + 0.12)
                throw std::runtime_error("mesher: corner angle too small for the band width");

            auto make_side = [&](int edge, bool corner_at_high_param) {
                FanSide side;
                side.edge = edge;
                const GeodesicCarrier& g = dom.edges[edge].carrier;
                double s_q = corner_at_high_param ? dom.edges[edge].s_b : dom.edges[edge].s_a;
                double dir = corner_at_high_param ? -1.0 : 1.0;
                side.seam_foot.resize(R + 1);
                side.seam_theta.resize(R + 1);
                side.seam_node.assign(R + 1, -1);
                for (int r = 0; r <= R; ++r) {
                    double d = rows[r];
                    double foot;
                    if (r == 0) {
                        foot = s_q + dir * r_fan;
                    } else {
                        auto fd = [&](double s) { return hyp_dist_c(fermi_point(g, s, d), qz) - r_fan; };
                        foot = bisect_root(fd, s_q, s_q + dir * 2.5 * r_fan);
                    }
                    side.seam_foot[r] = foot;
                    if (r == 0) {
                        side.seam_theta[r] = 0.0;  // on the edge by construction
                        continue;
                    }
                    Cpx pt = fermi_point(g, foot, d);
                    // Branch cut shifted away from 0 so tiny negatives stay tiny.
                    double th_global = wrap_2pi(std::arg(f.to_frame.apply_complex(pt)) - f.phi_b + 0.2) - 0.2;
                    double th = corner_at_high_param ? f.alpha - th_global : th_global;
                    side.seam_theta[r] = std::max(0.0, th);
                }
                return side;
            };
            f.side_b = make_side(eb, false);
            f.side_a = make_side(ea, true);

            std::vector<double> spokes(f.side_b.seam_theta.begin(), f.side_b.seam_theta.end());
            double th_b_max = *std::max_element(spokes.begin(), spokes.end());
            std::vector<double> a_sp;
            for (double th : f.side_a.seam_theta) a_sp.push_back(f.alpha - th);
            double th_a_min = *std::min_element(a_sp.begin(), a_sp.end());
            if (th_a_min - th_b_max < 0.02) {
                char buf[256];
                std::snprintf(buf, sizeof buf,
                              "mesher: wall fans overlap at corner %d (alpha=%.4f b_max=%.4f a_min=%.4f)",
                              j, f.alpha, th_b_max, th_a_min);
                throw std::runtime_error(buf);
            }
            double dth_mid = std::min(0.8 * prm.h / std::sinh(r_fan), kappa / 3.0);
            double span = th_a_min - th_b_max;
            int nmid = std::max(1, static_cast<int>(std::ceil(span / dth_mid)));
            for (int t = 1; t < nmid; ++t) spokes.push_back(th_b_max + span * t / nmid);
            spokes.insert(spokes.end(), a_sp.begin(), a_sp.end());
            std::sort(spokes.begin(), spokes.end());
            spokes.erase(std::unique(spokes.begin(), spokes.end(),
                                     [](double x, double y) { return std::abs(x - y) < 1e-12; }),
                         spokes.end());
            f.spokes = spokes;

            auto find_spoke = [&](double th) {
                auto it = std::lower_bound(f.spokes.begin(), f.spokes.end(), th - 1e-9);
                if (it == f.spokes.end() || std::abs(*it - th) > 1e-8)
                    throw std::runtime_error("mesher: lost a fan spoke");
                return static_cast<int>(it - f.spokes.begin());
            };
            f.core_spoke_lo = find_spoke(th_b_max);
            f.core_spoke_hi = find_spoke(th_a_min);

            f.rings = {dom.corner_radius};
            double rr = dom.corner_radius * std::exp(kappa);
            while (rr < r_fan * 0.999) {
                f.rings.push_back(rr);
                rr *= std::exp(kappa);
            }
            f.rings.push_back(r_fan);
            int T = static_cast<int>(f.rings.size()) - 1;

            std::map<int, std::pair<int, int>> outer_seam;  // spoke -> (side, row)
            for (int r = 0; r <= R; ++r) {
                outer_seam[find_spoke(f.side_b.seam_theta[r])] = {0, r};
                outer_seam[find_spoke(f.alpha - f.side_a.seam_theta[r])] = {1, r};
            }

            f.grid.assign(T + 1, std::vector<int>(f.spokes.size(), -1));
            MobiusIsometry from_frame = f.to_frame.inverse();
            for (int t = 0; t <= T; ++t) {
                for (int s = 0; s < static_cast<int>(f.spokes.size()); ++s) {
                    bool on_b = s == 0;
                    bool on_a = s + 1 == static_cast<int>(f.spokes.size());
                    BoundaryTag tag = BoundaryTag::None;
                    double bc = kNaN;
                    if (on_b) {
                        tag = BoundaryTag::BEdge;
                        bc = -dom.cap;
                    } else if (on_a) {
                        tag = BoundaryTag::AEdge;
                        bc = dom.cap;
                    } else if (t == 0) {
                        tag = BoundaryTag::CornerArc;  // free boundary
                    }
                    Cpx z;
                    auto seam = outer_seam.find(s);
                    if (t == T && seam != outer_seam.end()) {
                        const FanSide& side = seam->second.first == 0 ? f.side_b : f.side_a;
                        int r = seam->second.second;
                        z = fermi_point(dom.edges[side.edge].carrier, side.seam_foot[r], rows[r]);
                    } else {
                        z = from_frame.apply_complex(
                            std::polar(std::tanh(0.5 * f.rings[t]), f.phi_b + f.spokes[s]));
                    }
                    f.grid[t][s] = add_node(z, tag, bc);
                }
            }
            for (int r = 0; r <= R; ++r) {
                f.side_b.seam_node[r] = f.grid[T][find_spoke(f.side_b.seam_theta[r])];
                f.side_a.seam_node[r] = f.grid[T][find_spoke(f.alpha - f.side_a.seam_theta[r])];
            }
            for (int t = 0; t < T; ++t) zip(f.grid[t], f.grid[t + 1]);
        }
    }

    void build_bands() {
        int n = dom.poly.size();
        int R = static_cast<int>(rows.size()) - 1;
        bands.resize(n);
        for (int i = 0; i < n; ++i) {
            Band& band = bands[i];
            band.edge = i;
            bool is_a = dom.poly.edge_is_a(i);
            int corner = is_a ? i / 2 : (i - 1) / 2;
            int cut_idx = is_a ? i / 2 : ((i + 1) / 2) % dom.k();
            Fan& fan = fans[corner];
            FanSide& side = is_a ? fan.side_a : fan.side_b;
            const GeodesicCarrier& g = dom.edges[i].carrier;
            double dir = is_a ? 1.0 : -1.0;  // from the cut toward the corner
            double span_cut = is_a ? dom.span_lo[i] : dom.span_hi[i];

            band.row_nodes.resize(R + 1);
            band.cut_node.resize(R + 1);
            for (int r = 0; r <= R; ++r) {
                double d = rows[r];
                double s_cut;
                if (r == 0) {
                    s_cut = span_cut;
                } else {
                    auto fd = [&](double s) {
                        return dom.cuts[cut_idx].signed_depth(DiskPoint(fermi_point(g, s, d)));
                    };
                    s_cut = bisect_root(fd, span_cut - dir * 4.0, side.seam_foot[r]);
                }
                Cpx zc = fermi_point(g, s_cut, d);
                BoundaryTag ctag =
                    r == 0 ? (is_a ? BoundaryTag::AEdge : BoundaryTag::BEdge) : BoundaryTag::HoroCut;
                double cbc = r == 0 ? (is_a ? dom.cap : -dom.cap) : cut_value(zc, cut_idx);
                band.cut_node[r] = add_node(zc, ctag, cbc);

                std::vector<int>& rn = band.row_nodes[r];
                rn.push_back(band.cut_node[r]);
                double anchor = side.seam_foot[0];
                // Feet on a fixed grid anchored at the row-0 seam; clear both
                // the cut crossing and this row's seam by over half a step.
                double cmin_f = (dir * (anchor - side.seam_foot[r]) + 0.6 * prm.h) / prm.h;
                double cmax_f = (dir * (anchor - s_cut) - 0.6 * prm.h) / prm.h;
                int c_first = std::max(1, static_cast<int>(std::ceil(cmin_f)));
                int c_last = static_cast<int>(std::floor(cmax_f));
                for (int c = c_last; c >= c_first; --c) {
                    double s = anchor - dir * c * prm.h;
                    Cpx z = fermi_point(g, s, d);
                    BoundaryTag tag = r == 0 ? ctag : BoundaryTag::None;
                    double bc = r == 0 ? cbc : kNaN;
                    rn.push_back(add_node(z, tag, bc));
                }
                rn.push_back(side.seam_node[r]);
            }
            for (int r = 0; r < R; ++r) zip(band.row_nodes[r], band.row_nodes[r + 1]);
        }
    }

    void build_cuts() {
        int k = dom.k();
        int n = dom.poly.size();
        int R = static_cast<int>(rows.size()) - 1;
        cut_middle.resize(k);
        for (int j = 0; j < k; ++j) {
            int edge_b = ((2 * j - 1) % n + n) % n;
            int edge_a = 2 * j;
            const Band& bb = bands[edge_b];
            const Band& ba = bands[edge_a];
            Cpx pb = mesh.pos[bb.cut_node[R]];
            Cpx pa = mesh.pos[ba.cut_node[R]];
            EuclidCircle hc = horocycle_circle(dom.cuts[j]);
            double phb = std::arg(pb - hc.center);
            double pha = std::arg(pa - hc.center);
            double dphi = pha - phb;
            while (dphi <= -kPi) dphi += 2.0 * kPi;
            while (dphi > kPi) dphi -= 2.0 * kPi;
            {
                Cpx mid = hc.center + std::polar(hc.radius, phb + 0.5 * dphi);
                bool inside = true;
                for (int e = 0; e < n && inside; ++e)
                    if (dom.edges[e].carrier.side_of(DiskPoint(mid)) < -1e-12) inside = false;
                if (!inside) dphi += dphi > 0.0 ? -2.0 * kPi : 2.0 * kPi;
            }
            auto at = [&](double t) { return hc.center + std::polar(hc.radius, phb + t * dphi); };

            std::vector<double> ts{0.0, 1.0};
            if (prm.mirror_x && std::abs(hc.center.real()) < hc.radius &&
                at(0.0).real() * at(1.0).real() < 0.0) {
                double tx = bisect_root([&](double t) { return at(t).real(); }, 0.0, 1.0);
                ts = {0.0, tx, 1.0};
            }
            for (size_t seg = 0; seg + 1 < ts.size();) {
                double t0 = ts[seg], t1 = ts[seg + 1];
                Cpx z0 = at(t0), z1 = at(t1);
                bool split = hyp_seg_length(z0, z1) > 0.8 * prm.h ||
                             std::abs(cut_value(z0, j) - cut_value(z1, j)) > kappa;
                if (split && t1 - t0 > 1e-7) {
                    ts.insert(ts.begin() + seg + 1, 0.5 * (t0 + t1));
                } else {
                    ++seg;
                }
            }
            std::vector<int>& mid_nodes = cut_middle[j];
            mid_nodes.push_back(bb.cut_node[R]);
            for (size_t t = 1; t + 1 < ts.size(); ++t) {
                Cpx z = at(ts[t]);
                if (prm.mirror_x && std::abs(z.real()) < 1e-13) z = Cpx(0.0, z.imag());
                mid_nodes.push_back(add_node(z, BoundaryTag::HoroCut, cut_value(z, j)));
            }
            mid_nodes.push_back(ba.cut_node[R]);
        }
        if (prm.cut_data == CutData::Linear) {
            for (int j = 0; j < k; ++j) {
                std::vector<int> chain = full_cut_chain(j);
                std::vector<double> s{0.0};
                for (size_t t = 1; t < chain.size(); ++t)
                    s.push_back(s.back() + hyp_seg_length(mesh.pos[chain[t - 1]], mesh.pos[chain[t]]));
                for (size_t t = 0; t < chain.size(); ++t) {
                    int node = chain[t];
                    if (mesh.node_tag[node] != BoundaryTag::HoroCut) continue;
                    mesh.dirichlet[node] = -dom.cap + 2.0 * dom.cap * s[t] / s.back();
                }
            }
        }
    }

    std::vector<int> full_cut_chain(int j) const {
        int n = dom.poly.size();
        int edge_b = ((2 * j - 1) % n + n) % n;
        int edge_a = 2 * j;
        std::vector<int> chain;
        for (int r = 0; r < static_cast<int>(rows.size()); ++r)
            chain.push_back(bands[edge_b].cut_node[r]);
        for (size_t t = 1; t + 1 < cut_middle[j].size(); ++t) chain.push_back(cut_middle[j][t]);
        for (int r = static_cast<int>(rows.size()) - 1; r >= 0; --r)
            chain.push_back(bands[edge_a].cut_node[r]);
        return chain;
    }

    bool in_band_zone(Cpx z, double slack) const {
        for (int i = 0; i < dom.poly.size(); ++i) {
            if (dist_to_carrier(dom.edges[i].carrier, z) > d_band + slack) continue;
            double s = dom.edges[i].carrier.param_of(DiskPoint(z));
            double lo = std::min(dom.span_lo[i], dom.span_hi[i]) - 2.0 * prm.h;
            double hi = std::max(dom.span_lo[i], dom.span_hi[i]) + 2.0 * prm.h;
            if (s >= lo && s <= hi) return true;
        }
        return false;
    }

    bool in_core(Cpx z, double slack) const {
        if (!dom.contains(z, 1e-12)) return false;
        if (in_band_zone(z, slack)) return false;
        for (int j = 0; j < dom.k(); ++j)
            if (hyp_dist_c(z, dom.poly.interior(j).to_complex()) < r_fan + slack) return false;
        return true;
    }

    double local_target(Cpx z) const {
        double dfeat = std::numeric_limits<double>::infinity();
        for (int j = 0; j < dom.k(); ++j)
            dfeat = std::min(dfeat, hyp_dist_c(z, dom.poly.interior(j).to_complex()) - r_fan);
        for (const Horocycle& cut : dom.cuts) dfeat = std::min(dfeat, -cut.signed_depth(DiskPoint(z)));
        for (int i = 0; i < dom.poly.size(); ++i)
            dfeat = std::min(dfeat, dist_to_carrier(dom.edges[i].carrier, z) - d_band);
        double grade = std::clamp(0.45 + 0.55 * dfeat / (2.0 * prm.h), 0.45, 1.0);
        return 0.95 * prm.h * grade * (1.0 - std::norm(z)) * 0.5;
    }

    struct HashGrid {
        double cell;
        std::unordered_map<int64_t, std::vector<Cpx>> cells;
        explicit HashGrid(double c) : cell(c) {}
        int64_t key(double x, double y) const {
            return (static_cast<int64_t>(std::floor(x / cell)) << 24) ^
                   (static_cast<int64_t>(std::floor(y / cell)) & 0xFFFFFF);
        }
        void insert(Cpx p) { cells[key(p.real(), p.imag())].push_back(p); }
        bool near(Cpx p, double r) const {
            int steps = std::max(1, static_cast<int>(std::ceil(r / cell)));
            for (int dx = -steps; dx <= steps; ++dx)
                for (int dy = -steps; dy <= steps; ++dy) {
                    auto it = cells.find(key(p.real() + dx * cell, p.imag() + dy * cell));
                    if (it == cells.end()) continue;
                    for (Cpx q : it->second)
                        if (std::abs(p - q) < r) return true;
                }
            return false;
        }
    };

    void build_core() {
        std::vector<int> iface;
        auto add_iface = [&](const std::vector<int>& chain, bool interior_seam) {
            // Interior seams must end up with a triangle on both sides; the
            // cut middles are domain boundary and are checked via the chains.
            if (interior_seam) {
                for (size_t t = 0; t + 1 < chain.size(); ++t)
                    interface_edges.emplace_back(std::min(chain[t], chain[t + 1]),
                                                 std::max(chain[t], chain[t + 1]));
            }
            for (int id : chain) iface.push_back(id);
        };
        int R = static_cast<int>(rows.size()) - 1;
        for (const Band& b : bands) add_iface(b.row_nodes[R], true);
        for (const Fan& f : fans) {
            std::vector<int> arc;
            int T = static_cast<int>(f.rings.size()) - 1;
            for (int s = f.core_spoke_lo; s <= f.core_spoke_hi; ++s) arc.push_back(f.grid[T][s]);
            add_iface(arc, true);
        }
        for (const auto& cm : cut_middle) add_iface(cm, false);
        std::sort(iface.begin(), iface.end());
        iface.erase(std::unique(iface.begin(), iface.end()), iface.end());
        iface_nodes.insert(iface.begin(), iface.end());

        double emax = 0.95 * prm.h * 0.5;
        HashGrid grid(emax * 1.05);
        for (int id : iface) grid.insert(mesh.pos[id]);

        // Deepest level needed: the core lies inside the structured boundary,
        // so its radius is bounded by the nodes created so far.
        double r_max = 0.0;
        for (Cpx z : mesh.pos) r_max = std::max(r_max, std::abs(z));
        r_max = std::min(1.0 - 1e-12, r_max + 0.05);
        double e_min = 0.45 * 0.95 * prm.h * 0.5 * std::max(1e-8, 1.0 - r_max * r_max);
        int max_level = std::max(0, static_cast<int>(std::ceil(std::log2(emax / e_min))) + 1);

        std::vector<Cpx> lat;
        for (int lev = 0; lev <= max_level; ++lev) {
            double sig = emax / static_cast<double>(1 << lev);
            if (sig < 5e-7) break;
            double row_h = sig * 0.8660254037844386;
            int jmax = static_cast<int>(std::ceil(r_max / row_h)) + 1;
            for (int jj = -jmax; jj <= jmax; ++jj) {
                double y = jj * row_h;
                double x_half = std::sqrt(std::max(0.0, r_max * r_max - y * y)) + sig;
                int imax = static_cast<int>(std::ceil(x_half / sig)) + 2;
                for (int ii = -imax; ii <= imax; ++ii) {
                    int mcell = 2 * ii + (jj & 1);
                    if (prm.mirror_x && mcell < 0) continue;
                    double x = 0.5 * mcell * sig;
                    if (x * x + y * y >= 1.0) continue;
                    double jx = 0.15 * sig * hash_unit(std::abs(mcell), jj + (1 << 20), lev);
                    double jy = 0.15 * sig * hash_unit(std::abs(mcell) + (1 << 21), jj, lev);
                    if (mcell == 0) jx = 0.0;
                    Cpx p(x + jx, y + jy);
                    if (std::norm(p) >= 1.0) continue;
                    double e = local_target(p);
                    if (!(sig <= e * 1.42 && sig > e * 0.71)) continue;
                    if (!in_core(p, 0.0)) continue;
                    if (prm.mirror_x && std::abs(p.real()) < 0.36 * e) p = Cpx(0.0, p.imag());
                    if (grid.near(p, 0.70 * e)) continue;
                    grid.insert(p);
                    lat.push_back(p);
                    if (prm.mirror_x && p.real() > 0.0) {
                        Cpx pm(-p.real(), p.imag());
                        if (!grid.near(pm, 0.70 * e)) {
                            grid.insert(pm);
                            lat.push_back(pm);
                        }
                    }
                }
            }
        }

        int n_iface = static_cast<int>(iface.size());
        std::vector<Cpx> pts;
        for (int id : iface) pts.push_back(mesh.pos[id]);
        pts.insert(pts.end(), lat.begin(), lat.end());

        // Blocked edges (Delaunay-local indices): the structured seams and
        // the cut boundary.
        std::set<std::pair<int, int>> blocked;
        {
            std::unordered_map<int64_t, int> global_to_local;
            for (int t = 0; t < n_iface; ++t) global_to_local[iface[t]] = t;
            auto block = [&](int ga, int gb) {
                auto ia = global_to_local.find(ga), ib = global_to_local.find(gb);
                if (ia == global_to_local.end() || ib == global_to_local.end()) return;
                blocked.insert({std::min(ia->second, ib->second), std::max(ia->second, ib->second)});
            };
            for (auto [a, b] : interface_edges) block(a, b);
            for (const auto& cm : cut_middle)
                for (size_t t = 0; t + 1 < cm.size(); ++t) block(cm[t], cm[t + 1]);
        }

        // The core is the flood-fill component seeded at lattice points that
        // never crosses a seam or cut edge. This excludes "ear" triangles
        // over the concave seam polylines, which would overlap the structured
        // regions. A couple of Lloyd passes on the lattice relax the flat
        // triangles that form in narrow pockets between seams.
        std::vector<std::array<int, 3>> core_tris;
        for (int pass = 0; pass < 3; ++pass) {
            Delaunay dt;
            dt.triangulate(pts);
            std::map<std::pair<int, int>, std::array<int, 2>> edge_tris;
            std::vector<int> live;
            for (int t = 0; t < static_cast<int>(dt.tris.size()); ++t) {
                if (!dt.tris[t].alive) continue;
                live.push_back(t);
                int v[3] = {dt.tris[t].a, dt.tris[t].b, dt.tris[t].c};
                for (int e = 0; e < 3; ++e) {
                    auto key =
                        std::make_pair(std::min(v[e], v[(e + 1) % 3]), std::max(v[e], v[(e + 1) % 3]));
                    auto it = edge_tris.find(key);
                    if (it == edge_tris.end())
                        edge_tris[key] = {t, -1};
                    else
                        it->second[1] = t;
                }
            }
            std::set<int> in_queue;
            std::vector<int> queue;
            for (int t : live) {
                int v[3] = {dt.tris[t].a, dt.tris[t].b, dt.tris[t].c};
                if (v[0] >= n_iface || v[1] >= n_iface || v[2] >= n_iface) {
                    if (in_queue.insert(t).second) queue.push_back(t);
                }
            }
            if (queue.empty()) {
                for (int t : live) {
                    Cpx c = (dt.pts[dt.tris[t].a] + dt.pts[dt.tris[t].b] + dt.pts[dt.tris[t].c]) / 3.0;
                    if (in_core(c, 0.0)) {
                        if (in_queue.insert(t).second) queue.push_back(t);
                        break;
                    }
                }
            }
            for (size_t qi = 0; qi < queue.size(); ++qi) {
                int t = queue[qi];
                int v[3] = {dt.tris[t].a, dt.tris[t].b, dt.tris[t].c};
                for (int e = 0; e < 3; ++e) {
                    auto key =
                        std::make_pair(std::min(v[e], v[(e + 1) % 3]), std::max(v[e], v[(e + 1) % 3]));
                    if (blocked.count(key)) continue;
                    const auto& pair = edge_tris[key];
                    int other = pair[0] == t ? pair[1] : pair[0];
                    if (other >= 0 && in_queue.insert(other).second) queue.push_back(other);
                }
            }
            core_tris.clear();
            for (int t : queue) core_tris.push_back({dt.tris[t].a, dt.tris[t].b, dt.tris[t].c});
            if (core_tris.empty()) throw std::runtime_error("mesher: empty core");
            if (pass == 2) break;

            // Lloyd step on lattice points only.
            std::vector<Cpx> accum(pts.size(), Cpx(0.0, 0.0));
            std::vector<int> count(pts.size(), 0);
            for (const auto& t : core_tris) {
                for (int e = 0; e < 3; ++e) {
                    int x = t[e];
                    if (x < n_iface) continue;
                    accum[x] += pts[t[(e + 1) % 3]] + pts[t[(e + 2) % 3]];
                    count[x] += 2;
                }
            }
            for (size_t p = n_iface; p < pts.size(); ++p) {
                if (count[p] == 0) continue;
                Cpx target = accum[p] / static_cast<double>(count[p]);
                if (prm.mirror_x && std::abs(pts[p].real()) < 1e-13) target = Cpx(0.0, target.imag());
                Cpx moved = pts[p] + 0.8 * (target - pts[p]);
                if (in_core(moved, 0.0)) pts[p] = moved;
            }
        }

        std::vector<int> ids(pts.size());
        for (int t = 0; t < n_iface; ++t) ids[t] = iface[t];
        for (size_t t = n_iface; t < pts.size(); ++t) ids[t] = add_node(pts[t], BoundaryTag::None, kNaN);
        for (const auto& t : core_tris) add_tri(ids[t[0]], ids[t[1]], ids[t[2]], true);
    }

    void build_chains() {
        int k = dom.k();
        for (int j = 0; j < k; ++j) {
            int ea = 2 * j, eb = 2 * j + 1;
            Fan& f = fans[j];
            int T = static_cast<int>(f.rings.size()) - 1;
            int S = static_cast<int>(f.spokes.size()) - 1;

            BoundaryChain a_chain{BoundaryTag::AEdge, ea, {}};
            a_chain.nodes = bands[ea].row_nodes[0];
            for (int t = T - 1; t >= 0; --t) a_chain.nodes.push_back(f.grid[t][S]);
            mesh.chains.push_back(std::move(a_chain));

            BoundaryChain arc_chain{BoundaryTag::CornerArc, j, {}};
            for (int s = S; s >= 0; --s) arc_chain.nodes.push_back(f.grid[0][s]);
            mesh.chains.push_back(std::move(arc_chain));

            BoundaryChain b_chain{BoundaryTag::BEdge, eb, {}};
            for (int t = 0; t <= T; ++t) b_chain.nodes.push_back(f.grid[t][0]);
            {
                std::vector<int> row0 = bands[eb].row_nodes[0];
                std::reverse(row0.begin(), row0.end());
                for (size_t t = 1; t < row0.size(); ++t) b_chain.nodes.push_back(row0[t]);
            }
            mesh.chains.push_back(std::move(b_chain));

            BoundaryChain cut_chain{BoundaryTag::HoroCut, (j + 1) % k, {}};
            cut_chain.nodes = full_cut_chain((j + 1) % k);
            mesh.chains.push_back(std::move(cut_chain));
        }
        for (size_t c = 0; c < mesh.chains.size(); ++c) {
            for (int id : mesh.chains[c].nodes)
                if (mesh.node_piece[id] < 0) mesh.node_piece[id] = static_cast<int>(c);
        }
    }

    void finalize() {
        for (auto& t : mesh.tris) {
            Cpx a = mesh.pos[t[0]], b = mesh.pos[t[1]], c = mesh.pos[t[2]];
            if (cross2(b - a, c - a) < 0.0) std::swap(t[1], t[2]);
        }
        {
            std::vector<std::array<int, 3>> keep;
            std::vector<char> keep_core;
            for (size_t t = 0; t < mesh.tris.size(); ++t) {
                auto& tri = mesh.tris[t];
                Cpx a = mesh.pos[tri[0]], b = mesh.pos[tri[1]], c = mesh.pos[tri[2]];
                if (std::abs(cross2(b - a, c - a)) < 1e-28) continue;
                keep.push_back(tri);
                keep_core.push_back(tri_core[t]);
            }
            mesh.tris = std::move(keep);
            tri_core = std::move(keep_core);
        }

        std::map<std::pair<int, int>, int> edge_count;
        for (const auto& t : mesh.tris) {
            for (int e = 0; e < 3; ++e) {
                int x = t[e], y = t[(e + 1) % 3];
                edge_count[{std::min(x, y), std::max(x, y)}]++;
            }
        }
        for (const auto& [e, c] : edge_count) {
            if (c > 2) {
                std::string detail;
                for (size_t t = 0; t < mesh.tris.size(); ++t) {
                    const auto& tri = mesh.tris[t];
                    for (int v = 0; v < 3; ++v) {
                        int x = tri[v], y = tri[(v + 1) % 3];
                        if (std::min(x, y) == e.first && std::max(x, y) == e.second) {
                            detail += " tri(" + std::to_string(tri[0]) + "," + std::to_string(tri[1]) +
                                      "," + std::to_string(tri[2]) + (tri_core[t] ? ",core)" : ",struct)");
                        }
                    }
                }
                char buf[128];
                std::snprintf(buf, sizeof buf, " at (%.5f,%.5f)", mesh.pos[e.first].real(),
                              mesh.pos[e.first].imag());
                throw std::runtime_error("mesher: non-manifold edge (" + std::to_string(e.first) +
                                         "," + std::to_string(e.second) + ")" + buf + detail);
            }
        }
        for (auto [a, b] : interface_edges) {
            auto it = edge_count.find({std::min(a, b), std::max(a, b)});
            if (it == edge_count.end() || it->second != 2) {
                char buf[256];
                std::snprintf(buf, sizeof buf,
                              "mesher: core does not conform to the structured seam: edge (%d,%d) "
                              "count %d at (%.6f,%.6f)-(%.6f,%.6f)",
                              a, b, it == edge_count.end() ? 0 : it->second, mesh.pos[a].real(),
                              mesh.pos[a].imag(), mesh.pos[b].real(), mesh.pos[b].imag());
                throw std::runtime_error(buf);
            }
        }
        std::set<std::pair<int, int>> chain_edges;
        for (const auto& ch : mesh.chains) {
            for (size_t t = 0; t + 1 < ch.nodes.size(); ++t)
                chain_edges.insert({std::min(ch.nodes[t], ch.nodes[t + 1]),
                                    std::max(ch.nodes[t], ch.nodes[t + 1])});
        }
        for (const auto& [e, c] : edge_count) {
            if (c == 1 && !chain_edges.count(e)) {
                char buf[256];
                std::snprintf(buf, sizeof buf,
                              "mesher: untagged boundary edge (%d,%d) tags (%d,%d) at "
                              "(%.5f,%.5f)-(%.5f,%.5f)",
                              e.first, e.second, static_cast<int>(mesh.node_tag[e.first]),
                              static_cast<int>(mesh.node_tag[e.second]), mesh.pos[e.first].real(),
                              mesh.pos[e.first].imag(), mesh.pos[e.second].real(),
                              mesh.pos[e.second].imag());
                throw std::runtime_error(buf);
            }
        }
        for (const auto& e : chain_edges) {
            auto it = edge_count.find(e);
            if (it == edge_count.end() || it->second != 1)
                throw std::runtime_error("mesher: boundary chain edge not on the mesh boundary");
        }

        // Quality: the isotropic interior must meet the angle threshold; core
        // triangles touching a graded seam inherit its anisotropy and only
        // get a sanity bound; the structured bands and fans are anisotropic
        // by design and are excluded.
        double min_core = 180.0, min_all = 180.0, min_transition = 180.0;
        for (size_t t = 0; t < mesh.tris.size(); ++t) {
            const auto& tri = mesh.tris[t];
            Cpx p[3] = {mesh.pos[tri[0]], mesh.pos[tri[1]], mesh.pos[tri[2]]};
            bool transition = tri_core[t] && (iface_nodes.count(tri[0]) || iface_nodes.count(tri[1]) ||
                                              iface_nodes.count(tri[2]));
            for (int v = 0; v < 3; ++v) {
                Cpx u = p[(v + 1) % 3] - p[v], w = p[(v + 2) % 3] - p[v];
                double ang =
                    std::acos(std::clamp(dot2(u, w) / (std::abs(u) * std::abs(w)), -1.0, 1.0)) * 180.0 /
                    kPi;
                min_all = std::min(min_all, ang);
                if (tri_core[t]) {
                    if (transition)
                        min_transition = std::min(min_transition, ang);
                    else
                        min_core = std::min(min_core, ang);
                }
            }
        }
        mesh.quality.min_angle_core = min_core;
        mesh.quality.min_angle_all = min_all;
        mesh.quality.nodes = mesh.n_nodes();
        mesh.quality.triangles = mesh.n_tris();
        if (min_core < prm.min_core_angle_deg)
            throw std::runtime_error("mesher: interior quality below threshold (min angle " +
                                     std::to_string(min_core) + " deg)");
        if (min_transition < 3.0)
            throw std::runtime_error("mesher: seam transition sliver (min angle " +
                                     std::to_string(min_transition) + " deg)");
    }

    TriMesh run() {
        build_rows();
        build_fans();
        build_bands();
        build_cuts();
        build_core();
        build_chains();
        finalize();
        return std::move(mesh);
    }
};

}  // namespace

TriMesh build_truncated_mesh(const TruncatedDomain& dom, const MeshParams& params) {
    Builder b(dom, params);
    return b.run();
}

}  // namespace h2xr
