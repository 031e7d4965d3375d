#include "h2xr/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace h2xr {

namespace {

bool slot_is_ideal(const std::vector<PolyVertex>& v, int i) {
    return is_ideal(v[static_cast<size_t>(i)]);
}

// Shoelace orientation of the Euclidean representatives.
double orientation_area(const std::vector<PolyVertex>& v) {
    double s = 0.0;
    int n = static_cast<int>(v.size());
    for (int i = 0; i < n; ++i) {
        Cpx a = vertex_complex(v[i]);
        Cpx b = vertex_complex(v[(i + 1) % n]);
        s += cross2(a, b);
    }
    return 0.5 * s;
}

// Subtract [a,b] from a sorted disjoint interval list.
void subtract_interval(std::vector<std::pair<double, double>>& ivs, double a, double b) {
    if (!(b > a)) return;
    std::vector<std::pair<double, double>> out;
    out.reserve(ivs.size() + 1);
    for (auto [lo, hi] : ivs) {
        if (b <= lo || a >= hi) {
            out.emplace_back(lo, hi);
            continue;
        }
        if (a > lo) out.emplace_back(lo, a);
        if (b < hi) out.emplace_back(b, hi);
    }
    ivs = std::move(out);
}

}  // namespace

SemiIdealPolygon::SemiIdealPolygon(std::vector<PolyVertex> verts) : verts_(std::move(verts)) {
    int n = static_cast<int>(verts_.size());
    if (n < 4 || n % 2 != 0)
        throw std::invalid_argument("SemiIdealPolygon: vertex count must be even and >= 4");
    for (int i = 0; i < n; ++i) {
        if (slot_is_ideal(verts_, i) == slot_is_ideal(verts_, (i + 1) % n))
            throw std::invalid_argument("SemiIdealPolygon: vertices must alternate ideal/interior");
    }
    if (orientation_area(verts_) < 0.0) std::reverse(verts_.begin(), verts_.end());
    if (!slot_is_ideal(verts_, 0)) std::rotate(verts_.begin(), verts_.begin() + 1, verts_.end());
}

SemiIdealPolygon SemiIdealPolygon::transformed(const MobiusIsometry& iso) const {
    std::vector<PolyVertex> out;
    out.reserve(verts_.size());
    for (const auto& v : verts_) out.push_back(iso(v));
    return SemiIdealPolygon(std::move(out));
}

ValidationReport validate_semi_ideal(const std::vector<PolyVertex>& verts, double tol) {
    ValidationReport rep;
    int n = static_cast<int>(verts.size());
    if (n < 4 || n % 2 != 0) {
        rep.violations.push_back({"count", -1, "vertex count must be even and >= 4"});
        return rep;
    }
    rep.alternation_ok = true;
    for (int i = 0; i < n; ++i) {
        if (is_ideal(verts[i]) == is_ideal(verts[(i + 1) % n])) {
            rep.alternation_ok = false;
            rep.violations.push_back({"alternation", i, "two consecutive vertices of the same kind"});
        }
    }
    if (!rep.alternation_ok) return rep;

    std::vector<PolyVertex> v = verts;
    if (orientation_area(v) < 0.0) std::reverse(v.begin(), v.end());

    rep.convex_ok = true;
    rep.origin_inside = true;
    DiskPoint origin(0.0, 0.0);
    for (int i = 0; i < n; ++i) {
        GeodesicCarrier carrier;
        try {
            carrier = carrier_through(v[i], v[(i + 1) % n]);
        } catch (const std::domain_error&) {
            rep.convex_ok = false;
            rep.violations.push_back({"convexity", i, "degenerate edge"});
            continue;
        }
        for (int j = 0; j < n; ++j) {
            if (j == i || j == (i + 1) % n) continue;
            if (carrier.side_of(v[j]) < -tol) {
                rep.convex_ok = false;
                rep.violations.push_back(
                    {"convexity", i, "vertex " + std::to_string(j) + " on the wrong side"});
                break;
            }
        }
        if (carrier.side_of(origin) <= tol) {
            rep.origin_inside = false;
            rep.violations.push_back({"origin", i, "origin not strictly inside this edge"});
        }
    }
    return rep;
}

ValidationReport validate_semi_ideal(const SemiIdealPolygon& poly, double tol) {
    return validate_semi_ideal(poly.vertices(), tol);
}

NeighborGapResult neighbor_horocycle_test(const SemiIdealPolygon& poly, int j, double tol) {
    const IdealPoint& base = poly.ideal(j);
    const DiskPoint& prev = poly.interior(j - 1);
    const DiskPoint& next = poly.interior(j);
    NeighborGapResult r;
    r.gap = busemann_gap(base, prev, next);
    if (std::abs(r.gap) < tol) {
        double level = 0.5 * (busemann_level(base, prev) + busemann_level(base, next));
        r.common = Horocycle{base, level};
    }
    return r;
}

std::vector<Horocycle> canonical_horocycles(const SemiIdealPolygon& poly, double tol) {
    std::vector<Horocycle> out;
    out.reserve(poly.k());
    for (int j = 0; j < poly.k(); ++j) {
        NeighborGapResult r = neighbor_horocycle_test(poly, j, tol);
        if (!r.common)
            throw std::invalid_argument("equal-gap condition fails at ideal vertex " +
                                        std::to_string(j) + " (gap " + std::to_string(r.gap) + ")");
        out.push_back(*r.common);
    }
    return out;
}

LemmaAdmissibility admissible_by_lemma(const SemiIdealPolygon& poly, double gap_tol,
                                       double depth_tol) {
    LemmaAdmissibility res;
    res.horodisks = canonical_horocycles(poly, gap_tol);
    res.admissible = true;
    res.worst_depth = -std::numeric_limits<double>::infinity();
    int k = poly.k();
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            // Interior vertex p_{2j} is adjacent to the horodisk's ideal
            // vertex when j == i or j == i-1 (mod k).
            if (j == i || (j + 1) % k == i) continue;
            double depth = res.horodisks[i].signed_depth(poly.interior(j));
            res.worst_depth = std::max(res.worst_depth, depth);
            if (depth >= -depth_tol) {
                res.admissible = false;
                if (!res.witness) res.witness = std::make_pair(i, j);
            }
        }
    }
    return res;
}

namespace {

struct ShrunkDisks {
    std::vector<Horocycle> disks;
};

// Length of the arc's part outside every shrunk horodisk.
double outside_length(const GeodesicArc& arc, const std::vector<Horocycle>& disks) {
    std::vector<std::pair<double, double>> ivs{{arc.s_a, arc.s_b}};
    for (const Horocycle& h : disks) {
        auto cut = horodisk_interval(arc.carrier, h);
        if (cut) subtract_interval(ivs, cut->first, cut->second);
    }
    double len = 0.0;
    for (auto [lo, hi] : ivs) {
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw std::runtime_error("outside_length: unbounded piece survived truncation");
        len += hi - lo;
    }
    return len;
}

}  // namespace

std::vector<double> truncated_edge_lengths(const SemiIdealPolygon& poly, double m, double gap_tol) {
    std::vector<Horocycle> disks = canonical_horocycles(poly, gap_tol);
    for (auto& h : disks) h.level += m;
    std::vector<double> out;
    for (int i = 0; i < poly.size(); ++i) out.push_back(outside_length(poly.edge(i), disks));
    return out;
}

BruteForceAdmissibility admissible_brute_force(const SemiIdealPolygon& poly, double m,
                                               double gap_tol, double rel_eps) {
    int n = poly.size();
    if (n > 20) throw std::invalid_argument("admissible_brute_force: 2k > 20");
    std::vector<Horocycle> disks = canonical_horocycles(poly, gap_tol);
    for (auto& h : disks) h.level += m;

    BruteForceAdmissibility res;
    res.admissible = true;
    res.min_margin = std::numeric_limits<double>::infinity();
    res.min_margin_rel = std::numeric_limits<double>::infinity();

    uint32_t full = (n >= 32) ? 0u : ((1u << n) - 1u);
    for (uint32_t mask = 0; mask <= full; ++mask) {
        int cnt = __builtin_popcount(mask);
        if (cnt < 3 || mask == full) continue;

        InscribedPolygon insc;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) insc.slots.push_back(i);

        int sz = cnt;
        for (int t = 0; t < sz; ++t) {
            int s0 = insc.slots[t];
            int s1 = insc.slots[(t + 1) % sz];
            bool adjacent = (s1 == (s0 + 1) % n);
            GeodesicArc arc = adjacent ? poly.edge(s0) : geodesic_arc(poly.vertex(s0), poly.vertex(s1));
            double len = outside_length(arc, disks);
            insc.gamma += len;
            if (adjacent) {
                if (poly.edge_is_a(s0))
                    insc.alpha += len;
                else
                    insc.beta += len;
            }
        }
        ++res.polygons_tested;

        double margin = insc.margin();
        double rel = insc.gamma > 0.0 ? margin / insc.gamma : -1.0;
        if (rel < res.min_margin_rel) {
            res.min_margin_rel = rel;
            res.min_margin = margin;
            res.worst = insc;
        }
    }
    res.admissible = res.min_margin_rel > rel_eps;
    return res;
}

SemiIdealPolygon random_equal_gap_polygon(std::mt19937_64& rng, int k) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int attempt = 0; attempt < 400; ++attempt) {
        // Angular gaps bounded below so ideal vertices stay separated.
        std::vector<double> gaps(k);
        double total = 0.0;
        for (int i = 0; i < k; ++i) {
            gaps[i] = 0.45 + unif(rng);
            total += gaps[i];
        }
        std::vector<double> theta(k), dtheta(k);
        double acc = unif(rng) * 2.0 * kPi;
        for (int i = 0; i < k; ++i) {
            theta[i] = acc;
            dtheta[i] = gaps[i] / total * 2.0 * kPi;
            acc += dtheta[i];
        }
        // Horocycles at adjacent ideal vertices intersect iff the levels
        // satisfy l_i + l_{i+1} <= B_i = -2 ln sin(dtheta_i / 2). Sampling
        // below the pairwise bounds guarantees every interior vertex exists.
        std::vector<double> bound(k), level(k);
        for (int i = 0; i < k; ++i) bound[i] = -2.0 * std::log(std::sin(0.5 * dtheta[i]));
        for (int i = 0; i < k; ++i) {
            double b = std::min(bound[(i + k - 1) % k], bound[i]);
            // Occasional deep levels produce inadmissible samples, so the
            // two admissibility oracles get exercised on both verdicts.
            double u = 0.05 + 0.85 * unif(rng);
            if (unif(rng) < 0.3) u += 2.2 * unif(rng);
            level[i] = 0.5 * b - u;
        }

        std::vector<PolyVertex> verts;
        bool ok = true;
        for (int i = 0; i < k && ok; ++i) {
            Horocycle h1{IdealPoint(theta[i]), level[i]};
            Horocycle h2{IdealPoint(theta[(i + 1) % k]), level[(i + 1) % k]};
            auto pts = intersect_horocycles(h1, h2);
            if (pts.size() < 2) {
                ok = false;
                break;
            }
            // Take the intersection lying in the angular sector between the
            // two tangency points; the other one sits on the wrong side.
            ok = false;
            for (const DiskPoint& p : pts) {
                double a = std::arg(p.to_complex()) - theta[i];
                a = std::fmod(a, 2.0 * kPi);
                if (a < 0.0) a += 2.0 * kPi;
                if (a > 1e-9 && a < dtheta[i] - 1e-9) {
                    verts.emplace_back(IdealPoint(theta[i]));
                    verts.emplace_back(p);
                    ok = true;
                    break;
                }
            }
        }
        if (!ok) continue;
        if (!validate_semi_ideal(verts).valid()) continue;
        return SemiIdealPolygon(verts);
    }
    throw std::runtime_error("random_equal_gap_polygon: no valid sample after 400 attempts");
}

SemiIdealPolygon read_polygon_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open polygon file: " + path);
    std::vector<PolyVertex> verts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "I") {
            double t;
            if (!(ls >> t))
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected I <theta>");
            verts.emplace_back(IdealPoint(t));
        } else if (tag == "P") {
            double x, y;
            if (!(ls >> x >> y))
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected P <x> <y>");
            verts.emplace_back(DiskPoint(x, y));
        } else {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown vertex tag " + tag);
        }
    }
    return SemiIdealPolygon(verts);
}

void write_polygon_file(const SemiIdealPolygon& poly, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write polygon file: " + path);
    out.precision(17);
    for (const auto& v : poly.vertices()) {
        if (is_ideal(v))
            out << "I " << std::get<IdealPoint>(v).theta << "\n";
        else
            out << "P " << std::get<DiskPoint>(v).x << " " << std::get<DiskPoint>(v).y << "\n";
    }
}

}  // namespace h2xr
