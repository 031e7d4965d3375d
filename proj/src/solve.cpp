#include <cstdio>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <fstream>
#include <sstream>

#include "h2xr/jsolve.hpp"

namespace h2xr {

namespace {

struct Assembly {
    const TriMesh& mesh;
    std::vector<int> free_index;  // node -> equation index, -1 for Dirichlet
    int n_free = 0;

    explicit Assembly(const TriMesh& m) : mesh(m) {
        free_index.assign(m.n_nodes(), -1);
        for (int i = 0; i < m.n_nodes(); ++i)
            if (!m.is_dirichlet(i)) free_index[i] = n_free++;
    }
};

// grad phi_v = rot90(p_{v+2} - p_{v+1}) / (2 A)
std::array<Cpx, 3> shape_gradients(Cpx a, Cpx b, Cpx c, double area) {
    auto rot = [](Cpx v) { return Cpx(-v.imag(), v.real()); };
    double s = 1.0 / (2.0 * area);
    return {rot(c - b) * s, rot(a - c) * s, rot(b - a) * s};
}

double tri_area(Cpx a, Cpx b, Cpx c) { return 0.5 * cross2(b - a, c - a); }

double lambda_at(Cpx z) { return 2.0 / (1.0 - std::norm(z)); }

// Total area of the graph surface (the convex energy Newton descends).
double energy(const TriMesh& mesh, const std::vector<double>& u) {
    double e = 0.0;
    for (const auto& t : mesh.tris) {
        Cpx a = mesh.pos[t[0]], b = mesh.pos[t[1]], c = mesh.pos[t[2]];
        double area = tri_area(a, b, c);
        auto g = shape_gradients(a, b, c, area);
        Cpx grad = g[0] * u[t[0]] + g[1] * u[t[1]] + g[2] * u[t[2]];
        double lam = lambda_at((a + b + c) / 3.0);
        double w = std::sqrt(1.0 + std::norm(grad) / (lam * lam));
        e += area * lam * lam * w;
    }
    return e;
}

enum class Operator { Laplace, Lagged, Newton };

// Assembles -R into rhs and the chosen operator matrix; `diag` receives the
// lagged-operator diagonal, the natural per-DOF residual scale.
void assemble(const Assembly& asmb, const std::vector<double>& u, Operator op,
              Eigen::VectorXd& rhs, Eigen::SparseMatrix<double>& mat, Eigen::VectorXd& diag) {
    const TriMesh& mesh = asmb.mesh;
    rhs.setZero(asmb.n_free);
    diag.setZero(asmb.n_free);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.n_tris() * 9);
    for (const auto& t : mesh.tris) {
        Cpx a = mesh.pos[t[0]], b = mesh.pos[t[1]], c = mesh.pos[t[2]];
        double area = tri_area(a, b, c);
        auto g = shape_gradients(a, b, c, area);
        Cpx grad = g[0] * u[t[0]] + g[1] * u[t[1]] + g[2] * u[t[2]];
        double lam = lambda_at((a + b + c) / 3.0);
        double w2 = 1.0 + std::norm(grad) / (lam * lam);
        double w = std::sqrt(w2);
        double cw = op == Operator::Laplace ? 1.0 : 1.0 / w;
        double cg = op == Operator::Newton ? 1.0 / (lam * lam * w2 * w) : 0.0;
        for (int vi = 0; vi < 3; ++vi) {
            int ni = t[vi];
            int fi = asmb.free_index[ni];
            if (fi < 0) continue;
            rhs[fi] -= area * dot2(grad, g[vi]) * cw;
            diag[fi] += area * std::norm(g[vi]) / w;
            double gd_i = dot2(grad, g[vi]);
            for (int vj = 0; vj < 3; ++vj) {
                int fj = asmb.free_index[t[vj]];
                if (fj < 0) continue;
                double gd_j = dot2(grad, g[vj]);
                double hij = area * (dot2(g[vi], g[vj]) * cw - gd_i * gd_j * cg);
                trip.emplace_back(fi, fj, hij);
            }
        }
    }
    mat.resize(asmb.n_free, asmb.n_free);
    mat.setFromTriplets(trip.begin(), trip.end());
}

double scaled_residual(const Eigen::VectorXd& rhs, const Eigen::VectorXd& diag) {
    double r = 0.0;
    for (int i = 0; i < rhs.size(); ++i) r = std::max(r, std::abs(rhs[i]) / std::max(diag[i], 1e-300));
    return r;
}

// One lagged/Newton descent at fixed boundary data; updates u in place.
// Returns the final scaled residual.
double descend(const Assembly& asmb, std::vector<double>& u, double tol, int max_iter,
               bool verbose, int* iters_out) {
    const TriMesh& mesh = asmb.mesh;
    int n = mesh.n_nodes();
    Eigen::VectorXd rhs, diag;
    Eigen::SparseMatrix<double> mat;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    Eigen::VectorXd d;

    double res = 0.0;
    bool newton_phase = false;
    int it = 0;
    for (;; ++it) {
        assemble(asmb, u, newton_phase ? Operator::Newton : Operator::Lagged, rhs, mat, diag);
        res = asmb.n_free > 0 ? scaled_residual(rhs, diag) : 0.0;
        if (res <= tol) break;
        if (!newton_phase && res <= 1e-3) {
            newton_phase = true;
            assemble(asmb, u, Operator::Newton, rhs, mat, diag);
        }
        if (it >= max_iter)
            throw std::runtime_error("solver: did not converge, scaled residual " +
                                     std::to_string(res));
        ldlt.compute(mat);
        if (ldlt.info() != Eigen::Success) throw std::runtime_error("solver: factorization failed");
        d = ldlt.solve(rhs);

        double alpha = 1.0;
        int ls = 0;
        std::vector<double> trial = u;
        if (newton_phase) {
            double e0 = energy(mesh, u);
            double slope = -rhs.dot(d);
            for (; ls < 40; ++ls) {
                for (int i = 0; i < n; ++i) {
                    int fi = asmb.free_index[i];
                    trial[i] = fi >= 0 ? u[i] + alpha * d[fi] : u[i];
                }
                if (energy(mesh, trial) <= e0 + 1e-4 * alpha * slope) break;
                alpha *= 0.5;
            }
        } else {
            for (int i = 0; i < n; ++i) {
                int fi = asmb.free_index[i];
                trial[i] = fi >= 0 ? u[i] + d[fi] : u[i];
            }
        }
        if (verbose)
            std::fprintf(stderr, "%s %3d res %.3e alpha %.2e ls %d\n",
                         newton_phase ? "newton" : "lagged", it, res, alpha, ls);
        u = trial;
    }
    if (iters_out) *iters_out += it;
    return res;
}

GraphSolution run_newton(const TruncatedDomain& dom, const TriMesh& mesh,
                         const std::vector<double>& bc, const SolveParams& params) {
    Assembly asmb(mesh);
    int n = mesh.n_nodes();
    std::vector<double> u(n, 0.0);

    // Continuation in the cap: the walls deepen geometrically, each stage
    // starting from the previous minimizer. Clamping the data at the stage
    // cap reproduces the profile data of the shallower problem.
    double cap = 0.0;
    for (int i = 0; i < n; ++i)
        if (!std::isnan(bc[i])) cap = std::max(cap, std::abs(bc[i]));
    std::vector<double> stages;
    for (double c = 1.0; c < cap; c *= 2.0) stages.push_back(c);
    stages.push_back(cap);

    int iters = 0;
    double res = 0.0;
    for (size_t s = 0; s < stages.size(); ++s) {
        bool last = s + 1 == stages.size();
        for (int i = 0; i < n; ++i)
            if (!std::isnan(bc[i])) u[i] = std::clamp(bc[i], -stages[s], stages[s]);
        if (s == 0) {
            // Harmonic start at the first stage.
            Eigen::VectorXd rhs, diag;
            Eigen::SparseMatrix<double> mat;
            assemble(asmb, u, Operator::Laplace, rhs, mat, diag);
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(mat);
            if (ldlt.info() != Eigen::Success)
                throw std::runtime_error("solver: harmonic factorization failed");
            Eigen::VectorXd d = ldlt.solve(rhs);
            for (int i = 0; i < n; ++i)
                if (asmb.free_index[i] >= 0) u[i] += d[asmb.free_index[i]];
        }
        res = descend(asmb, u, last ? params.tol : 1e-6, params.max_newton, params.verbose, &iters);
    }

    GraphSolution sol;
    sol.mesh = std::make_shared<TriMesh>(mesh);
    sol.domain = std::make_shared<TruncatedDomain>(dom);
    sol.newton_iters = iters;
    sol.residual_norm = res;

    // Normalize at the node nearest the origin.
    int i0 = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double r = std::norm(mesh.pos[i]);
        if (r < best) {
            best = r;
            i0 = i;
        }
    }
    sol.shift = u[i0];
    for (double& v : u) v -= sol.shift;
    sol.u = std::move(u);
    return sol;
}

}  // namespace

const TriangleFields& GraphSolution::fields() const {
    if (!fields_cache)
        fields_cache = std::make_shared<const TriangleFields>(triangle_fields(*mesh, u));
    return *fields_cache;
}

TriangleFields triangle_fields(const TriMesh& mesh, const std::vector<double>& u) {
    TriangleFields f;
    f.grad.reserve(mesh.n_tris());
    f.w.reserve(mesh.n_tris());
    f.lambda.reserve(mesh.n_tris());
    f.area.reserve(mesh.n_tris());
    for (const auto& t : mesh.tris) {
        Cpx a = mesh.pos[t[0]], b = mesh.pos[t[1]], c = mesh.pos[t[2]];
        double area = tri_area(a, b, c);
        auto g = shape_gradients(a, b, c, area);
        Cpx grad = g[0] * u[t[0]] + g[1] * u[t[1]] + g[2] * u[t[2]];
        double lam = lambda_at((a + b + c) / 3.0);
        f.grad.push_back(grad);
        f.w.push_back(std::sqrt(1.0 + std::norm(grad) / (lam * lam)));
        f.lambda.push_back(lam);
        f.area.push_back(area);
    }
    return f;
}

std::vector<double> discrete_residual(const TriMesh& mesh, const std::vector<double>& u) {
    std::vector<double> r(mesh.n_nodes(), 0.0);
    for (const auto& t : mesh.tris) {
        Cpx a = mesh.pos[t[0]], b = mesh.pos[t[1]], c = mesh.pos[t[2]];
        double area = tri_area(a, b, c);
        auto g = shape_gradients(a, b, c, area);
        Cpx grad = g[0] * u[t[0]] + g[1] * u[t[1]] + g[2] * u[t[2]];
        double lam = lambda_at((a + b + c) / 3.0);
        double w = std::sqrt(1.0 + std::norm(grad) / (lam * lam));
        for (int v = 0; v < 3; ++v) r[t[v]] += area * dot2(grad, g[v]) / w;
    }
    return r;
}

GraphSolution solve_minimal_graph(const TruncatedDomain& dom, const TriMesh& mesh,
                                  const SolveParams& params) {
    return run_newton(dom, mesh, mesh.dirichlet, params);
}

GraphSolution solve_with_constant_data(const TruncatedDomain& dom, const TriMesh& mesh, double c,
                                       const SolveParams& params) {
    std::vector<double> bc = mesh.dirichlet;
    for (double& v : bc)
        if (!std::isnan(v)) v = c;
    return run_newton(dom, mesh, bc, params);
}

void write_solution(const GraphSolution& sol, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write solution file: " + path);
    const TriMesh& m = sol.m();
    out.precision(17);
    out << "h2xr-solution 1\n";
    out << "params h " << m.target_h << " cap " << sol.domain->cap << " m " << sol.domain->m
        << " shift " << sol.shift << "\n";
    out << "nodes " << m.n_nodes() << "\n";
    for (int i = 0; i < m.n_nodes(); ++i) {
        out << "v " << m.pos[i].real() << " " << m.pos[i].imag() << " " << sol.u[i] << " "
            << static_cast<int>(m.node_tag[i]) << " " << m.node_piece[i] << " " << m.dirichlet[i]
            << "\n";
    }
    out << "tris " << m.n_tris() << "\n";
    for (const auto& t : m.tris) out << "t " << t[0] << " " << t[1] << " " << t[2] << "\n";
    out << "chains " << m.chains.size() << "\n";
    for (const auto& c : m.chains) {
        out << "chain " << static_cast<int>(c.tag) << " " << c.which << " " << c.nodes.size();
        for (int id : c.nodes) out << " " << id;
        out << "\n";
    }
}

GraphSolution read_solution(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open solution file: " + path);
    std::string word;
    int version;
    in >> word >> version;
    if (word != "h2xr-solution") throw std::runtime_error("not a solution file: " + path);
    GraphSolution sol;
    auto mesh = std::make_shared<TriMesh>();
    {
        // params h <h> cap <cap> m <m> shift <shift>; cap and m are
        // provenance only, the domain is not reconstructed.
        double h, cap, m, shift;
        in >> word >> word >> h >> word >> cap >> word >> m >> word >> shift;
        mesh->target_h = h;
        sol.shift = shift;
    }
    int n;
    in >> word >> n;
    mesh->pos.resize(n);
    mesh->node_tag.resize(n);
    mesh->node_piece.resize(n);
    mesh->dirichlet.resize(n);
    sol.u.resize(n);
    for (int i = 0; i < n; ++i) {
        double x, y;
        int tag;
        in >> word >> x >> y >> sol.u[i] >> tag >> mesh->node_piece[i] >> mesh->dirichlet[i];
        mesh->pos[i] = Cpx(x, y);
        mesh->node_tag[i] = static_cast<BoundaryTag>(tag);
    }
    int nt;
    in >> word >> nt;
    mesh->tris.resize(nt);
    for (auto& t : mesh->tris) in >> word >> t[0] >> t[1] >> t[2];
    int nc;
    in >> word >> nc;
    mesh->chains.resize(nc);
    for (auto& c : mesh->chains) {
        int tag, cnt;
        in >> word >> tag >> c.which >> cnt;
        c.tag = static_cast<BoundaryTag>(tag);
        c.nodes.resize(cnt);
        for (int& id : c.nodes) in >> id;
    }
    if (!in) throw std::runtime_error("truncated solution file: " + path);
    sol.mesh = mesh;
    return sol;
}

}  // namespace h2xr
