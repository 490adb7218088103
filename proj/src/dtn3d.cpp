#include "born_calderon/dtn3d.hpp"

#include "born_calderon/errors.hpp"
#include "born_calderon/panels.hpp"
#include "born_calderon/parallel.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <queue>
#include <set>

namespace bc {

namespace {

std::vector<double> merged_cuts(std::vector<double> cuts, double lo, double hi)
{
    std::vector<double> out;
    std::sort(cuts.begin(), cuts.end());
    for (double c : cuts) {
        if (c > lo + 1e-14 && c < hi - 1e-14 && (out.empty() || c - out.back() > 1e-14)) {
            out.push_back(c);
        }
    }
    return out;
}

SphericalIndex index_from_flat(int f)
{
    const int ell = static_cast<int>(std::floor(std::sqrt(static_cast<double>(f))));
    return {ell, f - ell * ell - ell};
}

} // namespace

// ---------------------------------------------------------------------------
// PotentialSH

PotentialSH::PotentialSH(int degree, std::vector<Basis> basis, Eigen::MatrixXcd coefficients, double alpha,
                         double sup_norm, std::vector<double> breaks)
    : degree_(degree), basis_(std::move(basis)), coeffs_(std::move(coefficients)), alpha_(alpha),
      sup_norm_(sup_norm)
{
    if (degree < 0) {
        throw DomainError("potential degree must be non-negative");
    }
    if (coeffs_.rows() != sh_count(degree) || coeffs_.cols() != static_cast<Eigen::Index>(basis_.size())) {
        throw DomainError("coefficient matrix does not match degree and basis size");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw DomainError("support radius must lie in [0, 1]");
    }
    if (!(sup_norm >= 0.0)) {
        throw DomainError("sup norm must be non-negative");
    }
    breaks_ = merged_cuts(std::move(breaks), 0.0, alpha);
}

PotentialSH PotentialSH::zero(int degree)
{
    return PotentialSH(degree, {}, Eigen::MatrixXcd::Zero(sh_count(degree), 0), 0.0, 0.0);
}

PotentialSH PotentialSH::from_radial(const RadialPotential& q)
{
    if (q.dimension() != 3) {
        throw DomainError("PotentialSH is three-dimensional");
    }
    std::vector<Basis> basis{[q](double r) { return cplx(q(r), 0.0); }};
    Eigen::MatrixXcd c(1, 1);
    c(0, 0) = 2.0 * std::sqrt(pi);
    std::vector<double> breaks = q.breaks();
    if (q.inner_radius() > 0.0) {
        breaks.push_back(q.inner_radius());
    }
    return PotentialSH(0, std::move(basis), std::move(c), q.alpha(), q.sup_norm(), std::move(breaks));
}

PotentialSH PotentialSH::from_profiles(int degree, const std::vector<std::pair<SphericalIndex, Basis>>& profiles,
                                       double alpha, double sup_norm, std::vector<double> breaks)
{
    std::vector<Basis> basis;
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(sh_count(degree), static_cast<Eigen::Index>(profiles.size()));
    for (std::size_t j = 0; j < profiles.size(); ++j) {
        const SphericalIndex idx = profiles[j].first;
        idx.validate();
        if (idx.ell > degree) {
            throw DomainError("profile degree exceeds the declared truncation");
        }
        basis.push_back(profiles[j].second);
        c(idx.flat(), static_cast<Eigen::Index>(j)) = 1.0;
    }
    return PotentialSH(degree, std::move(basis), std::move(c), alpha, sup_norm, std::move(breaks));
}

bool PotentialSH::has(SphericalIndex idx) const
{
    if (idx.ell > degree_ || coeffs_.cols() == 0) {
        return false;
    }
    return coeffs_.row(idx.flat()).cwiseAbs().maxCoeff() > 0.0;
}

std::vector<SphericalIndex> PotentialSH::support() const
{
    std::vector<SphericalIndex> out;
    for (int f = 0; f < sh_count(degree_); ++f) {
        const SphericalIndex idx = index_from_flat(f);
        if (has(idx)) {
            out.push_back(idx);
        }
    }
    return out;
}

Eigen::VectorXcd PotentialSH::profiles_at(double r) const
{
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(sh_count(degree_));
    if (r > alpha_ || basis_.empty()) {
        return out;
    }
    Eigen::VectorXcd b(static_cast<Eigen::Index>(basis_.size()));
    for (std::size_t j = 0; j < basis_.size(); ++j) {
        b(static_cast<Eigen::Index>(j)) = basis_[j](r);
    }
    out.noalias() = coeffs_ * b;
    return out;
}

cplx PotentialSH::profile(SphericalIndex idx, double r) const
{
    idx.validate();
    if (idx.ell > degree_) {
        return 0.0;
    }
    return profiles_at(r)(idx.flat());
}

cplx PotentialSH::operator()(const Vec3& x) const
{
    const double r = x.norm();
    if (r > alpha_ || basis_.empty()) {
        return 0.0;
    }
    const Eigen::VectorXcd p = profiles_at(r);
    const Vec3 u = r > 0.0 ? Vec3(x / r) : Vec3::UnitZ();
    const std::vector<cplx> y = sph_harm_all(degree_, u);
    cplx sum = 0.0;
    for (int f = 0; f < sh_count(degree_); ++f) {
        sum += p(f) * y[static_cast<std::size_t>(f)];
    }
    return sum;
}

double PotentialSH::reality_defect(int samples) const
{
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double r = alpha_ * (i + 0.5) / samples;
        const Eigen::VectorXcd p = profiles_at(r);
        for (int l = 0; l <= degree_; ++l) {
            for (int m = 0; m <= l; ++m) {
                const cplx a = p(SphericalIndex{l, -m}.flat());
                const cplx b = (m % 2 == 0 ? 1.0 : -1.0) * std::conj(p(SphericalIndex{l, m}.flat()));
                worst = std::max(worst, std::abs(a - b));
            }
        }
    }
    return worst;
}

PotentialSH PotentialSH::scaled(double factor) const
{
    return PotentialSH(degree_, basis_, coeffs_ * factor, alpha_, sup_norm_ * std::abs(factor), breaks_);
}

BallFunction PotentialSH::as_ball_function() const
{
    auto self = std::make_shared<PotentialSH>(*this);
    return BallFunction{[self](const Vec3& x) { return (*self)(x).real(); }, breaks_, alpha_ > 0 ? alpha_ : 1.0};
}

// ---------------------------------------------------------------------------
// Projection and rotation

ProjectionResult project_potential(const BallFunction& q, int degree, const ProjectionOptions& options)
{
    if (degree < 0) {
        throw DomainError("projection degree must be non-negative");
    }
    const double R = q.support_radius;
    const std::vector<double> ends
        = panel_endpoints(0.0, R, merged_cuts(q.radial_breaks, 0.0, R), options.max_panel_width);
    const int n = options.nodes_per_panel;
    const GaussRule ref = gauss_legendre(n);
    const std::vector<double> bw = barycentric_weights(ref.nodes);
    const SphereRule sphere = make_sphere_rule(2 * degree + 8);
    const int S = sh_count(degree);
    const std::size_t panels = ends.size() - 1;

    std::vector<std::vector<cplx>> ysph(sphere.nodes.size());
    for (std::size_t j = 0; j < sphere.nodes.size(); ++j) {
        ysph[j] = sph_harm_all(degree, sphere.nodes[j]);
    }

    // table[f][p * n + i] = q_f at node i of panel p.
    auto table = std::make_shared<std::vector<std::vector<cplx>>>(static_cast<std::size_t>(S),
                                                                  std::vector<cplx>(panels * n));
    double sup = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double a = ends[p];
        const double b = ends[p + 1];
        for (int i = 0; i < n; ++i) {
            const double r = a + 0.5 * (b - a) * (ref.nodes[static_cast<std::size_t>(i)] + 1.0);
            for (std::size_t j = 0; j < sphere.nodes.size(); ++j) {
                const double v = q.eval(r * sphere.nodes[j]);
                sup = std::max(sup, std::abs(v));
                for (int f = 0; f < S; ++f) {
                    (*table)[static_cast<std::size_t>(f)][p * n + static_cast<std::size_t>(i)]
                        += sphere.weights[j] * v * std::conj(ysph[j][static_cast<std::size_t>(f)]);
                }
            }
        }
    }

    auto nodes = std::make_shared<std::vector<double>>(ref.nodes);
    auto weights = std::make_shared<std::vector<double>>(bw);
    auto panel_ends = std::make_shared<std::vector<double>>(ends);
    std::vector<PotentialSH::Basis> basis;
    for (int f = 0; f < S; ++f) {
        basis.push_back([=](double r) -> cplx {
            const auto& e = *panel_ends;
            if (r < 0.0 || r > e.back()) {
                return 0.0;
            }
            const std::size_t p = std::min<std::size_t>(
                static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), r) - e.begin()) - 1, e.size() - 2);
            const double x = 2.0 * (r - e[p]) / (e[p + 1] - e[p]) - 1.0;
            const auto& row = (*table)[static_cast<std::size_t>(f)];
            return barycentric_eval<cplx>(*nodes, *weights, std::span<const cplx>(row.data() + p * n, n), x);
        });
    }
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Identity(S, S);
    // Drop profiles that vanish on every node.
    for (int f = 0; f < S; ++f) {
        double mx = 0.0;
        for (const cplx& v : (*table)[static_cast<std::size_t>(f)]) {
            mx = std::max(mx, std::abs(v));
        }
        if (mx <= 1e-15 * std::max(sup, 1e-300)) {
            c(f, f) = 0.0;
        }
    }
    ProjectionResult out{PotentialSH(degree, std::move(basis), std::move(c), R, sup, q.radial_breaks), 0.0};

    // Residual at panel midpoints (never Gauss nodes for even n) on a finer sphere rule.
    const SphereRule check = make_sphere_rule(2 * degree + 5);
    for (std::size_t p = 0; p < panels; ++p) {
        const double r = 0.5 * (ends[p] + ends[p + 1]);
        for (const Vec3& u : check.nodes) {
            out.residual = std::max(out.residual, std::abs(q.eval(r * u) - out.potential(r * u)));
        }
    }
    return out;
}

Eigen::MatrixXcd wigner_matrix(int ell, const Mat3& rotation)
{
    if (ell < 0) {
        throw DomainError("degree must be non-negative");
    }
    const SphereRule rule = make_sphere_rule(2 * ell);
    const int dim = 2 * ell + 1;
    const int off = ell * ell;
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const std::vector<cplx> y = sph_harm_all(ell, rule.nodes[j]);
        const std::vector<cplx> yr = sph_harm_all(ell, Vec3(rotation * rule.nodes[j]));
        for (int a = 0; a < dim; ++a) {
            for (int b = 0; b < dim; ++b) {
                D(a, b) += rule.weights[j] * yr[static_cast<std::size_t>(off + a)]
                    * std::conj(y[static_cast<std::size_t>(off + b)]);
            }
        }
    }
    return D;
}

PotentialSH rotate_potential(const PotentialSH& q, const Mat3& rotation)
{
    if ((rotation.transpose() * rotation - Mat3::Identity()).norm() > 1e-12 || rotation.determinant() < 0) {
        throw DomainError("rotate_potential needs a rotation matrix");
    }
    const Eigen::MatrixXcd& c = q.coefficients();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(c.rows(), c.cols());
    for (int l = 0; l <= q.degree(); ++l) {
        const Eigen::MatrixXcd D = wigner_matrix(l, rotation);
        const int off = l * l;
        const int dim = 2 * l + 1;
        // q'_{l,n} = Σ_m D(m, n) q_{l,m}
        out.middleRows(off, dim).noalias() = D.transpose() * c.middleRows(off, dim);
    }
    const double scale = c.size() > 0 ? c.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (std::abs(out.data()[i]) <= 1e-15 * scale) {
            out.data()[i] = 0.0;
        }
    }
    return PotentialSH(q.degree(), q.basis(), std::move(out), q.alpha(), q.sup_norm(), q.breaks());
}

// ---------------------------------------------------------------------------
// Channel solver

struct ChannelSystem::Block {
    Eigen::SparseMatrix<cplx> matrix;
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
};

namespace {

class BlockPreconditioner {
public:
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

    BlockPreconditioner() = default;

    using Factor = Eigen::SparseLU<Eigen::SparseMatrix<cplx>>;

    void set(std::vector<const Factor*> lus, Eigen::Index size)
    {
        lus_ = std::move(lus);
        size_ = size;
    }

    template <class M>
    BlockPreconditioner& analyzePattern(const M&)
    {
        return *this;
    }
    template <class M>
    BlockPreconditioner& factorize(const M&)
    {
        return *this;
    }
    template <class M>
    BlockPreconditioner& compute(const M&)
    {
        return *this;
    }

    [[nodiscard]] Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const
    {
        Eigen::VectorXcd x(b.size());
        for (std::size_t c = 0; c < lus_.size(); ++c) {
            const Eigen::Index base = static_cast<Eigen::Index>(c) * size_;
            x.segment(base, size_) = lus_[c]->solve(b.segment(base, size_));
        }
        return x;
    }

    [[nodiscard]] Eigen::ComputationInfo info() const { return Eigen::Success; }

private:
    std::vector<const Factor*> lus_;
    Eigen::Index size_ = 0;
};

} // namespace

ChannelSystem::ChannelSystem(const PotentialSH& q, int lmax, const ChannelOptions& options)
    : q_(q), lmax_(lmax), options_(options), gaunt_(std::max(lmax, 0), q.degree()),
      blocks_(static_cast<std::size_t>(sh_count(std::max(lmax, 0)))),
      block_once_(static_cast<std::size_t>(sh_count(std::max(lmax, 0))))
{
    if (lmax < 0) {
        throw DomainError("lmax must be non-negative");
    }
    if (options.nodes_per_panel < 4) {
        throw DomainError("at least 4 collocation intervals per panel are needed");
    }
    q_support_ = q.support();
    std::vector<double> cuts = q.breaks();
    if (q.alpha() > 0.0) {
        cuts.push_back(q.alpha());
    }
    ends_ = panel_endpoints(0.0, 1.0, merged_cuts(cuts, 0.0, 1.0), options.max_panel_width);
    const int N = options.nodes_per_panel;
    const std::vector<double> x = chebyshev_lobatto(N);
    const Eigen::MatrixXd D = chebyshev_derivative(N);
    for (std::size_t p = 0; p + 1 < ends_.size(); ++p) {
        const double a = ends_[p];
        const double b = ends_[p + 1];
        for (double t : x) {
            nodes_.push_back(a + 0.5 * (b - a) * (t + 1.0));
        }
        const Eigen::MatrixXd d1 = (2.0 / (b - a)) * D;
        d1_.push_back(d1);
        d2_.push_back(d1 * d1);
    }
    q_at_nodes_.reserve(nodes_.size());
    const std::size_t stride = static_cast<std::size_t>(N + 1);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const std::size_t j = i % stride;
        // Endpoint rows carry no potential term; keep panel-interior values only.
        if (j == 0 || j == stride - 1) {
            q_at_nodes_.push_back(Eigen::VectorXcd::Zero(sh_count(q.degree())));
        } else {
            q_at_nodes_.push_back(q.profiles_at(nodes_[i]));
        }
    }
}

ChannelSystem::~ChannelSystem() = default;

const ChannelSystem::Block& ChannelSystem::block(int flat) const
{
    const auto f = static_cast<std::size_t>(flat);
    std::call_once(block_once_[f], [&] {
        const SphericalIndex c = index_from_flat(flat);
        const int N = options_.nodes_per_panel;
        const Eigen::Index P = static_cast<Eigen::Index>(ends_.size()) - 1;
        const Eigen::Index M = P * (N + 1);
        auto blk = std::make_unique<Block>();
        std::vector<Eigen::Triplet<cplx>> trip;
        const auto put = [&](Eigen::Index i, Eigen::Index j, cplx v) {
            trip.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
        };
        const double centrifugal = c.ell * (c.ell + 1.0);
        for (Eigen::Index p = 0; p < P; ++p) {
            const Eigen::Index base = p * (N + 1);
            for (int j = 1; j < N; ++j) {
                const Eigen::Index row = base + j;
                const double r = nodes_[static_cast<std::size_t>(row)];
                cplx diag = centrifugal;
                for (const SphericalIndex& s : q_support_) {
                    if (s.m == 0) {
                        diag += r * r * q_at_nodes_[static_cast<std::size_t>(row)](s.flat())
                            * gaunt_(c.ell, c.m, s.ell, 0, c.ell, c.m);
                    }
                }
                for (int i = 0; i <= N; ++i) {
                    put(row, base + i, -r * r * d2_[static_cast<std::size_t>(p)](j, i));
                }
                put(row, row, diag);
            }
            if (p == 0) {
                put(0, 0, 1.0);
            } else {
                // value continuity in the last row of panel p-1, slope continuity in the first row of panel p
                const Eigen::Index prev = base - (N + 1);
                put(base - 1, base - 1, 1.0);
                put(base - 1, base, -1.0);
                for (int i = 0; i <= N; ++i) {
                    put(base, prev + i, d1_[static_cast<std::size_t>(p - 1)](N, i));
                    put(base, base + i, -d1_[static_cast<std::size_t>(p)](0, i));
                }
            }
        }
        put(M - 1, M - 1, 1.0);
        blk->matrix.resize(M, M);
        blk->matrix.setFromTriplets(trip.begin(), trip.end());
        blk->matrix.makeCompressed();
        blk->lu.compute(blk->matrix);
        if (blk->lu.info() != Eigen::Success) {
            throw SingularSystemError("channel (" + std::to_string(c.ell) + "," + std::to_string(c.m)
                                      + ") block is singular");
        }
        blocks_[f] = std::move(blk);
    });
    return *blocks_[f];
}

ChannelSolution ChannelSystem::solve(SphericalIndex boundary) const
{
    boundary.validate();
    if (boundary.ell > lmax_) {
        throw DomainError("boundary degree exceeds lmax");
    }
    // Channels forced by the boundary channel through the coupling.
    std::set<int> reached{boundary.flat()};
    std::queue<SphericalIndex> todo;
    todo.push(boundary);
    while (!todo.empty()) {
        const SphericalIndex src = todo.front();
        todo.pop();
        for (const SphericalIndex& s : q_support_) {
            const int n = src.m + s.m;
            for (int l = std::abs(src.ell - s.ell); l <= std::min(src.ell + s.ell, lmax_); l += 2) {
                if (std::abs(n) > l) {
                    continue;
                }
                const SphericalIndex dst{l, n};
                if (reached.count(dst.flat()) == 0 && std::abs(gaunt_(l, n, s.ell, s.m, src.ell, src.m)) > 1e-14) {
                    reached.insert(dst.flat());
                    todo.push(dst);
                }
            }
        }
    }

    ChannelSolution out;
    out.boundary = boundary;
    out.lmax = lmax_;
    out.panel_ends = ends_;
    out.nodes = nodes_;
    for (int f : reached) {
        out.channels.push_back(index_from_flat(f));
    }
    const int N = options_.nodes_per_panel;
    const Eigen::Index P = static_cast<Eigen::Index>(ends_.size()) - 1;
    const Eigen::Index M = P * (N + 1);
    const Eigen::Index nch = static_cast<Eigen::Index>(out.channels.size());

    std::vector<const BlockPreconditioner::Factor*> lus;
    std::vector<Eigen::Triplet<cplx>> trip;
    for (Eigen::Index c = 0; c < nch; ++c) {
        const SphericalIndex ch = out.channels[static_cast<std::size_t>(c)];
        const Block& blk = block(ch.flat());
        lus.push_back(&blk.lu);
        for (Eigen::Index j = 0; j < M; ++j) {
            for (Eigen::SparseMatrix<cplx>::InnerIterator it(blk.matrix, j); it; ++it) {
                trip.emplace_back(static_cast<int>(c * M + it.row()), static_cast<int>(c * M + j), it.value());
            }
        }
        for (Eigen::Index c2 = 0; c2 < nch; ++c2) {
            if (c2 == c) {
                continue;
            }
            const SphericalIndex src = out.channels[static_cast<std::size_t>(c2)];
            const int mu = ch.m - src.m;
            std::vector<std::pair<int, double>> terms;
            for (int lam = std::abs(ch.ell - src.ell); lam <= std::min(ch.ell + src.ell, q_.degree()); lam += 2) {
                if (std::abs(mu) > lam || !q_.has({lam, mu})) {
                    continue;
                }
                const double g = gaunt_(ch.ell, ch.m, lam, mu, src.ell, src.m);
                if (g != 0.0) {
                    terms.emplace_back(SphericalIndex{lam, mu}.flat(), g);
                }
            }
            if (terms.empty()) {
                continue;
            }
            for (Eigen::Index p = 0; p < P; ++p) {
                for (int j = 1; j < N; ++j) {
                    const Eigen::Index row = p * (N + 1) + j;
                    const double r = nodes_[static_cast<std::size_t>(row)];
                    cplx v = 0.0;
                    for (const auto& [f, g] : terms) {
                        v += q_at_nodes_[static_cast<std::size_t>(row)](f) * g;
                    }
                    if (v != 0.0) {
                        trip.emplace_back(static_cast<int>(c * M + row), static_cast<int>(c2 * M + row), r * r * v);
                    }
                }
            }
        }
    }
    Eigen::SparseMatrix<cplx> A(nch * M, nch * M);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(nch * M);
    const auto bpos = std::find(out.channels.begin(), out.channels.end(), boundary) - out.channels.begin();
    rhs(static_cast<Eigen::Index>(bpos) * M + M - 1) = 1.0;

    Eigen::GMRES<Eigen::SparseMatrix<cplx>, BlockPreconditioner> gmres;
    gmres.preconditioner().set(std::move(lus), M);
    gmres.set_restart(options_.restart);
    gmres.setMaxIterations(options_.max_iterations);
    gmres.setTolerance(options_.tolerance);
    gmres.compute(A);
    const Eigen::VectorXcd sol = gmres.solve(rhs);
    out.iterations = static_cast<int>(gmres.iterations());
    // Residual relative to the size of the terms that cancel in A x.
    double scale = 0.0;
    for (Eigen::Index j = 0; j < A.outerSize(); ++j) {
        for (Eigen::SparseMatrix<cplx>::InnerIterator it(A, j); it; ++it) {
            scale = std::max(scale, std::abs(it.value()));
        }
    }
    out.residual = (A * sol - rhs).norm() / (scale * sol.norm() + 1.0);
    if (!(out.residual < 1e-12) || (gmres.info() != Eigen::Success && !(gmres.error() < 1e-10))) {
        throw SingularSystemError("coupled channel system did not converge (relative residual "
                                  + std::to_string(out.residual) + " after " + std::to_string(out.iterations)
                                  + " iterations)");
    }
    out.values = Eigen::Map<const Eigen::MatrixXcd>(sol.data(), M, nch);

    // Shell energy with trapezoid weights on the node sequence; the boundary
    // channel itself is not a truncation effect.
    double total = 0.0;
    double shell = 0.0;
    for (Eigen::Index c = 0; c < nch; ++c) {
        double e = 0.0;
        for (Eigen::Index i = 0; i + 1 < M; ++i) {
            const double h = nodes_[static_cast<std::size_t>(i + 1)] - nodes_[static_cast<std::size_t>(i)];
            e += 0.5 * h * (std::norm(out.values(i, c)) + std::norm(out.values(i + 1, c)));
        }
        total += e;
        const SphericalIndex& ch = out.channels[static_cast<std::size_t>(c)];
        if (ch.ell == lmax_ && !(ch.ell == boundary.ell && ch.m == boundary.m)) {
            shell += e;
        }
    }
    out.shell_energy = total > 0 ? shell / total : 0.0;
    if (out.shell_energy > options_.shell_warning) {
        out.warnings.push_back("bandwidth: degree-" + std::to_string(lmax_) + " shell carries "
                               + std::to_string(out.shell_energy) + " of the channel energy");
    }
    return out;
}

int ChannelSolution::find(SphericalIndex idx) const
{
    const auto it = std::find(channels.begin(), channels.end(), idx);
    return it == channels.end() ? -1 : static_cast<int>(it - channels.begin());
}

namespace {

int panel_size(const ChannelSolution& s)
{
    return static_cast<int>(s.nodes.size() / (s.panel_ends.size() - 1));
}

} // namespace

cplx ChannelSolution::u(SphericalIndex idx, double r) const
{
    const int c = find(idx);
    if (c < 0) {
        return 0.0;
    }
    if (r < 0.0 || r > 1.0) {
        throw DomainError("radius outside [0, 1]");
    }
    const int n1 = panel_size(*this);
    const std::size_t p = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(panel_ends.begin(), panel_ends.end(), r) - panel_ends.begin()) - 1,
        panel_ends.size() - 2);
    const std::vector<double> x = chebyshev_lobatto(n1 - 1);
    const double a = panel_ends[p];
    const double b = panel_ends[p + 1];
    std::vector<cplx> w(static_cast<std::size_t>(n1));
    for (int i = 0; i < n1; ++i) {
        w[static_cast<std::size_t>(i)] = values(static_cast<Eigen::Index>(p) * n1 + i, c);
    }
    if (r == 0.0) {
        const Eigen::MatrixXd D = chebyshev_derivative(n1 - 1) * (2.0 / (b - a));
        cplx d = 0.0;
        for (int i = 0; i < n1; ++i) {
            d += D(0, i) * w[static_cast<std::size_t>(i)];
        }
        return d;
    }
    const std::vector<double> bw = barycentric_weights(x);
    const double t = 2.0 * (r - a) / (b - a) - 1.0;
    return barycentric_eval<cplx>(x, bw, w, t) / r;
}

cplx ChannelSolution::dtn(SphericalIndex idx) const
{
    const int c = find(idx);
    if (c < 0) {
        return 0.0;
    }
    const int n1 = panel_size(*this);
    const std::size_t p = panel_ends.size() - 2;
    const Eigen::MatrixXd D
        = chebyshev_derivative(n1 - 1) * (2.0 / (panel_ends[p + 1] - panel_ends[p]));
    cplx d = 0.0;
    for (int i = 0; i < n1; ++i) {
        d += D(n1 - 1, i) * values(static_cast<Eigen::Index>(p) * n1 + i, c);
    }
    return d - values(values.rows() - 1, c);
}

cplx ChannelSystem::alessandrini(const ChannelSolution& solution, SphericalIndex test) const
{
    test.validate();
    if (test.ell > lmax_) {
        throw DomainError("test degree exceeds lmax");
    }
    if (q_.alpha() <= 0.0 || q_support_.empty()) {
        return 0.0;
    }
    const int N = options_.nodes_per_panel;
    const int ng = N + test.ell / 2 + 8;
    const GaussRule g = gauss_legendre(ng);
    const std::vector<double> x = chebyshev_lobatto(N);
    const Eigen::MatrixXd interp = interpolation_matrix(x, g.nodes);

    // (channel column, flat q index, Gaunt value)
    struct Term {
        Eigen::Index column;
        int flat;
        double g;
    };
    std::vector<Term> terms;
    for (std::size_t c = 0; c < solution.channels.size(); ++c) {
        const SphericalIndex src = solution.channels[c];
        const int mu = test.m - src.m;
        for (int lam = std::abs(test.ell - src.ell); lam <= std::min(test.ell + src.ell, q_.degree()); lam += 2) {
            if (std::abs(mu) > lam || !q_.has({lam, mu})) {
                continue;
            }
            const double gv = gaunt_(test.ell, test.m, lam, mu, src.ell, src.m);
            if (gv != 0.0) {
                terms.push_back({static_cast<Eigen::Index>(c), SphericalIndex{lam, mu}.flat(), gv});
            }
        }
    }
    long double re = 0.0L;
    long double im = 0.0L;
    for (std::size_t p = 0; p + 1 < ends_.size(); ++p) {
        const double a = ends_[p];
        const double b = ends_[p + 1];
        if (a >= q_.alpha()) {
            break;
        }
        const Eigen::MatrixXcd w
            = interp * solution.values.middleRows(static_cast<Eigen::Index>(p) * (N + 1), N + 1);
        for (int i = 0; i < ng; ++i) {
            const double r = a + 0.5 * (b - a) * (g.nodes[static_cast<std::size_t>(i)] + 1.0);
            const double wt = 0.5 * (b - a) * g.weights[static_cast<std::size_t>(i)] * std::pow(r, test.ell + 1);
            const Eigen::VectorXcd qv = q_.profiles_at(r);
            cplx s = 0.0;
            for (const Term& t : terms) {
                s += qv(t.flat) * w(i, t.column) * t.g;
            }
            re += static_cast<long double>(wt * s.real());
            im += static_cast<long double>(wt * s.imag());
        }
    }
    return {static_cast<double>(re), static_cast<double>(im)};
}

ChannelSolution solve_channel_system(const PotentialSH& q, SphericalIndex boundary, int lmax,
                                     const ChannelOptions& options)
{
    const ChannelSystem sys(q, lmax, options);
    return sys.solve(boundary);
}

int default_lmax(const PotentialSH& q, int kmax)
{
    const bool radial = q.support().size() <= 1 && (q.support().empty() || q.support()[0].ell == 0);
    return radial ? kmax : kmax + q.degree() + 4;
}

// ---------------------------------------------------------------------------
// Matrix elements and moments

std::size_t TriangularTable::index(int k, int ell) const
{
    if (k < 0 || ell < k || ell > kmax) {
        throw DomainError("table index outside 0 <= k <= l <= K");
    }
    // rows k hold l = k..K
    const int before = k * (kmax + 1) - k * (k - 1) / 2;
    return static_cast<std::size_t>(before + (ell - k));
}

namespace {

PotentialSH to_e3_frame(const PotentialSH& q, const Frame& frame)
{
    return rotate_potential(q, frame.rotation().transpose());
}

int checked_lmax(const PotentialSH& q, int kmax, int lmax)
{
    if (lmax < 0) {
        return default_lmax(q, kmax);
    }
    if (lmax < kmax) {
        throw DomainError("lmax must cover the requested degrees");
    }
    return lmax;
}

} // namespace

cplx matrix_element(const PotentialSH& q, int k, int ell, const Frame& frame, int lmax, const ChannelOptions& options)
{
    if (k < 0 || ell < k) {
        throw DomainError("matrix elements need 0 <= k <= l");
    }
    const PotentialSH qr = to_e3_frame(q, frame);
    const ChannelSystem sys(qr, checked_lmax(q, ell, lmax), options);
    return sys.alessandrini(sys.solve({k, k}), {ell, k});
}

MatrixElementTable matrix_element_table(const PotentialSH& q, const Frame& frame, int kmax, int lmax,
                                        const ChannelOptions& options)
{
    if (kmax < 0) {
        throw DomainError("kmax must be non-negative");
    }
    MatrixElementTable t;
    t.omega = frame.omega();
    t.frame_rotation = frame.rotation();
    t.kmax = kmax;
    t.lmax = checked_lmax(q, kmax, lmax);
    t.entries = TriangularTable(kmax);
    t.derivative_route = TriangularTable(kmax);
    const PotentialSH qr = to_e3_frame(q, frame);
    const ChannelSystem sys(qr, t.lmax, options);
    std::vector<double> shell(static_cast<std::size_t>(kmax + 1), 0.0);
    std::vector<std::vector<std::string>> warn(static_cast<std::size_t>(kmax + 1));
    parallel_for(static_cast<std::size_t>(kmax + 1), [&](std::size_t i) {
        const int k = static_cast<int>(i);
        const ChannelSolution s = sys.solve({k, k});
        for (int l = k; l <= kmax; ++l) {
            t.entries(k, l) = sys.alessandrini(s, {l, k});
            t.derivative_route(k, l) = s.dtn({l, k}) - (l == k ? static_cast<double>(k) : 0.0);
        }
        shell[i] = s.shell_energy;
        warn[i] = s.warnings;
    });
    for (int k = 0; k <= kmax; ++k) {
        t.max_shell_energy = std::max(t.max_shell_energy, shell[static_cast<std::size_t>(k)]);
        for (const auto& w : warn[static_cast<std::size_t>(k)]) {
            t.warnings.push_back("k=" + std::to_string(k) + ": " + w);
        }
        for (int l = k; l <= kmax; ++l) {
            t.max_route_gap = std::max(t.max_route_gap, std::abs(t.entries(k, l) - t.derivative_route(k, l)));
        }
    }
    return t;
}

Eigen::MatrixXcd dtn_block(const ChannelSystem& system, int k, int ell)
{
    if (k < 0 || ell < 0 || k > system.lmax() || ell > system.lmax()) {
        throw DomainError("dtn_block degrees must lie in [0, lmax]");
    }
    Eigen::MatrixXcd out(2 * ell + 1, 2 * k + 1);
    std::vector<ChannelSolution> sols(static_cast<std::size_t>(2 * k + 1));
    parallel_for(sols.size(), [&](std::size_t i) { sols[i] = system.solve({k, static_cast<int>(i) - k}); });
    for (int n = -k; n <= k; ++n) {
        for (int np = -ell; np <= ell; ++np) {
            out(np + ell, n + k) = sols[static_cast<std::size_t>(n + k)].dtn({ell, np});
        }
    }
    return out;
}

namespace {

/// ∫_0^α r^{p+2} q_{n,0}(r) dr for n <= degree and p = 0..pmax.
std::vector<std::vector<cplx>> radial_moments(const PotentialSH& q, int pmax)
{
    const int D = q.degree();
    std::vector<std::vector<cplx>> out(static_cast<std::size_t>(D + 1),
                                       std::vector<cplx>(static_cast<std::size_t>(pmax + 1), 0.0));
    if (q.alpha() <= 0.0) {
        return out;
    }
    std::vector<double> cuts = q.breaks();
    const std::vector<double> ends = panel_endpoints(0.0, q.alpha(), cuts, 0.25);
    const GaussRule g = composite_gauss(ends, std::max(24, pmax / 2 + 12));
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double r = g.nodes[i];
        const Eigen::VectorXcd v = q.profiles_at(r);
        double rp = g.weights[i] * r * r;
        for (int p = 0; p <= pmax; ++p) {
            for (int n = 0; n <= D; ++n) {
                out[static_cast<std::size_t>(n)][static_cast<std::size_t>(p)] += rp * v(SphericalIndex{n, 0}.flat());
            }
            rp *= r;
        }
    }
    return out;
}

cplx contract_moment(const std::vector<std::vector<cplx>>& radial, int degree, int k, int ell)
{
    const ProductExpansion pe = product_expansion(k, ell);
    cplx sum = 0.0;
    for (const ProductTerm& t : pe.terms) {
        if (t.n > degree) {
            continue;
        }
        sum += t.coeff * std::sqrt(4 * pi / (2 * t.n + 1))
            * radial[static_cast<std::size_t>(t.n)][static_cast<std::size_t>(k + ell)];
    }
    return sum;
}

} // namespace

cplx moment_3d(const PotentialSH& q, int k, int ell, const Frame& frame)
{
    if (k < 0 || ell < k) {
        throw DomainError("moments need 0 <= k <= l");
    }
    const PotentialSH qr = to_e3_frame(q, frame);
    return contract_moment(radial_moments(qr, k + ell), qr.degree(), k, ell);
}

MomentTable3D moment_table_3d(const PotentialSH& q, const Frame& frame, int kmax)
{
    if (kmax < 0) {
        throw DomainError("kmax must be non-negative");
    }
    MomentTable3D t;
    t.omega = frame.omega();
    t.frame_rotation = frame.rotation();
    t.kmax = kmax;
    t.entries = TriangularTable(kmax);
    const PotentialSH qr = to_e3_frame(q, frame);
    const auto radial = radial_moments(qr, 2 * kmax);
    for (int k = 0; k <= kmax; ++k) {
        for (int l = k; l <= kmax; ++l) {
            // conj(Y_{l,k}) Y_{k,k} only has degrees l-k..l+k
            t.entries(k, l) = (l - k > qr.degree()) ? cplx(0.0) : contract_moment(radial, qr.degree(), k, l);
        }
    }
    return t;
}

double moment_3d_bound(const PotentialSH& q, int k, int ell)
{
    return q.sup_norm() * std::pow(q.alpha(), k + ell + 3) / (k + ell + 3);
}

} // namespace bc
