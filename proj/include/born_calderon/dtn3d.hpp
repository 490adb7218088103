#pragma once

#include "born_calderon/gaunt.hpp"
#include "born_calderon/quadrature.hpp"
#include "born_calderon/radial_dtn.hpp"
#include "born_calderon/specfun.hpp"

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace bc {

/// q(x) = Σ_{l<=L, |m|<=l} q_{l,m}(|x|) Y_{l,m}(x/|x|) on the unit ball of R^3.
///
/// Profiles are stored as linear combinations of shared radial basis
/// functions, q_{l,m}(r) = Σ_j C(flat(l,m), j) b_j(r), so rotations only act
/// on the coefficient matrix C.
class PotentialSH {
public:
    using Basis = std::function<cplx(double)>;

    PotentialSH(int degree, std::vector<Basis> basis, Eigen::MatrixXcd coefficients, double alpha, double sup_norm,
                std::vector<double> breaks = {});

    static PotentialSH zero(int degree = 0);
    /// q_{0,0} = 2 sqrt(π) q0.
    static PotentialSH from_radial(const RadialPotential& q);
    /// One basis profile per listed index; the caller supplies both q_{l,m}
    /// and q_{l,-m} when reality is wanted.
    static PotentialSH from_profiles(int degree, const std::vector<std::pair<SphericalIndex, Basis>>& profiles,
                                     double alpha, double sup_norm, std::vector<double> breaks = {});

    [[nodiscard]] int degree() const { return degree_; }
    [[nodiscard]] double alpha() const { return alpha_; }
    [[nodiscard]] double sup_norm() const { return sup_norm_; }
    /// Radii in (0, alpha) where profiles may jump.
    [[nodiscard]] const std::vector<double>& breaks() const { return breaks_; }
    [[nodiscard]] const Eigen::MatrixXcd& coefficients() const { return coeffs_; }
    [[nodiscard]] const std::vector<Basis>& basis() const { return basis_; }

    /// True if the profile of idx is not identically zero.
    [[nodiscard]] bool has(SphericalIndex idx) const;
    /// Indices with nonzero profiles, in flat order.
    [[nodiscard]] std::vector<SphericalIndex> support() const;
    /// All profiles at radius r, indexed by flat(l, m). Zero for r > alpha.
    [[nodiscard]] Eigen::VectorXcd profiles_at(double r) const;
    [[nodiscard]] cplx profile(SphericalIndex idx, double r) const;
    [[nodiscard]] cplx operator()(const Vec3& x) const;

    /// max |q_{l,-m} - (-1)^m conj(q_{l,m})| over sample radii.
    [[nodiscard]] double reality_defect(int samples = 64) const;
    [[nodiscard]] PotentialSH scaled(double factor) const;
    /// Real part of q as a ball function (for quadrature oracles).
    [[nodiscard]] BallFunction as_ball_function() const;

private:
    int degree_;
    std::vector<Basis> basis_;
    Eigen::MatrixXcd coeffs_;
    double alpha_;
    double sup_norm_;
    std::vector<double> breaks_;
};

struct ProjectionOptions {
    int nodes_per_panel = 24;
    double max_panel_width = 0.125;
};

struct ProjectionResult {
    PotentialSH potential;
    /// max |q - Π_L q| on check points off the projection grid.
    double residual = 0.0;
};

/// Projects q onto degrees <= degree on Gauss-Legendre radial panels; profiles
/// are the barycentric interpolants of the projected samples.
ProjectionResult project_potential(const BallFunction& q, int degree, const ProjectionOptions& options = {});

/// D(m, n) = ∫ Y_{l,m}(M x) conj(Y_{l,n}(x)) dS, so Y_{l,m}(M x) = Σ_n D(m, n) Y_{l,n}(x).
Eigen::MatrixXcd wigner_matrix(int ell, const Mat3& rotation);

/// The potential x -> q(M x), obtained exactly from q's coefficients.
PotentialSH rotate_potential(const PotentialSH& q, const Mat3& rotation);

struct ChannelOptions {
    int nodes_per_panel = 24;
    double max_panel_width = 0.25;
    double tolerance = 1e-13;
    int max_iterations = 400;
    int restart = 60;
    double shell_warning = 1e-8;
};

/// Solution of -Δu + q u = 0, u = Y_{k,m} on the sphere, as channel profiles
/// w_{l,n}(r) = r u_{l,n}(r) on Chebyshev-Lobatto panels.
struct ChannelSolution {
    SphericalIndex boundary;
    int lmax = 0;
    std::vector<SphericalIndex> channels;
    std::vector<double> panel_ends;
    /// Lobatto nodes per panel, panel by panel (interface radii repeated).
    std::vector<double> nodes;
    /// values(i, c) = w of channel c at nodes[i].
    Eigen::MatrixXcd values;
    /// Share of Σ ∫|w|² carried by channels of degree lmax other than the boundary channel.
    double shell_energy = 0.0;
    int iterations = 0;
    double residual = 0.0;
    std::vector<std::string> warnings;

    /// Position of idx in `channels`, or -1.
    [[nodiscard]] int find(SphericalIndex idx) const;
    /// u_{l,n}(r); zero for unreached channels.
    [[nodiscard]] cplx u(SphericalIndex idx, double r) const;
    /// ∫ conj(Y_{l,n}) Λ_q Y_{k,m} dS from the boundary derivative u'(1) = w'(1) - w(1).
    [[nodiscard]] cplx dtn(SphericalIndex idx) const;
};

/// Coupled radial system for a fixed potential and channel bandwidth. Gaunt
/// data and per-channel factorizations are built once and shared by solves,
/// which may run concurrently.
class ChannelSystem {
public:
    ChannelSystem(const PotentialSH& q, int lmax, const ChannelOptions& options = {});
    ~ChannelSystem();
    ChannelSystem(const ChannelSystem&) = delete;
    ChannelSystem& operator=(const ChannelSystem&) = delete;

    /// Throws SingularSystemError if a channel block or the coupled system
    /// cannot be solved.
    [[nodiscard]] ChannelSolution solve(SphericalIndex boundary) const;

    [[nodiscard]] const PotentialSH& potential() const { return q_; }
    [[nodiscard]] int lmax() const { return lmax_; }
    [[nodiscard]] const GauntTable& gaunt() const { return gaunt_; }

    /// ∫_0^α r^{l+1} Σ q_{λ,μ}(r) w_{l',n'}(r) G(l,n; λ,μ; l',n') dr, i.e.
    /// ∫_B q u |x|^l conj(Y_{l,n}) dx.
    [[nodiscard]] cplx alessandrini(const ChannelSolution& solution, SphericalIndex test) const;

private:
    struct Block;
    const Block& block(int flat) const;

    PotentialSH q_;
    int lmax_;
    ChannelOptions options_;
    GauntTable gaunt_;
    std::vector<SphericalIndex> q_support_;
    std::vector<double> ends_;
    std::vector<double> nodes_;
    std::vector<Eigen::MatrixXd> d1_;
    std::vector<Eigen::MatrixXd> d2_;
    std::vector<Eigen::VectorXcd> q_at_nodes_;
    mutable std::vector<std::unique_ptr<Block>> blocks_;
    mutable std::vector<std::once_flag> block_once_;
};

/// Convenience wrapper: builds a ChannelSystem and solves once.
ChannelSolution solve_channel_system(const PotentialSH& q, SphericalIndex boundary, int lmax,
                                     const ChannelOptions& options = {});

/// Default channel bandwidth for matrix elements up to degree `kmax`.
int default_lmax(const PotentialSH& q, int kmax);

/// λ_{k,l;ω}[q] - k δ_{k,l}, by rotation to the e3 frame and the Alessandrini integral.
cplx matrix_element(const PotentialSH& q, int k, int ell, const Frame& frame, int lmax = -1,
                    const ChannelOptions& options = {});

/// Upper-triangular table indexed by 0 <= k <= l <= K.
struct TriangularTable {
    int kmax = 0;
    std::vector<cplx> data;

    explicit TriangularTable(int K = 0) : kmax(K), data(static_cast<std::size_t>((K + 1) * (K + 2) / 2)) {}
    [[nodiscard]] cplx& operator()(int k, int ell) { return data[index(k, ell)]; }
    [[nodiscard]] const cplx& operator()(int k, int ell) const { return data[index(k, ell)]; }

private:
    [[nodiscard]] std::size_t index(int k, int ell) const;
};

struct MatrixElementTable {
    Vec3 omega;
    Mat3 frame_rotation;
    int kmax = 0;
    int lmax = 0;
    /// λ_{k,l;ω} - k δ_{k,l} from the Alessandrini integral.
    TriangularTable entries;
    /// The same from the boundary derivative of the channel solution.
    TriangularTable derivative_route;
    double max_route_gap = 0.0;
    double max_shell_energy = 0.0;
    std::vector<std::string> warnings;
};

/// All entries with k <= l <= K; one solve per k, run in parallel.
MatrixElementTable matrix_element_table(const PotentialSH& q, const Frame& frame, int kmax, int lmax = -1,
                                        const ChannelOptions& options = {});

/// Full D-N block ∫ conj(Y_{l,n'}) Λ_q Y_{k,n} dS in the standard basis:
/// rows n' = -l..l, columns n = -k..k (boundary derivative route).
Eigen::MatrixXcd dtn_block(const ChannelSystem& system, int k, int ell);

/// m_{k,l;ω}[q] = ∫_B |x|^{l+k} q conj(Y^ω_{l,k}) Y^ω_{k,k} dx.
cplx moment_3d(const PotentialSH& q, int k, int ell, const Frame& frame);

struct MomentTable3D {
    Vec3 omega;
    Mat3 frame_rotation;
    int kmax = 0;
    TriangularTable entries;
};

MomentTable3D moment_table_3d(const PotentialSH& q, const Frame& frame, int kmax);

/// ‖q‖_∞ α^{k+l+3} / (k+l+3).
double moment_3d_bound(const PotentialSH& q, int k, int ell);

} // namespace bc
