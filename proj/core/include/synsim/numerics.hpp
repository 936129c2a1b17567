#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace synsim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerical tolerances shared by solvers, runtime checks and tests.
struct Tolerances {
    static constexpr double symmetry = 1e-9;
    static constexpr double psd = 1e-9;
    static constexpr double care_residual = 1e-8;
    static constexpr double imaginary_axis = 1e-9;
    static constexpr double connectivity = 1e-9;
    static constexpr double lyapunov_slack = 1e-12;
    static constexpr double decomposition = 1e-12;
};

/// Thrown when an input violates an operation's numerical precondition.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Deterministic random stream keyed by (seed, stream id).
///
/// Two streams with the same key produce bit-identical draws. Streams are
/// cheap to copy; a copy replays the same sequence from the copy point.
/// Do not share one instance across threads.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    double normal();
    double uniform();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

struct SymEig {
    Vector values;   // ascending
    Matrix vectors;  // column k pairs with values(k)
};

/// Largest absolute asymmetry |M - M^T|.
double asymmetry(const Matrix& m);

/// Eigendecomposition of a symmetric matrix. Throws NumericalError if M is
/// not symmetric within Tolerances::symmetry (scaled by max(1, |M|)).
SymEig sym_eig(const Matrix& m);

/// Residual P A + A^T P - P B B^T P + Q.
Matrix care_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& p);

/// Stabilizing solution of P A + A^T P - P B B^T P + Q = 0.
///
/// Uses the stable invariant subspace of the Hamiltonian matrix, polished by
/// Newton-Kleinman iterations. Falls back to Newton-Kleinman from P = 0 when
/// the subspace is ill-conditioned and A is already Hurwitz.
Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q);

/// Solves A^T X + X A + C = 0 for X (dense Kronecker form, small n only).
Matrix solve_lyapunov(const Matrix& a, const Matrix& c);

bool is_hurwitz(const Matrix& a);

/// Multivariate normal sampler with a precomputed symmetric square-root factor.
class GaussianSampler {
public:
    GaussianSampler(Vector mean, const Matrix& cov);

    Vector operator()(RngStream& rng) const;

    const Vector& mean() const { return mean_; }
    const Matrix& factor() const { return factor_; }

private:
    Vector mean_;
    Matrix factor_;
};

Vector sample_gaussian(const Vector& mean, const Matrix& cov, RngStream& rng);

/// Truncated, renormalized multivariate normal draw on the probability simplex.
///
/// Draws from N(1/n, C_m) until every component lies in [0, 1], then divides
/// by the component sum. Throws NumericalError when the acceptance rate drops
/// below 1e-4.
Vector sample_sharing_ratios(int n, const Matrix& c_m, RngStream& rng);

}  // namespace synsim
