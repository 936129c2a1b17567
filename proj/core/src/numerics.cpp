#include "synsim/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace synsim {

namespace {

constexpr int kMaxNewtonKleinman = 50;
constexpr int kMaxSignIterations = 100;
constexpr int kMaxRejections = 100000;

double scale_of(const Matrix& m) { return std::max(1.0, m.cwiseAbs().maxCoeff()); }

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void require_square(const Matrix& m, const char* name) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        std::ostringstream os;
        os << name << " must be a non-empty square matrix, got " << m.rows() << "x" << m.cols();
        throw std::invalid_argument(os.str());
    }
}

double relative_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& p) {
    return care_residual(a, b, q, p).norm() / (1.0 + p.norm());
}

// Stable invariant subspace from the eigenvectors of the Hamiltonian.
// Returns an empty matrix when the eigenvector basis is unusable.
Matrix care_by_eigenvectors(const Matrix& h, Eigen::Index n) {
    Eigen::EigenSolver<Matrix> es(h, true);
    if (es.info() != Eigen::Success) return {};
    const auto& values = es.eigenvalues();
    const auto& vectors = es.eigenvectors();

    Eigen::MatrixXcd basis(2 * n, n);
    Eigen::Index found = 0;
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        if (values(k).real() < 0.0) {
            if (found == n) return {};
            basis.col(found++) = vectors.col(k);
        }
    }
    if (found != n) return {};

    Eigen::MatrixXcd top = basis.topRows(n);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(top);
    if (!lu.isInvertible() || lu.rcond() < 1e-10) return {};
    Eigen::MatrixXcd p = basis.bottomRows(n) * lu.inverse();
    if (p.imag().cwiseAbs().maxCoeff() > 1e-6 * std::max(1.0, p.real().cwiseAbs().maxCoeff())) {
        return {};
    }
    return symmetrized(p.real());
}

// Matrix sign function with determinant scaling; robust to repeated eigenvalues.
Matrix care_by_sign_function(const Matrix& h, Eigen::Index n) {
    const Eigen::Index m = 2 * n;
    Matrix z = h;
    for (int it = 0; it < kMaxSignIterations; ++it) {
        Eigen::PartialPivLU<Matrix> lu(z);
        const double det = std::abs(lu.determinant());
        if (!(det > 0.0) || !std::isfinite(det)) return {};
        const double c = std::pow(det, -1.0 / static_cast<double>(m));
        Matrix next = 0.5 * (c * z + lu.inverse() / c);
        const double change = (next - z).norm() / std::max(1.0, next.norm());
        z = std::move(next);
        if (change < 1e-14) break;
    }
    const Matrix id = Matrix::Identity(n, n);
    Matrix lhs(m, n);
    lhs << z.topRightCorner(n, n), z.bottomRightCorner(n, n) + id;
    Matrix rhs(m, n);
    rhs << z.topLeftCorner(n, n) + id, z.bottomLeftCorner(n, n);
    Matrix p = -lhs.colPivHouseholderQr().solve(rhs);
    if (!p.allFinite()) return {};
    return symmetrized(p);
}

Matrix newton_kleinman(const Matrix& a, const Matrix& b, const Matrix& q, Matrix p) {
    const Matrix g = b * b.transpose();
    double best = relative_residual(a, b, q, p);
    for (int it = 0; it < kMaxNewtonKleinman && best > 1e-3 * Tolerances::care_residual; ++it) {
        const Matrix closed = a - g * p;
        if (!is_hurwitz(closed)) break;
        Matrix next = symmetrized(solve_lyapunov(closed, q + p * g * p));
        const double r = relative_residual(a, b, q, next);
        if (!(r < best)) break;
        best = r;
        p = std::move(next);
    }
    return p;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x5eedu};
    engine_.seed(seq);
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform() { return uniform_(engine_); }

double asymmetry(const Matrix& m) {
    if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

SymEig sym_eig(const Matrix& m) {
    require_square(m, "sym_eig input");
    const double skew = asymmetry(m);
    if (skew > Tolerances::symmetry * scale_of(m)) {
        std::ostringstream os;
        os << "sym_eig: matrix is not symmetric (max |M - M^T| = " << skew << ")";
        throw NumericalError(os.str());
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m));
    if (es.info() != Eigen::Success) throw NumericalError("sym_eig: eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

Matrix care_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& p) {
    return p * a + a.transpose() * p - p * b * b.transpose() * p + q;
}

bool is_hurwitz(const Matrix& a) {
    Eigen::EigenSolver<Matrix> es(a, false);
    if (es.info() != Eigen::Success) return false;
    return (es.eigenvalues().real().array() < 0.0).all();
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& c) {
    require_square(a, "Lyapunov A");
    const Eigen::Index n = a.rows();
    if (c.rows() != n || c.cols() != n) throw std::invalid_argument("Lyapunov C must match A");
    const Matrix id = Matrix::Identity(n, n);
    const Matrix at = a.transpose();
    // vec(A^T X) = (I kron A^T) vec X,  vec(X A) = (A^T kron I) vec X
    Matrix kron = Matrix::Zero(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            kron.block(i * n, j * n, n, n) += id(i, j) * at;
            kron.block(i * n, j * n, n, n) += at(i, j) * id;
        }
    }
    const Vector rhs = -Eigen::Map<const Vector>(c.data(), n * n);
    Eigen::FullPivLU<Matrix> lu(kron);
    if (!lu.isInvertible()) throw NumericalError("Lyapunov equation is singular (A and -A share an eigenvalue)");
    Vector x = lu.solve(rhs);
    return Eigen::Map<Matrix>(x.data(), n, n);
}

Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q) {
    require_square(a, "CARE A");
    const Eigen::Index n = a.rows();
    if (b.rows() != n || b.cols() == 0) throw std::invalid_argument("CARE B must have as many rows as A");
    if (q.rows() != n || q.cols() != n) throw std::invalid_argument("CARE Q must match A");
    if (asymmetry(q) > Tolerances::symmetry * scale_of(q)) throw NumericalError("CARE Q must be symmetric");

    const Matrix g = b * b.transpose();
    Matrix h(2 * n, 2 * n);
    h << a, -g, -q, -a.transpose();

    Eigen::EigenSolver<Matrix> spectrum(h, false);
    if (spectrum.info() != Eigen::Success) throw NumericalError("CARE: Hamiltonian eigensolver failed");
    const double axis_tol = Tolerances::imaginary_axis * scale_of(h);
    for (Eigen::Index k = 0; k < spectrum.eigenvalues().size(); ++k) {
        const std::complex<double> ev = spectrum.eigenvalues()(k);
        if (std::abs(ev.real()) <= axis_tol) {
            std::ostringstream os;
            os << "CARE has no stabilizing solution: Hamiltonian eigenvalue " << ev.real()
               << (ev.imag() < 0 ? " - " : " + ") << std::abs(ev.imag()) << "i lies on the imaginary axis";
            throw NumericalError(os.str());
        }
    }

    Matrix p = care_by_eigenvectors(h, n);
    if (p.size() == 0) p = care_by_sign_function(h, n);
    if (p.size() == 0) {
        if (!is_hurwitz(a)) throw NumericalError("CARE: invariant subspace unusable and A is not Hurwitz");
        p = Matrix::Zero(n, n);
    }
    p = newton_kleinman(a, b, q, std::move(p));

    const double residual = care_residual(a, b, q, p).norm();
    if (!(residual < Tolerances::care_residual * (1.0 + p.norm()))) {
        std::ostringstream os;
        os << "CARE: residual " << residual << " above tolerance";
        throw NumericalError(os.str());
    }
    if (sym_eig(p).values.minCoeff() < -Tolerances::psd * scale_of(p)) {
        throw NumericalError("CARE: solution is not positive semidefinite");
    }
    if (!is_hurwitz(a - g * p)) throw NumericalError("CARE: solution is not stabilizing");
    return p;
}

GaussianSampler::GaussianSampler(Vector mean, const Matrix& cov) : mean_(std::move(mean)) {
    if (cov.rows() != mean_.size() || cov.cols() != mean_.size()) {
        throw std::invalid_argument("Gaussian covariance must be square and match the mean");
    }
    if (mean_.size() == 0) {
        factor_.resize(0, 0);
        return;
    }
    const SymEig eig = sym_eig(cov);
    const double floor = -Tolerances::psd * scale_of(cov);
    if (eig.values.minCoeff() < floor) {
        std::ostringstream os;
        os << "Gaussian covariance is not positive semidefinite (min eigenvalue " << eig.values.minCoeff() << ")";
        throw NumericalError(os.str());
    }
    const Vector roots = eig.values.cwiseMax(0.0).cwiseSqrt();
    factor_ = eig.vectors * roots.asDiagonal();
}

Vector GaussianSampler::operator()(RngStream& rng) const {
    Vector xi(mean_.size());
    for (Eigen::Index k = 0; k < xi.size(); ++k) xi(k) = rng.normal();
    return mean_ + factor_ * xi;
}

Vector sample_gaussian(const Vector& mean, const Matrix& cov, RngStream& rng) {
    return GaussianSampler(mean, cov)(rng);
}

Vector sample_sharing_ratios(int n, const Matrix& c_m, RngStream& rng) {
    if (n < 2) throw std::invalid_argument("sharing ratios need at least two agents");
    if (c_m.rows() != n || c_m.cols() != n) throw std::invalid_argument("sharing covariance must be n x n");
    const GaussianSampler draw(Vector::Constant(n, 1.0 / n), c_m);
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
        Vector s = draw(rng);
        if ((s.array() < 0.0).any() || (s.array() > 1.0).any()) continue;
        const double total = s.sum();
        if (!(total > 0.0)) continue;
        return s / total;
    }
    std::ostringstream os;
    os << "sharing-ratio rejection sampler accepted nothing in " << kMaxRejections
       << " draws (acceptance rate below 1e-4); rescale the sharing covariance";
    throw NumericalError(os.str());
}

}  // namespace synsim
