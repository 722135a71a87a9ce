#ifndef SEMSEL_LINREG_HPP
#define SEMSEL_LINREG_HPP

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "semsel/errors.hpp"

namespace semsel {

/// Least-squares fit of one series form.
struct FitResult {
    Eigen::VectorXd beta;       // coefficients on the retained design columns
    Eigen::VectorXd residuals;  // Y - W * beta
    double sigma2 = 0.0;        // residuals' squared norm / n
    int effective_rank = 0;     // numerical rank of the (scaled) design
    long n = 0;
};

namespace detail {

inline void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& M, const char* who) {
    if (!M.allFinite()) throw data_error(std::string(who) + ": non-finite values in input");
}

/// Column scale factors: root-mean-square per column, with constant and
/// all-zero columns left unscaled. Rescaling changes neither the column
/// span nor the fitted values, only the conditioning of the factorization.
inline Eigen::VectorXd column_scales(const Eigen::Ref<const Eigen::MatrixXd>& W) {
    Eigen::VectorXd s(W.cols());
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
        const double rms = std::sqrt(W.col(j).squaredNorm() / static_cast<double>(W.rows()));
        const bool constant = W.col(j).maxCoeff() == W.col(j).minCoeff();
        s(j) = (constant || rms == 0.0) ? 1.0 : rms;
    }
    return s;
}

} // namespace detail

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix, treating
/// eigenvalues below rel_tol * lambda_max as zero. Returns the inverse on
/// the retained eigenspace and the retained count.
inline std::pair<Eigen::MatrixXd, int> pinv_psd(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                                double rel_tol = 1e-10) {
    if (A.rows() != A.cols()) throw std::invalid_argument("pinv_psd: matrix must be square");
    detail::require_finite(A, "pinv_psd");
    const double scale = A.cwiseAbs().maxCoeff();
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(scale, 1e-300))
        throw std::invalid_argument("pinv_psd: matrix is not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double lam_max = lam.maxCoeff();
    const double lam_min = lam.minCoeff();
    const double mag = std::max(std::abs(lam_max), std::abs(lam_min));
    if (lam_min < -1e-8 * mag)
        throw degeneracy_error("pinv_psd: matrix is not positive semidefinite (min eigenvalue " +
                               std::to_string(lam_min) + ")");

    const double cutoff = rel_tol * std::max(lam_max, 0.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(lam.size());
    int rank = 0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) > cutoff && lam(i) > 0.0) {
            inv(i) = 1.0 / lam(i);
            ++rank;
        }
    }
    Eigen::MatrixXd P = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    return {std::move(P), rank};
}

/// Least squares of Y on W via a rank-revealing complete orthogonal
/// factorization of the column-rescaled design. On rank deficiency the
/// minimum-norm coefficient vector (in the original coordinates) is
/// returned and effective_rank records the retained dimension.
inline FitResult fit_ols(const Eigen::Ref<const Eigen::VectorXd>& Y,
                         const Eigen::Ref<const Eigen::MatrixXd>& W,
                         double rel_tol = 1e-10) {
    const long n = static_cast<long>(Y.size());
    const long m = static_cast<long>(W.cols());
    if (m < 1) throw std::invalid_argument("fit_ols: design must have at least one column");
    if (W.rows() != Y.size()) throw std::invalid_argument("fit_ols: Y and W row counts differ");
    if (n < m) throw data_error("fit_ols: insufficient data (n = " + std::to_string(n) +
                                " rows for m = " + std::to_string(m) + " columns)");
    detail::require_finite(Y, "fit_ols");
    detail::require_finite(W, "fit_ols");

    const Eigen::VectorXd scales = detail::column_scales(W);
    const Eigen::MatrixXd Ws = W * scales.cwiseInverse().asDiagonal();

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Ws);
    cod.setThreshold(rel_tol);
    const int rank = static_cast<int>(cod.rank());

    FitResult fit;
    fit.n = n;
    fit.effective_rank = rank;
    fit.beta = scales.cwiseInverse().asDiagonal() * cod.solve(Y).eval();
    if (rank < m) {
        // The factorization minimizes the norm of the rescaled coefficients;
        // redo the solve through the SVD so the minimum-norm property holds
        // in the original coordinates.
        Eigen::BDCSVD<Eigen::MatrixXd> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(rel_tol);
        fit.beta = svd.solve(Y);
    }
    fit.residuals = Y - W * fit.beta;
    fit.sigma2 = fit.residuals.squaredNorm() / static_cast<double>(n);
    return fit;
}

/// Residuals from regressing each column of T on W: M_W T, computed one
/// least-squares solve at a time rather than through the n-by-n projector.
inline Eigen::MatrixXd annihilate(const Eigen::Ref<const Eigen::MatrixXd>& T,
                                  const Eigen::Ref<const Eigen::MatrixXd>& W,
                                  double rel_tol = 1e-10) {
    if (T.rows() != W.rows()) throw std::invalid_argument("annihilate: row counts differ");
    if (T.rows() < 1) throw data_error("annihilate: empty sample");
    detail::require_finite(T, "annihilate");
    detail::require_finite(W, "annihilate");
    if (W.cols() == 0 || T.cols() == 0) return T;

    const Eigen::VectorXd scales = detail::column_scales(W);
    const Eigen::MatrixXd Ws = W * scales.cwiseInverse().asDiagonal();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Ws);
    cod.setThreshold(rel_tol);
    return T - Ws * cod.solve(T);
}

} // namespace semsel

#endif // SEMSEL_LINREG_HPP
