#ifndef SEMSEL_LMSTAT_HPP
#define SEMSEL_LMSTAT_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "semsel/errors.hpp"
#include "semsel/linreg.hpp"

namespace semsel {

/// LM-type statistics for one series form.
struct LmStatistics {
    std::string form_name;
    double xi = 0.0;                 // quadratic form (0 by convention when r = 0)
    std::optional<double> xi_hc;     // heteroskedasticity-robust variant, if requested
    int r = 0;                       // restriction count
    double t = std::numeric_limits<double>::quiet_NaN();    // (xi - r)/sqrt(2r)
    double t_hc = std::numeric_limits<double>::quiet_NaN();
    int retained_rank = 0;           // eigendirections kept by the inner inverse
};

namespace detail {

/// eps' B (B'B)^+ B' eps: squared norm of the projection of eps onto the
/// retained column space of B. Columns are rescaled to unit RMS before the
/// Gram matrix is formed; the projection depends only on the column span,
/// so this changes conditioning and nothing else.
inline double projection_quadratic(const Eigen::Ref<const Eigen::VectorXd>& eps,
                                   const Eigen::Ref<const Eigen::MatrixXd>& B,
                                   int* retained_rank = nullptr) {
    if (B.cols() == 0) {
        if (retained_rank) *retained_rank = 0;
        return 0.0;
    }
    const Eigen::VectorXd scales = detail::column_scales(B);
    const Eigen::MatrixXd Bs = B * scales.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd gram = Bs.transpose() * Bs;
    const Eigen::VectorXd v = Bs.transpose() * eps;
    auto [gram_pinv, rank] = pinv_psd(gram);
    if (retained_rank) *retained_rank = rank;
    return v.dot(gram_pinv * v);
}

} // namespace detail

/// Homoskedastic LM quadratic form eps' P (sigma2 P'P)^+ P' eps. The basis
/// argument may be the full term matrix P or, when eps is orthogonal to the
/// fitted columns W, just the annihilated complement; the two agree because
/// the projection of eps onto span(W) is zero.
inline double xi_homoskedastic(const Eigen::Ref<const Eigen::VectorXd>& eps,
                               const Eigen::Ref<const Eigen::MatrixXd>& P,
                               double sigma2, int* retained_rank = nullptr) {
    if (eps.size() < 1) throw std::invalid_argument("xi_homoskedastic: empty residual vector");
    if (P.rows() != eps.size())
        throw std::invalid_argument("xi_homoskedastic: residuals and basis row counts differ");
    if (!(sigma2 > 0.0))
        throw degeneracy_error("xi_homoskedastic: degenerate fit (sigma2 = 0), statistic undefined");
    return detail::projection_quadratic(eps, P, retained_rank) / sigma2;
}

/// Heteroskedasticity-robust quadratic form
/// eps' T~ (T~' diag(eps_i^2) T~)^+ T~' eps.
inline double xi_hc(const Eigen::Ref<const Eigen::VectorXd>& eps,
                    const Eigen::Ref<const Eigen::MatrixXd>& T_tilde,
                    int* retained_rank = nullptr) {
    if (T_tilde.cols() < 1) throw std::invalid_argument("xi_hc: needs at least one restriction");
    if (T_tilde.rows() != eps.size())
        throw std::invalid_argument("xi_hc: residuals and basis row counts differ");
    if (eps.cwiseAbs().maxCoeff() == 0.0)
        throw degeneracy_error("xi_hc: degenerate fit (all residuals zero)");

    const Eigen::VectorXd scales = detail::column_scales(T_tilde);
    const Eigen::MatrixXd Ts = T_tilde * scales.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd C = eps.asDiagonal() * Ts;
    const Eigen::MatrixXd M = C.transpose() * C;
    if (M.cwiseAbs().maxCoeff() == 0.0)
        throw degeneracy_error("xi_hc: degenerate design (T~' Sigma T~ is numerically zero)");
    const Eigen::VectorXd v = Ts.transpose() * eps;
    auto [M_pinv, rank] = pinv_psd(M);
    if (retained_rank) *retained_rank = rank;
    return v.dot(M_pinv * v);
}

/// Standardized LM statistic (xi - r)/sqrt(2r).
inline double t_statistic(double xi, int r) {
    if (r < 1)
        throw std::invalid_argument(
            "t_statistic: undefined for the unrestricted form (r = 0); caller must special-case it");
    return (xi - static_cast<double>(r)) / std::sqrt(2.0 * static_cast<double>(r));
}

} // namespace semsel

#endif // SEMSEL_LMSTAT_HPP
