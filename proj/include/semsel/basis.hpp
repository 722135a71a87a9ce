#ifndef SEMSEL_BASIS_HPP
#define SEMSEL_BASIS_HPP

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "semsel/errors.hpp"
#include "semsel/term.hpp"

namespace semsel {

/// Power series basis (1, z, z^2, ..., z^{a-1}) evaluated at a scalar.
inline Eigen::VectorXd power_basis(double z, int a) {
    if (a < 1) throw std::invalid_argument("power_basis: need at least one term");
    Eigen::VectorXd q(a);
    q(0) = 1.0;
    for (int j = 1; j < a; ++j) q(j) = q(j - 1) * z;
    return q;
}

/// Truncated power spline basis
/// (1, z, ..., z^s, 1{z>t_1}(z-t_1)^s, ..., 1{z>t_J}(z-t_J)^s).
inline Eigen::VectorXd spline_basis(double z, int order, const std::vector<double>& knots) {
    if (order < 1) throw std::invalid_argument("spline_basis: order must be >= 1");
    for (std::size_t j = 1; j < knots.size(); ++j)
        if (!(knots[j - 1] < knots[j]))
            throw std::invalid_argument("spline_basis: knots must be strictly increasing");
    Eigen::VectorXd q(order + 1 + static_cast<int>(knots.size()));
    q(0) = 1.0;
    for (int j = 1; j <= order; ++j) q(j) = q(j - 1) * z;
    for (std::size_t j = 0; j < knots.size(); ++j)
        q(order + 1 + static_cast<int>(j)) = z > knots[j] ? std::pow(z - knots[j], order) : 0.0;
    return q;
}

/// The same bases as symbolic terms in a given variable.
inline std::vector<Term> power_basis_terms(int variable, int a) {
    if (a < 1) throw std::invalid_argument("power_basis_terms: need at least one term");
    std::vector<Term> out;
    out.reserve(a);
    for (int j = 0; j < a; ++j) out.push_back(Term::power(variable, j));
    return out;
}

inline std::vector<Term> spline_basis_terms(int variable, int order, const std::vector<double>& knots) {
    if (order < 1) throw std::invalid_argument("spline_basis_terms: order must be >= 1");
    for (std::size_t j = 1; j < knots.size(); ++j)
        if (!(knots[j - 1] < knots[j]))
            throw std::invalid_argument("spline_basis_terms: knots must be strictly increasing");
    std::vector<Term> out;
    for (int j = 0; j <= order; ++j) out.push_back(Term::power(variable, j));
    for (double t : knots) out.push_back(Term::spline(variable, order, t));
    return out;
}

/// Pairwise products of two term lists in vec(Q_a Q_b') order: for each
/// element of b, multiply through all of a. Canonical duplicates are kept
/// once, in first-appearance order, so a shared constant is absorbed.
inline std::vector<Term> tensor_terms(const std::vector<Term>& a, const std::vector<Term>& b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("tensor_terms: inputs must be nonempty");
    std::vector<Term> out;
    out.reserve(a.size() * b.size());
    std::map<Term, bool> seen;
    for (const auto& tb : b)
        for (const auto& ta : a) {
            Term p = Term::product(ta, tb);
            if (seen.emplace(p, true).second) out.push_back(std::move(p));
        }
    return out;
}

enum class Rounding { Floor, Ceil, Nearest };

/// Series term budget rule a_n = coeff * n^expnt, rounded and clamped below
/// at 2 so every univariate expansion has at least a constant and a slope.
inline int compute_an(long n, double coeff = 1.5, double expnt = 0.15,
                      Rounding rounding = Rounding::Floor) {
    if (n < 2) throw std::invalid_argument("compute_an: sample size must be >= 2");
    const double raw = coeff * std::pow(static_cast<double>(n), expnt);
    double rounded = 0.0;
    switch (rounding) {
        case Rounding::Floor: rounded = std::floor(raw); break;
        case Rounding::Ceil: rounded = std::ceil(raw); break;
        case Rounding::Nearest: rounded = std::round(raw); break;
    }
    return std::max(2, static_cast<int>(rounded));
}

/// One candidate specification: the restricted regressors W_s it estimates,
/// as indices into the owning CandidateSet's full basis.
struct SeriesForm {
    std::string name;
    std::string label;                // free-form class tag, e.g. "parametric"
    std::vector<Term> restricted_terms;
    std::vector<int> term_indices;    // positions of restricted_terms in full_terms
    int m = 0;                        // number of restricted terms
    int r = 0;                        // number of excluded terms, k - m
};

/// Declarative input to build_candidate_set.
struct ModelSpec {
    std::string name;
    std::string label;
    std::vector<Term> terms;
};

/// An ordered family of candidate series forms sharing one full basis P.
struct CandidateSet {
    std::vector<Term> full_terms;
    std::vector<SeriesForm> forms;  // sorted by m ascending, declaration order on ties
    int k = 0;
    int a_n = 0;                    // complexity budget used to generate terms (0 = n/a)

    const SeriesForm* find_form(const std::string& name) const {
        for (const auto& f : forms)
            if (f.name == name) return &f;
        return nullptr;
    }
};

namespace detail {

inline std::vector<Term> dedup_terms(const std::vector<Term>& terms) {
    std::vector<Term> out;
    std::map<Term, bool> seen;
    for (const auto& t : terms)
        if (seen.emplace(t, true).second) out.push_back(t);
    return out;
}

} // namespace detail

/// Assemble a CandidateSet from model specs. When full_basis is nonempty it
/// defines the P columns and every model must nest inside it; otherwise the
/// full basis is the deduplicated union of the models' terms in declaration
/// order. Forms come out sorted by m ascending (stable on ties).
inline CandidateSet build_candidate_set(const std::vector<ModelSpec>& models,
                                        const std::vector<Term>& full_basis = {},
                                        int a_n = 0) {
    if (models.empty())
        throw config_error("build_candidate_set: at least one model spec is required");

    CandidateSet cs;
    cs.a_n = a_n;
    if (!full_basis.empty()) {
        cs.full_terms = detail::dedup_terms(full_basis);
    } else {
        std::vector<Term> pool;
        for (const auto& spec : models)
            pool.insert(pool.end(), spec.terms.begin(), spec.terms.end());
        cs.full_terms = detail::dedup_terms(pool);
    }
    cs.k = static_cast<int>(cs.full_terms.size());

    std::map<Term, int> index;
    for (int j = 0; j < cs.k; ++j) index.emplace(cs.full_terms[j], j);

    bool have_unrestricted = false;
    for (const auto& spec : models) {
        SeriesForm form;
        form.name = spec.name;
        form.label = spec.label;
        std::map<Term, bool> within;
        for (const auto& t : spec.terms) {
            if (!within.emplace(t, true).second)
                throw config_error("model '" + spec.name + "': duplicate term " + t.name());
            auto it = index.find(t);
            if (it == index.end())
                throw config_error("model '" + spec.name + "' is not nested in the full basis: term " +
                                   t.name() + " is missing from it");
            form.restricted_terms.push_back(t);
            form.term_indices.push_back(it->second);
        }
        form.m = static_cast<int>(form.restricted_terms.size());
        if (form.m < 1)
            throw config_error("model '" + spec.name + "': needs at least one term");
        form.r = cs.k - form.m;
        if (form.r == 0) {
            if (have_unrestricted)
                throw config_error("model '" + spec.name +
                                   "': only one unrestricted (r = 0) form is allowed");
            have_unrestricted = true;
        }
        cs.forms.push_back(std::move(form));
    }

    std::stable_sort(cs.forms.begin(), cs.forms.end(),
                     [](const SeriesForm& a, const SeriesForm& b) { return a.m < b.m; });
    return cs;
}

/// Evaluate terms row-wise over a design matrix; column j is term j.
inline Eigen::MatrixXd evaluate_design(const std::vector<Term>& terms,
                                       const Eigen::Ref<const Eigen::MatrixXd>& X) {
    const auto n = X.rows();
    if (n < 1) throw data_error("evaluate_design: empty sample");
    for (const auto& t : terms)
        if (t.max_variable() >= X.cols())
            throw std::invalid_argument("evaluate_design: term " + t.name() +
                                        " references a column beyond the regressor matrix");
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            if (!std::isfinite(X(i, j)))
                throw data_error("evaluate_design: non-finite value at row " + std::to_string(i));
    Eigen::MatrixXd out(n, static_cast<Eigen::Index>(terms.size()));
    for (std::size_t j = 0; j < terms.size(); ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            out(i, static_cast<Eigen::Index>(j)) = terms[j].eval(X.row(i));
    return out;
}

} // namespace semsel

#endif // SEMSEL_BASIS_HPP
