#ifndef SEMSEL_TERM_HPP
#define SEMSEL_TERM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "semsel/errors.hpp"

namespace semsel {

/// One multiplicative factor of a basis term: either a plain power x_v^e
/// or a truncated power 1{x_v > knot} (x_v - knot)^e.
struct TermFactor {
    int variable = 0;
    int exponent = 1;       // >= 1; spline factors use it as the spline order
    bool truncated = false; // true for spline (truncated power) factors
    double knot = 0.0;      // meaningful only when truncated

    double eval(double x) const {
        if (truncated) {
            if (x <= knot) return 0.0;
            return std::pow(x - knot, exponent);
        }
        if (exponent == 1) return x;
        return std::pow(x, exponent);
    }

    friend bool operator==(const TermFactor& a, const TermFactor& b) {
        return a.variable == b.variable && a.exponent == b.exponent &&
               a.truncated == b.truncated && (!a.truncated || a.knot == b.knot);
    }
    friend bool operator<(const TermFactor& a, const TermFactor& b) {
        if (a.variable != b.variable) return a.variable < b.variable;
        if (a.truncated != b.truncated) return a.truncated < b.truncated;
        if (a.truncated && a.knot != b.knot) return a.knot < b.knot;
        return a.exponent < b.exponent;
    }
};

enum class TermKind { Power, SplineTruncated, RawColumn, Product };

/// A basis function: a product of factors held in canonical form (factors
/// flattened, merged per variable where algebraically identical, and sorted
/// by (variable, kind, knot)). The empty product is the constant 1. Two
/// terms compare equal exactly when they evaluate identically, which is
/// what makes deduplicated term counting well defined.
class Term {
public:
    Term() = default; // constant

    static Term constant() { return Term(); }

    /// The column itself, x_v.
    static Term raw(int variable) {
        Term t;
        t.factors_.push_back({variable, 1, false, 0.0});
        return t;
    }

    /// x_v^exponent; exponent 0 collapses to the constant.
    static Term power(int variable, int exponent) {
        if (exponent < 0) throw std::invalid_argument("Term::power: negative exponent");
        Term t;
        if (exponent > 0) t.factors_.push_back({variable, exponent, false, 0.0});
        return t;
    }

    /// Truncated power 1{x_v > knot} (x_v - knot)^order.
    static Term spline(int variable, int order, double knot) {
        if (order < 1) throw std::invalid_argument("Term::spline: order must be >= 1");
        Term t;
        t.factors_.push_back({variable, order, true, knot});
        return t;
    }

    /// Canonicalized product of two terms.
    static Term product(const Term& a, const Term& b) {
        Term t;
        t.factors_ = a.factors_;
        t.factors_.insert(t.factors_.end(), b.factors_.begin(), b.factors_.end());
        t.canonicalize();
        return t;
    }

    const std::vector<TermFactor>& factors() const { return factors_; }
    bool is_constant() const { return factors_.empty(); }

    TermKind kind() const {
        if (factors_.size() >= 2) return TermKind::Product;
        if (factors_.empty()) return TermKind::Power; // constant = x^0
        if (factors_[0].truncated) return TermKind::SplineTruncated;
        return factors_[0].exponent == 1 ? TermKind::RawColumn : TermKind::Power;
    }

    /// Total polynomial degree (spline factors count their order).
    int degree() const {
        int d = 0;
        for (const auto& f : factors_) d += f.exponent;
        return d;
    }

    /// Largest variable index referenced, or -1 for the constant.
    int max_variable() const {
        int m = -1;
        for (const auto& f : factors_) m = std::max(m, f.variable);
        return m;
    }

    double eval(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
        double v = 1.0;
        for (const auto& f : factors_) v *= f.eval(row(f.variable));
        return v;
    }

    /// Compact display form, e.g. "1", "x0", "x1^2*x2", "(x0-0.5)+^2".
    std::string name() const {
        if (factors_.empty()) return "1";
        std::ostringstream os;
        bool first = true;
        for (const auto& f : factors_) {
            if (!first) os << "*";
            first = false;
            if (f.truncated) {
                os << "(x" << f.variable << "-" << f.knot << ")+";
                if (f.exponent != 1) os << "^" << f.exponent;
            } else {
                os << "x" << f.variable;
                if (f.exponent != 1) os << "^" << f.exponent;
            }
        }
        return os.str();
    }

    friend bool operator==(const Term& a, const Term& b) { return a.factors_ == b.factors_; }
    friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }
    friend bool operator<(const Term& a, const Term& b) {
        return std::lexicographical_compare(a.factors_.begin(), a.factors_.end(),
                                            b.factors_.begin(), b.factors_.end());
    }

private:
    void canonicalize() {
        std::sort(factors_.begin(), factors_.end());
        // Merge adjacent factors that are powers of the same base:
        // x^a * x^b = x^(a+b), and likewise for truncated powers sharing a knot.
        std::vector<TermFactor> merged;
        for (const auto& f : factors_) {
            if (!merged.empty()) {
                auto& back = merged.back();
                if (back.variable == f.variable && back.truncated == f.truncated &&
                    (!f.truncated || back.knot == f.knot)) {
                    back.exponent += f.exponent;
                    continue;
                }
            }
            merged.push_back(f);
        }
        factors_ = std::move(merged);
    }

    std::vector<TermFactor> factors_;
};

} // namespace semsel

#endif // SEMSEL_TERM_HPP
