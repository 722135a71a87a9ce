#ifndef SEMSEL_SELECT_HPP
#define SEMSEL_SELECT_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semsel/basis.hpp"
#include "semsel/errors.hpp"
#include "semsel/linreg.hpp"
#include "semsel/lmstat.hpp"

namespace semsel {

enum class VarianceMode { Homoskedastic, Heteroskedastic };

enum class Procedure { LmBic, Ut, Dt };

inline const char* procedure_name(Procedure p) {
    switch (p) {
        case Procedure::LmBic: return "lm-bic";
        case Procedure::Ut: return "ut";
        case Procedure::Dt: return "dt";
    }
    return "?";
}

/// Penalty and critical-value settings shared by one selection run.
struct TuningParams {
    double kappa = 0.0;  // BIC-type penalty weight
    double gamma = 0.0;  // testing critical value
    VarianceMode variance_mode = VarianceMode::Homoskedastic;
};

/// Model selection criterion (xi - r kappa)/sqrt(2r); 0 by convention for
/// the unrestricted form.
inline double msc(double xi, int r, double kappa) {
    if (r < 0) throw std::invalid_argument("msc: negative restriction count");
    if (r == 0) return 0.0;
    return (xi - static_cast<double>(r) * kappa) / std::sqrt(2.0 * static_cast<double>(r));
}

/// Default penalty kappa_n = ln n.
inline double default_kappa(long n) {
    if (n < 2) throw std::invalid_argument("default_kappa: sample size must be >= 2");
    return std::log(static_cast<double>(n));
}

/// Default critical value gamma_n = 0.05 sqrt(n).
inline double default_gamma(long n) {
    if (n < 1) throw std::invalid_argument("default_gamma: sample size must be >= 1");
    return 0.05 * std::sqrt(static_cast<double>(n));
}

/// Everything the procedures need about one candidate, computed once.
struct FormStats {
    std::string name;
    int m = 0;
    int r = 0;
    double xi = 0.0;
    double t = std::numeric_limits<double>::quiet_NaN();   // NaN when r = 0
    double msc = 0.0;
    bool available = true;          // false when the fit was degenerate
    int retained_rank = 0;          // rank kept by the inner pseudo-inverse
    FitResult fit;                  // coefficients for post-selection use
    std::vector<std::string> warnings;
};

struct PerFormRecord {
    std::string form_name;
    int m = 0;
    int r = 0;
    double xi = 0.0;
    double t = std::numeric_limits<double>::quiet_NaN();
    double msc = 0.0;
    bool available = true;
};

struct SelectionResult {
    std::vector<PerFormRecord> per_form;  // one record per candidate form
    std::string chosen;
    Procedure procedure = Procedure::LmBic;
    std::vector<std::string> trace;
    std::vector<std::string> warnings;
};

/// Fit every candidate and compute its LM statistics under the requested
/// variance mode. Forms whose fit is degenerate are marked unavailable
/// rather than aborting the run.
inline std::vector<FormStats> evaluate_forms(const CandidateSet& candidates,
                                             const Eigen::Ref<const Eigen::VectorXd>& Y,
                                             const Eigen::Ref<const Eigen::MatrixXd>& X,
                                             const TuningParams& params) {
    const long n = static_cast<long>(Y.size());
    if (n <= candidates.k)
        throw data_error("evaluate_forms: need n > k (n = " + std::to_string(n) +
                         ", k = " + std::to_string(candidates.k) + ")");
    const Eigen::MatrixXd P = evaluate_design(candidates.full_terms, X);
    const double y_scale = std::max(Y.squaredNorm() / static_cast<double>(n), 1e-300);

    std::vector<FormStats> stats;
    stats.reserve(candidates.forms.size());
    for (const auto& form : candidates.forms) {
        FormStats fs;
        fs.name = form.name;
        fs.m = form.m;
        fs.r = form.r;

        Eigen::MatrixXd W(P.rows(), form.m);
        for (int j = 0; j < form.m; ++j) W.col(j) = P.col(form.term_indices[j]);

        try {
            fs.fit = fit_ols(Y, W);
            if (fs.fit.effective_rank < form.m)
                fs.warnings.push_back("form " + form.name + ": design is rank deficient (rank " +
                                      std::to_string(fs.fit.effective_rank) + " of " +
                                      std::to_string(form.m) + ")");
            if (form.r == 0) {
                fs.xi = 0.0;  // unrestricted form: statistic is 0 by convention
                fs.msc = 0.0;
            } else {
                if (!(fs.fit.sigma2 > 1e-24 * y_scale))
                    throw degeneracy_error("form " + form.name +
                                           ": degenerate fit (sigma2 = 0), statistic undefined");
                std::vector<int> complement;
                complement.reserve(form.r);
                std::vector<char> in_form(candidates.k, 0);
                for (int j : form.term_indices) in_form[static_cast<std::size_t>(j)] = 1;
                for (int j = 0; j < candidates.k; ++j)
                    if (!in_form[static_cast<std::size_t>(j)]) complement.push_back(j);

                Eigen::MatrixXd T(P.rows(), form.r);
                for (int j = 0; j < form.r; ++j) T.col(j) = P.col(complement[j]);
                const Eigen::MatrixXd T_tilde = annihilate(T, W);

                if (params.variance_mode == VarianceMode::Homoskedastic)
                    fs.xi = xi_homoskedastic(fs.fit.residuals, T_tilde, fs.fit.sigma2,
                                             &fs.retained_rank);
                else
                    fs.xi = xi_hc(fs.fit.residuals, T_tilde, &fs.retained_rank);

                if (fs.retained_rank < form.r)
                    fs.warnings.push_back("form " + form.name + ": restriction block kept only " +
                                          std::to_string(fs.retained_rank) + " of " +
                                          std::to_string(form.r) +
                                          " directions; nominal r is still used");
                fs.t = t_statistic(fs.xi, form.r);
                fs.msc = msc(fs.xi, form.r, params.kappa);
            }
        } catch (const degeneracy_error& e) {
            fs.available = false;
            fs.warnings.push_back(std::string("form ") + form.name + " excluded: " + e.what());
        }
        stats.push_back(std::move(fs));
    }
    return stats;
}

namespace detail {

inline std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline void fill_common(SelectionResult& res, const std::vector<FormStats>& stats,
                        Procedure proc) {
    res.procedure = proc;
    for (const auto& fs : stats) {
        res.per_form.push_back({fs.name, fs.m, fs.r, fs.xi, fs.t, fs.msc, fs.available});
        for (const auto& w : fs.warnings) res.warnings.push_back(w);
    }
}

inline std::vector<const FormStats*> available_forms(const std::vector<FormStats>& stats) {
    std::vector<const FormStats*> out;
    for (const auto& fs : stats)
        if (fs.available) out.push_back(&fs);
    if (out.empty())
        throw degeneracy_error("selection failed: every candidate form was degenerate");
    return out;
}

/// Distinct m-levels (ascending) over the available forms.
inline std::vector<std::vector<const FormStats*>> m_levels(
    const std::vector<const FormStats*>& avail) {
    std::map<int, std::vector<const FormStats*>> by_m;
    for (const auto* fs : avail) by_m[fs->m].push_back(fs);
    std::vector<std::vector<const FormStats*>> levels;
    for (auto& [m, forms] : by_m) levels.push_back(std::move(forms));
    return levels;
}

/// Min-t form among a level's testable members (r > 0). Null if none.
inline const FormStats* level_argmin_t(const std::vector<const FormStats*>& level) {
    const FormStats* best = nullptr;
    for (const auto* fs : level) {
        if (fs->r == 0) continue;
        if (!best || fs->t < best->t) best = fs;
    }
    return best;
}

inline const FormStats* level_unrestricted(const std::vector<const FormStats*>& level) {
    for (const auto* fs : level)
        if (fs->r == 0) return fs;
    return nullptr;
}

inline const std::string no_gaps_note =
    "downward testing is only consistent when every model size above the smallest "
    "correct one contains a correctly specified form (no gaps); this cannot be "
    "verified from data, so interpret the DT choice accordingly";

} // namespace detail

/// LM-BIC selection over precomputed statistics: minimize MSC; ties go to
/// the smaller m, then declaration order.
inline SelectionResult select_lm_bic_stats(const std::vector<FormStats>& stats,
                                           const TuningParams& params) {
    SelectionResult res;
    detail::fill_common(res, stats, Procedure::LmBic);
    if (params.kappa <= 1.0)
        res.warnings.push_back("kappa <= 1: the parsimony reward (kappa - 1) is not positive");

    auto avail = detail::available_forms(stats);
    const FormStats* best = nullptr;
    for (const auto* fs : avail) {
        res.trace.push_back("form " + fs->name + ": m=" + std::to_string(fs->m) +
                            " r=" + std::to_string(fs->r) + " xi=" + detail::fmt_double(fs->xi) +
                            " msc=" + detail::fmt_double(fs->msc));
        if (!best || fs->msc < best->msc) best = fs;  // forms are m-sorted: ties keep earlier
    }
    res.chosen = best->name;
    res.trace.push_back("chosen " + best->name + " (lowest msc = " + detail::fmt_double(best->msc) +
                        ")");
    return res;
}

/// Upward testing: scan m-levels from the smallest; stop at the first level
/// whose minimal t falls to the critical value; the unrestricted form is
/// never rejected and serves as the terminal fallback.
inline SelectionResult select_ut_stats(const std::vector<FormStats>& stats,
                                       const TuningParams& params) {
    SelectionResult res;
    detail::fill_common(res, stats, Procedure::Ut);

    auto avail = detail::available_forms(stats);
    auto levels = detail::m_levels(avail);

    bool rejected_any = false;
    for (const auto& level : levels) {
        const FormStats* min_t = detail::level_argmin_t(level);
        const FormStats* unrestricted = detail::level_unrestricted(level);
        if (min_t && min_t->t <= params.gamma) {
            res.trace.push_back("level m=" + std::to_string(level.front()->m) + ": min t = " +
                                detail::fmt_double(min_t->t) + " <= gamma = " +
                                detail::fmt_double(params.gamma) + ", stop");
            res.chosen = min_t->name;
            res.trace.push_back("chosen " + min_t->name);
            return res;
        }
        if (unrestricted) {
            res.trace.push_back("level m=" + std::to_string(level.front()->m) +
                                ": unrestricted form passes by convention");
            res.chosen = unrestricted->name;
            if (rejected_any)
                res.warnings.push_back(
                    "all restricted forms rejected; falling back to the unrestricted form");
            res.trace.push_back("chosen " + unrestricted->name);
            return res;
        }
        rejected_any = true;
        res.trace.push_back("level m=" + std::to_string(level.front()->m) + ": min t = " +
                            (min_t ? detail::fmt_double(min_t->t) : std::string("n/a")) +
                            " > gamma, reject");
    }
    // No level passed and no unrestricted form exists.
    const FormStats* fallback = detail::level_argmin_t(levels.back());
    res.warnings.push_back(
        "all candidate forms rejected and no unrestricted form is present; "
        "reporting the least-rejected form at the largest size");
    res.chosen = fallback->name;
    res.trace.push_back("chosen " + fallback->name + " (least rejected)");
    return res;
}

/// Downward testing: scan m-levels from the largest; a level passes when
/// some form in it has t <= gamma (the unrestricted level passes by
/// convention); the choice is the smallest level of the maximal passing
/// suffix. Always carries the no-gaps advisory.
inline SelectionResult select_dt_stats(const std::vector<FormStats>& stats,
                                       const TuningParams& params) {
    SelectionResult res;
    detail::fill_common(res, stats, Procedure::Dt);
    res.warnings.push_back(detail::no_gaps_note);

    auto avail = detail::available_forms(stats);
    auto levels = detail::m_levels(avail);

    int first_pass = static_cast<int>(levels.size());  // start of the passing suffix
    for (int i = static_cast<int>(levels.size()) - 1; i >= 0; --i) {
        const FormStats* min_t = detail::level_argmin_t(levels[static_cast<std::size_t>(i)]);
        const bool has_unrestricted =
            detail::level_unrestricted(levels[static_cast<std::size_t>(i)]) != nullptr;
        const bool pass = has_unrestricted || (min_t && min_t->t <= params.gamma);
        res.trace.push_back("level m=" +
                            std::to_string(levels[static_cast<std::size_t>(i)].front()->m) +
                            (pass ? ": pass" : ": fail"));
        if (!pass) break;
        first_pass = i;
    }

    if (first_pass == static_cast<int>(levels.size())) {
        // Even the largest level failed; report its least-rejected form.
        const auto& top = levels.back();
        const FormStats* fallback = detail::level_argmin_t(top);
        res.warnings.push_back("the largest candidate level is itself rejected");
        res.chosen = fallback->name;
        res.trace.push_back("chosen " + fallback->name + " (least rejected)");
        return res;
    }

    const auto& chosen_level = levels[static_cast<std::size_t>(first_pass)];
    const FormStats* min_t = detail::level_argmin_t(chosen_level);
    const FormStats* unrestricted = detail::level_unrestricted(chosen_level);
    const FormStats* pick =
        (min_t && min_t->t <= params.gamma) ? min_t : (unrestricted ? unrestricted : min_t);
    res.chosen = pick->name;
    res.trace.push_back("chosen " + pick->name + " at level m=" +
                        std::to_string(chosen_level.front()->m));
    return res;
}

inline SelectionResult select_lm_bic(const CandidateSet& candidates,
                                     const Eigen::Ref<const Eigen::VectorXd>& Y,
                                     const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     const TuningParams& params) {
    return select_lm_bic_stats(evaluate_forms(candidates, Y, X, params), params);
}

inline SelectionResult select_ut(const CandidateSet& candidates,
                                 const Eigen::Ref<const Eigen::VectorXd>& Y,
                                 const Eigen::Ref<const Eigen::MatrixXd>& X,
                                 const TuningParams& params) {
    return select_ut_stats(evaluate_forms(candidates, Y, X, params), params);
}

inline SelectionResult select_dt(const CandidateSet& candidates,
                                 const Eigen::Ref<const Eigen::VectorXd>& Y,
                                 const Eigen::Ref<const Eigen::MatrixXd>& X,
                                 const TuningParams& params) {
    return select_dt_stats(evaluate_forms(candidates, Y, X, params), params);
}

} // namespace semsel

#endif // SEMSEL_SELECT_HPP
