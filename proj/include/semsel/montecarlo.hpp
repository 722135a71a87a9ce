#ifndef SEMSEL_MONTECARLO_HPP
#define SEMSEL_MONTECARLO_HPP

#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "semsel/basis.hpp"
#include "semsel/errors.hpp"
#include "semsel/format.hpp"
#include "semsel/select.hpp"

namespace semsel {

namespace detail {
inline double square(double v) { return v * v; }
} // namespace detail

/// Mixes a base seed with a replication index so each replication gets its
/// own stream and parallel scheduling cannot change the draws.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic sampler; the transforms are written out so the stream
/// depends only on the mt19937_64 engine, which the standard pins down.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    double bernoulli(double p) { return uniform01() < p ? 1.0 : 0.0; }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct Distribution {
    enum class Kind { Uniform, Normal };
    Kind kind = Kind::Uniform;
    double a = 0.0;  // uniform lower bound, or normal mean
    double b = 1.0;  // uniform upper bound, or normal sd

    static Distribution uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
    static Distribution normal(double mean, double sd) { return {Kind::Normal, mean, sd}; }

    double sample(Rng& rng) const {
        return kind == Kind::Uniform ? rng.uniform(a, b) : a + b * rng.normal();
    }
};

/// Columns of the simulated covariate matrix.
inline constexpr int kTreatCol = 0;
inline constexpr int kXCol = 1;
inline constexpr int kZCol = 2;
inline constexpr double kTrueBeta = 2.0;

struct DgpConfig {
    int dgp_id = 1;  // 1..5
    long n = 1000;   // >= 50
    double noise_sd = 1.0;
    Distribution x_dist = Distribution::uniform(0.0, 4.0);
    Distribution z_dist = Distribution::uniform(1.0, 5.0);
    double treat_prob = 0.5;  // independent Bernoulli treatment assignment
    std::uint64_t seed = 0;

    void validate() const {
        if (dgp_id < 1 || dgp_id > 5)
            throw std::invalid_argument("DgpConfig: unknown dgp_id " + std::to_string(dgp_id));
        if (n < 50) throw std::invalid_argument("DgpConfig: n must be >= 50");
        if (noise_sd < 0.0) throw std::invalid_argument("DgpConfig: noise_sd must be >= 0");
        if (treat_prob < 0.0 || treat_prob > 1.0)
            throw std::invalid_argument("DgpConfig: treat_prob must lie in [0, 1]");
    }
};

struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd covariates;  // columns: treatment, x, z
};

/// Conditional mean of Y for each simulated design.
inline double dgp_mean(int dgp_id, double d, double x, double z) {
    const double base = 2.0 * d + 1.0 - x + 1.5 * z;
    switch (dgp_id) {
        case 1: return base;
        case 2: return base + 0.25 * std::exp(x - 2.0);
        case 3: return base + 0.5 * std::sin(2.0 * (z - 3.0));
        case 4: return base + 0.25 * std::exp(x - 2.0) + 0.5 * std::sin(2.0 * (z - 3.0));
        case 5:
            return base + 0.25 * std::exp(x - 2.0) + 0.5 * std::sin(2.0 * (z - 3.0)) +
                   0.2 * x * z + std::sin(x * z);
        default: throw std::invalid_argument("dgp_mean: unknown dgp_id " + std::to_string(dgp_id));
    }
}

/// Simulate one dataset; deterministic given the config's seed.
inline Dataset gen_dgp(const DgpConfig& config) {
    config.validate();
    Rng rng(config.seed);
    Dataset data;
    data.y.resize(config.n);
    data.covariates.resize(config.n, 3);
    for (long i = 0; i < config.n; ++i) {
        const double x = config.x_dist.sample(rng);
        const double z = config.z_dist.sample(rng);
        const double d = rng.bernoulli(config.treat_prob);
        const double eps = rng.normal();
        data.covariates(i, kTreatCol) = d;
        data.covariates(i, kXCol) = x;
        data.covariates(i, kZCol) = z;
        data.y(i) = dgp_mean(config.dgp_id, d, x, z) + config.noise_sd * eps;
    }
    return data;
}

/// The five candidate models of the simulation study, sharing a full basis
/// of the treatment dummy plus the a_n-by-a_n tensor power basis in (x, z).
/// The treatment enters every form linearly.
inline CandidateSet candidate_set_for_study(long n) {
    if (n < 50) throw std::invalid_argument("candidate_set_for_study: n must be >= 50");
    const int a = compute_an(n);
    const Term d = Term::raw(kTreatCol);
    const std::vector<Term> qx = power_basis_terms(kXCol, a);
    const std::vector<Term> qz = power_basis_terms(kZCol, a);

    std::vector<Term> full;
    full.push_back(d);
    for (const auto& t : tensor_terms(qx, qz)) full.push_back(t);

    auto with_d = [&](std::vector<Term> terms) {
        terms.insert(terms.begin(), d);
        return terms;
    };
    auto join = [](std::vector<Term> a_terms, const std::vector<Term>& b_terms) {
        a_terms.insert(a_terms.end(), b_terms.begin(), b_terms.end());
        return detail::dedup_terms(a_terms);
    };

    const std::vector<Term> linear_x = {Term::constant(), Term::raw(kXCol)};
    const std::vector<Term> linear_z = {Term::constant(), Term::raw(kZCol)};

    std::vector<ModelSpec> models;
    models.push_back({"P", "parametric", with_d(join(linear_x, linear_z))});
    models.push_back({"SP-X", "partially-linear", with_d(join(qx, linear_z))});
    models.push_back({"SP-Z", "partially-linear", with_d(join(linear_x, qz))});
    models.push_back({"SP-ADD", "additive", with_d(join(qx, qz))});
    models.push_back({"NP", "nonparametric", full});

    return build_candidate_set(models, full, a);
}

/// Per-form fit handle used to read off post-selection coefficients.
struct FormFit {
    std::string form_name;
    FitResult fit;
    int treat_coef_index = -1;
};

/// Coefficient on the treatment column in the chosen form's fit.
inline double post_selection_beta(const SelectionResult& selection,
                                  const std::vector<FormFit>& fits) {
    for (const auto& f : fits) {
        if (f.form_name != selection.chosen) continue;
        if (f.treat_coef_index < 0)
            throw config_error("post_selection_beta: form " + f.form_name +
                               " does not include the treatment column");
        return f.fit.beta(f.treat_coef_index);
    }
    throw std::invalid_argument("post_selection_beta: chosen form not among the fits");
}

/// Extract per-form fit handles (with the treatment coefficient located)
/// from evaluated statistics.
inline std::vector<FormFit> study_form_fits(const CandidateSet& cs,
                                            const std::vector<FormStats>& stats) {
    const Term d = Term::raw(kTreatCol);
    std::vector<FormFit> fits;
    fits.reserve(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) {
        FormFit f;
        f.form_name = stats[i].name;
        f.fit = stats[i].fit;
        const auto& terms = cs.forms[i].restricted_terms;
        for (std::size_t j = 0; j < terms.size(); ++j)
            if (terms[j] == d) f.treat_coef_index = static_cast<int>(j);
        fits.push_back(std::move(f));
    }
    return fits;
}

/// Target model of each simulated design.
inline std::string oracle_model_name(int dgp_id) {
    switch (dgp_id) {
        case 1: return "P";
        case 2: return "SP-X";
        case 3: return "SP-Z";
        case 4: return "SP-ADD";
        case 5: return "NP";
        default: throw std::invalid_argument("oracle_model_name: unknown dgp_id");
    }
}

struct StudyReport {
    int dgp_id = 0;
    long n = 0;
    int B = 0;
    std::uint64_t seed = 0;
    double kappa = 0.0;
    double gamma = 0.0;
    VarianceMode variance_mode = VarianceMode::Homoskedastic;
    std::vector<std::string> models;
    std::vector<Procedure> procedures;
    std::vector<std::vector<double>> selection_probs;  // [procedure][model]
    std::vector<double> beta_mean_model, beta_mse_model;  // per model
    std::vector<double> beta_mean_proc, beta_mse_proc;    // post-selection per procedure
    double beta_mean_oracle = 0.0, beta_mse_oracle = 0.0;
    std::string oracle_model;
    int failures = 0;

    double selection_prob(Procedure p, const std::string& model) const {
        for (std::size_t i = 0; i < procedures.size(); ++i) {
            if (procedures[i] != p) continue;
            for (std::size_t j = 0; j < models.size(); ++j)
                if (models[j] == model) return selection_probs[i][j];
        }
        throw std::invalid_argument("selection_prob: no such procedure/model in report");
    }

    double post_selection_mse(Procedure p) const {
        for (std::size_t i = 0; i < procedures.size(); ++i)
            if (procedures[i] == p) return beta_mse_proc[i];
        throw std::invalid_argument("post_selection_mse: procedure not in report");
    }

    std::string to_text() const {
        std::ostringstream os;
        os << "Model selection study: dgp=" << dgp_id << " n=" << n << " B=" << B
           << " seed=" << seed << "\n";
        os << "kappa=" << detail::fmt_g(kappa, 6) << " gamma=" << detail::fmt_g(gamma, 6)
           << " variance="
           << (variance_mode == VarianceMode::Homoskedastic ? "homoskedastic" : "heteroskedastic")
           << " oracle=" << oracle_model;
        if (failures > 0) os << " failures=" << failures;
        os << "\n\n";

        os << "Selection probabilities\n";
        os << pad("procedure", 12);
        for (const auto& m : models) os << pad(m, 10);
        os << "\n";
        for (std::size_t i = 0; i < procedures.size(); ++i) {
            os << pad(procedure_name(procedures[i]), 12);
            for (double p : selection_probs[i]) os << pad(detail::fmt_f4(p), 10);
            os << "\n";
        }

        os << "\nTreatment coefficient estimates (true value " << detail::fmt_g(kTrueBeta, 4)
           << ")\n";
        os << pad("estimator", 12) << pad("mean", 12) << pad("mse", 12) << "\n";
        for (std::size_t j = 0; j < models.size(); ++j)
            os << pad(models[j], 12) << pad(detail::fmt_g(beta_mean_model[j], 4), 12)
               << pad(detail::fmt_g(beta_mse_model[j], 4), 12) << "\n";
        for (std::size_t i = 0; i < procedures.size(); ++i)
            os << pad(std::string("post-") + procedure_name(procedures[i]), 12)
               << pad(detail::fmt_g(beta_mean_proc[i], 4), 12)
               << pad(detail::fmt_g(beta_mse_proc[i], 4), 12) << "\n";
        os << pad("oracle", 12) << pad(detail::fmt_g(beta_mean_oracle, 4), 12)
           << pad(detail::fmt_g(beta_mse_oracle, 4), 12) << "\n";
        return os.str();
    }

    std::string to_csv() const {
        std::ostringstream os;
        os << "procedure,model,metric,value\n";
        for (std::size_t i = 0; i < procedures.size(); ++i)
            for (std::size_t j = 0; j < models.size(); ++j)
                os << procedure_name(procedures[i]) << "," << models[j] << ",selection_prob,"
                   << detail::fmt_g(selection_probs[i][j], 12) << "\n";
        for (std::size_t j = 0; j < models.size(); ++j) {
            os << "estimate," << models[j] << ",beta_mean,"
               << detail::fmt_g(beta_mean_model[j], 12) << "\n";
            os << "estimate," << models[j] << ",beta_mse," << detail::fmt_g(beta_mse_model[j], 12)
               << "\n";
        }
        for (std::size_t i = 0; i < procedures.size(); ++i) {
            os << "estimate,post-" << procedure_name(procedures[i]) << ",beta_mean,"
               << detail::fmt_g(beta_mean_proc[i], 12) << "\n";
            os << "estimate,post-" << procedure_name(procedures[i]) << ",beta_mse,"
               << detail::fmt_g(beta_mse_proc[i], 12) << "\n";
        }
        os << "estimate,oracle,beta_mean," << detail::fmt_g(beta_mean_oracle, 12) << "\n";
        os << "estimate,oracle,beta_mse," << detail::fmt_g(beta_mse_oracle, 12) << "\n";
        return os.str();
    }

private:
    static std::string pad(const std::string& s, std::size_t w) {
        std::string out = s;
        while (out.size() < w) out.push_back(' ');
        return out;
    }
};

/// Run B seeded replications of the selection study. Replications are
/// independent; with threads > 1 they are computed in parallel and reduced
/// in replication order, so the report does not depend on the thread count.
inline StudyReport run_study(const DgpConfig& base, int B, std::vector<Procedure> procedures,
                             const TuningParams& params, int threads = 1) {
    base.validate();
    if (B < 1) throw config_error("run_study: replication count must be >= 1");
    if (procedures.empty()) throw config_error("run_study: at least one procedure is required");
    if (threads < 1) threads = 1;

    const CandidateSet cs = candidate_set_for_study(base.n);
    const std::size_t n_models = cs.forms.size();
    const std::size_t n_procs = procedures.size();
    const std::string oracle = oracle_model_name(base.dgp_id);
    std::size_t oracle_idx = 0;
    for (std::size_t j = 0; j < n_models; ++j)
        if (cs.forms[j].name == oracle) oracle_idx = j;

    struct RepOutcome {
        bool failed = false;
        std::vector<int> chosen;          // per procedure, model index
        std::vector<double> beta_model;   // per model
        std::vector<double> beta_proc;    // per procedure
        double beta_oracle = 0.0;
    };
    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(B));

    auto run_rep = [&](int rep) {
        RepOutcome out;
        DgpConfig cfg = base;
        cfg.seed = derive_seed(base.seed, static_cast<std::uint64_t>(rep));
        try {
            const Dataset data = gen_dgp(cfg);
            const auto stats = evaluate_forms(cs, data.y, data.covariates, params);
            const auto fits = study_form_fits(cs, stats);
            for (std::size_t j = 0; j < n_models; ++j)
                out.beta_model.push_back(fits[j].fit.beta(fits[j].treat_coef_index));
            out.beta_oracle = out.beta_model[oracle_idx];
            for (Procedure p : procedures) {
                SelectionResult sel;
                switch (p) {
                    case Procedure::LmBic: sel = select_lm_bic_stats(stats, params); break;
                    case Procedure::Ut: sel = select_ut_stats(stats, params); break;
                    case Procedure::Dt: sel = select_dt_stats(stats, params); break;
                }
                int idx = -1;
                for (std::size_t j = 0; j < n_models; ++j)
                    if (cs.forms[j].name == sel.chosen) idx = static_cast<int>(j);
                out.chosen.push_back(idx);
                out.beta_proc.push_back(post_selection_beta(sel, fits));
            }
        } catch (const degeneracy_error&) {
            out.failed = true;
        }
        outcomes[static_cast<std::size_t>(rep)] = std::move(out);
    };

    if (threads == 1 || B == 1) {
        for (int rep = 0; rep < B; ++rep) run_rep(rep);
    } else {
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (int rep = next.fetch_add(1); rep < B; rep = next.fetch_add(1)) run_rep(rep);
        };
        std::vector<std::thread> pool;
        const int nthreads = std::min(threads, B);
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    StudyReport report;
    report.dgp_id = base.dgp_id;
    report.n = base.n;
    report.B = B;
    report.seed = base.seed;
    report.kappa = params.kappa;
    report.gamma = params.gamma;
    report.variance_mode = params.variance_mode;
    for (const auto& f : cs.forms) report.models.push_back(f.name);
    report.procedures = procedures;
    report.oracle_model = oracle;
    report.selection_probs.assign(n_procs, std::vector<double>(n_models, 0.0));
    report.beta_mean_model.assign(n_models, 0.0);
    report.beta_mse_model.assign(n_models, 0.0);
    report.beta_mean_proc.assign(n_procs, 0.0);
    report.beta_mse_proc.assign(n_procs, 0.0);

    int ok = 0;
    for (const auto& out : outcomes) {
        if (out.failed) {
            ++report.failures;
            continue;
        }
        ++ok;
        for (std::size_t j = 0; j < n_models; ++j) {
            report.beta_mean_model[j] += out.beta_model[j];
            report.beta_mse_model[j] += detail::square(out.beta_model[j] - kTrueBeta);
        }
        for (std::size_t i = 0; i < n_procs; ++i) {
            report.selection_probs[i][static_cast<std::size_t>(out.chosen[i])] += 1.0;
            report.beta_mean_proc[i] += out.beta_proc[i];
            report.beta_mse_proc[i] += detail::square(out.beta_proc[i] - kTrueBeta);
        }
        report.beta_mean_oracle += out.beta_oracle;
        report.beta_mse_oracle += detail::square(out.beta_oracle - kTrueBeta);
    }
    if (ok == 0) throw degeneracy_error("run_study: every replication failed");
    const double inv = 1.0 / static_cast<double>(ok);
    for (auto& row : report.selection_probs)
        for (auto& p : row) p *= inv;
    for (auto& v : report.beta_mean_model) v *= inv;
    for (auto& v : report.beta_mse_model) v *= inv;
    for (auto& v : report.beta_mean_proc) v *= inv;
    for (auto& v : report.beta_mse_proc) v *= inv;
    report.beta_mean_oracle *= inv;
    report.beta_mse_oracle *= inv;
    return report;
}

} // namespace semsel

#endif // SEMSEL_MONTECARLO_HPP
