// One-way repeated-measures ANOVA with Greenhouse-Geisser correction
// and Bonferroni-adjusted paired post-hoc t-tests, for comparing
// fold-wise scores across conditions.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "affectbench/jsonio.hpp"
#include "affectbench/linalg.hpp"

namespace afb {

namespace detail {

// Continued fraction for the regularized incomplete beta (Lentz).
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16, kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= kEps) break;
    }
    return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double betainc_reg(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw parameter_error("betainc_reg: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                  a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Survival function of the F distribution (upper tail), real dfs.
inline double f_sf(double f, double df1, double df2) {
    if (!(df1 > 0.0) || !(df2 > 0.0)) throw parameter_error("f_sf: dfs must be positive");
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    return betainc_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

// Two-sided survival function of Student's t.
inline double t_sf2(double t, double df) {
    if (!(df > 0.0)) throw parameter_error("t_sf2: df must be positive");
    if (std::isinf(t)) return 0.0;
    if (t == 0.0) return 1.0;
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t));
}

struct ConditionSummary {
    double mean = 0.0;
    double sd = 0.0;  // sample sd, n-1 denominator
};

struct PosthocPair {
    std::size_t a = 0, b = 0;
    double mean_diff = 0.0;
    double t_stat = 0.0;
    double p_raw = 1.0;
    double p_adjusted = 1.0;
    bool infinite_t = false;  // zero-variance nonzero-mean difference
};

struct AnovaResult {
    double f_value = 0.0;
    double epsilon_gg = 1.0;
    double df_factor = 0.0, df_error = 0.0;  // corrected: uncorrected x epsilon
    std::size_t df_factor_uncorrected = 0, df_error_uncorrected = 0;
    double p_value = 1.0;        // from corrected dfs
    double p_uncorrected = 1.0;  // from raw dfs
    bool degenerate = false;     // zero within-subject error variance
    std::vector<ConditionSummary> condition_means;
    std::vector<PosthocPair> posthoc;
};

namespace detail {

inline void check_scores(const Matrix& scores, const char* who) {
    if (scores.cols < 2) throw parameter_error(std::string(who) + ": need >= 2 conditions");
    if (scores.rows < 3) throw parameter_error(std::string(who) + ": need >= 3 subjects");
    for (double v : scores.data)
        if (!std::isfinite(v))
            throw validation_error(std::string(who) + ": incomplete matrix (non-finite cell)");
}

}  // namespace detail

// Paired t-test per condition pair, Bonferroni-adjusted over all pairs.
inline std::vector<PosthocPair> bonferroni_posthoc(const Matrix& scores) {
    detail::check_scores(scores, "bonferroni_posthoc");
    const std::size_t n = scores.rows, k = scores.cols;
    const double npairs = static_cast<double>(k * (k - 1) / 2);
    std::vector<PosthocPair> out;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b) {
            PosthocPair p;
            p.a = a;
            p.b = b;
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += scores(i, a) - scores(i, b);
            mean /= static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = scores(i, a) - scores(i, b) - mean;
                ss += d * d;
            }
            const double sd = std::sqrt(ss / static_cast<double>(n - 1));
            p.mean_diff = mean;
            if (sd == 0.0) {
                if (mean == 0.0) {
                    p.t_stat = 0.0;
                    p.p_raw = 1.0;
                } else {
                    p.t_stat = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                          : -std::numeric_limits<double>::infinity();
                    p.p_raw = 0.0;
                    p.infinite_t = true;
                }
            } else {
                p.t_stat = mean / (sd / std::sqrt(static_cast<double>(n)));
                p.p_raw = t_sf2(p.t_stat, static_cast<double>(n - 1));
            }
            p.p_adjusted = std::min(1.0, p.p_raw * npairs);
            out.push_back(p);
        }
    return out;
}

// Within-subject F plus the Greenhouse-Geisser sphericity correction:
// epsilon = tr(S~)^2 / ((k-1) tr(S~^2)) with S~ the double-centered
// condition covariance; traces equal the sums over its eigenvalues.
inline AnovaResult rm_anova_gg(const Matrix& scores) {
    detail::check_scores(scores, "rm_anova_gg");
    const std::size_t n = scores.rows, k = scores.cols;
    AnovaResult r;
    r.df_factor_uncorrected = k - 1;
    r.df_error_uncorrected = (n - 1) * (k - 1);

    std::vector<double> col_mean(k, 0.0), row_mean(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            col_mean[j] += scores(i, j);
            row_mean[i] += scores(i, j);
            grand += scores(i, j);
        }
    for (auto& v : col_mean) v /= static_cast<double>(n);
    for (auto& v : row_mean) v /= static_cast<double>(k);
    grand /= static_cast<double>(n * k);

    double ss_total = 0.0, ss_cond = 0.0, ss_subj = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const double d = col_mean[j] - grand;
        ss_cond += d * d;
    }
    ss_cond *= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = row_mean[i] - grand;
        ss_subj += d * d;
    }
    ss_subj *= static_cast<double>(k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            const double d = scores(i, j) - grand;
            ss_total += d * d;
        }
    const double ss_err = ss_total - ss_cond - ss_subj;

    for (std::size_t j = 0; j < k; ++j) {
        ConditionSummary s;
        s.mean = col_mean[j];
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = scores(i, j) - col_mean[j];
            ss += d * d;
        }
        s.sd = std::sqrt(ss / static_cast<double>(n - 1));
        r.condition_means.push_back(s);
    }

    // condition covariance (scale cancels in epsilon), double-centered
    if (k == 2) {
        r.epsilon_gg = 1.0;  // a single contrast is trivially spherical
    } else {
        Matrix s(k, k);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a; b < k; ++b) {
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    acc += (scores(i, a) - col_mean[a]) * (scores(i, b) - col_mean[b]);
                s(a, b) = s(b, a) = acc / static_cast<double>(n - 1);
            }
        Matrix centered(k, k);
        std::vector<double> s_row_mean(k, 0.0);
        double s_grand = 0.0;
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) s_row_mean[a] += s(a, b);
            s_grand += s_row_mean[a];
            s_row_mean[a] /= static_cast<double>(k);
        }
        s_grand /= static_cast<double>(k * k);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b)
                centered(a, b) = s(a, b) - s_row_mean[a] - s_row_mean[b] + s_grand;
        double tr = 0.0, tr_sq = 0.0;
        for (std::size_t a = 0; a < k; ++a) {
            tr += centered(a, a);
            for (std::size_t b = 0; b < k; ++b) tr_sq += centered(a, b) * centered(a, b);
        }
        if (tr_sq <= 0.0) {
            r.epsilon_gg = 1.0;  // no condition variance at all
        } else {
            const double lower = 1.0 / static_cast<double>(k - 1);
            r.epsilon_gg = std::clamp(tr * tr / (static_cast<double>(k - 1) * tr_sq),
                                      lower, 1.0);
        }
    }

    r.df_factor = r.epsilon_gg * static_cast<double>(r.df_factor_uncorrected);
    r.df_error = r.epsilon_gg * static_cast<double>(r.df_error_uncorrected);

    const double ms_cond = ss_cond / static_cast<double>(r.df_factor_uncorrected);
    const double ms_err = ss_err / static_cast<double>(r.df_error_uncorrected);
    if (ms_err <= 0.0) {
        r.degenerate = true;
        if (ms_cond <= 0.0) {
            r.f_value = 0.0;  // identical cells everywhere
            r.p_value = r.p_uncorrected = 1.0;
        } else {
            r.f_value = std::numeric_limits<double>::infinity();
            r.p_value = r.p_uncorrected = 0.0;
        }
    } else {
        r.f_value = ms_cond / ms_err;
        r.p_uncorrected = f_sf(r.f_value, static_cast<double>(r.df_factor_uncorrected),
                               static_cast<double>(r.df_error_uncorrected));
        r.p_value = f_sf(r.f_value, r.df_factor, r.df_error);
    }

    r.posthoc = bonferroni_posthoc(scores);
    return r;
}

// Paper-style one-liner: F(corrected dfs)=value with the exact p.
inline std::string anova_summary_line(const AnovaResult& r) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "F(%.3f, %.3f)=%.3f, p=%.6g%s", r.df_factor, r.df_error,
                  r.f_value, r.p_value, r.p_value < 0.05 ? " (p<0.05)" : "");
    return buf;
}

inline json anova_to_json(const AnovaResult& r) {
    json conditions = json::array();
    for (const auto& c : r.condition_means)
        conditions.push_back(json{{"mean", c.mean}, {"sd", c.sd}});
    json posthoc = json::array();
    for (const auto& p : r.posthoc)
        posthoc.push_back(json{{"pair", {p.a, p.b}},
                               {"mean_diff", p.mean_diff},
                               {"t", p.infinite_t ? json() : json(p.t_stat)},
                               {"p_raw", p.p_raw},
                               {"p_adjusted", p.p_adjusted},
                               {"infinite_t", p.infinite_t}});
    return json{{"f_value", r.f_value},
                {"epsilon_gg", r.epsilon_gg},
                {"df_factor", r.df_factor},
                {"df_error", r.df_error},
                {"df_factor_uncorrected", r.df_factor_uncorrected},
                {"df_error_uncorrected", r.df_error_uncorrected},
                {"p_value", r.p_value},
                {"p_uncorrected", r.p_uncorrected},
                {"degenerate", r.degenerate},
                {"condition_means", conditions},
                {"posthoc", posthoc},
                {"summary", anova_summary_line(r)}};
}

}  // namespace afb
