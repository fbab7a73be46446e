// Min-max feature scaling, kernel SVM trained by SMO on the L2 dual, an
// L1-penalized linear SVM trained by coordinate descent, binary metrics,
// and JSON model round-tripping.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "affectbench/core.hpp"
#include "affectbench/jsonio.hpp"
#include "affectbench/linalg.hpp"

namespace afb {

enum class KernelKind { linear, poly, rbf, sigmoid };

inline std::string kernel_kind_name(KernelKind k) {
    switch (k) {
        case KernelKind::linear: return "linear";
        case KernelKind::poly: return "poly";
        case KernelKind::rbf: return "rbf";
        case KernelKind::sigmoid: return "sigmoid";
    }
    return "?";
}

inline KernelKind parse_kernel_kind(const std::string& s) {
    if (s == "linear") return KernelKind::linear;
    if (s == "poly") return KernelKind::poly;
    if (s == "rbf") return KernelKind::rbf;
    if (s == "sigmoid") return KernelKind::sigmoid;
    throw parameter_error("unknown kernel '" + s + "'");
}

struct KernelSpec {
    KernelKind kind = KernelKind::linear;
    int degree = 3;      // poly only
    double gamma = 0.0;  // poly/rbf/sigmoid; <= 0 means resolve at train time
    double coef0 = 0.0;  // poly/sigmoid only
};

struct MinMaxScaler {
    std::vector<double> min, max;
    std::vector<char> constant;  // min == max
};

inline MinMaxScaler scaler_fit(const Matrix& train) {
    if (train.rows == 0) throw parameter_error("scaler_fit: empty matrix");
    MinMaxScaler s;
    s.min.assign(train.cols, 0.0);
    s.max.assign(train.cols, 0.0);
    s.constant.assign(train.cols, 0);
    for (std::size_t j = 0; j < train.cols; ++j) {
        double lo = train(0, j), hi = train(0, j);
        for (std::size_t i = 1; i < train.rows; ++i) {
            lo = std::min(lo, train(i, j));
            hi = std::max(hi, train(i, j));
        }
        s.min[j] = lo;
        s.max[j] = hi;
        s.constant[j] = lo == hi ? 1 : 0;
    }
    return s;
}

// (x - min) / (max - min); constant columns map to 0; no clamping.
inline Matrix scaler_transform(const MinMaxScaler& s, const Matrix& x) {
    if (x.cols != s.min.size()) throw parameter_error("scaler_transform: column mismatch");
    Matrix out(x.rows, x.cols);
    for (std::size_t j = 0; j < x.cols; ++j) {
        const double span = s.max[j] - s.min[j];
        for (std::size_t i = 0; i < x.rows; ++i)
            out(i, j) = s.constant[j] ? 0.0 : (x(i, j) - s.min[j]) / span;
    }
    return out;
}

namespace detail {

inline double kernel_eval(const KernelSpec& k, const double* u, const double* v,
                          std::size_t d) {
    switch (k.kind) {
        case KernelKind::linear: {
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) s += u[i] * v[i];
            return s;
        }
        case KernelKind::poly: {
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) s += u[i] * v[i];
            return std::pow(k.gamma * s + k.coef0, k.degree);
        }
        case KernelKind::rbf:
            return std::exp(-k.gamma * sq_distance(u, v, d));
        case KernelKind::sigmoid: {
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) s += u[i] * v[i];
            return std::tanh(k.gamma * s + k.coef0);
        }
    }
    return 0.0;
}

// Population variance of every entry; the default gamma denominator.
inline double matrix_variance(const Matrix& x) {
    if (x.data.empty()) return 0.0;
    double mean = 0.0;
    for (double v : x.data) mean += v;
    mean /= static_cast<double>(x.data.size());
    double var = 0.0;
    for (double v : x.data) var += (v - mean) * (v - mean);
    return var / static_cast<double>(x.data.size());
}

}  // namespace detail

// gamma <= 0 resolves to 1 / (n_features * variance of the scaled
// training matrix), the reference toolkit's "scale" rule.
inline KernelSpec resolve_gamma(KernelSpec kernel, const Matrix& train) {
    if (kernel.kind != KernelKind::linear && kernel.gamma <= 0.0) {
        const double var = detail::matrix_variance(train);
        kernel.gamma = var > 0.0 ? 1.0 / (static_cast<double>(train.cols) * var)
                                 : 1.0 / static_cast<double>(train.cols);
    }
    return kernel;
}

struct SVMModel {
    KernelSpec kernel;
    std::string penalty;  // L2-dual | L1-linear
    double C = 1.0;
    Matrix support_vectors;          // L2-dual
    std::vector<double> dual_coefs;  // alpha_i * y_i per support vector
    std::vector<double> weights;     // L1-linear primal weights
    double bias = 0.0;
    MinMaxScaler scaler;  // scaler fitted on the training fold
    bool converged = false;
    std::size_t iterations = 0;
    double dual_objective = 0.0;  // L2-dual maximization value
};

namespace detail {

// SMO with maximal-violating-pair working-set selection on
//   min 1/2 a'Qa - e'a  s.t. 0 <= a <= C, y'a = 0,  Q_ij = y_i y_j K_ij.
inline void smo_solve(const Matrix& x, const std::vector<int>& y, const KernelSpec& kernel,
                      double C, double tol, SVMModel& model) {
    const std::size_t n = x.rows, d = x.cols;
    Matrix K(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            K(i, j) = K(j, i) = kernel_eval(kernel, x.row_ptr(i), x.row_ptr(j), d);

    std::vector<double> alpha(n, 0.0), grad(n, -1.0);
    const std::size_t max_iter = std::max<std::size_t>(10000, 200 * n);
    double m = 0.0, M = 0.0;
    std::size_t iter = 0;
    for (; iter < max_iter; ++iter) {
        std::ptrdiff_t i = -1, j = -1;
        m = -std::numeric_limits<double>::infinity();
        M = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -static_cast<double>(y[t]) * grad[t];
            const bool in_up = (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0.0);
            const bool in_low = (y[t] < 0 && alpha[t] < C) || (y[t] > 0 && alpha[t] > 0.0);
            if (in_up && v > m) {
                m = v;
                i = static_cast<std::ptrdiff_t>(t);
            }
            if (in_low && v < M) {
                M = v;
                j = static_cast<std::ptrdiff_t>(t);
            }
        }
        if (i < 0 || j < 0 || m - M <= tol) break;
        const auto ii = static_cast<std::size_t>(i), jj = static_cast<std::size_t>(j);

        const double s = static_cast<double>(y[ii] * y[jj]);
        double L, H;
        if (y[ii] != y[jj]) {
            L = std::max(0.0, alpha[jj] - alpha[ii]);
            H = std::min(C, C + alpha[jj] - alpha[ii]);
        } else {
            L = std::max(0.0, alpha[ii] + alpha[jj] - C);
            H = std::min(C, alpha[ii] + alpha[jj]);
        }
        const double eta = K(ii, ii) + K(jj, jj) - 2.0 * K(ii, jj);
        // bias-free errors: E_t = y_t * grad_t
        const double delta_e =
            static_cast<double>(y[ii]) * grad[ii] - static_cast<double>(y[jj]) * grad[jj];
        double aj;
        if (eta > 1e-12) {
            aj = std::clamp(alpha[jj] + static_cast<double>(y[jj]) * delta_e / eta, L, H);
        } else {
            // flat direction: pick the better endpoint
            auto obj_at = [&](double cand) {
                const double dj = cand - alpha[jj];
                const double di = -s * dj;
                return 0.5 * (K(ii, ii) * di * di + K(jj, jj) * dj * dj) +
                       s * K(ii, jj) * di * dj + di * grad[ii] + dj * grad[jj];
            };
            aj = obj_at(L) <= obj_at(H) ? L : H;
        }
        // snap bound-adjacent values exactly onto the box so the working
        // set never sees one-ulp-free variables
        const double eps_b = 1e-12 * C;
        auto snap = [&](double a) {
            if (a < eps_b) return 0.0;
            if (a > C - eps_b) return C;
            return a;
        };
        const double aj_new = snap(aj);
        const double ai_new = snap(alpha[ii] - s * (aj_new - alpha[jj]));
        const double dj = aj_new - alpha[jj];
        const double di = ai_new - alpha[ii];
        if (std::fabs(dj) < 1e-14 && std::fabs(di) < 1e-14)
            break;  // no progress possible on the worst pair
        alpha[jj] = aj_new;
        alpha[ii] = ai_new;
        for (std::size_t t = 0; t < n; ++t)
            grad[t] += static_cast<double>(y[t]) *
                       (static_cast<double>(y[ii]) * K(t, ii) * di +
                        static_cast<double>(y[jj]) * K(t, jj) * dj);
    }
    model.converged = m - M <= tol;
    model.iterations = iter;
    // for free vectors v_t = y_t - u_t equals the bias, and m, M bracket it
    model.bias = (m + M) / 2.0;

    // grad = Qa - e gives a'Qa = a'grad + e'a, so the maximization value
    // e'a - 1/2 a'Qa reduces to (e'a - a'grad) / 2.
    double sum_alpha = 0.0, alpha_dot_grad = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        sum_alpha += alpha[t];
        alpha_dot_grad += alpha[t] * grad[t];
    }
    model.dual_objective = 0.5 * (sum_alpha - alpha_dot_grad);

    std::vector<std::size_t> sv;
    for (std::size_t t = 0; t < n; ++t)
        if (alpha[t] > 1e-12) sv.push_back(t);
    model.support_vectors = Matrix(sv.size(), d);
    model.dual_coefs.resize(sv.size());
    for (std::size_t r = 0; r < sv.size(); ++r) {
        for (std::size_t c = 0; c < d; ++c) model.support_vectors(r, c) = x(sv[r], c);
        model.dual_coefs[r] = alpha[sv[r]] * static_cast<double>(y[sv[r]]);
    }
}

// Coordinate descent for min |w|_1 + C sum max(0, 1 - y_i (w'x_i + b))^2
// with an unpenalized bias coordinate.
inline void l1_linear_solve(const Matrix& x, const std::vector<int>& y, double C, double tol,
                            SVMModel& model) {
    const std::size_t n = x.rows, d = x.cols;
    std::vector<double> w(d, 0.0);
    double b = 0.0;
    std::vector<double> margin(n, 0.0);  // y_i (w'x_i + b)

    auto loss = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = 1.0 - margin[i];
            if (v > 0.0) s += v * v;
        }
        return C * s;
    };

    const std::size_t max_sweeps = 2000;
    std::size_t sweep = 0;
    bool optimal = false;
    for (; sweep < max_sweeps && !optimal; ++sweep) {
        optimal = true;
        bool any_update = false;
        for (std::size_t j = 0; j <= d; ++j) {
            const bool is_bias = j == d;
            double g = 0.0, h = 1e-12;
            for (std::size_t i = 0; i < n; ++i) {
                const double v = 1.0 - margin[i];
                if (v <= 0.0) continue;
                const double xij = is_bias ? 1.0 : x(i, j);
                g += -2.0 * C * v * static_cast<double>(y[i]) * xij;
                h += 2.0 * C * xij * xij;
            }
            double z;
            if (is_bias) {
                if (std::fabs(g) <= tol) continue;
                z = -g / h;
            } else {
                const double wj = w[j];
                double violation;
                if (wj > 0.0)
                    violation = std::fabs(g + 1.0);
                else if (wj < 0.0)
                    violation = std::fabs(g - 1.0);
                else
                    violation = std::max(0.0, std::fabs(g) - 1.0);
                if (violation <= tol) continue;
                if (g + 1.0 <= h * wj)
                    z = -(g + 1.0) / h;
                else if (g - 1.0 >= h * wj)
                    z = -(g - 1.0) / h;
                else
                    z = -wj;
            }
            if (z == 0.0) continue;
            optimal = false;

            // Armijo backtracking on the full objective
            const double old_reg = is_bias ? 0.0 : std::fabs(w[j]);
            const double old_loss = loss();
            double step = 1.0;
            for (int back = 0; back < 30; ++back) {
                const double delta = step * z;
                double new_loss = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double xij = is_bias ? 1.0 : x(i, j);
                    const double mi =
                        margin[i] + static_cast<double>(y[i]) * delta * xij;
                    const double v = 1.0 - mi;
                    if (v > 0.0) new_loss += v * v;
                }
                new_loss *= C;
                const double new_reg = is_bias ? 0.0 : std::fabs(w[j] + delta);
                const double decrease = (old_loss + old_reg) - (new_loss + new_reg);
                const double required = 0.01 * step * (std::fabs(g * z) + std::fabs(z));
                if (decrease >= required || decrease > 0.0) {
                    for (std::size_t i = 0; i < n; ++i) {
                        const double xij = is_bias ? 1.0 : x(i, j);
                        margin[i] += static_cast<double>(y[i]) * delta * xij;
                    }
                    if (is_bias)
                        b += delta;
                    else
                        w[j] += delta;
                    any_update = true;
                    break;
                }
                step *= 0.5;
            }
        }
        if (!optimal && !any_update) break;  // line search stalled everywhere
    }
    model.converged = optimal;
    model.iterations = sweep;
    model.weights = w;
    model.bias = b;
}

}  // namespace detail

// Trains on already-scaled features. y must hold both classes as +-1.
// L1 pairs only with the linear kernel; every other kernel trains the
// usual L2 dual via SMO.
inline SVMModel svm_train(const Matrix& x, const std::vector<int>& y, KernelSpec kernel,
                          double C, const std::string& penalty = "L2", double tol = 1e-3,
                          std::uint64_t seed = 0) {
    (void)seed;  // both solvers are deterministic
    if (x.rows != y.size()) throw parameter_error("svm_train: row/label count mismatch");
    if (x.rows == 0) throw parameter_error("svm_train: empty training set");
    if (C <= 0.0) throw parameter_error("svm_train: C must be positive");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else throw parameter_error("svm_train: labels must be +-1");
    }
    if (!has_pos || !has_neg) throw validation_error("svm_train: single-class training set");
    if (penalty != "L1" && penalty != "L2")
        throw parameter_error("svm_train: penalty must be L1 or L2");
    if (penalty == "L1" && kernel.kind != KernelKind::linear)
        throw parameter_error("svm_train: L1 penalty requires the linear kernel");

    SVMModel model;
    model.kernel = resolve_gamma(kernel, x);
    model.C = C;
    if (penalty == "L1") {
        model.penalty = "L1-linear";
        detail::l1_linear_solve(x, y, C, tol, model);
    } else {
        model.penalty = "L2-dual";
        detail::smo_solve(x, y, model.kernel, C, tol, model);
    }
    return model;
}

inline std::vector<double> svm_decision_values(const SVMModel& m, const Matrix& x) {
    std::vector<double> out(x.rows, m.bias);
    if (m.penalty == "L1-linear") {
        if (x.cols != m.weights.size())
            throw parameter_error("svm_decision_values: feature count mismatch");
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t j = 0; j < x.cols; ++j) out[i] += m.weights[j] * x(i, j);
        return out;
    }
    if (m.support_vectors.rows > 0 && x.cols != m.support_vectors.cols)
        throw parameter_error("svm_decision_values: feature count mismatch");
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t s = 0; s < m.support_vectors.rows; ++s)
            out[i] += m.dual_coefs[s] *
                      detail::kernel_eval(m.kernel, m.support_vectors.row_ptr(s),
                                          x.row_ptr(i), x.cols);
    return out;
}

// Zero decision values classify as +1.
inline std::vector<int> svm_predict(const SVMModel& m, const Matrix& x) {
    const auto dv = svm_decision_values(m, x);
    std::vector<int> out(dv.size());
    for (std::size_t i = 0; i < dv.size(); ++i) out[i] = dv[i] >= 0.0 ? 1 : -1;
    return out;
}

struct Metrics {
    double accuracy = 0.0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// F1 scores the +1 ("high") class; empty denominators score 0.
inline Metrics metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size()) throw parameter_error("metrics: length mismatch");
    if (y_true.empty()) throw parameter_error("metrics: empty label lists");
    Metrics m;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_pred[i] == 1)
            (y_true[i] == 1 ? m.tp : m.fp) += 1;
        else
            (y_true[i] == 1 ? m.fn : m.tn) += 1;
    }
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(y_true.size());
    m.precision = m.tp + m.fp ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp)
                              : 0.0;
    m.recall = m.tp + m.fn ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn)
                           : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

inline json kernel_to_json(const KernelSpec& k) {
    return json{{"kind", kernel_kind_name(k.kind)},
                {"degree", k.degree},
                {"gamma", k.gamma},
                {"coef0", k.coef0}};
}

inline KernelSpec kernel_from_json(const json& j) {
    KernelSpec k;
    k.kind = parse_kernel_kind(j.at("kind").get<std::string>());
    k.degree = j.at("degree").get<int>();
    k.gamma = j.at("gamma").get<double>();
    k.coef0 = j.at("coef0").get<double>();
    return k;
}

inline json model_to_json(const SVMModel& m) {
    json sv = json::array();
    for (std::size_t i = 0; i < m.support_vectors.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.support_vectors.cols; ++j)
            row.push_back(m.support_vectors(i, j));
        sv.push_back(row);
    }
    return json{{"schema", "svm-model/1"},
                {"kernel", kernel_to_json(m.kernel)},
                {"penalty", m.penalty},
                {"C", m.C},
                {"bias", m.bias},
                {"support_vectors", sv},
                {"dual_coefs", m.dual_coefs},
                {"weights", m.weights},
                {"scaler", json{{"min", m.scaler.min},
                                {"max", m.scaler.max},
                                {"constant", m.scaler.constant}}},
                {"converged", m.converged},
                {"iterations", m.iterations},
                {"dual_objective", m.dual_objective}};
}

inline SVMModel model_from_json(const json& j) {
    if (j.value("schema", "") != "svm-model/1")
        throw structural_error("model file is not an svm-model/1 document");
    SVMModel m;
    m.kernel = kernel_from_json(j.at("kernel"));
    m.penalty = j.at("penalty").get<std::string>();
    m.C = j.at("C").get<double>();
    m.bias = j.at("bias").get<double>();
    const auto& sv = j.at("support_vectors");
    const std::size_t rows = sv.size();
    std::size_t cols = 0;
    if (rows > 0) cols = sv[0].size();
    m.support_vectors = Matrix(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t c = 0; c < cols; ++c)
            m.support_vectors(i, c) = sv[i][c].get<double>();
    m.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.scaler.min = j.at("scaler").at("min").get<std::vector<double>>();
    m.scaler.max = j.at("scaler").at("max").get<std::vector<double>>();
    m.scaler.constant = j.at("scaler").at("constant").get<std::vector<char>>();
    m.converged = j.at("converged").get<bool>();
    m.iterations = j.at("iterations").get<std::size_t>();
    m.dual_objective = j.at("dual_objective").get<double>();
    return m;
}

}  // namespace afb
