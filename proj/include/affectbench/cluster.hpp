// Clustering machinery (k-means, Gaussian mixtures), cluster validation
// (Davies-Bouldin, elbow curvature), stimulus selection, and the two
// binary labeling schemes (fixed threshold, k-means quadrants).
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "affectbench/core.hpp"
#include "affectbench/dsp.hpp"
#include "affectbench/linalg.hpp"
#include "affectbench/rng.hpp"

namespace afb {

struct ClusterModel {
    std::string method;  // kmeans | gmm
    std::size_t k = 0;
    Matrix centroids;                 // k x d; gmm: component means
    std::vector<Matrix> covariances;  // gmm only, k full d x d matrices
    std::vector<double> weights;      // gmm only, sums to 1
    std::vector<std::size_t> assignments;
    double inertia = 0.0;
    double log_likelihood = 0.0;              // gmm only
    std::vector<double> inertia_history;      // kmeans: per Lloyd iteration
    std::vector<double> likelihood_history;   // gmm: per EM iteration
    bool converged = false;
};

namespace detail {

inline std::size_t nearest_centroid(const Matrix& centroids, const double* x, std::size_t d) {
    std::size_t best = 0;
    double best_d = sq_distance(&centroids(0, 0), x, d);
    for (std::size_t c = 1; c < centroids.rows; ++c) {
        const double dist = sq_distance(&centroids(c, 0), x, d);
        if (dist < best_d) {
            best_d = dist;
            best = c;
        }
    }
    return best;
}

// k-means++ seeding: next centroid drawn with probability proportional
// to squared distance from the nearest chosen one.
inline Matrix kmeanspp_init(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows, d = points.cols;
    Matrix centroids(k, d);
    std::vector<double> dist2(n, 0.0);
    const std::size_t first = rng.uniform_index(n);
    for (std::size_t j = 0; j < d; ++j) centroids(0, j) = points(first, j);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = sq_distance(&centroids(0, 0), &points(i, 0), d);
            for (std::size_t prev = 1; prev < c; ++prev)
                best = std::min(best, sq_distance(&centroids(prev, 0), &points(i, 0), d));
            dist2[i] = best;
            total += best;
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = rng.uniform_index(n);
        } else {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        }
        for (std::size_t j = 0; j < d; ++j) centroids(c, j) = points(pick, j);
    }
    return centroids;
}

}  // namespace detail

// Lloyd iterations from k-means++ starts; the best inertia over
// `restarts` seeded initializations wins, ties to the earlier restart.
inline ClusterModel kmeans_fit(const Matrix& points, std::size_t k, std::uint64_t seed,
                               std::size_t restarts = 10) {
    const std::size_t n = points.rows, d = points.cols;
    if (k < 1) throw parameter_error("kmeans_fit: k must be at least 1");
    if (n < k) throw parameter_error("kmeans_fit: fewer points than clusters");
    if (restarts < 1) throw parameter_error("kmeans_fit: restarts must be at least 1");

    ClusterModel best;
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, r));
        Matrix centroids = detail::kmeanspp_init(points, k, rng);
        std::vector<std::size_t> assign(n, 0), prev(n, k);
        std::vector<double> history;
        for (std::size_t iter = 0; iter < 300; ++iter) {
            double inertia = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                assign[i] = detail::nearest_centroid(centroids, &points(i, 0), d);
                inertia += sq_distance(&centroids(assign[i], 0), &points(i, 0), d);
            }
            history.push_back(inertia);

            std::vector<std::size_t> counts(k, 0);
            for (std::size_t i = 0; i < n; ++i) ++counts[assign[i]];
            bool repaired = false;
            for (std::size_t c = 0; c < k; ++c) {
                if (counts[c] > 0) continue;
                // reseed an empty cluster at the point farthest from its centroid
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (counts[assign[i]] <= 1) continue;  // do not orphan a singleton
                    const double dist =
                        sq_distance(&centroids(assign[i], 0), &points(i, 0), d);
                    if (dist > far_d) {
                        far_d = dist;
                        far = i;
                    }
                }
                --counts[assign[far]];
                assign[far] = c;
                counts[c] = 1;
                repaired = true;
            }

            Matrix next(k, d);
            std::vector<double> cnt(k, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                cnt[assign[i]] += 1.0;
                for (std::size_t j = 0; j < d; ++j) next(assign[i], j) += points(i, j);
            }
            for (std::size_t c = 0; c < k; ++c)
                for (std::size_t j = 0; j < d; ++j) next(c, j) /= cnt[c];
            centroids = next;

            if (assign == prev) break;  // fixed point, repaired or not
            prev = assign;
        }

        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            assign[i] = detail::nearest_centroid(centroids, &points(i, 0), d);
            inertia += sq_distance(&centroids(assign[i], 0), &points(i, 0), d);
        }
        history.push_back(inertia);

        if (best.method.empty() || inertia < best.inertia) {
            best.method = "kmeans";
            best.k = k;
            best.centroids = centroids;
            best.assignments = assign;
            best.inertia = inertia;
            best.inertia_history = history;
            best.converged = true;
        }
    }
    return best;
}

namespace detail {

// log N(x; mu, Sigma) via the Cholesky factor of Sigma.
inline double gaussian_log_pdf(const double* x, const double* mu, const Matrix& chol,
                               double log_det, std::size_t d) {
    std::vector<double> z(d);
    for (std::size_t i = 0; i < d; ++i) {
        double s = x[i] - mu[i];
        for (std::size_t k = 0; k < i; ++k) s -= chol(i, k) * z[k];
        z[i] = s / chol(i, i);
    }
    double quad = 0.0;
    for (double v : z) quad += v * v;
    return -0.5 * (static_cast<double>(d) * std::log(2.0 * kPi) + log_det + quad);
}

}  // namespace detail

// EM with full covariances, k-means initialization, and a fixed diagonal
// regularizer added every M step.
inline ClusterModel gmm_fit(const Matrix& points, std::size_t k, std::uint64_t seed,
                            std::size_t max_iter = 200, double reg = 1e-6) {
    const std::size_t n = points.rows, d = points.cols;
    if (reg <= 0.0) throw parameter_error("gmm_fit: reg must be positive");
    if (n < k) throw parameter_error("gmm_fit: fewer points than components");

    ClusterModel model = kmeans_fit(points, k, seed);
    model.method = "gmm";
    model.weights.assign(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) model.weights[model.assignments[i]] += 1.0 / n;
    model.covariances.assign(k, Matrix(d, d));
    {
        std::vector<double> cnt(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = model.assignments[i];
            cnt[c] += 1.0;
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b)
                    model.covariances[c](a, b) += (points(i, a) - model.centroids(c, a)) *
                                                  (points(i, b) - model.centroids(c, b));
        }
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b) model.covariances[c](a, b) /= cnt[c];
            for (std::size_t a = 0; a < d; ++a) model.covariances[c](a, a) += reg;
        }
    }

    Matrix resp(n, k);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // E step
        std::vector<Matrix> chol(k);
        std::vector<double> log_det(k), log_w(k);
        for (std::size_t c = 0; c < k; ++c) {
            try {
                chol[c] = cholesky(model.covariances[c]);
            } catch (const parameter_error&) {
                throw validation_error("gmm_fit: singular covariance despite regularization");
            }
            log_det[c] = 0.0;
            for (std::size_t a = 0; a < d; ++a) log_det[c] += 2.0 * std::log(chol[c](a, a));
            log_w[c] = std::log(std::max(model.weights[c], 1e-300));
        }
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                resp(i, c) = log_w[c] + detail::gaussian_log_pdf(&points(i, 0),
                                                                 &model.centroids(c, 0),
                                                                 chol[c], log_det[c], d);
                mx = std::max(mx, resp(i, c));
            }
            double denom = 0.0;
            for (std::size_t c = 0; c < k; ++c) denom += std::exp(resp(i, c) - mx);
            const double log_denom = mx + std::log(denom);
            ll += log_denom;
            for (std::size_t c = 0; c < k; ++c) resp(i, c) = std::exp(resp(i, c) - log_denom);
        }
        model.likelihood_history.push_back(ll);
        model.log_likelihood = ll;
        if (std::isfinite(prev_ll) && std::fabs(ll - prev_ll) <= 1e-8 * (1.0 + std::fabs(ll))) {
            model.converged = true;
            break;
        }
        prev_ll = ll;

        // M step
        for (std::size_t c = 0; c < k; ++c) {
            double nk = 0.0;
            for (std::size_t i = 0; i < n; ++i) nk += resp(i, c);
            nk = std::max(nk, 1e-12);
            model.weights[c] = nk / static_cast<double>(n);
            for (std::size_t j = 0; j < d; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += resp(i, c) * points(i, j);
                model.centroids(c, j) = s / nk;
            }
            Matrix cov(d, d);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t a = 0; a < d; ++a)
                    for (std::size_t b = 0; b < d; ++b)
                        cov(a, b) += resp(i, c) * (points(i, a) - model.centroids(c, a)) *
                                     (points(i, b) - model.centroids(c, b));
            for (std::size_t a = 0; a < d; ++a) {
                for (std::size_t b = 0; b < d; ++b) cov(a, b) /= nk;
                cov(a, a) += reg;
            }
            model.covariances[c] = cov;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        std::size_t arg = 0;
        for (std::size_t c = 1; c < k; ++c)
            if (resp(i, c) > resp(i, arg)) arg = c;
        model.assignments[i] = arg;
    }
    model.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        model.inertia += sq_distance(&model.centroids(model.assignments[i], 0), &points(i, 0), d);
    return model;
}

// DB = mean over clusters of the worst (sigma_i + sigma_j) / d(c_i, c_j),
// with sigma the mean member-to-centroid distance.
inline double davies_bouldin(const Matrix& points, const std::vector<std::size_t>& assignments) {
    const std::size_t n = points.rows, d = points.cols;
    if (assignments.size() != n)
        throw parameter_error("davies_bouldin: assignment count mismatch");
    std::size_t k = 0;
    for (std::size_t a : assignments) k = std::max(k, a + 1);
    if (k < 2) throw parameter_error("davies_bouldin: need at least 2 clusters");
    std::vector<double> count(k, 0.0);
    Matrix centroids(k, d);
    for (std::size_t i = 0; i < n; ++i) {
        count[assignments[i]] += 1.0;
        for (std::size_t j = 0; j < d; ++j) centroids(assignments[i], j) += points(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (count[c] == 0.0) throw parameter_error("davies_bouldin: empty cluster");
        for (std::size_t j = 0; j < d; ++j) centroids(c, j) /= count[c];
    }
    std::vector<double> sigma(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        sigma[assignments[i]] +=
            std::sqrt(sq_distance(&centroids(assignments[i], 0), &points(i, 0), d));
    for (std::size_t c = 0; c < k; ++c) sigma[c] /= count[c];

    double db = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            const double dist = std::sqrt(sq_distance(&centroids(i, 0), &centroids(j, 0), d));
            if (dist == 0.0)
                throw parameter_error("davies_bouldin: coincident centroids");
            worst = std::max(worst, (sigma[i] + sigma[j]) / dist);
        }
        db += worst;
    }
    return db / static_cast<double>(k);
}

// Argmin over the score map; ties resolve to the smallest k.
inline int select_k_by_db(const std::map<int, double>& scores) {
    if (scores.empty()) throw parameter_error("select_k_by_db: empty score map");
    int best_k = scores.begin()->first;
    double best = scores.begin()->second;
    for (const auto& [k, v] : scores)
        if (v < best) {
            best = v;
            best_k = k;
        }
    return best_k;
}

// Knee of the SSE curve: maximum discrete curvature of the min-max
// normalized curve over interior k. An affine curve has no knee.
inline std::optional<int> elbow_knee(const std::map<int, double>& sse) {
    if (sse.size() < 3) throw parameter_error("elbow_knee: need at least 3 k values");
    std::vector<int> ks;
    std::vector<double> ys;
    for (const auto& [k, v] : sse) {
        ks.push_back(k);
        ys.push_back(v);
    }
    for (std::size_t i = 0; i + 1 < ks.size(); ++i)
        if (ks[i + 1] != ks[i] + 1)
            throw parameter_error("elbow_knee: k values must be consecutive");
    const double y_min = *std::min_element(ys.begin(), ys.end());
    const double y_max = *std::max_element(ys.begin(), ys.end());
    if (y_max - y_min <= 0.0) return std::nullopt;
    const double h = 1.0 / static_cast<double>(ks.size() - 1);
    for (auto& y : ys) y = (y - y_min) / (y_max - y_min);

    std::optional<int> best_k;
    double best_curv = 1e-9;  // affine curves fall below this
    for (std::size_t i = 1; i + 1 < ys.size(); ++i) {
        const double d2 = (ys[i - 1] - 2.0 * ys[i] + ys[i + 1]) / (h * h);
        if (d2 <= 0.0) continue;
        const double d1 = (ys[i + 1] - ys[i - 1]) / (2.0 * h);
        const double curv = d2 / std::pow(1.0 + d1 * d1, 1.5);
        if (curv > best_curv) {
            best_curv = curv;
            best_k = ks[i];
        }
    }
    return best_k;
}

struct StimulusPoint {
    std::string clip_id;
    double happiness = 0.0, fear = 0.0, excitement = 0.0;
};

struct RankedClip {
    std::string clip_id;
    std::size_t cluster = 0;
    double distance = 0.0;
    bool selected = false;
};

struct StimulusRanking {
    std::vector<std::vector<RankedClip>> per_cluster;  // distances ascending
    std::vector<std::string> selected;                 // cluster-major
    std::vector<std::string> warnings;
    ClusterModel model;
};

// Stimulus curation: cluster rater points, keep each clip's modal-cluster
// points, average them into a representative, rank by distance to the
// modal centroid, keep the per_cluster nearest per cluster.
inline StimulusRanking select_stimuli(const std::vector<StimulusPoint>& assessments,
                                      std::size_t k, std::size_t per_cluster,
                                      std::uint64_t seed) {
    if (assessments.empty()) throw parameter_error("select_stimuli: no assessments");
    if (per_cluster < 1) throw parameter_error("select_stimuli: per_cluster must be positive");
    const std::size_t n = assessments.size();
    Matrix points(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
        points(i, 0) = assessments[i].happiness;
        points(i, 1) = assessments[i].fear;
        points(i, 2) = assessments[i].excitement;
    }
    StimulusRanking out;
    out.model = kmeans_fit(points, k, seed);

    std::map<std::string, std::vector<std::size_t>> by_clip;  // ordered: deterministic
    for (std::size_t i = 0; i < n; ++i) by_clip[assessments[i].clip_id].push_back(i);

    out.per_cluster.resize(k);
    for (const auto& [clip, rows] : by_clip) {
        std::vector<std::size_t> votes(k, 0);
        for (std::size_t i : rows) ++votes[out.model.assignments[i]];
        const std::size_t top = *std::max_element(votes.begin(), votes.end());
        // mode tie: the cluster holding this clip's point nearest any centroid
        std::size_t modal = k;
        double best_dist = 0.0;
        for (std::size_t i : rows) {
            const std::size_t c = out.model.assignments[i];
            if (votes[c] != top) continue;
            const double dist = sq_distance(&out.model.centroids(c, 0), &points(i, 0), 3);
            if (modal == k || dist < best_dist || (dist == best_dist && c < modal)) {
                best_dist = dist;
                modal = c;
            }
        }
        double rep[3] = {0.0, 0.0, 0.0};
        double cnt = 0.0;
        for (std::size_t i : rows) {
            if (out.model.assignments[i] != modal) continue;  // drop off-mode rater points
            for (std::size_t j = 0; j < 3; ++j) rep[j] += points(i, j);
            cnt += 1.0;
        }
        for (double& v : rep) v /= cnt;
        RankedClip rc;
        rc.clip_id = clip;
        rc.cluster = modal;
        rc.distance = std::sqrt(sq_distance(&out.model.centroids(modal, 0), rep, 3));
        out.per_cluster[modal].push_back(rc);
    }

    for (std::size_t c = 0; c < k; ++c) {
        auto& clips = out.per_cluster[c];
        std::sort(clips.begin(), clips.end(), [](const RankedClip& a, const RankedClip& b) {
            if (a.distance != b.distance) return a.distance < b.distance;
            return a.clip_id < b.clip_id;
        });
        if (clips.size() < per_cluster)
            out.warnings.push_back("cluster " + std::to_string(c) + " has only " +
                                   std::to_string(clips.size()) + " clips, keeping all");
        for (std::size_t i = 0; i < clips.size(); ++i) {
            clips[i].selected = i < per_cluster;
            if (clips[i].selected) out.selected.push_back(clips[i].clip_id);
        }
    }
    return out;
}

enum class Level : int { low = 0, high = 1 };

struct BinaryLabels {
    std::vector<Level> valence;
    std::vector<Level> arousal;
    std::string provenance;  // threshold | kmeans-quadrant
};

// Fixed-threshold labeling; scores at the threshold go high.
inline BinaryLabels label_by_threshold(const std::vector<std::pair<double, double>>& va,
                                       double threshold = 4.5) {
    BinaryLabels out;
    out.provenance = "threshold";
    for (const auto& [v, a] : va) {
        if (v < 1.0 || v > 9.0 || a < 1.0 || a > 9.0)
            throw validation_error("label_by_threshold: score outside [1,9]");
        out.valence.push_back(v < threshold ? Level::low : Level::high);
        out.arousal.push_back(a < threshold ? Level::low : Level::high);
    }
    return out;
}

// Quadrant labeling: k-means k=4 on (V, A); the two centroids with the
// larger arousal coordinate are high-arousal, the two with the larger
// valence coordinate are high-valence, and the four combinations must be
// distinct.
inline std::pair<BinaryLabels, ClusterModel> label_by_quadrant(
    const std::vector<std::pair<double, double>>& va, std::uint64_t seed) {
    if (va.size() < 4) throw parameter_error("label_by_quadrant: need at least 4 samples");
    Matrix points(va.size(), 2);
    for (std::size_t i = 0; i < va.size(); ++i) {
        points(i, 0) = va[i].first;
        points(i, 1) = va[i].second;
    }
    ClusterModel model = kmeans_fit(points, 4, seed);

    auto top_two = [&model](std::size_t coord) {
        std::vector<std::size_t> order = {0, 1, 2, 3};
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (model.centroids(a, coord) != model.centroids(b, coord))
                return model.centroids(a, coord) > model.centroids(b, coord);
            return a < b;
        });
        std::vector<bool> high(4, false);
        high[order[0]] = high[order[1]] = true;
        return high;
    };
    const auto high_v = top_two(0);
    const auto high_a = top_two(1);
    std::set<std::pair<bool, bool>> combos;
    for (std::size_t c = 0; c < 4; ++c) combos.insert({high_v[c], high_a[c]});
    if (combos.size() != 4)
        throw validation_error(
            "label_by_quadrant: cluster geometry does not map onto quadrants; "
            "fall back to threshold labeling");

    BinaryLabels labels;
    labels.provenance = "kmeans-quadrant";
    for (std::size_t i = 0; i < va.size(); ++i) {
        const std::size_t c = model.assignments[i];
        labels.valence.push_back(high_v[c] ? Level::high : Level::low);
        labels.arousal.push_back(high_a[c] ? Level::high : Level::low);
    }
    return {labels, model};
}

}  // namespace afb
