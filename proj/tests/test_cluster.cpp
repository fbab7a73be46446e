#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <array>
#include <map>

#include "affectbench/cluster.hpp"
#include "affectbench/rng.hpp"

using namespace afb;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

// Minimum total within-cluster SSE over every possible assignment.
double brute_force_inertia(const Matrix& points, std::size_t k) {
    const std::size_t n = points.rows, d = points.cols;
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= k;
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> assign(n);
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (std::size_t i = 0; i < n; ++i) {
            assign[i] = c % k;
            c /= k;
        }
        Matrix centroid(k, d);
        std::vector<double> cnt(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            cnt[assign[i]] += 1.0;
            for (std::size_t j = 0; j < d; ++j) centroid(assign[i], j) += points(i, j);
        }
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (cnt[assign[i]] == 0.0) continue;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = points(i, j) - centroid(assign[i], j) / cnt[assign[i]];
                sse += diff * diff;
            }
        }
        best = std::min(best, sse);
    }
    return best;
}

}  // namespace

TEST_CASE("kmeans with one cluster returns the sample mean", "[cluster]") {
    const auto pts = from_rows({{1.0, 2.0}, {3.0, 4.0}, {5.0, 9.0}});
    const auto model = kmeans_fit(pts, 1, 7);
    REQUIRE(model.centroids(0, 0) == Catch::Approx(3.0).margin(1e-12));
    REQUIRE(model.centroids(0, 1) == Catch::Approx(5.0).margin(1e-12));
    REQUIRE(model.assignments == std::vector<std::size_t>{0, 0, 0});
}

TEST_CASE("kmeans recovers four corner blobs and the brute-force optimum", "[cluster]") {
    Rng rng(21);
    const std::vector<std::pair<double, double>> corners = {
        {0.0, 0.0}, {0.0, 10.0}, {10.0, 0.0}, {10.0, 10.0}};
    std::vector<std::vector<double>> rows;
    for (const auto& [cx, cy] : corners)
        for (int i = 0; i < 2; ++i)
            rows.push_back({cx + 0.02 * rng.normal(), cy + 0.02 * rng.normal()});
    const auto pts = from_rows(rows);
    const auto model = kmeans_fit(pts, 4, 3);
    for (const auto& [cx, cy] : corners) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < 4; ++c) {
            const double dx = model.centroids(c, 0) - cx, dy = model.centroids(c, 1) - cy;
            best = std::min(best, std::sqrt(dx * dx + dy * dy));
        }
        REQUIRE(best < 0.1);
    }
    REQUIRE(model.inertia == Catch::Approx(brute_force_inertia(pts, 4)).margin(1e-9));
}

TEST_CASE("kmeans tolerates duplicate-only input", "[cluster]") {
    const auto pts = from_rows({{2.0, 2.0}, {2.0, 2.0}, {2.0, 2.0}, {2.0, 2.0}});
    const auto model = kmeans_fit(pts, 2, 5);
    REQUIRE(model.assignments.size() == 4);
    for (std::size_t a : model.assignments) REQUIRE(a < 2);
    REQUIRE(model.inertia == 0.0);
}

TEST_CASE("kmeans inertia history never increases", "[cluster]") {
    Rng rng(22);
    Matrix pts(60, 3);
    for (std::size_t i = 0; i < pts.rows; ++i)
        for (std::size_t j = 0; j < 3; ++j) pts(i, j) = rng.uniform(0.0, 10.0);
    const auto model = kmeans_fit(pts, 4, 11);
    for (std::size_t i = 0; i + 1 < model.inertia_history.size(); ++i)
        REQUIRE(model.inertia_history[i + 1] <= model.inertia_history[i] + 1e-9);
    REQUIRE_THROWS_AS(kmeans_fit(from_rows({{1.0}}), 2, 1), parameter_error);
}

TEST_CASE("kmeans is deterministic for a fixed seed", "[cluster]") {
    Rng rng(23);
    Matrix pts(40, 2);
    for (std::size_t i = 0; i < pts.rows; ++i)
        for (std::size_t j = 0; j < 2; ++j) pts(i, j) = rng.normal();
    const auto a = kmeans_fit(pts, 3, 9);
    const auto b = kmeans_fit(pts, 3, 9);
    REQUIRE(a.centroids.data == b.centroids.data);
    REQUIRE(a.assignments == b.assignments);
    REQUIRE(a.inertia == b.inertia);
}

TEST_CASE("gmm with one component matches the sample moments", "[cluster]") {
    Rng rng(24);
    Matrix pts(200, 2);
    for (std::size_t i = 0; i < pts.rows; ++i) {
        pts(i, 0) = 1.5 + rng.normal();
        pts(i, 1) = -2.0 + 0.5 * rng.normal();
    }
    const auto model = gmm_fit(pts, 1, 31);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < pts.rows; ++i) {
        mx += pts(i, 0);
        my += pts(i, 1);
    }
    mx /= 200.0;
    my /= 200.0;
    REQUIRE(model.centroids(0, 0) == Catch::Approx(mx).margin(1e-9));
    REQUIRE(model.centroids(0, 1) == Catch::Approx(my).margin(1e-9));
    double vxx = 0.0;
    for (std::size_t i = 0; i < pts.rows; ++i) vxx += (pts(i, 0) - mx) * (pts(i, 0) - mx);
    vxx /= 200.0;
    REQUIRE(model.covariances[0](0, 0) == Catch::Approx(vxx).margin(1e-4));
    REQUIRE(model.weights[0] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("gmm separates two well-spaced gaussians", "[cluster]") {
    Rng rng(25);
    Matrix pts(200, 2);
    std::vector<std::size_t> truth(200);
    for (std::size_t i = 0; i < 200; ++i) {
        const bool second = i >= 100;
        truth[i] = second ? 1 : 0;
        pts(i, 0) = (second ? 6.0 : 0.0) + rng.normal();
        pts(i, 1) = (second ? 6.0 : 0.0) + rng.normal();
    }
    const auto model = gmm_fit(pts, 2, 17);
    REQUIRE(model.weights[0] + model.weights[1] == Catch::Approx(1.0).margin(1e-9));
    for (std::size_t i = 0; i + 1 < model.likelihood_history.size(); ++i)
        REQUIRE(model.likelihood_history[i + 1] >= model.likelihood_history[i] - 1e-8);
    std::size_t flipped = 0, direct = 0;
    for (std::size_t i = 0; i < 200; ++i) {
        if (model.assignments[i] == truth[i]) ++direct;
        if (model.assignments[i] == 1 - truth[i]) ++flipped;
    }
    REQUIRE(std::max(direct, flipped) >= 196);
    REQUIRE_THROWS_AS(gmm_fit(pts, 2, 17, 200, 0.0), parameter_error);
}

TEST_CASE("davies-bouldin hand-computed fixtures", "[cluster]") {
    const auto pts = from_rows({{0.0, 0.0}, {0.0, 1.0}, {10.0, 0.0}, {10.0, 1.0}});
    REQUIRE(davies_bouldin(pts, {0, 0, 1, 1}) == Catch::Approx(0.1).margin(1e-12));

    const auto singletons = from_rows({{0.0, 0.0}, {5.0, 0.0}});
    REQUIRE(davies_bouldin(singletons, {0, 1}) == 0.0);

    REQUIRE_THROWS_AS(davies_bouldin(singletons, {0, 0}), parameter_error);
    REQUIRE_THROWS_AS(davies_bouldin(pts, {0, 0, 2, 2}), parameter_error);
}

TEST_CASE("davies-bouldin is invariant to translation and rotation", "[cluster]") {
    Rng rng(26);
    Matrix pts(30, 2);
    std::vector<std::size_t> assign(30);
    for (std::size_t i = 0; i < 30; ++i) {
        const std::size_t c = i % 3;
        assign[i] = c;
        pts(i, 0) = 4.0 * static_cast<double>(c) + rng.normal();
        pts(i, 1) = -3.0 * static_cast<double>(c) + rng.normal();
    }
    const double base = davies_bouldin(pts, assign);
    const double theta = 0.7;
    Matrix moved(30, 2);
    for (std::size_t i = 0; i < 30; ++i) {
        moved(i, 0) = std::cos(theta) * pts(i, 0) - std::sin(theta) * pts(i, 1) + 100.0;
        moved(i, 1) = std::sin(theta) * pts(i, 0) + std::cos(theta) * pts(i, 1) - 40.0;
    }
    REQUIRE(davies_bouldin(moved, assign) == Catch::Approx(base).margin(1e-9));
}

TEST_CASE("db-based k selection reproduces the published picks", "[cluster]") {
    const std::map<int, double> exp1 = {
        {2, 1.1771}, {3, 0.8729}, {4, 0.8866}, {5, 0.8956}, {6, 0.8842}};
    REQUIRE(select_k_by_db(exp1) == 3);
    const std::map<int, double> exp2 = {
        {2, 0.8216}, {3, 1.0010}, {4, 0.8095}, {5, 0.8556}, {6, 0.8255}};
    REQUIRE(select_k_by_db(exp2) == 4);
    REQUIRE(select_k_by_db({{2, 1.0}, {3, 1.0}}) == 2);
    REQUIRE_THROWS_AS(select_k_by_db({}), parameter_error);
}

TEST_CASE("elbow knee detection", "[cluster]") {
    const std::map<int, double> curve = {{1, 100.0}, {2, 40.0}, {3, 15.0}, {4, 12.0}, {5, 10.0}};
    const auto knee = elbow_knee(curve);
    REQUIRE(knee.has_value());
    REQUIRE(*knee == 3);

    const std::map<int, double> linear = {{1, 50.0}, {2, 40.0}, {3, 30.0}, {4, 20.0}};
    REQUIRE_FALSE(elbow_knee(linear).has_value());
    const std::map<int, double> flat = {{1, 5.0}, {2, 5.0}, {3, 5.0}};
    REQUIRE_FALSE(elbow_knee(flat).has_value());

    REQUIRE_THROWS_AS(elbow_knee({{1, 3.0}, {2, 2.0}}), parameter_error);
    REQUIRE_THROWS_AS(elbow_knee({{1, 3.0}, {3, 2.0}, {4, 1.0}}), parameter_error);
}

TEST_CASE("stimulus selection ranks identically-rated clips by distance", "[cluster]") {
    // three separated blobs, four clips each, three identical ratings per clip
    std::vector<StimulusPoint> pts;
    const std::vector<std::array<double, 3>> centers = {
        {1.0, 1.0, 1.0}, {7.0, 1.0, 4.0}, {3.0, 8.0, 8.0}};
    int clip = 0;
    for (const auto& c : centers)
        for (int j = 0; j < 4; ++j) {
            const std::string id = "clip" + std::to_string(clip++);
            const double off = 0.05 * (j + 1);
            for (int r = 0; r < 3; ++r)
                pts.push_back({id, c[0] + off, c[1], c[2]});
        }
    const auto ranking = select_stimuli(pts, 3, 2, 41);
    REQUIRE(ranking.selected.size() == 6);
    REQUIRE(ranking.warnings.empty());

    std::size_t table_rows = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        const auto& clips = ranking.per_cluster[c];
        table_rows += clips.size();
        REQUIRE(clips.size() == 4);
        for (std::size_t i = 0; i + 1 < clips.size(); ++i)
            REQUIRE(clips[i].distance <= clips[i + 1].distance + 1e-12);
        // brute force: representatives are the ratings themselves
        for (const auto& rc : clips) {
            double expect = std::numeric_limits<double>::infinity();
            for (const auto& p : pts)
                if (p.clip_id == rc.clip_id) {
                    const double point[3] = {p.happiness, p.fear, p.excitement};
                    expect = std::sqrt(
                        sq_distance(&ranking.model.centroids(rc.cluster, 0), point, 3));
                }
            REQUIRE(rc.distance == Catch::Approx(expect).margin(1e-9));
        }
        for (std::size_t i = 0; i < clips.size(); ++i) REQUIRE(clips[i].selected == (i < 2));
    }
    REQUIRE(table_rows == 12);
}

TEST_CASE("stimulus selection mode tie keeps the nearer cluster", "[cluster]") {
    std::vector<StimulusPoint> pts;
    for (int j = 0; j < 3; ++j)
        for (int r = 0; r < 3; ++r) {
            pts.push_back({"lowA" + std::to_string(j), 0.0, 0.0, 0.0});
            pts.push_back({"highB" + std::to_string(j), 10.0, 10.0, 10.0});
        }
    pts.push_back({"tied", 0.4, 0.0, 0.0});
    pts.push_back({"tied", 9.0, 10.0, 10.0});
    const auto ranking = select_stimuli(pts, 2, 10, 13);
    std::size_t tied_cluster = 99;
    double tied_distance = -1.0;
    for (std::size_t c = 0; c < 2; ++c)
        for (const auto& rc : ranking.per_cluster[c])
            if (rc.clip_id == "tied") {
                tied_cluster = c;
                tied_distance = rc.distance;
            }
    // the (0.4,0,0) point sits nearer its centroid than (9,10,10) sits to its own
    std::size_t low_cluster =
        ranking.model.centroids(0, 0) < ranking.model.centroids(1, 0) ? 0 : 1;
    REQUIRE(tied_cluster == low_cluster);
    const double expected_rep[3] = {0.4, 0.0, 0.0};
    REQUIRE(tied_distance ==
            Catch::Approx(std::sqrt(sq_distance(&ranking.model.centroids(low_cluster, 0),
                                                expected_rep, 3)))
                .margin(1e-9));
    REQUIRE_FALSE(ranking.warnings.empty());  // clusters hold fewer than 10 clips
}

