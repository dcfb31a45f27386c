#include "mapcull/eval.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "mapcull/pnp.hpp"

namespace mapcull {

std::vector<uint8_t> sparsify_by_scores(const Eigen::VectorXd& scores, int n_desired,
                                        double threshold, uint64_t seed) {
    const int n = static_cast<int>(scores.size());
    if (n_desired > n) throw UsageError("sparsify_by_scores: budget exceeds point count");
    std::vector<int> above, below;
    for (int i = 0; i < n; ++i) (scores[i] > threshold ? above : below).push_back(i);
    std::mt19937_64 rng(seed);
    std::shuffle(above.begin(), above.end(), rng);
    std::shuffle(below.begin(), below.end(), rng);

    std::vector<uint8_t> sel(n, 0);
    int taken = 0;
    for (int i : above) {
        if (taken == n_desired) break;
        sel[i] = 1;
        taken++;
    }
    for (int i : below) {
        if (taken == n_desired) break;
        sel[i] = 1;
        taken++;
    }
    return sel;
}

std::vector<uint8_t> sparsify_random(int num_points, int n_desired, uint64_t seed) {
    if (n_desired > num_points) throw UsageError("sparsify_random: budget exceeds point count");
    std::vector<int> ids(num_points);
    std::iota(ids.begin(), ids.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<uint8_t> sel(num_points, 0);
    for (int i = 0; i < n_desired; ++i) sel[ids[i]] = 1;
    return sel;
}

void fill_selection_to_budget(std::vector<uint8_t>& sel, const MapGraph& graph, int budget) {
    if (budget > static_cast<int>(sel.size()))
        throw UsageError("fill_selection_to_budget: budget exceeds point count");
    int have = 0;
    for (uint8_t v : sel) have += v;
    if (have >= budget) return;
    std::vector<int> rest;
    for (size_t i = 0; i < sel.size(); ++i)
        if (!sel[i]) rest.push_back(static_cast<int>(i));
    std::sort(rest.begin(), rest.end(), [&](int a, int b) {
        if (graph.points[a].obs_count_map != graph.points[b].obs_count_map)
            return graph.points[a].obs_count_map > graph.points[b].obs_count_map;
        return a < b;
    });
    for (int i : rest) {
        if (have == budget) break;
        sel[i] = 1;
        have++;
    }
}

RecallResult evaluate_recall(const SyntheticWorld& world, const MapGraph& graph,
                             const std::vector<uint8_t>& selection,
                             const std::vector<WorldImage>& queries, uint64_t seed) {
    RecallResult out;
    out.num_queries = static_cast<int>(queries.size());
    for (size_t w = 0; w < graph.keypoints.size(); ++w)
        if (graph.keypoints[w].origin == Origin::MAP && graph.kpt_point[w] >= 0 &&
            selection[graph.kpt_point[w]])
            out.kpts++;

    MatchSet ms = simulate_matches(world, selection, queries, seed);
    int below[3] = {0, 0, 0};
    for (size_t qi = 0; qi < queries.size(); ++qi) {
        const auto& matches = ms.per_image[qi];
        out.match_counts.push_back(static_cast<int>(matches.size()));
        std::vector<Eigen::Vector3d> pts;
        std::vector<Eigen::Vector2d> px;
        for (const auto& m : matches) {
            pts.push_back(world.points[m.point_id].position);
            px.push_back(m.pixel);
        }
        PnpResult pr = solve_pnp(pts, px, world.cfg.intrinsics,
                                 seed ^ (0xD1B54A32D192ED03ULL * (qi + 1)));
        if (!pr.success) continue;
        const double pe = position_error(pr.pose, queries[qi].pose);
        const double re = rotation_error_deg(pr.pose, queries[qi].pose);
        for (int t = 0; t < 3; ++t)
            if (pe <= kRecallPosThresh[t] && re <= kRecallRotThresh[t]) below[t]++;
    }
    if (!queries.empty())
        for (int t = 0; t < 3; ++t)
            out.recall[t] = static_cast<double>(below[t]) / static_cast<double>(queries.size());
    return out;
}

std::vector<double> aggregate_curves(const std::vector<SceneCurve>& scenes,
                                     const std::vector<double>& grid, bool* clamped) {
    if (scenes.empty()) throw UsageError("aggregate_curves: no scenes");
    if (clamped) *clamped = false;
    std::vector<double> out(grid.size(), 0.0);
    double total_w = 0.0;
    for (const auto& sc : scenes) {
        if (sc.points.empty()) throw UsageError("aggregate_curves: empty curve");
        const double w = static_cast<double>(sc.num_images);
        total_w += w;
        for (size_t gi = 0; gi < grid.size(); ++gi) {
            const double x = grid[gi];
            double r;
            if (x <= sc.points.front().kpts) {
                r = sc.points.front().recall;
                if (clamped && x < sc.points.front().kpts) *clamped = true;
            } else if (x >= sc.points.back().kpts) {
                r = sc.points.back().recall;
                if (clamped && x > sc.points.back().kpts) *clamped = true;
            } else {
                size_t hi = 1;
                while (sc.points[hi].kpts < x) hi++;
                const auto& a = sc.points[hi - 1];
                const auto& b = sc.points[hi];
                const double f = (x - a.kpts) / (b.kpts - a.kpts);
                r = a.recall + f * (b.recall - a.recall);
            }
            out[gi] += w * r;
        }
    }
    for (auto& r : out) r /= total_w;
    return out;
}

std::vector<double> match_count_histogram(const std::vector<int>& counts,
                                          const std::vector<double>& edges) {
    if (edges.size() < 2) throw UsageError("match_count_histogram: need >= 2 edges");
    std::vector<double> density(edges.size() - 1, 0.0);
    if (counts.empty()) return density;
    for (int c : counts) {
        const double v = static_cast<double>(c);
        if (v < edges.front() || v > edges.back()) continue;
        size_t bin = edges.size() - 2;  // last bin closed on the right
        for (size_t i = 0; i + 1 < edges.size(); ++i)
            if (v >= edges[i] && v < edges[i + 1]) {
                bin = i;
                break;
            }
        density[bin] += 1.0;
    }
    const double total = std::accumulate(density.begin(), density.end(), 0.0);
    if (total > 0)
        for (auto& d : density) d /= total;
    return density;
}

KCoverInstance build_query_oracle_instance(const SyntheticWorld& world,
                                           const std::vector<WorldImage>& queries, int b,
                                           int n_desired, uint64_t seed) {
    std::vector<uint8_t> all(world.points.size(), 1);
    MatchSet ms = simulate_matches(world, all, queries, seed);

    std::vector<int> match_counts(world.points.size(), 0);
    for (const auto& per_image : ms.per_image)
        for (const auto& m : per_image) match_counts[m.point_id]++;

    // columns: points matched by at least one query
    KCoverInstance inst;
    std::vector<int> col_of(world.points.size(), -1);
    std::vector<int> counts;
    for (size_t i = 0; i < world.points.size(); ++i)
        if (match_counts[i] > 0) {
            col_of[i] = static_cast<int>(inst.col_point_ids.size());
            inst.col_point_ids.push_back(static_cast<int>(i));
            counts.push_back(match_counts[i]);
        }
    inst.num_cols = static_cast<int>(inst.col_point_ids.size());
    if (inst.num_cols == 0) throw DataError("build_query_oracle_instance: no query matches");
    inst.weights = compute_weights(counts);
    inst.b = b;
    inst.n_desired = std::min(n_desired, inst.num_cols);

    for (size_t qi = 0; qi < queries.size(); ++qi) {
        std::vector<int> row;
        for (const auto& m : ms.per_image[qi])
            if (col_of[m.point_id] >= 0) row.push_back(col_of[m.point_id]);
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        inst.row_image_ids.push_back(static_cast<int>(qi));
        inst.row_uncoverable.push_back(row.empty() ? 1 : 0);
        inst.rows.push_back(std::move(row));
    }
    return inst;
}

}  // namespace mapcull
