#include "mapcull/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace mapcull {

namespace {

using Cand = std::pair<double, int>;  // (squared distance, id)

// Keeps the k smallest (d2, id) pairs; lexicographic order gives the
// ascending-id tie-break.
struct BestK {
    explicit BestK(int k) : k(k) {}
    int k;
    std::vector<Cand> heap;  // max-heap

    void offer(const Cand& c) {
        if (static_cast<int>(heap.size()) < k) {
            heap.push_back(c);
            std::push_heap(heap.begin(), heap.end());
        } else if (c < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = c;
            std::push_heap(heap.begin(), heap.end());
        }
    }
    bool full() const { return static_cast<int>(heap.size()) == k; }
    double worst_d2() const { return heap.front().first; }
};

std::vector<Edge> knn_brute_force(const std::vector<PointNode>& points, int k) {
    const int n = static_cast<int>(points.size());
    std::vector<Edge> edges;
    edges.reserve(static_cast<size_t>(n) * k);
    for (int i = 0; i < n; ++i) {
        BestK best(std::min(k, n - 1));
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            best.offer({(points[j].position - points[i].position).squaredNorm(), points[j].id});
        }
        std::sort(best.heap.begin(), best.heap.end());
        for (const auto& [d2, j] : best.heap) edges.emplace_back(j, points[i].id);
    }
    return edges;
}

struct CellKey {
    int x, y, z;
    bool operator<(const CellKey& o) const {
        return std::tie(x, y, z) < std::tie(o.x, o.y, o.z);
    }
};

std::vector<Edge> knn_grid(const std::vector<PointNode>& points, int k) {
    const int n = static_cast<int>(points.size());
    Eigen::Vector3d lo = points[0].position, hi = points[0].position;
    for (const auto& p : points) {
        lo = lo.cwiseMin(p.position);
        hi = hi.cwiseMax(p.position);
    }
    const Eigen::Vector3d extent = (hi - lo).cwiseMax(1e-9);
    // Aim for a few points per cell.
    const double cell = std::max(1e-9, std::cbrt(extent.prod() * 4.0 / n));

    auto key_of = [&](const Eigen::Vector3d& p) {
        return CellKey{static_cast<int>(std::floor((p.x() - lo.x()) / cell)),
                       static_cast<int>(std::floor((p.y() - lo.y()) / cell)),
                       static_cast<int>(std::floor((p.z() - lo.z()) / cell))};
    };
    std::map<CellKey, std::vector<int>> cells;
    for (int i = 0; i < n; ++i) cells[key_of(points[i].position)].push_back(i);

    std::vector<Edge> edges;
    edges.reserve(static_cast<size_t>(n) * k);
    for (int i = 0; i < n; ++i) {
        const CellKey ci = key_of(points[i].position);
        BestK best(std::min(k, n - 1));
        for (int ring = 0;; ++ring) {
            // Once full, stop when the closest possible point in this ring
            // cannot beat the current worst candidate.
            if (best.full()) {
                const double ring_min = (ring - 1) * cell;  // conservative
                if (ring >= 1 && ring_min * ring_min > best.worst_d2()) break;
            }
            bool any_cell = false;
            for (int dx = -ring; dx <= ring; ++dx)
                for (int dy = -ring; dy <= ring; ++dy)
                    for (int dz = -ring; dz <= ring; ++dz) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
                        auto it = cells.find(CellKey{ci.x + dx, ci.y + dy, ci.z + dz});
                        if (it == cells.end()) continue;
                        any_cell = true;
                        for (int j : it->second) {
                            if (j == i) continue;
                            best.offer({(points[j].position - points[i].position).squaredNorm(),
                                        points[j].id});
                        }
                    }
            if (!any_cell && best.full()) break;
            if (ring > 3 && !any_cell &&
                ring * cell > (hi - lo).norm() + cell) break;  // swept the whole box
        }
        std::sort(best.heap.begin(), best.heap.end());
        for (const auto& [d2, j] : best.heap) edges.emplace_back(j, points[i].id);
    }
    return edges;
}

}  // namespace

std::vector<Edge> build_knn_edges(const std::vector<PointNode>& points, int k,
                                  int brute_force_cap) {
    if (points.size() < 2) throw DataError("build_knn_edges: need at least 2 points");
    if (k < 1) throw UsageError("build_knn_edges: k must be >= 1");
    if (static_cast<int>(points.size()) <= brute_force_cap)
        return knn_brute_force(points, k);
    return knn_grid(points, k);
}

void MapGraph::finalize() {
    const int np = static_cast<int>(points.size());
    const int nk = static_cast<int>(keypoints.size());
    const int nm = static_cast<int>(images.size());
    point_kpts_map.assign(np, {});
    point_kpts_query.assign(np, {});
    point_knn_src.assign(np, {});
    image_kpts.assign(nm, {});
    kpt_image.assign(nk, -1);
    kpt_point.assign(nk, -1);

    for (const auto& [w, i] : edges_v) {
        if (keypoints[w].origin == Origin::MAP)
            point_kpts_map[i].push_back(w);
        else
            point_kpts_query[i].push_back(w);
        kpt_point[w] = i;
    }
    for (const auto& [j, i] : edges_n) point_knn_src[i].push_back(j);
    for (const auto& [w, l] : edges_c) {
        image_kpts[l].push_back(w);
        kpt_image[w] = l;
    }
    for (auto& v : point_kpts_map) std::sort(v.begin(), v.end());
    for (auto& v : point_kpts_query) std::sort(v.begin(), v.end());
    for (auto& v : point_knn_src) std::sort(v.begin(), v.end());
    for (auto& v : image_kpts) std::sort(v.begin(), v.end());

    desc_sum = Eigen::MatrixXd::Zero(np, descriptor_dim);
    for (int i = 0; i < np; ++i)
        for (int w : point_kpts_map[i]) desc_sum.row(i) += keypoints[w].descriptor;
}

void MapGraph::validate() const {
    const int np = static_cast<int>(points.size());
    const int nk = static_cast<int>(keypoints.size());
    const int nm = static_cast<int>(images.size());
    for (int i = 0; i < np; ++i) {
        if (points[i].id != i) throw DataError("point id mismatch at index " + std::to_string(i));
        if (!points[i].position.allFinite()) throw DataError("non-finite point position");
        if (points[i].score && (*points[i].score < 0.0 || *points[i].score > 1.0))
            throw DataError("point score outside [0,1]");
    }
    for (int w = 0; w < nk; ++w) {
        if (keypoints[w].id != w) throw DataError("keypoint id mismatch");
        if (keypoints[w].descriptor.size() != descriptor_dim)
            throw DataError("keypoint " + std::to_string(w) + " descriptor dimension mismatch");
    }
    for (int l = 0; l < nm; ++l) {
        if (images[l].id != l) throw DataError("image id mismatch");
        const Eigen::Matrix3d& R = images[l].pose.R;
        if (((R.transpose() * R) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() >= 1e-9)
            throw DataError("image " + std::to_string(l) + " rotation not orthonormal");
    }
    for (const auto& [w, i] : edges_v)
        if (w < 0 || w >= nk || i < 0 || i >= np)
            throw DataError("visibility edge endpoint out of range");
    for (const auto& [j, i] : edges_n)
        if (j < 0 || j >= np || i < 0 || i >= np)
            throw DataError("knn edge endpoint out of range");
    for (const auto& [w, l] : edges_c)
        if (w < 0 || w >= nk || l < 0 || l >= nm)
            throw DataError("containing edge endpoint out of range");

    // Each keypoint belongs to exactly one image.
    std::vector<int> contain_count(nk, 0);
    for (const auto& [w, l] : edges_c) contain_count[w]++;
    for (int w = 0; w < nk; ++w)
        if (contain_count[w] != 1)
            throw DataError("keypoint " + std::to_string(w) + " not contained in exactly one image");

    if (!edges_n.empty()) {
        std::vector<int> indeg(np, 0);
        for (const auto& [j, i] : edges_n) indeg[i]++;
        const int expect = std::min(knn_k, np - 1);
        for (int i = 0; i < np; ++i)
            if (indeg[i] != expect) throw DataError("knn in-degree violated at point " + std::to_string(i));
    }
}

std::vector<int> MapGraph::visible_points(int image_id, Origin origin) const {
    std::set<int> pts;
    for (int w : image_kpts[image_id]) {
        if (keypoints[w].origin != origin) continue;
        if (kpt_point[w] >= 0) pts.insert(kpt_point[w]);
    }
    return {pts.begin(), pts.end()};
}

bool MapGraph::operator==(const MapGraph& o) const {
    auto kp_eq = [](const KeyPointNode& a, const KeyPointNode& b) {
        return a.id == b.id && a.descriptor == b.descriptor && a.pixel == b.pixel &&
               a.origin == b.origin;
    };
    auto pt_eq = [](const PointNode& a, const PointNode& b) {
        return a.id == b.id && a.position == b.position && a.label_gt == b.label_gt &&
               a.score == b.score && a.obs_count_map == b.obs_count_map &&
               a.obs_count_query == b.obs_count_query;
    };
    auto im_eq = [](const ImageNode& a, const ImageNode& b) {
        return a.id == b.id && a.pose == b.pose && a.intrinsics == b.intrinsics &&
               a.session == b.session && a.camera_id == b.camera_id && a.origin == b.origin &&
               a.split == b.split;
    };
    if (descriptor_dim != o.descriptor_dim || knn_k != o.knn_k || seed != o.seed) return false;
    if (points.size() != o.points.size() || keypoints.size() != o.keypoints.size() ||
        images.size() != o.images.size())
        return false;
    for (size_t i = 0; i < points.size(); ++i)
        if (!pt_eq(points[i], o.points[i])) return false;
    for (size_t i = 0; i < keypoints.size(); ++i)
        if (!kp_eq(keypoints[i], o.keypoints[i])) return false;
    for (size_t i = 0; i < images.size(); ++i)
        if (!im_eq(images[i], o.images[i])) return false;
    return edges_v == o.edges_v && edges_n == o.edges_n && edges_c == o.edges_c;
}

Subgraph sample_subgraph(const MapGraph& graph, int image_id) {
    if (image_id < 0 || image_id >= static_cast<int>(graph.images.size()))
        throw DataError("sample_subgraph: image id out of range");

    Subgraph sg;
    sg.anchor_image = image_id;

    std::set<int> center;
    for (int w : graph.image_kpts[image_id]) {
        if (graph.keypoints[w].origin != Origin::MAP) continue;
        if (graph.kpt_point[w] >= 0) center.insert(graph.kpt_point[w]);
        sg.edges_c.emplace_back(w, image_id);
    }
    if (center.empty()) throw DataError("sample_subgraph: image sees no map points");

    std::set<int> neighbors;
    for (int i : center)
        for (int j : graph.point_knn_src[i]) neighbors.insert(j);

    std::set<int> all(center.begin(), center.end());
    all.insert(neighbors.begin(), neighbors.end());

    std::set<int> kpts;
    for (int i : all)
        for (int w : graph.point_kpts_map[i]) kpts.insert(w);

    sg.center_points.assign(center.begin(), center.end());
    sg.neighbor_points.assign(neighbors.begin(), neighbors.end());
    sg.all_points.assign(all.begin(), all.end());
    sg.keypoints_needed.assign(kpts.begin(), kpts.end());
    for (int w : sg.keypoints_needed) sg.edges_v.emplace_back(w, graph.kpt_point[w]);
    for (int i : sg.center_points)
        for (int j : graph.point_knn_src[i]) sg.edges_n.emplace_back(j, i);
    return sg;
}

void query_overlay(MapGraph& graph, const std::vector<QueryMatch>& matches,
                   const std::vector<ImageNode>& query_images) {
    for (const auto& im : query_images)
        if (im.split != Split::TRAIN)
            throw DataError("query_overlay: query image with non-train split");
    for (const auto& m : matches) {
        if (m.point_id < 0 || m.point_id >= static_cast<int>(graph.points.size()))
            throw DataError("query_overlay: match references missing point");
        if (m.image_index < 0 || m.image_index >= static_cast<int>(query_images.size()))
            throw DataError("query_overlay: match references missing query image");
    }

    std::vector<int> image_ids(query_images.size());
    for (size_t qi = 0; qi < query_images.size(); ++qi) {
        ImageNode im = query_images[qi];
        im.id = static_cast<int>(graph.images.size());
        im.origin = Origin::QUERY;
        image_ids[qi] = im.id;
        graph.images.push_back(im);
    }
    for (const auto& m : matches) {
        KeyPointNode kp = m.keypoint;
        kp.id = static_cast<int>(graph.keypoints.size());
        kp.origin = Origin::QUERY;
        graph.keypoints.push_back(kp);
        graph.edges_v.emplace_back(kp.id, m.point_id);
        graph.edges_c.emplace_back(kp.id, image_ids[m.image_index]);
        graph.points[m.point_id].obs_count_query++;
    }
    graph.finalize();
}

}  // namespace mapcull
