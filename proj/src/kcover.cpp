#include "mapcull/kcover.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "mapcull/simplex.hpp"

namespace mapcull {

double KCoverInstance::effective_lambda() const {
    if (slack_penalty > 0.0) return slack_penalty;
    long long maxq = 0;
    for (long long q : weights) maxq = std::max(maxq, q);
    return 100.0 * static_cast<double>(maxq) + 1.0;
}

std::string KCoverInstance::to_json() const {
    std::ostringstream os;
    os << "{\"num_cols\":" << num_cols << ",\"b\":" << b << ",\"n_desired\":" << n_desired
       << ",\"lambda\":" << effective_lambda() << ",\"rows\":[";
    for (size_t r = 0; r < rows.size(); ++r) {
        if (r) os << ',';
        os << '[';
        for (size_t i = 0; i < rows[r].size(); ++i) os << (i ? "," : "") << rows[r][i];
        os << ']';
    }
    os << "],\"weights\":[";
    for (size_t i = 0; i < weights.size(); ++i) os << (i ? "," : "") << weights[i];
    os << "]}";
    return os.str();
}

std::string KCoverSolution::to_json() const {
    std::ostringstream os;
    os << "{\"objective\":" << objective << ",\"optimal\":" << (optimal ? "true" : "false")
       << ",\"x\":[";
    for (size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << int(x[i]);
    os << "],\"zeta\":[";
    for (size_t i = 0; i < zeta.size(); ++i) os << (i ? "," : "") << zeta[i];
    os << "]}";
    return os.str();
}

std::vector<long long> compute_weights(const std::vector<int>& obs_counts) {
    if (obs_counts.empty()) throw DataError("compute_weights: empty observation counts");
    const int maxc = *std::max_element(obs_counts.begin(), obs_counts.end());
    std::vector<long long> q(obs_counts.size());
    for (size_t i = 0; i < obs_counts.size(); ++i) q[i] = maxc - obs_counts[i];
    return q;
}

KCoverInstance build_instance(const MapGraph& graph, Origin source, int b, int n_desired,
                              double slack_penalty) {
    KCoverInstance inst;
    inst.b = b;
    inst.n_desired = n_desired;
    inst.slack_penalty = slack_penalty;
    inst.num_cols = static_cast<int>(graph.points.size());
    inst.col_point_ids.resize(inst.num_cols);
    std::iota(inst.col_point_ids.begin(), inst.col_point_ids.end(), 0);

    std::vector<int> counts(inst.num_cols);
    for (int i = 0; i < inst.num_cols; ++i)
        counts[i] = source == Origin::MAP ? graph.points[i].obs_count_map
                                          : graph.points[i].obs_count_query;
    inst.weights = compute_weights(counts);

    for (const auto& im : graph.images) {
        if (im.origin != source) continue;
        inst.row_image_ids.push_back(im.id);
        inst.rows.push_back(graph.visible_points(im.id, source));
        inst.row_uncoverable.push_back(inst.rows.back().empty() ? 1 : 0);
    }
    if (inst.rows.empty())
        throw DataError(std::string("build_instance: no images with origin ") + to_string(source));
    return inst;
}

namespace {

std::vector<long long> slack_of(const KCoverInstance& inst, const std::vector<uint8_t>& x) {
    std::vector<long long> zeta(inst.rows.size(), 0);
    for (size_t l = 0; l < inst.rows.size(); ++l) {
        long long cov = 0;
        for (int i : inst.rows[l]) cov += x[i];
        zeta[l] = std::max<long long>(0, inst.b - cov);
    }
    return zeta;
}

double objective_of(const KCoverInstance& inst, const std::vector<uint8_t>& x,
                    const std::vector<long long>& zeta, double lambda) {
    double obj = 0.0;
    for (int i = 0; i < inst.num_cols; ++i)
        if (x[i]) obj += static_cast<double>(inst.weights[i]);
    long long zsum = 0;
    for (long long z : zeta) zsum += z;
    return obj + lambda * static_cast<double>(zsum);
}

// Selection by (weight, index) only; optimal whenever the covering constraint
// is vacuous (b == 0).
KCoverSolution select_cheapest(const KCoverInstance& inst) {
    std::vector<int> order(inst.num_cols);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int c) { return inst.weights[a] < inst.weights[c]; });
    KCoverSolution sol;
    sol.x.assign(inst.num_cols, 0);
    for (int s = 0; s < inst.n_desired; ++s) sol.x[order[s]] = 1;
    sol.zeta = slack_of(inst, sol.x);
    sol.objective = objective_of(inst, sol.x, sol.zeta, inst.effective_lambda());
    sol.optimal = inst.b == 0;
    return sol;
}

// LP relaxation with some columns fixed (fix[i] in {-1 free, 0, 1}).
// Variable layout: [x_free | u_free | zeta | surplus].
LpResult relax_lp(const KCoverInstance& inst, const std::vector<int8_t>& fix, double lambda,
                  std::vector<int>* free_cols_out) {
    std::vector<int> free_cols;
    int fixed1 = 0;
    for (int i = 0; i < inst.num_cols; ++i) {
        if (fix[i] < 0) free_cols.push_back(i);
        else fixed1 += fix[i];
    }
    const int nf = static_cast<int>(free_cols.size());
    const int budget = inst.n_desired - fixed1;
    if (budget < 0 || budget > nf) return {LpResult::INFEASIBLE, 0.0, {}};
    if (free_cols_out) *free_cols_out = free_cols;

    std::vector<int> col_pos(inst.num_cols, -1);
    for (int p = 0; p < nf; ++p) col_pos[free_cols[p]] = p;

    std::vector<int> cov_rows;
    for (size_t l = 0; l < inst.rows.size(); ++l)
        if (!inst.rows[l].empty()) cov_rows.push_back(static_cast<int>(l));
    const int nr = static_cast<int>(cov_rows.size());

    const int n = 2 * nf + 2 * nr;
    const int m = nr + 1 + nf;
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(m, n);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);

    for (int r = 0; r < nr; ++r) {
        int fixed1_row = 0;
        for (int i : inst.rows[cov_rows[r]]) {
            if (fix[i] == 1) fixed1_row++;
            else if (fix[i] < 0) E(r, col_pos[i]) = 1.0;
        }
        E(r, 2 * nf + r) = 1.0;       // zeta
        E(r, 2 * nf + nr + r) = -1.0; // surplus
        f[r] = inst.b - fixed1_row;
    }
    for (int p = 0; p < nf; ++p) E(nr, p) = 1.0;
    f[nr] = budget;
    for (int p = 0; p < nf; ++p) {  // x + u = 1
        E(nr + 1 + p, p) = 1.0;
        E(nr + 1 + p, nf + p) = 1.0;
        f[nr + 1 + p] = 1.0;
    }
    for (int p = 0; p < nf; ++p) c[p] = static_cast<double>(inst.weights[free_cols[p]]);
    for (int r = 0; r < nr; ++r) c[2 * nf + r] = lambda;

    LpResult lp = solve_lp(E, f, c);
    if (lp.status == LpResult::OPTIMAL) {
        // Constant contributions: fixed-1 weights and uncoverable-row slack.
        double constant = 0.0;
        for (int i = 0; i < inst.num_cols; ++i)
            if (fix[i] == 1) constant += static_cast<double>(inst.weights[i]);
        for (size_t l = 0; l < inst.rows.size(); ++l)
            if (inst.rows[l].empty()) constant += lambda * inst.b;
        lp.objective += constant;
    }
    return lp;
}

}  // namespace

KCoverSolution solve_exact(const KCoverInstance& instance, int exact_cap) {
    if (instance.n_desired > instance.num_cols)
        throw DataError("solve_exact: n_desired exceeds number of points");
    if (instance.num_cols > exact_cap)
        throw UsageError("solve_exact: instance exceeds the exact-solver cap (" +
                         std::to_string(exact_cap) + " variables); use the greedy solver");
    const double lambda = instance.effective_lambda();
    if (instance.b == 0) return select_cheapest(instance);

    // Greedy warm start gives the initial incumbent.
    KCoverSolution incumbent = solve_greedy(instance);
    double best_obj = incumbent.objective;

    struct Node {
        double bound;
        long long seq;
        std::vector<int8_t> fix;
    };
    auto cmp = [](const Node& a, const Node& b) {
        return a.bound > b.bound || (a.bound == b.bound && a.seq > b.seq);
    };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> queue(cmp);
    long long seq = 0;
    queue.push({-std::numeric_limits<double>::infinity(), seq++,
                std::vector<int8_t>(instance.num_cols, -1)});

    const double tol = 1e-6;
    while (!queue.empty()) {
        Node node = queue.top();
        queue.pop();
        if (node.bound >= best_obj - 1e-9) break;  // best-first: rest is no better

        std::vector<int> free_cols;
        LpResult lp = relax_lp(instance, node.fix, lambda, &free_cols);
        if (lp.status != LpResult::OPTIMAL) continue;
        if (lp.objective >= best_obj - 1e-9) continue;

        // Most fractional free variable; ties by point index.
        int branch_col = -1;
        double branch_frac = 2.0;
        for (size_t p = 0; p < free_cols.size(); ++p) {
            const double v = lp.x[p];
            if (v > tol && v < 1.0 - tol) {
                const double frac = std::abs(v - 0.5);
                if (frac < branch_frac - 1e-12) {
                    branch_frac = frac;
                    branch_col = free_cols[p];
                }
            }
        }
        if (branch_col < 0) {
            // Integral: round and score exactly.
            std::vector<uint8_t> x(instance.num_cols, 0);
            for (int i = 0; i < instance.num_cols; ++i)
                if (node.fix[i] == 1) x[i] = 1;
            for (size_t p = 0; p < free_cols.size(); ++p)
                if (lp.x[p] > 0.5) x[free_cols[p]] = 1;
            auto zeta = slack_of(instance, x);
            const double obj = objective_of(instance, x, zeta, lambda);
            if (obj < best_obj - 1e-9) {
                best_obj = obj;
                incumbent.x = std::move(x);
                incumbent.zeta = std::move(zeta);
                incumbent.objective = obj;
            }
            continue;
        }
        for (int v = 0; v <= 1; ++v) {
            Node child{lp.objective, seq++, node.fix};
            child.fix[branch_col] = static_cast<int8_t>(v);
            queue.push(std::move(child));
        }
    }
    incumbent.optimal = true;
    return incumbent;
}

KCoverSolution solve_greedy(const KCoverInstance& instance) {
    if (instance.n_desired > instance.num_cols)
        throw DataError("solve_greedy: n_desired exceeds number of points");
    const int nc = instance.num_cols;
    const int nr = static_cast<int>(instance.rows.size());

    std::vector<std::vector<int>> col_rows(nc);
    for (int l = 0; l < nr; ++l)
        for (int i : instance.rows[l]) col_rows[i].push_back(l);

    std::vector<long long> cov(nr, 0);
    std::vector<uint8_t> selected(nc, 0);
    int n_selected = 0;

    auto gain_of = [&](int i) {
        int g = 0;
        for (int l : col_rows[i])
            if (cov[l] < instance.b) g++;
        return g;
    };

    // Lazy greedy: gains only shrink as coverage grows, so a stale heap entry
    // re-checked against the current top is safe.
    struct Entry {
        int gain;
        long long q;
        int col;
        bool operator<(const Entry& o) const {
            if (gain != o.gain) return gain < o.gain;       // max gain first
            if (q != o.q) return q > o.q;                   // then min weight
            return col > o.col;                             // then min index
        }
    };
    std::priority_queue<Entry> heap;
    for (int i = 0; i < nc; ++i) heap.push({gain_of(i), instance.weights[i], i});

    while (n_selected < instance.n_desired && !heap.empty()) {
        Entry top = heap.top();
        heap.pop();
        if (selected[top.col]) continue;
        const int g = gain_of(top.col);
        if (g != top.gain) {
            heap.push({g, top.q, top.col});
            continue;
        }
        if (g == 0) break;  // nothing deficient is coverable; fill phase next
        selected[top.col] = 1;
        n_selected++;
        for (int l : col_rows[top.col]) cov[l]++;
    }

    if (n_selected < instance.n_desired) {
        std::vector<int> rest;
        for (int i = 0; i < nc; ++i)
            if (!selected[i]) rest.push_back(i);
        std::stable_sort(rest.begin(), rest.end(), [&](int a, int b) {
            return instance.weights[a] < instance.weights[b];
        });
        for (int i : rest) {
            if (n_selected == instance.n_desired) break;
            selected[i] = 1;
            n_selected++;
        }
    }

    KCoverSolution sol;
    sol.x = std::move(selected);
    sol.zeta = slack_of(instance, sol.x);
    sol.objective = objective_of(instance, sol.x, sol.zeta, instance.effective_lambda());
    sol.optimal = false;
    return sol;
}

void generate_labels(MapGraph& graph, int b, int n_desired, int exact_cap) {
    bool has_overlay = false;
    for (const auto& im : graph.images)
        if (im.origin == Origin::QUERY) { has_overlay = true; break; }
    if (!has_overlay) throw DataError("generate_labels: graph has no query overlay");

    // Columns: points matched by at least one training query.
    std::vector<int> matched;
    for (const auto& p : graph.points)
        if (p.obs_count_query > 0) matched.push_back(p.id);
    if (matched.empty()) throw DataError("generate_labels: overlay contains no matches");

    std::vector<int> col_of(graph.points.size(), -1);
    for (size_t c = 0; c < matched.size(); ++c) col_of[matched[c]] = static_cast<int>(c);

    KCoverInstance inst;
    inst.b = b;
    inst.n_desired = std::min<int>(n_desired, static_cast<int>(matched.size()));
    inst.num_cols = static_cast<int>(matched.size());
    inst.col_point_ids = matched;
    std::vector<int> counts;
    for (int id : matched) counts.push_back(graph.points[id].obs_count_query);
    inst.weights = compute_weights(counts);
    for (const auto& im : graph.images) {
        if (im.origin != Origin::QUERY) continue;
        inst.row_image_ids.push_back(im.id);
        std::vector<int> row;
        for (int id : graph.visible_points(im.id, Origin::QUERY)) row.push_back(col_of[id]);
        inst.rows.push_back(std::move(row));
        inst.row_uncoverable.push_back(inst.rows.back().empty() ? 1 : 0);
    }

    const KCoverSolution sol = inst.num_cols <= exact_cap ? solve_exact(inst, exact_cap)
                                                          : solve_greedy(inst);

    // Training area: points seen by a train-split map image.
    std::vector<uint8_t> in_train_area(graph.points.size(), 0);
    for (const auto& im : graph.images) {
        if (im.origin != Origin::MAP || im.split != Split::TRAIN) continue;
        for (int id : graph.visible_points(im.id, Origin::MAP)) in_train_area[id] = 1;
    }
    for (auto& p : graph.points) {
        if (col_of[p.id] >= 0)
            p.label_gt = sol.x[col_of[p.id]];
        else if (in_train_area[p.id])
            p.label_gt = 0;
    }
}

}  // namespace mapcull
