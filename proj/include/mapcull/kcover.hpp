#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mapcull/graph.hpp"

namespace mapcull {

// K-Cover selection problem:
//   min q'x + lambda * sum(zeta)
//   s.t. A x + zeta >= b, sum(x) = n_desired, x binary, zeta >= 0 integer.
// A is stored as sparse rows of column indices; columns map to point ids via
// col_point_ids.
struct KCoverInstance {
    std::vector<std::vector<int>> rows;  // visible columns per image row
    std::vector<long long> weights;      // q, one per column
    int num_cols = 0;
    int b = 30;
    int n_desired = 500;
    double slack_penalty = -1.0;  // <= 0: auto = 100 * max(q) + 1
    std::vector<int> col_point_ids;
    std::vector<int> row_image_ids;
    std::vector<uint8_t> row_uncoverable;  // empty rows; their slack is always b

    double effective_lambda() const;
    std::string to_json() const;  // debug dump
};

struct KCoverSolution {
    std::vector<uint8_t> x;        // per column
    std::vector<long long> zeta;   // per row
    double objective = 0.0;
    bool optimal = false;

    std::string to_json() const;
};

// q_i = max(c) - c_i
std::vector<long long> compute_weights(const std::vector<int>& obs_counts);

KCoverInstance build_instance(const MapGraph& graph, Origin source, int b, int n_desired,
                              double slack_penalty = -1.0);

// Proven-optimal branch-and-bound over the LP relaxation. Throws when the
// instance exceeds exact_cap columns.
KCoverSolution solve_exact(const KCoverInstance& instance, int exact_cap = 2000);

// Two-phase greedy: set-multicover then lowest-weight budget fill.
KCoverSolution solve_greedy(const KCoverInstance& instance);

// Solves the K-Cover problem on the query overlay (restricted to matched
// points) and writes the result into label_gt of training-area points.
void generate_labels(MapGraph& graph, int b, int n_desired, int exact_cap = 2000);

}  // namespace mapcull
