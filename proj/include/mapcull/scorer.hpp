#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mapcull/graph.hpp"

namespace mapcull {

enum class G2Kind { GAT, GRAPHCONV, SAGE };
enum class HeadMerge { SUM, MEAN };  // MEAN: head average + LeakyReLU (ablation variant)

inline const char* to_string(G2Kind k) {
    switch (k) {
        case G2Kind::GAT: return "gat";
        case G2Kind::GRAPHCONV: return "graphconv";
        default: return "sage";
    }
}
G2Kind g2_from_string(const std::string& s);

struct ScorerConfig {
    int dim_in = 32;    // descriptor dimension D
    int dim_desc = 64;  // F, g1 output
    int dim_knn = 64;   // F+, g2 output
    int heads = 4;      // H (GAT only)
    double leaky_slope = 0.1;
    G2Kind g2 = G2Kind::GAT;
    HeadMerge head_merge = HeadMerge::SUM;

    bool operator==(const ScorerConfig&) const = default;
};

// Flat parameter list; shapes depend on cfg. Order:
//   [W1, b1] ++ g2 params ++ [M1, c1, M2, c2, M3, c3]
// g2 params: GAT -> per head (Wh, ah); GRAPHCONV -> (Wg); SAGE -> (Wself, Wnb)
struct ScorerModel {
    ScorerConfig cfg;
    std::vector<Eigen::MatrixXd> tensors;

    static ScorerModel init(const ScorerConfig& cfg, uint64_t seed);
    static ScorerModel zeros(const ScorerConfig& cfg);
    std::vector<Eigen::MatrixXd> zero_like() const;

    Eigen::MatrixXd& W1() { return tensors[0]; }
    Eigen::MatrixXd& b1() { return tensors[1]; }
    const Eigen::MatrixXd& W1() const { return tensors[0]; }
    const Eigen::MatrixXd& b1() const { return tensors[1]; }
    int g2_param_count() const;
    const Eigen::MatrixXd& g2t(int i) const { return tensors[2 + i]; }
    Eigen::MatrixXd& g2t(int i) { return tensors[2 + i]; }
    const Eigen::MatrixXd& g3t(int i) const { return tensors[2 + g2_param_count() + i]; }
    Eigen::MatrixXd& g3t(int i) { return tensors[2 + g2_param_count() + i]; }

    bool operator==(const ScorerModel&) const = default;
};

void save_checkpoint(const ScorerModel& model, const std::string& path);
ScorerModel load_checkpoint(const std::string& path);

// Batched inputs for one scoring pass: descriptor sums of all involved
// points, which rows are scored, and each scored row's kNN source rows.
struct SubgraphBatch {
    std::vector<int> all_point_ids;        // ascending graph point ids
    Eigen::MatrixXd desc_sums;             // n_all x D
    std::vector<int> center_rows;          // row indices of scored points
    std::vector<int> center_point_ids;
    std::vector<std::vector<int>> nb_rows; // per center: kNN source rows, ascending id
    Eigen::VectorXi degrees;               // per row, |N| for graphconv normalization
    std::vector<int> excluded_point_ids;   // zero MAP-visibility points dropped from scoring
};

SubgraphBatch make_batch(const MapGraph& graph, const Subgraph& sub);
SubgraphBatch make_full_batch(const MapGraph& graph);

// Reverse-mode tape: forward records intermediates, backward consumes them
// once and accumulates parameter gradients.
struct Tape;

struct ForwardResult {
    Eigen::VectorXd scores;  // per center, in (0,1)
    std::shared_ptr<Tape> tape;
};

ForwardResult forward_batch(const ScorerModel& model, const SubgraphBatch& batch,
                            bool want_tape);

// dscores: dLoss/dscore per center. Throws on tape reuse.
void backward(Tape& tape, const Eigen::VectorXd& dscores, std::vector<Eigen::MatrixXd>& grads);

// Convenience wrappers.
Eigen::VectorXd predict_scores(const ScorerModel& model, const MapGraph& graph,
                               const Subgraph& sub);
// Full-map scores indexed by point id; unobserved points get score 0.
Eigen::VectorXd predict_scores_full(const ScorerModel& model, const MapGraph& graph);

// Layer-level entry points used by the unit tests.
Eigen::MatrixXd g1_forward(const ScorerModel& model, const Eigen::MatrixXd& desc_sums);
Eigen::VectorXd gat_forward_node(const ScorerModel& model, const Eigen::MatrixXd& feats,
                                 int self_row, const std::vector<int>& nb_rows);
Eigen::VectorXd graphconv_forward_node(const ScorerModel& model, const Eigen::MatrixXd& feats,
                                       int self_row, const std::vector<int>& nb_rows,
                                       const Eigen::VectorXi& degrees);
Eigen::VectorXd sageconv_forward_node(const ScorerModel& model, const Eigen::MatrixXd& feats,
                                      int self_row, const std::vector<int>& nb_rows);
// Per-head attention weights for one node (diagnostics / normalization tests).
Eigen::MatrixXd gat_attention_weights(const ScorerModel& model, const Eigen::MatrixXd& feats,
                                      int self_row, const std::vector<int>& nb_rows);

}  // namespace mapcull
