#pragma once

#include <functional>
#include <optional>
#include <string>

#include "mapcull/scorer.hpp"

namespace mapcull {

struct LossConfig {
    int K = 30;
    double lambda_l1 = 0.01;
    bool use_bce = true;
    bool use_kc = true;
};

// Binary cross-entropy summed over labeled points; scores clamped to
// [1e-7, 1-1e-7]. The sum reduction keeps the per-score gradient commensurate
// with the coverage term. Empty input -> 0 with *had_labels=false.
double bce_loss(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels,
                bool* had_labels = nullptr);

// |K - sum(phi_scores)| + lambda * sum(all_scores).
double kcover_loss(const Eigen::VectorXd& phi_scores, const Eigen::VectorXd& all_scores,
                   const LossConfig& cfg);

// Sum of the enabled terms; throws NumericalError on NaN.
double total_loss(double bce, double kc);

// Per-batch loss and dLoss/dscore for one anchor image. labels[c] is the
// ground-truth label of center c when BCE applies to it, in_phi[c] marks
// membership in the anchor's observed set.
struct StepLoss {
    double bce = 0.0;
    double kc = 0.0;
    double total = 0.0;
    bool had_labels = false;
    bool kc_skipped = false;
    Eigen::VectorXd dscores;
};
StepLoss compute_step_loss(const Eigen::VectorXd& scores,
                           const std::vector<std::optional<int>>& labels,
                           const std::vector<uint8_t>& in_phi, const LossConfig& cfg);

struct OptimConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.01;
    double eps = 1e-8;
};

struct OptimState {
    OptimConfig cfg;
    long long step = 0;
    std::vector<Eigen::MatrixXd> m;
    std::vector<Eigen::MatrixXd> v;

    static OptimState init(const ScorerModel& model, const OptimConfig& cfg);
};

void adamw_step(std::vector<Eigen::MatrixXd>& params, const std::vector<Eigen::MatrixXd>& grads,
                OptimState& state);

struct TrainConfig {
    int epochs = 20;
    OptimConfig optim;
    LossConfig loss;
    ScorerConfig scorer;
    uint64_t seed = 0;
    std::string out_dir;  // empty -> no checkpoint/metrics files
    // Higher is better; called after each epoch. Null -> negative mean epoch
    // loss is used as the selection metric.
    std::function<double(const ScorerModel&)> validation;
};

struct TrainResult {
    ScorerModel best;
    int best_epoch = -1;
    double best_metric = 0.0;
    std::vector<std::string> metrics_csv;  // header + one row per step/epoch
};

TrainResult train(const MapGraph& graph, const TrainConfig& cfg);

}  // namespace mapcull
