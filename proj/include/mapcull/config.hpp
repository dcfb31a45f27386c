#pragma once

#include <string>

#include "mapcull/train.hpp"
#include "mapcull/world.hpp"

namespace mapcull {

// Flat pipeline configuration; every stage reads the same file so one hash
// identifies the whole run. Unknown keys are rejected.
struct PipelineConfig {
    WorldConfig world;
    int knn_k = 9;

    int cover_b = 30;
    int cover_n = 500;
    int exact_cap = 2000;
    double slack_penalty = -1.0;

    int dim_desc = 64;
    int dim_knn = 64;
    int heads = 4;
    std::string g2 = "gat";
    std::string head_merge = "sum";
    double leaky_slope = 0.1;

    int epochs = 20;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.01;
    int loss_k = 30;
    double loss_lambda = 0.01;
    std::string loss = "both";  // both | bce | kc
    int validation_budget = 500;

    double score_threshold = 0.1;
    int budget = 500;
    uint64_t seed = 0;

    void set(const std::string& key, const std::string& value);  // UsageError on bad key/value
    static PipelineConfig load(const std::string& path);

    ScorerConfig scorer_config() const;
    LossConfig loss_config() const;
    OptimConfig optim_config() const;

    std::string canonical() const;  // fixed-order key=value dump
    uint64_t hash() const;          // FNV-1a over canonical()
    std::string hash_hex() const;
};

}  // namespace mapcull
