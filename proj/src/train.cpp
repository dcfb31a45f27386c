#include "mapcull/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace mapcull {

namespace {
constexpr double kClamp = 1e-7;
}

double bce_loss(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels,
                bool* had_labels) {
    if (scores.size() != labels.size()) throw UsageError("bce_loss: size mismatch");
    if (had_labels) *had_labels = scores.size() > 0;
    if (scores.size() == 0) return 0.0;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        const double s = std::clamp(scores[i], kClamp, 1.0 - kClamp);
        sum += -(labels[i] * std::log(s) + (1.0 - labels[i]) * std::log(1.0 - s));
    }
    return sum;
}

double kcover_loss(const Eigen::VectorXd& phi_scores, const Eigen::VectorXd& all_scores,
                   const LossConfig& cfg) {
    return std::abs(static_cast<double>(cfg.K) - phi_scores.sum()) +
           cfg.lambda_l1 * all_scores.sum();
}

double total_loss(double bce, double kc) {
    if (std::isnan(bce) || std::isnan(kc)) throw NumericalError("loss is NaN");
    return bce + kc;
}

StepLoss compute_step_loss(const Eigen::VectorXd& scores,
                           const std::vector<std::optional<int>>& labels,
                           const std::vector<uint8_t>& in_phi, const LossConfig& cfg) {
    const Eigen::Index n = scores.size();
    if (static_cast<Eigen::Index>(labels.size()) != n ||
        static_cast<Eigen::Index>(in_phi.size()) != n)
        throw UsageError("compute_step_loss: size mismatch");
    if (!cfg.use_bce && !cfg.use_kc) throw UsageError("no loss term enabled");

    StepLoss out;
    out.dscores = Eigen::VectorXd::Zero(n);

    if (cfg.use_bce) {
        int n_lab = 0;
        for (const auto& l : labels) n_lab += l.has_value();
        if (n_lab > 0) {
            out.had_labels = true;
            double sum = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!labels[i]) continue;
                const double y = *labels[i];
                const double s = std::clamp(scores[i], kClamp, 1.0 - kClamp);
                sum += -(y * std::log(s) + (1.0 - y) * std::log(1.0 - s));
                // clamp is flat outside its range, so no gradient there
                if (scores[i] > kClamp && scores[i] < 1.0 - kClamp)
                    out.dscores[i] += (s - y) / (s * (1.0 - s));
            }
            out.bce = sum;
        }
    }

    if (cfg.use_kc) {
        double phi_sum = 0.0;
        int n_phi = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (in_phi[i]) {
                phi_sum += scores[i];
                n_phi++;
            }
        if (n_phi == 0) {
            out.kc_skipped = true;
        } else {
            out.kc = std::abs(cfg.K - phi_sum) + cfg.lambda_l1 * scores.sum();
            const double sgn =
                phi_sum > cfg.K ? 1.0 : (phi_sum < cfg.K ? -1.0 : 0.0);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (in_phi[i]) out.dscores[i] += sgn;
                out.dscores[i] += cfg.lambda_l1;
            }
        }
    }

    out.total = total_loss(out.bce, out.kc);
    return out;
}

OptimState OptimState::init(const ScorerModel& model, const OptimConfig& cfg) {
    OptimState st;
    st.cfg = cfg;
    st.m = model.zero_like();
    st.v = model.zero_like();
    return st;
}

void adamw_step(std::vector<Eigen::MatrixXd>& params, const std::vector<Eigen::MatrixXd>& grads,
                OptimState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw UsageError("adamw_step: tensor count mismatch");
    state.step++;
    const auto& c = state.cfg;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (size_t t = 0; t < params.size(); ++t) {
        if (params[t].rows() != grads[t].rows() || params[t].cols() != grads[t].cols())
            throw UsageError("adamw_step: shape mismatch");
        auto& m = state.m[t];
        auto& v = state.v[t];
        m = c.beta1 * m + (1.0 - c.beta1) * grads[t];
        v = c.beta2 * v + (1.0 - c.beta2) * grads[t].cwiseProduct(grads[t]);
        // decoupled weight decay, then the Adam update with bias correction
        params[t] -= c.lr * c.weight_decay * params[t];
        params[t].array() -=
            c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
    }
}

TrainResult train(const MapGraph& graph, const TrainConfig& cfg) {
    std::vector<int> anchors;
    for (const auto& im : graph.images)
        if (im.origin == Origin::MAP) anchors.push_back(im.id);
    if (anchors.empty()) throw DataError("train: no map images");

    ScorerModel model = ScorerModel::init(cfg.scorer, cfg.seed);
    OptimState opt = OptimState::init(model, cfg.optim);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    TrainResult res;
    res.metrics_csv.push_back("epoch,step,bce,kc,total,val_metric");
    bool have_best = false;

    const bool files = !cfg.out_dir.empty();
    if (files) std::filesystem::create_directories(cfg.out_dir);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(anchors.begin(), anchors.end(), rng);
        double epoch_total = 0.0;
        int steps = 0;
        for (int image_id : anchors) {
            Subgraph sub;
            try {
                sub = sample_subgraph(graph, image_id);
            } catch (const DataError&) {
                continue;  // image with no scorable points
            }
            SubgraphBatch batch = make_batch(graph, sub);
            if (batch.center_rows.empty()) continue;

            auto fwd = forward_batch(model, batch, true);

            const bool bce_here =
                cfg.loss.use_bce &&
                graph.images[image_id].split == Split::TRAIN;
            const Eigen::Index n = fwd.scores.size();
            std::vector<std::optional<int>> labels(n);
            if (bce_here)
                for (Eigen::Index c = 0; c < n; ++c) {
                    const auto& p = graph.points[batch.center_point_ids[c]];
                    if (p.label_gt) labels[c] = *p.label_gt;
                }
            std::vector<uint8_t> in_phi(n, 1);  // centers are the anchor's points

            LossConfig lc = cfg.loss;
            lc.use_bce = bce_here;
            if (!lc.use_bce && !lc.use_kc) continue;
            StepLoss sl = compute_step_loss(fwd.scores, labels, in_phi, lc);
            if (std::isnan(sl.total))
                throw NumericalError("train diverged at epoch " + std::to_string(epoch) +
                                     " step " + std::to_string(steps));
            if (lc.use_kc && sl.kc_skipped && !sl.had_labels) continue;

            auto grads = model.zero_like();
            backward(*fwd.tape, sl.dscores, grads);
            adamw_step(model.tensors, grads, opt);

            res.metrics_csv.push_back(std::to_string(epoch) + "," + std::to_string(steps) +
                                      "," + std::to_string(sl.bce) + "," +
                                      std::to_string(sl.kc) + "," + std::to_string(sl.total) +
                                      ",");
            epoch_total += sl.total;
            steps++;
        }
        const double mean_loss = steps > 0 ? epoch_total / steps : 0.0;
        const double metric =
            cfg.validation ? cfg.validation(model) : -mean_loss;
        res.metrics_csv.push_back(std::to_string(epoch) + ",-1,,," +
                                  std::to_string(mean_loss) + "," + std::to_string(metric));
        if (files)
            save_checkpoint(model,
                            cfg.out_dir + "/ckpt_epoch" + std::to_string(epoch) + ".bin");
        if (!have_best || metric > res.best_metric) {  // ties keep the earlier epoch
            have_best = true;
            res.best = model;
            res.best_epoch = epoch;
            res.best_metric = metric;
        }
    }

    if (files) {
        std::ofstream csv(cfg.out_dir + "/metrics.csv");
        for (const auto& line : res.metrics_csv) csv << line << "\n";
    }
    return res;
}

}  // namespace mapcull
