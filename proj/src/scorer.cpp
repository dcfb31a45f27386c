#include "mapcull/scorer.hpp"

#include <cstring>
#include <fstream>
#include <random>
#include <unordered_map>

namespace mapcull {

G2Kind g2_from_string(const std::string& s) {
    if (s == "gat") return G2Kind::GAT;
    if (s == "graphconv") return G2Kind::GRAPHCONV;
    if (s == "sage") return G2Kind::SAGE;
    throw UsageError("unknown g2 layer: " + s);
}

namespace {

std::vector<std::pair<int, int>> tensor_shapes(const ScorerConfig& cfg) {
    const int D = cfg.dim_in, F = cfg.dim_desc, Fp = cfg.dim_knn, Fh = cfg.dim_knn / 2;
    std::vector<std::pair<int, int>> shapes = {{F, D}, {F, 1}};
    switch (cfg.g2) {
        case G2Kind::GAT:
            for (int h = 0; h < cfg.heads; ++h) {
                shapes.emplace_back(Fp, F);
                shapes.emplace_back(2 * Fp, 1);
            }
            break;
        case G2Kind::GRAPHCONV:
            shapes.emplace_back(Fp, F);
            break;
        case G2Kind::SAGE:
            shapes.emplace_back(Fp, F);
            shapes.emplace_back(Fp, F);
            break;
    }
    shapes.emplace_back(Fp, Fp);
    shapes.emplace_back(Fp, 1);
    shapes.emplace_back(Fh, Fp);
    shapes.emplace_back(Fh, 1);
    shapes.emplace_back(1, Fh);
    shapes.emplace_back(1, 1);
    return shapes;
}

inline double leaky(double x, double slope) { return x > 0.0 ? x : slope * x; }
inline double leaky_grad(double x, double slope) { return x > 0.0 ? 1.0 : slope; }

Eigen::VectorXd leaky_vec(const Eigen::VectorXd& x, double slope) {
    return x.unaryExpr([slope](double v) { return leaky(v, slope); });
}

}  // namespace

int ScorerModel::g2_param_count() const {
    switch (cfg.g2) {
        case G2Kind::GAT: return 2 * cfg.heads;
        case G2Kind::GRAPHCONV: return 1;
        case G2Kind::SAGE: return 2;
    }
    return 0;
}

ScorerModel ScorerModel::zeros(const ScorerConfig& cfg) {
    ScorerModel m;
    m.cfg = cfg;
    for (auto [r, c] : tensor_shapes(cfg)) m.tensors.push_back(Eigen::MatrixXd::Zero(r, c));
    return m;
}

ScorerModel ScorerModel::init(const ScorerConfig& cfg, uint64_t seed) {
    ScorerModel m = zeros(cfg);
    std::mt19937_64 rng(seed);
    for (auto& t : m.tensors) {
        const double bound = std::sqrt(6.0 / double(t.rows() + t.cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index c = 0; c < t.cols(); ++c)
            for (Eigen::Index r = 0; r < t.rows(); ++r) t(r, c) = dist(rng);
    }
    return m;
}

std::vector<Eigen::MatrixXd> ScorerModel::zero_like() const {
    std::vector<Eigen::MatrixXd> g;
    for (const auto& t : tensors) g.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
    return g;
}

void save_checkpoint(const ScorerModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("save_checkpoint: cannot open " + path);
    const uint32_t magic = 0x4D434B50, version = 1;
    auto w32 = [&](int32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    f.write(reinterpret_cast<const char*>(&magic), 4);
    f.write(reinterpret_cast<const char*>(&version), 4);
    w32(model.cfg.dim_in);
    w32(model.cfg.dim_desc);
    w32(model.cfg.dim_knn);
    w32(model.cfg.heads);
    f.write(reinterpret_cast<const char*>(&model.cfg.leaky_slope), 8);
    w32(static_cast<int32_t>(model.cfg.g2));
    w32(static_cast<int32_t>(model.cfg.head_merge));
    w32(static_cast<int32_t>(model.tensors.size()));
    for (const auto& t : model.tensors) {
        w32(static_cast<int32_t>(t.rows()));
        w32(static_cast<int32_t>(t.cols()));
        f.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(sizeof(double) * t.size()));
    }
}

ScorerModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("load_checkpoint: cannot open " + path);
    uint32_t magic = 0, version = 0;
    auto r32 = [&] {
        int32_t v;
        f.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    f.read(reinterpret_cast<char*>(&magic), 4);
    f.read(reinterpret_cast<char*>(&version), 4);
    if (magic != 0x4D434B50 || version != 1)
        throw DataError("load_checkpoint: bad header in " + path);
    ScorerModel m;
    m.cfg.dim_in = r32();
    m.cfg.dim_desc = r32();
    m.cfg.dim_knn = r32();
    m.cfg.heads = r32();
    f.read(reinterpret_cast<char*>(&m.cfg.leaky_slope), 8);
    m.cfg.g2 = static_cast<G2Kind>(r32());
    m.cfg.head_merge = static_cast<HeadMerge>(r32());
    const int nt = r32();
    for (int i = 0; i < nt; ++i) {
        const int r = r32(), c = r32();
        Eigen::MatrixXd t(r, c);
        f.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(sizeof(double) * t.size()));
        m.tensors.push_back(std::move(t));
    }
    if (!f) throw DataError("load_checkpoint: truncated file " + path);
    return m;
}

// ---------------------------------------------------------------------------
// Forward / backward

struct Tape {
    const ScorerModel* model = nullptr;
    SubgraphBatch batch;  // owned copy (small index lists + feature matrix)
    bool consumed = false;

    Eigen::MatrixXd Z1;     // n_all x F, g1 pre-activation
    Eigen::MatrixXd Fdesc;  // n_all x F
    std::vector<Eigen::MatrixXd> U;  // per GAT head: n_all x F+

    struct CenterRec {
        std::vector<int> rows;               // neighbors ascending, then self
        std::vector<Eigen::VectorXd> elog;   // per head, raw logits
        std::vector<Eigen::VectorXd> alpha;  // per head
        Eigen::MatrixXd outs;                // F+ x H (GAT)
        Eigen::VectorXd m;                   // aggregated feature (graphconv / sage mean)
        Eigen::VectorXd knn_pre;             // pre-activation where g2 ends in LeakyReLU
        Eigen::VectorXd fknn;
        Eigen::VectorXd z1v, y1, z2v, y2;    // g3
        double z3 = 0.0, s = 0.0;
    };
    std::vector<CenterRec> centers;
};

namespace {

void g2_node_forward(const ScorerModel& model, const Eigen::MatrixXd& Fdesc,
                     const std::vector<Eigen::MatrixXd>& U, int self_row,
                     const std::vector<int>& nb_rows, const Eigen::VectorXi& degrees,
                     Tape::CenterRec& rec) {
    const auto& cfg = model.cfg;
    const int Fp = cfg.dim_knn;
    rec.rows = nb_rows;
    rec.rows.push_back(self_row);
    const int nj = static_cast<int>(rec.rows.size());

    switch (cfg.g2) {
        case G2Kind::GAT: {
            const int H = cfg.heads;
            rec.outs = Eigen::MatrixXd::Zero(Fp, H);
            rec.elog.resize(H);
            rec.alpha.resize(H);
            for (int h = 0; h < H; ++h) {
                const Eigen::MatrixXd& Uh = U[h];
                const auto& a = model.g2t(2 * h + 1);
                const Eigen::VectorXd a1 = a.col(0).head(Fp);
                const Eigen::VectorXd a2 = a.col(0).tail(Fp);
                const double gi = a1.dot(Uh.row(self_row));
                Eigen::VectorXd e(nj);
                for (int p = 0; p < nj; ++p)
                    e[p] = leaky(gi + a2.dot(Uh.row(rec.rows[p])), cfg.leaky_slope);
                rec.elog[h] = e;
                const double emax = e.maxCoeff();
                Eigen::VectorXd alpha = (e.array() - emax).exp();
                alpha /= alpha.sum();
                rec.alpha[h] = alpha;
                Eigen::VectorXd out = Eigen::VectorXd::Zero(Fp);
                for (int p = 0; p < nj; ++p) out += alpha[p] * Uh.row(rec.rows[p]).transpose();
                rec.outs.col(h) = out;
            }
            if (cfg.head_merge == HeadMerge::SUM) {
                rec.fknn = rec.outs.rowwise().sum();
            } else {
                rec.knn_pre = rec.outs.rowwise().sum() / double(cfg.heads);
                rec.fknn = leaky_vec(rec.knn_pre, cfg.leaky_slope);
            }
            break;
        }
        case G2Kind::GRAPHCONV: {
            const double di = degrees[self_row] + 1.0;
            Eigen::VectorXd m = Fdesc.row(self_row).transpose() / std::sqrt(di * di);
            for (int r : nb_rows)
                m += Fdesc.row(r).transpose() / std::sqrt(di * (degrees[r] + 1.0));
            rec.m = m;
            rec.knn_pre = model.g2t(0) * m;
            rec.fknn = leaky_vec(rec.knn_pre, cfg.leaky_slope);
            break;
        }
        case G2Kind::SAGE: {
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(Fdesc.cols());
            for (int r : nb_rows) mean += Fdesc.row(r).transpose();
            if (!nb_rows.empty()) mean /= double(nb_rows.size());
            rec.m = mean;
            rec.knn_pre = model.g2t(0) * Fdesc.row(self_row).transpose() + model.g2t(1) * mean;
            rec.fknn = leaky_vec(rec.knn_pre, cfg.leaky_slope);
            break;
        }
    }
}

}  // namespace

ForwardResult forward_batch(const ScorerModel& model, const SubgraphBatch& batch,
                            bool want_tape) {
    const auto& cfg = model.cfg;
    if (batch.desc_sums.cols() != cfg.dim_in)
        throw UsageError("forward_batch: model dim_in " + std::to_string(cfg.dim_in) +
                         " does not match graph descriptor dim " +
                         std::to_string(batch.desc_sums.cols()));

    auto tape = std::make_shared<Tape>();
    tape->model = &model;
    tape->batch = batch;

    const int n_all = static_cast<int>(batch.desc_sums.rows());
    const int F = cfg.dim_desc, Fp = cfg.dim_knn;

    // g1: per-point descriptor gathering (sums are precomputed per point).
    tape->Z1.resize(n_all, F);
    tape->Fdesc.resize(n_all, F);
    for (int r = 0; r < n_all; ++r) {
        Eigen::VectorXd z = model.W1() * batch.desc_sums.row(r).transpose() + model.b1().col(0);
        tape->Z1.row(r) = z;
        tape->Fdesc.row(r) = leaky_vec(z, cfg.leaky_slope);
    }

    if (cfg.g2 == G2Kind::GAT) {
        tape->U.resize(cfg.heads);
        for (int h = 0; h < cfg.heads; ++h) {
            tape->U[h].resize(n_all, Fp);
            for (int r = 0; r < n_all; ++r)
                tape->U[h].row(r) = model.g2t(2 * h) * tape->Fdesc.row(r).transpose();
        }
    }

    const int nc = static_cast<int>(batch.center_rows.size());
    ForwardResult res;
    res.scores.resize(nc);
    tape->centers.resize(nc);
    for (int c = 0; c < nc; ++c) {
        auto& rec = tape->centers[c];
        g2_node_forward(model, tape->Fdesc, tape->U, batch.center_rows[c], batch.nb_rows[c],
                        batch.degrees, rec);
        // g3: MLP + sigmoid
        rec.z1v = model.g3t(0) * rec.fknn + model.g3t(1).col(0);
        rec.y1 = leaky_vec(rec.z1v, cfg.leaky_slope);
        rec.z2v = model.g3t(2) * rec.y1 + model.g3t(3).col(0);
        rec.y2 = leaky_vec(rec.z2v, cfg.leaky_slope);
        rec.z3 = (model.g3t(4) * rec.y2)(0, 0) + model.g3t(5)(0, 0);
        rec.s = 1.0 / (1.0 + std::exp(-rec.z3));
        res.scores[c] = rec.s;
    }
    if (want_tape) res.tape = tape;
    return res;
}

void backward(Tape& tape, const Eigen::VectorXd& dscores, std::vector<Eigen::MatrixXd>& grads) {
    if (tape.consumed) throw UsageError("backward: tape already consumed");
    tape.consumed = true;
    const ScorerModel& model = *tape.model;
    const auto& cfg = model.cfg;
    const auto& batch = tape.batch;
    const int n_all = static_cast<int>(batch.desc_sums.rows());
    const int Fp = cfg.dim_knn;
    const int g2n = model.g2_param_count();
    const int g3o = 2 + g2n;

    Eigen::MatrixXd dFdesc = Eigen::MatrixXd::Zero(n_all, cfg.dim_desc);
    std::vector<Eigen::MatrixXd> dU;
    if (cfg.g2 == G2Kind::GAT)
        dU.assign(cfg.heads, Eigen::MatrixXd::Zero(n_all, Fp));

    const int nc = static_cast<int>(batch.center_rows.size());
    for (int c = 0; c < nc; ++c) {
        const auto& rec = tape.centers[c];
        const double ds = dscores[c];
        // sigmoid
        const double dz3 = ds * rec.s * (1.0 - rec.s);
        // g3 layer 3
        grads[g3o + 4] += dz3 * rec.y2.transpose();
        grads[g3o + 5](0, 0) += dz3;
        Eigen::VectorXd dy2 = model.g3t(4).transpose() * dz3;
        Eigen::VectorXd dz2 =
            dy2.array() * rec.z2v.unaryExpr([&](double v) { return leaky_grad(v, cfg.leaky_slope); }).array();
        grads[g3o + 2] += dz2 * rec.y1.transpose();
        grads[g3o + 3].col(0) += dz2;
        Eigen::VectorXd dy1 = model.g3t(2).transpose() * dz2;
        Eigen::VectorXd dz1 =
            dy1.array() * rec.z1v.unaryExpr([&](double v) { return leaky_grad(v, cfg.leaky_slope); }).array();
        grads[g3o + 0] += dz1 * rec.fknn.transpose();
        grads[g3o + 1].col(0) += dz1;
        Eigen::VectorXd dfknn = model.g3t(0).transpose() * dz1;

        const int self_row = batch.center_rows[c];
        const int nj = static_cast<int>(rec.rows.size());
        switch (cfg.g2) {
            case G2Kind::GAT: {
                Eigen::MatrixXd douts(Fp, cfg.heads);
                if (cfg.head_merge == HeadMerge::SUM) {
                    for (int h = 0; h < cfg.heads; ++h) douts.col(h) = dfknn;
                } else {
                    Eigen::VectorXd dpre = dfknn.array() *
                        rec.knn_pre.unaryExpr([&](double v) { return leaky_grad(v, cfg.leaky_slope); }).array();
                    for (int h = 0; h < cfg.heads; ++h) douts.col(h) = dpre / double(cfg.heads);
                }
                for (int h = 0; h < cfg.heads; ++h) {
                    const Eigen::MatrixXd& Uh = tape.U[h];
                    const auto& a = model.g2t(2 * h + 1);
                    const Eigen::VectorXd a1 = a.col(0).head(Fp);
                    const Eigen::VectorXd a2 = a.col(0).tail(Fp);
                    const Eigen::VectorXd& alpha = rec.alpha[h];
                    const Eigen::VectorXd dout = douts.col(h);

                    Eigen::VectorXd dalpha(nj);
                    for (int p = 0; p < nj; ++p) dalpha[p] = dout.dot(Uh.row(rec.rows[p]));
                    for (int p = 0; p < nj; ++p)
                        dU[h].row(rec.rows[p]) += alpha[p] * dout.transpose();

                    const double mix = alpha.dot(dalpha);
                    Eigen::VectorXd de = alpha.array() * (dalpha.array() - mix);
                    // elog holds post-activation logits; LeakyReLU preserves
                    // sign, so the gradient branch can be read off them.
                    Eigen::VectorXd dpre(nj);
                    for (int p = 0; p < nj; ++p)
                        dpre[p] = de[p] * leaky_grad(rec.elog[h][p], cfg.leaky_slope);
                    const double dsum = dpre.sum();
                    // gi = a1 . U_self; gj = a2 . U_j
                    grads[2 + 2 * h + 1].col(0).head(Fp) += dsum * Uh.row(self_row).transpose();
                    dU[h].row(self_row) += dsum * a1.transpose();
                    for (int p = 0; p < nj; ++p) {
                        grads[2 + 2 * h + 1].col(0).tail(Fp) +=
                            dpre[p] * Uh.row(rec.rows[p]).transpose();
                        dU[h].row(rec.rows[p]) += dpre[p] * a2.transpose();
                    }
                }
                break;
            }
            case G2Kind::GRAPHCONV: {
                Eigen::VectorXd dpre = dfknn.array() *
                    rec.knn_pre.unaryExpr([&](double v) { return leaky_grad(v, cfg.leaky_slope); }).array();
                grads[2] += dpre * rec.m.transpose();
                Eigen::VectorXd dm = model.g2t(0).transpose() * dpre;
                const double di = batch.degrees[self_row] + 1.0;
                dFdesc.row(self_row) += dm.transpose() / std::sqrt(di * di);
                for (int r : batch.nb_rows[c])
                    dFdesc.row(r) += dm.transpose() / std::sqrt(di * (batch.degrees[r] + 1.0));
                break;
            }
            case G2Kind::SAGE: {
                Eigen::VectorXd dpre = dfknn.array() *
                    rec.knn_pre.unaryExpr([&](double v) { return leaky_grad(v, cfg.leaky_slope); }).array();
                grads[2] += dpre * tape.Fdesc.row(self_row);
                grads[3] += dpre * rec.m.transpose();
                dFdesc.row(self_row) += (model.g2t(0).transpose() * dpre).transpose();
                const auto& nbs = batch.nb_rows[c];
                if (!nbs.empty()) {
                    Eigen::VectorXd dmean = model.g2t(1).transpose() * dpre / double(nbs.size());
                    for (int r : nbs) dFdesc.row(r) += dmean.transpose();
                }
                break;
            }
        }
        (void)nj;
    }

    if (cfg.g2 == G2Kind::GAT) {
        for (int h = 0; h < cfg.heads; ++h) {
            for (int r = 0; r < n_all; ++r) {
                grads[2 + 2 * h] += dU[h].row(r).transpose() * tape.Fdesc.row(r);
                dFdesc.row(r) += dU[h].row(r) * model.g2t(2 * h);
            }
        }
    }

    // g1 backward
    for (int r = 0; r < n_all; ++r) {
        Eigen::VectorXd dz = dFdesc.row(r).transpose().array() *
            tape.Z1.row(r).transpose().unaryExpr([&](double v) { return leaky_grad(v, cfg.leaky_slope); }).array();
        grads[0] += dz * batch.desc_sums.row(r);
        grads[1].col(0) += dz;
    }
}

// ---------------------------------------------------------------------------
// Batch assembly

SubgraphBatch make_batch(const MapGraph& graph, const Subgraph& sub) {
    SubgraphBatch b;
    b.all_point_ids = sub.all_points;
    const int n_all = static_cast<int>(b.all_point_ids.size());
    b.desc_sums.resize(n_all, graph.descriptor_dim);
    std::unordered_map<int, int> row_of;
    row_of.reserve(n_all);
    for (int r = 0; r < n_all; ++r) {
        b.desc_sums.row(r) = graph.desc_sum.row(b.all_point_ids[r]);
        row_of[b.all_point_ids[r]] = r;
    }
    const int deg = std::min<int>(graph.knn_k, static_cast<int>(graph.points.size()) - 1);
    b.degrees = Eigen::VectorXi::Constant(n_all, deg);
    for (int id : sub.center_points) {
        if (graph.point_kpts_map[id].empty()) {
            b.excluded_point_ids.push_back(id);
            continue;
        }
        b.center_rows.push_back(row_of.at(id));
        b.center_point_ids.push_back(id);
        std::vector<int> nbs;
        for (int j : graph.point_knn_src[id]) nbs.push_back(row_of.at(j));
        b.nb_rows.push_back(std::move(nbs));
    }
    return b;
}

SubgraphBatch make_full_batch(const MapGraph& graph) {
    SubgraphBatch b;
    const int np = static_cast<int>(graph.points.size());
    b.all_point_ids.resize(np);
    for (int i = 0; i < np; ++i) b.all_point_ids[i] = i;
    b.desc_sums = graph.desc_sum;
    const int deg = std::min<int>(graph.knn_k, np - 1);
    b.degrees = Eigen::VectorXi::Constant(np, deg);
    for (int i = 0; i < np; ++i) {
        if (graph.point_kpts_map[i].empty()) {
            b.excluded_point_ids.push_back(i);
            continue;
        }
        b.center_rows.push_back(i);
        b.center_point_ids.push_back(i);
        b.nb_rows.push_back(graph.point_knn_src[i]);
    }
    return b;
}

Eigen::VectorXd predict_scores(const ScorerModel& model, const MapGraph& graph,
                               const Subgraph& sub) {
    return forward_batch(model, make_batch(graph, sub), false).scores;
}

Eigen::VectorXd predict_scores_full(const ScorerModel& model, const MapGraph& graph) {
    SubgraphBatch b = make_full_batch(graph);
    ForwardResult r = forward_batch(model, b, false);
    Eigen::VectorXd scores = Eigen::VectorXd::Zero(graph.points.size());
    for (size_t c = 0; c < b.center_point_ids.size(); ++c)
        scores[b.center_point_ids[c]] = r.scores[c];
    return scores;
}

// ---------------------------------------------------------------------------
// Layer-level test entry points

Eigen::MatrixXd g1_forward(const ScorerModel& model, const Eigen::MatrixXd& desc_sums) {
    const int n = static_cast<int>(desc_sums.rows());
    Eigen::MatrixXd out(n, model.cfg.dim_desc);
    for (int r = 0; r < n; ++r) {
        Eigen::VectorXd z = model.W1() * desc_sums.row(r).transpose() + model.b1().col(0);
        out.row(r) = leaky_vec(z, model.cfg.leaky_slope);
    }
    return out;
}

namespace {

Tape::CenterRec g2_node_with_feats(const ScorerModel& model, const Eigen::MatrixXd& feats,
                                   int self_row, const std::vector<int>& nb_rows,
                                   const Eigen::VectorXi& degrees) {
    std::vector<Eigen::MatrixXd> U;
    if (model.cfg.g2 == G2Kind::GAT) {
        U.resize(model.cfg.heads);
        for (int h = 0; h < model.cfg.heads; ++h) {
            U[h].resize(feats.rows(), model.cfg.dim_knn);
            for (int r = 0; r < feats.rows(); ++r)
                U[h].row(r) = model.g2t(2 * h) * feats.row(r).transpose();
        }
    }
    Tape::CenterRec rec;
    g2_node_forward(model, feats, U, self_row, nb_rows, degrees, rec);
    return rec;
}

}  // namespace

Eigen::VectorXd gat_forward_node(const ScorerModel& model, const Eigen::MatrixXd& feats,
                                 int self_row, const std::vector<int>& nb_rows) {
    Eigen::VectorXi deg = Eigen::VectorXi::Zero(feats.rows());
    return g2_node_with_feats(model, feats, self_row, nb_rows, deg).fknn;
}

Eigen::VectorXd graphconv_forward_node(const ScorerModel& model, const Eigen::MatrixXd& feats,
                                       int self_row, const std::vector<int>& nb_rows,
                                       const Eigen::VectorXi& degrees) {
    return g2_node_with_feats(model, feats, self_row, nb_rows, degrees).fknn;
}

Eigen::VectorXd sageconv_forward_node(const ScorerModel& model, const Eigen::MatrixXd& feats,
                                      int self_row, const std::vector<int>& nb_rows) {
    Eigen::VectorXi deg = Eigen::VectorXi::Zero(feats.rows());
    return g2_node_with_feats(model, feats, self_row, nb_rows, deg).fknn;
}

Eigen::MatrixXd gat_attention_weights(const ScorerModel& model, const Eigen::MatrixXd& feats,
                                      int self_row, const std::vector<int>& nb_rows) {
    Eigen::VectorXi deg = Eigen::VectorXi::Zero(feats.rows());
    auto rec = g2_node_with_feats(model, feats, self_row, nb_rows, deg);
    Eigen::MatrixXd A(rec.alpha.size(), rec.rows.size());
    for (size_t h = 0; h < rec.alpha.size(); ++h) A.row(h) = rec.alpha[h];
    return A;
}

}  // namespace mapcull
