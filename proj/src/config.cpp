#include "mapcull/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mapcull {

namespace {

long long parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long long r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw UsageError("config: bad integer for " + key + ": '" + v + "'");
    }
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw UsageError("config: bad number for " + key + ": '" + v + "'");
    }
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
    using Setter = std::function<void(PipelineConfig&, const std::string&)>;
#define INT_KEY(name, field) \
    {name, [](PipelineConfig& c, const std::string& v) { c.field = static_cast<int>(parse_int(name, v)); }}
#define REAL_KEY(name, field) \
    {name, [](PipelineConfig& c, const std::string& v) { c.field = parse_real(name, v); }}
#define STR_KEY(name, field) \
    {name, [](PipelineConfig& c, const std::string& v) { c.field = v; }}
    static const std::map<std::string, Setter> setters = {
        INT_KEY("points", world.num_points),
        REAL_KEY("seasonal_fraction", world.seasonal_fraction),
        REAL_KEY("repetitive_fraction", world.repetitive_fraction),
        REAL_KEY("seasonal_change_prob", world.seasonal_change_prob),
        INT_KEY("map_sessions", world.map_sessions),
        INT_KEY("query_sessions", world.query_sessions),
        INT_KEY("images_per_session", world.images_per_session),
        INT_KEY("descriptor_dim", world.descriptor_dim),
        INT_KEY("class_prototypes", world.class_prototypes),
        INT_KEY("repetitive_clusters", world.repetitive_clusters),
        REAL_KEY("prototype_radius", world.prototype_radius),
        REAL_KEY("point_desc_spread", world.point_desc_spread),
        REAL_KEY("repetitive_spread", world.repetitive_spread),
        REAL_KEY("obs_desc_noise", world.obs_desc_noise),
        REAL_KEY("pixel_noise", world.pixel_noise),
        REAL_KEY("detection_prob", world.detection_prob),
        REAL_KEY("match_tau", world.match_tau),
        REAL_KEY("road_length", world.road_length),
        REAL_KEY("lateral_min", world.lateral_min),
        REAL_KEY("lateral_max", world.lateral_max),
        REAL_KEY("height_max", world.height_max),
        REAL_KEY("camera_height", world.camera_height),
        REAL_KEY("min_depth", world.min_depth),
        REAL_KEY("max_depth", world.max_depth),
        INT_KEY("valid_every", world.valid_every),
        REAL_KEY("fx", world.intrinsics.fx),
        REAL_KEY("fy", world.intrinsics.fy),
        REAL_KEY("cx", world.intrinsics.cx),
        REAL_KEY("cy", world.intrinsics.cy),
        INT_KEY("width", world.intrinsics.width),
        INT_KEY("height", world.intrinsics.height),
        INT_KEY("knn_k", knn_k),
        INT_KEY("cover_b", cover_b),
        INT_KEY("cover_n", cover_n),
        INT_KEY("exact_cap", exact_cap),
        REAL_KEY("slack_penalty", slack_penalty),
        INT_KEY("dim_desc", dim_desc),
        INT_KEY("dim_knn", dim_knn),
        INT_KEY("heads", heads),
        STR_KEY("g2", g2),
        STR_KEY("head_merge", head_merge),
        REAL_KEY("leaky_slope", leaky_slope),
        INT_KEY("epochs", epochs),
        REAL_KEY("lr", lr),
        REAL_KEY("beta1", beta1),
        REAL_KEY("beta2", beta2),
        REAL_KEY("weight_decay", weight_decay),
        INT_KEY("loss_k", loss_k),
        REAL_KEY("loss_lambda", loss_lambda),
        STR_KEY("loss", loss),
        INT_KEY("validation_budget", validation_budget),
        REAL_KEY("score_threshold", score_threshold),
        INT_KEY("budget", budget),
        {"seed",
         [](PipelineConfig& c, const std::string& v) {
             c.seed = static_cast<uint64_t>(parse_int("seed", v));
         }},
    };
#undef INT_KEY
#undef REAL_KEY
#undef STR_KEY
    auto it = setters.find(key);
    if (it == setters.end()) throw UsageError("config: unknown key '" + key + "'");
    it->second(*this, value);
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("config: cannot open " + path);
    PipelineConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw UsageError("config: line " + std::to_string(lineno) + " is not key=value");
        cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

ScorerConfig PipelineConfig::scorer_config() const {
    ScorerConfig sc;
    sc.dim_in = world.descriptor_dim;
    sc.dim_desc = dim_desc;
    sc.dim_knn = dim_knn;
    sc.heads = heads;
    sc.leaky_slope = leaky_slope;
    sc.g2 = g2_from_string(g2);
    if (head_merge == "sum")
        sc.head_merge = HeadMerge::SUM;
    else if (head_merge == "mean")
        sc.head_merge = HeadMerge::MEAN;
    else
        throw UsageError("config: head_merge must be sum or mean");
    return sc;
}

LossConfig PipelineConfig::loss_config() const {
    LossConfig lc;
    lc.K = loss_k;
    lc.lambda_l1 = loss_lambda;
    if (loss == "both") {
        lc.use_bce = lc.use_kc = true;
    } else if (loss == "bce") {
        lc.use_bce = true;
        lc.use_kc = false;
    } else if (loss == "kc") {
        lc.use_bce = false;
        lc.use_kc = true;
    } else {
        throw UsageError("config: loss must be both, bce or kc");
    }
    return lc;
}

OptimConfig PipelineConfig::optim_config() const {
    OptimConfig oc;
    oc.lr = lr;
    oc.beta1 = beta1;
    oc.beta2 = beta2;
    oc.weight_decay = weight_decay;
    return oc;
}

std::string PipelineConfig::canonical() const {
    std::ostringstream o;
    o << "points=" << world.num_points << "\n"
      << "seasonal_fraction=" << fmt(world.seasonal_fraction) << "\n"
      << "repetitive_fraction=" << fmt(world.repetitive_fraction) << "\n"
      << "seasonal_change_prob=" << fmt(world.seasonal_change_prob) << "\n"
      << "map_sessions=" << world.map_sessions << "\n"
      << "query_sessions=" << world.query_sessions << "\n"
      << "images_per_session=" << world.images_per_session << "\n"
      << "descriptor_dim=" << world.descriptor_dim << "\n"
      << "class_prototypes=" << world.class_prototypes << "\n"
      << "repetitive_clusters=" << world.repetitive_clusters << "\n"
      << "prototype_radius=" << fmt(world.prototype_radius) << "\n"
      << "point_desc_spread=" << fmt(world.point_desc_spread) << "\n"
      << "repetitive_spread=" << fmt(world.repetitive_spread) << "\n"
      << "obs_desc_noise=" << fmt(world.obs_desc_noise) << "\n"
      << "pixel_noise=" << fmt(world.pixel_noise) << "\n"
      << "detection_prob=" << fmt(world.detection_prob) << "\n"
      << "match_tau=" << fmt(world.match_tau) << "\n"
      << "road_length=" << fmt(world.road_length) << "\n"
      << "lateral_min=" << fmt(world.lateral_min) << "\n"
      << "lateral_max=" << fmt(world.lateral_max) << "\n"
      << "height_max=" << fmt(world.height_max) << "\n"
      << "camera_height=" << fmt(world.camera_height) << "\n"
      << "min_depth=" << fmt(world.min_depth) << "\n"
      << "max_depth=" << fmt(world.max_depth) << "\n"
      << "valid_every=" << world.valid_every << "\n"
      << "fx=" << fmt(world.intrinsics.fx) << "\n"
      << "fy=" << fmt(world.intrinsics.fy) << "\n"
      << "cx=" << fmt(world.intrinsics.cx) << "\n"
      << "cy=" << fmt(world.intrinsics.cy) << "\n"
      << "width=" << world.intrinsics.width << "\n"
      << "height=" << world.intrinsics.height << "\n"
      << "knn_k=" << knn_k << "\n"
      << "cover_b=" << cover_b << "\n"
      << "cover_n=" << cover_n << "\n"
      << "exact_cap=" << exact_cap << "\n"
      << "slack_penalty=" << fmt(slack_penalty) << "\n"
      << "dim_desc=" << dim_desc << "\n"
      << "dim_knn=" << dim_knn << "\n"
      << "heads=" << heads << "\n"
      << "g2=" << g2 << "\n"
      << "head_merge=" << head_merge << "\n"
      << "leaky_slope=" << fmt(leaky_slope) << "\n"
      << "epochs=" << epochs << "\n"
      << "lr=" << fmt(lr) << "\n"
      << "beta1=" << fmt(beta1) << "\n"
      << "beta2=" << fmt(beta2) << "\n"
      << "weight_decay=" << fmt(weight_decay) << "\n"
      << "loss_k=" << loss_k << "\n"
      << "loss_lambda=" << fmt(loss_lambda) << "\n"
      << "loss=" << loss << "\n"
      << "validation_budget=" << validation_budget << "\n"
      << "score_threshold=" << fmt(score_threshold) << "\n"
      << "budget=" << budget << "\n"
      << "seed=" << seed << "\n";
    return o.str();
}

uint64_t PipelineConfig::hash() const {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string PipelineConfig::hash_hex() const {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

}  // namespace mapcull
