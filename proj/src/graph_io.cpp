#include "mapcull/graph_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mapcull {

namespace {

using json = nlohmann::json;

void fmt_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

void fmt_vec(std::string& out, const double* v, int n) {
    out += '[';
    for (int i = 0; i < n; ++i) {
        if (i) out += ',';
        fmt_double(out, v[i]);
    }
    out += ']';
}

void fmt_edges(std::string& out, const char* name, const std::vector<Edge>& edges) {
    out += '"';
    out += name;
    out += "\":[";
    for (size_t i = 0; i < edges.size(); ++i) {
        if (i) out += ',';
        out += '[' + std::to_string(edges[i].first) + ',' + std::to_string(edges[i].second) + ']';
    }
    out += ']';
}

Eigen::VectorXd to_vecx(const json& a) {
    Eigen::VectorXd v(a.size());
    for (size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
    return v;
}

}  // namespace

void save_graph(const MapGraph& graph, const std::string& path) {
    std::string out;
    out.reserve(1 << 20);
    out += "{\n\"points\":[";
    for (size_t i = 0; i < graph.points.size(); ++i) {
        const auto& p = graph.points[i];
        if (i) out += ',';
        out += "\n{\"id\":" + std::to_string(p.id) + ",\"position\":";
        fmt_vec(out, p.position.data(), 3);
        out += ",\"label_gt\":";
        out += p.label_gt ? std::to_string(*p.label_gt) : "null";
        out += ",\"score\":";
        if (p.score) fmt_double(out, *p.score); else out += "null";
        out += ",\"obs_count_map\":" + std::to_string(p.obs_count_map);
        out += ",\"obs_count_query\":" + std::to_string(p.obs_count_query) + "}";
    }
    out += "],\n\"keypoints\":[";
    for (size_t i = 0; i < graph.keypoints.size(); ++i) {
        const auto& k = graph.keypoints[i];
        if (i) out += ',';
        out += "\n{\"id\":" + std::to_string(k.id) + ",\"descriptor\":";
        fmt_vec(out, k.descriptor.data(), static_cast<int>(k.descriptor.size()));
        out += ",\"pixel\":";
        fmt_vec(out, k.pixel.data(), 2);
        out += ",\"origin\":\"";
        out += to_string(k.origin);
        out += "\"}";
    }
    out += "],\n\"images\":[";
    for (size_t i = 0; i < graph.images.size(); ++i) {
        const auto& m = graph.images[i];
        if (i) out += ',';
        out += "\n{\"id\":" + std::to_string(m.id) + ",\"rotation\":";
        double r[9];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) r[a * 3 + b] = m.pose.R(a, b);
        fmt_vec(out, r, 9);
        out += ",\"translation\":";
        fmt_vec(out, m.pose.t.data(), 3);
        out += ",\"intrinsics\":{\"fx\":";
        fmt_double(out, m.intrinsics.fx);
        out += ",\"fy\":";
        fmt_double(out, m.intrinsics.fy);
        out += ",\"cx\":";
        fmt_double(out, m.intrinsics.cx);
        out += ",\"cy\":";
        fmt_double(out, m.intrinsics.cy);
        out += ",\"width\":" + std::to_string(m.intrinsics.width);
        out += ",\"height\":" + std::to_string(m.intrinsics.height);
        out += "},\"session\":" + std::to_string(m.session);
        out += ",\"camera_id\":" + std::to_string(m.camera_id);
        out += ",\"origin\":\"";
        out += to_string(m.origin);
        out += "\",\"split\":\"";
        out += to_string(m.split);
        out += "\"}";
    }
    out += "],\n";
    fmt_edges(out, "edges_v", graph.edges_v);
    out += ",\n";
    fmt_edges(out, "edges_n", graph.edges_n);
    out += ",\n";
    fmt_edges(out, "edges_c", graph.edges_c);
    out += "\n}\n";

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("save_graph: cannot open " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));

    std::ofstream meta(path + ".meta", std::ios::binary);
    if (!meta) throw DataError("save_graph: cannot open " + path + ".meta");
    meta << "{\"descriptor_dim\":" << graph.descriptor_dim << ",\"knn_k\":" << graph.knn_k
         << ",\"seed\":" << graph.seed << "}\n";
}

MapGraph load_graph(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("load_graph: cannot open " + path);
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::parse_error& e) {
        throw DataError("load_graph: parse error in " + path + ": " + e.what());
    }

    MapGraph g;
    std::ifstream mf(path + ".meta", std::ios::binary);
    if (mf) {
        json meta = json::parse(mf);
        g.descriptor_dim = meta.at("descriptor_dim").get<int>();
        g.knn_k = meta.at("knn_k").get<int>();
        g.seed = meta.at("seed").get<uint64_t>();
    }

    try {
        for (const auto& jp : doc.at("points")) {
            PointNode p;
            p.id = jp.at("id").get<int>();
            p.position = to_vecx(jp.at("position"));
            if (!jp.at("label_gt").is_null()) p.label_gt = jp.at("label_gt").get<int>();
            if (!jp.at("score").is_null()) p.score = jp.at("score").get<double>();
            p.obs_count_map = jp.at("obs_count_map").get<int>();
            p.obs_count_query = jp.at("obs_count_query").get<int>();
            g.points.push_back(std::move(p));
        }
        for (const auto& jk : doc.at("keypoints")) {
            KeyPointNode k;
            k.id = jk.at("id").get<int>();
            k.descriptor = to_vecx(jk.at("descriptor"));
            k.pixel = to_vecx(jk.at("pixel"));
            k.origin = origin_from_string(jk.at("origin").get<std::string>());
            if (g.descriptor_dim == 0) g.descriptor_dim = static_cast<int>(k.descriptor.size());
            g.keypoints.push_back(std::move(k));
        }
        for (const auto& jm : doc.at("images")) {
            ImageNode m;
            m.id = jm.at("id").get<int>();
            const auto& r = jm.at("rotation");
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) m.pose.R(a, b) = r[a * 3 + b].get<double>();
            m.pose.t = to_vecx(jm.at("translation"));
            const auto& in = jm.at("intrinsics");
            m.intrinsics = {in.at("fx").get<double>(), in.at("fy").get<double>(),
                            in.at("cx").get<double>(), in.at("cy").get<double>(),
                            in.at("width").get<int>(), in.at("height").get<int>()};
            m.session = jm.at("session").get<int>();
            m.camera_id = jm.at("camera_id").get<int>();
            m.origin = origin_from_string(jm.at("origin").get<std::string>());
            m.split = split_from_string(jm.at("split").get<std::string>());
            g.images.push_back(std::move(m));
        }
        auto read_edges = [&doc](const char* name) {
            std::vector<Edge> e;
            for (const auto& je : doc.at(name))
                e.emplace_back(je[0].get<int>(), je[1].get<int>());
            return e;
        };
        g.edges_v = read_edges("edges_v");
        g.edges_n = read_edges("edges_n");
        g.edges_c = read_edges("edges_c");
    } catch (const json::exception& e) {
        throw DataError("load_graph: schema error in " + path + ": " + e.what());
    }

    g.validate();  // schema / referential errors surface here
    g.finalize();
    return g;
}

}  // namespace mapcull
