#include "scene_embed/embedding.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "scene_embed/util.hpp"

namespace scene_embed {

std::string role_tag(Role r) { return r == Role::object ? "object" : "scene"; }

Role role_from_tag(const std::string& tag) {
    if (tag == "object") return Role::object;
    if (tag == "scene") return Role::scene;
    throw Error("unknown role '" + tag + "'");
}

void write_embeddings_tsv(const EmbeddingMatrix& e, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "#role=" << role_tag(e.role) << " d=" << e.d << " model=" << e.model << "\n";
    char buf[32];
    for (int i = 0; i < e.rows; ++i) {
        out << e.tokens[static_cast<std::size_t>(i)];
        const double* r = e.row(i);
        for (int k = 0; k < e.d; ++k) {
            std::snprintf(buf, sizeof(buf), "%.8e", r[k]);
            out << "\t" << buf;
        }
        out << "\n";
    }
    if (!out) throw Error("failed writing " + path);
}

EmbeddingMatrix read_embeddings_tsv(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw Error(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("#role=", 0) != 0) throw Error(path + ": missing #role header");
    EmbeddingMatrix e;
    e.d = -1;
    for (const std::string& field : split(line.substr(1), ' ')) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw Error(path + ": malformed header field '" + field + "'");
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "role") {
            e.role = role_from_tag(value);
        } else if (key == "d") {
            e.d = std::stoi(value);
        } else if (key == "model") {
            e.model = value;
        }
    }
    if (e.d <= 0) throw Error(path + ": header lacks a positive d");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split(line, '\t');
        if (static_cast<int>(cells.size()) != e.d + 1) {
            throw Error(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(e.d + 1) + " cells, got " + std::to_string(cells.size()));
        }
        e.tokens.push_back(cells[0]);
        for (int k = 1; k <= e.d; ++k) {
            double v = 0.0;
            try {
                v = std::stod(cells[static_cast<std::size_t>(k)]);
            } catch (const std::exception&) {
                throw Error(path + ":" + std::to_string(lineno) + ": bad number '" +
                            cells[static_cast<std::size_t>(k)] + "'");
            }
            if (!std::isfinite(v)) {
                throw Error(path + ":" + std::to_string(lineno) + ": non-finite entry");
            }
            e.values.push_back(v);
        }
    }
    e.rows = static_cast<int>(e.tokens.size());
    return e;
}

}  // namespace scene_embed
