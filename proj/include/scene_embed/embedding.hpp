#pragma once

#include <string>
#include <vector>

namespace scene_embed {

enum class Role { object, scene };

std::string role_tag(Role r);
Role role_from_tag(const std::string& tag);

struct EmbeddingMatrix {
    int rows = 0;
    int d = 0;
    std::vector<double> values;  // row-major rows * d
    std::vector<std::string> tokens;
    Role role = Role::object;
    std::string model;  // e.g. "lsa-norm", "skipgram", "cbow", "spatial"

    double* row(int i) { return values.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(d); }
    const double* row(int i) const {
        return values.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(d);
    }
};

// TSV: header line `#role=<role> d=<d> model=<tag>`, then one row per token:
// token text followed by d entries formatted %.8e.
void write_embeddings_tsv(const EmbeddingMatrix& e, const std::string& path);
EmbeddingMatrix read_embeddings_tsv(const std::string& path);

}  // namespace scene_embed
