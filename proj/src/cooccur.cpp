#include "scene_embed/cooccur.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "scene_embed/util.hpp"

namespace scene_embed {

std::string normalization_tag(Normalization n) {
    switch (n) {
        case Normalization::raw: return "raw";
        case Normalization::norm: return "norm";
        case Normalization::log: return "log";
        case Normalization::tfidf: return "tfidf";
    }
    throw Error("unknown normalization");
}

Normalization normalization_from_tag(const std::string& tag) {
    if (tag == "raw") return Normalization::raw;
    if (tag == "norm") return Normalization::norm;
    if (tag == "log") return Normalization::log;
    if (tag == "tfidf") return Normalization::tfidf;
    throw Error("unknown normalization '" + tag + "'");
}

namespace {

CooccurrenceMatrix empty_matrix(const Corpus& c) {
    CooccurrenceMatrix x;
    x.n_rows = c.objects.size();
    x.n_cols = c.scenes.size();
    x.values.assign(static_cast<std::size_t>(x.n_rows) * static_cast<std::size_t>(x.n_cols), 0.0);
    x.row_labels = c.objects.texts();
    x.col_labels = c.scenes.texts();
    return x;
}

}  // namespace

namespace serial {

CooccurrenceMatrix build_matrix(const Corpus& c) {
    CooccurrenceMatrix x = empty_matrix(c);
    for (const auto& img : c.images) {
        for (int o : img.distinct_objects()) x.at(o, img.scene) += 1.0;
    }
    return x;
}

}  // namespace serial

CooccurrenceMatrix build_matrix(const Corpus& c, int threads) {
    CooccurrenceMatrix x = empty_matrix(c);
    const auto n_images = static_cast<std::int64_t>(c.images.size());
    // Each thread accumulates the images of a disjoint scene subset, so every
    // matrix column has a single writer and the result matches the serial
    // kernel bitwise.
    std::vector<std::vector<std::int64_t>> by_scene(static_cast<std::size_t>(x.n_cols));
    for (std::int64_t i = 0; i < n_images; ++i) {
        by_scene[static_cast<std::size_t>(c.images[static_cast<std::size_t>(i)].scene)].push_back(i);
    }
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads > 0 ? threads : omp_get_max_threads())
    for (int s = 0; s < x.n_cols; ++s) {
        for (std::int64_t i : by_scene[static_cast<std::size_t>(s)]) {
            for (int o : c.images[static_cast<std::size_t>(i)].distinct_objects()) {
                x.at(o, s) += 1.0;
            }
        }
    }
    return x;
}

CooccurrenceMatrix normalize(const CooccurrenceMatrix& x, Normalization method,
                             const NormalizeOptions& opt) {
    if (x.normalization != Normalization::raw) {
        throw Error("normalize expects a raw matrix, got " + normalization_tag(x.normalization));
    }
    if (method == Normalization::raw) throw Error("normalize: method must not be raw");
    CooccurrenceMatrix out = x;
    out.normalization = method;
    switch (method) {
        case Normalization::norm: {
            for (int j = 0; j < x.n_cols; ++j) {
                double sum = 0.0;
                for (int i = 0; i < x.n_rows; ++i) sum += x.at(i, j);
                if (sum == 0.0) {
                    std::cerr << "warning: column '" << x.col_labels[static_cast<std::size_t>(j)]
                              << "' is all zeros, left unnormalized\n";
                    continue;
                }
                for (int i = 0; i < x.n_rows; ++i) out.at(i, j) = x.at(i, j) / sum;
            }
            break;
        }
        case Normalization::log: {
            for (double& v : out.values) v = std::log1p(v);
            break;
        }
        case Normalization::tfidf: {
            for (int i = 0; i < x.n_rows; ++i) {
                int df = 0;
                for (int j = 0; j < x.n_cols; ++j) {
                    if (x.at(i, j) > 0.0) ++df;
                }
                if (df == 0) continue;  // row stays zero
                const double ratio = static_cast<double>(x.n_cols) / static_cast<double>(df);
                const double idf = opt.idf_log ? std::log(ratio) : ratio;
                for (int j = 0; j < x.n_cols; ++j) out.at(i, j) = x.at(i, j) * idf;
            }
            break;
        }
        default: break;
    }
    return out;
}

void write_matrix_tsv(const CooccurrenceMatrix& x, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "# norm=" << normalization_tag(x.normalization) << "\n";
    for (int j = 0; j < x.n_cols; ++j) out << "\t" << x.col_labels[static_cast<std::size_t>(j)];
    out << "\n";
    char buf[64];
    for (int i = 0; i < x.n_rows; ++i) {
        out << x.row_labels[static_cast<std::size_t>(i)];
        for (int j = 0; j < x.n_cols; ++j) {
            std::snprintf(buf, sizeof(buf), "%.10g", x.at(i, j));
            out << "\t" << buf;
        }
        out << "\n";
    }
    if (!out) throw Error("failed writing " + path);
}

CooccurrenceMatrix read_matrix_tsv(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    CooccurrenceMatrix x;
    int lineno = 0;
    bool have_header = false;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string where = path + ":" + std::to_string(lineno);
        if (line.rfind("# norm=", 0) == 0) {
            x.normalization = normalization_from_tag(trim(line.substr(7)));
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> cells = split(line, '\t');
        if (!have_header) {
            if (!cells[0].empty()) throw Error(where + ": header must start with an empty cell");
            x.col_labels.assign(cells.begin() + 1, cells.end());
            x.n_cols = static_cast<int>(x.col_labels.size());
            have_header = true;
            continue;
        }
        if (static_cast<int>(cells.size()) != x.n_cols + 1) {
            throw Error(where + ": expected " + std::to_string(x.n_cols + 1) + " cells, got " +
                        std::to_string(cells.size()));
        }
        x.row_labels.push_back(cells[0]);
        for (int j = 1; j <= x.n_cols; ++j) {
            try {
                values.push_back(std::stod(cells[static_cast<std::size_t>(j)]));
            } catch (const std::exception&) {
                throw Error(where + ": bad number '" + cells[static_cast<std::size_t>(j)] + "'");
            }
        }
    }
    if (!have_header) throw Error(path + ": missing header row");
    x.n_rows = static_cast<int>(x.row_labels.size());
    x.values = std::move(values);
    return x;
}

}  // namespace scene_embed
