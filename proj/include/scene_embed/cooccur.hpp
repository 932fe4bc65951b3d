#pragma once

#include <string>
#include <vector>

#include "scene_embed/corpus.hpp"

namespace scene_embed {

enum class Normalization { raw, norm, log, tfidf };

std::string normalization_tag(Normalization n);
Normalization normalization_from_tag(const std::string& tag);

/// n_objects x n_scene-categories occurrence matrix. Row/column order follows
/// the corpus vocab ids; entry (i,j) of the raw matrix counts images of scene
/// j that contain object i at least once.
struct CooccurrenceMatrix {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<double> values;  // row-major n_rows * n_cols
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    Normalization normalization = Normalization::raw;

    double& at(int i, int j) {
        return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_cols) +
                      static_cast<std::size_t>(j)];
    }
    double at(int i, int j) const {
        return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_cols) +
                      static_cast<std::size_t>(j)];
    }
};

CooccurrenceMatrix build_matrix(const Corpus& c, int threads = 0);

namespace serial {
CooccurrenceMatrix build_matrix(const Corpus& c);
}

struct NormalizeOptions {
    // The tfidf idf is m / df(o) as printed in the source formula; the
    // conventional log(m / df(o)) is available behind this switch.
    bool idf_log = false;
};

/// `norm` divides each column by its sum (all-zero columns are left as zeros
/// with a warning on stderr), `log` maps entries through log(1+x), `tfidf`
/// multiplies each row by idf(o) = m / df(o) where df counts nonzero columns.
CooccurrenceMatrix normalize(const CooccurrenceMatrix& x, Normalization method,
                             const NormalizeOptions& opt = {});

// TSV layout: optional "# norm=<tag>" comment line, then a header row of
// scene labels (first cell empty), then one row per object: label followed
// by n_cols entries formatted %.10g.
void write_matrix_tsv(const CooccurrenceMatrix& x, const std::string& path);
CooccurrenceMatrix read_matrix_tsv(const std::string& path);

}  // namespace scene_embed
