#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace scene_embed {

/// Dense label vocabulary. Ids are contiguous in [0, size()) and the text->id
/// mapping is a bijection.
class Vocab {
  public:
    int add(const std::string& text);
    std::optional<int> find(const std::string& text) const;
    const std::string& text(int id) const;
    int size() const { return static_cast<int>(texts_.size()); }
    const std::vector<std::string>& texts() const { return texts_; }

  private:
    std::vector<std::string> texts_;
    std::unordered_map<std::string, int> index_;
};

struct Instance {
    int iid = 0;  // positive, unique within the image
    int object = -1;
    std::optional<int> parent;  // part-of relation, refers to another iid
};

struct SceneImage {
    std::string image_id;
    int scene = -1;
    std::vector<Instance> instances;
    std::string label_map;  // path to a SEGMAP file, empty if absent

    /// Sorted, deduplicated object ids.
    std::vector<int> distinct_objects() const;
};

struct Corpus {
    std::vector<SceneImage> images;
    Vocab objects;
    Vocab scenes;
    std::vector<std::int64_t> object_image_freq;  // images containing the object
    std::vector<std::int64_t> scene_image_freq;   // images of the category

    /// Rebuilds the frequency tables from `images`.
    void recount();
};

/// lowercase, trimmed, internal whitespace collapsed. Returns "" for tokens
/// that canonicalize to nothing or to the designated unlabeled token.
std::string canonical_label(std::string_view raw);

enum class CorpusFormat { jsonl, ade20k };

Corpus load_corpus(const std::string& path, CorpusFormat format);
Corpus load_corpus_jsonl(const std::string& path);
void save_corpus_jsonl(const Corpus& c, const std::string& path);
std::string corpus_to_jsonl(const Corpus& c);
Corpus corpus_from_jsonl(const std::string& text, const std::string& origin);

Corpus filter_corpus(const Corpus& c, int min_label_freq = 5, int min_distinct_objects = 2);

struct SyntheticSpec {
    int n_scenes = 0;
    int n_objects = 0;
    int images_per_scene = 0;
    std::vector<std::string> supercategory;  // scene index -> supercategory label
    double overlap = 0.0;                    // fraction of the object pool shared across supercategories
    std::uint64_t seed = 0;
    int objects_per_image = 8;
    int min_label_freq = 5;  // generated corpora are topped up to survive filtering at this threshold
};

/// Generates a corpus with planted semantic structure: each scene draws its
/// objects from its supercategory's pool plus a shared pool of size
/// round(overlap * n_objects). Deterministic for a fixed seed.
Corpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace scene_embed
