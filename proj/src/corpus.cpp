#include "scene_embed/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "scene_embed/ade20k.hpp"
#include "scene_embed/random.hpp"
#include "scene_embed/util.hpp"

namespace scene_embed {

int Vocab::add(const std::string& text) {
    auto it = index_.find(text);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(texts_.size());
    texts_.push_back(text);
    index_.emplace(text, id);
    return id;
}

std::optional<int> Vocab::find(const std::string& text) const {
    auto it = index_.find(text);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const std::string& Vocab::text(int id) const {
    if (id < 0 || id >= size()) throw Error("vocab id out of range: " + std::to_string(id));
    return texts_[static_cast<std::size_t>(id)];
}

std::vector<int> SceneImage::distinct_objects() const {
    std::vector<int> ids;
    ids.reserve(instances.size());
    for (const auto& inst : instances) ids.push_back(inst.object);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

void Corpus::recount() {
    object_image_freq.assign(static_cast<std::size_t>(objects.size()), 0);
    scene_image_freq.assign(static_cast<std::size_t>(scenes.size()), 0);
    for (const auto& img : images) {
        ++scene_image_freq[static_cast<std::size_t>(img.scene)];
        for (int o : img.distinct_objects()) ++object_image_freq[static_cast<std::size_t>(o)];
    }
}

std::string canonical_label(std::string_view raw) {
    std::string s = collapse_whitespace(to_lower(trim(raw)));
    if (s == "unknown") return "";
    return s;
}

namespace {

void validate_image(const SceneImage& img, const std::string& origin) {
    std::set<int> seen;
    for (const auto& inst : img.instances) {
        if (inst.iid <= 0) {
            throw Error(origin + ": instance id must be positive in image '" + img.image_id + "'");
        }
        if (!seen.insert(inst.iid).second) {
            throw Error(origin + ": duplicate instance id " + std::to_string(inst.iid) +
                        " in image '" + img.image_id + "'");
        }
    }
    for (const auto& inst : img.instances) {
        if (inst.parent && (seen.count(*inst.parent) == 0 || *inst.parent == inst.iid)) {
            throw Error(origin + ": dangling parent_instance " + std::to_string(*inst.parent) +
                        " in image '" + img.image_id + "'");
        }
    }
}

}  // namespace

Corpus corpus_from_jsonl(const std::string& text, const std::string& origin) {
    Corpus c;
    std::set<std::string> ids_seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (trim(line).empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(where + ": malformed record: " + e.what());
        }
        if (!rec.is_object() || !rec.contains("image_id") || !rec["image_id"].is_string()) {
            throw Error(where + ": malformed record: missing \"image_id\"");
        }
        SceneImage img;
        img.image_id = rec["image_id"].get<std::string>();
        if (!rec.contains("scene") || !rec["scene"].is_string()) {
            throw Error(where + ": malformed record: missing \"scene\" in image '" + img.image_id + "'");
        }
        if (!rec.contains("objects") || !rec["objects"].is_array() || rec["objects"].empty()) {
            throw Error(where + ": malformed record: missing or empty \"objects\" in image '" +
                        img.image_id + "'");
        }
        if (!ids_seen.insert(img.image_id).second) {
            throw Error(where + ": duplicate image_id '" + img.image_id + "'");
        }
        const std::string scene = canonical_label(rec["scene"].get<std::string>());
        if (scene.empty()) continue;  // unlabeled scene, image dropped
        img.scene = c.scenes.add(scene);
        for (const auto& obj : rec["objects"]) {
            if (!obj.is_object() || !obj.contains("iid") || !obj["iid"].is_number_integer() ||
                !obj.contains("label") || !obj["label"].is_string()) {
                throw Error(where + ": malformed object entry in image '" + img.image_id + "'");
            }
            const std::string label = canonical_label(obj["label"].get<std::string>());
            Instance inst;
            inst.iid = obj["iid"].get<int>();
            if (obj.contains("parent") && !obj["parent"].is_null()) {
                if (!obj["parent"].is_number_integer()) {
                    throw Error(where + ": malformed parent in image '" + img.image_id + "'");
                }
                inst.parent = obj["parent"].get<int>();
            }
            if (label.empty()) continue;  // unlabeled object dropped
            inst.object = c.objects.add(label);
            img.instances.push_back(inst);
        }
        if (rec.contains("label_map") && !rec["label_map"].is_null()) {
            if (!rec["label_map"].is_string()) {
                throw Error(where + ": malformed label_map in image '" + img.image_id + "'");
            }
            img.label_map = rec["label_map"].get<std::string>();
        }
        if (img.instances.empty()) continue;  // nothing labeled survives
        // A dropped (unlabeled) instance breaks parent chains; relink to the
        // nearest surviving ancestor.
        {
            std::set<int> live;
            for (const auto& inst : img.instances) live.insert(inst.iid);
            std::unordered_map<int, std::optional<int>> raw_parent;
            for (const auto& obj : rec["objects"]) {
                const int iid = obj["iid"].get<int>();
                std::optional<int> p;
                if (obj.contains("parent") && !obj["parent"].is_null()) p = obj["parent"].get<int>();
                raw_parent[iid] = p;
            }
            for (auto& inst : img.instances) {
                std::optional<int> p = inst.parent;
                int hops = 0;
                while (p && live.count(*p) == 0) {
                    auto it = raw_parent.find(*p);
                    if (it == raw_parent.end()) break;  // dangling, caught below
                    p = it->second;
                    if (++hops > 1024) throw Error(where + ": parent cycle in image '" + img.image_id + "'");
                }
                inst.parent = p;
            }
        }
        validate_image(img, where);
        c.images.push_back(std::move(img));
    }
    c.recount();
    return c;
}

Corpus load_corpus_jsonl(const std::string& path) {
    return corpus_from_jsonl(read_file(path), path);
}

Corpus load_corpus(const std::string& path, CorpusFormat format) {
    switch (format) {
        case CorpusFormat::jsonl: return load_corpus_jsonl(path);
        case CorpusFormat::ade20k: return load_corpus_ade20k(path);
    }
    throw Error("unknown corpus format");
}

std::string corpus_to_jsonl(const Corpus& c) {
    std::string out;
    for (const auto& img : c.images) {
        nlohmann::ordered_json rec;
        rec["image_id"] = img.image_id;
        rec["scene"] = c.scenes.text(img.scene);
        nlohmann::ordered_json objs = nlohmann::ordered_json::array();
        for (const auto& inst : img.instances) {
            nlohmann::ordered_json o;
            o["iid"] = inst.iid;
            o["label"] = c.objects.text(inst.object);
            if (inst.parent) {
                o["parent"] = *inst.parent;
            } else {
                o["parent"] = nullptr;
            }
            objs.push_back(std::move(o));
        }
        rec["objects"] = std::move(objs);
        if (img.label_map.empty()) {
            rec["label_map"] = nullptr;
        } else {
            rec["label_map"] = img.label_map;
        }
        out += rec.dump();
        out += '\n';
    }
    return out;
}

void save_corpus_jsonl(const Corpus& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << corpus_to_jsonl(c);
}

Corpus filter_corpus(const Corpus& c, int min_label_freq, int min_distinct_objects) {
    std::vector<SceneImage> images = c.images;

    // Removing rare labels can push images under the distinct-object floor,
    // which lowers label counts again, so iterate to a fixed point.
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::int64_t> obj_freq(static_cast<std::size_t>(c.objects.size()), 0);
        std::vector<std::int64_t> scene_freq(static_cast<std::size_t>(c.scenes.size()), 0);
        for (const auto& img : images) {
            ++scene_freq[static_cast<std::size_t>(img.scene)];
            for (int o : img.distinct_objects()) ++obj_freq[static_cast<std::size_t>(o)];
        }
        std::vector<SceneImage> kept;
        kept.reserve(images.size());
        for (auto& img : images) {
            if (scene_freq[static_cast<std::size_t>(img.scene)] < min_label_freq) {
                changed = true;
                continue;
            }
            std::vector<Instance> surviving;
            std::unordered_map<int, std::optional<int>> old_parent;
            for (const auto& inst : img.instances) old_parent[inst.iid] = inst.parent;
            std::set<int> removed;
            for (const auto& inst : img.instances) {
                if (obj_freq[static_cast<std::size_t>(inst.object)] < min_label_freq) {
                    removed.insert(inst.iid);
                    changed = true;
                } else {
                    surviving.push_back(inst);
                }
            }
            // relink children of removed instances to the nearest surviving ancestor
            for (auto& inst : surviving) {
                std::optional<int> p = inst.parent;
                while (p && removed.count(*p) > 0) p = old_parent[*p];
                inst.parent = p;
            }
            img.instances = std::move(surviving);
            std::vector<int> distinct = img.distinct_objects();
            if (static_cast<int>(distinct.size()) < min_distinct_objects) {
                changed = true;
                continue;
            }
            kept.push_back(std::move(img));
        }
        images = std::move(kept);
    }

    if (images.empty()) throw Error("corpus is empty after filtering");

    // Re-densify ids, preserving the original id order of surviving labels.
    std::vector<bool> obj_alive(static_cast<std::size_t>(c.objects.size()), false);
    std::vector<bool> scene_alive(static_cast<std::size_t>(c.scenes.size()), false);
    for (const auto& img : images) {
        scene_alive[static_cast<std::size_t>(img.scene)] = true;
        for (const auto& inst : img.instances) obj_alive[static_cast<std::size_t>(inst.object)] = true;
    }
    Corpus out;
    std::vector<int> obj_remap(static_cast<std::size_t>(c.objects.size()), -1);
    std::vector<int> scene_remap(static_cast<std::size_t>(c.scenes.size()), -1);
    for (int i = 0; i < c.objects.size(); ++i) {
        if (obj_alive[static_cast<std::size_t>(i)]) obj_remap[static_cast<std::size_t>(i)] = out.objects.add(c.objects.text(i));
    }
    for (int i = 0; i < c.scenes.size(); ++i) {
        if (scene_alive[static_cast<std::size_t>(i)]) scene_remap[static_cast<std::size_t>(i)] = out.scenes.add(c.scenes.text(i));
    }
    for (auto& img : images) {
        img.scene = scene_remap[static_cast<std::size_t>(img.scene)];
        for (auto& inst : img.instances) inst.object = obj_remap[static_cast<std::size_t>(inst.object)];
        out.images.push_back(std::move(img));
    }
    out.recount();
    return out;
}

Corpus generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_scenes < 2 || spec.n_objects < 2) {
        throw Error("generate_synthetic: need at least 2 scenes and 2 objects");
    }
    if (spec.overlap < 0.0 || spec.overlap > 1.0) {
        throw Error("generate_synthetic: overlap must be in [0, 1]");
    }
    if (static_cast<int>(spec.supercategory.size()) != spec.n_scenes) {
        throw Error("generate_synthetic: supercategory assignment must cover every scene");
    }
    if (spec.images_per_scene < 1) throw Error("generate_synthetic: images_per_scene must be positive");

    Corpus c;
    char buf[64];
    for (int s = 0; s < spec.n_scenes; ++s) {
        std::snprintf(buf, sizeof(buf), "scene_%03d", s);
        c.scenes.add(buf);
    }
    for (int o = 0; o < spec.n_objects; ++o) {
        std::snprintf(buf, sizeof(buf), "object_%03d", o);
        c.objects.add(buf);
    }

    std::vector<std::string> supercats;
    for (const auto& sc : spec.supercategory) {
        if (std::find(supercats.begin(), supercats.end(), sc) == supercats.end()) supercats.push_back(sc);
    }
    const int n_super = static_cast<int>(supercats.size());

    // Object pools: the first `shared` objects are common to all
    // supercategories, the rest is split evenly into exclusive pools.
    const int shared = static_cast<int>(std::lround(spec.overlap * spec.n_objects));
    std::vector<std::vector<int>> pool(static_cast<std::size_t>(n_super));
    for (int k = 0; k < n_super; ++k) {
        for (int o = 0; o < shared; ++o) pool[static_cast<std::size_t>(k)].push_back(o);
    }
    for (int o = shared; o < spec.n_objects; ++o) {
        const int k = (o - shared) % std::max(1, n_super);
        pool[static_cast<std::size_t>(k)].push_back(o);
    }

    Rng rng(derive_seed(spec.seed, 0));
    for (int s = 0; s < spec.n_scenes; ++s) {
        const auto sc_it = std::find(supercats.begin(), supercats.end(), spec.supercategory[static_cast<std::size_t>(s)]);
        const auto& p = pool[static_cast<std::size_t>(sc_it - supercats.begin())];
        if (static_cast<int>(p.size()) < 2) throw Error("generate_synthetic: object pool too small");
        const int k = std::min(spec.objects_per_image, static_cast<int>(p.size()));
        for (int j = 0; j < spec.images_per_scene; ++j) {
            SceneImage img;
            std::snprintf(buf, sizeof(buf), "synth_%03d_%04d", s, j);
            img.image_id = buf;
            img.scene = s;
            // k distinct objects, partial Fisher-Yates over the pool
            std::vector<int> candidates = p;
            for (int t = 0; t < k; ++t) {
                const auto pick = t + static_cast<int>(rng.below(candidates.size() - static_cast<std::size_t>(t)));
                std::swap(candidates[static_cast<std::size_t>(t)], candidates[static_cast<std::size_t>(pick)]);
                Instance inst;
                inst.iid = t + 1;
                inst.object = candidates[static_cast<std::size_t>(t)];
                img.instances.push_back(inst);
            }
            c.images.push_back(std::move(img));
        }
    }

    // Top up rare objects so the corpus survives filtering unchanged.
    c.recount();
    std::vector<std::vector<std::size_t>> images_by_supercat(static_cast<std::size_t>(n_super));
    for (std::size_t i = 0; i < c.images.size(); ++i) {
        const auto& sc = spec.supercategory[static_cast<std::size_t>(c.images[i].scene)];
        const auto k = static_cast<std::size_t>(std::find(supercats.begin(), supercats.end(), sc) - supercats.begin());
        images_by_supercat[k].push_back(i);
    }
    for (int o = 0; o < spec.n_objects; ++o) {
        std::int64_t freq = c.object_image_freq[static_cast<std::size_t>(o)];
        if (freq >= spec.min_label_freq) continue;
        std::vector<std::size_t> eligible;
        if (o < shared) {
            for (std::size_t i = 0; i < c.images.size(); ++i) eligible.push_back(i);
        } else {
            const int k = (o - shared) % std::max(1, n_super);
            eligible = images_by_supercat[static_cast<std::size_t>(k)];
        }
        rng.shuffle(eligible);
        for (std::size_t idx : eligible) {
            if (freq >= spec.min_label_freq) break;
            auto& img = c.images[idx];
            bool present = false;
            for (const auto& inst : img.instances) present = present || inst.object == o;
            if (present) continue;
            Instance inst;
            inst.iid = static_cast<int>(img.instances.size()) + 1;
            inst.object = o;
            img.instances.push_back(inst);
            ++freq;
        }
    }
    c.recount();
    return c;
}

}  // namespace scene_embed
