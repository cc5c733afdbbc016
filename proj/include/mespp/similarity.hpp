#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mespp/common.hpp"
#include "mespp/env_graph.hpp"
#include "mespp/rng.hpp"

namespace mespp {

// One language descriptor per danger level for a single danger type.
struct DescriptorSet {
    std::string type;                             // matches a HazardType name, e.g. "fire"
    std::array<std::string, 5> descriptor_ids{};  // index l-1 holds the level-l descriptor
};

struct DescriptorCorpus {
    std::vector<DescriptorSet> sets;

    void validate() const {
        if (sets.empty()) throw ValidationError("descriptor corpus is empty");
        std::set<std::string> ids;
        for (const auto& set : sets) {
            if (set.type.empty()) throw ValidationError("descriptor set with empty type label");
            for (int l = 1; l <= 5; ++l) {
                const auto& id = set.descriptor_ids[static_cast<std::size_t>(l - 1)];
                if (id.empty())
                    throw ValidationError("descriptor set '" + set.type + "' missing level " +
                                          std::to_string(l) + " descriptor");
                if (!ids.insert(id).second)
                    throw ValidationError("duplicate descriptor id '" + id + "'");
            }
        }
    }
};

// Similarity scores for (image, descriptor) pairs. Immutable after
// load/synthesis; shareable across missions.
class ScoreMatrix {
public:
    void insert(const std::string& image, const std::string& descriptor, double score) {
        if (!std::isfinite(score))
            throw ValidationError("non-finite score for (" + image + ", " + descriptor + ")");
        const auto [it, fresh] = entries_.emplace(key(image, descriptor), score);
        if (!fresh)
            throw ValidationError("duplicate score entry for (" + image + ", " + descriptor + ")");
    }

    bool contains(const std::string& image, const std::string& descriptor) const {
        return entries_.count(key(image, descriptor)) > 0;
    }

    double score(const std::string& image, const std::string& descriptor) const {
        const auto it = entries_.find(key(image, descriptor));
        if (it == entries_.end())
            throw ValidationError("missing score for (" + image + ", " + descriptor + ")");
        return it->second;
    }

    std::size_t size() const { return entries_.size(); }

    // Deterministic (sorted) view of all entries, for serialization.
    std::vector<std::pair<std::pair<std::string, std::string>, double>> sorted_entries() const {
        std::vector<std::pair<std::pair<std::string, std::string>, double>> out;
        out.reserve(entries_.size());
        for (const auto& [k, v] : entries_) {
            const auto sep = k.find('\x1f');
            out.push_back({{k.substr(0, sep), k.substr(sep + 1)}, v});
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    static std::string key(const std::string& image, const std::string& descriptor) {
        return image + '\x1f' + descriptor;
    }

    std::unordered_map<std::string, double> entries_;
};

// Controls the synthetic score generator that stands in for an offline
// vision-language model.
struct SynthesisParams {
    double mu_hi = 0.8;    // mean score when descriptor type and level match
    double mu_lo = 0.3;    // mean score otherwise
    double sigma = 0.0;    // gaussian noise, clamped into [0,1]
    bool adjacent_leak = false;
    double mu_leak = 0.55;  // mean for matching-type descriptors at level l_v±1
    // Skews the confusion toward severity: only level l_v+1 leaks, the level
    // below stays at mu_lo. No effect unless adjacent_leak is set.
    bool leak_up_only = false;
    // Level-1 descriptors of every set score high on hazard-free vertices
    // (a safe scene matches "no danger" wording of any type).
    bool safe_match = true;
};

// Emits a score for every (scene image, descriptor) pair in the environment.
// Deterministic given seed: vertices ascending, images in scene order,
// descriptor sets in corpus order, levels 1..5; one gaussian draw each.
inline ScoreMatrix synthesize_scores(const EnvironmentGraph& graph, const DescriptorCorpus& corpus,
                                     const SynthesisParams& params, std::uint64_t seed) {
    corpus.validate();
    Rng rng(seed);
    ScoreMatrix out;
    for (int v = 1; v <= graph.n; ++v) {
        const auto vi = static_cast<std::size_t>(v);
        if (graph.scenes[vi].empty())
            throw ValidationError("vertex " + std::to_string(v) + " has an empty scene");
        const HazardType type = graph.hazard_type[vi];
        const int level = graph.truth_level[vi];
        for (const auto& image : graph.scenes[vi]) {
            for (const auto& set : corpus.sets) {
                const bool type_match = set.type == to_string(type);
                for (int l = 1; l <= 5; ++l) {
                    double mu = params.mu_lo;
                    if (type_match && l == level)
                        mu = params.mu_hi;
                    else if (type_match && params.adjacent_leak &&
                             (l == level + 1 || (l == level - 1 && !params.leak_up_only)))
                        mu = params.mu_leak;
                    else if (params.safe_match && type == HazardType::None && l == 1)
                        mu = params.mu_hi;
                    double score = mu;
                    if (params.sigma > 0.0) score += params.sigma * rng.gaussian();
                    score = std::clamp(score, 0.0, 1.0);
                    out.insert(image, set.descriptor_ids[static_cast<std::size_t>(l - 1)], score);
                }
            }
        }
    }
    return out;
}

// Caption-based retrieval metric: percentage of captions whose true image
// ranks among the k highest-scoring candidates. The candidate pool is the
// set of true images; ties broken by ascending image id.
inline double recall_at_k(const ScoreMatrix& scores,
                          const std::vector<std::pair<std::string, std::string>>& truth, int k) {
    if (k < 1) throw ValidationError("recall_at_k: k must be >= 1");
    if (truth.empty()) throw ValidationError("recall_at_k: empty truth pairing");

    std::set<std::string> pool_set;
    for (const auto& [caption, image] : truth) pool_set.insert(image);
    const std::vector<std::string> pool(pool_set.begin(), pool_set.end());

    int hits = 0;
    for (const auto& [caption, image] : truth) {
        std::vector<std::pair<double, const std::string*>> ranked;
        ranked.reserve(pool.size());
        for (const auto& candidate : pool) {
            if (!scores.contains(candidate, caption))
                throw ValidationError("caption '" + caption + "' has no score against image '" +
                                      candidate + "'");
            ranked.push_back({scores.score(candidate, caption), &candidate});
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return *a.second < *b.second;
        });
        const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
        for (std::size_t i = 0; i < top; ++i) {
            if (*ranked[i].second == image) {
                ++hits;
                break;
            }
        }
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace mespp
