#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conflictforge/errors.hpp"
#include "conflictforge/filters.hpp"
#include "conflictforge/scenarios.hpp"

namespace conflictforge {

/// M_R = f_m / (f_m + f_c); undefined when both counts are zero.
inline std::optional<double> memorization_ratio(double f_m, double f_c) {
    if (f_m < 0 || f_c < 0) throw ConfigError("counts must be non-negative");
    if (f_m + f_c == 0) return std::nullopt;
    return f_m / (f_m + f_c);
}

struct ChoiceCounts {
    size_t memory = 0;
    size_t counter = 0;
    size_t uncertain = 0;
    size_t other = 0;  // Unparseable + IrrelevantOption

    size_t total() const { return memory + counter + uncertain + other; }

    void add(Choice c) {
        switch (c) {
            case Choice::MemoryAnswer: ++memory; break;
            case Choice::CounterAnswer: ++counter; break;
            case Choice::Uncertain: ++uncertain; break;
            default: ++other; break;
        }
    }

    std::optional<double> ratio() const {
        return memorization_ratio(static_cast<double>(memory), static_cast<double>(counter));
    }
};

inline nlohmann::json to_json(const ChoiceCounts& c) {
    nlohmann::json j;
    j["f_m"] = c.memory;
    j["f_c"] = c.counter;
    j["f_u"] = c.uncertain;
    j["f_x"] = c.other;
    auto r = c.ratio();
    j["M_R"] = r ? nlohmann::json(*r) : nlohmann::json(nullptr);
    return j;
}

struct PopularityBuckets {
    std::vector<double> edges;                       // log10 page views, strictly increasing
    std::vector<ChoiceCounts> buckets;               // edges.size()-1 in-range buckets
    ChoiceCounts out_of_range;

    explicit PopularityBuckets(std::vector<double> e) : edges(std::move(e)) {
        if (edges.size() < 2) throw ConfigError("need at least two bucket edges");
        for (size_t i = 1; i < edges.size(); ++i)
            if (edges[i] <= edges[i - 1]) throw ConfigError("bucket edges must be strictly increasing");
        buckets.resize(edges.size() - 1);
    }

    // [e_i, e_{i+1}) by log10(page views); -1 marks the out-of-range bin
    int bucket_index(long long popularity) const {
        double lg = popularity > 0 ? std::log10(static_cast<double>(popularity))
                                   : -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i + 1 < edges.size(); ++i)
            if (lg >= edges[i] && lg < edges[i + 1]) return static_cast<int>(i);
        return -1;
    }

    void add(long long popularity, Choice choice) {
        int idx = bucket_index(popularity);
        if (idx < 0) out_of_range.add(choice);
        else buckets[static_cast<size_t>(idx)].add(choice);
    }
};

inline std::vector<double> default_popularity_edges() { return {2, 2.5, 3, 3.5, 4, 4.5, 5}; }

/// Per-popularity-bucket memorization ratio over (example, choice) pairs.
inline PopularityBuckets bucket_popularity(const std::vector<ConflictExample>& examples,
                                           const std::vector<Choice>& choices,
                                           const std::vector<double>& edges) {
    if (examples.size() != choices.size())
        throw ConfigError("examples and choices must align");
    PopularityBuckets pb(edges);
    for (size_t i = 0; i < examples.size(); ++i) {
        if (!examples[i].popularity) throw MissingPopularity(examples[i].question_id);
        pb.add(*examples[i].popularity, choices[i]);
    }
    return pb;
}

inline nlohmann::json to_json(const PopularityBuckets& pb) {
    nlohmann::json out = nlohmann::json::array();
    for (size_t i = 0; i + 1 < pb.edges.size(); ++i) {
        nlohmann::json row = to_json(pb.buckets[i]);
        row["lo"] = pb.edges[i];
        row["hi"] = pb.edges[i + 1];
        out.push_back(row);
    }
    nlohmann::json j;
    j["buckets"] = out;
    j["out_of_range"] = to_json(pb.out_of_range);
    return j;
}

}  // namespace conflictforge
