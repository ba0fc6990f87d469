#include "fairdetect/chunker.hpp"

#include <numeric>

#include <json.hpp>

#include "fairdetect/errors.hpp"

namespace fairdetect {

ChunkPlan chunk_transcript(const std::string& participant_id, std::span<const QaPair> qa_pairs,
                           int window_words, int overlap_words) {
    if (qa_pairs.empty()) throw DataError("chunk_transcript: empty transcript");
    if (window_words <= 0) throw ConfigError("chunk_transcript: window_words must be positive");
    if (overlap_words < 0 || overlap_words >= window_words) {
        throw ConfigError("chunk_transcript: need 0 <= overlap_words < window_words");
    }

    const int n = static_cast<int>(qa_pairs.size());
    std::vector<int> words(n);
    for (int i = 0; i < n; ++i) words[i] = count_words(qa_pairs[i]);

    ChunkPlan plan;
    plan.window_words = window_words;
    plan.overlap_words = overlap_words;

    int start = 0;
    while (start < n) {
        int end = start;
        int total = words[start];
        while (end + 1 < n && total + words[end + 1] <= window_words) {
            ++end;
            total += words[end];
        }
        plan.chunks.push_back({participant_id, start, end, total});
        if (end == n - 1) break;

        // Minimal suffix of [start, end] reaching the overlap; candidates
        // exclude `start` itself so the window always advances.
        int next_start = -1;
        int acc = 0;
        for (int i = end; i > start; --i) {
            acc += words[i];
            if (acc >= overlap_words) {
                next_start = i;
                break;
            }
        }
        if (next_start < 0) {
            next_start = (end > start) ? end : end + 1;
        }
        start = next_start;
    }
    return plan;
}

int majority_vote(std::span<const int> chunk_labels) {
    if (chunk_labels.empty()) throw DataError("majority_vote: empty label list");
    long ones = 0;
    for (int lab : chunk_labels) {
        if (lab != 0 && lab != 1) throw DataError("majority_vote: labels must be 0 or 1");
        ones += lab;
    }
    const long zeros = static_cast<long>(chunk_labels.size()) - ones;
    return ones >= zeros ? 1 : 0;
}

std::string chunk_plan_to_json(const ChunkPlan& plan) {
    nlohmann::json j;
    j["window_words"] = plan.window_words;
    j["overlap_words"] = plan.overlap_words;
    j["chunks"] = nlohmann::json::array();
    for (const auto& c : plan.chunks) {
        j["chunks"].push_back({{"participant_id", c.participant_id},
                               {"first_pair", c.first_pair},
                               {"last_pair", c.last_pair},
                               {"word_count", c.word_count}});
    }
    return j.dump();
}

}  // namespace fairdetect
