#pragma once

#include <span>
#include <string>
#include <vector>

#include "fairdetect/corpus.hpp"

namespace fairdetect {

// A contiguous run of whole QA pairs; pairs are never split.
struct Chunk {
    std::string participant_id;
    int first_pair = 0;
    int last_pair = 0;  // inclusive
    int word_count = 0;
};

struct ChunkPlan {
    int window_words = 300;
    int overlap_words = 80;
    std::vector<Chunk> chunks;
};

// Greedy packing of consecutive QA pairs into word windows. The next chunk
// starts at the minimal suffix of the previous chunk whose word total
// reaches overlap_words; if no proper suffix reaches it, at the previous
// chunk's last pair. A single pair longer than the window becomes one
// oversized chunk.
ChunkPlan chunk_transcript(const std::string& participant_id, std::span<const QaPair> qa_pairs,
                           int window_words = 300, int overlap_words = 80);

// Strict majority; exact tie goes to 1.
int majority_vote(std::span<const int> chunk_labels);

std::string chunk_plan_to_json(const ChunkPlan& plan);

}  // namespace fairdetect
