#pragma once

#include <compare>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fairdetect {

struct QaPair {
    std::string question;
    std::string answer;
};

// One demographic cell: attribute name plus one of its declared values.
struct GroupKey {
    std::string attribute;
    std::string value;
    auto operator<=>(const GroupKey&) const = default;
};

struct Participant {
    std::string id;
    std::vector<QaPair> qa;
    std::optional<std::vector<double>> embedding;
    std::optional<int> phq8;
    int label = 0;
    std::map<std::string, std::string> attrs;
};

// Attribute value lists keep their declared order; tie-breaking and
// round-robin rules elsewhere depend on it.
struct AttributeSchema {
    std::vector<std::string> attribute_order;
    std::map<std::string, std::vector<std::string>> values;
    std::map<std::string, std::string> reference;  // attribute -> reference value
    std::optional<int> embedding_dim;

    bool has_attribute(const std::string& attr) const;
    // Index of `value` in the declared list, -1 if absent.
    int value_index(const std::string& attr, const std::string& value) const;
    const std::vector<std::string>& values_of(const std::string& attr) const;
};

struct Dataset {
    AttributeSchema schema;
    std::vector<Participant> participants;

    // Indices of participants that carry `attribute`; missing-attribute
    // exclusion happens here, per analysis, never at ingestion.
    std::vector<int> with_attribute(const std::string& attribute) const;
    const Participant* find(const std::string& id) const;
};

struct LabelRule {
    int phq8_cutoff = 10;  // label = 1 iff phq8 >= cutoff
};

AttributeSchema load_schema(const std::string& schema_path);
AttributeSchema parse_schema(const std::string& schema_json);

Dataset load_dataset(const std::string& records_path, const std::string& schema_path,
                     const LabelRule& rule = {});
Dataset parse_dataset(std::istream& records, const AttributeSchema& schema,
                      const LabelRule& rule = {});

struct GroupCount {
    long positives = 0;
    long negatives = 0;
};

std::map<GroupKey, GroupCount> group_counts(const Dataset& dataset, const std::string& attribute);

// Term-frequency featurization. With a declared vocabulary the vector is
// raw counts per vocabulary word in order; otherwise tokens are hashed
// (FNV-1a) into `dim` buckets. Raw counts, no normalization.
struct FeatureSpace {
    int dim = 64;
    std::vector<std::string> vocab;  // nonempty overrides dim
};

std::vector<double> featurize(std::span<const QaPair> qa_pairs, const FeatureSpace& space);

std::vector<std::string> tokenize_words(const std::string& text);
int count_words(const QaPair& pair);

}  // namespace fairdetect
