#include "fairdetect/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fairdetect/errors.hpp"

namespace fairdetect {

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

bool AttributeSchema::has_attribute(const std::string& attr) const {
    return values.count(attr) > 0;
}

int AttributeSchema::value_index(const std::string& attr, const std::string& value) const {
    auto it = values.find(attr);
    if (it == values.end()) return -1;
    for (std::size_t i = 0; i < it->second.size(); ++i) {
        if (it->second[i] == value) return static_cast<int>(i);
    }
    return -1;
}

const std::vector<std::string>& AttributeSchema::values_of(const std::string& attr) const {
    auto it = values.find(attr);
    if (it == values.end()) {
        std::string known;
        for (const auto& a : attribute_order) known += (known.empty() ? "" : ", ") + a;
        throw DataError("unknown attribute '" + attr + "' (schema declares: " + known + ")");
    }
    return it->second;
}

std::vector<int> Dataset::with_attribute(const std::string& attribute) const {
    schema.values_of(attribute);  // validates the name
    std::vector<int> out;
    for (std::size_t i = 0; i < participants.size(); ++i) {
        if (participants[i].attrs.count(attribute)) out.push_back(static_cast<int>(i));
    }
    return out;
}

const Participant* Dataset::find(const std::string& id) const {
    for (const auto& p : participants) {
        if (p.id == id) return &p;
    }
    return nullptr;
}

AttributeSchema parse_schema(const std::string& schema_json) {
    // ordered_json keeps the declared attribute order.
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(schema_json);
    } catch (const std::exception& e) {
        throw DataError(std::string("schema: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("attributes") || !j["attributes"].is_object()) {
        throw DataError("schema: expected an object with an 'attributes' map");
    }
    AttributeSchema schema;
    for (const auto& [attr, vals] : j["attributes"].items()) {
        if (!vals.is_array() || vals.empty()) {
            throw DataError("schema: attribute '" + attr + "' needs a nonempty value array");
        }
        std::vector<std::string> list;
        for (const auto& v : vals) {
            if (!v.is_string()) throw DataError("schema: attribute '" + attr + "' has a non-string value");
            list.push_back(v.get<std::string>());
        }
        std::set<std::string> uniq(list.begin(), list.end());
        if (uniq.size() != list.size()) {
            throw DataError("schema: attribute '" + attr + "' has duplicate values");
        }
        schema.attribute_order.push_back(attr);
        schema.values[attr] = std::move(list);
    }
    if (j.contains("embedding_dim")) {
        const int dim = j["embedding_dim"].get<int>();
        if (dim <= 0) throw DataError("schema: embedding_dim must be positive");
        schema.embedding_dim = dim;
    }
    if (j.contains("reference")) {
        for (const auto& [attr, v] : j["reference"].items()) {
            if (!schema.values.count(attr)) {
                throw DataError("schema: reference names unknown attribute '" + attr + "'");
            }
            const std::string val = v.get<std::string>();
            if (schema.value_index(attr, val) < 0) {
                throw DataError("schema: reference value '" + val + "' not declared for '" + attr + "'");
            }
            schema.reference[attr] = val;
        }
    }
    return schema;
}

AttributeSchema load_schema(const std::string& schema_path) {
    std::ifstream in(schema_path);
    if (!in) throw DataError("cannot open schema file: " + schema_path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_schema(ss.str());
}

namespace {

Participant parse_record(const nlohmann::json& j, const AttributeSchema& schema,
                         const LabelRule& rule, const std::string& where) {
    Participant p;
    if (!j.is_object()) throw DataError(where + ": record is not a JSON object");
    if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
        throw DataError(where + ": missing or empty 'id'");
    }
    p.id = j["id"].get<std::string>();

    if (j.contains("qa")) {
        if (!j["qa"].is_array()) throw DataError(where + ": 'qa' must be an array");
        for (const auto& item : j["qa"]) {
            if (!item.is_object() || !item.contains("q") || !item.contains("s")) {
                throw DataError(where + ": each qa entry needs 'q' and 's'");
            }
            p.qa.push_back({item["q"].get<std::string>(), item["s"].get<std::string>()});
        }
    }
    if (j.contains("embedding")) {
        if (!j["embedding"].is_array()) throw DataError(where + ": 'embedding' must be an array");
        std::vector<double> emb;
        for (const auto& v : j["embedding"]) emb.push_back(v.get<double>());
        if (schema.embedding_dim && static_cast<int>(emb.size()) != *schema.embedding_dim) {
            throw DataError(where + ": embedding length " + std::to_string(emb.size()) +
                            " does not match schema embedding_dim " +
                            std::to_string(*schema.embedding_dim));
        }
        p.embedding = std::move(emb);
    }
    if (p.qa.empty() && !p.embedding) {
        throw DataError(where + ": record needs qa pairs or an embedding");
    }

    std::optional<int> explicit_label;
    if (j.contains("label")) {
        const int lab = j["label"].get<int>();
        if (lab != 0 && lab != 1) throw DataError(where + ": 'label' must be 0 or 1");
        explicit_label = lab;
    }
    if (j.contains("phq8")) {
        const int score = j["phq8"].get<int>();
        if (score < 0 || score > 24) {
            throw DataError(where + ": phq8 " + std::to_string(score) + " outside [0,24]");
        }
        p.phq8 = score;
    }
    if (p.phq8) {
        const int derived = (*p.phq8 >= rule.phq8_cutoff) ? 1 : 0;
        if (explicit_label && *explicit_label != derived) {
            throw DataError(where + ": record id '" + p.id + "' has label " +
                            std::to_string(*explicit_label) + " but phq8 " +
                            std::to_string(*p.phq8) + " binarizes to " + std::to_string(derived) +
                            " at cutoff " + std::to_string(rule.phq8_cutoff));
        }
        p.label = derived;
    } else if (explicit_label) {
        p.label = *explicit_label;
    } else {
        throw DataError(where + ": record id '" + p.id + "' has neither phq8 nor label");
    }

    if (j.contains("attrs")) {
        if (!j["attrs"].is_object()) throw DataError(where + ": 'attrs' must be an object");
        for (const auto& [attr, v] : j["attrs"].items()) {
            if (!v.is_string()) throw DataError(where + ": attrs values must be strings");
            const std::string value = v.get<std::string>();
            if (!schema.has_attribute(attr)) {
                throw DataError(where + ": undeclared attribute '" + attr + "'");
            }
            if (schema.value_index(attr, value) < 0) {
                throw DataError(where + ": value '" + value + "' not declared for attribute '" +
                                attr + "'");
            }
            p.attrs[attr] = value;
        }
    }
    return p;
}

}  // namespace

Dataset parse_dataset(std::istream& records, const AttributeSchema& schema, const LabelRule& rule) {
    Dataset ds;
    ds.schema = schema;
    std::set<std::string> seen_ids;
    std::optional<int> inferred_dim = schema.embedding_dim;

    std::string line;
    int line_no = 0;
    while (std::getline(records, line)) {
        ++line_no;
        // Skip blank lines so trailing newlines are harmless.
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "line " + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw DataError(where + ": malformed record: " + e.what());
        }
        Participant p = parse_record(j, schema, rule, where);
        if (!seen_ids.insert(p.id).second) {
            throw DataError(where + ": duplicate id '" + p.id + "'");
        }
        if (p.embedding) {
            const int dim = static_cast<int>(p.embedding->size());
            if (!inferred_dim) {
                inferred_dim = dim;
            } else if (dim != *inferred_dim) {
                throw DataError(where + ": embedding length " + std::to_string(dim) +
                                " differs from established dimension " +
                                std::to_string(*inferred_dim));
            }
        }
        ds.participants.push_back(std::move(p));
    }
    ds.schema.embedding_dim = inferred_dim;
    return ds;
}

Dataset load_dataset(const std::string& records_path, const std::string& schema_path,
                     const LabelRule& rule) {
    AttributeSchema schema = load_schema(schema_path);
    std::ifstream in(records_path);
    if (!in) throw DataError("cannot open records file: " + records_path);
    return parse_dataset(in, schema, rule);
}

std::map<GroupKey, GroupCount> group_counts(const Dataset& dataset, const std::string& attribute) {
    std::map<GroupKey, GroupCount> counts;
    for (int idx : dataset.with_attribute(attribute)) {
        const auto& p = dataset.participants[idx];
        GroupKey key{attribute, p.attrs.at(attribute)};
        auto& cell = counts[key];
        if (p.label == 1) {
            ++cell.positives;
        } else {
            ++cell.negatives;
        }
    }
    return counts;
}

std::vector<std::string> tokenize_words(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

int count_words(const QaPair& pair) {
    return static_cast<int>(tokenize_words(pair.question).size() +
                            tokenize_words(pair.answer).size());
}

std::vector<double> featurize(std::span<const QaPair> qa_pairs, const FeatureSpace& space) {
    std::vector<std::string> tokens;
    for (const auto& pair : qa_pairs) {
        for (auto& w : tokenize_words(pair.question)) tokens.push_back(std::move(w));
        for (auto& w : tokenize_words(pair.answer)) tokens.push_back(std::move(w));
    }
    if (tokens.empty()) throw DataError("featurize: empty text");

    if (!space.vocab.empty()) {
        std::vector<double> vec(space.vocab.size(), 0.0);
        std::map<std::string, int> index;
        for (std::size_t i = 0; i < space.vocab.size(); ++i) {
            index[space.vocab[i]] = static_cast<int>(i);
        }
        for (const auto& t : tokens) {
            auto it = index.find(t);
            if (it != index.end()) vec[it->second] += 1.0;
        }
        return vec;
    }
    if (space.dim <= 0) throw ConfigError("featurize: dim must be positive");
    std::vector<double> vec(space.dim, 0.0);
    for (const auto& t : tokens) {
        vec[fnv1a64(t) % static_cast<std::uint64_t>(space.dim)] += 1.0;
    }
    return vec;
}

}  // namespace fairdetect
