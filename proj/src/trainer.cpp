#include "fairdetect/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "fairdetect/chunker.hpp"
#include "fairdetect/errors.hpp"
#include "fairdetect/rng.hpp"

namespace fairdetect {

LossMode loss_mode_from_string(const std::string& name) {
    if (name == "cross_entropy") return LossMode::cross_entropy;
    if (name == "worst_group") return LossMode::worst_group;
    if (name == "fairness_regularized") return LossMode::fairness_regularized;
    throw ConfigError("unknown loss mode '" + name +
                      "' (expected cross_entropy, worst_group, fairness_regularized)");
}

std::string loss_mode_name(LossMode mode) {
    switch (mode) {
        case LossMode::cross_entropy: return "cross_entropy";
        case LossMode::worst_group: return "worst_group";
        case LossMode::fairness_regularized: return "fairness_regularized";
    }
    return "?";
}

std::size_t ModelParams::parameter_count() const {
    return hidden_w.size() + hidden_b.size() + out_w.size() + out_b.size();
}

std::vector<double> ModelParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    flat.insert(flat.end(), hidden_w.begin(), hidden_w.end());
    flat.insert(flat.end(), hidden_b.begin(), hidden_b.end());
    flat.insert(flat.end(), out_w.begin(), out_w.end());
    flat.insert(flat.end(), out_b.begin(), out_b.end());
    return flat;
}

void ModelParams::unflatten(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw ConfigError("unflatten: size mismatch");
    std::size_t pos = 0;
    for (auto* part : {&hidden_w, &hidden_b, &out_w, &out_b}) {
        std::copy(flat.begin() + pos, flat.begin() + pos + part->size(), part->begin());
        pos += part->size();
    }
}

double cross_entropy(double score0, double score1, int label) {
    if (!std::isfinite(score0) || !std::isfinite(score1)) {
        throw DataError("cross_entropy: non-finite scores");
    }
    if (label != 0 && label != 1) throw DataError("cross_entropy: label must be 0 or 1");
    const double m = std::max(score0, score1);
    const double lse = m + std::log(std::exp(score0 - m) + std::exp(score1 - m));
    return lse - (label == 0 ? score0 : score1);
}

namespace {

struct GroupMeans {
    std::vector<std::optional<double>> mean;
    std::vector<int> size;
};

GroupMeans group_means(std::span<const double> ce, std::span<const int> group_ids, int n_groups) {
    if (ce.empty()) throw DataError("loss: empty batch");
    if (ce.size() != group_ids.size()) throw DataError("loss: misaligned ce/groups");
    GroupMeans gm;
    gm.mean.assign(n_groups, std::nullopt);
    gm.size.assign(n_groups, 0);
    std::vector<double> sum(n_groups, 0.0);
    for (std::size_t i = 0; i < ce.size(); ++i) {
        const int g = group_ids[i];
        if (g < 0 || g >= n_groups) throw DataError("loss: group id out of range");
        sum[g] += ce[i];
        ++gm.size[g];
    }
    for (int g = 0; g < n_groups; ++g) {
        if (gm.size[g] > 0) gm.mean[g] = sum[g] / gm.size[g];
    }
    return gm;
}

double batch_mean(std::span<const double> ce) {
    double s = 0.0;
    for (double v : ce) s += v;
    return s / static_cast<double>(ce.size());
}

// Max-disparity pair (i, j), i < j, ties to the lexicographically first pair.
std::pair<int, int> max_disparity_pair(const std::vector<std::optional<double>>& means) {
    std::pair<int, int> best{-1, -1};
    double best_gap = -1.0;
    const int n = static_cast<int>(means.size());
    for (int i = 0; i < n; ++i) {
        if (!means[i]) continue;
        for (int j = i + 1; j < n; ++j) {
            if (!means[j]) continue;
            const double gap = std::fabs(*means[i] - *means[j]);
            if (gap > best_gap) {
                best_gap = gap;
                best = {i, j};
            }
        }
    }
    return best;
}

}  // namespace

LossBreakdown worst_group_loss(std::span<const double> per_sample_ce,
                               std::span<const int> group_ids, int n_groups) {
    const GroupMeans gm = group_means(per_sample_ce, group_ids, n_groups);
    LossBreakdown b;
    b.base = batch_mean(per_sample_ce);
    b.per_group = gm.mean;
    for (int g = 0; g < n_groups; ++g) {
        if (gm.mean[g] && (b.argmax_group < 0 || *gm.mean[g] > *gm.mean[b.argmax_group])) {
            b.argmax_group = g;
        }
    }
    if (b.argmax_group < 0) throw DataError("worst_group_loss: no group present in batch");
    b.argmax_pair = max_disparity_pair(gm.mean);
    if (b.argmax_pair.first >= 0) {
        b.penalty = std::fabs(*gm.mean[b.argmax_pair.first] - *gm.mean[b.argmax_pair.second]);
    }
    b.total = *gm.mean[b.argmax_group];
    return b;
}

LossBreakdown fairness_regularized_loss(std::span<const double> per_sample_ce,
                                        std::span<const int> group_ids, int n_groups,
                                        double lambda, std::vector<std::string>* warnings) {
    if (lambda < 0.0) throw ConfigError("fairness_regularized_loss: lambda must be >= 0");
    const GroupMeans gm = group_means(per_sample_ce, group_ids, n_groups);
    LossBreakdown b;
    b.base = batch_mean(per_sample_ce);
    b.per_group = gm.mean;
    for (int g = 0; g < n_groups; ++g) {
        if (gm.mean[g] && (b.argmax_group < 0 || *gm.mean[g] > *gm.mean[b.argmax_group])) {
            b.argmax_group = g;
        }
    }
    b.argmax_pair = max_disparity_pair(gm.mean);
    if (b.argmax_pair.first >= 0) {
        b.penalty = std::fabs(*gm.mean[b.argmax_pair.first] - *gm.mean[b.argmax_pair.second]);
    } else {
        b.penalty = 0.0;
        if (warnings) {
            warnings->push_back("fairness_regularized_loss: single group in batch, penalty is 0");
        }
    }
    b.total = b.base + lambda * b.penalty;
    return b;
}

LossBreakdown batch_loss(const LossConfig& config, std::span<const double> per_sample_ce,
                         std::span<const int> group_ids, int n_groups,
                         std::vector<std::string>* warnings) {
    switch (config.mode) {
        case LossMode::cross_entropy: {
            const GroupMeans gm = group_means(per_sample_ce, group_ids, n_groups);
            LossBreakdown b;
            b.base = batch_mean(per_sample_ce);
            b.per_group = gm.mean;
            b.argmax_pair = max_disparity_pair(gm.mean);
            if (b.argmax_pair.first >= 0) {
                b.penalty =
                    std::fabs(*gm.mean[b.argmax_pair.first] - *gm.mean[b.argmax_pair.second]);
            }
            b.total = b.base;
            return b;
        }
        case LossMode::worst_group:
            return worst_group_loss(per_sample_ce, group_ids, n_groups);
        case LossMode::fairness_regularized:
            return fairness_regularized_loss(per_sample_ce, group_ids, n_groups, config.lambda,
                                             warnings);
    }
    throw ConfigError("batch_loss: bad mode");
}

std::vector<double> loss_sample_weights(const LossConfig& config, const LossBreakdown& breakdown,
                                        std::span<const int> group_ids, int n_groups) {
    const std::size_t n = group_ids.size();
    std::vector<int> group_size(n_groups, 0);
    for (int g : group_ids) ++group_size[g];
    std::vector<double> w(n, 0.0);

    switch (config.mode) {
        case LossMode::cross_entropy:
            std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
            break;
        case LossMode::worst_group: {
            const int g_star = breakdown.argmax_group;
            for (std::size_t i = 0; i < n; ++i) {
                if (group_ids[i] == g_star) w[i] = 1.0 / group_size[g_star];
            }
            break;
        }
        case LossMode::fairness_regularized: {
            const double base_w = 1.0 / static_cast<double>(n);
            std::fill(w.begin(), w.end(), base_w);
            const auto [a, bg] = breakdown.argmax_pair;
            if (a >= 0 && config.lambda > 0.0) {
                const double la = *breakdown.per_group[a];
                const double lb = *breakdown.per_group[bg];
                const double sgn = la > lb ? 1.0 : (la < lb ? -1.0 : 0.0);
                if (sgn != 0.0) {
                    for (std::size_t i = 0; i < n; ++i) {
                        if (group_ids[i] == a) w[i] += config.lambda * sgn / group_size[a];
                        if (group_ids[i] == bg) w[i] -= config.lambda * sgn / group_size[bg];
                    }
                }
            }
            break;
        }
    }
    return w;
}

ModelParams init_model(int input_dim, const Hyperparams& hp) {
    if (input_dim <= 0) throw ConfigError("init_model: input_dim must be positive");
    ModelParams p;
    p.input_dim = input_dim;
    p.hidden_width = hp.hidden_width;
    if (hp.hidden_width > 0) {
        Rng rng(hp.seed);
        p.hidden_w.resize(static_cast<std::size_t>(hp.hidden_width) * input_dim);
        p.hidden_b.resize(hp.hidden_width);
        p.out_w.resize(2 * static_cast<std::size_t>(hp.hidden_width));
        p.out_b.resize(2);
        for (auto* part : {&p.hidden_w, &p.hidden_b, &p.out_w, &p.out_b}) {
            for (auto& v : *part) v = rng.uniform_real(-0.1, 0.1);
        }
    } else {
        p.out_w.assign(2 * static_cast<std::size_t>(input_dim), 0.0);
        p.out_b.assign(2, 0.0);
    }
    return p;
}

namespace {

// Forward pass keeping hidden activations for backprop.
void forward_full(const ModelParams& p, const FeatureMatrix& X, std::vector<double>& hidden,
                  std::vector<double>& scores) {
    const int n = X.rows;
    const int d = X.cols;
    if (d != p.input_dim) throw DataError("forward: feature dimension mismatch");
    scores.assign(static_cast<std::size_t>(n) * 2, 0.0);
    if (p.hidden_width > 0) {
        const int h = p.hidden_width;
        hidden.assign(static_cast<std::size_t>(n) * h, 0.0);
        for (int i = 0; i < n; ++i) {
            const double* x = X.row(i);
            double* hrow = hidden.data() + static_cast<std::size_t>(i) * h;
            for (int j = 0; j < h; ++j) {
                double z = p.hidden_b[j];
                const double* wrow = p.hidden_w.data() + static_cast<std::size_t>(j) * d;
                for (int k = 0; k < d; ++k) z += wrow[k] * x[k];
                hrow[j] = std::tanh(z);
            }
            for (int c = 0; c < 2; ++c) {
                double z = p.out_b[c];
                const double* wrow = p.out_w.data() + static_cast<std::size_t>(c) * h;
                for (int j = 0; j < h; ++j) z += wrow[j] * hrow[j];
                scores[static_cast<std::size_t>(i) * 2 + c] = z;
            }
        }
    } else {
        hidden.clear();
        for (int i = 0; i < n; ++i) {
            const double* x = X.row(i);
            for (int c = 0; c < 2; ++c) {
                double z = p.out_b[c];
                const double* wrow = p.out_w.data() + static_cast<std::size_t>(c) * d;
                for (int k = 0; k < d; ++k) z += wrow[k] * x[k];
                scores[static_cast<std::size_t>(i) * 2 + c] = z;
            }
        }
    }
}

}  // namespace

void forward_scores(const ModelParams& params, const FeatureMatrix& X,
                    std::vector<double>& scores) {
    std::vector<double> hidden;
    forward_full(params, X, hidden, scores);
}

LossAndGrad loss_and_gradient(const ModelParams& params, const FeatureMatrix& X,
                              std::span<const int> labels, std::span<const int> group_ids,
                              int n_groups, const LossConfig& config) {
    const int n = X.rows;
    const int d = X.cols;
    if (static_cast<std::size_t>(n) != labels.size() ||
        static_cast<std::size_t>(n) != group_ids.size()) {
        throw DataError("loss_and_gradient: misaligned inputs");
    }
    std::vector<double> hidden;
    std::vector<double> scores;
    forward_full(params, X, hidden, scores);

    std::vector<double> ce(n);
    for (int i = 0; i < n; ++i) {
        ce[i] = cross_entropy(scores[2 * i], scores[2 * i + 1], labels[i]);
    }
    LossAndGrad out;
    out.breakdown = batch_loss(config, ce, group_ids, n_groups);
    const std::vector<double> w = loss_sample_weights(config, out.breakdown, group_ids, n_groups);

    ModelParams grad = params;
    for (auto* part : {&grad.hidden_w, &grad.hidden_b, &grad.out_w, &grad.out_b}) {
        std::fill(part->begin(), part->end(), 0.0);
    }
    const int h = params.hidden_width;
    for (int i = 0; i < n; ++i) {
        if (w[i] == 0.0) continue;
        const double s0 = scores[2 * i];
        const double s1 = scores[2 * i + 1];
        const double m = std::max(s0, s1);
        const double e0 = std::exp(s0 - m);
        const double e1 = std::exp(s1 - m);
        const double z = e0 + e1;
        // dCE/ds = softmax - onehot(label)
        double ds[2] = {e0 / z, e1 / z};
        ds[labels[i]] -= 1.0;
        ds[0] *= w[i];
        ds[1] *= w[i];

        if (h > 0) {
            const double* hrow = hidden.data() + static_cast<std::size_t>(i) * h;
            std::vector<double> dh(h, 0.0);
            for (int c = 0; c < 2; ++c) {
                double* gw = grad.out_w.data() + static_cast<std::size_t>(c) * h;
                const double* pw = params.out_w.data() + static_cast<std::size_t>(c) * h;
                for (int j = 0; j < h; ++j) {
                    gw[j] += ds[c] * hrow[j];
                    dh[j] += ds[c] * pw[j];
                }
                grad.out_b[c] += ds[c];
            }
            const double* x = X.row(i);
            for (int j = 0; j < h; ++j) {
                const double dz = dh[j] * (1.0 - hrow[j] * hrow[j]);  // tanh'
                double* gw = grad.hidden_w.data() + static_cast<std::size_t>(j) * d;
                for (int k = 0; k < d; ++k) gw[k] += dz * x[k];
                grad.hidden_b[j] += dz;
            }
        } else {
            const double* x = X.row(i);
            for (int c = 0; c < 2; ++c) {
                double* gw = grad.out_w.data() + static_cast<std::size_t>(c) * d;
                for (int k = 0; k < d; ++k) gw[k] += ds[c] * x[k];
                grad.out_b[c] += ds[c];
            }
        }
    }
    out.gradient = grad.flatten();
    return out;
}

ModelParams train(const FeatureMatrix& X, std::span<const int> labels,
                  std::span<const int> group_ids, int n_groups, const LossConfig& config,
                  const Hyperparams& hp, const EpochLogFn& log) {
    if (X.rows == 0) throw DataError("train: empty batch");
    std::set<int> classes(labels.begin(), labels.end());
    if (classes.size() < 2) throw DataError("train: need both classes present");
    if (hp.epochs < 0) throw ConfigError("train: epochs must be >= 0");

    ModelParams params = init_model(X.cols, hp);
    std::vector<double> flat = params.flatten();
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        LossAndGrad lg = loss_and_gradient(params, X, labels, group_ids, n_groups, config);
        if (!std::isfinite(lg.breakdown.total)) {
            throw DataError("train: non-finite loss at epoch " + std::to_string(epoch));
        }
        if (log) log(epoch, lg.breakdown);
        for (std::size_t i = 0; i < flat.size(); ++i) {
            flat[i] -= hp.learning_rate * lg.gradient[i];
        }
        params.unflatten(flat);
    }
    return params;
}

std::vector<int> predict(const ModelParams& params, const FeatureMatrix& X,
                         std::vector<double>* scores_out) {
    std::vector<double> scores;
    forward_scores(params, X, scores);
    std::vector<int> labels(X.rows);
    for (int i = 0; i < X.rows; ++i) {
        labels[i] = scores[2 * i + 1] >= scores[2 * i] ? 1 : 0;
    }
    if (scores_out) *scores_out = std::move(scores);
    return labels;
}

std::string model_to_json(const ModelParams& p) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["architecture"] = {{"input_dim", p.input_dim}, {"hidden_width", p.hidden_width}, {"classes", 2}};
    j["hidden_w"] = p.hidden_w;
    j["hidden_b"] = p.hidden_b;
    j["out_w"] = p.out_w;
    j["out_b"] = p.out_b;
    return j.dump();
}

ModelParams model_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const std::exception& e) {
        throw DataError(std::string("model_from_json: invalid JSON: ") + e.what());
    }
    if (j.value("format_version", 0) != 1) throw DataError("model_from_json: unsupported version");
    ModelParams p;
    p.input_dim = j["architecture"]["input_dim"].get<int>();
    p.hidden_width = j["architecture"]["hidden_width"].get<int>();
    p.hidden_w = j["hidden_w"].get<std::vector<double>>();
    p.hidden_b = j["hidden_b"].get<std::vector<double>>();
    p.out_w = j["out_w"].get<std::vector<double>>();
    p.out_b = j["out_b"].get<std::vector<double>>();
    return p;
}

// ----- cohorts, folds, cross-validation -----

Cohort build_cohort(const Dataset& dataset, std::span<const int> participant_indices,
                    const std::string& attribute, const CohortOptions& options) {
    const auto& values = dataset.schema.values_of(attribute);
    Cohort cohort;
    cohort.attribute = attribute;
    for (const auto& v : values) cohort.group_keys.push_back(GroupKey{attribute, v});

    bool all_embedded = !participant_indices.empty();
    for (int idx : participant_indices) {
        if (!dataset.participants[idx].embedding) {
            all_embedded = false;
            break;
        }
    }

    for (int idx : participant_indices) {
        const auto& p = dataset.participants[idx];
        auto attr_it = p.attrs.find(attribute);
        if (attr_it == p.attrs.end()) {
            throw DataError("build_cohort: participant '" + p.id + "' lacks attribute '" +
                            attribute + "'");
        }
        CohortItem item;
        item.id = p.id;
        item.label = p.label;
        item.group_id = dataset.schema.value_index(attribute, attr_it->second);
        if (all_embedded) {
            item.instances.push_back(*p.embedding);
        } else {
            if (p.qa.empty()) {
                throw DataError("build_cohort: participant '" + p.id +
                                "' has no transcript for the text path");
            }
            const ChunkPlan plan =
                chunk_transcript(p.id, p.qa, options.window_words, options.overlap_words);
            for (const auto& chunk : plan.chunks) {
                std::span<const QaPair> slice(p.qa.data() + chunk.first_pair,
                                              chunk.last_pair - chunk.first_pair + 1);
                item.instances.push_back(featurize(slice, options.features));
            }
        }
        cohort.items.push_back(std::move(item));
    }
    if (!cohort.items.empty()) {
        cohort.feature_dim = static_cast<int>(cohort.items.front().instances.front().size());
        for (const auto& item : cohort.items) {
            for (const auto& inst : item.instances) {
                if (static_cast<int>(inst.size()) != cohort.feature_dim) {
                    throw DataError("build_cohort: inconsistent feature dimensions");
                }
            }
        }
    }
    return cohort;
}

FoldAssignment stratified_folds(const Cohort& cohort, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("stratified_folds: k must be >= 2 (no held-out data otherwise)");
    long pos = 0;
    long neg = 0;
    for (const auto& item : cohort.items) {
        (item.label == 1 ? pos : neg) += 1;
    }
    if (pos < k || neg < k) {
        throw DataError("stratified_folds: smallest label stratum (" +
                        std::to_string(std::min(pos, neg)) + ") is below k=" + std::to_string(k));
    }

    // Strata are (group, label) cells in schema order; a running cursor
    // deals members cyclically so fold sizes stay balanced overall.
    const int n_groups = static_cast<int>(cohort.group_keys.size());
    FoldAssignment fa;
    fa.k = k;
    fa.fold_of.assign(cohort.items.size(), -1);
    Rng rng(seed);
    int cursor = 0;
    for (int g = 0; g < n_groups; ++g) {
        for (int label : {0, 1}) {
            std::vector<int> members;
            for (std::size_t i = 0; i < cohort.items.size(); ++i) {
                if (cohort.items[i].group_id == g && cohort.items[i].label == label) {
                    members.push_back(static_cast<int>(i));
                }
            }
            rng.shuffle(members);
            for (int m : members) {
                fa.fold_of[m] = cursor % k;
                ++cursor;
            }
        }
    }
    return fa;
}

namespace {

struct FlatBatch {
    FeatureMatrix X;
    std::vector<int> labels;
    std::vector<int> group_ids;
};

FlatBatch flatten_items(const Cohort& cohort, const std::vector<int>& item_indices) {
    FlatBatch batch;
    batch.X.cols = cohort.feature_dim;
    for (int idx : item_indices) {
        const auto& item = cohort.items[idx];
        for (const auto& inst : item.instances) {
            batch.X.data.insert(batch.X.data.end(), inst.begin(), inst.end());
            batch.labels.push_back(item.label);
            batch.group_ids.push_back(item.group_id);
            ++batch.X.rows;
        }
    }
    return batch;
}

// Train on the train split, vote chunk predictions per participant, and
// score the eval split.
FoldMetrics evaluate_split(const Cohort& cohort, const std::vector<int>& train_items,
                           const std::vector<int>& eval_items, const LossConfig& config,
                           const Hyperparams& hp, int fold_index,
                           std::vector<std::string>* warnings) {
    const FlatBatch batch = flatten_items(cohort, train_items);
    const int n_groups = static_cast<int>(cohort.group_keys.size());
    const ModelParams model =
        train(batch.X, batch.labels, batch.group_ids, n_groups, config, hp);

    std::vector<int> preds;
    std::vector<int> labels;
    std::vector<GroupKey> groups;
    FoldMetrics fm;
    fm.fold = fold_index;
    for (int idx : eval_items) {
        const auto& item = cohort.items[idx];
        FeatureMatrix Xi;
        Xi.cols = cohort.feature_dim;
        Xi.rows = static_cast<int>(item.instances.size());
        for (const auto& inst : item.instances) {
            Xi.data.insert(Xi.data.end(), inst.begin(), inst.end());
        }
        const std::vector<int> chunk_preds = predict(model, Xi);
        preds.push_back(majority_vote(chunk_preds));
        labels.push_back(item.label);
        groups.push_back(cohort.group_keys[item.group_id]);
        fm.test_ids.push_back(item.id);
    }
    fm.per_group = group_metrics(preds, labels, groups, cohort.group_keys, warnings);
    fm.pooled = confusion(preds, labels);
    return fm;
}

}  // namespace

CvResult cross_validate(const Cohort& cohort, const LossConfig& config, const Hyperparams& hp,
                        int k, std::uint64_t seed) {
    CvResult result;
    result.folds = stratified_folds(cohort, k, seed);
    for (int f = 0; f < k; ++f) {
        std::vector<int> train_items;
        std::vector<int> eval_items;
        for (std::size_t i = 0; i < cohort.items.size(); ++i) {
            (result.folds.fold_of[i] == f ? eval_items : train_items).push_back(static_cast<int>(i));
        }
        result.fold_metrics.push_back(
            evaluate_split(cohort, train_items, eval_items, config, hp, f, &result.warnings));
    }
    return result;
}

LambdaSelection select_lambda(const Cohort& cohort, const LossConfig& grid_config,
                              const Hyperparams& hp, int outer_k, int inner_k,
                              std::uint64_t seed) {
    if (grid_config.lambda_grid.empty()) throw ConfigError("select_lambda: empty lambda grid");
    std::vector<double> grid = grid_config.lambda_grid;
    std::sort(grid.begin(), grid.end());

    LambdaSelection sel;
    sel.outer_k = outer_k;
    sel.inner_k = inner_k;
    const FoldAssignment outer = stratified_folds(cohort, outer_k, seed);

    for (int of = 0; of < outer_k; ++of) {
        std::vector<int> outer_train;
        for (std::size_t i = 0; i < cohort.items.size(); ++i) {
            if (outer.fold_of[i] != of) outer_train.push_back(static_cast<int>(i));
        }
        // Inner folds over the outer-train subset only; ids never leak.
        Cohort inner_cohort;
        inner_cohort.attribute = cohort.attribute;
        inner_cohort.group_keys = cohort.group_keys;
        inner_cohort.feature_dim = cohort.feature_dim;
        for (int idx : outer_train) inner_cohort.items.push_back(cohort.items[idx]);
        const FoldAssignment inner =
            stratified_folds(inner_cohort, inner_k, derive_seed(seed, 1000 + of));

        OuterFoldSelection ofs;
        ofs.outer_fold = of;
        for (double lambda : grid) {
            LossConfig cfg = grid_config;
            cfg.mode = LossMode::fairness_regularized;
            cfg.lambda = lambda;
            LambdaGridPoint point;
            point.lambda = lambda;
            double gap_sum = 0.0;
            double ba_sum = 0.0;
            int ba_count = 0;
            for (int inf = 0; inf < inner_k; ++inf) {
                std::vector<int> train_items;
                std::vector<int> eval_items;
                for (std::size_t i = 0; i < inner_cohort.items.size(); ++i) {
                    (inner.fold_of[i] == inf ? eval_items : train_items)
                        .push_back(static_cast<int>(i));
                }
                const FoldMetrics fm =
                    evaluate_split(inner_cohort, train_items, eval_items, cfg, hp, inf, nullptr);
                try {
                    gap_sum += eo_gap(fm.per_group);
                    ++point.defined_inner_folds;
                } catch (const DataError&) {
                    // fewer than two groups with defined TPR in this fold
                }
                const GroupMetrics pooled = metrics_from_counts(GroupKey{}, fm.pooled);
                if (pooled.balanced_accuracy) {
                    ba_sum += *pooled.balanced_accuracy;
                    ++ba_count;
                }
            }
            if (point.defined_inner_folds > 0) {
                point.mean_inner_eo_gap = gap_sum / point.defined_inner_folds;
            }
            if (ba_count > 0) point.mean_inner_ba = ba_sum / ba_count;
            ofs.grid.push_back(point);
        }

        const LambdaGridPoint* best = nullptr;
        for (const auto& point : ofs.grid) {
            if (point.defined_inner_folds == 0) continue;
            if (!best || point.mean_inner_eo_gap < best->mean_inner_eo_gap) best = &point;
        }
        if (!best) {
            throw DataError("select_lambda: EO gap undefined on every inner fold (outer fold " +
                            std::to_string(of) + ")");
        }
        ofs.chosen_lambda = best->lambda;
        sel.per_fold.push_back(std::move(ofs));
    }
    return sel;
}

}  // namespace fairdetect
