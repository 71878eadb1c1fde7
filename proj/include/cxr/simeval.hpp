#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cxr::simeval {

struct EmbeddingVector {
    std::vector<double> values;
    std::size_t dim() const noexcept { return values.size(); }
};

/// Produces embeddings. embed() must be safe to call concurrently.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
};

/// Lowercased maximal ASCII alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);

/// Bag-of-words embedder over a vocabulary fitted to a corpus. Tokens get
/// indices in first-seen order; vectors are L2-normalized token counts.
/// fit() must finish before embed() is called from several threads.
class MockEmbedder final : public EmbeddingProvider {
public:
    MockEmbedder() = default;
    explicit MockEmbedder(std::span<const std::string> corpus) { fit(corpus); }

    /// Adds unseen tokens of every text to the vocabulary.
    void fit(std::span<const std::string> corpus);
    void fit(std::string_view text);

    /// Tokens outside the vocabulary are ignored. Throws ValidationError for
    /// blank text or text with no in-vocabulary token.
    EmbeddingVector embed(std::string_view text) const override;

    const std::map<std::string, std::size_t>& vocabulary() const noexcept { return index_; }

private:
    std::map<std::string, std::size_t> index_;
};

struct HttpEmbedderConfig {
    std::string base_url;
    std::string path = "/embed";
    std::string credential_env;
    std::string model_hint;
    bool openai_wire = false;  ///< {input, model} -> data[0].embedding instead of {text} -> {values}
    int timeout_seconds = 60;

    static HttpEmbedderConfig from_json(const nlohmann::json& j);
};

class HttpEmbedder final : public EmbeddingProvider {
public:
    explicit HttpEmbedder(HttpEmbedderConfig config) : config_(std::move(config)) {}
    EmbeddingVector embed(std::string_view text) const override;

private:
    HttpEmbedderConfig config_;
};

/// dot(a, b) / (|a| |b|), clamped to [-1, 1]. Throws ContractError on a
/// dimension mismatch or an all-zero vector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct ScoreSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;          ///< sample standard deviation (n - 1)
    bool std_defined = false;  ///< false when n == 1 (std reported as 0)
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Box-plot statistics. Quartiles interpolate linearly between order
/// statistics at position p * (n - 1); whiskers are the extremes.
ScoreSummary summarize_scores(std::span<const double> scores);

// ---------------------------------------------------------------------------
// Batch scoring

struct TextPair {
    std::string pair_id;
    std::string ai_text;
    std::string human_text;
};

struct SimilarityResult {
    std::string pair_id;
    double score = 0.0;
};

/// Embeds both sides of every pair and scores them, parallel over pairs
/// (OpenMP). Results follow input order.
std::vector<SimilarityResult> score_pairs(std::span<const TextPair> pairs, const EmbeddingProvider& provider);

/// Serial reference for score_pairs.
std::vector<SimilarityResult> score_pairs_reference(std::span<const TextPair> pairs,
                                                    const EmbeddingProvider& provider);

nlohmann::json summary_to_json(const ScoreSummary& s);

}  // namespace cxr::simeval
