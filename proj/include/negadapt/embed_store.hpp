#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "negadapt/embedding_lookup.hpp"
#include "negadapt/vector_core.hpp"

namespace negadapt {

inline constexpr std::size_t kDefaultBatchSize = 64;
inline constexpr std::size_t kDefaultMaxInFlight = 4;
inline constexpr std::size_t kDefaultMaxTextBytes = 64 * 1024;

struct EmbedRequest {
    std::vector<std::string> texts;
    std::string model;
    std::optional<std::string> instruction_prefix;
};

/// Throws InvalidArgument on an empty/oversized batch or an empty/oversized text.
void validate(const EmbedRequest& request, std::size_t batch_limit = kDefaultBatchSize,
              std::size_t max_text_bytes = kDefaultMaxTextBytes);

/// Lowercase hex SHA-256 of prefix + '\0' + text.
std::string text_digest(std::string_view instruction_prefix, std::string_view text);

struct StoreKey {
    std::string model;
    std::string text_digest;

    static StoreKey of(std::string model, std::string_view instruction_prefix, std::string_view text);
    std::string to_string() const { return model + "/" + text_digest; }

    friend bool operator==(const StoreKey&, const StoreKey&) = default;
};

// On-disk vector stores --------------------------------------------------

enum class StoreFormat { Jsonl, Packed };

inline constexpr char kPackedMagic[4] = {'N', 'E', 'G', 'V'};
inline constexpr std::uint32_t kPackedVersion = 1;

/// Packed layout (all integers little endian): "NEGV", u32 version, u32 dim,
/// u64 count, then per record u16 id length, id bytes, dim binary32 values.
/// Throws InvalidArgument when dims differ or an id exceeds 65535 bytes.
std::string encode_packed(std::span<const EmbeddingVector> vectors);

/// Throws FormatError (with the byte offset) or VersionUnsupported.
/// Records get `model_tag`, since the packed layout does not store one.
std::vector<EmbeddingVector> decode_packed(std::string_view bytes, const std::string& model_tag = {});

/// One {"id","model","dim","vector"} object per line.
std::string encode_jsonl(std::span<const EmbeddingVector> vectors);
std::vector<EmbeddingVector> decode_jsonl(std::string_view text);

/// Packed when the file starts with the magic bytes, JSONL otherwise.
StoreFormat detect_store_format(std::string_view bytes);
StoreFormat store_format_for_path(const std::filesystem::path& path);

void write_store(const std::filesystem::path& path, std::span<const EmbeddingVector> vectors,
                 StoreFormat format);
std::vector<EmbeddingVector> read_store(const std::filesystem::path& path,
                                        const std::string& model_tag = {});

/// Lookup over store records whose ids are text digests (as written by the
/// cache and the exporter) or the raw texts themselves.
class StoreLookup final : public EmbeddingLookup {
public:
    explicit StoreLookup(std::vector<EmbeddingVector> vectors, std::string instruction_prefix = {});
    const EmbeddingVector* find(std::string_view text) const override;
    std::size_t size() const noexcept { return vectors_.size(); }

private:
    std::vector<EmbeddingVector> vectors_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::string prefix_;
};

// Cache ------------------------------------------------------------------

/// Content-addressed cache: one single-record packed file per StoreKey,
/// at <root>/<model dir>/<digest[0:2]>/<digest>.negv. Writes go to a temp
/// file that is renamed into place.
class VectorCache {
public:
    explicit VectorCache(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path entry_path(const StoreKey& key) const;

    /// nullopt on a miss; CacheCorruption when the entry is unreadable or
    /// holds a different key.
    std::optional<EmbeddingVector> get(const StoreKey& key) const;

    /// Persists and returns the stored (binary32-quantized) vector.
    EmbeddingVector put(const StoreKey& key, const EmbeddingVector& vector) const;

private:
    std::filesystem::path root_;
};

/// NEGADAPT_CACHE_DIR, else ./negadapt-cache.
std::filesystem::path default_cache_dir();

// Provider ---------------------------------------------------------------

/// Anything that can turn a batch of texts into vectors.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    /// Vectors in request order, ids set to the text digests.
    virtual std::vector<EmbeddingVector> fetch(const EmbedRequest& request) = 0;
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};
    double factor = 2.0;
    bool jitter = true;

    /// Delay before retry `retry` (0-based): base * factor^retry plus, with
    /// jitter on, up to the same amount again scaled by `unit` in [0, 1).
    std::chrono::milliseconds delay(int retry, double unit) const;
};

struct ProviderConfig {
    /// Base URL, e.g. "http://localhost:8080/v1".
    std::string endpoint;
    std::string route = "/embeddings";
    std::optional<std::string> api_key;
    RetryPolicy retry;
    std::chrono::seconds timeout{60};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Client for the common embeddings HTTP shape:
/// POST {"model", "input": [...]} -> {"data": [{"index", "embedding"}, ...]}.
/// Thread safe; each call opens its own connection.
class HttpProvider final : public EmbeddingProvider {
public:
    explicit HttpProvider(ProviderConfig config, Sleeper sleeper = {}, std::uint64_t jitter_seed = 0);

    std::vector<EmbeddingVector> fetch(const EmbedRequest& request) override;

    const ProviderConfig& config() const noexcept { return config_; }

private:
    double next_unit();

    ProviderConfig config_;
    Sleeper sleeper_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_;
};

/// Parses a provider response body for `texts`; throws ProviderError on a
/// malformed body and InconsistentDimensions on mixed dims.
std::vector<EmbeddingVector> parse_embeddings_response(std::string_view body, const EmbedRequest& request);

/// NEGADAPT_API_KEY, else the first non-empty line of `credentials_file`.
std::optional<std::string> load_api_key(const std::optional<std::filesystem::path>& credentials_file);

// Fetching through the cache -----------------------------------------------

struct FetchOptions {
    std::size_t batch_size = kDefaultBatchSize;
    std::size_t max_in_flight = kDefaultMaxInFlight;
    std::optional<std::string> instruction_prefix;
};

struct FetchSummary {
    std::size_t requested = 0;
    std::size_t unique = 0;
    std::size_t hits = 0;
    std::size_t misses = 0;
    std::size_t provider_calls = 0;
};

struct FetchResult {
    std::vector<EmbeddingVector> vectors;
    FetchSummary summary;
};

/// Serves hits from `cache`, fetches the distinct misses in batches (up to
/// `max_in_flight` at once), persists them, and returns one vector per
/// input text in input order. Returned vectors are always the cached
/// (binary32) values, so hits and misses agree exactly.
FetchResult get_or_fetch(std::span<const std::string> texts, const std::string& model,
                         const VectorCache& cache, EmbeddingProvider& provider,
                         const FetchOptions& options = {});

}  // namespace negadapt
