#include "negadapt/embed_store.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <atomic>
#include <algorithm>
#include <bit>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <json.hpp>
#include <limits>
#include <thread>

#include "io_util.hpp"
#include "negadapt/error.hpp"

namespace negadapt {

namespace {

static_assert(std::numeric_limits<float>::is_iec559);

template <typename T>
void put_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
    }
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    }
    return static_cast<T>(v);
}

[[noreturn]] void format_error(std::size_t offset, const std::string& what) {
    throw Error(ErrorCode::FormatError, what + " at byte offset " + std::to_string(offset));
}

std::string hex(const unsigned char* data, std::size_t n) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xF]);
    }
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::IoError, "SHA-256 failed");
    }
    return hex(md, len);
}

}  // namespace

void validate(const EmbedRequest& request, std::size_t batch_limit, std::size_t max_text_bytes) {
    if (request.texts.empty()) {
        throw Error(ErrorCode::InvalidArgument, "embedding request has no texts");
    }
    if (request.texts.size() > batch_limit) {
        throw Error(ErrorCode::InvalidArgument,
                    "embedding request has " + std::to_string(request.texts.size()) +
                        " texts, limit is " + std::to_string(batch_limit));
    }
    for (const auto& text : request.texts) {
        if (text.empty()) {
            throw Error(ErrorCode::InvalidArgument, "empty text in embedding request");
        }
        if (text.size() > max_text_bytes) {
            throw Error(ErrorCode::InvalidArgument,
                        "text of " + std::to_string(text.size()) + " bytes exceeds limit of " +
                            std::to_string(max_text_bytes));
        }
    }
}

std::string text_digest(std::string_view instruction_prefix, std::string_view text) {
    std::string material;
    material.reserve(instruction_prefix.size() + 1 + text.size());
    material.append(instruction_prefix);
    material.push_back('\0');
    material.append(text);
    return sha256_hex(material);
}

StoreKey StoreKey::of(std::string model, std::string_view instruction_prefix, std::string_view text) {
    return StoreKey{std::move(model), negadapt::text_digest(instruction_prefix, text)};
}

// Packed format ------------------------------------------------------------

std::string encode_packed(std::span<const EmbeddingVector> vectors) {
    const std::size_t dim = vectors.empty() ? 0 : vectors.front().dim();
    if (dim > std::numeric_limits<std::uint32_t>::max()) {
        throw Error(ErrorCode::InvalidArgument, "dimension too large for packed store");
    }
    std::string out(kPackedMagic, sizeof(kPackedMagic));
    put_le<std::uint32_t>(out, kPackedVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
    put_le<std::uint64_t>(out, vectors.size());
    out.reserve(out.size() + vectors.size() * (2 + 4 * dim + 64));
    for (const auto& v : vectors) {
        if (v.dim() != dim) {
            throw Error(ErrorCode::InvalidArgument,
                        "packed store needs one dimension; got " + std::to_string(dim) + " and " +
                            std::to_string(v.dim()));
        }
        if (v.id().size() > std::numeric_limits<std::uint16_t>::max()) {
            throw Error(ErrorCode::InvalidArgument, "id longer than 65535 bytes");
        }
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(v.id().size()));
        out.append(v.id());
        for (double x : v.values()) {
            put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
        }
    }
    return out;
}

std::vector<EmbeddingVector> decode_packed(std::string_view bytes, const std::string& model_tag) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kPackedMagic, 4) != 0) {
        format_error(0, "missing NEGV magic");
    }
    if (bytes.size() < 8) {
        format_error(bytes.size(), "truncated header");
    }
    const auto version = get_le<std::uint32_t>(bytes, 4);
    if (version != kPackedVersion) {
        throw Error(ErrorCode::VersionUnsupported,
                    "packed store version " + std::to_string(version) + " (supported: 1)");
    }
    constexpr std::size_t header = 20;
    if (bytes.size() < header) {
        format_error(bytes.size(), "truncated header");
    }
    const std::size_t dim = get_le<std::uint32_t>(bytes, 8);
    const std::uint64_t count = get_le<std::uint64_t>(bytes, 12);
    if (dim == 0 && count > 0) {
        format_error(8, "zero dimension with records present");
    }

    std::vector<EmbeddingVector> out;
    // Each record needs at least 2 + 4*dim bytes, which bounds the reserve.
    out.reserve(static_cast<std::size_t>(
        std::min<std::uint64_t>(count, (bytes.size() - header) / (2 + 4 * dim) + 1)));
    std::size_t pos = header;
    for (std::uint64_t r = 0; r < count; ++r) {
        const std::size_t record_start = pos;
        if (bytes.size() - pos < 2) {
            format_error(pos, "truncated record " + std::to_string(r));
        }
        const std::size_t id_len = get_le<std::uint16_t>(bytes, pos);
        pos += 2;
        if (bytes.size() - pos < id_len + 4 * dim) {
            format_error(pos, "truncated record " + std::to_string(r));
        }
        std::string id(bytes.substr(pos, id_len));
        pos += id_len;
        std::vector<double> values(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            values[k] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos));
            pos += 4;
        }
        try {
            out.emplace_back(std::move(id), std::move(values), model_tag);
        } catch (const Error& e) {
            format_error(record_start, std::string("invalid record ") + std::to_string(r) + " (" +
                                           e.what() + ")");
        }
    }
    if (pos != bytes.size()) {
        format_error(pos, "trailing bytes after " + std::to_string(count) + " records");
    }
    return out;
}

// JSONL format -------------------------------------------------------------

std::string encode_jsonl(std::span<const EmbeddingVector> vectors) {
    std::string out;
    for (const auto& v : vectors) {
        nlohmann::ordered_json row;
        row["id"] = v.id();
        row["model"] = v.model_tag();
        row["dim"] = v.dim();
        row["vector"] = std::vector<double>(v.values().begin(), v.values().end());
        out += row.dump();
        out.push_back('\n');
    }
    return out;
}

std::vector<EmbeddingVector> decode_jsonl(std::string_view text) {
    std::vector<EmbeddingVector> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        const std::string_view line = detail::trim(text.substr(start, end - start));
        if (!line.empty()) {
            try {
                const auto row = nlohmann::json::parse(line);
                const auto& vec = row.at("vector");
                std::vector<double> values;
                values.reserve(vec.size());
                for (const auto& x : vec) {
                    if (!x.is_number()) {
                        format_error(start, "non-numeric vector entry");
                    }
                    values.push_back(x.get<double>());
                }
                if (row.contains("dim") && row.at("dim").get<std::size_t>() != values.size()) {
                    format_error(start, "dim field does not match vector length");
                }
                out.emplace_back(row.at("id").get<std::string>(), std::move(values),
                                 row.value("model", std::string{}));
            } catch (const nlohmann::json::exception& e) {
                format_error(start, std::string("bad JSONL record (") + e.what() + ")");
            } catch (const Error& e) {
                if (e.code() == ErrorCode::FormatError) {
                    throw;
                }
                format_error(start, std::string("invalid record (") + e.what() + ")");
            }
        }
        start = end + 1;
    }
    return out;
}

StoreFormat detect_store_format(std::string_view bytes) {
    return bytes.size() >= 4 && std::memcmp(bytes.data(), kPackedMagic, 4) == 0 ? StoreFormat::Packed
                                                                               : StoreFormat::Jsonl;
}

StoreFormat store_format_for_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return ext == ".jsonl" || ext == ".json" ? StoreFormat::Jsonl : StoreFormat::Packed;
}

void write_store(const std::filesystem::path& path, std::span<const EmbeddingVector> vectors,
                 StoreFormat format) {
    detail::write_file(path, format == StoreFormat::Packed ? encode_packed(vectors) : encode_jsonl(vectors));
}

std::vector<EmbeddingVector> read_store(const std::filesystem::path& path, const std::string& model_tag) {
    const std::string bytes = detail::read_file(path);
    if (detect_store_format(bytes) == StoreFormat::Packed) {
        return decode_packed(bytes, model_tag);
    }
    // A file that starts with part of the magic is a damaged packed store.
    if (!bytes.empty() && bytes.front() == 'N') {
        format_error(0, "missing NEGV magic");
    }
    return decode_jsonl(bytes);
}

StoreLookup::StoreLookup(std::vector<EmbeddingVector> vectors, std::string instruction_prefix)
    : vectors_(std::move(vectors)), prefix_(std::move(instruction_prefix)) {
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
        by_id_.emplace(vectors_[i].id(), i);
    }
}

const EmbeddingVector* StoreLookup::find(std::string_view text) const {
    if (auto it = by_id_.find(text_digest(prefix_, text)); it != by_id_.end()) {
        return &vectors_[it->second];
    }
    if (auto it = by_id_.find(std::string(text)); it != by_id_.end()) {
        return &vectors_[it->second];
    }
    return nullptr;
}

// Cache --------------------------------------------------------------------

VectorCache::VectorCache(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path VectorCache::entry_path(const StoreKey& key) const {
    std::string dir;
    for (char c : key.model) {
        const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                          c == '.' || c == '-' || c == '_';
        dir.push_back(safe ? c : '_');
    }
    // Distinct model names can sanitize to the same string.
    dir += "-" + sha256_hex(key.model).substr(0, 8);
    return root_ / dir / key.text_digest.substr(0, 2) / (key.text_digest + ".negv");
}

std::optional<EmbeddingVector> VectorCache::get(const StoreKey& key) const {
    const auto path = entry_path(key);
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        return std::nullopt;
    }
    std::vector<EmbeddingVector> records;
    try {
        records = decode_packed(detail::read_file(path), key.model);
    } catch (const Error& e) {
        throw Error(ErrorCode::CacheCorruption, key.to_string() + " (" + e.what() + ")");
    }
    if (records.size() != 1 || records.front().id() != key.text_digest) {
        throw Error(ErrorCode::CacheCorruption, key.to_string() + " (entry holds a different key)");
    }
    return std::move(records.front());
}

EmbeddingVector VectorCache::put(const StoreKey& key, const EmbeddingVector& vector) const {
    static std::atomic<std::uint64_t> counter{0};
    const auto path = entry_path(key);
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    const EmbeddingVector record(key.text_digest,
                                 std::vector<double>(vector.values().begin(), vector.values().end()),
                                 key.model);
    const std::string bytes = encode_packed(std::span(&record, 1));
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
    detail::write_file(tmp, bytes);
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "cannot move cache entry into " + path.string());
    }
    return std::move(decode_packed(bytes, key.model).front());
}

std::filesystem::path default_cache_dir() {
    if (const char* env = std::getenv("NEGADAPT_CACHE_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return "negadapt-cache";
}

std::optional<std::string> load_api_key(const std::optional<std::filesystem::path>& credentials_file) {
    if (const char* env = std::getenv("NEGADAPT_API_KEY"); env != nullptr && *env != '\0') {
        return std::string(env);
    }
    if (!credentials_file) {
        return std::nullopt;
    }
    for (const auto& line : detail::split_lines(detail::read_file(*credentials_file))) {
        const auto t = detail::trim(line);
        if (!t.empty()) {
            return std::string(t);
        }
    }
    return std::nullopt;
}

// get_or_fetch -------------------------------------------------------------

FetchResult get_or_fetch(std::span<const std::string> texts, const std::string& model,
                         const VectorCache& cache, EmbeddingProvider& provider,
                         const FetchOptions& options) {
    if (options.batch_size == 0 || options.max_in_flight == 0) {
        throw Error(ErrorCode::InvalidArgument, "batch size and concurrency must be at least 1");
    }
    const std::string prefix = options.instruction_prefix.value_or("");

    FetchResult result;
    result.summary.requested = texts.size();

    // Distinct keys in first-seen order; slot[i] is the unique index of texts[i].
    std::vector<StoreKey> keys;
    std::vector<std::size_t> first_text;
    std::vector<std::size_t> slot(texts.size());
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (texts[i].empty()) {
            throw Error(ErrorCode::InvalidArgument, "cannot embed an empty text (input " + std::to_string(i) + ")");
        }
        auto key = StoreKey::of(model, prefix, texts[i]);
        auto [it, inserted] = seen.emplace(key.text_digest, keys.size());
        if (inserted) {
            keys.push_back(std::move(key));
            first_text.push_back(i);
        }
        slot[i] = it->second;
    }
    result.summary.unique = keys.size();

    std::vector<std::optional<EmbeddingVector>> resolved(keys.size());
    std::vector<std::size_t> misses;
    for (std::size_t u = 0; u < keys.size(); ++u) {
        resolved[u] = cache.get(keys[u]);
        if (!resolved[u]) {
            misses.push_back(u);
        }
    }
    result.summary.misses = misses.size();
    result.summary.hits = keys.size() - misses.size();

    const std::size_t n_batches = (misses.size() + options.batch_size - 1) / options.batch_size;
    result.summary.provider_calls = n_batches;
    std::atomic<std::size_t> next_batch{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!failed.load()) {
            const std::size_t b = next_batch.fetch_add(1);
            if (b >= n_batches) {
                return;
            }
            try {
                const std::size_t lo = b * options.batch_size;
                const std::size_t hi = std::min(misses.size(), lo + options.batch_size);
                EmbedRequest request{{}, model, options.instruction_prefix};
                for (std::size_t m = lo; m < hi; ++m) {
                    request.texts.push_back(texts[first_text[misses[m]]]);
                }
                auto fetched = provider.fetch(request);
                if (fetched.size() != request.texts.size()) {
                    throw Error(ErrorCode::ProviderError,
                                "provider returned " + std::to_string(fetched.size()) + " vectors for " +
                                    std::to_string(request.texts.size()) + " texts");
                }
                for (std::size_t m = lo; m < hi; ++m) {
                    resolved[misses[m]] = cache.put(keys[misses[m]], fetched[m - lo]);
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                failed = true;
            }
        }
    };

    const std::size_t n_workers = std::min(options.max_in_flight, n_batches);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }

    std::optional<std::size_t> dim;
    result.vectors.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto& v = *resolved[slot[i]];
        if (dim && *dim != v.dim()) {
            throw Error(ErrorCode::InconsistentDimensions,
                        "cached vectors for " + model + " have dims " + std::to_string(*dim) + " and " +
                            std::to_string(v.dim()));
        }
        dim = v.dim();
        result.vectors.push_back(v);
    }
    return result;
}

}  // namespace negadapt
