#pragma once

#include <string>
#include <string_view>
#include <unordered_map>

#include "negadapt/vector_core.hpp"

namespace negadapt {

/// Resolves a text to its embedding. Learning and evaluation only see this
/// interface, never a provider or a file.
class EmbeddingLookup {
public:
    virtual ~EmbeddingLookup() = default;

    virtual const EmbeddingVector* find(std::string_view text) const = 0;

    /// Throws MissingEmbedding naming the text.
    const EmbeddingVector& at(std::string_view text) const;
};

/// In-memory text -> vector map.
class EmbeddingTable final : public EmbeddingLookup {
public:
    void insert(std::string text, EmbeddingVector vector);
    const EmbeddingVector* find(std::string_view text) const override;
    std::size_t size() const noexcept { return table_.size(); }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };
    std::unordered_map<std::string, EmbeddingVector, Hash, std::equal_to<>> table_;
};

}  // namespace negadapt
