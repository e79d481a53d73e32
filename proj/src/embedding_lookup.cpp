#include "negadapt/embedding_lookup.hpp"

#include "negadapt/error.hpp"

namespace negadapt {

const EmbeddingVector& EmbeddingLookup::at(std::string_view text) const {
    const EmbeddingVector* found = find(text);
    if (found == nullptr) {
        std::string shown(text.substr(0, 80));
        if (text.size() > 80) {
            shown += "...";
        }
        throw Error(ErrorCode::MissingEmbedding, "no embedding for text \"" + shown + "\"");
    }
    return *found;
}

void EmbeddingTable::insert(std::string text, EmbeddingVector vector) {
    table_.insert_or_assign(std::move(text), std::move(vector));
}

const EmbeddingVector* EmbeddingTable::find(std::string_view text) const {
    const auto it = table_.find(text);
    return it == table_.end() ? nullptr : &it->second;
}

}  // namespace negadapt
