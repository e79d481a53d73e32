#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "negadapt/datasets.hpp"
#include "negadapt/error.hpp"

namespace negadapt {

namespace {

struct Token {
    std::size_t begin;      // whole token
    std::size_t end;
    std::size_t core_begin; // word without surrounding punctuation
    std::size_t core_end;
    std::string lower;      // lowercased core
};

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '\'' || c == '-';
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Normalizes the typographic apostrophe so "isn’t" matches "isn't".
std::string fold_apostrophes(std::string s) {
    const std::string curly = "\xE2\x80\x99";
    for (auto pos = s.find(curly); pos != std::string::npos; pos = s.find(curly, pos + 1)) {
        s.replace(pos, curly.size(), "'");
    }
    return s;
}

std::vector<Token> tokenize(const std::string& s) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])) != 0) {
            ++i;
        }
        if (i >= s.size()) {
            break;
        }
        Token t{};
        t.begin = i;
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])) == 0) {
            ++i;
        }
        t.end = i;
        t.core_begin = t.begin;
        t.core_end = t.end;
        while (t.core_begin < t.core_end && !is_word_char(s[t.core_begin])) {
            ++t.core_begin;
        }
        while (t.core_end > t.core_begin && !is_word_char(s[t.core_end - 1])) {
            --t.core_end;
        }
        t.lower = to_lower(std::string_view(s).substr(t.core_begin, t.core_end - t.core_begin));
        tokens.push_back(std::move(t));
    }
    return tokens;
}

const std::unordered_set<std::string>& auxiliaries() {
    static const std::unordered_set<std::string> set{
        "is",   "are",   "was",   "were", "am",  "has",   "have",  "had",    "will", "would",
        "can",  "could", "may",   "might", "must", "should", "do",  "does",  "did"};
    return set;
}

// Contracted or fused negative auxiliaries and their positive form.
const std::unordered_map<std::string, std::string>& negative_auxiliaries() {
    static const std::unordered_map<std::string, std::string> map{
        {"isn't", "is"},         {"aren't", "are"},       {"wasn't", "was"},
        {"weren't", "were"},     {"hasn't", "has"},       {"haven't", "have"},
        {"hadn't", "had"},       {"won't", "will"},       {"wouldn't", "would"},
        {"can't", "can"},        {"cannot", "can"},       {"couldn't", "could"},
        {"mightn't", "might"},   {"mustn't", "must"},     {"shouldn't", "should"},
        {"don't", "do"},         {"doesn't", "does"},     {"didn't", "did"},
    };
    return map;
}

enum class VerbForm { Base, ThirdSingular, Past };

struct VerbEntry {
    std::string lemma;
    VerbForm form;
};

std::string third_singular(const std::string& base) {
    const auto ends = [&](std::string_view suffix) {
        return base.size() >= suffix.size() &&
               base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends("s") || ends("x") || ends("z") || ends("ch") || ends("sh") || ends("o")) {
        return base + "es";
    }
    if (base.size() > 1 && ends("y") &&
        std::string_view("aeiou").find(base[base.size() - 2]) == std::string_view::npos) {
        return base.substr(0, base.size() - 1) + "ies";
    }
    return base + "s";
}

std::string regular_past(const std::string& base) {
    if (base.back() == 'e') {
        return base + "d";
    }
    if (base.size() > 1 && base.back() == 'y' &&
        std::string_view("aeiou").find(base[base.size() - 2]) == std::string_view::npos) {
        return base.substr(0, base.size() - 1) + "ied";
    }
    return base + "ed";
}

// Common lexical verbs; an empty past means the regular -ed form.
const std::unordered_map<std::string, VerbEntry>& verb_table() {
    static const std::unordered_map<std::string, VerbEntry> table = [] {
        const std::vector<std::pair<std::string, std::string>> verbs{
            {"add", ""},        {"agree", ""},      {"allow", ""},      {"answer", ""},
            {"appear", ""},     {"arrive", ""},     {"ask", ""},        {"attack", ""},
            {"bake", ""},       {"bark", ""},       {"become", "became"}, {"begin", "began"},
            {"believe", ""},    {"belong", ""},     {"bite", "bit"},    {"blow", "blew"},
            {"boil", ""},       {"break", "broke"}, {"bring", "brought"}, {"build", "built"},
            {"burn", ""},       {"buy", "bought"},  {"call", ""},       {"carry", ""},
            {"catch", "caught"}, {"change", ""},    {"chase", ""},      {"check", ""},
            {"choose", "chose"}, {"clean", ""},     {"climb", ""},      {"close", ""},
            {"come", "came"},   {"cook", ""},       {"cost", "cost"},   {"count", ""},
            {"cover", ""},      {"cross", ""},      {"cry", ""},        {"cut", "cut"},
            {"dance", ""},      {"decide", ""},     {"die", ""},        {"dig", "dug"},
            {"draw", "drew"},   {"dream", ""},      {"drink", "drank"}, {"drive", "drove"},
            {"drop", "dropped"}, {"eat", "ate"},    {"end", ""},        {"enjoy", ""},
            {"enter", ""},      {"explain", ""},    {"fall", "fell"},   {"feed", "fed"},
            {"feel", "felt"},   {"fight", "fought"}, {"fill", ""},      {"find", "found"},
            {"finish", ""},     {"fish", ""},       {"fit", "fit"},     {"fly", "flew"},
            {"follow", ""},     {"forget", "forgot"}, {"get", "got"},   {"give", "gave"},
            {"go", "went"},     {"grow", "grew"},   {"happen", ""},     {"hate", ""},
            {"hear", "heard"},  {"help", ""},       {"hide", "hid"},    {"hit", "hit"},
            {"hold", "held"},   {"hope", ""},       {"hurt", "hurt"},   {"join", ""},
            {"jump", ""},       {"keep", "kept"},   {"kick", ""},       {"kill", ""},
            {"know", "knew"},   {"land", ""},       {"last", ""},       {"laugh", ""},
            {"lay", "laid"},    {"lead", "led"},    {"learn", ""},      {"leave", "left"},
            {"lend", "lent"},   {"let", "let"},     {"lie", ""},        {"like", ""},
            {"listen", ""},     {"live", ""},       {"look", ""},       {"lose", "lost"},
            {"love", ""},       {"make", "made"},   {"mean", "meant"},  {"meet", "met"},
            {"mix", ""},        {"move", ""},       {"need", ""},       {"open", ""},
            {"order", ""},      {"own", ""},        {"paint", ""},      {"pass", ""},
            {"pay", "paid"},    {"pick", ""},       {"place", ""},      {"plan", "planned"},
            {"plant", ""},      {"play", ""},       {"pour", ""},       {"prefer", "preferred"},
            {"pull", ""},       {"push", ""},       {"put", "put"},     {"rain", ""},
            {"reach", ""},      {"read", "read"},   {"remain", ""},     {"remember", ""},
            {"ride", "rode"},   {"ring", "rang"},   {"rise", "rose"},   {"run", "ran"},
            {"say", "said"},    {"see", "saw"},     {"seem", ""},       {"sell", "sold"},
            {"send", "sent"},   {"set", "set"},     {"shake", "shook"}, {"shine", "shone"},
            {"shoot", "shot"},  {"show", ""},       {"shut", "shut"},   {"sing", "sang"},
            {"sink", "sank"},   {"sit", "sat"},     {"sleep", "slept"}, {"slice", ""},
            {"slide", "slid"},  {"smile", ""},      {"speak", "spoke"}, {"spend", "spent"},
            {"stand", "stood"}, {"start", ""},      {"stay", ""},       {"steal", "stole"},
            {"stop", "stopped"}, {"study", ""},     {"support", ""},    {"swim", "swam"},
            {"take", "took"},   {"talk", ""},       {"teach", "taught"}, {"tell", "told"},
            {"think", "thought"}, {"throw", "threw"}, {"touch", ""},    {"travel", ""},
            {"try", ""},        {"turn", ""},       {"understand", "understood"},
            {"use", ""},        {"visit", ""},      {"wait", ""},       {"wake", "woke"},
            {"walk", ""},       {"want", ""},       {"wash", ""},       {"watch", ""},
            {"wear", "wore"},   {"win", "won"},     {"wish", ""},       {"work", ""},
            {"worry", ""},      {"write", "wrote"}, {"lift", ""},       {"score", ""},
            {"spread", "spread"}, {"fry", ""},      {"chop", "chopped"},
            {"peel", ""},       {"ski", ""},        {"surf", ""},       {"kiss", ""},
            {"hug", "hugged"},  {"rest", ""},       {"fix", ""},        {"hunt", ""},
        };
        std::unordered_map<std::string, VerbEntry> t;
        for (const auto& [base, past] : verbs) {
            // Insertion order gives base forms priority when forms coincide.
            t.emplace(base, VerbEntry{base, VerbForm::Base});
            t.emplace(third_singular(base), VerbEntry{base, VerbForm::ThirdSingular});
            t.emplace(past.empty() ? regular_past(base) : past, VerbEntry{base, VerbForm::Past});
        }
        return t;
    }();
    return table;
}

const std::unordered_set<std::string>& non_verbs() {
    static const std::unordered_set<std::string> set{
        "the",  "a",     "an",     "this",  "that",  "these", "those", "my",   "your",
        "his",  "her",   "its",    "our",   "their", "us",    "yes",   "thus", "always",
        "perhaps", "news", "series", "species", "as", "was", "has", "is", "does", "less",
        "unless", "across", "towards", "sometimes", "bus", "gas", "glass", "class", "boss",
        "red", "bed", "shed", "need", "seed", "speed", "feed", "hundred", "indeed", "sled",
        "he", "she", "it", "they", "we", "i", "you", "him", "them", "me", "not", "very",
    };
    return set;
}

const std::unordered_set<std::string>& determiners() {
    static const std::unordered_set<std::string> set{
        "the", "a", "an", "this", "that", "these", "those", "my", "your",
        "his", "her", "its", "our", "their", "some", "many", "two", "three", "several"};
    return set;
}

bool all_lower_alpha(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::islower(c) != 0;
    });
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Guesses a lemma for an unlisted -ed / -s form.
std::optional<VerbEntry> fallback_verb(const std::string& word, const std::string& previous) {
    if (!all_lower_alpha(word) || non_verbs().count(word) != 0) {
        return std::nullopt;
    }
    if (word.size() > 4 && ends_with(word, "ed")) {
        std::string lemma;
        if (ends_with(word, "ied")) {
            lemma = word.substr(0, word.size() - 3) + "y";
        } else {
            lemma = word.substr(0, word.size() - 2);
            const std::size_t n = lemma.size();
            if (n > 2 && lemma[n - 1] == lemma[n - 2] && std::string_view("lsz").find(lemma[n - 1]) ==
                                                              std::string_view::npos) {
                lemma.pop_back();
            }
        }
        return VerbEntry{lemma, VerbForm::Past};
    }
    if (word.size() > 3 && ends_with(word, "s") && !ends_with(word, "ss") &&
        !ends_with(word, "us") && !ends_with(word, "is") && determiners().count(previous) == 0) {
        std::string lemma;
        if (ends_with(word, "ies")) {
            lemma = word.substr(0, word.size() - 3) + "y";
        } else if (ends_with(word, "ches") || ends_with(word, "shes") || ends_with(word, "xes") ||
                   ends_with(word, "zes") || ends_with(word, "sses") || ends_with(word, "oes")) {
            lemma = word.substr(0, word.size() - 2);
        } else {
            lemma = word.substr(0, word.size() - 1);
        }
        return VerbEntry{lemma, VerbForm::ThirdSingular};
    }
    return std::nullopt;
}

// Matches the case of `model`'s first letter onto `word`.
std::string match_initial_case(std::string word, std::string_view model) {
    if (!model.empty() && !word.empty() && std::isupper(static_cast<unsigned char>(model[0])) != 0) {
        word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
    }
    return word;
}

}  // namespace

std::string negate_sentence(const std::string& sentence) {
    std::string s = fold_apostrophes(sentence);
    const auto tokens = tokenize(s);
    if (tokens.empty()) {
        throw Error(ErrorCode::CannotNegate, "empty sentence");
    }

    // Auxiliary, copula or modal: delete an existing cue or insert one.
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        if (const auto it = negative_auxiliaries().find(t.lower); it != negative_auxiliaries().end()) {
            const std::string_view original(s.data() + t.core_begin, t.core_end - t.core_begin);
            s.replace(t.core_begin, t.core_end - t.core_begin,
                      match_initial_case(it->second, original));
            return s;
        }
        if (auxiliaries().count(t.lower) == 0) {
            continue;
        }
        if (i + 1 < tokens.size() && tokens[i + 1].lower == "not" && t.core_end == t.end) {
            s.erase(t.core_end, tokens[i + 1].core_end - t.core_end);
            return s;
        }
        s.insert(t.core_end, " not");
        return s;
    }

    // Do-support on the first recognizable lexical verb after the subject head.
    const auto support = [&](const Token& t, const VerbEntry& verb) {
        const char* aux = verb.form == VerbForm::Past            ? "did"
                          : verb.form == VerbForm::ThirdSingular ? "does"
                                                                 : "do";
        s.replace(t.core_begin, t.core_end - t.core_begin, std::string(aux) + " not " + verb.lemma);
        return s;
    };
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        const auto it = verb_table().find(tokens[i].lower);
        if (it == verb_table().end() || !all_lower_alpha(tokens[i].lower)) {
            continue;
        }
        VerbEntry verb = it->second;
        // "put", "read", "cut"...: after he/she/it the bare form must be past.
        static const std::unordered_set<std::string> unchanged_past{
            "put", "cut", "hit", "let", "set", "read", "cost", "hurt", "shut", "fit", "spread"};
        if (verb.form == VerbForm::Base && unchanged_past.count(tokens[i].lower) != 0) {
            const auto& prev = tokens[i - 1].lower;
            if (prev == "he" || prev == "she" || prev == "it") {
                verb.form = VerbForm::Past;
            }
        }
        return support(tokens[i], verb);
    }
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (const auto verb = fallback_verb(tokens[i].lower, tokens[i - 1].lower)) {
            return support(tokens[i], *verb);
        }
    }
    throw Error(ErrorCode::CannotNegate, "no finite verb found in \"" + sentence + "\"");
}

}  // namespace negadapt
