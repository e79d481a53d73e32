#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "io_util.hpp"
#include "negadapt/adapter.hpp"
#include "negadapt/datasets.hpp"
#include "negadapt/diagnose.hpp"
#include "negadapt/embed_store.hpp"
#include "negadapt/error.hpp"
#include "negadapt/evaluate.hpp"
#include "negadapt/stats.hpp"

namespace negadapt::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using detail::format_double;
using detail::trim;

constexpr const char* kEmbedFormat = "negadapt-embed/1";
constexpr const char* kEvalFormat = "negadapt-eval/1";

const std::vector<std::string> kConfigKeys{
    "endpoint", "model", "cache_dir", "batch_size", "max_in_flight", "instruction_prefix",
    "seed", "grid", "output_dir", "retry_base_ms",
};

Error invalid(const std::string& message) { return Error(ErrorCode::InvalidArgument, message); }

template <typename T>
T parse_integer(const std::string& key, std::string_view text) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw invalid(key + ": not an integer: '" + std::string(text) + "'");
    }
    return value;
}

std::optional<double> parse_real(std::string_view text) {
    text = trim(text);
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end) {
        return std::nullopt;
    }
    return value;
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        parts.emplace_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) {
            return parts;
        }
        start = pos + 1;
    }
}

std::vector<double> parse_grid(std::string_view text) {
    std::vector<double> grid;
    for (const auto& part : split(text, ',')) {
        const auto v = parse_real(part);
        if (!v || !std::isfinite(*v)) {
            throw invalid("grid: not a number: '" + part + "'");
        }
        grid.push_back(*v);
    }
    if (grid.empty()) {
        throw invalid("grid is empty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0) {
            throw invalid("grid values must be >= 0");
        }
        if (i > 0 && grid[i] <= grid[i - 1]) {
            throw invalid("grid must be sorted ascending without repeats");
        }
    }
    return grid;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> sizes;
    for (const auto& part : split(text, ',')) {
        sizes.push_back(parse_integer<std::size_t>("train-sizes", trim(part)));
    }
    return sizes;
}

void set_key(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "endpoint") {
        config.endpoint = value;
    } else if (key == "model") {
        config.model = value;
    } else if (key == "cache_dir") {
        config.cache_dir = value;
    } else if (key == "batch_size") {
        config.batch_size = parse_integer<std::size_t>(key, value);
        if (config.batch_size < 1) {
            throw invalid("batch_size must be >= 1");
        }
    } else if (key == "max_in_flight") {
        config.max_in_flight = parse_integer<std::size_t>(key, value);
        if (config.max_in_flight < 1) {
            throw invalid("max_in_flight must be >= 1");
        }
    } else if (key == "instruction_prefix") {
        config.instruction_prefix = value;
    } else if (key == "seed") {
        config.seed = parse_integer<std::uint64_t>(key, value);
    } else if (key == "grid") {
        config.grid = parse_grid(value);
    } else if (key == "output_dir") {
        config.output_dir = fs::path(value);
    } else if (key == "retry_base_ms") {
        config.retry_base_ms = parse_integer<long>(key, value);
        if (config.retry_base_ms < 0) {
            throw invalid("retry_base_ms must be >= 0");
        }
    } else {
        throw invalid("unknown config key '" + key + "'");
    }
}

bool looks_like_credential(std::string key) {
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const char* word : {"key", "token", "secret", "password", "credential"}) {
        if (key.find(word) != std::string::npos) {
            return true;
        }
    }
    return false;
}

std::string env_name(const std::string& key) {
    std::string name = "NEGADAPT_";
    for (char c : key) {
        name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return name;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::FileNotFound:
        case ErrorCode::IoError:
        case ErrorCode::CacheCorruption:
            return kIoFailure;
        case ErrorCode::ProviderError:
        case ErrorCode::InconsistentDimensions:
        case ErrorCode::RetriesExhausted:
            return kProviderFailure;
        case ErrorCode::NumericalError:
            return kInternalFailure;
        default:
            return kDataFailure;
    }
}

// Flags shared by every subcommand; strings so they go through set_key.
struct GlobalFlags {
    std::map<std::string, std::optional<std::string>> values;
    std::optional<std::string> config_file;
    std::optional<std::string> credentials_file;
    std::vector<std::string> vectors;
};

struct Context {
    RunConfig config;
    std::vector<fs::path> vectors;
    std::optional<fs::path> credentials_file;
    std::ostream& out;
    std::ostream& err;
    const EnvLookup& env;

    /// Human-readable text goes to stdout unless stdout carries JSON.
    bool json_on_stdout = false;
    std::ostream& human() { return json_on_stdout ? err : out; }
};

RunConfig resolve_config(const GlobalFlags& flags, const EnvLookup& env) {
    RunConfig config;
    if (flags.config_file) {
        apply_config_text(config, detail::read_file(*flags.config_file));
    }
    for (const auto& key : kConfigKeys) {
        if (const auto value = env(env_name(key))) {
            set_key(config, key, *value);
        }
    }
    for (const auto& [key, value] : flags.values) {
        if (value) {
            set_key(config, key, *value);
        }
    }
    if (config.grid.empty()) {
        config.grid = default_grid();
    }
    return config;
}

// Where a primary document goes: an explicit file, the output directory,
// or stdout.
std::optional<fs::path> target_for(const Context& ctx, const std::string& file_name,
                                   const std::optional<std::string>& explicit_path) {
    if (explicit_path) {
        return fs::path(*explicit_path);
    }
    if (ctx.config.output_dir) {
        return *ctx.config.output_dir / file_name;
    }
    return std::nullopt;
}

void write_output(const fs::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) {
            throw Error(ErrorCode::IoError, "cannot create " + path.parent_path().string());
        }
    }
    detail::write_file(path, contents);
}

void emit_primary(Context& ctx, const std::string& file_name, const std::string& contents,
                  const std::optional<std::string>& explicit_path) {
    if (const auto path = target_for(ctx, file_name, explicit_path)) {
        write_output(*path, contents);
        ctx.err << "wrote " << path->string() << "\n";
    } else {
        ctx.out << contents;
    }
}

/// Secondary files (CSV) are only written when an output directory is set.
void emit_secondary(Context& ctx, const std::string& file_name, const std::string& contents) {
    if (ctx.config.output_dir) {
        const auto path = *ctx.config.output_dir / file_name;
        write_output(path, contents);
        ctx.err << "wrote " << path.string() << "\n";
    }
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

bool primary_goes_to_stdout(const Context& ctx, const std::optional<std::string>& explicit_path) {
    return !explicit_path && !ctx.config.output_dir;
}

// Datasets -------------------------------------------------------------------

enum class DatasetKind { Pairs, Choice, Triplets };

DatasetKind detect_kind(const fs::path& path, const std::string& forced) {
    if (forced == "pairs") {
        return DatasetKind::Pairs;
    }
    if (forced == "choice") {
        return DatasetKind::Choice;
    }
    if (forced == "triplets") {
        return DatasetKind::Triplets;
    }
    if (forced != "auto") {
        throw invalid("unknown dataset kind '" + forced + "'");
    }
    const auto ext = path.extension().string();
    if (ext == ".tsv" || ext == ".csv") {
        return DatasetKind::Pairs;
    }
    if (ext == ".jsonl" || ext == ".json") {
        for (const auto& line : detail::split_lines(detail::read_file(path))) {
            if (trim(line).empty()) {
                continue;
            }
            const auto doc = nlohmann::json::parse(line, nullptr, false);
            if (doc.is_object() && doc.contains("candidates")) {
                return DatasetKind::Choice;
            }
            if (doc.is_object() && doc.contains("paraphrase")) {
                return DatasetKind::Triplets;
            }
            throw Error(ErrorCode::FormatError,
                        path.string() + ": cannot tell the dataset kind; pass --kind");
        }
        throw Error(ErrorCode::NoValidRows, path.string() + " is empty");
    }
    return DatasetKind::Choice;
}

ScoredPairFile load_pairs(Context& ctx, const fs::path& path, double score_scale) {
    auto file = load_scored_pairs(path, score_scale);
    if (!file.rejects.empty()) {
        ctx.err << "warning: " << file.rejects.size() << " unparseable row(s) skipped in " << path.string()
                << " (first at line " << file.rejects.front().line << ": " << file.rejects.front().reason
                << ")\n";
    }
    return file;
}

void add_text(std::vector<std::string>& texts, std::set<std::string>& seen, const std::string& text) {
    if (seen.insert(text).second) {
        texts.push_back(text);
    }
}

std::vector<std::string> texts_of(std::span<const ScoredPair> pairs) {
    std::vector<std::string> texts;
    std::set<std::string> seen;
    for (const auto& p : pairs) {
        add_text(texts, seen, p.sentence1);
        add_text(texts, seen, p.sentence2);
        if (p.neg_sentence1) {
            add_text(texts, seen, *p.neg_sentence1);
        }
    }
    return texts;
}

std::vector<std::string> texts_of(std::span<const ChoiceItem> items) {
    std::vector<std::string> texts;
    std::set<std::string> seen;
    for (const auto& item : items) {
        add_text(texts, seen, item.anchor);
        for (const auto& c : item.candidates) {
            add_text(texts, seen, c);
        }
    }
    return texts;
}

std::vector<std::string> texts_of(std::span<const NegationTriplet> triplets) {
    std::vector<std::string> texts;
    std::set<std::string> seen;
    for (const auto& t : triplets) {
        add_text(texts, seen, t.anchor);
        add_text(texts, seen, t.paraphrase);
        add_text(texts, seen, t.negation);
    }
    return texts;
}

// Embeddings -----------------------------------------------------------------

std::unique_ptr<HttpProvider> make_provider(Context& ctx) {
    if (ctx.config.endpoint.empty()) {
        throw invalid("no embedding source: pass --vectors or set an endpoint");
    }
    if (ctx.config.model.empty()) {
        throw invalid("no model: pass --model");
    }
    ProviderConfig pc;
    pc.endpoint = ctx.config.endpoint;
    if (const auto key = ctx.env("NEGADAPT_API_KEY"); key && !key->empty()) {
        pc.api_key = *key;
    } else if (ctx.credentials_file) {
        pc.api_key = load_api_key(ctx.credentials_file);
    }
    pc.retry.base_delay = std::chrono::milliseconds(ctx.config.retry_base_ms);
    return std::make_unique<HttpProvider>(pc, Sleeper{}, ctx.config.seed);
}

FetchResult fetch_through_cache(Context& ctx, std::span<const std::string> texts) {
    auto provider = make_provider(ctx);
    const VectorCache cache(ctx.config.cache_dir);
    FetchOptions options;
    options.batch_size = ctx.config.batch_size;
    options.max_in_flight = ctx.config.max_in_flight;
    options.instruction_prefix = ctx.config.instruction_prefix;
    return get_or_fetch(texts, ctx.config.model, cache, *provider, options);
}

/// Vectors from --vectors store files when given, else from the provider
/// through the cache.
std::unique_ptr<EmbeddingLookup> lookup_for(Context& ctx, const std::vector<std::string>& texts) {
    if (!ctx.vectors.empty()) {
        std::vector<EmbeddingVector> all;
        for (const auto& path : ctx.vectors) {
            auto part = read_store(path, ctx.config.model);
            all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
        }
        return std::make_unique<StoreLookup>(std::move(all), ctx.config.instruction_prefix.value_or(""));
    }
    auto fetched = fetch_through_cache(ctx, texts);
    ctx.err << "embeddings: " << fetched.summary.unique << " unique, " << fetched.summary.hits << " cached, "
            << fetched.summary.misses << " fetched\n";
    auto table = std::make_unique<EmbeddingTable>();
    for (std::size_t i = 0; i < texts.size(); ++i) {
        table->insert(texts[i], std::move(fetched.vectors[i]));
    }
    return table;
}

std::string model_tag(const Context& ctx) {
    if (!ctx.config.model.empty()) {
        return ctx.config.model;
    }
    if (!ctx.vectors.empty()) {
        return ctx.vectors.front().stem().string();
    }
    return {};
}

std::string percent(double fraction) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * fraction;
    return s.str();
}

// Commands -------------------------------------------------------------------

struct NegateArgs {
    std::string input;
    std::string output;
};

int cmd_negate(Context& ctx, const NegateArgs& args) {
    const auto text = detail::read_file(args.input);
    std::string out = "sentence1\tsentence2\tscore\tneg_sentence1\n";
    std::size_t rows = 0;
    std::size_t failed = 0;
    bool first = true;
    for (const auto& line : detail::split_lines(text)) {
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split(line, '\t');
        fields.resize(std::max<std::size_t>(fields.size(), 3));
        if (first) {
            first = false;
            if (!parse_real(fields[2])) {
                continue;  // header row
            }
        }
        ++rows;
        std::string negated;
        try {
            negated = negate_sentence(fields[0]);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::CannotNegate) {
                throw;
            }
            ++failed;
        }
        out += fields[0] + "\t" + fields[1] + "\t" + fields[2] + "\t" + negated + "\n";
    }
    write_output(args.output, out);
    if (rows == 0) {
        ctx.err << "warning: " << args.input << " has no rows; wrote header only\n";
    } else {
        ctx.err << "negated " << rows - failed << " of " << rows << " rows";
        if (failed > 0) {
            ctx.err << "; " << failed << " could not be negated (empty neg_sentence1)";
        }
        ctx.err << "\n";
    }
    return kOk;
}

struct DatasetArgs {
    std::string path;
    std::string kind = "auto";
    double score_scale = 5.0;
};

std::vector<std::string> dataset_texts(Context& ctx, const DatasetArgs& args) {
    switch (detect_kind(args.path, args.kind)) {
        case DatasetKind::Pairs:
            return texts_of(load_pairs(ctx, args.path, args.score_scale).pairs);
        case DatasetKind::Choice:
            return texts_of(load_choice_items(args.path, ctx.config.seed));
        case DatasetKind::Triplets:
            return texts_of(load_triplets(args.path));
    }
    return {};
}

struct EmbedArgs {
    DatasetArgs dataset;
    std::optional<std::string> store;
    std::optional<std::string> out;
};

int cmd_embed(Context& ctx, const EmbedArgs& args) {
    const auto texts = dataset_texts(ctx, args.dataset);
    if (texts.empty()) {
        throw Error(ErrorCode::NoValidRows, args.dataset.path + " has no texts");
    }
    auto fetched = fetch_through_cache(ctx, texts);
    const auto& s = fetched.summary;
    ctx.json_on_stdout = primary_goes_to_stdout(ctx, args.out);
    ctx.human() << "texts " << s.unique << ": " << s.hits << " hits (" << percent(static_cast<double>(s.hits) / static_cast<double>(s.unique))
                << "%), " << s.misses << " misses, " << s.provider_calls << " provider calls\n";
    if (args.store) {
        write_store(*args.store, fetched.vectors, store_format_for_path(*args.store));
        ctx.err << "wrote " << *args.store << "\n";
    }
    Json doc;
    doc["format"] = kEmbedFormat;
    doc["model"] = ctx.config.model;
    doc["dataset"] = fs::path(args.dataset.path).filename().string();
    doc["texts"] = s.unique;
    doc["hits"] = s.hits;
    doc["misses"] = s.misses;
    doc["provider_calls"] = s.provider_calls;
    emit_primary(ctx, "embed.json", dump(doc), args.out);
    return kOk;
}

struct DiagnoseArgs {
    DatasetArgs dataset;
    std::optional<std::string> weights;
    std::size_t bins = kDefaultHistogramBins;
    std::optional<std::string> out;
};

int cmd_diagnose(Context& ctx, const DiagnoseArgs& args) {
    const auto pairs = load_pairs(ctx, args.dataset.path, args.dataset.score_scale).pairs;
    std::optional<WeightVector> w;
    if (args.weights) {
        w = load_weights(*args.weights);
    }
    const auto lookup = lookup_for(ctx, texts_of(pairs));
    const auto report = w ? weighted_diagnose(pairs, *lookup, *w, model_tag(ctx), args.bins)
                          : diagnose(pairs, *lookup, model_tag(ctx), args.bins);
    ctx.json_on_stdout = primary_goes_to_stdout(ctx, args.out);
    for (const auto& g : report.groups) {
        ctx.human() << "group " << g.index << " [" << format_double(g.lower) << ", " << format_double(g.upper)
                    << (g.index == 5 ? "]" : ")") << ": " << g.n_pairs << " pairs, negation wins "
                    << (g.frac_neg_wins ? percent(*g.frac_neg_wins) + "%" : std::string("n/a")) << "\n";
    }
    if (!report.excluded_missing_negation.empty()) {
        ctx.err << "warning: " << report.excluded_missing_negation.size()
                << " pair(s) without a negation were excluded\n";
    }
    emit_primary(ctx, "diagnosis.json", dump(to_json(report)), args.out);
    emit_secondary(ctx, "diagnosis.csv", to_csv(report));
    return kOk;
}

struct LearnArgs {
    DatasetArgs dataset;
    std::optional<double> a;
    bool grid = false;
    double min_score = 0.8;
    std::optional<std::string> out;
};

std::vector<NegationTriplet> training_triplets(Context& ctx, const LearnArgs& args) {
    switch (detect_kind(args.dataset.path, args.dataset.kind)) {
        case DatasetKind::Triplets:
            return load_triplets(args.dataset.path);
        case DatasetKind::Choice:
            return items_to_triplets(load_choice_items(args.dataset.path, ctx.config.seed));
        case DatasetKind::Pairs:
            break;
    }
    const auto pairs = load_pairs(ctx, args.dataset.path, args.dataset.score_scale).pairs;
    std::vector<std::string> missing;
    for (const auto& p : pairs) {
        if (p.score >= args.min_score && !p.neg_sentence1) {
            missing.push_back(p.pair_id);
        }
    }
    auto extraction = pairs_to_triplets(pairs, args.min_score);
    if (!missing.empty()) {
        std::string rows;
        for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) {
            rows += (i > 0 ? ", " : "") + missing[i];
        }
        if (missing.size() > 10) {
            rows += ", ...";
        }
        const auto message = std::to_string(missing.size()) + " pair(s) scoring >= " + format_double(args.min_score) +
                             " have no neg_sentence1 (lines " + rows + ")";
        if (extraction.triplets.empty()) {
            throw Error(ErrorCode::MissingNegation, message + "; run 'negadapt negate' first");
        }
        ctx.err << "warning: " << message << "\n";
    }
    if (extraction.skipped_invalid > 0) {
        ctx.err << "warning: " << extraction.skipped_invalid << " invalid triplet(s) skipped\n";
    }
    return std::move(extraction.triplets);
}

int cmd_learn(Context& ctx, const LearnArgs& args) {
    const auto triplets = training_triplets(ctx, args);
    if (triplets.empty()) {
        throw Error(ErrorCode::EmptyTrainingSet, args.dataset.path + " yields no training triplets");
    }
    const auto lookup = lookup_for(ctx, texts_of(triplets));
    const auto dataset = fs::path(args.dataset.path).filename().string();
    ctx.json_on_stdout = primary_goes_to_stdout(ctx, args.out);
    std::optional<WeightVector> w;
    if (args.grid) {
        auto search = grid_search_a(triplets, *lookup, ctx.config.grid, dataset);
        ctx.human() << "a\ttrain_accuracy\n";
        for (const auto& [a, acc] : search.train_accuracy_by_a) {
            ctx.human() << format_double(a) << "\t" << format_double(acc) << "\n";
        }
        ctx.human() << "best a = " << format_double(search.best_a) << "\n";
        w = std::move(search.best_weights);
    } else {
        w = learn_weights(triplets, *lookup, *args.a, dataset);
        ctx.human() << "learned weights with a = " << format_double(*args.a) << " from " << triplets.size()
                    << " triplets\n";
    }
    emit_primary(ctx, "weights.json", to_json(*w).dump(2) + "\n", args.out);
    return kOk;
}

struct EvalArgs {
    std::string task;
    DatasetArgs dataset;
    std::optional<std::string> weights;
    double accuracy_min_score = 0.8;
    std::optional<std::string> out;
};

int cmd_eval(Context& ctx, const EvalArgs& args) {
    std::optional<WeightVector> w;
    if (args.weights) {
        w = load_weights(*args.weights);
    }
    const WeightVector* wp = w ? &*w : nullptr;
    Json doc;
    doc["format"] = kEvalFormat;
    doc["task"] = args.task;
    ctx.json_on_stdout = primary_goes_to_stdout(ctx, args.out);
    if (args.task == "stsb") {
        const auto pairs = load_pairs(ctx, args.dataset.path, args.dataset.score_scale).pairs;
        const auto lookup = lookup_for(ctx, texts_of(pairs));
        StsbOptions options;
        options.accuracy_min_score = args.accuracy_min_score;
        options.model_tag = model_tag(ctx);
        const auto r = eval_stsb(pairs, *lookup, wp, options);
        doc["model_tag"] = r.model_tag;
        doc["weighted"] = r.weighted;
        doc["a"] = r.a ? Json(*r.a) : Json(nullptr);
        doc["accuracy_min_score"] = args.accuracy_min_score;
        doc["n"] = r.n;
        doc["n_correct"] = r.n_correct;
        doc["accuracy"] = r.accuracy;
        doc["n_ties"] = r.n_ties;
        doc["pearson"] = r.pearson ? Json(*r.pearson) : Json(nullptr);
        doc["n_correlation"] = r.n_correlation;
        doc["excluded_missing_negation"] = r.excluded_missing_negation;
        ctx.human() << "accuracy " << percent(r.accuracy) << "% (" << r.n_correct << "/" << r.n << ")";
        if (r.pearson) {
            ctx.human() << ", pearson " << format_double(*r.pearson);
        }
        ctx.human() << "\n";
    } else {
        const auto items = load_choice_items(args.dataset.path, ctx.config.seed);
        const auto lookup = lookup_for(ctx, texts_of(items));
        const auto r = eval_choice(items, *lookup, wp);
        doc["model_tag"] = model_tag(ctx);
        doc["weighted"] = w.has_value();
        doc["a"] = w ? Json(w->a()) : Json(nullptr);
        doc["n"] = r.n;
        doc["n_correct"] = r.n_correct;
        doc["accuracy"] = r.accuracy;
        doc["tied_items"] = r.tied_items;
        ctx.human() << "accuracy " << percent(r.accuracy) << "% (" << r.n_correct << "/" << r.n << ")\n";
    }
    emit_primary(ctx, "eval.json", dump(doc), args.out);
    return kOk;
}

struct ExperimentArgs {
    std::string path;
    std::string train_sizes = "200,500,1000";
    std::size_t repeats = 10;
    std::optional<std::string> out;
};

std::string summary_table(const ExperimentResult& result) {
    std::ostringstream s;
    s << std::left << std::setw(12) << "train_size" << std::setw(18) << "original"
      << "weighted\n";
    for (const auto& m : result.matrices) {
        s << std::setw(12) << m.train_size;
        const auto summary = summarize(m);
        for (std::size_t i = 0; i < summary.size(); ++i) {
            std::string cell = percent(summary[i].mean);
            if (summary[i].std) {
                cell += " ± " + percent(*summary[i].std);
            }
            if (i + 1 < summary.size()) {
                // setw counts bytes; "±" is two of them.
                s << std::setw(19) << cell;
            } else {
                s << cell;
            }
        }
        s << "\n";
    }
    return s.str();
}

int cmd_experiment(Context& ctx, const ExperimentArgs& args) {
    const auto items = load_choice_items(args.path, ctx.config.seed);
    ExperimentConfig config;
    config.train_sizes = parse_sizes(args.train_sizes);
    config.repeats = args.repeats;
    config.base_seed = ctx.config.seed;
    config.grid = ctx.config.grid;
    config.dataset = fs::path(args.path).filename().string();
    const auto lookup = lookup_for(ctx, texts_of(items));
    const auto result = run_experiment(items, *lookup, config);
    ctx.json_on_stdout = primary_goes_to_stdout(ctx, args.out);
    ctx.human() << "accuracy (%) over " << result.config.repeats << " runs, " << result.n_test
                << " test items\n"
                << summary_table(result);
    emit_primary(ctx, "experiment.json", dump(to_json(result)), args.out);
    emit_secondary(ctx, "experiment.csv", to_csv(result));
    return kOk;
}

/// Turns experiment results into blocks: one column per run, methods
/// "original" and "weighted@<train size>".
RunMatrix blocks_from_experiment(const nlohmann::json& doc) {
    std::vector<RunMatrix> matrices;
    for (const auto& m : doc.at("matrices")) {
        matrices.push_back(run_matrix_from_json(m));
    }
    if (matrices.empty()) {
        throw invalid("experiment result has no matrices");
    }
    RunMatrix blocks;
    blocks.run_count = matrices.front().run_count;
    blocks.seeds = matrices.front().seeds;
    const auto column = [](const RunMatrix& m, const std::string& method) {
        const auto it = std::find(m.method_tags.begin(), m.method_tags.end(), method);
        if (it == m.method_tags.end()) {
            throw invalid("matrix lacks method '" + method + "'");
        }
        return m.scores[static_cast<std::size_t>(it - m.method_tags.begin())];
    };
    blocks.method_tags.push_back("original");
    blocks.scores.push_back(column(matrices.front(), "original"));
    for (const auto& m : matrices) {
        if (m.run_count != blocks.run_count) {
            throw invalid("matrices disagree on the run count");
        }
        blocks.method_tags.push_back("weighted@" + std::to_string(m.train_size));
        blocks.scores.push_back(column(m, "weighted"));
    }
    return blocks;
}

struct CompareArgs {
    std::vector<std::string> inputs;
    double alpha = kDefaultCdAlpha;
    std::optional<std::string> out;
};

int cmd_compare(Context& ctx, const CompareArgs& args) {
    RunMatrix combined;
    for (const auto& input : args.inputs) {
        const auto doc = nlohmann::json::parse(detail::read_file(input), nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            throw Error(ErrorCode::FormatError, input + " is not a JSON object");
        }
        RunMatrix part = doc.value("format", "") == kExperimentFormat ? blocks_from_experiment(doc)
                                                                       : run_matrix_from_json(doc);
        if (combined.method_tags.empty()) {
            combined.method_tags = part.method_tags;
            combined.scores.resize(part.method_tags.size());
        } else if (part.method_tags != combined.method_tags) {
            throw invalid(input + ": methods differ from the first input");
        }
        for (std::size_t m = 0; m < part.method_tags.size(); ++m) {
            combined.scores[m].insert(combined.scores[m].end(), part.scores[m].begin(), part.scores[m].end());
        }
        combined.run_count += part.run_count;
        combined.seeds.insert(combined.seeds.end(), part.seeds.begin(), part.seeds.end());
    }
    const auto cd = cd_data(combined, args.alpha);
    ctx.json_on_stdout = primary_goes_to_stdout(ctx, args.out);
    ctx.human() << "average ranks over " << combined.run_count << " blocks:\n";
    for (std::size_t i = 0; i < cd.method_tags.size(); ++i) {
        ctx.human() << "  " << cd.method_tags[i] << "\t" << format_double(cd.avg_ranks[i]) << "\n";
    }
    for (const auto& note : cd.notes) {
        ctx.err << "note: " << note << "\n";
    }
    emit_primary(ctx, "cd.json", dump(to_json(cd)), args.out);
    emit_secondary(ctx, "cd_ranks.csv", ranks_csv(cd));
    emit_secondary(ctx, "cd_edges.csv", edges_csv(cd));
    return kOk;
}

}  // namespace

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) {
            return std::string(v);
        }
        return std::nullopt;
    };
}

void apply_config_text(RunConfig& config, const std::string& text) {
    std::size_t line_no = 0;
    for (const auto& raw : detail::split_lines(text)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw invalid("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key(trim(line.substr(0, eq)));
        auto value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        if (looks_like_credential(key)) {
            throw invalid("config line " + std::to_string(line_no) + ": '" + key +
                          "' looks like a credential; use NEGADAPT_API_KEY or --credentials-file");
        }
        set_key(config, key, std::string(value));
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app{"Negation-aware reweighting of sentence embeddings", "negadapt"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags flags;
    const auto add_value = [&](const std::string& name, const std::string& key, const std::string& help) {
        flags.values[key];
        app.add_option(name, flags.values[key], help);
    };
    add_value("--endpoint", "endpoint", "Embeddings API base URL");
    add_value("--model", "model", "Embedding model name");
    add_value("--cache-dir", "cache_dir", "Vector cache directory");
    add_value("--batch-size", "batch_size", "Texts per provider request");
    add_value("--max-in-flight", "max_in_flight", "Concurrent provider requests");
    add_value("--prefix", "instruction_prefix", "Instruction prefix prepended to every text");
    add_value("--seed", "seed", "Seed for splits and shuffles");
    add_value("--grid-values", "grid", "Comma-separated grid of a values");
    add_value("--output", "output_dir", "Directory for output files");
    add_value("--retry-base-ms", "retry_base_ms", "Base delay between provider retries");
    app.add_option("--config", flags.config_file, "Flat key = value config file");
    app.add_option("--credentials-file", flags.credentials_file, "File holding the API key");
    app.add_option("--vectors", flags.vectors, "Vector store file to use instead of a provider (repeatable)")
        ->allow_extra_args(false);

    const auto add_dataset = [](CLI::App* sub, DatasetArgs& d, bool with_kind) {
        sub->add_option("dataset", d.path, "Dataset file")->required();
        if (with_kind) {
            sub->add_option("--kind", d.kind, "pairs, choice, triplets or auto")
                ->check(CLI::IsMember({"auto", "pairs", "choice", "triplets"}));
        }
        sub->add_option("--score-scale", d.score_scale, "Maximum of the raw pair score");
    };

    NegateArgs negate_args;
    auto* negate = app.add_subcommand("negate", "Add a neg_sentence1 column to a pairs TSV");
    negate->add_option("input", negate_args.input)->required();
    negate->add_option("output", negate_args.output)->required();

    EmbedArgs embed_args;
    auto* embed = app.add_subcommand("embed", "Fill the vector cache for every text of a dataset");
    add_dataset(embed, embed_args.dataset, true);
    embed->add_option("--store", embed_args.store, "Also write the vectors to this store file");
    embed->add_option("--out", embed_args.out, "Summary JSON path");

    DiagnoseArgs diagnose_args;
    auto* diag = app.add_subcommand("diagnose", "Compare paraphrase and negation similarity per score group");
    add_dataset(diag, diagnose_args.dataset, false);
    diag->add_option("--weights", diagnose_args.weights, "Weights file");
    diag->add_option("--bins", diagnose_args.bins, "Histogram bins")->check(CLI::PositiveNumber);
    diag->add_option("--out", diagnose_args.out, "Report JSON path");

    LearnArgs learn_args;
    auto* learn = app.add_subcommand("learn", "Learn dimension weights from triplets");
    add_dataset(learn, learn_args.dataset, true);
    auto* a_opt = learn->add_option("--a", learn_args.a, "Softmax temperature");
    auto* grid_opt = learn->add_flag("--grid", learn_args.grid, "Grid search a on train accuracy");
    a_opt->excludes(grid_opt);
    learn->add_option("--min-score", learn_args.min_score, "Pairs scoring at least this become triplets");
    learn->add_option("--out", learn_args.out, "Weights JSON path");

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Evaluate plain or weighted similarity");
    eval->add_option("task", eval_args.task)->required()->check(CLI::IsMember({"stsb", "choice"}));
    add_dataset(eval, eval_args.dataset, false);
    eval->add_option("--weights", eval_args.weights, "Weights file");
    eval->add_option("--accuracy-min-score", eval_args.accuracy_min_score,
                     "Pairs scoring at least this enter the accuracy");
    eval->add_option("--out", eval_args.out, "Result JSON path");

    ExperimentArgs experiment_args;
    auto* experiment = app.add_subcommand("experiment", "Repeated split/learn/evaluate runs");
    experiment->add_option("dataset", experiment_args.path, "Choice items")->required();
    experiment->add_option("--train-sizes", experiment_args.train_sizes, "Comma-separated train sizes");
    experiment->add_option("--repeats", experiment_args.repeats, "Runs per train size")->check(CLI::PositiveNumber);
    experiment->add_option("--out", experiment_args.out, "Result JSON path");

    CompareArgs compare_args;
    auto* compare = app.add_subcommand("compare", "Wilcoxon-Holm comparison of experiment results");
    compare->add_option("results", compare_args.inputs, "Experiment or run-matrix JSON files")->required();
    compare->add_option("--alpha", compare_args.alpha, "Family-wise significance level");
    compare->add_option("--out", compare_args.out, "CD data JSON path");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kDataFailure;
    }

    try {
        Context ctx{resolve_config(flags, env), {}, {}, out, err, env};
        for (const auto& v : flags.vectors) {
            ctx.vectors.emplace_back(v);
        }
        if (flags.credentials_file) {
            ctx.credentials_file = fs::path(*flags.credentials_file);
        }
        if (*negate) {
            return cmd_negate(ctx, negate_args);
        }
        if (*embed) {
            return cmd_embed(ctx, embed_args);
        }
        if (*diag) {
            return cmd_diagnose(ctx, diagnose_args);
        }
        if (*learn) {
            if (!learn_args.a && !learn_args.grid) {
                throw invalid("learn needs --a <value> or --grid");
            }
            return cmd_learn(ctx, learn_args);
        }
        if (*eval) {
            return cmd_eval(ctx, eval_args);
        }
        if (*experiment) {
            return cmd_experiment(ctx, experiment_args);
        }
        return cmd_compare(ctx, compare_args);
    } catch (const Error& e) {
        err << "negadapt: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const nlohmann::json::exception& e) {
        err << "negadapt: malformed JSON: " << e.what() << "\n";
        return kDataFailure;
    } catch (const std::exception& e) {
        err << "negadapt: internal error: " << e.what() << "\n";
        return kInternalFailure;
    }
}

}  // namespace negadapt::cli
