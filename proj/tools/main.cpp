#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "knowhalu/http_backend.hpp"
#include "knowhalu/pipeline.hpp"
#include "knowhalu/scripted_backend.hpp"
#include "knowhalu/util.hpp"

namespace {

using json = nlohmann::json;
using namespace knowhalu;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitBackend = 4;

json load_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + path + ": " + e.what());
    }
}

BackendConfig backend_config_from_json(const json& j) {
    BackendConfig cfg;
    cfg.base_url = j.at("base_url").get<std::string>();
    cfg.model_name = j.at("model").get<std::string>();
    cfg.api_key_env = j.value("api_key_env", "");
    cfg.request_timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
    cfg.max_retries = j.value("max_retries", 3);
    cfg.concurrency_limit = j.value("concurrency", 4);
    cfg.cache_dir = j.value("cache_dir", "");
    return cfg;
}

std::unique_ptr<ChatBackend> make_chat_backend(const json& j) {
    std::string type = j.value("type", "http");
    if (type == "scripted")
        return std::make_unique<ScriptedChatBackend>(
            ScriptedTranscript::load_file(j.at("transcript").get<std::string>()));
    if (type == "http") return std::make_unique<HttpChatBackend>(backend_config_from_json(j));
    throw ConfigError("unknown chat backend type: " + type);
}

std::unique_ptr<EmbedBackend> make_embed_backend(const json& j) {
    std::string type = j.value("type", "hashing");
    if (type == "hashing")
        return std::make_unique<HashingEmbedder>(j.value("dim", size_t{256}));
    if (type == "scripted")
        return std::make_unique<ScriptedEmbedder>(
            ScriptedEmbedder::load_file(j.at("entries").get<std::string>()));
    if (type == "http") return std::make_unique<HttpEmbedBackend>(backend_config_from_json(j));
    throw ConfigError("unknown embedding backend type: " + type);
}

// Pre-built evaluation items: one DatasetItem object per line.
std::vector<DatasetItem> load_items(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open items file: " + path);
    std::vector<DatasetItem> items;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            json obj = json::parse(line);
            DatasetItem item;
            item.id = obj.at("id").get<std::string>();
            item.task = task_from_name(obj.at("task").get<std::string>());
            item.question = obj.at(item.task == Task::QA ? "question" : "document")
                                .get<std::string>();
            item.candidate = obj.at("candidate").get<std::string>();
            item.gold = gold_label_from_name(obj.at("gold").get<std::string>());
            if (obj.contains("knowledge") && !obj.at("knowledge").is_null())
                item.off_the_shelf_knowledge = obj.at("knowledge").get<std::string>();
            items.push_back(std::move(item));
        } catch (const json::exception& e) {
            throw ParseError("items line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return items;
}

struct DetectOptions {
    std::string config_path;
    std::string item_filter;
    std::string output_dir_override;
    int workers_override = -1;
};

int run_detect(const DetectOptions& opts) {
    json cfg = load_json_file(opts.config_path);

    PipelineConfig pipeline;
    pipeline.task = task_from_name(cfg.value("task", "qa"));
    pipeline.knowledge_source =
        knowledge_source_from_name(cfg.value("knowledge_source", "off_the_shelf"));
    if (cfg.contains("forms")) {
        pipeline.forms.clear();
        for (const auto& f : cfg.at("forms"))
            pipeline.forms.push_back(form_from_name(f.get<std::string>()));
    }
    pipeline.mode = formulation_from_name(cfg.value("formulation", "combined"));
    pipeline.k = cfg.value("k", pipeline.task == Task::QA ? size_t{2} : size_t{3});
    pipeline.max_steps = cfg.value("max_steps", size_t{8});
    pipeline.max_knowledge_chars = cfg.value("max_knowledge_chars", size_t{8000});
    pipeline.workers = cfg.value("workers", size_t{1});
    if (opts.workers_override >= 1) pipeline.workers = static_cast<size_t>(opts.workers_override);

    if (cfg.contains("calibration_file")) {
        pipeline.thresholds =
            CalibrationResult::from_json(read_file(cfg.at("calibration_file").get<std::string>()))
                .thresholds;
    } else if (cfg.contains("thresholds")) {
        const json& t = cfg.at("thresholds");
        pipeline.thresholds.delta1 = t.at("delta1").get<double>();
        pipeline.thresholds.delta2 = t.at("delta2").get<double>();
        pipeline.thresholds.base_form =
            form_from_name(t.value("base_form", "unstructured"));
    }
    pipeline.validate();

    PromptLibrary prompts = PromptLibrary::load(cfg.value("prompts_dir", "prompts"));
    auto chat = make_chat_backend(cfg.value("backend", json{{"type", "http"}}));
    std::unique_ptr<EmbedBackend> embedder;
    if (cfg.contains("embedder") || pipeline.task == Task::Summary)
        embedder = make_embed_backend(cfg.value("embedder", json::object()));
    std::unique_ptr<ExternalSearchClient> search;
    if (cfg.contains("search_url"))
        search = std::make_unique<ExternalSearchClient>(cfg.at("search_url").get<std::string>());

    std::vector<DatasetItem> items;
    if (cfg.contains("items_path")) {
        items = load_items(cfg.at("items_path").get<std::string>());
    } else {
        auto records = load_dataset(cfg.at("dataset_path").get<std::string>(), pipeline.task);
        items = build_balanced_testset(records, cfg.value("n_pairs", size_t{0}),
                                       cfg.value("seed", std::uint64_t{0}), pipeline.task);
    }
    if (!opts.item_filter.empty()) {
        std::vector<DatasetItem> filtered;
        for (auto& item : items)
            if (item.id == opts.item_filter) filtered.push_back(std::move(item));
        if (filtered.empty()) throw ParseError("no item with id: " + opts.item_filter);
        items = std::move(filtered);
    }

    std::string output_dir = opts.output_dir_override.empty()
                                 ? cfg.value("output_dir", std::string("out"))
                                 : opts.output_dir_override;
    PipelineContext ctx;
    ctx.prompts = &prompts;
    ctx.chat = chat.get();
    ctx.embedder = embedder.get();
    ctx.retriever = search.get();

    auto records = run_batch(items, pipeline, ctx, output_dir + "/results.jsonl",
                             output_dir + "/traces");
    std::cout << records.size() << " records written to " << output_dir << "/results.jsonl\n";
    return kExitOk;
}

int run_index(const std::string& docs_path, const std::string& out_dir, size_t dim,
              size_t max_words) {
    HashingEmbedder embedder(dim);
    std::ifstream in(docs_path);
    if (!in) throw ParseError("cannot open documents file: " + docs_path);

    std::filesystem::create_directories(out_dir);
    json manifest = json::array();
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("documents line " + std::to_string(line_no) + ": " + e.what());
        }
        std::string id = obj.value("id", "doc-" + std::to_string(line_no));
        std::string text = obj.at("document").get<std::string>();
        auto chunks = chunk_document(id, text, max_words);
        DenseIndex index = build_index(chunks, embedder);
        index.save(out_dir + "/" + id + ".idx");
        manifest.push_back({{"id", id}, {"chunks", chunks.size()}, {"path", id + ".idx"}});
        std::cout << id << ": " << chunks.size() << " chunks\n";
    }
    atomic_write_file(out_dir + "/index_manifest.json", manifest.dump(2) + "\n");
    return kExitOk;
}

int run_calibrate(const std::string& validation_path, const std::string& base_form_name,
                  const std::string& out_path) {
    KnowledgeForm base_form = form_from_name(base_form_name);
    std::ifstream in(validation_path);
    if (!in) throw ParseError("cannot open validation file: " + validation_path);

    std::vector<CalibrationSample> samples;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            json obj = json::parse(line);
            CalibrationSample s;
            s.item_id = obj.value("item_id", std::to_string(line_no));
            s.gold_label = gold_label_from_name(obj.at("gold").get<std::string>());
            s.base.label =
                judgment_label_from_name(obj.at("base").at("label").get<std::string>());
            s.base.confidence = obj.at("base").at("confidence").get<double>();
            s.base.form = base_form;
            s.supplement.label =
                judgment_label_from_name(obj.at("supplement").at("label").get<std::string>());
            s.supplement.confidence = obj.at("supplement").at("confidence").get<double>();
            s.supplement.form = base_form == KnowledgeForm::Structured
                                    ? KnowledgeForm::Unstructured
                                    : KnowledgeForm::Structured;
            samples.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw ParseError("validation line " + std::to_string(line_no) + ": " + e.what());
        }
    }

    CalibrationResult result = calibrate(samples);
    std::string text = result.to_json() + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        atomic_write_file(out_path, text);
        std::cout << "q1=" << *result.thresholds.q1 << " q2=" << *result.thresholds.q2
                  << " delta1=" << result.thresholds.delta1
                  << " delta2=" << result.thresholds.delta2
                  << " avg_acc=" << result.validation_avg_acc << "\n";
    }
    return kExitOk;
}

int run_evaluate(const std::string& results_path, const std::string& json_out) {
    std::ifstream in(results_path);
    if (!in) throw ParseError("cannot open results file: " + results_path);

    std::vector<Outcome> outcomes;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        DetectionRecord record;
        try {
            record = DetectionRecord::from_json(line);
        } catch (const json::exception& e) {
            throw ParseError("results line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!record.gold)
            throw ParseError("results line " + std::to_string(line_no) + ": no gold label");
        outcomes.push_back({*record.gold, record.final});
    }

    MetricsReport report = score(outcomes);
    std::cout << report.to_table();
    if (!json_out.empty()) atomic_write_file(json_out, report.to_json() + "\n");
    return kExitOk;
}

int classify_error(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const TransportError*>(&e) || dynamic_cast<const ServiceUnavailableError*>(&e) ||
        dynamic_cast<const MissingTranscriptError*>(&e) || dynamic_cast<const RefusalError*>(&e))
        return kExitBackend;
    if (dynamic_cast<const Error*>(&e)) return kExitData;
    return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-phase hallucination detection pipeline"};
    app.require_subcommand(1);

    std::string docs_path, index_out;
    size_t index_dim = 256, index_max_words = 40;
    auto* index_cmd = app.add_subcommand("index", "Build a dense index per document");
    index_cmd->add_option("--docs", docs_path, "JSONL file of documents")->required();
    index_cmd->add_option("--out", index_out, "Output directory")->required();
    index_cmd->add_option("--dim", index_dim, "Embedding dimension");
    index_cmd->add_option("--max-words", index_max_words, "Chunk word bound (exclusive)");

    DetectOptions detect_opts;
    auto* detect_cmd = app.add_subcommand("detect", "Run detection over a dataset");
    detect_cmd->add_option("--config", detect_opts.config_path, "Run config JSON")->required();
    detect_cmd->add_option("--item", detect_opts.item_filter, "Only this item id");
    detect_cmd->add_option("--output-dir", detect_opts.output_dir_override, "Output directory");
    detect_cmd->add_option("--workers", detect_opts.workers_override, "Worker count");

    std::string validation_path, base_form = "unstructured", calibration_out;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Grid-search judgment thresholds");
    calibrate_cmd->add_option("--validation", validation_path, "Validation samples JSONL")
        ->required();
    calibrate_cmd->add_option("--base-form", base_form, "Base knowledge form");
    calibrate_cmd->add_option("--out", calibration_out, "Calibration result file");

    std::string results_path, metrics_json;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a results file");
    evaluate_cmd->add_option("--results", results_path, "Results JSONL")->required();
    evaluate_cmd->add_option("--json", metrics_json, "Also write the report as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (index_cmd->parsed()) return run_index(docs_path, index_out, index_dim, index_max_words);
        if (detect_cmd->parsed()) return run_detect(detect_opts);
        if (calibrate_cmd->parsed())
            return run_calibrate(validation_path, base_form, calibration_out);
        return run_evaluate(results_path, metrics_json);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify_error(e);
    }
}
