#include "knowhalu/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <future>
#include <memory>
#include <thread>

#include <json.hpp>

#include "knowhalu/util.hpp"

namespace knowhalu {

using nlohmann::json;

const char* knowledge_source_name(KnowledgeSource s) {
    return s == KnowledgeSource::OffTheShelf ? "off_the_shelf" : "retrieval";
}

KnowledgeSource knowledge_source_from_name(const std::string& name) {
    if (name == "off_the_shelf") return KnowledgeSource::OffTheShelf;
    if (name == "retrieval") return KnowledgeSource::Retrieval;
    throw ConfigError("unknown knowledge source: " + name);
}

std::map<std::string, int> CallCounts::snapshot() const {
    return {{"extraction", extraction.load()},
            {"query", query.load()},
            {"optimize", optimize.load()},
            {"judge", judge.load()},
            {"retrieval", retrieval.load()}};
}

ChatCompletion CountingChatBackend::chat_raw(const ChatRequest& request) {
    // stage signatures: judge carries logprobs; query stops at #Knowledge;
    // optimize stops at #Query; extraction is the remainder
    if (request.want_logprobs)
        ++counts_.judge;
    else if (!request.stop_markers.empty() && request.stop_markers.front() == "#Knowledge")
        ++counts_.query;
    else if (!request.stop_markers.empty() && request.stop_markers.front() == "#Query")
        ++counts_.optimize;
    else
        ++counts_.extraction;
    return inner_.chat(request);
}

void PipelineConfig::validate() const {
    if (forms.empty()) throw ConfigError("at least one knowledge form required");
    if (forms.size() > 2) throw ConfigError("at most two knowledge forms");
    for (KnowledgeForm f : forms)
        if (f == KnowledgeForm::NA) throw ConfigError("knowledge form must be concrete");
    if (forms.size() == 2 && forms[0] == forms[1])
        throw ConfigError("duplicate knowledge form");
    if (mode == Formulation::NA) throw ConfigError("formulation mode must be concrete");
    if (k < 1) throw ConfigError("k must be >= 1");
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (segment_max_words < 1 || chunk_max_words < 2)
        throw ConfigError("segmentation bounds out of range");
}

namespace {

json judgment_to_json(const Judgment& j) {
    json out;
    out["label"] = judgment_label_name(j.label);
    out["confidence"] = j.confidence;
    out["form"] = form_name(j.form);
    out["abstained"] = j.abstained;
    out["rationale"] = j.rationale;
    return out;
}

Judgment judgment_from_json(const json& in) {
    Judgment j;
    j.label = judgment_label_from_name(in.at("label").get<std::string>());
    j.confidence = in.at("confidence").get<double>();
    j.form = form_from_name(in.at("form").get<std::string>());
    j.abstained = in.at("abstained").get<bool>();
    j.rationale = in.value("rationale", "");
    return j;
}

Judgment abstained_judgment(KnowledgeForm form) {
    Judgment j;
    j.label = JudgmentLabel::Inconclusive;
    j.confidence = 0.0;
    j.form = form;
    j.abstained = true;
    return j;
}

FinalOutcome map_label(JudgmentLabel label) {
    switch (label) {
        case JudgmentLabel::Incorrect: return FinalOutcome::Hallucinated;
        case JudgmentLabel::Correct: return FinalOutcome::Faithful;
        case JudgmentLabel::Inconclusive: return FinalOutcome::Abstain;
    }
    return FinalOutcome::Abstain;
}

// Runs reasoning + judgment for one (item, form); errors downgrade to an
// abstained judgment with the reason noted.
FormResult run_form(const std::string& question, const std::string& answer, KnowledgeForm form,
                    const PipelineConfig& config, const PipelineContext& ctx, Retriever& retriever,
                    ChatBackend& chat, std::vector<std::string>& notes) {
    FormResult result;
    ReasoningConfig rc;
    rc.task = config.task;
    rc.form = form;
    rc.mode = config.mode;
    rc.k = config.k;
    rc.max_steps = config.max_steps;
    rc.max_knowledge_chars = config.max_knowledge_chars;
    try {
        result.trace = run_reasoning(question, answer, rc, retriever, chat, *ctx.prompts);
        result.judgment = judge(question, answer, result.trace, chat, *ctx.prompts, config.task);
    } catch (const std::exception& e) {
        notes.push_back(std::string(form_name(form)) + ": " + e.what());
        result.trace.question = question;
        result.trace.answer = answer;
        result.trace.form = form;
        result.judgment = abstained_judgment(form);
    }
    return result;
}

// Fans the configured forms out (concurrently when there are two), collects
// per-form results and the aggregated judgment.
Judgment run_forms(const std::string& question, const std::string& answer,
                   const PipelineConfig& config, const PipelineContext& ctx, Retriever& retriever,
                   ChatBackend& chat, std::map<std::string, FormResult>& per_form,
                   std::vector<std::string>& notes) {
    std::vector<std::vector<std::string>> form_notes(config.forms.size());
    std::vector<FormResult> results(config.forms.size());
    if (config.forms.size() == 1) {
        results[0] = run_form(question, answer, config.forms[0], config, ctx, retriever, chat,
                              form_notes[0]);
    } else {
        std::vector<std::future<FormResult>> futures;
        for (size_t i = 0; i < config.forms.size(); ++i)
            futures.push_back(std::async(std::launch::async, [&, i] {
                return run_form(question, answer, config.forms[i], config, ctx, retriever, chat,
                                form_notes[i]);
            }));
        for (size_t i = 0; i < futures.size(); ++i) results[i] = futures[i].get();
    }
    for (size_t i = 0; i < config.forms.size(); ++i) {
        per_form[form_name(config.forms[i])] = results[i];
        notes.insert(notes.end(), form_notes[i].begin(), form_notes[i].end());
    }
    if (config.forms.size() == 1) return results[0].judgment;

    size_t base_idx = config.forms[0] == config.thresholds.base_form ? 0 : 1;
    if (config.forms[base_idx] != config.thresholds.base_form) base_idx = 0;
    return aggregate(results[base_idx].judgment, results[1 - base_idx].judgment,
                     config.thresholds);
}

}  // namespace

DetectionRecord detect_qa(const DatasetItem& item, const PipelineConfig& config,
                          const PipelineContext& ctx) {
    DetectionRecord record;
    record.item_id = item.id;
    record.task = Task::QA;
    record.gold = item.gold;

    CallCounts counts;
    CountingChatBackend chat(*ctx.chat, counts);
    try {
        record.phase1 = check_specificity(item.question, item.candidate, chat, *ctx.prompts);
    } catch (const std::exception& e) {
        record.notes.push_back(std::string("extraction: ") + e.what());
        record.final = FinalOutcome::Abstain;
        record.call_counts = counts.snapshot();
        return record;
    }
    if (record.phase1->is_none) {
        record.final = FinalOutcome::Hallucinated;
        record.call_counts = counts.snapshot();
        return record;
    }

    std::unique_ptr<OffTheShelfRetriever> off_the_shelf;
    Retriever* source = nullptr;
    if (config.knowledge_source == KnowledgeSource::OffTheShelf) {
        if (!item.off_the_shelf_knowledge) {
            record.notes.push_back("no off-the-shelf knowledge on record");
            record.final = FinalOutcome::Abstain;
            record.call_counts = counts.snapshot();
            return record;
        }
        off_the_shelf = std::make_unique<OffTheShelfRetriever>(*item.off_the_shelf_knowledge);
        source = off_the_shelf.get();
    } else {
        if (!ctx.retriever) {
            record.notes.push_back("no retriever configured");
            record.final = FinalOutcome::Abstain;
            record.call_counts = counts.snapshot();
            return record;
        }
        source = ctx.retriever;
    }
    CountingRetriever retriever(*source, counts);

    Judgment final_judgment = run_forms(item.question, item.candidate, config, ctx, retriever,
                                        chat, record.per_form, record.notes);
    record.final = map_label(final_judgment.label);
    record.call_counts = counts.snapshot();
    return record;
}

DetectionRecord detect_summary(const DatasetItem& item, const PipelineConfig& config,
                               const PipelineContext& ctx) {
    DetectionRecord record;
    record.item_id = item.id;
    record.task = Task::Summary;
    record.gold = item.gold;

    CallCounts counts;
    CountingChatBackend chat(*ctx.chat, counts);
    try {
        if (!ctx.embedder) throw ConfigError("summarization requires an embedding backend");
        auto chunks = chunk_document(item.id, item.question, config.chunk_max_words);
        DenseIndex index = build_index(chunks, *ctx.embedder);
        LocalIndexRetriever local(index, *ctx.embedder);
        CountingRetriever retriever(local, counts);

        std::vector<JudgmentLabel> labels;
        for (const auto& segment : segment_summary(item.candidate, config.segment_max_words)) {
            SegmentResult seg;
            seg.text = segment;
            Judgment aggregated = run_forms(item.question, segment, config, ctx, retriever, chat,
                                            seg.per_form, record.notes);
            seg.aggregated = aggregated.label;
            labels.push_back(aggregated.label);
            record.segments.push_back(std::move(seg));
        }
        record.final = compose_summary_verdict(labels) == SummaryVerdict::Hallucinated
                           ? FinalOutcome::Hallucinated
                           : FinalOutcome::Faithful;
    } catch (const std::exception& e) {
        record.notes.push_back(std::string("summary: ") + e.what());
        record.final = FinalOutcome::Abstain;
    }
    record.call_counts = counts.snapshot();
    return record;
}

DetectionRecord detect(const DatasetItem& item, const PipelineConfig& config,
                       const PipelineContext& ctx) {
    return config.task == Task::QA ? detect_qa(item, config, ctx)
                                   : detect_summary(item, config, ctx);
}

std::string DetectionRecord::to_json() const {
    json root;
    root["item_id"] = item_id;
    root["task"] = task_name(task);
    root["gold"] = gold ? json(gold_label_name(*gold)) : json();
    if (task == Task::QA) {
        if (phase1) {
            root["phase1"] = {
                {"raw_text", phase1->raw_text},
                {"extracted_entity",
                 phase1->extracted_entity ? json(*phase1->extracted_entity) : json()},
                {"is_none", phase1->is_none}};
        } else {
            root["phase1"] = nullptr;
        }
        json forms = json::object();
        for (const auto& [name, fr] : per_form) {
            forms[name] = {{"judgment", judgment_to_json(fr.judgment)},
                           {"terminated", termination_name(fr.trace.terminated)},
                           {"steps", fr.trace.steps.size()}};
        }
        root["per_form"] = std::move(forms);
    } else {
        json segs = json::array();
        for (const auto& seg : segments) {
            json forms = json::object();
            for (const auto& [name, fr] : seg.per_form)
                forms[name] = {{"judgment", judgment_to_json(fr.judgment)},
                               {"terminated", termination_name(fr.trace.terminated)},
                               {"steps", fr.trace.steps.size()}};
            segs.push_back({{"text", seg.text},
                            {"aggregated", judgment_label_name(seg.aggregated)},
                            {"per_form", std::move(forms)}});
        }
        root["segments"] = std::move(segs);
    }
    root["final"] = final_outcome_name(final);
    root["call_counts"] = call_counts;
    if (!notes.empty()) root["notes"] = notes;
    return root.dump();
}

DetectionRecord DetectionRecord::from_json(const std::string& json_text) {
    json root = json::parse(json_text);
    DetectionRecord record;
    record.item_id = root.at("item_id").get<std::string>();
    record.task = task_from_name(root.at("task").get<std::string>());
    if (!root.at("gold").is_null())
        record.gold = gold_label_from_name(root.at("gold").get<std::string>());
    if (record.task == Task::QA) {
        if (!root.at("phase1").is_null()) {
            ExtractionResult p;
            p.raw_text = root.at("phase1").at("raw_text").get<std::string>();
            if (!root.at("phase1").at("extracted_entity").is_null())
                p.extracted_entity = root.at("phase1").at("extracted_entity").get<std::string>();
            p.is_none = root.at("phase1").at("is_none").get<bool>();
            record.phase1 = std::move(p);
        }
        for (const auto& [name, fr] : root.at("per_form").items()) {
            FormResult result;
            result.judgment = judgment_from_json(fr.at("judgment"));
            record.per_form[name] = std::move(result);
        }
    } else {
        for (const auto& s : root.value("segments", json::array())) {
            SegmentResult seg;
            seg.text = s.at("text").get<std::string>();
            seg.aggregated = judgment_label_from_name(s.at("aggregated").get<std::string>());
            for (const auto& [name, fr] : s.at("per_form").items()) {
                FormResult result;
                result.judgment = judgment_from_json(fr.at("judgment"));
                seg.per_form[name] = std::move(result);
            }
            record.segments.push_back(std::move(seg));
        }
    }
    record.final = final_outcome_from_name(root.at("final").get<std::string>());
    record.call_counts = root.at("call_counts").get<std::map<std::string, int>>();
    if (root.contains("notes"))
        record.notes = root.at("notes").get<std::vector<std::string>>();
    return record;
}

std::string DetectionRecord::traces_json() const {
    json root;
    root["item_id"] = item_id;
    root["task"] = task_name(task);
    if (task == Task::QA) {
        json forms = json::object();
        for (const auto& [name, fr] : per_form) forms[name] = json::parse(fr.trace.to_json());
        root["per_form"] = std::move(forms);
    } else {
        json segs = json::array();
        for (const auto& seg : segments) {
            json forms = json::object();
            for (const auto& [name, fr] : seg.per_form)
                forms[name] = json::parse(fr.trace.to_json());
            segs.push_back({{"text", seg.text}, {"per_form", std::move(forms)}});
        }
        root["segments"] = std::move(segs);
    }
    return root.dump(2);
}

std::vector<DetectionRecord> run_batch(const std::vector<DatasetItem>& items,
                                       const PipelineConfig& config, const PipelineContext& ctx,
                                       const std::string& results_path,
                                       const std::string& traces_dir) {
    config.validate();
    if (!ctx.prompts || !ctx.chat) throw ConfigError("pipeline context incomplete");

    std::vector<DetectionRecord> records(items.size());
    std::atomic<size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            size_t i = cursor.fetch_add(1);
            if (i >= items.size()) break;
            records[i] = detect(items[i], config, ctx);
        }
    };
    size_t n_workers = std::max<size_t>(1, std::min(config.workers, items.size()));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (!results_path.empty()) {
        std::string out;
        for (const auto& record : records) {
            out += record.to_json();
            out += '\n';
        }
        atomic_write_file(results_path, out);
    }
    if (!traces_dir.empty()) {
        std::filesystem::create_directories(traces_dir);
        for (const auto& record : records)
            atomic_write_file(traces_dir + "/" + record.item_id + ".json", record.traces_json());
    }
    return records;
}

}  // namespace knowhalu
