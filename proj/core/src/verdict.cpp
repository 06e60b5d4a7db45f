#include "knowhalu/verdict.hpp"

#include <array>
#include <cctype>

#include "knowhalu/util.hpp"

namespace knowhalu {

namespace {

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// longest-first so overlapping candidates resolve to the longer label
constexpr std::array<std::pair<const char*, JudgmentLabel>, 3> kLabels = {{
    {"INCONCLUSIVE", JudgmentLabel::Inconclusive},
    {"INCORRECT", JudgmentLabel::Incorrect},
    {"CORRECT", JudgmentLabel::Correct},
}};

}  // namespace

const char* judgment_label_name(JudgmentLabel label) {
    switch (label) {
        case JudgmentLabel::Correct: return "CORRECT";
        case JudgmentLabel::Incorrect: return "INCORRECT";
        case JudgmentLabel::Inconclusive: return "INCONCLUSIVE";
    }
    return "INCONCLUSIVE";
}

JudgmentLabel judgment_label_from_name(const std::string& name) {
    if (name == "CORRECT") return JudgmentLabel::Correct;
    if (name == "INCORRECT") return JudgmentLabel::Incorrect;
    if (name == "INCONCLUSIVE") return JudgmentLabel::Inconclusive;
    throw Error("unknown judgment label: " + name);
}

JudgmentLabel parse_label(const std::string& text) {
    size_t best_pos = std::string::npos;
    JudgmentLabel best = JudgmentLabel::Inconclusive;
    for (size_t i = 0; i < text.size(); ++i) {
        if (i > 0 && is_letter(text[i - 1])) continue;
        for (const auto& [name, label] : kLabels) {
            size_t len = std::string_view(name).size();
            if (text.compare(i, len, name) != 0) continue;
            if (i + len < text.size() && is_letter(text[i + len])) continue;
            if (best_pos == std::string::npos || i >= best_pos) {
                best_pos = i;
                best = label;
            }
            break;  // longest match at this position wins
        }
    }
    if (best_pos == std::string::npos) throw NoLabelError("no judgment label found");
    return best;
}

std::string trace_query_knowledge(const ReasoningTrace& trace) {
    std::vector<std::string> lines;
    for (const auto& step : trace.steps) {
        if (!step.query || !step.knowledge) continue;
        std::string k = std::to_string(step.index);
        lines.push_back("#Query-" + k + "#: " + step.query->render_line());
        lines.push_back("#Knowledge-" + k + "#: " + step.knowledge->raw_text);
    }
    return join(lines, "\n");
}

ChatRequest build_judgment_request(const std::string& question, const std::string& answer,
                                   const ReasoningTrace& trace, const PromptLibrary& prompts,
                                   Task task) {
    const auto& tpl = prompts.select(task, Stage::Judge, trace.form, Formulation::NA);
    std::map<std::string, std::string> bindings;
    bindings["query_knowledge"] = trace_query_knowledge(trace);
    if (task == Task::QA) {
        bindings["question"] = question;
        bindings["answer"] = answer;
    } else {
        bindings["summary"] = answer;
    }
    RenderedPrompt prompt = render(tpl, bindings);
    ChatRequest request;
    request.messages = prompt.messages;
    request.max_tokens = 1024;
    request.stop_markers = {"#Question", "#Summary"};
    request.want_logprobs = true;
    return request;
}

Judgment judge(const std::string& question, const std::string& answer, const ReasoningTrace& trace,
               ChatBackend& gateway, const PromptLibrary& prompts, Task task) {
    Judgment judgment;
    judgment.form = trace.form;

    ChatCompletion completion;
    try {
        completion = gateway.chat(build_judgment_request(question, answer, trace, prompts, task));
    } catch (const RefusalError&) {
        judgment.label = JudgmentLabel::Inconclusive;
        judgment.confidence = 0.0;
        judgment.abstained = true;
        return judgment;
    }

    judgment.rationale = trim(completion.text);
    try {
        judgment.label = parse_label(judgment.rationale);
    } catch (const NoLabelError&) {
        judgment.label = JudgmentLabel::Inconclusive;
        judgment.confidence = 0.0;
        judgment.abstained = true;
        return judgment;
    }
    if (!completion.tokens.empty()) {
        judgment.confidence =
            first_token_confidence(completion, judgment_label_name(judgment.label));
    } else {
        judgment.confidence = 1.0;  // backend without logprobs
    }
    return judgment;
}

std::vector<std::string> segment_summary(const std::string& summary, size_t max_words) {
    if (trim(summary).empty()) throw Error("segment_summary: empty summary");

    // sentence boundaries: terminal punctuation followed by whitespace
    std::string text = normalize_whitespace(summary);
    std::vector<std::string> sentences;
    size_t start = 0;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && i + 1 < text.size() && text[i + 1] == ' ') {
            sentences.push_back(text.substr(start, i + 1 - start));
            start = i + 2;
            i = start - 1;
        }
    }
    if (start < text.size()) sentences.push_back(text.substr(start));

    std::vector<std::string> segments;
    std::vector<std::string> current;
    auto flush = [&] {
        if (!current.empty()) {
            segments.push_back(join(current, " "));
            current.clear();
        }
    };
    for (const auto& sentence : sentences) {
        std::vector<std::string> words = split_words(sentence);
        if (current.size() + words.size() <= max_words) {
            current.insert(current.end(), words.begin(), words.end());
            continue;
        }
        flush();
        size_t pos = 0;
        while (words.size() - pos > max_words) {
            segments.push_back(join(std::vector<std::string>(
                                        words.begin() + static_cast<long>(pos),
                                        words.begin() + static_cast<long>(pos + max_words)),
                                    " "));
            pos += max_words;
        }
        current.assign(words.begin() + static_cast<long>(pos), words.end());
    }
    flush();
    return segments;
}

SummaryVerdict compose_summary_verdict(const std::vector<JudgmentLabel>& segment_judgments) {
    if (segment_judgments.empty()) throw Error("compose_summary_verdict: empty list");
    for (JudgmentLabel label : segment_judgments) {
        // INCONCLUSIVE coerced to INCORRECT for summaries
        if (label != JudgmentLabel::Correct) return SummaryVerdict::Hallucinated;
    }
    return SummaryVerdict::Faithful;
}

}  // namespace knowhalu
