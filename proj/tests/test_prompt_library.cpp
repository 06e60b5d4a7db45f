#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "knowhalu/prompt_library.hpp"
#include "knowhalu/util.hpp"

using namespace knowhalu;

namespace {

const std::string kPromptsDir = KNOWHALU_PROMPTS_DIR;

}  // namespace

TEST_CASE("library loads all manifest templates with valid checksums") {
    PromptLibrary lib = PromptLibrary::load(kPromptsDir);
    for (Task task : {Task::QA, Task::Summary}) {
        for (KnowledgeForm form : {KnowledgeForm::Structured, KnowledgeForm::Unstructured}) {
            for (Formulation mode :
                 {Formulation::Specific, Formulation::General, Formulation::Combined})
                CHECK_NOTHROW(lib.select(task, Stage::Query, form, mode));
            CHECK_NOTHROW(lib.select(task, Stage::Optimize, form, Formulation::NA));
            CHECK_NOTHROW(lib.select(task, Stage::Judge, form, Formulation::NA));
        }
    }
    CHECK_NOTHROW(lib.select(Task::QA, Stage::Extraction, KnowledgeForm::NA, Formulation::NA));
}

TEST_CASE("summarization has no extraction stage") {
    PromptLibrary lib = PromptLibrary::load(kPromptsDir);
    CHECK_THROWS_AS(lib.select(Task::Summary, Stage::Extraction, KnowledgeForm::NA,
                               Formulation::NA),
                    UnknownTemplateError);
    CHECK_THROWS_AS(lib.by_id("qa.query.structured.bogus"), UnknownTemplateError);
}

TEST_CASE("render substitutes placeholders byte-exactly") {
    PromptLibrary lib = PromptLibrary::load(kPromptsDir);
    const auto& tpl = lib.select(Task::QA, Stage::Extraction, KnowledgeForm::NA, Formulation::NA);
    RenderedPrompt p = render(tpl, {{"question", "Q?"}, {"answer", "A."}});
    REQUIRE(p.messages.size() == 2);
    CHECK(p.messages[0].role == Role::System);
    CHECK(p.messages[1].text.find("#Question#: Q?\n#Answer#: A.") != std::string::npos);
    CHECK(p.messages[1].text.find("{question}") == std::string::npos);
    CHECK(p.messages[1].text.find("{answer}") == std::string::npos);
    // demonstration text untouched
    CHECK(p.messages[1].text.find("Barcelona and Valencia") != std::string::npos);
}

TEST_CASE("render reports every missing binding") {
    PromptLibrary lib = PromptLibrary::load(kPromptsDir);
    const auto& tpl = lib.select(Task::QA, Stage::Extraction, KnowledgeForm::NA, Formulation::NA);
    try {
        render(tpl, {});
        FAIL("expected MissingBindingError");
    } catch (const MissingBindingError& e) {
        std::string what = e.what();
        CHECK(what.find("question") != std::string::npos);
        CHECK(what.find("answer") != std::string::npos);
    }
}

TEST_CASE("query formulations differ as specified") {
    PromptLibrary lib = PromptLibrary::load(kPromptsDir);
    const auto& combined = lib.select(Task::QA, Stage::Query, KnowledgeForm::Structured,
                                      Formulation::Combined);
    const auto& specific = lib.select(Task::QA, Stage::Query, KnowledgeForm::Structured,
                                      Formulation::Specific);
    const auto& general = lib.select(Task::QA, Stage::Query, KnowledgeForm::Structured,
                                     Formulation::General);
    // combined demos carry bracketed general forms; specific strips them;
    // general keeps only the bracket content
    CHECK(combined.body.find("Germany? [Where was the Peace of Westphalia signed?]") !=
          std::string::npos);
    CHECK(specific.body.find("[Where was") == std::string::npos);
    CHECK(specific.body.find("Was the Peace of Westphalia signed in Munster") != std::string::npos);
    CHECK(general.body.find("#Query-1#: Where was the Peace of Westphalia signed?") !=
          std::string::npos);
}

TEST_CASE("tampered asset fails the checksum gate") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "knowhalu_prompts_tamper";
    fs::remove_all(dir);
    fs::copy(kPromptsDir, dir, fs::copy_options::recursive);
    {
        std::ofstream out(dir / "qa" / "extraction" / "na" / "na.txt", std::ios::app);
        out << "tampered";
    }
    CHECK_THROWS_WITH_AS(PromptLibrary::load(dir.string()),
                         doctest::Contains("checksum mismatch"), Error);
    fs::remove_all(dir);
}
