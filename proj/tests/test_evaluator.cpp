#include <doctest.h>

#include <filesystem>
#include <set>

#include "knowhalu/evaluator.hpp"
#include "knowhalu/util.hpp"

using namespace knowhalu;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    atomic_write_file(path.string(), content);
    return path.string();
}

std::vector<Outcome> make_outcomes(std::int64_t tp, std::int64_t fn_wrong, std::int64_t fn_abstain,
                                   std::int64_t tn, std::int64_t fp_wrong,
                                   std::int64_t fp_abstain) {
    std::vector<Outcome> v;
    auto add = [&](GoldLabel g, FinalOutcome f, std::int64_t n) {
        for (std::int64_t i = 0; i < n; ++i) v.push_back({g, f});
    };
    add(GoldLabel::Hallucinated, FinalOutcome::Hallucinated, tp);
    add(GoldLabel::Hallucinated, FinalOutcome::Faithful, fn_wrong);
    add(GoldLabel::Hallucinated, FinalOutcome::Abstain, fn_abstain);
    add(GoldLabel::Faithful, FinalOutcome::Faithful, tn);
    add(GoldLabel::Faithful, FinalOutcome::Hallucinated, fp_wrong);
    add(GoldLabel::Faithful, FinalOutcome::Abstain, fp_abstain);
    return v;
}

}  // namespace

TEST_CASE("load_dataset parses QA records and reports bad lines by number") {
    std::string good =
        R"({"knowledge": "K1", "question": "Q1", "right_answer": "R1", "hallucinated_answer": "H1"})"
        "\n"
        R"({"question": "Q2", "right_answer": "R2", "hallucinated_answer": "H2"})"
        "\n";
    auto records = load_dataset(write_temp("kh_eval_good.jsonl", good), Task::QA);
    REQUIRE(records.size() == 2);
    CHECK(records[0].knowledge == "K1");
    CHECK(records[0].question == "Q1");
    CHECK(records[0].right == "R1");
    CHECK(records[0].hallucinated == "H1");
    CHECK(records[1].knowledge.empty());

    try {
        load_dataset(write_temp("kh_eval_bad.jsonl", "{\"question\": \"Q\"}\nnot json\n"),
                     Task::QA);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
    try {
        load_dataset(write_temp("kh_eval_bad2.jsonl",
                                R"({"question": "Q", "right_answer": "R", )"
                                R"("hallucinated_answer": "H"})"
                                "\nnot json\n"),
                     Task::QA);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("load_dataset parses summarization records") {
    std::string text =
        R"({"document": "D1", "right_summary": "R1", "hallucinated_summary": "H1"})"
        "\n";
    auto records = load_dataset(write_temp("kh_eval_sum.jsonl", text), Task::Summary);
    REQUIRE(records.size() == 1);
    CHECK(records[0].document == "D1");
    CHECK(records[0].right == "R1");
    CHECK(records[0].hallucinated == "H1");
}

TEST_CASE("build_balanced_testset is seeded, paired, and without replacement") {
    std::vector<RawRecord> records;
    for (int i = 0; i < 20; ++i) {
        RawRecord r;
        r.question = "Q" + std::to_string(i);
        r.right = "R" + std::to_string(i);
        r.hallucinated = "H" + std::to_string(i);
        r.knowledge = "K" + std::to_string(i);
        records.push_back(r);
    }

    auto a = build_balanced_testset(records, 5, 1234, Task::QA);
    auto b = build_balanced_testset(records, 5, 1234, Task::QA);
    auto c = build_balanced_testset(records, 5, 99, Task::QA);
    REQUIRE(a.size() == 10);
    std::set<std::string> ids;
    for (size_t i = 0; i < a.size(); i += 2) {
        CHECK(a[i].gold == GoldLabel::Faithful);
        CHECK(a[i + 1].gold == GoldLabel::Hallucinated);
        CHECK(a[i].question == a[i + 1].question);
        CHECK(a[i].candidate != a[i + 1].candidate);
        ids.insert(a[i].question);
    }
    CHECK(ids.size() == 5);  // no record reused
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].candidate == b[i].candidate);
    }
    bool different = false;
    for (size_t i = 0; i < a.size() && !different; ++i) different = a[i].id != c[i].id;
    CHECK(different);

    CHECK(build_balanced_testset(records, 0, 7, Task::QA).empty());
    CHECK_THROWS_AS(build_balanced_testset(records, 21, 7, Task::QA), NotEnoughRecordsError);
}

TEST_CASE("worked metrics example: 10 positives, 10 negatives") {
    // 7 TP, 2 misses, 1 abstention; 8 TN, 1 false alarm, 1 abstention
    MetricsReport m = score(make_outcomes(7, 2, 1, 8, 1, 1));
    CHECK(format_percent(m.tpr()) == "70.00");
    CHECK(format_percent(m.arp()) == "10.00");
    CHECK(format_percent(m.tnr()) == "80.00");
    CHECK(format_percent(m.arn()) == "10.00");
    CHECK(format_percent(m.avg_acc()) == "75.00");
}

TEST_CASE("average accuracy stays exact until formatting") {
    MetricsReport m;
    m.n_pos = 1000;
    m.tp = 687;
    m.n_neg = 1000;
    m.tn = 759;
    CHECK(m.tpr() == Rational(687, 10));
    CHECK(m.tnr() == Rational(759, 10));
    CHECK(m.avg_acc() == Rational(1446, 20));
    CHECK(format_percent(m.avg_acc()) == "72.30");
}

TEST_CASE("format_percent rounds half up at two decimals") {
    CHECK(format_percent(Rational(1, 8)) == "0.13");    // 0.125 rounds up
    CHECK(format_percent(Rational(1, 16)) == "0.06");   // 0.0625 rounds up
    CHECK(format_percent(Rational(1, 3)) == "0.33");
    CHECK(format_percent(Rational(2, 3)) == "0.67");
    CHECK(format_percent(Rational(100, 1)) == "100.00");
    CHECK(format_percent(Rational(0, 1)) == "0.00");
    CHECK(format_percent(Rational(141, 2)) == "70.50");
    CHECK(format_percent(Rational(99999, 1000)) == "100.00");  // 99.999 carries
}

TEST_CASE("metric identities hold exactly") {
    MetricsReport m = score(make_outcomes(5, 3, 2, 6, 1, 3));
    CHECK(m.tpr() + m.arp() + Rational(100 * m.fn_wrong, m.n_pos) == Rational(100));
    CHECK(m.tnr() + m.arn() + Rational(100 * m.fp_wrong, m.n_neg) == Rational(100));
    CHECK(m.avg_acc() * 2 == m.tpr() + m.tnr());
}

TEST_CASE("score rejects degenerate outcome sets") {
    CHECK_THROWS_AS(score({}), DegenerateClassError);
    CHECK_THROWS_AS(score(make_outcomes(3, 1, 0, 0, 0, 0)), DegenerateClassError);
    CHECK_THROWS_AS(score(make_outcomes(0, 0, 0, 3, 1, 0)), DegenerateClassError);
}

TEST_CASE("report serialization carries counts and formatted percents") {
    MetricsReport m = score(make_outcomes(7, 2, 1, 8, 1, 1));
    std::string j = m.to_json();
    CHECK(j.find("\"tp\": 7") != std::string::npos);
    CHECK(j.find("70.00") != std::string::npos);
    CHECK(j.find("75.00") != std::string::npos);
    std::string table = m.to_table();
    CHECK(table.find("ARP") != std::string::npos);  // abstentions present

    // without abstentions the abstention-rate columns disappear
    MetricsReport clean = score(make_outcomes(7, 3, 0, 8, 2, 0));
    CHECK(clean.to_table().find("ARP") == std::string::npos);
}
