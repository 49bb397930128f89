#include <gtest/gtest.h>

#include <regex>
#include <set>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "annoreview/engine.hpp"
#include "annoreview/error.hpp"
#include "test_support.hpp"

using namespace annoreview;
namespace t = annoreview::testing;
using nlohmann::json;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::IoError;
}

const std::string kRigor1 = "We evaluated Triage Lens in a within-subjects study with nine maintainers.";
const std::string kRigor2 = "The small number of participants limits the generality of these findings";
const std::string kRigor3 = "The threshold is calibrated per project from one hundred manually labeled report pairs.";
const std::string kAbsent = "The authors released their dataset under an open license.";

std::string item(const std::string& excerpt, const std::string& sentiment) {
    return json{{"excerpt", excerpt}, {"sentiment", sentiment}, {"comment", "because"}}.dump();
}

MockFixture fixture(std::string tpl, std::string criterion, std::string response) {
    MockFixture f;
    f.template_name = std::move(tpl);
    f.criterion = std::move(criterion);
    f.response = std::move(response);
    return f;
}

struct Harness {
    t::TempDir dir;
    std::shared_ptr<MockBackend> mock = std::make_shared<MockBackend>();
    std::unique_ptr<ReviewEngine> engine;
    std::string sid;
    std::string manuscript = t::read_file(t::test_data_dir() / "manuscript.txt");

    explicit Harness(std::function<void(EngineConfig&)> tweak = {}) {
        EngineConfig config;
        config.data_root = dir / "data";
        config.export_root = dir / "exports";
        config.llm.backoff_ms = 1;
        if (tweak) tweak(config);
        engine = std::make_unique<ReviewEngine>(config, mock, t::stepping_clock());
        sid = engine->create_session(manuscript, SourceKind::PlainText);
    }

    [[nodiscard]] std::vector<GatewayRequest> requests(TemplateName name) const {
        std::vector<GatewayRequest> out;
        for (auto& r : mock->received()) {
            if (r.template_name == name) out.push_back(r);
        }
        return out;
    }
};

}  // namespace

TEST(Sessions, CreateAndEnd) {
    Harness h;
    EXPECT_TRUE(h.engine->is_active(h.sid));
    EXPECT_EQ(h.engine->sessions(), std::vector<std::string>{h.sid});
    EXPECT_EQ(h.engine->criteria(h.sid), default_criteria());
    EXPECT_TRUE(std::filesystem::exists(h.engine->session_dir(h.sid) / "review.json"));
    h.engine->end_session(h.sid);
    EXPECT_FALSE(h.engine->is_active(h.sid));
    EXPECT_EQ(code_of([&] { (void)h.engine->manuscript(h.sid); }), ErrorCode::UnknownSession);
    EXPECT_EQ(code_of([&] { h.engine->end_session(h.sid); }), ErrorCode::UnknownSession);
    EXPECT_EQ(code_of([&] { (void)h.engine->create_session("", SourceKind::PlainText); }), ErrorCode::EmptyInput);
    EXPECT_EQ(detect_source_kind("%PDF-1.7"), SourceKind::Pdf);
    EXPECT_EQ(detect_source_kind("Plain"), SourceKind::PlainText);
}

TEST(Annotate, ThreeVerbatimExcerptsAreAnchored) {
    Harness h;
    h.mock->add_fixture(fixture("annotate", "Rigor",
                                "```json\n[" + item(kRigor1, "strength") + "," + item(kRigor2, "weakness") + "," +
                                    item(kRigor3, "strength") + "]\n```"));
    const auto added = h.engine->annotate_criterion(h.sid, "Rigor");
    ASSERT_EQ(added.size(), 3U);
    const auto m = h.engine->manuscript(h.sid);
    for (const auto& a : added) {
        EXPECT_EQ(a.criterion_name, "Rigor");
        EXPECT_EQ(a.origin, Origin::Llm);
        EXPECT_EQ(a.anchor.kind, MatchKind::Exact);
        EXPECT_EQ(normalize_utf8(m->raw_slice(*a.anchor.raw_range)), normalize_utf8(a.excerpt));
        EXPECT_EQ(a.comments, std::vector<std::string>{"because"});
    }
    EXPECT_EQ(added[0].anchor.page, 3);
    EXPECT_EQ(added[2].anchor.page, 2);
    EXPECT_EQ(added[1].sentiment, Sentiment::Weakness);
    const auto prompt = h.requests(TemplateName::Annotate).at(0).prompt;
    EXPECT_NE(prompt.find("Select 3 excerpt(s)"), std::string::npos);
    EXPECT_NE(prompt.find("Format the answer in JSON"), std::string::npos);
    EXPECT_NE(prompt.find("Triage Lens: Visual Clustering"), std::string::npos);
    EXPECT_EQ(prompt.find('\f'), std::string::npos);
}

TEST(Annotate, DefaultAndConfiguredCounts) {
    Harness h;
    EXPECT_EQ(h.engine->annotate_criterion(h.sid, "Relevance").size(), 3U);
    EXPECT_EQ(h.engine->annotate_criterion(h.sid, "Rigor", 1).size(), 1U);
    EXPECT_NE(h.requests(TemplateName::Annotate).at(1).prompt.find("Select 1 excerpt(s)"), std::string::npos);
    Harness one([](EngineConfig& c) { c.num_excerpts_default = 1; });
    EXPECT_EQ(one.engine->annotate_criterion(one.sid, "Relevance").size(), 1U);
    EXPECT_EQ(code_of([&] { (void)h.engine->annotate_criterion(h.sid, "Rigor", 0); }), ErrorCode::InvalidArgument);
}

TEST(Annotate, ExtraItemsAreCut) {
    Harness h;
    h.mock->add_fixture(fixture("annotate", "*",
                                "[" + item(kRigor1, "strength") + "," + item(kRigor2, "weakness") + "," +
                                    item(kRigor3, "strength") + "]"));
    EXPECT_EQ(h.engine->annotate_criterion(h.sid, "Rigor", 2).size(), 2U);
}

TEST(Annotate, AbsentExcerptIsStoredUnanchored) {
    Harness h;
    h.mock->add_fixture(fixture("annotate", "Rigor",
                                "[" + item(kRigor1, "strength") + "," + item(kAbsent, "weakness") + "," +
                                    item(kRigor3, "strength") + "]"));
    const auto added = h.engine->annotate_criterion(h.sid, "Rigor");
    ASSERT_EQ(added.size(), 3U);
    EXPECT_TRUE(added[0].anchor.anchored());
    EXPECT_EQ(added[1].anchor.kind, MatchKind::Unanchored);
    EXPECT_FALSE(added[1].anchor.raw_range.has_value());
    EXPECT_TRUE(added[2].anchor.anchored());
    EXPECT_EQ(h.engine->review_json(h.sid)["criterion_reviews"][3]["annotations"][1]["anchor"]["kind"], "unanchored");
}

TEST(Annotate, HyphenatedAndFuzzyExcerpts) {
    Harness h;
    h.mock->add_fixture(fixture("annotate", "Rigor",
                                "[" + item("projects that rarely attach stack traces to their reports.", "weakness") +
                                    "," + item("Participants closd duplicates 31% fastr with the extension", "strength") +
                                    "]"));
    const auto added = h.engine->annotate_criterion(h.sid, "Rigor");
    ASSERT_EQ(added.size(), 2U);
    const auto m = h.engine->manuscript(h.sid);
    EXPECT_EQ(added[0].anchor.kind, MatchKind::Exact);
    EXPECT_NE(m->raw_slice(*added[0].anchor.raw_range).find("re-\nports."), std::string::npos);
    EXPECT_EQ(added[1].anchor.kind, MatchKind::Fuzzy);
    EXPECT_GT(added[1].anchor.ratio, 0.0);
    EXPECT_EQ(m->raw_slice(*added[1].anchor.raw_range), "Participants closed duplicates 31% faster with the extension");
}

TEST(Annotate, AmbiguousExcerptKeepsCandidates) {
    const std::string reply = "[" + item("study with nine maintainers", "weakness") + "]";
    Harness h;
    h.mock->add_fixture(fixture("annotate", "*", reply));
    const auto a = h.engine->annotate_criterion(h.sid, "Rigor").at(0);
    ASSERT_EQ(a.candidates.size(), 2U);
    EXPECT_TRUE(a.ambiguous());
    EXPECT_EQ(a.anchor, a.candidates[0]);
    EXPECT_LT(a.candidates[0].raw_range->begin, a.candidates[1].raw_range->begin);

    Harness pick([](EngineConfig& c) { c.anchor.auto_pick = AutoPick::Earliest; });
    pick.mock->add_fixture(fixture("annotate", "*", reply));
    const auto b = pick.engine->annotate_criterion(pick.sid, "Rigor").at(0);
    EXPECT_FALSE(b.ambiguous());
    EXPECT_EQ(b.anchor.raw_range, a.candidates[0].raw_range);
    EXPECT_EQ(b.anchor.page, 1);
}

TEST(Annotate, ErrorsPropagate) {
    Harness h;
    EXPECT_EQ(code_of([&] { (void)h.engine->annotate_criterion(h.sid, "Foo"); }), ErrorCode::UnknownCriterion);
    h.mock->add_fixture(fixture("annotate", "Rigor", "Sorry, I cannot do that."));
    EXPECT_EQ(code_of([&] { (void)h.engine->annotate_criterion(h.sid, "Rigor"); }), ErrorCode::UnparseableResponse);
    h.mock->add_fixture(fixture("annotate", "Relevance", "[]"));
    EXPECT_EQ(code_of([&] { (void)h.engine->annotate_criterion(h.sid, "Relevance"); }), ErrorCode::EmptyItems);
    auto slow = fixture("annotate", "Contribution", "[]");
    slow.error = ErrorCode::AuthFailure;
    h.mock->add_fixture(slow);
    EXPECT_EQ(code_of([&] { (void)h.engine->annotate_criterion(h.sid, "Contribution"); }), ErrorCode::AuthFailure);
    EXPECT_TRUE(h.engine->annotations(h.sid).empty());
    EXPECT_EQ(code_of([&] { (void)h.engine->annotate_criterion("missing", "Rigor"); }), ErrorCode::UnknownSession);
}

TEST(Annotate, TruncationIsRecorded) {
    Harness h([](EngineConfig& c) { c.prompts.manuscript_char_budget = 1000; });
    const auto added = h.engine->annotate_criterion(h.sid, "Rigor");
    ASSERT_FALSE(added.empty());
    for (const auto& a : added) EXPECT_TRUE(a.context_truncated);
    EXPECT_NE(h.requests(TemplateName::Annotate).at(0).prompt.find("omitted"), std::string::npos);
    Harness full;
    for (const auto& a : full.engine->annotate_criterion(full.sid, "Rigor")) EXPECT_FALSE(a.context_truncated);
}

TEST(Annotate, UnknownSentimentFlagged) {
    Harness h;
    h.mock->add_fixture(fixture("annotate", "*", "[" + item(kRigor1, "mixed") + "]"));
    const auto a = h.engine->annotate_criterion(h.sid, "Rigor").at(0);
    EXPECT_EQ(a.sentiment, Sentiment::Unset);
    EXPECT_TRUE(a.parse_warning);
}

TEST(Annotate, AllCriteriaInCriterionOrder) {
    Harness h;
    auto slow = fixture("annotate", "Contribution", "[" + item(kRigor1, "strength") + "]");
    slow.delay_ms = 150;
    h.mock->add_fixture(slow);
    const auto start = std::chrono::steady_clock::now();
    const auto added = h.engine->annotate_all(h.sid);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
    std::vector<std::string> order;
    for (const auto& a : added) {
        if (order.empty() || order.back() != a.criterion_name) order.push_back(a.criterion_name);
    }
    EXPECT_EQ(order, (std::vector<std::string>{"Contribution", "Originality", "Relevance", "Rigor"}));
    EXPECT_EQ(h.engine->call_log(h.sid).size(), 4U);
}

TEST(Annotate, OneFailingCriterionKeepsTheOthers) {
    Harness h;
    h.mock->add_fixture(fixture("annotate", "Originality", "no json here"));
    EXPECT_EQ(code_of([&] { (void)h.engine->annotate_all(h.sid); }), ErrorCode::UnparseableResponse);
    const auto review = h.engine->review(h.sid);
    EXPECT_EQ(review.criterion_review("Originality").annotations.size(), 0U);
    EXPECT_EQ(review.criterion_review("Rigor").annotations.size(), 3U);
}

TEST(Human, RangeAndExcerptSelections) {
    Harness h;
    const auto m = h.engine->manuscript(h.sid);
    const auto& raw = m->raw_text;
    const auto pos = raw.find(U"Duplicate bug reports are a long-standing burden");
    HumanAnnotation sel{"Relevance", IndexRange{pos, pos + 48}, std::nullopt, Sentiment::Strength, "Good framing"};
    const auto a = h.engine->add_human_annotation(h.sid, sel);
    EXPECT_EQ(a.origin, Origin::Human);
    EXPECT_EQ(a.excerpt, "Duplicate bug reports are a long-standing burden");
    EXPECT_EQ(a.anchor.kind, MatchKind::Exact);
    EXPECT_EQ(a.anchor.page, 1);
    EXPECT_EQ(a.comments, std::vector<std::string>{"Good framing"});

    HumanAnnotation by_text{"Rigor", std::nullopt, "connected components form the clusters", Sentiment::Unset, {}};
    const auto b = h.engine->add_human_annotation(h.sid, by_text);
    EXPECT_EQ(b.anchor.page, 2);

    HumanAnnotation ambiguous{"Rigor", std::nullopt, "nine maintainers", Sentiment::Unset, {}};
    EXPECT_EQ(code_of([&] { (void)h.engine->add_human_annotation(h.sid, ambiguous); }), ErrorCode::InvalidArgument);
    HumanAnnotation outside{"Rigor", IndexRange{raw.size() - 2, raw.size() + 5}, std::nullopt, Sentiment::Unset, {}};
    EXPECT_EQ(code_of([&] { (void)h.engine->add_human_annotation(h.sid, outside); }), ErrorCode::InvalidArgument);
    HumanAnnotation unknown{"Foo", IndexRange{0, 5}, std::nullopt, Sentiment::Unset, {}};
    EXPECT_EQ(code_of([&] { (void)h.engine->add_human_annotation(h.sid, unknown); }), ErrorCode::UnknownCriterion);
    HumanAnnotation blank{"Rigor", IndexRange{pos - 1, pos}, std::nullopt, Sentiment::Unset, {}};
    EXPECT_EQ(code_of([&] { (void)h.engine->add_human_annotation(h.sid, blank); }), ErrorCode::EmptyExcerpt);
}

TEST(Refine, SentimentCommentsFeedbackRemoval) {
    Harness h;
    const auto a = h.engine->annotate_criterion(h.sid, "Rigor").at(0);
    EXPECT_EQ(h.engine->update_sentiment(h.sid, a.id, Sentiment::Weakness).sentiment, Sentiment::Weakness);
    EXPECT_EQ(h.engine->add_comment(h.sid, a.id, "needs a citation").comments.size(), 2U);
    EXPECT_EQ(code_of([&] { (void)h.engine->add_comment(h.sid, a.id, " "); }), ErrorCode::EmptyComment);
    EXPECT_TRUE(h.engine->set_relevance_feedback(h.sid, a.id, RelevanceFeedback::Irrelevant).deemphasized);
    (void)h.engine->set_relevance_feedback(h.sid, a.id, RelevanceFeedback::Relevant);
    const auto log = t::read_file(h.engine->feedback_log_path());
    EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 2);
    EXPECT_NE(log.find("\"verdict\":\"irrelevant\""), std::string::npos);
    EXPECT_EQ(log.find(a.excerpt.substr(0, 20)), std::string::npos);
    (void)h.engine->remove_annotation(h.sid, a.id);
    EXPECT_EQ(h.engine->annotations(h.sid).size(), 2U);
    EXPECT_EQ(h.engine->annotations(h.sid, true).size(), 3U);
    EXPECT_TRUE(h.engine->annotation(h.sid, a.id).deleted);
    EXPECT_EQ(code_of([&] { (void)h.engine->update_sentiment(h.sid, a.id, Sentiment::Strength); }),
              ErrorCode::UnknownAnnotation);
    const auto on_disk = json::parse(t::read_file(h.engine->session_dir(h.sid) / "review.json"));
    EXPECT_EQ(on_disk, h.engine->review_json(h.sid));
}

TEST(Followup, ClarifyFactCheckSocial) {
    Harness h;
    h.mock->add_fixture(fixture("annotate", "Rigor", "[" + item(kRigor1, "weakness") + "]"));
    h.mock->add_fixture(fixture("clarify", "*", "Nine participants is a small sample for this kind of study."));
    const auto a = h.engine->annotate_criterion(h.sid, "Rigor").at(0);
    const auto answer =
        h.engine->annotation_followup(h.sid, a.id, FollowupKind::Clarify, "9 subjects enough for TAM evaluation?");
    EXPECT_EQ(answer, "Nine participants is a small sample for this kind of study.");
    const auto clarify = h.requests(TemplateName::Clarify).at(0);
    EXPECT_NE(clarify.prompt.find("9 subjects enough for TAM evaluation?"), std::string::npos);
    EXPECT_NE(clarify.prompt.find(kRigor1), std::string::npos);

    (void)h.engine->annotation_followup(h.sid, a.id, FollowupKind::FactCheck);
    EXPECT_NE(h.requests(TemplateName::FactCheck).at(0).prompt.find(kRigor1), std::string::npos);

    EXPECT_EQ(code_of([&] { (void)h.engine->annotation_followup(h.sid, "a99", FollowupKind::Social); }),
              ErrorCode::UnknownAnnotation);
    EXPECT_EQ(code_of([&] { (void)h.engine->annotation_followup(h.sid, a.id, FollowupKind::Clarify); }),
              ErrorCode::MissingQuestion);
    EXPECT_EQ(code_of([&] { (void)h.engine->annotation_followup(h.sid, a.id, FollowupKind::Clarify, "  "); }),
              ErrorCode::MissingQuestion);

    const auto saved = h.engine->save_output(h.sid, a.id, FollowupKind::Clarify,
                                             "9 subjects enough for TAM evaluation?", answer);
    EXPECT_EQ(saved.saved_outputs.size(), 1U);
    EXPECT_EQ(code_of([&] { (void)h.engine->save_output(h.sid, a.id, FollowupKind::Social, std::nullopt, ""); }),
              ErrorCode::InvalidArgument);
}

TEST(Synthesis, CompileUsesDigestAndOverwrites) {
    Harness h;
    h.mock->add_fixture(fixture("annotate", "Rigor", "[" + item(kRigor1, "weakness") + "," + item(kRigor2, "weakness") + "]"));
    EXPECT_EQ(code_of([&] { (void)h.engine->compile_criterion(h.sid, "Rigor"); }), ErrorCode::NoAnnotations);
    const auto added = h.engine->annotate_criterion(h.sid, "Rigor");
    ASSERT_EQ(added.size(), 2U);
    (void)h.engine->save_output(h.sid, added[0].id, FollowupKind::FactCheck, std::nullopt, "Checked claim.");
    const auto first = h.engine->compile_criterion(h.sid, "rigor");
    EXPECT_EQ(h.engine->review(h.sid).criterion_review("Rigor").compilation, first);
    auto prompt = h.requests(TemplateName::Compile).at(0).prompt;
    EXPECT_NE(prompt.find(kRigor1), std::string::npos);
    EXPECT_NE(prompt.find(kRigor2), std::string::npos);
    EXPECT_NE(prompt.find("Checked claim."), std::string::npos);

    HumanAnnotation third{"Rigor", std::nullopt, "connected components form the clusters", Sentiment::Strength, {}};
    (void)h.engine->add_human_annotation(h.sid, third);
    const auto second = h.engine->compile_criterion(h.sid, "Rigor");
    EXPECT_NE(first, second);
    prompt = h.requests(TemplateName::Compile).at(1).prompt;
    EXPECT_NE(prompt.find("connected components form the clusters"), std::string::npos);
    EXPECT_NE(prompt.find("[3]"), std::string::npos);

    const auto audit = t::read_file(h.engine->session_dir(h.sid) / "audit.jsonl");
    std::istringstream lines(audit);
    std::string l1, l2;
    std::getline(lines, l1);
    std::getline(lines, l2);
    EXPECT_TRUE(json::parse(l1)["previous"].is_null());
    EXPECT_EQ(json::parse(l2)["previous"], first);
}

TEST(Synthesis, ViewpointsMirrorCompile) {
    Harness h;
    EXPECT_EQ(code_of([&] { (void)h.engine->viewpoints_criterion(h.sid, "Originality"); }), ErrorCode::NoAnnotations);
    const auto added = h.engine->annotate_criterion(h.sid, "Originality");
    const auto v = h.engine->viewpoints_criterion(h.sid, "Originality");
    EXPECT_EQ(h.engine->review(h.sid).criterion_review("Originality").viewpoints, v);
    const auto prompt = h.requests(TemplateName::Viewpoints).at(0).prompt;
    for (const auto& a : added) EXPECT_NE(prompt.find(a.excerpt), std::string::npos);
    EXPECT_FALSE(h.engine->review(h.sid).criterion_review("Originality").compilation.has_value());
}

TEST(Recap, IsLocal) {
    Harness h;
    const auto added = h.engine->annotate_criterion(h.sid, "Rigor", 2);
    (void)h.engine->save_output(h.sid, added[0].id, FollowupKind::Clarify, "Why?", "Because.");
    const auto calls = h.engine->gateway().call_count();
    const auto log = h.engine->call_log(h.sid).size();
    const auto recap = h.engine->recap(h.sid, "Rigor");
    EXPECT_EQ(recap.item_count(), 3U);
    EXPECT_EQ(recap.render().find("no annotations yet"), std::string::npos);
    EXPECT_EQ(h.engine->gateway().call_count(), calls);
    EXPECT_EQ(h.engine->call_log(h.sid).size(), log);
    EXPECT_NE(h.engine->recap(h.sid, "Relevance").render().find("no annotations yet"), std::string::npos);
}

TEST(Report, ByCriteriaSectionsFollowContent) {
    Harness h;
    (void)h.engine->annotate_criterion(h.sid, "Originality");
    (void)h.engine->annotate_criterion(h.sid, "Rigor");
    const auto report = h.engine->build_report(h.sid, ReportStructure::ByCriteria);
    ASSERT_EQ(report.sections.size(), 2U);
    EXPECT_EQ(report.sections[0].heading, "Originality");
    EXPECT_EQ(report.sections[1].heading, "Rigor");
    ASSERT_TRUE(report.preamble.has_value());
    EXPECT_EQ(h.requests(TemplateName::Compile).size(), 2U);
    EXPECT_EQ(h.requests(TemplateName::ReportByCriteria).size(), 1U);
    const auto review = h.engine->review(h.sid);
    for (const auto& s : report.sections) {
        EXPECT_EQ(s.summary, review.criterion_review(s.heading).compilation);
        for (const auto& id : s.cited_annotation_ids) {
            const auto& a = review.annotation(id);
            EXPECT_EQ(a.criterion_name, s.heading);
            EXPECT_NE(s.body.find("\"" + a.excerpt + "\""), std::string::npos);
        }
    }
    EXPECT_EQ(report.editable_body, compose_report_body(report));
    EXPECT_EQ(review.report(), report);
    // A compilation kept after all annotations were removed still yields a section.
    for (const auto& a : h.engine->annotations(h.sid)) {
        if (a.criterion_name == "Originality") (void)h.engine->remove_annotation(h.sid, a.id);
    }
    EXPECT_EQ(h.engine->build_report(h.sid, ReportStructure::ByCriteria).sections.size(), 2U);
}

TEST(Report, BySentimentPartition) {
    Harness h;
    h.mock->add_fixture(fixture("annotate", "Rigor",
                                "[" + item(kRigor1, "strength") + "," + item(kRigor2, "strength") + "," +
                                    item(kRigor3, "weakness") + "]"));
    const auto added = h.engine->annotate_criterion(h.sid, "Rigor");
    const auto report = h.engine->build_report(h.sid, ReportStructure::BySentiment);
    ASSERT_EQ(report.sections.size(), 2U);
    EXPECT_EQ(report.sections[0].heading, "Strengths");
    EXPECT_EQ(report.sections[0].cited_annotation_ids, (std::vector<std::string>{added[0].id, added[1].id}));
    EXPECT_EQ(report.sections[1].heading, "Weaknesses");
    EXPECT_EQ(report.sections[1].cited_annotation_ids, std::vector<std::string>{added[2].id});
    EXPECT_NE(report.sections[0].body.find("(Rigor, p. 3, strength)"), std::string::npos);

    (void)h.engine->update_sentiment(h.sid, added[2].id, Sentiment::Unset);
    const auto again = h.engine->build_report(h.sid, ReportStructure::BySentiment);
    ASSERT_EQ(again.sections.size(), 3U);
    EXPECT_EQ(again.sections[1].summary, "No annotations fall into this group.");
    EXPECT_EQ(again.sections[2].heading, "Unclassified");
}

TEST(Report, EmptyReviewAndNoReport) {
    Harness h;
    EXPECT_EQ(code_of([&] { (void)h.engine->build_report(h.sid, ReportStructure::ByCriteria); }), ErrorCode::EmptyReview);
    EXPECT_EQ(code_of([&] { (void)h.engine->build_report(h.sid, ReportStructure::BySentiment); }), ErrorCode::EmptyReview);
    EXPECT_EQ(code_of([&] { (void)h.engine->export_report_html(h.sid); }), ErrorCode::NoReport);
    EXPECT_EQ(code_of([&] { (void)h.engine->update_report_body(h.sid, "x"); }), ErrorCode::NoReport);
    EXPECT_FALSE(h.engine->report(h.sid).has_value());
}

TEST(Export, WellFormedSelfContainedHtml) {
    Harness h;
    (void)h.engine->annotate_criterion(h.sid, "Originality");
    (void)h.engine->annotate_criterion(h.sid, "Relevance");
    (void)h.engine->build_report(h.sid, ReportStructure::ByCriteria);
    const auto html = h.engine->export_report_html(h.sid);

    boost::property_tree::ptree tree;
    std::istringstream in(html);
    ASSERT_NO_THROW(boost::property_tree::read_xml(in, tree));

    const std::regex heading("<h2[^>]*>([^<]*)</h2>");
    std::vector<std::string> headings;
    for (std::sregex_iterator it(html.begin(), html.end(), heading), end; it != end; ++it) headings.push_back((*it)[1]);
    EXPECT_EQ(headings, (std::vector<std::string>{"Originality", "Relevance"}));

    const std::regex section("data-heading=\"([^\"]*)\" data-color=\"(#[0-9a-f]{6})\"");
    const auto criteria = h.engine->criteria(h.sid);
    int sections = 0;
    for (std::sregex_iterator it(html.begin(), html.end(), section), end; it != end; ++it, ++sections) {
        EXPECT_EQ(criteria.find((*it)[1].str())->color.hex(), (*it)[2].str());
    }
    EXPECT_EQ(sections, 2);
    EXPECT_NE(html.find("#ffd600"), std::string::npos);
    EXPECT_NE(html.find("#4caf50"), std::string::npos);
    EXPECT_EQ(html.find("http://", html.find("<head>")), std::string::npos);
    EXPECT_EQ(html.find("src="), std::string::npos);
    EXPECT_EQ(html.find("<link"), std::string::npos);
    for (const auto& a : h.engine->annotations(h.sid)) {
        EXPECT_NE(html.find("<blockquote data-annotation=\"" + a.id + "\""), std::string::npos);
    }
    EXPECT_NE(html.find("page 1, "), std::string::npos);

    const auto path = h.engine->export_report(h.sid);
    EXPECT_EQ(path, h.dir / "exports" / ("report-" + h.sid + ".html"));
    EXPECT_EQ(t::read_file(path), html);
}

TEST(Export, EditedBodyIsRendered) {
    Harness h;
    (void)h.engine->annotate_criterion(h.sid, "Rigor");
    (void)h.engine->build_report(h.sid, ReportStructure::ByCriteria);
    const auto updated = h.engine->update_report_body(h.sid, "My own summary & <notes>.\n\n## Rigor\n\nSample is small.");
    EXPECT_EQ(updated.editable_body, "My own summary & <notes>.\n\n## Rigor\n\nSample is small.");
    const auto html = h.engine->export_report_html(h.sid);
    EXPECT_NE(html.find("My own summary &amp; &lt;notes&gt;."), std::string::npos);
    EXPECT_NE(html.find("Sample is small."), std::string::npos);
    EXPECT_NE(html.find("#f44336"), std::string::npos);
    boost::property_tree::ptree tree;
    std::istringstream in(html);
    EXPECT_NO_THROW(boost::property_tree::read_xml(in, tree));
}

TEST(Criteria, ReplacementCascades) {
    Harness h;
    (void)h.engine->annotate_criterion(h.sid, "Rigor");
    const auto relevance = h.engine->annotate_criterion(h.sid, "Relevance");
    const auto xml = R"(<criteria>
  <criterion name="Rigor" color="#f44336"><description>Soundness.</description></criterion>
  <criterion name="Clarity"><description>Readability.</description></criterion>
</criteria>)";
    const auto set = h.engine->set_criteria(h.sid, import_xml(xml));
    EXPECT_EQ(set.size(), 2U);
    EXPECT_EQ(h.engine->annotations(h.sid).size(), 3U);
    EXPECT_EQ(code_of([&] { (void)h.engine->annotation(h.sid, relevance[0].id); }), ErrorCode::UnknownAnnotation);
    EXPECT_EQ(code_of([&] { (void)h.engine->annotate_criterion(h.sid, "Relevance"); }), ErrorCode::UnknownCriterion);
    EXPECT_EQ(h.engine->annotate_criterion(h.sid, "Clarity").size(), 3U);
}

TEST(Purge, EndSessionErasesEverythingButExports) {
    Harness h;
    (void)h.engine->annotate_all(h.sid);
    const auto extra = h.engine->annotate_criterion(h.sid, "Rigor");
    ASSERT_EQ(h.engine->annotations(h.sid).size(), 15U);
    (void)h.engine->build_report(h.sid, ReportStructure::ByCriteria);
    const auto exported = h.engine->export_report(h.sid);
    (void)h.engine->set_relevance_feedback(h.sid, extra[0].id, RelevanceFeedback::Relevant);
    h.engine->end_session(h.sid);

    EXPECT_TRUE(std::filesystem::exists(exported));
    EXPECT_FALSE(std::filesystem::exists(h.engine->session_dir(h.sid)));
    EXPECT_TRUE(h.engine->gateway().call_log(h.sid).empty());
    const auto raw = utf8_to_u32(h.manuscript);
    for (const auto& [path, content] : t::read_tree(h.dir / "data")) {
        for (std::size_t i = 0; i + 20 <= raw.size(); i += 7) {
            const auto needle = u32_to_utf8(raw.substr(i, 20));
            ASSERT_EQ(content.find(needle), std::string::npos) << path;
        }
    }
    EXPECT_EQ(code_of([&] { (void)h.engine->annotations(h.sid); }), ErrorCode::UnknownSession);
    EXPECT_EQ(code_of([&] { (void)h.engine->recap(h.sid, "Rigor"); }), ErrorCode::UnknownSession);
}

TEST(Augmentation, ManuscriptIsNeverModified) {
    Harness h;
    const auto before = *h.engine->manuscript(h.sid);
    const auto raw_file = t::read_file(h.engine->session_dir(h.sid) / "manuscript.raw");
    const auto text_file = t::read_file(h.engine->session_dir(h.sid) / "text.json");
    const auto added = h.engine->annotate_all(h.sid);
    (void)h.engine->annotation_followup(h.sid, added[0].id, FollowupKind::Social);
    (void)h.engine->compile_criterion(h.sid, "Rigor");
    (void)h.engine->build_report(h.sid, ReportStructure::BySentiment);
    const auto after = *h.engine->manuscript(h.sid);
    EXPECT_EQ(after.raw_text, before.raw_text);
    EXPECT_EQ(after.normalized, before.normalized);
    EXPECT_EQ(t::read_file(h.engine->session_dir(h.sid) / "manuscript.raw"), raw_file);
    EXPECT_EQ(t::read_file(h.engine->session_dir(h.sid) / "text.json"), text_file);
}

TEST(Persistence, CallLogFile) {
    Harness h;
    (void)h.engine->annotate_criterion(h.sid, "Rigor");
    (void)h.engine->compile_criterion(h.sid, "Rigor");
    const auto calls = t::read_file(h.engine->session_dir(h.sid) / "calls.jsonl");
    std::istringstream lines(calls);
    std::string line;
    std::vector<std::string> templates;
    while (std::getline(lines, line)) templates.push_back(json::parse(line)["template"]);
    EXPECT_EQ(templates, (std::vector<std::string>{"annotate", "compile"}));
    EXPECT_EQ(calls.find("Triage"), std::string::npos);
}

TEST(Pdf, SessionFromGeneratedPdf) {
    Harness h;
    const auto pdf = t::make_pdf({{"Page one has a sentence that is long enough for quoting here."},
                                  {"Page two also carries a sentence long enough to be quoted."}});
    const auto sid = h.engine->create_session(pdf, detect_source_kind(pdf));
    EXPECT_EQ(h.engine->manuscript(sid)->source_kind, SourceKind::Pdf);
    const auto added = h.engine->annotate_criterion(sid, "Rigor", 2);
    ASSERT_EQ(added.size(), 2U);
    std::set<int> pages;
    for (const auto& a : added) pages.insert(*a.anchor.page);
    EXPECT_EQ(pages, (std::set<int>{1, 2}));
}
