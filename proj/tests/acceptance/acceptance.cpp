// Acceptance checks. One PASS/FAIL line per criterion; exits nonzero when
// any criterion fails. Mock backend only, no network.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>

#include "annoreview/anchor.hpp"
#include "annoreview/engine.hpp"
#include "annoreview/http_api.hpp"
#include "annoreview/normalize.hpp"
#include "test_support.hpp"

using namespace annoreview;
namespace t = annoreview::testing;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 2) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(digits);
    out << v;
    return out.str();
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    throw std::runtime_error("expected an error");
}

EngineConfig engine_config(const t::TempDir& dir) {
    EngineConfig config;
    config.data_root = dir / "data";
    config.export_root = dir / "exports";
    config.llm.backoff_ms = 1;
    return config;
}

std::string manuscript_text() { return t::read_file(t::test_data_dir() / "manuscript.txt"); }

// --- anchoring ---------------------------------------------------------------

// Line-break, whitespace and hyphenation noise, then character edits.
std::string perturb(t::Rng& rng, std::u32string_view excerpt, std::size_t edits) {
    std::u32string s(excerpt);
    for (std::size_t k = 0; k < edits && !s.empty(); ++k) {
        const auto pos = t::uniform(rng, 0, s.size() - 1);
        const char32_t repl = U'a' + static_cast<char32_t>(t::uniform(rng, 0, 25));
        switch (t::uniform(rng, 0, 2)) {
            case 0: s[pos] = repl; break;
            case 1: s.erase(pos, 1); break;
            default: s.insert(pos, 1, repl); break;
        }
    }
    std::u32string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char32_t c = s[i];
        if (c == U' ') {
            const auto roll = t::uniform(rng, 0, 9);
            if (roll == 0) out += U"\n";
            else if (roll == 1) out += U"  ";
            else if (roll == 2) out += U" \n\t";
            else out += U" ";
            continue;
        }
        out.push_back(c);
        const bool inside_word = i + 1 < s.size() && c >= U'a' && c <= U'z' && s[i + 1] >= U'a' && s[i + 1] <= U'z';
        if (inside_word && t::coin(rng, 0.02)) out += U"-\n";
    }
    return u32_to_utf8(out);
}

Outcome anchoring_accuracy() {
    constexpr int kDocs = 20;
    constexpr int kPerDoc = 10;
    t::Rng rng(2024);
    t::TempDir dir;
    DocumentStore store(dir / "data");
    const auto start = std::chrono::steady_clock::now();
    int recovered = 0;
    int total = 0;
    double worst_overlap = 1.0;
    for (int d = 0; d < kDocs; ++d) {
        // Known excerpts are spliced into filler prose at sentence boundaries.
        std::vector<std::string> excerpts;
        for (int k = 0; k < kPerDoc; ++k) excerpts.push_back(t::random_prose(rng, t::uniform(rng, 60, 300)));
        std::u32string doc;
        std::vector<IndexRange> truth;
        const std::size_t filler = 50000 / (kPerDoc + 1);
        for (int k = 0; k <= kPerDoc; ++k) {
            auto text = utf8_to_u32(t::random_prose(rng, filler));
            // break filler into lines so the document looks extracted
            for (std::size_t i = 70; i < text.size(); i += 70) {
                const auto sp = text.find(U' ', i);
                if (sp == std::u32string::npos) break;
                text[sp] = U'\n';
                i = sp;
            }
            doc += text;
            if (k == kPerDoc) break;
            doc += U" ";
            const auto e = utf8_to_u32(excerpts[static_cast<std::size_t>(k)]);
            truth.push_back({doc.size(), doc.size() + e.size()});
            doc += e;
            doc += U" ";
        }
        const auto m = store.ingest(u32_to_utf8(doc), SourceKind::PlainText);
        for (int k = 0; k < kPerDoc; ++k) {
            const auto& span = truth[static_cast<std::size_t>(k)];
            const auto clean = std::u32string_view(m->raw_text).substr(span.begin, span.size());
            const auto edits = t::uniform(rng, 0, clean.size() / 10);
            const auto excerpt = perturb(rng, clean, edits);
            ++total;
            const auto result = locate(*m, excerpt);
            std::optional<Anchor> anchor;
            if (const auto* a = std::get_if<Anchor>(&result)) anchor = *a;
            if (const auto* set = std::get_if<AnchorCandidateSet>(&result)) anchor = set->candidates.front();
            double overlap = 0.0;
            if (anchor && anchor->raw_range) {
                const auto lo = std::max(anchor->raw_range->begin, span.begin);
                const auto hi = std::min(anchor->raw_range->end, span.end);
                overlap = hi > lo ? static_cast<double>(hi - lo) / static_cast<double>(span.size()) : 0.0;
            }
            worst_overlap = std::min(worst_overlap, overlap);
            if (overlap >= 0.9) ++recovered;
        }
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double rate = static_cast<double>(recovered) / static_cast<double>(total);
    return {rate >= 0.99 && seconds < 10.0,
            std::to_string(recovered) + "/" + std::to_string(total) + " recovered with >=90% overlap (" +
                fmt(100.0 * rate, 1) + "%, need >=99%), worst overlap " + fmt(worst_overlap) + ", " + fmt(seconds) +
                " s (limit 10 s)"};
}

// --- edit distance -----------------------------------------------------------

Outcome edit_distance_oracle() {
    t::Rng rng(7);
    const std::u32string alphabet = U"abcdefgh ijé漢😀";
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto a = t::random_u32(rng, alphabet, 30);
        const auto b = t::random_u32(rng, alphabet, 30);
        if (edit_distance(a, b) != t::full_matrix_distance(a, b)) ++mismatches;
    }
    return {mismatches == 0, "1000 pairs (len <= 30), " + std::to_string(mismatches) + " mismatches"};
}

// --- end-to-end determinism --------------------------------------------------

std::string mask(std::string s, const std::string& session_id) {
    static const std::regex stamp(R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?Z)");
    s = std::regex_replace(s, stamp, "<TS>");
    std::size_t pos = 0;
    while ((pos = s.find(session_id, pos)) != std::string::npos) s.replace(pos, session_id.size(), "<SID>");
    return s;
}

std::pair<std::string, std::string> scripted_session() {
    t::TempDir dir;
    ReviewEngine engine(engine_config(dir), std::make_shared<MockBackend>());
    const auto sid = engine.create_session(manuscript_text(), SourceKind::PlainText);
    (void)engine.annotate_criterion(sid, "Rigor");
    (void)engine.annotate_criterion(sid, "Originality");
    (void)engine.compile_criterion(sid, "Rigor");
    (void)engine.compile_criterion(sid, "Originality");
    (void)engine.build_report(sid, ReportStructure::ByCriteria);
    const auto html_path = engine.export_report(sid);
    auto review = t::read_file(engine.session_dir(sid) / "review.json");
    auto html = t::read_file(html_path);
    engine.end_session(sid);
    return {mask(review, sid), mask(html, sid)};
}

Outcome e2e_determinism() {
    const auto first = scripted_session();
    int identical = 1;
    for (int run = 1; run < 3; ++run) identical += scripted_session() == first ? 1 : 0;
    const bool sane = first.first.find("\"annotations\"") != std::string::npos &&
                      first.second.find("<h2") != std::string::npos;
    return {identical == 3 && sane, std::to_string(identical) + "/3 runs byte-identical (review.json " +
                                        std::to_string(first.first.size()) + " B, HTML " +
                                        std::to_string(first.second.size()) + " B, timestamps masked)"};
}

// --- excerpt count -----------------------------------------------------------

Outcome excerpt_count() {
    t::TempDir dir;
    auto mock = std::make_shared<MockBackend>();
    // This criterion's model reply carries five verbatim items.
    json five = json::array();
    for (const char* e : {"Duplicate bug reports are a long-standing burden for maintainers.",
                          "We evaluated Triage Lens in a within-subjects study with nine maintainers.",
                          "connected components form the clusters", "Stack traces have been shown to be strong signals",
                          "Each participant triaged two batches of forty reports"}) {
        five.push_back({{"excerpt", e}, {"sentiment", "strength"}});
    }
    MockFixture f;
    f.template_name = "annotate";
    f.criterion = "Relevance";
    f.response = five.dump();
    mock->add_fixture(f);
    ReviewEngine engine(engine_config(dir), mock, t::stepping_clock());
    const auto sid = engine.create_session(manuscript_text(), SourceKind::PlainText);
    const auto synthetic_default = engine.annotate_criterion(sid, "Rigor").size();
    const auto fixture_default = engine.annotate_criterion(sid, "Relevance").size();
    const auto synthetic_one = engine.annotate_criterion(sid, "Originality", 1).size();
    const auto fixture_one = engine.annotate_criterion(sid, "Relevance", 1).size();
    EngineConfig one_config = engine_config(dir);
    one_config.num_excerpts_default = 1;
    ReviewEngine configured(one_config, mock, t::stepping_clock());
    const auto sid2 = configured.create_session(manuscript_text(), SourceKind::PlainText);
    const auto config_one = configured.annotate_criterion(sid2, "Contribution").size();
    const bool pass = synthetic_default == 3 && fixture_default == 3 && synthetic_one == 1 && fixture_one == 1 &&
                      config_one == 1;
    return {pass, "default -> " + std::to_string(synthetic_default) + " and " + std::to_string(fixture_default) +
                      " (5-item reply), num_excerpts=1 -> " + std::to_string(synthetic_one) + ", " +
                      std::to_string(fixture_one) + ", config default 1 -> " + std::to_string(config_one)};
}

// --- sentiment partition -----------------------------------------------------

Outcome sentiment_partition() {
    t::Rng rng(99);
    t::TempDir dir;
    ReviewEngine engine(engine_config(dir), std::make_shared<MockBackend>(), t::stepping_clock());
    const auto text = manuscript_text();
    const auto criteria = default_criteria();
    int violations = 0;
    int trials = 0;
    std::size_t cited_total = 0;
    while (trials < 500) {
        const auto sid = engine.create_session(text, SourceKind::PlainText);
        const auto count = t::uniform(rng, 1, 4);
        for (std::size_t c = 0; c < count; ++c) {
            const auto& name = criteria.criteria()[t::uniform(rng, 0, criteria.size() - 1)].name;
            (void)engine.annotate_criterion(sid, name, static_cast<int>(t::uniform(rng, 1, 5)));
        }
        for (const auto& a : engine.annotations(sid)) {
            const auto roll = t::uniform(rng, 0, 5);
            if (roll == 0) (void)engine.remove_annotation(sid, a.id);
            else if (roll <= 3) (void)engine.update_sentiment(sid, a.id, static_cast<Sentiment>(roll - 1));
        }
        if (engine.annotations(sid).empty()) {
            engine.end_session(sid);
            continue;
        }
        ++trials;
        const auto report = engine.build_report(sid, ReportStructure::BySentiment);
        std::multiset<std::string> cited;
        bool bad_heading = false;
        for (const auto& s : report.sections) {
            bad_heading |= s.heading != "Strengths" && s.heading != "Weaknesses" && s.heading != "Unclassified";
            cited.insert(s.cited_annotation_ids.begin(), s.cited_annotation_ids.end());
        }
        std::multiset<std::string> live;
        for (const auto& a : engine.annotations(sid)) live.insert(a.id);
        const bool disjoint = std::set<std::string>(cited.begin(), cited.end()).size() == cited.size();
        if (!disjoint || cited != live || bad_heading) ++violations;
        cited_total += cited.size();
        engine.end_session(sid);
    }
    return {violations == 0, std::to_string(trials) + " randomized trials (" + std::to_string(cited_total) +
                                 " annotations), " + std::to_string(violations) + " violations"};
}

// --- criteria XML round-trip -------------------------------------------------

Outcome criteria_round_trip() {
    t::Rng rng(5);
    int fixpoints = 0;
    for (int i = 0; i < 50; ++i) {
        const auto set = CriteriaSet::create(t::random_criteria_drafts(rng, t::uniform(rng, 1, 16)));
        const auto xml = export_xml(set);
        const auto back = import_xml(xml);
        if (back == set && export_xml(back) == xml) ++fixpoints;
    }
    const auto dup = code_of([] {
        (void)import_xml(R"(<criteria><criterion name="Rigor"><description>a</description></criterion>)"
                         R"(<criterion name="rigor"><description>b</description></criterion></criteria>)");
    });
    const auto empty = code_of([] { (void)import_xml("<criteria></criteria>"); });
    const bool pass = fixpoints == 50 && dup == ErrorCode::DuplicateName && empty == ErrorCode::EmptyCriteria;
    return {pass, std::to_string(fixpoints) + "/50 fixpoints; duplicate name -> " + std::string(to_string(dup)) +
                      ", empty set -> " + std::string(to_string(empty))};
}

// --- session purge -----------------------------------------------------------

Outcome session_purge() {
    t::TempDir dir;
    ReviewEngine engine(engine_config(dir), std::make_shared<MockBackend>(), t::stepping_clock());
    HttpApi api(engine);
    const auto text = manuscript_text();
    const auto sid = engine.create_session(text, SourceKind::PlainText);
    const auto added = engine.annotate_all(sid);
    (void)engine.annotation_followup(sid, added[0].id, FollowupKind::Clarify, "Is the sample large enough?");
    (void)engine.set_relevance_feedback(sid, added[1].id, RelevanceFeedback::Irrelevant);
    (void)engine.build_report(sid, ReportStructure::ByCriteria);
    const auto exported = engine.export_report(sid);
    const bool logged_before = !engine.call_log(sid).empty();
    engine.end_session(sid);

    const auto raw = utf8_to_u32(text);
    std::size_t leaks = 0;
    std::size_t files = 0;
    const auto tree = t::read_tree(dir / "data");
    for (const auto& [path, content] : tree) {
        ++files;
        for (std::size_t i = 0; i + 20 <= raw.size(); ++i) {
            if (content.find(u32_to_utf8(raw.substr(i, 20))) != std::string::npos) ++leaks;
        }
    }
    const bool log_purged = engine.gateway().call_log(sid).empty();
    int unknown = 0;
    const std::vector<std::function<void()>> calls = {
        [&] { (void)engine.manuscript(sid); },
        [&] { (void)engine.annotations(sid); },
        [&] { (void)engine.annotate_criterion(sid, "Rigor"); },
        [&] { (void)engine.recap(sid, "Rigor"); },
        [&] { (void)engine.build_report(sid, ReportStructure::ByCriteria); },
        [&] { engine.end_session(sid); },
    };
    for (const auto& c : calls) unknown += code_of(c) == ErrorCode::UnknownSession ? 1 : 0;
    ApiRequest r;
    r.method = "GET";
    r.path = "/sessions/" + sid + "/text";
    const auto http = api.handle(r);
    const bool http_unknown =
        http.status == 404 && json::parse(http.body)["error"]["code"] == "UnknownSession";
    const bool pass = leaks == 0 && log_purged && logged_before && unknown == static_cast<int>(calls.size()) &&
                      http_unknown && std::filesystem::exists(exported);
    return {pass, std::to_string(files) + " file(s) left under data root, " + std::to_string(leaks) +
                      " 20-char manuscript substrings found; call log " + (log_purged ? "purged" : "NOT purged") +
                      "; " + std::to_string(unknown) + "/" + std::to_string(calls.size()) +
                      " engine calls and HTTP GET -> UnknownSession" + (http_unknown ? "" : " (HTTP failed)")};
}

// --- recap -------------------------------------------------------------------

Outcome recap_is_local() {
    t::TempDir dir;
    auto mock = std::make_shared<MockBackend>();
    ReviewEngine engine(engine_config(dir), mock, t::stepping_clock());
    const auto sid = engine.create_session(manuscript_text(), SourceKind::PlainText);
    const auto added = engine.annotate_criterion(sid, "Rigor");
    (void)engine.save_output(sid, added[0].id, FollowupKind::FactCheck, std::nullopt, "Checked.");
    (void)engine.compile_criterion(sid, "Rigor");
    const auto calls = engine.gateway().call_count();
    const auto received = mock->received().size();
    std::size_t items = 0;
    const auto defaults = default_criteria();
    for (const auto& c : defaults.criteria()) items += engine.recap(sid, c.name).item_count();
    const bool unchanged = engine.gateway().call_count() == calls && mock->received().size() == received;
    return {unchanged && items == 4, "gateway calls " + std::to_string(calls) + " -> " +
                                         std::to_string(engine.gateway().call_count()) + " across 4 recaps (" +
                                         std::to_string(items) + " items rendered)"};
}

// --- response parser ---------------------------------------------------------

// Each response is parsed in a child process so a crash is observed, not
// suffered. Child exit: 0 value with containment, 1 typed error,
// 2 containment violated, 3 untyped exception.
Outcome parser_robustness() {
    const auto corpus = t::adversarial_responses();
    int values = 0;
    int typed = 0;
    int failures = 0;
    for (const auto& raw : corpus) {
        std::fflush(nullptr);
        const pid_t pid = fork();
        if (pid == 0) {
            int status = 0;
            try {
                const auto parsed = parse_annotate_response(raw, 3);
                for (const auto& item : parsed.items) {
                    if (item.excerpt.empty() || raw.find(item.excerpt) == std::string::npos) status = 2;
                }
            } catch (const Error& e) {
                status = e.code() == ErrorCode::UnparseableResponse || e.code() == ErrorCode::EmptyItems ? 1 : 3;
            } catch (...) {
                status = 3;
            }
            _exit(status);
        }
        int status = 0;
        waitpid(pid, &status, 0);
        if (!WIFEXITED(status)) {
            ++failures;
            continue;
        }
        switch (WEXITSTATUS(status)) {
            case 0: ++values; break;
            case 1: ++typed; break;
            default: ++failures;
        }
    }
    return {failures == 0 && corpus.size() == 30,
            std::to_string(corpus.size()) + " responses: " + std::to_string(values) + " values (containment held), " +
                std::to_string(typed) + " typed errors, " + std::to_string(failures) + " crashes or violations"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"anchoring-accuracy", anchoring_accuracy},
        {"edit-distance-oracle", edit_distance_oracle},
        {"mock-e2e-determinism", e2e_determinism},
        {"excerpt-count", excerpt_count},
        {"sentiment-partition", sentiment_partition},
        {"criteria-xml-round-trip", criteria_round_trip},
        {"session-purge", session_purge},
        {"recap-llm-free", recap_is_local},
        {"response-parser-robustness", parser_robustness},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
              << " acceptance criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
