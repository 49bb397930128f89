#include <gtest/gtest.h>

#include "annoreview/anchor.hpp"
#include "annoreview/error.hpp"
#include "test_support.hpp"

using namespace annoreview;
namespace t = annoreview::testing;

namespace {

Manuscript doc(std::string_view text) { return build_manuscript({std::string(text)}, SourceKind::PlainText); }

}  // namespace

TEST(EditDistance, Examples) {
    EXPECT_EQ(edit_distance(std::string_view(""), std::string_view("abc")), 3U);
    EXPECT_EQ(edit_distance(std::string_view("kitten"), std::string_view("sitting")), 3U);
    EXPECT_EQ(edit_distance(std::string_view("flaw"), std::string_view("lawn")), 2U);
    EXPECT_EQ(edit_distance(std::string_view("\xC3\xA9t\xC3\xA9"), std::string_view("ete")), 2U);
}

TEST(EditDistance, IdentityAndOracle) {
    t::Rng rng(11);
    const std::u32string_view alphabet = U"abcd é";
    for (int i = 0; i < 300; ++i) {
        const auto a = t::random_u32(rng, alphabet, 30);
        const auto b = t::random_u32(rng, alphabet, 30);
        EXPECT_EQ(edit_distance(a, a), 0U);
        EXPECT_EQ(edit_distance(a, b), t::full_matrix_distance(a, b));
        EXPECT_EQ(edit_distance(a, b), edit_distance(b, a));
    }
}

TEST(Locate, UniqueExactSubstring) {
    const auto m = doc("the quick brown fox");
    const auto r = locate(m, "quick brown");
    ASSERT_TRUE(std::holds_alternative<Anchor>(r));
    const auto& a = std::get<Anchor>(r);
    EXPECT_EQ(a.kind, MatchKind::Exact);
    EXPECT_EQ(a.raw_range, (IndexRange{4, 15}));
    EXPECT_EQ(a.page, 1);
    EXPECT_EQ(a.ratio, 0.0);
}

TEST(Locate, HyphenatedRawSpan) {
    const std::string text = "We describe the con-\ntribution of this work in detail.";
    const auto m = doc(text);
    const auto r = locate(m, "contribution of this");
    ASSERT_TRUE(std::holds_alternative<Anchor>(r));
    const auto& a = std::get<Anchor>(r);
    EXPECT_EQ(a.kind, MatchKind::Exact);
    EXPECT_EQ(m.raw_slice(*a.raw_range), "con-\ntribution of this");
}

TEST(Locate, ExcerptIsNormalizedToo) {
    const auto m = doc("Results  were\nSIGNIFICANT overall.");
    const auto r = locate(m, "results were significant");
    ASSERT_TRUE(std::holds_alternative<Anchor>(r));
    EXPECT_EQ(m.raw_slice(*std::get<Anchor>(r).raw_range), "Results  were\nSIGNIFICANT");
}

TEST(Locate, SymmetricDuplicatesGiveCandidates) {
    const auto m = doc("abc xyz abc");
    const auto r = locate(m, "abc");
    ASSERT_TRUE(std::holds_alternative<AnchorCandidateSet>(r));
    const auto& set = std::get<AnchorCandidateSet>(r);
    ASSERT_EQ(set.candidates.size(), 2U);
    EXPECT_EQ(set.candidates[0].raw_range->begin, 0U);
    EXPECT_EQ(set.candidates[1].raw_range->begin, 8U);
    EXPECT_EQ(pick_earliest(set).raw_range, (IndexRange{0, 3}));
}

TEST(Locate, FuzzyMatchWithinThreshold) {
    const auto m = doc("Our evaluation used nine subjects to assess acceptance of the tool.");
    const auto r = locate(m, "evaluation used nine subjcts to asess");
    ASSERT_TRUE(std::holds_alternative<Anchor>(r));
    const auto& a = std::get<Anchor>(r);
    EXPECT_EQ(a.kind, MatchKind::Fuzzy);
    EXPECT_GT(a.ratio, 0.0);
    EXPECT_LE(a.ratio, 0.2);
    EXPECT_EQ(m.raw_slice(*a.raw_range), "evaluation used nine subjects to assess");
}

TEST(Locate, NothingCloseIsUnanchored) {
    const auto m = doc("A completely unrelated sentence about gardening.");
    EXPECT_TRUE(std::holds_alternative<Unanchored>(locate(m, "quantum chromodynamics lattice")));
}

TEST(Locate, ThresholdIsConfigurable) {
    const auto m = doc("the method is robust to noise");
    LocateOptions strict;
    strict.max_ratio = 0.05;
    EXPECT_TRUE(std::holds_alternative<Unanchored>(locate(m, "the methxd is rbust", strict)));
    EXPECT_TRUE(std::holds_alternative<Anchor>(locate(m, "the methxd is rbust")));
}

TEST(Locate, EmptyExcerptIsAnError) {
    const auto m = doc("text");
    for (const char* e : {"", "   ", "\n\t"}) {
        try {
            (void)locate(m, e);
            FAIL();
        } catch (const Error& err) {
            EXPECT_EQ(err.code(), ErrorCode::EmptyExcerpt);
        }
    }
}

TEST(Locate, PageOfMatchStart) {
    const auto m = build_manuscript({"first page text", "second page has the target phrase"}, SourceKind::PlainText);
    const auto r = locate(m, "the target phrase");
    ASSERT_TRUE(std::holds_alternative<Anchor>(r));
    EXPECT_EQ(std::get<Anchor>(r).page, 2);
}

TEST(FindHits, PrunedEqualsExhaustiveOnSmallCase) {
    const std::u32string text = U"lorem ipsum dolor sit amet consectetur adipiscing elit sed do";
    LocateOptions ex;
    ex.exhaustive = true;
    for (const std::u32string p : {U"dolr sit amit", U"consectetur adipscing", U"sed dx", U"zzzz qqqq"}) {
        EXPECT_EQ(find_hits(text, p), find_hits(text, p, ex));
    }
}

TEST(FindHits, LeadingDeletionAtTextStart) {
    const auto hits = find_hits(U"bab cc b", U" bab ");
    ASSERT_FALSE(hits.empty());
    EXPECT_EQ(hits.front().span, (IndexRange{0, 4}));
    EXPECT_EQ(hits.front().distance, 1U);
}

TEST(MatchKindTest, Names) {
    for (auto k : {MatchKind::Exact, MatchKind::Fuzzy, MatchKind::Unanchored}) {
        EXPECT_EQ(parse_match_kind(to_string(k)), k);
    }
}
