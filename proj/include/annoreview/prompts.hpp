#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "annoreview/review_model.hpp"

namespace annoreview {

enum class TemplateName {
    Annotate,
    FactCheck,
    Social,
    Clarify,
    Compile,
    Viewpoints,
    ReportByCriteria,
    ReportBySentiment,
};

inline constexpr std::array<TemplateName, 8> kAllTemplates{
    TemplateName::Annotate,  TemplateName::FactCheck,  TemplateName::Social,           TemplateName::Clarify,
    TemplateName::Compile,   TemplateName::Viewpoints, TemplateName::ReportByCriteria, TemplateName::ReportBySentiment,
};

[[nodiscard]] std::string_view to_string(TemplateName name);
[[nodiscard]] TemplateName parse_template_name(std::string_view s);
[[nodiscard]] TemplateName template_for(FollowupKind kind);

/// Placeholders a template body may use, written `{name}` in the body.
/// Literal braces are written `{{` and `}}`.
[[nodiscard]] const std::set<std::string, std::less<>>& placeholder_vocabulary();

using Bindings = std::map<std::string, std::string, std::less<>>;

class PromptTemplate {
public:
    /// Throws UnknownPlaceholder for names outside the vocabulary or a
    /// malformed `{...}` sequence.
    [[nodiscard]] static PromptTemplate parse(TemplateName name, std::string body);

    [[nodiscard]] TemplateName name() const { return name_; }
    [[nodiscard]] const std::string& body() const { return body_; }
    [[nodiscard]] const std::set<std::string, std::less<>>& placeholders() const { return placeholders_; }

    /// Throws MissingBinding naming the first unbound placeholder.
    [[nodiscard]] std::string render(const Bindings& bindings) const;

private:
    struct Piece {
        bool is_placeholder;
        std::string text;
    };

    TemplateName name_ = TemplateName::Annotate;
    std::string body_;
    std::vector<Piece> pieces_;
    std::set<std::string, std::less<>> placeholders_;
};

/// One template per name. Defaults ship with the build; a directory of
/// `<name>.txt` files overrides any subset of them.
class PromptLibrary {
public:
    [[nodiscard]] static PromptLibrary defaults();
    [[nodiscard]] static PromptLibrary load(const std::filesystem::path& directory);

    [[nodiscard]] const PromptTemplate& get(TemplateName name) const;
    [[nodiscard]] std::string render(TemplateName name, const Bindings& bindings) const {
        return get(name).render(bindings);
    }

private:
    std::map<TemplateName, PromptTemplate> templates_;
};

/// Raw text of the built-in default for a template.
[[nodiscard]] std::string_view default_template_text(TemplateName name);

struct AnnotateItem {
    std::string excerpt;
    Sentiment sentiment = Sentiment::Unset;
    std::optional<std::string> comment;
    /// Sentiment missing or not one of strength/weakness.
    bool unknown_sentiment = false;
};

struct AnnotateResponse {
    std::vector<AnnotateItem> items;
    std::vector<std::string> warnings;
};

/// Strips code fences, takes the first bracket-balanced JSON value, parses
/// it (with one trailing-comma repair pass) and validates the items. Items
/// whose excerpt does not occur verbatim in `raw` are dropped with a
/// warning; extra items beyond `num_excerpts` are cut.
/// Throws UnparseableResponse or EmptyItems; never anything else.
[[nodiscard]] AnnotateResponse parse_annotate_response(std::string_view raw, std::size_t num_excerpts);

/// Enumerates the live annotations of a criterion in creation order.
/// Throws NoAnnotations.
[[nodiscard]] std::string digest_annotations(const CriterionReview& review);

/// Same layout for an arbitrary list; each entry names its criterion.
[[nodiscard]] std::string digest_annotation_list(const std::vector<const Annotation*>& annotations);

/// Bullet list of recommendations, or a fixed "none" line.
[[nodiscard]] std::string format_recommendations(const std::vector<std::string>& recommendations);

struct FittedText {
    std::string text;
    bool truncated = false;
};

/// Keeps the head and tail of the text when it exceeds `max_chars` code
/// points, with a marker line in between.
[[nodiscard]] FittedText fit_to_budget(std::string_view text, std::size_t max_chars);

}  // namespace annoreview
