#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qaap/model.hpp"

namespace qaap::retrieval {

/// Returned when no title matches; holds up to five near matches.
struct SimilarTitles {
    std::vector<std::string> titles;
};

using SearchResult = std::variant<Document, SimilarTitles>;

class Searcher {
public:
    virtual ~Searcher() = default;
    /// Throws NotFound when there is neither a page nor a similar title.
    /// Safe for concurrent callers.
    virtual SearchResult search(const std::string& entity) = 0;
    /// Identifies the corpus contents for run manifests.
    virtual std::string fingerprint() const = 0;
};

inline constexpr std::size_t kMaxSimilarTitles = 5;

/// Lowercase, alphanumeric runs joined by '-'.
std::string title_slug(std::string_view title);

/// Ranks candidate titles against a query: edit distance over normalized
/// forms, accepting titles that share a word or are within half the
/// query's length. Deterministic: ties break alphabetically.
std::vector<std::string> similar_titles(const std::string& query, const std::vector<std::string>& titles,
                                        std::size_t limit = kMaxSimilarTitles);

/// Offline corpus directory: `titles.json` is a JSON array of
/// {"title": ..., "file": "<title-slug>.txt"}; each file holds plain text.
class OfflineCorpus : public Searcher {
public:
    explicit OfflineCorpus(std::filesystem::path dir);
    SearchResult search(const std::string& entity) override;
    std::string fingerprint() const override;
    const std::vector<std::string>& titles() const { return titles_; }

private:
    Document load(std::size_t index) const;

    std::filesystem::path dir_;
    std::vector<std::string> titles_;
    std::vector<std::string> files_;
};

struct MediaWikiConfig {
    std::string endpoint = "https://en.wikipedia.org/w/api.php";
    std::chrono::seconds timeout{30};
};

/// MediaWiki Action API client: exact title lookup through
/// prop=extracts (plain text, redirects followed), falling back to
/// list=search for similar titles.
class MediaWikiSearcher : public Searcher {
public:
    explicit MediaWikiSearcher(MediaWikiConfig config = {});
    SearchResult search(const std::string& entity) override;
    std::string fingerprint() const override;

private:
    std::string get(const std::string& query) const;
    MediaWikiConfig config_;
};

inline constexpr int kDefaultSegmentBudget = 512;
inline constexpr int kMinSegmentBudget = 64;

/// Splits the document body into segments of at most `budget_tokens`
/// whitespace tokens, packing whole paragraphs greedily. A paragraph larger
/// than the budget is split at sentence boundaries; a single sentence larger
/// than the budget becomes its own segment. Segment ids are
/// `<document id>#<index>`.
std::vector<Segment> segment(const Document& document, int budget_tokens = kDefaultSegmentBudget);

/// Inverse of segment(): paragraph boundaries rejoin with a blank line,
/// sentence-level splits with a single space.
std::string join_segments(const std::vector<Segment>& segments);

/// Sentences of one paragraph, split after '.', '!' or '?' followed by a space.
std::vector<std::string> split_sentences(std::string_view paragraph);

/// Builds a Document from raw text, canonicalizing the body.
Document make_document(std::string id, std::string title, KnowledgeSource source, std::string_view raw_text);

}  // namespace qaap::retrieval
