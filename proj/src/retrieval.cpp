#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "qaap/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "qaap/digest.hpp"
#include "qaap/error.hpp"
#include "qaap/http_url.hpp"
#include "qaap/text.hpp"

namespace qaap::retrieval {

std::string title_slug(std::string_view title) {
    std::string slug;
    bool pending_dash = false;
    for (const char c : title) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            if (pending_dash && !slug.empty()) slug += '-';
            pending_dash = false;
            slug += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else {
            pending_dash = true;
        }
    }
    return slug;
}

namespace {

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::set<std::string> content_words(const std::string& normalized) {
    std::set<std::string> words;
    for (const auto& w : text::split_whitespace(normalized)) {
        auto slug = title_slug(w);
        if (slug.size() >= 3) words.insert(slug);
    }
    return words;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::vector<std::string> similar_titles(const std::string& query, const std::vector<std::string>& titles,
                                        std::size_t limit) {
    const auto q = normalize_field(query);
    const auto q_words = content_words(q);
    std::vector<std::pair<std::size_t, std::string>> ranked;
    for (const auto& title : titles) {
        const auto t = normalize_field(title);
        const auto distance = edit_distance(q, t);
        const auto t_words = content_words(t);
        const bool shares_word = std::any_of(q_words.begin(), q_words.end(), [&](const auto& w) { return t_words.count(w) > 0; });
        const bool close = distance * 2 <= std::max(q.size(), t.size());
        if (shares_word || close) ranked.emplace_back(distance, title);
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ranked.size() && i < limit; ++i) out.push_back(ranked[i].second);
    return out;
}

Document make_document(std::string id, std::string title, KnowledgeSource source, std::string_view raw_text) {
    Document d;
    d.id = std::move(id);
    d.title = std::move(title);
    d.source = source;
    d.body = canonical_body(raw_text);
    return d;
}

// ---------------------------------------------------------------------------
// Offline corpus
// ---------------------------------------------------------------------------

OfflineCorpus::OfflineCorpus(std::filesystem::path dir) : dir_(std::move(dir)) {
    const auto index_path = dir_ / "titles.json";
    nlohmann::json index;
    try {
        index = nlohmann::json::parse(read_file(index_path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(index_path.string() + ": " + e.what());
    }
    if (!index.is_array()) throw ConfigError(index_path.string() + ": expected an array");
    for (const auto& entry : index) {
        titles_.push_back(entry.at("title").get<std::string>());
        files_.push_back(entry.value("file", title_slug(titles_.back()) + ".txt"));
    }
}

Document OfflineCorpus::load(std::size_t index) const {
    return make_document("wiki:" + title_slug(titles_[index]), titles_[index], KnowledgeSource::external,
                         read_file(dir_ / files_[index]));
}

SearchResult OfflineCorpus::search(const std::string& entity) {
    const auto key = normalize_field(entity);
    if (key.empty()) throw NotFound(entity);
    for (std::size_t i = 0; i < titles_.size(); ++i)
        if (normalize_field(titles_[i]) == key) return load(i);
    auto similar = similar_titles(entity, titles_);
    if (similar.empty()) throw NotFound(entity);
    return SimilarTitles{std::move(similar)};
}

std::string OfflineCorpus::fingerprint() const {
    std::vector<std::size_t> order(titles_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return titles_[a] < titles_[b]; });
    std::string material;
    for (auto i : order) {
        const auto content = read_file(dir_ / files_[i]);
        material += titles_[i] + '\0' + std::to_string(content.size()) + '\0' + content;
    }
    return "sha256:" + sha256_hex(material);
}

// ---------------------------------------------------------------------------
// MediaWiki
// ---------------------------------------------------------------------------

MediaWikiSearcher::MediaWikiSearcher(MediaWikiConfig config) : config_(std::move(config)) {
    http::split_url(config_.endpoint);  // validates
}

std::string MediaWikiSearcher::get(const std::string& query) const {
    const auto url = http::split_url(config_.endpoint);
    httplib::Client client(url.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_follow_location(true);
    auto res = client.Get(url.path + "?" + query, httplib::Headers{{"User-Agent", "qaap/1.0"}});
    if (!res) throw TransportError(0, 1, httplib::to_string(res.error()));
    if (res->status != 200) throw TransportError(res->status, 1, res->body.substr(0, 300));
    return res->body;
}

SearchResult MediaWikiSearcher::search(const std::string& entity) {
    if (normalize_field(entity).empty()) throw NotFound(entity);
    const auto param = [](const std::string& v) { return httplib::detail::encode_query_param(v); };
    try {
        const auto page = nlohmann::json::parse(
            get("action=query&format=json&formatversion=2&prop=extracts&explaintext=1&redirects=1&titles=" +
                param(entity)));
        for (const auto& p : page.at("query").value("pages", nlohmann::json::array())) {
            if (p.value("missing", false) || p.value("invalid", false)) continue;
            const auto extract = p.value("extract", std::string{});
            if (extract.empty()) continue;
            const auto title = p.value("title", entity);
            return make_document("wiki:" + title_slug(title), title, KnowledgeSource::external, extract);
        }
        const auto found = nlohmann::json::parse(
            get("action=query&format=json&formatversion=2&list=search&srlimit=" + std::to_string(kMaxSimilarTitles) +
                "&srsearch=" + param(entity)));
        SimilarTitles similar;
        for (const auto& hit : found.at("query").value("search", nlohmann::json::array()))
            similar.titles.push_back(hit.at("title").get<std::string>());
        if (similar.titles.empty()) throw NotFound(entity);
        return similar;
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(200, 1, std::string("unreadable MediaWiki response: ") + e.what());
    }
}

std::string MediaWikiSearcher::fingerprint() const { return "online:" + config_.endpoint; }

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

std::vector<std::string> split_sentences(std::string_view paragraph) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    for (std::size_t i = 0; i + 1 < paragraph.size(); ++i) {
        const char c = paragraph[i];
        if ((c == '.' || c == '!' || c == '?') && paragraph[i + 1] == ' ') {
            sentences.emplace_back(paragraph.substr(start, i + 1 - start));
            start = i + 2;
        }
    }
    if (start < paragraph.size()) sentences.emplace_back(paragraph.substr(start));
    return sentences;
}

namespace {

std::size_t token_count(std::string_view s) { return text::split_whitespace(s).size(); }

struct Chunk {
    std::string text;
    std::size_t tokens;
    bool continues;
};

// Packs sentences of one oversize paragraph into chunks within budget.
std::vector<Chunk> split_paragraph(const std::string& paragraph, std::size_t budget) {
    std::vector<Chunk> chunks;
    Chunk current{"", 0, false};
    for (const auto& sentence : split_sentences(paragraph)) {
        const auto n = token_count(sentence);
        if (!current.text.empty() && current.tokens + n > budget) {
            chunks.push_back(current);
            current = Chunk{"", 0, true};
        }
        if (!current.text.empty()) current.text += ' ';
        current.text += sentence;
        current.tokens += n;
    }
    if (!current.text.empty()) chunks.push_back(current);
    return chunks;
}

}  // namespace

std::vector<Segment> segment(const Document& document, int budget_tokens) {
    if (budget_tokens < kMinSegmentBudget)
        throw ConfigError("segment budget must be at least " + std::to_string(kMinSegmentBudget));
    const auto budget = static_cast<std::size_t>(budget_tokens);

    std::vector<Segment> segments;
    auto emit = [&](std::string text, bool continues) {
        Segment s;
        s.index = static_cast<int>(segments.size());
        s.id = document.id + "#" + std::to_string(s.index);
        s.text = std::move(text);
        s.continues_paragraph = continues;
        segments.push_back(std::move(s));
    };

    std::string pending;
    std::size_t pending_tokens = 0;
    auto flush = [&] {
        if (!pending.empty()) emit(std::move(pending), false);
        pending.clear();
        pending_tokens = 0;
    };

    for (const auto& paragraph : split_paragraphs(document.body)) {
        const auto n = token_count(paragraph);
        if (n > budget) {
            flush();
            for (auto& chunk : split_paragraph(paragraph, budget)) emit(std::move(chunk.text), chunk.continues);
            continue;
        }
        if (!pending.empty() && pending_tokens + n > budget) flush();
        if (!pending.empty()) pending += "\n\n";
        pending += paragraph;
        pending_tokens += n;
    }
    flush();
    return segments;
}

std::string join_segments(const std::vector<Segment>& segments) {
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i) out += segments[i].continues_paragraph ? " " : "\n\n";
        out += segments[i].text;
    }
    return out;
}

}  // namespace qaap::retrieval
