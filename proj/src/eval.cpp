#include "qaap/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "qaap/error.hpp"
#include "qaap/text.hpp"

namespace qaap::eval {

void to_json(nlohmann::json& j, const DatasetExample& e) {
    j = {{"id", e.id},
         {"question", e.question},
         {"gold_answers", e.gold_answers},
         {"metadata", {{"source_dataset", e.source_dataset}, {"split", e.split}}}};
    if (e.provided_context) j["provided_context"] = *e.provided_context;
}

void from_json(const nlohmann::json& j, DatasetExample& e) {
    e.id = j.at("id").get<std::string>();
    e.question = j.at("question").get<std::string>();
    e.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
    if (j.contains("provided_context") && !j.at("provided_context").is_null())
        e.provided_context = j.at("provided_context").get<std::vector<std::string>>();
    const auto meta = j.value("metadata", nlohmann::json::object());
    e.source_dataset = meta.value("source_dataset", std::string{"default"});
    e.split = meta.value("split", std::string{});
}

std::vector<DatasetExample> parse_dataset(std::string_view jsonl, const std::string& origin) {
    std::vector<DatasetExample> examples;
    std::set<std::string> seen;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto where = origin + ":" + std::to_string(line_no);
        DatasetExample example;
        try {
            example = nlohmann::json::parse(line).get<DatasetExample>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(where + ": " + e.what());
        }
        if (example.gold_answers.empty()) throw ConfigError(where + ": gold_answers is empty");
        if (!seen.insert(example.id).second) throw ConfigError(where + ": duplicate id " + example.id);
        examples.push_back(std::move(example));
    }
    return examples;
}

std::vector<DatasetExample> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read dataset " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_dataset(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> answer_tokens(std::string_view text) {
    std::string stripped;
    for (const char c : text) {
        if (std::ispunct(static_cast<unsigned char>(c))) continue;
        stripped += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    std::vector<std::string> tokens;
    for (auto& w : text::split_whitespace(stripped))
        if (w != "a" && w != "an" && w != "the") tokens.push_back(std::move(w));
    return tokens;
}

double f1_single(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    if (pred.empty() || gold.empty()) return pred == gold ? 1.0 : 0.0;
    std::unordered_map<std::string, int> counts;
    for (const auto& t : gold) ++counts[t];
    int common = 0;
    for (const auto& t : pred) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
    const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
    return 2 * precision * recall / (precision + recall);
}

}  // namespace

std::string normalize_answer(std::string_view text) { return text::join(answer_tokens(text), " "); }

int exact_match(std::string_view prediction, const std::vector<std::string>& golds) {
    const auto p = normalize_answer(prediction);
    return std::any_of(golds.begin(), golds.end(), [&](const auto& g) { return normalize_answer(g) == p; }) ? 1 : 0;
}

double token_f1(std::string_view prediction, const std::vector<std::string>& golds) {
    const auto p = answer_tokens(prediction);
    double best = 0.0;
    for (const auto& g : golds) best = std::max(best, f1_single(p, answer_tokens(g)));
    return best;
}

double percent_one_decimal(double sum, std::size_t count) {
    if (count == 0) return 0.0;
    return std::round(sum * 1000.0 / static_cast<double>(count)) / 10.0;
}

EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<DatasetExample>& dataset) {
    std::unordered_map<std::string, const Prediction*> by_id;
    for (const auto& p : predictions)
        if (!by_id.emplace(p.id, &p).second) throw DuplicatePrediction(p.id);

    EvalReport report;
    struct Sums {
        std::size_t count = 0;
        double em = 0, f1 = 0;
    };
    std::map<std::string, Sums> sums;
    Sums total;

    for (const auto& example : dataset) {
        ExampleScore score;
        score.id = example.id;
        score.dataset = example.source_dataset;
        if (auto it = by_id.find(example.id); it != by_id.end()) {
            const auto& p = *it->second;
            score.predicted = true;
            score.prediction = p.text;
            score.error = p.error;
            if (!p.error) {
                score.em = exact_match(p.text, example.gold_answers);
                score.f1 = token_f1(p.text, example.gold_answers);
            }
        }
        auto& s = sums[example.source_dataset];
        for (auto* acc : {&s, &total}) {
            ++acc->count;
            acc->em += score.em;
            acc->f1 += score.f1;
        }
        report.examples.push_back(std::move(score));
    }
    for (const auto& [name, s] : sums)
        report.per_dataset[name] = Aggregate{s.count, percent_one_decimal(s.em, s.count), percent_one_decimal(s.f1, s.count)};
    report.overall = Aggregate{total.count, percent_one_decimal(total.em, total.count),
                               percent_one_decimal(total.f1, total.count)};
    return report;
}

nlohmann::json EvalReport::to_json() const {
    auto aggregate = [](const Aggregate& a) { return nlohmann::json{{"count", a.count}, {"em", a.em}, {"f1", a.f1}}; };
    nlohmann::json datasets = nlohmann::json::object();
    for (const auto& [name, a] : per_dataset) datasets[name] = aggregate(a);
    auto rows = nlohmann::json::array();
    for (const auto& e : examples) {
        nlohmann::json row = {{"id", e.id},
                              {"dataset", e.dataset},
                              {"prediction", e.prediction},
                              {"predicted", e.predicted},
                              {"em", e.em},
                              {"f1", e.f1}};
        if (e.error) row["error"] = *e.error;
        rows.push_back(std::move(row));
    }
    return {{"overall", aggregate(overall)}, {"datasets", std::move(datasets)}, {"examples", std::move(rows)}};
}

std::string EvalReport::to_table() const {
    std::size_t width = std::string("overall").size();
    for (const auto& [name, a] : per_dataset) width = std::max(width, name.size());
    auto row = [&](const std::string& name, const Aggregate& a) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-*s  %6zu  %6.1f  %6.1f\n", static_cast<int>(width), name.c_str(), a.count,
                      a.em, a.f1);
        return std::string(buf);
    };
    char header[128];
    std::snprintf(header, sizeof header, "%-*s  %6s  %6s  %6s\n", static_cast<int>(width), "dataset", "n", "EM", "F1");
    std::string out = header;
    for (const auto& [name, a] : per_dataset) out += row(name, a);
    out += row("overall", overall);
    return out;
}

}  // namespace qaap::eval
