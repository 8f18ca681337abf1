#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace qaap::eval {

struct DatasetExample {
    std::string id;
    std::string question;
    /// Never empty. An empty-string member encodes "unanswerable".
    std::vector<std::string> gold_answers;
    std::optional<std::vector<std::string>> provided_context;
    std::string source_dataset;
    std::string split;
};

void to_json(nlohmann::json& j, const DatasetExample& e);
void from_json(const nlohmann::json& j, DatasetExample& e);

/// Canonical JSON-lines dataset; rejects duplicate ids and empty gold lists.
std::vector<DatasetExample> load_dataset(const std::filesystem::path& path);
std::vector<DatasetExample> parse_dataset(std::string_view jsonl, const std::string& origin = "<memory>");

/// SQuAD-style: lowercase, drop punctuation, drop the articles a/an/the,
/// collapse whitespace.
std::string normalize_answer(std::string_view text);

int exact_match(std::string_view prediction, const std::vector<std::string>& golds);
double token_f1(std::string_view prediction, const std::vector<std::string>& golds);

struct Prediction {
    std::string id;
    std::string text;
    std::optional<std::string> error;  // error rows score zero
};

struct ExampleScore {
    std::string id;
    std::string dataset;
    std::string prediction;
    int em = 0;
    double f1 = 0.0;
    bool predicted = false;
    std::optional<std::string> error;
};

struct Aggregate {
    std::size_t count = 0;
    double em = 0.0;  // percent, one decimal
    double f1 = 0.0;
};

struct EvalReport {
    std::vector<ExampleScore> examples;  // dataset order
    std::map<std::string, Aggregate> per_dataset;
    Aggregate overall;

    nlohmann::json to_json() const;
    /// Aligned text table, one row per dataset plus an overall row.
    std::string to_table() const;
};

/// Mean x 100 rounded to one decimal.
double percent_one_decimal(double sum, std::size_t count);

/// Missing predictions score zero. Throws DuplicatePrediction.
EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<DatasetExample>& dataset);

}  // namespace qaap::eval
