#pragma once

#include <stdexcept>
#include <string>

namespace qaap {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// literal-parser

class MalformedLiteral : public Error {
public:
    MalformedLiteral(std::size_t line, std::string reason)
        : Error("malformed literal at line " + std::to_string(line) + ": " + reason),
          line_(line),
          reason_(std::move(reason)) {}
    std::size_t line() const { return line_; }
    const std::string& reason() const { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

class MissingQuery : public Error {
public:
    MissingQuery() : Error("no `query` assignment in completion") {}
};

class AmbiguousAnswerKey : public Error {
public:
    explicit AmbiguousAnswerKey(int placeholder_count)
        : Error("cannot infer answer_key: " + std::to_string(placeholder_count) + " ANSWER placeholders") {}
};

// llm-backend

class ReplayMiss : public Error {
public:
    explicit ReplayMiss(std::string digest) : Error("replay miss for digest " + digest), digest_(std::move(digest)) {}
    const std::string& digest() const { return digest_; }

private:
    std::string digest_;
};

class TransportError : public Error {
public:
    TransportError(int status, int attempts, const std::string& detail)
        : Error("transport error (status " + std::to_string(status) + ", " + std::to_string(attempts) +
                " attempts): " + detail),
          status_(status),
          attempts_(attempts) {}
    int status() const { return status_; }
    int attempts() const { return attempts_; }

private:
    int status_;
    int attempts_;
};

class QuotaExceeded : public Error {
public:
    QuotaExceeded() : Error("rate limiter refused the request") {}
};

class MissingSlot : public Error {
public:
    explicit MissingSlot(std::string name) : Error("missing prompt slot: " + name), name_(std::move(name)) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

// retrieval

class NotFound : public Error {
public:
    explicit NotFound(const std::string& entity) : Error("no page or similar titles for '" + entity + "'") {}
};

// pipeline

class ParseFailure : public Error {
public:
    using Error::Error;
};

class NoContext : public Error {
public:
    NoContext() : Error("no knowledge source produced a document") {}
};

/// Wraps a failure with the id of the question it came from.
class QuestionError : public Error {
public:
    QuestionError(std::string question_id, const std::string& what)
        : Error("[" + question_id + "] " + what), question_id_(std::move(question_id)) {}
    const std::string& question_id() const { return question_id_; }

private:
    std::string question_id_;
};

// eval-harness

class DuplicatePrediction : public Error {
public:
    explicit DuplicatePrediction(const std::string& id) : Error("duplicate prediction for id " + id) {}
};

}  // namespace qaap
