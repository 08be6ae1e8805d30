#pragma once

#include <stdexcept>
#include <string>

namespace deeptrace {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// corpus
class MalformedRecord : public Error {
public:
    MalformedRecord(int line, const std::string& detail)
        : Error("malformed corpus record at line " + std::to_string(line) + ": " + detail),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class DuplicateId : public Error {
public:
    explicit DuplicateId(const std::string& id)
        : Error("duplicate query id: " + id), id_(id) {}
    const std::string& id() const { return id_; }

private:
    std::string id_;
};

class EmptyCorpus : public Error {
public:
    EmptyCorpus() : Error("corpus contains no queries") {}
};

// transcript
class MalformedTranscript : public Error {
public:
    explicit MalformedTranscript(const std::string& detail)
        : Error("malformed transcript: " + detail) {}
};

class NonContiguousSourceIndices : public Error {
public:
    explicit NonContiguousSourceIndices(const std::string& detail)
        : Error("listed source indices are not contiguous 1..K: " + detail) {}
};

// judge
class JudgeProtocolError : public Error {
public:
    explicit JudgeProtocolError(const std::string& detail)
        : Error("judge protocol error: " + detail) {}
};

class AlignmentError : public Error {
public:
    explicit AlignmentError(const std::string& detail)
        : Error("decomposition alignment error: " + detail) {}
};

class UnknownLabel : public Error {
public:
    explicit UnknownLabel(const std::string& label)
        : Error("unknown confidence label: \"" + label + "\""), label_(label) {}
    const std::string& label() const { return label_; }

private:
    std::string label_;
};

class PartitionViolation : public Error {
public:
    explicit PartitionViolation(const std::string& detail)
        : Error("stance sets do not partition the statements: " + detail) {}
};

// analysis
class StanceSizeMismatch : public Error {
public:
    StanceSizeMismatch(std::size_t stance_n, std::size_t relevant_n)
        : Error("stance partition covers " + std::to_string(stance_n) +
                " statements but " + std::to_string(relevant_n) + " are relevant") {}
};

// metrics
class InstanceTooLarge : public Error {
public:
    explicit InstanceTooLarge(const std::string& detail)
        : Error("necessity search exceeded its node budget: " + detail) {}
};

class UnknownMetric : public Error {
public:
    explicit UnknownMetric(const std::string& name)
        : Error("unknown metric: " + name) {}
};

// scorecard
class MixedEngines : public Error {
public:
    MixedEngines(const std::string& expected, const std::string& got)
        : Error("records mix engines: expected \"" + expected + "\", got \"" + got + "\"") {}
};

}  // namespace deeptrace
