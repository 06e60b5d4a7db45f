#pragma once

#include <stdexcept>
#include <string>

namespace knowhalu {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Backend / transport
class TransportError : public Error {
public:
    using Error::Error;
};

class RefusalError : public Error {
public:
    using Error::Error;
};

class MissingTranscriptError : public Error {
public:
    using Error::Error;
};

class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

class NoLogprobsError : public Error {
public:
    using Error::Error;
};

class ServiceUnavailableError : public Error {
public:
    using Error::Error;
};

// Prompt library
class MissingBindingError : public Error {
public:
    using Error::Error;
};

class UnknownTemplateError : public Error {
public:
    using Error::Error;
};

// Parsing
class MalformedQueryError : public Error {
public:
    using Error::Error;
};

class TripletParseError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class NoLabelError : public Error {
public:
    using Error::Error;
};

// Retrieval
class EmptyDocumentError : public Error {
public:
    using Error::Error;
};

class EmptyIndexError : public Error {
public:
    using Error::Error;
};

// Aggregation / calibration
class EmptySamplesError : public Error {
public:
    using Error::Error;
};

class InsufficientSamplesError : public Error {
public:
    using Error::Error;
};

// Evaluation
class ParseError : public Error {
public:
    using Error::Error;
};

class NotEnoughRecordsError : public Error {
public:
    using Error::Error;
};

class DegenerateClassError : public Error {
public:
    using Error::Error;
};

// CLI / configuration
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace knowhalu
