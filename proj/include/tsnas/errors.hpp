#ifndef TSNAS_ERRORS_HPP
#define TSNAS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tsnas {

// Shape disagreement between tensors or model/data widths.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated precondition on an operation's arguments.
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Illegal call sequence (e.g. double backward without reset).
struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file; carries file/row context in the message.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Genome or config field outside its allowed range.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tsnas

#endif
