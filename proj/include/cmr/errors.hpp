#pragma once

#include <stdexcept>
#include <string>

namespace cmr {

/// File / header / parsing failures. CLI exit code 2.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values, degenerate statistics, diverging optimization. CLI exit code 3.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A phase-extraction rule found no qualifying frame. CLI exit code 4.
class rule_error : public std::runtime_error {
public:
    rule_error(const std::string& rule, const std::string& msg)
        : std::runtime_error("rule '" + rule + "': " + msg), rule_name(rule) {}
    std::string rule_name;
};

/// Invalid configuration or arguments. CLI exit code 1.
class usage_error : public std::runtime_error {
public:
    explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cmr
