#pragma once

#include <stdexcept>
#include <string>

namespace cpdp {

// Every failure raised by the toolkit carries a short machine-readable
// category ("io", "parse", "data", "shape", "numeric", "config", "usage")
// so the command-line front end can print `error: <category>: <detail>`.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& detail)
        : std::runtime_error(detail), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

}  // namespace cpdp
