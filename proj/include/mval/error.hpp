#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mval {

// Domain error carrying a stable machine-readable token. The CLI prints the
// token alone on stderr before the human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string token, const std::string& message)
        : std::runtime_error(message), token_(std::move(token)) {}

    const std::string& token() const noexcept { return token_; }

private:
    std::string token_;
};

[[noreturn]] inline void fail(std::string token, const std::string& message) {
    throw Error(std::move(token), message);
}

}  // namespace mval
