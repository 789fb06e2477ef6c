#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace riskmech {

// Error carrying a stable machine-readable code ("incomplete-round",
// "out-of-range", ...) alongside the human-readable message. The CLI maps
// codes onto its exit taxonomy; tests match on codes.
class MechError : public std::runtime_error {
public:
    MechError(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message) {
    throw MechError(std::move(code), message);
}

}  // namespace riskmech
