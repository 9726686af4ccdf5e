#pragma once

#include <string>
#include <utility>

#include "mval/error.hpp"

// Runs f, returns the domain-error token it throws, or "" if it completes.
template <typename F>
std::string error_token(F&& f) {
    try {
        std::forward<F>(f)();
    } catch (const mval::Error& e) {
        return e.token();
    }
    return "";
}
