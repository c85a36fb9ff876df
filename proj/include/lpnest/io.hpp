#pragma once

#include <charconv>
#include <stdexcept>
#include <string>

namespace lpnest {

/// Shortest decimal string that round-trips the exact double value.
inline std::string format_double(double value) {
    char buffer[32];
    const std::to_chars_result res = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (res.ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return {buffer, res.ptr};
}

}  // namespace lpnest
