#pragma once

#include <functional>
#include <iostream>
#include <string>
#include <utility>

namespace gpefem {

/// Advisory warnings (assumption checks, step-size bounds) go through one
/// replaceable sink. The default writes to stderr.
using WarningSink = std::function<void(const std::string&)>;

inline WarningSink& warning_sink() {
    static WarningSink sink = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
    return sink;
}

inline void set_warning_sink(WarningSink sink) { warning_sink() = std::move(sink); }

inline void warn(const std::string& msg) {
    if (warning_sink()) warning_sink()(msg);
}

}  // namespace gpefem
