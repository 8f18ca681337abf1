#pragma once

#include <string>
#include <string_view>

#include "qaap/error.hpp"

namespace qaap::http {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // without trailing slash; may be empty
};

inline SplitUrl split_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw ConfigError("URL lacks a scheme: " + std::string(url));
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("unsupported URL scheme: " + std::string(url));
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = std::string(url.substr(0, path_start));
    if (path_start != std::string_view::npos) out.path = std::string(url.substr(path_start));
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

}  // namespace qaap::http
