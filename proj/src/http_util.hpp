#pragma once

#include <string>
#include <string_view>

namespace arena::detail {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/', may be "/"
};

// Splits an http(s) URL into origin and path; throws Error{Validation}.
UrlParts split_url(std::string_view url);

std::string url_encode(std::string_view text);

}  // namespace arena::detail
