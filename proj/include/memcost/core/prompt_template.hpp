#pragma once

#include <map>
#include <string>
#include <string_view>

#include "memcost/core/error.hpp"

namespace memcost {

/// Replaces every "{name}" with vars[name] in one left-to-right pass;
/// substituted text is not rescanned. Braces around unknown names are kept.
inline std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace memcost
