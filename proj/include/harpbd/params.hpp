#pragma once

#include <map>
#include <string>

#include "harpbd/tensor.hpp"

namespace harpbd {

/// Named parameter collection. std::map keeps iteration order stable
/// (lexicographic by name), which the optimizer and serializers rely on.
using ParamMap = std::map<std::string, Tensor>;

inline bool params_bitwise_equal(const ParamMap& a, const ParamMap& b) {
    if (a.size() != b.size()) return false;
    auto ia = a.begin();
    auto ib = b.begin();
    for (; ia != a.end(); ++ia, ++ib) {
        if (ia->first != ib->first) return false;
        if (!ia->second.bitwise_equal(ib->second)) return false;
    }
    return true;
}

inline int64_t params_numel(const ParamMap& p) {
    int64_t n = 0;
    for (const auto& [name, t] : p) n += t.numel();
    return n;
}

}  // namespace harpbd
