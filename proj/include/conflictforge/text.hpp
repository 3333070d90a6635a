#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace conflictforge::text {

inline std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline size_t token_count(std::string_view s) { return tokens(s).size(); }

/// Canonical form used for alias and entity comparison: ASCII case-fold,
/// trim, collapse internal whitespace, strip one leading article.
inline std::string normalize(std::string_view s) {
    std::string lowered;
    lowered.reserve(s.size());
    for (unsigned char c : s) lowered.push_back(static_cast<char>(std::tolower(c)));

    auto toks = tokens(lowered);
    if (!toks.empty() && (toks[0] == "the" || toks[0] == "a" || toks[0] == "an"))
        toks.erase(toks.begin());

    std::string out;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (i) out.push_back(' ');
        out += toks[i];
    }
    return out;
}

inline bool contains_normalized(std::string_view haystack, std::string_view needle) {
    std::string h = normalize(haystack);
    std::string n = normalize(needle);
    if (n.empty()) return false;
    return h.find(n) != std::string::npos;
}

/// Case-insensitive token membership, punctuation stripped from token edges.
inline bool has_word(std::string_view s, std::string_view word) {
    for (auto& t : tokens(s)) {
        size_t b = 0, e = t.size();
        while (b < e && std::ispunct(static_cast<unsigned char>(t[b]))) ++b;
        while (e > b && std::ispunct(static_cast<unsigned char>(t[e - 1]))) --e;
        std::string core = t.substr(b, e - b);
        std::transform(core.begin(), core.end(), core.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (core == word) return true;
    }
    return false;
}

inline size_t replace_all(std::string& s, std::string_view from, std::string_view to) {
    if (from.empty()) return 0;
    size_t count = 0, pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
        ++count;
    }
    return count;
}

}  // namespace conflictforge::text
