#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace storyloom {

// NFKD, then full case fold, then drop nonspacing marks, then collapse every
// whitespace run to one ASCII space and trim. Input is UTF-8; invalid
// sequences become U+FFFD.
std::string normalize_text(std::string_view utf8);

// True when every keyphrase is a substring of `normalized_haystack`.
// Keyphrases are normalized here; the haystack must already be normalized.
bool contains_normalized(std::string_view normalized_haystack, std::string_view keyphrase);

std::string sha256_hex(std::string_view bytes);

// Short stable handle for a judge rubric: 16 hex chars of its SHA-256.
std::string rubric_digest(std::string_view rubric);

std::string trim(std::string_view s);

}  // namespace storyloom
