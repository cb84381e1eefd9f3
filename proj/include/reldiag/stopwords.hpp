#pragma once

#include <span>
#include <string_view>

namespace reldiag {

// Versioned English stopword list "english-318-v1", sorted ascending.
std::span<const char* const> english_stopwords();

bool is_english_stopword(std::string_view token);

}  // namespace reldiag
