#pragma once

#include <string>
#include <string_view>

namespace fabula {

/// Porter (1980) suffix-stripping stemmer. Expects a lowercase ASCII word;
/// words of length <= 2 and words with non-letters are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace fabula
