#pragma once

#include <string_view>

// Contents of the files under data/, compiled into the library.
namespace fabula::resources {

std::string_view emotion_lexicon() noexcept;
std::string_view closed_class_words() noexcept;

}  // namespace fabula::resources
