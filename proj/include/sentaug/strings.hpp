#pragma once

#include <span>
#include <string>
#include <vector>

namespace sentaug {

// ASCII lowercasing; embedding tables and aspect keys are compared this way.
std::string lowercase(std::string s);

std::string join(std::span<const std::string> tokens, const std::string& sep = " ");

// Inverse of join for single-character separators; empty fields dropped.
std::vector<std::string> split_words(const std::string& s, char sep = ' ');

}  // namespace sentaug
