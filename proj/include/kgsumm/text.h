// Copyright 2026 The kgsumm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KGSUMM_TEXT_H_
#define KGSUMM_TEXT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kgsumm::text {

std::string Lowercase(std::string_view s);
std::string Trim(std::string_view s);
std::vector<std::string> Split(std::string_view s, char sep);
std::string Join(const std::vector<std::string>& parts, std::string_view sep);
bool IsSentencePunct(std::string_view token);

// Word tokenizer shared by the parser and the neural model: lowercases,
// splits on whitespace, emits each of . , ! ? ; : ( ) " as its own token and
// splits the clitic "n't" off its host ("wasn't" -> "was", "n't").
std::vector<std::string> Tokenize(std::string_view s);

// Inverse of Tokenize up to whitespace: punctuation and clitics re-attach to
// the preceding token.
std::string Detokenize(const std::vector<std::string>& tokens);

// 64-bit FNV-1a.
std::uint64_t Fingerprint(std::string_view s);
std::string HexFingerprint(std::string_view s);

// Maps an identifier onto a portable file stem.
std::string FileStem(std::string_view id);

std::string ReadFile(const std::filesystem::path& path);
// Writes through a sibling temporary file and renames it into place.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view data);
// Non-empty lines of a file.
std::vector<std::string> ReadLines(const std::filesystem::path& path);
// Regular files under dir with the given extension, sorted by name.
std::vector<std::filesystem::path> ListFiles(const std::filesystem::path& dir,
                                             std::string_view extension);

}  // namespace kgsumm::text

#endif  // KGSUMM_TEXT_H_
