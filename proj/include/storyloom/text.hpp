#pragma once

// Small text utilities shared by the generation, filtering and evaluation
// code. Everything here is pure and locale-independent (ASCII rules).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace loom::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
bool contains_ci(std::string_view haystack, std::string_view needle);
std::size_t count_ci(std::string_view haystack, std::string_view needle);

// Replaces every occurrence of `from` with `to`.
std::string replace_all(std::string s, std::string_view from, std::string_view to);

std::vector<std::string> split_lines(std::string_view s);

// Paragraphs are separated by one or more blank lines; single newlines stay
// inside a paragraph. Returned paragraphs are trimmed and non-empty.
std::vector<std::string> split_paragraphs(std::string_view s);

// Whitespace-delimited words, verbatim.
std::vector<std::string> split_words(std::string_view s);

// Lower-cased words with leading/trailing punctuation stripped; tokens that
// are pure punctuation are dropped. Used for n-gram and similarity checks.
std::vector<std::string> normalized_words(std::string_view s);

// Sentence splitter: a sentence ends at '.', '!' or '?' (plus any trailing
// closing quotes/brackets) followed by whitespace or end of text. Terminators
// inside an open double-quoted span do not end the sentence unless the
// closing quote follows immediately. Returned sentences are trimmed.
std::vector<std::string> split_sentences(std::string_view s);

// The first `n` sentences joined by single spaces.
std::string first_sentences(std::string_view s, std::size_t n);

// Word-level Levenshtein distance.
std::size_t word_edit_distance(const std::vector<std::string>& a,
                               const std::vector<std::string>& b);

// Lower-case, collapse whitespace, drop trailing punctuation. Two strings
// that normalize equal are treated as "the same statement".
std::string normalize_statement(std::string_view s);

// Escapes "\n", "\t" and "\\" for single-line table formats, and back.
std::string escape_line(std::string_view s);
std::string unescape_line(std::string_view s);

// Stable 64-bit FNV-1a; used wherever a hash must be identical across runs
// and platforms.
std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

bool is_capitalized(std::string_view word);

// Strips a trailing "'s" (or "’s") possessive marker.
std::string strip_possessive(std::string_view word);

// Joins with a separator.
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace loom::text
