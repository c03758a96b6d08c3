#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace blockmask {

using TokenSequence = std::vector<std::string>;

/// A tokenized text. Tokens are non-empty; ids are unique within a corpus.
struct Document {
  std::string id;
  TokenSequence tokens;

  bool operator==(const Document&) const = default;
};

/// Contiguous token span; the unit of masking.
struct Block {
  std::size_t index = 0;
  std::size_t start = 0;
  std::size_t length = 0;

  bool operator==(const Block&) const = default;
};

struct SegmentationConfig {
  std::size_t block_size = 10;
};

/// Splits on Unicode whitespace (ASCII whitespace plus the UTF-8 encoded
/// Zs/Zl/Zp code points and U+0085), dropping empty fragments.
TokenSequence tokenize(std::string_view text);

/// Options for clean_text. `drop_words` holds gazetteer entries (names,
/// cities, states); matched case-insensitively after punctuation stripping.
struct CleaningOptions {
  std::unordered_set<std::string> drop_words;
};

/// Clinical-text cleaning. In order:
///  1. URLs, e-mail addresses, dates and phone numbers are removed with the
///     patterns in `kUrlPattern` .. `kPhonePattern`;
///  2. boundary punctuation `.!"#$&'()*+,/:;?@[\]^_`{|}~` is stripped from both
///     ends of every word;
///  3. the characters `!"#$&'()*+,;?@[\]^_`{|}~` and U+201D are deleted everywhere;
///  4. runs of three or more identical characters inside a word are deleted;
///  5. words longer than 39 characters and gazetteer words are dropped.
/// Numbers are left untouched. Output words are joined by single spaces.
std::string clean_text(std::string_view text, const CleaningOptions& options = {});

extern const char* const kUrlPattern;
extern const char* const kEmailPattern;
extern const char* const kDatePattern;
extern const char* const kPhonePattern;

/// Loads one lower-cased word per line; blank lines ignored.
std::unordered_set<std::string> load_word_list(std::istream& in);

/// Number of Unicode code points in a UTF-8 string (invalid bytes count as one each).
std::size_t utf8_length(std::string_view s) noexcept;

/// Tiles the document into ceil(S/B) blocks; the last may be partial.
std::vector<Block> segment(const Document& doc, const SegmentationConfig& cfg);
std::vector<Block> segment(std::size_t token_count, std::size_t block_size);

/// Tokens of `block` joined by single spaces.
std::string block_text(const Document& doc, const Block& block);

/// Checks Document invariants; throws InputError.
void validate(const Document& doc);

struct CorpusOptions {
  bool clean = false;
  CleaningOptions cleaning;
};

/// Parses JSON Lines: {"id", "text"} or {"id", "tokens"} per line. Blank
/// lines are skipped. Throws InputError naming the line on any violation,
/// including duplicate ids.
std::vector<Document> read_corpus(std::istream& in, const CorpusOptions& options = {});
std::vector<Document> read_corpus_file(const std::string& path, const CorpusOptions& options = {});

}  // namespace blockmask
