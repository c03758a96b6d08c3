#include "blockmask/core.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <unordered_set>

#include <json.hpp>

#include "blockmask/error.hpp"

namespace blockmask {

namespace {

// Length of the UTF-8 sequence starting with `lead`; 1 for invalid bytes.
std::size_t sequence_length(unsigned char lead) noexcept {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

// Byte length of the whitespace character at `pos`, or 0 if none.
std::size_t whitespace_at(std::string_view s, std::size_t pos) noexcept {
  const auto c = static_cast<unsigned char>(s[pos]);
  if (c == ' ' || (c >= 0x09 && c <= 0x0D)) return 1;
  if (c < 0xC2) return 0;
  const auto byte = [&](std::size_t k) -> unsigned char {
    return pos + k < s.size() ? static_cast<unsigned char>(s[pos + k]) : 0;
  };
  if (c == 0xC2 && (byte(1) == 0x85 || byte(1) == 0xA0)) return 2;
  if (c == 0xE1 && byte(1) == 0x9A && byte(2) == 0x80) return 3;  // U+1680
  if (c == 0xE2 && byte(1) == 0x80) {
    const unsigned char b2 = byte(2);
    // U+2000..U+200A, U+2028, U+2029, U+202F
    if ((b2 >= 0x80 && b2 <= 0x8A) || b2 == 0xA8 || b2 == 0xA9 || b2 == 0xAF) return 3;
  }
  if (c == 0xE2 && byte(1) == 0x81 && byte(2) == 0x9F) return 3;  // U+205F
  if (c == 0xE3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;  // U+3000
  return 0;
}

constexpr std::string_view kBoundaryChars = ".!\"#$&'()*+,/:;?@[\\]^_`{|}~";
constexpr std::string_view kDeletedChars = "!\"#$&'()*+,;?@[\\]^_`{|}~";
constexpr std::string_view kRightDoubleQuote = "\xE2\x80\x9D";
constexpr std::size_t kMaxWordLength = 39;

std::vector<std::string_view> code_points(std::string_view s) {
  std::vector<std::string_view> out;
  for (std::size_t i = 0; i < s.size();) {
    const std::size_t n = std::min(sequence_length(static_cast<unsigned char>(s[i])), s.size() - i);
    out.push_back(s.substr(i, n));
    i += n;
  }
  return out;
}

std::string strip_boundary(std::string_view word) {
  const auto first = word.find_first_not_of(kBoundaryChars);
  if (first == std::string_view::npos) return {};
  const auto last = word.find_last_not_of(kBoundaryChars);
  return std::string(word.substr(first, last - first + 1));
}

std::string delete_chars(std::string_view word) {
  std::string out;
  out.reserve(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (word.compare(i, kRightDoubleQuote.size(), kRightDoubleQuote) == 0) {
      i += kRightDoubleQuote.size() - 1;
      continue;
    }
    if (kDeletedChars.find(word[i]) == std::string_view::npos) out.push_back(word[i]);
  }
  return out;
}

// Deletes every run of >= 3 identical code points; repeats until no run is left
// because a deletion can join two shorter runs.
std::string delete_triple_runs(std::string word) {
  for (;;) {
    const auto cps = code_points(word);
    std::string out;
    out.reserve(word.size());
    bool changed = false;
    for (std::size_t i = 0; i < cps.size();) {
      std::size_t j = i + 1;
      while (j < cps.size() && cps[j] == cps[i]) ++j;
      if (j - i >= 3) {
        changed = true;
      } else {
        for (std::size_t k = i; k < j; ++k) out.append(cps[k]);
      }
      i = j;
    }
    if (!changed) return out;
    word = std::move(out);
  }
}

std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

const std::vector<std::regex>& removal_patterns() {
  static const std::vector<std::regex> patterns = [] {
    const auto flags = std::regex::ECMAScript | std::regex::icase | std::regex::optimize;
    return std::vector<std::regex>{
        std::regex(kUrlPattern, flags),
        std::regex(kEmailPattern, flags),
        std::regex(kDatePattern, flags),
        std::regex(kPhonePattern, flags),
    };
  }();
  return patterns;
}

}  // namespace

const char* const kUrlPattern = R"((?:https?://|ftp://|www\.)[^\s]+)";
const char* const kEmailPattern = R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})";
const char* const kDatePattern =
    R"(\b\d{1,4}[/.-]\d{1,2}[/.-]\d{1,4}\b|)"
    R"(\b(?:jan|feb|mar|apr|may|jun|jul|aug|sep|sept|oct|nov|dec)[a-z]*\.? \d{1,2}(?:st|nd|rd|th)?,? \d{4}\b)";
const char* const kPhonePattern = R"((?:\+?1[-. ]?)?(?:\(\d{3}\) ?|\b\d{3}[-.])\d{3}[-.]\d{4}\b)";

std::size_t utf8_length(std::string_view s) noexcept {
  std::size_t count = 0;
  for (std::size_t i = 0; i < s.size(); ++count)
    i += std::min(sequence_length(static_cast<unsigned char>(s[i])), s.size() - i);
  return count;
}

TokenSequence tokenize(std::string_view text) {
  TokenSequence tokens;
  std::size_t start = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (const std::size_t ws = whitespace_at(text, pos); ws > 0) {
      if (pos > start) tokens.emplace_back(text.substr(start, pos - start));
      pos += ws;
      start = pos;
    } else {
      ++pos;
    }
  }
  if (pos > start) tokens.emplace_back(text.substr(start, pos - start));
  return tokens;
}

std::string clean_text(std::string_view text, const CleaningOptions& options) {
  std::string scrubbed(text);
  for (const auto& pattern : removal_patterns()) scrubbed = std::regex_replace(scrubbed, pattern, " ");

  std::string out;
  for (const auto& raw : tokenize(scrubbed)) {
    std::string word = delete_triple_runs(delete_chars(strip_boundary(raw)));
    if (word.empty() || utf8_length(word) > kMaxWordLength) continue;
    if (!options.drop_words.empty() && options.drop_words.contains(lowercase_ascii(word))) continue;
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

std::unordered_set<std::string> load_word_list(std::istream& in) {
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& token : tokenize(line)) words.insert(lowercase_ascii(token));
  }
  return words;
}

std::vector<Block> segment(std::size_t token_count, std::size_t block_size) {
  if (block_size == 0) throw InvalidArgument("block size must be at least 1");
  std::vector<Block> blocks;
  blocks.reserve((token_count + block_size - 1) / block_size);
  for (std::size_t start = 0, index = 0; start < token_count; start += block_size, ++index)
    blocks.push_back({index, start, std::min(block_size, token_count - start)});
  return blocks;
}

std::vector<Block> segment(const Document& doc, const SegmentationConfig& cfg) {
  return segment(doc.tokens.size(), cfg.block_size);
}

std::string block_text(const Document& doc, const Block& block) {
  std::string out;
  for (std::size_t i = block.start; i < block.start + block.length; ++i) {
    if (i > block.start) out.push_back(' ');
    out += doc.tokens.at(i);
  }
  return out;
}

void validate(const Document& doc) {
  if (doc.id.empty()) throw InputError("document id must be non-empty");
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    if (doc.tokens[i].empty())
      throw InputError("document '" + doc.id + "': token " + std::to_string(i) + " is empty");
  }
}

std::vector<Document> read_corpus(std::istream& in, const CorpusOptions& options) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "corpus line " + std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string())
      throw InputError(where + ": expected an object with a string \"id\"");
    Document doc;
    doc.id = obj["id"].get<std::string>();
    const bool has_text = obj.contains("text");
    const bool has_tokens = obj.contains("tokens");
    if (has_text == has_tokens)
      throw InputError(where + " ('" + doc.id + "'): exactly one of \"text\" or \"tokens\" is required");
    if (has_text) {
      if (!obj["text"].is_string()) throw InputError(where + " ('" + doc.id + "'): \"text\" must be a string");
      const auto text = obj["text"].get<std::string>();
      doc.tokens = tokenize(options.clean ? clean_text(text, options.cleaning) : text);
    } else {
      const auto& tokens = obj["tokens"];
      if (!tokens.is_array()) throw InputError(where + " ('" + doc.id + "'): \"tokens\" must be an array");
      for (const auto& t : tokens) {
        if (!t.is_string()) throw InputError(where + " ('" + doc.id + "'): tokens must be strings");
        doc.tokens.push_back(t.get<std::string>());
      }
    }
    try {
      validate(doc);
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
    if (!seen.insert(doc.id).second) throw InputError(where + ": duplicate document id '" + doc.id + "'");
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> read_corpus_file(const std::string& path, const CorpusOptions& options) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus '" + path + "'");
  return read_corpus(in, options);
}

}  // namespace blockmask
