#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace textclf {

enum class Language { arabic, english, danish, greek, turkish };

const char* language_name(Language l);
Language language_from_name(const std::string& s);

// Cleaning switches. Digit and Latin-script removal are an Arabic-only rule;
// validate() rejects them for other languages.
struct CleanConfig {
  Language language = Language::english;
  bool strip_urls = true;
  bool strip_mentions = true;
  bool strip_punctuation = true;
  bool collapse_elongation = true;
  bool strip_emoji = true;
  bool strip_digits = false;
  bool strip_foreign = false;  // Latin letters, Arabic corpora only

  static CleanConfig for_language(Language l);
  void validate() const;
};

// Tweet cleaning: URL and @-mention tokens dropped, emoji and punctuation
// removed (apostrophes kept), runs of >= 3 identical characters collapsed to
// one, Arabic digit/Latin removal and alef/teh-marbuta/yeh folding when
// configured, whitespace collapsed. Idempotent. The exact character ranges
// are listed in docs/formats.md.
std::string clean_text(const std::string& text, const CleanConfig& cfg);

// Whitespace tokenization of cleaned text; never returns empty tokens.
std::vector<std::string> tokenize(const std::string& text);

// id 0 is the padding token, id 1 the out-of-vocabulary token.
struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kOov = 1;

  std::vector<std::string> words;  // position == id
  std::unordered_map<std::string, int> index;

  // Vocabulary over all tokens of `texts`, ordered by (frequency desc, word
  // asc) after the two reserved entries; max_size 0 means unbounded.
  static Vocab build(const std::vector<std::string>& texts, std::size_t max_size = 0);
  int id(const std::string& w) const;
  std::size_t size() const { return words.size(); }
};

struct EncodedInput {
  std::vector<int> ids;             // fixed length
  std::vector<std::uint8_t> mask;   // 1 for real tokens, prefix-of-ones shape
};

// Tokens to ids, truncated or right-padded to max_len; unknown tokens map to
// the OOV id and still count as real (mask 1).
EncodedInput encode(const std::vector<std::string>& tokens, const Vocab& vocab,
                    std::size_t max_len);

struct FramedTokens {
  std::vector<std::string> tokens;  // [CLS] ... [SEP] [PAD]...
  std::vector<std::uint8_t> mask;   // covers [CLS] through [SEP]
};

inline constexpr const char* kClsToken = "[CLS]";
inline constexpr const char* kSepToken = "[SEP]";
inline constexpr const char* kPadToken = "[PAD]";

// Frames a token sequence for an external contextual encoder: [CLS] + tokens
// truncated to max_len-2 + [SEP], right-padded. max_len must be >= 3.
FramedTokens prepare_contextual_input(const std::vector<std::string>& tokens,
                                      std::size_t max_len = 60);

// UTF-8 helpers shared with tests.
std::vector<std::uint32_t> utf8_decode(const std::string& s);
std::string utf8_encode(const std::vector<std::uint32_t>& cps);

}  // namespace textclf
