#include "textclf/textprep.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "textclf/errors.hpp"

// Tweet cleaning, tokenization, vocabulary, fixed-length encoding, and
// [CLS]/[SEP] framing. Character ranges are documented in docs/formats.md.

namespace textclf {

const char* language_name(Language l) {
  switch (l) {
    case Language::arabic: return "arabic";
    case Language::english: return "english";
    case Language::danish: return "danish";
    case Language::greek: return "greek";
    case Language::turkish: return "turkish";
  }
  return "?";
}

Language language_from_name(const std::string& s) {
  if (s == "arabic") return Language::arabic;
  if (s == "english") return Language::english;
  if (s == "danish") return Language::danish;
  if (s == "greek") return Language::greek;
  if (s == "turkish") return Language::turkish;
  throw ConfigError("unknown language '" + s + "'");
}

CleanConfig CleanConfig::for_language(Language l) {
  CleanConfig c;
  c.language = l;
  c.strip_digits = l == Language::arabic;
  c.strip_foreign = l == Language::arabic;
  return c;
}

void CleanConfig::validate() const {
  if ((strip_digits || strip_foreign) && language != Language::arabic)
    throw ConfigError("digit and Latin-script removal are Arabic-only rules");
}

// ---------------------------------------------------------------------------
// UTF-8. Decoding is permissive: malformed bytes are dropped rather than
// surfaced, since cleaning must not fail on raw tweet data.
// ---------------------------------------------------------------------------

std::vector<std::uint32_t> utf8_decode(const std::string& s) {
  std::vector<std::uint32_t> cps;
  cps.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char b = static_cast<unsigned char>(s[i]);
    std::uint32_t cp = 0;
    std::size_t extra = 0;
    if (b < 0x80) {
      cp = b;
    } else if ((b & 0xE0) == 0xC0) {
      cp = b & 0x1F;
      extra = 1;
    } else if ((b & 0xF0) == 0xE0) {
      cp = b & 0x0F;
      extra = 2;
    } else if ((b & 0xF8) == 0xF0) {
      cp = b & 0x07;
      extra = 3;
    } else {
      ++i;  // stray continuation or invalid lead byte
      continue;
    }
    if (extra > 0 && i + extra >= s.size()) {  // truncated trailing sequence
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k <= extra; ++k) {
      unsigned char c = static_cast<unsigned char>(s[i + k]);
      if ((c & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (c & 0x3F);
    }
    if (!ok) {
      ++i;
      continue;
    }
    cps.push_back(cp);
    i += extra + 1;
  }
  return cps;
}

std::string utf8_encode(const std::vector<std::uint32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (std::uint32_t cp : cps) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Character classes.
// ---------------------------------------------------------------------------

namespace {

bool is_space_cp(std::uint32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f' ||
         cp == 0x00A0;
}

bool in(std::uint32_t cp, std::uint32_t lo, std::uint32_t hi) { return cp >= lo && cp <= hi; }

bool is_emoji_cp(std::uint32_t cp) {
  return in(cp, 0x1F300, 0x1F5FF) ||  // symbols & pictographs
         in(cp, 0x1F600, 0x1F64F) ||  // emoticons
         in(cp, 0x1F680, 0x1F6FF) ||  // transport & map
         in(cp, 0x1F900, 0x1F9FF) ||  // supplemental symbols & pictographs
         in(cp, 0x1F1E6, 0x1F1FF) ||  // regional indicators (flags)
         in(cp, 0xFE00, 0xFE0F) ||    // variation selectors riding on emoji
         cp == 0x200D;                // zero-width joiner inside emoji sequences
}

// The apostrophe (U+0027) and right single quote (U+2019) survive so English
// contractions stay intact.
bool is_punct_cp(std::uint32_t cp) {
  if (cp == 0x0027 || cp == 0x2019) return false;
  return in(cp, 0x0021, 0x002F) || in(cp, 0x003A, 0x0040) || in(cp, 0x005B, 0x0060) ||
         in(cp, 0x007B, 0x007E) ||  // ASCII punctuation blocks
         in(cp, 0x00A1, 0x00BF) || cp == 0x00D7 || cp == 0x00F7 ||  // Latin-1 punctuation
         in(cp, 0x2000, 0x206F) ||  // general punctuation (2019 excluded above)
         in(cp, 0x20A0, 0x20CF) ||  // currency symbols
         in(cp, 0x2190, 0x2BFF) ||  // arrows through misc symbols and dingbats
         in(cp, 0x3000, 0x303F) ||  // CJK punctuation
         cp == 0x060C || cp == 0x061B || cp == 0x061F || in(cp, 0x066A, 0x066D) ||
         cp == 0x06D4 ||            // Arabic punctuation
         in(cp, 0xFE50, 0xFE6F) ||  // small form variants
         in(cp, 0xFF01, 0xFF0F) || in(cp, 0xFF1A, 0xFF20) || in(cp, 0xFF3B, 0xFF40) ||
         in(cp, 0xFF5B, 0xFF65);    // fullwidth forms
}

bool is_digit_cp(std::uint32_t cp) {
  return in(cp, '0', '9') || in(cp, 0x0660, 0x0669) || in(cp, 0x06F0, 0x06F9);
}

bool is_latin_letter_cp(std::uint32_t cp) { return in(cp, 'A', 'Z') || in(cp, 'a', 'z'); }

// Alef variants fold to bare alef, teh marbuta to heh, alef maksura to yeh.
std::uint32_t arabic_fold(std::uint32_t cp) {
  if (cp == 0x0622 || cp == 0x0623 || cp == 0x0625 || cp == 0x0671) return 0x0627;
  if (cp == 0x0629) return 0x0647;
  if (cp == 0x0649) return 0x064A;
  return cp;
}

bool starts_with(const std::string& s, const char* prefix) {
  return s.rfind(prefix, 0) == 0;
}

bool is_url_token(const std::string& tok) {
  return starts_with(tok, "http://") || starts_with(tok, "https://") || starts_with(tok, "www.");
}

}  // namespace

std::string clean_text(const std::string& text, const CleanConfig& cfg) {
  cfg.validate();

  // Token-level removals first: URLs and @-mentions go as whole tokens.
  std::string kept;
  {
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
      if (cfg.strip_urls && is_url_token(tok)) continue;
      if (cfg.strip_mentions && !tok.empty() && tok[0] == '@') continue;
      if (!kept.empty()) kept.push_back(' ');
      kept += tok;
    }
  }

  // Character filtering and normalization.
  std::vector<std::uint32_t> cps = utf8_decode(kept);
  std::vector<std::uint32_t> filtered;
  filtered.reserve(cps.size());
  for (std::uint32_t cp : cps) {
    if (cfg.strip_emoji && is_emoji_cp(cp)) continue;
    if (cfg.strip_punctuation && is_punct_cp(cp)) continue;
    if (cfg.strip_digits && is_digit_cp(cp)) continue;
    if (cfg.strip_foreign && is_latin_letter_cp(cp)) continue;
    if (cfg.language == Language::arabic) cp = arabic_fold(cp);
    filtered.push_back(cp);
  }

  // Elongation: runs of >= 3 identical codepoints collapse to one.
  if (cfg.collapse_elongation) {
    std::vector<std::uint32_t> collapsed;
    collapsed.reserve(filtered.size());
    std::size_t i = 0;
    while (i < filtered.size()) {
      std::size_t j = i;
      while (j < filtered.size() && filtered[j] == filtered[i]) ++j;
      std::size_t run = j - i;
      if (run >= 3)
        collapsed.push_back(filtered[i]);
      else
        for (std::size_t k = 0; k < run; ++k) collapsed.push_back(filtered[i]);
      i = j;
    }
    filtered.swap(collapsed);
  }

  // Whitespace collapse and trim.
  std::vector<std::uint32_t> out;
  out.reserve(filtered.size());
  bool pending_space = false;
  for (std::uint32_t cp : filtered) {
    if (is_space_cp(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(cp);
  }
  return utf8_encode(out);
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> toks;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) toks.push_back(std::move(tok));
  return toks;
}

// ---------------------------------------------------------------------------

Vocab Vocab::build(const std::vector<std::string>& texts, std::size_t max_size) {
  std::map<std::string, std::size_t> freq;
  for (const std::string& t : texts)
    for (const std::string& tok : tokenize(t)) ++freq[tok];

  std::vector<std::pair<std::string, std::size_t>> ordered(freq.begin(), freq.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab v;
  v.words = {"<pad>", "<oov>"};
  for (const auto& [word, count] : ordered) {
    (void)count;
    if (max_size != 0 && v.words.size() >= max_size) break;
    v.words.push_back(word);
  }
  for (std::size_t i = 0; i < v.words.size(); ++i) v.index[v.words[i]] = static_cast<int>(i);
  return v;
}

int Vocab::id(const std::string& w) const {
  auto it = index.find(w);
  return it == index.end() ? kOov : it->second;
}

EncodedInput encode(const std::vector<std::string>& tokens, const Vocab& vocab,
                    std::size_t max_len) {
  if (max_len == 0) throw ConfigError("encode: max_len must be positive");
  EncodedInput e;
  e.ids.assign(max_len, Vocab::kPad);
  e.mask.assign(max_len, 0);
  std::size_t n = std::min(tokens.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) {
    e.ids[i] = vocab.id(tokens[i]);
    e.mask[i] = 1;
  }
  return e;
}

FramedTokens prepare_contextual_input(const std::vector<std::string>& tokens,
                                      std::size_t max_len) {
  if (max_len < 3) throw ConfigError("prepare_contextual_input: max_len must be at least 3");
  FramedTokens f;
  f.tokens.reserve(max_len);
  f.tokens.push_back(kClsToken);
  std::size_t n = std::min(tokens.size(), max_len - 2);
  for (std::size_t i = 0; i < n; ++i) f.tokens.push_back(tokens[i]);
  f.tokens.push_back(kSepToken);
  f.mask.assign(max_len, 0);
  for (std::size_t i = 0; i < f.tokens.size(); ++i) f.mask[i] = 1;
  while (f.tokens.size() < max_len) f.tokens.push_back(kPadToken);
  return f;
}

}  // namespace textclf
