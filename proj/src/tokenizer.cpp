#include "sratts/tokenizer.hpp"

#include <cctype>
#include <charconv>

#include "sratts/error.hpp"

namespace sratts {

const std::string& CharacterTokenizer::alphabet() {
  static const std::string kAlphabet = " abcdefghijklmnopqrstuvwxyz.,?";
  return kAlphabet;
}

int CharacterTokenizer::vocab_size() const {
  return static_cast<int>(alphabet().size());
}

std::vector<TokenId> CharacterTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (char c : text) {
    const auto pos = alphabet().find(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (pos != std::string::npos) ids.push_back(static_cast<TokenId>(pos));
  }
  return ids;
}

std::vector<TokenId> parse_token_list(std::string_view text) {
  std::vector<TokenId> ids;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == ',' || std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    TokenId v = 0;
    auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), v);
    if (ec != std::errc()) {
      throw Error(ErrorKind::kConfiguration,
                  "cannot parse token list '" + std::string(text) + "'");
    }
    ids.push_back(v);
    i = static_cast<std::size_t>(ptr - text.data());
  }
  return ids;
}

}  // namespace sratts
