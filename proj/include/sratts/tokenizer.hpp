#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sratts/corpus.hpp"

namespace sratts {

// Text to token ids. Phonemizers plug in behind this interface.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<TokenId> encode(std::string_view text) const = 0;
  virtual int vocab_size() const = 0;
};

// Lower-cased letters, space and ". , ?" (30 symbols); anything else is
// dropped.
class CharacterTokenizer final : public Tokenizer {
 public:
  std::vector<TokenId> encode(std::string_view text) const override;
  int vocab_size() const override;

  static const std::string& alphabet();
};

// Parses "3,1,4" or "3 1 4".
std::vector<TokenId> parse_token_list(std::string_view text);

}  // namespace sratts
