// Synthetic documents and models shared by the unit and acceptance tests.
#pragma once

#include <string>
#include <vector>

#include "blockmask/backends.hpp"
#include "blockmask/core.hpp"

namespace fixture {

// `blocks` * `block_size` filler tokens; `keywords` are written at the first
// token of the given blocks.
inline blockmask::Document keyword_doc(std::size_t blocks, std::size_t block_size,
                                       const std::vector<std::pair<std::size_t, std::string>>& keywords,
                                       std::string id = "doc") {
  blockmask::Document doc{std::move(id), {}};
  for (std::size_t i = 0; i < blocks * block_size; ++i) doc.tokens.push_back("w" + std::to_string(i));
  for (const auto& [block, word] : keywords) doc.tokens[block * block_size] = word;
  return doc;
}

// One label driven by a single keyword.
inline blockmask::KeywordLogitModel single_keyword_model(double bias = -2.0, double weight = 4.0) {
  return blockmask::KeywordLogitModel({"target", "other"}, {bias, -1.0}, {{{"kw", weight}}, {{"unrelated", 1.0}}});
}

// "and" fires only when both "alpha" and "beta" are present.
inline blockmask::KeywordLogitModel and_gate_model(double bias = -3.0, double weight = 6.0) {
  return blockmask::KeywordLogitModel({"and"}, {bias}, {{}}, {blockmask::InteractionTerm{0, {"alpha", "beta"}, weight}});
}

// Additive logit with small weights around 0, where the logistic is nearly linear.
inline blockmask::KeywordLogitModel additive_model(double w = 0.3) {
  return blockmask::KeywordLogitModel({"sum"}, {0.0}, {{{"alpha", w}, {"beta", w}}});
}

}  // namespace fixture
