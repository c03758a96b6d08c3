// Ten (document, label) lists of five ranked blocks with one reviewer's judgments.
#pragma once

#include <string>
#include <vector>

#include "blockmask/eval.hpp"

namespace fixture {

// informative[i][r]: judgment of the block at rank r+1 in list i.
inline const std::vector<std::vector<bool>>& ten_pair_judgments() {
  static const std::vector<std::vector<bool>> j{
      {1, 0, 0, 1, 0}, {0, 0, 0, 0, 0}, {0, 1, 1, 0, 0}, {0, 0, 0, 0, 1}, {1, 1, 1, 1, 1},
      {0, 0, 1, 0, 0}, {0, 1, 0, 0, 0}, {0, 0, 0, 1, 1}, {1, 0, 1, 0, 1}, {0, 0, 0, 0, 0},
  };
  return j;
}

inline std::vector<blockmask::eval::RankedList> ten_pair_lists(const std::string& algorithm = "msp") {
  std::vector<blockmask::eval::RankedList> lists;
  for (std::size_t i = 0; i < 10; ++i) {
    blockmask::eval::RankedList l{"doc" + std::to_string(i / 2), i % 2 ? "chf" : "afib", algorithm, {}};
    // distinct, deliberately unsorted block indices
    for (std::size_t r = 0; r < 5; ++r) l.blocks.push_back((7 * r + 3 * i) % 40);
    lists.push_back(std::move(l));
  }
  return lists;
}

inline std::vector<blockmask::eval::Annotation> ten_pair_annotations(const std::string& reviewer = "r1",
                                                                     const std::string& algorithm = "msp") {
  std::vector<blockmask::eval::Annotation> out;
  const auto lists = ten_pair_lists(algorithm);
  for (std::size_t i = 0; i < lists.size(); ++i)
    for (std::size_t r = 0; r < 5; ++r)
      out.push_back({lists[i].doc_id, lists[i].label, lists[i].blocks[r], algorithm, reviewer,
                     static_cast<bool>(ten_pair_judgments()[i][r])});
  return out;
}

}  // namespace fixture
