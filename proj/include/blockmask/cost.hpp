#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace blockmask::cost {

enum class Algorithm { kMsp, kSoc };
enum class Arity { kSingle, kPair };

struct CostQuery {
  Algorithm algorithm = Algorithm::kMsp;
  Arity arity = Arity::kSingle;
  double expected_masks = 100.0;           ///< J: expected masks (MSP) or sampling rounds (SOC)
  std::optional<double> mask_probability;  ///< P, MSP only
  std::optional<std::uint64_t> length;     ///< L tokens, SOC only
};

/// Big-O model counts: MSP J/P (single) and J/P^2 (pair); SOC J*L and J*L^2.
/// Results are rounded up, snapping values within 1e-9 relative of an integer.
std::uint64_t expected_evaluations(const CostQuery& q);

/// Exact classifier calls this implementation performs for one document:
/// MSP single N+1 and MSP pair ceil(J/P^2)+1 (one shared sampling pass);
/// SOC single 2*J*ceil(L/B). SOC pairs are not implemented (empty).
std::optional<std::uint64_t> implementation_evaluations(const CostQuery& q, std::size_t block_size);

/// Runs MSP or SOC (single mode) against an instrumented constant backend on
/// a synthetic document of `length` tokens and returns the counted calls.
std::uint64_t measure_evaluations(Algorithm algorithm, std::uint64_t length, double expected_masks,
                                  double mask_probability, std::size_t block_size, std::size_t radius = 10);

struct GridRow {
  Algorithm algorithm;
  Arity arity;
  std::optional<double> mask_probability;
  std::vector<std::uint64_t> model;                       ///< one per length
  std::vector<std::optional<std::uint64_t>> implementation;
  std::vector<std::optional<std::uint64_t>> measured;     ///< filled when measuring
};

struct GridOptions {
  double expected_masks = 100.0;
  std::vector<double> mask_probabilities{0.1, 0.5};
  std::vector<std::uint64_t> lengths{1000, 10000};
  std::size_t block_size = 10;
  std::vector<Arity> arities{Arity::kPair};
  bool measure = false;  ///< run instrumented single-mode counts
};

/// Rows: SOC first, then MSP per mask probability, for each requested arity.
std::vector<GridRow> cost_grid(const GridOptions& options);

std::string to_string(Algorithm a);
std::string to_string(Arity a);

}  // namespace blockmask::cost
