#include "blockmask/cost.hpp"

#include <memory>

#include "blockmask/backends.hpp"
#include "blockmask/error.hpp"
#include "blockmask/msp.hpp"
#include "blockmask/soc.hpp"

namespace blockmask::cost {

namespace {

double require_probability(const CostQuery& q) {
  if (!q.mask_probability) throw InvalidArgument("MSP cost query needs a mask probability");
  const double p = *q.mask_probability;
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("mask probability must lie strictly between 0 and 1");
  return p;
}

std::uint64_t require_length(const CostQuery& q) {
  if (!q.length) throw InvalidArgument("SOC cost query needs a document length");
  return *q.length;
}

}  // namespace

std::string to_string(Algorithm a) { return a == Algorithm::kMsp ? "msp" : "soc"; }
std::string to_string(Arity a) { return a == Arity::kSingle ? "single" : "pair"; }

std::uint64_t expected_evaluations(const CostQuery& q) {
  if (!(q.expected_masks > 0.0)) throw InvalidArgument("J must be positive");
  if (q.algorithm == Algorithm::kMsp) {
    const double p = require_probability(q);
    return ceil_count(q.arity == Arity::kSingle ? q.expected_masks / p : q.expected_masks / (p * p));
  }
  const double l = static_cast<double>(require_length(q));
  return ceil_count(q.arity == Arity::kSingle ? q.expected_masks * l : q.expected_masks * l * l);
}

std::optional<std::uint64_t> implementation_evaluations(const CostQuery& q, std::size_t block_size) {
  if (block_size == 0) throw InvalidArgument("block size must be at least 1");
  if (q.algorithm == Algorithm::kMsp) return expected_evaluations(q) + 1;
  if (q.arity == Arity::kPair) return std::nullopt;
  const std::uint64_t blocks = (require_length(q) + block_size - 1) / block_size;
  return 2 * ceil_count(q.expected_masks) * blocks;
}

std::uint64_t measure_evaluations(Algorithm algorithm, std::uint64_t length, double expected_masks,
                                  double mask_probability, std::size_t block_size, std::size_t radius) {
  Document doc;
  doc.id = "synthetic";
  doc.tokens.reserve(length);
  for (std::uint64_t i = 0; i < length; ++i) doc.tokens.push_back("w" + std::to_string(i));
  auto counter = std::make_shared<CountingBackend>(std::make_shared<ConstantBackend>(std::vector<std::string>{"y"}, 0.5));
  if (algorithm == Algorithm::kMsp) {
    MspConfig cfg;
    cfg.block_size = block_size;
    cfg.mask_probability = mask_probability;
    cfg.expected_masks = expected_masks;
    run_msp(doc, *counter, cfg);
  } else {
    SocConfig cfg;
    cfg.block_size = block_size;
    cfg.samples_per_block = ceil_count(expected_masks);
    cfg.radius = radius;
    IdentitySampler sampler;
    run_soc(doc, *counter, sampler, cfg);
  }
  return counter->count();
}

std::vector<GridRow> cost_grid(const GridOptions& options) {
  std::vector<GridRow> rows;
  for (const auto arity : options.arities) {
    auto fill = [&](Algorithm algorithm, std::optional<double> p) {
      GridRow row{algorithm, arity, p, {}, {}, {}};
      for (const auto length : options.lengths) {
        CostQuery q{algorithm, arity, options.expected_masks, p, length};
        if (algorithm == Algorithm::kMsp) q.length.reset();
        row.model.push_back(expected_evaluations(q));
        row.implementation.push_back(implementation_evaluations(q, options.block_size));
        if (options.measure && arity == Arity::kSingle) {
          row.measured.push_back(
              measure_evaluations(algorithm, length, options.expected_masks, p.value_or(0.5), options.block_size));
        } else {
          row.measured.push_back(std::nullopt);
        }
      }
      rows.push_back(std::move(row));
    };
    fill(Algorithm::kSoc, std::nullopt);
    for (const double p : options.mask_probabilities) fill(Algorithm::kMsp, p);
  }
  return rows;
}

}  // namespace blockmask::cost
