#include "blockmask/msp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "blockmask/error.hpp"
#include "blockmask/rng.hpp"

namespace blockmask {

std::uint64_t ceil_count(double x) {
  if (!(x >= 0.0) || !std::isfinite(x) || x > 1.8e19) throw InvalidArgument("count out of range");
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, nearest)) return static_cast<std::uint64_t>(nearest);
  return static_cast<std::uint64_t>(std::ceil(x));
}

std::uint64_t resolve_iterations(const MspConfig& cfg) {
  if (!(cfg.mask_probability > 0.0 && cfg.mask_probability < 1.0))
    throw InvalidArgument("mask probability must lie strictly between 0 and 1");
  if (cfg.iterations.has_value() == cfg.expected_masks.has_value())
    throw InvalidArgument("set exactly one of iterations or expected masks");
  std::uint64_t n = 0;
  if (cfg.iterations) {
    n = *cfg.iterations;
  } else {
    if (!(*cfg.expected_masks > 0.0)) throw InvalidArgument("expected masks must be positive");
    n = ceil_count(*cfg.expected_masks / cfg.mask_probability);
  }
  if (n < 1) throw InvalidArgument("iteration count must be at least 1");
  if (n > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("iteration count too large");
  return n;
}

std::vector<bool> mask_pattern(std::uint64_t seed, std::uint64_t iteration, std::size_t block_count,
                               double mask_probability) {
  CounterRng rng(seed, RngDomain::kMaskPattern, static_cast<std::uint32_t>(iteration),
                 static_cast<std::uint32_t>(iteration >> 32));
  std::vector<bool> row(block_count);
  for (std::size_t j = 0; j < block_count; ++j) row[j] = rng.next_double() < mask_probability;
  return row;
}

PerturbationRecord run_msp(const Document& doc, ClassifierBackend& backend, const MspConfig& cfg) {
  validate(doc);
  if (doc.tokens.empty()) throw InvalidArgument("document '" + doc.id + "' has no tokens");
  if (backend.labels().empty()) throw InvalidArgument("backend has no labels");
  if (cfg.batch_size == 0) throw InvalidArgument("batch size must be at least 1");
  const std::uint64_t n_iter = resolve_iterations(cfg);
  const auto blocks = segment(doc, {cfg.block_size});
  const std::size_t n_labels = backend.labels().size();

  PerturbationRecord rec;
  rec.document_id = doc.id;
  rec.labels = backend.labels();
  rec.token_count = doc.tokens.size();
  rec.block_size = cfg.block_size;
  rec.mask_probability = cfg.mask_probability;
  rec.seed = cfg.seed;
  rec.deltas = Matrix(n_iter, n_labels);
  rec.masks = BitMatrix(n_iter, blocks.size());
  for (std::uint64_t n = 0; n < n_iter; ++n) {
    const auto row = mask_pattern(cfg.seed, n, blocks.size(), cfg.mask_probability);
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      if (row[j]) rec.masks.set(n, j);
    }
  }

  SerializedDispatch dispatch(backend);
  try {
    const std::vector<TokenSequence> single{doc.tokens};
    const Matrix base = dispatch.predict(single);
    rec.baseline.assign(base.row(0).begin(), base.row(0).end());
  } catch (const Error& e) {
    throw PartialResultsError(e.kind(), "document '" + doc.id + "': baseline evaluation failed: " + e.what(), 0);
  }

  const std::string& mask = backend.mask_token();
  const std::size_t n_batches = (n_iter + cfg.batch_size - 1) / cfg.batch_size;
  std::atomic<std::size_t> next_batch{0};
  std::atomic<std::size_t> completed{0};
  std::atomic<bool> abort{false};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    std::vector<TokenSequence> batch;
    for (;;) {
      if (abort.load()) return;
      const std::size_t b = next_batch.fetch_add(1);
      if (b >= n_batches) return;
      const std::size_t begin = b * cfg.batch_size;
      const std::size_t end = std::min<std::size_t>(n_iter, begin + cfg.batch_size);
      batch.assign(end - begin, doc.tokens);
      for (std::size_t n = begin; n < end; ++n) {
        auto& seq = batch[n - begin];
        for (const auto& block : blocks) {
          if (!rec.masks.test(n, block.index)) continue;
          std::fill_n(seq.begin() + static_cast<std::ptrdiff_t>(block.start), block.length, mask);
        }
      }
      try {
        const Matrix probs = dispatch.predict(batch);
        for (std::size_t n = begin; n < end; ++n) {
          for (std::size_t l = 0; l < n_labels; ++l) rec.deltas(n, l) = rec.baseline[l] - probs(n - begin, l);
        }
        completed.fetch_add(end - begin);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(cfg.max_in_flight, 1, n_batches);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  if (first_error) {
    ErrorKind kind = ErrorKind::kBackend;
    std::string what = "unknown failure";
    try {
      std::rethrow_exception(first_error);
    } catch (const Error& e) {
      kind = e.kind();
      what = e.what();
    } catch (const std::exception& e) {
      what = e.what();
    }
    throw PartialResultsError(kind,
                              "document '" + doc.id + "': masked evaluation failed after " +
                                  std::to_string(completed.load()) + " of " + std::to_string(n_iter) +
                                  " iterations: " + what,
                              completed.load());
  }
  return rec;
}

std::vector<BlockScore> block_importance(const PerturbationRecord& rec) {
  const std::size_t n_blocks = rec.block_count();
  const std::size_t n_labels = rec.label_count();
  std::vector<double> masked_sum(n_labels * n_blocks, 0.0);
  std::vector<double> unmasked_sum(n_labels * n_blocks, 0.0);
  std::vector<std::size_t> masked_count(n_blocks, 0);
  for (std::size_t n = 0; n < rec.iterations(); ++n) {
    const auto deltas = rec.deltas.row(n);
    for (std::size_t j = 0; j < n_blocks; ++j) {
      const bool masked = rec.masks.test(n, j);
      if (masked) ++masked_count[j];
      auto& sums = masked ? masked_sum : unmasked_sum;
      for (std::size_t l = 0; l < n_labels; ++l) sums[l * n_blocks + j] += deltas[l];
    }
  }

  std::vector<BlockScore> out;
  out.reserve(n_labels * n_blocks);
  for (std::size_t l = 0; l < n_labels; ++l) {
    for (std::size_t j = 0; j < n_blocks; ++j) {
      BlockScore s;
      s.label = l;
      s.block = j;
      s.masked_count = masked_count[j];
      s.unmasked_count = rec.iterations() - masked_count[j];
      if (s.masked_count > 0) {
        s.masked_mean = masked_sum[l * n_blocks + j] / static_cast<double>(s.masked_count);
        if (s.unmasked_count > 0)
          s.score = *s.masked_mean - unmasked_sum[l * n_blocks + j] / static_cast<double>(s.unmasked_count);
      }
      out.push_back(s);
    }
  }
  return out;
}

std::vector<PairScore> pair_importance(const PerturbationRecord& rec, double min_comask) {
  const double expected = static_cast<double>(rec.iterations()) * rec.mask_probability * rec.mask_probability;
  if (expected + 1e-9 < min_comask)
    throw InvalidArgument("pairs mode needs N*P^2 >= " + std::to_string(min_comask) + " (got " +
                          std::to_string(expected) + ")");

  const std::size_t n_blocks = rec.block_count();
  const std::size_t n_labels = rec.label_count();
  const std::size_t n_pairs = n_blocks < 2 ? 0 : n_blocks * (n_blocks - 1) / 2;
  // Offset of pair (i, j), i < j, in row-major upper-triangle order.
  auto pair_index = [n_blocks](std::size_t i, std::size_t j) {
    return i * (2 * n_blocks - i - 1) / 2 + (j - i - 1);
  };

  std::vector<double> total(n_labels, 0.0);
  std::vector<double> masked_sum(n_labels * n_blocks, 0.0);
  std::vector<std::size_t> masked_count(n_blocks, 0);
  std::vector<double> both_sum(n_labels * n_pairs, 0.0);
  std::vector<std::size_t> both_count(n_pairs, 0);
  std::vector<std::size_t> masked_blocks;
  for (std::size_t n = 0; n < rec.iterations(); ++n) {
    const auto deltas = rec.deltas.row(n);
    masked_blocks.clear();
    for (std::size_t j = 0; j < n_blocks; ++j) {
      if (rec.masks.test(n, j)) masked_blocks.push_back(j);
    }
    for (std::size_t l = 0; l < n_labels; ++l) total[l] += deltas[l];
    for (const auto j : masked_blocks) {
      ++masked_count[j];
      for (std::size_t l = 0; l < n_labels; ++l) masked_sum[l * n_blocks + j] += deltas[l];
    }
    for (std::size_t a = 0; a < masked_blocks.size(); ++a) {
      for (std::size_t b = a + 1; b < masked_blocks.size(); ++b) {
        const std::size_t p = pair_index(masked_blocks[a], masked_blocks[b]);
        ++both_count[p];
        for (std::size_t l = 0; l < n_labels; ++l) both_sum[l * n_pairs + p] += deltas[l];
      }
    }
  }

  const auto singles = block_importance(rec);
  std::vector<PairScore> out;
  out.reserve(n_labels * n_pairs);
  for (std::size_t l = 0; l < n_labels; ++l) {
    for (std::size_t i = 0; i < n_blocks; ++i) {
      for (std::size_t j = i + 1; j < n_blocks; ++j) {
        const std::size_t p = pair_index(i, j);
        PairScore s;
        s.label = l;
        s.first = i;
        s.second = j;
        s.distance = (j - i) * rec.block_size;
        s.comask_count = both_count[p];
        s.neither_count = rec.iterations() - masked_count[i] - masked_count[j] + both_count[p];
        if (s.comask_count > 0 && s.neither_count > 0) {
          const double both = both_sum[l * n_pairs + p];
          const double neither = total[l] - masked_sum[l * n_blocks + i] - masked_sum[l * n_blocks + j] + both;
          s.score = both / static_cast<double>(s.comask_count) - neither / static_cast<double>(s.neither_count);
          const auto& si = singles[l * n_blocks + i];
          const auto& sj = singles[l * n_blocks + j];
          if (si.score && sj.score) s.interaction = *s.score - (*si.score + *sj.score);
        }
        out.push_back(s);
      }
    }
  }
  return out;
}

TopK top_k(const std::vector<BlockScore>& scores, std::size_t k, std::size_t label) {
  if (k == 0) throw InvalidArgument("K must be at least 1");
  std::vector<const BlockScore*> candidates;
  for (const auto& s : scores) {
    if (s.label == label && s.score) candidates.push_back(&s);
  }
  std::sort(candidates.begin(), candidates.end(), [](const BlockScore* a, const BlockScore* b) {
    if (*a->score != *b->score) return *a->score > *b->score;
    return a->block < b->block;
  });
  TopK out;
  out.truncated = candidates.size() < k;
  for (std::size_t i = 0; i < std::min(k, candidates.size()); ++i) out.blocks.push_back(candidates[i]->block);
  return out;
}

std::vector<std::size_t> random_blocks(std::size_t block_count, std::size_t k, std::uint64_t seed) {
  if (k > block_count)
    throw InvalidArgument("cannot draw " + std::to_string(k) + " blocks from " + std::to_string(block_count));
  std::vector<std::size_t> pool(block_count);
  for (std::size_t i = 0; i < block_count; ++i) pool[i] = i;
  CounterRng rng(seed, RngDomain::kRandomBlocks, 0);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.next_below(block_count - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

nlohmann::json record_to_json(const PerturbationRecord& rec) {
  nlohmann::json masks = nlohmann::json::array();
  for (std::size_t n = 0; n < rec.iterations(); ++n) {
    std::string bits(rec.block_count(), '0');
    for (std::size_t j = 0; j < rec.block_count(); ++j) {
      if (rec.masks.test(n, j)) bits[j] = '1';
    }
    masks.push_back(std::move(bits));
  }
  nlohmann::json deltas = nlohmann::json::array();
  for (std::size_t n = 0; n < rec.iterations(); ++n) {
    const auto row = rec.deltas.row(n);
    deltas.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {
      {"document_id", rec.document_id},
      {"labels", rec.labels},
      {"token_count", rec.token_count},
      {"block_size", rec.block_size},
      {"block_count", rec.block_count()},
      {"mask_probability", rec.mask_probability},
      {"seed", rec.seed},
      {"iterations", rec.iterations()},
      {"baseline", rec.baseline},
      {"deltas", std::move(deltas)},
      {"masks", std::move(masks)},
  };
}

PerturbationRecord record_from_json(const nlohmann::json& j) {
  try {
    PerturbationRecord rec;
    rec.document_id = j.at("document_id").get<std::string>();
    rec.labels = j.at("labels").get<std::vector<std::string>>();
    rec.token_count = j.at("token_count").get<std::size_t>();
    rec.block_size = j.at("block_size").get<std::size_t>();
    rec.mask_probability = j.at("mask_probability").get<double>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.baseline = j.at("baseline").get<std::vector<double>>();
    const auto n_iter = j.at("iterations").get<std::size_t>();
    const auto n_blocks = j.at("block_count").get<std::size_t>();
    const auto& deltas = j.at("deltas");
    const auto& masks = j.at("masks");
    if (rec.baseline.size() != rec.labels.size()) throw InputError("baseline length differs from label count");
    if (deltas.size() != n_iter || masks.size() != n_iter) throw InputError("row count differs from iterations");
    if (rec.block_size == 0 || n_blocks != (rec.token_count + rec.block_size - 1) / rec.block_size)
      throw InputError("block count inconsistent with token count and block size");
    rec.deltas = Matrix(n_iter, rec.labels.size());
    rec.masks = BitMatrix(n_iter, n_blocks);
    for (std::size_t n = 0; n < n_iter; ++n) {
      const auto row = deltas[n].get<std::vector<double>>();
      if (row.size() != rec.labels.size()) throw InputError("delta row " + std::to_string(n) + " has wrong length");
      std::copy(row.begin(), row.end(), rec.deltas.row(n).begin());
      const auto bits = masks[n].get<std::string>();
      if (bits.size() != n_blocks) throw InputError("mask row " + std::to_string(n) + " has wrong length");
      for (std::size_t b = 0; b < n_blocks; ++b) {
        if (bits[b] != '0' && bits[b] != '1') throw InputError("mask rows must contain only 0 and 1");
        if (bits[b] == '1') rec.masks.set(n, b);
      }
    }
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed perturbation record: ") + e.what());
  }
}

}  // namespace blockmask
