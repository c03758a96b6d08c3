#include "blockmask/soc.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "blockmask/error.hpp"
#include "blockmask/rng.hpp"

namespace blockmask {

TokenSequence IdentitySampler::sample(std::span<const std::string> original, std::uint64_t) const {
  return TokenSequence(original.begin(), original.end());
}

VocabularySampler::VocabularySampler(std::vector<std::string> vocabulary, std::vector<double> weights,
                                     std::uint64_t seed)
    : vocabulary_(std::move(vocabulary)), seed_(seed) {
  if (vocabulary_.empty()) throw InvalidArgument("sampler vocabulary must be non-empty");
  if (weights.size() != vocabulary_.size()) throw InvalidArgument("one weight per vocabulary entry required");
  double total = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("sampler weights must be non-negative");
    total += w;
    cumulative_.push_back(total);
  }
  if (!(total > 0.0)) throw InvalidArgument("sampler weights must not all be zero");
  for (auto& c : cumulative_) c /= total;
  cumulative_.back() = 1.0;
}

TokenSequence VocabularySampler::sample(std::span<const std::string> original, std::uint64_t draw_id) const {
  CounterRng rng(seed_, RngDomain::kContextSampler, static_cast<std::uint32_t>(draw_id),
                 static_cast<std::uint32_t>(draw_id >> 32));
  TokenSequence out;
  out.reserve(original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    const double u = rng.next_double();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    out.push_back(vocabulary_[static_cast<std::size_t>(it - cumulative_.begin())]);
  }
  return out;
}

std::unique_ptr<ContextSampler> uniform_sampler(std::vector<std::string> vocabulary, std::uint64_t seed) {
  std::vector<double> weights(vocabulary.size(), 1.0);
  return std::make_unique<VocabularySampler>(std::move(vocabulary), std::move(weights), seed);
}

std::unique_ptr<ContextSampler> unigram_sampler(std::span<const Document> corpus, std::uint64_t seed) {
  std::vector<std::string> vocabulary;
  std::vector<double> counts;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& doc : corpus) {
    for (const auto& t : doc.tokens) {
      auto [it, inserted] = index.try_emplace(t, vocabulary.size());
      if (inserted) {
        vocabulary.push_back(t);
        counts.push_back(0.0);
      }
      counts[it->second] += 1.0;
    }
  }
  return std::make_unique<VocabularySampler>(std::move(vocabulary), std::move(counts), seed);
}

std::vector<BlockScore> run_soc(const Document& doc, ClassifierBackend& backend, const ContextSampler& sampler,
                                const SocConfig& cfg) {
  validate(doc);
  if (doc.tokens.empty()) throw InvalidArgument("document '" + doc.id + "' has no tokens");
  if (cfg.samples_per_block == 0) throw InvalidArgument("SOC needs at least one sampling round");
  if (backend.labels().empty()) throw InvalidArgument("backend has no labels");
  const auto blocks = segment(doc, {cfg.block_size});
  const std::size_t n_labels = backend.labels().size();
  const std::size_t rounds = cfg.samples_per_block;
  const std::string& mask = backend.mask_token();
  const std::size_t n_tokens = doc.tokens.size();

  // sums[block * L + l] accumulates p_intact - p_masked over rounds, in round order.
  std::vector<double> sums(blocks.size() * n_labels, 0.0);
  SerializedDispatch dispatch(backend);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> completed{0};
  std::atomic<bool> abort{false};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto replace = [&](TokenSequence& seq, std::size_t begin, std::size_t end, std::uint64_t draw_id) {
    if (begin >= end) return;
    const std::span<const std::string> original(doc.tokens.data() + begin, end - begin);
    auto repl = sampler.sample(original, draw_id);
    if (repl.size() != original.size()) throw InvalidArgument("context sampler returned a span of the wrong length");
    std::move(repl.begin(), repl.end(), seq.begin() + static_cast<std::ptrdiff_t>(begin));
  };

  auto process_block = [&](const Block& block) {
    const std::size_t left = block.start >= cfg.radius ? block.start - cfg.radius : 0;
    const std::size_t block_end = block.start + block.length;
    const std::size_t right = std::min(n_tokens, block_end + cfg.radius);
    std::vector<TokenSequence> batch;
    batch.reserve(2 * rounds);
    for (std::size_t r = 0; r < rounds; ++r) {
      TokenSequence intact = doc.tokens;
      const std::uint64_t draw = (static_cast<std::uint64_t>(block.index) * rounds + r) * 2;
      replace(intact, left, block.start, draw);
      replace(intact, block_end, right, draw + 1);
      TokenSequence masked = intact;
      std::fill_n(masked.begin() + static_cast<std::ptrdiff_t>(block.start), block.length, mask);
      batch.push_back(std::move(intact));
      batch.push_back(std::move(masked));
    }
    const Matrix probs = dispatch.predict(batch);
    for (std::size_t r = 0; r < rounds; ++r) {
      for (std::size_t l = 0; l < n_labels; ++l)
        sums[block.index * n_labels + l] += probs(2 * r, l) - probs(2 * r + 1, l);
    }
  };

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks.size()) return;
      try {
        process_block(blocks[b]);
        completed.fetch_add(1);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(cfg.max_in_flight, 1, blocks.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
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
                              "document '" + doc.id + "': SOC failed after " + std::to_string(completed.load()) +
                                  " of " + std::to_string(blocks.size()) + " blocks: " + what,
                              completed.load());
  }

  std::vector<BlockScore> out;
  out.reserve(n_labels * blocks.size());
  for (std::size_t l = 0; l < n_labels; ++l) {
    for (const auto& block : blocks) {
      BlockScore s;
      s.label = l;
      s.block = block.index;
      s.score = sums[block.index * n_labels + l] / static_cast<double>(rounds);
      s.masked_count = rounds;
      s.unmasked_count = 0;
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace blockmask
