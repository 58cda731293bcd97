#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairsqp/dataset.hpp"

namespace fairsqp {

// Draws minibatches with a fixed number of rows from each sensitive group,
// so per-group statistics computed on a batch are unbiased estimates of the
// full-data ones at a pinned group ratio. Each group's index list is
// shuffled once per pass and consumed in chunks; a new pass reshuffles.
class StratifiedSampler {
 public:
  StratifiedSampler(const Dataset& data, Index n_per_group0, Index n_per_group1,
                    std::uint64_t seed)
      : n0_(n_per_group0),
        n1_(n_per_group1),
        seed_(seed),
        order0_(data.group0),
        order1_(data.group1) {
    if (n0_ < 1 || n0_ > static_cast<Index>(order0_.size()))
      throw std::invalid_argument("StratifiedSampler: group-0 batch size " + std::to_string(n0_) +
                                  " outside [1, " + std::to_string(order0_.size()) + "]");
    if (n1_ < 1 || n1_ > static_cast<Index>(order1_.size()))
      throw std::invalid_argument("StratifiedSampler: group-1 batch size " + std::to_string(n1_) +
                                  " outside [1, " + std::to_string(order1_.size()) + "]");
    reshuffle(order0_);
    reshuffle(order1_);
  }

  Index batch_size() const { return n0_ + n1_; }

  // Indices into the dataset: n0 group-0 rows followed by n1 group-1 rows.
  std::vector<Index> next_batch() {
    std::vector<Index> batch;
    batch.reserve(static_cast<size_t>(batch_size()));
    take(order0_, pos0_, n0_, batch);
    take(order1_, pos1_, n1_, batch);
    return batch;
  }

  // Batches per full pass over the smaller-coverage group.
  Index batches_per_epoch() const {
    const Index e0 = static_cast<Index>(order0_.size()) / n0_;
    const Index e1 = static_cast<Index>(order1_.size()) / n1_;
    return std::max<Index>(1, std::min(e0, e1));
  }

 private:
  void reshuffle(std::vector<Index>& order) {
    seeded_shuffle(order, seed_ + 0x9e3779b97f4a7c15ull * ++shuffles_);
  }

  void take(std::vector<Index>& order, size_t& pos, Index n, std::vector<Index>& out) {
    for (Index k = 0; k < n; ++k) {
      if (pos == order.size()) {
        reshuffle(order);
        pos = 0;
      }
      out.push_back(order[pos++]);
    }
  }

  Index n0_, n1_;
  std::uint64_t seed_;
  std::uint64_t shuffles_ = 0;
  std::vector<Index> order0_, order1_;
  size_t pos0_ = 0, pos1_ = 0;
};

}  // namespace fairsqp
