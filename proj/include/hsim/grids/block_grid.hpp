#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "hsim/types.hpp"

namespace hsim {

// Sparse lattice of T stored in 8x8x8 blocks keyed by block coordinates.
// Iteration helpers visit blocks in sorted key order so that reductions and
// serialization are independent of insertion order and worker count.
template <class T>
class BlockGrid {
 public:
  static constexpr int kDim = 8;
  static constexpr int kSize = kDim * kDim * kDim;
  static constexpr int64_t kCoordBias = 1 << 20;

  struct Block {
    Vec3i base;  // voxel coordinates of the (0,0,0) corner of this block
    std::array<T, kSize> data;
  };

  explicit BlockGrid(T background = T()) : background_(background) {}

  BlockGrid(const BlockGrid& other)
      : background_(other.background_), lookup_(other.lookup_) {
    blocks_.reserve(other.blocks_.size());
    for (const auto& b : other.blocks_)
      blocks_.push_back(std::make_unique<Block>(*b));
  }
  BlockGrid& operator=(const BlockGrid& other) {
    if (this == &other) return *this;
    background_ = other.background_;
    lookup_ = other.lookup_;
    blocks_.clear();
    blocks_.reserve(other.blocks_.size());
    for (const auto& b : other.blocks_)
      blocks_.push_back(std::make_unique<Block>(*b));
    return *this;
  }
  BlockGrid(BlockGrid&&) = default;
  BlockGrid& operator=(BlockGrid&&) = default;

  T background() const { return background_; }
  void set_background(T b) { background_ = b; }

  static Vec3i block_of(const Vec3i& v) {
    return Vec3i(v.x() >> 3, v.y() >> 3, v.z() >> 3);
  }
  static int offset_of(const Vec3i& v) {
    return (v.x() & 7) + kDim * ((v.y() & 7) + kDim * (v.z() & 7));
  }
  static int64_t key_of_block(const Vec3i& b) {
    return ((b.x() + kCoordBias)) | ((b.y() + kCoordBias) << 21) |
           ((b.z() + kCoordBias) << 42);
  }
  static Vec3i block_from_key(int64_t key) {
    return Vec3i(static_cast<int>(key & 0x1fffff) - kCoordBias,
                 static_cast<int>((key >> 21) & 0x1fffff) - kCoordBias,
                 static_cast<int>((key >> 42) & 0x1fffff) - kCoordBias);
  }

  bool empty() const { return blocks_.empty(); }
  size_t block_count() const { return blocks_.size(); }

  void clear() {
    blocks_.clear();
    lookup_.clear();
  }

  const Block* find_block(const Vec3i& b) const {
    auto it = lookup_.find(key_of_block(b));
    return it == lookup_.end() ? nullptr : blocks_[it->second].get();
  }
  Block* find_block(const Vec3i& b) {
    auto it = lookup_.find(key_of_block(b));
    return it == lookup_.end() ? nullptr : blocks_[it->second].get();
  }

  Block& touch_block(const Vec3i& b) {
    int64_t key = key_of_block(b);
    auto it = lookup_.find(key);
    if (it != lookup_.end()) return *blocks_[it->second];
    auto blk = std::make_unique<Block>();
    blk->base = b * kDim;
    blk->data.fill(background_);
    lookup_.emplace(key, blocks_.size());
    blocks_.push_back(std::move(blk));
    return *blocks_.back();
  }

  bool has(const Vec3i& v) const { return find_block(block_of(v)) != nullptr; }

  T get(const Vec3i& v) const {
    const Block* b = find_block(block_of(v));
    return b ? b->data[offset_of(v)] : background_;
  }

  T& at(const Vec3i& v) { return touch_block(block_of(v)).data[offset_of(v)]; }

  void set(const Vec3i& v, T value) { at(v) = value; }

  // Blocks in deterministic (sorted key) order.
  std::vector<const Block*> sorted_blocks() const {
    std::vector<const Block*> out;
    out.reserve(blocks_.size());
    for (const auto& b : blocks_) out.push_back(b.get());
    std::sort(out.begin(), out.end(), [](const Block* a, const Block* b) {
      return key_of_block(block_of(a->base)) < key_of_block(block_of(b->base));
    });
    return out;
  }
  std::vector<Block*> sorted_blocks_mut() {
    std::vector<Block*> out;
    out.reserve(blocks_.size());
    for (auto& b : blocks_) out.push_back(b.get());
    std::sort(out.begin(), out.end(), [](const Block* a, const Block* b) {
      return key_of_block(block_of(a->base)) < key_of_block(block_of(b->base));
    });
    return out;
  }

  template <class Fn>
  void for_each_voxel(Fn&& fn) const {
    for (const Block* blk : sorted_blocks()) {
      for (int o = 0; o < kSize; ++o) {
        Vec3i v = blk->base + Vec3i(o & 7, (o >> 3) & 7, o >> 6);
        fn(v, blk->data[o]);
      }
    }
  }

  // Read accessor with a one-block cache for streaming access patterns.
  class ConstAccessor {
   public:
    explicit ConstAccessor(const BlockGrid& g) : grid_(g) {}
    T get(const Vec3i& v) const {
      Vec3i b = block_of(v);
      if (!cached_ || b != cached_base_) {
        cached_ = grid_.find_block(b);
        cached_base_ = b;
      }
      return cached_ ? cached_->data[offset_of(v)] : grid_.background_;
    }

   private:
    const BlockGrid& grid_;
    mutable const Block* cached_ = nullptr;
    mutable Vec3i cached_base_ = Vec3i(INT32_MIN, INT32_MIN, INT32_MIN);
  };

  ConstAccessor accessor() const { return ConstAccessor(*this); }

 private:
  T background_;
  std::vector<std::unique_ptr<Block>> blocks_;
  std::unordered_map<int64_t, size_t> lookup_;
};

}  // namespace hsim
