#pragma once

#include <atomic>
#include <cstddef>
#include <cstring>
#include <type_traits>

namespace pipelat {

/// Single-threaded stand-in for std::atomic, so a register and its cursors
/// can be copied while enumerating interleavings.
template <class V>
struct PlainCell {
  V value{};

  PlainCell() = default;
  constexpr PlainCell(V v) : value(v) {}
  V load(std::memory_order = std::memory_order_seq_cst) const { return value; }
  void store(V v, std::memory_order = std::memory_order_seq_cst) { value = v; }
};

/// Simpson's four-slot register: one writer and one reader, both wait-free,
/// no locks. Every shared access is a separate step of a cursor so tests can
/// interleave the two sides at each control point. Trivially copyable items
/// are copied in two halves, which makes a torn read observable.
template <class T, template <class> class Cell = std::atomic>
class FourSlotRegister {
  static constexpr bool split_copy = std::is_trivially_copyable_v<T> && sizeof(T) > 1;

 public:
  struct WriteCursor {
    int step = 0;
    int pair = 0;
    int index = 0;
    bool done() const { return step == 6; }
  };

  struct ReadCursor {
    int step = 0;
    int pair = 0;
    int index = 0;
    bool done() const { return step == 5; }
  };

  FourSlotRegister() = default;
  explicit FourSlotRegister(const T& initial) {
    for (auto& row : data_)
      for (T& slot : row) slot = initial;
  }

  /// Advances the writer by one shared access.
  void write_step(WriteCursor& c, const T& item) {
    switch (c.step) {
      case 0: c.pair = 1 - reading_.load(); break;
      case 1: c.index = 1 - slot_[c.pair].load(); break;
      case 2: copy_half(data_[c.pair][c.index], item, 0); break;
      case 3: copy_half(data_[c.pair][c.index], item, 1); break;
      case 4: slot_[c.pair].store(c.index); break;
      case 5: latest_.store(c.pair); break;
      default: return;
    }
    ++c.step;
  }

  /// Advances the reader by one shared access; `out` is complete once the
  /// cursor is done.
  void read_step(ReadCursor& c, T& out) {
    switch (c.step) {
      case 0: c.pair = latest_.load(); break;
      case 1: reading_.store(c.pair); break;
      case 2: c.index = slot_[c.pair].load(); break;
      case 3: copy_half(out, data_[c.pair][c.index], 0); break;
      case 4: copy_half(out, data_[c.pair][c.index], 1); break;
      default: return;
    }
    ++c.step;
  }

  void write(const T& item) {
    WriteCursor c;
    while (!c.done()) write_step(c, item);
  }

  T read() {
    T out{};
    ReadCursor c;
    while (!c.done()) read_step(c, out);
    return out;
  }

 private:
  static void copy_half(T& dst, const T& src, int half) {
    if constexpr (split_copy) {
      constexpr std::size_t first = sizeof(T) / 2;
      auto* d = reinterpret_cast<unsigned char*>(&dst);
      const auto* s = reinterpret_cast<const unsigned char*>(&src);
      if (half == 0)
        std::memcpy(d, s, first);
      else
        std::memcpy(d + first, s + first, sizeof(T) - first);
    } else if (half == 0) {
      dst = src;
    }
  }

  T data_[2][2]{};
  Cell<int> slot_[2]{0, 0};
  Cell<int> latest_{0};
  Cell<int> reading_{0};
};

}  // namespace pipelat
