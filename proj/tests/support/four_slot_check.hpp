#pragma once

#include "pipelat/four_slot.hpp"

#include <cstdint>
#include <string>

namespace fixtures {

/// Both halves carry the write's sequence number, so a torn copy shows up
/// as a mismatch.
struct Stamp {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
};

struct InterleavingStats {
  std::uint64_t schedules = 0;
  std::uint64_t reads = 0;
  std::uint64_t torn = 0;
  std::uint64_t stale = 0;      // older than the last write finished before the read began
  std::uint64_t premature = 0;  // newer than any write started before the read ended
  std::uint64_t regressed = 0;  // older than the previous read
  bool ok() const { return torn == 0 && stale == 0 && premature == 0 && regressed == 0; }
};

/// Enumerates every interleaving of `writes` writes and `reads` reads on one
/// register at the granularity of single shared accesses.
inline InterleavingStats enumerate_interleavings(int writes, int reads) {
  using Reg = pipelat::FourSlotRegister<Stamp, pipelat::PlainCell>;
  struct State {
    Reg reg;
    Reg::WriteCursor wc;
    Reg::ReadCursor rc;
    int written = 0;  // completed writes
    int read = 0;     // completed reads
    std::uint64_t floor = 0;
    std::uint64_t last = 0;
    Stamp out;
    InterleavingStats path;  // reads checked along this schedule
  };
  InterleavingStats stats;

  auto dfs = [&](auto&& self, const State& s) -> void {
    const bool writer_left = s.written < writes;
    const bool reader_left = s.read < reads;
    if (!writer_left && !reader_left) {
      ++stats.schedules;
      stats.reads += s.path.reads;
      stats.torn += s.path.torn;
      stats.stale += s.path.stale;
      stats.premature += s.path.premature;
      stats.regressed += s.path.regressed;
      return;
    }
    if (writer_left) {
      State n = s;
      const Stamp item{static_cast<std::uint64_t>(n.written + 1), static_cast<std::uint64_t>(n.written + 1)};
      n.reg.write_step(n.wc, item);
      if (n.wc.done()) {
        ++n.written;
        n.wc = {};
      }
      self(self, n);
    }
    if (reader_left) {
      State n = s;
      if (n.rc.step == 0) n.floor = static_cast<std::uint64_t>(n.written);
      n.reg.read_step(n.rc, n.out);
      if (n.rc.done()) {
        const std::uint64_t started = static_cast<std::uint64_t>(n.written) + (n.wc.step > 0 ? 1 : 0);
        ++n.path.reads;
        if (n.out.lo != n.out.hi) ++n.path.torn;
        if (n.out.lo < n.floor) ++n.path.stale;
        if (n.out.lo > started) ++n.path.premature;
        if (n.out.lo < n.last) ++n.path.regressed;
        n.last = n.out.lo;
        ++n.read;
        n.rc = {};
      }
      self(self, n);
    }
  };
  dfs(dfs, State{});
  return stats;
}

}  // namespace fixtures
