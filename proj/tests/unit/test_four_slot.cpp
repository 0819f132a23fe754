#include "doctest.h"
#include "four_slot_check.hpp"

#include <array>
#include <atomic>
#include <thread>

using namespace pipelat;

namespace {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_SUITE("four_slot") {
  TEST_CASE("sequential use returns the latest write") {
    FourSlotRegister<int> reg(7);
    CHECK(reg.read() == 7);
    reg.write(1);
    reg.write(2);
    CHECK(reg.read() == 2);
    CHECK(reg.read() == 2);
    reg.write(3);
    CHECK(reg.read() == 3);
  }

  TEST_CASE("non-trivial items") {
    FourSlotRegister<std::string, PlainCell> reg(std::string("init"));
    CHECK(reg.read() == "init");
    reg.write("a much longer string than the small buffer");
    CHECK(reg.read() == "a much longer string than the small buffer");
  }

  TEST_CASE("a read overlapping a write never sees a half-written slot") {
    FourSlotRegister<fixtures::Stamp, PlainCell> reg;
    reg.write({1, 1});
    FourSlotRegister<fixtures::Stamp, PlainCell>::WriteCursor w;
    const fixtures::Stamp next{2, 2};
    reg.write_step(w, next);
    reg.write_step(w, next);
    reg.write_step(w, next);  // first half copied
    fixtures::Stamp out;
    FourSlotRegister<fixtures::Stamp, PlainCell>::ReadCursor r;
    while (!r.done()) reg.read_step(r, out);
    CHECK(out.lo == 1);
    CHECK(out.hi == 1);
    while (!w.done()) reg.write_step(w, next);
    CHECK(reg.read().lo == 2);
  }

  TEST_CASE("every interleaving of two writes and two reads is coherent and fresh") {
    fixtures::InterleavingStats s = fixtures::enumerate_interleavings(2, 2);
    CHECK(s.schedules == binomial(12 + 10, 10));
    CHECK(s.reads == 2 * s.schedules);
    CHECK(s.torn == 0);
    CHECK(s.stale == 0);
    CHECK(s.premature == 0);
    CHECK(s.regressed == 0);
  }

  TEST_CASE("every interleaving of three writes and one read") {
    fixtures::InterleavingStats s = fixtures::enumerate_interleavings(3, 1);
    CHECK(s.schedules == binomial(18 + 5, 5));
    CHECK(s.ok());
  }

  TEST_CASE("threads: one writer, one reader") {
    struct Wide {
      std::array<std::uint64_t, 16> words{};
    };
    FourSlotRegister<Wide> reg;
    constexpr std::uint64_t kWrites = 200000;
    std::atomic<bool> done{false};
    std::thread writer([&] {
      for (std::uint64_t i = 1; i <= kWrites; ++i) {
        Wide w;
        w.words.fill(i);
        reg.write(w);
      }
      done = true;
    });
    std::uint64_t last = 0, torn = 0, regressed = 0, reads = 0;
    while (!done.load() || reads < 1000) {
      Wide w = reg.read();
      ++reads;
      for (std::uint64_t v : w.words) torn += v != w.words[0];
      regressed += w.words[0] < last;
      last = w.words[0];
    }
    writer.join();
    CHECK(torn == 0);
    CHECK(regressed == 0);
    CHECK(reg.read().words[0] == kWrites);
  }
}
