#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

namespace hullstereo {

enum class Strategy { Dense, SparseKnn, JitWindow };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

// Closed-form peak bytes of correlation state. Feature dims are input dims
// over 4 (ceil); the dense volume spans the full feature width in disparity.
struct MemoryProfile {
    Strategy strategy = Strategy::Dense;
    int width = 0, height = 0; // full-resolution input dims
    int k = 8, r = 4, groups = 8;
    int bytes_per_value = 4;
    uint64_t peak_bytes = 0;
};

MemoryProfile model_memory(Strategy strategy, int width, int height, int k = 8, int r = 4,
                           int groups = 8, int bytes_per_value = 4);

// --- allocation accounting -------------------------------------------------
// Counts correlation-state buffers only (cost volumes, sparse candidate
// stores, JIT windows); images and feature maps are deliberately excluded.
namespace accounting {

void enable(bool on);
bool enabled();
void reset();
uint64_t current_bytes();
uint64_t peak_bytes();

// Internal hooks used by TrackedBuffer.
void add(uint64_t bytes);
void sub(uint64_t bytes);

} // namespace accounting

// Fixed-size buffer that reports its footprint to the accounting counters
// while they are enabled. Move-only.
template <typename T>
class TrackedBuffer {
  public:
    TrackedBuffer() = default;
    explicit TrackedBuffer(size_t count, T fill = T{}) : storage_(count, fill) {
        if (accounting::enabled()) {
            tracked_ = count * sizeof(T);
            accounting::add(tracked_);
        }
    }
    ~TrackedBuffer() { release(); }

    TrackedBuffer(const TrackedBuffer&) = delete;
    TrackedBuffer& operator=(const TrackedBuffer&) = delete;
    TrackedBuffer(TrackedBuffer&& o) noexcept : storage_(std::move(o.storage_)), tracked_(o.tracked_) {
        o.tracked_ = 0;
    }
    TrackedBuffer& operator=(TrackedBuffer&& o) noexcept {
        if (this != &o) {
            release();
            storage_ = std::move(o.storage_);
            tracked_ = o.tracked_;
            o.tracked_ = 0;
        }
        return *this;
    }

    T* data() { return storage_.data(); }
    const T* data() const { return storage_.data(); }
    T& operator[](size_t i) { return storage_[i]; }
    const T& operator[](size_t i) const { return storage_[i]; }
    size_t size() const { return storage_.size(); }

  private:
    void release() {
        if (tracked_) {
            accounting::sub(tracked_);
            tracked_ = 0;
        }
        storage_.clear();
    }
    std::vector<T> storage_;
    uint64_t tracked_ = 0;
};

// Runs the named strategy's correlation stage on a deterministic synthetic
// pair of the given full-resolution size and returns the observed peak bytes.
// Requires accounting::enable(true) beforehand.
uint64_t instrument_run(Strategy strategy, int width, int height, int k = 8, int r = 4,
                        int groups = 8, uint64_t seed = 7);

// Least-squares slope of log2(peak) vs log2(width) for the modeled strategy.
double modeled_loglog_slope(Strategy strategy, const std::vector<int>& widths, int height,
                            int k = 8, int r = 4, int groups = 8);

} // namespace hullstereo
