#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "hullstereo/errors.hpp"
#include "hullstereo/memstat.hpp"

using namespace hullstereo;

namespace {

// Re-enables nothing on exit: every case here owns the global switch.
struct AccountingGuard {
    explicit AccountingGuard(bool on) {
        accounting::enable(on);
        accounting::reset();
    }
    ~AccountingGuard() {
        accounting::enable(false);
        accounting::reset();
    }
};

} // namespace

TEST_CASE("the closed-form model matches hand-computed footprints") {
    // 256x320 input: feature grid 64x80.
    CHECK(model_memory(Strategy::Dense, 256, 320).peak_bytes == 64ull * 80 * 64 * 4);
    CHECK(model_memory(Strategy::SparseKnn, 256, 320).peak_bytes == 64ull * 80 * 8 * 2 * 4);
    CHECK(model_memory(Strategy::JitWindow, 256, 320).peak_bytes == 64ull * 80 * 9 * 8 * 4);

    // Odd sizes round the feature grid up.
    CHECK(model_memory(Strategy::SparseKnn, 257, 321, 3).peak_bytes == 65ull * 81 * 3 * 2 * 4);

    // Doubling the width quadruples the dense volume but only doubles the others.
    auto ratio = [](Strategy s) {
        return double(model_memory(s, 512, 320).peak_bytes) /
               double(model_memory(s, 256, 320).peak_bytes);
    };
    CHECK(ratio(Strategy::Dense) == doctest::Approx(4.0));
    CHECK(ratio(Strategy::SparseKnn) == doctest::Approx(2.0));
    CHECK(ratio(Strategy::JitWindow) == doctest::Approx(2.0));

    CHECK_THROWS_AS(model_memory(Strategy::Dense, 0, 320), ConfigError);
    CHECK_THROWS_AS(model_memory(Strategy::Dense, 256, -1), ConfigError);
    CHECK_THROWS_AS(model_memory(Strategy::SparseKnn, 256, 320, 0), ConfigError);
    CHECK_THROWS_AS(model_memory(Strategy::JitWindow, 256, 320, 8, 0), ConfigError);
    CHECK_THROWS_AS(model_memory(Strategy::JitWindow, 256, 320, 8, 4, 0), ConfigError);
    CHECK_THROWS_AS(model_memory(Strategy::Dense, 256, 320, 8, 4, 8, 0), ConfigError);
}

TEST_CASE("log-log slopes separate the quadratic strategy from the linear ones") {
    std::vector<int> widths{256, 512, 1024};
    CHECK(modeled_loglog_slope(Strategy::Dense, widths, 320) == doctest::Approx(2.0));
    CHECK(modeled_loglog_slope(Strategy::SparseKnn, widths, 320) == doctest::Approx(1.0));
    CHECK(modeled_loglog_slope(Strategy::JitWindow, widths, 320) == doctest::Approx(1.0));
    CHECK_THROWS_AS(modeled_loglog_slope(Strategy::Dense, {256}, 320), ConfigError);
}

TEST_CASE("strategy names round-trip") {
    for (Strategy s : {Strategy::Dense, Strategy::SparseKnn, Strategy::JitWindow})
        CHECK(strategy_from_name(strategy_name(s)) == s);
    CHECK(strategy_name(Strategy::SparseKnn) == "sparse_knn");
    CHECK_THROWS_AS(strategy_from_name("hologram"), ConfigError);
}

TEST_CASE("tracked buffers report to the accounting counters") {
    AccountingGuard guard(true);
    CHECK(accounting::enabled());
    CHECK(accounting::current_bytes() == 0);
    {
        TrackedBuffer<float> a(100);
        CHECK(accounting::current_bytes() == 400);
        CHECK(accounting::peak_bytes() == 400);
        {
            TrackedBuffer<int32_t> b(50);
            CHECK(accounting::current_bytes() == 600);
            CHECK(accounting::peak_bytes() == 600);
        }
        CHECK(accounting::current_bytes() == 400);
        CHECK(accounting::peak_bytes() == 600); // peak is sticky

        // Moves transfer ownership without double counting.
        TrackedBuffer<float> c(std::move(a));
        CHECK(accounting::current_bytes() == 400);
        TrackedBuffer<float> d(25);
        CHECK(accounting::current_bytes() == 500);
        d = std::move(c); // d's 100 bytes release, c's 400 transfer
        CHECK(accounting::current_bytes() == 400);
        CHECK(d.size() == 100);
    }
    CHECK(accounting::current_bytes() == 0);
    accounting::reset();
    CHECK(accounting::peak_bytes() == 0);
}

TEST_CASE("disabled accounting ignores buffer traffic") {
    AccountingGuard guard(false);
    TrackedBuffer<float> a(1000);
    CHECK(accounting::current_bytes() == 0);
    CHECK(accounting::peak_bytes() == 0);
    CHECK_THROWS_AS(instrument_run(Strategy::Dense, 64, 64), ConfigError);
}

TEST_CASE("instrumented runs land exactly on the model") {
    AccountingGuard guard(true);
    for (Strategy s : {Strategy::Dense, Strategy::SparseKnn, Strategy::JitWindow}) {
        uint64_t observed = instrument_run(s, 64, 64);
        CHECK(observed == model_memory(s, 64, 64).peak_bytes);
    }
    CHECK(instrument_run(Strategy::Dense, 64, 64) == 16384);
    CHECK(instrument_run(Strategy::SparseKnn, 64, 64) == 16384);
    CHECK(instrument_run(Strategy::JitWindow, 64, 64) == 73728);

    // A larger frame, still byte-exact.
    for (Strategy s : {Strategy::Dense, Strategy::SparseKnn, Strategy::JitWindow})
        CHECK(instrument_run(s, 256, 320) == model_memory(s, 256, 320).peak_bytes);
}
