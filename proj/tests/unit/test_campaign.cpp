#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "relisim/campaign.hpp"
#include "relisim/error.hpp"
#include "test_support.hpp"

using namespace relisim;

namespace {

SystemTopology barrier(double level) {
    return {Topology::single, {{[](std::span<const double> x, double) { return x[0]; }, level, "level"}}};
}

CampaignSettings settings(EstimatorMode mode, std::size_t samples, std::uint64_t seed, unsigned workers = 1) {
    CampaignSettings s;
    s.integrator = {0.01, 1.0};
    s.mode = mode;
    s.samples = samples;
    s.seed = seed;
    s.workers = workers;
    return s;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// Brownian motion whose drift jumps to 1e200 once x reaches `trip`, which the integrator reports as divergence.
SystemModel tripwire(double trip) {
    auto m = test::brownian();
    m.drift = [trip](const HistoryBuffer& x, double, std::span<double> out) { out[0] = x.head()[0] >= trip ? 1e200 : 0.0; };
    return m;
}

}  // namespace

TEST_CASE("campaign results do not depend on the worker count") {
    auto model = test::brownian();
    test::constant_control(model, {2.0});
    const auto init = InitialSegment::constant({0.0});
    const auto topo = barrier(2.0);
    for (auto mode : {EstimatorMode::crude, EstimatorMode::importance}) {
        const auto one = run_campaign(model, init, topo, settings(mode, 3000, 8, 1));
        for (unsigned w : {2u, 8u}) {
            const auto many = run_campaign(model, init, topo, settings(mode, 3000, 8, w));
            CHECK(many.system == one.system);
            CHECK(same_bits(many.weights, one.weights));
            CHECK(same_bits(many.report.failure, one.report.failure));
            CHECK(same_bits(many.report.variance, one.report.variance));
        }
        const auto other_seed = run_campaign(model, init, topo, settings(mode, 3000, 9, 1));
        CHECK(other_seed.system != one.system);
    }
}

TEST_CASE("trajectory j is the same path in any campaign size") {
    const auto model = test::brownian();
    const auto init = InitialSegment::constant({0.0});
    const auto topo = barrier(1.0);
    const auto small = run_campaign(model, init, topo, settings(EstimatorMode::crude, 300, 4));
    const auto large = run_campaign(model, init, topo, settings(EstimatorMode::crude, 1000, 4, 2));
    for (std::size_t j = 0; j < 300; ++j) CHECK(small.system[j] == large.system[j]);
}

TEST_CASE("importance campaign with zero control reproduces the crude campaign bitwise") {
    auto model = test::brownian(0.3, 1.2);
    test::constant_control(model, {0.0});
    const auto init = InitialSegment::constant({0.0});
    SystemTopology topo{Topology::series,
                        {{[](std::span<const double> x, double) { return x[0]; }, 1.5, "up"},
                         {[](std::span<const double> x, double) { return -x[0]; }, 1.0, "down"}}};
    const auto crude = run_campaign(model, init, topo, settings(EstimatorMode::crude, 2000, 77));
    const auto is = run_campaign(model, init, topo, settings(EstimatorMode::importance, 2000, 77));
    CHECK(crude.system == is.system);
    for (double w : is.weights) CHECK(w == 1.0);
    CHECK(same_bits(crude.report.failure, is.report.failure));
    CHECK(same_bits(crude.report.variance, is.report.variance));
    CHECK(same_bits(crude.report.std_error, is.report.std_error));
    REQUIRE(is.martingale);
    CHECK(is.martingale->pass);
}

TEST_CASE("importance sampling on the Brownian barrier agrees with the discrete-grid oracle") {
    const double oracle = test::discrete_barrier_failure(3.0, 0.01, 100);
    auto model = test::brownian();
    test::constant_control(model, {3.0});
    const auto r = run_campaign(model, InitialSegment::constant({0.0}), barrier(3.0),
                                settings(EstimatorMode::importance, 10000, 20240607));
    CAPTURE(oracle);
    CAPTURE(r.report.failure);
    CAPTURE(r.report.std_error);
    CHECK(std::abs(r.report.failure - oracle) < 3.0 * r.report.std_error);
    // Relative error well below what 10^4 crude samples could give (about 21%).
    CHECK(r.report.std_error / r.report.failure < 0.05);
}

TEST_CASE("diverged trajectories are excluded and counted") {
    const auto init = InitialSegment::constant({0.0});
    const auto topo = barrier(10.0);
    const auto r = run_campaign(tripwire(3.0), init, topo, settings(EstimatorMode::crude, 4000, 12));
    REQUIRE(!r.excluded_indices.empty());
    CHECK(r.report.excluded == r.excluded_indices.size());
    CHECK(r.report.sample_count == 4000 - r.excluded_indices.size());
    CHECK(r.components.rows() == r.report.sample_count);

    // The excluded ones are exactly the paths that reach the tripwire before the last step,
    // identified on the plain model over the same noise prefix.
    auto prefix = settings(EstimatorMode::crude, 4000, 12);
    prefix.integrator.t_end = 0.99;
    const auto plain = run_campaign(test::brownian(), init, barrier(3.0), prefix);
    std::vector<std::size_t> crossed;
    for (std::size_t j = 0; j < 4000; ++j)
        if (plain.system[j]) crossed.push_back(j);
    CHECK(crossed == r.excluded_indices);
}

TEST_CASE("too many divergences abort the campaign") {
    const auto init = InitialSegment::constant({0.0});
    try {
        run_campaign(tripwire(1.5), init, barrier(10.0), settings(EstimatorMode::crude, 2000, 12, 2));
        FAIL("expected DivergenceAbort");
    } catch (const DivergenceAbort& e) {
        CHECK(e.total() == 2000);
        CHECK(e.excluded() > 20);
    }
}

TEST_CASE("campaign preconditions") {
    const auto init = InitialSegment::constant({0.0});
    CHECK_THROWS_AS(run_campaign(test::brownian(), init, barrier(1.0), settings(EstimatorMode::crude, 0, 1)),
                    DomainError);
    CHECK_THROWS_AS(run_campaign(test::brownian(), init, barrier(1.0), settings(EstimatorMode::importance, 10, 1)),
                    DomainError);
}

TEST_CASE("worker exceptions propagate") {
    auto model = test::brownian();
    model.drift = [](const HistoryBuffer&, double t, std::span<double> out) {
        if (t > 0.5) throw std::runtime_error("drift failed");
        out[0] = 0.0;
    };
    CHECK_THROWS_WITH(run_campaign(model, InitialSegment::constant({0.0}), barrier(1.0),
                                   settings(EstimatorMode::crude, 1000, 1, 4)),
                      "drift failed");
}
