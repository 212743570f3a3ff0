#include <doctest.h>

#include "easde/baselines.hpp"
#include "easde/sphere.hpp"
#include "easde/vmf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

using namespace easde;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

PointList four_axes_2d()
{
    return {UnitVector({1.0, 0.0}), UnitVector({0.0, 1.0}), UnitVector({-1.0, 0.0}),
            UnitVector({0.0, -1.0})};
}

double naive_knn_density(const PointList& data, std::size_t k, const UnitVector& x)
{
    std::vector<double> dist;
    for (const auto& p : data)
        dist.push_back(chord_dist(p, x));
    std::sort(dist.begin(), dist.end());
    double rk = dist[k - 1];
    if (rk == 0.0)
        return std::numeric_limits<double>::infinity();
    return double(k) / (double(data.size()) * cap_volume(x.dim(), rk));
}

} // namespace

TEST_CASE("make_knn accepts k up to n and rejects the rest")
{
    PointList data = sample_uniform(3, 6, 1);
    CHECK_NOTHROW(make_knn(data, 1));
    CHECK_NOTHROW(make_knn(data, 6));
    CHECK_THROWS_AS(make_knn(data, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_knn(data, 7), std::invalid_argument);
    CHECK_THROWS_AS(make_knn(PointList{}, 1), std::invalid_argument);
    PointList lone = sample_uniform(3, 1, 2);
    CHECK_NOTHROW(make_knn(lone, 1));
}

TEST_CASE("knn_density closed forms on the four-axis circle")
{
    PointList data = four_axes_2d();
    const double s = std::sqrt(0.5);
    UnitVector diag({s, s});
    // Neighbor radii from 45 degrees: two at 2 sin(22.5deg), two at
    // 2 sin(67.5deg); the cap masses are 1/4 and 3/4.
    CHECK(knn_density(make_knn(data, 1), diag)
          == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-12));
    CHECK(knn_density(make_knn(data, 2), diag)
          == doctest::Approx(1.0 / kPi).epsilon(1e-12));
    CHECK(knn_density(make_knn(data, 3), diag)
          == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-12));
}

TEST_CASE("knn_density on a single point at hemisphere distance")
{
    PointList data = {UnitVector({1.0, 0.0, 0.0})};
    KnnModel model = make_knn(data, 1);
    UnitVector q({0.0, 1.0, 0.0}); // chordal distance sqrt(2)
    CHECK(knn_density(model, q) == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-12));
}

TEST_CASE("knn_density matches an all-pairs oracle on small samples")
{
    for (std::uint64_t seed : {10, 11, 12}) {
        PointList data = sample_uniform(3, 10, seed);
        for (std::size_t k : {std::size_t(1), std::size_t(4), std::size_t(10)}) {
            KnnModel model = make_knn(data, k);
            for (const auto& q : sample_uniform(3, 8, seed + 100)) {
                CHECK(knn_density(model, q)
                      == doctest::Approx(naive_knn_density(data, k, q)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("knn_density returns the infinity sentinel on duplicated queries")
{
    UnitVector x({0.0, 0.6, 0.8});
    PointList data = {x, x, x, UnitVector({1.0, 0.0, 0.0})};
    CHECK(std::isinf(knn_density(make_knn(data, 2), x)));
    CHECK(std::isinf(knn_density(make_knn(data, 3), x)));
    CHECK(std::isfinite(knn_density(make_knn(data, 4), x)));
}

TEST_CASE("knn_density is permutation invariant in the data")
{
    PointList data = sample_uniform(4, 30, 21);
    PointList shuffled = data;
    std::reverse(shuffled.begin(), shuffled.end());
    std::rotate(shuffled.begin(), shuffled.begin() + 7, shuffled.end());
    KnnModel a = make_knn(data, 5);
    KnnModel b = make_knn(shuffled, 5);
    for (const auto& q : sample_uniform(4, 20, 22))
        CHECK(knn_density(a, q) == knn_density(b, q));
}

TEST_CASE("knn_density is close to flat on uniform data")
{
    PointList data = sample_uniform(3, 10000, 31);
    KnnModel model = make_knn(data, 100);
    const double truth = 1.0 / (4.0 * kPi);
    double acc = 0.0;
    for (const auto& q : sample_uniform(3, 100, 32))
        acc += knn_density(model, q);
    double mean = acc / 100.0;
    CHECK(mean > 0.75 * truth);
    CHECK(mean < 1.25 * truth);
}

TEST_CASE("knn_density_batch equals the scalar evaluation")
{
    PointList data = sample_uniform(3, 200, 41);
    KnnModel model = make_knn(data, 9);
    PointList qs = sample_uniform(3, 50, 42);
    std::vector<double> batch = knn_density_batch(model, qs);
    REQUIRE(batch.size() == qs.size());
    for (std::size_t i = 0; i < qs.size(); ++i)
        CHECK(batch[i] == knn_density(model, qs[i]));
}

TEST_CASE("make_kde validates the bandwidth")
{
    PointList data = sample_uniform(3, 5, 51);
    CHECK_NOTHROW(make_kde(data, 0.3, KdeKernel::vmf));
    CHECK_THROWS_AS(make_kde(data, 0.0, KdeKernel::vmf), std::invalid_argument);
    CHECK_THROWS_AS(make_kde(data, -0.5, KdeKernel::vmf), std::invalid_argument);
    CHECK_THROWS_AS(make_kde(data, std::nan(""), KdeKernel::vmf), std::invalid_argument);
    CHECK_THROWS_AS(make_kde(PointList{}, 0.3, KdeKernel::vmf), std::invalid_argument);
}

TEST_CASE("single-point vmf-kernel KDE is the kernel density itself")
{
    UnitVector x1({0.36, 0.48, 0.8});
    PointList data = {x1};
    for (double h : {0.25, 0.5, 1.0}) {
        KdeModel model = make_kde(data, h, KdeKernel::vmf);
        VmfComponent kernel{x1, 1.0 / (h * h)};
        for (const auto& q : sample_uniform(3, 40, 52))
            CHECK(kde_density(model, q) == doctest::Approx(vmf_pdf(kernel, q)).epsilon(1e-12));
    }
    // h = 1 makes the peak the unit-kappa closed form.
    KdeModel unit = make_kde(data, 1.0, KdeKernel::vmf);
    CHECK(kde_density(unit, x1)
          == doctest::Approx(std::exp(1.0) / (4.0 * kPi * std::sinh(1.0))).epsilon(1e-12));
}

TEST_CASE("single-point ambient-kernel KDE is the Gaussian bump")
{
    UnitVector x1({0.0, 0.8, -0.6});
    PointList data = {x1};
    for (double h : {0.2, 0.7}) {
        KdeModel model = make_kde(data, h, KdeKernel::ambient_gaussian);
        double scale = std::pow(2.0 * kPi * h * h, -1.5);
        CHECK(kde_density(model, x1) == doctest::Approx(scale).epsilon(1e-12));
        for (const auto& q : sample_uniform(3, 40, 53)) {
            double d2 = chord_dist(q, x1) * chord_dist(q, x1);
            double want = scale * std::exp(-d2 / (2.0 * h * h));
            CHECK(kde_density(model, q) == doctest::Approx(want).epsilon(1e-11));
        }
    }
}

TEST_CASE("KDE is the mean of its per-point kernels")
{
    UnitVector a({1.0, 0.0, 0.0}), b({0.0, 0.0, 1.0});
    for (KdeKernel kind : {KdeKernel::vmf, KdeKernel::ambient_gaussian}) {
        KdeModel pair = make_kde({a, b}, 0.4, kind);
        KdeModel only_a = make_kde({a}, 0.4, kind);
        KdeModel only_b = make_kde({b}, 0.4, kind);
        for (const auto& q : sample_uniform(3, 60, 54)) {
            double want = 0.5 * (kde_density(only_a, q) + kde_density(only_b, q));
            CHECK(kde_density(pair, q) == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("vmf-kernel KDE integrates to one")
{
    PointList data = sample_uniform(3, 5, 55);
    KdeModel model = make_kde(data, 0.5, KdeKernel::vmf);
    PointList probes = sample_uniform(3, 100000, 56);
    double sum = 0.0, sumsq = 0.0;
    for (const auto& q : probes) {
        double v = kde_density(model, q) * surface_area(3);
        sum += v;
        sumsq += v * v;
    }
    double n = double(probes.size());
    double mean = sum / n;
    double sd = std::sqrt(std::max(0.0, sumsq / n - mean * mean) / n);
    CHECK(std::abs(mean - 1.0) < 5.0 * sd + 0.002);
}

TEST_CASE("densities are nonnegative and dimension-checked")
{
    PointList data = sample_uniform(4, 50, 57);
    KnnModel knn = make_knn(data, 3);
    KdeModel vmfk = make_kde(data, 0.3, KdeKernel::vmf);
    KdeModel amb = make_kde(data, 0.3, KdeKernel::ambient_gaussian);
    for (const auto& q : sample_uniform(4, 30, 58)) {
        CHECK(knn_density(knn, q) >= 0.0);
        CHECK(kde_density(vmfk, q) >= 0.0);
        CHECK(kde_density(amb, q) >= 0.0);
    }
    UnitVector wrong({1.0, 0.0});
    CHECK_THROWS_AS(knn_density(knn, wrong), std::invalid_argument);
    CHECK_THROWS_AS(kde_density(vmfk, wrong), std::invalid_argument);
}

TEST_CASE("kde_density_batch equals the scalar evaluation")
{
    PointList data = sample_uniform(3, 150, 59);
    PointList qs = sample_uniform(3, 60, 60);
    for (KdeKernel kind : {KdeKernel::vmf, KdeKernel::ambient_gaussian}) {
        KdeModel model = make_kde(data, 0.45, kind);
        std::vector<double> batch = kde_density_batch(model, qs);
        REQUIRE(batch.size() == qs.size());
        for (std::size_t i = 0; i < qs.size(); ++i)
            CHECK(batch[i] == kde_density(model, qs[i]));
    }
}
