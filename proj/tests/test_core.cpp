#include <doctest.h>

#include <cmath>
#include <random>

#include "kinex/core.hpp"
#include "kinex/errors.hpp"
#include "kinex/models.hpp"
#include "oracles.hpp"

using namespace kinex;
using namespace kinex::core;

namespace {

GridHandle uniform40() { return make_grid(WealthGrid::default_uniform()); }

GridPdf raw(const GridHandle& g, double (*f)(double))
{
    std::vector<double> v(g->size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = f((*g)[k]);
    return GridPdf(g, std::move(v), 1.0);
}

double e1(double u) { return std::exp(-u); }
double e2(double u) { return 2.0 * std::exp(-2.0 * u); }

} // namespace

TEST_CASE("grids")
{
    const auto u = WealthGrid::default_uniform();
    CHECK(u.size() == 4001);
    CHECK(u.u_max() == doctest::Approx(40.0));
    CHECK(u.spacing() == Spacing::Uniform);
    CHECK_FALSE(u.has_head_cell());

    const auto l = WealthGrid::default_log_head();
    CHECK(l.spacing() == Spacing::LogHead);
    CHECK(l[0] == doctest::Approx(1e-4));
    CHECK(l.u_max() == doctest::Approx(40.0));
    CHECK(l.u_max() >= 20.0);
    for (std::size_t k = 1; k < l.size(); ++k) REQUIRE(l[k] > l[k - 1]);

    CHECK_THROWS_AS(WealthGrid::from_nodes({0.0, 1.0, 3.0}), ContractError);
    CHECK_THROWS_AS(WealthGrid::from_nodes({0.0, 2.0, 1.0}), ContractError);
    CHECK(WealthGrid::from_nodes({0.0, 0.5, 1.0}).spacing() == Spacing::Uniform);
    CHECK(WealthGrid::from_nodes({0.1, 0.2, 0.4}).spacing() == Spacing::LogHead);

    CHECK(u.cell_of(0.015) == 1);
    CHECK(u.cell_of(-1.0) == 0);
    CHECK(u.cell_of(100.0) == u.size() - 2);
}

TEST_CASE("grid pdf invariants")
{
    const auto g = make_grid(WealthGrid::uniform(1.0, 3));
    CHECK_THROWS_AS(GridPdf(g, {1.0, -0.1, 1.0}, 1.0), DomainError);
    CHECK_THROWS_AS(GridPdf(g, {1.0, 1.0}, 1.0), ContractError);
    CHECK_THROWS(GridPdf(g, {1.0, 1.0, 1.0}, 0.0));
}

TEST_CASE("quadrature")
{
    const auto g = uniform40();
    SUBCASE("normalized exponential integrates to one")
    {
        const auto f = models::exponential_on(g, 1.0);
        CHECK(std::abs(quadrature(f, f.values()) - 1.0) <= 1e-6);
    }
    SUBCASE("raw exponential node values carry the trapezoid error h^2/12")
    {
        const auto f = raw(g, e1);
        const double h = 0.01;
        CHECK(quadrature(f, f.values()) - 1.0 == doctest::Approx(h * h / 12.0).epsilon(1e-3));
    }
    SUBCASE("constant over a [0,1] grid is exact")
    {
        const auto g1 = make_grid(WealthGrid::uniform(1.0, 101));
        const std::vector<double> one(g1->size(), 1.0);
        CHECK(quadrature(*g1, one) == 1.0);
    }
    SUBCASE("u exp(-u) against a Simpson oracle")
    {
        std::vector<double> v(g->size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = (*g)[k] * std::exp(-(*g)[k]);
        const double ref = oracle::simpson([](double u) { return u * std::exp(-u); }, 0.0, 40.0, 200000);
        CHECK(ref == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(quadrature(*g, v) - ref) <= 1e-5);
    }
    SUBCASE("mismatched length")
    {
        const std::vector<double> v(10, 1.0);
        CHECK_THROWS_AS(quadrature(*g, v), ContractError);
    }
    SUBCASE("second-order convergence")
    {
        const auto coarse = raw(make_grid(WealthGrid::uniform(40.0, 2001)), e1);
        const auto fine = raw(make_grid(WealthGrid::uniform(40.0, 4001)), e1);
        const double ec = std::abs(quadrature(coarse, coarse.values()) - 1.0);
        const double ef = std::abs(quadrature(fine, fine.values()) - 1.0);
        CHECK(ec >= 3.0 * ef);
    }
    SUBCASE("head cell follows the power law")
    {
        const auto lg = make_grid(WealthGrid::default_log_head());
        const auto f = models::gamma_on(lg, models::GammaSpec::from_shape(0.5, 1.0));
        CHECK(total_mass(f) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(first_moment(f) == doctest::Approx(1.0).epsilon(1e-4));
        // Raw node values: mass close to one only if the u^-1/2 head is integrated analytically.
        std::vector<double> v(lg->size());
        const auto spec = models::GammaSpec::from_shape(0.5, 1.0);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = models::gamma_pdf((*lg)[k], spec);
        CHECK(quadrature(*lg, v) == doctest::Approx(1.0).epsilon(1e-4));
    }
    SUBCASE("nonnegative integrands give nonnegative integrals")
    {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> d(0.0, 1.0);
        for (int t = 0; t < 20; ++t) {
            std::vector<double> v(g->size());
            for (auto& x : v) x = d(rng);
            CHECK(quadrature(*g, v) >= 0.0);
        }
    }
}

TEST_CASE("interpolation")
{
    const auto g = uniform40();
    const auto f = raw(g, e1);
    CHECK(interpolate(f, 1.0) == f[100]);
    CHECK(interpolate(f, 1.005) == doctest::Approx(0.5 * (f[100] + f[101])).epsilon(1e-15));
    CHECK(interpolate(f, 41.0) == 0.0);
    CHECK_THROWS_AS(interpolate(f, -0.1), DomainError);
    const auto lg = make_grid(WealthGrid::default_log_head());
    const auto h = raw(lg, e1);
    CHECK(interpolate(h, 1e-6) == h[0]);
}

TEST_CASE("normalize")
{
    const auto g = uniform40();
    SUBCASE("scalar rescale")
    {
        std::vector<double> v(g->size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = 2.0 * std::exp(-(*g)[k]);
        const auto n = normalize(GridPdf(g, v, 1.0));
        const auto e = models::exponential_on(g, 1.0);
        double sup = 0.0;
        for (std::size_t k = 0; k < n.size(); ++k) sup = std::max(sup, std::abs(n[k] - e[k]));
        CHECK(sup <= 1e-9);
        CHECK(quadrature(n, n.values()) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("idempotent")
    {
        const auto a = normalize(raw(g, e1));
        const auto b = normalize(a);
        for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(std::abs(a[k] - b[k]) <= 1e-12);
    }
    SUBCASE("scaled Gamma(4) against direct evaluation")
    {
        const auto spec = models::GammaSpec::from_shape(4.0, 1.0);
        std::vector<double> v(g->size());
        for (std::size_t k = 0; k < v.size(); ++k) {
            const double u = (*g)[k];
            v[k] = 7.3 * (256.0 / 6.0) * u * u * u * std::exp(-4.0 * u);
        }
        const auto n = normalize(GridPdf(g, v, 1.0));
        const double mass = quadrature(*g, std::vector<double>(v.begin(), v.end())) / 7.3;
        double sup = 0.0;
        for (std::size_t k = 0; k < n.size(); ++k) {
            sup = std::max(sup, std::abs(n[k] - models::gamma_pdf((*g)[k], spec) / mass));
        }
        CHECK(sup <= 1e-9);
        CHECK(spec.a == doctest::Approx(256.0 / 6.0).epsilon(1e-12));
    }
    SUBCASE("all zero")
    {
        CHECK_THROWS_AS(normalize(GridPdf(g, std::vector<double>(g->size(), 0.0), 1.0)), DegenerateInputError);
    }
}

TEST_CASE("distance")
{
    const auto g = uniform40();
    const auto a = raw(g, e1);
    const auto b = raw(g, e2);
    CHECK(distance(a, a).l1 == 0.0);
    CHECK(distance(a, a).sup == 0.0);
    const double oracle_l1 = oracle::simpson(
        [](double u) { return std::abs(std::exp(-u) - 2.0 * std::exp(-2.0 * u)); }, 0.0, std::log(2.0), 20000) +
        oracle::simpson([](double u) { return std::abs(std::exp(-u) - 2.0 * std::exp(-2.0 * u)); }, std::log(2.0),
                        40.0, 200000);
    CHECK(oracle_l1 == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(distance(a, b).l1 == doctest::Approx(oracle_l1).epsilon(1e-4));
    CHECK(distance(a, b).sup == doctest::Approx(1.0).epsilon(1e-12));

    const auto e = models::exponential_on(g, 1.0);
    const auto zero = GridPdf(g, std::vector<double>(g->size(), 0.0), 1.0);
    CHECK(std::abs(distance(e, zero).l1 - 1.0) <= 1e-6);

    const auto other = make_grid(WealthGrid::uniform(40.0, 2001));
    CHECK_THROWS_AS(distance(a, raw(other, e1)), ContractError);
    // Equal nodes on a separate handle are the same grid.
    CHECK(distance(a, raw(make_grid(WealthGrid::default_uniform()), e1)).l1 == 0.0);

    SUBCASE("symmetry and triangle inequality")
    {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> d(0.2, 3.0);
        for (int t = 0; t < 20; ++t) {
            auto make = [&] {
                const double s = d(rng);
                return normalize(GridPdf::from_function(g, [s](double u) { return std::exp(-u / s); }, 1.0));
            };
            const auto x = make(), y = make(), z = make();
            CHECK(distance(x, y).l1 == doctest::Approx(distance(y, x).l1).epsilon(1e-15));
            CHECK(distance(x, z).l1 <= distance(x, y).l1 + distance(y, z).l1 + 1e-15);
        }
    }
}

TEST_CASE("cdf")
{
    const auto g = uniform40();
    const auto f = models::exponential_on(g, 1.0);
    const auto cum = cumulative(f.grid(), f.values());
    CHECK(cdf_at(f, cum, 0.0) == 0.0);
    CHECK(cdf_at(f, cum, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-5));
    CHECK(cdf_at(f, cum, 2.345) == doctest::Approx(1.0 - std::exp(-2.345)).epsilon(1e-5));
}
