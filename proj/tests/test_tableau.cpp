#include "rkcq/tableau.hpp"

#include <gtest/gtest.h>

using namespace rkcq;

namespace {

// 50-digit values from tests/oracles/collocation_tableaux.py
struct FrozenTableau {
    const char* name;
    std::vector<double> c;
    std::vector<double> b;
    std::vector<std::vector<double>> q;
};

const std::vector<FrozenTableau>& frozen()
{
    static const std::vector<FrozenTableau> v = {
        {"radau_iia_2", {1.0 / 3.0, 1.0}, {0.75, 0.25}, {{5.0 / 12.0, -1.0 / 12.0}, {0.75, 0.25}}},
        {"radau_iia_3",
         {1.5505102572168219018e-1, 6.4494897427831780982e-1, 1.0},
         {3.7640306270046727505e-1, 5.1248582618842161384e-1, 1.1111111111111111111e-1},
         {{1.9681547722366042587e-1, -6.5535425850198388109e-2, 2.377097434822015242e-2},
          {3.94424314739087277e-1, 2.9207341166522846302e-1, -4.1548752125997930198e-2},
          {3.7640306270046727505e-1, 5.1248582618842161384e-1, 1.1111111111111111111e-1}}},
        {"radau_iia_5",
         {5.7104196114517682193e-2, 2.7684301363812382768e-1, 5.8359043236891682006e-1, 8.6024013565621944785e-1,
          1.0},
         {1.4371356079122594132e-1, 2.8135601514946206019e-1, 3.1182652297574125408e-1, 2.231039010835707444e-1,
          4.0e-2},
         {{7.2998864317903324306e-2, -2.6735331107945571878e-2, 1.8676929763984354412e-2, -1.2879106093306439854e-2,
           5.0428392338820152067e-3},
          {1.5377523147918246867e-1, 1.4621486784749350665e-1, -3.6444568905128089527e-2, 2.1233063119304719422e-2,
           -7.9355799027287775326e-3},
          {1.4006304568480987151e-1, 2.989671294912834794e-1, 1.6758507013524896344e-1, -3.3969101686617746572e-2,
           1.0944288744192252274e-2},
          {1.4489430810953475754e-1, 2.7650006876015922756e-1, 3.2579792291042102998e-1, 1.2875675325490976116e-1,
           -1.5708917378805328388e-2},
          {1.4371356079122594132e-1, 2.8135601514946206019e-1, 3.1182652297574125408e-1, 2.231039010835707444e-1,
           4.0e-2}}},
        {"gauss_2",
         {2.1132486540518711775e-1, 7.8867513459481288225e-1},
         {0.5, 0.5},
         {{0.25, -3.8675134594812882255e-2}, {5.3867513459481288225e-1, 0.25}}},
    };
    return v;
}

} // namespace

TEST(Builtins, CoefficientsMatchHighPrecisionOracle)
{
    for (const auto& f : frozen()) {
        const ButcherTableau t = builtin_tableau(f.name);
        ASSERT_EQ(t.stages(), f.c.size()) << f.name;
        for (std::size_t i = 0; i < t.stages(); ++i) {
            EXPECT_NEAR(t.c()[i], f.c[i], 1e-15) << f.name;
            EXPECT_NEAR(t.b()[i], f.b[i], 1e-15) << f.name;
            for (std::size_t j = 0; j < t.stages(); ++j) {
                EXPECT_NEAR(t.q()(i, j), f.q[i][j], 1e-15) << f.name << " Q(" << i << "," << j << ")";
            }
        }
    }
}

TEST(Builtins, DeclaredOrders)
{
    const std::vector<std::tuple<const char*, int, int>> expect = {
        {"radau_iia_1", 1, 1}, {"radau_iia_2", 2, 3}, {"radau_iia_3", 3, 5}, {"radau_iia_5", 5, 9},
        {"gauss_1", 1, 2},     {"gauss_2", 2, 4},     {"lobatto_iiic_2", 1, 2}};
    for (const auto& [name, q, p] : expect) {
        const ButcherTableau t = builtin_tableau(name);
        EXPECT_EQ(t.stage_order(), q) << name;
        EXPECT_EQ(t.classical_order(), p) << name;
    }
}

TEST(Builtins, UnknownNameListsKnownMethods)
{
    try {
        builtin_tableau("radau_iia_4");
        FAIL() << "expected invalid_argument";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("radau_iia_5"), std::string::npos);
    }
}

TEST(OrderConditions, AllBuiltinsPass)
{
    for (auto name : builtin_tableau_names) {
        const auto rep = validate_order_conditions(builtin_tableau(name));
        EXPECT_TRUE(rep.ok()) << name;
        EXPECT_LE(rep.max_residual, 1e-12) << name;
    }
}

TEST(OrderConditions, OverclaimedOrderFails)
{
    const ButcherTableau good = builtin_tableau("radau_iia_2");
    const ButcherTableau bad("overclaimed", good.q(), good.b(), good.c(), 2, 4);
    const auto rep = validate_order_conditions(bad);
    EXPECT_FALSE(rep.ok());
    EXPECT_FALSE(rep.failures.empty());
}

TEST(StabilityFunction, KnownRationalForms)
{
    const cplx zs[] = {cplx(-1.0, 0.0), cplx(-0.3, 2.0), cplx(0.2, -0.7), cplx(-10.0, 5.0)};
    for (const cplx z : zs) {
        // backward Euler 1/(1-z); implicit midpoint (1+z/2)/(1-z/2); Radau IIA(2) (1+z/3)/(1-2z/3+z^2/6)
        EXPECT_LT(std::abs(stability_function(builtin_tableau("radau_iia_1"), z) - 1.0 / (1.0 - z)), 1e-14);
        EXPECT_LT(std::abs(stability_function(builtin_tableau("gauss_1"), z) - (1.0 + z / 2.0) / (1.0 - z / 2.0)),
                  1e-14);
        EXPECT_LT(std::abs(stability_function(builtin_tableau("radau_iia_2"), z) -
                           (1.0 + z / 3.0) / (1.0 - 2.0 * z / 3.0 + z * z / 6.0)),
                  1e-14);
    }
    EXPECT_EQ(stability_function(builtin_tableau("radau_iia_3"), 0.0), cplx(1.0));
    EXPECT_THROW(stability_function(builtin_tableau("radau_iia_1"), 1.0), StabilityPoleError);
}

TEST(StabilityFunction, LimitAtInfinity)
{
    EXPECT_NEAR(r_infinity(builtin_tableau("radau_iia_3")), 0.0, 1e-14);
    EXPECT_NEAR(r_infinity(builtin_tableau("gauss_1")), -1.0, 1e-14);
    EXPECT_NEAR(r_infinity(builtin_tableau("gauss_2")), 1.0, 1e-14);
    EXPECT_NEAR(r_infinity(builtin_tableau("lobatto_iiic_2")), 0.0, 1e-14);
    // gauss_2 is the (2,2) Pade approximant: r(z) - 1 = 12/z + O(1/z^2)
    const ButcherTableau g = builtin_tableau("gauss_2");
    for (double x : {1e5, 1e7}) {
        EXPECT_NEAR((stability_function(g, cplx(-x, 0.0)) - g.r_infinity()).real(), -12.0 / x, 1e-3 / x);
    }
}

TEST(Classification, RadauAndLobattoAreStronglyAStableGaussIsNot)
{
    for (auto name : {"radau_iia_1", "radau_iia_2", "radau_iia_3", "radau_iia_5", "lobatto_iiic_2"}) {
        const auto rep = classify_method(builtin_tableau(name));
        EXPECT_TRUE(rep.a_stable) << name;
        EXPECT_TRUE(rep.strongly_a_stable) << name;
        EXPECT_TRUE(rep.stiffly_accurate) << name;
        EXPECT_TRUE(rep.poles_in_right_half_plane) << name;
    }
    for (auto name : {"gauss_1", "gauss_2"}) {
        const auto rep = classify_method(builtin_tableau(name));
        EXPECT_TRUE(rep.a_stable) << name;
        EXPECT_FALSE(rep.strongly_a_stable) << name;
        EXPECT_FALSE(rep.stiffly_accurate) << name;
    }
}

TEST(Tableau, RejectsInconsistentShapes)
{
    EXPECT_THROW(ButcherTableau("x", zlin::RealMatrix{{1.0}}, {1.0, 0.0}, {1.0}, 1, 1), std::invalid_argument);
    EXPECT_THROW(ButcherTableau("x", zlin::RealMatrix{{1.0}}, {1.0}, {1.0}, 0, 1), std::invalid_argument);
}
