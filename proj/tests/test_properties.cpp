// Randomized property groups from the lab, over several seeds and with
// reduced sample counts.
#include <gtest/gtest.h>

#include "oubv/lab.hpp"

using namespace oubv;

namespace {

void expect_all_hold(const PropertyGroup& grp) {
    ASSERT_FALSE(grp.rows.empty());
    for (const auto& r : grp.rows) {
        EXPECT_GE(r.margin, 0.0) << grp.name << " / " << r.property << " / " << r.instance << " value=" << r.value
                                 << " tol=" << r.tolerance;
    }
}

}  // namespace

class SeededProperties : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(SeededProperties, Semigroup) { expect_all_hold(semigroup_properties(GetParam(), 8)); }

TEST_P(SeededProperties, ConditionalExpectation) { expect_all_hold(conditional_expectation_properties(GetParam(), 6)); }

TEST_P(SeededProperties, Geometry) { expect_all_hold(geometry_properties(GetParam(), 150)); }

INSTANTIATE_TEST_SUITE_P(Seeds, SeededProperties, ::testing::Values(1u, 7u, 42u, 2024u));

TEST(PropertyGroups, SeedChangesSamplesButNotVerdicts) {
    const auto a = semigroup_properties(1, 4), b = semigroup_properties(2, 4);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    bool differs = false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) differs = differs || a.rows[i].value != b.rows[i].value;
    EXPECT_TRUE(differs);
    const auto c = semigroup_properties(1, 4);
    for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].value, c.rows[i].value);
}

TEST(PropertyGroups, IntegrationByPartsIsSecondOrder) {
    const auto st = integration_by_parts_study();
    expect_all_hold(st.group);
    EXPECT_GT(st.fitted_order, 1.5);
}

TEST(PropertyGroups, VariationApproximation) { expect_all_hold(variation_approximation_properties()); }

TEST(PropertyGroups, MarginHelpers) {
    PropertyGroup g{"g", {}};
    g.add("p", "1", 3.0, 1.0, 0.5, 0.1);
    g.add("p", "2", 5.0, 1.0, -0.5, 0.1);
    g.add("q", "1", 1.0, 1.0, 2.0, 0.1);
    EXPECT_EQ(g.min_margin(), -0.5);
    EXPECT_EQ(g.min_margin("q"), 2.0);
    EXPECT_EQ(g.max_value("p"), 5.0);
}
