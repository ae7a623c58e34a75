#include <gtest/gtest.h>

#include "orion/model.hpp"
#include "test_util.hpp"

using namespace orion;
using orion::testing::names_of;
using orion::testing::sales_schema;

TEST(Validate, SalesSchemaIsValid) { EXPECT_TRUE(validate(sales_schema()).empty()); }

TEST(Validate, EmptySchemaHasOneViolation) {
  Schema s{"Empty", 1, {}, {}};
  auto v = validate(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rule, "some entities or relationships");
}

TEST(Validate, DanglingReference) {
  Schema s = sales_schema();
  s.remove("SeasonExercise");
  auto v = validate(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rule, "refsTo in entities");
}

TEST(Validate, IndividualRules) {
  auto base = [] {
    Schema s{"S", 1, {}, {}};
    SchemaType e{"E", TypeKind::Entity, true, {Feature::attr("id", DataType::of(ScalarKind::String), true)}};
    s.add(e);
    return s;
  };
  auto rule_of = [](const Schema& s) {
    auto v = validate(s);
    return v.empty() ? std::string() : v.front().rule;
  };

  Schema s = base();
  s.version = -1;
  EXPECT_EQ(rule_of(s), "version non-negative");

  s = base();
  s.entities[0].root = false;
  EXPECT_EQ(rule_of(s), "some root entity");

  s = base();
  s.entities[0].variations.clear();
  EXPECT_EQ(rule_of(s), "variations non-empty");

  s = base();
  s.entities[0].common.push_back(Feature::aggr("a", "E", Cardinality::one()));
  EXPECT_EQ(rule_of(s), "aggregate target non-root");

  s = base();
  s.entities[0].variations[0].features.push_back(Feature::attr("id", DataType::of(ScalarKind::Integer)));
  EXPECT_FALSE(validate(s).empty());

  s = base();
  s.entities[0].common.push_back(Feature::attr("n", DataType::map(DataType::of(ScalarKind::String), DataType{})));
  EXPECT_TRUE(validate(s).empty());

  s = base();
  Feature r = Feature::ref("r", "E", Cardinality::one(), DataType::of(ScalarKind::String));
  r.reference().attributes.push_back({"w", DataType::of(ScalarKind::Integer)});
  s.entities[0].common.push_back(r);
  EXPECT_EQ(rule_of(s), "reference valueType xor attributes");

  s = base();
  SchemaType rel{"R", TypeKind::Relationship, true, {}};
  s.add(rel);
  EXPECT_EQ(rule_of(s), "relationships never root");

  s = base();
  s.add(SchemaType{"E", TypeKind::Relationship, false, {}});
  EXPECT_EQ(rule_of(s), "type names distinct");

  s = base();
  s.entities[0].variations.push_back(StructuralVariation{1, {}, std::nullopt});
  EXPECT_EQ(rule_of(s), "variation ids distinct");
}

TEST(FeaturesOf, Salesperson) {
  Schema s = sales_schema();
  EXPECT_EQ(names_of(features_of(s, "Salesperson")),
            (std::set<std::string>{"id", "teamCode", "email", "personalData", "sales", "profits"}));
}

TEST(FeaturesOf, EmptyType) {
  Schema s = sales_schema();
  s.add(SchemaType{"Blank", TypeKind::Entity, false, {}});
  EXPECT_TRUE(features_of(s, "Blank").empty());
}

TEST(FeaturesOf, FsetInlined) {
  Schema s = sales_schema();
  auto names = names_of(features_of(s, "SeasonExercise"));
  EXPECT_TRUE(names.count("createdAt"));
  EXPECT_TRUE(names.count("updatedAt"));
}

TEST(SchemasEqualExcept, Basics) {
  Schema a = sales_schema();
  Schema b = sales_schema();
  EXPECT_TRUE(schemas_equal_except(a, b, {}));

  b.get("Sale").common.pop_back();
  EXPECT_FALSE(schemas_equal_except(a, b, {}));
  EXPECT_TRUE(schemas_equal_except(a, b, {"Sale"}));

  Schema c = sales_schema();
  c.get("Sale").name = "Purchase";
  EXPECT_FALSE(schemas_equal_except(a, c, {"Sale"}));
  EXPECT_TRUE(schemas_equal_except(a, c, {"Sale", "Purchase"}));
}

TEST(SchemasEqualExcept, FeatureOrderIrrelevantInVariations) {
  Schema a = sales_schema();
  Schema b = sales_schema();
  auto& fs = b.get("Salesperson").variations[1].features;
  std::reverse(fs.begin(), fs.end());
  EXPECT_TRUE(schemas_equal_except(a, b, {}));
}

TEST(Cardinality, Symbols) {
  for (char c : std::string("?&*+")) {
    auto k = Cardinality::from_symbol(c);
    ASSERT_TRUE(k.has_value());
    EXPECT_EQ(k->symbol(), c);
  }
  EXPECT_FALSE(Cardinality::from_symbol('x').has_value());
  EXPECT_EQ(Cardinality::one(), (Cardinality{1, false}));
}

TEST(DataType, Printing) {
  EXPECT_EQ(DataType::list(DataType::of(ScalarKind::String)).to_string(), "List<String>");
  EXPECT_EQ(DataType::map(DataType::of(ScalarKind::String), DataType::of(ScalarKind::Integer)).to_string(),
            "Map<String, Integer>");
  EXPECT_EQ(scalar_from_name("Number"), ScalarKind::Integer);
}
