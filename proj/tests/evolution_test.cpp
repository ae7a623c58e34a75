#include <gtest/gtest.h>

#include "orion/evolution.hpp"
#include "test_util.hpp"

using namespace orion;
using orion::testing::names_of;
using orion::testing::read_fixture;
using orion::testing::sales_ops;
using orion::testing::sales_schema;

namespace {

ChangeOp op_of(const std::string& stmt) {
  return parse_orion("T operations Using S:1\n" + stmt).ops.at(0);
}

Schema apply_text(const Schema& s, const std::string& stmt) { return apply_op(s, op_of(stmt)); }

Schema stackoverflow_schema() { return parse_athena(read_fixture("stackoverflow.athena")); }
Schema reddit_schema() { return parse_athena(read_fixture("reddit.athena")); }

const Attribute& attr_of(const Schema& s, const std::string& type, const std::string& f) {
  return s.get(type).any_copy(f)->attribute();
}

}  // namespace

TEST(ApplyScript, SalesOpsEndToEnd) {
  auto out = apply_script(sales_schema(), sales_ops());
  ASSERT_TRUE(out.ok()) << out.failed_at->message;
  const Schema& s = out.schema;
  EXPECT_EQ(s.version, 2);
  EXPECT_EQ(out.log.size(), 15u);
  EXPECT_TRUE(validate(s).empty());

  EXPECT_FALSE(s.has_type("Salesperson"));
  EXPECT_FALSE(s.has_type("SaleSummary"));
  const SchemaType& emp = s.get("Employee");
  ASSERT_EQ(emp.variations.size(), 1u);
  EXPECT_EQ(emp.variations[0].id, 2);
  const Feature* priv = emp.any_copy("privateData");
  ASSERT_TRUE(priv && priv->is_reference());
  EXPECT_EQ(priv->reference().target, "PersonalData");
  EXPECT_FALSE(emp.has_feature("email"));
  EXPECT_EQ(emp.any_copy("sales")->aggregate().target, "Summary");

  const SchemaType& pd = s.get("PersonalData");
  EXPECT_TRUE(pd.root);
  EXPECT_EQ(names_of(pd.all_features()), (std::set<std::string>{"name", "number", "address", "email"}));
  EXPECT_EQ(names_of(s.get("Address").all_features()),
            (std::set<std::string>{"country", "city", "postcode", "street"}));
  EXPECT_EQ(attr_of(s, "Address", "postcode").type, DataType::of(ScalarKind::String));
  EXPECT_FALSE(s.get("Address").root);

  EXPECT_EQ(attr_of(s, "Summary", "isCompleted").type, DataType::of(ScalarKind::Boolean));
  for (const char* t : {"Sale", "Summary", "Employee"})
    EXPECT_EQ(attr_of(s, t, "profits").type, DataType::of(ScalarKind::Double)) << t;
  EXPECT_FALSE(s.get("Sale").has_feature("isActive"));

  EXPECT_TRUE(attr_of(s, "Company", "code").key);
  EXPECT_EQ(attr_of(s, "Company", "numOfEmployees").type, DataType::of(ScalarKind::Integer));
  EXPECT_TRUE(s.get("Company").root);
  EXPECT_FALSE(s.get("Media").root);
  EXPECT_EQ(s.get("Company").any_copy("media")->aggregate().target, "Media");
}

TEST(ApplyScript, UsingMismatch) {
  auto script = sales_ops();
  script.using_version = 7;
  EXPECT_THROW(apply_script(sales_schema(), script), UsingMismatch);
  script.using_version = 1;
  script.using_schema = "Other";
  EXPECT_THROW(apply_script(sales_schema(), script), UsingMismatch);
}

TEST(ApplyScript, HaltsAtFirstFailure) {
  auto script = parse_orion(
      "X operations Using Sales_department:1\n"
      "RENAME ENTITY Sale TO SeasonExercise\n"
      "DELETE Sale::isActive\n");
  auto out = apply_script(sales_schema(), script);
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failed_at->op_index, 0u);
  EXPECT_EQ(out.failed_at->clause, "n not in T.names");
  EXPECT_EQ(out.schema, sales_schema());
  EXPECT_TRUE(out.log.empty());
}

TEST(ApplyScript, PartialProgressKept) {
  auto script = parse_orion(
      "X operations Using Sales_department:1\n"
      "DELETE Sale::isActive\n"
      "DELETE Sale::isActive\n");
  auto out = apply_script(sales_schema(), script);
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failed_at->op_index, 1u);
  EXPECT_FALSE(out.schema.get("Sale").has_feature("isActive"));
  EXPECT_EQ(out.schema.version, 1);
}

TEST(ApplyScript, StackOverflowOps) {
  auto out = apply_script(stackoverflow_schema(), parse_orion(read_fixture("stackoverflow_ops.orion")));
  ASSERT_TRUE(out.ok()) << out.failed_at->message;
  const Schema& s = out.schema;
  const SchemaType& c = s.get("comments");
  EXPECT_EQ(c.kind, TypeKind::Relationship);
  ASSERT_EQ(c.variations.size(), 1u);
  EXPECT_EQ(names_of(c.all_features()),
            (std::set<std::string>{"ContentLicense", "CreationDate", "Score", "Text", "UserDisplayName",
                                   "CommentTypeId", "UserReputation", "LastEditDate", "KarmaCount"}));
  EXPECT_EQ(attr_of(s, "comments", "Score").type, DataType::of(ScalarKind::Double));
  EXPECT_EQ(attr_of(s, "comments", "CreationDate").type, DataType::of(ScalarKind::Timestamp));
  EXPECT_EQ(attr_of(s, "Users", "LastAccessDate").type, DataType::of(ScalarKind::Timestamp));
  EXPECT_EQ(attr_of(s, "Posts", "CreationDate").type, DataType::of(ScalarKind::Timestamp));
  EXPECT_EQ(s.get("Posts").any_copy("Tags")->reference().cardinality, Cardinality::some());
}

TEST(ApplyScript, RedditMigrationLeavesFiveVariations) {
  auto out = apply_script(reddit_schema(), parse_orion(read_fixture("reddit_migration.orion")));
  ASSERT_TRUE(out.ok()) << out.failed_at->message;
  std::set<int> ids;
  for (const auto& v : out.schema.get("Comments").variations) ids.insert(v.id);
  EXPECT_EQ(ids, (std::set<int>{5, 6, 7, 8, 9}));
}

// Schema type operations

TEST(SchemaTypeOps, AddEntityIsRoot) {
  Schema s = apply_text(sales_schema(), "ADD ENTITY Company: { +id: String }");
  EXPECT_TRUE(s.get("Company").root);
  EXPECT_THROW(apply_text(s, "ADD ENTITY Company: { x: String }"), PreconditionViolation);
}

TEST(SchemaTypeOps, AddRelationshipNotRoot) {
  Schema s = apply_text(sales_schema(), "ADD RELATIONSHIP Knows: { since: Timestamp }");
  EXPECT_FALSE(s.get("Knows").root);
  EXPECT_EQ(s.get("Knows").kind, TypeKind::Relationship);
}

TEST(SchemaTypeOps, DeleteRequiresFlavor) {
  EXPECT_THROW(apply_text(sales_schema(), "DELETE RELATIONSHIP Sale"), PreconditionViolation);
  EXPECT_THROW(apply_text(sales_schema(), "DELETE ENTITY Nope"), PreconditionViolation);
  // Sale is referenced by SaleSummary.saleId
  EXPECT_THROW(apply_text(sales_schema(), "DELETE ENTITY Sale"), PreconditionViolation);
  Schema s = apply_text(sales_schema(), "ADD ENTITY Z: { a: String }");
  EXPECT_FALSE(apply_text(s, "DELETE ENTITY Z").has_type("Z"));
}

TEST(SchemaTypeOps, RenameRetargetsReferences) {
  Schema s = apply_text(sales_schema(), "RENAME ENTITY Sale TO Purchase");
  EXPECT_EQ(s.get("SaleSummary").any_copy("saleId")->reference().target, "Purchase");
  EXPECT_TRUE(validate(s).empty());
  EXPECT_THROW(apply_text(sales_schema(), "RENAME ENTITY Sale TO Sale"), PreconditionViolation);
}

TEST(SchemaTypeOps, ExtractKeepsSource) {
  Schema in = sales_schema();
  Schema s = apply_text(in, "EXTRACT ENTITY Sale::description, profits TO SaleInfo");
  EXPECT_EQ(names_of(features_of(s, "SaleInfo")), (std::set<std::string>{"description", "profits"}));
  EXPECT_EQ(s.get("Sale"), in.get("Sale"));
  EXPECT_THROW(apply_text(in, "EXTRACT ENTITY Sale::nope TO SaleInfo"), PreconditionViolation);
}

TEST(SchemaTypeOps, SplitEquivalentToExtractExtractDelete) {
  Schema in = apply_text(sales_schema(), "ADD ENTITY W: { +id: String, a: String, b: Integer }");
  Schema split = apply_text(in, "SPLIT ENTITY W TO W1 { id, a } AND W2 { id, b }");
  Schema seq = apply_text(in, "EXTRACT ENTITY W::id, a TO W1");
  seq = apply_text(seq, "EXTRACT ENTITY W::id, b TO W2");
  seq = apply_text(seq, "DELETE ENTITY W");
  EXPECT_EQ(split, seq);
  EXPECT_EQ(names_of(features_of(split, "W1")), (std::set<std::string>{"id", "a"}));
  EXPECT_THROW(apply_text(in, "SPLIT ENTITY W TO W1 { a } AND W1 { b }"), PreconditionViolation);
}

TEST(SchemaTypeOps, MergeUnionsFeatures) {
  Schema in = apply_text(sales_schema(), "ADD ENTITY A: { +id: String, a: String }");
  in = apply_text(in, "ADD ENTITY B: { +id: String, b: Integer }");
  Schema s = apply_text(in, "MERGE ENTITIES A, B TO AB");
  EXPECT_EQ(names_of(features_of(s, "AB")), (std::set<std::string>{"id", "a", "b"}));
  EXPECT_FALSE(s.has_type("A"));
  EXPECT_FALSE(s.has_type("B"));

  Schema clash = apply_text(in, "ADD ATTR B::a: Integer");
  EXPECT_THROW(apply_text(clash, "MERGE ENTITIES A, B TO AB"), PreconditionViolation);
  EXPECT_THROW(apply_text(in, "MERGE ENTITIES A, A TO AB"), PreconditionViolation);
}

// Variation operations

TEST(VariationOps, DelvarAndAdapt) {
  Schema s = apply_text(sales_schema(), "DELVAR ENTITY Salesperson::v2");
  ASSERT_EQ(s.get("Salesperson").variations.size(), 1u);
  EXPECT_THROW(apply_text(s, "DELVAR ENTITY Salesperson::v1"), PreconditionViolation);
  EXPECT_THROW(apply_text(sales_schema(), "DELVAR ENTITY Salesperson::v9"), UnknownVariation);
  EXPECT_THROW(apply_text(sales_schema(), "ADAPT ENTITY Salesperson::v1 TO v1"), PreconditionViolation);
  EXPECT_THROW(apply_text(sales_schema(), "ADAPT ENTITY Salesperson::v1 TO v5"), UnknownVariation);
}

TEST(VariationOps, UnionSumsCounts) {
  Schema s = apply_text(reddit_schema(), "UNION ENTITY Comments");
  const auto& vs = s.get("Comments").variations;
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].count, std::optional<std::uint64_t>(999785));
  EXPECT_EQ(vs[0].features.size(), 8u);
}

// Feature operations

TEST(FeatureOps, WildcardIsVacuousForAbsentTypes) {
  Schema s = apply_text(sales_schema(), "DELETE *::profits");
  for (const SchemaType* t : s.all_types()) EXPECT_FALSE(t->has_feature("profits")) << t->name;
  EXPECT_TRUE(s.get("PersonalData") == sales_schema().get("PersonalData"));
  EXPECT_THROW(apply_text(sales_schema(), "DELETE *::nothingHere"), PreconditionViolation);
}

TEST(FeatureOps, VariationScopedDelete) {
  Schema s = apply_text(sales_schema(), "DELETE Salesperson(v2)::teamCode");
  const SchemaType& t = s.get("Salesperson");
  EXPECT_FALSE(find_feature(t.common, "teamCode"));
  EXPECT_TRUE(find_feature(t.variation(1)->features, "teamCode"));
  EXPECT_FALSE(find_feature(t.variation(2)->features, "teamCode"));
}

TEST(FeatureOps, RenameRejectsClash) {
  EXPECT_THROW(apply_text(sales_schema(), "RENAME Sale::description TO profits"), PreconditionViolation);
  Schema s = apply_text(sales_schema(), "RENAME Sale::description TO summary");
  EXPECT_TRUE(s.get("Sale").has_feature("summary"));
}

TEST(FeatureOps, ScopedRenameAmbiguity) {
  Schema s = apply_text(sales_schema(), "ADD ATTR Salesperson(v1)::x: Integer");
  EXPECT_THROW(apply_text(s, "RENAME Salesperson(v2)::profits TO x"), AmbiguousSelector);
}

TEST(FeatureOps, MoveEquivalentToCopyThenDelete) {
  Schema in = sales_schema();
  Schema moved = apply_text(in, "MOVE Sale::description TO SeasonExercise::saleDescription");
  Schema seq = apply_text(in, "COPY Sale::description TO SeasonExercise::saleDescription");
  seq = apply_text(seq, "DELETE Sale::description");
  EXPECT_EQ(moved, seq);
  EXPECT_THROW(apply_text(in, "COPY Sale::description TO SeasonExercise::description"), PreconditionViolation);
}

TEST(FeatureOps, CopyJoinFeaturesMustExist) {
  EXPECT_THROW(apply_text(sales_schema(), "COPY Sale::description TO SeasonExercise::d WHERE nope=id"),
               PreconditionViolation);
  Schema s = apply_text(sales_schema(), "COPY Sale::description TO SeasonExercise::d WHERE id=id");
  EXPECT_TRUE(s.get("SeasonExercise").has_feature("d"));
}

TEST(FeatureOps, NestUnnestInverse) {
  Schema in = sales_schema();
  Schema nested = apply_text(in, "NEST Salesperson::teamCode TO personalData");
  EXPECT_TRUE(nested.get("PersonalData").has_feature("teamCode"));
  EXPECT_FALSE(nested.get("Salesperson").has_feature("teamCode"));
  Schema back = apply_text(nested, "UNNEST Salesperson::teamCode FROM personalData");
  EXPECT_TRUE(schemas_equal_except(in, back, {}));
  EXPECT_THROW(apply_text(in, "NEST Salesperson::teamCode TO email"), PreconditionViolation);
}

// Attribute operations

TEST(AttributeOps, CastChangesTypeOnly) {
  Schema s = apply_text(sales_schema(), "CAST ATTR Sale::profits TO Double");
  EXPECT_EQ(attr_of(s, "Sale", "profits").type, DataType::of(ScalarKind::Double));
  EXPECT_TRUE(attr_of(s, "Sale", "profits").constraint.has_value());
  EXPECT_THROW(apply_text(sales_schema(), "CAST ATTR Sale::types TO String"), NonScalarCastTarget);
  EXPECT_THROW(apply_text(sales_schema(), "CAST ATTR Sale::exercises TO String"), PreconditionViolation);
}

TEST(AttributeOps, PromoteDemote) {
  Schema s = apply_text(sales_schema(), "PROMOTE ATTR Sale::description");
  EXPECT_TRUE(attr_of(s, "Sale", "description").key);
  EXPECT_THROW(apply_text(s, "PROMOTE ATTR Sale::description"), PreconditionViolation);
  Schema d = apply_text(s, "DEMOTE ATTR Sale::description");
  EXPECT_EQ(d, sales_schema());
  Schema r = apply_text(sales_schema(), "ADD RELATIONSHIP Knows: { since: Timestamp }");
  EXPECT_THROW(apply_text(r, "PROMOTE ATTR Knows::since"), PreconditionViolation);
}

TEST(AttributeOps, AddRejectsPresent) {
  EXPECT_THROW(apply_text(sales_schema(), "ADD ATTR Sale::profits: Integer"), PreconditionViolation);
  Schema s = apply_text(sales_schema(), "ADD ATTR Sale::tags: Set<String>");
  EXPECT_EQ(attr_of(s, "Sale", "tags").type, DataType::set(DataType::of(ScalarKind::String)));
}

// Reference operations

TEST(ReferenceOps, AddCastMult) {
  Schema s = apply_text(sales_schema(), "ADD REF SeasonExercise::sale: String & TO Sale");
  const Reference& r = s.get("SeasonExercise").any_copy("sale")->reference();
  EXPECT_EQ(r.target, "Sale");
  EXPECT_EQ(r.value_type, DataType::of(ScalarKind::String));
  EXPECT_THROW(apply_text(sales_schema(), "ADD REF SeasonExercise::sale: String & TO Nope"), UnknownTargetType);

  s = apply_text(s, "CAST REF SeasonExercise::sale TO Integer");
  EXPECT_EQ(s.get("SeasonExercise").any_copy("sale")->reference().value_type, DataType::of(ScalarKind::Integer));
  s = apply_text(s, "MULT REF SeasonExercise::sale TO *");
  EXPECT_EQ(s.get("SeasonExercise").any_copy("sale")->reference().cardinality, Cardinality::any());
}

TEST(ReferenceOps, MorphRoundTrip) {
  Schema in = sales_schema();
  Schema ref = apply_text(in, "MORPH AGGR Salesperson::personalData TO privateData");
  EXPECT_TRUE(ref.get("PersonalData").root);
  Schema back = apply_text(ref, "MORPH REF Salesperson::privateData TO personalData");
  EXPECT_EQ(back, in);
  // Sale is referenced elsewhere, so it cannot become an aggregate target
  Schema both = apply_text(in, "ADD REF SeasonExercise::sale: String & TO Sale");
  EXPECT_THROW(apply_text(both, "MORPH REF SeasonExercise::sale TO saleCopy"), PreconditionViolation);
}

// Aggregate operations

TEST(AggregateOps, AddExistingTarget) {
  EXPECT_THROW(apply_text(sales_schema(), "ADD AGGR Sale::s: SaleSummary* TO X"), SyntaxError);
  Schema s = apply_text(sales_schema(), "ADD AGGR Sale::summaries: SaleSummary*");
  EXPECT_EQ(s.get("Sale").any_copy("summaries")->aggregate().cardinality, Cardinality::any());
  EXPECT_THROW(apply_text(sales_schema(), "ADD AGGR Sale::s: SeasonExercise*"), PreconditionViolation);
}

TEST(AggregateOps, MultAndRelationshipRejection) {
  Schema s = apply_text(sales_schema(), "MULT AGGR Salesperson::sales TO *");
  EXPECT_EQ(s.get("Salesperson").any_copy("sales")->aggregate().cardinality, Cardinality::any());
  EXPECT_THROW(apply_text(sales_schema(), "MULT AGGR Sale::profits TO *"), PreconditionViolation);
}

// Frame condition: types outside the footprint are unchanged.
TEST(Frame, SalesOpsFootprints) {
  Schema s = sales_schema();
  for (const auto& op : sales_ops().ops) {
    auto fp = footprint(s, op);
    Schema next = apply_op(s, op);
    EXPECT_TRUE(schemas_equal_except(s, next, fp)) << print_op(op);
    s = next;
  }
}
