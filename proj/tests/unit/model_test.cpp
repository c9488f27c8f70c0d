#include <gtest/gtest.h>

#include "drs/model.hpp"
#include "drs/records.hpp"
#include "random_data.hpp"

namespace drs {
namespace {

TEST(EnumLabels, RoundTripEveryValue) {
  for (auto v : all_values<DamageLevel>()) {
    EXPECT_EQ(from_label<DamageLevel>(to_label(v)), v);
  }
  for (auto v : all_values<CollapseMode>()) {
    EXPECT_EQ(from_label<CollapseMode>(to_label(v)), v);
  }
  EXPECT_FALSE(from_label<DamageLevel>("severe"));
  EXPECT_FALSE(from_label<Material>("Concrete"));
}

TEST(EnumLabels, DamageLevelOrdering) {
  EXPECT_LT(DamageLevel::undamaged, DamageLevel::minor);
  EXPECT_LT(DamageLevel::minor, DamageLevel::moderate);
  EXPECT_LT(DamageLevel::moderate, DamageLevel::heavy);
}

TEST(Dates, ParseAndFormat) {
  const auto d = parse_iso_date("2020-01-11");
  EXPECT_EQ(format_iso_date(d), "2020-01-11");
  EXPECT_EQ(format_long_date(d), "January 11, 2020");
  EXPECT_EQ(format_long_date(parse_iso_date("2021-05-25")), "May 25, 2021");
  for (const char* bad : {"2020-02-30", "2020-1-11", "20200111", "", "2020-13-01"}) {
    EXPECT_THROW(parse_iso_date(bad, "inspected_date"), ValidationError) << bad;
  }
  try {
    parse_iso_date("nope", "inspected_date");
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "inspected_date");
  }
}

TEST(GeoPointCheck, Ranges) {
  EXPECT_TRUE(check(GeoPoint{90, 180}).empty());
  EXPECT_TRUE(check(GeoPoint{-90, -180}).empty());
  EXPECT_EQ(check(GeoPoint{90.1, 0}).front().field, "lat");
  EXPECT_EQ(check(GeoPoint{0, -180.1}).front().field, "lon");
  EXPECT_THROW(make_geo_point(100, 0), ValidationError);
  EXPECT_EQ(make_geo_point(17.9998, -66.6204), (GeoPoint{17.9998, -66.6204}));
}

TEST(EventCheck, MagnitudeAndName) {
  EventMetadata e;
  e.event_name = "Quake";
  e.magnitude = 6.4;
  e.origin_date = parse_iso_date("2020-01-07");
  EXPECT_TRUE(check(e).empty());
  e.magnitude = 0.0;
  EXPECT_EQ(check(e).front().field, "magnitude");
  e.magnitude = 10.0;
  EXPECT_TRUE(check(e).empty());
  e.magnitude = 10.01;
  EXPECT_EQ(check(e).front().field, "magnitude");
  e.magnitude = 6.4;
  e.event_name.clear();
  EXPECT_EQ(check(e).front().field, "event_name");
}

TEST(AttributeCheck, CrossFieldRules) {
  AttributeSet a;
  EXPECT_TRUE(check(a).empty());
  a.damage_state = DamageState::undamaged;
  a.damage_level = DamageLevel::undamaged;
  EXPECT_TRUE(check(a).empty());
  a.damage_level = DamageLevel::minor;
  EXPECT_FALSE(check(a).empty());
  a.damage_level.reset();
  a.damage_type = DamageType::shear;
  EXPECT_EQ(check(a).front().field, "damage_type");
  a = {};
  a.damage_level = DamageLevel::heavy;
  EXPECT_TRUE(check(a).empty());  // state absent
  a.damage_state = DamageState::damaged;
  EXPECT_TRUE(check(a).empty());
}

TEST(AttributeCheck, RandomSetsAreValid) {
  std::mt19937 rng(5);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_TRUE(check(testing::random_attributes(rng)).empty());
  }
}

TEST(ObservationCheck, ScopeAndFloor) {
  ImageObservation o;
  o.image_id = "i";
  o.image_uri = "u";
  o.structure_id = "s";
  o.scope = ObservationScope::system;
  EXPECT_TRUE(check(o).empty());
  o.floor = 1;
  EXPECT_EQ(check(o).front().field, "floor");
  o.scope = ObservationScope::component;
  EXPECT_TRUE(check(o).empty());
  o.floor = 0;
  EXPECT_EQ(check(o).front().field, "floor");
  o.floor.reset();
  EXPECT_EQ(check(o).front().field, "floor");
  o.floor = 2;
  o.attributes = AttributeSet{.damage_state = DamageState::undamaged,
                              .spalling = {},
                              .material = {},
                              .collapse_mode = {},
                              .component_type = {},
                              .damage_level = DamageLevel::heavy,
                              .damage_type = {}};
  EXPECT_EQ(check(o).front().field.rfind("attributes.", 0), 0u);
}

TEST(StructureCheck, Stories) {
  StructureMetadata s;
  s.structure_id = "s";
  s.inspected_date = parse_iso_date("2020-01-11");
  EXPECT_TRUE(check(s).empty());
  s.stories = 0;
  EXPECT_EQ(check(s).front().field, "stories");
  s.stories = 1;
  s.footprint_area_sqft = 0.0;
  EXPECT_EQ(check(s).front().field, "footprint_area_sqft");
  s.footprint_area_sqft.reset();
  s.location = {91, 0};
  EXPECT_EQ(check(s).front().field, "location.lat");
}

TEST(RegionCheck, Members) {
  Region r{"r", {0, 0}, 2.0, {"a"}};
  EXPECT_TRUE(check(r).empty());
  r.member_ids.clear();
  EXPECT_EQ(check(r).front().field, "member_ids");
  r.member_ids = {"a", "a"};
  EXPECT_EQ(check(r).front().field, "member_ids");
  r.member_ids = {"a"};
  r.radius_km = -1.0;
  EXPECT_EQ(check(r).front().field, "radius_km");
}

TEST(ValueSemantics, EqualFieldsCompareEqual) {
  std::mt19937 a(99);
  std::mt19937 b(99);
  EXPECT_EQ(testing::random_dataset(a), testing::random_dataset(b));
}

TEST(DisplayLabel, FallsBackToImageId) {
  ImageObservation o;
  o.image_id = "img-7";
  EXPECT_EQ(display_label(o), "img-7");
  o.component_label = "Column #1";
  EXPECT_EQ(display_label(o), "Column #1");
}

TEST(Records, AttributeJsonRoundTrip) {
  std::mt19937 rng(17);
  for (int i = 0; i < 500; ++i) {
    const auto a = testing::random_attributes(rng);
    EXPECT_EQ(records::attributes_from_json(records::to_json(a), "test"), a);
  }
}

TEST(Records, ObservationJsonRoundTrip) {
  std::mt19937 rng(23);
  for (int i = 0; i < 50; ++i) {
    const auto d = testing::random_dataset(rng);
    for (const auto& o : d.observations) {
      EXPECT_EQ(records::observation_from_json(records::to_json(o), "test"), o);
    }
    for (const auto& s : d.structures) {
      EXPECT_EQ(records::structure_from_json(records::to_json(s), "test"), s);
    }
    EXPECT_EQ(records::event_from_json(records::to_json(d.event), "test"), d.event);
  }
}

TEST(Records, StrictSchema) {
  using records::Json;
  EXPECT_THROW(records::attributes_from_json(Json{{"damage_levels", "heavy"}}, "t"), ParseError);
  EXPECT_THROW(records::attributes_from_json(Json{{"damage_level", "severe"}}, "t"), ParseError);
  EXPECT_THROW(records::attributes_from_json(Json{{"damage_level", 3}}, "t"), ParseError);
  EXPECT_THROW(records::attributes_from_json(Json::array(), "t"), ParseError);
  // null means absent
  EXPECT_EQ(records::attributes_from_json(Json{{"damage_level", nullptr}}, "t"), AttributeSet{});
  try {
    records::attributes_from_json(Json{{"material", "wood"}}, "obs.jsonl:3");
    FAIL();
  } catch (const ParseError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("obs.jsonl:3"), std::string::npos);
    EXPECT_NE(what.find("concrete"), std::string::npos);  // lists allowed labels
  }
}

TEST(Records, LocationForms) {
  using records::Json;
  const auto dms = records::location_from_json(
      Json{{"lat_dms", "17° 59' 59.28\" N"}, {"lon_dms", "66° 37' 13.44\" W"}}, "t");
  EXPECT_NEAR(dms.lat, 17.9998, 1e-9);
  EXPECT_NEAR(dms.lon, -66.6204, 1e-9);
  const auto dec = records::location_from_json(Json{{"lat", 18.0074}, {"lon", -66.6125}}, "t");
  EXPECT_EQ(dec, (GeoPoint{18.0074, -66.6125}));
  EXPECT_THROW(records::location_from_json(Json{{"lat", 1.0}}, "t"), ParseError);
  EXPECT_THROW(records::location_from_json(
                   Json{{"lat", 1.0}, {"lon", 2.0}, {"lat_dms", "1° 0' 0\" N"}}, "t"),
               ParseError);
  // A longitude given as latitude text is rejected.
  EXPECT_THROW(records::location_from_json(
                   Json{{"lat_dms", "66° 37' 13.44\" W"}, {"lon_dms", "17° 59' 59.28\" N"}}, "t"),
               ParseError);
}

}  // namespace
}  // namespace drs
