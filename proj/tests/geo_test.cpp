#include "distrag/geo.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "support/geo_oracle.hpp"
#include "support/paths.hpp"

using namespace distrag;

namespace {

Gazetteer load_fixture() { return load_gazetteer(testsupport::fixture_path("au_cities.csv")); }

GeoPoint random_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> lat(-90.0, 90.0), lon(-180.0, 180.0);
    return GeoPoint(lat(rng), lon(rng));
}

} // namespace

TEST(GeoPoint, RangesEnforcedAtConstruction) {
    EXPECT_NO_THROW(GeoPoint(90.0, 180.0));
    EXPECT_NO_THROW(GeoPoint(-90.0, -180.0));
    EXPECT_THROW(GeoPoint(90.5, 0.0), Error);
    EXPECT_THROW(GeoPoint(0.0, -180.5), Error);
    EXPECT_THROW(GeoPoint(std::nan(""), 0.0), Error);
}

TEST(CanonicalKey, LowercasesAndUnderscores) {
    EXPECT_EQ(canonical_key("Newcastle, NSW"), "newcastle,_nsw");
    EXPECT_EQ(canonical_key("Mount Isa, QLD"), "mount_isa,_qld");
    EXPECT_EQ(canonical_key("  Adelaide "), "adelaide");
}

TEST(LoadGazetteer, ParsesFixtureRows) {
    Gazetteer g = load_fixture();
    EXPECT_EQ(g.size(), 50u);
    const City* newcastle = g.find("newcastle,_nsw");
    ASSERT_NE(newcastle, nullptr);
    EXPECT_EQ(newcastle->name, "Newcastle, NSW");
    EXPECT_NEAR(newcastle->point.lat, -32.9283, 1e-9);
    EXPECT_NEAR(newcastle->point.lon, 151.7817, 1e-9);
    ASSERT_TRUE(newcastle->population.has_value());
    EXPECT_EQ(*newcastle->population, 322278);
    // blank population stays empty
    const City* katherine = g.find("katherine,_nt");
    ASSERT_NE(katherine, nullptr);
    EXPECT_FALSE(katherine->population.has_value());
}

TEST(LoadGazetteer, HeaderOnlyIsEmptyGazetteer) {
    try {
        load_gazetteer_text("name,region,lat,lon,population\n");
        FAIL() << "expected EmptyGazetteer";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyGazetteer);
    }
}

TEST(LoadGazetteer, DuplicateCanonicalKeyRejected) {
    const char* text =
        "name,region,lat,lon,population\n"
        "Sydney,NSW,-33.8688,151.2093,100\n"
        "SYDNEY,nsw,-33.9,151.2,\n";
    try {
        load_gazetteer_text(text);
        FAIL() << "expected DuplicateCity";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DuplicateCity);
    }
}

TEST(LoadGazetteer, MalformedCoordinatesReportLine) {
    const char* text =
        "name,region,lat,lon,population\n"
        "Sydney,NSW,-33.8688,151.2093,100\n"
        "Broken,NSW,not-a-number,151.0,\n";
    try {
        load_gazetteer_text(text);
        FAIL() << "expected MalformedRow";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedRow);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(LoadGazetteer, OutOfRangeCoordinatesAreMalformed) {
    const char* text =
        "name,region,lat,lon,population\n"
        "Broken,NSW,95.0,151.0,\n";
    EXPECT_THROW(load_gazetteer_text(text), Error);
}

TEST(LoadGazetteer, MissingFile) {
    try {
        load_gazetteer("/nonexistent/path.csv");
        FAIL() << "expected MissingFile";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingFile);
    }
}

TEST(LoadGazetteer, CsvRoundTripsThroughCacheFormat) {
    Gazetteer g = load_fixture();
    testsupport::TempDir tmp;
    auto path = tmp.path() / "cache.csv";
    save_gazetteer(g, path);
    Gazetteer again = load_gazetteer(path);
    ASSERT_EQ(again.size(), g.size());
    for (size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(again.cities()[i].name, g.cities()[i].name);
        EXPECT_EQ(again.cities()[i].key, g.cities()[i].key);
        EXPECT_NEAR(again.cities()[i].point.lat, g.cities()[i].point.lat, 1e-4);
        EXPECT_NEAR(again.cities()[i].point.lon, g.cities()[i].point.lon, 1e-4);
    }
}

TEST(Geocode, UnderscoresMatchSpaces) {
    Gazetteer g = load_fixture();
    auto c = geocode("Mount_Isa, QLD", g);
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(c->name, "Mount Isa, QLD");
}

TEST(Geocode, EmptyStringIsAbsent) {
    Gazetteer g = load_fixture();
    EXPECT_FALSE(geocode("", g).has_value());
    EXPECT_FALSE(geocode("   ", g).has_value());
}

TEST(Geocode, BareNameMatchesWhenUnique) {
    Gazetteer g = load_fixture();
    auto c = geocode("Perth", g);
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(c->name, "Perth, WA");
    EXPECT_FALSE(geocode("Atlantis", g).has_value());
}

TEST(Geocode, TrailingPeriodStripped) {
    Gazetteer g = load_fixture();
    auto c = geocode("Cairns, QLD.", g);
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(c->name, "Cairns, QLD");
}

TEST(Geocode, RoundTripForEveryCity) {
    Gazetteer g = load_fixture();
    for (const City& c : g.cities()) {
        auto found = geocode(c.name, g);
        ASSERT_TRUE(found.has_value()) << c.name;
        EXPECT_EQ(found->key, c.key);
    }
}

TEST(GeodesicKm, IdentityIsZero) {
    GeoPoint sydney(-33.8688, 151.2093);
    EXPECT_EQ(geodesic_km(sydney, sydney), 0.0);
}

TEST(GeodesicKm, MatchesIndependentOracle) {
    // Sydney <-> Melbourne, value frozen from the oracle formulation
    GeoPoint sydney(-33.8688, 151.2093);
    GeoPoint melbourne(-37.8136, 144.9631);
    double got = geodesic_km(sydney, melbourne);
    EXPECT_NEAR(got, 713.43, 0.05);
    double oracle = testsupport::oracle_great_circle_km(-33.8688, 151.2093, -37.8136, 144.9631);
    EXPECT_NEAR(got, oracle, 1e-6);

    std::mt19937_64 rng(20240601);
    for (int i = 0; i < 500; ++i) {
        GeoPoint a = random_point(rng);
        GeoPoint b = random_point(rng);
        double lib = geodesic_km(a, b);
        double ref = testsupport::oracle_great_circle_km(a.lat, a.lon, b.lat, b.lon);
        EXPECT_NEAR(lib, ref, 1e-6) << a.lat << "," << a.lon << " / " << b.lat << "," << b.lon;
    }
}

TEST(GeodesicKm, BitwiseSymmetry) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        GeoPoint a = random_point(rng);
        GeoPoint b = random_point(rng);
        EXPECT_EQ(geodesic_km(a, b), geodesic_km(b, a));
    }
}

TEST(GeodesicKm, BoundAndNonNegativity) {
    const double bound = 3.14159265358979323846 * kEarthRadiusKm;
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        GeoPoint a = random_point(rng);
        GeoPoint b = random_point(rng);
        double d = geodesic_km(a, b);
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, bound + 1e-9);
    }
    // antipodal pair sits at the bound
    EXPECT_NEAR(geodesic_km(GeoPoint(0, 0), GeoPoint(0, 180)), bound, 1e-6);
}

TEST(GeodesicKm, TriangleInequalitySampled) {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 300; ++i) {
        GeoPoint a = random_point(rng);
        GeoPoint b = random_point(rng);
        GeoPoint c = random_point(rng);
        EXPECT_LE(geodesic_km(a, c), geodesic_km(a, b) + geodesic_km(b, c) + 1e-6);
    }
}

TEST(GeodesicKm, PaperAdelaideRowWithinTolerance) {
    Gazetteer g = load_fixture();
    const GeoPoint adelaide = g.find("adelaide,_sa")->point;
    struct Row {
        const char* key;
        double paper_km;
        double tolerance;  // fraction
    };
    const Row rows[] = {
        {"perth,_wa", 2135.0, 0.01},
        {"launceston,_tas", 1039.0, 0.015},
        {"cairns,_qld", 2119.0, 0.015},
        {"ipswich,_qld", 1571.0, 0.015},
    };
    for (const Row& row : rows) {
        const City* c = g.find(row.key);
        ASSERT_NE(c, nullptr) << row.key;
        double d = geodesic_km(adelaide, c->point);
        EXPECT_NEAR(d, row.paper_km, row.paper_km * row.tolerance) << row.key;
    }
}
