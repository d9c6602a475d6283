#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "combforge/io.hpp"
#include "combforge/random.hpp"

using namespace combforge;
using combforge::io::json;

namespace {

TesterCollection random_collection(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<QuantumTester> t;
  for (int i = 0; i < 2; ++i) t.push_back(random_tester({2, 2, 2, 2}, 3, {2, 2}, rng));
  return make_collection(std::move(t));
}

}  // namespace

TEST(Io, Round12) {
  EXPECT_DOUBLE_EQ(io::round12(0.1234567890123456), 0.123456789012);
  EXPECT_EQ(io::round12(0.0), 0.0);
  EXPECT_EQ(io::format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(io::format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_TRUE(io::number(std::nan("")).is_null());
}

TEST(Io, OperatorRoundTrip) {
  Rng rng(3);
  const auto rho = random_state(Signature({{0, 2}, {1, 3}}), rng);
  const auto back = io::operator_from_json(json::parse(io::to_json(rho).dump()));
  EXPECT_EQ(back.signature(), rho.signature());
  EXPECT_LT(back.frobenius_distance(rho), 1e-11);
}

TEST(Io, CollectionRoundTrip) {
  const auto c = random_collection(7);
  const auto text = io::to_json(c).dump();
  const auto back = io::collection_from_json(json::parse(text));
  ASSERT_EQ(back.size(), c.size());
  ASSERT_EQ(back.outcomes(), c.outcomes());
  for (std::size_t alpha = 0; alpha < c.size(); ++alpha)
    for (std::size_t a = 0; a < c.outcomes(); ++a) EXPECT_LT(back.effect(a, alpha).frobenius_distance(c.effect(a, alpha)), 1e-10);
  EXPECT_EQ(io::to_json(back).dump(), text);
}

TEST(Io, EnsembleRoundTrip) {
  const auto c = random_collection(8);
  const auto g = random_ensemble_collection(comb_signature_for(c.signature()), 2, 3, 5);
  const auto back = io::ensemble_collection_from_json(json::parse(io::to_json(g).dump()));
  ASSERT_EQ(back.size(), 2u);
  ASSERT_EQ(back.combs_per_ensemble(), 3u);
  EXPECT_NEAR(back.joint_weight(1, 1), g.joint_weight(1, 1), 1e-11);
  EXPECT_LT(back.ensembles[0].combs[2].choi.frobenius_distance(g.ensembles[0].combs[2].choi), 1e-10);
}

TEST(Io, MalformedInputIsInvalid) {
  auto expect_invalid = [](const json& j) {
    try {
      io::collection_from_json(j);
      FAIL() << "accepted " << j.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::invalid_input) << e.what();
    }
  };
  expect_invalid(json::object());
  expect_invalid({{"testers", json::array()}});
  expect_invalid({{"testers", {{{"slots", 1}, {"effects", {{{"systems", {{{"index", 0}, {"dim", 2}}}}, {"matrix", {1, 2}}}}}}}}});
  expect_invalid({{"testers", {{{"slots", "one"}, {"effects", json::array()}}}}});
}

TEST(Io, NonTesterRejectedByValidation) {
  const Signature sig({{0, 2}, {1, 2}});
  auto e = HermitianOperator::identity(sig) * 0.3;
  json j = {{"testers", {{{"slots", 1}, {"effects", {io::to_json(e)}}}}}};
  EXPECT_THROW(io::collection_from_json(j), Error);
}

TEST(Io, WriteAtomicReplacesFile) {
  const auto dir = std::filesystem::temp_directory_path() / "combforge_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.json";
  io::write_atomic(path, "first");
  io::write_atomic(path, "second");
  std::ifstream in(path);
  std::string s;
  in >> s;
  EXPECT_EQ(s, "second");
  EXPECT_FALSE(std::filesystem::exists(dir / ".out.json.tmp"));
  std::filesystem::remove_all(dir);
}

TEST(Io, MissingFileIsInvalid) {
  try {
    io::read_json_file("/nonexistent/combforge.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
}
