#include <gtest/gtest.h>

#include <random>

#include "fks/io.hpp"
#include "support.hpp"

using namespace fks;

TEST(DatasetFile, RoundTripIsExact) {
  std::mt19937_64 rng(181);
  std::normal_distribution<double> z(0.0, 1.0);
  auto t = test::linspace(0.5, 4.5, 17);
  Eigen::MatrixXd y(17, 4);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = z(rng) * 1e-3 + z(rng) * 1e5;
  const auto d = test::make_dataset(t, y, 0.0, 5.0);
  const auto path = test::test_dir() + "/dataset.csv";
  const std::vector<std::string> header{"fks test", "seed: 1"};
  write_dataset(path, d, header);
  const auto back = read_dataset(path);
  EXPECT_EQ(back.t, d.t);
  EXPECT_TRUE(back.y.cwiseEqual(d.y).all());
  EXPECT_EQ(back.lo, 0.0);
  EXPECT_EQ(back.hi, 5.0);
}

TEST(DatasetFile, DomainDefaultsToGridEnds) {
  const auto path = test::temp_file("nodomain.csv", "t,curve_1\n0.5,1\n1.5,2\n");
  const auto d = read_dataset(path);
  EXPECT_EQ(d.lo, 0.5);
  EXPECT_EQ(d.hi, 1.5);
}

TEST(DatasetFile, Errors) {
  EXPECT_EQ(test::thrown([] { read_dataset(test::temp_file("bad_ds.csv", "t,curve_1\n0,1\n1,oops\n")); }),
            ErrorKind::ParseError);
  EXPECT_EQ(test::thrown([] { read_dataset(test::temp_file("nan_ds.csv", "t,curve_1\n0,1\n1,nan\n")); }),
            ErrorKind::ParseError);
  EXPECT_EQ(test::thrown([] { read_dataset(test::temp_file("unsorted.csv", "t,curve_1\n1,1\n0,1\n")); }),
            ErrorKind::DomainError);
}

TEST(LabelsFile, RoundTrip) {
  const std::vector<int> labels{1, 4, 2, 2, 3};
  const auto path = test::test_dir() + "/labels.csv";
  write_labels(path, labels);
  EXPECT_EQ(read_labels(path), labels);
}

TEST(TableFile, Layout) {
  Eigen::MatrixXd v(2, 2);
  v << 0.1, 2, -3e-20, 1e300;
  const auto path = test::test_dir() + "/table.csv";
  const std::vector<std::string> cols{"a", "b"};
  const std::vector<std::string> header{"h"};
  write_table(path, cols, v, header);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "# h\na,b\n0.1,2\n-3e-20,1e+300\n");
}
