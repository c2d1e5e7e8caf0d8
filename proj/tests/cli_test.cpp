#include "commands.hpp"
#include "csv.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace rhoconcave::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rhoconcave_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  int call(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }

  static std::size_t data_rows(const std::string& file) {
    std::istringstream in(read_file(file));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) n += line.empty() ? 0 : 1;
    return n - 1;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

std::string normal_csv(std::size_t n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::string s = dim == 1 ? "x\n" : "x,y\n";
  for (std::size_t i = 0; i < n; ++i) {
    if (dim == 1) {
      s += std::to_string(z(rng)) + "\n";
    } else {
      const double a = z(rng);
      s += std::to_string(a) + "," + std::to_string(0.6 * a + 0.8 * z(rng)) + "\n";
    }
  }
  return s;
}

TEST(Csv, RoundTripsFifteenDigits) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  CsvData data;
  data.header = {"a", "b"};
  data.columns = 2;
  for (int i = 0; i < 200; ++i) data.rows.push_back({u(rng), u(rng) * 1e-12});
  const CsvData back = parse_csv(format_csv(data));
  ASSERT_EQ(back.header, data.header);
  ASSERT_EQ(back.rows.size(), data.rows.size());
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_NEAR(back.rows[i][j], data.rows[i][j], 1e-15 * std::abs(data.rows[i][j]));
    }
  }
}

TEST(Csv, HeaderlessAndBlankLines) {
  const CsvData d = parse_csv("1, 2\n\n +3,4.5\n");
  EXPECT_TRUE(d.header.empty());
  ASSERT_EQ(d.rows.size(), 2u);
  EXPECT_EQ(d.rows[1][0], 3.0);
  EXPECT_EQ(d.rows[1][1], 4.5);
}

TEST(Csv, MalformedInputNamesRowAndColumn) {
  auto message = [](std::string_view text) {
    try {
      parse_csv(text);
    } catch (const CsvError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_EQ(message(""), "input is empty");
  EXPECT_EQ(message("x,y\n1,2\n3\n"), "row 3: found 1 columns, expected 2");
  EXPECT_EQ(message("1,2\n3,abc\n"), "row 2, column 2: 'abc' is not a finite number");
  EXPECT_EQ(message("1\nnan\n"), "row 2, column 1: 'nan' is not a finite number");
  EXPECT_THROW(to_sample(parse_csv("1,2,3\n4,5,6\n")), CsvError);
  EXPECT_THROW(to_sample(parse_csv("1\n")), CsvError);
}

TEST_F(CliTest, Fit1DNormalizes) {
  write("n.csv", normal_csv(100, 1, 1));
  ASSERT_EQ(call({"fit", "--input", path("n.csv")}), kExitConverged) << err_.str();
  EXPECT_EQ(data_rows(path("n.tsv")), 301u);
  const auto j = nlohmann::json::parse(read_file(path("n.json")));
  EXPECT_EQ(j["status"], "converged");
  EXPECT_EQ(j["n"], 100);
  EXPECT_LE(std::abs(j["normalization"].get<double>() - 1.0), 1e-6);
  for (const char* key : {"alpha", "m", "gap", "mean_match_error", "min_cone_residual", "iterations",
                          "log_likelihood_term"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_FALSE(fs::exists(path("n_contours.tsv")));
}

TEST_F(CliTest, Fit2DWritesGridAndContours) {
  write("b.csv", normal_csv(200, 2, 2));
  const int code = call({"fit", "--input", path("b.csv"), "--alpha", "0.5", "--grid", "40x40", "--output-prefix",
                         path("out")});
  ASSERT_TRUE(code == kExitConverged || code == kExitNotConverged) << err_.str();
  EXPECT_EQ(data_rows(path("out.tsv")), 1600u);
  ASSERT_TRUE(fs::exists(path("out_contours.tsv")));
  EXPECT_GT(data_rows(path("out_contours.tsv")), 0u);
  const auto j = nlohmann::json::parse(read_file(path("out.json")));
  EXPECT_EQ(j["status"] == "converged", code == kExitConverged);
  EXPECT_EQ(j["m"], 1600);
}

TEST_F(CliTest, ContoursFromFitTable) {
  write("b.csv", normal_csv(150, 2, 3));
  ASSERT_NE(call({"fit", "--input", path("b.csv"), "--grid", "20"}), kExitInputError) << err_.str();
  ASSERT_EQ(call({"contours", "--input", path("b.tsv"), "--levels", "-3,-2,40", "--output-prefix", path("c")}),
            kExitConverged)
      << err_.str();
  EXPECT_NE(err_.str().find("warning: level 40"), std::string::npos);
  std::istringstream in(read_file(path("c_contours.tsv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "polyline_id\tlevel\tclosed\tx1\tx2");
  std::size_t points = 0;
  while (std::getline(in, line)) ++points;
  EXPECT_GT(points, 0u);
}

TEST_F(CliTest, InputErrorsExitWithOne) {
  write("empty.csv", "");
  EXPECT_EQ(call({"fit", "--input", path("empty.csv")}), kExitInputError);
  EXPECT_NE(err_.str().find("input is empty"), std::string::npos);
  write("bad.csv", "1,2\n3,x\n");
  EXPECT_EQ(call({"fit", "--input", path("bad.csv")}), kExitInputError);
  EXPECT_NE(err_.str().find("row 2, column 2"), std::string::npos);
  write("n.csv", normal_csv(30, 1, 5));
  EXPECT_EQ(call({"fit", "--input", path("n.csv"), "--alpha", "-1"}), kExitInputError);
  EXPECT_EQ(call({"fit", "--input", path("n.csv"), "--grid", "4x4"}), kExitInputError);
  EXPECT_EQ(call({"fit", "--input", path("missing.csv")}), kExitInputError);
  EXPECT_EQ(call({"fit"}), kExitInputError);
  EXPECT_EQ(call({"bogus"}), kExitInputError);
  EXPECT_EQ(call({"simulate", "--targets", "nosuch", "--sizes", "50,100"}), kExitInputError);
  EXPECT_EQ(call({"simulate", "--targets", "normal", "--sizes", "50", "--reps", "1"}), kExitInputError);
  EXPECT_EQ(call({"--help"}), kExitConverged);
}

TEST_F(CliTest, OutputsAreByteIdentical) {
  write("n.csv", normal_csv(120, 1, 6));
  ASSERT_EQ(call({"fit", "--input", path("n.csv"), "--alpha", "0.5", "--output-prefix", path("a")}), kExitConverged);
  ASSERT_EQ(call({"fit", "--input", path("n.csv"), "--alpha", "0.5", "--output-prefix", path("b")}), kExitConverged);
  EXPECT_EQ(read_file(path("a.tsv")), read_file(path("b.tsv")));
  EXPECT_EQ(read_file(path("a.json")), read_file(path("b.json")));
}

TEST_F(CliTest, SimulateTwoCells) {
  ASSERT_EQ(call({"simulate", "--targets", "normal", "--sizes", "50,100", "--reps", "2", "--alpha", "1",
                  "--output-prefix", path("s")}),
            kExitConverged)
      << err_.str();
  const std::string table = read_file(path("s_cells.tsv"));
  EXPECT_EQ(data_rows(path("s_cells.tsv")), 4u);
  EXPECT_EQ(table.substr(0, table.find('\n')), "target\tn\talpha\tmetric\tmean\tmedian\tfailures\treps");
  ASSERT_EQ(call({"simulate", "--targets", "normal", "--sizes", "50,100", "--reps", "2", "--alpha", "1",
                  "--threads", "2", "--output-prefix", path("t")}),
            kExitConverged);
  EXPECT_EQ(read_file(path("t_cells.tsv")), table);
}

TEST_F(CliTest, RatesFromSyntheticTable) {
  std::string table = "target\tn\talpha\tmetric\tmean\tmedian\tfailures\treps\n";
  for (const char* t : {"a", "b"}) {
    const double scale = t[0] == 'a' ? 1.0 : 3.0;
    for (int n : {50, 100, 200, 500, 1000}) {
      for (const char* m : {"hellinger", "l1"}) {
        const double v = scale * std::pow(n, -0.5);
        table += std::string(t) + "\t" + std::to_string(n) + "\t1\t" + m + "\t" + std::to_string(v) + "\t" +
                 std::to_string(v) + "\t0\t50\n";
      }
    }
  }
  write("cells.tsv", table);
  ASSERT_EQ(call({"simulate", "--table", path("cells.tsv"), "--rates", "--output-prefix", path("r")}),
            kExitConverged)
      << err_.str();
  std::istringstream in(read_file(path("r_rates.tsv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "alpha\tmetric\tstatistic\tbeta\tstd_err\tobservations");
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string alpha, metric, stat, beta;
    fields >> alpha >> metric >> stat >> beta;
    EXPECT_NEAR(std::stod(beta), -0.5, 1e-5) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 2);
}

}  // namespace
}  // namespace rhoconcave::cli
