#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tracemine/pipeline.hpp"
#include "tracemine/report.hpp"
#include "tracemine/synth.hpp"

using namespace tracemine;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("tracemine_report_" + tag);
  fs::remove_all(dir);
  return dir;
}

CorpusReport sample_report() {
  static fs::path dir = [] {
    fs::path d = temp_dir("sample");
    synth::generate_corpus(d, 6, 90, {1.0, 2.0, 1.0, 4.0}, 99);
    return d;
  }();
  return analyze_corpus(dir, {});
}

}  // namespace

TEST_CASE("round_sig keeps six significant digits") {
  CHECK(round_sig(1234567.0) == 1234570.0);
  CHECK(round_sig(0.123456789) == doctest::Approx(0.123457).epsilon(1e-12));
  CHECK(round_sig(0.0) == 0.0);
  CHECK(round_sig(-98.7654321) == doctest::Approx(-98.7654).epsilon(1e-12));
  CHECK(std::isnan(round_sig(std::numeric_limits<double>::quiet_NaN())));
}

TEST_CASE("report json round-trips losslessly") {
  CorpusReport report = sample_report();
  nlohmann::json j = report_to_json(report);
  CorpusReport reloaded = report_from_json(j);
  CHECK(report_to_json(reloaded) == j);
}

TEST_CASE("analyze output is deterministic across runs and thread counts") {
  fs::path dir = temp_dir("determinism");
  synth::generate_corpus(dir, 8, 100, {1.0, 3.0, 1.0, 5.0}, 4242);
  AnalyzeOptions serial;
  serial.jobs = 1;
  AnalyzeOptions parallel;
  parallel.jobs = 8;
  std::string a = report_to_json(analyze_corpus(dir, serial)).dump();
  std::string b = report_to_json(analyze_corpus(dir, parallel)).dump();
  std::string c = report_to_json(analyze_corpus(dir, serial)).dump();
  CHECK(a == b);
  CHECK(a == c);
  fs::remove_all(dir);
}

TEST_CASE("csv emission writes one file per table with headers") {
  CorpusReport report = sample_report();
  fs::path out = temp_dir("csv");
  write_report_files(report, out, ReportFormat::Csv);
  const char* files[] = {"run_metadata.csv",      "prevalence_density.csv",
                         "total_distribution.csv", "transitions.csv",
                         "subsequences.csv",       "segment_metrics.csv",
                         "exploration_selection.csv", "topology.csv",
                         "temporal_histogram.csv", "correlations.csv"};
  for (const char* name : files) {
    CAPTURE(name);
    fs::path path = out / name;
    REQUIRE(fs::exists(path));
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header.find(',') != std::string::npos);
  }
  {
    std::ifstream in(out / "prevalence_density.csv");
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 5);  // header + four patterns
  }
  fs::remove_all(out);
}

TEST_CASE("object emission writes report.json") {
  CorpusReport report = sample_report();
  fs::path out = temp_dir("obj");
  write_report_files(report, out, ReportFormat::Object);
  REQUIRE(fs::exists(out / "report.json"));
  std::ifstream in(out / "report.json");
  nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j == report_to_json(report));
  fs::remove_all(out);
}

TEST_CASE("summary renders the table sections") {
  CorpusReport report = sample_report();
  std::string summary = render_summary(report);
  for (const char* section :
       {"== Run ==", "== Prevalence & density ==", "== Instances per session ==",
        "== Block transitions ==", "== Frequent subsequences ==",
        "== Segment metrics (mean/median/std) ==", "== Exploration vs path selection ==",
        "== Tool topology ==", "== Temporal phase bins ==",
        "== Normalized-count correlations =="}) {
    CAPTURE(section);
    CHECK(summary.find(section) != std::string::npos);
  }
}

TEST_CASE("report internal consistency on a synthetic corpus") {
  CorpusReport report = sample_report();

  SUBCASE("transition proportions sum to one when present") {
    double total = 0.0;
    long count_total = 0;
    for (const auto& row : report.transitions) {
      total += row.proportion;
      count_total += row.count;
    }
    if (count_total > 0) CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("temporal rows with mass sum to one") {
    for (int p = 0; p < 4; ++p) {
      double row = 0.0;
      for (double v : report.temporal.bins[static_cast<std::size_t>(p)]) row += v;
      if (row > 0.0) CHECK(row == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  SUBCASE("prevalence arithmetic ties back to totals") {
    for (const auto& row : report.prevalence)
      CHECK(row.avg_per_session * static_cast<double>(report.run_metadata.session_count) ==
            doctest::Approx(static_cast<double>(row.total)).epsilon(1e-9));
  }
  SUBCASE("run metadata totals") {
    CHECK(report.run_metadata.session_count == 6);
    // context reset + 2 records per assistant step
    CHECK(report.run_metadata.total_steps == 6 * (1 + 2 * 90));
  }
}

TEST_CASE("thresholds file overrides detector configuration") {
  fs::path dir = temp_dir("thresholds");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "thresholds.json");
    out << R"({"p1_min_span_after_prune": 5, "p2_min_cont": 3})";
  }
  DetectorConfig config = load_thresholds(dir / "thresholds.json");
  CHECK(config.p1_min_span_after_prune == 5);
  CHECK(config.p2_min_cont == 3);
  CHECK(config.p2_min_span == 10);  // untouched default

  {
    std::ofstream out(dir / "bad.json");
    out << R"({"p9_bogus": 1})";
  }
  CHECK_THROWS(load_thresholds(dir / "bad.json"));
  fs::remove_all(dir);
}
