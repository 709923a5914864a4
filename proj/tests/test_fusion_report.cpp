#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ocpad/eval/det_export.hpp"
#include "ocpad/eval/fusion.hpp"
#include "ocpad/eval/report.hpp"

using namespace ocpad;
using namespace ocpad::eval;

namespace {

ScoreSet make(const std::vector<double>& bona, const std::vector<double>& attack) {
  ScoreSet s;
  for (std::size_t i = 0; i < bona.size(); ++i) s.records.push_back({"b" + std::to_string(i), Label::bonafide, "bonafide", bona[i]});
  for (std::size_t i = 0; i < attack.size(); ++i) s.records.push_back({"a" + std::to_string(i), Label::attack, "pai", attack[i]});
  return s;
}

}  // namespace

TEST(Normalization, MinMaxWithClamping) {
  const auto st = norm_stats(make({2.0, 4.0}, {6.0}));
  EXPECT_DOUBLE_EQ(st.min, 2.0);
  EXPECT_DOUBLE_EQ(st.max, 6.0);
  EXPECT_DOUBLE_EQ(normalize(3.0, st), 0.25);
  EXPECT_DOUBLE_EQ(normalize(-10.0, st), 0.0);
  EXPECT_DOUBLE_EQ(normalize(10.0, st), 1.0);
  EXPECT_DOUBLE_EQ(normalize(123.0, NormStats{1.0, 1.0}), 0.5);
  EXPECT_THROW(norm_stats(ScoreSet{}), ContractError);
}

TEST(Fusion, EndpointsReproduceNormalizedInputs) {
  const auto a = make({0.0, 1.0}, {2.0, 4.0});
  auto b = make({10.0, 30.0}, {20.0, 50.0});
  std::reverse(b.records.begin(), b.records.end());  // matched by id, not position
  const auto sa = norm_stats(a), sb = norm_stats(b);
  const auto f1 = fuse(a, b, 1.0, sa, sb).scores;
  const auto f0 = fuse(a, b, 0.0, sa, sb).scores;
  const auto fh = fuse(a, b, 0.5, sa, sb).scores;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(f1.records[i].sample_id, a.records[i].sample_id);
    EXPECT_DOUBLE_EQ(f1.records[i].score, normalize(a.records[i].score, sa));
  }
  EXPECT_DOUBLE_EQ(f0.records[0].score, 0.0);   // b0 = 10
  EXPECT_DOUBLE_EQ(f0.records[3].score, 1.0);   // a1 = 50
  EXPECT_DOUBLE_EQ(fh.records[2].score, 0.5 * 0.5 + 0.5 * 0.25);
}

TEST(Fusion, ComplementaryDetectorsBeatEitherAlone) {
  // a misses attack a0, b misses attack a1; the average separates both.
  const auto a = make({0.0, 0.1, 0.2}, {0.05, 1.0});
  const auto b = make({0.0, 0.1, 0.2}, {1.0, 0.05});
  const auto f = fuse(a, b, 0.5, norm_stats(a), norm_stats(b));
  EXPECT_GT(d_eer(a).eer, 0.0);
  EXPECT_GT(d_eer(b).eer, 0.0);
  EXPECT_DOUBLE_EQ(d_eer(f.scores).eer, 0.0);
}

TEST(Fusion, RejectsMismatchedInputs) {
  const auto a = make({0.0}, {1.0});
  auto b = a;
  b.records[1].sample_id = "other";
  EXPECT_THROW(fuse(a, b, 0.5, norm_stats(a), norm_stats(b)), ContractError);
  EXPECT_THROW(fuse(a, make({0.0, 1.0}, {1.0}), 0.5, norm_stats(a), norm_stats(a)), ContractError);
  b = a;
  b.records[1].label = Label::bonafide;
  EXPECT_THROW(fuse(a, b, 0.5, norm_stats(a), norm_stats(b)), ContractError);
  EXPECT_THROW(fuse(a, a, 1.5, norm_stats(a), norm_stats(a)), UsageError);
  const auto d = fuse(a, a, 0.3, NormStats{2.0, 2.0}, norm_stats(a));
  EXPECT_TRUE(d.degenerate_a);
  EXPECT_FALSE(d.degenerate_b);
}

TEST(ScoreCsv, RoundTripsDoublesExactly) {
  auto s = make({0.1, 1.0 / 3.0, 1e-300}, {std::nextafter(1.0, 2.0), 12345.678901234567});
  const auto path = std::filesystem::temp_directory_path() / "ocpad_scores_test.csv";
  write_scores_csv(s, path);
  EXPECT_EQ(read_scores_csv(path), s);
  {
    std::ofstream out(path);
    out << "id,score\nx,1\n";
  }
  EXPECT_THROW(read_scores_csv(path), FormatError);
  {
    std::ofstream out(path);
    out << "sample_id,label,species,score\nx,attack,pai,abc\n";
  }
  EXPECT_THROW(read_scores_csv(path), FormatError);
  {
    std::ofstream out(path);
    out << "sample_id,label,species,score\nx,fake,pai,1\n";
  }
  EXPECT_THROW(read_scores_csv(path), FormatError);
  std::filesystem::remove(path);
  EXPECT_THROW(read_scores_csv(path), IoError);
  s.records[0].sample_id = "a,b";
  std::ostringstream os;
  EXPECT_THROW(write_scores_csv(s, os), ContractError);
}

TEST(ScoreSet, ValidationCatchesDuplicatesAndNonFinite) {
  auto s = make({0.0}, {1.0});
  EXPECT_NO_THROW(s.validate());
  s.records[1].sample_id = "b0";
  EXPECT_THROW(s.validate(), ContractError);
  s = make({0.0}, {NAN});
  EXPECT_THROW(s.validate(), NumericError);
  EXPECT_THROW(make({0.0}, {}).validate(), ContractError);
}

TEST(Report, CollectsHeadlineMetrics) {
  const auto s = make({0.1, 0.2, 0.3, 0.4}, {0.35, 0.5, 0.6, 0.7});
  const auto r = make_report(s);
  EXPECT_EQ(r.bonafide, 4u);
  EXPECT_EQ(r.attacks, 4u);
  EXPECT_DOUBLE_EQ(r.eer.eer, 0.25);
  ASSERT_EQ(r.operating_points.size(), 3u);
  for (const auto& op : r.operating_points) {
    EXPECT_DOUBLE_EQ(op.point.apcer, 0.25);  // BPCER 0 first reached at t = 0.5
    EXPECT_EQ(op.worst_species, "pai");
  }
  const auto j = to_json(r);
  EXPECT_DOUBLE_EQ(j["d_eer"].get<double>(), 0.25);
  EXPECT_DOUBLE_EQ(j["pauc20_percent"].get<double>(), 100.0 * r.pauc20);
  EXPECT_EQ(j["apcer_at_bpcer"].size(), 3u);
  EXPECT_EQ(j["species_apcer_at_d_eer"]["pai"].get<double>(), 0.25);
  EXPECT_EQ(threshold_json(kInf), "inf");
}

TEST(DetExport, CsvAndSvg) {
  const auto c = det_curve(make({0.1, 0.2}, {0.3}));
  std::ostringstream os;
  write_det_csv(c, os);
  const std::string csv = os.str();
  EXPECT_EQ(csv.rfind("threshold,apcer,bpcer\n-inf,0,1\n", 0), 0u);
  EXPECT_NE(csv.find("inf,1,0\n"), std::string::npos);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), c.points.size() + 1);
  const auto svg = det_svg({{"one", &c}, {"two", &c}});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  std::size_t lines = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++lines;
  EXPECT_EQ(lines, 2u);
  EXPECT_NE(svg.find(">two<"), std::string::npos);
}
