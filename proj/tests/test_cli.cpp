#include "support.hpp"

#include "renal/cli.hpp"
#include "renal/dataset_prep.hpp"
#include "renal/slice_store.hpp"
#include "renal/shape_filter.hpp"
#include "renal/volume_io.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

using namespace renal;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

int run_cli(std::vector<std::string> args) { return renal::cli::run(args); }

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run_cli({}) == renal::cli::kExitUsage);
    CHECK(run_cli({"split", "--bogus"}) == renal::cli::kExitUsage);
    CHECK(run_cli({"nope"}) == renal::cli::kExitUsage);
    CHECK(run_cli({"--help"}) == renal::cli::kExitOk);
    CHECK(run_cli({"split", "--synthetic-count", "10", "--test-fraction", "1.5", "--out", "x.json"}) ==
          renal::cli::kExitUsage);
}

TEST_CASE("losses-check report") {
    const auto dir = testing::temp_dir("cli_losses");
    REQUIRE(run_cli({"losses-check", "--seed", "7", "--out", (dir / "l.json").string()}) == renal::cli::kExitOk);
    const auto j = nlohmann::json::parse(slurp(dir / "l.json"));
    CHECK(j["passed"] == true);
    CHECK(j["endpoints_exact"] == true);
    CHECK(j["max_relative_error"]["bce"].get<double>() < 1e-4);
    CHECK(j["max_relative_error"]["dice"].get<double>() < 1e-4);
    CHECK(j["max_relative_error"]["combined"].get<double>() < 1e-4);
    CHECK(j["max_composition_error"].get<double>() <= 1e-12);
}

TEST_CASE("split is deterministic and honours config files") {
    const auto dir = testing::temp_dir("cli_split");
    const auto a = dir / "a.json", b = dir / "b.json", c = dir / "c.json";
    REQUIRE(run_cli({"split", "--synthetic-count", "210", "--test-fraction", "0.1", "--seed", "5", "--out", a.string()}) ==
            0);
    REQUIRE(run_cli({"split", "--synthetic-count", "210", "--test-fraction", "0.1", "--seed", "5", "--jobs", "8", "--out",
                 b.string()}) == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(read_split(a).test_ids.size() == 21);

    spit(dir / "cfg.json", R"({"synthetic-count": 210, "test-fraction": 0.1, "seed": 99})");
    REQUIRE(run_cli({"split", "--config", (dir / "cfg.json").string(), "--seed", "5", "--out", c.string()}) == 0);
    CHECK(slurp(c) == slurp(a));

    spit(dir / "bad.json", R"({"synthetic-count": 210, "colour": "red"})");
    CHECK(run_cli({"split", "--config", (dir / "bad.json").string(), "--out", c.string()}) == renal::cli::kExitUsage);
    CHECK(run_cli({"split", "--config", (dir / "missing.json").string(), "--out", c.string()}) == renal::cli::kExitIo);

    spit(dir / "ids.txt", "x1\nx2\nx3\nx4\nx5\nx6\nx7\nx8\nx9\nx10\n");
    REQUIRE(run_cli({"split", "--manifest", (dir / "ids.txt").string(), "--test-fraction", "0.2", "--out", c.string()}) ==
            0);
    const auto s = read_split(c);
    CHECK(s.test_ids.size() == 2);
    CHECK(s.train_ids.size() == 8);
}

TEST_CASE("missing inputs are I/O errors") {
    const auto dir = testing::temp_dir("cli_missing");
    CHECK(run_cli({"postprocess", "--prob-kt", (dir / "no_kt.nii.gz").string(), "--prob-tumor",
               (dir / "no_t.nii.gz").string(), "--out", (dir / "o.nii.gz").string()}) == renal::cli::kExitIo);
    CHECK(run_cli({"split", "--manifest", (dir / "none.txt").string(), "--out", (dir / "s.json").string()}) ==
          renal::cli::kExitIo);
}

TEST_CASE("phantom-gen, postprocess, evaluate, slice-extract and fit-shape-stats") {
    const auto dir = testing::temp_dir("cli_flow");
    const auto data = dir / "data";
    REQUIRE(run_cli({"phantom-gen", "--seed", "100", "--count", "2", "--out-dir", data.string()}) == 0);
    const auto manifest = data / "manifest.txt";
    REQUIRE(fs::exists(manifest));
    CHECK(slurp(manifest) == "case_00000\ncase_00001\n");
    for (auto suffix : {"_imaging", "_segmentation", "_prob_kt", "_prob_tumor"})
        CHECK(fs::exists(data / (std::string("case_00000") + suffix + ".nii.gz")));

    SUBCASE("evaluate computes both columns") {
        const auto csv = dir / "report.csv";
        REQUIRE(run_cli({"evaluate", "--pred-dir", data.string(), "--gt-dir", data.string(), "--out", csv.string()}) == 0);
        std::istringstream lines(slurp(csv));
        std::string line;
        std::getline(lines, line);
        CHECK(line == "case_id,dice_kt_pre,dice_tumor_pre,dice_kt_post,dice_tumor_post");
        int rows = 0;
        while (std::getline(lines, line)) {
            ++rows;
            std::vector<double> v;
            std::istringstream cells(line);
            std::string cell;
            std::getline(cells, cell, ',');
            while (std::getline(cells, cell, ',')) v.push_back(std::stod(cell));
            REQUIRE(v.size() == 4);
            CHECK(v[2] > v[0]);
            CHECK(v[2] == 1.0);
            CHECK(v[3] == 1.0);
        }
        CHECK(rows == 2);
        const auto summary = nlohmann::json::parse(slurp(dir / "report.summary.json"));
        CHECK(summary["cases"] == 2);
    }

    SUBCASE("single and batch postprocess agree") {
        const auto single = dir / "single.nii.gz";
        REQUIRE(run_cli({"postprocess", "--prob-kt", (data / "case_00001_prob_kt.nii.gz").string(), "--prob-tumor",
                     (data / "case_00001_prob_tumor.nii.gz").string(), "--out", single.string()}) == 0);
        const auto out = dir / "batch";
        REQUIRE(run_cli({"postprocess", "--manifest", manifest.string(), "--input-dir", data.string(), "--out-dir",
                     out.string(), "--jobs", "2"}) == 0);
        const auto a = as_label_volume(read_volume(single));
        const auto b = as_label_volume(read_volume(out / "case_00001_prediction.nii.gz"));
        CHECK(a == b);
        CHECK(a == as_label_volume(read_volume(data / "case_00001_segmentation.nii.gz")));
    }

    SUBCASE("fit-shape-stats") {
        const auto stats = dir / "stats.json";
        REQUIRE(run_cli({"fit-shape-stats", "--labels-dir", data.string(), "--out", stats.string()}) == 0);
        const auto s = read_shape_stats(stats);
        CHECK(s.sample_count == 2);
        CHECK(s.ratio_lo <= s.ratio_hi);
        CHECK(s.ratio_lo > 1.8);
        CHECK(s.ratio_hi < 2.2);
    }

    SUBCASE("slice-extract") {
        const auto store = dir / "store";
        REQUIRE(run_cli({"slice-extract", "--data-dir", data.string(), "--manifest", manifest.string(), "--out-dir",
                     store.string()}) == 0);
        const auto rec = read_slice_record(store / "case_00000" / "z0050.json");
        CHECK(rec.case_id == "case_00000");
        CHECK(rec.slice_index == 50);
        CHECK(rec.image.height == 96);
        CHECK(rec.image.width == 112);
    }
}
