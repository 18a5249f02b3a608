// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "support.hpp"

#include "renal/cli.hpp"
#include "renal/losses.hpp"
#include "renal/metrics.hpp"
#include "renal/morphology.hpp"
#include "renal/phantom.hpp"
#include "renal/pipeline.hpp"
#include "renal/shape_filter.hpp"
#include "renal/slice_store.hpp"
#include "renal/volume_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>

using namespace renal;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void criterion(const char* id, const char* title, double budget_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = budget_s <= 0 || secs < budget_s;
    const bool ok = o.passed && in_time;
    if (!ok) ++failures;
    std::string timing = fmt("%.2f s", secs);
    if (budget_s > 0) timing += fmt(" (< %g s)", budget_s);
    std::printf("[%s] %s %s: %s; %s\n", ok ? "PASS" : "FAIL", id, title, o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
}

struct Pair {
    std::vector<double> pred;
    std::vector<double> target;
};

std::vector<Pair> random_pairs(std::uint64_t seed, std::size_t count, std::size_t n) {
    Xoshiro256 rng(seed);
    std::vector<Pair> out(count);
    for (auto& p : out) {
        p.pred.resize(n);
        p.target.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            p.pred[i] = rng.uniform(0.01, 0.99);
            p.target[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
        }
    }
    return out;
}

// Direct formulas, written out independently of the library.
double oracle_bce(const std::vector<double>& p, const std::vector<double>& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s -= t[i] * std::log(p[i]) + (1.0 - t[i]) * std::log(1.0 - p[i]);
    return s / static_cast<double>(p.size());
}

double oracle_dice(const std::vector<double>& p, const std::vector<double>& t, double eps) {
    double inter = 0.0, sp = 0.0, st = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        inter += p[i] * t[i];
        sp += p[i];
        st += t[i];
    }
    return 1.0 - (2.0 * inter + eps) / (sp + st + eps);
}

Outcome ac1() {
    const LossConfig base;
    double worst = 0.0;
    bool endpoints = true;
    for (const auto& p : random_pairs(101, 100, 64)) {
        const PredictionPair pair{p.pred, p.target};
        const double b = bce(pair, base.clamp).value;
        const double d = dice_loss(pair, base.epsilon).value;
        LossConfig half = base;
        half.lambda = 0.5;
        worst = std::max(worst, std::abs(combined_loss(pair, half).value - (0.5 * b + 0.5 * d)));
        LossConfig zero = base, one = base;
        zero.lambda = 0.0;
        one.lambda = 1.0;
        endpoints = endpoints && combined_loss(pair, zero).value == b && combined_loss(pair, one).value == d;
    }
    return {worst <= 1e-12 && endpoints,
            fmt("max |combined - (0.5 BCE + 0.5 DICE)| = %.3g (<= 1e-12), endpoints %s", worst,
                endpoints ? "exact" : "NOT exact")};
}

Outcome ac2() {
    const LossConfig cfg;
    const double h = 1e-6;
    double worst_b = 0.0, worst_d = 0.0, worst_c = 0.0, worst_value = 0.0;
    for (const auto& p : random_pairs(202, 100, 64)) {
        const PredictionPair pair{p.pred, p.target};
        const auto b = bce(pair, cfg.clamp);
        const auto d = dice_loss(pair, cfg.epsilon);
        const auto c = combined_loss(pair, cfg);
        const double ob = oracle_bce(p.pred, p.target);
        const double od = oracle_dice(p.pred, p.target, cfg.epsilon);
        worst_value = std::max({worst_value, testing::relative_error(b.value, ob), testing::relative_error(d.value, od)});

        auto fb = [&](const std::vector<double>& x) { return oracle_bce(x, p.target); };
        auto fd = [&](const std::vector<double>& x) { return oracle_dice(x, p.target, cfg.epsilon); };
        auto fc = [&](const std::vector<double>& x) {
            return (1.0 - cfg.lambda) * oracle_bce(x, p.target) + cfg.lambda * oracle_dice(x, p.target, cfg.epsilon);
        };
        for (std::size_t i = 0; i < p.pred.size(); ++i) {
            worst_b = std::max(worst_b, testing::relative_error(b.grad[i], testing::central_difference(fb, p.pred, i, h)));
            worst_d = std::max(worst_d, testing::relative_error(d.grad[i], testing::central_difference(fd, p.pred, i, h)));
            worst_c = std::max(worst_c, testing::relative_error(c.grad[i], testing::central_difference(fc, p.pred, i, h)));
        }
    }
    const bool ok = worst_b < 1e-4 && worst_d < 1e-4 && worst_c < 1e-4 && worst_value < 1e-12;
    return {ok, fmt("max rel err BCE %.2e, DICE %.2e, combined %.2e (< 1e-4); loss values vs direct formula %.1e",
                    worst_b, worst_d, worst_c, worst_value)};
}

std::set<std::vector<std::size_t>> table_partition(const ComponentTable& t) {
    std::set<std::vector<std::size_t>> out;
    for (const auto& c : t.components) out.insert(c.voxels);
    return out;
}

Outcome ac3() {
    Xoshiro256 rng(303);
    const VolumeGeometry g{{16, 16, 16}, {1, 1, 1}};
    int mismatches = 0;
    for (int t = 0; t < 100; ++t) {
        const auto m = testing::random_mask(g, 0.3, rng);
        for (int conn : {6, 26}) {
            const auto table = label_components(m, connectivity_from_int(conn));
            if (table_partition(table) != testing::partition_of(testing::bfs_labels(g, m.bits, 1, conn))) ++mismatches;
        }
    }
    return {mismatches == 0, fmt("%d/200 partitions differ from BFS oracle", mismatches)};
}

Outcome ac4() {
    Xoshiro256 rng(404);
    const VolumeGeometry g{{32, 32, 32}, {1, 1, 1}};
    int enclosed = 0, not_superset = 0, not_idempotent = 0, inputs_with_holes = 0;
    for (int t = 0; t < 50; ++t) {
        const auto m = testing::random_blobs_with_cavities(g, rng);
        if (testing::enclosed_background_components(m) > 0) ++inputs_with_holes;
        const auto f = fill_holes(m);
        enclosed += testing::enclosed_background_components(f);
        for (std::size_t n = 0; n < m.bits.size(); ++n)
            if (m.bits[n] && !f.bits[n]) {
                ++not_superset;
                break;
            }
        if (!(fill_holes(f) == f)) ++not_idempotent;
    }
    const bool ok = enclosed == 0 && not_superset == 0 && not_idempotent == 0 && inputs_with_holes > 0;
    return {ok, fmt("%d/50 inputs had cavities; enclosed background after fill %d, non-superset %d, "
                    "non-idempotent %d",
                    inputs_with_holes, enclosed, not_superset, not_idempotent)};
}

Outcome ac5() {
    const VolumeGeometry g{{61, 41, 41}, {1, 1, 1}};
    const ShapeStats range;
    const std::array<double, 3> majors{10, 15, 20};
    const std::array<double, 3> expected{1.00, 2.25, 4.00};
    bool ok = true;
    std::string detail;
    for (int e = 0; e < 3; ++e) {
        const double a = majors[e];
        const auto voxels = testing::ellipsoid_voxels(g, {30, 20, 20}, {a, 10, 10});
        const auto m = covariance_eigenvalues(voxels, g);
        const auto oracle = testing::closed_form_eigenvalues(testing::voxel_covariance(voxels, g));
        const double continuum_l1 = a * a / 5.0;
        const double continuum_l2 = 100.0 / 5.0;
        const double ratio = m.shape.ratio;
        const double err_ratio = std::abs(ratio - expected[e]) / expected[e];
        const double err_l1 = std::abs(m.shape.eigenvalues[0] - continuum_l1) / continuum_l1;
        const double err_l2 = std::abs(m.shape.eigenvalues[1] - continuum_l2) / continuum_l2;
        const double err_oracle = std::abs(ratio - oracle[0] / oracle[1]) / ratio;
        const bool inside = ratio >= range.ratio_lo && ratio <= range.ratio_hi;
        const bool want_inside = e == 1;
        ok = ok && m.status == ShapeStatus::ok && err_ratio < 0.05 && err_l1 < 0.05 && err_l2 < 0.05 &&
             err_oracle < 1e-6 && inside == want_inside;
        detail += fmt("%s(%g,10,10) ratio %.4f [%s]", e ? "; " : "", a, ratio, inside ? "in range" : "out of range");
    }
    return {ok, detail + " (within 5% of a^2/5 continuum)"};
}

Outcome ac6() {
    std::vector<double> ratios;
    for (int i = 0; i <= 9; ++i) ratios.push_back(1.0 + 0.2 * i);
    const auto fitted = fit_ratio_range(ratios, 5, 95);

    auto sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    auto oracle = [&](double p) {
        const double pos = (static_cast<double>(sorted.size()) - 1.0) * p / 100.0;
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        if (lo + 1 >= sorted.size()) return sorted.back();
        return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
    };
    const ShapeStats defaults;
    const bool ok = fitted.ratio_lo == oracle(5) && fitted.ratio_hi == oracle(95) &&
                    std::abs(fitted.ratio_lo - 1.09) < 1e-12 && std::abs(fitted.ratio_hi - 2.71) < 1e-12 &&
                    defaults.ratio_lo == 1.07 && defaults.ratio_hi == 2.8;
    return {ok, fmt("fit = (%.17g, %.17g), oracle = (%.17g, %.17g); default range (%g, %g)", fitted.ratio_lo,
                    fitted.ratio_hi, oracle(5), oracle(95), defaults.ratio_lo, defaults.ratio_hi)};
}

struct PhantomRun {
    Phantom phantom;
    LabelVolume post;
};

std::vector<PhantomRun>& phantom_runs() {
    static std::vector<PhantomRun> runs;
    return runs;
}

Outcome ac7() {
    auto& runs = phantom_runs();
    runs.clear();
    const FilterConfig cfg;
    int count_ok = 0, shape_ok = 0, dice_up = 0, sphere_gone = 0, layout_ok = 0;
    double min_gain = 1.0;
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        PhantomSpec spec;
        spec.seed = 1000 + seed;
        auto ph = generate_phantom(spec);
        const auto& art = ph.artifacts;
        if (art.spurious_blobs.size() == 3 && !art.cavity.empty() && !art.sphere_fp.empty() &&
            !art.outside_blob.empty())
            ++layout_ok;

        const auto post = postprocess_case(ph.pred, cfg);
        const auto raw = raw_prediction(ph.pred, cfg.prob_threshold);

        const auto kt = kidney_tumor_mask(post);
        if (testing::partition_of(testing::bfs_labels(kt.geometry, kt.bits, 1, 26)).size() == 2) ++count_ok;

        const auto tumor = tumor_mask(post);
        const auto tumor_parts = testing::partition_of(testing::bfs_labels(tumor.geometry, tumor.bits, 1, 26));
        bool all_in = true;
        for (const auto& voxels : tumor_parts) {
            const auto ev = testing::closed_form_eigenvalues(testing::voxel_covariance(voxels, tumor.geometry));
            const double ratio = ev[0] / ev[1];
            std::size_t inside = 0;
            for (auto v : voxels) inside += kt.bits[v] ? 1 : 0;
            const double overlap = static_cast<double>(inside) / static_cast<double>(voxels.size());
            all_in = all_in && ratio >= cfg.stats.ratio_lo && ratio <= cfg.stats.ratio_hi &&
                     overlap >= cfg.overlap_threshold;
        }
        if (all_in) ++shape_ok;

        const double pre = evaluate_case("p", raw, ph.gt).dice_kt;
        const double after = evaluate_case("p", post, ph.gt).dice_kt;
        if (after > pre) ++dice_up;
        min_gain = std::min(min_gain, after - pre);

        bool removed = true;
        for (auto v : art.sphere_fp) removed = removed && post.labels[v] != 2;
        if (removed) ++sphere_gone;

        runs.push_back({std::move(ph), post});
    }
    const bool ok = layout_ok == 25 && count_ok == 25 && shape_ok == 25 && dice_up == 25 && sphere_gone == 25;
    return {ok, fmt("artifacts planted %d/25; (a) 2 kt components %d/25; (b) tumors in range with overlap >= 0.95 "
                    "%d/25; (c) dice_kt increased %d/25 (min gain %.4f); (d) sphere FP removed %d/25",
                    layout_ok, count_ok, shape_ok, dice_up, min_gain, sphere_gone)};
}

Outcome ac8() {
    const auto& runs = phantom_runs();
    if (runs.size() != 25) return {false, "phantom runs from AC7 unavailable"};
    int identical = 0;
    for (const auto& r : runs)
        if (postprocess_case(harden(r.post), FilterConfig{}) == r.post) ++identical;
    return {identical == 25, fmt("postprocess(harden(out)) == out on %d/25 phantoms", identical)};
}

bool same_bits(const SampleArray& a, const SampleArray& b) {
    if (a.index() != b.index()) return false;
    return std::visit(
        [&](const auto& va) {
            const auto& vb = std::get<std::decay_t<decltype(va)>>(b);
            return va.size() == vb.size() &&
                   (va.empty() || std::memcmp(va.data(), vb.data(), va.size() * sizeof(va[0])) == 0);
        },
        a);
}

// Spacing is stored as float32 on disk.
double random_spacing(Xoshiro256& rng) { return static_cast<float>(rng.uniform(0.3, 3.0)); }

Outcome ac9() {
    Xoshiro256 rng(909);
    const auto dir = testing::temp_dir("acceptance_io");
    int checked = 0, exact = 0;
    for (int t = 0; t < 10; ++t) {
        VolumeGeometry g{{static_cast<std::int64_t>(1 + rng.uniform_index(24)),
                          static_cast<std::int64_t>(1 + rng.uniform_index(24)),
                          static_cast<std::int64_t>(1 + rng.uniform_index(24))},
                         {random_spacing(rng), random_spacing(rng), random_spacing(rng)}};
        const auto n = g.voxel_count();
        std::vector<RawVolume> volumes;
        std::vector<std::uint8_t> u8(n);
        std::vector<std::int16_t> i16(n);
        std::vector<float> f32(n);
        for (auto& v : u8) v = static_cast<std::uint8_t>(rng.next());
        for (auto& v : i16) v = static_cast<std::int16_t>(static_cast<std::uint16_t>(rng.next()));
        for (auto& v : f32) {
            const auto bits = static_cast<std::uint32_t>(rng.next());
            std::memcpy(&v, &bits, sizeof v);
        }
        volumes.push_back({g, u8});
        volumes.push_back({g, i16});
        volumes.push_back({g, f32});
        for (const auto& vol : volumes) {
            for (const char* ext : {".nii", ".nii.gz"}) {
                const auto path = dir / (fmt("v%d_%zu", t, vol.samples.index()) + ext);
                write_volume(vol, path);
                const auto back = read_volume(path);
                ++checked;
                if (back.geometry == vol.geometry && same_bits(back.samples, vol.samples)) ++exact;
            }
        }
    }
    return {checked == 60 && exact == 60, fmt("%d/%d round trips bit-exact (uint8/int16/float32 x plain/gzip)",
                                              exact, checked)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome ac10() {
    const auto dir = testing::temp_dir("acceptance_split");
    auto run_split = [&](const char* name, const char* jobs) {
        const auto out = dir / name;
        const int rc = cli::run(std::vector<std::string>{"split", "--synthetic-count", "210", "--test-fraction", "0.1",
                                                         "--seed", "2019", "--jobs", jobs, "--out", out.string()});
        if (rc != 0) throw std::runtime_error(fmt("split exited with %d", rc));
        return out;
    };
    const auto a = run_split("a.json", "1");
    const auto b = run_split("b.json", "1");
    const auto c = run_split("c.json", "8");
    const auto split = read_split(a);
    const bool same = slurp(a) == slurp(b) && slurp(a) == slurp(c);
    return {split.test_ids.size() == 21 && split.train_ids.size() == 189 && same,
            fmt("%zu test / %zu train ids; runs %s", split.test_ids.size(), split.train_ids.size(),
                same ? "identical (jobs 1, 1, 8)" : "DIFFER")};
}

}  // namespace

int main() {
    criterion("AC1", "loss composition", 1, ac1);
    criterion("AC2", "loss gradients vs finite differences", 5, ac2);
    criterion("AC3", "connected components vs BFS", 10, ac3);
    criterion("AC4", "hole filling", 10, ac4);
    criterion("AC5", "ellipsoid elongation ratios", 5, ac5);
    criterion("AC6", "percentile fit", 0, ac6);
    criterion("AC7", "end-to-end phantoms", 60, ac7);
    criterion("AC8", "postprocess idempotence", 0, ac8);
    criterion("AC9", "NIfTI round trip", 0, ac9);
    criterion("AC10", "split determinism", 0, ac10);
    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
