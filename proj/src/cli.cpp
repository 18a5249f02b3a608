#include "renal/cli.hpp"

#include "renal/dataset_prep.hpp"
#include "renal/errors.hpp"
#include "renal/losses.hpp"
#include "renal/metrics.hpp"
#include "renal/phantom.hpp"
#include "renal/pipeline.hpp"
#include "renal/rng.hpp"
#include "renal/shape_filter.hpp"
#include "renal/slice_store.hpp"
#include "renal/volume_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace renal::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::mutex log_mutex;

void log(const std::string& message) {
    const std::lock_guard lock(log_mutex);
    std::cerr << "[renalseg] " << message << '\n';
}

/// Runs fn(0..count-1) on up to `jobs` threads. The first failure by index is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

void ensure_directory(const fs::path& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void ensure_parent(const fs::path& file) { ensure_directory(file.parent_path()); }

void require_file(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw IoError("input file not found: " + path.string());
}

void require_directory(const fs::path& path) {
    if (!fs::is_directory(path)) throw IoError("input directory not found: " + path.string());
}

std::vector<std::string> read_manifest(const fs::path& path) {
    require_file(path);
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        ids.push_back(line.substr(first, last - first + 1));
    }
    return ids;
}

/// `<dir>/<id><suffix>.nii.gz`, falling back to `.nii`.
std::optional<fs::path> find_case_file(const fs::path& dir, const std::string& id, const std::string& suffix) {
    for (const char* ext : {".nii.gz", ".nii"}) {
        fs::path p = dir / (id + suffix + ext);
        if (fs::is_regular_file(p)) return p;
    }
    return std::nullopt;
}

fs::path require_case_file(const fs::path& dir, const std::string& id, const std::string& suffix) {
    auto p = find_case_file(dir, id, suffix);
    if (!p) throw IoError("missing " + (dir / (id + suffix + ".nii[.gz]")).string());
    return *p;
}

/// Case ids of every `<id>_segmentation.nii[.gz]` in `dir`, sorted.
std::vector<std::string> scan_segmentations(const fs::path& dir) {
    require_directory(dir);
    std::vector<std::string> ids;
    const std::string marker = "_segmentation.nii";
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        const auto pos = name.rfind(marker);
        if (pos == std::string::npos) continue;
        const std::string tail = name.substr(pos + marker.size());
        if (tail.empty() || tail == ".gz") ids.push_back(name.substr(0, pos));
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// -- shared filter options ---------------------------------------------------

struct FilterOptions {
    std::string stats_path;
    int connectivity = 26;
    std::string hole_fill = "3d";
    double overlap_threshold = 0.95;
    std::size_t min_voxels = 20;
    double prob_threshold = 0.5;
    bool voxel_coordinates = false;

    void add_to(CLI::App* sub, bool with_stats = true) {
        if (with_stats) {
            sub->add_option("--stats", stats_path, "ShapeStats JSON (default: ratio range 1.07-2.8)");
        }
        sub->add_option("--fg-connectivity", connectivity, "Foreground connectivity")
            ->check(CLI::IsMember({6, 18, 26}));
        sub->add_option("--hole-fill", hole_fill, "Hole filling mode")->check(CLI::IsMember({"3d", "off"}));
        sub->add_option("--overlap-threshold", overlap_threshold, "Minimum tumor overlap with kidney+tumor")
            ->check(CLI::Range(0.0, 1.0));
        sub->add_option("--min-voxels", min_voxels, "Smallest tumor component that is measured");
        sub->add_option("--prob-threshold", prob_threshold, "Binarization threshold");
        sub->add_flag("--voxel-coordinates", voxel_coordinates, "Measure shape in voxel instead of mm coordinates");
    }

    FilterConfig build() const {
        FilterConfig cfg;
        if (!stats_path.empty()) {
            require_file(stats_path);
            cfg.stats = read_shape_stats(stats_path);
        }
        cfg.connectivity = connectivity_from_int(connectivity);
        cfg.fill_holes = hole_fill == "3d";
        cfg.overlap_threshold = overlap_threshold;
        cfg.min_component_voxels = min_voxels;
        cfg.prob_threshold = prob_threshold;
        cfg.frame = voxel_coordinates ? CoordinateFrame::voxel : CoordinateFrame::physical;
        cfg.validate();
        return cfg;
    }
};

CasePrediction load_prediction(const fs::path& prob_kt, const fs::path& prob_tumor) {
    CasePrediction pred{as_probability_volume(read_volume(prob_kt)), as_probability_volume(read_volume(prob_tumor))};
    require_same_geometry(pred.prob_kt.geometry, pred.prob_tumor.geometry, prob_kt.string().c_str());
    return pred;
}

// -- slice-extract -----------------------------------------------------------

struct SliceExtractArgs {
    std::string imaging;
    std::string segmentation;
    std::string case_id;
    std::string data_dir;
    std::string manifest;
    std::string out_dir;
    std::string model = "none";
    std::string lower_half_mode = "rows";
    std::size_t jobs = 1;
};

int run_slice_extract(const SliceExtractArgs& a) {
    struct Job {
        std::string id;
        fs::path imaging;
        fs::path segmentation;
    };
    std::vector<Job> jobs;
    if (!a.manifest.empty()) {
        if (a.data_dir.empty()) throw UsageError("--manifest requires --data-dir");
        for (const auto& id : read_manifest(a.manifest)) {
            jobs.push_back({id, require_case_file(a.data_dir, id, "_imaging"),
                            require_case_file(a.data_dir, id, "_segmentation")});
        }
    } else {
        if (a.imaging.empty() || a.segmentation.empty() || a.case_id.empty()) {
            throw UsageError("need --imaging, --segmentation and --case-id, or --data-dir with --manifest");
        }
        require_file(a.imaging);
        require_file(a.segmentation);
        jobs.push_back({a.case_id, a.imaging, a.segmentation});
    }
    ensure_directory(a.out_dir);

    const LowerHalfMode mode = a.lower_half_mode == "rows" ? LowerHalfMode::rows : LowerHalfMode::volume_z;
    std::vector<std::size_t> written(jobs.size());
    parallel_for(jobs.size(), a.jobs, [&](std::size_t i) {
        const auto& job = jobs[i];
        const ImageVolume image = as_image_volume(read_volume(job.imaging));
        const LabelVolume labels = as_label_volume(read_volume(job.segmentation));
        auto records = extract_slices(job.id, image, labels);
        if (a.model == "kidney") {
            records = prepare_model_samples(records, ModelTarget::kidney_model, mode, labels.geometry.dims[2]);
        } else if (a.model == "tumor") {
            records = prepare_model_samples(records, ModelTarget::tumor_model, mode, labels.geometry.dims[2]);
        }
        written[i] = write_slice_store(a.out_dir, records).size();
        log(job.id + ": " + std::to_string(written[i]) + " slices");
    });
    return kExitOk;
}

// -- split -------------------------------------------------------------------

struct SplitArgs {
    std::string manifest;
    std::size_t synthetic_count = 0;
    double test_fraction = 0.1;
    std::uint64_t seed = 42;
    std::optional<std::size_t> test_count;
    std::string out;
    std::size_t jobs = 1;
};

int run_split(const SplitArgs& a) {
    std::vector<std::string> ids;
    if (!a.manifest.empty()) {
        ids = read_manifest(a.manifest);
    } else if (a.synthetic_count > 0) {
        for (std::size_t i = 0; i < a.synthetic_count; ++i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "case_%05zu", i);
            ids.emplace_back(buf);
        }
    } else {
        throw UsageError("need --manifest or --synthetic-count");
    }
    ensure_parent(a.out);
    const CaseSplit split = split_cases(ids, a.test_fraction, a.seed, a.test_count);
    write_split(a.out, split);
    log("split seed=" + std::to_string(a.seed) + ": " + std::to_string(split.train_ids.size()) + " train, " +
        std::to_string(split.test_ids.size()) + " test");
    return kExitOk;
}

// -- fit-shape-stats ---------------------------------------------------------

struct FitArgs {
    std::string labels_dir;
    std::string manifest;
    std::string out;
    double p_lo = 5.0;
    double p_hi = 95.0;
    FilterOptions filter;
    std::size_t jobs = 1;
};

int run_fit_shape_stats(const FitArgs& a) {
    require_directory(a.labels_dir);
    const auto ids = a.manifest.empty() ? scan_segmentations(a.labels_dir) : read_manifest(a.manifest);
    std::vector<fs::path> paths;
    for (const auto& id : ids) paths.push_back(require_case_file(a.labels_dir, id, "_segmentation"));
    const FilterConfig cfg = a.filter.build();
    ensure_parent(a.out);

    std::vector<std::vector<double>> per_case(ids.size());
    parallel_for(ids.size(), a.jobs, [&](std::size_t i) {
        per_case[i] = tumor_ratios(as_label_volume(read_volume(paths[i])), cfg);
    });
    std::vector<double> ratios;
    for (const auto& r : per_case) ratios.insert(ratios.end(), r.begin(), r.end());

    const ShapeStats stats = fit_ratio_range(ratios, a.p_lo, a.p_hi);
    write_shape_stats(a.out, stats);
    log("fitted ratio range [" + format_double(stats.ratio_lo) + ", " + format_double(stats.ratio_hi) + "] from " +
        std::to_string(stats.sample_count) + " tumors in " + std::to_string(ids.size()) + " cases");
    return kExitOk;
}

// -- postprocess -------------------------------------------------------------

struct PostprocessArgs {
    std::string prob_kt;
    std::string prob_tumor;
    std::string out;
    std::string manifest;
    std::string input_dir;
    std::string out_dir;
    FilterOptions filter;
    std::size_t jobs = 1;
};

std::string describe_candidates(const std::vector<TumorCandidate>& cands) {
    std::size_t kept = 0;
    for (const auto& c : cands) kept += c.kept;
    return std::to_string(kept) + "/" + std::to_string(cands.size()) + " tumor components kept";
}

int run_postprocess(const PostprocessArgs& a) {
    struct Job {
        std::string id;
        fs::path prob_kt;
        fs::path prob_tumor;
        fs::path out;
    };
    std::vector<Job> jobs;
    if (!a.manifest.empty()) {
        if (a.input_dir.empty() || a.out_dir.empty()) throw UsageError("--manifest requires --input-dir and --out-dir");
        for (const auto& id : read_manifest(a.manifest)) {
            jobs.push_back({id, require_case_file(a.input_dir, id, "_prob_kt"),
                            require_case_file(a.input_dir, id, "_prob_tumor"),
                            fs::path(a.out_dir) / (id + "_prediction.nii.gz")});
        }
        ensure_directory(a.out_dir);
    } else {
        if (a.prob_kt.empty() || a.prob_tumor.empty() || a.out.empty()) {
            throw UsageError("need --prob-kt, --prob-tumor and --out, or --manifest with --input-dir and --out-dir");
        }
        require_file(a.prob_kt);
        require_file(a.prob_tumor);
        ensure_parent(a.out);
        jobs.push_back({fs::path(a.prob_kt).filename().string(), a.prob_kt, a.prob_tumor, a.out});
    }
    const FilterConfig cfg = a.filter.build();

    parallel_for(jobs.size(), a.jobs, [&](std::size_t i) {
        const auto& job = jobs[i];
        PostprocessTrace trace;
        const LabelVolume labels = postprocess_case(load_prediction(job.prob_kt, job.prob_tumor), cfg, &trace);
        write_volume(to_raw(labels), job.out);
        log(job.id + ": " + describe_candidates(trace.tumor_candidates));
    });
    return kExitOk;
}

// -- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
    std::string pred_dir;
    std::string gt_dir;
    std::string out;
    std::string summary;
    std::string manifest;
    FilterOptions filter;
    std::size_t jobs = 1;
};

int run_evaluate(const EvaluateArgs& a) {
    require_directory(a.pred_dir);
    require_directory(a.gt_dir);
    const auto ids = a.manifest.empty() ? scan_segmentations(a.gt_dir) : read_manifest(a.manifest);
    if (ids.empty()) throw ValidationError("no cases found in " + a.gt_dir);
    const FilterConfig cfg = a.filter.build();
    ensure_parent(a.out);
    fs::path summary = a.summary;
    if (summary.empty()) summary = fs::path(a.out).replace_extension(".summary.json");
    ensure_parent(summary);

    std::vector<ReportRow> rows(ids.size());
    parallel_for(ids.size(), a.jobs, [&](std::size_t i) {
        const auto& id = ids[i];
        const LabelVolume gt = as_label_volume(read_volume(require_case_file(a.gt_dir, id, "_segmentation")));
        const CasePrediction pred = load_prediction(require_case_file(a.pred_dir, id, "_prob_kt"),
                                                    require_case_file(a.pred_dir, id, "_prob_tumor"));
        const LabelVolume pre = raw_prediction(pred, cfg.prob_threshold);
        LabelVolume post;
        if (auto stored = find_case_file(a.pred_dir, id, "_prediction")) {
            post = as_label_volume(read_volume(*stored));
        } else {
            post = postprocess_case(pred, cfg);
        }
        rows[i] = {id, evaluate_case(id, pre, gt), evaluate_case(id, post, gt)};
        log(id + ": dice_kt " + format_double(rows[i].pre.dice_kt) + " -> " + format_double(rows[i].post.dice_kt) +
            ", dice_tumor " + format_double(rows[i].pre.dice_tumor) + " -> " + format_double(rows[i].post.dice_tumor));
    });

    write_text(a.out, report_csv(rows));
    write_text(summary, report_summary_json(rows));
    return kExitOk;
}

// -- losses-check ------------------------------------------------------------

struct LossCheckArgs {
    std::uint64_t seed = 7;
    std::size_t pairs = 100;
    std::size_t n = 64;
    double lambda = 0.5;
    double epsilon = 1e-6;
    double clamp = 1e-7;
    double h = 1e-6;
    double tolerance = 1e-4;
    std::string out;
};

double relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
    return std::abs(analytic - numeric) / scale;
}

template <typename LossFn>
double max_gradient_error(std::vector<double>& pred, const std::vector<double>& target, double h, LossFn&& loss) {
    const auto analytic = loss(pred, target).grad;
    double worst = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = pred[i];
        pred[i] = p + h;
        const double up = loss(pred, target).value;
        pred[i] = p - h;
        const double down = loss(pred, target).value;
        pred[i] = p;
        worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * h)));
    }
    return worst;
}

int run_losses_check(const LossCheckArgs& a) {
    LossConfig cfg{a.lambda, a.epsilon, a.clamp};
    cfg.validate();
    if (a.n == 0 || a.pairs == 0) throw ConfigError("--n and --pairs must be positive");
    if (!(a.h > 0.0)) throw ConfigError("--h must be positive");

    Xoshiro256 rng(a.seed);
    double err_bce = 0.0, err_dice = 0.0, err_combined = 0.0, err_composition = 0.0;
    bool endpoints_exact = true;
    ordered_json first;
    for (std::size_t k = 0; k < a.pairs; ++k) {
        std::vector<double> pred(a.n), target(a.n);
        // Keep predictions away from the clamp so central differences stay inside it.
        for (std::size_t i = 0; i < a.n; ++i) {
            pred[i] = rng.uniform(0.02, 0.98);
            target[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
        }
        auto bce_fn = [&](const std::vector<double>& p, const std::vector<double>& t) {
            return bce({p, t}, cfg.clamp);
        };
        auto dice_fn = [&](const std::vector<double>& p, const std::vector<double>& t) {
            return dice_loss({p, t}, cfg.epsilon);
        };
        auto combined_fn = [&](const std::vector<double>& p, const std::vector<double>& t) {
            return combined_loss({p, t}, cfg);
        };
        err_bce = std::max(err_bce, max_gradient_error(pred, target, a.h, bce_fn));
        err_dice = std::max(err_dice, max_gradient_error(pred, target, a.h, dice_fn));
        err_combined = std::max(err_combined, max_gradient_error(pred, target, a.h, combined_fn));

        const double b = bce_fn(pred, target).value;
        const double d = dice_fn(pred, target).value;
        const double c = combined_fn(pred, target).value;
        err_composition = std::max(err_composition, std::abs(c - ((1.0 - cfg.lambda) * b + cfg.lambda * d)));
        LossConfig at0 = cfg, at1 = cfg;
        at0.lambda = 0.0;
        at1.lambda = 1.0;
        endpoints_exact = endpoints_exact && combined_loss({pred, target}, at0).value == b &&
                          combined_loss({pred, target}, at1).value == d;
        if (k == 0) first = {{"bce", b}, {"dice", d}, {"combined", c}};
    }

    const bool passed = err_bce < a.tolerance && err_dice < a.tolerance && err_combined < a.tolerance &&
                        err_composition <= 1e-12 && endpoints_exact;
    const ordered_json report = {
        {"seed", a.seed},
        {"pairs", a.pairs},
        {"n", a.n},
        {"lambda", cfg.lambda},
        {"epsilon", cfg.epsilon},
        {"clamp", cfg.clamp},
        {"h", a.h},
        {"first_pair", first},
        {"max_relative_error", {{"bce", err_bce}, {"dice", err_dice}, {"combined", err_combined}}},
        {"max_composition_error", err_composition},
        {"endpoints_exact", endpoints_exact},
        {"tolerance", a.tolerance},
        {"passed", passed},
    };
    const std::string text = report.dump(2) + "\n";
    if (a.out.empty()) {
        std::cout << text;
    } else {
        ensure_parent(a.out);
        write_text(a.out, text);
    }
    log(std::string("loss gradient check ") + (passed ? "passed" : "FAILED"));
    return passed ? kExitOk : kExitData;
}

// -- phantom-gen -------------------------------------------------------------

struct PhantomArgs {
    std::uint64_t seed = 1;
    std::size_t count = 1;
    std::string out_dir;
    std::string prefix = "case_";
    double tumor_ratio = 2.0;
    std::size_t spurious_blobs = 3;
    std::size_t jobs = 1;
};

int run_phantom_gen(const PhantomArgs& a) {
    if (a.count == 0) throw ConfigError("--count must be positive");
    ensure_directory(a.out_dir);
    const fs::path dir = a.out_dir;
    std::vector<std::string> ids(a.count);
    for (std::size_t i = 0; i < a.count; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%05zu", i);
        ids[i] = a.prefix + buf;
    }
    parallel_for(a.count, a.jobs, [&](std::size_t i) {
        PhantomSpec spec;
        spec.seed = a.seed + i;
        spec.tumor_ratio_target = a.tumor_ratio;
        spec.spurious_blob_count = a.spurious_blobs;
        const Phantom ph = generate_phantom(spec);
        write_volume(synthesize_ct(ph.gt, spec.seed), dir / (ids[i] + "_imaging.nii.gz"));
        write_volume(to_raw(ph.gt), dir / (ids[i] + "_segmentation.nii.gz"));
        write_volume(to_raw(ph.pred.prob_kt), dir / (ids[i] + "_prob_kt.nii.gz"));
        write_volume(to_raw(ph.pred.prob_tumor), dir / (ids[i] + "_prob_tumor.nii.gz"));
        log(ids[i] + ": phantom seed " + std::to_string(spec.seed));
    });
    std::string manifest;
    for (const auto& id : ids) manifest += id + "\n";
    write_text(dir / "manifest.txt", manifest);
    return kExitOk;
}

// -- config merging ----------------------------------------------------------

std::string scalar_token(const nlohmann::json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number() || v.is_boolean()) return v.dump();
    throw UsageError("config key '" + key + "' must be a scalar or an array of scalars");
}

/// Replaces `--config file` by the file's entries, placed right after the
/// subcommand so that explicit flags later on the line win.
std::vector<std::string> merge_config(std::vector<std::string> args, CLI::App& app) {
    std::vector<std::string> config_paths;
    for (std::size_t i = 0; i < args.size();) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a file argument");
            config_paths.push_back(args[i + 1]);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_paths.push_back(args[i].substr(9));
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            ++i;
        }
    }
    if (config_paths.empty()) return args;

    std::size_t sub_pos = args.size();
    CLI::App* sub = nullptr;
    for (std::size_t i = 0; i < args.size() && !sub; ++i) {
        for (auto* candidate : app.get_subcommands({})) {
            if (candidate->get_name() == args[i]) {
                sub = candidate;
                sub_pos = i;
                break;
            }
        }
    }
    if (!sub) throw UsageError("--config needs a subcommand");

    std::vector<std::string> tokens;
    for (const auto& path : config_paths) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config " + path);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("config " + path + ": " + e.what());
        }
        if (!doc.is_object()) throw UsageError("config " + path + " must be a JSON object");
        for (const auto& [key, value] : doc.items()) {
            const CLI::Option* opt = sub->get_option_no_throw("--" + key);
            if (!opt || key == "help") throw UsageError("unknown config key '" + key + "' for " + sub->get_name());
            const std::string flag = "--" + key;
            if (opt->get_type_size_max() == 0) {
                if (!value.is_boolean()) throw UsageError("config key '" + key + "' must be true or false");
                if (value.get<bool>()) tokens.push_back(flag);
            } else if (value.is_array()) {
                for (const auto& item : value) {
                    tokens.push_back(flag);
                    tokens.push_back(scalar_token(item, key));
                }
            } else {
                tokens.push_back(flag);
                tokens.push_back(scalar_token(value, key));
            }
        }
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos + 1), tokens.begin(), tokens.end());
    return args;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Kidney and tumor segmentation post-processing and evaluation toolkit", "renalseg"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.add_option("--config", "JSON file with option values; explicit flags win");

    SliceExtractArgs slice_args;
    auto* slice = app.add_subcommand("slice-extract", "Extract axial slices into a slice store");
    slice->add_option("--imaging", slice_args.imaging, "CT volume");
    slice->add_option("--segmentation", slice_args.segmentation, "Label volume");
    slice->add_option("--case-id", slice_args.case_id, "Case identifier");
    slice->add_option("--data-dir", slice_args.data_dir, "Directory with <case>_imaging/_segmentation files");
    slice->add_option("--manifest", slice_args.manifest, "Newline-delimited case ids");
    slice->add_option("--out-dir", slice_args.out_dir, "Slice store root")->required();
    slice->add_option("--model", slice_args.model, "Prepare samples for a model")
        ->check(CLI::IsMember({"none", "kidney", "tumor"}));
    slice->add_option("--lower-half-mode", slice_args.lower_half_mode, "Tumor model crop")
        ->check(CLI::IsMember({"rows", "volume_z"}));
    slice->add_option("--jobs", slice_args.jobs, "Parallel cases")->check(CLI::PositiveNumber);

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "Split case ids into train and test sets");
    split->add_option("--manifest", split_args.manifest, "Newline-delimited case ids");
    split->add_option("--synthetic-count", split_args.synthetic_count, "Use ids case_00000 .. case_<N-1>");
    split->add_option("--test-fraction", split_args.test_fraction, "Fraction of cases held out");
    split->add_option("--seed", split_args.seed, "Shuffle seed");
    split->add_option("--test-count", split_args.test_count, "Exact number of test cases (overrides rounding)");
    split->add_option("--out", split_args.out, "Split JSON")->required();
    split->add_option("--jobs", split_args.jobs, "Accepted for interface symmetry")->check(CLI::PositiveNumber);

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit-shape-stats", "Fit the accepted tumor elongation range");
    fit->add_option("--labels-dir", fit_args.labels_dir, "Directory with <case>_segmentation files")->required();
    fit->add_option("--manifest", fit_args.manifest, "Restrict to these case ids");
    fit->add_option("--out", fit_args.out, "ShapeStats JSON")->required();
    fit->add_option("--p-lo", fit_args.p_lo, "Lower percentile");
    fit->add_option("--p-hi", fit_args.p_hi, "Upper percentile");
    fit_args.filter.add_to(fit, false);
    fit->add_option("--jobs", fit_args.jobs, "Parallel cases")->check(CLI::PositiveNumber);

    PostprocessArgs post_args;
    auto* post = app.add_subcommand("postprocess", "Clean up model probabilities into a label volume");
    post->add_option("--prob-kt", post_args.prob_kt, "Kidney+tumor probability volume");
    post->add_option("--prob-tumor", post_args.prob_tumor, "Tumor probability volume");
    post->add_option("--out", post_args.out, "Output label volume");
    post->add_option("--manifest", post_args.manifest, "Batch mode: newline-delimited case ids");
    post->add_option("--input-dir", post_args.input_dir, "Batch mode: directory with <case>_prob_* files");
    post->add_option("--out-dir", post_args.out_dir, "Batch mode: output directory");
    post_args.filter.add_to(post);
    post->add_option("--jobs", post_args.jobs, "Parallel cases")->check(CLI::PositiveNumber);

    EvaluateArgs eval_args;
    auto* eval = app.add_subcommand("evaluate", "Per-case DICE before and after post-processing");
    eval->add_option("--pred-dir", eval_args.pred_dir, "Directory with <case>_prob_* and optional _prediction")
        ->required();
    eval->add_option("--gt-dir", eval_args.gt_dir, "Directory with <case>_segmentation files")->required();
    eval->add_option("--out", eval_args.out, "CSV report")->required();
    eval->add_option("--summary", eval_args.summary, "JSON summary (default: <out>.summary.json)");
    eval->add_option("--manifest", eval_args.manifest, "Restrict to these case ids");
    eval_args.filter.add_to(eval);
    eval->add_option("--jobs", eval_args.jobs, "Parallel cases")->check(CLI::PositiveNumber);

    LossCheckArgs loss_args;
    auto* loss = app.add_subcommand("losses-check", "Check loss gradients against finite differences");
    loss->add_option("--seed", loss_args.seed, "Random pair seed");
    loss->add_option("--pairs", loss_args.pairs, "Number of random pairs");
    loss->add_option("--n", loss_args.n, "Pair length");
    loss->add_option("--lambda", loss_args.lambda, "DICE weight");
    loss->add_option("--epsilon", loss_args.epsilon, "DICE smoothing");
    loss->add_option("--clamp", loss_args.clamp, "BCE probability clamp");
    loss->add_option("--h", loss_args.h, "Finite-difference step");
    loss->add_option("--out", loss_args.out, "Report path (default: stdout)");

    PhantomArgs phantom_args;
    auto* phantom = app.add_subcommand("phantom-gen", "Generate synthetic cases with corrupted predictions");
    phantom->add_option("--seed", phantom_args.seed, "Seed of the first case");
    phantom->add_option("--count", phantom_args.count, "Number of cases");
    phantom->add_option("--out-dir", phantom_args.out_dir, "Output directory")->required();
    phantom->add_option("--prefix", phantom_args.prefix, "Case id prefix");
    phantom->add_option("--tumor-ratio", phantom_args.tumor_ratio, "Planted tumor elongation ratio");
    phantom->add_option("--spurious-blobs", phantom_args.spurious_blobs, "Spurious kidney blobs per case");
    phantom->add_option("--jobs", phantom_args.jobs, "Parallel cases")->check(CLI::PositiveNumber);

    try {
        std::vector<std::string> merged = merge_config(args, app);
        std::reverse(merged.begin(), merged.end());
        app.parse(merged);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }

    try {
        if (*slice) return run_slice_extract(slice_args);
        if (*split) return run_split(split_args);
        if (*fit) return run_fit_shape_stats(fit_args);
        if (*post) return run_postprocess(post_args);
        if (*eval) return run_evaluate(eval_args);
        if (*loss) return run_losses_check(loss_args);
        if (*phantom) return run_phantom_gen(phantom_args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace renal::cli
