#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "harpbd/bodygraph.hpp"
#include "harpbd/common.hpp"
#include "harpbd/rng.hpp"
#include "harpbd/tensor.hpp"

namespace harpbd {

// Trial ingestion, sliding-window segmentation, majority-vote labeling,
// augmentation and LOSO splitting.
//
// Trial CSV layout (bit-exact round trip for files written by save_trial):
//   line 1: <subject_id>,<trial_kind>,<sample_rate>
//   line 2+: t,x1,y1,z1,...,x22,y22,z22,activity,r1,r2,r3,r4
// with 66 coordinate columns, activity in 0..5 and rater flags in {0,1}.

inline constexpr int kJoints = 22;
inline constexpr int kCoordCols = kJoints * 3;
inline constexpr int kActivityClasses = 6;  // 0 = transition, 1..5 = activities of interest
inline constexpr int kRaters = 4;

enum class TrialKind { Normal, Difficult };

inline const char* trial_kind_name(TrialKind k) {
    return k == TrialKind::Normal ? "normal" : "difficult";
}

inline TrialKind parse_trial_kind(std::string_view s, const std::string& where) {
    if (s == "normal") return TrialKind::Normal;
    if (s == "difficult") return TrialKind::Difficult;
    throw ParseError(where + ": unknown trial kind '" + std::string(s) + "'");
}

struct Trial {
    std::string subject_id;
    TrialKind kind = TrialKind::Normal;
    int sample_rate = 60;
    std::vector<std::array<double, kCoordCols>> coords;  // per timestep
    std::vector<int> activity;                           // per timestep, 0..5
    std::vector<std::array<uint8_t, kRaters>> raters;    // per timestep flags

    int64_t length() const { return static_cast<int64_t>(coords.size()); }

    void validate() const {
        require(!subject_id.empty(), "Trial: empty subject id");
        require(sample_rate > 0, "Trial: sample rate must be positive");
        require(coords.size() == activity.size() && coords.size() == raters.size(),
                "Trial: per-timestep sequences differ in length");
        for (const auto& frame : coords)
            for (double v : frame)
                require(std::isfinite(v), "Trial: non-finite coordinate");
        for (int a : activity)
            require(a >= 0 && a < kActivityClasses, "Trial: activity class out of range");
    }
};

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end)
        throw ParseError(where + ": bad number '" + std::string(s) + "'");
    if (!std::isfinite(v)) throw ParseError(where + ": non-finite value");
    return v;
}

inline int64_t parse_int(std::string_view s, const std::string& where) {
    int64_t v = 0;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end)
        throw ParseError(where + ": bad integer '" + std::string(s) + "'");
    return v;
}

inline void format_double(std::string& out, double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    require(ec == std::errc(), "format_double: conversion failed");
    out.append(buf, p);
}

}  // namespace detail

inline Trial load_trial(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is.good()) throw ParseError(path.string() + ": cannot open trial file");
    const std::string name = path.string();
    std::string line;
    int lineno = 0;
    auto loc = [&]() { return name + ":" + std::to_string(lineno); };

    ++lineno;
    if (!std::getline(is, line)) throw ParseError(loc() + ": missing header");
    auto head = detail::split_csv(line);
    if (head.size() != 3)
        throw ParseError(loc() + ": header must be subject_id,trial_kind,sample_rate");
    Trial t;
    t.subject_id = std::string(head[0]);
    if (t.subject_id.empty()) throw ParseError(loc() + ": empty subject id");
    t.kind = parse_trial_kind(head[1], loc());
    const int64_t rate = detail::parse_int(head[2], loc());
    if (rate != 60) throw ParseError(loc() + ": sample rate must be 60");
    t.sample_rate = static_cast<int>(rate);

    const size_t expected_cols = 1 + kCoordCols + 1 + kRaters;
    int64_t row = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = detail::split_csv(line);
        if (cells.size() != expected_cols)
            throw ParseError(loc() + ": expected " + std::to_string(expected_cols) +
                             " columns, got " + std::to_string(cells.size()));
        if (detail::parse_int(cells[0], loc()) != row)
            throw ParseError(loc() + ": timestep index out of order");
        std::array<double, kCoordCols> frame;
        for (int c = 0; c < kCoordCols; ++c)
            frame[static_cast<size_t>(c)] = detail::parse_double(cells[static_cast<size_t>(1 + c)], loc());
        const int64_t a = detail::parse_int(cells[1 + kCoordCols], loc());
        if (a < 0 || a >= kActivityClasses)
            throw ParseError(loc() + ": activity class out of range");
        std::array<uint8_t, kRaters> rr;
        for (int r = 0; r < kRaters; ++r) {
            const int64_t f = detail::parse_int(cells[static_cast<size_t>(2 + kCoordCols + r)], loc());
            if (f != 0 && f != 1) throw ParseError(loc() + ": rater flag must be 0 or 1");
            rr[static_cast<size_t>(r)] = static_cast<uint8_t>(f);
        }
        t.coords.push_back(frame);
        t.activity.push_back(static_cast<int>(a));
        t.raters.push_back(rr);
        ++row;
    }
    t.validate();
    return t;
}

inline void save_trial(const Trial& t, const std::filesystem::path& path) {
    t.validate();
    std::string out;
    out.reserve(static_cast<size_t>(t.length()) * 400 + 64);
    out += t.subject_id;
    out += ',';
    out += trial_kind_name(t.kind);
    out += ',';
    out += std::to_string(t.sample_rate);
    out += '\n';
    for (int64_t i = 0; i < t.length(); ++i) {
        out += std::to_string(i);
        for (double v : t.coords[static_cast<size_t>(i)]) {
            out += ',';
            detail::format_double(out, v);
        }
        out += ',';
        out += std::to_string(t.activity[static_cast<size_t>(i)]);
        for (uint8_t r : t.raters[static_cast<size_t>(i)]) {
            out += ',';
            out += r ? '1' : '0';
        }
        out += '\n';
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    require(os.good(), "save_trial: cannot open " + path.string());
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    os.flush();
    require(os.good(), "save_trial: write failed for " + path.string());
}

/// Load every trial listed in a manifest (one path per line, relative to the
/// manifest's directory unless absolute).
inline std::vector<Trial> load_corpus(const std::filesystem::path& manifest) {
    std::ifstream is(manifest);
    if (!is.good()) throw ParseError(manifest.string() + ": cannot open manifest");
    std::vector<Trial> out;
    std::string line;
    const auto base = manifest.parent_path();
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::filesystem::path p(line);
        if (p.is_relative()) p = base / p;
        out.push_back(load_trial(p));
    }
    require(!out.empty(), manifest.string() + ": manifest lists no trials");
    return out;
}

// ---- window labeling ----

/// Most frequent class id; exact ties resolve to the lowest class id.
inline int majority_activity_label(const std::vector<int>& acts) {
    require(!acts.empty(), "majority_activity_label: empty slice");
    std::array<int64_t, kActivityClasses> counts{};
    for (int a : acts) {
        require(a >= 0 && a < kActivityClasses, "majority_activity_label: class out of range");
        ++counts[static_cast<size_t>(a)];
    }
    int best = 0;
    for (int c = 1; c < kActivityClasses; ++c)
        if (counts[static_cast<size_t>(c)] > counts[static_cast<size_t>(best)]) best = c;
    return best;
}

/// True iff at least two raters each individually flagged at least half of
/// the window (threshold = ceil(w/2)).
inline bool protective_label(const std::vector<std::array<uint8_t, kRaters>>& flags) {
    require(!flags.empty(), "protective_label: empty slice");
    const int64_t w = static_cast<int64_t>(flags.size());
    const int64_t threshold = (w + 1) / 2;
    int raters_over = 0;
    for (int r = 0; r < kRaters; ++r) {
        int64_t cnt = 0;
        for (const auto& f : flags) cnt += f[static_cast<size_t>(r)];
        if (cnt >= threshold) ++raters_over;
    }
    return raters_over >= 2;
}

// ---- segmentation ----

struct WindowSample {
    Tensor features;  // rank-3: T x N x 3
    int activity_label = 0;
    bool protective_label = false;
    std::string subject_id;
    TrialKind trial_kind = TrialKind::Normal;
    int64_t window_start = 0;
    bool is_augmented = false;

    int64_t timesteps() const { return features.shape()[0]; }
    int64_t nodes() const { return features.shape()[1]; }
    int64_t channels() const { return features.shape()[2]; }
    double at(int64_t t, int64_t n, int64_t c) const {
        return features[static_cast<size_t>((t * nodes() + n) * channels() + c)];
    }
    double& at(int64_t t, int64_t n, int64_t c) {
        return features[static_cast<size_t>((t * nodes() + n) * channels() + c)];
    }
};

struct SegmentConfig {
    int64_t window = 180;
    int64_t stride = 90;
    bool center = false;  // optional per-window, per-channel mean centering

    void validate() const {
        require(window > 0, "SegmentConfig: window must be positive");
        require(stride > 0 && stride <= window, "SegmentConfig: need 0 < stride <= window");
    }
};

/// Cut a trial into windows at offsets 0, stride, 2*stride, ...; trailing
/// partial windows are dropped. Feature columns follow the graph's node ids.
inline std::vector<WindowSample> segment(const Trial& trial, const BodyGraph& graph,
                                         const SegmentConfig& cfg = {}) {
    cfg.validate();
    const int64_t len = trial.length();
    std::vector<WindowSample> out;
    if (len < cfg.window) return out;
    const int64_t count = (len - cfg.window) / cfg.stride + 1;
    const int64_t n = graph.n();
    for (int64_t wi = 0; wi < count; ++wi) {
        const int64_t start = wi * cfg.stride;
        WindowSample w;
        w.features = Tensor({cfg.window, n, 3});
        for (int64_t t = 0; t < cfg.window; ++t) {
            const auto& frame = trial.coords[static_cast<size_t>(start + t)];
            for (int64_t ni = 0; ni < n; ++ni) {
                const int64_t col = static_cast<int64_t>(graph.ids[static_cast<size_t>(ni)] - 1) * 3;
                for (int64_t c = 0; c < 3; ++c)
                    w.at(t, ni, c) = frame[static_cast<size_t>(col + c)];
            }
        }
        if (cfg.center) {
            for (int64_t c = 0; c < 3; ++c) {
                double mean = 0.0;
                for (int64_t t = 0; t < cfg.window; ++t)
                    for (int64_t ni = 0; ni < n; ++ni) mean += w.at(t, ni, c);
                mean /= static_cast<double>(cfg.window * n);
                for (int64_t t = 0; t < cfg.window; ++t)
                    for (int64_t ni = 0; ni < n; ++ni) w.at(t, ni, c) -= mean;
            }
        }
        std::vector<int> acts(trial.activity.begin() + start,
                              trial.activity.begin() + start + cfg.window);
        std::vector<std::array<uint8_t, kRaters>> flags(
            trial.raters.begin() + start, trial.raters.begin() + start + cfg.window);
        w.activity_label = majority_activity_label(acts);
        w.protective_label = protective_label(flags);
        w.subject_id = trial.subject_id;
        w.trial_kind = trial.kind;
        w.window_start = start;
        out.push_back(std::move(w));
    }
    return out;
}

// ---- augmentation ----

struct AugmentConfig {
    std::vector<double> jitter_sigmas{0.05, 0.1};
    std::vector<double> crop_probs{0.05, 0.10};

    size_t factor() const { return 1 + jitter_sigmas.size() + crop_probs.size(); }
};

/// Training-side augmentation: per input window, keep the original, add one
/// Gaussian-jittered copy per sigma and one cropped copy per probability
/// (cropping zeroes whole (timestep, joint) coordinate triplets). Labels are
/// copied unchanged; copies are marked augmented.
inline std::vector<WindowSample> augment(const std::vector<WindowSample>& windows,
                                         const AugmentConfig& cfg, RngStream& rng) {
    std::vector<WindowSample> out;
    out.reserve(windows.size() * cfg.factor());
    for (const auto& w : windows) {
        out.push_back(w);
        for (double sigma : cfg.jitter_sigmas) {
            require(sigma >= 0.0, "augment: jitter sigma must be >= 0");
            WindowSample j = w;
            j.is_augmented = true;
            for (int64_t i = 0; i < j.features.numel(); ++i)
                j.features[static_cast<size_t>(i)] += rng.normal(0.0, sigma);
            out.push_back(std::move(j));
        }
        for (double p : cfg.crop_probs) {
            require(p >= 0.0 && p < 1.0, "augment: crop probability must be in [0,1)");
            WindowSample c = w;
            c.is_augmented = true;
            for (int64_t t = 0; t < c.timesteps(); ++t)
                for (int64_t n = 0; n < c.nodes(); ++n)
                    if (rng.bernoulli(p))
                        for (int64_t ch = 0; ch < c.channels(); ++ch) c.at(t, n, ch) = 0.0;
            out.push_back(std::move(c));
        }
    }
    return out;
}

// ---- LOSO ----

struct LosoFold {
    std::string test_subject;
    std::vector<WindowSample> train_windows;
    std::vector<WindowSample> test_windows;
};

inline std::vector<std::string> corpus_subjects(const std::vector<Trial>& corpus) {
    std::set<std::string> s;
    for (const auto& t : corpus) s.insert(t.subject_id);
    return {s.begin(), s.end()};
}

/// Build one leave-one-subject-out fold. All trials of the test subject form
/// the (never augmented) test side; everyone else's windows form the train
/// side, augmented when requested. Deterministic given the root seed.
inline LosoFold make_loso_fold(const std::vector<Trial>& corpus, const BodyGraph& graph,
                               const std::string& test_subject, const SegmentConfig& seg,
                               const AugmentConfig& aug, bool augment_train,
                               const RootRng& root) {
    LosoFold fold;
    fold.test_subject = test_subject;
    std::vector<WindowSample> train_raw;
    bool subject_seen = false;
    for (const auto& trial : corpus) {
        auto ws = segment(trial, graph, seg);
        if (trial.subject_id == test_subject) {
            subject_seen = true;
            for (auto& w : ws) fold.test_windows.push_back(std::move(w));
        } else {
            for (auto& w : ws) train_raw.push_back(std::move(w));
        }
    }
    require(subject_seen, "make_loso_fold: unknown test subject " + test_subject);
    if (augment_train) {
        RngStream rng = root.stream("loso/" + test_subject + "/augment");
        fold.train_windows = augment(train_raw, aug, rng);
    } else {
        fold.train_windows = std::move(train_raw);
    }
    return fold;
}

inline std::vector<LosoFold> loso_splits(const std::vector<Trial>& corpus, const BodyGraph& graph,
                                         const SegmentConfig& seg, const AugmentConfig& aug,
                                         bool augment_train, const RootRng& root) {
    const auto subjects = corpus_subjects(corpus);
    require(subjects.size() >= 2, "loso_splits: need at least two subjects");
    std::vector<LosoFold> folds;
    folds.reserve(subjects.size());
    for (const auto& s : subjects)
        folds.push_back(make_loso_fold(corpus, graph, s, seg, aug, augment_train, root));
    return folds;
}

}  // namespace harpbd
