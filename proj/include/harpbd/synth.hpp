#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "harpbd/common.hpp"
#include "harpbd/dataset.hpp"
#include "harpbd/rng.hpp"

namespace harpbd {

// Synthetic motion corpus generator. Each subject performs scripted
// sequences alternating "transition" filler with activity-of-interest (AoI)
// segments drawn from five activity templates. Every template is a set of
// per-joint sinusoids (class-specific frequency, joint group and amplitude)
// on top of a fixed rest pose, plus a trunk sway whose frequency and
// amplitude also encode the class, so the class stays detectable on any
// sensor subset. "Protective" spans compress movement range and lag the
// phase on an activity-dependent joint subset. Four simulated raters flag
// protective frames with independent flip noise.

struct SynthConfig {
    int subjects = 12;
    int healthy = 4;              // leading subjects; shown as H**, patients as P**
    int trials_per_subject = 2;   // alternating normal / difficult
    int64_t sequence_length = 3600;
    double aoi_fraction = 0.3171;
    double protective_prevalence = 0.2109;  // of a patient's sequence
    double rater_noise = 0.03;
    double coord_noise = 0.02;
    std::vector<double> class_weights{1, 1, 1, 1, 1};  // AoI share of classes 1..5
    double protective_compression = 0.55;
    double protective_phase_lag = 0.9;

    void validate() const {
        require(subjects >= 1, "SynthConfig: need at least one subject");
        require(healthy >= 0 && healthy <= subjects, "SynthConfig: healthy out of range");
        require(trials_per_subject >= 1, "SynthConfig: need at least one trial per subject");
        require(sequence_length >= 1, "SynthConfig: sequence length must be positive");
        if (!(aoi_fraction >= 0.0 && aoi_fraction <= 1.0))
            throw ConfigError("SynthConfig: aoi_fraction must be in [0,1]");
        if (!(protective_prevalence >= 0.0 && protective_prevalence <= 1.0))
            throw ConfigError("SynthConfig: protective_prevalence must be in [0,1]");
        if (protective_prevalence > aoi_fraction)
            throw ConfigError("SynthConfig: protective prevalence exceeds AoI fraction");
        if (class_weights.size() != 5)
            throw ConfigError("SynthConfig: class_weights needs 5 entries");
        double s = 0.0;
        for (double w : class_weights) {
            if (w < 0.0) throw ConfigError("SynthConfig: class weights must be >= 0");
            s += w;
        }
        if (s <= 0.0) throw ConfigError("SynthConfig: class weights sum to zero");
        require(rater_noise >= 0.0 && rater_noise < 0.5, "SynthConfig: rater noise in [0,0.5)");
        require(coord_noise >= 0.0, "SynthConfig: coord noise must be >= 0");
        require(protective_compression > 0.0 && protective_compression <= 1.0,
                "SynthConfig: compression must be in (0,1]");
    }
};

struct SynthStats {
    double realized_aoi = 0.0;         // AoI frames / all frames
    double realized_protective = 0.0;  // true protective frames / patient frames
};

namespace synthdetail {

inline const std::array<std::array<double, 3>, kJoints>& rest_pose() {
    static const std::array<std::array<double, 3>, kJoints> pose = {{
        {0.00, 1.70, 0.00},   // 1 head
        {0.20, 1.45, 0.00},   // 2 left_shoulder
        {0.25, 1.20, 0.00},   // 3 left_elbow
        {0.27, 0.95, 0.00},   // 4 left_wrist
        {-0.20, 1.45, 0.00},  // 5 right_shoulder
        {-0.25, 1.20, 0.00},  // 6 right_elbow
        {-0.27, 0.95, 0.00},  // 7 right_wrist
        {0.00, 1.55, 0.00},   // 8 neck
        {0.00, 0.95, 0.00},   // 9 pelvis
        {0.10, 0.90, 0.00},   // 10 left_hip
        {0.11, 0.50, 0.00},   // 11 left_knee
        {0.12, 0.10, 0.00},   // 12 left_ankle
        {0.12, 0.05, 0.08},   // 13 left_foot
        {0.12, 0.02, 0.15},   // 14 left_toe
        {-0.10, 0.90, 0.00},  // 15 right_hip
        {-0.11, 0.50, 0.00},  // 16 right_knee
        {-0.12, 0.10, 0.00},  // 17 right_ankle
        {-0.12, 0.05, 0.08},  // 18 right_foot
        {-0.12, 0.02, 0.15},  // 19 right_toe
        {0.00, 1.05, 0.00},   // 20 spine_lower
        {0.00, 1.25, 0.00},   // 21 spine_upper
        {0.00, 1.40, 0.00},   // 22 chest
    }};
    return pose;
}

struct JointAmp {
    int id;
    double ax, ay, az;
};

struct ClassTemplate {
    double freq;                  // Hz
    std::vector<JointAmp> amps;   // activity-specific joint motion
    std::vector<int> protective;  // joints altered while guarding
};

inline const std::array<ClassTemplate, kActivityClasses>& class_templates() {
    static const std::array<ClassTemplate, kActivityClasses> tpl = {{
        // 0: transition — slow low-amplitude wander everywhere
        {0.25,
         {{1, 0.01, 0.01, 0.01},  {4, 0.02, 0.02, 0.02},  {7, 0.02, 0.02, 0.02},
          {12, 0.02, 0.01, 0.02}, {17, 0.02, 0.01, 0.02}, {9, 0.01, 0.01, 0.01}},
         {}},
        // 1: one-leg-stand — leg lift plus balancing sway
        {0.60,
         {{10, 0.04, 0.10, 0.03}, {11, 0.05, 0.22, 0.06}, {12, 0.06, 0.28, 0.08},
          {13, 0.06, 0.28, 0.09}, {14, 0.06, 0.28, 0.10}, {9, 0.05, 0.02, 0.02},
          {16, 0.03, 0.02, 0.02}},
         {9, 15, 16, 20, 21}},
        // 2: reach-forward — both arms out, chest pitch
        {0.90,
         {{2, 0.03, 0.05, 0.12},  {3, 0.04, 0.10, 0.22}, {4, 0.05, 0.14, 0.32},
          {5, 0.03, 0.05, 0.12},  {6, 0.04, 0.10, 0.22}, {7, 0.05, 0.14, 0.32},
          {22, 0.01, 0.02, 0.08}, {21, 0.01, 0.02, 0.05}},
         {5, 6, 7, 21, 22}},
        // 3: sit-to-stand — vertical pelvis/knee excursion
        {0.45,
         {{9, 0.02, 0.26, 0.06},  {10, 0.02, 0.24, 0.05}, {15, 0.02, 0.24, 0.05},
          {11, 0.03, 0.14, 0.10}, {16, 0.03, 0.14, 0.10}, {20, 0.02, 0.22, 0.05},
          {21, 0.02, 0.18, 0.04}, {22, 0.02, 0.16, 0.04}},
         {9, 10, 11, 15, 16, 20}},
        // 4: stand-to-sit — like 3 but slower with knee drift
        {0.35,
         {{9, 0.02, 0.24, 0.08},  {10, 0.02, 0.22, 0.07}, {15, 0.02, 0.22, 0.07},
          {11, 0.03, 0.12, 0.14}, {16, 0.03, 0.12, 0.14}, {20, 0.02, 0.20, 0.07},
          {21, 0.02, 0.16, 0.05}, {12, 0.02, 0.04, 0.06}, {17, 0.02, 0.04, 0.06}},
         {9, 11, 12, 16, 17, 20}},
        // 5: bend-down — trunk fold with arm hang
        {0.75,
         {{1, 0.02, 0.10, 0.24},  {22, 0.02, 0.08, 0.20}, {21, 0.02, 0.07, 0.16},
          {20, 0.02, 0.05, 0.10}, {3, 0.03, 0.12, 0.10},  {6, 0.03, 0.12, 0.10},
          {4, 0.04, 0.18, 0.12},  {7, 0.04, 0.18, 0.12}},
         {3, 6, 20, 21, 22}},
    }};
    return tpl;
}

// trunk joints carrying the class-coded global sway
inline const std::array<int, 6>& sway_joints() {
    static const std::array<int, 6> j = {1, 8, 9, 20, 21, 22};
    return j;
}

struct SubjectStyle {
    double amp_scale;
    double speed_scale;
    double phase;
};

inline SubjectStyle subject_style(const RootRng& root, const std::string& subject) {
    RngStream rng = root.stream("synth/" + subject + "/style");
    SubjectStyle s;
    s.amp_scale = 0.75 + 0.5 * rng.uniform();
    s.speed_scale = 0.9 + 0.2 * rng.uniform();
    s.phase = 6.283185307179586 * rng.uniform();
    return s;
}

struct Span {
    int cls;        // 1..5
    int64_t start;  // frame index
    int64_t len;
    int64_t prot_start = 0;  // within [start, start+len)
    int64_t prot_len = 0;
};

/// Split `total` into `parts` pieces proportional to `weights` using floor +
/// largest-remainder so the pieces sum exactly to `total`.
inline std::vector<int64_t> proportional_split(int64_t total, const std::vector<double>& weights) {
    const size_t parts = weights.size();
    require(parts > 0, "proportional_split: no parts");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    require(wsum > 0.0, "proportional_split: zero weight sum");
    std::vector<int64_t> out(parts, 0);
    std::vector<std::pair<double, size_t>> rem;
    int64_t assigned = 0;
    for (size_t i = 0; i < parts; ++i) {
        const double exact = static_cast<double>(total) * weights[i] / wsum;
        out[i] = static_cast<int64_t>(std::floor(exact));
        assigned += out[i];
        rem.push_back({exact - std::floor(exact), i});
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
        return a.first > b.first;  // ties keep index order (stable)
    });
    for (int64_t k = 0; k < total - assigned; ++k) ++out[rem[static_cast<size_t>(k) % parts].second];
    return out;
}

/// Plan one trial: AoI segments with classes, gaps, and protective spans.
inline std::vector<Span> plan_trial(const SynthConfig& cfg, bool patient, RngStream& rng) {
    const int64_t len = cfg.sequence_length;
    const int64_t aoi_total = std::llround(cfg.aoi_fraction * static_cast<double>(len));
    const int64_t prot_total =
        patient ? std::llround(cfg.protective_prevalence * static_cast<double>(len)) : 0;
    require(prot_total <= aoi_total, "plan_trial: protective exceeds AoI budget");

    // class frame budgets
    std::vector<int64_t> frames = proportional_split(aoi_total, cfg.class_weights);

    // carve each class budget into segments of roughly 450 frames
    std::vector<Span> segs;
    for (int c = 0; c < 5; ++c) {
        const int64_t fc = frames[static_cast<size_t>(c)];
        if (fc == 0) continue;
        const int64_t m = std::max<int64_t>(
            1, std::min(fc, std::llround(static_cast<double>(fc) / 450.0)));
        const int64_t base = fc / m, extra = fc % m;
        for (int64_t s = 0; s < m; ++s) {
            Span sp;
            sp.cls = c + 1;
            sp.len = base + (s < extra ? 1 : 0);
            segs.push_back(sp);
        }
    }
    rng.shuffle(segs);

    // transition gaps around the segments
    const int64_t n = static_cast<int64_t>(segs.size());
    std::vector<double> gw(static_cast<size_t>(n) + 1);
    for (auto& w : gw) w = 0.5 + rng.uniform();
    std::vector<int64_t> gaps = proportional_split(len - aoi_total, gw);

    int64_t cursor = 0;
    for (int64_t i = 0; i < n; ++i) {
        cursor += gaps[static_cast<size_t>(i)];
        segs[static_cast<size_t>(i)].start = cursor;
        cursor += segs[static_cast<size_t>(i)].len;
    }

    // protective spans, distributed proportionally over the segments
    if (prot_total > 0 && n > 0) {
        std::vector<double> lw;
        for (const auto& s : segs) lw.push_back(static_cast<double>(s.len));
        std::vector<int64_t> alloc = proportional_split(prot_total, lw);
        // cap at segment length, pushing overflow to the next segment
        int64_t carry = 0;
        for (int64_t i = 0; i < n; ++i) {
            auto& s = segs[static_cast<size_t>(i)];
            int64_t want = alloc[static_cast<size_t>(i)] + carry;
            s.prot_len = std::min(want, s.len);
            carry = want - s.prot_len;
        }
        // any residual sweeps back into earlier spare capacity
        for (int64_t i = 0; i < n && carry > 0; ++i) {
            auto& s = segs[static_cast<size_t>(i)];
            const int64_t room = s.len - s.prot_len;
            const int64_t take = std::min(room, carry);
            s.prot_len += take;
            carry -= take;
        }
        for (auto& s : segs)
            if (s.prot_len > 0)
                s.prot_start = s.start + static_cast<int64_t>(rng.below(
                                             static_cast<uint64_t>(s.len - s.prot_len + 1)));
    }
    return segs;
}

}  // namespace synthdetail

/// Generate a deterministic synthetic corpus. Subjects are named H01.. for
/// healthy participants and P01.. for patients; trial kinds alternate
/// normal/difficult per subject.
inline std::vector<Trial> synth_generate(const SynthConfig& cfg, uint64_t seed,
                                         SynthStats* stats = nullptr) {
    cfg.validate();
    using namespace synthdetail;
    const RootRng root(seed);
    std::vector<Trial> corpus;
    int64_t frames_all = 0, frames_aoi = 0, frames_patient = 0, frames_prot = 0;

    for (int si = 0; si < cfg.subjects; ++si) {
        const bool patient = si >= cfg.healthy;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%s%02d", patient ? "P" : "H",
                      patient ? si - cfg.healthy + 1 : si + 1);
        const std::string subject(buf);
        const SubjectStyle style = subject_style(root, subject);

        for (int ti = 0; ti < cfg.trials_per_subject; ++ti) {
            const std::string tag = "synth/" + subject + "/" + std::to_string(ti);
            const bool difficult = ti % 2 == 1;
            RngStream plan_rng = root.stream(tag + "/plan");
            RngStream motion_rng = root.stream(tag + "/motion");
            RngStream rater_rng = root.stream(tag + "/raters");

            const auto spans = plan_trial(cfg, patient, plan_rng);
            const int64_t len = cfg.sequence_length;
            std::vector<int> activity(static_cast<size_t>(len), 0);
            std::vector<uint8_t> prot(static_cast<size_t>(len), 0);
            for (const auto& s : spans) {
                for (int64_t t = s.start; t < s.start + s.len; ++t)
                    activity[static_cast<size_t>(t)] = s.cls;
                for (int64_t t = s.prot_start; t < s.prot_start + s.prot_len; ++t)
                    prot[static_cast<size_t>(t)] = 1;
            }

            Trial trial;
            trial.subject_id = subject;
            trial.kind = difficult ? TrialKind::Difficult : TrialKind::Normal;
            trial.sample_rate = 60;
            trial.coords.resize(static_cast<size_t>(len));
            trial.activity = activity;
            trial.raters.resize(static_cast<size_t>(len));

            const double amp_scale = style.amp_scale * (difficult ? 1.12 : 1.0);
            const double speed = style.speed_scale * (difficult ? 1.05 : 1.0);
            const double noise = cfg.coord_noise * (difficult ? 1.4 : 1.0);
            const auto& rest = rest_pose();
            const auto& tpls = class_templates();

            for (int64_t t = 0; t < len; ++t) {
                const int cls = activity[static_cast<size_t>(t)];
                const bool guarding = prot[static_cast<size_t>(t)] != 0;
                const auto& tpl = tpls[static_cast<size_t>(cls)];
                const double omega =
                    6.283185307179586 * tpl.freq * speed / static_cast<double>(trial.sample_rate);
                std::array<double, kCoordCols> frame;
                // rest pose plus sensor noise
                for (int j = 0; j < kJoints; ++j)
                    for (int c = 0; c < 3; ++c)
                        frame[static_cast<size_t>(j * 3 + c)] =
                            rest[static_cast<size_t>(j)][static_cast<size_t>(c)] +
                            motion_rng.normal(0.0, noise);
                // class-coded trunk sway so every sensor subset sees the class
                const double sway_amp = 0.02 + 0.015 * static_cast<double>(cls);
                for (int id : sway_joints()) {
                    const double ph = style.phase + 0.4 * static_cast<double>(id);
                    const double v = sway_amp * amp_scale *
                                     std::sin(omega * static_cast<double>(t) + ph);
                    frame[static_cast<size_t>((id - 1) * 3)] += v;
                    frame[static_cast<size_t>((id - 1) * 3 + 2)] += 0.6 * v;
                }
                // activity-specific joint motion, compressed and lagged while guarding
                for (const auto& ja : tpl.amps) {
                    double scale = amp_scale;
                    double lag = 0.0;
                    if (guarding &&
                        std::find(tpl.protective.begin(), tpl.protective.end(), ja.id) !=
                            tpl.protective.end()) {
                        scale *= cfg.protective_compression;
                        lag = cfg.protective_phase_lag;
                    }
                    const double ph = style.phase + 0.4 * static_cast<double>(ja.id) - lag;
                    const double s = std::sin(omega * static_cast<double>(t) + ph);
                    frame[static_cast<size_t>((ja.id - 1) * 3)] += scale * ja.ax * s;
                    frame[static_cast<size_t>((ja.id - 1) * 3 + 1)] += scale * ja.ay * s;
                    frame[static_cast<size_t>((ja.id - 1) * 3 + 2)] += scale * ja.az * s;
                }
                trial.coords[static_cast<size_t>(t)] = frame;

                // rater streams: truth with per-rater flip noise; raters never
                // flag healthy subjects
                std::array<uint8_t, kRaters>& rr = trial.raters[static_cast<size_t>(t)];
                for (int r = 0; r < kRaters; ++r) {
                    if (!patient) {
                        rr[static_cast<size_t>(r)] = 0;
                        continue;
                    }
                    bool flag = guarding;
                    if (cfg.rater_noise > 0.0 && rater_rng.bernoulli(cfg.rater_noise))
                        flag = !flag;
                    rr[static_cast<size_t>(r)] = flag ? 1 : 0;
                }

                ++frames_all;
                if (cls != 0) ++frames_aoi;
                if (patient) {
                    ++frames_patient;
                    if (guarding) ++frames_prot;
                }
            }
            trial.validate();
            corpus.push_back(std::move(trial));
        }
    }
    if (stats) {
        stats->realized_aoi =
            frames_all ? static_cast<double>(frames_aoi) / static_cast<double>(frames_all) : 0.0;
        stats->realized_protective =
            frames_patient ? static_cast<double>(frames_prot) / static_cast<double>(frames_patient)
                           : 0.0;
    }
    return corpus;
}

}  // namespace harpbd
