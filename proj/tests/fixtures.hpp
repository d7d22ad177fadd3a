#pragma once

#include "stc/data.hpp"
#include "stc/trainer.hpp"

namespace stc::fixtures {

/// A few labeled synthetic subjects with short two-channel windows.
inline std::vector<TimeSeriesSample> small_synth(std::size_t subjects = 2, std::size_t per_class = 8,
                                                 std::uint64_t seed = 1) {
    SynthConfig cfg;
    cfg.channels = 2;
    cfg.length = 32;
    cfg.n_per_class = per_class;
    cfg.seed = seed;
    return synth_generate(synth_subject_specs(subjects, seed), cfg);
}

inline TrainConfig small_train(std::size_t epochs = 3) {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = 8;
    c.lr = 1e-3;
    c.n_symbols = 8;
    c.h_dim = 16;
    c.z_dim = 8;
    c.encoder_hidden = {32};
    c.projector_hidden = {16};
    c.seed = 7;
    c.augment.seed = 8;
    return c;
}

inline std::vector<TimeSeriesSample> unlabeled(std::vector<TimeSeriesSample> s) {
    for (auto& x : s) x.label.reset();
    return s;
}

}  // namespace stc::fixtures
