#pragma once

// Reference systems shared by the unit and acceptance tests.

#include "saist/saist.hpp"

namespace saist::testing {

/// Second-order plant, h = 0.05, kbar = 20.
inline PetcSystem planar_system(double sigma, int kbar = 20) {
    PetcSystem s;
    s.A = (Matrix(2, 2) << 0, 1, -2, 3).finished();
    s.BK = (Matrix(2, 1) << 0, 1).finished() * (Matrix(1, 2) << 0, -5).finished();
    s.Qtrig = relative_error_trigger(sigma, 2);
    s.h = 0.05;
    s.kbar = kbar;
    return s;
}

/// Third-order plant, h = 0.1, kbar = 20.
inline PetcSystem spatial_system(double sigma) {
    PetcSystem s;
    s.A = (Matrix(3, 3) << 0, 1, 0, 0, 0, 1, 1, -1, -1).finished();
    s.BK = (Matrix(3, 1) << 0, 0, 1).finished() * (Matrix(1, 3) << -2, -1, -1).finished();
    s.Qtrig = relative_error_trigger(sigma, 3);
    s.h = 0.1;
    s.kbar = 20;
    return s;
}

/// Linearized compressor model, sigma = 0.452, h = 0.05, kbar = 20.
inline PetcSystem jet_engine() {
    PetcSystem s;
    s.A = (Matrix(2, 2) << 0, -1, 0, 0).finished();
    s.BK = (Matrix(2, 1) << 0, 1).finished() * (Matrix(1, 2) << 1, -0.5).finished();
    s.Qtrig = relative_error_trigger(0.452, 2);
    s.h = 0.05;
    s.kbar = 20;
    return s;
}

inline AnalysisConfig planar_config(double sigma, int l_max = 50) {
    AnalysisConfig cfg;
    cfg.system = planar_system(sigma);
    cfg.l_max = l_max;
    return cfg;
}

inline Word word(std::initializer_list<int> letters) { return Word(letters); }

}  // namespace saist::testing
