#pragma once

#include "wbcal/common.hpp"

namespace wbcal {

// OFDM subcarrier grid. Subcarriers are indexed 0..K-1 throughout the library.
struct FrequencyGrid {
    double f_c = 0;
    double bandwidth = 0;
    int K = 0;
    rvec delta_f;  // delta_f[k] = -B/2 + k*B/K

    FrequencyGrid() = default;
    FrequencyGrid(double fc, double B, int k_count);

    double lambda_c() const { return kSpeedOfLight / f_c; }

    // 2*pi/lambda_c * (1 + df_k/f_c): the beam-squint wavenumber of subcarrier k
    double wavenumber(int k) const;
};

}  // namespace wbcal
