#pragma once

#include "wbcal/common.hpp"
#include "wbcal/frequency.hpp"

namespace wbcal {

enum class Side { BS, UE };

struct ArrayGeometry {
    int n_x = 1;
    int n_y = 1;
    double d_x = 0;
    double d_y = 0;
    Side side = Side::BS;

    int size() const { return n_x * n_y; }
    void validate() const;

    // half-wavelength array at the given carrier
    static ArrayGeometry half_wave(int nx, int ny, double lambda_c, Side s);
};

struct SpacingErrors {
    rvec eps_x;
    rvec eps_y;

    static SpacingErrors zero(const ArrayGeometry& g);
};

struct ErrorConfig {
    double gain_std = 0.05;
    double phase_std = 20.0 * kPi / 180.0;
    double eps_half_width = 0.1;   // in units of lambda_c
    double eps_bound = 0.25;       // rejection bound, in units of the nominal spacing
    cd c0 = std::polar(0.2, kPi / 3.0);
    bool perturbed_distances = true;
    bool coupling = true;
};

// C, gamma and epsilon for one side
struct ArrayErrorSet {
    cmat coupling;
    cvec gamma;
    SpacingErrors spacing;

    static ArrayErrorSet ideal(const ArrayGeometry& g);
    void validate(const ArrayGeometry& g) const;
};

// phase slope of axis element i (0-based): i * (d + eps_i)
rvec axis_positions(int count, double d, const rvec& eps);

cvec steering_axis(double v, int k, int count, double d, const rvec& eps, const FrequencyGrid& freq);

// kron(a_y, a_x); element i + n_x*j
cvec steering_upa(double vx, double vy, int k, const ArrayGeometry& geom, const SpacingErrors& eps,
                  const FrequencyGrid& freq);

// C * diag(gamma) * a
cvec effective_steering(double vx, double vy, int k, const ArrayErrorSet& err, const ArrayGeometry& geom,
                        const FrequencyGrid& freq);

// coupling coefficient model c(r) = c0/r * exp(-j(r-1)pi/8), r in half-wavelength units
cd coupling_coefficient(double r_norm, cd c0);

// dense coupling matrix from element positions (meters)
cmat coupling_from_positions(const rvec& px, const rvec& py, int n_x, double lambda_c, cd c0);

ArrayErrorSet generate_array_errors(Rng& rng, const ArrayGeometry& geom, const ErrorConfig& cfg,
                                    double lambda_c);

// (azimuth, zenith) -> (v_x, v_y)
std::pair<double, double> angles_to_spatial(double azimuth, double zenith);

}  // namespace wbcal
