#include "wbcal/array_model.hpp"

#include <cmath>

namespace wbcal {

FrequencyGrid::FrequencyGrid(double fc, double B, int k_count) : f_c(fc), bandwidth(B), K(k_count)
{
    require(fc > 0 && B >= 0 && k_count >= 1, "FrequencyGrid: invalid parameters");
    delta_f.resize(K);
    for (int k = 0; k < K; ++k) delta_f[k] = -B / 2.0 + k * B / K;
}

double FrequencyGrid::wavenumber(int k) const
{
    require(k >= 0 && k < K, "subcarrier index out of range");
    return 2.0 * kPi / lambda_c() * (1.0 + delta_f[k] / f_c);
}

void ArrayGeometry::validate() const
{
    require(n_x >= 1 && n_y >= 1, "ArrayGeometry: counts must be >= 1");
    require(d_x > 0 && d_y > 0, "ArrayGeometry: spacings must be positive");
}

ArrayGeometry ArrayGeometry::half_wave(int nx, int ny, double lambda_c, Side s)
{
    ArrayGeometry g{nx, ny, lambda_c / 2.0, lambda_c / 2.0, s};
    g.validate();
    return g;
}

SpacingErrors SpacingErrors::zero(const ArrayGeometry& g)
{
    return {rvec::Zero(g.n_x), rvec::Zero(g.n_y)};
}

ArrayErrorSet ArrayErrorSet::ideal(const ArrayGeometry& g)
{
    const int n = g.size();
    return {cmat::Identity(n, n), cvec::Ones(n), SpacingErrors::zero(g)};
}

void ArrayErrorSet::validate(const ArrayGeometry& g) const
{
    const int n = g.size();
    require(coupling.rows() == n && coupling.cols() == n, "ArrayErrorSet: coupling size mismatch");
    require(gamma.size() == n, "ArrayErrorSet: gamma size mismatch");
    require(spacing.eps_x.size() == g.n_x && spacing.eps_y.size() == g.n_y,
            "ArrayErrorSet: spacing size mismatch");
}

rvec axis_positions(int count, double d, const rvec& eps)
{
    require(eps.size() == count, "spacing error length mismatch");
    rvec p(count);
    for (int i = 0; i < count; ++i) p[i] = i * (d + eps[i]);
    return p;
}

cvec steering_axis(double v, int k, int count, double d, const rvec& eps, const FrequencyGrid& freq)
{
    const rvec p = axis_positions(count, d, eps);
    const double kap = freq.wavenumber(k);
    cvec a(count);
    for (int i = 0; i < count; ++i) a[i] = std::polar(1.0, kap * p[i] * v);
    return a;
}

cvec steering_upa(double vx, double vy, int k, const ArrayGeometry& geom, const SpacingErrors& eps,
                  const FrequencyGrid& freq)
{
    const cvec ax = steering_axis(vx, k, geom.n_x, geom.d_x, eps.eps_x, freq);
    const cvec ay = steering_axis(vy, k, geom.n_y, geom.d_y, eps.eps_y, freq);
    cvec a(geom.size());
    for (int j = 0; j < geom.n_y; ++j)
        for (int i = 0; i < geom.n_x; ++i) a[i + geom.n_x * j] = ay[j] * ax[i];
    return a;
}

cvec effective_steering(double vx, double vy, int k, const ArrayErrorSet& err, const ArrayGeometry& geom,
                        const FrequencyGrid& freq)
{
    err.validate(geom);
    const cvec a = steering_upa(vx, vy, k, geom, err.spacing, freq);
    return err.coupling * err.gamma.cwiseProduct(a);
}

cd coupling_coefficient(double r_norm, cd c0)
{
    return c0 / r_norm * std::polar(1.0, -(r_norm - 1.0) * kPi / 8.0);
}

cmat coupling_from_positions(const rvec& px, const rvec& py, int n_x, double lambda_c, cd c0)
{
    const int nx = n_x;
    const int ny = static_cast<int>(py.size());
    const int n = nx * ny;
    cmat c = cmat::Identity(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const double dx = px[a % nx] - px[b % nx];
            const double dy = py[a / nx] - py[b / nx];
            const double r = std::hypot(dx, dy) / (lambda_c / 2.0);
            c(a, b) = c(b, a) = coupling_coefficient(r, c0);
        }
    }
    return c;
}

ArrayErrorSet generate_array_errors(Rng& rng, const ArrayGeometry& geom, const ErrorConfig& cfg,
                                    double lambda_c)
{
    geom.validate();
    const int n = geom.size();
    ArrayErrorSet e;

    e.gamma.resize(n);
    std::normal_distribution<double> gain(1.0, cfg.gain_std > 0 ? cfg.gain_std : 1.0);
    std::normal_distribution<double> phase(0.0, cfg.phase_std > 0 ? cfg.phase_std : 1.0);
    for (int i = 0; i < n; ++i) {
        const double g = cfg.gain_std > 0 ? gain(rng) : 1.0;
        const double ph = cfg.phase_std > 0 ? phase(rng) : 0.0;
        e.gamma[i] = std::polar(g, ph);
    }

    auto draw_eps = [&](int count, double d) {
        rvec eps = rvec::Zero(count);
        const double w = cfg.eps_half_width * lambda_c;
        if (w <= 0) return eps;
        std::uniform_real_distribution<double> u(-w, w);
        for (int i = 0; i < count; ++i) {
            double x;
            do { x = u(rng); } while (std::abs(x) >= cfg.eps_bound * d);
            eps[i] = x;
        }
        return eps;
    };
    e.spacing.eps_x = draw_eps(geom.n_x, geom.d_x);
    e.spacing.eps_y = draw_eps(geom.n_y, geom.d_y);

    if (!cfg.coupling) {
        e.coupling = cmat::Identity(n, n);
        return e;
    }
    // positions i*d + eps_i; the steering form i*(d + eps_i) can let far elements cross
    rvec px(geom.n_x), py(geom.n_y);
    for (int i = 0; i < geom.n_x; ++i) px[i] = i * geom.d_x + (cfg.perturbed_distances ? e.spacing.eps_x[i] : 0.0);
    for (int j = 0; j < geom.n_y; ++j) py[j] = j * geom.d_y + (cfg.perturbed_distances ? e.spacing.eps_y[j] : 0.0);
    e.coupling = coupling_from_positions(px, py, geom.n_x, lambda_c, cfg.c0);
    return e;
}

std::pair<double, double> angles_to_spatial(double azimuth, double zenith)
{
    return {std::sin(azimuth) * std::cos(zenith), std::sin(azimuth) * std::sin(zenith)};
}

}  // namespace wbcal
