#include "lambdalab/shooting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include "lambdalab/parallel.hpp"

namespace lambdalab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Profiles stop this many steps away from the axis when heading into it.
constexpr double kAxisStopSteps = 20.0;

using State = std::array<double, 3>;

template <class Rhs>
State rk4(const State& y, double h, const Rhs& f)
{
    const State k1 = f(y);
    State t;
    for (std::size_t i = 0; i < 3; ++i) {
        t[i] = y[i] + 0.5 * h * k1[i];
    }
    const State k2 = f(t);
    for (std::size_t i = 0; i < 3; ++i) {
        t[i] = y[i] + 0.5 * h * k2[i];
    }
    const State k3 = f(t);
    for (std::size_t i = 0; i < 3; ++i) {
        t[i] = y[i] + h * k3[i];
    }
    const State k4 = f(t);
    State out;
    for (std::size_t i = 0; i < 3; ++i) {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

struct CurveRhs {
    CurveEquation equation;
    double curvature(const State& y) const { return equation.curvature(y[0], y[1], y[2]); }
    State operator()(const State& y) const { return {std::cos(y[2]), std::sin(y[2]), curvature(y)}; }
};

struct ProfileRhs {
    double lambda;
    double curvature(const State& y) const
    {
        const double st = std::sin(y[2]);
        const double ct = std::cos(y[2]);
        return 0.5 * (y[0] * st - y[1] * ct) + lambda - st / y[0];
    }
    State operator()(const State& y) const { return {std::cos(y[2]), std::sin(y[2]), curvature(y)}; }
};

void check_step(double theta_rate, double h)
{
    if (!(std::abs(theta_rate) * h <= kPi / 8.0)) {
        throw ShootingError("step too large: turning per step exceeds pi/8");
    }
}

double wrap_angle(double a)
{
    return std::remainder(a, 2.0 * kPi);
}

Sample make_sample(double s, const State& y, double kappa)
{
    return {s, y[0], y[1], y[2], kappa};
}

// Regular solution leaving the axis at (0, z0) with theta = 0: theta is odd
// and z even in s; theta = a s + b s^3 with a = (-z0/2 + lambda)/2.
struct AxisSeries {
    double z0;
    double a;
    double b;
    AxisSeries(double z, double lambda) : z0(z), a(0.5 * (-0.5 * z + lambda)), b(a * (1.0 + z * a) / 16.0) {}
    State at(double s) const
    {
        const double s2 = s * s;
        return {s - a * a * s * s2 / 6.0, z0 + 0.5 * a * s2 + 0.25 * (b - a * a * a / 6.0) * s2 * s2,
                a * s + b * s * s2};
    }
};

// Regular end on the axis: sin(theta) ~ kappa_axis * rho with kappa_axis the
// mean of the two equal principal curvatures there.
double axis_angle(const State& y, double lambda)
{
    const double st = std::sin(y[2]);
    const double ct = std::cos(y[2]);
    const double kappa_axis = 0.5 * (0.5 * (y[0] * st - y[1] * ct) + lambda);
    return y[2] + std::asin(std::clamp(kappa_axis * y[0], -1.0, 1.0));
}

// Finds tau in (0, 1] with g(rk4(y, tau h)) = 0 given g(y) and g(step) of
// opposite sign (or the end value zero).
template <class Rhs, class G>
State locate_crossing(const State& y, double h, const Rhs& f, const G& g, double& tau_out)
{
    double lo = 0.0;
    double hi = 1.0;
    const double g_lo = g(y);
    for (int it = 0; it < 80 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(rk4(y, mid * h, f));
        if ((gm < 0.0) == (g_lo < 0.0) && gm != 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    tau_out = hi;
    return rk4(y, hi * h, f);
}

double curve_step(double launch, const ShootOptions& options)
{
    return options.step > 0.0 ? options.step : std::min(1e-3, 2.0 * kPi * launch / 4096.0);
}

double profile_step(double launch, RevolutionMode mode, const ShootOptions& options)
{
    if (options.step > 0.0) {
        return options.step;
    }
    const double period = mode == RevolutionMode::sphere_like ? kPi * launch : 2.0 * kPi * launch;
    return std::min(1e-3, period / 4096.0);
}

struct SectionHit {
    bool found = false;
    State state{};
    double s = 0.0;
    Trajectory path;  // filled on request
};

SectionHit curve_sector(double lambda, int order, double launch, double step, double max_length, bool record)
{
    const CurveRhs f{{lambda, 1.0}};
    const double target = kPi / order;
    SectionHit hit;
    State y{launch, 0.0, 0.5 * kPi};
    double phi = 0.0;
    double s = 0.0;
    if (record) {
        hit.path.push_back(make_sample(s, y, f.curvature(y)));
    }
    const auto polar_progress = [&](const State& from, const State& to) {
        return wrap_angle(std::atan2(to[1], to[0]) - std::atan2(from[1], from[0]));
    };
    for (long k = 0; s < max_length; ++k) {
        check_step(f.curvature(y), step);
        const State next = rk4(y, step, f);
        const double phi_next = phi + polar_progress(y, next);
        if (std::abs(phi_next) >= target) {
            const auto g = [&](const State& z) { return std::abs(phi + polar_progress(y, z)) - target; };
            double tau = 1.0;
            hit.state = locate_crossing(y, step, f, g, tau);
            hit.s = s + tau * step;
            hit.found = true;
            if (record) {
                hit.path.push_back(make_sample(hit.s, hit.state, f.curvature(hit.state)));
            }
            return hit;
        }
        phi = phi_next;
        y = next;
        s = static_cast<double>(k + 1) * step;
        if (record) {
            hit.path.push_back(make_sample(s, y, f.curvature(y)));
        }
    }
    return hit;
}

double curve_defect_from(const SectionHit& hit)
{
    if (!hit.found) {
        return kNaN;
    }
    const State& y = hit.state;
    const double r = std::hypot(y[0], y[1]);
    return (y[0] * std::cos(y[2]) + y[1] * std::sin(y[2])) / r;
}

double profile_target(RevolutionMode mode)
{
    return mode == RevolutionMode::sphere_like ? 0.5 * kPi : 1.5 * kPi;
}

SectionHit profile_section(double lambda, RevolutionMode mode, double launch, double step, double max_length,
                           bool record)
{
    const ProfileRhs f{lambda};
    SectionHit hit;
    State y;
    double s = 0.0;
    long k = 0;
    if (mode == RevolutionMode::sphere_like) {
        const AxisSeries series(-launch, lambda);
        if (record) {
            hit.path.push_back(make_sample(0.0, {0.0, -launch, 0.0}, series.a));
        }
        y = series.at(step);
        s = step;
        k = 1;
    } else {
        y = {launch, 0.0, 0.5 * kPi};
    }
    if (record) {
        hit.path.push_back(make_sample(s, y, f.curvature(y)));
    }
    const auto g = [](const State& z) { return z[1]; };
    while (s < max_length) {
        if (y[0] <= kAxisStopSteps * step && std::cos(y[2]) < 0.0) {
            return hit;  // ran into the axis before the section
        }
        check_step(f.curvature(y), step);
        const State next = rk4(y, step, f);
        if (!(next[0] > 0.0) || !std::isfinite(next[2])) {
            return hit;
        }
        const bool crossed = mode == RevolutionMode::sphere_like ? (y[1] < 0.0 && next[1] >= 0.0)
                                                                 : (y[1] > 0.0 && next[1] <= 0.0);
        if (crossed) {
            double tau = 1.0;
            hit.state = locate_crossing(y, step, f, g, tau);
            hit.state[1] = 0.0;
            hit.s = s + tau * step;
            hit.found = true;
            if (record) {
                hit.path.push_back(make_sample(hit.s, hit.state, f.curvature(hit.state)));
            }
            return hit;
        }
        y = next;
        ++k;
        s = static_cast<double>(k) * step;
        if (record) {
            hit.path.push_back(make_sample(s, y, f.curvature(y)));
        }
    }
    return hit;
}

// Newton with a forward-difference slope from `guess`; on failure, bisection
// on the sign change nearest to the guess within [guess/2, 3 guess/2].
template <class F>
double solve_launch(const F& defect, double guess, int max_iterations, int& iterations)
{
    double x = guess;
    iterations = 0;
    for (int it = 0; it < max_iterations; ++it) {
        const double fx = defect(x);
        if (!std::isfinite(fx)) {
            break;
        }
        if (std::abs(fx) < 1e-12) {
            iterations = it;
            return x;
        }
        const double dx = 1e-7 * std::max(1.0, std::abs(x));
        const double slope = (defect(x + dx) - fx) / dx;
        if (!std::isfinite(slope) || slope == 0.0) {
            break;
        }
        double next = x - fx / slope;
        next = std::clamp(next, 0.75 * x, 1.25 * x);
        if (!(next > 0.0)) {
            break;
        }
        x = next;
        iterations = it + 1;
    }

    const int samples = 64;
    const double lo = 0.5 * guess;
    const double hi = 1.5 * guess;
    std::vector<double> xs(samples + 1);
    std::vector<double> fs(samples + 1);
    for (int i = 0; i <= samples; ++i) {
        xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / samples;
        fs[static_cast<std::size_t>(i)] = defect(xs[static_cast<std::size_t>(i)]);
    }
    double best = kNaN;
    for (int i = 0; i < samples; ++i) {
        const double fa = fs[static_cast<std::size_t>(i)];
        const double fb = fs[static_cast<std::size_t>(i + 1)];
        if (!std::isfinite(fa) || !std::isfinite(fb) || (fa > 0.0) == (fb > 0.0)) {
            continue;
        }
        double a = xs[static_cast<std::size_t>(i)];
        double b = xs[static_cast<std::size_t>(i + 1)];
        double fa_it = fa;
        for (int it = 0; it < 100 && b - a > 1e-15 * b; ++it) {
            const double m = 0.5 * (a + b);
            const double fm = defect(m);
            if (!std::isfinite(fm)) {
                break;
            }
            if ((fm > 0.0) == (fa_it > 0.0)) {
                a = m;
                fa_it = fm;
            } else {
                b = m;
            }
        }
        const double root = 0.5 * (a + b);
        const double fr = defect(root);
        if (std::isfinite(fr) && std::abs(fr) < 1e-8
            && (!std::isfinite(best) || std::abs(root - guess) < std::abs(best - guess))) {
            best = root;
        }
    }
    if (!std::isfinite(best)) {
        throw ShootingError("no sign change of the section defect near the guess");
    }
    iterations = max_iterations;
    return best;
}

double angle_gap(double a, double b)
{
    return std::abs(wrap_angle(a - b));
}

void classify(ShootResult& r, const ShootOptions& options)
{
    r.curvature_stats = curvature_stats(r.trajectory);
    if (r.closure_defect <= options.closure_tolerance) {
        r.classification = r.curvature_stats.variance <= options.circle_variance ? Classification::circle
                                                                                 : Classification::closed_noncircular;
    } else {
        r.classification = Classification::open;
    }
}

ShootResult finish_curve(double lambda, int order, double launch, double step, const ShootOptions& options)
{
    ShootResult r;
    r.kind = ShotKind::curve;
    r.lambda = lambda;
    r.symmetry_order = order;
    r.launch = launch;
    const SectionHit hit = curve_sector(lambda, order, launch, step, options.max_sector_length, false);
    r.section_defect = curve_defect_from(hit);
    if (!hit.found) {
        r.closure_defect = std::numeric_limits<double>::infinity();
        r.classification = Classification::open;
        return r;
    }
    const PlanarCurveState start{launch, 0.0, 0.5 * kPi, 0.0};
    r.trajectory = integrate_curve(start, lambda, 2.0 * order * hit.s, step);
    const Sample& end = r.trajectory.back();
    r.closure_defect = std::hypot(end.a - start.x, end.b - start.y) + angle_gap(end.theta, start.theta);
    classify(r, options);
    return r;
}

Trajectory reflect_meridian(const Trajectory& half, double section_angle)
{
    Trajectory full = half;
    const double length = half.back().s;
    for (std::size_t k = half.size() - 1; k-- > 0;) {
        const Sample& p = half[k];
        full.push_back({2.0 * length - p.s, p.a, -p.b, 2.0 * section_angle - p.theta, p.kappa});
    }
    return full;
}

ShootResult finish_profile(double lambda, RevolutionMode mode, double launch, double step,
                           const ShootOptions& options)
{
    ShootResult r;
    r.kind = ShotKind::profile;
    r.lambda = lambda;
    r.launch = launch;
    SectionHit hit = profile_section(lambda, mode, launch, step, options.max_sector_length, true);
    if (!hit.found) {
        r.section_defect = kNaN;
        r.closure_defect = std::numeric_limits<double>::infinity();
        return r;
    }
    const double target = profile_target(mode);
    r.section_defect = hit.state[2] - target;
    r.trajectory = reflect_meridian(hit.path, target);
    // The reflected meridian closes exactly in position; the remaining gap is
    // the kink at the section.
    r.closure_defect = 2.0 * std::abs(r.section_defect);
    classify(r, options);
    if (r.classification == Classification::closed_noncircular && mode == RevolutionMode::sphere_like) {
        // Meridian curvature of a round sphere is constant; call it a circle
        // when the profile stays at fixed distance from the origin.
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (const Sample& p : r.trajectory) {
            const double d = std::hypot(p.a, p.b);
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        if (hi - lo <= 1e-6 * hi) {
            r.classification = Classification::circle;
        }
    }
    return r;
}

// Hermite interpolation of a trajectory at arclength s using unit tangents.
std::array<double, 2> sample_at(const Trajectory& t, double s)
{
    auto it = std::upper_bound(t.begin(), t.end(), s, [](double v, const Sample& p) { return v < p.s; });
    std::size_t k = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    k = std::min(k, t.size() - 2);
    const Sample& p = t[k];
    const Sample& q = t[k + 1];
    const double h = q.s - p.s;
    if (h <= 0.0) {
        return {p.a, p.b};
    }
    const double u = std::clamp((s - p.s) / h, 0.0, 1.0);
    const double h00 = 2 * u * u * u - 3 * u * u + 1;
    const double h10 = u * u * u - 2 * u * u + u;
    const double h01 = -2 * u * u * u + 3 * u * u;
    const double h11 = u * u * u - u * u;
    return {h00 * p.a + h10 * h * std::cos(p.theta) + h01 * q.a + h11 * h * std::cos(q.theta),
            h00 * p.b + h10 * h * std::sin(p.theta) + h01 * q.b + h11 * h * std::sin(q.theta)};
}

}  // namespace

double CurveEquation::curvature(double x, double y, double theta) const
{
    return (x * std::sin(theta) - y * std::cos(theta)) / (2.0 * alpha * alpha) + lambda / alpha;
}

const char* to_string(ProfileEnd end)
{
    switch (end) {
    case ProfileEnd::length:
        return "length";
    case ProfileEnd::axis:
        return "axis";
    case ProfileEnd::pinch:
        return "pinch";
    }
    return "?";
}

const char* to_string(Classification c)
{
    switch (c) {
    case Classification::circle:
        return "circle";
    case Classification::closed_noncircular:
        return "closed_noncircular";
    case Classification::open:
        return "open";
    }
    return "?";
}

const char* to_string(RevolutionMode mode)
{
    return mode == RevolutionMode::sphere_like ? "sphere_like" : "torus_like";
}

RevolutionMode parse_revolution_mode(const std::string& text)
{
    if (text == "sphere_like" || text == "sphere-like" || text == "sphere") {
        return RevolutionMode::sphere_like;
    }
    if (text == "torus_like" || text == "torus-like" || text == "torus") {
        return RevolutionMode::torus_like;
    }
    throw std::invalid_argument("unknown revolution mode '" + text + "' (expected sphere_like or torus_like)");
}

Trajectory integrate_curve(const PlanarCurveState& init, const CurveEquation& equation, double length, double step)
{
    if (!(step > 0.0)) {
        throw std::invalid_argument("integrate_curve: step must be positive");
    }
    if (!(length >= 0.0)) {
        throw std::invalid_argument("integrate_curve: length must be non-negative");
    }
    const CurveRhs f{equation};
    State y{init.x, init.y, init.theta};
    Trajectory out;
    out.push_back(make_sample(init.s, y, f.curvature(y)));
    const auto steps = static_cast<long>(std::ceil(length / step - 1e-9));
    for (long k = 0; k < steps; ++k) {
        const double h = k + 1 < steps ? step : length - static_cast<double>(steps - 1) * step;
        check_step(f.curvature(y), h);
        y = rk4(y, h, f);
        const double s = k + 1 < steps ? init.s + static_cast<double>(k + 1) * step : init.s + length;
        out.push_back(make_sample(s, y, f.curvature(y)));
    }
    return out;
}

Trajectory integrate_curve(const PlanarCurveState& init, double lambda, double length, double step)
{
    return integrate_curve(init, CurveEquation{lambda, 1.0}, length, step);
}

ProfileTrajectory integrate_profile(const ProfileState& init, double lambda, double length, double step)
{
    if (!(step > 0.0)) {
        throw std::invalid_argument("integrate_profile: step must be positive");
    }
    if (!(init.rho >= 0.0)) {
        throw std::invalid_argument("integrate_profile: rho must be non-negative");
    }
    const ProfileRhs f{lambda};
    ProfileTrajectory out;
    State y;
    double s = init.s;
    long k = 0;
    if (init.rho == 0.0) {
        if (init.theta != 0.0) {
            throw std::invalid_argument("integrate_profile: an axis start needs theta = 0");
        }
        const AxisSeries series(init.z, lambda);
        out.samples.push_back(make_sample(s, {0.0, init.z, 0.0}, series.a));
        const double h = std::min(step, length);
        y = series.at(h);
        k = 1;
        s = init.s + h;
        out.samples.push_back(make_sample(s, y, f.curvature(y)));
    } else {
        y = {init.rho, init.z, init.theta};
        out.samples.push_back(make_sample(s, y, f.curvature(y)));
    }
    const auto steps = static_cast<long>(std::ceil(length / step - 1e-9));
    for (; k < steps; ++k) {
        if (y[0] <= kAxisStopSteps * step && std::cos(y[2]) < 0.0) {
            out.axis_angle = axis_angle(y, lambda);
            const double off = wrap_angle(out.axis_angle - kPi);
            out.end = std::abs(off) < 1e-3 ? ProfileEnd::axis : ProfileEnd::pinch;
            return out;
        }
        const double h = k + 1 < steps ? step : length - static_cast<double>(steps - 1) * step;
        check_step(f.curvature(y), h);
        y = rk4(y, h, f);
        if (!(y[0] > 0.0)) {
            out.end = ProfileEnd::pinch;
            out.axis_angle = y[2];
            return out;
        }
        s = k + 1 < steps ? init.s + static_cast<double>(k + 1) * step : init.s + length;
        out.samples.push_back(make_sample(s, y, f.curvature(y)));
    }
    return out;
}

CurvatureStats curvature_stats(const Trajectory& trajectory)
{
    CurvatureStats st;
    if (trajectory.size() < 2) {
        if (!trajectory.empty()) {
            st.min = st.max = st.mean = trajectory.front().kappa;
        }
        return st;
    }
    // Arclength-weighted (trapezoid) moments.
    st.min = std::numeric_limits<double>::infinity();
    st.max = -st.min;
    double length = 0.0;
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::size_t k = 0; k + 1 < trajectory.size(); ++k) {
        const double h = trajectory[k + 1].s - trajectory[k].s;
        const double a = trajectory[k].kappa;
        const double b = trajectory[k + 1].kappa;
        length += h;
        sum += 0.5 * h * (a + b);
        sum2 += 0.5 * h * (a * a + b * b);
    }
    for (const Sample& p : trajectory) {
        st.min = std::min(st.min, p.kappa);
        st.max = std::max(st.max, p.kappa);
    }
    if (length > 0.0) {
        st.mean = sum / length;
        st.variance = std::max(0.0, sum2 / length - st.mean * st.mean);
    }
    return st;
}

double curve_section_defect(double lambda, int symmetry_order, double launch, const ShootOptions& options)
{
    if (symmetry_order < 1) {
        throw std::invalid_argument("symmetry order must be at least 1");
    }
    if (!(launch > 0.0)) {
        return kNaN;
    }
    return curve_defect_from(curve_sector(lambda, symmetry_order, launch, curve_step(launch, options),
                                          options.max_sector_length, false));
}

ShootResult shoot_closed_curve(double lambda, int symmetry_order, double guess, const ShootOptions& options)
{
    if (symmetry_order < 1) {
        throw std::invalid_argument("symmetry order must be at least 1");
    }
    if (!(guess > 0.0)) {
        throw std::invalid_argument("launch guess must be positive");
    }
    const double step = curve_step(guess, options);
    const auto defect = [&](double d) {
        return d > 0.0 ? curve_defect_from(curve_sector(lambda, symmetry_order, d, step, options.max_sector_length,
                                                        false))
                       : kNaN;
    };
    int iterations = 0;
    const double launch = solve_launch(defect, guess, options.max_iterations, iterations);
    ShootResult r = finish_curve(lambda, symmetry_order, launch, step, options);
    r.iterations = iterations;
    return r;
}

std::vector<ShootResult> sweep_closed_curves(double lambda, int symmetry_order, double lo, double hi, int samples,
                                             const ShootOptions& options)
{
    if (!(lo > 0.0) || !(hi > lo) || samples < 2) {
        throw std::invalid_argument("sweep needs 0 < lo < hi and at least two samples");
    }
    if (symmetry_order < 1) {
        throw std::invalid_argument("symmetry order must be at least 1");
    }
    const double step = curve_step(lo, options);
    const auto defect = [&](double d) {
        return curve_defect_from(curve_sector(lambda, symmetry_order, d, step, options.max_sector_length, false));
    };
    std::vector<double> xs(static_cast<std::size_t>(samples));
    std::vector<double> fs(static_cast<std::size_t>(samples));
    parallel_for(samples, options.jobs, [&](int i) {
        xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (samples - 1);
        fs[static_cast<std::size_t>(i)] = defect(xs[static_cast<std::size_t>(i)]);
    });

    std::vector<int> brackets;
    for (int i = 0; i + 1 < samples; ++i) {
        const double fa = fs[static_cast<std::size_t>(i)];
        const double fb = fs[static_cast<std::size_t>(i + 1)];
        if (std::isfinite(fa) && std::isfinite(fb) && (fa > 0.0) != (fb > 0.0)) {
            brackets.push_back(i);
        }
    }
    std::vector<ShootResult> found(brackets.size());
    std::vector<std::uint8_t> valid(brackets.size(), 0);
    parallel_for(static_cast<int>(brackets.size()), options.jobs, [&](int j) {
        const auto i = static_cast<std::size_t>(brackets[static_cast<std::size_t>(j)]);
        double a = xs[i];
        double b = xs[i + 1];
        double fa = fs[i];
        int it = 0;
        for (; it < 100 && b - a > 1e-15 * b; ++it) {
            const double m = 0.5 * (a + b);
            const double fm = defect(m);
            if (!std::isfinite(fm)) {
                return;
            }
            if ((fm > 0.0) == (fa > 0.0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        const double root = 0.5 * (a + b);
        const double fr = defect(root);
        // A jump of the section point between lobes also flips the sign.
        if (!std::isfinite(fr) || std::abs(fr) > 1e-8) {
            return;
        }
        found[static_cast<std::size_t>(j)] = finish_curve(lambda, symmetry_order, root, step, options);
        found[static_cast<std::size_t>(j)].iterations = it;
        valid[static_cast<std::size_t>(j)] = 1;
    });

    std::vector<ShootResult> out;
    std::vector<CurveInvariants> seen;
    for (std::size_t j = 0; j < found.size(); ++j) {
        if (!valid[j] || found[j].classification == Classification::open) {
            continue;
        }
        const CurveInvariants inv = curve_invariants(found[j], lambda);
        bool duplicate = false;
        for (const CurveInvariants& other : seen) {
            duplicate = duplicate
                        || (std::abs(inv.min_norm - other.min_norm) < 1e-6
                            && std::abs(inv.max_norm - other.max_norm) < 1e-6
                            && std::abs(inv.winding_number - other.winding_number) < 0.5);
        }
        if (!duplicate) {
            seen.push_back(inv);
            out.push_back(std::move(found[j]));
        }
    }
    return out;
}

double profile_section_defect(double lambda, RevolutionMode mode, double launch, const ShootOptions& options)
{
    if (!(launch > 0.0)) {
        return kNaN;
    }
    const SectionHit hit = profile_section(lambda, mode, launch, profile_step(launch, mode, options),
                                           options.max_sector_length, false);
    return hit.found ? hit.state[2] - profile_target(mode) : kNaN;
}

RevolutionResult shoot_revolution(double lambda, RevolutionMode mode, double guess, int level,
                                  const ShootOptions& options)
{
    if (!(guess > 0.0)) {
        throw std::invalid_argument("launch guess must be positive");
    }
    const double step = profile_step(guess, mode, options);
    const auto defect = [&](double d) {
        if (!(d > 0.0)) {
            return kNaN;
        }
        const SectionHit hit = profile_section(lambda, mode, d, step, options.max_sector_length, false);
        return hit.found ? hit.state[2] - profile_target(mode) : kNaN;
    };
    int iterations = 0;
    const double launch = solve_launch(defect, guess, options.max_iterations, iterations);
    RevolutionResult out;
    out.shot = finish_profile(lambda, mode, launch, step, options);
    out.shot.iterations = iterations;
    if (out.shot.classification == Classification::open) {
        throw ShootingError("meridian did not close");
    }
    out.mesh = revolve_profile(out.shot.trajectory, mode, level);
    return out;
}

RevolutionResult sweep_revolution(double lambda, RevolutionMode mode, double lo, double hi, int samples, int level,
                                  const ShootOptions& options)
{
    if (!(lo > 0.0) || !(hi > lo) || samples < 2) {
        throw std::invalid_argument("sweep needs 0 < lo < hi and at least two samples");
    }
    const double step = profile_step(lo, mode, options);
    const auto defect = [&](double d) {
        const SectionHit hit = profile_section(lambda, mode, d, step, options.max_sector_length, false);
        return hit.found ? hit.state[2] - profile_target(mode) : kNaN;
    };
    std::vector<double> fs(static_cast<std::size_t>(samples));
    const auto at = [&](int i) { return lo + (hi - lo) * i / (samples - 1); };
    parallel_for(samples, options.jobs, [&](int i) { fs[static_cast<std::size_t>(i)] = defect(at(i)); });
    for (int i = 0; i + 1 < samples; ++i) {
        double fa = fs[static_cast<std::size_t>(i)];
        const double fb = fs[static_cast<std::size_t>(i + 1)];
        if (!std::isfinite(fa) || !std::isfinite(fb) || (fa > 0.0) == (fb > 0.0)) {
            continue;
        }
        double a = at(i);
        double b = at(i + 1);
        int it = 0;
        for (; it < 100 && b - a > 1e-15 * b; ++it) {
            const double m = 0.5 * (a + b);
            const double fm = defect(m);
            if (!std::isfinite(fm)) {
                break;
            }
            if ((fm > 0.0) == (fa > 0.0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        const double root = 0.5 * (a + b);
        RevolutionResult out;
        out.shot = finish_profile(lambda, mode, root, step, options);
        out.shot.iterations = it;
        if (out.shot.classification == Classification::open) {
            continue;
        }
        out.mesh = revolve_profile(out.shot.trajectory, mode, level);
        return out;
    }
    throw ShootingError("no closed meridian found in the sweep range");
}

TriMesh revolve_profile(const Trajectory& meridian, RevolutionMode mode, int level)
{
    if (level < 0 || level > 8) {
        throw std::invalid_argument("revolve_profile: level must be in [0, 8]");
    }
    if (meridian.size() < 4) {
        throw std::invalid_argument("revolve_profile: meridian too short");
    }
    // Arclength of every ring. Sphere-like: uniform in arclength between the
    // poles. Torus-like: uniform in the conformal parameter int ds / rho, so
    // staggered cells stay close to equilateral however much rho varies.
    std::vector<double> ring_s;
    int around = 0;
    if (mode == RevolutionMode::sphere_like) {
        const int segments = 4 << level;
        const double h = (meridian.back().s - meridian.front().s) / segments;
        around = 2 * segments;
        for (int k = 0; k <= segments; ++k) {
            ring_s.push_back(meridian.front().s + h * k);
        }
    } else {
        around = 8 << level;
        std::vector<double> tau(meridian.size(), 0.0);
        for (std::size_t k = 1; k < meridian.size(); ++k) {
            const Sample& p = meridian[k - 1];
            const Sample& q = meridian[k];
            if (!(p.a > 0.0) || !(q.a > 0.0)) {
                throw std::invalid_argument("revolve_profile: torus-like meridian touches the axis");
            }
            tau[k] = tau[k - 1] + 0.5 * (q.s - p.s) * (1.0 / p.a + 1.0 / q.a);
        }
        const double cell = 2.0 * kPi / around;
        int rings_total = static_cast<int>(std::lround(tau.back() / (0.5 * std::sqrt(3.0) * cell)));
        rings_total = std::max(4, rings_total + rings_total % 2);  // even, so the stagger closes up
        for (int k = 0; k < rings_total; ++k) {
            const double t = tau.back() * k / rings_total;
            const auto hi = static_cast<std::size_t>(std::upper_bound(tau.begin(), tau.end(), t) - tau.begin());
            const std::size_t i = std::clamp<std::size_t>(hi, 1, tau.size() - 1) - 1;
            const double w = tau[i + 1] > tau[i] ? (t - tau[i]) / (tau[i + 1] - tau[i]) : 0.0;
            ring_s.push_back(meridian[i].s + w * (meridian[i + 1].s - meridian[i].s));
        }
    }

    std::vector<Vec3> x;
    std::vector<Face> faces;
    std::vector<std::vector<int>> rings;
    const auto add_ring = [&](int k) {
        const auto [rho, z] = sample_at(meridian, ring_s[static_cast<std::size_t>(k)]);
        std::vector<int> ring;
        const double offset = 0.5 * (k % 2);
        for (int j = 0; j < around; ++j) {
            const double phi = 2.0 * kPi * (j + offset) / around;
            ring.push_back(static_cast<int>(x.size()));
            x.emplace_back(rho * std::cos(phi), rho * std::sin(phi), z);
        }
        rings.push_back(std::move(ring));
    };
    // Strip between consecutive rings; `shifted` when the upper ring sits
    // half a cell behind the lower one.
    const auto strip = [&](const std::vector<int>& lower, const std::vector<int>& upper, bool shifted) {
        const int n = static_cast<int>(lower.size());
        for (int j = 0; j < n; ++j) {
            const int j1 = (j + 1) % n;
            const int u0 = upper[static_cast<std::size_t>(shifted ? j1 : j)];
            const int u1 = upper[static_cast<std::size_t>(shifted ? (j + 2) % n : j1)];
            faces.push_back({lower[static_cast<std::size_t>(j)], lower[static_cast<std::size_t>(j1)], u0});
            faces.push_back({u0, lower[static_cast<std::size_t>(j1)], u1});
        }
    };

    if (mode == RevolutionMode::sphere_like) {
        const Sample& bottom = meridian.front();
        const Sample& top = meridian.back();
        x.emplace_back(0.0, 0.0, bottom.b);
        const int segments = static_cast<int>(ring_s.size()) - 1;
        for (int k = 1; k < segments; ++k) {
            add_ring(k);
        }
        const int top_index = static_cast<int>(x.size());
        x.emplace_back(0.0, 0.0, top.b);
        const auto& first = rings.front();
        for (int j = 0; j < around; ++j) {
            faces.push_back({0, first[static_cast<std::size_t>((j + 1) % around)], first[static_cast<std::size_t>(j)]});
        }
        for (std::size_t k = 0; k + 1 < rings.size(); ++k) {
            strip(rings[k], rings[k + 1], (k + 1) % 2 == 1);  // rings[k] is ring k + 1
        }
        const auto& last = rings.back();
        for (int j = 0; j < around; ++j) {
            faces.push_back({last[static_cast<std::size_t>(j)], last[static_cast<std::size_t>((j + 1) % around)], top_index});
        }
    } else {
        const int segments = static_cast<int>(ring_s.size());
        for (int k = 0; k < segments; ++k) {
            add_ring(k);
        }
        for (int k = 0; k < segments; ++k) {
            const int k1 = (k + 1) % segments;
            strip(rings[static_cast<std::size_t>(k)], rings[static_cast<std::size_t>(k1)], k % 2 == 1);
        }
    }

    TriMesh mesh(x, faces);
    double volume = 0.0;
    for (const Face& f : mesh.faces()) {
        volume += x[static_cast<std::size_t>(f[0])].dot(
            x[static_cast<std::size_t>(f[1])].cross(x[static_cast<std::size_t>(f[2])]));
    }
    if (volume < 0.0) {
        for (Face& f : faces) {
            std::swap(f[1], f[2]);
        }
        mesh = TriMesh(std::move(x), std::move(faces));
    }
    return mesh;
}

CurveInvariants curve_invariants(const ShootResult& result, double lambda, double tolerance)
{
    if (result.classification == Classification::open || result.trajectory.empty()) {
        throw ShootingError("curve invariants need a closed trajectory");
    }
    CurveInvariants inv;
    inv.min_norm = std::numeric_limits<double>::infinity();
    for (const Sample& p : result.trajectory) {
        const double d = std::hypot(p.a, p.b);
        inv.min_norm = std::min(inv.min_norm, d);
        inv.max_norm = std::max(inv.max_norm, d);
    }
    const double c = result.kind == ShotKind::curve ? 2.0 : 4.0;
    inv.reference_radius = std::sqrt(lambda * lambda + c) - lambda;
    inv.intersects = inv.min_norm - tolerance <= inv.reference_radius && inv.reference_radius <= inv.max_norm + tolerance;
    inv.strict = inv.min_norm + tolerance < inv.reference_radius && inv.reference_radius < inv.max_norm - tolerance;
    inv.winding_number = (result.trajectory.back().theta - result.trajectory.front().theta) / (2.0 * kPi);
    inv.curvature = curvature_stats(result.trajectory);
    return inv;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory)
{
    out << "s,x,y,theta,kappa\n" << std::setprecision(17);
    for (const Sample& p : trajectory) {
        out << p.s << ',' << p.a << ',' << p.b << ',' << p.theta << ',' << p.kappa << '\n';
    }
}

}  // namespace lambdalab
