#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "lambdalab/mesh.hpp"

namespace lambdalab {

class ShootingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arclength-parametrized planar curve. Tangent (cos theta, sin theta),
/// normal (sin theta, -cos theta).
struct PlanarCurveState {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
    double s = 0.0;
};

/// Meridian of a surface of revolution about the z-axis; rho >= 0 is the
/// distance to the axis. Same tangent/normal convention as curves.
struct ProfileState {
    double rho = 0.0;
    double z = 0.0;
    double theta = 0.0;
    double s = 0.0;
};

/// kappa = <x, n> / (2 alpha^2) + lambda / alpha. alpha = 1 is the plain
/// lambda-curve; a curve y = alpha x solves the alpha equation.
struct CurveEquation {
    double lambda = 0.0;
    double alpha = 1.0;
    double curvature(double x, double y, double theta) const;
};

/// One trajectory point. (a, b) is (x, y) for curves and (rho, z) for profiles.
struct Sample {
    double s = 0.0;
    double a = 0.0;
    double b = 0.0;
    double theta = 0.0;
    double kappa = 0.0;
};

using Trajectory = std::vector<Sample>;

/// Fixed-step RK4 over [0, length]; the last step is shortened to land on
/// `length`. Throws std::invalid_argument for step <= 0 and ShootingError
/// when |theta'| * step exceeds pi/8.
Trajectory integrate_curve(const PlanarCurveState& init, const CurveEquation& equation, double length, double step);
Trajectory integrate_curve(const PlanarCurveState& init, double lambda, double length, double step);

enum class ProfileEnd { length, axis, pinch };

const char* to_string(ProfileEnd end);

struct ProfileTrajectory {
    Trajectory samples;
    ProfileEnd end = ProfileEnd::length;
    /// When the profile runs into the axis: theta extrapolated to rho = 0.
    /// A regular closing has axis_angle = pi (mod 2 pi); anything else is a
    /// pinch.
    double axis_angle = 0.0;
};

/// A start on the axis (rho = 0) needs theta = 0 and takes its first step
/// from the power series of the regular solution. Integration stops early
/// when the profile returns to within a few steps of the axis.
ProfileTrajectory integrate_profile(const ProfileState& init, double lambda, double length, double step);

enum class Classification { circle, closed_noncircular, open };

const char* to_string(Classification c);

struct CurvatureStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

CurvatureStats curvature_stats(const Trajectory& trajectory);

enum class ShotKind { curve, profile };

struct ShootResult {
    ShotKind kind = ShotKind::curve;
    double lambda = 0.0;
    int symmetry_order = 0;  ///< curves only
    double launch = 0.0;     ///< launch distance from the origin (curves, tori) or axis depth (spheres)
    /// Curves: one full period. Profiles: the closed meridian (axis to axis
    /// for sphere-like shapes, a loop for torus-like shapes).
    Trajectory trajectory;
    /// Position gap plus angle gap after one period.
    double closure_defect = 0.0;
    /// Shooting target at the symmetry section (the quantity driven to 0).
    double section_defect = 0.0;
    Classification classification = Classification::open;
    CurvatureStats curvature_stats;
    int iterations = 0;
};

struct ShootOptions {
    /// RK4 step; 0 selects min(1e-3, period estimate / 4096).
    double step = 0.0;
    double closure_tolerance = 1e-6;
    /// Curvature variance at or below this counts as a circle.
    double circle_variance = 1e-10;
    int max_iterations = 60;
    /// Longest symmetry sector integrated before giving up.
    double max_sector_length = 60.0;
    /// Threads for sweeps; results do not depend on it.
    int jobs = 1;
};

/// Section defect of the curve launched perpendicularly from (launch, 0):
/// the radial component of the unit tangent where the polar angle first
/// reaches pi / symmetry_order. NaN when the sector never closes.
double curve_section_defect(double lambda, int symmetry_order, double launch, const ShootOptions& options = {});

/// Newton on the launch distance from `guess`, falling back to bracketing
/// and bisection. Throws ShootingError when no sign change is found.
ShootResult shoot_closed_curve(double lambda, int symmetry_order, double guess, const ShootOptions& options = {});

/// Grid sweep of launch distances in [lo, hi], bisection on every sign
/// change of the section defect, one entry per distinct closed curve.
std::vector<ShootResult> sweep_closed_curves(double lambda, int symmetry_order, double lo, double hi, int samples,
                                             const ShootOptions& options = {});

enum class RevolutionMode { sphere_like, torus_like };

const char* to_string(RevolutionMode mode);
RevolutionMode parse_revolution_mode(const std::string& text);

/// Section defect of a meridian: sphere-like shapes launch from (0, -launch)
/// on the axis and target theta = pi/2 at z = 0; torus-like shapes launch
/// upward from (launch, 0) and target theta = 3 pi/2 at the next z = 0
/// crossing. NaN when the section is not reached.
double profile_section_defect(double lambda, RevolutionMode mode, double launch, const ShootOptions& options = {});

struct RevolutionResult {
    ShootResult shot;
    TriMesh mesh;
};

/// Shoots the meridian (Newton from `guess`, bracketing fallback), closes it
/// by reflection in z = 0 and revolves it at the given resolution level.
RevolutionResult shoot_revolution(double lambda, RevolutionMode mode, double guess, int level,
                                  const ShootOptions& options = {});

/// Sweep of launches in [lo, hi]; the first closed profile found.
RevolutionResult sweep_revolution(double lambda, RevolutionMode mode, double lo, double hi, int samples, int level,
                                  const ShootOptions& options = {});

/// Revolves a closed meridian into a closed mesh. Sphere-like meridians run
/// axis to axis and get single pole vertices; torus-like meridians are loops.
/// Rings are staggered by half a cell; the resolution doubles per level.
TriMesh revolve_profile(const Trajectory& meridian, RevolutionMode mode, int level);

struct CurveInvariants {
    double min_norm = 0.0;
    double max_norm = 0.0;
    /// sqrt(lambda^2 + 2) - lambda for curves, sqrt(lambda^2 + 4) - lambda for profiles.
    double reference_radius = 0.0;
    bool intersects = false;  ///< min_norm - tol <= reference_radius <= max_norm + tol
    bool strict = false;      ///< min_norm < reference_radius < max_norm, both by more than tol
    double winding_number = 0.0;
    CurvatureStats curvature;
};

/// Throws ShootingError for an open result.
CurveInvariants curve_invariants(const ShootResult& result, double lambda, double tolerance = 1e-4);

/// Columns s, x, y, theta, kappa (x, y hold rho, z for profiles).
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace lambdalab
