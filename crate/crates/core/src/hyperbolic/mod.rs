//! Poincaré disk geometry: distances, Möbius translations, hyperbolic
//! trigonometry, and the lens areas behind the explicit disk scheme.
//!
//! The measure throughout is `4 dx dy / (1 - x^2 - y^2)^2`; in geodesic polar
//! coordinates around any point its area element is `sinh(rho) drho dtheta`.

mod quadrature;

pub use quadrature::{
    area_integral, area_integral_mc, integrate_density, sample_ball, McEstimate, QuadMethod,
    QuadratureSpec,
};

use serde::Serialize;

use crate::window::{SpacePoint, Window};
use crate::{Error, Result};

/// A point strictly inside the unit disk.
#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct DiskPoint {
    pub x: f64,
    pub y: f64,
}

impl DiskPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if x * x + y * y >= 1.0 {
            return Err(Error::param(
                "point",
                format!("({x}, {y}) is on or outside the unit circle"),
            ));
        }
        Ok(DiskPoint { x, y })
    }

    pub fn origin() -> Self {
        DiskPoint { x: 0.0, y: 0.0 }
    }

    /// Point at geodesic distance `rho` from the origin in direction `theta`.
    pub fn from_polar(rho: f64, theta: f64) -> Self {
        let r = (rho / 2.0).tanh();
        DiskPoint {
            x: r * theta.cos(),
            y: r * theta.sin(),
        }
    }

    /// Geodesic distance from the origin.
    pub fn geodesic_radius(&self) -> f64 {
        self.dist(&DiskPoint::origin())
    }

    /// The Möbius translation taking the origin to `self`, applied to `w`:
    /// `(w + z) / (1 + conj(z) w)`. An isometry of the disk.
    pub fn translate_from_origin(&self, w: &DiskPoint) -> DiskPoint {
        let (zx, zy) = (self.x, self.y);
        let (wx, wy) = (w.x, w.y);
        let nx = wx + zx;
        let ny = wy + zy;
        // 1 + conj(z) w
        let dx = 1.0 + zx * wx + zy * wy;
        let dy = zx * wy - zy * wx;
        let den = dx * dx + dy * dy;
        DiskPoint {
            x: (nx * dx + ny * dy) / den,
            y: (ny * dx - nx * dy) / den,
        }
    }

    /// The inverse translation, taking `self` to the origin.
    pub fn translate_to_origin(&self, w: &DiskPoint) -> DiskPoint {
        let neg = DiskPoint {
            x: -self.x,
            y: -self.y,
        };
        neg.translate_from_origin(w)
    }

    /// Point at geodesic distance `rho` from `self` in direction `theta`
    /// (direction measured at the origin and transported by the translation).
    pub fn exp(&self, rho: f64, theta: f64) -> DiskPoint {
        self.translate_from_origin(&DiskPoint::from_polar(rho, theta))
    }
}

impl SpacePoint for DiskPoint {
    /// `d(z, w) = log((1 + delta)/(1 - delta))` with
    /// `delta = |z - w| / |1 - conj(z) w|`; restricts to the
    /// radial formula `log((1 + r)/(1 - r))` when one point is the origin.
    fn dist(&self, other: &Self) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let num = (dx * dx + dy * dy).sqrt();
        // 1 - conj(z) w
        let ax = 1.0 - (self.x * other.x + self.y * other.y);
        let ay = self.x * other.y - self.y * other.x;
        let den = (ax * ax + ay * ay).sqrt();
        let delta = num / den;
        2.0 * delta.atanh()
    }

    fn token(&self) -> String {
        format!("{:.12},{:.12}", self.x, self.y)
    }

    fn euclidean_coords(&self) -> Option<(f64, f64)> {
        Some((self.x, self.y))
    }

    fn from_euclidean_coords(x: f64, y: f64) -> Option<Self> {
        DiskPoint::new(x, y).ok()
    }
}

/// Area of the closed ball of geodesic radius `r`: `2 pi (cosh r - 1)`.
pub fn ball_volume(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::param("r", format!("radius must be >= 0, got {r}")));
    }
    Ok(2.0 * std::f64::consts::PI * (r.cosh() - 1.0))
}

/// Area of a hyperbolic triangle from its angles: `pi - (alpha + beta + gamma)`.
pub fn triangle_area(alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    if alpha < 0.0 || beta < 0.0 || gamma < 0.0 {
        return Err(Error::param("angles", "angles must be >= 0"));
    }
    let sum = alpha + beta + gamma;
    if sum >= std::f64::consts::PI {
        return Err(Error::param(
            "angles",
            format!("angle sum {sum} is not < pi"),
        ));
    }
    Ok(std::f64::consts::PI - sum)
}

/// First law of cosines: the angle opposite side `c` in a triangle with
/// sides `a, b, c`, via `cos gamma = (cosh a cosh b - cosh c)/(sinh a sinh b)`.
pub fn angle_from_sides(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::param("sides", "side lengths must be > 0"));
    }
    let cos_gamma = (a.cosh() * b.cosh() - c.cosh()) / (a.sinh() * b.sinh());
    let tol = 1e-9;
    if cos_gamma > 1.0 + tol || cos_gamma < -1.0 - tol {
        return Err(Error::param(
            "sides",
            format!("no such triangle: cos gamma = {cos_gamma}"),
        ));
    }
    Ok(cos_gamma.clamp(-1.0, 1.0).acos())
}

/// Geometry of the outflow lens `D(z) = B_1(z) ∩ B_r(0)` at `r = d(0, z)`:
/// the circles `C_r(0)` and `C_1(z)` intersect exactly when `r > 1/2`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LensGeometry {
    /// `d(0, z)`.
    pub r: f64,
    /// Angle of the lens at the origin between `0 p+` and `0 z`.
    pub alpha: f64,
    /// Angle at `z` between `z p+` and `z 0`.
    pub beta: f64,
    /// `mu(D(z)) = 2 alpha cosh r + 2 beta (cosh 1 + 1) - 2 pi`.
    pub lens_area: f64,
}

impl LensGeometry {
    /// The intersection points `p+`, `p-` of the two circles, with `z` put
    /// on the positive x-axis.
    pub fn intersection_points(&self) -> (DiskPoint, DiskPoint) {
        (
            DiskPoint::from_polar(self.r, self.alpha),
            DiskPoint::from_polar(self.r, -self.alpha),
        )
    }
}

/// Lens angles and area for `r > 1/2`.
///
/// `cos alpha = (cosh^2 r - cosh 1)/sinh^2 r` is evaluated through
/// `cosh 1 - 1 = 2 sinh^2(1/2)`: with `u = sinh(1/2)/sinh(r)` we get
/// `cos alpha = 1 - 2 u^2`, `sin alpha = 2 u sqrt(1 - u^2)`, which is exact
/// at the tangency radius and survives large `r`. `beta` (< pi/2, since
/// `cos beta = coth r tanh(1/2) > 0`) comes from the hyperbolic law of
/// sines, `sin beta = sin alpha sinh r / sinh 1`, so it vanishes exactly
/// where `alpha = pi`.
pub fn lens_geometry(r: f64) -> Result<LensGeometry> {
    if !(r > 0.5) {
        return Err(Error::param(
            "r",
            format!("lens needs r > 1/2 (circles tangent or nested), got {r}"),
        ));
    }
    Ok(lens_geometry_unchecked(r))
}

pub(crate) fn lens_geometry_unchecked(r: f64) -> LensGeometry {
    let u = (0.5f64.sinh() / r.sinh()).min(1.0);
    let cos_alpha = 1.0 - 2.0 * u * u;
    let sin_alpha = 2.0 * u * (1.0 - u * u).max(0.0).sqrt();
    let alpha = sin_alpha.atan2(cos_alpha);
    let sin_beta = (sin_alpha * r.sinh() / 1f64.sinh()).min(1.0);
    let beta = sin_beta.asin();
    let lens_area =
        2.0 * alpha * r.cosh() + 2.0 * beta * (1f64.cosh() + 1.0) - 2.0 * std::f64::consts::PI;
    LensGeometry {
        r,
        alpha,
        beta,
        lens_area,
    }
}

/// Signed side of `w` relative to the oriented geodesic through `a`, `b`.
pub fn geodesic_side(a: &DiskPoint, b: &DiskPoint, w: &DiskPoint) -> f64 {
    let bt = a.translate_to_origin(b);
    let wt = a.translate_to_origin(w);
    bt.x * wt.y - bt.y * wt.x
}

/// A geodesic triangle, as a membership region (geodesically convex).
#[derive(Clone, Copy, Debug)]
pub struct GeodesicTriangle {
    pub vertices: [DiskPoint; 3],
}

impl GeodesicTriangle {
    pub fn contains(&self, w: &DiskPoint) -> bool {
        let [a, b, c] = &self.vertices;
        for (p, q, opp) in [(a, b, c), (b, c, a), (c, a, b)] {
            let s_opp = geodesic_side(p, q, opp);
            let s_w = geodesic_side(p, q, w);
            if s_opp * s_w < 0.0 {
                return false;
            }
        }
        true
    }
}

/// A circular sector: the part of the ball `B_radius(center)` within angle
/// `half_angle` of the direction toward `toward`.
#[derive(Clone, Copy, Debug)]
pub struct Sector {
    pub center: DiskPoint,
    pub toward: DiskPoint,
    pub half_angle: f64,
    pub radius: f64,
}

impl Sector {
    pub fn contains(&self, w: &DiskPoint) -> bool {
        if self.center.dist(w) > self.radius {
            return false;
        }
        let dir = self.center.translate_to_origin(&self.toward);
        let wt = self.center.translate_to_origin(w);
        let dot = dir.x * wt.x + dir.y * wt.y;
        let cross = dir.x * wt.y - dir.y * wt.x;
        cross.atan2(dot).abs() <= self.half_angle + 1e-15
    }
}

/// Grid of geodesic-polar sample points `r in {0, step, ..., r_max}` times
/// `n_angles` equally spaced directions, as a window of the `r_max`-ball.
pub fn polar_grid_window(r_max: f64, r_step: f64, n_angles: usize) -> Result<Window<DiskPoint>> {
    if !(r_max >= 0.0) || !(r_step > 0.0) || n_angles == 0 {
        return Err(Error::param("grid", "need r_max >= 0, r_step > 0, angles >= 1"));
    }
    let mut points = vec![DiskPoint::origin()];
    let mut r = r_step;
    while r <= r_max + 1e-12 {
        for j in 0..n_angles {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n_angles as f64;
            points.push(DiskPoint::from_polar(r, theta));
        }
        r += r_step;
    }
    Ok(Window::from_ball(points, DiskPoint::origin(), r_max))
}

/// Greedy maximal `delta`-separated net of the `radius`-ball: first-hit
/// insertion over a deterministic measure-uniform sample stream, followed
/// by refinement rounds that keep inserting uncovered probes (an uncovered
/// point is automatically `delta`-separated from the net) until one full
/// round finds no gap.
///
/// The result is `delta`-separated exactly; maximality (covering radius
/// `<= delta`) holds up to the probe resolution and is what the tiling
/// coverage check verifies downstream.
pub fn greedy_net(radius: f64, delta: f64, seed: u64, stream_len: usize) -> Result<Vec<DiskPoint>> {
    if !(radius > 0.0) || !(delta > 0.0) {
        return Err(Error::param("net", "radius and delta must be > 0"));
    }
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut net: Vec<DiskPoint> = vec![DiskPoint::origin()];
    let insert_if_uncovered = |net: &mut Vec<DiskPoint>, p: DiskPoint| {
        if net.iter().all(|q| q.dist(&p) >= delta) {
            net.push(p);
            true
        } else {
            false
        }
    };
    for _ in 0..stream_len {
        let p = sample_ball(&DiskPoint::origin(), radius, &mut rng);
        insert_if_uncovered(&mut net, p);
    }
    let round = (stream_len / 2).max(10_000);
    for _ in 0..32 {
        let mut inserted = false;
        for _ in 0..round {
            let p = sample_ball(&DiskPoint::origin(), radius, &mut rng);
            inserted |= insert_if_uncovered(&mut net, p);
        }
        if !inserted {
            break;
        }
    }
    Ok(net)
}

/// The net as a window of the ball it samples.
pub fn net_window(radius: f64, delta: f64, seed: u64, stream_len: usize) -> Result<Window<DiskPoint>> {
    let net = greedy_net(radius, delta, seed, stream_len)?;
    Ok(Window::from_ball(net, DiskPoint::origin(), radius))
}
