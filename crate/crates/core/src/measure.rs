//! Measure chains: the integral boundary operator, the uniform-measure
//! check, and the explicit scheme on the hyperbolic disk with closed-form
//! and quadrature evaluation.
//!
//! The explicit disk scheme moves one unit of mass from every point to each
//! point at most distance 1 closer to the origin. Its boundary depends only
//! on the geodesic radius `r = d(0, z)` and splits at `r = 1/2`: below, the
//! outflow region is the whole ball `B_r(0)` (nested regime); above, it is
//! the lens `B_1(z) ∩ B_r(0)`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::coarse::Relation;
use crate::discrete::{Coeff, SparseChain0, SparseChain1};
use crate::hyperbolic::{integrate_density, DiskPoint, QuadMethod, QuadratureSpec};
use crate::window::{SpacePoint, Window};
use crate::{Error, Result};

/// A measure on (a window of) the space.
#[derive(Clone, Debug)]
pub enum MeasureSpec {
    /// Counting measure on `S` (all window points when `None`).
    Counting { support: Option<BTreeSet<usize>> },
    /// Nonnegative weights per window point; points absent get weight 0.
    WeightedCounting { weights: BTreeMap<usize, f64> },
    /// The hyperbolic area measure `4 dx dy/(1 - x^2 - y^2)^2`; only
    /// meaningful on disk windows.
    HyperbolicArea,
}

impl MeasureSpec {
    pub fn counting_all() -> Self {
        MeasureSpec::Counting { support: None }
    }

    pub fn counting_on(s: BTreeSet<usize>) -> Self {
        MeasureSpec::Counting { support: Some(s) }
    }

    fn weight(&self, i: usize) -> f64 {
        match self {
            MeasureSpec::Counting { support: None } => 1.0,
            MeasureSpec::Counting { support: Some(s) } => {
                if s.contains(&i) {
                    1.0
                } else {
                    0.0
                }
            }
            MeasureSpec::WeightedCounting { weights } => weights.get(&i).copied().unwrap_or(0.0),
            MeasureSpec::HyperbolicArea => f64::NAN,
        }
    }

    /// `mu(E_x)`: exact for counting measures, quadrature of the section
    /// ball for the hyperbolic area.
    pub fn section_measure<P: SpacePoint>(
        &self,
        e: &Relation<P>,
        w: &Window<P>,
        x: usize,
        quad: &QuadratureSpec,
    ) -> Result<f64> {
        match self {
            MeasureSpec::HyperbolicArea => {
                let center = disk_point(w, x)?;
                let reach = e.reach();
                if !reach.is_finite() {
                    return Err(Error::UnsupportedRelation {
                        kind: "section",
                        reason: "hyperbolic section measure needs a metric relation".into(),
                    });
                }
                let section = move |p: &DiskPoint| center.dist(p) <= reach;
                crate::hyperbolic::area_integral(&section, &center, reach, quad)
            }
            _ => Ok(e
                .section(w, x)?
                .into_iter()
                .map(|j| self.weight(j))
                .sum()),
        }
    }
}

fn disk_point<P: SpacePoint>(w: &Window<P>, i: usize) -> Result<DiskPoint> {
    let p = w.point(i)?;
    match p.euclidean_coords() {
        Some((x, y)) => DiskPoint::new(x, y),
        None => Err(Error::UnsupportedRelation {
            kind: "measure",
            reason: "hyperbolic area measure needs disk points".into(),
        }),
    }
}

/// Sup over sample base points of `mu(E_x)`.
pub fn uniformity_check<P: SpacePoint>(
    mu: &MeasureSpec,
    e: &Relation<P>,
    w: &Window<P>,
    samples: &[usize],
    quad: &QuadratureSpec,
) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for &x in samples {
        let m = mu.section_measure(e, w, x, quad)?;
        if !m.is_finite() {
            return Err(Error::param("measure", "unbounded section encountered"));
        }
        sup = sup.max(m);
    }
    Ok(sup)
}

/// Shared pointwise density evaluator.
pub type PairDensity<P> = Arc<dyn Fn(&P, &P) -> f64 + Send + Sync>;

/// Density of a measure 1-chain.
#[derive(Clone)]
pub enum Density1<P> {
    /// Evaluate at point pairs (hyperbolic chains).
    Pointwise(PairDensity<P>),
    /// Values on window index pairs (chains lifted from sparse chains).
    Indexed(Arc<BTreeMap<(usize, usize), f64>>),
}

/// A bounded measurable density on `X x X` with a declared support
/// entourage and sup-norm bound.
#[derive(Clone)]
pub struct MuChain1<P> {
    pub density: Density1<P>,
    pub sup_bound: f64,
    pub support: Relation<P>,
    pub label: String,
}

impl<P: SpacePoint> MuChain1<P> {
    pub fn eval(&self, w: &Window<P>, i: usize, j: usize) -> Result<f64> {
        match &self.density {
            Density1::Pointwise(f) => Ok(f(w.point(i)?, w.point(j)?)),
            Density1::Indexed(m) => {
                w.check_index(i)?;
                w.check_index(j)?;
                Ok(m.get(&(i, j)).copied().unwrap_or(0.0))
            }
        }
    }

    /// Lift a sparse chain to a measure chain on the same window
    /// (coefficients cast to `f64`).
    pub fn from_sparse<K: Coeff>(
        w: &Window<P>,
        theta: &SparseChain1<K>,
        support: Relation<P>,
    ) -> Result<Self> {
        w.check_id(theta.window())?;
        let map: BTreeMap<(usize, usize), f64> = theta
            .entries()
            .iter()
            .map(|(&k, v)| (k, v.to_f64_lossy()))
            .collect();
        let sup_bound = map.values().fold(0.0f64, |a, v| a.max(v.abs()));
        Ok(MuChain1 {
            density: Density1::Indexed(Arc::new(map)),
            sup_bound,
            support,
            label: "lifted sparse chain".into(),
        })
    }
}

/// A bounded measurable function on `X` (a measure 0-chain).
#[derive(Clone)]
pub struct MuChain0<P> {
    pub evaluator: Arc<dyn Fn(&P) -> f64 + Send + Sync>,
    pub sup_bound: f64,
    pub label: String,
}

/// Integral boundary at one point:
/// `(d c)(x) = int c(y, x) dmu(y) - int c(x, y) dmu(y)`,
/// integrating only over the sections of the support entourage at `x`.
/// Hyperbolic chains integrate by the method in `quad`.
pub fn boundary_mu<P: SpacePoint>(
    c: &MuChain1<P>,
    mu: &MeasureSpec,
    w: &Window<P>,
    x: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    w.check_id(c.support.window())?;
    match mu {
        MeasureSpec::HyperbolicArea => match quad.method {
            QuadMethod::AdaptivePolar => {
                let (center, reach, integrand) = hyperbolic_boundary_integrand(c, w, x)?;
                integrate_density(&integrand, &center, reach, quad)
            }
            QuadMethod::MonteCarlo => Ok(boundary_mu_mc(c, mu, w, x, quad)?.mean),
        },
        _ => {
            let transpose = c.support.transpose(w)?;
            let mut inflow = 0.0;
            for y in transpose.section(w, x)? {
                inflow += c.eval(w, y, x)? * mu.weight(y);
            }
            let mut outflow = 0.0;
            for y in c.support.section(w, x)? {
                outflow += c.eval(w, x, y)? * mu.weight(y);
            }
            Ok(inflow - outflow)
        }
    }
}

/// Monte Carlo estimate of the hyperbolic boundary at a point, with its
/// standard error. Deterministic given `quad.seed`.
pub fn boundary_mu_mc<P: SpacePoint>(
    c: &MuChain1<P>,
    mu: &MeasureSpec,
    w: &Window<P>,
    x: usize,
    quad: &QuadratureSpec,
) -> Result<crate::hyperbolic::McEstimate> {
    use rand::SeedableRng;
    w.check_id(c.support.window())?;
    if !matches!(mu, MeasureSpec::HyperbolicArea) {
        return Err(Error::UnsupportedRelation {
            kind: "measure",
            reason: "Monte Carlo boundary estimates are for the hyperbolic measure".into(),
        });
    }
    let (center, reach, integrand) = hyperbolic_boundary_integrand(c, w, x)?;
    let ball = crate::hyperbolic::ball_volume(reach)?;
    let n = quad.mc_samples.max(1);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(quad.seed);
    let (mut sum, mut sumsq) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let v = integrand(&crate::hyperbolic::sample_ball(&center, reach, &mut rng));
        sum += v;
        sumsq += v * v;
    }
    let mean = sum / n as f64;
    let var = (sumsq / n as f64 - mean * mean).max(0.0);
    Ok(crate::hyperbolic::McEstimate {
        mean: ball * mean,
        stderr: ball * (var / n as f64).sqrt(),
        samples: n,
    })
}

type SectionIntegrand = Box<dyn Fn(&DiskPoint) -> f64 + Send + Sync>;

fn hyperbolic_boundary_integrand<P: SpacePoint>(
    c: &MuChain1<P>,
    w: &Window<P>,
    x: usize,
) -> Result<(DiskPoint, f64, SectionIntegrand)> {
    let reach = c.support.reach();
    if !reach.is_finite() {
        return Err(Error::UnsupportedRelation {
            kind: "support entourage",
            reason: "hyperbolic boundary needs a metric support entourage".into(),
        });
    }
    let Density1::Pointwise(f) = &c.density else {
        return Err(Error::UnsupportedRelation {
            kind: "density",
            reason: "hyperbolic boundary needs a pointwise density".into(),
        });
    };
    let f = Arc::clone(f);
    let center = disk_point(w, x)?;
    let xp = w.point(x)?.clone();
    // inflow minus outflow in a single pass over the section ball
    let integrand = move |p: &DiskPoint| -> f64 {
        let q = match P::from_euclidean_coords(p.x, p.y) {
            Some(q) => q,
            None => return 0.0,
        };
        f(&q, &xp) - f(&xp, &q)
    };
    Ok((center, reach, Box::new(integrand)))
}

/// The well-definedness bound
/// `|d c (x)| <= ||c|| (mu((E_c^T)_x) + mu((E_c)_x))`.
pub fn boundary_bound<P: SpacePoint>(
    c: &MuChain1<P>,
    mu: &MeasureSpec,
    w: &Window<P>,
    x: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let direct = mu.section_measure(&c.support, w, x, quad)?;
    let transposed = match mu {
        // metric supports are symmetric; reuse the section measure
        MeasureSpec::HyperbolicArea => direct,
        _ => mu.section_measure(&c.support.transpose(w)?, w, x, quad)?,
    };
    Ok(c.sup_bound * (direct + transposed))
}

/// Weighted counting boundary of a sparse chain, exact in the coefficient
/// ring: `(d c)(x) = sum_y c(y, x) w(y) - sum_y c(x, y) w(y)`.
///
/// With unit weights on the chain's support this equals [`boundary`]
/// exactly: a uniform chain supported on `S x S` is a counting-measure
/// chain for the counting measure on `S`.
pub fn boundary_weighted<K: Coeff, P: SpacePoint>(
    theta: &SparseChain1<K>,
    weights: &BTreeMap<usize, K>,
    w: &Window<P>,
) -> Result<SparseChain0<K>> {
    w.check_id(theta.window())?;
    let mut entries: BTreeMap<usize, K> = BTreeMap::new();
    for (&(i, j), v) in theta.entries() {
        // the weight attaches to the integrated variable: inflow into j sums
        // c(i, j) w(i), outflow from i sums c(i, j) w(j)
        let w_in = weights.get(&i).cloned().unwrap_or_else(K::zero);
        let w_out = weights.get(&j).cloned().unwrap_or_else(K::zero);
        let vin = v.clone() * w_in;
        let vout = v.clone() * w_out;
        entries
            .entry(j)
            .and_modify(|e| *e = e.clone() + vin.clone())
            .or_insert(vin);
        entries
            .entry(i)
            .and_modify(|e| *e = e.clone() - vout.clone())
            .or_insert_with(|| K::zero() - vout);
    }
    entries.retain(|_, v| !v.is_zero());
    let support = theta.support_set().clone();
    SparseChain0::new(w, support, entries)
}

/// Unit weights on `S`.
pub fn counting_weights<K: Coeff>(s: &BTreeSet<usize>) -> BTreeMap<usize, K> {
    s.iter().map(|&i| (i, K::one())).collect()
}

/// The explicit disk scheme's density: one unit from `z1` to `z2` whenever
/// `d(z1, z2) <= 1` and `z1` is no closer to the origin than `z2`.
pub fn hyperbolic_scheme_density(z1: &DiskPoint, z2: &DiskPoint) -> f64 {
    if z1.dist(z2) <= 1.0 && z1.geodesic_radius() >= z2.geodesic_radius() {
        1.0
    } else {
        0.0
    }
}

/// The scheme packaged as a measure chain on a disk window, with support
/// entourage `E_1` and sup-norm bound 1.
pub fn hyperbolic_scheme(w: &Window<DiskPoint>) -> Result<MuChain1<DiskPoint>> {
    Ok(MuChain1 {
        density: Density1::Pointwise(Arc::new(|a: &DiskPoint, b: &DiskPoint| {
            hyperbolic_scheme_density(a, b)
        })),
        sup_bound: 1.0,
        support: Relation::metric_radius(w, 1.0)?,
        label: "inward unit-mass scheme on the disk".into(),
    })
}

/// Boundary of the scheme in the nested regime `r <= 1/2`, where the
/// outflow region is all of `B_r(0)`:
/// `2 pi (cosh 1 - 1) - 4 pi (cosh r - 1)`.
pub fn boundary_nested_form(r: f64) -> f64 {
    2.0 * std::f64::consts::PI * (1f64.cosh() - 1.0)
        - 4.0 * std::f64::consts::PI * (r.cosh() - 1.0)
}

/// Boundary of the scheme in the lens regime: `mu(B_1) - 2 mu(D(z))`.
/// Defined from the tangency radius `r = 1/2` up (the lens degenerates to
/// the full inner ball there, matching the nested form).
pub fn boundary_lens_form(r: f64) -> Result<f64> {
    if !(r >= 0.5) {
        return Err(Error::param(
            "r",
            format!("lens regime needs r >= 1/2, got {r}"),
        ));
    }
    let lens = crate::hyperbolic::lens_geometry_unchecked(r);
    Ok(2.0 * std::f64::consts::PI * (1f64.cosh() - 1.0) - 2.0 * lens.lens_area)
}

/// Closed-form boundary of the disk scheme at geodesic radius `r`, split at
/// `r = 1/2` (where the two regimes agree).
pub fn boundary_closed_form(r: f64) -> Result<f64> {
    boundary_closed_form_split(r, 0.5)
}

/// Closed form with an explicit split radius, so alternative readings of
/// the case split can be probed; the lens side requires `r > 1/2` and fails
/// loudly below it.
pub fn boundary_closed_form_split(r: f64, split: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::param("r", format!("radius must be >= 0, got {r}")));
    }
    if r <= split {
        Ok(boundary_nested_form(r))
    } else {
        boundary_lens_form(r)
    }
}

/// The effectiveness margin of the disk scheme.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SchemeMargin {
    /// Nested-regime minimum, attained at the split: `mu(B_1) - 4 pi (cosh(1/2) - 1)`.
    pub nested_min: f64,
    /// Closed-form tail value `(1+e)^2 atan((e-1)/(2 sqrt e))/(2e) - (e-1)/e`.
    pub tail_value: f64,
    /// `min(nested_min, tail_value)`.
    pub epsilon: f64,
}

/// Lower bound `epsilon` for the scheme's boundary: the minimum of the
/// nested-regime value at `r = 1/2` and the closed-form tail value.
pub fn epsilon_bound() -> SchemeMargin {
    let e = std::f64::consts::E;
    let nested_min = boundary_nested_form(0.5);
    let tail_value =
        (1.0 + e).powi(2) * ((e - 1.0) / (2.0 * e.sqrt())).atan() / (2.0 * e) - (e - 1.0) / e;
    SchemeMargin {
        nested_min,
        tail_value,
        epsilon: nested_min.min(tail_value),
    }
}

/// The actual `r -> infinity` limit of the lens-regime closed form,
/// `4 (cosh 1 + 1) atan(sinh(1/2)) - 4 sqrt(2 (cosh 1 - 1))`.
///
/// This sits above [`epsilon_bound`]'s tail value, so the published margin
/// stays a valid lower bound; the monotonicity suite checks the grid against
/// this limit.
pub fn lens_tail_limit() -> f64 {
    4.0 * (1f64.cosh() + 1.0) * (0.5f64.sinh()).atan()
        - 4.0 * (2.0 * (1f64.cosh() - 1.0)).sqrt()
}

/// Grid verification certificate for a measure chain.
#[derive(Clone, Debug, Serialize)]
pub struct MuPsCertificate {
    pub grid_points: usize,
    /// Min over the grid of the boundary by the configured evaluation path.
    pub min_boundary: f64,
    pub argmin: Option<String>,
    pub epsilon: f64,
    /// Witness relation for effectiveness of the scaled chain `c / epsilon`.
    pub witness_relation: String,
    pub witness_reach: f64,
    /// `min_boundary / epsilon * min_x mu(E_x)`: a lower bound for the
    /// section integrals of the scaled boundary; pass needs `>= 1`.
    pub witness_section_lower_bound: f64,
    /// Max |quadrature - reference| over the grid, when a reference is given.
    pub max_residual: Option<f64>,
    pub residual_tol: Option<f64>,
    pub rel_tol: f64,
    pub pass: bool,
    /// Boundary value per grid point, aligned with the grid argument.
    pub values: Vec<f64>,
}

/// Expected-value oracle for one point.
pub type PointReference<P> = dyn Fn(&P) -> Result<f64> + Sync;

pub struct VerifyOpts<'a, P> {
    pub epsilon: f64,
    /// `min >= epsilon * (1 - rel_tol)`.
    pub rel_tol: f64,
    /// Expected boundary value per point (e.g. the radial closed form).
    pub reference: Option<&'a PointReference<P>>,
    pub residual_tol: Option<f64>,
}

/// Evaluate the boundary of `c` at every grid point, compare with the
/// reference where given, and certify effectiveness of `c / epsilon` with
/// the given witness entourage.
pub fn verify_mu_ps<P: SpacePoint>(
    c: &MuChain1<P>,
    mu: &MeasureSpec,
    w: &Window<P>,
    grid: &[usize],
    e_witness: &Relation<P>,
    quad: &QuadratureSpec,
    opts: &VerifyOpts<'_, P>,
) -> Result<MuPsCertificate> {
    if grid.is_empty() {
        return Err(Error::param("grid", "empty grid"));
    }
    let margin = c.support.reach();
    for &x in grid {
        if w.depth(x)? + 1e-9 < margin {
            return Err(Error::param(
                "grid",
                format!(
                    "grid point {} at depth {} inside margin {margin}",
                    w.points()[x].token(),
                    w.depth(x)?
                ),
            ));
        }
    }

    let values: Result<Vec<f64>> = grid
        .par_iter()
        .map(|&x| boundary_mu(c, mu, w, x, quad))
        .collect();
    let values = values?;

    let (mut min, mut argmin) = (f64::INFINITY, None);
    for (&x, &v) in grid.iter().zip(&values) {
        if v < min {
            min = v;
            argmin = Some(x);
        }
    }

    let max_residual = match opts.reference {
        None => None,
        Some(reference) => {
            let mut worst: f64 = 0.0;
            for (&x, &v) in grid.iter().zip(&values) {
                let expect = reference(w.point(x)?)?;
                worst = worst.max((v - expect).abs());
            }
            Some(worst)
        }
    };

    let mut min_section = f64::INFINITY;
    for &x in grid {
        min_section = min_section.min(mu.section_measure(e_witness, w, x, quad)?);
    }
    let witness_section_lower_bound = if opts.epsilon > 0.0 {
        (min / opts.epsilon) * min_section
    } else {
        f64::NEG_INFINITY
    };

    let mut pass = min >= opts.epsilon * (1.0 - opts.rel_tol) && opts.epsilon > 0.0;
    pass &= witness_section_lower_bound >= 1.0 - opts.rel_tol;
    if let (Some(res), Some(tol)) = (max_residual, opts.residual_tol) {
        pass &= res <= tol;
    }

    Ok(MuPsCertificate {
        grid_points: grid.len(),
        min_boundary: min,
        argmin: argmin.map(|x| w.points()[x].token()),
        epsilon: opts.epsilon,
        witness_relation: e_witness.describe(),
        witness_reach: e_witness.reach(),
        witness_section_lower_bound,
        max_residual,
        residual_tol: opts.residual_tol,
        rel_tol: opts.rel_tol,
        pass,
        values,
    })
}
