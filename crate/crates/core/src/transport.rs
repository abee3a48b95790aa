//! Push-forwards of chains along measure effectively proper maps, the
//! boundary/push-forward commutation, quasi-lattice tilings, and both
//! conversions between measured and discrete schemes.
//!
//! Discrete instances run in exact coefficient arithmetic; the disk-to-net
//! pipeline estimates tile-pair mass by seeded Monte Carlo over per-tile
//! sample caches (deterministic given the seed, independent of thread count).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coarse::Relation;
use crate::discrete::{
    boundary, check_effective, radius_schedule, Coeff, EffectivenessCertificate, SparseChain0,
    SparseChain1,
};
use crate::hyperbolic::{ball_volume, sample_ball, DiskPoint, QuadratureSpec};
use crate::measure::{boundary_weighted, MeasureSpec, MuChain1};
use crate::window::{SpacePoint, Window, GEOM_EPS};
use crate::{Error, Result};

/// The measure effective properness constant.
#[derive(Clone, Debug, Serialize)]
pub struct PushForwardConstant {
    pub c: f64,
    /// Test set achieving the constant.
    pub witness: String,
}

fn set_measure<K: Coeff>(weights: &BTreeMap<usize, K>, set: &BTreeSet<usize>) -> K {
    set.iter()
        .filter_map(|i| weights.get(i))
        .fold(K::zero(), |a, b| a + b.clone())
}

/// Smallest `C` with `mu_X(phi^{-1} B) <= C mu_Y(B)` over the test sets;
/// fails with a witness when some `B` has measure zero but positive
/// preimage measure.
pub fn check_measure_effectively_proper<K: Coeff, PS: SpacePoint, PD: SpacePoint>(
    phi: &[usize],
    mu_x: &BTreeMap<usize, K>,
    wx: &Window<PS>,
    mu_y: &BTreeMap<usize, K>,
    wy: &Window<PD>,
    test_sets: &[BTreeSet<usize>],
) -> Result<PushForwardConstant> {
    if phi.len() != wx.len() {
        return Err(Error::param("phi", "map must be total on the source window"));
    }
    for &j in phi {
        wy.check_index(j)?;
    }
    if test_sets.is_empty() {
        return Err(Error::param("test_sets", "need at least one test set"));
    }
    let mut best: Option<(f64, String)> = None;
    for set in test_sets {
        let preimage: BTreeSet<usize> = (0..wx.len()).filter(|&i| set.contains(&phi[i])).collect();
        let pushed = set_measure(mu_x, &preimage);
        let target = set_measure(mu_y, set);
        let describe = || {
            let names: Vec<String> = set
                .iter()
                .take(4)
                .map(|&j| wy.points()[j].token())
                .collect();
            format!("{{{}{}}}", names.join(", "), if set.len() > 4 { ", ..." } else { "" })
        };
        if target.is_zero() {
            if !pushed.is_zero() {
                return Err(Error::NoFiniteConstant { witness: describe() });
            }
            continue;
        }
        let ratio = pushed.to_f64_lossy() / target.to_f64_lossy();
        if best.as_ref().map(|(c, _)| ratio > *c).unwrap_or(true) {
            best = Some((ratio, describe()));
        }
    }
    let (c, witness) = best.ok_or_else(|| Error::param("test_sets", "all test sets had measure zero"))?;
    Ok(PushForwardConstant { c, witness })
}

/// Push a 0-chain forward: `(phi_* f)(y) = (1/mu_Y{y}) sum_{phi(x)=y} f(x) mu_X{x}`,
/// the unique density realizing `<phi_* f, g>_Y = <f, g o phi>_X`.
pub fn pushforward_chain0<K: Coeff, PS: SpacePoint, PD: SpacePoint>(
    phi: &[usize],
    f: &SparseChain0<K>,
    mu_x: &BTreeMap<usize, K>,
    wx: &Window<PS>,
    mu_y: &BTreeMap<usize, K>,
    wy: &Window<PD>,
) -> Result<SparseChain0<K>> {
    wx.check_id(f.window())?;
    let mut numerators: BTreeMap<usize, K> = BTreeMap::new();
    for (&i, v) in f.entries() {
        let u = mu_x.get(&i).cloned().unwrap_or_else(K::zero);
        let add = v.clone() * u;
        numerators
            .entry(phi[i])
            .and_modify(|e| *e = e.clone() + add.clone())
            .or_insert(add);
    }
    let mut entries = BTreeMap::new();
    let mut support: BTreeSet<usize> = BTreeSet::new();
    for &i in f.support_set() {
        support.insert(phi[i]);
    }
    for (y, num) in numerators {
        if num.is_zero() {
            continue;
        }
        let v = mu_y.get(&y).cloned().unwrap_or_else(K::zero);
        if v.is_zero() {
            return Err(Error::NoFiniteConstant {
                witness: wy.points()[y].token(),
            });
        }
        entries.insert(y, num / v);
    }
    SparseChain0::new(wy, support, entries)
}

/// Push a 1-chain forward with product weights; the support entourage of the
/// result is the stated metric bound on image pairs (the map is bornologous
/// on the window, so a finite bound always exists).
pub fn pushforward_chain1<K: Coeff, PS: SpacePoint, PD: SpacePoint>(
    phi: &[usize],
    c: &SparseChain1<K>,
    mu_x: &BTreeMap<usize, K>,
    wx: &Window<PS>,
    mu_y: &BTreeMap<usize, K>,
    wy: &Window<PD>,
) -> Result<SparseChain1<K>> {
    wx.check_id(c.window())?;
    let mut numerators: BTreeMap<(usize, usize), K> = BTreeMap::new();
    for (&(i, j), v) in c.entries() {
        let u = mu_x.get(&i).cloned().unwrap_or_else(K::zero)
            * mu_x.get(&j).cloned().unwrap_or_else(K::zero);
        let add = v.clone() * u;
        numerators
            .entry((phi[i], phi[j]))
            .and_modify(|e| *e = e.clone() + add.clone())
            .or_insert(add);
    }
    let mut entries = BTreeMap::new();
    let mut radius = 0.0f64;
    for (&(y1, y2), num) in &numerators {
        if num.is_zero() {
            continue;
        }
        let v = mu_y.get(&y1).cloned().unwrap_or_else(K::zero)
            * mu_y.get(&y2).cloned().unwrap_or_else(K::zero);
        if v.is_zero() {
            return Err(Error::NoFiniteConstant {
                witness: format!(
                    "({}, {})",
                    wy.points()[y1].token(),
                    wy.points()[y2].token()
                ),
            });
        }
        radius = radius.max(wy.points()[y1].dist(&wy.points()[y2]));
        entries.insert((y1, y2), num.clone() / v);
    }
    let support: BTreeSet<usize> = c
        .support_set()
        .iter()
        .map(|&i| phi[i])
        .collect();
    let entourage = Relation::metric_radius(wy, radius)?;
    SparseChain1::new(wy, support, entries, &entourage)
}

/// Pairing `<f, g>_X = sum f(x) g(x) mu{x}`.
pub fn pairing0<K: Coeff>(
    f: &SparseChain0<K>,
    g: &BTreeMap<usize, K>,
    mu: &BTreeMap<usize, K>,
) -> K {
    f.entries().iter().fold(K::zero(), |acc, (&i, v)| {
        let gv = g.get(&i).cloned().unwrap_or_else(K::zero);
        let w = mu.get(&i).cloned().unwrap_or_else(K::zero);
        acc + v.clone() * gv * w
    })
}

/// Pairing `<c, g>_{X x X}` with product weights.
pub fn pairing1<K: Coeff>(
    c: &SparseChain1<K>,
    g: &BTreeMap<(usize, usize), K>,
    mu: &BTreeMap<usize, K>,
) -> K {
    c.entries().iter().fold(K::zero(), |acc, (&(i, j), v)| {
        let gv = g.get(&(i, j)).cloned().unwrap_or_else(K::zero);
        let w = mu.get(&i).cloned().unwrap_or_else(K::zero)
            * mu.get(&j).cloned().unwrap_or_else(K::zero);
        acc + v.clone() * gv * w
    })
}

/// Max absolute discrepancy between `d(phi_* c)` and `phi_*(d c)`, computed
/// independently; exactly zero on rational instances.
pub fn check_boundary_commutes<K: Coeff, PS: SpacePoint, PD: SpacePoint>(
    phi: &[usize],
    c: &SparseChain1<K>,
    mu_x: &BTreeMap<usize, K>,
    wx: &Window<PS>,
    mu_y: &BTreeMap<usize, K>,
    wy: &Window<PD>,
) -> Result<f64> {
    let pushed = pushforward_chain1(phi, c, mu_x, wx, mu_y, wy)?;
    let lhs = boundary_weighted(&pushed, mu_y, wy)?;
    let dc = boundary_weighted(c, mu_x, wx)?;
    let rhs = pushforward_chain0(phi, &dc, mu_x, wx, mu_y, wy)?;
    let keys: BTreeSet<usize> = lhs.entries().keys().chain(rhs.entries().keys()).copied().collect();
    let mut worst = 0.0f64;
    for k in keys {
        let d = (lhs.value(k) - rhs.value(k)).abs().to_f64_lossy();
        worst = worst.max(d);
    }
    Ok(worst)
}

/// A quasi-lattice tiling: disjoint tiles `(E0)_lambda \ union of earlier
/// sections`, covering the window interior, with the first-hit projection.
#[derive(Clone, Debug)]
pub struct Tiling<P> {
    window: crate::window::WindowId,
    /// Window indices of the lattice, in the tiling's total order.
    lattice: Vec<usize>,
    base: Relation<P>,
    /// Tile realization on window points.
    tiles: Vec<BTreeSet<usize>>,
    /// Window point -> lattice position of its tile.
    projection: Vec<Option<usize>>,
    /// For each lattice position, earlier positions whose base sections can
    /// overlap it (within `2 * reach`).
    earlier_overlaps: Vec<Vec<usize>>,
}

impl<P: SpacePoint> Tiling<P> {
    pub fn lattice(&self) -> &[usize] {
        &self.lattice
    }

    pub fn tiles(&self) -> &[BTreeSet<usize>] {
        &self.tiles
    }

    pub fn projection(&self) -> &[Option<usize>] {
        &self.projection
    }

    pub fn base(&self) -> &Relation<P> {
        &self.base
    }

    /// Tile membership for arbitrary points (not only window samples);
    /// needs a metric base relation.
    pub fn tile_contains(&self, w: &Window<P>, pos: usize, p: &P) -> Result<bool> {
        let delta = self.metric_reach()?;
        let lam = &w.points()[self.lattice[pos]];
        if lam.dist(p) > delta + GEOM_EPS {
            return Ok(false);
        }
        for &earlier in &self.earlier_overlaps[pos] {
            if w.points()[self.lattice[earlier]].dist(p) <= delta + GEOM_EPS {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// First-hit projection of an arbitrary point.
    pub fn project_point(&self, w: &Window<P>, p: &P) -> Result<Option<usize>> {
        let delta = self.metric_reach()?;
        for (pos, &li) in self.lattice.iter().enumerate() {
            if w.points()[li].dist(p) <= delta + GEOM_EPS {
                return Ok(Some(pos));
            }
        }
        Ok(None)
    }

    fn metric_reach(&self) -> Result<f64> {
        match self.base.kind() {
            crate::coarse::RelationKind::MetricRadius(r) => Ok(*r),
            _ => Err(Error::UnsupportedRelation {
                kind: "tiling base",
                reason: "continuous tile membership needs a metric base relation".into(),
            }),
        }
    }
}

/// Sort lattice indices by (distance from the window's base point, token,
/// index): the deterministic total order used for tilings.
pub fn order_lattice<P: SpacePoint>(w: &Window<P>, mut indices: Vec<usize>) -> Vec<usize> {
    let basepoint = w
        .ball_rule()
        .map(|(c, _)| c.clone())
        .unwrap_or_else(|| w.points()[0].clone());
    indices.sort_by(|&a, &b| {
        let da = basepoint.dist(&w.points()[a]);
        let db = basepoint.dist(&w.points()[b]);
        da.partial_cmp(&db)
            .unwrap()
            .then_with(|| w.points()[a].token().cmp(&w.points()[b].token()))
            .then(a.cmp(&b))
    });
    indices
}

/// Build the tiling for an ordered lattice and base entourage; checks the
/// quasi-lattice condition (every interior window point is covered) and
/// reports the first gap otherwise.
pub fn build_tiling<P: SpacePoint>(
    w: &Window<P>,
    lattice: Vec<usize>,
    base: &Relation<P>,
) -> Result<Tiling<P>> {
    w.check_id(base.window())?;
    if lattice.is_empty() {
        return Err(Error::param("lattice", "empty lattice"));
    }
    for &i in &lattice {
        w.check_index(i)?;
    }
    let reach = base.reach();

    // first-hit projection over window points
    let mut projection: Vec<Option<usize>> = vec![None; w.len()];
    let mut tiles: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); lattice.len()];
    for (pos, &li) in lattice.iter().enumerate() {
        for x in base.section(w, li)? {
            if projection[x].is_none() {
                projection[x] = Some(pos);
                tiles[pos].insert(x);
            }
        }
    }

    // coverage on the interior
    for x in w.interior(reach) {
        if projection[x].is_none() {
            return Err(Error::CoverageGap {
                witness: w.points()[x].token(),
            });
        }
    }

    // overlap candidates: earlier lattice points within 2 * reach
    let mut earlier_overlaps = Vec::with_capacity(lattice.len());
    for (pos, &li) in lattice.iter().enumerate() {
        let p = &w.points()[li];
        let mut earlier = Vec::new();
        for (qpos, &qi) in lattice.iter().enumerate().take(pos) {
            if p.dist(&w.points()[qi]) <= 2.0 * reach + GEOM_EPS {
                earlier.push(qpos);
            }
        }
        earlier_overlaps.push(earlier);
    }

    Ok(Tiling {
        window: w.id(),
        lattice,
        base: base.clone(),
        tiles,
        projection,
        earlier_overlaps,
    })
}

/// Monte Carlo coverage report for a disk tiling.
#[derive(Clone, Debug, Serialize)]
pub struct CoverReport {
    pub samples: u64,
    pub covered: u64,
    pub first_gap: Option<String>,
}

/// Sample the window region at the given interior margin and check every
/// sample lands in some tile. Disjointness is exact by the first-hit rule;
/// this verifies coverage.
pub fn verify_cover_mc(
    tiling: &Tiling<DiskPoint>,
    w: &Window<DiskPoint>,
    margin: f64,
    samples: u64,
    seed: u64,
) -> Result<CoverReport> {
    w.check_id(tiling.window)?;
    let (center, radius) = w
        .ball_rule()
        .ok_or_else(|| Error::param("window", "coverage sampling needs a ball window"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut covered = 0u64;
    let mut first_gap = None;
    for _ in 0..samples {
        let p = sample_ball(center, radius - margin, &mut rng);
        if tiling.project_point(w, &p)?.is_some() {
            covered += 1;
        } else if first_gap.is_none() {
            first_gap = Some(p.token());
        }
    }
    Ok(CoverReport {
        samples,
        covered,
        first_gap,
    })
}

/// Monte Carlo controls for the disk-to-net push-forward.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TilePushParams {
    /// Samples cached per tile's bounding ball.
    pub cache_samples: u32,
    /// Sample pairs per lattice pair.
    pub pair_samples: u32,
    pub seed: u64,
    /// Estimator noise floor for the pushed boundary: values in
    /// `[-floor, 0)` are treated as zero-mass tiles (their true value is
    /// nonnegative); anything below the floor is a genuine negativity and
    /// fails the pipeline.
    pub boundary_noise_floor: f64,
}

impl Default for TilePushParams {
    fn default() -> Self {
        TilePushParams {
            cache_samples: 4096,
            pair_samples: 4096,
            seed: 0x7E11,
            boundary_noise_floor: 0.1,
        }
    }
}

/// Per-tile sample cache: measure-uniform samples of the bounding ball with
/// their tile-membership flags.
struct TileSampler {
    caches: Vec<Vec<(DiskPoint, bool)>>,
    ball_measure: f64,
    delta: f64,
}

fn build_sampler(
    tiling: &Tiling<DiskPoint>,
    w: &Window<DiskPoint>,
    params: &TilePushParams,
) -> Result<TileSampler> {
    let delta = tiling.metric_reach()?;
    let caches: Result<Vec<Vec<(DiskPoint, bool)>>> = (0..tiling.lattice.len())
        .into_par_iter()
        .map(|pos| {
            let lam = &w.points()[tiling.lattice[pos]];
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ (pos as u64).wrapping_mul(0x9E3779B97F4A7C15));
            let mut cache = Vec::with_capacity(params.cache_samples as usize);
            for _ in 0..params.cache_samples {
                let p = sample_ball(lam, delta, &mut rng);
                let flag = tiling.tile_contains(w, pos, &p)?;
                cache.push((p, flag));
            }
            Ok(cache)
        })
        .collect();
    Ok(TileSampler {
        caches: caches?,
        ball_measure: ball_volume(delta)?,
        delta,
    })
}

impl TileSampler {
    /// Monte Carlo tile measures.
    fn tile_measures(&self) -> Vec<f64> {
        self.caches
            .iter()
            .map(|c| {
                let hits = c.iter().filter(|(_, f)| *f).count();
                self.ball_measure * hits as f64 / c.len() as f64
            })
            .collect()
    }
}

/// The pushed chain on the lattice, as a window of its own.
pub struct TilePush {
    pub lattice_window: Window<DiskPoint>,
    pub chain: SparseChain1<f64>,
    pub tile_measures: Vec<f64>,
    /// Entourage radius of the pushed chain: `reach(c) + 2 delta`.
    pub reach: f64,
}

/// Push a measure chain through the tiling projection onto the counting
/// measure on the lattice:
/// `(p_* c)(l1, l2) = integral over tile(l1) x tile(l2) of c`.
pub fn push_through_tiling(
    c: &MuChain1<DiskPoint>,
    tiling: &Tiling<DiskPoint>,
    w: &Window<DiskPoint>,
    params: &TilePushParams,
) -> Result<TilePush> {
    w.check_id(tiling.window)?;
    let sampler = build_sampler(tiling, w, params)?;
    let delta = sampler.delta;
    let reach = c.support.reach() + 2.0 * delta;
    let n = tiling.lattice.len();

    let lattice_points: Vec<DiskPoint> = tiling
        .lattice
        .iter()
        .map(|&i| w.points()[i])
        .collect();

    // candidate pairs: lattice points within the pushed reach
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| lattice_points[a].dist(&lattice_points[b]) <= reach + GEOM_EPS)
        .collect();

    let ball2 = sampler.ball_measure * sampler.ball_measure;
    let density = match &c.density {
        crate::measure::Density1::Pointwise(f) => Arc::clone(f),
        crate::measure::Density1::Indexed(_) => {
            return Err(Error::UnsupportedRelation {
                kind: "density",
                reason: "tiling push needs a pointwise density".into(),
            })
        }
    };

    let entries: Vec<((usize, usize), f64)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let ca = &sampler.caches[a];
            let cb = &sampler.caches[b];
            let mut rng = ChaCha8Rng::seed_from_u64(
                params
                    .seed
                    .wrapping_add((a as u64).wrapping_mul(0xA24BAED4963EE407))
                    .wrapping_add((b as u64).wrapping_mul(0x9FB21C651E98DF25)),
            );
            let mut acc = 0.0f64;
            for _ in 0..params.pair_samples {
                let (x, fx) = ca[rng.random_range(0..ca.len())];
                let (y, fy) = cb[rng.random_range(0..cb.len())];
                if fx && fy {
                    acc += density(&x, &y);
                }
            }
            let value = ball2 * acc / params.pair_samples as f64;
            ((a, b), value)
        })
        .collect();

    let lattice_window = {
        let (center, radius) = w
            .ball_rule()
            .ok_or_else(|| Error::param("window", "tiling push needs a ball window"))?;
        Window::from_ball(lattice_points, *center, radius)
    };
    let entourage = Relation::metric_radius(&lattice_window, reach)?;
    let support: BTreeSet<usize> = (0..n).collect();
    let chain = SparseChain1::new(
        &lattice_window,
        support,
        entries.into_iter().filter(|(_, v)| *v != 0.0).collect(),
        &entourage,
    )?;
    Ok(TilePush {
        lattice_window,
        chain,
        tile_measures: sampler.tile_measures(),
        reach,
    })
}

/// Result of the measured-to-discrete conversion.
pub struct MuToPonzi {
    pub push: TilePush,
    pub boundary: SparseChain0<f64>,
    pub certificate: EffectivenessCertificate,
    /// `sup mu(tile)`: the measure effective properness constant of the
    /// projection onto the counting measure.
    pub projection_constant: PushForwardConstant,
}

/// Convert a verified measured scheme into a discrete chain on the lattice:
/// push through the tiling, take the counting boundary, certify
/// effectiveness over a metric radius schedule in steps of the net spacing.
pub fn mu_ps_to_ponzi(
    c: &MuChain1<DiskPoint>,
    tiling: &Tiling<DiskPoint>,
    w: &Window<DiskPoint>,
    params: &TilePushParams,
) -> Result<MuToPonzi> {
    let push = push_through_tiling(c, tiling, w, params)?;
    let d = boundary(&push.chain);
    let delta = tiling.metric_reach()?;
    let (_, radius) = w.ball_rule().expect("checked in push_through_tiling");
    let schedule = radius_schedule(&push.lattice_window, delta, (radius - push.reach).max(delta))?;
    let floor = params.boundary_noise_floor;
    let mut clamped: BTreeMap<usize, f64> = BTreeMap::new();
    for (&i, &v) in d.entries() {
        if v < -floor && push.lattice_window.depth(i)? + GEOM_EPS >= push.reach {
            return Err(Error::param(
                "pushed boundary",
                format!(
                    "interior tile {} has boundary {v}, below the noise floor -{floor}",
                    push.lattice_window.points()[i].token()
                ),
            ));
        }
        clamped.insert(i, if v < 0.0 && v >= -floor { 0.0 } else { v });
    }
    let d = SparseChain0::new(&push.lattice_window, d.support_set().clone(), clamped)?;
    let certificate = check_effective(&d, push.reach, &schedule, &push.lattice_window)?;
    let sup_tile = push
        .tile_measures
        .iter()
        .fold(0.0f64, |a, &b| a.max(b));
    Ok(MuToPonzi {
        projection_constant: PushForwardConstant {
            c: sup_tile,
            witness: "sup tile measure over singleton lattice sets".into(),
        },
        push,
        boundary: d,
        certificate,
    })
}

/// Exact constancy check: `mu(E_s) = C` for all `s` in `S`.
pub fn constant_on_s_check<K: Coeff, P: SpacePoint>(
    e: &Relation<P>,
    s: &BTreeSet<usize>,
    weights: &BTreeMap<usize, K>,
    w: &Window<P>,
    rel_tol: f64,
) -> Result<K> {
    if s.is_empty() {
        return Err(Error::param("S", "empty S"));
    }
    let mut values: Vec<(usize, K)> = Vec::new();
    for &i in s {
        let m = e
            .section(w, i)?
            .into_iter()
            .filter_map(|j| weights.get(&j).cloned())
            .fold(K::zero(), |a, b| a + b);
        values.push((i, m));
    }
    let (mut min, mut max) = (values[0].1.clone(), values[0].1.clone());
    let mut worst = values[0].0;
    for (i, v) in &values[1..] {
        if *v < min {
            min = v.clone();
        }
        if *v > max {
            max = v.clone();
            worst = *i;
        }
    }
    let spread = (max.to_f64_lossy() - min.to_f64_lossy()).abs();
    let scale = max.to_f64_lossy().abs().max(1.0);
    if spread > rel_tol * scale {
        return Err(Error::NotConstantOnS {
            min: min.to_f64_lossy(),
            max: max.to_f64_lossy(),
            tol: rel_tol,
            worst: w.points()[worst].token(),
        });
    }
    Ok(values[0].1.clone())
}

/// Constancy of hyperbolic ball sections over `S`, by quadrature; returns
/// the common value.
pub fn constant_on_s_check_hyperbolic(
    radius: f64,
    s: &BTreeSet<usize>,
    w: &Window<DiskPoint>,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::param("S", "empty S"));
    }
    let e = Relation::metric_radius(w, radius)?;
    let mu = MeasureSpec::HyperbolicArea;
    let mut values = Vec::new();
    for &i in s {
        values.push((i, mu.section_measure(&e, w, i, quad)?));
    }
    let min = values.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    let max = values.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    let tol = 10.0 * quad.abs_tol;
    if max - min > tol {
        let worst = values
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
            .0;
        return Err(Error::NotConstantOnS {
            min,
            max,
            tol,
            worst: w.points()[worst].token(),
        });
    }
    Ok(0.5 * (min + max))
}

/// Result of the discrete-to-measured conversion.
pub struct PonziToMuPs<K> {
    /// The lifted chain `c(x, y) = sum theta(s1, s2) chi_{E_s1 x E_s2}`, on
    /// window points, *before* the `1/C^2` scaling.
    pub lifted: SparseChain1<K>,
    /// The constant `mu(E_s) = C`.
    pub constant: K,
    /// Max abs difference of `d_X c(x)` and `C sum_s d_S theta(s) chi_{E_s}(x)`
    /// over the window: zero on exact instances.
    pub identity_residual: f64,
    /// Min over interior base points of the scaled witness integral
    /// `(1/C^2) int_{E'_x circ E} d_X c dmu`; effectiveness needs `>= 1`.
    pub min_witness_integral: f64,
    pub pass: bool,
}

/// A chain lifted through constant-measure sections, with the boundary
/// identity residual.
pub struct LiftedChain<K> {
    pub chain: SparseChain1<K>,
    /// Max abs difference over the window between `d_X c(x)` and
    /// `C sum_s d_S theta(s) chi_{E_s}(x)`; zero on exact instances.
    pub identity_residual: f64,
}

/// Build `c(x, y) = sum theta(s1, s2) chi_{E_s1 x E_s2}(x, y)` and check the
/// boundary identity `d_X c = C sum_s d_S theta(s) chi_{E_s}` pointwise in
/// the coefficient ring. Holds for any chain, effective or not.
pub fn lift_chain<K: Coeff, P: SpacePoint>(
    theta: &SparseChain1<K>,
    e: &Relation<P>,
    s: &BTreeSet<usize>,
    constant: &K,
    weights: &BTreeMap<usize, K>,
    w: &Window<P>,
) -> Result<LiftedChain<K>> {
    w.check_id(theta.window())?;
    let mut entries: BTreeMap<(usize, usize), K> = BTreeMap::new();
    let mut max_pair_dist = 0.0f64;
    for (&(s1, s2), v) in theta.entries() {
        for x in e.section(w, s1)? {
            for y in e.section(w, s2)? {
                max_pair_dist = max_pair_dist.max(w.points()[x].dist(&w.points()[y]));
                entries
                    .entry((x, y))
                    .and_modify(|t| *t = t.clone() + v.clone())
                    .or_insert_with(|| v.clone());
            }
        }
    }
    let support: BTreeSet<usize> = entries.keys().flat_map(|&(x, y)| [x, y]).collect();
    let entourage = Relation::metric_radius(w, max_pair_dist)?;
    let chain = SparseChain1::new(w, support, entries, &entourage)?;

    let d_theta = boundary_weighted(theta, &crate::measure::counting_weights(s), w)?;
    let d_lifted = boundary_weighted(&chain, weights, w)?;
    let mut residual = 0.0f64;
    for x in 0..w.len() {
        let mut rhs = K::zero();
        for &si in s {
            if e.contains_pair(w, si, x)? {
                rhs = rhs + d_theta.value(si);
            }
        }
        let rhs = rhs * constant.clone();
        let diff = (d_lifted.value(x) - rhs).abs().to_f64_lossy();
        residual = residual.max(diff);
    }
    Ok(LiftedChain {
        chain,
        identity_residual: residual,
    })
}

/// Lift a discrete scheme to a measured one: check `E` is constant on `S`,
/// require `theta` effective with witness `E'`, build the lifted chain, and
/// certify effectiveness of `c / C^2` with the composed witness `E' o E`.
pub fn ponzi_to_mu_ps<K: Coeff, P: SpacePoint>(
    theta: &SparseChain1<K>,
    e: &Relation<P>,
    s: &BTreeSet<usize>,
    weights: &BTreeMap<usize, K>,
    w: &Window<P>,
    e_prime: &Relation<P>,
    rel_tol: f64,
) -> Result<PonziToMuPs<K>> {
    w.check_id(theta.window())?;
    let constant = constant_on_s_check(e, s, weights, w, rel_tol)?;

    let d_theta = boundary_weighted(theta, &crate::measure::counting_weights(s), w)?;
    let margin = theta.support_entourage().reach;
    let cert = check_effective(&d_theta, margin, std::slice::from_ref(e_prime), w)?;
    if !cert.pass {
        return Err(Error::param(
            "theta",
            format!(
                "input chain is not effective with the given witness (min section sum {})",
                cert.min_interior_sum
            ),
        ));
    }

    let lifted = lift_chain(theta, e, s, &constant, weights, w)?;
    let d_lifted = boundary_weighted(&lifted.chain, weights, w)?;

    // effectiveness of c / C^2 with witness E' o E
    let witness = e_prime.compose(e, w)?;
    let lift_margin = margin + e.reach() + lifted.chain.support_entourage().reach;
    let interior = w.interior(lift_margin);
    let c2 = constant.clone() * constant.clone();
    let mut min_witness = f64::INFINITY;
    for &x in &interior {
        let total = witness
            .section(w, x)?
            .into_iter()
            .fold(K::zero(), |acc, y| {
                let wy = weights.get(&y).cloned().unwrap_or_else(K::zero);
                acc + d_lifted.value(y) * wy
            });
        let scaled = total.to_f64_lossy() / c2.to_f64_lossy();
        min_witness = min_witness.min(scaled);
    }
    let pass = !interior.is_empty() && min_witness >= 1.0 - rel_tol;
    Ok(PonziToMuPs {
        identity_residual: lifted.identity_residual,
        lifted: lifted.chain,
        constant,
        min_witness_integral: min_witness,
        pass,
    })
}

/// The lifted density on the disk: `c(x, y) = sum theta(s1, s2)
/// chi_{B_r0(s1)}(x) chi_{B_r0(s2)}(y)` for net points `S`.
pub struct HyperbolicLift {
    pub chain: MuChain1<DiskPoint>,
    /// `C = mu(B_r0)`, constant over centers.
    pub constant: f64,
    /// Residuals of the boundary identity at the sample points.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Lift a discrete chain on disk net points to a measured chain and verify
/// the boundary identity `d_X c(x) = C sum_s d_S theta(s) chi_{E_s}(x)` by
/// quadrature at the given sample points.
pub fn ponzi_to_mu_ps_hyperbolic<K: Coeff>(
    theta: &SparseChain1<K>,
    r0: f64,
    w: &Window<DiskPoint>,
    sample_points: &[usize],
    quad: &QuadratureSpec,
) -> Result<HyperbolicLift> {
    w.check_id(theta.window())?;
    let s_points: Vec<(DiskPoint, DiskPoint, f64)> = theta
        .entries()
        .iter()
        .map(|(&(i, j), v)| (w.points()[i], w.points()[j], v.to_f64_lossy()))
        .collect();
    let constant = ball_volume(r0)?;
    let sup_bound: f64 = {
        // crude bound: sum of |entries| overlapping one point pair
        theta
            .entries()
            .values()
            .fold(0.0f64, |a, v| a + v.to_f64_lossy().abs())
    };
    let reach = theta.support_entourage().reach + 2.0 * r0;
    let pts = Arc::new(s_points);
    let pts_for_density = Arc::clone(&pts);
    let chain = MuChain1 {
        density: crate::measure::Density1::Pointwise(Arc::new(move |x: &DiskPoint, y: &DiskPoint| {
            pts_for_density
                .iter()
                .filter(|(s1, s2, _)| x.dist(s1) <= r0 && y.dist(s2) <= r0)
                .map(|(_, _, v)| v)
                .sum()
        })),
        sup_bound,
        support: Relation::metric_radius(w, reach)?,
        label: "lifted net chain".into(),
    };

    let d_theta = boundary_weighted(
        theta,
        &crate::measure::counting_weights(theta.support_set()),
        w,
    )?;
    let residuals: Result<Vec<f64>> = sample_points
        .par_iter()
        .map(|&x| {
            let lhs = crate::measure::boundary_mu(
                &chain,
                &MeasureSpec::HyperbolicArea,
                w,
                x,
                quad,
            )?;
            let xp = &w.points()[x];
            let mut rhs = 0.0;
            for (&si, v) in d_theta.entries() {
                if w.points()[si].dist(xp) <= r0 {
                    rhs += v.to_f64_lossy();
                }
            }
            rhs *= constant;
            Ok((lhs - rhs).abs())
        })
        .collect();
    let residuals = residuals?;
    let max_residual = residuals.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(HyperbolicLift {
        chain,
        constant,
        residuals,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{free_group_scheme, ratio, z_interval, GroupPoint};
    use crate::measure::counting_weights;
    use num_rational::BigRational;

    fn unit_weights(n: usize) -> BTreeMap<usize, BigRational> {
        (0..n).map(|i| (i, ratio(1, 1))).collect()
    }

    fn lat(w: &Window<GroupPoint>, n: i64) -> usize {
        w.index_of(&GroupPoint::lattice(vec![n])).unwrap()
    }

    #[test]
    fn pushforward_constant_examples() {
        let x = z_interval(0, 1);
        let y = z_interval(0, 0);
        let mu_x = unit_weights(x.len());
        let mu_y = unit_weights(y.len());
        // identity on the one-point window
        let c = check_measure_effectively_proper(
            &[0],
            &unit_weights(1),
            &y,
            &mu_y,
            &y,
            &[[0usize].into_iter().collect()],
        )
        .unwrap();
        assert_eq!(c.c, 1.0);

        // two points onto one
        let c = check_measure_effectively_proper(
            &[0, 0],
            &mu_x,
            &x,
            &mu_y,
            &y,
            &[[0usize].into_iter().collect()],
        )
        .unwrap();
        assert_eq!(c.c, 2.0);

        // zero target measure with positive preimage mass
        let zero: BTreeMap<usize, BigRational> = BTreeMap::new();
        let err = check_measure_effectively_proper(
            &[0, 0],
            &mu_x,
            &x,
            &zero,
            &y,
            &[[0usize].into_iter().collect()],
        );
        assert!(matches!(err, Err(Error::NoFiniteConstant { .. })));
    }

    #[test]
    fn pushforward_chain0_pairing_example() {
        let x = z_interval(0, 1);
        let y = z_interval(0, 0);
        let mu_x = unit_weights(x.len());
        let mu_y = unit_weights(y.len());
        let f = SparseChain0::new(
            &x,
            (0..2).collect(),
            [(0usize, ratio(3, 1)), (1usize, ratio(5, 1))].into_iter().collect(),
        )
        .unwrap();
        let pushed = pushforward_chain0(&[0, 0], &f, &mu_x, &x, &mu_y, &y).unwrap();
        assert_eq!(pushed.value(0), ratio(8, 1));

        // <phi_* f, g>_Y = <f, g o phi>_X with g = indicator of {*}
        let g: BTreeMap<usize, BigRational> = [(0usize, ratio(1, 1))].into_iter().collect();
        let lhs = pairing0(&pushed, &g, &mu_y);
        let g_phi: BTreeMap<usize, BigRational> =
            [(0usize, ratio(1, 1)), (1usize, ratio(1, 1))].into_iter().collect();
        let rhs = pairing0(&f, &g_phi, &mu_x);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn boundary_commutes_exactly_on_discrete_instance() {
        let x = z_interval(-4, 4);
        let y = z_interval(-2, 2);
        // phi(n) = floor(n / 2) as an index map
        let phi: Vec<usize> = (0..x.len())
            .map(|i| {
                let n = match x.points()[i] {
                    GroupPoint::Lattice(ref v) => v[0],
                    _ => unreachable!(),
                };
                lat(&y, n.div_euclid(2))
            })
            .collect();
        let mu_x: BTreeMap<usize, BigRational> =
            (0..x.len()).map(|i| (i, ratio(1 + (i as i64 % 3), 2))).collect();
        let mu_y: BTreeMap<usize, BigRational> =
            (0..y.len()).map(|i| (i, ratio(2 + (i as i64 % 2), 3))).collect();
        let e = Relation::metric_radius(&x, 3.0).unwrap();
        let entries: BTreeMap<(usize, usize), BigRational> = [
            ((lat(&x, -3), lat(&x, -1)), ratio(2, 3)),
            ((lat(&x, 0), lat(&x, 2)), ratio(-1, 4)),
            ((lat(&x, 1), lat(&x, 1)), ratio(5, 7)),
            ((lat(&x, 4), lat(&x, 2)), ratio(1, 6)),
        ]
        .into_iter()
        .collect();
        let c = SparseChain1::new(&x, (0..x.len()).collect(), entries, &e).unwrap();
        let worst = check_boundary_commutes(&phi, &c, &mu_x, &x, &mu_y, &y).unwrap();
        assert_eq!(worst, 0.0);
    }

    #[test]
    fn z_tiling_fixture() {
        let w = z_interval(-2, 8);
        let e0 = Relation::metric_radius(&w, 2.0).unwrap();
        let lattice = vec![lat(&w, 0), lat(&w, 3), lat(&w, 6)];
        let tiling = build_tiling(&w, lattice, &e0).unwrap();
        let expect: Vec<Vec<i64>> =
            vec![vec![-2, -1, 0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]];
        for (pos, tile) in tiling.tiles().iter().enumerate() {
            let got: Vec<i64> = tile
                .iter()
                .map(|&i| match w.points()[i] {
                    GroupPoint::Lattice(ref v) => v[0],
                    _ => unreachable!(),
                })
                .collect();
            assert_eq!(got, expect[pos], "tile {pos}");
        }
        // disjoint and covering
        let mut seen = BTreeSet::new();
        for tile in tiling.tiles() {
            for &i in tile {
                assert!(seen.insert(i), "tiles overlap at {i}");
            }
        }
        assert_eq!(seen.len(), w.len());
    }

    #[test]
    fn tile_union_is_the_realized_lattice_sections() {
        let w = z_interval(-2, 8);
        let e0 = Relation::metric_radius(&w, 2.0).unwrap();
        let lattice = vec![lat(&w, 0), lat(&w, 3), lat(&w, 6)];
        let tiling = build_tiling(&w, lattice.clone(), &e0).unwrap();
        let union: BTreeSet<usize> = tiling.tiles().iter().flatten().copied().collect();
        let mut sections: BTreeSet<usize> = BTreeSet::new();
        for &li in &lattice {
            sections.extend(e0.section(&w, li).unwrap());
        }
        assert_eq!(union, sections);
    }

    #[test]
    fn singleton_tiles_with_diagonal_base() {
        let w = z_interval(0, 4);
        let d = Relation::diagonal(&w);
        let lattice: Vec<usize> = (0..w.len()).collect();
        let tiling = build_tiling(&w, lattice, &d).unwrap();
        for (pos, tile) in tiling.tiles().iter().enumerate() {
            assert_eq!(tile.len(), 1);
            assert!(tile.contains(&pos));
        }
    }

    #[test]
    fn tiling_coverage_gap_detected() {
        let w = z_interval(-2, 8);
        let e0 = Relation::metric_radius(&w, 1.0).unwrap();
        let lattice = vec![lat(&w, 0), lat(&w, 6)];
        assert!(matches!(
            build_tiling(&w, lattice, &e0),
            Err(Error::CoverageGap { .. })
        ));
    }

    #[test]
    fn order_independence_of_coverage_and_totals() {
        let w = z_interval(-2, 8);
        let e0 = Relation::metric_radius(&w, 2.0).unwrap();
        let asc = vec![lat(&w, 0), lat(&w, 3), lat(&w, 6)];
        let desc = vec![lat(&w, 6), lat(&w, 3), lat(&w, 0)];
        let t1 = build_tiling(&w, asc, &e0).unwrap();
        let t2 = build_tiling(&w, desc, &e0).unwrap();
        let union1: BTreeSet<usize> = t1.tiles().iter().flatten().copied().collect();
        let union2: BTreeSet<usize> = t2.tiles().iter().flatten().copied().collect();
        assert_eq!(union1, union2);

        // identical pushed boundary totals, exactly
        let e = Relation::metric_radius(&w, 2.0).unwrap();
        let entries: BTreeMap<(usize, usize), BigRational> = [
            ((lat(&w, -1), lat(&w, 1)), ratio(3, 5)),
            ((lat(&w, 2), lat(&w, 4)), ratio(-2, 7)),
            ((lat(&w, 5), lat(&w, 7)), ratio(1, 2)),
        ]
        .into_iter()
        .collect();
        let c = SparseChain1::new(&w, (0..w.len()).collect(), entries, &e).unwrap();
        let mu_x = unit_weights(w.len());
        let mut totals = Vec::new();
        for t in [&t1, &t2] {
            let dst = Window::from_depths(
                t.lattice().iter().map(|&i| w.points()[i].clone()).collect(),
                vec![0.0; t.lattice().len()],
            )
            .unwrap();
            let mu_y = unit_weights(dst.len());
            let phi: Vec<usize> = t
                .projection()
                .iter()
                .map(|p| p.expect("full cover"))
                .collect();
            let pushed = pushforward_chain1(&phi, &c, &mu_x, &w, &mu_y, &dst).unwrap();
            let total = boundary_weighted(&pushed, &mu_y, &dst).unwrap().total();
            totals.push(total);
        }
        assert_eq!(totals[0], totals[1]);
        assert_eq!(totals[0], ratio(0, 1));
    }

    #[test]
    fn constant_on_s_examples() {
        let w = z_interval(-9, 9);
        let weights = unit_weights(w.len());
        let e1 = Relation::metric_radius(&w, 1.0).unwrap();
        let s: BTreeSet<usize> = [-6i64, -3, 0, 3, 6].iter().map(|&n| lat(&w, n)).collect();
        let c = constant_on_s_check(&e1, &s, &weights, &w, 1e-6).unwrap();
        assert_eq!(c, ratio(3, 1));

        // a relation whose section size varies over S fails with a witness
        let uneven = Relation::explicit(
            &w,
            [
                (lat(&w, 0), lat(&w, 0)),
                (lat(&w, 3), lat(&w, 3)),
                (lat(&w, 3), lat(&w, 4)),
            ],
        )
        .unwrap();
        let s2: BTreeSet<usize> = [lat(&w, 0), lat(&w, 3)].into_iter().collect();
        assert!(matches!(
            constant_on_s_check(&uneven, &s2, &weights, &w, 1e-6),
            Err(Error::NotConstantOnS { .. })
        ));
    }

    #[test]
    fn lift_identity_on_z_fixture() {
        // S = {0, 3}, E = metric radius 1 (C = 3), theta = {(0,3) -> 1}
        let w = z_interval(-4, 7);
        let weights = unit_weights(w.len());
        let e = Relation::metric_radius(&w, 1.0).unwrap();
        let s: BTreeSet<usize> = [lat(&w, 0), lat(&w, 3)].into_iter().collect();
        let c = constant_on_s_check(&e, &s, &weights, &w, 1e-6).unwrap();
        assert_eq!(c, ratio(3, 1));
        let e_theta = Relation::metric_radius(&w, 3.0).unwrap();
        let theta = SparseChain1::new(
            &w,
            s.clone(),
            [((lat(&w, 0), lat(&w, 3)), ratio(1, 1))].into_iter().collect(),
            &e_theta,
        )
        .unwrap();
        let lift = lift_chain(&theta, &e, &s, &c, &weights, &w).unwrap();
        assert_eq!(lift.identity_residual, 0.0);
        let d = boundary_weighted(&lift.chain, &weights, &w).unwrap();
        for n in [2i64, 3, 4] {
            assert_eq!(d.value(lat(&w, n)), ratio(3, 1), "at {n}");
        }
        for n in [-1i64, 0, 1] {
            assert_eq!(d.value(lat(&w, n)), ratio(-3, 1), "at {n}");
        }
        for n in [-3i64, 5, 7] {
            assert_eq!(d.value(lat(&w, n)), ratio(0, 1), "at {n}");
        }

        // zero chain lifts to zero, identity trivially holds
        let zero = SparseChain1::new(&w, s.clone(), BTreeMap::new(), &e_theta).unwrap();
        let lift = lift_chain(&zero, &e, &s, &c, &weights, &w).unwrap();
        assert_eq!(lift.identity_residual, 0.0);
        assert!(lift.chain.entries().is_empty());
    }

    #[test]
    fn free_group_scheme_lifts_with_diagonal_sections() {
        // E = diagonal on S (C = 1): the lift is the chain itself and the
        // measured certificate matches the discrete one.
        let scheme = free_group_scheme(2, 4).unwrap();
        let w = &scheme.window;
        let s: BTreeSet<usize> = (0..w.len()).collect();
        let weights = counting_weights::<BigRational>(&s);
        let d = Relation::diagonal(w);
        let e_prime = Relation::diagonal(w);
        let out = ponzi_to_mu_ps(&scheme.chain, &d, &s, &weights, w, &e_prime, 1e-6).unwrap();
        assert_eq!(out.constant, ratio(1, 1));
        assert_eq!(out.identity_residual, 0.0);
        assert_eq!(out.lifted.entries(), scheme.chain.entries());
        assert!(out.pass, "min witness integral {}", out.min_witness_integral);
        assert!(out.min_witness_integral >= 2.0);
    }
}
