//! Uniform chains on finite windows of uniformly locally finite spaces:
//! Cayley balls of free groups and Z^n, the counting boundary operator,
//! effectiveness certificates, the free-group scheme witness and the
//! flux obstruction on Z^n.
//!
//! Chain entries are generic in the coefficient type: exact rationals
//! ([`num_rational::BigRational`]) where conservation identities must hold
//! exactly, `f64` for chains produced by quadrature.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

use crate::coarse::Relation;
use crate::window::{SpacePoint, Window, WindowId};
use crate::{Error, Result};

/// Coefficient ring for chain entries.
pub trait Coeff: Clone + PartialEq + PartialOrd + Signed + Debug + Send + Sync + 'static {
    fn to_f64_lossy(&self) -> f64;
}

impl Coeff for f64 {
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Coeff for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Convenience constructor for exact rational entries.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// An element of a finitely generated group at desk scale: a freely reduced
/// word of a free group, or a lattice point of Z^n.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum GroupPoint {
    /// Letters are `+-1 ..= +-k`; no letter is adjacent to its inverse.
    Word(Vec<i32>),
    Lattice(Vec<i64>),
}

impl GroupPoint {
    /// Freely reduce and wrap a word.
    pub fn free_word(letters: Vec<i32>) -> Self {
        let mut out: Vec<i32> = Vec::with_capacity(letters.len());
        for l in letters {
            assert!(l != 0, "letter 0 is not a generator");
            if out.last().is_some_and(|&p| p == -l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        GroupPoint::Word(out)
    }

    pub fn lattice(coords: Vec<i64>) -> Self {
        GroupPoint::Lattice(coords)
    }

    /// Word length: reduced length for free groups, l^1 norm for Z^n.
    pub fn word_len(&self) -> u64 {
        match self {
            GroupPoint::Word(w) => w.len() as u64,
            GroupPoint::Lattice(v) => v.iter().map(|c| c.unsigned_abs()).sum(),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            GroupPoint::Word(w) => GroupPoint::Word(w.iter().rev().map(|l| -l).collect()),
            GroupPoint::Lattice(v) => GroupPoint::Lattice(v.iter().map(|c| -c).collect()),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        match (self, other) {
            (GroupPoint::Word(a), GroupPoint::Word(b)) => {
                let mut letters = a.clone();
                letters.extend_from_slice(b);
                GroupPoint::free_word(letters)
            }
            (GroupPoint::Lattice(a), GroupPoint::Lattice(b)) => {
                assert_eq!(a.len(), b.len(), "lattice dimensions differ");
                GroupPoint::Lattice(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            _ => panic!("mixed group kinds"),
        }
    }

    /// `self^{-1} * other`.
    pub fn inv_mul(&self, other: &Self) -> Self {
        self.inverse().mul(other)
    }
}

impl SpacePoint for GroupPoint {
    fn dist(&self, other: &Self) -> f64 {
        self.inv_mul(other).word_len() as f64
    }

    fn token(&self) -> String {
        match self {
            GroupPoint::Word(w) => {
                if w.is_empty() {
                    return "e".into();
                }
                w.iter()
                    .map(|&l| {
                        let c = (b'a' + (l.unsigned_abs() as u8 - 1)) as char;
                        if l > 0 {
                            c.to_string()
                        } else {
                            c.to_ascii_uppercase().to_string()
                        }
                    })
                    .collect()
            }
            GroupPoint::Lattice(v) => v
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(","),
        }
    }

    fn try_inv_mul(&self, other: &Self) -> Option<Self> {
        Some(self.inv_mul(other))
    }

    fn try_mul(&self, other: &Self) -> Option<Self> {
        Some(self.mul(other))
    }
}

/// Which group a Cayley ball lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupKind {
    /// Free group of rank `k`.
    Free(u32),
    /// Z^n with generators `+-e_i` (l^1 word metric).
    Zn(u32),
}

const MAX_BALL_POINTS: u64 = 10_000_000;

fn free_ball_size(k: u32, radius: u32) -> u64 {
    // 1 + 2k * ((2k-1)^radius - 1) / (2k - 2)  for k >= 2, with saturation.
    let q = (2 * k - 1) as u64;
    let mut sphere = (2 * k) as u64;
    let mut total = 1u64;
    for _ in 0..radius {
        total = total.saturating_add(sphere);
        sphere = sphere.saturating_mul(q);
        if total > MAX_BALL_POINTS {
            return total;
        }
    }
    total
}

/// All elements of word length `<= radius`, in BFS order, as a window whose
/// interior rule is the ball depth `radius - |x|`.
pub fn cayley_ball(group: GroupKind, radius: u32) -> Result<Window<GroupPoint>> {
    let identity = match group {
        GroupKind::Free(k) => {
            if k == 0 {
                return Err(Error::param("group", "free rank must be >= 1"));
            }
            if free_ball_size(k, radius) > MAX_BALL_POINTS {
                return Err(Error::param(
                    "radius",
                    format!("ball would exceed {MAX_BALL_POINTS} points"),
                ));
            }
            GroupPoint::Word(vec![])
        }
        GroupKind::Zn(n) => {
            if n == 0 {
                return Err(Error::param("group", "lattice dimension must be >= 1"));
            }
            // crude size bound: (2r+1)^n
            let size = (2u64 * radius as u64 + 1).checked_pow(n).unwrap_or(u64::MAX);
            if size > MAX_BALL_POINTS {
                return Err(Error::param(
                    "radius",
                    format!("ball would exceed {MAX_BALL_POINTS} points"),
                ));
            }
            GroupPoint::Lattice(vec![0; n as usize])
        }
    };

    let generators: Vec<GroupPoint> = match group {
        GroupKind::Free(k) => (1..=k as i32)
            .flat_map(|l| [GroupPoint::Word(vec![l]), GroupPoint::Word(vec![-l])])
            .collect(),
        GroupKind::Zn(n) => (0..n as usize)
            .flat_map(|i| {
                let mut plus = vec![0i64; n as usize];
                plus[i] = 1;
                let mut minus = vec![0i64; n as usize];
                minus[i] = -1;
                [GroupPoint::Lattice(plus), GroupPoint::Lattice(minus)]
            })
            .collect(),
    };

    let mut seen: BTreeSet<GroupPoint> = BTreeSet::new();
    let mut frontier = vec![identity.clone()];
    seen.insert(identity.clone());
    let mut points = vec![identity.clone()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for g in &frontier {
            for s in &generators {
                let h = g.mul(s);
                if seen.insert(h.clone()) {
                    points.push(h.clone());
                    next.push(h);
                }
            }
        }
        frontier = next;
    }
    Ok(Window::from_ball(points, identity, radius as f64))
}

/// Window on the Z lattice points `a ..= b`, depth = distance to the ends.
pub fn z_interval(a: i64, b: i64) -> Window<GroupPoint> {
    assert!(a <= b);
    let points: Vec<GroupPoint> = (a..=b).map(|n| GroupPoint::Lattice(vec![n])).collect();
    let depths: Vec<f64> = (a..=b).map(|n| (n - a).min(b - n) as f64).collect();
    Window::from_depths(points, depths).expect("lengths match")
}

/// Window on a box of Z^n; depth = min face distance (the l^1 ball of that
/// radius around the point stays inside the box).
pub fn z_box(bounds: &[(i64, i64)]) -> Window<GroupPoint> {
    assert!(!bounds.is_empty());
    for &(a, b) in bounds {
        assert!(a <= b);
    }
    let mut points = vec![Vec::new()];
    for &(a, b) in bounds {
        let mut next = Vec::new();
        for p in &points {
            for c in a..=b {
                let mut q = p.clone();
                q.push(c);
                next.push(q);
            }
        }
        points = next;
    }
    let depths: Vec<f64> = points
        .iter()
        .map(|p| {
            p.iter()
                .zip(bounds)
                .map(|(&c, &(a, b))| (c - a).min(b - c))
                .min()
                .unwrap() as f64
        })
        .collect();
    let points = points.into_iter().map(GroupPoint::Lattice).collect();
    Window::from_depths(points, depths).expect("lengths match")
}

/// A finitely supported 0-chain on window points.
#[derive(Clone, Debug)]
pub struct SparseChain0<K> {
    window: WindowId,
    support_set: BTreeSet<usize>,
    entries: BTreeMap<usize, K>,
}

impl<K: Coeff> SparseChain0<K> {
    pub fn new<P: SpacePoint>(
        w: &Window<P>,
        support_set: BTreeSet<usize>,
        entries: BTreeMap<usize, K>,
    ) -> Result<Self> {
        for &i in support_set.iter().chain(entries.keys()) {
            w.check_index(i)?;
        }
        for i in entries.keys() {
            if !support_set.contains(i) {
                return Err(Error::param("entries", format!("entry at {i} outside S")));
            }
        }
        let entries = entries.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Ok(SparseChain0 {
            window: w.id(),
            support_set,
            entries,
        })
    }

    pub fn window(&self) -> WindowId {
        self.window
    }

    pub fn support_set(&self) -> &BTreeSet<usize> {
        &self.support_set
    }

    pub fn entries(&self) -> &BTreeMap<usize, K> {
        &self.entries
    }

    pub fn value(&self, i: usize) -> K {
        self.entries.get(&i).cloned().unwrap_or_else(K::zero)
    }

    /// `max |entry|`, zero for the empty chain.
    pub fn bound(&self) -> K {
        self.entries
            .values()
            .map(|v| v.abs())
            .fold(K::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn total(&self) -> K {
        self.entries
            .values()
            .fold(K::zero(), |a, b| a + b.clone())
    }
}

/// A finitely supported 1-chain: entries on pairs of support points, all
/// pairs lying in the declared support entourage.
#[derive(Clone, Debug)]
pub struct SparseChain1<K> {
    window: WindowId,
    support_set: BTreeSet<usize>,
    entries: BTreeMap<(usize, usize), K>,
    support_entourage: RelationSummary,
}

/// What a chain remembers about its support entourage: enough to reason
/// about margins without holding the window alive.
#[derive(Clone, Debug, Serialize)]
pub struct RelationSummary {
    pub description: String,
    pub reach: f64,
}

impl<K: Coeff> SparseChain1<K> {
    pub fn new<P: SpacePoint>(
        w: &Window<P>,
        support_set: BTreeSet<usize>,
        entries: BTreeMap<(usize, usize), K>,
        support_entourage: &Relation<P>,
    ) -> Result<Self> {
        for &i in &support_set {
            w.check_index(i)?;
        }
        for &(i, j) in entries.keys() {
            if !support_set.contains(&i) || !support_set.contains(&j) {
                return Err(Error::param(
                    "entries",
                    format!("pair ({i},{j}) outside S x S"),
                ));
            }
            if !support_entourage.contains_pair(w, i, j)? {
                return Err(Error::param(
                    "entries",
                    format!("pair ({i},{j}) outside the support entourage"),
                ));
            }
        }
        let entries = entries.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Ok(SparseChain1 {
            window: w.id(),
            support_set,
            entries,
            support_entourage: RelationSummary {
                description: support_entourage.describe(),
                reach: support_entourage.reach(),
            },
        })
    }

    pub fn window(&self) -> WindowId {
        self.window
    }

    pub fn support_set(&self) -> &BTreeSet<usize> {
        &self.support_set
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), K> {
        &self.entries
    }

    pub fn value(&self, i: usize, j: usize) -> K {
        self.entries.get(&(i, j)).cloned().unwrap_or_else(K::zero)
    }

    pub fn support_entourage(&self) -> &RelationSummary {
        &self.support_entourage
    }

    pub fn bound(&self) -> K {
        self.entries
            .values()
            .map(|v| v.abs())
            .fold(K::zero(), |a, b| if b > a { b } else { a })
    }

    /// `a * self + b * other`, entrywise.
    pub fn linear_combination(&self, a: &K, other: &SparseChain1<K>, b: &K) -> Result<Self> {
        if self.window != other.window {
            return Err(Error::WindowMismatch {
                expected: self.window.0,
                found: other.window.0,
            });
        }
        let mut entries = BTreeMap::new();
        for (&k, v) in &self.entries {
            entries.insert(k, a.clone() * v.clone());
        }
        for (&k, v) in &other.entries {
            let add = b.clone() * v.clone();
            entries
                .entry(k)
                .and_modify(|e: &mut K| *e = e.clone() + add.clone())
                .or_insert(add);
        }
        entries.retain(|_, v| !v.is_zero());
        let support_set: BTreeSet<usize> = self
            .support_set
            .union(&other.support_set)
            .copied()
            .collect();
        let reach = self
            .support_entourage
            .reach
            .max(other.support_entourage.reach);
        Ok(SparseChain1 {
            window: self.window,
            support_set,
            entries,
            support_entourage: RelationSummary {
                description: format!(
                    "union({}, {})",
                    self.support_entourage.description, other.support_entourage.description
                ),
                reach,
            },
        })
    }
}

/// Counting boundary: `(d theta)(s) = sum_s' theta(s', s) - sum_s' theta(s, s')`.
pub fn boundary<K: Coeff>(theta: &SparseChain1<K>) -> SparseChain0<K> {
    let mut entries: BTreeMap<usize, K> = BTreeMap::new();
    for (&(i, j), v) in theta.entries() {
        entries
            .entry(j)
            .and_modify(|e| *e = e.clone() + v.clone())
            .or_insert_with(|| v.clone());
        entries
            .entry(i)
            .and_modify(|e| *e = e.clone() - v.clone())
            .or_insert_with(|| K::zero() - v.clone());
    }
    entries.retain(|_, v| !v.is_zero());
    SparseChain0 {
        window: theta.window(),
        support_set: theta.support_set().clone(),
        entries,
    }
}

/// Certificate that a 0-chain is effective on the window interior.
#[derive(Clone, Debug, Serialize)]
pub struct EffectivenessCertificate {
    /// Witness relation, by description; `witness_reach` is its reach.
    pub witness_relation: String,
    pub witness_reach: f64,
    /// Min over interior base points of the section sum, lossy for reports.
    pub min_interior_sum: f64,
    /// Token of an interior point achieving the minimum.
    pub argmin: Option<String>,
    /// Margin consumed: chain margin + witness reach.
    pub margin: f64,
    pub interior_points: usize,
    pub pass: bool,
}

/// Check effectiveness of a nonnegative 0-chain against candidate witness
/// relations, on the interior left after `phi_margin` (how much margin the
/// chain itself consumed, e.g. the support reach of the 1-chain whose
/// boundary it is).
///
/// Quantification runs over interior base points only; the first candidate
/// whose minimal section sum reaches 1 wins.
pub fn check_effective<K: Coeff, P: SpacePoint>(
    phi: &SparseChain0<K>,
    phi_margin: f64,
    candidates: &[Relation<P>],
    w: &Window<P>,
) -> Result<EffectivenessCertificate> {
    w.check_id(phi.window())?;
    // nonnegativity is required where the chain's values are trustworthy:
    // outside interior(phi_margin) they are truncation artifacts
    let trusted: BTreeSet<usize> = w.interior(phi_margin).into_iter().collect();
    if let Some((&i, _)) = phi
        .entries()
        .iter()
        .find(|(i, v)| trusted.contains(i) && v.is_negative())
    {
        return Err(Error::NegativeEntry {
            at: w.points()[i].token(),
        });
    }
    let one = K::one();
    let mut last: Option<EffectivenessCertificate> = None;
    for e in candidates {
        let margin = phi_margin + e.reach();
        let interior = w.interior(margin);
        let mut min_sum: Option<(K, usize)> = None;
        for &x in &interior {
            let sum = e
                .section(w, x)?
                .into_iter()
                .filter(|j| phi.support_set().contains(j))
                .fold(K::zero(), |a, j| a + phi.value(j));
            if min_sum.as_ref().map(|(m, _)| sum < *m).unwrap_or(true) {
                min_sum = Some((sum, x));
            }
        }
        let (min, argmin) = match min_sum {
            Some((m, x)) => (m, Some(x)),
            None => (K::zero(), None),
        };
        let pass = argmin.is_some() && min >= one;
        let cert = EffectivenessCertificate {
            witness_relation: e.describe(),
            witness_reach: e.reach(),
            min_interior_sum: min.to_f64_lossy(),
            argmin: argmin.map(|x| w.points()[x].token()),
            margin,
            interior_points: interior.len(),
            pass,
        };
        if pass {
            return Ok(cert);
        }
        last = Some(cert);
    }
    last.ok_or_else(|| Error::param("candidates", "empty candidate list"))
}

/// Increasing metric-radius schedule `{0, step, 2*step, ..., <= max}`.
pub fn radius_schedule<P: SpacePoint>(
    w: &Window<P>,
    step: f64,
    max: f64,
) -> Result<Vec<Relation<P>>> {
    if !(step > 0.0) {
        return Err(Error::param("step", "schedule step must be positive"));
    }
    let mut out = Vec::new();
    let mut r = 0.0;
    while r <= max + 1e-12 {
        out.push(Relation::metric_radius(w, r)?);
        r += step;
    }
    Ok(out)
}

/// The free-group witness scheme and the ball it lives on.
pub struct FreeGroupScheme {
    pub window: Window<GroupPoint>,
    pub chain: SparseChain1<BigRational>,
}

/// On the radius-`radius` ball of the free group of rank `k`, the chain
/// sending one unit from every nonidentity word to its parent (last letter
/// removed). Interior vertices then profit `2k - 2` and the identity `2k`.
///
/// `k = 1` is refused: Z is amenable and the construction's effectiveness
/// argument needs branching at interior vertices.
pub fn free_group_scheme(k: u32, radius: u32) -> Result<FreeGroupScheme> {
    if k < 2 {
        return Err(Error::param(
            "k",
            "rank must be >= 2 (Z is amenable; no such scheme exists there)",
        ));
    }
    if radius < 1 {
        return Err(Error::param("radius", "radius must be >= 1"));
    }
    let window = cayley_ball(GroupKind::Free(k), radius)?;
    let index: HashMap<&GroupPoint, usize> = window
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| (p, i))
        .collect();
    let mut entries = BTreeMap::new();
    for (i, p) in window.points().iter().enumerate() {
        let GroupPoint::Word(word) = p else {
            unreachable!()
        };
        if word.is_empty() {
            continue;
        }
        let parent = GroupPoint::Word(word[..word.len() - 1].to_vec());
        let j = index[&parent];
        entries.insert((i, j), BigRational::from_integer(1.into()));
    }
    let support: BTreeSet<usize> = (0..window.len()).collect();
    let entourage = Relation::metric_radius(&window, 1.0)?;
    let chain = SparseChain1::new(&window, support, entries, &entourage)?;
    Ok(FreeGroupScheme { window, chain })
}

/// Flux report for one window of Z^n.
#[derive(Clone, Debug, Serialize)]
pub struct FluxWindowReport {
    pub window_points: usize,
    pub interior_points: usize,
    /// Exact boundary sum over the window, as a string of the rational.
    pub boundary_sum: String,
    pub boundary_sum_f64: f64,
    /// Unordered pairs crossing the window boundary at distance <= R.
    pub crossing_pairs: u64,
    /// `bound = ||theta||_inf * crossing_pairs * orientation_factor`.
    pub bound: f64,
    pub bound_holds: bool,
    /// Set when `interior_points > bound`: no chain of this reach and bound
    /// can have boundary >= 1 on the whole interior of this window.
    pub refutation: Option<String>,
}

/// Report of [`flux_obstruction`].
#[derive(Clone, Debug, Serialize)]
pub struct FluxReport {
    pub reach: f64,
    pub sup_norm: f64,
    /// 1 for one-directional (mass-transport) chains, 2 in general.
    pub orientation_factor: u8,
    pub windows: Vec<FluxWindowReport>,
    pub all_bounds_hold: bool,
}

/// Telescoping flux bound on Z^n: interior pair contributions to
/// `sum_{x in W} (d theta)(x)` cancel, so the sum is controlled by the pairs
/// crossing the window boundary within the chain's reach `R`.
///
/// For one-directional chains (at most one orientation of each pair carries
/// mass -- the mass-transport normal form) each crossing pair contributes at
/// most `||theta||_inf`; for general signed chains the factor doubles. Any
/// chain whose boundary were >= 1 on the whole interior of a window with
/// more interior points than the bound is refuted.
pub fn flux_obstruction<K: Coeff>(
    theta: &SparseChain1<K>,
    full_window: &Window<GroupPoint>,
    sub_windows: &[BTreeSet<usize>],
) -> Result<FluxReport> {
    full_window.check_id(theta.window())?;
    let reach = theta.support_entourage().reach;
    if !reach.is_finite() {
        return Err(Error::UnsupportedRelation {
            kind: "support entourage",
            reason: "flux bound needs a metric reach".into(),
        });
    }
    let one_directional = theta
        .entries()
        .keys()
        .all(|&(i, j)| !theta.entries().contains_key(&(j, i)) || i == j);
    let orientation_factor: u8 = if one_directional { 1 } else { 2 };
    let sup = theta.bound().to_f64_lossy();

    let mut windows = Vec::new();
    let mut all_hold = true;
    for sub in sub_windows {
        for &i in sub {
            full_window.check_index(i)?;
        }
        // Exact boundary sum over the sub-window.
        let mut sum = K::zero();
        for (&(i, j), v) in theta.entries() {
            let i_in = sub.contains(&i);
            let j_in = sub.contains(&j);
            if j_in {
                sum = sum + v.clone();
            }
            if i_in {
                sum = sum - v.clone();
            }
        }
        // Crossing pairs: unordered {u, v}, u in W, v outside, d <= reach.
        let mut crossing = 0u64;
        for &u in sub {
            let pu = &full_window.points()[u];
            for (v, pv) in full_window.points().iter().enumerate() {
                if !sub.contains(&v) && pu.dist(pv) <= reach + 1e-9 {
                    crossing += 1;
                }
            }
        }
        let bound = sup * crossing as f64 * orientation_factor as f64;
        let sum_f64 = sum.to_f64_lossy();
        let holds = sum_f64.abs() <= bound + 1e-9;
        all_hold &= holds;

        // Interior of the sub-window at margin = reach.
        let interior = sub
            .iter()
            .filter(|&&u| {
                let pu = &full_window.points()[u];
                full_window
                    .points()
                    .iter()
                    .enumerate()
                    .all(|(v, pv)| sub.contains(&v) || pu.dist(pv) > reach + 1e-9)
            })
            .count();
        let refutation = if interior as f64 > bound {
            Some(format!(
                "no chain with reach {reach} and sup-norm {sup} has boundary >= 1 \
                 on all {interior} interior points: the flux bound caps the window \
                 boundary sum at {bound}"
            ))
        } else {
            None
        };
        windows.push(FluxWindowReport {
            window_points: sub.len(),
            interior_points: interior,
            boundary_sum: format!("{sum:?}"),
            boundary_sum_f64: sum_f64,
            crossing_pairs: crossing,
            bound,
            bound_holds: holds,
            refutation,
        });
    }
    Ok(FluxReport {
        reach,
        sup_norm: sup,
        orientation_factor,
        windows,
        all_bounds_hold: all_hold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarse::Relation;

    #[test]
    fn cayley_ball_sizes() {
        assert_eq!(cayley_ball(GroupKind::Free(2), 1).unwrap().len(), 5);
        assert_eq!(cayley_ball(GroupKind::Free(2), 3).unwrap().len(), 53);
        assert_eq!(cayley_ball(GroupKind::Zn(2), 2).unwrap().len(), 13);
        assert_eq!(cayley_ball(GroupKind::Free(2), 8).unwrap().len(), 2 * 3usize.pow(8) - 1);
    }

    #[test]
    fn ball_overflow_guard() {
        assert!(cayley_ball(GroupKind::Free(2), 30).is_err());
        assert!(cayley_ball(GroupKind::Zn(2), 3000).is_err());
    }

    #[test]
    fn word_reduction() {
        let w = GroupPoint::free_word(vec![1, 2, -2, -1, 1]);
        assert_eq!(w, GroupPoint::Word(vec![1]));
        assert_eq!(w.token(), "a");
        assert_eq!(GroupPoint::free_word(vec![]).token(), "e");
        assert_eq!(GroupPoint::free_word(vec![-2, 1]).token(), "Ba");
    }

    #[test]
    fn boundary_single_edge() {
        let w = z_interval(0, 3);
        let a = w.index_of(&GroupPoint::lattice(vec![0])).unwrap();
        let b = w.index_of(&GroupPoint::lattice(vec![1])).unwrap();
        let e = Relation::metric_radius(&w, 1.0).unwrap();
        let theta = SparseChain1::new(
            &w,
            [a, b].into_iter().collect(),
            [((a, b), ratio(1, 1))].into_iter().collect(),
            &e,
        )
        .unwrap();
        let d = boundary(&theta);
        assert_eq!(d.value(b), ratio(1, 1));
        assert_eq!(d.value(a), ratio(-1, 1));
    }

    #[test]
    fn boundary_of_symmetric_chain_vanishes() {
        let w = z_interval(0, 4);
        let e = Relation::metric_radius(&w, 2.0).unwrap();
        let entries: BTreeMap<(usize, usize), BigRational> = [
            ((0usize, 2usize), ratio(3, 7)),
            ((2, 0), ratio(3, 7)),
            ((1, 3), ratio(-2, 5)),
            ((3, 1), ratio(-2, 5)),
        ]
        .into_iter()
        .collect();
        let theta =
            SparseChain1::new(&w, (0..w.len()).collect(), entries, &e).unwrap();
        let d = boundary(&theta);
        assert!(d.entries().is_empty());
    }

    #[test]
    fn free_scheme_boundary_values() {
        for (k, radius) in [(2u32, 8u32), (3, 5)] {
            let scheme = free_group_scheme(k, radius).unwrap();
            let d = boundary(&scheme.chain);
            let interior = scheme.window.interior(1.0);
            for &i in &interior {
                let len = scheme.window.points()[i].dist(&GroupPoint::free_word(vec![]));
                let expect = if len == 0.0 {
                    2 * k as i64
                } else {
                    2 * k as i64 - 2
                };
                assert_eq!(d.value(i), ratio(expect, 1), "at {:?}", scheme.window.points()[i]);
            }
        }
    }

    #[test]
    fn free_scheme_is_effective_with_diagonal_witness() {
        let scheme = free_group_scheme(2, 5).unwrap();
        let d = boundary(&scheme.chain);
        let candidates = vec![Relation::diagonal(&scheme.window)];
        let cert = check_effective(&d, 1.0, &candidates, &scheme.window).unwrap();
        assert!(cert.pass);
        assert_eq!(cert.min_interior_sum, 2.0);
        assert_eq!(cert.witness_reach, 0.0);
    }

    #[test]
    fn free_scheme_rejects_rank_one() {
        assert!(free_group_scheme(1, 4).is_err());
    }

    #[test]
    fn effectiveness_examples() {
        let w = z_interval(-3, 3);
        let all: BTreeSet<usize> = (0..w.len()).collect();
        let ones: BTreeMap<usize, BigRational> =
            (0..w.len()).map(|i| (i, ratio(1, 1))).collect();
        let phi = SparseChain0::new(&w, all.clone(), ones).unwrap();
        let cert = check_effective(
            &phi,
            0.0,
            &[Relation::diagonal(&w)],
            &w,
        )
        .unwrap();
        assert!(cert.pass);
        assert_eq!(cert.min_interior_sum, 1.0);

        let zero: SparseChain0<BigRational> =
            SparseChain0::new(&w, all, BTreeMap::new()).unwrap();
        let cert = check_effective(&zero, 0.0, &[Relation::diagonal(&w)], &w).unwrap();
        assert!(!cert.pass);
    }

    #[test]
    fn effectiveness_rejects_negative_entries() {
        let w = z_interval(0, 2);
        let phi = SparseChain0::new(
            &w,
            (0..w.len()).collect(),
            [(0usize, ratio(-1, 2))].into_iter().collect(),
        )
        .unwrap();
        assert!(matches!(
            check_effective(&phi, 0.0, &[Relation::diagonal(&w)], &w),
            Err(Error::NegativeEntry { .. })
        ));
    }

    #[test]
    fn flux_forward_chain_on_z() {
        let w = z_interval(-10, 30);
        let e = Relation::metric_radius(&w, 1.0).unwrap();
        let entries: BTreeMap<(usize, usize), BigRational> = (0..w.len() - 1)
            .map(|i| ((i, i + 1), ratio(1, 1)))
            .collect();
        let theta = SparseChain1::new(&w, (0..w.len()).collect(), entries, &e).unwrap();
        // sub-window [0, 20] inside [-10, 30]
        let sub: BTreeSet<usize> = (10..=30).collect();
        let report = flux_obstruction(&theta, &w, &[sub]).unwrap();
        let win = &report.windows[0];
        assert_eq!(win.boundary_sum_f64, 0.0);
        assert_eq!(win.crossing_pairs, 2);
        assert_eq!(report.orientation_factor, 1);
        assert_eq!(win.bound, 2.0);
        assert!(win.bound_holds);
        assert!(win.refutation.is_some(), "19 interior points > bound 2");
    }
}
