//! Relation algebra for controlled sets on windows, coarse axiom checks,
//! and the bornologous / effectively proper / coarsely surjective taxonomy.
//!
//! Relations are bound to the window they were built on and are evaluated as
//! sets of index pairs. Metric-radius and group-compact descriptors keep
//! their symbolic form so containments can be certified by radius arithmetic
//! rather than enumeration; enumeration stays available as the oracle.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::window::{SpacePoint, Window, WindowId, GEOM_EPS};
use crate::{Error, Result};

/// A controlled set restricted to a window.
#[derive(Clone, Debug)]
pub struct Relation<P> {
    window: WindowId,
    kind: RelationKind<P>,
}

#[derive(Clone, Debug)]
pub enum RelationKind<P> {
    /// Explicit ordered pairs of window indices.
    Explicit(BTreeSet<(usize, usize)>),
    /// `{(x, y) : d(x, y) <= r}`.
    MetricRadius(f64),
    /// `E_C = {(x, y) : x^{-1} y in C}` for a finite subset `C` of a group.
    /// The window realization is precomputed; `reach` is `max |c|`.
    GroupCompact {
        compact: Vec<P>,
        pairs: BTreeSet<(usize, usize)>,
        reach: f64,
    },
}

impl<P: SpacePoint> Relation<P> {
    pub fn explicit(w: &Window<P>, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let pairs: BTreeSet<(usize, usize)> = pairs.into_iter().collect();
        for &(i, j) in &pairs {
            w.check_index(i)?;
            w.check_index(j)?;
        }
        Ok(Relation {
            window: w.id(),
            kind: RelationKind::Explicit(pairs),
        })
    }

    /// The diagonal of the window, as explicit pairs.
    pub fn diagonal(w: &Window<P>) -> Self {
        Relation {
            window: w.id(),
            kind: RelationKind::Explicit((0..w.len()).map(|i| (i, i)).collect()),
        }
    }

    pub fn metric_radius(w: &Window<P>, r: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::param("r", format!("radius must be >= 0, got {r}")));
        }
        Ok(Relation {
            window: w.id(),
            kind: RelationKind::MetricRadius(r),
        })
    }

    /// `E_C` for a finite group subset `C`; requires the window's points to
    /// carry group structure.
    pub fn group_compact(w: &Window<P>, compact: Vec<P>) -> Result<Self> {
        let mut reach = 0.0f64;
        for c in &compact {
            let id = c.try_inv_mul(c).ok_or(Error::UnsupportedRelation {
                kind: "GroupCompact",
                reason: "window points carry no group structure".into(),
            })?;
            reach = reach.max(id.dist(c));
        }
        let mut pairs = BTreeSet::new();
        for (i, x) in w.points().iter().enumerate() {
            for (j, y) in w.points().iter().enumerate() {
                let d = x.try_inv_mul(y).expect("group structure checked above");
                if compact.contains(&d) {
                    pairs.insert((i, j));
                }
            }
        }
        Ok(Relation {
            window: w.id(),
            kind: RelationKind::GroupCompact {
                compact,
                pairs,
                reach,
            },
        })
    }

    pub fn window(&self) -> WindowId {
        self.window
    }

    pub fn kind(&self) -> &RelationKind<P> {
        &self.kind
    }

    /// Short descriptor for reports.
    pub fn describe(&self) -> String {
        match &self.kind {
            RelationKind::Explicit(p) => format!("explicit({} pairs)", p.len()),
            RelationKind::MetricRadius(r) => format!("metric_radius({r})"),
            RelationKind::GroupCompact { compact, .. } => {
                format!("group_compact({} elements)", compact.len())
            }
        }
    }

    /// How far a section can reach from its base point: the margin a window
    /// must reserve so sections of interior points are complete.
    pub fn reach(&self) -> f64 {
        match &self.kind {
            RelationKind::Explicit(_) => 0.0,
            RelationKind::MetricRadius(r) => *r,
            RelationKind::GroupCompact { reach, .. } => *reach,
        }
    }

    pub fn contains_pair(&self, w: &Window<P>, i: usize, j: usize) -> Result<bool> {
        w.check_id(self.window)?;
        w.check_index(i)?;
        w.check_index(j)?;
        Ok(match &self.kind {
            RelationKind::Explicit(pairs) => pairs.contains(&(i, j)),
            RelationKind::MetricRadius(r) => {
                w.points()[i].dist(&w.points()[j]) <= r + GEOM_EPS
            }
            RelationKind::GroupCompact { pairs, .. } => pairs.contains(&(i, j)),
        })
    }

    /// Realize the relation as the full set of index pairs on the window.
    pub fn pairs(&self, w: &Window<P>) -> Result<BTreeSet<(usize, usize)>> {
        w.check_id(self.window)?;
        Ok(match &self.kind {
            RelationKind::Explicit(pairs) => pairs.clone(),
            RelationKind::GroupCompact { pairs, .. } => pairs.clone(),
            RelationKind::MetricRadius(r) => {
                let mut out = BTreeSet::new();
                for (i, x) in w.points().iter().enumerate() {
                    for (j, y) in w.points().iter().enumerate() {
                        if x.dist(y) <= r + GEOM_EPS {
                            out.insert((i, j));
                        }
                    }
                }
                out
            }
        })
    }

    /// The section `E_x = {y : (x, y) in E}`, sorted.
    pub fn section(&self, w: &Window<P>, x: usize) -> Result<Vec<usize>> {
        w.check_id(self.window)?;
        w.check_index(x)?;
        Ok(match &self.kind {
            RelationKind::Explicit(pairs) => pairs
                .range((x, 0)..=(x, usize::MAX))
                .map(|&(_, j)| j)
                .collect(),
            RelationKind::GroupCompact { pairs, .. } => pairs
                .range((x, 0)..=(x, usize::MAX))
                .map(|&(_, j)| j)
                .collect(),
            RelationKind::MetricRadius(r) => {
                let p = &w.points()[x];
                w.points()
                    .iter()
                    .enumerate()
                    .filter(|(_, q)| p.dist(q) <= r + GEOM_EPS)
                    .map(|(j, _)| j)
                    .collect()
            }
        })
    }

    /// Transpose `{(y, x) : (x, y) in E}`.
    ///
    /// Metric relations are their own transpose (the metric is symmetric;
    /// the property suite checks this by enumeration). A group-compact
    /// relation transposes to `E_{C^{-1}}`, realized here through its pair
    /// set.
    pub fn transpose(&self, w: &Window<P>) -> Result<Self> {
        w.check_id(self.window)?;
        Ok(match &self.kind {
            RelationKind::MetricRadius(_) => self.clone(),
            RelationKind::Explicit(pairs) => Relation {
                window: self.window,
                kind: RelationKind::Explicit(pairs.iter().map(|&(i, j)| (j, i)).collect()),
            },
            RelationKind::GroupCompact {
                compact,
                pairs,
                reach,
            } => {
                let inv: Option<Vec<P>> = compact
                    .iter()
                    .map(|c| c.try_inv_mul(c).and_then(|id| c.try_inv_mul(&id)))
                    .collect();
                match inv {
                    Some(compact_inv) => Relation {
                        window: self.window,
                        kind: RelationKind::GroupCompact {
                            compact: compact_inv,
                            pairs: pairs.iter().map(|&(i, j)| (j, i)).collect(),
                            reach: *reach,
                        },
                    },
                    None => Relation {
                        window: self.window,
                        kind: RelationKind::Explicit(
                            pairs.iter().map(|&(i, j)| (j, i)).collect(),
                        ),
                    },
                }
            }
        })
    }

    /// Composition `E1 o E2 = {(x, z) : exists y, (x, y) in E1, (y, z) in E2}`,
    /// returned as explicit pairs.
    pub fn compose(&self, other: &Relation<P>, w: &Window<P>) -> Result<Self> {
        w.check_id(self.window)?;
        w.check_id(other.window)?;
        let left = self.pairs(w)?;
        let right = other.pairs(w)?;
        let mut by_first: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(y, z) in &right {
            by_first.entry(y).or_default().push(z);
        }
        let mut out = BTreeSet::new();
        for &(x, y) in &left {
            if let Some(zs) = by_first.get(&y) {
                for &z in zs {
                    out.insert((x, z));
                }
            }
        }
        Ok(Relation {
            window: self.window,
            kind: RelationKind::Explicit(out),
        })
    }

    /// Union, as explicit pairs.
    pub fn union(&self, other: &Relation<P>, w: &Window<P>) -> Result<Self> {
        w.check_id(self.window)?;
        w.check_id(other.window)?;
        let mut pairs = self.pairs(w)?;
        pairs.extend(other.pairs(w)?);
        Ok(Relation {
            window: self.window,
            kind: RelationKind::Explicit(pairs),
        })
    }
}

/// Sup over interior base points of `#(E_x ∩ S)`.
///
/// The margin is the relation's reach, so every section counted is complete.
pub fn uniform_local_finiteness<P: SpacePoint>(
    s: &BTreeSet<usize>,
    e: &Relation<P>,
    w: &Window<P>,
) -> Result<u64> {
    if w.is_empty() {
        return Err(Error::param("window", "empty window"));
    }
    for &i in s {
        w.check_index(i)?;
    }
    let mut sup = 0u64;
    for x in w.interior(e.reach()) {
        let count = e.section(w, x)?.iter().filter(|j| s.contains(j)).count() as u64;
        sup = sup.max(count);
    }
    Ok(sup)
}

/// Outcome of one axiom check.
#[derive(Clone, Debug, Serialize)]
pub struct AxiomCheck {
    pub axiom: &'static str,
    pub pass: bool,
    /// Human-readable witnesses (one per generator pair checked).
    pub witnesses: Vec<String>,
    /// First counterexample pair, as point tokens.
    pub counterexample: Option<(String, String)>,
}

/// Report of [`check_coarse_axioms`].
#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub diagonal: AxiomCheck,
    pub union_closure: AxiomCheck,
    pub product_closure: AxiomCheck,
    pub transpose_closure: AxiomCheck,
    pub pass: bool,
}

fn contained_in(
    sub: &BTreeSet<(usize, usize)>,
    sup: &BTreeSet<(usize, usize)>,
) -> Option<(usize, usize)> {
    sub.iter().find(|p| !sup.contains(p)).copied()
}

/// Outcome of a bound search: pass, witness label, counterexample pair.
type BoundOutcome = (bool, String, Option<(usize, usize)>);

/// Find a bound for `pairs` within the generator family: either containment
/// in one generator, or a synthesized metric / group-compact witness when
/// the two operands carry those descriptors.
fn family_bound<P: SpacePoint>(
    pairs: &BTreeSet<(usize, usize)>,
    synthesized: Option<(Relation<P>, String)>,
    gens: &[Relation<P>],
    w: &Window<P>,
) -> Result<BoundOutcome> {
    if let Some((bound, label)) = synthesized {
        let bound_pairs = bound.pairs(w)?;
        return Ok(match contained_in(pairs, &bound_pairs) {
            None => (true, label, None),
            Some(cx) => (false, format!("{label} fails"), Some(cx)),
        });
    }
    let mut last_cx = None;
    for (gi, g) in gens.iter().enumerate() {
        let gp = g.pairs(w)?;
        match contained_in(pairs, &gp) {
            None => return Ok((true, format!("contained in generator {gi}"), None)),
            Some(cx) => last_cx = Some(cx),
        }
    }
    Ok((false, "no generator contains it".into(), last_cx))
}

fn synth_product<P: SpacePoint>(
    a: &Relation<P>,
    b: &Relation<P>,
    w: &Window<P>,
) -> Result<Option<(Relation<P>, String)>> {
    Ok(match (a.kind(), b.kind()) {
        (RelationKind::MetricRadius(r1), RelationKind::MetricRadius(r2)) => Some((
            Relation::metric_radius(w, r1 + r2)?,
            format!("E_{{{}}} o E_{{{}}} <= E_{{{}}} (radius arithmetic)", r1, r2, r1 + r2),
        )),
        (
            RelationKind::GroupCompact { compact: c1, .. },
            RelationKind::GroupCompact { compact: c2, .. },
        ) => {
            let mut prod = Vec::new();
            for x in c1 {
                for y in c2 {
                    if let Some(p) = x.try_mul(y) {
                        if !prod.contains(&p) {
                            prod.push(p);
                        }
                    }
                }
            }
            let n = prod.len();
            Some((
                Relation::group_compact(w, prod)?,
                format!("E_C1 o E_C2 <= E_C1C2 ({n} elements)"),
            ))
        }
        _ => None,
    })
}

fn synth_union<P: SpacePoint>(
    a: &Relation<P>,
    b: &Relation<P>,
    w: &Window<P>,
) -> Result<Option<(Relation<P>, String)>> {
    Ok(match (a.kind(), b.kind()) {
        (RelationKind::MetricRadius(r1), RelationKind::MetricRadius(r2)) => {
            let r = r1.max(*r2);
            Some((
                Relation::metric_radius(w, r)?,
                format!("E_{{{}}} u E_{{{}}} <= E_{{{}}} (max radius)", r1, r2, r),
            ))
        }
        (
            RelationKind::GroupCompact { compact: c1, .. },
            RelationKind::GroupCompact { compact: c2, .. },
        ) => {
            let mut uni = c1.clone();
            for y in c2 {
                if !uni.contains(y) {
                    uni.push(y.clone());
                }
            }
            let n = uni.len();
            Some((
                Relation::group_compact(w, uni)?,
                format!("E_C1 u E_C2 = E_{{C1 u C2}} ({n} elements)"),
            ))
        }
        _ => None,
    })
}

/// Check the closure axioms of a coarse structure on the window, for the
/// given generating family. Subset stability is definitional and skipped.
///
/// For metric generators the bounds come from radius arithmetic
/// (`r1 + r2` for products, `max` for unions, `r` for transposes) and are
/// then verified by enumeration on the window; other kinds fall back to
/// containment in some generator.
pub fn check_coarse_axioms<P: SpacePoint>(
    gens: &[Relation<P>],
    w: &Window<P>,
) -> Result<AxiomReport> {
    if gens.is_empty() {
        return Err(Error::param("generators", "empty generator list"));
    }
    let token = |i: usize| w.points()[i].token();

    // Axiom 1: some generator contains the diagonal.
    let diag: BTreeSet<(usize, usize)> = (0..w.len()).map(|i| (i, i)).collect();
    let mut diagonal = AxiomCheck {
        axiom: "diagonal",
        pass: false,
        witnesses: vec![],
        counterexample: None,
    };
    let mut best_cx = None;
    for (gi, g) in gens.iter().enumerate() {
        let gp = g.pairs(w)?;
        match contained_in(&diag, &gp) {
            None => {
                diagonal.pass = true;
                diagonal.witnesses.push(format!("generator {gi} contains the diagonal"));
                break;
            }
            Some(cx) => best_cx = Some(cx),
        }
    }
    if !diagonal.pass {
        diagonal.counterexample = best_cx.map(|(i, j)| (token(i), token(j)));
    }

    let mut union_closure = AxiomCheck {
        axiom: "union",
        pass: true,
        witnesses: vec![],
        counterexample: None,
    };
    let mut product_closure = AxiomCheck {
        axiom: "product",
        pass: true,
        witnesses: vec![],
        counterexample: None,
    };
    for (ai, a) in gens.iter().enumerate() {
        for (bi, b) in gens.iter().enumerate() {
            let uni = a.union(b, w)?.pairs(w)?;
            let (ok, label, cx) = family_bound(&uni, synth_union(a, b, w)?, gens, w)?;
            union_closure
                .witnesses
                .push(format!("({ai},{bi}): {label}"));
            if !ok && union_closure.pass {
                union_closure.pass = false;
                union_closure.counterexample = cx.map(|(i, j)| (token(i), token(j)));
            }

            let prod = a.compose(b, w)?.pairs(w)?;
            let (ok, label, cx) = family_bound(&prod, synth_product(a, b, w)?, gens, w)?;
            product_closure
                .witnesses
                .push(format!("({ai},{bi}): {label}"));
            if !ok && product_closure.pass {
                product_closure.pass = false;
                product_closure.counterexample = cx.map(|(i, j)| (token(i), token(j)));
            }
        }
    }

    let mut transpose_closure = AxiomCheck {
        axiom: "transpose",
        pass: true,
        witnesses: vec![],
        counterexample: None,
    };
    for (ai, a) in gens.iter().enumerate() {
        let tp = a.transpose(w)?.pairs(w)?;
        let synth = match a.kind() {
            RelationKind::MetricRadius(r) => Some((
                Relation::metric_radius(w, *r)?,
                format!("E_{{{r}}}^T = E_{{{r}}} (metric symmetry)"),
            )),
            RelationKind::GroupCompact { .. } => {
                let t = a.transpose(w)?;
                let label = match t.kind() {
                    RelationKind::GroupCompact { compact, .. } => {
                        format!("E_C^T = E_{{C^-1}} ({} elements)", compact.len())
                    }
                    _ => "E_C^T realized explicitly".to_string(),
                };
                Some((t, label))
            }
            RelationKind::Explicit(_) => None,
        };
        let (ok, label, cx) = family_bound(&tp, synth, gens, w)?;
        transpose_closure.witnesses.push(format!("({ai}): {label}"));
        if !ok && transpose_closure.pass {
            transpose_closure.pass = false;
            transpose_closure.counterexample = cx.map(|(i, j)| (token(i), token(j)));
        }
    }

    let pass =
        diagonal.pass && union_closure.pass && product_closure.pass && transpose_closure.pass;
    Ok(AxiomReport {
        diagonal,
        union_closure,
        product_closure,
        transpose_closure,
        pass,
    })
}

/// A candidate coarse map between windows, as index maps.
#[derive(Clone, Debug)]
pub struct CoarseMapSpec {
    /// `forward[i]` = index in the target window of the image of source
    /// point `i`; total on the source window.
    pub forward: Vec<usize>,
    /// Optional candidate coarse inverse, target index -> source index.
    pub backward: Option<Vec<usize>>,
}

/// One witness line of [`classify_map`]: the relation checked and the radius
/// of the controlled bound found for it.
#[derive(Clone, Debug, Serialize)]
pub struct RadiusWitness {
    pub relation: String,
    pub radius: f64,
}

/// Report of the map taxonomy checks.
///
/// The third coarse-equivalence condition is implemented as *coarsely
/// surjective* (corrected reading of the cited equivalence, which prints a
/// circular third condition).
#[derive(Clone, Debug, Serialize)]
pub struct MapClassification {
    pub bornologous: Vec<RadiusWitness>,
    pub bornologous_pass: bool,
    pub effectively_proper: Vec<RadiusWitness>,
    pub effectively_proper_pass: bool,
    /// Minimal covering radius from the schedule, if any works.
    pub coarsely_surjective: Option<f64>,
    /// Labelled "coarsely surjective (corrected reading)" in reports.
    pub coarsely_surjective_label: &'static str,
    /// `(max d(x, psi(phi(x))), max d(y, phi(psi(y))))` when `backward` given.
    pub roundtrip_radii: Option<(f64, f64)>,
    pub pass: bool,
}

/// Classify a map against sampled generators of source and target.
///
/// On a finite window every image relation is bounded, so the content of the
/// bornologous / effectively proper checks is the *witness radius* reported
/// per generator; passing means a finite witness exists (and the monotone
/// property, that witnesses do not grow under window shrinkage, is what the
/// property suite checks). Coarse surjectivity searches a radius schedule
/// and genuinely fails when no radius up to the window diameter covers.
pub fn classify_map<PS: SpacePoint, PD: SpacePoint>(
    m: &CoarseMapSpec,
    src: (&Window<PS>, &[Relation<PS>]),
    dst: (&Window<PD>, &[Relation<PD>]),
) -> Result<MapClassification> {
    let (ws, src_gens) = src;
    let (wd, dst_gens) = dst;
    if m.forward.len() != ws.len() {
        return Err(Error::param(
            "forward",
            format!("map defined on {} of {} source points", m.forward.len(), ws.len()),
        ));
    }
    for &j in &m.forward {
        wd.check_index(j)?;
    }

    // Bornologous: image of each source generator has bounded target radius.
    let mut bornologous = Vec::new();
    for g in src_gens {
        let mut radius = 0.0f64;
        for &(i, j) in &g.pairs(ws)? {
            let d = wd.points()[m.forward[i]].dist(&wd.points()[m.forward[j]]);
            radius = radius.max(d);
        }
        bornologous.push(RadiusWitness {
            relation: g.describe(),
            radius,
        });
    }

    // Effectively proper: preimage of each target generator has bounded
    // source radius.
    let mut effectively_proper = Vec::new();
    for f in dst_gens {
        let mut radius = 0.0f64;
        for (i, _) in ws.points().iter().enumerate() {
            for (j, _) in ws.points().iter().enumerate() {
                if f.contains_pair(wd, m.forward[i], m.forward[j])? {
                    radius = radius.max(ws.points()[i].dist(&ws.points()[j]));
                }
            }
        }
        effectively_proper.push(RadiusWitness {
            relation: f.describe(),
            radius,
        });
    }

    // Coarse surjectivity: minimal covering radius over a doubling schedule.
    let diam = wd.diameter_hint();
    let image: Vec<&PD> = m.forward.iter().map(|&j| &wd.points()[j]).collect();
    let covering_radius = wd
        .points()
        .iter()
        .map(|y| {
            image
                .iter()
                .map(|p| p.dist(y))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max);
    let coarsely_surjective = if covering_radius <= diam + GEOM_EPS {
        // round up to the first radius of the schedule {0, 1, 2, 4, ...}
        let mut r = 0.0f64;
        while r + GEOM_EPS < covering_radius {
            r = if r == 0.0 { 1.0 } else { r * 2.0 };
        }
        Some(if covering_radius <= GEOM_EPS { 0.0 } else { r })
    } else {
        None
    };

    let roundtrip_radii = match &m.backward {
        None => None,
        Some(back) => {
            if back.len() != wd.len() {
                return Err(Error::param(
                    "backward",
                    format!("map defined on {} of {} target points", back.len(), wd.len()),
                ));
            }
            for &i in back {
                ws.check_index(i)?;
            }
            let mut r_src = 0.0f64;
            for (i, p) in ws.points().iter().enumerate() {
                r_src = r_src.max(p.dist(&ws.points()[back[m.forward[i]]]));
            }
            let mut r_dst = 0.0f64;
            for (j, q) in wd.points().iter().enumerate() {
                r_dst = r_dst.max(q.dist(&wd.points()[m.forward[back[j]]]));
            }
            Some((r_src, r_dst))
        }
    };

    let bornologous_pass = bornologous.iter().all(|w| w.radius.is_finite());
    let effectively_proper_pass = effectively_proper.iter().all(|w| w.radius.is_finite());
    let pass = bornologous_pass && effectively_proper_pass && coarsely_surjective.is_some();
    Ok(MapClassification {
        bornologous,
        bornologous_pass,
        effectively_proper,
        effectively_proper_pass,
        coarsely_surjective,
        coarsely_surjective_label: "coarsely surjective (corrected reading)",
        roundtrip_radii,
        pass,
    })
}
