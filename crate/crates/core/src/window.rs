//! Finite windows of a coarse space.
//!
//! A [`Window`] is a finite point list together with a rule for how deep each
//! point sits inside the ambient (infinite) space. Universally quantified
//! statements are only checked on the interior: points whose depth exceeds
//! the reach of the relations involved, so that every section used lies
//! fully inside the window.

use std::fmt::Debug;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::{Error, Result};

/// Slack for floating-point depth and radius comparisons. Word metrics are
/// integer valued, so this never changes a discrete answer.
pub const GEOM_EPS: f64 = 1e-9;

/// A point of some concrete coarse space.
///
/// The two optional hooks expose group structure where it exists; metric-only
/// spaces (the hyperbolic disk) keep the defaults.
pub trait SpacePoint: Clone + PartialEq + Debug + Send + Sync + 'static {
    /// Distance in the space's own metric (word metric for groups,
    /// the Poincaré metric for the disk).
    fn dist(&self, other: &Self) -> f64;

    /// Compact serialization token, also used in reports.
    fn token(&self) -> String;

    /// `self^{-1} * other`, when the space is a group.
    fn try_inv_mul(&self, _other: &Self) -> Option<Self> {
        None
    }

    /// `self * other`, when the space is a group.
    fn try_mul(&self, _other: &Self) -> Option<Self> {
        None
    }

    /// Euclidean coordinates, when the space embeds in the plane
    /// (the Poincaré disk). Measure code uses this to run quadrature.
    fn euclidean_coords(&self) -> Option<(f64, f64)> {
        None
    }

    /// Inverse of [`SpacePoint::euclidean_coords`].
    fn from_euclidean_coords(_x: f64, _y: f64) -> Option<Self> {
        None
    }
}

/// Identity of a window; relations and chains are bound to the window they
/// were built on and refuse to mix.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct WindowId(pub u64);

static NEXT_WINDOW_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> WindowId {
    WindowId(NEXT_WINDOW_ID.fetch_add(1, Ordering::Relaxed))
}

#[derive(Clone, Debug)]
enum DepthRule<P> {
    /// Window is the trace of a metric ball: depth(x) = radius - d(center, x).
    Ball { center: P, radius: f64 },
    /// Explicit per-point depth (e.g. distance to the faces of a box).
    PerPoint(Vec<f64>),
}

/// A finite truncation of a coarse space.
#[derive(Clone, Debug)]
pub struct Window<P> {
    id: WindowId,
    points: Vec<P>,
    depth: DepthRule<P>,
}

impl<P: SpacePoint> Window<P> {
    /// Window that is (the sampled trace of) the closed `radius`-ball
    /// around `center`.
    pub fn from_ball(points: Vec<P>, center: P, radius: f64) -> Self {
        Window {
            id: fresh_id(),
            points,
            depth: DepthRule::Ball { center, radius },
        }
    }

    /// Window with explicit per-point depths.
    pub fn from_depths(points: Vec<P>, depths: Vec<f64>) -> Result<Self> {
        if points.len() != depths.len() {
            return Err(Error::param(
                "depths",
                format!("{} depths for {} points", depths.len(), points.len()),
            ));
        }
        Ok(Window {
            id: fresh_id(),
            points,
            depth: DepthRule::PerPoint(depths),
        })
    }

    pub fn id(&self) -> WindowId {
        self.id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Result<&P> {
        self.points.get(i).ok_or(Error::PointOutsideWindow {
            index: i,
            len: self.points.len(),
        })
    }

    /// How deep point `i` sits inside the window: the closed `depth(i)`-ball
    /// around it lies inside the ambient region the window truncates.
    pub fn depth(&self, i: usize) -> Result<f64> {
        match &self.depth {
            DepthRule::Ball { center, radius } => {
                Ok(radius - center.dist(self.point(i)?))
            }
            DepthRule::PerPoint(d) => {
                self.point(i)?;
                Ok(d[i])
            }
        }
    }

    /// Indices of all points with depth at least `margin`.
    ///
    /// `interior(w, 0)` is the whole window.
    pub fn interior(&self, margin: f64) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&i| self.depth(i).map(|d| d + GEOM_EPS >= margin).unwrap_or(false))
            .collect()
    }

    /// The ball parameters, when the window is a metric ball.
    pub fn ball_rule(&self) -> Option<(&P, f64)> {
        match &self.depth {
            DepthRule::Ball { center, radius } => Some((center, *radius)),
            DepthRule::PerPoint(_) => None,
        }
    }

    /// Upper bound on pairwise distances inside the window.
    pub fn diameter_hint(&self) -> f64 {
        match &self.depth {
            DepthRule::Ball { radius, .. } => 2.0 * radius,
            DepthRule::PerPoint(_) => {
                let mut diam: f64 = 0.0;
                for (i, p) in self.points.iter().enumerate() {
                    for q in &self.points[i + 1..] {
                        diam = diam.max(p.dist(q));
                    }
                }
                diam
            }
        }
    }

    /// Linear-scan lookup of a point's index.
    pub fn index_of(&self, p: &P) -> Option<usize> {
        self.points.iter().position(|q| q == p)
    }

    pub(crate) fn check_id(&self, expected: WindowId) -> Result<()> {
        if self.id == expected {
            Ok(())
        } else {
            Err(Error::WindowMismatch {
                expected: expected.0,
                found: self.id.0,
            })
        }
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i < self.points.len() {
            Ok(())
        } else {
            Err(Error::PointOutsideWindow {
                index: i,
                len: self.points.len(),
            })
        }
    }
}
