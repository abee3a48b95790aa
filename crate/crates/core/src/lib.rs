//! Ponzi schemes and measured Ponzi schemes on windowed coarse spaces.
//!
//! Everything here works on *windows*: finite truncations of a coarse space
//! on which the usual "for all x" statements can be checked exactly (discrete
//! spaces) or to a quantified numerical tolerance (the hyperbolic disk).
//!
//! Module map:
//! - [`window`]: points, finite windows, interior margins.
//! - [`coarse`]: relations (controlled sets), the relation algebra, coarse
//!   axiom checks and the bornologous / effectively proper / coarsely
//!   surjective map taxonomy.
//! - [`hyperbolic`]: Poincaré disk geometry, lens areas, adaptive polar and
//!   Monte Carlo quadrature.
//! - [`discrete`]: uniform chains on Cayley balls, the counting boundary
//!   operator, effectiveness certificates, the free-group scheme and the
//!   flux obstruction on Z^n.
//! - [`measure`]: measure chains, the integral boundary operator, the
//!   explicit hyperbolic scheme with closed-form and quadrature evaluation.
//! - [`transport`]: push-forwards along measure effectively proper maps,
//!   quasi-lattice tilings, and the conversions between the discrete and
//!   measured notions.
//! - [`io`]: the tab-separated chain and tiling text formats.

pub mod coarse;
pub mod discrete;
mod error;
pub mod hyperbolic;
pub mod io;
pub mod measure;
pub mod transport;
pub mod window;

pub use error::{Error, Result};
