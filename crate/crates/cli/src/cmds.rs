//! The four verification commands.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use coarse_ponzi::coarse::Relation;
use coarse_ponzi::discrete::{
    boundary, check_effective, flux_obstruction, free_group_scheme, ratio, z_box, z_interval,
    Coeff, FluxReport, GroupPoint, SparseChain1,
};
use coarse_ponzi::hyperbolic::{
    area_integral, ball_volume, net_window, polar_grid_window, DiskPoint, QuadratureSpec,
};
use coarse_ponzi::measure::{
    boundary_closed_form, boundary_lens_form, epsilon_bound, hyperbolic_scheme_density,
    lens_tail_limit, verify_mu_ps, Density1, MeasureSpec, MuChain1, VerifyOpts,
};
use coarse_ponzi::transport::{
    build_tiling, constant_on_s_check, lift_chain, mu_ps_to_ponzi, order_lattice, verify_cover_mc,
    TilePushParams,
};
use coarse_ponzi::window::{SpacePoint, Window};

use crate::out::{emit, write_csv, Certificate, Result};

const SCHEMA: u32 = 1;

#[derive(Args, Serialize)]
pub struct VerifyHyperbolicArgs {
    /// Geodesic extent of the quadrature grid.
    #[arg(long, default_value_t = 4.0)]
    pub grid_r_max: f64,
    /// Radial step of the quadrature grid.
    #[arg(long, default_value_t = 0.25)]
    pub grid_r_step: f64,
    /// Angles per radius on the quadrature grid.
    #[arg(long, default_value_t = 16)]
    pub angles: usize,
    /// Extent of the closed-form radial grid.
    #[arg(long, default_value_t = 10.0)]
    pub closed_r_max: f64,
    /// Step of the closed-form radial grid.
    #[arg(long, default_value_t = 0.01)]
    pub closed_r_step: f64,
    /// Extent of the monotone-tail check.
    #[arg(long, default_value_t = 20.0)]
    pub mono_r_max: f64,
    /// Absolute quadrature tolerance.
    #[arg(long, default_value_t = 1e-5)]
    pub quad_tol: f64,
    /// Quadrature/sampling seed.
    #[arg(long, default_value_t = 0xC0A55E)]
    pub seed: u64,
    /// Self-test: measure the ball of this radius by quadrature.
    #[arg(long)]
    pub ball_radius: Option<f64>,
    /// Self-test: expected ball area.
    #[arg(long)]
    pub expect: Option<f64>,
    /// Self-test tolerance.
    #[arg(long, default_value_t = 1e-3)]
    pub expect_tol: f64,
    /// Write `r,angle,closed_form,quadrature,residual` rows here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the JSON certificate here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct HyperbolicMetrics {
    epsilon: f64,
    epsilon_nested_min: f64,
    epsilon_tail_value: f64,
    tail_limit: f64,
    closed_form_min: f64,
    closed_form_argmin_r: f64,
    lens_form_non_increasing: bool,
    lens_form_above_tail_limit: bool,
    quadrature_grid_points: usize,
    quadrature_min: f64,
    quadrature_argmin: Option<String>,
    max_residual: f64,
    residual_tol: f64,
    witness_radius: f64,
    witness_section_lower_bound: f64,
    self_test: Option<SelfTest>,
}

#[derive(Serialize)]
struct SelfTest {
    ball_radius: f64,
    formula: f64,
    quadrature: f64,
    expected: f64,
    tolerance: f64,
    pass: bool,
}

pub fn verify_hyperbolic(args: VerifyHyperbolicArgs) -> Result<bool> {
    let t0 = Instant::now();
    let out_path = args.out.clone();
    if !(args.grid_r_step > 0.0) || !(args.closed_r_step > 0.0) || args.angles == 0 {
        return Err("grid steps must be positive and angles >= 1".into());
    }
    let quad = QuadratureSpec {
        abs_tol: args.quad_tol,
        seed: args.seed,
        ..QuadratureSpec::default()
    };
    let margin = epsilon_bound();

    // self-test path, when requested
    let self_test = match (args.ball_radius, args.expect) {
        (Some(radius), expect) => {
            let formula = ball_volume(radius)?;
            let origin = DiskPoint::origin();
            let got = area_integral(
                &move |p: &DiskPoint| origin.dist(p) <= radius,
                &DiskPoint::origin(),
                radius + 0.1,
                &quad,
            )?;
            let expected = expect.unwrap_or(formula);
            Some(SelfTest {
                ball_radius: radius,
                formula,
                quadrature: got,
                expected,
                tolerance: args.expect_tol,
                pass: (got - expected).abs() <= args.expect_tol,
            })
        }
        (None, Some(_)) => return Err("--expect needs --ball-radius".into()),
        (None, None) => None,
    };

    // closed-form grid
    let mut closed_min = f64::INFINITY;
    let mut closed_argmin = 0.0;
    let mut r = 0.0;
    while r <= args.closed_r_max + 1e-12 {
        let v = boundary_closed_form(r)?;
        if v < closed_min {
            closed_min = v;
            closed_argmin = r;
        }
        r += args.closed_r_step;
    }

    // monotone tail
    let tail = lens_tail_limit();
    let mut monotone = true;
    let mut above_tail = true;
    let mut prev = f64::INFINITY;
    let mut r = 0.5;
    while r <= args.mono_r_max + 1e-9 {
        let v = boundary_lens_form(r)?;
        monotone &= v <= prev + 1e-12;
        above_tail &= v >= tail - 1e-9;
        prev = v;
        r += args.closed_r_step;
    }

    // quadrature grid
    let grid_w = polar_grid_window(args.grid_r_max, args.grid_r_step, args.angles)?;
    let w = Window::from_ball(
        grid_w.points().to_vec(),
        DiskPoint::origin(),
        args.grid_r_max + 1.0,
    );
    let c = coarse_ponzi::measure::hyperbolic_scheme(&w)?;
    let witness = Relation::metric_radius(&w, 1.0)?;
    let reference = |p: &DiskPoint| boundary_closed_form(p.geodesic_radius());
    let grid: Vec<usize> = (0..w.len()).collect();
    let residual_tol = 10.0 * args.quad_tol;
    let cert = verify_mu_ps(
        &c,
        &MeasureSpec::HyperbolicArea,
        &w,
        &grid,
        &witness,
        &quad,
        &VerifyOpts {
            epsilon: margin.epsilon,
            rel_tol: 1e-6,
            reference: Some(&reference),
            residual_tol: Some(residual_tol),
        },
    )?;

    if let Some(path) = &args.csv {
        // canonical order: by radius, then angle (the grid is built that way)
        let mut rows = Vec::new();
        for (&i, &v) in grid.iter().zip(&cert.values) {
            let p = &w.points()[i];
            let radius = p.geodesic_radius();
            let angle = p.y.atan2(p.x).rem_euclid(2.0 * std::f64::consts::PI);
            let closed = boundary_closed_form(radius)?;
            rows.push(format!(
                "{:.6},{:.6},{:.12},{:.12},{:.3e}",
                radius,
                if i == 0 { 0.0 } else { angle },
                closed,
                v,
                (v - closed).abs()
            ));
        }
        write_csv(path, "r,angle,closed_form,quadrature,residual", &rows)?;
    }

    let self_test_ok = self_test.as_ref().map(|s| s.pass).unwrap_or(true);
    let pass = cert.pass
        && closed_min >= margin.epsilon
        && monotone
        && above_tail
        && self_test_ok;
    let metrics = HyperbolicMetrics {
        epsilon: margin.epsilon,
        epsilon_nested_min: margin.nested_min,
        epsilon_tail_value: margin.tail_value,
        tail_limit: tail,
        closed_form_min: closed_min,
        closed_form_argmin_r: closed_argmin,
        lens_form_non_increasing: monotone,
        lens_form_above_tail_limit: above_tail,
        quadrature_grid_points: cert.grid_points,
        quadrature_min: cert.min_boundary,
        quadrature_argmin: cert.argmin.clone(),
        max_residual: cert.max_residual.unwrap_or(0.0),
        residual_tol,
        witness_radius: cert.witness_reach,
        witness_section_lower_bound: cert.witness_section_lower_bound,
        self_test,
    };
    emit(
        &Certificate {
            schema: SCHEMA,
            command: "verify-hyperbolic",
            config: args,
            pass,
            metrics,
            timing_ms: t0.elapsed().as_millis(),
        },
        &out_path,
    )?;
    Ok(pass)
}

#[derive(Args, Serialize)]
pub struct VerifyTreeArgs {
    /// Rank of the free group (>= 2).
    #[arg(long)]
    pub free: u32,
    /// Ball radius.
    #[arg(long, default_value_t = 8)]
    pub radius: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct TreeMetrics {
    ball_points: usize,
    interior_points: usize,
    interior_boundary_value: f64,
    identity_boundary_value: f64,
    effectiveness_min: f64,
    witness_radius: f64,
}

pub fn verify_tree(args: VerifyTreeArgs) -> Result<bool> {
    let t0 = Instant::now();
    let out_path = args.out.clone();
    let scheme = free_group_scheme(args.free, args.radius)?;
    let d = boundary(&scheme.chain);
    let identity = GroupPoint::free_word(vec![]);
    let interior = scheme.window.interior(1.0);
    let expect_interior = ratio(2 * args.free as i64 - 2, 1);
    let expect_identity = ratio(2 * args.free as i64, 1);
    let mut exact = true;
    for &i in &interior {
        let expect = if scheme.window.points()[i] == identity {
            &expect_identity
        } else {
            &expect_interior
        };
        exact &= d.value(i) == *expect;
    }
    let cert = check_effective(
        &d,
        1.0,
        &[Relation::diagonal(&scheme.window)],
        &scheme.window,
    )?;
    let pass = exact && cert.pass;
    let metrics = TreeMetrics {
        ball_points: scheme.window.len(),
        interior_points: interior.len(),
        interior_boundary_value: expect_interior.to_f64_lossy(),
        identity_boundary_value: expect_identity.to_f64_lossy(),
        effectiveness_min: cert.min_interior_sum,
        witness_radius: cert.witness_reach,
    };
    emit(
        &Certificate {
            schema: SCHEMA,
            command: "verify-tree",
            config: args,
            pass,
            metrics,
            timing_ms: t0.elapsed().as_millis(),
        },
        &out_path,
    )?;
    Ok(pass)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
pub enum Direction {
    MuToPonzi,
    PonziToMu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
pub enum Space {
    Hyperbolic,
    Z,
}

#[derive(Args, Serialize)]
pub struct ConvertArgs {
    #[arg(long, value_enum)]
    pub direction: Direction,
    #[arg(long, value_enum)]
    pub space: Space,
    /// Net spacing (hyperbolic).
    #[arg(long, default_value_t = 0.4)]
    pub net: f64,
    /// Window radius (hyperbolic).
    #[arg(long, default_value_t = 4.0)]
    pub window: f64,
    /// Lattice spacing for S (Z).
    #[arg(long, default_value_t = 3)]
    pub s_spacing: i64,
    /// Section radius for the constant-on-S entourage (Z).
    #[arg(long, default_value_t = 1.0)]
    pub e_radius: f64,
    /// Z window bounds.
    #[arg(long, default_value_t = -7, allow_negative_numbers = true)]
    pub z_lo: i64,
    #[arg(long, default_value_t = 8, allow_negative_numbers = true)]
    pub z_hi: i64,
    /// Include S points whose sections are clipped by the window boundary
    /// (makes the constant-on-S check fail, on purpose).
    #[arg(long, default_value_t = false)]
    pub include_boundary_s: bool,
    /// Tab-separated chain fixture `s1<TAB>s2<TAB>value` (Z space).
    #[arg(long)]
    pub theta_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0x7E11)]
    pub seed: u64,
    /// Monte Carlo samples per tile cache and per lattice pair.
    #[arg(long, default_value_t = 4096)]
    pub cache_samples: u32,
    #[arg(long, default_value_t = 4096)]
    pub pair_samples: u32,
    /// Write the tiling (net spacing + ordered lattice) here.
    #[arg(long)]
    pub tiling_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct MuToPonziMetrics {
    lattice_points: usize,
    cover_samples: u64,
    cover_hits: u64,
    projection_constant: f64,
    epsilon: f64,
    certificate_min: f64,
    witness_radius: f64,
    interior_points: usize,
}

#[derive(Serialize)]
struct PonziToMuMetrics {
    s_points: usize,
    constant: f64,
    identity_residual: f64,
    lifted_entries: usize,
}

pub fn convert(args: ConvertArgs) -> Result<bool> {
    let t0 = Instant::now();
    let out_path = args.out.clone();
    match (args.direction, args.space) {
        (Direction::MuToPonzi, Space::Hyperbolic) => {
            let w = net_window(args.window, args.net, args.seed, 150_000)?;
            let base = Relation::metric_radius(&w, args.net)?;
            let lattice = order_lattice(&w, (0..w.len()).collect());
            let tiling = build_tiling(&w, lattice, &base)?;
            let cover = verify_cover_mc(&tiling, &w, args.net, 30_000, args.seed ^ 0x5EED)?;
            let eps = epsilon_bound().epsilon;
            let scaled = MuChain1 {
                density: Density1::Pointwise(std::sync::Arc::new(
                    move |a: &DiskPoint, b: &DiskPoint| hyperbolic_scheme_density(a, b) / eps,
                )),
                sup_bound: 1.0 / eps,
                support: Relation::metric_radius(&w, 1.0)?,
                label: "scaled disk scheme".into(),
            };
            let params = TilePushParams {
                cache_samples: args.cache_samples,
                pair_samples: args.pair_samples,
                seed: args.seed,
                ..TilePushParams::default()
            };
            let outp = mu_ps_to_ponzi(&scaled, &tiling, &w, &params)?;
            if let Some(path) = &args.tiling_out {
                std::fs::write(path, coarse_ponzi::io::write_tiling_disk(&tiling, &w)?)?;
            }
            let pass = outp.certificate.pass && cover.covered == cover.samples;
            let metrics = MuToPonziMetrics {
                lattice_points: tiling.lattice().len(),
                cover_samples: cover.samples,
                cover_hits: cover.covered,
                projection_constant: outp.projection_constant.c,
                epsilon: eps,
                certificate_min: outp.certificate.min_interior_sum,
                witness_radius: outp.certificate.witness_reach,
                interior_points: outp.certificate.interior_points,
            };
            emit(
                &Certificate {
                    schema: SCHEMA,
                    command: "convert",
                    config: args,
                    pass,
                    metrics,
                    timing_ms: t0.elapsed().as_millis(),
                },
                &out_path,
            )?;
            Ok(pass)
        }
        (Direction::PonziToMu, Space::Z) => {
            let w = z_interval(args.z_lo, args.z_hi);
            let margin = if args.include_boundary_s {
                0.0
            } else {
                args.e_radius
            };
            let s: BTreeSet<usize> = (0..w.len())
                .filter(|&i| {
                    let GroupPoint::Lattice(ref v) = w.points()[i] else {
                        return false;
                    };
                    v[0].rem_euclid(args.s_spacing) == 0
                        && w.depth(i).unwrap_or(0.0) + 1e-9 >= margin
                })
                .collect();
            if s.is_empty() {
                return Err("S is empty on this window".into());
            }
            let weights: BTreeMap<usize, num_rational::BigRational> =
                (0..w.len()).map(|i| (i, ratio(1, 1))).collect();
            let e = Relation::metric_radius(&w, args.e_radius)?;
            let constant = constant_on_s_check(&e, &s, &weights, &w, 1e-6)?;
            let theta = match &args.theta_file {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    let entourage =
                        Relation::metric_radius(&w, (args.z_hi - args.z_lo) as f64)?;
                    coarse_ponzi::io::read_chain1(&text, &w, &entourage)?
                }
                None => {
                    let a = w
                        .index_of(&GroupPoint::lattice(vec![0]))
                        .ok_or("window must contain 0")?;
                    let b = w
                        .index_of(&GroupPoint::lattice(vec![args.s_spacing]))
                        .ok_or("window must contain the first S step")?;
                    let entourage =
                        Relation::metric_radius(&w, args.s_spacing as f64)?;
                    SparseChain1::new(
                        &w,
                        [a, b].into_iter().collect(),
                        [((a, b), ratio(1, 1))].into_iter().collect(),
                        &entourage,
                    )?
                }
            };
            let lift = lift_chain(&theta, &e, &s, &constant, &weights, &w)?;
            let pass = lift.identity_residual == 0.0;
            let metrics = PonziToMuMetrics {
                s_points: s.len(),
                constant: constant.to_f64_lossy(),
                identity_residual: lift.identity_residual,
                lifted_entries: lift.chain.entries().len(),
            };
            emit(
                &Certificate {
                    schema: SCHEMA,
                    command: "convert",
                    config: args,
                    pass,
                    metrics,
                    timing_ms: t0.elapsed().as_millis(),
                },
                &out_path,
            )?;
            Ok(pass)
        }
        _ => Err("supported pipelines: mu-to-ponzi on hyperbolic, ponzi-to-mu on Z".into()),
    }
}

#[derive(Args, Serialize)]
pub struct FluxArgs {
    /// Lattice dimension (1 or 2).
    #[arg(long, default_value_t = 1)]
    pub dim: u32,
    /// Support reach of the chain.
    #[arg(long, default_value_t = 1.0)]
    pub reach: f64,
    /// Largest nested window extent.
    #[arg(long, default_value_t = 100)]
    pub window_max: i64,
    /// Number of random entries (default: the forward unit chain on dim 1).
    #[arg(long)]
    pub random: Option<usize>,
    /// Tab-separated chain fixture.
    #[arg(long)]
    pub chain_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0xF1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct FluxMetrics {
    report: FluxReport,
    refutations: usize,
}

pub fn flux(args: FluxArgs) -> Result<bool> {
    use rand::{Rng, SeedableRng};
    let t0 = Instant::now();
    let out_path = args.out.clone();
    if args.window_max < 4 {
        return Err("--window-max must be at least 4".into());
    }
    let pad = args.reach.ceil() as i64 + 1;
    let (w, subs): (Window<GroupPoint>, Vec<BTreeSet<usize>>) = match args.dim {
        1 => {
            let w = z_interval(-pad, args.window_max + pad);
            let subs = (1..=args.window_max / 10)
                .map(|k| {
                    (0..w.len())
                        .filter(|&i| {
                            let GroupPoint::Lattice(ref v) = w.points()[i] else {
                                return false;
                            };
                            v[0] >= 0 && v[0] <= 10 * k
                        })
                        .collect()
                })
                .collect();
            (w, subs)
        }
        2 => {
            let half = (args.window_max / 10).max(2);
            let w = z_box(&[(-half - pad, half + pad), (-half - pad, half + pad)]);
            let subs = (1..=half)
                .map(|k| {
                    (0..w.len())
                        .filter(|&i| {
                            let GroupPoint::Lattice(ref v) = w.points()[i] else {
                                return false;
                            };
                            v[0].abs() <= k && v[1].abs() <= k
                        })
                        .collect()
                })
                .collect();
            (w, subs)
        }
        _ => return Err("--dim must be 1 or 2".into()),
    };

    let entourage = Relation::metric_radius(&w, args.reach)?;
    let theta = if let Some(path) = &args.chain_file {
        let text = std::fs::read_to_string(path)?;
        coarse_ponzi::io::read_chain1(&text, &w, &entourage)?
    } else if let Some(n) = args.random {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
        let mut entries = BTreeMap::new();
        let mut attempts = 0;
        while entries.len() < n && attempts < 50 * n {
            attempts += 1;
            let i = rng.random_range(0..w.len());
            let j = rng.random_range(0..w.len());
            if w.points()[i].dist(&w.points()[j]) <= args.reach
                && !entries.contains_key(&(j, i))
            {
                entries.insert((i, j), ratio(rng.random_range(0..=6), 6));
            }
        }
        SparseChain1::new(&w, (0..w.len()).collect(), entries, &entourage)?
    } else {
        if args.dim != 1 {
            return Err("the default forward chain is 1-dimensional; pass --random".into());
        }
        let entries: BTreeMap<(usize, usize), num_rational::BigRational> = (0..w.len() - 1)
            .map(|i| ((i, i + 1), ratio(1, 1)))
            .collect();
        SparseChain1::new(&w, (0..w.len()).collect(), entries, &entourage)?
    };

    let report = flux_obstruction(&theta, &w, &subs)?;
    let refutations = report
        .windows
        .iter()
        .filter(|r| r.refutation.is_some())
        .count();
    let pass = report.all_bounds_hold;
    let metrics = FluxMetrics {
        report,
        refutations,
    };
    emit(
        &Certificate {
            schema: SCHEMA,
            command: "flux",
            config: args,
            pass,
            metrics,
            timing_ms: t0.elapsed().as_millis(),
        },
        &out_path,
    )?;
    Ok(pass)
}
