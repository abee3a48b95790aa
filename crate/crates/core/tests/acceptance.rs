//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N (...): PASS` line (visible with `--nocapture`). Tolerances
//! are pinned here, not configurable.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coarse_ponzi::coarse::Relation;
use coarse_ponzi::discrete::{
    boundary, cayley_ball, check_effective, flux_obstruction, free_group_scheme, ratio, z_box,
    z_interval, Coeff, GroupKind, GroupPoint, SparseChain0, SparseChain1,
};
use coarse_ponzi::hyperbolic::{
    area_integral, ball_volume, net_window, polar_grid_window, DiskPoint, QuadratureSpec,
};
use coarse_ponzi::measure::{
    boundary_closed_form, boundary_lens_form, boundary_mu, boundary_nested_form, epsilon_bound,
    hyperbolic_scheme, hyperbolic_scheme_density, lens_tail_limit, verify_mu_ps, Density1,
    MeasureSpec, MuChain1, VerifyOpts,
};
use coarse_ponzi::transport::{
    build_tiling, check_boundary_commutes, check_measure_effectively_proper, lift_chain,
    mu_ps_to_ponzi, order_lattice, pairing0, pairing1, pushforward_chain0, pushforward_chain1,
    verify_cover_mc, TilePushParams,
};
use coarse_ponzi::window::{SpacePoint, Window};

fn lat(w: &Window<GroupPoint>, n: i64) -> usize {
    w.index_of(&GroupPoint::lattice(vec![n])).unwrap()
}

#[test]
fn criterion_01_ball_volume_quadrature() {
    let t0 = Instant::now();
    let expect = ball_volume(1.0).unwrap(); // 2 pi (cosh 1 - 1)
    let spec = QuadratureSpec::with_tol(2e-8);
    let mut worst: f64 = 0.0;
    for &(rho, theta) in &[(0.0, 0.0), (0.3, 0.9), (0.8, 2.1), (1.5, 4.4)] {
        let z = DiskPoint::from_polar(rho, theta);
        let got = area_integral(
            &|p: &DiskPoint| z.dist(p) <= 1.0,
            &DiskPoint::origin(),
            rho + 1.2,
            &spec,
        )
        .unwrap();
        worst = worst.max((got - expect).abs());
    }
    let dt = t0.elapsed();
    let pass = worst < 1e-6 && dt.as_secs_f64() < 5.0;
    println!(
        "criterion 1 (ball volume quadrature): {} — worst |error| {:.2e} over 4 centers, {:.2}s",
        if pass { "PASS" } else { "FAIL" },
        worst,
        dt.as_secs_f64()
    );
    assert!(pass, "worst error {worst}, elapsed {dt:?}");
}

#[test]
fn criterion_02_mu_ps_inequality() {
    let t0 = Instant::now();
    let margin = epsilon_bound();
    let eps = margin.epsilon;

    // closed form on r <= 10, step 0.01
    let mut closed_min = f64::INFINITY;
    let mut r = 0.0;
    while r <= 10.0 + 1e-12 {
        closed_min = closed_min.min(boundary_closed_form(r).unwrap());
        r += 0.01;
    }

    // lens form non-increasing on [0.5, 20], step 0.01, and above the tail
    let tail = lens_tail_limit();
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let mut above_tail = true;
    let mut r = 0.5;
    while r <= 20.0 + 1e-9 {
        let v = boundary_lens_form(r).unwrap();
        monotone &= v <= prev + 1e-12;
        above_tail &= v >= tail - 1e-9;
        prev = v;
        r += 0.01;
    }

    // quadrature path on the 2-D grid r <= 4 step 0.25, 16 angles
    let grid_w = polar_grid_window(4.0, 0.25, 16).unwrap();
    let w = Window::from_ball(grid_w.points().to_vec(), DiskPoint::origin(), 5.0);
    let c = hyperbolic_scheme(&w).unwrap();
    let quad = QuadratureSpec::with_tol(1e-5);
    let witness = Relation::metric_radius(&w, 1.0).unwrap();
    let reference = |p: &DiskPoint| boundary_closed_form(p.geodesic_radius());
    let grid: Vec<usize> = (0..w.len()).collect();
    let cert = verify_mu_ps(
        &c,
        &MeasureSpec::HyperbolicArea,
        &w,
        &grid,
        &witness,
        &quad,
        &VerifyOpts {
            epsilon: eps,
            rel_tol: 1e-6,
            reference: Some(&reference),
            residual_tol: Some(1e-4),
        },
    )
    .unwrap();

    let dt = t0.elapsed();
    let pass = closed_min >= eps
        && monotone
        && above_tail
        && cert.pass
        && cert.min_boundary >= eps
        && cert.max_residual.unwrap() <= 1e-4
        && dt.as_secs_f64() < 60.0;
    println!(
        "criterion 2 (mu-PS inequality): {} — eps {:.6}, closed-form min {:.6}, \
         quadrature min {:.6}, max residual {:.2e}, lens form non-increasing: {}, {:.2}s",
        if pass { "PASS" } else { "FAIL" },
        eps,
        closed_min,
        cert.min_boundary,
        cert.max_residual.unwrap(),
        monotone,
        dt.as_secs_f64()
    );
    assert!(pass, "{cert:?}, closed_min {closed_min}, monotone {monotone}, elapsed {dt:?}");
}

#[test]
fn criterion_03_case_continuity() {
    let nested = boundary_nested_form(0.5);
    let lens = boundary_lens_form(0.5).unwrap();
    let at_split = (nested - lens).abs();
    // property flavor: approach the split from above at random offsets
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = at_split;
    for _ in 0..50 {
        let eta = 10f64.powf(rng.random_range(-13.0..-11.0));
        let diff = (boundary_lens_form(0.5 + eta).unwrap() - nested).abs();
        worst = worst.max(diff);
    }
    let pass = at_split <= 1e-9 && worst <= 1e-9;
    println!(
        "criterion 3 (case continuity at r = 1/2): {} — split difference {:.2e}, worst near-split {:.2e}",
        if pass { "PASS" } else { "FAIL" },
        at_split,
        worst
    );
    assert!(pass, "split diff {at_split}, worst {worst}");
}

#[test]
fn criterion_04_free_group_witness() {
    let t0 = Instant::now();
    let scheme = free_group_scheme(2, 8).unwrap();
    let d = boundary(&scheme.chain);
    let identity = GroupPoint::free_word(vec![]);
    let two = ratio(2, 1);
    let four = ratio(4, 1);
    let mut all_exact = true;
    for &i in &scheme.window.interior(1.0) {
        let expect = if scheme.window.points()[i] == identity {
            &four
        } else {
            &two
        };
        all_exact &= d.value(i) == *expect;
    }
    let cert = check_effective(
        &d,
        1.0,
        &[Relation::diagonal(&scheme.window)],
        &scheme.window,
    )
    .unwrap();
    let dt = t0.elapsed();
    let pass = all_exact && cert.pass && cert.witness_reach == 0.0 && dt.as_secs_f64() < 5.0;
    println!(
        "criterion 4 (free-group witness): {} — boundary 2 on interior, 4 at identity: {}, \
         effectiveness with radius-0 witness: min {}, {:.2}s",
        if pass { "PASS" } else { "FAIL" },
        all_exact,
        cert.min_interior_sum,
        dt.as_secs_f64()
    );
    assert!(pass, "exact {all_exact}, cert {cert:?}, elapsed {dt:?}");
}

fn random_chain(
    w: &Window<GroupPoint>,
    rng: &mut ChaCha8Rng,
    max_entries: usize,
    reach: f64,
) -> SparseChain1<BigRational> {
    let e = Relation::metric_radius(w, reach).unwrap();
    let mut entries = BTreeMap::new();
    for _ in 0..rng.random_range(1..=max_entries) {
        let i = rng.random_range(0..w.len());
        let j = rng.random_range(0..w.len());
        if w.points()[i].dist(&w.points()[j]) <= reach {
            entries.insert(
                (i, j),
                ratio(rng.random_range(-8..=8), rng.random_range(1..=6)),
            );
        }
    }
    SparseChain1::new(w, (0..w.len()).collect(), entries, &e).unwrap()
}

#[test]
fn criterion_05_conservation_and_linearity() {
    let w = z_interval(-12, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let zero = ratio(0, 1);
    let mut all_conserved = true;
    let mut all_linear = true;
    for _ in 0..1000 {
        let ta = random_chain(&w, &mut rng, 18, 24.0);
        let tb = random_chain(&w, &mut rng, 18, 24.0);
        all_conserved &= boundary(&ta).total() == zero;
        let a = ratio(rng.random_range(-5..=5), rng.random_range(1..=4));
        let b = ratio(rng.random_range(-5..=5), rng.random_range(1..=4));
        let combo = ta.linear_combination(&a, &tb, &b).unwrap();
        let (dc, da, db) = (boundary(&combo), boundary(&ta), boundary(&tb));
        for i in 0..w.len() {
            all_linear &= dc.value(i) == a.clone() * da.value(i) + b.clone() * db.value(i);
        }
    }
    let pass = all_conserved && all_linear;
    println!(
        "criterion 5 (conservation and linearity): {} — 1000 random rational chains, \
         conservation exact: {}, linearity exact: {}",
        if pass { "PASS" } else { "FAIL" },
        all_conserved,
        all_linear
    );
    assert!(pass);
}

#[test]
fn criterion_06_flux_obstruction() {
    let full = z_interval(-15, 15);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let e1 = Relation::metric_radius(&full, 1.0).unwrap();
    let mut all_bounded = true;
    for _ in 0..1000 {
        // one-directional chain at reach 1 with entries in [0, 1]
        let mut entries: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
        for _ in 0..rng.random_range(1..=20) {
            let i = rng.random_range(0..full.len() - 1);
            let forward = rng.random_bool(0.5);
            let (a, b) = if forward { (i, i + 1) } else { (i + 1, i) };
            if entries.contains_key(&(b, a)) {
                continue;
            }
            entries.insert((a, b), ratio(rng.random_range(0..=6), 6));
        }
        let theta =
            SparseChain1::new(&full, (0..full.len()).collect(), entries, &e1).unwrap();
        // every interval window inside the full one
        for lo in 1..full.len() - 1 {
            for hi in lo..full.len() - 1 {
                let sub: BTreeSet<usize> = (lo..=hi).collect();
                let report = flux_obstruction(&theta, &full, &[sub]).unwrap();
                let win = &report.windows[0];
                all_bounded &= win.boundary_sum_f64.abs() <= 2.0 + 1e-12 && win.bound_holds;
            }
        }
    }

    // refutation on a long window
    let big = z_interval(-2, 102);
    let entries: BTreeMap<(usize, usize), BigRational> = (0..big.len() - 1)
        .map(|i| ((i, i + 1), ratio(1, 1)))
        .collect();
    let e1 = Relation::metric_radius(&big, 1.0).unwrap();
    let theta = SparseChain1::new(&big, (0..big.len()).collect(), entries, &e1).unwrap();
    let sub: BTreeSet<usize> = (2..=102).collect(); // the points 0..=100
    let report = flux_obstruction(&theta, &big, &[sub]).unwrap();
    let refuted = report.windows[0].refutation.is_some();
    let interior = report.windows[0].interior_points;
    let bound = report.windows[0].bound;

    let pass = all_bounded && refuted && interior as f64 > bound;
    println!(
        "criterion 6 (flux obstruction): {} — |window sums| <= 2 over 1000 chains x all \
         intervals: {}, refutation emitted on [0,100] ({} interior points vs bound {}): {}",
        if pass { "PASS" } else { "FAIL" },
        all_bounded,
        interior,
        bound,
        refuted
    );
    assert!(pass);
}

#[test]
fn criterion_07_pushforward_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let zero = ratio(0, 1);
    let mut all_pass = true;
    for _ in 0..1000 {
        let nx = rng.random_range(4..=9);
        let ny = rng.random_range(2..=5);
        let wx = z_interval(0, nx as i64 - 1);
        let wy = z_interval(0, ny as i64 - 1);
        let phi: Vec<usize> = (0..nx).map(|_| rng.random_range(0..ny)).collect();
        let mu_x: BTreeMap<usize, BigRational> = (0..nx)
            .map(|i| (i, ratio(rng.random_range(1..=5), rng.random_range(1..=3))))
            .collect();
        let mu_y: BTreeMap<usize, BigRational> = (0..ny)
            .map(|i| (i, ratio(rng.random_range(1..=5), rng.random_range(1..=3))))
            .collect();

        // 0-chain pairing
        let f = SparseChain0::new(
            &wx,
            (0..nx).collect(),
            (0..nx)
                .map(|i| (i, ratio(rng.random_range(-6..=6), rng.random_range(1..=4))))
                .collect(),
        )
        .unwrap();
        let g: BTreeMap<usize, BigRational> = (0..ny)
            .map(|i| (i, ratio(rng.random_range(-6..=6), rng.random_range(1..=4))))
            .collect();
        let pushed = pushforward_chain0(&phi, &f, &mu_x, &wx, &mu_y, &wy).unwrap();
        let g_phi: BTreeMap<usize, BigRational> =
            (0..nx).map(|i| (i, g[&phi[i]].clone())).collect();
        all_pass &= pairing0(&pushed, &g, &mu_y) == pairing0(&f, &g_phi, &mu_x);

        // 1-chain pairing and commutation
        let c = random_chain(&wx, &mut rng, 10, nx as f64);
        let pushed1 = pushforward_chain1(&phi, &c, &mu_x, &wx, &mu_y, &wy).unwrap();
        let g1: BTreeMap<(usize, usize), BigRational> = (0..ny)
            .flat_map(|i| (0..ny).map(move |j| (i, j)))
            .map(|k| (k, ratio(rng.random_range(-4..=4), rng.random_range(1..=3))))
            .collect();
        let g1_phi: BTreeMap<(usize, usize), BigRational> = (0..nx)
            .flat_map(|i| (0..nx).map(move |j| (i, j)))
            .map(|(i, j)| ((i, j), g1[&(phi[i], phi[j])].clone()))
            .collect();
        all_pass &= pairing1(&pushed1, &g1, &mu_y) == pairing1(&c, &g1_phi, &mu_x);
        all_pass &= check_boundary_commutes(&phi, &c, &mu_x, &wx, &mu_y, &wy).unwrap() == 0.0;

        // push-forward norm bounds with the singleton-derived constant
        let singletons: Vec<BTreeSet<usize>> =
            (0..ny).map(|j| [j].into_iter().collect()).collect();
        let c_const =
            check_measure_effectively_proper(&phi, &mu_x, &wx, &mu_y, &wy, &singletons).unwrap();
        let pushed_mu: Vec<BigRational> = (0..ny)
            .map(|y| {
                (0..nx)
                    .filter(|&i| phi[i] == y)
                    .map(|i| mu_x[&i].clone())
                    .fold(zero.clone(), |a, b| a + b)
            })
            .collect();
        let fy: Vec<BigRational> = (0..ny)
            .map(|_| ratio(rng.random_range(0..=6), rng.random_range(1..=4)))
            .collect();
        let lhs: f64 = (0..ny)
            .map(|y| fy[y].to_f64_lossy() * pushed_mu[y].to_f64_lossy())
            .sum();
        let rhs: f64 = (0..ny)
            .map(|y| fy[y].to_f64_lossy() * mu_y[&y].to_f64_lossy())
            .sum();
        all_pass &= lhs <= c_const.c * rhs + 1e-9;
        let lhs2: f64 = (0..ny)
            .flat_map(|i| (0..ny).map(move |j| (i, j)))
            .map(|(i, j)| {
                fy[i].to_f64_lossy().abs()
                    * fy[j].to_f64_lossy().abs()
                    * pushed_mu[i].to_f64_lossy()
                    * pushed_mu[j].to_f64_lossy()
            })
            .sum();
        let rhs2: f64 = (0..ny)
            .flat_map(|i| (0..ny).map(move |j| (i, j)))
            .map(|(i, j)| {
                fy[i].to_f64_lossy().abs()
                    * fy[j].to_f64_lossy().abs()
                    * mu_y[&i].to_f64_lossy()
                    * mu_y[&j].to_f64_lossy()
            })
            .sum();
        all_pass &= lhs2 <= c_const.c * c_const.c * rhs2 + 1e-9;
    }
    println!(
        "criterion 7 (push-forward suite): {} — pairing identities, C/C^2 bounds and \
         boundary commutation over 1000 rational instances",
        if all_pass { "PASS" } else { "FAIL" },
    );
    assert!(all_pass);
}

#[test]
fn criterion_08_conversion_identity() {
    // exact path: S = 3Z inside a Z window, E = metric radius 1, C = 3
    let w = z_interval(-7, 8);
    let weights: BTreeMap<usize, BigRational> =
        (0..w.len()).map(|i| (i, ratio(1, 1))).collect();
    let e = Relation::metric_radius(&w, 1.0).unwrap();
    let s: BTreeSet<usize> = [-6i64, -3, 0, 3, 6].iter().map(|&n| lat(&w, n)).collect();
    let c_const = ratio(3, 1);
    let e_theta = Relation::metric_radius(&w, 3.0).unwrap();
    let theta = SparseChain1::new(
        &w,
        s.clone(),
        [((lat(&w, 0), lat(&w, 3)), ratio(1, 1))].into_iter().collect(),
        &e_theta,
    )
    .unwrap();
    let lift = lift_chain(&theta, &e, &s, &c_const, &weights, &w).unwrap();
    let exact_zero = lift.identity_residual == 0.0;

    // quadrature path: net chain lifted through radius-0.4 ball sections
    let net = net_window(3.0, 0.5, 21, 60_000).unwrap();
    let grid = polar_grid_window(1.25, 0.25, 10).unwrap();
    let mut points = net.points().to_vec();
    let n_net = points.len();
    points.extend_from_slice(grid.points());
    let w2 = Window::from_ball(points, DiskPoint::origin(), 3.0);
    let inner_net: Vec<usize> = (0..n_net)
        .filter(|&i| w2.depth(i).unwrap() >= 1.6)
        .collect();
    assert!(inner_net.len() >= 4, "net too sparse: {}", inner_net.len());
    let e_theta = Relation::metric_radius(&w2, 2.0).unwrap();
    let entries: BTreeMap<(usize, usize), BigRational> = [
        ((inner_net[0], inner_net[1]), ratio(1, 1)),
        ((inner_net[2], inner_net[3]), ratio(-1, 2)),
        ((inner_net[1], inner_net[2]), ratio(1, 3)),
    ]
    .into_iter()
    .filter(|&((i, j), _)| w2.points()[i].dist(&w2.points()[j]) <= 2.0)
    .collect();
    let s2: BTreeSet<usize> = entries.keys().flat_map(|&(i, j)| [i, j]).collect();
    let theta2 = SparseChain1::new(&w2, s2, entries, &e_theta).unwrap();
    let samples: Vec<usize> = (n_net..w2.len()).take(50).collect();
    assert_eq!(samples.len(), 50);
    let quad = QuadratureSpec::with_tol(2e-4);
    let lift2 = coarse_ponzi::transport::ponzi_to_mu_ps_hyperbolic(
        &theta2, 0.4, &w2, &samples, &quad,
    )
    .unwrap();
    let residual_ok = lift2.max_residual <= 10.0 * quad.abs_tol;

    let pass = exact_zero && residual_ok;
    println!(
        "criterion 8 (conversion identity): {} — 3Z fixture residual {:.1e} (exact), \
         hyperbolic lift max residual {:.2e} <= {:.0e} at 50 points",
        if pass { "PASS" } else { "FAIL" },
        lift.identity_residual,
        lift2.max_residual,
        10.0 * quad.abs_tol
    );
    assert!(pass, "exact residual {}, lift residual {}", lift.identity_residual, lift2.max_residual);
}

#[test]
fn criterion_09_mu_ps_to_ponzi_pipeline() {
    let t0 = Instant::now();
    let delta = 0.4;
    let radius = 4.0;
    let w = net_window(radius, delta, 41, 150_000).unwrap();

    let base = Relation::metric_radius(&w, delta).unwrap();
    let lattice = order_lattice(&w, (0..w.len()).collect());
    let tiling = build_tiling(&w, lattice, &base).unwrap();
    let cover = verify_cover_mc(&tiling, &w, delta, 30_000, 17).unwrap();

    // push the scaled scheme c / epsilon, whose boundary is >= 1 pointwise
    let eps = epsilon_bound().epsilon;
    let scaled = MuChain1 {
        density: Density1::Pointwise(std::sync::Arc::new(move |a: &DiskPoint, b: &DiskPoint| {
            hyperbolic_scheme_density(a, b) / eps
        })),
        sup_bound: 1.0 / eps,
        support: Relation::metric_radius(&w, 1.0).unwrap(),
        label: "scaled disk scheme".into(),
    };
    let out = mu_ps_to_ponzi(&scaled, &tiling, &w, &TilePushParams::default()).unwrap();
    let dt = t0.elapsed();
    let covered = cover.covered == cover.samples;
    let pass = covered && out.certificate.pass && out.certificate.min_interior_sum >= 1.0;
    println!(
        "criterion 9 (mu-PS to discrete pipeline): {} — {} lattice points, cover {}/{}, \
         certificate min {:.3} at witness radius {:.1} over {} interior points, {:.1}s",
        if pass { "PASS" } else { "FAIL" },
        tiling.lattice().len(),
        cover.covered,
        cover.samples,
        out.certificate.min_interior_sum,
        out.certificate.witness_reach,
        out.certificate.interior_points,
        dt.as_secs_f64()
    );
    assert!(pass, "cover {covered}, certificate {:?}", out.certificate);
}

#[test]
fn criterion_10_tiling_exactness() {
    // the Z fixture
    let w = z_interval(-2, 8);
    let e0 = Relation::metric_radius(&w, 2.0).unwrap();
    let lattice = vec![lat(&w, 0), lat(&w, 3), lat(&w, 6)];
    let tiling = build_tiling(&w, lattice, &e0).unwrap();
    let expect: Vec<Vec<i64>> = vec![vec![-2, -1, 0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]];
    let mut tiles_exact = true;
    for (pos, tile) in tiling.tiles().iter().enumerate() {
        let got: Vec<i64> = tile
            .iter()
            .map(|&i| match w.points()[i] {
                GroupPoint::Lattice(ref v) => v[0],
                _ => unreachable!(),
            })
            .collect();
        tiles_exact &= got == expect[pos];
    }

    // disjointness and coverage, exactly, on all discrete fixtures
    let mut all_disjoint_cover = true;
    {
        let fixtures: Vec<(Window<GroupPoint>, Vec<usize>, f64)> = vec![
            (z_interval(-2, 8), vec![2, 5, 8], 2.0), // indices of 0, 3, 6
            (z_interval(0, 4), (0..5).collect(), 0.0),
        ];
        for (fw, flattice, radius) in fixtures {
            let fbase = Relation::metric_radius(&fw, radius).unwrap();
            let ft = build_tiling(&fw, flattice, &fbase).unwrap();
            let mut seen = BTreeSet::new();
            for tile in ft.tiles() {
                for &i in tile {
                    all_disjoint_cover &= seen.insert(i);
                }
            }
            all_disjoint_cover &= seen.len() == fw.len();
        }
        // a Z^2 fixture: even lattice with l^1 radius 2
        let fw = z_box(&[(-2, 3), (-2, 3)]);
        let flattice: Vec<usize> = (0..fw.len())
            .filter(|&i| match fw.points()[i] {
                GroupPoint::Lattice(ref v) => v[0] % 2 == 0 && v[1] % 2 == 0,
                _ => false,
            })
            .collect();
        let fbase = Relation::metric_radius(&fw, 2.0).unwrap();
        let ft = build_tiling(&fw, flattice, &fbase).unwrap();
        let mut seen = BTreeSet::new();
        for tile in ft.tiles() {
            for &i in tile {
                all_disjoint_cover &= seen.insert(i);
            }
        }
        all_disjoint_cover &= seen.len() == fw.len();
    }

    let pass = tiles_exact && all_disjoint_cover;
    println!(
        "criterion 10 (tiling exactness): {} — Z tiles [-2,2],[3,5],[6,8]: {}, \
         disjoint exact cover on all discrete fixtures: {}",
        if pass { "PASS" } else { "FAIL" },
        tiles_exact,
        all_disjoint_cover
    );
    assert!(pass);
}
