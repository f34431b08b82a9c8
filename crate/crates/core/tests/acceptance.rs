//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//! Runs without the libtest harness so the lines print in order.

mod common;

use std::time::{Duration, Instant};

use common::{coordinates, fixed_polynomials, gens, same_span};
use gencov::ce::{build_ce_complex, build_tangent_complex, invariants_h0, ActionLieData, CeOptions};
use gencov::cli::{run_suite, RunConfig};
use gencov::covariance::{
    check_infinitesimal_covariance, check_interacting_equivariance, check_laplacian_deformation, check_scalar_equivariance,
    check_variational_identity, infinitesimal_covariance_terms, laplacian_deformation, variational_identity, PotentialSpec, Scenario,
};
use gencov::exact::RationalMatrix;
use gencov::graded::{q, q_frac, GradedShape, TruncatedGradedElement, Q};
use gencov::jet::{self, check_jet_square, d2, int_matrix, solve_dk, EpsilonJet, GradedSpace};
use gencov::mesh::{lie_derivative_metric, Diffeomorphism, MeshVectorField, MetricField};
use gencov::report::{CheckReport, TolerancePolicy};
use gencov::yang_mills::{check_ym_equivariance, ym_square_residuals, LieAlgebra, YmScenario};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, format!("{what} took {:.1} s, limit {limit_s} s", elapsed.as_secs_f64()))
}

fn order_of(r: &CheckReport) -> f64 {
    r.order.unwrap_or(f64::NAN)
}

fn finest(r: &CheckReport) -> f64 {
    r.finest_relative()
}

fn c1_ce_exactness() -> Outcome {
    let start = Instant::now();
    let mut built = 0;
    for action in [ActionLieData::so2_plane(), ActionLieData::so3_space()] {
        for t in 1..=6 {
            let opts = CeOptions { truncation: t, max_ce_degree: action.dim(), ..CeOptions::default() };
            let cx = build_ce_complex(&action, &opts).map_err(e2s)?;
            ensure(cx.composites_vanish().map_err(e2s)?, format!("d^2 != 0 for dim {} at T = {t}", action.dim()))?;
            built += 1;
        }
    }
    within(start.elapsed(), 30.0, "CE complexes")?;
    Ok(format!("{built} complexes exact, so(2) and so(3), T = 1..6"))
}

fn c2_so2_invariants() -> Outcome {
    let shape = GradedShape::polynomial(2, 4);
    let x = gens(shape);
    let r2 = x[0].multiply(&x[0]).and_then(|a| a.add(&x[1].multiply(&x[1])?)).map_err(e2s)?;
    let r4 = r2.multiply(&r2).map_err(e2s)?;
    let expected = vec![TruncatedGradedElement::one(shape), r2, r4];
    let h0 = invariants_h0(&ActionLieData::so2_plane(), 4).map_err(e2s)?;
    ensure(h0.len() == 3, format!("dim H^0 = {}", h0.len()))?;
    let got = coordinates(2, 4, &h0);
    ensure(same_span(&got, &coordinates(2, 4, &expected)), "H^0 differs from span{1, r^2, r^4}")?;
    let rot: Vec<Vec<Q>> = vec![vec![q_frac(3, 5), q_frac(-4, 5)], vec![q_frac(4, 5), q_frac(3, 5)]];
    ensure(same_span(&got, &fixed_polynomials(2, 4, &[rot])), "H^0 differs from rotation-fixed polynomials")?;
    Ok("dim 3, span{1, r^2, r^4}, matches rotation oracle".into())
}

fn c3_tangent_complexes() -> Outcome {
    let cases: [(&str, ActionLieData, Vec<Q>, (usize, usize)); 3] = [
        ("so(2) at 0", ActionLieData::so2_plane(), vec![q(0), q(0)], (1, 2)),
        ("so(2) at (1,0)", ActionLieData::so2_plane(), vec![q(1), q(0)], (0, 1)),
        ("so(3) at 0", ActionLieData::so3_space(), vec![q(0), q(0), q(0)], (3, 3)),
    ];
    let mut parts = Vec::new();
    for (label, action, p, want) in cases {
        let got = build_tangent_complex(&action, &p).map_err(e2s)?.cohomology();
        ensure(got == want, format!("{label}: (H^-1, H^0) = {got:?}, expected {want:?}"))?;
        parts.push(format!("{label} {got:?}"));
    }
    Ok(parts.join(", "))
}

fn equivariance(interacting: bool) -> Outcome {
    let start = Instant::now();
    let policy = TolerancePolicy::default();
    let mut worst: (f64, f64) = (2.0, 0.0);
    for seed in 1..=3 {
        let r = if interacting {
            let s = Scenario::random(seed, 2).with_potential(PotentialSpec::phi4(6.0));
            check_interacting_equivariance(&s, &[32, 64, 128], &policy)
        } else {
            check_scalar_equivariance(&Scenario::random(seed, 2), &[32, 64, 128], &policy)
        }
        .map_err(e2s)?;
        let (o, f) = (order_of(&r), finest(&r));
        ensure((o - 2.0).abs() <= 0.2, format!("seed {seed}: order {o:.3}"))?;
        ensure(f <= 1e-4, format!("seed {seed}: finest relative residual {f:.2e}"))?;
        if (o - 2.0).abs() > (worst.0 - 2.0).abs() {
            worst.0 = o;
        }
        worst.1 = worst.1.max(f);
    }
    within(start.elapsed(), 60.0, "three seeds")?;
    Ok(format!("seeds 1-3 on N = 32, 64, 128: worst order {:.3}, worst finest relative {:.2e}", worst.0, worst.1))
}

fn c6_laplacian_deformation() -> Outcome {
    let policy = TolerancePolicy::default();
    let mut orders = Vec::new();
    for seed in 1..=3 {
        let r = check_laplacian_deformation(&Scenario::random(seed, 2), 32, &[1e-2, 1e-3], &policy).map_err(e2s)?;
        let o = order_of(&r);
        ensure((o - 2.0).abs() <= 0.2, format!("seed {seed}: order in t {o:.3}"))?;
        orders.push(o);
    }
    // flat metric and constant V: L_V g = 0, so the formula must return zero
    let d = Scenario::random(1, 2).sample(32).map_err(e2s)?;
    let flat = MetricField::flat(d.mesh);
    let v = MeshVectorField::constant(d.mesh, &[0.3, -0.7]).map_err(e2s)?;
    let lvg = lie_derivative_metric(&v, flat.tensor()).map_err(e2s)?;
    let out = laplacian_deformation(&flat, &lvg, &d.phi).map_err(e2s)?;
    ensure(out.sup_norm() == 0.0, format!("flat/constant case gives {:.2e}", out.sup_norm()))?;
    Ok(format!("orders in t {orders:.3?}; flat metric with constant V gives exactly 0"))
}

fn c7_variational_identity() -> Outcome {
    let policy = TolerancePolicy::default();
    let mut orders = Vec::new();
    for seed in 1..=3 {
        let r = check_variational_identity(&Scenario::random(seed, 2), &[32, 64, 128], &policy).map_err(e2s)?;
        let o = order_of(&r);
        ensure((o - 2.0).abs() <= 0.3, format!("seed {seed}: joint order {o:.3}"))?;
        orders.push(o);
    }
    // flat metric, dg = L_V g for constant V: both sides vanish
    let d = Scenario::random(1, 2).sample(64).map_err(e2s)?;
    let flat = MetricField::flat(d.mesh);
    let generic = variational_identity(&flat, &d.phi, &d.dg, 1.0 / 64.0).map_err(e2s)?;
    let scale = generic.scale.max(1.0);
    let v = MeshVectorField::constant(d.mesh, &[0.4, 0.9]).map_err(e2s)?;
    let lvg = lie_derivative_metric(&v, flat.tensor()).map_err(e2s)?;
    let r = variational_identity(&flat, &d.phi, &lvg, 1.0 / 64.0).map_err(e2s)?;
    let (lhs, rhs) = (r.details["tensor_pairing"], r.details["action_derivative"]);
    ensure(lhs.abs() < 1e-10 * scale && rhs.abs() < 1e-10 * scale, format!("Killing case sides {lhs:.2e}, {rhs:.2e}"))?;
    Ok(format!("joint orders (t = 1/N) {orders:.3?}; Killing case sides {lhs:.1e}, {rhs:.1e}"))
}

fn c8_infinitesimal_covariance() -> Outcome {
    let policy = TolerancePolicy::default();
    let mut orders = Vec::new();
    let mut smallest_term = f64::INFINITY;
    for seed in 1..=5 {
        let s = Scenario::random(seed, 2);
        let r = check_infinitesimal_covariance(&s, &[32, 64, 128], &policy).map_err(e2s)?;
        let o = order_of(&r);
        ensure(o >= 1.8, format!("seed {seed}: order {o:.3}"))?;
        orders.push(o);
        // the identity is a cancellation between terms that individually stay of unit size
        let (coarse, fine) = (s.sample(32).map_err(e2s)?, s.sample(128).map_err(e2s)?);
        let tc = infinitesimal_covariance_terms(&coarse.g, &coarse.phi, &coarse.v).map_err(e2s)?;
        let tf = infinitesimal_covariance_terms(&fine.g, &fine.phi, &fine.v).map_err(e2s)?;
        let big_c = tc.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let big_f = tf.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        ensure(big_f > 1e-2 && (big_f / big_c - 1.0).abs() < 0.1, format!("seed {seed}: term sizes {big_c:.3e} -> {big_f:.3e}"))?;
        smallest_term = smallest_term.min(big_f);
    }
    Ok(format!("seeds 1-5 orders {orders:.3?}; largest term at N = 128 at least {smallest_term:.3}"))
}

fn c9_jet_square() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut random = |n: usize| DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let (l, qm) = (random(5), random(5));
    let mut worst = 0.0f64;
    for k in 2..=4 {
        let r = check_jet_square(&l, &qm, k).map_err(e2s)?;
        let m = r.iter().copied().fold(0.0, f64::max);
        ensure(m < 1e-12, format!("k = {k}: residual {m:.2e}"))?;
        worst = worst.max(m);
    }
    let lr = int_matrix(&[&[1, 2, 0], &[0, -1, 3], &[2, 0, 1]]);
    let qr = int_matrix(&[&[0, 1, -1], &[2, 0, 0], &[1, 1, 1]]);
    let solved = solve_dk(&lr, &qr, 3).map_err(e2s)?;
    ensure(solved[1] == d2(&lr, &qr).map_err(e2s)?, "D_2 closed form differs from the solver")?;
    within(start.elapsed(), 1.0, "jet checks")?;
    Ok(format!("k = 2, 3, 4 worst relative residual {worst:.1e}; D_2 closed form exact over Q"))
}

fn c10_geometric_consistency() -> Outcome {
    let policy = TolerancePolicy::default();
    let mut orders = Vec::new();
    for seed in 1..=3 {
        let r = jet::check_geometric_consistency(&Scenario::random(seed, 2), &[32, 64, 128], &policy).map_err(e2s)?;
        let o = order_of(&r);
        ensure(o >= 1.8, format!("seed {seed}: order {o:.3}"))?;
        orders.push(o);
    }
    Ok(format!("seeds 1-3 orders {orders:.3?}"))
}

fn c11_yang_mills() -> Outcome {
    let policy = TolerancePolicy::default();
    let mut worst = f64::INFINITY;
    for seed in 1..=3 {
        let s = YmScenario::random(seed, 2, LieAlgebra::Su2);
        for r in check_ym_equivariance(&s, &[32, 64, 128], &policy).map_err(e2s)? {
            let o = order_of(&r);
            ensure(o >= 1.8, format!("seed {seed} {}: order {o:.3}", r.name))?;
            worst = worst.min(o);
        }
        let d = s.sample(32).map_err(e2s)?;
        let id = Diffeomorphism::identity(d.g.mesh());
        for (i, r) in ym_square_residuals(&d.g, &d.a, &id, &d.alpha, &d.omega, &d.beta).map_err(e2s)?.iter().enumerate() {
            ensure(r.value == 0.0, format!("seed {seed}: identity residual {:.2e} on square {}", r.value, i + 1))?;
        }
    }
    Ok(format!("su(2) on T^2, seeds 1-3, three squares: minimum order {worst:.3}; identity residuals exactly 0"))
}

fn c12_sym_intertwining() -> Outcome {
    let plain = GradedSpace::even(3);
    let d_plain = int_matrix(&[&[0, 1, 0], &[0, 0, 2], &[0, 0, 0]]);
    let alpha_plain = EpsilonJet::new(vec![
        RationalMatrix::identity(3),
        int_matrix(&[&[1, 0, 2], &[0, -1, 0], &[3, 0, 0]]),
        int_matrix(&[&[0, 1, 0], &[1, 0, 0], &[0, 0, 4]]),
    ])
    .map_err(e2s)?;
    let graded = GradedSpace::new(vec![0, 0, 1]).map_err(e2s)?;
    let d_graded = int_matrix(&[&[0, 0, 0], &[0, 0, 0], &[2, -1, 0]]);
    let alpha_graded = EpsilonJet::new(vec![
        RationalMatrix::identity(3),
        int_matrix(&[&[0, 1, 0], &[3, 0, 0], &[0, 0, -2]]),
    ])
    .map_err(e2s)?;
    let mut checked = 0;
    for (label, space, alpha, d) in [("plain", plain, alpha_plain, d_plain), ("graded", graded, alpha_graded, d_graded)] {
        let res = jet::check_sym_intertwining(&space, &alpha, &d, 3).map_err(e2s)?;
        if let Some((p, j, _)) = res.iter().find(|c| !c.2) {
            return Err(format!("{label}: Sym^{p} fails at eps^{j}"));
        }
        checked += res.len();
    }
    Ok(format!("{checked} (degree, order) blocks exactly zero through Sym^3"))
}

fn c13_determinism() -> Outcome {
    let cfg = RunConfig::parse(
        "[run]\nsuite = [\"scalar_equivariance\", \"laplacian_deformation\", \"jet_square\", \"ym_equivariance\", \"ce_invariants\"]\n\
         seeds = [1, 2]\n[checks.scalar_equivariance]\ngrids = [16, 32]\n[checks.ym_equivariance]\ngrids = [16, 32]\n",
    )
    .map_err(e2s)?;
    let (a, b) = (tempfile::tempdir().map_err(e2s)?, tempfile::tempdir().map_err(e2s)?);
    run_suite(&cfg, a.path(), Some(1)).map_err(e2s)?;
    run_suite(&cfg, b.path(), Some(3)).map_err(e2s)?;
    let mut names: Vec<_> = std::fs::read_dir(a.path()).map_err(e2s)?.map(|e| e.map(|e| e.file_name())).collect::<Result<_, _>>().map_err(e2s)?;
    names.sort();
    for n in &names {
        let x = std::fs::read(a.path().join(n)).map_err(e2s)?;
        let y = std::fs::read(b.path().join(n)).map_err(e2s)?;
        ensure(x == y, format!("{n:?} differs between runs"))?;
    }
    Ok(format!("{} files byte-identical across two runs", names.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("CE differential squares to zero", c1_ce_exactness),
        ("SO(2) invariants at T = 4", c2_so2_invariants),
        ("tangent complex cohomology", c3_tangent_complexes),
        ("scalar equivariance", || equivariance(false)),
        ("interacting equivariance, lambda_4 = 6", || equivariance(true)),
        ("Laplacian deformation formula", c6_laplacian_deformation),
        ("variational identity", c7_variational_identity),
        ("infinitesimal covariance", c8_infinitesimal_covariance),
        ("epsilon-jet square", c9_jet_square),
        ("geometric consistency", c10_geometric_consistency),
        ("Yang-Mills squares", c11_yang_mills),
        ("Sym intertwining", c12_sym_intertwining),
        ("deterministic reports", c13_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} ({secs:.2} s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
