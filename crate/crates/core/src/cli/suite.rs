//! Check registry, the suite runner and the CE report.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{CheckParams, RunConfig, CE_EXAMPLES};
use crate::ce::{self, build_ce_complex, build_tangent_complex, invariants_h0, ActionLieData, CeOptions};
use crate::covariance::{self as cov, anchors, PotentialSpec, Scenario};
use crate::error::{Error, Result};
use crate::graded::{q, q_frac, TruncatedGradedElement, Q};
use crate::jet::{self, check_jet_square, d2, int_matrix, solve_dk, EpsilonJet, GradedSpace};
use crate::mesh::InterpolationMethod;
use crate::report::{CheckReport, Refinement, Residual, TolerancePolicy};
use crate::yang_mills::{self as ym, YmScenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    Grid,
    Step,
    Exact,
}

/// Registry entry: defaults for one named check.
#[derive(Clone, Copy, Debug)]
pub struct CheckSpec {
    pub name: &'static str,
    pub anchor: &'static str,
    pub kind: CheckKind,
    pub seeded: bool,
    pub grids: &'static [usize],
    pub truncation: u32,
    pub interpolation: InterpolationMethod,
}

const fn spec(name: &'static str, anchor: &'static str, kind: CheckKind, seeded: bool, grids: &'static [usize]) -> CheckSpec {
    CheckSpec { name, anchor, kind, seeded, grids, truncation: 4, interpolation: InterpolationMethod::Spectral }
}

pub const CE_EXACTNESS_ANCHOR: &str = "d^2 = 0 on Lambda^q g^v (x) R[x]/m^{T+1}: d x_l = alpha^i rho_i^l, d alpha^k = -1/2 c^k_ij alpha^i alpha^j";
pub const CE_INVARIANTS_ANCHOR: &str = "H^0(CE) = invariant Taylor series; SO(2) on R^2 gives span{(x^2 + y^2)^j}";
pub const TANGENT_ANCHOR: &str = "tangent complex g -> T_pM: H^{-1} = stabiliser algebra, H^0 = T_pM / (g . p)";
pub const JET_SQUARE_ANCHOR: &str =
    "(sum eps^j/j! L^j) Q = (Q + sum eps^j D_j)(sum eps^j/j! L^j) mod eps^k, D_2 = 1/2 [L^2, Q] - [L, Q] L";
pub const SYM_ANCHOR: &str = "Sym(alpha) d_V = d_W Sym(alpha) with d_W = alpha d_V alpha^{-1}, derivations extended to Sym";
pub const YM_ANCHOR: &str = "f^* commutes with d_A, d_A *_g d_A and d_A along Omega^0 -> Omega^1 -> Omega^{n-1} -> Omega^n";

pub const CHECKS: &[CheckSpec] = &[
    CheckSpec { truncation: 6, ..spec("ce_exactness", CE_EXACTNESS_ANCHOR, CheckKind::Exact, false, &[]) },
    spec("ce_invariants", CE_INVARIANTS_ANCHOR, CheckKind::Exact, false, &[]),
    spec("tangent_complex", TANGENT_ANCHOR, CheckKind::Exact, false, &[]),
    spec("scalar_equivariance", anchors::SCALAR_EQUIVARIANCE, CheckKind::Grid, true, &[32, 64, 128]),
    spec("interacting_equivariance", anchors::INTERACTING_EQUIVARIANCE, CheckKind::Grid, true, &[32, 64, 128]),
    spec("laplacian_deformation", anchors::LAPLACIAN_DEFORMATION, CheckKind::Step, true, &[]),
    spec("variational_identity", anchors::VARIATIONAL_IDENTITY, CheckKind::Grid, true, &[128, 256, 512]),
    spec("infinitesimal_covariance", anchors::INFINITESIMAL_COVARIANCE, CheckKind::Grid, true, &[128, 256, 512]),
    spec("noether_identity", anchors::NOETHER, CheckKind::Grid, true, &[128, 256, 512]),
    spec("jet_square", JET_SQUARE_ANCHOR, CheckKind::Exact, true, &[]),
    spec("geometric_consistency", jet::GEOMETRIC_CONSISTENCY_ANCHOR, CheckKind::Grid, true, &[128, 256, 512]),
    CheckSpec {
        interpolation: InterpolationMethod::CubicSpline,
        ..spec("ym_equivariance", YM_ANCHOR, CheckKind::Grid, true, &[64, 128, 256])
    },
    spec("sym_isomorphism", SYM_ANCHOR, CheckKind::Exact, false, &[]),
];

pub fn check_spec(name: &str) -> Option<&'static CheckSpec> {
    CHECKS.iter().find(|c| c.name == name)
}

fn exact_report(name: &str, anchor: &str, residuals: Vec<Residual>) -> CheckReport {
    TolerancePolicy::default().report(name, anchor, Refinement::Exact, Vec::new(), Vec::new(), residuals)
}

fn count(r: usize) -> Residual {
    Residual::new(r as f64, 1.0)
}

fn ce_exactness(p: &CheckParams) -> Result<Vec<CheckReport>> {
    let mut residuals = Vec::new();
    let mut details = serde_json::Map::new();
    for (label, action) in [("so2", ActionLieData::so2_plane()), ("so3", ActionLieData::so3_space())] {
        for t in 1..=p.truncation {
            let opts = CeOptions { truncation: t, max_ce_degree: action.dim(), ..CeOptions::default() };
            let cx = build_ce_complex(&action, &opts)?;
            let bad = cx
                .levels
                .windows(2)
                .map(|w| w[1].differential.mul(&w[0].differential).map(|m| m.nnz()))
                .sum::<Result<usize>>()?;
            residuals.push(count(bad));
            details.insert(format!("{label}_t{t}_basis"), json!(cx.levels.iter().map(|l| l.basis.len()).collect::<Vec<_>>()));
        }
    }
    let mut r = exact_report("ce_exactness", CE_EXACTNESS_ANCHOR, residuals);
    r.details.extend(details);
    Ok(vec![r])
}

/// `x -> c x - s y`, `y -> s x + c y` applied to a polynomial in two variables.
fn rotate_plane(e: &TruncatedGradedElement, c: &Q, s: &Q) -> Result<TruncatedGradedElement> {
    let shape = e.shape();
    let x = TruncatedGradedElement::even_gen(shape, 0)?;
    let y = TruncatedGradedElement::even_gen(shape, 1)?;
    let rx = x.scale(c).sub(&y.scale(s))?;
    let ry = x.scale(s).add(&y.scale(c))?;
    let mut out = TruncatedGradedElement::zero(shape);
    for (m, coef) in e.terms() {
        let mut t = TruncatedGradedElement::constant(shape, coef.clone());
        for _ in 0..m.even[0] {
            t = t.multiply(&rx)?;
        }
        for _ in 0..m.even[1] {
            t = t.multiply(&ry)?;
        }
        out = out.add(&t)?;
    }
    Ok(out)
}

fn ce_invariants(p: &CheckParams) -> Result<Vec<CheckReport>> {
    let t = p.truncation;
    let h0 = invariants_h0(&ActionLieData::so2_plane(), t)?;
    let expected = (t / 2 + 1) as usize;
    // rotation by the Pythagorean angle (3/5, 4/5) has infinite order
    let (c, s) = (q_frac(3, 5), q_frac(4, 5));
    let moved = h0.iter().map(|b| rotate_plane(b, &c, &s).map(|r| r != *b)).collect::<Result<Vec<_>>>()?;
    let residuals = vec![count(h0.len().abs_diff(expected)), count(moved.iter().filter(|m| **m).count())];
    let mut r = exact_report("ce_invariants", CE_INVARIANTS_ANCHOR, residuals);
    r.details.insert("truncation".into(), json!(t));
    r.details.insert("h0_dimension".into(), json!(h0.len()));
    r.details.insert("expected_dimension".into(), json!(expected));
    r.details.insert("h0_basis".into(), json!(h0.iter().map(TruncatedGradedElement::pretty).collect::<Vec<_>>()));
    Ok(vec![r])
}

fn tangent_complex(_: &CheckParams) -> Result<Vec<CheckReport>> {
    let cases: [(&str, ActionLieData, Vec<Q>, (usize, usize)); 3] = [
        ("so2_origin", ActionLieData::so2_plane(), vec![q(0), q(0)], (1, 2)),
        ("so2_at_1_0", ActionLieData::so2_plane(), vec![q(1), q(0)], (0, 1)),
        ("so3_origin", ActionLieData::so3_space(), vec![q(0), q(0), q(0)], (3, 3)),
    ];
    let mut residuals = Vec::new();
    let mut details = serde_json::Map::new();
    for (label, action, point, expected) in cases {
        let got = build_tangent_complex(&action, &point)?.cohomology();
        residuals.push(count(got.0.abs_diff(expected.0) + got.1.abs_diff(expected.1)));
        details.insert(label.into(), json!({ "h_minus1": got.0, "h0": got.1, "expected": [expected.0, expected.1] }));
    }
    let mut r = exact_report("tangent_complex", TANGENT_ANCHOR, residuals);
    r.details.extend(details);
    Ok(vec![r])
}

fn scenario(p: &CheckParams, seed: u64) -> Scenario {
    Scenario::random(seed, p.dim)
}

fn jet_square(p: &CheckParams, seed: u64) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random = |n: usize| DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let l = random(5);
    let qm = random(5);
    let mut residuals = Vec::new();
    for &k in &p.orders {
        let r = check_jet_square(&l, &qm, k)?;
        residuals.push(Residual::new(r.iter().copied().fold(0.0, f64::max), 1.0));
    }
    // closed form for D_2 against the solver, exactly, on small integer matrices
    let mut ints = |n: usize| -> Vec<Vec<i64>> { (0..n).map(|_| (0..n).map(|_| rng.random_range(-3..=3)).collect()).collect() };
    let (li, qi) = (ints(4), ints(4));
    let rows = |m: &Vec<Vec<i64>>| int_matrix(&m.iter().map(Vec::as_slice).collect::<Vec<_>>());
    let (lr, qr) = (rows(&li), rows(&qi));
    let mismatch = usize::from(solve_dk(&lr, &qr, 3)?[1] != d2(&lr, &qr)?);
    residuals.push(count(mismatch));
    let mut r = exact_report("jet_square", JET_SQUARE_ANCHOR, residuals);
    r.details.insert("orders".into(), json!(p.orders));
    r.details.insert("d2_closed_form_mismatch".into(), json!(mismatch));
    Ok(vec![r])
}

fn sym_isomorphism(_: &CheckParams) -> Result<Vec<CheckReport>> {
    // V = (k -> k) read as a plain symmetric algebra, then a graded space in degrees 0 and 1
    let plain = GradedSpace::even(2);
    let d_plain = int_matrix(&[&[0, 0], &[1, 0]]);
    let alpha_plain = EpsilonJet::new(vec![crate::exact::RationalMatrix::identity(2), int_matrix(&[&[0, 0], &[3, 0]])])?;
    let graded = GradedSpace::new(vec![0, 0, 1, 1])?;
    let d_graded = int_matrix(&[&[0, 0, 0, 0], &[0, 0, 0, 0], &[1, 2, 0, 0], &[-1, 3, 0, 0]]);
    let alpha_graded = EpsilonJet::new(vec![
        crate::exact::RationalMatrix::identity(4),
        int_matrix(&[&[0, 0, 0, 0], &[2, 0, 0, 0], &[0, 0, 0, 0], &[0, 0, 5, 0]]),
        int_matrix(&[&[1, 1, 0, 0], &[0, -1, 0, 0], &[0, 0, 2, 1], &[0, 0, 0, 3]]),
    ])?;
    let mut residuals = Vec::new();
    let mut details = serde_json::Map::new();
    for (label, space, alpha, d) in [("plain", plain, alpha_plain, d_plain), ("graded", graded, alpha_graded, d_graded)] {
        let checks = jet::check_sym_intertwining(&space, &alpha, &d, 3)?;
        let failures = checks.iter().filter(|c| !c.2).count();
        residuals.push(count(failures));
        details.insert(format!("{label}_checked"), json!(checks.len()));
    }
    let mut r = exact_report("sym_isomorphism", SYM_ANCHOR, residuals);
    r.details.extend(details);
    r.details.insert("max_sym_degree".into(), json!(3));
    Ok(vec![r])
}

fn run_one(name: &str, p: &CheckParams, seed: u64) -> Result<Vec<CheckReport>> {
    let policy = &p.policy;
    match name {
        "ce_exactness" => ce_exactness(p),
        "ce_invariants" => ce_invariants(p),
        "tangent_complex" => tangent_complex(p),
        "scalar_equivariance" => Ok(vec![cov::check_scalar_equivariance(&scenario(p, seed), &p.grids, policy)?]),
        "interacting_equivariance" => {
            let s = scenario(p, seed).with_potential(PotentialSpec::phi4(p.lambda4));
            Ok(vec![cov::check_interacting_equivariance(&s, &p.grids, policy)?])
        }
        "laplacian_deformation" => Ok(vec![cov::check_laplacian_deformation(&scenario(p, seed), p.size, &p.steps, policy)?]),
        "variational_identity" => Ok(vec![cov::check_variational_identity(&scenario(p, seed), &p.grids, policy)?]),
        "infinitesimal_covariance" => Ok(vec![cov::check_infinitesimal_covariance(&scenario(p, seed), &p.grids, policy)?]),
        "noether_identity" => Ok(vec![cov::check_noether_identity(&scenario(p, seed), &p.grids, policy)?]),
        "jet_square" => jet_square(p, seed),
        "geometric_consistency" => Ok(vec![jet::check_geometric_consistency(&scenario(p, seed), &p.grids, policy)?]),
        "ym_equivariance" => {
            let mut s = YmScenario::random(seed, p.dim, p.algebra);
            s.interpolation = p.interpolation;
            ym::check_ym_equivariance(&s, &p.grids, policy)
        }
        "sym_isomorphism" => sym_isomorphism(p),
        _ => Err(Error::Config(format!("unknown check `{name}`"))),
    }
}

/// One report file on disk.
#[derive(Serialize)]
pub struct ReportFile<'a> {
    pub check: &'a str,
    pub seed: Option<u64>,
    pub policy: TolerancePolicy,
    pub finest_relative: f64,
    #[serde(flatten)]
    pub report: &'a CheckReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryEntry {
    pub check: String,
    pub report: String,
    pub seed: Option<u64>,
    pub passed: bool,
    pub order: Option<f64>,
    pub finest_relative: f64,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<SummaryEntry>,
}

impl Summary {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

fn failure_report(name: &str, anchor: &str, e: &Error) -> CheckReport {
    let mut r = exact_report(name, anchor, vec![Residual::new(f64::INFINITY, 1.0)]);
    r.passed = false;
    r.details.insert("error".into(), Value::String(e.to_string()));
    r
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

/// Runs the selected checks on a pool of `jobs` threads (all cores when `None`) and
/// writes one JSON report per check and seed, CSV convergence tables and `summary.json`.
pub fn run_suite(cfg: &RunConfig, out: &Path, jobs: Option<usize>) -> Result<Summary> {
    let mut plan = Vec::new();
    for name in cfg.suite() {
        let spec = check_spec(&name).ok_or_else(|| Error::Config(format!("unknown check `{name}`")))?;
        let params = cfg.params(&name)?;
        let seeds: Vec<Option<u64>> = if spec.seeded { params.seeds.iter().copied().map(Some).collect() } else { vec![None] };
        for seed in seeds {
            plan.push((spec, params.clone(), seed));
        }
    }
    std::fs::create_dir_all(out)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be positive".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<Vec<CheckReport>> = pool.install(|| {
        plan.par_iter()
            .map(|(spec, params, seed)| {
                run_one(spec.name, params, seed.unwrap_or(0))
                    .unwrap_or_else(|e| vec![failure_report(spec.name, spec.anchor, &e)])
            })
            .collect()
    });
    let mut entries = Vec::new();
    for ((spec, params, seed), reports) in plan.iter().zip(&results) {
        for r in reports {
            let stem = match seed {
                Some(s) => format!("{}-seed{s}", r.name),
                None => r.name.clone(),
            };
            let file = format!("{stem}.json");
            let finest = r.finest_relative();
            write_json(
                &out.join(&file),
                &ReportFile { check: spec.name, seed: *seed, policy: params.policy, finest_relative: finest, report: r },
            )?;
            if r.refinement != Refinement::Exact {
                std::fs::write(out.join(format!("{stem}.csv")), r.to_csv())?;
            }
            entries.push(SummaryEntry {
                check: spec.name.to_string(),
                report: r.name.clone(),
                seed: *seed,
                passed: r.passed,
                order: r.order,
                finest_relative: finest,
                file,
            });
        }
    }
    let passed = entries.iter().filter(|e| e.passed).count();
    let summary = Summary { total: entries.len(), passed, failed: entries.len() - passed, checks: entries };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn ce_action(name: &str) -> ActionLieData {
    match name {
        "so2" => ActionLieData::so2_plane(),
        "so3" => ActionLieData::so3_space(),
        "trivial" => ActionLieData::trivial(2, 1),
        _ => ActionLieData::translations(1),
    }
}

/// Tangent complexes at the origin and truncated CE cohomology of the built-in actions,
/// written to `ce_report.json`.
pub fn ce_report(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let examples = cfg.ce.examples.clone().unwrap_or_else(|| CE_EXAMPLES.iter().map(|s| s.to_string()).collect());
    let opts = CeOptions {
        truncation: cfg.ce.truncation.unwrap_or(ce::DEFAULT_TRUNCATION),
        max_ce_degree: cfg.ce.max_ce_degree.unwrap_or(2),
        basis_cap: cfg.ce.basis_cap.unwrap_or(ce::DEFAULT_BASIS_CAP),
    };
    let mut items = Vec::new();
    for name in &examples {
        let action = ce_action(name);
        let origin = vec![q(0); action.n()];
        let (hm1, h0) = build_tangent_complex(&action, &origin)?.cohomology();
        let cx = build_ce_complex(&action, &opts)?;
        let basis = cx.h0_basis()?;
        items.push(json!({
            "example": name,
            "n": action.n(),
            "lie_algebra_dim": action.dim(),
            "tangent_complex_at_origin": { "h_minus1": hm1, "h0": h0 },
            "filtration": cx.filtration,
            "d_squared_zero": cx.composites_vanish()?,
            "levels": cx.summaries(),
            "h0_dimension": basis.len(),
            "h0_basis": basis.iter().map(TruncatedGradedElement::pretty).collect::<Vec<_>>(),
        }));
    }
    let report = json!({
        "truncation": opts.truncation,
        "max_ce_degree": opts.max_ce_degree,
        "basis_cap": opts.basis_cap,
        "examples": items,
    });
    std::fs::create_dir_all(out)?;
    let path = out.join("ce_report.json");
    write_json(&path, &report)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::GradedShape;

    #[test]
    fn registry_names_are_unique() {
        let mut names: Vec<_> = CHECKS.iter().map(|c| c.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), CHECKS.len());
    }

    #[test]
    fn exact_checks_pass() {
        let cfg = RunConfig::parse("").unwrap();
        for name in ["ce_invariants", "tangent_complex", "jet_square", "sym_isomorphism"] {
            let p = cfg.params(name).unwrap();
            for r in run_one(name, &p, 1).unwrap() {
                assert!(r.passed, "{name}: {:?}", r.residuals);
            }
        }
    }

    #[test]
    fn rotation_moves_non_invariants() {
        let s = GradedShape::polynomial(2, 2);
        let x = TruncatedGradedElement::even_gen(s, 0).unwrap();
        let r2 = x.multiply(&x).unwrap().add(&TruncatedGradedElement::even_gen(s, 1).unwrap().multiply(&TruncatedGradedElement::even_gen(s, 1).unwrap()).unwrap()).unwrap();
        let (c, sn) = (q_frac(3, 5), q_frac(4, 5));
        assert_ne!(rotate_plane(&x, &c, &sn).unwrap(), x);
        assert_eq!(rotate_plane(&r2, &c, &sn).unwrap(), r2);
    }
}
