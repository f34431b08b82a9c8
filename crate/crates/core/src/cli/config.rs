//! Run configuration: a TOML file with a `[run]` section, optional `[checks.<name>]`
//! overrides and a `[ce]` section for the cohomology report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::suite::{CheckKind, CHECKS};
use crate::error::{Error, Result};
use crate::mesh::InterpolationMethod;
use crate::report::TolerancePolicy;
use crate::yang_mills::LieAlgebra;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Checks to run; all of them when absent.
    pub suite: Option<Vec<String>>,
    pub output: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub dim: Option<usize>,
    pub min_order: Option<f64>,
    pub relative_tolerance: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    pub grids: Option<Vec<usize>>,
    pub seeds: Option<Vec<u64>>,
    pub dim: Option<usize>,
    pub steps: Option<Vec<f64>>,
    pub size: Option<usize>,
    pub orders: Option<Vec<usize>>,
    pub truncation: Option<u32>,
    pub lambda4: Option<f64>,
    pub algebra: Option<LieAlgebra>,
    pub interpolation: Option<InterpolationMethod>,
    pub min_order: Option<f64>,
    pub relative_tolerance: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CeSection {
    pub examples: Option<Vec<String>>,
    pub truncation: Option<u32>,
    pub max_ce_degree: Option<usize>,
    pub basis_cap: Option<usize>,
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub checks: BTreeMap<String, CheckSection>,
    #[serde(default)]
    pub ce: CeSection,
}

pub const CE_EXAMPLES: [&str; 4] = ["so2", "so3", "trivial", "translations"];

/// Fully resolved parameters of one check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckParams {
    pub grids: Vec<usize>,
    pub seeds: Vec<u64>,
    pub dim: usize,
    pub steps: Vec<f64>,
    pub size: usize,
    pub orders: Vec<usize>,
    pub truncation: u32,
    pub lambda4: f64,
    pub algebra: LieAlgebra,
    pub interpolation: InterpolationMethod,
    pub policy: TolerancePolicy,
}

fn err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Selected check names, in registry order when the suite is absent.
    pub fn suite(&self) -> Vec<String> {
        match &self.run.suite {
            Some(s) => s.clone(),
            None => CHECKS.iter().map(|c| c.name.to_string()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let known = |name: &str| CHECKS.iter().any(|c| c.name == name);
        if let Some(s) = &self.run.suite {
            for name in s {
                if !known(name) {
                    return Err(err(format!("unknown check `{name}`")));
                }
            }
            let mut seen = std::collections::BTreeSet::new();
            for name in s {
                if !seen.insert(name) {
                    return Err(err(format!("check `{name}` listed twice")));
                }
            }
        }
        for name in self.checks.keys() {
            if !known(name) {
                return Err(err(format!("[checks.{name}] names an unknown check")));
            }
        }
        if let Some(ex) = &self.ce.examples {
            for e in ex {
                if !CE_EXAMPLES.contains(&e.as_str()) {
                    return Err(err(format!("unknown ce example `{e}`; expected one of {CE_EXAMPLES:?}")));
                }
            }
        }
        if self.ce.truncation == Some(0) {
            return Err(err("ce.truncation must be at least 1"));
        }
        if self.ce.max_ce_degree == Some(0) {
            return Err(err("ce.max_ce_degree must be positive"));
        }
        for c in CHECKS {
            self.params(c.name)?;
        }
        Ok(())
    }

    /// Defaults, then `[run]`, then `[checks.<name>]`, validated.
    pub fn params(&self, name: &str) -> Result<CheckParams> {
        let spec = CHECKS.iter().find(|c| c.name == name).ok_or_else(|| err(format!("unknown check `{name}`")))?;
        let sec = self.checks.get(name).cloned().unwrap_or_default();
        let base = TolerancePolicy::default();
        let p = CheckParams {
            grids: sec.grids.unwrap_or_else(|| spec.grids.to_vec()),
            seeds: sec.seeds.or_else(|| self.run.seeds.clone()).unwrap_or_else(|| vec![1]),
            dim: sec.dim.or(self.run.dim).unwrap_or(2),
            steps: sec.steps.unwrap_or_else(|| vec![1e-2, 1e-3]),
            size: sec.size.unwrap_or(32),
            orders: sec.orders.unwrap_or_else(|| vec![2, 3, 4, 5]),
            truncation: sec.truncation.unwrap_or(spec.truncation),
            lambda4: sec.lambda4.unwrap_or(6.0),
            algebra: sec.algebra.unwrap_or(LieAlgebra::Su2),
            interpolation: sec.interpolation.unwrap_or(spec.interpolation),
            policy: TolerancePolicy {
                min_order: sec.min_order.or(self.run.min_order).unwrap_or(base.min_order),
                relative_tolerance: sec.relative_tolerance.or(self.run.relative_tolerance).unwrap_or(base.relative_tolerance),
            },
        };
        let ctx = |m: String| err(format!("{name}: {m}"));
        if spec.kind == CheckKind::Grid {
            if p.grids.len() < 2 {
                return Err(ctx("grids needs at least two sizes".into()));
            }
            if p.grids.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ctx(format!("grid sizes must be strictly increasing, got {:?}", p.grids)));
            }
            if p.grids[0] < 8 {
                return Err(ctx("grid sizes must be at least 8".into()));
            }
        }
        if p.seeds.is_empty() {
            return Err(ctx("seeds must not be empty".into()));
        }
        let min_dim = if name.starts_with("ym_") { 2 } else { 1 };
        if !(min_dim..=3).contains(&p.dim) {
            return Err(ctx(format!("dim must lie in {min_dim}..=3")));
        }
        if p.steps.len() < 2 || p.steps.iter().any(|t| !(t.is_finite() && *t > 0.0)) || p.steps.windows(2).any(|w| w[0] <= w[1]) {
            return Err(ctx("steps must be positive and strictly decreasing, at least two".into()));
        }
        if p.size < 8 {
            return Err(ctx("size must be at least 8".into()));
        }
        if p.orders.is_empty() || p.orders.iter().any(|k| !(2..=crate::jet::DEFAULT_MAX_ORDER).contains(k)) {
            return Err(ctx(format!("orders must lie in 2..={}", crate::jet::DEFAULT_MAX_ORDER)));
        }
        if p.truncation == 0 {
            return Err(ctx("truncation must be at least 1".into()));
        }
        if !p.lambda4.is_finite() {
            return Err(ctx("lambda4 must be finite".into()));
        }
        if !(p.policy.min_order.is_finite() && p.policy.relative_tolerance > 0.0 && p.policy.relative_tolerance.is_finite()) {
            return Err(ctx("tolerances must be finite and positive".into()));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_selects_everything() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.suite().len(), CHECKS.len());
        assert_eq!(c.params("scalar_equivariance").unwrap().grids, vec![32, 64, 128]);
    }

    #[test]
    fn overrides_apply_in_order() {
        let c = RunConfig::parse(
            "[run]\nseeds = [4]\nrelative_tolerance = 1e-3\n[checks.noether_identity]\ngrids = [16, 32]\nseeds = [7, 8]\n",
        )
        .unwrap();
        let p = c.params("noether_identity").unwrap();
        assert_eq!((p.grids, p.seeds, p.policy.relative_tolerance), (vec![16, 32], vec![7, 8], 1e-3));
        assert_eq!(c.params("scalar_equivariance").unwrap().seeds, vec![4]);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "[checks.scalar_equivariance]\ngrids = [64, 32]\n",
            "[checks.scalar_equivariance]\ngrids = [32, 32]\n",
            "[run]\nsuite = [\"nope\"]\n",
            "[run]\nsurprise = 1\n",
            "[checks.jet_square]\norders = [9]\n",
            "[ce]\nexamples = [\"so4\"]\n",
            "[run\n",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
    }
}
