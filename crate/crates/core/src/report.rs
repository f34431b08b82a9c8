//! Convergence reports and the pass/fail policy shared by all numerical checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Residuals at or below this multiple of the data scale count as exact.
pub const ROUNDOFF_RELATIVE: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub min_order: f64,
    pub relative_tolerance: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self { min_order: 1.8, relative_tolerance: 1e-4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    /// Residuals indexed by grid spacing `h = 1/N`.
    Grid,
    /// Residuals indexed by a finite-difference step `t` at fixed grid.
    Step,
    /// Algebraic identity; residuals are expected at roundoff and no order is fitted.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub anchor: String,
    pub refinement: Refinement,
    pub grids: Vec<usize>,
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    pub scales: Vec<f64>,
    pub order: Option<f64>,
    pub passed: bool,
    pub details: BTreeMap<String, Value>,
}

/// One evaluation of an identity: `residual` against the size of the data it compares.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub scale: f64,
    pub details: BTreeMap<String, f64>,
}

impl Residual {
    pub fn new(value: f64, scale: f64) -> Self {
        Self { value, scale, details: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.details.insert(key.to_string(), v);
        self
    }

    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value / self.scale
        } else {
            self.value
        }
    }
}

/// Least-squares slope of `log r` against `log step`.
pub fn fit_order(steps: &[f64], residuals: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(residuals)
        .filter(|(s, r)| **s > 0.0 && **r > 0.0)
        .map(|(s, r)| (s.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl TolerancePolicy {
    /// Passes when every residual is at roundoff, or when the fitted order reaches
    /// `min_order` and the last residual is within `relative_tolerance` of its scale.
    pub fn judge(&self, refinement: Refinement, steps: &[f64], residuals: &[Residual]) -> (Option<f64>, bool) {
        let values: Vec<f64> = residuals.iter().map(|r| r.value).collect();
        let exact = residuals.iter().all(|r| r.value <= ROUNDOFF_RELATIVE * r.scale.max(f64::MIN_POSITIVE));
        if refinement == Refinement::Exact {
            return (None, exact);
        }
        let order = fit_order(steps, &values);
        if exact {
            return (order, true);
        }
        let last = residuals.last().map_or(f64::INFINITY, Residual::relative);
        let passed = order.is_some_and(|o| o >= self.min_order) && last <= self.relative_tolerance;
        (order, passed)
    }

    pub fn report(
        &self,
        name: &str,
        anchor: &str,
        refinement: Refinement,
        grids: Vec<usize>,
        steps: Vec<f64>,
        residuals: Vec<Residual>,
    ) -> CheckReport {
        let (order, passed) = self.judge(refinement, &steps, &residuals);
        let mut details = BTreeMap::new();
        for (i, r) in residuals.iter().enumerate() {
            for (k, v) in &r.details {
                details
                    .entry(k.clone())
                    .or_insert_with(|| Value::Array(vec![Value::Null; residuals.len()]))
                    .as_array_mut()
                    .expect("detail entries are arrays")[i] = json_number(*v);
            }
        }
        CheckReport {
            name: name.to_string(),
            anchor: anchor.to_string(),
            refinement,
            grids,
            steps,
            residuals: residuals.iter().map(|r| r.value).collect(),
            scales: residuals.iter().map(|r| r.scale).collect(),
            order,
            passed,
            details,
        }
    }
}

pub fn json_number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

impl CheckReport {
    pub fn finest_relative(&self) -> f64 {
        match (self.residuals.last(), self.scales.last()) {
            (Some(r), Some(s)) if *s > 0.0 => r / s,
            (Some(r), _) => *r,
            _ => f64::NAN,
        }
    }

    /// `N,residual` rows (or `t,residual` for step studies).
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        match self.refinement {
            Refinement::Step => {
                s.push_str("t,residual\n");
                for (t, r) in self.steps.iter().zip(&self.residuals) {
                    s.push_str(&format!("{t:e},{r:e}\n"));
                }
            }
            _ => {
                s.push_str("N,residual\n");
                for (n, r) in self.grids.iter().zip(&self.residuals) {
                    s.push_str(&format!("{n},{r:e}\n"));
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_of_exact_power_law() {
        let steps = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let res: Vec<f64> = steps.iter().map(|h| 3.0 * h * h).collect();
        assert!((fit_order(&steps, &res).unwrap() - 2.0).abs() < 1e-12);
        assert!(fit_order(&steps[..1], &res[..1]).is_none());
    }

    #[test]
    fn policy_requires_order_and_size() {
        let p = TolerancePolicy::default();
        let steps = [0.1, 0.05];
        let good = [Residual::new(1e-5, 1.0), Residual::new(2.5e-6, 1.0)];
        assert!(p.judge(Refinement::Grid, &steps, &good).1);
        let slow = [Residual::new(1e-5, 1.0), Residual::new(5e-6, 1.0)];
        assert!(!p.judge(Refinement::Grid, &steps, &slow).1);
        let big = [Residual::new(1e-2, 1.0), Residual::new(2.5e-3, 1.0)];
        assert!(!p.judge(Refinement::Grid, &steps, &big).1);
        let exact = [Residual::new(1e-15, 1.0), Residual::new(3e-15, 1.0)];
        assert!(p.judge(Refinement::Grid, &steps, &exact).1);
    }

    #[test]
    fn csv_layout() {
        let p = TolerancePolicy::default();
        let r = p.report("x", "a", Refinement::Grid, vec![8, 16], vec![0.125, 0.0625], vec![Residual::new(0.5, 1.0), Residual::new(0.125, 1.0)]);
        assert_eq!(r.to_csv(), "N,residual\n8,5e-1\n16,1.25e-1\n");
    }
}
