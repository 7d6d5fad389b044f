use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Violating points kept verbatim in a report; the count is always exact.
pub const MAX_RECORDED_VIOLATIONS: usize = 32;

/// Outcome of checking an inequality (or family of inequalities) over a grid.
///
/// `margin` is the amount by which an inequality holds at a point, negative
/// when it fails. A point violates when its margin is below `-slack`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub name: String,
    pub grid: Value,
    pub slack: f64,
    pub points: usize,
    pub checks: usize,
    pub worst_margin: f64,
    pub worst_point: Option<Value>,
    pub violations: usize,
    pub violating_points: Vec<Value>,
}

impl SweepReport {
    pub fn new(name: impl Into<String>, grid: Value, slack: f64) -> Self {
        Self {
            name: name.into(),
            grid,
            slack,
            points: 0,
            checks: 0,
            worst_margin: f64::INFINITY,
            worst_point: None,
            violations: 0,
            violating_points: Vec::new(),
        }
    }

    /// Record the margins of all inequalities checked at one point.
    pub fn record(&mut self, margins: &[f64], point: impl FnOnce() -> Value) {
        self.points += 1;
        self.checks += margins.len();
        let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
        let violated = margins.iter().any(|m| !(*m >= -self.slack));
        if !(worst >= self.worst_margin) || violated {
            let p = point();
            if !(worst >= self.worst_margin) {
                self.worst_margin = worst;
                self.worst_point = Some(p.clone());
            }
            if violated {
                self.violations += 1;
                if self.violating_points.len() < MAX_RECORDED_VIOLATIONS {
                    self.violating_points.push(p);
                }
            }
        }
    }

    /// Combine two partial reports over disjoint parts of the same grid.
    pub fn merge(mut self, other: SweepReport) -> SweepReport {
        self.points += other.points;
        self.checks += other.checks;
        if other.worst_margin < self.worst_margin || self.worst_margin.is_nan() {
            self.worst_margin = other.worst_margin;
            self.worst_point = other.worst_point;
        }
        self.violations += other.violations;
        for p in other.violating_points {
            if self.violating_points.len() < MAX_RECORDED_VIOLATIONS {
                self.violating_points.push(p);
            }
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.points > 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn tracks_worst_and_violations() {
        let mut r = SweepReport::new("t", json!({}), 1e-9);
        r.record(&[0.5, 0.2], || json!(1));
        r.record(&[0.1, -1e-10], || json!(2));
        assert!(r.passed());
        assert_eq!(r.worst_margin, -1e-10);
        assert_eq!(r.worst_point, Some(json!(2)));
        r.record(&[-1.0], || json!(3));
        assert!(!r.passed());
        assert_eq!(r.violations, 1);
        assert_eq!(r.points, 3);
        assert_eq!(r.checks, 5);
    }

    #[test]
    fn nan_margin_is_a_violation() {
        let mut r = SweepReport::new("t", json!({}), 1e-9);
        r.record(&[f64::NAN], || json!(0));
        assert_eq!(r.violations, 1);
    }

    #[test]
    fn merge_is_order_independent_in_totals() {
        let mk = |m: f64| {
            let mut r = SweepReport::new("t", json!({}), 0.0);
            r.record(&[m], || json!(m));
            r
        };
        let a = mk(0.3).merge(mk(-0.1)).merge(mk(0.2));
        let b = mk(0.3).merge(mk(-0.1).merge(mk(0.2)));
        assert_eq!(a, b);
        assert_eq!(a.worst_margin, -0.1);
        assert_eq!(a.violations, 1);
    }
}
