//! Plain-data verification reports shared by the model checkers.

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckReport {
    pub checks: Vec<CheckItem>,
}

impl CheckReport {
    pub fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckItem {
            name: name.into(),
            passed,
            margin: None,
            detail: detail.into(),
        });
    }

    pub fn push_margin(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        margin: f64,
        detail: impl Into<String>,
    ) {
        self.checks.push(CheckItem {
            name: name.into(),
            passed,
            margin: Some(margin),
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckItem> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.checks.extend(other.checks);
    }
}

/// Worst-case cone margins over all sampled derivatives.
///
/// Aperture margins are nonnegative when the cone maps strictly inside
/// itself; growth values must reach 1 (the factor `1/mu` scaled by `mu`).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConeReport {
    pub mu: f64,
    pub mu_h: f64,
    pub mu_v: f64,
    pub unstable_aperture_margin: f64,
    pub unstable_growth: f64,
    pub stable_aperture_margin: f64,
    pub stable_growth: f64,
    pub passed: bool,
}
