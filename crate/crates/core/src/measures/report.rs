use serde::{Deserialize, Serialize};

use super::TieBreak;

/// How the numbers in a [`MeasureReport`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactDiscrete,
    Quadrature,
    MonteCarlo,
}

/// First-best and achieved values for one evaluation.
///
/// Fields are flat so a report is also a CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub mean_s: f64,
    pub opt_gft: f64,
    pub opt_w: f64,
    pub gft_at_p: f64,
    pub w_at_p: f64,
    pub ratio_gft: f64,
    pub ratio_w: f64,
    pub method: Method,
    pub tie_break: TieBreak,
    /// Set when the first-best gains from trade vanish, so `ratio_gft` is 1 by convention.
    pub degenerate: bool,
    /// The posted price, when the mechanism is deterministic.
    pub price: Option<f64>,
    /// Standard error of `w_at_p` (Monte Carlo only).
    pub mc_stderr: Option<f64>,
    pub mc_stderr_mean_s: Option<f64>,
    pub mc_stderr_opt_gft: Option<f64>,
    pub mc_stderr_opt_w: Option<f64>,
    pub mc_stderr_gft: Option<f64>,
}

impl MeasureReport {
    pub fn new(
        mean_s: f64,
        opt_gft: f64,
        opt_w: f64,
        gft_at_p: f64,
        w_at_p: f64,
        method: Method,
        tie_break: TieBreak,
    ) -> Self {
        let degenerate = opt_gft <= 1e-14 * opt_w.abs().max(f64::MIN_POSITIVE);
        let ratio_gft = if degenerate { 1.0 } else { gft_at_p / opt_gft };
        let ratio_w = if opt_w > 0.0 { w_at_p / opt_w } else { 1.0 };
        Self {
            mean_s,
            opt_gft,
            opt_w,
            gft_at_p,
            w_at_p,
            ratio_gft,
            ratio_w,
            method,
            tie_break,
            degenerate,
            price: None,
            mc_stderr: None,
            mc_stderr_mean_s: None,
            mc_stderr_opt_gft: None,
            mc_stderr_opt_w: None,
            mc_stderr_gft: None,
        }
    }

    pub fn with_price(mut self, price: Option<f64>) -> Self {
        self.price = price;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
