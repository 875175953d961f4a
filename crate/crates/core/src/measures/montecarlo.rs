use rand::RngCore;
use rayon::prelude::*;

use super::{MeasureError, MeasureReport, Method, TieBreak};
use crate::distributions::Distribution;
use crate::numerics::Seed;

pub const MIN_MC_SAMPLES: usize = 1000;
const CHUNKS: usize = 64;

/// A price rule that can be sampled.
pub trait PriceDraw: Sync {
    fn draw(&self, rng: &mut dyn RngCore) -> f64;

    fn fixed_price(&self) -> Option<f64> {
        None
    }
}

impl PriceDraw for f64 {
    fn draw(&self, _: &mut dyn RngCore) -> f64 {
        *self
    }

    fn fixed_price(&self) -> Option<f64> {
        Some(*self)
    }
}

/// Price drawn from a distribution.
pub struct RandomPrice<'a>(pub &'a dyn Distribution);

impl PriceDraw for RandomPrice<'_> {
    fn draw(&self, rng: &mut dyn RngCore) -> f64 {
        self.0.sample(rng)
    }
}

/// Posts the seller's `g`-quantile for a level `g` drawn from `levels`.
pub struct QuantileDraw<'a> {
    pub seller: &'a dyn Distribution,
    pub levels: &'a dyn Distribution,
}

impl PriceDraw for QuantileDraw<'_> {
    fn draw(&self, rng: &mut dyn RngCore) -> f64 {
        self.seller.quantile(self.levels.sample(rng))
    }
}

const FIELDS: usize = 5;

#[derive(Clone, Copy, Default)]
struct Moments {
    sum: [f64; FIELDS],
    sq: [f64; FIELDS],
}

impl Moments {
    fn add(&mut self, values: [f64; FIELDS]) {
        for (i, v) in values.into_iter().enumerate() {
            self.sum[i] += v;
            self.sq[i] += v * v;
        }
    }

    fn merge(mut self, other: &Moments) -> Moments {
        for i in 0..FIELDS {
            self.sum[i] += other.sum[i];
            self.sq[i] += other.sq[i];
        }
        self
    }

    fn mean_and_stderr(&self, i: usize, n: f64) -> (f64, f64) {
        let mean = self.sum[i] / n;
        let var = ((self.sq[i] - self.sum[i] * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }
}

/// Monte Carlo estimate of every functional from `n` independent draws of
/// `(S, B, p)`. The sample is split into a fixed number of chunks with
/// seeds derived from `seed`, so the result does not depend on thread count.
pub fn mc_oracle(
    seller: &dyn Distribution,
    buyer: &dyn Distribution,
    price: &dyn PriceDraw,
    tie: TieBreak,
    n: usize,
    seed: Seed,
) -> Result<MeasureReport, MeasureError> {
    if n < MIN_MC_SAMPLES {
        return Err(MeasureError::TooFewSamples { n, min: MIN_MC_SAMPLES });
    }
    let chunks: Vec<Moments> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let count = n / CHUNKS + usize::from(c < n % CHUNKS);
            let mut rng = seed.split(c as u64).rng();
            let mut m = Moments::default();
            for _ in 0..count {
                let s = seller.sample(&mut rng);
                let b = buyer.sample(&mut rng);
                let p = price.draw(&mut rng);
                let gain = tie.trade_weight(s, b, p) * (b - s);
                m.add([s, (b - s).max(0.0), s.max(b), gain, s + gain]);
            }
            m
        })
        .collect();
    let total = chunks.iter().fold(Moments::default(), |acc, m| acc.merge(m));
    let nf = n as f64;
    let (mean_s, se_mean) = total.mean_and_stderr(0, nf);
    let (opt_gft, se_opt_gft) = total.mean_and_stderr(1, nf);
    let (opt_w, se_opt_w) = total.mean_and_stderr(2, nf);
    let (gft, se_gft) = total.mean_and_stderr(3, nf);
    let (w, se_w) = total.mean_and_stderr(4, nf);
    let mut report =
        MeasureReport::new(mean_s, opt_gft, opt_w, gft, w, Method::MonteCarlo, tie).with_price(price.fixed_price());
    report.mc_stderr = Some(se_w);
    report.mc_stderr_mean_s = Some(se_mean);
    report.mc_stderr_opt_gft = Some(se_opt_gft);
    report.mc_stderr_opt_w = Some(se_opt_w);
    report.mc_stderr_gft = Some(se_gft);
    Ok(report)
}
