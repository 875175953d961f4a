use std::collections::BTreeMap;
use std::fs;

use fixprice_core::game::{expected_payoff, simulate_game, GAME_VALUE};
use fixprice_core::measures::opt_gft;
use fixprice_core::measures::{asym_gft, asym_opt_w, gft, mc_oracle, opt_w, QuantileDraw, RandomPrice};
use fixprice_core::mechanisms::{evaluate, hybrid_asym_price, sample_price_expected_gft, HYBRID_GUARANTEE};
use fixprice_core::worstcase::{minimax_scan, minimizing_sequence, power_family_ratio, reduced_scan, MEAN_PRICE_RATIO};
use fixprice_core::{
    Dist, DistSpec, Distribution, GameConfig, MeasureReport, Mechanism, QuadratureConfig, Seed, TieBreak,
};
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;
use crate::output::{num, opt_num, Format, Output, RunManifest};

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Context {
    pub seed: Seed,
    pub cfg: QuadratureConfig,
    pub format: Format,
}

impl Context {
    fn output(&self, command: &str, inputs: BTreeMap<String, Value>, result: Value) -> Output {
        Output {
            manifest: RunManifest {
                command: command.to_string(),
                inputs,
                seed: self.seed,
                cfg: self.cfg,
                output_format: self.format,
            },
            result,
            headers: Vec::new(),
            rows: Vec::new(),
            notes: Vec::new(),
            transpose: false,
            exit_code: 0,
        }
    }
}

/// Reads a spec argument: inline JSON if it starts with `{`, otherwise a file path.
pub fn read_spec(flag: &str, arg: &str) -> Result<String, CliError> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        fs::read_to_string(arg).map_err(|source| CliError::Io {
            context: format!("{flag}: reading {arg}"),
            source,
        })
    }
}

fn parse_dist(flag: &str, arg: &str, cfg: &QuadratureConfig) -> Result<Dist, CliError> {
    let text = read_spec(flag, arg)?;
    let spec = DistSpec::from_json(&text).map_err(|e| CliError::spec(flag, e))?;
    let violations = spec.validate(cfg);
    if !violations.is_empty() {
        let listed: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(CliError::input(format!(
            "{flag}: invalid distribution: {}",
            listed.join("; ")
        )));
    }
    Ok(spec.build()?)
}

fn parse_mechanism(arg: &str) -> Result<Mechanism, CliError> {
    let text = read_spec("--mech", arg)?;
    Mechanism::from_json(&text).map_err(|e| CliError::spec("--mech", e))
}

fn json_of<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("value serializes")
}

fn label<T: Serialize>(value: &T) -> String {
    match json_of(value) {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

const REPORT_HEADERS: [&str; 13] = [
    "mean_s",
    "opt_gft",
    "opt_w",
    "gft_at_p",
    "w_at_p",
    "ratio_gft",
    "ratio_w",
    "method",
    "tie_break",
    "degenerate",
    "price",
    "mc_stderr",
    "mc_stderr_gft",
];

fn report_row(r: &MeasureReport) -> Vec<String> {
    vec![
        num(r.mean_s),
        num(r.opt_gft),
        num(r.opt_w),
        num(r.gft_at_p),
        num(r.w_at_p),
        num(r.ratio_gft),
        num(r.ratio_w),
        label(&r.method),
        label(&r.tie_break),
        r.degenerate.to_string(),
        opt_num(r.price),
        opt_num(r.mc_stderr),
        opt_num(r.mc_stderr_gft),
    ]
}

pub struct EvaluateArgs {
    pub dist: Option<String>,
    pub sequence: Option<usize>,
    pub buyer: Option<String>,
    pub mech: String,
    pub mc_samples: Option<usize>,
}

pub fn cmd_evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<Output, CliError> {
    let seller: Dist = match (&args.dist, args.sequence) {
        (Some(arg), None) => parse_dist("--dist", arg, &ctx.cfg)?,
        (None, Some(n)) => minimizing_sequence(n)?.into(),
        _ => return Err(CliError::input("exactly one of --dist and --sequence is required")),
    };
    let buyer = args
        .buyer
        .as_deref()
        .map(|b| parse_dist("--buyer", b, &ctx.cfg))
        .transpose()?;
    let mech = parse_mechanism(&args.mech)?;
    let report = evaluate(&mech, &seller, buyer.as_ref().map(|b| b as &dyn Distribution), &ctx.cfg)?;

    let mut inputs = BTreeMap::new();
    inputs.insert("dist".to_string(), json_of(&seller));
    if let Some(b) = &buyer {
        inputs.insert("buyer".to_string(), json_of(b));
    }
    inputs.insert("mech".to_string(), json_of(&mech));

    let mut reports = vec![report.clone()];
    let mut result = serde_json::json!({ "report": report });
    if let Some(n) = args.mc_samples {
        inputs.insert("mc_samples".to_string(), Value::from(n));
        let mc = monte_carlo(&mech, &seller, buyer.as_ref(), report.price, n, ctx.seed)?;
        result["monte_carlo"] = json_of(&mc);
        reports.push(mc);
    }

    let mut out = ctx.output("evaluate", inputs, result);
    out.headers = REPORT_HEADERS.to_vec();
    out.rows = reports.iter().map(report_row).collect();
    out.transpose = true;
    Ok(out)
}

/// Monte Carlo cross-check of a mechanism, drawing prices the way it posts them.
fn monte_carlo(
    mech: &Mechanism,
    seller: &Dist,
    buyer: Option<&Dist>,
    price: Option<f64>,
    n: usize,
    seed: Seed,
) -> Result<MeasureReport, CliError> {
    let symmetric = buyer.is_none();
    let buyer = buyer.unwrap_or(seller);
    let report = match (mech, price) {
        (Mechanism::Sample, _) => {
            let tie = if symmetric {
                TieBreak::Fair
            } else {
                TieBreak::SellerWeak
            };
            mc_oracle(seller, buyer, &RandomPrice(seller), tie, n, seed)?
        }
        (Mechanism::Quantile { g }, _) => {
            let draw = QuantileDraw { seller, levels: g };
            mc_oracle(seller, buyer, &draw, TieBreak::SellerWeak, n, seed)?
        }
        (_, Some(p)) => {
            let tie = if symmetric {
                TieBreak::BuyerWeak
            } else {
                TieBreak::SellerWeak
            };
            mc_oracle(seller, buyer, &p, tie, n, seed)?
        }
        _ => {
            return Err(CliError::input(format!(
                "no Monte Carlo price draw for the {} mechanism",
                mech.name()
            )))
        }
    };
    Ok(report)
}

pub struct SweepArgs {
    pub dist: String,
    pub buyer: Option<String>,
    pub points: usize,
    pub prices: Option<Vec<f64>>,
}

/// Evenly spaced prices over the support (truncated in the tail), plus every atom.
fn price_grid(dist: &dyn Distribution, args: &SweepArgs, cfg: &QuadratureConfig) -> Result<Vec<f64>, CliError> {
    let mut grid = match &args.prices {
        Some(list) if list.is_empty() => return Err(CliError::input("price grid is empty")),
        Some(list) => list.clone(),
        None if args.points == 0 => return Err(CliError::input("price grid is empty")),
        None => {
            let lo = dist.support_lo();
            let hi = dist.integration_hi(cfg);
            let n = args.points;
            if n == 1 {
                vec![lo]
            } else {
                (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
            }
        }
    };
    if let Some(bad) = grid.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(CliError::input(format!(
            "prices must be finite and nonnegative, got {bad}"
        )));
    }
    grid.extend(dist.atoms().into_iter().map(|(x, _)| x));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

#[derive(Debug, Clone, Copy, Serialize)]
struct SweepRow {
    p: f64,
    gft: f64,
    w: f64,
    ratio: f64,
}

pub fn cmd_sweep(ctx: &Context, args: &SweepArgs) -> Result<Output, CliError> {
    let seller = parse_dist("--dist", &args.dist, &ctx.cfg)?;
    let buyer = args
        .buyer
        .as_deref()
        .map(|b| parse_dist("--buyer", b, &ctx.cfg))
        .transpose()?;
    let grid = price_grid(&seller, args, &ctx.cfg)?;
    let mean = seller.mean();
    let first_best = match &buyer {
        None => opt_w(&seller, &ctx.cfg)?,
        Some(b) => asym_opt_w(&seller, b, &ctx.cfg)?,
    };
    let rows = grid
        .iter()
        .map(|&p| {
            let g = match &buyer {
                None => gft(p, &seller)?,
                Some(b) => asym_gft(p, &seller, b, TieBreak::SellerWeak)?,
            };
            let w = mean + g;
            Ok(SweepRow {
                p,
                gft: g,
                w,
                ratio: if first_best > 0.0 { w / first_best } else { 1.0 },
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let best = rows
        .iter()
        .fold(rows[0], |best, r| if r.w > best.w { *r } else { best });

    let mut inputs = BTreeMap::new();
    inputs.insert("dist".to_string(), json_of(&seller));
    if let Some(b) = &buyer {
        inputs.insert("buyer".to_string(), json_of(b));
    }
    inputs.insert("grid".to_string(), json_of(&grid));
    let result = serde_json::json!({ "opt_w": first_best, "best": best, "rows": rows });
    let mut out = ctx.output("sweep", inputs, result);
    out.headers = vec!["p", "gft", "w", "ratio"];
    out.rows = rows
        .iter()
        .map(|r| vec![num(r.p), num(r.gft), num(r.w), num(r.ratio)])
        .collect();
    out.notes.push(format!(
        "opt_w {}; best price {} with ratio {}",
        num(first_best),
        num(best.p),
        num(best.ratio)
    ));
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
struct TableCell {
    setting: &'static str,
    objective: &'static str,
    bound: &'static str,
    value: f64,
    /// Acceptance criterion that certifies the cell, or "external".
    provenance: &'static str,
    /// Numerical evidence computed for this run.
    check: Option<String>,
}

fn verified(
    setting: &'static str,
    objective: &'static str,
    bound: &'static str,
    value: f64,
    provenance: &'static str,
    check: String,
) -> TableCell {
    TableCell {
        setting,
        objective,
        bound,
        value,
        provenance,
        check: Some(check),
    }
}

fn external(setting: &'static str, objective: &'static str, bound: &'static str, value: f64) -> TableCell {
    TableCell {
        setting,
        objective,
        bound,
        value,
        provenance: "external",
        check: None,
    }
}

/// Lowest hybrid ratio over near-separated instances: seller half at 0 and
/// half at `c`, buyer at `c` with probability `1 - 1/n` and at 1 otherwise.
fn hybrid_near_separated(cfg: &QuadratureConfig) -> Result<f64, CliError> {
    let mut worst = f64::INFINITY;
    for n in 2..=64 {
        let n = n as f64;
        let c = 1.0 / n - 1.0 / (n * n);
        let s = Dist::discrete([(0.0, 0.5), (c, 0.5)])?;
        let b = Dist::discrete([(c, 1.0 - 1.0 / n), (1.0, 1.0 / n)])?;
        worst = worst.min(hybrid_asym_price(&s, &b, cfg)?.ratio());
    }
    Ok(worst)
}

pub fn cmd_table1(ctx: &Context) -> Result<Output, CliError> {
    let cfg = &ctx.cfg;
    let (argmin_y, scan_value) = reduced_scan(10_000)?;
    let uniform = Dist::uniform(0.0, 1.0)?;
    let half = sample_price_expected_gft(&uniform, cfg)? / opt_gft(&uniform, cfg)?;
    let power = power_family_ratio(1e-4, cfg)?;
    let hybrid = hybrid_near_separated(cfg)?;

    const SYM_FULL: &str = "symmetric, full knowledge";
    const SYM_ONE: &str = "symmetric, one sample";
    const ASYM_FULL: &str = "asymmetric, full knowledge";
    const ASYM_ONE: &str = "asymmetric, one sample";
    let cells = vec![
        verified(
            SYM_FULL,
            "welfare",
            "(2+sqrt 2)/4",
            MEAN_PRICE_RATIO,
            "criterion 4: minimax constant",
            format!("scan minimum {} at y {}", num(scan_value), num(argmin_y)),
        ),
        verified(
            SYM_FULL,
            "gft",
            "1/2",
            0.5,
            "criterion 1: exact-half law",
            format!("sample price on U(0,1) earns {} of OPT-GFT", num(half)),
        ),
        verified(
            SYM_ONE,
            "welfare",
            "3/4",
            0.75,
            "criterion 2: sample-price welfare 3/4",
            format!("power family r=1e-4 ratio {}", num(power.direct)),
        ),
        verified(
            SYM_ONE,
            "gft",
            "1/2",
            0.5,
            "criterion 1: exact-half law",
            format!("sample price on U(0,1) earns {} of OPT-GFT", num(half)),
        ),
        verified(
            ASYM_FULL,
            "welfare",
            "1-1/e+1e-4",
            HYBRID_GUARANTEE,
            "criterion 7: hybrid guarantee",
            format!(
                "min hybrid ratio {} on near-separated pairs; quantile rules cap at {}",
                num(hybrid),
                num(expected_payoff(0.5)?)
            ),
        ),
        external(ASYM_FULL, "gft", "0", 0.0),
        external(ASYM_ONE, "welfare", "1/2", 0.5),
        external(ASYM_ONE, "gft", "0", 0.0),
    ];

    let mut out = ctx.output("table1", BTreeMap::new(), serde_json::json!({ "cells": cells }));
    out.headers = vec!["setting", "welfare", "welfare_provenance", "gft", "gft_provenance"];
    for pair in cells.chunks(2) {
        out.rows.push(vec![
            pair[0].setting.to_string(),
            pair[0].bound.to_string(),
            pair[0].provenance.to_string(),
            pair[1].bound.to_string(),
            pair[1].provenance.to_string(),
        ]);
    }
    for c in cells.iter().filter(|c| c.check.is_some()) {
        out.notes.push(format!(
            "check ({}, {}): {}",
            c.setting,
            c.objective,
            c.check.as_deref().unwrap_or_default()
        ));
    }
    Ok(out)
}

pub fn cmd_minimax(ctx: &Context, resolution: usize) -> Result<Output, CliError> {
    let scan = minimax_scan(resolution)?;
    let mut inputs = BTreeMap::new();
    inputs.insert("resolution".to_string(), Value::from(resolution));
    let mut out = ctx.output("minimax", inputs, json_of(&scan));
    out.headers = vec![
        "best_value",
        "argmin_mu",
        "argmin_x",
        "argmin_gamma",
        "argmin_y",
        "reduced_value",
        "reduced_argmin_y",
        "box_value",
        "grid_resolution",
    ];
    out.rows.push(vec![
        num(scan.best_value),
        num(scan.argmin_mu),
        num(scan.argmin_x),
        num(scan.argmin_gamma),
        num(scan.argmin_y),
        num(scan.reduced_value),
        num(scan.reduced_argmin_y),
        num(scan.box_value),
        scan.grid_resolution.to_string(),
    ]);
    out.transpose = true;
    out.notes
        .push(format!("target (2+sqrt 2)/4 = {}", num(MEAN_PRICE_RATIO)));
    Ok(out)
}

pub struct GameArgs {
    pub epsilon: f64,
    pub x_grid: usize,
    pub mc_samples: usize,
    pub closed_form: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct ClosedFormRow {
    x: f64,
    expected_payoff: f64,
}

pub fn cmd_game(ctx: &Context, args: &GameArgs) -> Result<Output, CliError> {
    let game = GameConfig {
        epsilon: args.epsilon,
        x_grid: args.x_grid,
        mc_samples: args.mc_samples,
        seed: ctx.seed,
    };
    game.validate()?;
    let mut inputs = BTreeMap::new();
    inputs.insert("game".to_string(), json_of(&game));
    inputs.insert("closed_form".to_string(), Value::from(args.closed_form));

    if args.closed_form {
        let n = game.x_grid;
        let rows = (0..=n)
            .map(|k| {
                let x = if k == n { 1.0 } else { k as f64 / n as f64 };
                Ok(ClosedFormRow {
                    x,
                    expected_payoff: expected_payoff(x)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let best = rows.iter().fold(
            rows[0],
            |b, r| if r.expected_payoff > b.expected_payoff { *r } else { b },
        );
        let result = serde_json::json!({
            "sup_value": best.expected_payoff,
            "argmax_x": best.x,
            "game_value": GAME_VALUE,
            "rows": rows,
        });
        let mut out = ctx.output("game", inputs, result);
        out.headers = vec!["x", "expected_payoff"];
        out.rows = rows.iter().map(|r| vec![num(r.x), num(r.expected_payoff)]).collect();
        out.notes.push(format!(
            "sup {} at x {}; 1-1/e = {}",
            num(best.expected_payoff),
            num(best.x),
            num(GAME_VALUE)
        ));
        return Ok(out);
    }

    let outcome = simulate_game(&game, &ctx.cfg)?;
    let mut out = ctx.output("game", inputs, json_of(&outcome));
    out.headers = vec!["x", "expected_payoff", "simulated", "gap"];
    out.rows = outcome
        .rows
        .iter()
        .map(|r| vec![num(r.x), num(r.expected_payoff), num(r.simulated), num(r.gap)])
        .collect();
    out.notes.push(format!(
        "sup {} at x {}; plateau spread {}; 1-1/e = {}",
        num(outcome.sup_value),
        num(outcome.argmax_x),
        num(outcome.plateau_spread),
        num(GAME_VALUE)
    ));
    if let (Some(v), Some(se)) = (outcome.mc_value, outcome.mc_stderr) {
        out.notes
            .push(format!("Monte Carlo at the argmax: {} +- {}", num(v), num(se)));
    }
    Ok(out)
}

pub struct ValidateArgs {
    pub dist: Option<String>,
    pub buyer: Option<String>,
    pub mech: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct Finding {
    input: &'static str,
    path: String,
    message: String,
}

/// Checks every given spec and lists all violations. Exits with the input
/// error code when any are found.
pub fn cmd_validate(ctx: &Context, args: &ValidateArgs) -> Result<Output, CliError> {
    let mut findings = Vec::new();
    let mut inputs = BTreeMap::new();
    for (flag, arg) in [("--dist", &args.dist), ("--buyer", &args.buyer)] {
        let Some(arg) = arg else { continue };
        let text = read_spec(flag, arg)?;
        match DistSpec::from_json(&text) {
            Err(e) => findings.push(Finding {
                input: flag,
                path: format!("line {} column {}", e.line(), e.column()),
                message: e.to_string(),
            }),
            Ok(spec) => {
                inputs.insert(flag.trim_start_matches('-').to_string(), json_of(&spec));
                findings.extend(spec.validate(&ctx.cfg).into_iter().map(|v| Finding {
                    input: flag,
                    path: v.path.clone(),
                    message: v.message.clone(),
                }));
            }
        }
    }
    if let Some(arg) = &args.mech {
        match Mechanism::from_json(&read_spec("--mech", arg)?) {
            Err(e) => findings.push(Finding {
                input: "--mech",
                path: format!("line {} column {}", e.line(), e.column()),
                message: e.to_string(),
            }),
            Ok(mech) => {
                inputs.insert("mech".to_string(), json_of(&mech));
            }
        }
    }
    if inputs.is_empty() && findings.is_empty() {
        return Err(CliError::input("nothing to validate: pass --dist, --buyer or --mech"));
    }

    let valid = findings.is_empty();
    let mut out = ctx.output(
        "validate",
        inputs,
        serde_json::json!({ "valid": valid, "violations": findings }),
    );
    out.headers = vec!["input", "path", "message"];
    out.rows = findings
        .iter()
        .map(|f| vec![f.input.to_string(), f.path.clone(), f.message.clone()])
        .collect();
    out.notes.push(if valid {
        "valid".to_string()
    } else {
        format!("{} violation(s)", findings.len())
    });
    if !valid {
        out.exit_code = crate::error::EXIT_INPUT;
    }
    Ok(out)
}
