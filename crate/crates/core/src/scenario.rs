//! Scenario documents and report rendering.
//!
//! A scenario bundles a [`MarketInstance`] with an optional bid-noise
//! model, an optional candidate profile (scaling factors, raw bids,
//! tie-break shares), and numeric options, all in one JSON document.
//! Rationals travel as `"num/den"` strings so load/store round trips are
//! exact. [`execute`] runs one named operation against a scenario and
//! returns a JSON report plus plot-ready CSV tables; it is the single
//! entry point shared by the command-line binary and the C interface.

use std::collections::BTreeMap;
use std::path::Path;

use itertools::Itertools;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::auction::{competing_prices, run_auction, utility, BidProfile, Outcome, TieBreak};
use crate::benchmarks::{
    check_bounds, optimal_transferable_welfare, sequential_posted_revenue, transferable_welfare,
    BoundsReport,
};
use crate::equilibrium::{
    enumerate_equilibria_grid, verify_equilibrium, verify_under_gamma, EquilibriumCertificate,
    GammaVerdict,
};
use crate::equilibrium::Status;
use crate::frontier::{build_frontier, roi_best_response, BestResponse};
use crate::market::{CostCurve, MarketInstance};
use crate::rational::{format_rat, parse_rat, ExtRat, Rat};
use crate::solver::{solve, SolveOptions, SolveOutcome, SolveReport};
use crate::stochastic::{expected_outcome, ExpectedOutcome, GammaModel, GammaSpec};
use crate::{Error, Result};

// === JSON document shape ===

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    buyers: Vec<BuyerDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reserves: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<GammaDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alphas: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bids: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tiebreak: Option<BTreeMap<String, Vec<(usize, String)>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    options: Option<OptionsDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuyerDoc {
    values: Vec<String>,
    cost_curve: CurveDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveDoc {
    /// `[breakpoint payment, slope]` pairs; the first breakpoint must be 0.
    segments: Vec<(String, String)>,
    /// Rational string, or `"inf"` for no hard budget.
    #[serde(default = "unbounded")]
    budget: String,
}

fn unbounded() -> String {
    "inf".to_string()
}

/// One modifier distribution: `{"point": "1"}` or `{"uniform": ["1/2", "1"]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum GammaSpecDoc {
    Point(String),
    Uniform(String, String),
}

/// Either one distribution broadcast to every (buyer, good) pair, or a
/// full matrix with one entry per pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum GammaDoc {
    Broadcast(GammaSpecDoc),
    Matrix(Vec<Vec<GammaSpecDoc>>),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    deviation_grid: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta_schedule: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    use_perturbed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dynamics_rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    round_max_denominator: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    round_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tie_grid: Option<u32>,
}

// === Domain types ===

/// Numeric knobs with defaults; every field can be set in the scenario
/// file under `options` and overridden by command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOptions {
    pub seed: u64,
    /// Monte-Carlo draws (smoothing levels, expectation estimates).
    pub samples: u64,
    pub workers: usize,
    /// Resolution of the deviation scan in noisy verification.
    pub deviation_grid: u32,
    pub delta_schedule: Vec<Rat>,
    pub use_perturbed: bool,
    pub dynamics_rounds: usize,
    pub round_max_denominator: u64,
    pub round_tolerance: f64,
    /// Scaling-factor grid resolution for enumeration.
    pub grid: u32,
    /// Tie-share grid resolution for enumeration.
    pub tie_grid: u32,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        let solve = SolveOptions::default();
        ScenarioOptions {
            seed: solve.seed,
            samples: solve.samples,
            workers: 1,
            deviation_grid: 16,
            delta_schedule: solve.delta_schedule,
            use_perturbed: solve.use_perturbed,
            dynamics_rounds: solve.dynamics_rounds,
            round_max_denominator: solve.round_max_denominator,
            round_tolerance: solve.round_tolerance,
            grid: 16,
            tie_grid: 8,
        }
    }
}

impl ScenarioOptions {
    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            seed: self.seed,
            samples: self.samples,
            delta_schedule: self.delta_schedule.clone(),
            use_perturbed: self.use_perturbed,
            dynamics_rounds: self.dynamics_rounds,
            round_max_denominator: self.round_max_denominator,
            round_tolerance: self.round_tolerance,
            grid_fallback: Some((self.grid, self.tie_grid)),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("options.samples must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("options.workers must be at least 1"));
        }
        if self.deviation_grid < 2 || self.grid < 2 {
            return Err(Error::invalid("grid resolutions must be at least 2"));
        }
        if self.tie_grid == 0 {
            return Err(Error::invalid("options.tie_grid must be at least 1"));
        }
        if self.dynamics_rounds == 0 {
            return Err(Error::invalid("options.dynamics_rounds must be at least 1"));
        }
        if self.round_max_denominator == 0 {
            return Err(Error::invalid(
                "options.round_max_denominator must be at least 1",
            ));
        }
        if !(self.round_tolerance > 0.0) {
            return Err(Error::invalid("options.round_tolerance must be positive"));
        }
        for d in &self.delta_schedule {
            if !(d > &Rat::zero() && d < &Rat::one()) {
                return Err(Error::invalid(format!(
                    "smoothing level {} must lie strictly between 0 and 1",
                    format_rat(d)
                )));
            }
        }
        Ok(())
    }
}

/// A parsed, validated scenario: the instance plus everything an
/// operation might need.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub instance: MarketInstance,
    pub gamma: GammaModel,
    pub alphas: Option<Vec<Rat>>,
    pub bids: Option<Vec<Vec<Rat>>>,
    pub tiebreak: TieBreak,
    pub options: ScenarioOptions,
}

// === Parsing ===

fn at(path: &str, e: Error) -> Error {
    let tag = |m: String| format!("{path}: {m}");
    match e {
        Error::InvalidInstance(m) => Error::InvalidInstance(tag(m)),
        Error::Domain(m) => Error::Domain(tag(m)),
        Error::TieBreak(m) => Error::TieBreak(tag(m)),
        Error::SizeGuard(m) => Error::SizeGuard(tag(m)),
        Error::Parse(m) => Error::Parse(tag(m)),
        Error::LinearProgram(m) => Error::LinearProgram(tag(m)),
    }
}

fn rat_at(s: &str, path: &str) -> Result<Rat> {
    parse_rat(s).map_err(|e| at(path, e))
}

fn gamma_spec(doc: &GammaSpecDoc, path: &str) -> Result<GammaSpec> {
    Ok(match doc {
        GammaSpecDoc::Point(p) => GammaSpec::Point(rat_at(p, path)?),
        GammaSpecDoc::Uniform(a, b) => {
            GammaSpec::Uniform(rat_at(a, path)?, rat_at(b, path)?)
        }
    })
}

fn gamma_spec_doc(spec: &GammaSpec) -> GammaSpecDoc {
    match spec {
        GammaSpec::Point(p) => GammaSpecDoc::Point(format_rat(p)),
        GammaSpec::Uniform(a, b) => GammaSpecDoc::Uniform(format_rat(a), format_rat(b)),
    }
}

fn scenario_from_doc(doc: &ScenarioDoc) -> Result<Scenario> {
    if doc.buyers.is_empty() {
        return Err(Error::invalid("scenario needs at least one buyer"));
    }
    let n = doc.buyers.len();
    let m = doc.buyers[0].values.len();
    if m == 0 {
        return Err(Error::invalid("buyers[0].values: needs at least one good"));
    }

    let mut values = Vec::with_capacity(n);
    let mut curves = Vec::with_capacity(n);
    for (i, buyer) in doc.buyers.iter().enumerate() {
        let mut row = Vec::with_capacity(buyer.values.len());
        for (j, v) in buyer.values.iter().enumerate() {
            row.push(rat_at(v, &format!("buyers[{i}].values[{j}]"))?);
        }
        values.push(row);

        let curve_path = format!("buyers[{i}].cost_curve");
        let mut segments = Vec::with_capacity(buyer.cost_curve.segments.len());
        for (k, (p, s)) in buyer.cost_curve.segments.iter().enumerate() {
            segments.push((
                rat_at(p, &format!("{curve_path}.segments[{k}][0]"))?,
                rat_at(s, &format!("{curve_path}.segments[{k}][1]"))?,
            ));
        }
        let budget = match buyer.cost_curve.budget.trim() {
            "inf" => None,
            other => Some(rat_at(other, &format!("{curve_path}.budget"))?),
        };
        curves.push(CostCurve::new(segments, budget).map_err(|e| at(&curve_path, e))?);
    }

    let reserves = match &doc.reserves {
        None => vec![Rat::zero(); m],
        Some(rs) => {
            let mut out = Vec::with_capacity(rs.len());
            for (j, r) in rs.iter().enumerate() {
                out.push(rat_at(r, &format!("reserves[{j}]"))?);
            }
            out
        }
    };

    let instance = MarketInstance {
        values,
        curves,
        reserves,
    };
    instance.ensure_valid()?;

    let gamma = match &doc.gamma {
        None => GammaModel::point_mass_one(n, m),
        Some(GammaDoc::Broadcast(spec)) => {
            GammaModel::broadcast(gamma_spec(spec, "gamma")?, n, m)
        }
        Some(GammaDoc::Matrix(rows)) => {
            let mut specs = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                let mut out = Vec::with_capacity(row.len());
                for (j, spec) in row.iter().enumerate() {
                    out.push(gamma_spec(spec, &format!("gamma[{i}][{j}]"))?);
                }
                specs.push(out);
            }
            GammaModel { specs }
        }
    };
    gamma.validate(n, m).map_err(|e| at("gamma", e))?;

    let alphas = match &doc.alphas {
        None => None,
        Some(rows) => {
            let mut out = Vec::with_capacity(rows.len());
            for (i, a) in rows.iter().enumerate() {
                let a = rat_at(a, &format!("alphas[{i}]"))?;
                if a.is_negative() || a > Rat::one() {
                    return Err(Error::invalid(format!(
                        "alphas[{i}]: {} is outside [0, 1]",
                        format_rat(&a)
                    )));
                }
                out.push(a);
            }
            if out.len() != n {
                return Err(Error::invalid(format!(
                    "alphas: expected {n} entries, got {}",
                    out.len()
                )));
            }
            Some(out)
        }
    };

    let bids = match &doc.bids {
        None => None,
        Some(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != m) {
                return Err(Error::invalid(format!("bids: expected a {n}x{m} matrix")));
            }
            let mut out = Vec::with_capacity(n);
            for (i, row) in rows.iter().enumerate() {
                let mut r = Vec::with_capacity(m);
                for (j, b) in row.iter().enumerate() {
                    let b = rat_at(b, &format!("bids[{i}][{j}]"))?;
                    if b.is_negative() {
                        return Err(Error::invalid(format!("bids[{i}][{j}]: negative bid")));
                    }
                    r.push(b);
                }
                out.push(r);
            }
            Some(out)
        }
    };

    let mut tiebreak = TieBreak::empty();
    if let Some(table) = &doc.tiebreak {
        for (good, entries) in table {
            let path = format!("tiebreak[{good:?}]");
            let j: usize = good
                .parse()
                .map_err(|_| Error::Parse(format!("{path}: good index must be an integer")))?;
            if j >= m {
                return Err(Error::invalid(format!("{path}: good index out of range")));
            }
            let mut parsed = Vec::with_capacity(entries.len());
            for (i, share) in entries {
                if *i >= n {
                    return Err(Error::invalid(format!("{path}: buyer index out of range")));
                }
                let s = rat_at(share, &path)?;
                if s.is_negative() || s > Rat::one() {
                    return Err(Error::invalid(format!("{path}: share outside [0, 1]")));
                }
                parsed.push((*i, s));
            }
            tiebreak.set(j, parsed);
        }
    }

    let mut options = ScenarioOptions::default();
    if let Some(o) = &doc.options {
        if let Some(v) = o.seed {
            options.seed = v;
        }
        if let Some(v) = o.samples {
            options.samples = v;
        }
        if let Some(v) = o.workers {
            options.workers = v;
        }
        if let Some(v) = o.deviation_grid {
            options.deviation_grid = v;
        }
        if let Some(sched) = &o.delta_schedule {
            let mut out = Vec::with_capacity(sched.len());
            for (k, d) in sched.iter().enumerate() {
                out.push(rat_at(d, &format!("options.delta_schedule[{k}]"))?);
            }
            options.delta_schedule = out;
        }
        if let Some(v) = o.use_perturbed {
            options.use_perturbed = v;
        }
        if let Some(v) = o.dynamics_rounds {
            options.dynamics_rounds = v;
        }
        if let Some(v) = o.round_max_denominator {
            options.round_max_denominator = v;
        }
        if let Some(v) = o.round_tolerance {
            options.round_tolerance = v;
        }
        if let Some(v) = o.grid {
            options.grid = v;
        }
        if let Some(v) = o.tie_grid {
            options.tie_grid = v;
        }
    }
    options.validate()?;

    Ok(Scenario {
        instance,
        gamma,
        alphas,
        bids,
        tiebreak,
        options,
    })
}

fn scenario_to_doc(s: &Scenario) -> ScenarioDoc {
    let buyers = s
        .instance
        .values
        .iter()
        .zip(&s.instance.curves)
        .map(|(row, curve)| BuyerDoc {
            values: row.iter().map(format_rat).collect(),
            cost_curve: CurveDoc {
                segments: curve
                    .segments()
                    .iter()
                    .map(|(p, sl)| (format_rat(p), format_rat(sl)))
                    .collect(),
                budget: curve.budget().map_or("inf".to_string(), format_rat),
            },
        })
        .collect();
    let defaults = ScenarioOptions::default();
    ScenarioDoc {
        buyers,
        reserves: Some(s.instance.reserves.iter().map(format_rat).collect()),
        gamma: Some(GammaDoc::Matrix(
            s.gamma
                .specs
                .iter()
                .map(|row| row.iter().map(gamma_spec_doc).collect())
                .collect(),
        )),
        alphas: s
            .alphas
            .as_ref()
            .map(|a| a.iter().map(format_rat).collect()),
        bids: s
            .bids
            .as_ref()
            .map(|b| b.iter().map(|r| r.iter().map(format_rat).collect()).collect()),
        tiebreak: if s.tiebreak.is_empty() {
            None
        } else {
            Some(
                s.tiebreak
                    .shares
                    .iter()
                    .map(|(j, entries)| {
                        (
                            j.to_string(),
                            entries
                                .iter()
                                .map(|(i, share)| (*i, format_rat(share)))
                                .collect(),
                        )
                    })
                    .collect(),
            )
        },
        options: Some(OptionsDoc {
            seed: Some(s.options.seed),
            samples: Some(s.options.samples),
            workers: Some(s.options.workers),
            deviation_grid: Some(s.options.deviation_grid),
            delta_schedule: if s.options.delta_schedule == defaults.delta_schedule {
                None
            } else {
                Some(s.options.delta_schedule.iter().map(format_rat).collect())
            },
            use_perturbed: Some(s.options.use_perturbed),
            dynamics_rounds: Some(s.options.dynamics_rounds),
            round_max_denominator: Some(s.options.round_max_denominator),
            round_tolerance: Some(s.options.round_tolerance),
            grid: Some(s.options.grid),
            tie_grid: Some(s.options.tie_grid),
        }),
    }
}

/// Parses a scenario from JSON text. Syntax errors carry serde's
/// line/column anchor; semantic errors carry the offending field path.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let doc: ScenarioDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    scenario_from_doc(&doc)
}

/// Loads and parses a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| at(&path.display().to_string(), e))
}

/// The fully resolved configuration as a JSON value, suitable for exact
/// replay (defaults filled in, gamma expanded to a matrix).
pub fn scenario_json(s: &Scenario) -> Value {
    serde_json::to_value(scenario_to_doc(s)).expect("scenario document serializes")
}

/// Serializes a scenario back to pretty JSON text.
pub fn scenario_text(s: &Scenario) -> String {
    serde_json::to_string_pretty(&scenario_to_doc(s)).expect("scenario document serializes")
}

// === Report rendering ===

fn rats(xs: &[Rat]) -> Value {
    Value::Array(xs.iter().map(|x| json!(format_rat(x))).collect())
}

fn rat_matrix(rows: &[Vec<Rat>]) -> Value {
    Value::Array(rows.iter().map(|r| rats(r)).collect())
}

fn ext_json(x: &ExtRat) -> Value {
    json!(x.to_string())
}

fn f64_json(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn f64s(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| f64_json(*x)).collect())
}

pub fn tiebreak_json(tb: &TieBreak) -> Value {
    let map: serde_json::Map<String, Value> = tb
        .shares
        .iter()
        .map(|(j, entries)| {
            (
                j.to_string(),
                Value::Array(
                    entries
                        .iter()
                        .map(|(i, s)| json!([i, format_rat(s)]))
                        .collect(),
                ),
            )
        })
        .collect();
    Value::Object(map)
}

pub fn outcome_json(instance: &MarketInstance, outcome: &Outcome) -> Value {
    let utilities: Vec<Value> = (0..instance.n_buyers())
        .map(|i| ext_json(&utility(instance, i, outcome)))
        .collect();
    json!({
        "allocation": rat_matrix(&outcome.allocation.shares),
        "prices": rats(&outcome.prices),
        "payments": rats(&outcome.payments),
        "sold": outcome.sold,
        "ties": outcome.ties.iter()
            .map(|(j, who)| (j.to_string(), json!(who)))
            .collect::<serde_json::Map<_, _>>(),
        "revenue": format_rat(&outcome.revenue),
        "utilities": utilities,
    })
}

pub fn certificate_json(instance: &MarketInstance, cert: &EquilibriumCertificate) -> Value {
    let buyers: Vec<Value> = cert
        .verdicts
        .iter()
        .map(|v| {
            json!({
                "roi_ok": v.roi_ok,
                "nash_ok": v.nash_ok,
                "achieved_utility": ext_json(&v.achieved_utility),
                "best_utility": format_rat(&v.best_utility),
                "best_spend": format_rat(&v.best_spend),
            })
        })
        .collect();
    json!({
        "status": cert.status.as_str(),
        "alphas": rats(&cert.alphas),
        "tiebreak": tiebreak_json(&cert.tiebreak),
        "outcome": outcome_json(instance, &cert.outcome),
        "buyers": buyers,
        "welfare": format_rat(&cert.welfare),
    })
}

pub fn best_response_json(br: &BestResponse) -> Value {
    json!({
        "spend": format_rat(&br.p_star),
        "spend_hi": format_rat(&br.p_star_hi),
        "value": format_rat(&br.value),
        "utility": format_rat(&br.utility),
        "alpha_interval": [format_rat(&br.alpha_lo), format_rat(&br.alpha_hi)],
        "alpha": format_rat(&br.alpha),
        "tie_requirement": br.tie_requirement.iter()
            .map(|(j, s)| json!([j, format_rat(s)]))
            .collect::<Vec<_>>(),
    })
}

pub fn expected_json(est: &ExpectedOutcome) -> Value {
    json!({
        "allocation": est.allocation.iter().map(|r| f64s(r)).collect::<Vec<_>>(),
        "payments": f64s(&est.payments),
        "payment_se": f64s(&est.payment_se),
        "values": f64s(&est.values),
        "value_se": f64s(&est.value_se),
        "samples": est.samples,
        "seed": est.seed,
    })
}

pub fn gamma_verdict_json(v: &GammaVerdict) -> Value {
    json!({
        "status": v.status.as_str(),
        "roi_ok": v.roi_ok,
        "nash_ok": v.nash_ok,
        "expected_utilities": f64s(&v.expected_utilities),
        "deviation_gap": f64s(&v.deviation_gap),
        "expected": expected_json(&v.expected),
    })
}

pub fn bounds_json(report: &BoundsReport) -> Value {
    let w = &report.welfare;
    let r = &report.revenue;
    json!({
        "welfare": {
            "equilibrium": format_rat(&w.equilibrium),
            "optimal": format_rat(&w.optimal),
            "ratio": w.ratio.as_ref().map(format_rat),
            "witness": rat_matrix(&w.witness.shares),
            "applicable": w.applicable,
            "holds": w.holds,
        },
        "revenue": {
            "equilibrium": format_rat(&r.equilibrium),
            "orders": r.rows.iter().map(|row| json!({
                "order": row.order,
                "posted_revenue": format_rat(&row.posted_revenue),
                "ratio": row.ratio.as_ref().map(format_rat),
                "holds": row.holds,
            })).collect::<Vec<_>>(),
            "exhaustive": r.exhaustive,
            "holds": r.holds,
        },
    })
}

fn solve_json(instance: &MarketInstance, report: &SolveReport) -> Value {
    let schedule = report.perturbation.as_ref().map(|run| {
        json!({
            "tiers": run.tiers.iter().map(|t| json!({
                "delta": format_rat(&t.delta),
                "alphas": f64s(&t.alphas),
                "residual": f64_json(t.residual),
                "diff_from_previous": t.diff_from_previous.map(f64_json),
            })).collect::<Vec<_>>(),
            "extrapolated": f64s(&run.extrapolated),
            "rounded": run.rounded.as_ref().map(|r| rats(r)),
        })
    });
    let certificate = match &report.outcome {
        SolveOutcome::Certificate(cert) => certificate_json(instance, cert),
        SolveOutcome::NoCertificate => Value::Null,
    };
    json!({
        "found": matches!(report.outcome, SolveOutcome::Certificate(_)),
        "certificate": certificate,
        "attempts": report.attempts,
        "schedule": schedule,
    })
}

/// Spend/value/cost rows along one buyer's payment-value frontier: every
/// vertex of the frontier and every kink of the cost curve, capped at the
/// hard budget when one binds before the frontier flattens.
pub fn frontier_points(
    instance: &MarketInstance,
    i: usize,
    c: &[Rat],
) -> Result<Vec<(Rat, Rat, Rat)>> {
    let frontier = build_frontier(instance, i, c);
    let curve = &instance.curves[i];
    let mut limit = frontier.pay_end();
    if let Some(b) = curve.budget() {
        if *b < limit {
            limit = b.clone();
        }
    }
    let mut spends: Vec<Rat> = vec![Rat::zero(), limit.clone()];
    for (p, _) in frontier.breakpoints() {
        if p <= limit {
            spends.push(p);
        }
    }
    for (start, _) in curve.segments() {
        if *start <= limit {
            spends.push(start.clone());
        }
    }
    spends.sort();
    spends.dedup();
    spends
        .into_iter()
        .map(|p| {
            let v = frontier.value_at(&p);
            let cost = curve.cost(&p)?;
            Ok((p, v, cost))
        })
        .collect()
}

// === CSV tables ===

fn frontier_csv(points: &[(Rat, Rat, Rat)]) -> String {
    let mut out = String::from("spend,value,cost\n");
    for (p, v, c) in points {
        out.push_str(&format!("{},{},{}\n", format_rat(p), format_rat(v), format_rat(c)));
    }
    out
}

fn prices_csv(instance: &MarketInstance, outcome: &Outcome) -> String {
    let mut out = String::from("good,reserve,price,sold,tied\n");
    for j in 0..instance.n_goods() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            j,
            format_rat(&instance.reserves[j]),
            format_rat(&outcome.prices[j]),
            outcome.sold[j],
            outcome.ties.contains_key(&j),
        ));
    }
    out
}

fn ratio_csv(report: &BoundsReport) -> String {
    let mut out = String::from("bound,benchmark,achieved,ratio,holds\n");
    let w = &report.welfare;
    out.push_str(&format!(
        "welfare,{},{},{},{}\n",
        format_rat(&w.optimal),
        format_rat(&w.equilibrium),
        w.ratio.as_ref().map(format_rat).unwrap_or_default(),
        w.holds,
    ));
    for row in &report.revenue.rows {
        out.push_str(&format!(
            "revenue order {:?},{},{},{},{}\n",
            row.order,
            format_rat(&row.posted_revenue),
            format_rat(&report.revenue.equilibrium),
            row.ratio.as_ref().map(format_rat).unwrap_or_default(),
            row.holds,
        ));
    }
    out
}

fn posted_csv(rows: &[(Vec<usize>, Rat)]) -> String {
    let mut out = String::from("order,revenue\n");
    for (order, revenue) in rows {
        let order_str = order.iter().map(|i| i.to_string()).join(" ");
        out.push_str(&format!("{},{}\n", order_str, format_rat(revenue)));
    }
    out
}

// === Operations ===

/// One executable subcommand against a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operation {
    /// Structural validation report.
    Validate,
    /// Clear the auction at the scenario's bids (or uniform factors).
    Run,
    /// One buyer's payment-value frontier against the others' bids.
    Frontier { buyer: usize },
    /// Find and certify an equilibrium.
    Solve,
    /// Check the scenario's candidate profile exactly (or under noise).
    Verify,
    /// Grid enumeration of equilibrium outcomes.
    Enumerate,
    /// Welfare and revenue guarantees of the candidate profile's outcome.
    Bounds,
    /// Sequential posted-price revenue at the reserve prices.
    PostedPrice,
    /// Monte-Carlo expectation of the cleared market under bid noise.
    Expect,
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Validate => "validate",
            Operation::Run => "run",
            Operation::Frontier { .. } => "frontier",
            Operation::Solve => "solve",
            Operation::Verify => "verify",
            Operation::Enumerate => "enumerate",
            Operation::Bounds => "bounds",
            Operation::PostedPrice => "posted-price",
            Operation::Expect => "expect",
        }
    }
}

/// Result of one operation: the JSON report, whether its assertion-level
/// checks passed, and plot-ready CSV tables as (file stem, text) pairs.
#[derive(Debug, Clone)]
pub struct Execution {
    pub report: Value,
    pub passed: bool,
    pub tables: Vec<(String, String)>,
}

fn bid_rows(scenario: &Scenario) -> Result<Vec<Vec<Rat>>> {
    if let Some(b) = &scenario.bids {
        return Ok(b.clone());
    }
    if let Some(a) = &scenario.alphas {
        return Ok(BidProfile::uniform(&scenario.instance, a)?.bids);
    }
    Err(Error::invalid(
        "this operation needs `bids` or `alphas` in the scenario",
    ))
}

fn require_alphas(scenario: &Scenario) -> Result<&[Rat]> {
    scenario
        .alphas
        .as_deref()
        .ok_or_else(|| Error::invalid("this operation needs `alphas` in the scenario"))
}

/// True when every modifier is the constant 1, i.e. noise never changes
/// the auction and the exact deterministic pipeline applies.
fn unit_gamma(gamma: &GammaModel) -> bool {
    gamma
        .specs
        .iter()
        .flatten()
        .all(|s| matches!(s, GammaSpec::Point(p) if p.is_one()))
}

/// Exact welfare-gap section: the candidate profile's realized allocation
/// (modifiers pinned to 1) against the welfare-optimal allocation.
fn welfare_gap_json(instance: &MarketInstance, alphas: &[Rat], tiebreak: &TieBreak) -> Result<Value> {
    let bids = BidProfile::uniform(instance, alphas)?;
    let outcome = run_auction(instance, &bids, tiebreak)?;
    let equilibrium = transferable_welfare(instance, &outcome.allocation)?;
    let (optimal, _) = optimal_transferable_welfare(instance)?;
    let ratio = if optimal.is_zero() {
        None
    } else {
        Some(&equilibrium / &optimal)
    };
    Ok(json!({
        "equilibrium": format_rat(&equilibrium),
        "optimal": format_rat(&optimal),
        "ratio": ratio.as_ref().map(format_rat),
    }))
}

/// Runs `op` against `scenario`. Every report embeds the operation name,
/// the pass verdict, and the fully resolved configuration for replay.
pub fn execute(scenario: &Scenario, op: &Operation) -> Result<Execution> {
    let instance = &scenario.instance;
    let opts = &scenario.options;
    let mut tables: Vec<(String, String)> = Vec::new();

    let (payload, passed) = match op {
        Operation::Validate => {
            let report = instance.validate();
            let passed = report.is_ok();
            (
                json!({
                    "valid": passed,
                    "errors": report.errors,
                    "warnings": report.warnings,
                    "buyers": instance.n_buyers(),
                    "goods": instance.n_goods(),
                }),
                passed,
            )
        }
        Operation::Run => {
            let bids = BidProfile::raw(bid_rows(scenario)?);
            let outcome = run_auction(instance, &bids, &scenario.tiebreak)?;
            tables.push(("prices".to_string(), prices_csv(instance, &outcome)));
            (
                json!({
                    "bids": rat_matrix(&bids.bids),
                    "outcome": outcome_json(instance, &outcome),
                }),
                true,
            )
        }
        Operation::Frontier { buyer } => {
            let i = *buyer;
            if i >= instance.n_buyers() {
                return Err(Error::invalid(format!("buyer index {i} out of range")));
            }
            let bids = BidProfile::raw(bid_rows(scenario)?);
            let c = competing_prices(instance, &bids, i);
            let frontier = build_frontier(instance, i, &c);
            let current = scenario.alphas.as_ref().map(|a| a[i].clone());
            let br = roi_best_response(instance, i, &c, current.as_ref())?;
            let points = frontier_points(instance, i, &c)?;
            tables.push(("frontier".to_string(), frontier_csv(&points)));
            (
                json!({
                    "buyer": i,
                    "competing_prices": rats(&c),
                    "free_goods": frontier.free_goods,
                    "free_value": format_rat(&frontier.free_value),
                    "segments": frontier.segments.iter().map(|s| json!({
                        "ratio": format_rat(&s.ratio),
                        "pay_start": format_rat(&s.pay_start),
                        "pay_end": format_rat(&s.pay_end),
                        "goods": s.goods.iter().map(|(j, price, value)| {
                            json!([j, format_rat(price), format_rat(value)])
                        }).collect::<Vec<_>>(),
                    })).collect::<Vec<_>>(),
                    "points": points.iter().map(|(p, v, cost)| {
                        json!([format_rat(p), format_rat(v), format_rat(cost)])
                    }).collect::<Vec<_>>(),
                    "best_response": best_response_json(&br),
                }),
                true,
            )
        }
        Operation::Solve => {
            let report = solve(instance, &opts.solve_options())?;
            let found = matches!(report.outcome, SolveOutcome::Certificate(_));
            (solve_json(instance, &report), found)
        }
        Operation::Verify => {
            let alphas = require_alphas(scenario)?;
            if unit_gamma(&scenario.gamma) {
                let cert = verify_equilibrium(instance, alphas, &scenario.tiebreak)?;
                let passed = cert.status == Status::RoiOptimalNe;
                let mut payload = certificate_json(instance, &cert);
                let (optimal, _) = optimal_transferable_welfare(instance)?;
                let gap = json!({
                    "equilibrium": format_rat(&cert.welfare),
                    "optimal": format_rat(&optimal),
                    "ratio": if optimal.is_zero() { None } else {
                        Some(format_rat(&(&cert.welfare / &optimal)))
                    },
                });
                payload["welfare_gap"] = gap;
                (payload, passed)
            } else {
                let verdict = verify_under_gamma(
                    instance,
                    &scenario.gamma,
                    alphas,
                    opts.deviation_grid,
                    opts.samples,
                    opts.seed,
                    opts.workers,
                )?;
                let passed = verdict.status == Status::RoiOptimalNe;
                let mut payload = gamma_verdict_json(&verdict);
                payload["welfare_gap"] =
                    welfare_gap_json(instance, alphas, &scenario.tiebreak)?;
                (payload, passed)
            }
        }
        Operation::Enumerate => {
            let found = enumerate_equilibria_grid(instance, opts.grid, opts.tie_grid)?;
            (
                json!({
                    "grid": opts.grid,
                    "tie_grid": opts.tie_grid,
                    "count": found.len(),
                    "welfares": found.iter().map(|c| format_rat(&c.welfare)).collect::<Vec<_>>(),
                    "equilibria": found.iter()
                        .map(|c| certificate_json(instance, c))
                        .collect::<Vec<_>>(),
                }),
                true,
            )
        }
        Operation::Bounds => {
            let alphas = require_alphas(scenario)?;
            let bids = BidProfile::uniform(instance, alphas)?;
            let outcome = run_auction(instance, &bids, &scenario.tiebreak)?;
            let report = check_bounds(instance, &outcome)?;
            let passed = report.welfare.holds && report.revenue.holds;
            tables.push(("ratios".to_string(), ratio_csv(&report)));
            (
                json!({
                    "alphas": rats(alphas),
                    "outcome": outcome_json(instance, &outcome),
                    "bounds": bounds_json(&report),
                }),
                passed,
            )
        }
        Operation::PostedPrice => {
            let n = instance.n_buyers();
            let orders: Vec<Vec<usize>> = if n <= 6 {
                (0..n).permutations(n).collect()
            } else {
                (0..n)
                    .map(|s| (0..n).map(|i| (i + s) % n).collect())
                    .collect()
            };
            let mut runs = Vec::with_capacity(orders.len());
            for order in &orders {
                runs.push(sequential_posted_revenue(instance, &instance.reserves, order)?);
            }
            let rows: Vec<(Vec<usize>, Rat)> = runs
                .iter()
                .map(|r| (r.order.clone(), r.revenue.clone()))
                .collect();
            tables.push(("posted_orders".to_string(), posted_csv(&rows)));
            (
                json!({
                    "prices": rats(&instance.reserves),
                    "exhaustive": n <= 6,
                    "orders": runs.iter().map(|r| json!({
                        "order": r.order,
                        "revenue": format_rat(&r.revenue),
                        "purchases": rat_matrix(&r.purchases),
                    })).collect::<Vec<_>>(),
                    "best_revenue": runs.iter().map(|r| r.revenue.clone()).max()
                        .map(|r| format_rat(&r)),
                    "worst_revenue": runs.iter().map(|r| r.revenue.clone()).min()
                        .map(|r| format_rat(&r)),
                }),
                true,
            )
        }
        Operation::Expect => {
            let bids = bid_rows(scenario)?;
            let est = expected_outcome(
                instance,
                &scenario.gamma,
                &bids,
                opts.samples,
                opts.seed,
                opts.workers,
            )?;
            (
                json!({
                    "bids": rat_matrix(&bids),
                    "expected": expected_json(&est),
                }),
                true,
            )
        }
    };

    let report = json!({
        "command": op.name(),
        "passed": passed,
        "report": payload,
        "config": scenario_json(scenario),
    });
    Ok(Execution {
        report,
        passed,
        tables,
    })
}
