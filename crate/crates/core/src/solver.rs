//! Equilibrium solver built on a smoothed game.
//!
//! Exact best responses are set-valued at ties, so the solver perturbs the
//! game until every best response is single-valued, follows the smoothing
//! parameter toward zero, and certifies the rational limit exactly:
//!
//! 1. each buyer gets an extra personal good of value `delta` behind a
//!    uniform [0, 2*delta] reserve, making expected payment strictly
//!    increasing in the buyer's factor;
//! 2. a hard budget is replaced by a steep linear segment of slope
//!    `1/delta` (which must dominate the slope reaching the budget);
//! 3. every buyer's whole bid vector is scaled by an independent
//!    `gamma ~ U[1 - delta, 1]`, smoothing out win probabilities.
//!
//! Each smoothing tier solves a sample-path fixed point with common random
//! numbers (the same underlying draws for every tier, so tier-to-tier
//! differences reflect the smoothing, not resampling noise). The tier
//! solutions are extrapolated to `delta -> 0`, rounded to small rationals,
//! re-equipped with exact tie-break shares, and passed through
//! [`verify_equilibrium`]; lazy best-response dynamics and grid
//! enumeration serve as verified fallbacks.

use num_traits::{One, Signed};

use crate::equilibrium::{
    assemble_clearing_tiebreak, best_response_dynamics, enumerate_equilibria_grid,
    verify_equilibrium,
    DynamicsOutcome, EquilibriumCertificate, Status,
};
use crate::error::Error;
use crate::frontier::roi_best_response;
use crate::auction::{competing_prices, BidProfile};
use crate::market::MarketInstance;
use crate::rational::{rat, round_to_rational, to_f64, Rat};
use crate::stochastic::{unit_uniform, PER_BUYER_TAG};
use crate::Result;

// === The smoothed game ===

/// Piecewise-linear cost in floating point: `(start, slope)` per segment,
/// finite everywhere (a budget has been replaced by a steep segment).
#[derive(Debug, Clone)]
struct SmoothCost {
    segments: Vec<(f64, f64)>,
}

impl SmoothCost {
    fn eval(&self, p: f64) -> f64 {
        let mut cost = 0.0;
        for (idx, (start, slope)) in self.segments.iter().enumerate() {
            if p <= *start {
                break;
            }
            let hi = self
                .segments
                .get(idx + 1)
                .map(|(s, _)| *s)
                .unwrap_or(f64::INFINITY)
                .min(p);
            cost += slope * (hi - start);
        }
        cost
    }
}

/// A market instance smoothed at level `delta`.
#[derive(Debug)]
pub struct PerturbedGame<'a> {
    pub instance: &'a MarketInstance,
    pub delta: Rat,
    delta_f: f64,
    /// E[gamma^2] for gamma ~ U[1 - delta, 1], exact then lowered.
    e2: f64,
    costs: Vec<SmoothCost>,
    values_f: Vec<f64>,
    reserves_f: Vec<f64>,
}

impl<'a> PerturbedGame<'a> {
    /// Fails if `delta` is not in (0, 1) or some buyer's cost curve climbs
    /// into its budget more steeply than the replacement slope `1/delta`.
    pub fn new(instance: &'a MarketInstance, delta: Rat) -> Result<Self> {
        instance.ensure_valid()?;
        if !delta.is_positive() || delta >= Rat::one() {
            return Err(Error::domain("smoothing level must lie in (0, 1)"));
        }
        let inv_delta = Rat::one() / &delta;
        let mut costs = Vec::with_capacity(instance.n_buyers());
        for curve in &instance.curves {
            if curve.budget().is_some() && *curve.last_slope() > inv_delta {
                return Err(Error::domain(format!(
                    "smoothing level {} too coarse: budget slope exceeds 1/delta",
                    delta
                )));
            }
            let mut segments: Vec<(f64, f64)> = curve
                .segments()
                .iter()
                .map(|(s, m)| (to_f64(s), to_f64(m)))
                .collect();
            if let Some(b) = curve.budget() {
                segments.push((to_f64(b), to_f64(&inv_delta)));
            }
            costs.push(SmoothCost { segments });
        }
        let e2 = Rat::one() - &delta + &delta * &delta / rat(3, 1);
        Ok(PerturbedGame {
            instance,
            delta_f: to_f64(&delta),
            e2: to_f64(&e2),
            delta,
            costs,
            values_f: instance.values.iter().flatten().map(to_f64).collect(),
            reserves_f: instance.reserves.iter().map(to_f64).collect(),
        })
    }

    /// Per-buyer modifiers for `samples` draws, laid out sample-major.
    /// Uses the same streams as the stochastic module's smoothed-payment
    /// estimator, and the same underlying uniforms at every level.
    pub fn sample(&self, samples: u64, seed: u64) -> SampledGame {
        let n = self.instance.n_buyers();
        let mut gammas = vec![0.0f64; samples as usize * n];
        for s in 0..samples as usize {
            for k in 0..n {
                gammas[s * n + k] =
                    1.0 - self.delta_f * unit_uniform(seed, PER_BUYER_TAG ^ k as u64, s as u64);
            }
        }
        SampledGame { gammas, n, samples }
    }

    /// Sample-mean expected payment of buyer `i` at profile `alphas`:
    /// real-good prices averaged over the draws plus the exact extra-good
    /// term `alpha^2 * delta * E[gamma^2] / 4`.
    pub fn expected_payment(&self, sampled: &SampledGame, i: usize, alphas: &[f64]) -> f64 {
        let n = self.instance.n_buyers();
        let m = self.instance.n_goods();
        let mut pay = 0.0;
        for s in 0..sampled.samples as usize {
            for j in 0..m {
                let own = sampled.gamma(s, i) * alphas[i] * self.values_f[i * m + j];
                if own <= 0.0 || own < self.reserves_f[j] {
                    continue;
                }
                // Exact ties go to the lowest buyer index, matching the
                // sampled clearing rule of the stochastic module.
                let mut second = 0.0f64;
                let mut wins = true;
                for k in 0..n {
                    if k == i {
                        continue;
                    }
                    let e = sampled.gamma(s, k) * alphas[k] * self.values_f[k * m + j];
                    if e > own || (e == own && k < i) {
                        wins = false;
                        break;
                    }
                    if e > second {
                        second = e;
                    }
                }
                if wins {
                    pay += second.max(self.reserves_f[j]);
                }
            }
        }
        let real = pay / sampled.samples as f64;
        real + alphas[i] * alphas[i] * self.delta_f * self.e2 / 4.0
    }

    /// Utility-maximizing factor of buyer `i` against `alphas`, by exact
    /// sweep over the sampled win thresholds: between thresholds the
    /// utility is concave in the factor, so candidates are threshold
    /// endpoints, marginal-price stationary points `1/slope`, and spends
    /// where the total crosses a cost kink.
    fn best_reply(&self, sampled: &SampledGame, i: usize, alphas: &[f64]) -> f64 {
        let n = self.instance.n_buyers();
        let m = self.instance.n_goods();
        let inv_s = 1.0 / sampled.samples as f64;
        let half_rate = self.delta_f * self.e2 / 2.0;
        let quarter_rate = self.delta_f * self.e2 / 4.0;
        let cost = &self.costs[i];

        // Win events: buyer i takes (sample s, good j) exactly when its
        // factor exceeds theta = competing price / (gamma_i * v_ij).
        let mut events: Vec<(f64, f64, f64)> = Vec::with_capacity(sampled.samples as usize * m);
        for s in 0..sampled.samples as usize {
            let gi = sampled.gamma(s, i);
            for j in 0..m {
                let gv = gi * self.values_f[i * m + j];
                if gv <= 0.0 {
                    continue;
                }
                let mut c = self.reserves_f[j];
                for k in 0..n {
                    if k != i {
                        c = c.max(sampled.gamma(s, k) * alphas[k] * self.values_f[k * m + j]);
                    }
                }
                let theta = c / gv;
                if theta < 1.0 {
                    events.push((theta, gv * inv_s, c * inv_s));
                }
            }
        }
        events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let eval = |a: f64, v_acc: f64, p_acc: f64| -> f64 {
            v_acc + a * half_rate - cost.eval(p_acc + a * a * quarter_rate)
        };
        let mut best_a = 0.0;
        let mut best_u = eval(0.0, 0.0, 0.0);
        let try_candidate = |a: f64, v_acc: f64, p_acc: f64, best_a: &mut f64, best_u: &mut f64| {
            let u = eval(a, v_acc, p_acc);
            if u > *best_u {
                *best_u = u;
                *best_a = a;
            }
        };

        let mut v_acc = 0.0;
        let mut p_acc = 0.0;
        let mut lo = 0.0f64;
        let mut pos = 0usize;
        loop {
            let hi = if pos < events.len() { events[pos].0 } else { 1.0 };
            let hi_c = hi.min(1.0);
            if hi_c > lo {
                for (_, slope) in &cost.segments {
                    let a = 1.0 / slope;
                    if a > lo && a <= hi_c {
                        try_candidate(a, v_acc, p_acc, &mut best_a, &mut best_u);
                    }
                }
                for (start, _) in cost.segments.iter().skip(1) {
                    if *start > p_acc {
                        let a = ((start - p_acc) / quarter_rate).sqrt();
                        if a > lo && a <= hi_c {
                            try_candidate(a, v_acc, p_acc, &mut best_a, &mut best_u);
                        }
                    }
                }
                try_candidate(hi_c, v_acc, p_acc, &mut best_a, &mut best_u);
            }
            if pos >= events.len() || events[pos].0 >= 1.0 {
                break;
            }
            let t = events[pos].0;
            while pos < events.len() && events[pos].0 == t {
                v_acc += events[pos].1;
                p_acc += events[pos].2;
                pos += 1;
            }
            lo = t;
        }
        best_a
    }

    fn replies(&self, sampled: &SampledGame, alphas: &[f64]) -> Vec<f64> {
        (0..self.instance.n_buyers())
            .map(|i| self.best_reply(sampled, i, alphas))
            .collect()
    }
}

/// Common-random-number draws shared by every evaluation in one tier.
pub struct SampledGame {
    gammas: Vec<f64>,
    n: usize,
    samples: u64,
}

impl SampledGame {
    fn gamma(&self, s: usize, k: usize) -> f64 {
        self.gammas[s * self.n + k]
    }
}

fn residual(alphas: &[f64], replies: &[f64]) -> f64 {
    alphas
        .iter()
        .zip(replies)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

const TIER_TOL: f64 = 1e-9;
const MAX_PATTERN_EVALS: usize = 360;

/// Pattern search minimizing the best-response residual
/// `max_i |reply_i(alpha) - alpha_i|` from `start`. Plain damped iteration
/// diverges near budget-pinned fixed points (the reply map's slopes grow
/// like 1/delta), while the residual itself stays well-behaved.
fn pattern_search(
    game: &PerturbedGame,
    sampled: &SampledGame,
    start: Vec<f64>,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let start_phi = residual(&start, &game.replies(sampled, &start));
    let mut best = (start, start_phi);
    let mut h = (best.1 * 0.5).clamp(1e-9, 0.05);
    let mut evals = 0usize;
    while h > 1e-13 && best.1 > TIER_TOL && evals < max_evals {
        let mut improved = false;
        for i in 0..n {
            for d in [h, -h] {
                if evals >= max_evals {
                    break;
                }
                let mut cand = best.0.clone();
                let moved = (cand[i] + d).clamp(0.0, 1.0);
                if moved == cand[i] {
                    continue;
                }
                cand[i] = moved;
                let phi = residual(&cand, &game.replies(sampled, &cand));
                evals += 1;
                if phi < best.1 {
                    best = (cand, phi);
                    improved = true;
                }
            }
        }
        if improved {
            h = (h * 2.0).min(0.05);
        } else {
            h *= 0.5;
        }
    }
    best
}

/// Damped adaptive iteration; effective when the reply map is a
/// contraction (quasi-linear buyers), harmless otherwise.
fn damped_iteration(
    game: &PerturbedGame,
    sampled: &SampledGame,
    start: Vec<f64>,
) -> (Vec<f64>, f64) {
    let mut lambda = 0.5f64;
    let mut cur = start;
    let mut cur_reply = game.replies(sampled, &cur);
    let mut cur_phi = residual(&cur, &cur_reply);
    let mut best = (cur.clone(), cur_phi);
    for _ in 0..24 {
        if best.1 <= TIER_TOL {
            break;
        }
        let cand: Vec<f64> = cur
            .iter()
            .zip(&cur_reply)
            .map(|(a, b)| (a + lambda * (b - a)).clamp(0.0, 1.0))
            .collect();
        let cand_reply = game.replies(sampled, &cand);
        let cand_phi = residual(&cand, &cand_reply);
        if cand_phi < cur_phi {
            cur = cand;
            cur_reply = cand_reply;
            cur_phi = cand_phi;
            lambda = (lambda * 1.25).min(1.0);
            if cur_phi < best.1 {
                best = (cur.clone(), cur_phi);
            }
        } else {
            lambda *= 0.5;
            if lambda < 1e-2 {
                break;
            }
        }
    }
    best
}

/// Two-buyer fast path. The composed reply `G(a2) = BR2(BR1(a2))` turns
/// joint fixed points into roots of `G(a2) - a2`, found by scan plus
/// bisection with no stability assumption on the joint map. Multiple
/// equilibria are real (asymmetric tie splits alongside the symmetric
/// profile), so of all roots the one nearest `target` is kept — the warm
/// start from the previous smoothing level, making the schedule track one
/// equilibrium family.
fn bisect_two(game: &PerturbedGame, sampled: &SampledGame, target: &[f64]) -> (Vec<f64>, f64) {
    let br1 = |a2: f64| game.best_reply(sampled, 0, &[0.0, a2]);
    let br2 = |a1: f64| game.best_reply(sampled, 1, &[a1, 0.0]);
    let h = |a2: f64| br2(br1(a2)) - a2;

    let scan = |lo: f64, hi: f64, steps: usize| -> Vec<f64> {
        let mut roots = Vec::new();
        let mut prev_x = lo;
        let mut prev = h(lo);
        if lo == 0.0 && prev <= 0.0 {
            roots.push(0.0);
        }
        for g in 1..=steps {
            let x = lo + (hi - lo) * g as f64 / steps as f64;
            let val = h(x);
            if (prev > 0.0) != (val > 0.0) {
                let (mut a, mut b) = (prev_x, x);
                let a_pos = prev > 0.0;
                for _ in 0..45 {
                    let mid = 0.5 * (a + b);
                    if (h(mid) > 0.0) == a_pos {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            prev_x = x;
            prev = val;
        }
        if hi == 1.0 && prev >= 0.0 {
            roots.push(1.0);
        }
        roots
    };

    // A narrow window around the tracked root suffices between levels;
    // full sweep otherwise (or if tracking lost the root).
    let mut roots = if target[1] > 0.0 && target[1] < 1.0 {
        scan(
            (target[1] - 0.08).max(0.0),
            (target[1] + 0.08).min(1.0),
            16,
        )
    } else {
        Vec::new()
    };
    if roots.is_empty() {
        roots = scan(0.0, 1.0, 32);
    }

    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for a2 in roots {
        let alphas = vec![br1(a2), a2];
        let phi = residual(&alphas, &game.replies(sampled, &alphas));
        let dist = alphas
            .iter()
            .zip(target)
            .map(|(a, t)| (a - t).abs())
            .fold(0.0, f64::max);
        let score = if phi < 1e-6 { dist } else { 1e6 + phi };
        if best.as_ref().is_none_or(|(_, _, s)| score < *s) {
            best = Some((alphas, phi, score));
        }
    }
    match best {
        Some((alphas, phi, _)) => (alphas, phi),
        None => {
            // No sign change anywhere: fall back to the residual search.
            pattern_search(game, sampled, target.to_vec(), MAX_PATTERN_EVALS)
        }
    }
}

/// Approximate equilibrium of the smoothed game at one level via the
/// sample-path fixed point; `init` warm-starts the search.
fn solve_tier(
    game: &PerturbedGame,
    sampled: &SampledGame,
    init: Option<&[f64]>,
) -> (Vec<f64>, f64) {
    let n = game.instance.n_buyers();
    if n == 1 {
        let a = game.best_reply(sampled, 0, &[0.0]);
        let alphas = vec![a];
        let phi = residual(&alphas, &game.replies(sampled, &alphas));
        return (alphas, phi);
    }

    let start = init
        .map(|x| x.to_vec())
        .unwrap_or_else(|| vec![0.5; n])
        .iter()
        .map(|a| a.clamp(0.0, 1.0))
        .collect::<Vec<_>>();
    let mut best = if n == 2 {
        bisect_two(game, sampled, &start)
    } else {
        damped_iteration(game, sampled, start)
    };
    if best.1 > TIER_TOL {
        let polish = pattern_search(game, sampled, best.0.clone(), MAX_PATTERN_EVALS);
        if polish.1 < best.1 {
            best = polish;
        }
    }
    // A warm start may already beat the fresh solve (noisy jump cases).
    if let Some(init) = init {
        let start: Vec<f64> = init.iter().map(|a| a.clamp(0.0, 1.0)).collect();
        let phi = residual(&start, &game.replies(sampled, &start));
        if phi < best.1 {
            best = (start, phi);
        }
    }
    best
}

/// Smoothed-game equilibrium factors at a single level `delta`.
pub fn solve_perturbed(
    instance: &MarketInstance,
    delta: &Rat,
    samples: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let game = PerturbedGame::new(instance, delta.clone())?;
    let sampled = game.sample(samples, seed);
    Ok(solve_tier(&game, &sampled, None).0)
}

// === The schedule ===

/// One smoothing level's solution.
#[derive(Debug, Clone)]
pub struct TierResult {
    pub delta: Rat,
    pub alphas: Vec<f64>,
    /// Best-response residual achieved by the fixed-point search.
    pub residual: f64,
    /// `max_i |alpha_i - previous alpha_i|` between consecutive levels.
    pub diff_from_previous: Option<f64>,
}

/// Full schedule trace: per-level solutions, the linear extrapolation to
/// level zero, and its rounding to small rationals (when within
/// tolerance).
#[derive(Debug, Clone)]
pub struct PerturbationRun {
    pub tiers: Vec<TierResult>,
    pub extrapolated: Vec<f64>,
    pub rounded: Option<Vec<Rat>>,
}

/// Levels 1/10, 1/20, .., 1/10240 (halving, eleven entries).
pub fn default_delta_schedule() -> Vec<Rat> {
    (0..=10).map(|k| rat(1, 10 << k)).collect()
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub seed: u64,
    /// Monte-Carlo draws per smoothing level.
    pub samples: u64,
    pub delta_schedule: Vec<Rat>,
    pub use_perturbed: bool,
    pub dynamics_rounds: usize,
    pub round_max_denominator: u64,
    pub round_tolerance: f64,
    /// Factor and tie-share grid for the enumeration fallback.
    pub grid_fallback: Option<(u32, u32)>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            seed: 0,
            samples: 4096,
            delta_schedule: default_delta_schedule(),
            use_perturbed: true,
            dynamics_rounds: 200,
            round_max_denominator: 10_000,
            round_tolerance: 1e-4,
            grid_fallback: Some((16, 8)),
        }
    }
}

/// Runs the smoothing schedule with warm starts and common random
/// numbers; levels too coarse for some budget slope are dropped. The
/// schedule also stops early at the sampling noise floor: once a level's
/// move exceeds the previous level's move, the remaining perturbations are
/// too small to resolve at this sample budget and finer levels would only
/// report noise (or hop to a different equilibrium branch).
pub fn run_schedule(instance: &MarketInstance, opts: &SolveOptions) -> Result<PerturbationRun> {
    let mut tiers: Vec<TierResult> = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    for delta in &opts.delta_schedule {
        let game = match PerturbedGame::new(instance, delta.clone()) {
            Ok(g) => g,
            Err(_) if tiers.is_empty() => continue, // head of schedule too coarse
            Err(e) => return Err(e),
        };
        let sampled = game.sample(opts.samples, opts.seed);
        let (alphas, res) = solve_tier(&game, &sampled, warm.as_deref());
        let diff = warm.as_ref().map(|prev| residual(prev, &alphas));
        let hit_noise_floor = tiers.len() >= 3
            && matches!(
                (diff, tiers.last().and_then(|t| t.diff_from_previous)),
                (Some(d), Some(prev)) if d > prev
            );
        if hit_noise_floor {
            break;
        }
        tiers.push(TierResult {
            delta: delta.clone(),
            alphas: alphas.clone(),
            residual: res,
            diff_from_previous: diff,
        });
        warm = Some(alphas);
    }
    if tiers.is_empty() {
        return Err(Error::domain(
            "no level of the smoothing schedule satisfies the budget slope bound",
        ));
    }

    let last = &tiers[tiers.len() - 1].alphas;
    let extrapolated: Vec<f64> = if tiers.len() >= 2 {
        let prev = &tiers[tiers.len() - 2].alphas;
        last.iter()
            .zip(prev)
            .map(|(l, p)| (2.0 * l - p).clamp(0.0, 1.0))
            .collect()
    } else {
        last.clone()
    };
    let rounded = extrapolated
        .iter()
        .map(|x| round_to_rational(*x, opts.round_max_denominator, opts.round_tolerance))
        .collect::<Option<Vec<Rat>>>();
    Ok(PerturbationRun {
        tiers,
        extrapolated,
        rounded,
    })
}

/// Attaches exact tie-break shares to a rational profile and verifies it;
/// `None` when the profile is not a certifiable equilibrium.
fn certify_profile(
    instance: &MarketInstance,
    alphas: &[Rat],
) -> Result<Option<Box<EquilibriumCertificate>>> {
    let bids = BidProfile::uniform(instance, alphas)?;
    let mut replies = Vec::with_capacity(instance.n_buyers());
    for i in 0..instance.n_buyers() {
        let c = competing_prices(instance, &bids, i);
        let br = roi_best_response(instance, i, &c, Some(&alphas[i]))?;
        if !br.kept_current {
            return Ok(None);
        }
        replies.push(br);
    }
    let Some(tiebreak) = assemble_clearing_tiebreak(instance, alphas, &replies)? else {
        return Ok(None);
    };
    let cert = verify_equilibrium(instance, alphas, &tiebreak)?;
    Ok((cert.status == Status::RoiOptimalNe).then(|| Box::new(cert)))
}

#[derive(Debug)]
pub enum SolveOutcome {
    Certificate(Box<EquilibriumCertificate>),
    NoCertificate,
}

/// Result of the full pipeline, with the attempt log and the smoothing
/// trace for diagnostics.
#[derive(Debug)]
pub struct SolveReport {
    pub outcome: SolveOutcome,
    pub attempts: Vec<String>,
    pub perturbation: Option<PerturbationRun>,
}

impl SolveReport {
    pub fn certificate(&self) -> Option<&EquilibriumCertificate> {
        match &self.outcome {
            SolveOutcome::Certificate(c) => Some(c),
            SolveOutcome::NoCertificate => None,
        }
    }
}

fn standard_inits(n: usize) -> Vec<Vec<Rat>> {
    let mut inits = vec![
        vec![Rat::one(); n],
        vec![rat(1, 2); n],
        (0..n).map(|i| rat(i as i64 + 1, n as i64 + 1)).collect(),
        vec![rat(1, 4); n],
        vec![rat(3, 4); n],
    ];
    inits.dedup();
    inits
}

/// Finds and certifies an ROI-consistent equilibrium: smoothing schedule
/// first, then lazy dynamics from standard starts, then grid enumeration.
/// Every returned certificate has passed exact verification; when all
/// three routes fail the report says what was tried.
pub fn solve(instance: &MarketInstance, opts: &SolveOptions) -> Result<SolveReport> {
    instance.ensure_valid()?;
    let mut attempts: Vec<String> = Vec::new();
    let mut perturbation = None;

    if opts.use_perturbed {
        match run_schedule(instance, opts) {
            Ok(run) => {
                match &run.rounded {
                    Some(rounded) => match certify_profile(instance, rounded)? {
                        Some(cert) => {
                            attempts.push(format!(
                                "smoothing schedule ({} levels) verified, factors {:?}",
                                run.tiers.len(),
                                run.extrapolated
                            ));
                            return Ok(SolveReport {
                                outcome: SolveOutcome::Certificate(cert),
                                attempts,
                                perturbation: Some(run),
                            });
                        }
                        None => attempts.push(format!(
                            "smoothing schedule limit {:?} did not certify",
                            run.extrapolated
                        )),
                    },
                    None => attempts.push(format!(
                        "smoothing schedule limit {:?} has no nearby small rational",
                        run.extrapolated
                    )),
                }
                perturbation = Some(run);
            }
            Err(e) => attempts.push(format!("smoothing schedule unavailable: {e}")),
        }
    }

    for init in standard_inits(instance.n_buyers()) {
        match best_response_dynamics(instance, &init, opts.dynamics_rounds)? {
            DynamicsOutcome::Equilibrium(cert) => {
                attempts.push(format!(
                    "dynamics from {:?} converged in-place",
                    init.iter().map(to_f64).collect::<Vec<_>>()
                ));
                return Ok(SolveReport {
                    outcome: SolveOutcome::Certificate(cert),
                    attempts,
                    perturbation,
                });
            }
            DynamicsOutcome::NoConvergence(rep) => attempts.push(format!(
                "dynamics from {:?}: {} after {} rounds",
                init.iter().map(to_f64).collect::<Vec<_>>(),
                rep.note,
                rep.rounds
            )),
        }
    }

    if let Some((k, t)) = opts.grid_fallback {
        match enumerate_equilibria_grid(instance, k, t) {
            Ok(certs) if !certs.is_empty() => {
                attempts.push(format!("grid enumeration found {} profiles", certs.len()));
                let first = certs.into_iter().next().unwrap();
                return Ok(SolveReport {
                    outcome: SolveOutcome::Certificate(Box::new(first)),
                    attempts,
                    perturbation,
                });
            }
            Ok(_) => attempts.push("grid enumeration found nothing".into()),
            Err(e) => attempts.push(format!("grid enumeration skipped: {e}")),
        }
    }

    Ok(SolveReport {
        outcome: SolveOutcome::NoCertificate,
        attempts,
        perturbation,
    })
}
