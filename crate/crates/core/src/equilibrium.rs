//! Equilibrium verification, best-response dynamics, and exhaustive search.
//!
//! A candidate profile is a scaling factor per buyer plus a tie-break table.
//! Verification is exact: it replays the auction, rebuilds every buyer's
//! purchase frontier against the others' bids, and checks three separable
//! conditions — the market clears (tied supply is withheld only from
//! buyers who cannot absorb it), the spend is return-on-investment
//! consistent with the factor, and the achieved utility matches the
//! frontier maximum (no profitable unilateral deviation of any kind, not
//! just scalings).
//!
//! Dynamics update all buyers simultaneously with lazy best responses
//! (a buyer keeps its factor whenever it is still optimal); a stable round
//! is turned into a certificate by solving a small exact transportation
//! problem that routes tied supply to the buyers whose best responses can
//! take it. Exhaustive grid search over factors and tie shares backs up
//! the local methods on small instances.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Signed, Zero};

use crate::auction::{competing_prices, run_auction, utility, BidProfile, Outcome, TieBreak};
use crate::benchmarks::transferable_welfare;
use crate::error::Error;
use crate::frontier::{is_roi_optimal, roi_best_response, BestResponse};
use crate::market::{CostCurve, MarketInstance};
use crate::rational::{rat, to_f64, ExtRat, Rat};
use crate::simplex;
use crate::stochastic::{expected_outcome, ExpectedOutcome, GammaModel};
use crate::Result;

/// Verdict for a candidate profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Nash equilibrium in which every buyer's spend is ROI-consistent.
    RoiOptimalNe,
    /// Nash equilibrium, but some buyer's factor is not ROI-consistent
    /// (its utility is maximal anyway, typically because deviations that
    /// the ROI condition cares about never win anything).
    NeNotRoiOptimal,
    /// Some buyer has a profitable unilateral deviation.
    NotNe,
    /// The tie-break table withholds supply the market must clear. A good
    /// whose top bid strictly exceeds its reserve has to be fully
    /// allocated, and a good tied exactly at the reserve may stay
    /// partially unsold only when every tied buyer is already at the top
    /// of its optimal spend range (indifferent demand buys). Such a
    /// configuration is not an admissible equilibrium outcome regardless
    /// of the buyers' incentives.
    NotClearing,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::RoiOptimalNe => "roi_optimal_ne",
            Status::NeNotRoiOptimal => "ne_not_roi_optimal",
            Status::NotNe => "not_ne",
            Status::NotClearing => "not_clearing",
        }
    }
}

/// Per-buyer breakdown of the verification.
#[derive(Debug, Clone)]
pub struct BuyerVerdict {
    pub roi_ok: bool,
    pub nash_ok: bool,
    /// Utility realized in the auction; minus infinity past a hard budget.
    pub achieved_utility: ExtRat,
    /// Maximum utility any deviation could reach against the others' bids.
    pub best_utility: Rat,
    /// A spend attaining that maximum.
    pub best_spend: Rat,
}

/// A fully checked profile: the replayed outcome, per-buyer verdicts, the
/// combined status, and the transferable welfare of the allocation.
#[derive(Debug, Clone)]
pub struct EquilibriumCertificate {
    pub alphas: Vec<Rat>,
    pub tiebreak: TieBreak,
    pub outcome: Outcome,
    pub verdicts: Vec<BuyerVerdict>,
    pub status: Status,
    pub welfare: Rat,
}

/// Replays the auction at uniform scalings `alphas` with `tiebreak` and
/// checks ROI consistency and deviation-proofness exactly.
pub fn verify_equilibrium(
    instance: &MarketInstance,
    alphas: &[Rat],
    tiebreak: &TieBreak,
) -> Result<EquilibriumCertificate> {
    instance.ensure_valid()?;
    let bids = BidProfile::uniform(instance, alphas)?;
    let outcome = run_auction(instance, &bids, tiebreak)?;

    let mut verdicts = Vec::with_capacity(instance.n_buyers());
    let mut spend_caps = Vec::with_capacity(instance.n_buyers());
    for i in 0..instance.n_buyers() {
        let c = competing_prices(instance, &bids, i);
        let br = roi_best_response(instance, i, &c, Some(&alphas[i]))?;
        let achieved = utility(instance, i, &outcome);
        let nash_ok = achieved == ExtRat::Fin(br.utility.clone());
        let roi_ok = is_roi_optimal(instance, i, &alphas[i], &outcome.payments[i])?;
        spend_caps.push(br.p_star_hi.clone());
        verdicts.push(BuyerVerdict {
            roi_ok,
            nash_ok,
            achieved_utility: achieved,
            best_utility: br.utility,
            best_spend: br.p_star,
        });
    }

    // Market clearing: every tied good priced strictly above its reserve
    // must be fully allocated. A tie exactly at the reserve may leave part
    // of the good unsold, but only once every tied buyer is at the top of
    // its optimal spend range — indifference is resolved in the seller's
    // favor, so absorbable supply must be sold.
    let clears = outcome.ties.iter().all(|(&j, tied)| {
        if outcome.allocation.sold_of_good(j) == Rat::one() {
            return true;
        }
        outcome.prices[j] == instance.reserves[j]
            && tied.iter().all(|&i| outcome.payments[i] >= spend_caps[i])
    });

    let all_nash = verdicts.iter().all(|v| v.nash_ok);
    let all_roi = verdicts.iter().all(|v| v.roi_ok);
    let status = if !clears {
        Status::NotClearing
    } else {
        match (all_nash, all_roi) {
            (true, true) => Status::RoiOptimalNe,
            (true, false) => Status::NeNotRoiOptimal,
            (false, _) => Status::NotNe,
        }
    };
    let welfare = transferable_welfare(instance, &outcome.allocation)?;
    Ok(EquilibriumCertificate {
        alphas: alphas.to_vec(),
        tiebreak: tiebreak.clone(),
        outcome,
        verdicts,
        status,
        welfare,
    })
}

// === Simultaneous lazy best-response dynamics ===

/// Why dynamics stopped without a certificate.
#[derive(Debug, Clone)]
pub struct CycleReport {
    pub rounds: usize,
    /// Length of a detected profile cycle, if one closed.
    pub cycle_length: Option<usize>,
    /// Most recent profiles, oldest first.
    pub recent: Vec<Vec<Rat>>,
    pub note: String,
}

#[derive(Debug)]
pub enum DynamicsOutcome {
    Equilibrium(Box<EquilibriumCertificate>),
    NoConvergence(CycleReport),
}

const CYCLE_WINDOW: usize = 50;
const REPORT_TAIL: usize = 8;

fn tail(history: &VecDeque<Vec<Rat>>) -> Vec<Vec<Rat>> {
    history
        .iter()
        .rev()
        .take(REPORT_TAIL)
        .rev()
        .cloned()
        .collect()
}

/// Builds a market-clearing tie-break table for the profile, or `None`
/// when no admissible one exists.
///
/// Every tied good priced above its reserve must be fully allocated, while
/// each buyer's total spend has to stay inside its optimal interval
/// `[p_star, p_star_hi]`. All of a buyer's tied goods carry exactly its
/// marginal value-per-money ratio, so money can be moved freely between
/// them and the problem is a small transportation feasibility question:
/// ship money from buyers (capacity `p_star_hi - base`) to tied goods
/// (demand `price` for goods above reserve, optional up to `price` for
/// goods at the reserve), covering each buyer's minimum `p_star - base`.
/// It is solved exactly as a linear program whose optimum hits the demand
/// target precisely when a clearing table exists. Goods tied at the
/// reserve are then topped up greedily until every tied buyer is at
/// capacity, because indifferent demand buys.
pub(crate) fn assemble_clearing_tiebreak(
    instance: &MarketInstance,
    alphas: &[Rat],
    replies: &[BestResponse],
) -> Result<Option<TieBreak>> {
    let bids = BidProfile::uniform(instance, alphas)?;
    let probe = run_auction(instance, &bids, &TieBreak::empty())?;

    // With an empty table the probe payments cover exactly the strictly
    // won goods, so they are each buyer's fixed spend base.
    let mut lo = Vec::with_capacity(replies.len());
    let mut hi = Vec::with_capacity(replies.len());
    for (i, br) in replies.iter().enumerate() {
        let h = &br.p_star_hi - &probe.payments[i];
        if h.is_negative() {
            // The factor's strict wins already overshoot every optimal
            // spend; no tie shares can fix that.
            return Ok(None);
        }
        let l = (&br.p_star - &probe.payments[i]).max(Rat::zero());
        lo.push(l);
        hi.push(h);
    }

    let pairs: Vec<(usize, usize)> = probe
        .ties
        .iter()
        .flat_map(|(j, tied)| tied.iter().map(move |i| (*i, *j)))
        .collect();
    let tied_buyers: BTreeSet<usize> = pairs.iter().map(|(i, _)| *i).collect();
    if lo
        .iter()
        .enumerate()
        .any(|(i, l)| !l.is_zero() && !tied_buyers.contains(&i))
    {
        // Someone needs more spend but has nothing tied to buy.
        return Ok(None);
    }
    let strict_goods: Vec<usize> = probe
        .ties
        .keys()
        .copied()
        .filter(|&j| probe.prices[j] > instance.reserves[j])
        .collect();
    if pairs.is_empty() {
        return Ok(Some(TieBreak::empty()));
    }

    // Linear program over tied-pair money `m`, with reward variables that
    // cap at each hard demand: `g_j <= min(sum_i m_ij, price_j)` for goods
    // that must clear and `y_i <= min(sum_j m_ij, lo_i)` for buyers with a
    // minimum. Maximizing their sum reaches `sum price + sum lo` exactly
    // when all demands and minimums can be met simultaneously.
    let y_buyers: Vec<usize> = tied_buyers
        .iter()
        .copied()
        .filter(|&i| !lo[i].is_zero())
        .collect();
    let np = pairs.len();
    let nv = np + strict_goods.len() + y_buyers.len();
    let mut objective = vec![Rat::zero(); nv];
    let mut constraints: Vec<(Vec<Rat>, Rat)> = Vec::new();

    for (&j, _) in &probe.ties {
        let mut row = vec![Rat::zero(); nv];
        for (k, (_, pj)) in pairs.iter().enumerate() {
            if *pj == j {
                row[k] = Rat::one();
            }
        }
        constraints.push((row, probe.prices[j].clone()));
    }
    for &i in &tied_buyers {
        let mut row = vec![Rat::zero(); nv];
        for (k, (pi, _)) in pairs.iter().enumerate() {
            if *pi == i {
                row[k] = Rat::one();
            }
        }
        constraints.push((row, hi[i].clone()));
    }
    let mut target = Rat::zero();
    for (g, &j) in strict_goods.iter().enumerate() {
        let var = np + g;
        objective[var] = Rat::one();
        target += &probe.prices[j];
        let mut row = vec![Rat::zero(); nv];
        row[var] = Rat::one();
        for (k, (_, pj)) in pairs.iter().enumerate() {
            if *pj == j {
                row[k] = -Rat::one();
            }
        }
        constraints.push((row, Rat::zero()));
    }
    for (y, &i) in y_buyers.iter().enumerate() {
        let var = np + strict_goods.len() + y;
        objective[var] = Rat::one();
        target += &lo[i];
        let mut row = vec![Rat::zero(); nv];
        row[var] = Rat::one();
        for (k, (pi, _)) in pairs.iter().enumerate() {
            if *pi == i {
                row[k] = -Rat::one();
            }
        }
        constraints.push((row, Rat::zero()));
        let mut cap = vec![Rat::zero(); nv];
        cap[var] = Rat::one();
        constraints.push((cap, lo[i].clone()));
    }

    let (best, vertex) = simplex::maximize(&simplex::StandardLp {
        objective,
        constraints,
    })?;
    if best != target {
        return Ok(None);
    }

    let mut money: BTreeMap<(usize, usize), Rat> = BTreeMap::new();
    let mut spent: BTreeMap<usize, Rat> = BTreeMap::new();
    for (k, (i, j)) in pairs.iter().enumerate() {
        if vertex[k].is_positive() {
            money.insert((*i, *j), vertex[k].clone());
        }
        *spent.entry(*i).or_default() += &vertex[k];
    }

    // Indifference favors the seller: goods tied at the reserve must also
    // sell as far as the tied buyers can absorb while staying inside their
    // optimal spend ranges. One ascending pass suffices because grants
    // only shrink the remaining capacities.
    for (&j, tied) in &probe.ties {
        if strict_goods.contains(&j) {
            continue;
        }
        let mut remainder = probe.prices[j].clone()
            - tied
                .iter()
                .filter_map(|i| money.get(&(*i, j)))
                .cloned()
                .sum::<Rat>();
        for &i in tied {
            if !remainder.is_positive() {
                break;
            }
            let slack = &hi[i] - spent.get(&i).cloned().unwrap_or_default();
            let add = remainder.clone().min(slack);
            if add.is_positive() {
                *money.entry((i, j)).or_default() += &add;
                *spent.entry(i).or_default() += &add;
                remainder -= add;
            }
        }
    }

    let mut per_good: BTreeMap<usize, Vec<(usize, Rat)>> = BTreeMap::new();
    for ((i, j), m) in money {
        if m.is_positive() {
            per_good.entry(j).or_default().push((i, &m / &probe.prices[j]));
        }
    }
    let mut tb = TieBreak::empty();
    for (j, entries) in per_good {
        tb.set(j, entries);
    }
    Ok(Some(tb))
}

/// Runs simultaneous lazy best-response updates from `init` until the
/// profile is a fixed point (then certifies it) or a cycle / round limit
/// is hit. All buyers update in the same round against the same bids.
pub fn best_response_dynamics(
    instance: &MarketInstance,
    init: &[Rat],
    max_rounds: usize,
) -> Result<DynamicsOutcome> {
    instance.ensure_valid()?;
    let mut alphas = init.to_vec();
    // Validates length and range.
    BidProfile::uniform(instance, &alphas)?;

    let mut history: VecDeque<Vec<Rat>> = VecDeque::new();
    history.push_back(alphas.clone());

    for round in 1..=max_rounds {
        let bids = BidProfile::uniform(instance, &alphas)?;
        let mut replies = Vec::with_capacity(instance.n_buyers());
        for i in 0..instance.n_buyers() {
            let c = competing_prices(instance, &bids, i);
            replies.push(roi_best_response(instance, i, &c, Some(&alphas[i]))?);
        }
        let next: Vec<Rat> = replies.iter().map(|br| br.alpha.clone()).collect();

        if next == alphas {
            return Ok(match assemble_clearing_tiebreak(instance, &alphas, &replies)? {
                Some(tb) => {
                    let cert = verify_equilibrium(instance, &alphas, &tb)?;
                    if cert.status == Status::RoiOptimalNe {
                        DynamicsOutcome::Equilibrium(Box::new(cert))
                    } else {
                        DynamicsOutcome::NoConvergence(CycleReport {
                            rounds: round,
                            cycle_length: None,
                            recent: tail(&history),
                            note: format!(
                                "stable profile failed verification ({})",
                                cert.status.as_str()
                            ),
                        })
                    }
                }
                None => DynamicsOutcome::NoConvergence(CycleReport {
                    rounds: round,
                    cycle_length: None,
                    recent: tail(&history),
                    note: "tied goods cannot clear at the stable profile".into(),
                }),
            });
        }

        if let Some(pos) = history.iter().position(|h| *h == next) {
            let mut recent = tail(&history);
            recent.push(next);
            return Ok(DynamicsOutcome::NoConvergence(CycleReport {
                rounds: round,
                cycle_length: Some(history.len() - pos),
                recent,
                note: "profile cycle detected".into(),
            }));
        }

        history.push_back(next.clone());
        if history.len() > CYCLE_WINDOW {
            history.pop_front();
        }
        alphas = next;
    }

    Ok(DynamicsOutcome::NoConvergence(CycleReport {
        rounds: max_rounds,
        cycle_length: None,
        recent: tail(&history),
        note: "round limit reached".into(),
    }))
}

// === Exhaustive grid search ===

/// All length-`parts` share vectors over {0, .., total} summing to at most
/// `total` (`exact` restricts to sums of exactly `total`).
fn compositions(total: u32, parts: usize, exact: bool) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; parts];
    fn rec(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, idx: usize, left: u32, exact: bool) {
        if idx == cur.len() {
            if !exact || left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        if exact && idx == cur.len() - 1 {
            cur[idx] = left;
            rec(out, cur, idx + 1, 0, exact);
            return;
        }
        for s in 0..=left {
            cur[idx] = s;
            rec(out, cur, idx + 1, left - s, exact);
        }
    }
    rec(&mut out, &mut cur, 0, total, exact);
    out
}

/// Enumerates all ROI-consistent equilibria whose factors lie on the
/// {0, 1/k, .., 1} grid and whose tie shares lie on the {0, 1/t, .., 1}
/// grid, deduplicated by realized outcome (allocation and payments).
/// Guarded to small instances.
pub fn enumerate_equilibria_grid(
    instance: &MarketInstance,
    k: u32,
    t: u32,
) -> Result<Vec<EquilibriumCertificate>> {
    instance.ensure_valid()?;
    let n = instance.n_buyers();
    let m = instance.n_goods();
    if n * m > 9 || k > 200 {
        return Err(Error::SizeGuard(format!(
            "grid enumeration supports n*m <= 9 and k <= 200, got n={n} m={m} k={k}"
        )));
    }
    if k == 0 || t == 0 {
        return Err(Error::invalid("grid resolutions must be positive"));
    }
    let profiles = ((k + 1) as u64).checked_pow(n as u32);
    if profiles.is_none_or(|p| p > 2_000_000) {
        return Err(Error::SizeGuard(format!(
            "grid enumeration over (k+1)^n = {}^{n} profiles is too large",
            k + 1
        )));
    }

    let mut found: Vec<EquilibriumCertificate> = Vec::new();
    let mut seen: BTreeSet<(Vec<Vec<Rat>>, Vec<Rat>)> = BTreeSet::new();

    let mut digits = vec![0u32; n];
    loop {
        let alphas: Vec<Rat> = digits.iter().map(|d| rat(*d as i64, k as i64)).collect();
        let bids = BidProfile::uniform(instance, &alphas)?;
        let probe = run_auction(instance, &bids, &TieBreak::empty())?;

        let tied_goods: Vec<(usize, Vec<usize>)> = probe
            .ties
            .iter()
            .map(|(j, buyers)| (*j, buyers.clone()))
            .collect();
        let mut tables: Vec<TieBreak> = Vec::new();
        if tied_goods.is_empty() {
            tables.push(TieBreak::empty());
        } else {
            // Goods tied strictly above the reserve must clear in full, so
            // only exact-sum splits can certify there; ties at the reserve
            // may also withhold part of the good.
            let per_good: Vec<Vec<Vec<u32>>> = tied_goods
                .iter()
                .map(|(j, buyers)| {
                    let must_clear = probe.prices[*j] > instance.reserves[*j];
                    compositions(t, buyers.len(), must_clear)
                })
                .collect();
            let combos: usize = per_good.iter().map(|c| c.len()).product();
            if combos > 200_000 {
                return Err(Error::SizeGuard(format!(
                    "tie-share enumeration needs {combos} combinations at one profile"
                )));
            }
            let mut idx = vec![0usize; tied_goods.len()];
            loop {
                let mut tb = TieBreak::empty();
                for (g, (j, buyers)) in tied_goods.iter().enumerate() {
                    let shares = &per_good[g][idx[g]];
                    let entries: Vec<(usize, Rat)> = buyers
                        .iter()
                        .zip(shares)
                        .filter(|(_, s)| **s > 0)
                        .map(|(b, s)| (*b, rat(*s as i64, t as i64)))
                        .collect();
                    if !entries.is_empty() {
                        tb.set(*j, entries);
                    }
                }
                tables.push(tb);
                let mut g = 0;
                loop {
                    if g == idx.len() {
                        break;
                    }
                    idx[g] += 1;
                    if idx[g] < per_good[g].len() {
                        break;
                    }
                    idx[g] = 0;
                    g += 1;
                }
                if g == idx.len() {
                    break;
                }
            }
        }

        for tb in tables {
            let cert = verify_equilibrium(instance, &alphas, &tb)?;
            if cert.status == Status::RoiOptimalNe {
                let key = (
                    cert.outcome.allocation.shares.clone(),
                    cert.outcome.payments.clone(),
                );
                if seen.insert(key) {
                    found.push(cert);
                }
            }
        }

        let mut pos = 0;
        loop {
            if pos == n {
                break;
            }
            digits[pos] += 1;
            if digits[pos] <= k {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }

    found.sort_by(|a, b| a.alphas.cmp(&b.alphas).then(a.outcome.payments.cmp(&b.outcome.payments)));
    Ok(found)
}

// === Verification under bid noise ===

/// Verdict for a profile when bids carry multiplicative noise: utilities
/// are `E[value] - C(E[payment])`, deviations are scanned on a factor
/// grid, and all comparisons carry Monte-Carlo tolerances.
#[derive(Debug, Clone)]
pub struct GammaVerdict {
    pub status: Status,
    pub expected: ExpectedOutcome,
    pub expected_utilities: Vec<f64>,
    pub roi_ok: Vec<bool>,
    pub nash_ok: Vec<bool>,
    /// Best estimated utility improvement any scanned deviation offered.
    pub deviation_gap: Vec<f64>,
}

fn cost_f64(curve: &CostCurve, p: f64, tol: f64) -> f64 {
    let budget = curve.budget().map(to_f64);
    if let Some(b) = budget {
        if p > b + tol {
            return f64::INFINITY;
        }
    }
    let p_eff = budget.map_or(p, |b| p.min(b)).max(0.0);
    let segs = curve.segments();
    let mut cost = 0.0;
    for (idx, (start, slope)) in segs.iter().enumerate() {
        let lo = to_f64(start);
        if p_eff <= lo {
            break;
        }
        let hi = segs
            .get(idx + 1)
            .map(|(s, _)| to_f64(s))
            .unwrap_or(f64::INFINITY)
            .min(p_eff);
        cost += to_f64(slope) * (hi - lo);
    }
    cost
}

/// Marginal-price range of `curve` over the payment interval
/// [p - tol, p + tol]: the left slope at the low end and the right slope
/// (infinite at a budget) at the high end.
fn slope_range_f64(curve: &CostCurve, p: f64, tol: f64) -> (f64, f64) {
    let p_lo = (p - tol).max(0.0);
    let p_hi = p + tol;
    let segs = curve.segments();
    let mut left = to_f64(&segs[0].1);
    for (start, slope) in segs {
        if to_f64(start) < p_lo {
            left = to_f64(slope);
        }
    }
    let right = match curve.budget() {
        Some(b) if p_hi >= to_f64(b) - 1e-12 => f64::INFINITY,
        _ => {
            let mut r = to_f64(&segs[0].1);
            for (start, slope) in segs {
                if to_f64(start) <= p_hi {
                    r = to_f64(slope);
                }
            }
            r
        }
    };
    (left, right)
}

fn uniform_bid_rows(instance: &MarketInstance, alphas: &[Rat]) -> Vec<Vec<Rat>> {
    instance
        .values
        .iter()
        .zip(alphas)
        .map(|(row, a)| row.iter().map(|v| v * a).collect())
        .collect()
}

/// Checks a scaling profile under a gamma model by Monte-Carlo: ROI
/// consistency of each expected payment, and no profitable deviation on
/// the {0, 1/grid, .., 1} factor grid, both up to three standard errors.
pub fn verify_under_gamma(
    instance: &MarketInstance,
    gamma: &GammaModel,
    alphas: &[Rat],
    grid: u32,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<GammaVerdict> {
    instance.ensure_valid()?;
    if grid == 0 {
        return Err(Error::invalid("deviation grid must be positive"));
    }
    let n = instance.n_buyers();
    let bids = uniform_bid_rows(instance, alphas);
    let base = expected_outcome(instance, gamma, &bids, samples, seed, workers)?;

    let buyer_utility = |est: &ExpectedOutcome, i: usize| -> f64 {
        let tol = 3.0 * est.payment_se[i] + 1e-9;
        est.values[i] - cost_f64(&instance.curves[i], est.payments[i], tol)
    };

    let mut expected_utilities = Vec::with_capacity(n);
    let mut roi_ok = Vec::with_capacity(n);
    let mut nash_ok = Vec::with_capacity(n);
    let mut deviation_gap = Vec::with_capacity(n);

    for i in 0..n {
        let u_base = buyer_utility(&base, i);
        expected_utilities.push(u_base);

        let tol = 3.0 * base.payment_se[i] + 1e-9;
        let (lo, hi) = slope_range_f64(&instance.curves[i], base.payments[i], tol);
        let target = if alphas[i].is_zero() {
            f64::INFINITY
        } else {
            1.0 / to_f64(&alphas[i])
        };
        roi_ok.push(
            instance.values[i].iter().all(|v| v.is_zero())
                || (target >= lo - 1e-9 && (hi.is_infinite() || target <= hi + 1e-9)),
        );

        // Common random numbers: deviations reuse the same seed, so shared
        // noise largely cancels in the comparison.
        let mut gap = f64::NEG_INFINITY;
        let mut ok = true;
        let lipschitz = to_f64(instance.curves[i].last_slope());
        for s in 0..=grid {
            let a = rat(s as i64, grid as i64);
            if a == alphas[i] {
                continue;
            }
            let mut dev_bids = bids.clone();
            dev_bids[i] = instance.values[i].iter().map(|v| v * &a).collect();
            let est = expected_outcome(instance, gamma, &dev_bids, samples, seed, workers)?;
            let u_dev = buyer_utility(&est, i);
            let slack =
                3.0 * (est.value_se[i] + base.value_se[i] + lipschitz * (est.payment_se[i] + base.payment_se[i]))
                    + 1e-7;
            let g = u_dev - u_base;
            gap = gap.max(g);
            if g > slack {
                ok = false;
            }
        }
        nash_ok.push(ok);
        deviation_gap.push(gap);
    }

    let all_nash = nash_ok.iter().all(|b| *b);
    let all_roi = roi_ok.iter().all(|b| *b);
    let status = match (all_nash, all_roi) {
        (true, true) => Status::RoiOptimalNe,
        (true, false) => Status::NeNotRoiOptimal,
        (false, _) => Status::NotNe,
    };
    Ok(GammaVerdict {
        status,
        expected: base,
        expected_utilities,
        roi_ok,
        nash_ok,
        deviation_gap,
    })
}
