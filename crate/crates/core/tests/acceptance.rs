//! End-to-end acceptance gate: thirteen behavioral criteria, one printed
//! pass/fail line each.
//!
//! This target opts out of the default test harness so the per-criterion
//! lines always reach stdout in order under `cargo test --workspace`, and
//! the process exit code reflects the overall verdict.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::exit;
use std::time::Instant;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use paceq_core::auction::{competing_prices, run_auction, utility, BidProfile, TieBreak};
use paceq_core::benchmarks::{
    check_bounds, optimal_transferable_welfare, sequential_posted_revenue, transferable_welfare,
};
use paceq_core::equilibrium::{
    enumerate_equilibria_grid, verify_equilibrium, verify_under_gamma, Status,
};
use paceq_core::frontier::roi_best_response;
use paceq_core::market::{Allocation, CostCurve, MarketInstance};
use paceq_core::rational::{rat, rint, to_f64, ExtRat, Rat};
use paceq_core::solver::{solve, SolveOptions};
use paceq_core::stochastic::{expected_outcome, two_bidder_uniform_duel, GammaModel, GammaSpec};

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

type Check = fn() -> Result<(), String>;

fn main() {
    let criteria: [(&str, Check); 13] = [
        (
            "solve certifies the symmetric profile on the budget-capped cross instance exactly",
            c01_solve_symmetric,
        ),
        (
            "verify certifies the asymmetric tie-split profile exactly",
            c02_verify_tie_split,
        ),
        (
            "single-good best responses are mutual and clear at the second price",
            c03_single_good_replies,
        ),
        (
            "grid enumeration finds the three expected outcome classes",
            c04_enumeration_classes,
        ),
        (
            "welfare guarantee is tight at exactly one half",
            c05_welfare_tightness,
        ),
        (
            "revenue guarantee is tight at exactly one half",
            c06_revenue_tightness,
        ),
        (
            "500 random zero-reserve instances: certified welfare is at least half the optimum",
            c07_welfare_bound_suite,
        ),
        (
            "500 random reserve instances: certified revenue is at least half of posted pricing for every arrival order",
            c08_revenue_bound_suite,
        ),
        (
            "200 cases: the best-response oracle dominates and matches a 1000-point factor grid",
            c09_best_response_oracle,
        ),
        (
            "100 instances: the welfare optimizer agrees with a step-0.01 brute-force grid",
            c10_welfare_lp_vs_grid,
        ),
        (
            "smoothing schedule shrinks level to level, lands within 1e-4, and certifies",
            c11_schedule_convergence,
        ),
        (
            "noise expectations match exact oracles and are bit-for-bit reproducible",
            c12_stochastic_oracles,
        ),
        (
            "noisy profile classified as Nash but not ROI-consistent, with the welfare gap",
            c13_noisy_classification,
        ),
    ];

    let mut failed = 0usize;
    for (idx, (name, run)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let (ok, detail) = match outcome {
            Ok(Ok(())) => (true, None),
            Ok(Err(msg)) => (false, Some(msg)),
            Err(_) => (false, Some("panicked".to_string())),
        };
        println!(
            "criterion {:02} {} ({:6.2}s) {}",
            idx + 1,
            if ok { "PASS" } else { "FAIL" },
            clock.elapsed().as_secs_f64(),
            name
        );
        if let Some(msg) = detail {
            println!("             reason: {msg}");
        }
        if !ok {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} of 13 criteria failed");
        exit(1);
    }
    println!("acceptance: all 13 criteria passed");
}

// === Fixed instances ===

/// Two buyers, two goods, crossed values (2,1)/(1,2), linear cost with a
/// hard budget of 1/2 each, no reserves.
fn budget_capped_cross() -> MarketInstance {
    MarketInstance {
        values: vec![vec![rint(2), rint(1)], vec![rint(1), rint(2)]],
        curves: vec![
            CostCurve::quasi_linear(Some(rat(1, 2))),
            CostCurve::quasi_linear(Some(rat(1, 2))),
        ],
        reserves: vec![Rat::zero(), Rat::zero()],
    }
}

/// Same crossed values, but the budget is replaced by a soft kink: slope 1
/// up to spend 1/2, slope 10 beyond, unbounded.
fn kinked_cross() -> MarketInstance {
    let curve = CostCurve::new(vec![(Rat::zero(), rint(1)), (rat(1, 2), rint(10))], None).unwrap();
    MarketInstance {
        values: vec![vec![rint(2), rint(1)], vec![rint(1), rint(2)]],
        curves: vec![curve.clone(), curve],
        reserves: vec![Rat::zero(), Rat::zero()],
    }
}

/// One good; a linear-cost buyer valuing it at 2 against a buyer valuing
/// it at 150 whose money costs 100 per unit.
fn single_good_pair() -> MarketInstance {
    MarketInstance {
        values: vec![vec![rint(2)], vec![rint(150)]],
        curves: vec![
            CostCurve::quasi_linear(None),
            CostCurve::new(vec![(Rat::zero(), rint(100))], None).unwrap(),
        ],
        reserves: vec![Rat::zero()],
    }
}

/// One good; a budget-1/10 buyer valuing it at 1 against an unconstrained
/// linear-cost buyer valuing it at 1/2.
fn budget_vs_linear() -> MarketInstance {
    MarketInstance {
        values: vec![vec![rint(1)], vec![rat(1, 2)]],
        curves: vec![
            CostCurve::quasi_linear(Some(rat(1, 10))),
            CostCurve::quasi_linear(None),
        ],
        reserves: vec![Rat::zero()],
    }
}

/// The tightness instance: values (1,0)/(1+eps,1) with eps = 1/10, unit
/// budgets, and the given reserves.
fn tight_pair(reserves: Vec<Rat>) -> MarketInstance {
    MarketInstance {
        values: vec![vec![rint(1), rint(0)], vec![rat(11, 10), rint(1)]],
        curves: vec![
            CostCurve::quasi_linear(Some(rint(1))),
            CostCurve::quasi_linear(Some(rint(1))),
        ],
        reserves,
    }
}

// === Random instance family (n, m <= 3, denominators <= 8, <= 3 segments) ===

fn random_curve(rng: &mut ChaCha8Rng) -> CostCurve {
    let pieces = rng.gen_range(1..=3usize);
    let mut segments = vec![(
        Rat::zero(),
        rint(1) + rat(rng.gen_range(0..=4), rng.gen_range(1..=4)),
    )];
    for _ in 1..pieces {
        let (start, slope) = segments[segments.len() - 1].clone();
        segments.push((
            start + rat(rng.gen_range(1..=4), rng.gen_range(1..=4)),
            slope + rat(rng.gen_range(1..=4), rng.gen_range(1..=4)),
        ));
    }
    let budget = if rng.gen_bool(0.5) {
        Some(
            segments[segments.len() - 1].0.clone()
                + rat(rng.gen_range(1..=4), rng.gen_range(1..=4)),
        )
    } else {
        None
    };
    CostCurve::new(segments, budget).expect("generated curve is structurally valid")
}

fn random_sized_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    zero_reserves: bool,
) -> MarketInstance {
    let values = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| rat(rng.gen_range(0..=8), rng.gen_range(1..=8)))
                .collect()
        })
        .collect();
    let curves = (0..n).map(|_| random_curve(rng)).collect();
    let reserves = (0..m)
        .map(|_| {
            if zero_reserves {
                Rat::zero()
            } else {
                rat(rng.gen_range(0..=8), rng.gen_range(1..=8))
            }
        })
        .collect();
    MarketInstance {
        values,
        curves,
        reserves,
    }
}

fn random_instance(rng: &mut ChaCha8Rng, zero_reserves: bool) -> MarketInstance {
    let n = rng.gen_range(1..=3usize);
    let m = rng.gen_range(1..=3usize);
    random_sized_instance(rng, n, m, zero_reserves)
}

fn exact_solve_options() -> SolveOptions {
    SolveOptions {
        use_perturbed: false,
        ..SolveOptions::default()
    }
}

// === Criteria ===

fn c01_solve_symmetric() -> Result<(), String> {
    let inst = budget_capped_cross();
    let report = solve(&inst, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let cert = report
        .certificate()
        .ok_or_else(|| format!("no certificate; attempts: {:?}", report.attempts))?;
    ensure!(cert.status == Status::RoiOptimalNe, "status {:?}", cert.status);
    ensure!(
        cert.alphas == vec![rat(1, 2), rat(1, 2)],
        "factors {:?}",
        cert.alphas
    );
    ensure!(
        cert.outcome.payments == vec![rat(1, 2), rat(1, 2)],
        "payments {:?}",
        cert.outcome.payments
    );
    for (i, v) in cert.verdicts.iter().enumerate() {
        ensure!(
            v.achieved_utility == ExtRat::Fin(rat(3, 2)),
            "buyer {i} utility {:?}, want 3/2",
            v.achieved_utility
        );
    }
    Ok(())
}

fn c02_verify_tie_split() -> Result<(), String> {
    let inst = budget_capped_cross();
    let mut tb = TieBreak::empty();
    tb.set(0, vec![(0, rat(3, 4)), (1, rat(1, 4))]);
    let cert =
        verify_equilibrium(&inst, &[rat(1, 3), rat(2, 3)], &tb).map_err(|e| e.to_string())?;
    ensure!(cert.status == Status::RoiOptimalNe, "status {:?}", cert.status);
    ensure!(
        cert.outcome.allocation.shares[0][0] == rat(3, 4)
            && cert.outcome.allocation.shares[1][0] == rat(1, 4),
        "tie shares on good 0: {:?}",
        (
            &cert.outcome.allocation.shares[0][0],
            &cert.outcome.allocation.shares[1][0]
        )
    );
    ensure!(
        cert.outcome.payments == vec![rat(1, 2), rat(1, 2)],
        "payments {:?}",
        cert.outcome.payments
    );
    Ok(())
}

fn c03_single_good_replies() -> Result<(), String> {
    let inst = single_good_pair();
    let bids = BidProfile::raw(vec![vec![rint(2)], vec![rat(3, 2)]]);

    let c0 = competing_prices(&inst, &bids, 0);
    ensure!(c0 == vec![rat(3, 2)], "competing price for buyer 0: {c0:?}");
    let br0 = roi_best_response(&inst, 0, &c0, None).map_err(|e| e.to_string())?;
    let bid0 = &br0.alpha * &inst.values[0][0];
    ensure!(bid0 == rint(2), "buyer 0 replies with bid {bid0}");

    let c1 = competing_prices(&inst, &bids, 1);
    ensure!(c1 == vec![rint(2)], "competing price for buyer 1: {c1:?}");
    let br1 = roi_best_response(&inst, 1, &c1, None).map_err(|e| e.to_string())?;
    let bid1 = &br1.alpha * &inst.values[1][0];
    ensure!(bid1 == rat(3, 2), "buyer 1 replies with bid {bid1}");

    let out = run_auction(&inst, &bids, &TieBreak::empty()).map_err(|e| e.to_string())?;
    ensure!(
        out.allocation.shares[0][0] == rint(1),
        "winner share {:?}",
        out.allocation.shares[0][0]
    );
    ensure!(out.prices[0] == rat(3, 2), "price {:?}", out.prices[0]);
    let u = utility(&inst, 0, &out);
    ensure!(u == ExtRat::Fin(rat(1, 2)), "winner utility {u:?}");
    Ok(())
}

fn c04_enumeration_classes() -> Result<(), String> {
    let certs = enumerate_equilibria_grid(&kinked_cross(), 60, 12).map_err(|e| e.to_string())?;
    ensure!(certs.len() == 3, "{} outcome classes, want 3", certs.len());
    for cert in &certs {
        ensure!(
            cert.status == Status::RoiOptimalNe,
            "class at {:?} has status {:?}",
            cert.alphas,
            cert.status
        );
    }
    let diag = certs.iter().filter(|c| c.welfare == rat(13, 10)).count();
    let split = certs.iter().filter(|c| c.welfare == rat(51, 40)).count();
    ensure!(
        diag == 1 && split == 2,
        "welfare classes: 13/10 x{diag}, 51/40 x{split} among {:?}",
        certs.iter().map(|c| c.welfare.to_string()).collect::<Vec<_>>()
    );
    Ok(())
}

fn c05_welfare_tightness() -> Result<(), String> {
    let inst = tight_pair(vec![Rat::zero(), Rat::zero()]);
    let cert = verify_equilibrium(&inst, &[rint(1), rint(1)], &TieBreak::empty())
        .map_err(|e| e.to_string())?;
    ensure!(cert.status == Status::RoiOptimalNe, "status {:?}", cert.status);
    let bounds = check_bounds(&inst, &cert.outcome).map_err(|e| e.to_string())?;
    ensure!(bounds.welfare.applicable, "welfare bound not applicable");
    ensure!(
        bounds.welfare.equilibrium == rint(1) && bounds.welfare.optimal == rint(2),
        "welfare {} vs optimum {}",
        bounds.welfare.equilibrium,
        bounds.welfare.optimal
    );
    ensure!(
        bounds.welfare.ratio == Some(rat(1, 2)) && bounds.welfare.holds,
        "ratio {:?}",
        bounds.welfare.ratio
    );
    Ok(())
}

fn c06_revenue_tightness() -> Result<(), String> {
    let inst = tight_pair(vec![rint(1), rint(1)]);
    let cert = verify_equilibrium(&inst, &[rint(1), rint(1)], &TieBreak::empty())
        .map_err(|e| e.to_string())?;
    ensure!(cert.status == Status::RoiOptimalNe, "status {:?}", cert.status);
    ensure!(
        cert.outcome.revenue == rint(1),
        "equilibrium revenue {}",
        cert.outcome.revenue
    );
    let posted = sequential_posted_revenue(&inst, &inst.reserves, &[0, 1])
        .map_err(|e| e.to_string())?;
    ensure!(posted.revenue == rint(2), "posted revenue {}", posted.revenue);

    let bounds = check_bounds(&inst, &cert.outcome).map_err(|e| e.to_string())?;
    ensure!(bounds.revenue.exhaustive, "arrival orders not exhaustive");
    ensure!(bounds.revenue.holds, "revenue bound failed for some order");
    let worst = bounds
        .revenue
        .rows
        .iter()
        .filter_map(|r| r.ratio.clone())
        .min()
        .ok_or("no posted revenue rows")?;
    ensure!(worst == rat(1, 2), "worst order ratio {worst}");
    Ok(())
}

fn c07_welfare_bound_suite() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = exact_solve_options();
    let mut certified = 0usize;
    for case in 0..500 {
        let inst = random_instance(&mut rng, true);
        let report = solve(&inst, &opts).map_err(|e| format!("case {case}: {e}"))?;
        let Some(cert) = report.certificate() else {
            continue;
        };
        certified += 1;
        let (opt, _) =
            optimal_transferable_welfare(&inst).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(
            &cert.welfare * rint(2) >= opt,
            "case {case}: welfare {} below half of optimum {}",
            cert.welfare,
            opt
        );
    }
    ensure!(certified >= 400, "only {certified}/500 instances certified");
    Ok(())
}

fn c08_revenue_bound_suite() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = exact_solve_options();
    let mut certified = 0usize;
    for case in 0..500 {
        let inst = random_instance(&mut rng, false);
        let report = solve(&inst, &opts).map_err(|e| format!("case {case}: {e}"))?;
        let Some(cert) = report.certificate() else {
            continue;
        };
        certified += 1;
        let bounds =
            check_bounds(&inst, &cert.outcome).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(
            bounds.revenue.exhaustive,
            "case {case}: arrival orders not exhaustive"
        );
        ensure!(
            bounds.revenue.holds,
            "case {case}: revenue {} below half of posted pricing for some order",
            bounds.revenue.equilibrium
        );
    }
    ensure!(certified >= 400, "only {certified}/500 instances certified");
    Ok(())
}

fn c09_best_response_oracle() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..200 {
        let inst = random_instance(&mut rng, false);
        let (n, m) = (inst.n_buyers(), inst.n_goods());
        let rows: Vec<Vec<Rat>> = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| rat(rng.gen_range(0..=8), rng.gen_range(1..=8)))
                    .collect()
            })
            .collect();
        let bids = BidProfile::raw(rows);
        let c = competing_prices(&inst, &bids, 0);
        let br = roi_best_response(&inst, 0, &c, None).map_err(|e| format!("case {case}: {e}"))?;
        let claimed = ExtRat::Fin(br.utility.clone());

        // Exact utility of the uniform-scaling deviation `alpha` against the
        // fixed competing prices, under the no-tiebreak convention (a tied
        // bid wins nothing).
        let deviation_utility = |alpha: &Rat| -> ExtRat {
            let mut value = Rat::zero();
            let mut spend = Rat::zero();
            for j in 0..m {
                if inst.values[0][j].is_zero() {
                    continue;
                }
                if &inst.values[0][j] * alpha > c[j] {
                    value += &inst.values[0][j];
                    spend += &c[j];
                }
            }
            match inst.curves[0].cost_ext(&spend) {
                ExtRat::Fin(cost) => ExtRat::Fin(value - cost),
                _ => ExtRat::NegInf,
            }
        };

        for k in 0..=1000i64 {
            let alpha = rat(k, 1000);
            let u = deviation_utility(&alpha);
            ensure!(
                claimed >= u,
                "case {case}: grid factor {alpha} beats the oracle ({u:?} > {claimed:?})"
            );
            if alpha > br.alpha_lo && alpha < br.alpha_hi {
                ensure!(
                    u == claimed,
                    "case {case}: interior factor {alpha} reaches {u:?}, oracle claims {claimed:?}"
                );
            }
        }

        // The claimed optimum is achievable through the real auction using
        // the oracle's own factor and tie shares.
        let mut tb = TieBreak::empty();
        for (j, share) in &br.tie_requirement {
            if !share.is_zero() {
                tb.set(*j, vec![(0, share.clone())]);
            }
        }
        let own_row: Vec<Rat> = inst.values[0].iter().map(|v| v * &br.alpha).collect();
        let replay = run_auction(&inst, &bids.with_row(0, own_row), &tb)
            .map_err(|e| format!("case {case}: {e}"))?;
        let achieved = utility(&inst, 0, &replay);
        ensure!(
            achieved == claimed,
            "case {case}: replay at the oracle factor reaches {achieved:?}, oracle claims {claimed:?}"
        );
    }
    Ok(())
}

/// All ways to split `total` grid steps among `parts` buyers.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            let mut row = vec![first];
            row.append(&mut rest);
            out.push(row);
        }
    }
    out
}

fn c10_welfare_lp_vs_grid() -> Result<(), String> {
    const STEP: u32 = 100;
    let sizes = [(1usize, 1usize), (1, 2), (1, 3), (2, 1), (2, 2), (3, 1)];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for case in 0..100 {
        let (n, m) = sizes[rng.gen_range(0..sizes.len())];
        let inst = random_sized_instance(&mut rng, n, m, true);
        let (opt, _) =
            optimal_transferable_welfare(&inst).map_err(|e| format!("case {case}: {e}"))?;

        // Brute force: every allocation that splits each good across buyers
        // in multiples of 1/STEP (giving away all supply is optimal because
        // welfare is monotone in shares).
        let splits = compositions(STEP, n);
        let mut pick = vec![0usize; m];
        let mut grid_max = Rat::zero();
        loop {
            let mut welfare = Rat::zero();
            for i in 0..n {
                let mut value = Rat::zero();
                for j in 0..m {
                    value += &inst.values[i][j] * rat(splits[pick[j]][i] as i64, STEP as i64);
                }
                welfare += inst.curves[i]
                    .inverse_cost(&value)
                    .map_err(|e| format!("case {case}: {e}"))?;
            }
            grid_max = grid_max.max(welfare);

            let mut j = 0;
            loop {
                if j == m {
                    break;
                }
                pick[j] += 1;
                if pick[j] < splits.len() {
                    break;
                }
                pick[j] = 0;
                j += 1;
            }
            if j == m {
                break;
            }
        }

        ensure!(
            grid_max <= opt,
            "case {case}: grid found {grid_max} above the claimed optimum {opt}"
        );
        // Rounding the optimal shares down to the grid loses at most
        // sum_ij v_ij / STEP of welfare (the inverse cost is 1-Lipschitz).
        let tol: Rat = inst
            .values
            .iter()
            .flatten()
            .cloned()
            .sum::<Rat>()
            / rint(STEP as i64);
        ensure!(
            &opt - &grid_max <= tol,
            "case {case}: optimum {opt} exceeds grid {grid_max} by more than {tol}"
        );
    }
    Ok(())
}

fn c11_schedule_convergence() -> Result<(), String> {
    for (label, inst) in [
        ("budget-capped", budget_capped_cross()),
        ("kinked", kinked_cross()),
    ] {
        let report = solve(&inst, &SolveOptions::default()).map_err(|e| e.to_string())?;
        let cert = report
            .certificate()
            .ok_or_else(|| format!("{label}: no certificate"))?;
        let run = report
            .perturbation
            .as_ref()
            .ok_or_else(|| format!("{label}: no smoothing trace"))?;

        let diffs: Vec<f64> = run.tiers.iter().filter_map(|t| t.diff_from_previous).collect();
        ensure!(diffs.len() >= 3, "{label}: only {} levels", diffs.len());
        ensure!(
            diffs.windows(2).all(|w| w[1] <= w[0]),
            "{label}: level-to-level moves not monotone: {diffs:?}"
        );

        ensure!(
            cert.alphas == vec![rat(1, 2), rat(1, 2)],
            "{label}: limit factors {:?}",
            cert.alphas
        );
        for (i, (x, a)) in run.extrapolated.iter().zip(&cert.alphas).enumerate() {
            let err = (x - to_f64(a)).abs();
            ensure!(
                err <= 1e-4,
                "{label}: pre-rounding factor {i} off by {err:.2e}"
            );
        }
        let again = verify_equilibrium(&inst, &cert.alphas, &cert.tiebreak)
            .map_err(|e| e.to_string())?;
        ensure!(
            again.status == Status::RoiOptimalNe,
            "{label}: final certificate does not re-verify"
        );
    }
    Ok(())
}

fn c12_stochastic_oracles() -> Result<(), String> {
    // Point-mass noise reproduces the exact auction bit for bit (both
    // instances clear without ties and with dyadic outcomes).
    for (inst, alphas) in [
        (budget_capped_cross(), vec![rat(1, 2), rat(1, 2)]),
        (single_good_pair(), vec![rint(1), rat(1, 100)]),
    ] {
        let (n, m) = (inst.n_buyers(), inst.n_goods());
        let bids: Vec<Vec<Rat>> = inst
            .values
            .iter()
            .zip(&alphas)
            .map(|(row, a)| row.iter().map(|v| v * a).collect())
            .collect();
        let exact = run_auction(&inst, &BidProfile::raw(bids.clone()), &TieBreak::empty())
            .map_err(|e| e.to_string())?;
        let gamma = GammaModel::point_mass_one(n, m);
        let est = expected_outcome(&inst, &gamma, &bids, 1000, 3, 2).map_err(|e| e.to_string())?;
        for i in 0..n {
            for j in 0..m {
                ensure!(
                    est.allocation[i][j] == to_f64(&exact.allocation.shares[i][j]),
                    "allocation[{i}][{j}] {} vs exact {}",
                    est.allocation[i][j],
                    to_f64(&exact.allocation.shares[i][j])
                );
            }
            ensure!(
                est.payments[i] == to_f64(&exact.payments[i]),
                "payment[{i}] {} vs exact {}",
                est.payments[i],
                to_f64(&exact.payments[i])
            );
            let bundle = inst.bundle_value(i, &exact.allocation.shares[i]);
            ensure!(
                est.values[i] == to_f64(&bundle),
                "value[{i}] {} vs exact {}",
                est.values[i],
                to_f64(&bundle)
            );
            ensure!(
                est.payment_se[i] == 0.0,
                "payment se[{i}] {} for a deterministic model",
                est.payment_se[i]
            );
        }
    }

    // Uniform-noise duel against the closed-form oracle at 1e5 samples.
    let duel = MarketInstance {
        values: vec![vec![rint(1)], vec![rint(1)]],
        curves: vec![CostCurve::quasi_linear(None), CostCurve::quasi_linear(None)],
        reserves: vec![Rat::zero()],
    };
    let gamma = GammaModel {
        specs: vec![
            vec![GammaSpec::Uniform(rat(1, 2), rint(1))],
            vec![GammaSpec::Uniform(rat(1, 3), rint(1))],
        ],
    };
    let bids = vec![vec![rat(3, 4)], vec![rat(2, 3)]];
    // Effective bids: U[3/8, 3/4] against U[2/9, 2/3].
    let stats = two_bidder_uniform_duel((&rat(3, 8), &rat(3, 4)), (&rat(2, 9), &rat(2, 3)));
    let samples = 100_000u64;
    let est = expected_outcome(&duel, &gamma, &bids, samples, 12, 3).map_err(|e| e.to_string())?;
    let binomial_se = |p: f64| (p * (1.0 - p) / samples as f64).sqrt();
    for (i, (win, pay)) in [(&stats.win_a, &stats.pay_a), (&stats.win_b, &stats.pay_b)]
        .into_iter()
        .enumerate()
    {
        let dw = (est.allocation[i][0] - to_f64(win)).abs();
        ensure!(
            dw <= 3.0 * binomial_se(to_f64(win)) + 1e-12,
            "buyer {i} win rate off by {dw:.2e}"
        );
        let dp = (est.payments[i] - to_f64(pay)).abs();
        ensure!(
            dp <= 3.0 * est.payment_se[i] + 1e-12,
            "buyer {i} expected payment off by {dp:.2e}"
        );
    }

    // Identical results regardless of how the samples are split up.
    for workers in [1usize, 2, 5] {
        let again =
            expected_outcome(&duel, &gamma, &bids, samples, 12, workers).map_err(|e| e.to_string())?;
        ensure!(
            again.allocation == est.allocation
                && again.payments == est.payments
                && again.values == est.values
                && again.payment_se == est.payment_se
                && again.value_se == est.value_se,
            "results differ at {workers} workers"
        );
    }
    Ok(())
}

fn c13_noisy_classification() -> Result<(), String> {
    let inst = budget_vs_linear();
    let gamma = GammaModel::broadcast(GammaSpec::Uniform(rat(1, 2), rint(1)), 2, 1);
    let verdict = verify_under_gamma(&inst, &gamma, &[rint(1), Rat::zero()], 16, 100_000, 0, 2)
        .map_err(|e| e.to_string())?;
    ensure!(
        verdict.status == Status::NeNotRoiOptimal,
        "status {:?}",
        verdict.status
    );
    ensure!(
        verdict.nash_ok == vec![true, true],
        "nash flags {:?}",
        verdict.nash_ok
    );
    ensure!(
        verdict.roi_ok == vec![true, false],
        "roi flags {:?}",
        verdict.roi_ok
    );

    // The reported welfare gap: the profile's allocation is worth 1/10,
    // while handing the good to the quiet buyer is worth 1/2.
    let bids = BidProfile::raw(vec![vec![rint(1)], vec![Rat::zero()]]);
    let out = run_auction(&inst, &bids, &TieBreak::empty()).map_err(|e| e.to_string())?;
    let equilibrium = transferable_welfare(&inst, &out.allocation).map_err(|e| e.to_string())?;
    ensure!(equilibrium == rat(1, 10), "equilibrium welfare {equilibrium}");
    let mut alt = Allocation::empty(2, 1);
    alt.shares[1][0] = rint(1);
    let alternative = transferable_welfare(&inst, &alt).map_err(|e| e.to_string())?;
    ensure!(alternative == rat(1, 2), "alternative welfare {alternative}");
    ensure!(
        &equilibrium / &alternative == rat(1, 5),
        "gap ratio {}",
        &equilibrium / &alternative
    );
    Ok(())
}
