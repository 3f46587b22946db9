//! Expectations under multiplicative bid noise.
//!
//! Effective bids are `gamma_ij * b_ij` with independent per-(buyer, good)
//! modifiers supported on [0, 1]. Expectations are estimated by Monte-Carlo
//! with a counter-based generator: every random number is a pure function
//! of (seed, stream, counter), so results are bit-identical for a given
//! seed regardless of how samples are partitioned across workers. Samples
//! accumulate in fixed 4096-sample chunks merged in chunk order.
//!
//! This is the only floating-point module in the crate. Estimates carry
//! standard errors; exact closed forms cover the two-bidder uniform duel
//! and the smoothed-game extra good, pinning accuracy where it can be
//! checked.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::market::MarketInstance;
use crate::rational::{rat, to_f64, Rat};
use crate::Result;

// === Deterministic counter-based randomness ===

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw on [0, 1) fully determined by (seed, stream, counter).
pub fn unit_uniform(seed: u64, stream: u64, counter: u64) -> f64 {
    let mixed = splitmix64(splitmix64(splitmix64(seed).wrapping_add(stream)).wrapping_add(counter));
    (mixed >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stream ids: per-(buyer, good) modifiers occupy the low streams, the
/// smoothed game's per-buyer modifiers a tagged range.
fn gamma_stream(i: usize, j: usize, m: usize) -> u64 {
    1 + (i * m + j) as u64
}

pub(crate) const PER_BUYER_TAG: u64 = 0x4000_0000_0000_0000;

// === Gamma model ===

/// Distribution of one bid modifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GammaSpec {
    Point(Rat),
    Uniform(Rat, Rat),
}

impl GammaSpec {
    fn check(&self) -> Result<()> {
        let ok = match self {
            GammaSpec::Point(r) => !r.is_negative() && *r <= Rat::one(),
            GammaSpec::Uniform(a, b) => !a.is_negative() && *b <= Rat::one() && a <= b,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("gamma support must stay within [0, 1]"))
        }
    }
}

/// Independent modifier per (buyer, good).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaModel {
    pub specs: Vec<Vec<GammaSpec>>,
}

impl GammaModel {
    /// The deterministic model: every modifier is exactly 1.
    pub fn point_mass_one(n: usize, m: usize) -> Self {
        GammaModel {
            specs: vec![vec![GammaSpec::Point(Rat::one()); m]; n],
        }
    }

    /// Same distribution everywhere.
    pub fn broadcast(spec: GammaSpec, n: usize, m: usize) -> Self {
        GammaModel {
            specs: vec![vec![spec; m]; n],
        }
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.specs.len() != n || self.specs.iter().any(|r| r.len() != m) {
            return Err(Error::invalid("gamma model shape mismatch"));
        }
        for row in &self.specs {
            for spec in row {
                spec.check()?;
            }
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        self.specs
            .iter()
            .flatten()
            .all(|s| matches!(s, GammaSpec::Point(_)))
    }
}

#[derive(Clone, Copy)]
enum GammaF64 {
    Point(f64),
    Uniform(f64, f64),
}

impl GammaF64 {
    fn draw(&self, u: f64) -> f64 {
        match self {
            GammaF64::Point(r) => *r,
            GammaF64::Uniform(a, b) => a + u * (b - a),
        }
    }
}

fn lower_gamma(model: &GammaModel) -> Vec<Vec<GammaF64>> {
    model
        .specs
        .iter()
        .map(|row| {
            row.iter()
                .map(|s| match s {
                    GammaSpec::Point(r) => GammaF64::Point(to_f64(r)),
                    GammaSpec::Uniform(a, b) => GammaF64::Uniform(to_f64(a), to_f64(b)),
                })
                .collect()
        })
        .collect()
}

// === Sampled clearing ===

/// Clears one sampled bid matrix. Exact ties, an event of measure zero for
/// atomless modifiers, go entirely to the lowest buyer index.
fn clear_sample<'a>(
    ebids: &'a [f64],
    n: usize,
    m: usize,
    reserves: &'a [f64],
) -> impl Iterator<Item = (usize, Option<(usize, f64)>)> + 'a {
    (0..m).map(move |j| {
        let mut top = 0.0f64;
        let mut second = 0.0f64;
        let mut winner = usize::MAX;
        for i in 0..n {
            let e = ebids[i * m + j];
            if e > top {
                second = top;
                top = e;
                winner = i;
            } else if e > second {
                second = e;
            }
        }
        if top <= 0.0 || top < reserves[j] {
            (j, None)
        } else {
            let price = second.max(reserves[j]);
            (j, Some((winner, price)))
        }
    })
}

/// Monte-Carlo estimate of the cleared market under a gamma model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedOutcome {
    pub allocation: Vec<Vec<f64>>,
    pub payments: Vec<f64>,
    pub values: Vec<f64>,
    pub payment_se: Vec<f64>,
    pub value_se: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
}

const CHUNK: u64 = 4096;

#[derive(Clone)]
struct ChunkSums {
    alloc: Vec<f64>,
    pay: Vec<f64>,
    val: Vec<f64>,
    pay_sq: Vec<f64>,
    val_sq: Vec<f64>,
}

impl ChunkSums {
    fn zero(n: usize, m: usize) -> Self {
        ChunkSums {
            alloc: vec![0.0; n * m],
            pay: vec![0.0; n],
            val: vec![0.0; n],
            pay_sq: vec![0.0; n],
            val_sq: vec![0.0; n],
        }
    }
}

/// Estimates expected allocation, payments, and buyer values at fixed bids.
/// Reserves apply to the post-modifier effective bids. Deterministic for a
/// given seed independent of `workers`.
pub fn expected_outcome(
    instance: &MarketInstance,
    gamma: &GammaModel,
    bids: &[Vec<Rat>],
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<ExpectedOutcome> {
    let n = instance.n_buyers();
    let m = instance.n_goods();
    gamma.validate(n, m)?;
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if bids.len() != n || bids.iter().any(|r| r.len() != m) {
        return Err(Error::invalid("bid matrix shape mismatch"));
    }

    let bid_f: Vec<f64> = bids.iter().flatten().map(to_f64).collect();
    let val_f: Vec<f64> = instance.values.iter().flatten().map(to_f64).collect();
    let res_f: Vec<f64> = instance.reserves.iter().map(to_f64).collect();
    let gamma_f = lower_gamma(gamma);

    let n_chunks = samples.div_ceil(CHUNK);
    let run_chunk = |c: u64| -> ChunkSums {
        let mut sums = ChunkSums::zero(n, m);
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(samples);
        let mut gbuf = vec![0.0f64; n * m];
        let mut ebuf = vec![0.0f64; n * m];
        for s in lo..hi {
            for i in 0..n {
                for j in 0..m {
                    let g = gamma_f[i][j].draw(unit_uniform(seed, gamma_stream(i, j, m), s));
                    gbuf[i * m + j] = g;
                    ebuf[i * m + j] = g * bid_f[i * m + j];
                }
            }
            let mut pay_s = vec![0.0f64; n];
            let mut val_s = vec![0.0f64; n];
            for (j, sale) in clear_sample(&ebuf, n, m, &res_f) {
                if let Some((w, price)) = sale {
                    sums.alloc[w * m + j] += 1.0;
                    pay_s[w] += price;
                    val_s[w] += gbuf[w * m + j] * val_f[w * m + j];
                }
            }
            for i in 0..n {
                sums.pay[i] += pay_s[i];
                sums.val[i] += val_s[i];
                sums.pay_sq[i] += pay_s[i] * pay_s[i];
                sums.val_sq[i] += val_s[i] * val_s[i];
            }
        }
        sums
    };

    let workers = workers.max(1);
    let mut chunk_results: Vec<Option<ChunkSums>> = vec![None; n_chunks as usize];
    if workers == 1 {
        for c in 0..n_chunks {
            chunk_results[c as usize] = Some(run_chunk(c));
        }
    } else {
        let next = AtomicU64::new(0);
        let slots = Mutex::new(&mut chunk_results);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let c = next.fetch_add(1, Ordering::Relaxed);
                    if c >= n_chunks {
                        break;
                    }
                    let sums = run_chunk(c);
                    slots.lock().unwrap()[c as usize] = Some(sums);
                });
            }
        });
    }

    // Merge strictly in chunk order so float summation is reproducible.
    let mut total = ChunkSums::zero(n, m);
    for sums in chunk_results.into_iter().flatten() {
        for (t, s) in total.alloc.iter_mut().zip(&sums.alloc) {
            *t += s;
        }
        for i in 0..n {
            total.pay[i] += sums.pay[i];
            total.val[i] += sums.val[i];
            total.pay_sq[i] += sums.pay_sq[i];
            total.val_sq[i] += sums.val_sq[i];
        }
    }

    let sf = samples as f64;
    let se = |sum: f64, sum_sq: f64| -> f64 {
        if samples < 2 {
            return 0.0;
        }
        let mean = sum / sf;
        let var = ((sum_sq - sf * mean * mean) / (sf - 1.0)).max(0.0);
        (var / sf).sqrt()
    };
    Ok(ExpectedOutcome {
        allocation: (0..n)
            .map(|i| (0..m).map(|j| total.alloc[i * m + j] / sf).collect())
            .collect(),
        payments: total.pay.iter().map(|p| p / sf).collect(),
        values: total.val.iter().map(|v| v / sf).collect(),
        payment_se: (0..n).map(|i| se(total.pay[i], total.pay_sq[i])).collect(),
        value_se: (0..n).map(|i| se(total.val[i], total.val_sq[i])).collect(),
        samples,
        seed,
    })
}

// === Closed-form oracle: one good, two bidders, uniform modifiers ===

/// Exact win probabilities and expected second-price payments for a single
/// zero-reserve good contested by effective bids `X ~ U[xa, xb]` and
/// `Y ~ U[ya, yb]` (degenerate intervals allowed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuelStats {
    pub win_a: Rat,
    pub pay_a: Rat,
    pub win_b: Rat,
    pub pay_b: Rat,
}

/// P(X > y) for X ~ U[xa, xb].
fn win_prob_against(xa: &Rat, xb: &Rat, y: &Rat) -> Rat {
    if y < xa {
        Rat::one()
    } else if y >= xb {
        Rat::zero()
    } else {
        (xb - y) / (xb - xa)
    }
}

/// (P(X > Y), E[Y * 1{X > Y}]) by piecewise integration over Y's support.
fn win_and_pay(xa: &Rat, xb: &Rat, ya: &Rat, yb: &Rat) -> (Rat, Rat) {
    if ya == yb {
        let p = win_prob_against(xa, xb, ya);
        return (p.clone(), ya * p);
    }
    let width = yb - ya;
    let mut prob = Rat::zero();
    let mut pay = Rat::zero();
    // Region where X surely wins: y < xa.
    let hi = ya.clone().max(xa.clone().min(yb.clone()));
    if hi > *ya {
        prob += (&hi - ya) / &width;
        pay += (&hi * &hi - ya * ya) / (rat(2, 1) * &width);
    }
    // Region of partial wins: xa <= y <= xb, weight (xb - y)/(xb - xa).
    if xb > xa {
        let lo = ya.clone().max(xa.clone());
        let hi = yb.clone().min(xb.clone());
        if hi > lo {
            let denom = (xb - xa) * &width;
            // integral of (xb - y) dy
            let p_num = xb * (&hi - &lo) - (&hi * &hi - &lo * &lo) / rat(2, 1);
            // integral of y (xb - y) dy
            let w_num = xb * (&hi * &hi - &lo * &lo) / rat(2, 1)
                - (&hi * &hi * &hi - &lo * &lo * &lo) / rat(3, 1);
            prob += p_num / &denom;
            pay += w_num / &denom;
        }
    }
    (prob, pay)
}

/// Both bidders' exact stats; a zero-probability exact tie of two point
/// masses goes to bidder A, matching the sampling convention.
pub fn two_bidder_uniform_duel(
    x: (&Rat, &Rat),
    y: (&Rat, &Rat),
) -> DuelStats {
    if x.0 == x.1 && y.0 == y.1 && x.0 == y.0 {
        return DuelStats {
            win_a: Rat::one(),
            pay_a: y.0.clone(),
            win_b: Rat::zero(),
            pay_b: Rat::zero(),
        };
    }
    let (win_a, pay_a) = win_and_pay(x.0, x.1, y.0, y.1);
    let (win_b, pay_b) = win_and_pay(y.0, y.1, x.0, x.1);
    DuelStats {
        win_a,
        pay_a,
        win_b,
        pay_b,
    }
}

// === Smoothed-game expectations ===

/// Expected payment of one buyer in the smoothed game at profile `alphas`:
/// Monte-Carlo over per-buyer modifiers on the real goods, plus the exact
/// extra-good term `alpha^2 * delta * E[gamma^2] / 4` from bidding
/// `gamma * alpha * delta` against a uniform [0, 2*delta] reserve.
#[derive(Debug, Clone)]
pub struct PerturbedPayment {
    pub real_goods: f64,
    pub extra_good: f64,
    pub total: f64,
}

/// E[gamma^2] for gamma ~ U[1 - delta, 1].
pub fn gamma_square_mean(delta: &Rat) -> Rat {
    Rat::one() - delta + delta * delta / rat(3, 1)
}

pub fn perturbed_expected_payment(
    instance: &MarketInstance,
    delta: &Rat,
    i: usize,
    alphas: &[Rat],
    samples: u64,
    seed: u64,
) -> Result<PerturbedPayment> {
    let n = instance.n_buyers();
    let m = instance.n_goods();
    if alphas.len() != n {
        return Err(Error::invalid("scaling profile length mismatch"));
    }
    let delta_f = to_f64(delta);
    let alpha_f: Vec<f64> = alphas.iter().map(to_f64).collect();
    let val_f: Vec<f64> = instance.values.iter().flatten().map(to_f64).collect();
    let res_f: Vec<f64> = instance.reserves.iter().map(to_f64).collect();

    let mut pay_sum = 0.0f64;
    let mut ebuf = vec![0.0f64; n * m];
    for s in 0..samples {
        for k in 0..n {
            let g = 1.0 - delta_f * unit_uniform(seed, PER_BUYER_TAG ^ k as u64, s);
            for j in 0..m {
                ebuf[k * m + j] = g * alpha_f[k] * val_f[k * m + j];
            }
        }
        for (_, sale) in clear_sample(&ebuf, n, m, &res_f) {
            if let Some((w, price)) = sale {
                if w == i {
                    pay_sum += price;
                }
            }
        }
    }
    let real_goods = pay_sum / samples as f64;
    let extra_good =
        to_f64(&(&alphas[i] * &alphas[i] * delta * gamma_square_mean(delta) / rat(4, 1)));
    Ok(PerturbedPayment {
        real_goods,
        extra_good,
        total: real_goods + extra_good,
    })
}

// === Continuity of expectations in a single scaling factor ===

#[derive(Debug, Clone)]
pub struct ContinuityReport {
    pub step: f64,
    pub max_value_jump: f64,
    pub max_payment_jump: f64,
}

/// Sweeps buyer `i`'s factor over a uniform grid with common random
/// numbers and reports the largest successive change of the estimated
/// expected value and payment. Atomless modifiers make both vanish with
/// the step size; point masses can hold a persistent jump at a tie.
pub fn continuity_probe(
    instance: &MarketInstance,
    gamma: &GammaModel,
    i: usize,
    alphas: &[Rat],
    grid: u32,
    samples: u64,
    seed: u64,
) -> Result<ContinuityReport> {
    if grid < 1 {
        return Err(Error::invalid("grid must have at least one step"));
    }
    let mut prev: Option<(f64, f64)> = None;
    let mut max_value_jump = 0.0f64;
    let mut max_payment_jump = 0.0f64;
    for t in 0..=grid {
        let mut profile = alphas.to_vec();
        profile[i] = rat(t as i64, grid as i64);
        let bids: Vec<Vec<Rat>> = instance
            .values
            .iter()
            .zip(&profile)
            .map(|(row, a)| row.iter().map(|v| v * a).collect())
            .collect();
        let est = expected_outcome(instance, gamma, &bids, samples, seed, 1)?;
        let point = (est.values[i], est.payments[i]);
        if let Some((pv, pp)) = prev {
            max_value_jump = max_value_jump.max((point.0 - pv).abs());
            max_payment_jump = max_payment_jump.max((point.1 - pp).abs());
        }
        prev = Some(point);
    }
    Ok(ContinuityReport {
        step: 1.0 / grid as f64,
        max_value_jump,
        max_payment_jump,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::CostCurve;
    use crate::rational::rint;

    fn cross_instance() -> MarketInstance {
        MarketInstance {
            values: vec![vec![rint(2), rint(1)], vec![rint(1), rint(2)]],
            curves: vec![
                CostCurve::quasi_linear(Some(rat(1, 2))),
                CostCurve::quasi_linear(Some(rat(1, 2))),
            ],
            reserves: vec![rint(0), rint(0)],
        }
    }

    fn uniform_bids(instance: &MarketInstance, alphas: &[Rat]) -> Vec<Vec<Rat>> {
        instance
            .values
            .iter()
            .zip(alphas)
            .map(|(row, a)| row.iter().map(|v| v * a).collect())
            .collect()
    }

    #[test]
    fn point_mass_one_reproduces_the_deterministic_auction() {
        let inst = cross_instance();
        let gamma = GammaModel::point_mass_one(2, 2);
        let bids = uniform_bids(&inst, &[rat(1, 2), rat(1, 2)]);
        let est = expected_outcome(&inst, &gamma, &bids, 5000, 7, 1).unwrap();
        assert_eq!(est.allocation, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(est.payments, vec![0.5, 0.5]);
        assert_eq!(est.values, vec![2.0, 2.0]);
        assert_eq!(est.payment_se, vec![0.0, 0.0]);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let inst = cross_instance();
        let gamma = GammaModel::broadcast(GammaSpec::Uniform(rat(1, 2), rint(1)), 2, 2);
        let bids = uniform_bids(&inst, &[rat(1, 2), rat(2, 3)]);
        let a = expected_outcome(&inst, &gamma, &bids, 20_000, 42, 1).unwrap();
        let b = expected_outcome(&inst, &gamma, &bids, 20_000, 42, 3).unwrap();
        let c = expected_outcome(&inst, &gamma, &bids, 20_000, 42, 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        // Different seed, different stream of samples.
        let d = expected_outcome(&inst, &gamma, &bids, 20_000, 43, 1).unwrap();
        assert_ne!(a.payments, d.payments);
    }

    #[test]
    fn duel_closed_forms_match_hand_integrals() {
        // Two point masses: plain second price.
        let s = two_bidder_uniform_duel((&rint(2), &rint(2)), (&rat(3, 2), &rat(3, 2)));
        assert_eq!(s.win_a, rint(1));
        assert_eq!(s.pay_a, rat(3, 2));
        assert_eq!(s.win_b, rint(0));

        // Both uniform on [0, 1]: win 1/2 each, expected payment 1/6.
        let s = two_bidder_uniform_duel((&rint(0), &rint(1)), (&rint(0), &rint(1)));
        assert_eq!(s.win_a, rat(1, 2));
        assert_eq!(s.pay_a, rat(1, 6));
        assert_eq!(s.pay_b, rat(1, 6));

        // Point 3/4 against U[1/2, 1].
        let s = two_bidder_uniform_duel((&rat(3, 4), &rat(3, 4)), (&rat(1, 2), &rint(1)));
        assert_eq!(s.win_a, rat(1, 2));
        assert_eq!(s.pay_a, rat(5, 16));
        assert_eq!(s.win_b, rat(1, 2));
        assert_eq!(s.pay_b, rat(3, 8));

        // Exact tie of point masses goes to bidder A.
        let s = two_bidder_uniform_duel((&rint(1), &rint(1)), (&rint(1), &rint(1)));
        assert_eq!(s.win_a, rint(1));
        assert_eq!(s.win_b, rint(0));
    }

    #[test]
    fn monte_carlo_agrees_with_duel_oracle() {
        let inst = MarketInstance {
            values: vec![vec![rint(1)], vec![rint(1)]],
            curves: vec![
                CostCurve::quasi_linear(None),
                CostCurve::quasi_linear(None),
            ],
            reserves: vec![rint(0)],
        };
        let gamma = GammaModel::broadcast(GammaSpec::Uniform(rat(3, 5), rint(1)), 2, 1);
        let bids = vec![vec![rat(9, 10)], vec![rat(4, 5)]];
        let est = expected_outcome(&inst, &gamma, &bids, 40_000, 5, 2).unwrap();
        let oracle = two_bidder_uniform_duel(
            (&rat(27, 50), &rat(9, 10)),
            (&rat(12, 25), &rat(4, 5)),
        );
        for (mc, (exact, se)) in [
            (est.payments[0], (to_f64(&oracle.pay_a), est.payment_se[0])),
            (est.payments[1], (to_f64(&oracle.pay_b), est.payment_se[1])),
        ] {
            assert!(
                (mc - exact).abs() <= 3.0 * se + 1e-12,
                "mc {mc} vs exact {exact} (se {se})"
            );
        }
        let win_a = est.allocation[0][0];
        assert!((win_a - to_f64(&oracle.win_a)).abs() < 0.01);
    }

    #[test]
    fn extra_good_term_is_exact_and_increasing() {
        let inst = cross_instance();
        let delta = rat(1, 10);
        // alpha = 1, gamma ~ U[9/10, 1]: E[g^2] = 1 - 1/10 + 1/300.
        let p1 = perturbed_expected_payment(&inst, &delta, 0, &[rint(1), rint(1)], 64, 3).unwrap();
        let expect = to_f64(&(rat(1, 10) * gamma_square_mean(&delta) / rat(4, 1)));
        assert!((p1.extra_good - expect).abs() < 1e-15);
        let p_half =
            perturbed_expected_payment(&inst, &delta, 0, &[rat(1, 2), rint(1)], 64, 3).unwrap();
        assert!(p_half.extra_good < p1.extra_good);
        // Zero factor contributes nothing.
        let p0 = perturbed_expected_payment(&inst, &delta, 0, &[rint(0), rint(1)], 64, 3).unwrap();
        assert_eq!(p0.extra_good, 0.0);
        assert_eq!(p0.real_goods, 0.0);
    }

    #[test]
    fn continuity_jumps_vanish_only_for_atomless_gamma() {
        let inst = cross_instance();
        let smooth = GammaModel::broadcast(GammaSpec::Uniform(rat(1, 2), rint(1)), 2, 2);
        let alphas = [rat(1, 2), rat(1, 2)];
        let fine = continuity_probe(&inst, &smooth, 0, &alphas, 40, 4000, 11).unwrap();
        let coarse = continuity_probe(&inst, &smooth, 0, &alphas, 10, 4000, 11).unwrap();
        assert!(fine.max_payment_jump < coarse.max_payment_jump + 0.02);
        assert!(fine.max_payment_jump < 0.1);

        // Point mass: buyer 0 overtakes buyer 1 on good 0 at a sharp
        // threshold, so the payment estimate jumps by the full price no
        // matter how fine the grid.
        let point = GammaModel::point_mass_one(2, 2);
        let probe = continuity_probe(&inst, &point, 0, &alphas, 40, 200, 11).unwrap();
        assert!(probe.max_payment_jump > 0.2);
    }
}
