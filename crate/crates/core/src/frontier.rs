//! Payment-to-value frontier of one buyer against fixed competing prices,
//! and ROI-optimal best responses on top of it.
//!
//! Against fixed per-good prices `c_j`, the best value obtainable for a
//! total spend `p` is the upper concave envelope of greedy purchases in
//! decreasing order of `v_ij / c_j`. The envelope is piecewise linear with
//! strictly decreasing slopes; goods sharing a ratio merge into a single
//! segment and are interchangeable on it. Zero-priced goods with positive
//! value are won by any positive bid and contribute value at zero spend.

use num_traits::{Signed, Zero};

use crate::error::Error;
use crate::market::MarketInstance;
use crate::rational::{format_rat, rat, rint, ExtRat, Rat};
use crate::Result;

/// Maximal run of goods with a common value-per-spend ratio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontierSegment {
    /// Value gained per unit of payment; strictly decreasing across segments.
    pub ratio: Rat,
    /// Goods on this segment as (good index, unit price, unit value).
    pub goods: Vec<(usize, Rat, Rat)>,
    pub pay_start: Rat,
    pub pay_end: Rat,
    pub val_start: Rat,
}

impl FrontierSegment {
    pub fn span(&self) -> Rat {
        &self.pay_end - &self.pay_start
    }
}

/// Piecewise-linear concave map from total spend to best achievable value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frontier {
    /// Goods won for free by any positive bid.
    pub free_goods: Vec<usize>,
    /// Value available at zero spend.
    pub free_value: Rat,
    pub segments: Vec<FrontierSegment>,
}

impl Frontier {
    /// Largest useful spend; the frontier is flat past this point.
    pub fn pay_end(&self) -> Rat {
        self.segments
            .last()
            .map(|s| s.pay_end.clone())
            .unwrap_or_else(Rat::zero)
    }

    pub fn total_value(&self) -> Rat {
        match self.segments.last() {
            Some(s) => &s.val_start + &s.ratio * s.span() + &self.free_value,
            None => self.free_value.clone(),
        }
    }

    /// Best value for spend `p`, flat beyond the last segment.
    pub fn value_at(&self, p: &Rat) -> Rat {
        debug_assert!(!p.is_negative());
        for seg in &self.segments {
            if *p <= seg.pay_end {
                return &self.free_value + &seg.val_start + &seg.ratio * (p - &seg.pay_start);
            }
        }
        self.total_value()
    }

    /// Right slope at `p`; zero at and past the end of the frontier.
    pub fn q_plus(&self, p: &Rat) -> Rat {
        for seg in &self.segments {
            if *p < seg.pay_end {
                return seg.ratio.clone();
            }
        }
        Rat::zero()
    }

    /// Left slope at `p`. At zero spend the convention `max(1, q_plus(0))`
    /// applies so the best-response interval stays well formed.
    pub fn q_minus(&self, p: &Rat) -> Rat {
        if p.is_zero() {
            return rint(1).max(self.q_plus(p));
        }
        for seg in &self.segments {
            if *p <= seg.pay_end {
                return seg.ratio.clone();
            }
        }
        Rat::zero()
    }

    /// Envelope vertices as (spend, value), starting at (0, free value).
    pub fn breakpoints(&self) -> Vec<(Rat, Rat)> {
        let mut pts = vec![(Rat::zero(), self.free_value.clone())];
        for seg in &self.segments {
            pts.push((
                seg.pay_end.clone(),
                &self.free_value + &seg.val_start + &seg.ratio * seg.span(),
            ));
        }
        pts
    }
}

/// Builds the frontier of buyer `i` against competing prices `c`.
pub fn build_frontier(instance: &MarketInstance, i: usize, c: &[Rat]) -> Frontier {
    let mut free_goods = Vec::new();
    let mut free_value = Rat::zero();
    let mut priced: Vec<(usize, Rat, Rat)> = Vec::new();
    for (j, v) in instance.values[i].iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        if c[j].is_zero() {
            free_goods.push(j);
            free_value += v;
        } else {
            priced.push((j, c[j].clone(), v.clone()));
        }
    }
    // Strictly descending ratio, goods of equal ratio in index order.
    priced.sort_by(|a, b| {
        let ra = &a.2 / &a.1;
        let rb = &b.2 / &b.1;
        rb.cmp(&ra).then(a.0.cmp(&b.0))
    });

    let mut segments: Vec<FrontierSegment> = Vec::new();
    let mut pay = Rat::zero();
    let mut val = Rat::zero();
    for (j, price, value) in priced {
        let ratio = &value / &price;
        match segments.last_mut() {
            Some(seg) if seg.ratio == ratio => {
                seg.pay_end += &price;
                seg.goods.push((j, price, value));
            }
            _ => {
                segments.push(FrontierSegment {
                    ratio,
                    pay_start: pay.clone(),
                    pay_end: &pay + &price,
                    val_start: val.clone(),
                    goods: vec![(j, price, value)],
                });
            }
        }
        let seg = segments.last().unwrap();
        pay = seg.pay_end.clone();
        val = &seg.val_start + &seg.ratio * seg.span();
    }
    Frontier {
        free_goods,
        free_value,
        segments,
    }
}

/// One buyer's optimal reply against fixed competing prices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestResponse {
    /// Smallest utility-maximizing spend on [0, min(frontier end, budget)].
    pub p_star: Rat,
    /// Largest utility-maximizing spend; utility is constant on
    /// `[p_star, p_star_hi]`, so any spend in between is equally optimal.
    pub p_star_hi: Rat,
    /// Frontier value at the optimal spend (free goods included).
    pub value: Rat,
    /// Maximum achievable utility, `value - cost(p_star)`.
    pub utility: Rat,
    /// All scaling factors realizing an ROI-optimal reply at `p_star`.
    pub alpha_lo: Rat,
    pub alpha_hi: Rat,
    /// Chosen representative: the caller's current factor when it already
    /// lies in the interval, otherwise the interval midpoint.
    pub alpha: Rat,
    pub kept_current: bool,
    /// Shares of tied goods needed to spend exactly `p_star` at `alpha`.
    pub tie_requirement: Vec<(usize, Rat)>,
}

/// Computes the ROI-optimal uniform-scaling best response of buyer `i`
/// against competing prices `c`. With `current` given, that factor is kept
/// whenever it already lies in the optimal interval (lazy mode).
pub fn roi_best_response(
    instance: &MarketInstance,
    i: usize,
    c: &[Rat],
    current: Option<&Rat>,
) -> Result<BestResponse> {
    let curve = &instance.curves[i];
    let frontier = build_frontier(instance, i, c);

    if instance.values[i].iter().all(|v| v.is_zero()) {
        // A zero-valuation buyer bids zero at every factor; all factors are
        // equally optimal and trivially ROI-feasible.
        let alpha = current.cloned().unwrap_or_else(|| rat(1, 2));
        return Ok(BestResponse {
            p_star: Rat::zero(),
            p_star_hi: Rat::zero(),
            value: Rat::zero(),
            utility: Rat::zero(),
            alpha_lo: Rat::zero(),
            alpha_hi: rint(1),
            alpha,
            kept_current: current.is_some(),
            tie_requirement: Vec::new(),
        });
    }

    let p_max = match curve.budget() {
        Some(b) => frontier.pay_end().min(b.clone()),
        None => frontier.pay_end(),
    };

    // Utility is piecewise linear on [0, p_max]; its maximum sits on a
    // frontier vertex, a cost kink, or an endpoint. Ties go to the
    // smallest spend.
    let mut candidates = vec![Rat::zero(), p_max.clone()];
    for seg in &frontier.segments {
        if seg.pay_end <= p_max {
            candidates.push(seg.pay_end.clone());
        }
    }
    for (start, _) in curve.segments() {
        if *start <= p_max {
            candidates.push(start.clone());
        }
    }
    candidates.sort();
    candidates.dedup();

    let mut p_star = Rat::zero();
    let mut p_star_hi = Rat::zero();
    let mut best = frontier.value_at(&Rat::zero()) - curve.cost(&Rat::zero())?;
    for p in candidates {
        let u = frontier.value_at(&p) - curve.cost(&p)?;
        if u > best {
            best = u;
            p_star = p.clone();
            p_star_hi = p;
        } else if u == best {
            // Utility is concave, so equal-best candidates extend one flat
            // maximizing interval whose ends are both vertices.
            p_star_hi = p;
        }
    }
    let value = frontier.value_at(&p_star);
    let utility = best;

    let (c_left, c_right) = curve.subderivative(&p_star)?;
    let q_plus = frontier.q_plus(&p_star);
    let q_minus = frontier.q_minus(&p_star);
    let r_lo = c_left.clone().max(q_plus);
    let r_hi = match c_right {
        ExtRat::Fin(r) => r.min(q_minus),
        _ => q_minus,
    };

    let (alpha_lo, alpha_hi) = if r_lo > r_hi {
        // Only possible at zero spend: marginal money is worth more than
        // the best good. The degenerate reply bids value over first slope.
        debug_assert!(p_star.is_zero());
        let a = rint(1) / curve.first_slope();
        (a.clone(), a)
    } else {
        (rint(1) / &r_hi, rint(1) / &r_lo)
    };

    let (alpha, kept_current) = match current {
        Some(a) if *a >= alpha_lo && *a <= alpha_hi => (a.clone(), true),
        _ => ((&alpha_lo + &alpha_hi) / rint(2), false),
    };

    let tie_requirement = tie_requirement_at(&frontier, &p_star, &alpha)?;

    Ok(BestResponse {
        p_star,
        p_star_hi,
        value,
        utility,
        alpha_lo,
        alpha_hi,
        alpha,
        kept_current,
        tie_requirement,
    })
}

/// Shares of equal-ratio goods buyer `i` must receive to spend exactly
/// `p_star` when bidding with factor `alpha`. Goods the factor wins
/// strictly need no entry; the marginal tied segment is filled in good
/// index order.
fn tie_requirement_at(frontier: &Frontier, p_star: &Rat, alpha: &Rat) -> Result<Vec<(usize, Rat)>> {
    if alpha.is_zero() {
        return Ok(Vec::new());
    }
    let r = rint(1) / alpha;
    let mut strict_spend = Rat::zero();
    let mut marginal: Option<&FrontierSegment> = None;
    for seg in &frontier.segments {
        if seg.ratio > r {
            strict_spend += seg.span();
        } else if seg.ratio == r {
            marginal = Some(seg);
        }
    }
    let need = p_star - &strict_spend;
    if need.is_negative() {
        return Err(Error::domain(format!(
            "factor {} overshoots the target spend {}",
            format_rat(alpha),
            format_rat(p_star)
        )));
    }
    if need.is_zero() {
        return Ok(Vec::new());
    }
    let seg = marginal.ok_or_else(|| {
        Error::domain(format!(
            "no tied segment can absorb residual spend {}",
            format_rat(&need)
        ))
    })?;
    let mut left = need;
    let mut shares = Vec::new();
    for (j, price, _) in &seg.goods {
        if left.is_zero() {
            break;
        }
        let share = (rint(1)).min(&left / price);
        left -= &share * price;
        shares.push((*j, share));
    }
    if !left.is_zero() {
        return Err(Error::domain(format!(
            "tied segment too short for residual spend {}",
            format_rat(&left)
        )));
    }
    Ok(shares)
}

/// Def-style ROI check at realized spend: `1/alpha` must support the cost
/// curve at the buyer's payment. A zero factor passes only where spending
/// is infeasible outright; a zero-valuation buyer passes vacuously.
pub fn is_roi_optimal(
    instance: &MarketInstance,
    i: usize,
    alpha: &Rat,
    payment: &Rat,
) -> Result<bool> {
    if instance.values[i].iter().all(|v| v.is_zero()) {
        return Ok(true);
    }
    // A spend past the hard budget is infeasible, hence never consistent.
    if matches!(instance.curves[i].cost_ext(payment), ExtRat::PosInf) {
        return Ok(false);
    }
    let (left, right) = instance.curves[i].subderivative(payment)?;
    if alpha.is_zero() {
        return Ok(right == ExtRat::PosInf);
    }
    let inv = rint(1) / alpha;
    Ok(inv >= left && ExtRat::Fin(inv) <= right)
}
