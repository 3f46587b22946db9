//! Welfare and revenue benchmarks for certified outcomes.
//!
//! Transferable welfare values an allocation by what each buyer would pay
//! for it, `sum_i inverse_cost(value_i)`. The optimum over allocations is a
//! linear program after decomposing each concave inverse-cost into
//! capacity-bounded segments. The revenue benchmark prices goods at the
//! reserves and lets buyers purchase greedily one at a time.

use itertools::Itertools;
use num_traits::{Signed, Zero};

use crate::auction::Outcome;
use crate::error::Error;
use crate::market::{Allocation, MarketInstance};
use crate::rational::{rint, ExtRat, Rat};
use crate::simplex::{maximize, StandardLp};
use crate::Result;

/// Sum over buyers of willingness to pay for their share of `allocation`.
pub fn transferable_welfare(instance: &MarketInstance, allocation: &Allocation) -> Result<Rat> {
    allocation.check_feasible(instance.n_goods())?;
    let mut total = Rat::zero();
    for i in 0..instance.n_buyers() {
        let value = instance.bundle_value(i, &allocation.shares[i]);
        total += instance.curves[i].inverse_cost(&value)?;
    }
    Ok(total)
}

/// Maximum transferable welfare over all feasible allocations, with a
/// witness. Exact: the concave objective is linearized per cost segment and
/// solved by the rational simplex.
pub fn optimal_transferable_welfare(instance: &MarketInstance) -> Result<(Rat, Allocation)> {
    instance.ensure_valid()?;
    let n = instance.n_buyers();
    let m = instance.n_goods();

    // Variables: x_ij (allocation), then per buyer a chain of segment
    // variables w_ik in value units with capacity C(end_k) - C(start_k)
    // and objective weight 1/s_k. Value past a hard budget buys nothing.
    let mut objective = vec![Rat::zero(); n * m];
    let mut seg_index = Vec::new();
    for (i, curve) in instance.curves.iter().enumerate() {
        let bundle: Rat = instance.values[i].iter().cloned().sum();
        let mut segs = Vec::new();
        let pieces = curve.segments();
        for (k, (start, slope)) in pieces.iter().enumerate() {
            if let Some(b) = curve.budget() {
                if start >= b {
                    break;
                }
            }
            let end_cost = match pieces.get(k + 1) {
                Some((next, _)) => {
                    let end = match curve.budget() {
                        Some(b) => next.clone().min(b.clone()),
                        None => next.clone(),
                    };
                    Some(curve.cost(&end)?)
                }
                None => curve.budget().map(|b| curve.cost(b)).transpose()?,
            };
            let start_cost = curve.cost(start)?;
            let cap = match end_cost {
                Some(e) => e - &start_cost,
                // Unbounded last segment: value is capped by the bundle
                // itself, which keeps the program in standard form.
                None => bundle.clone(),
            };
            if cap.is_positive() {
                segs.push(cap);
                objective.push(rint(1) / slope);
            }
        }
        seg_index.push(segs);
    }
    let total_vars = objective.len();

    let mut constraints = Vec::new();
    // Unit supply per good.
    for j in 0..m {
        let mut row = vec![Rat::zero(); total_vars];
        for i in 0..n {
            row[i * m + j] = rint(1);
        }
        constraints.push((row, rint(1)));
    }
    // Per buyer: segment value drawn is at most bundle value received, and
    // each segment respects its capacity.
    let mut offset = n * m;
    for i in 0..n {
        let segs = &seg_index[i];
        let mut link = vec![Rat::zero(); total_vars];
        for j in 0..m {
            link[i * m + j] = -instance.values[i][j].clone();
        }
        for k in 0..segs.len() {
            link[offset + k] = rint(1);
            let mut cap_row = vec![Rat::zero(); total_vars];
            cap_row[offset + k] = rint(1);
            constraints.push((cap_row, segs[k].clone()));
        }
        constraints.push((link, Rat::zero()));
        offset += segs.len();
    }

    let (value, solution) = maximize(&StandardLp {
        objective,
        constraints,
    })?;
    let mut witness = Allocation::empty(n, m);
    for i in 0..n {
        for j in 0..m {
            witness.shares[i][j] = solution[i * m + j].clone();
        }
    }
    Ok((value, witness))
}

/// One buyer's greedy purchase against posted prices from the remaining
/// supply: goods in decreasing value-per-price order, buying while the
/// ratio weakly dominates the marginal cost of money, with a fractional
/// final purchase. Free valued goods are taken outright.
pub fn posted_price_purchase(
    instance: &MarketInstance,
    i: usize,
    prices: &[Rat],
    remaining: &[Rat],
) -> Result<(Vec<Rat>, Rat)> {
    let m = instance.n_goods();
    let mut bought = vec![Rat::zero(); m];
    let mut spend = Rat::zero();
    let curve = &instance.curves[i];

    let mut priced: Vec<(usize, Rat)> = Vec::new();
    for j in 0..m {
        if instance.values[i][j].is_zero() || remaining[j].is_zero() {
            continue;
        }
        if prices[j].is_zero() {
            bought[j] = remaining[j].clone();
        } else {
            priced.push((j, &instance.values[i][j] / &prices[j]));
        }
    }
    priced.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    for (j, ratio) in priced {
        let cap = match curve.spend_cap(&ratio) {
            ExtRat::PosInf => None,
            ExtRat::Fin(c) => Some(c),
            ExtRat::NegInf => unreachable!(),
        };
        let afford = match cap {
            None => remaining[j].clone(),
            Some(c) => {
                if c <= spend {
                    // Caps only shrink as the ratio drops.
                    break;
                }
                remaining[j].clone().min((c - &spend) / &prices[j])
            }
        };
        if afford.is_zero() {
            continue;
        }
        spend += &afford * &prices[j];
        bought[j] = afford;
    }
    Ok((bought, spend))
}

/// One arrival order's posted-price run.
#[derive(Debug, Clone)]
pub struct OrderRun {
    pub order: Vec<usize>,
    pub purchases: Vec<Vec<Rat>>,
    pub revenue: Rat,
}

/// Buyers arrive in `order` and purchase greedily at the posted `prices`;
/// supply decrements as it sells.
pub fn sequential_posted_revenue(
    instance: &MarketInstance,
    prices: &[Rat],
    order: &[usize],
) -> Result<OrderRun> {
    let n = instance.n_buyers();
    let m = instance.n_goods();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(Error::invalid("arrival order is not a permutation"));
    }
    let mut remaining = vec![rint(1); m];
    let mut purchases = vec![vec![Rat::zero(); m]; n];
    let mut revenue = Rat::zero();
    for &i in order {
        let (row, spend) = posted_price_purchase(instance, i, prices, &remaining)?;
        for j in 0..m {
            remaining[j] -= &row[j];
        }
        revenue += spend;
        purchases[i] = row;
    }
    Ok(OrderRun {
        order: order.to_vec(),
        purchases,
        revenue,
    })
}

#[derive(Debug, Clone)]
pub struct WelfareReport {
    pub equilibrium: Rat,
    pub optimal: Rat,
    pub witness: Allocation,
    /// None when the optimum is zero.
    pub ratio: Option<Rat>,
    /// The welfare guarantee is only claimed at zero reserves.
    pub applicable: bool,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct RevenueOrderRow {
    pub order: Vec<usize>,
    pub posted_revenue: Rat,
    pub ratio: Option<Rat>,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct RevenueReport {
    pub equilibrium: Rat,
    pub rows: Vec<RevenueOrderRow>,
    /// True when every arrival order was enumerated.
    pub exhaustive: bool,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub welfare: WelfareReport,
    pub revenue: RevenueReport,
}

/// Checks the two-sided guarantees of a certified outcome: transferable
/// welfare at least half the optimum (zero reserves only), and revenue at
/// least half of sequential posted pricing at the reserves for every
/// arrival order (all orders for up to 6 buyers, rotations beyond).
pub fn check_bounds(instance: &MarketInstance, outcome: &Outcome) -> Result<BoundsReport> {
    let n = instance.n_buyers();
    let equilibrium = transferable_welfare(instance, &outcome.allocation)?;
    let (optimal, witness) = optimal_transferable_welfare(instance)?;
    let applicable = instance.reserves.iter().all(|r| r.is_zero());
    let ratio = if optimal.is_zero() {
        None
    } else {
        Some(&equilibrium / &optimal)
    };
    let holds = !applicable || &equilibrium * rint(2) >= optimal;
    let welfare = WelfareReport {
        equilibrium,
        optimal,
        witness,
        ratio,
        applicable,
        holds,
    };

    let orders: Vec<Vec<usize>> = if n <= 6 {
        (0..n).permutations(n).collect()
    } else {
        (0..n)
            .map(|s| (0..n).map(|i| (i + s) % n).collect())
            .collect()
    };
    let mut rows = Vec::new();
    let mut all_hold = true;
    for order in orders {
        let run = sequential_posted_revenue(instance, &instance.reserves, &order)?;
        let ratio = if run.revenue.is_zero() {
            None
        } else {
            Some(&outcome.revenue / &run.revenue)
        };
        let holds = &outcome.revenue * rint(2) >= run.revenue;
        all_hold &= holds;
        rows.push(RevenueOrderRow {
            order,
            posted_revenue: run.revenue,
            ratio,
            holds,
        });
    }
    let revenue = RevenueReport {
        equilibrium: outcome.revenue.clone(),
        rows,
        exhaustive: n <= 6,
        holds: all_hold,
    };

    Ok(BoundsReport { welfare, revenue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::{run_auction, BidProfile, TieBreak};
    use crate::market::CostCurve;
    use crate::rational::rat;

    fn cross_instance_hard() -> MarketInstance {
        MarketInstance {
            values: vec![vec![rint(2), rint(1)], vec![rint(1), rint(2)]],
            curves: vec![
                CostCurve::quasi_linear(Some(rat(1, 2))),
                CostCurve::quasi_linear(Some(rat(1, 2))),
            ],
            reserves: vec![rint(0), rint(0)],
        }
    }

    fn cross_instance_soft() -> MarketInstance {
        let curve = CostCurve::new(vec![(rint(0), rint(1)), (rat(1, 2), rint(10))], None).unwrap();
        MarketInstance {
            values: vec![vec![rint(2), rint(1)], vec![rint(1), rint(2)]],
            curves: vec![curve.clone(), curve],
            reserves: vec![rint(0), rint(0)],
        }
    }

    fn tight_instance(reserves: Vec<Rat>) -> MarketInstance {
        MarketInstance {
            values: vec![
                vec![rint(1), rint(0)],
                vec![rat(11, 10), rint(1)],
            ],
            curves: vec![
                CostCurve::quasi_linear(Some(rint(1))),
                CostCurve::quasi_linear(Some(rint(1))),
            ],
            reserves,
        }
    }

    fn diag_allocation() -> Allocation {
        Allocation {
            shares: vec![vec![rint(1), rint(0)], vec![rint(0), rint(1)]],
        }
    }

    #[test]
    fn welfare_saturates_at_willingness_to_pay() {
        let hard = cross_instance_hard();
        assert_eq!(
            transferable_welfare(&hard, &diag_allocation()).unwrap(),
            rint(1)
        );
        assert_eq!(
            transferable_welfare(&hard, &Allocation::empty(2, 2)).unwrap(),
            rint(0)
        );

        let soft = cross_instance_soft();
        assert_eq!(
            transferable_welfare(&soft, &diag_allocation()).unwrap(),
            rat(13, 10)
        );
        // Asymmetric split: buyer 0 keeps 3/4 of good 0, buyer 1 the rest
        // plus good 1. Welfare 0.6 + 0.675.
        let asym = Allocation {
            shares: vec![vec![rat(3, 4), rint(0)], vec![rat(1, 4), rint(1)]],
        };
        assert_eq!(transferable_welfare(&soft, &asym).unwrap(), rat(51, 40));
    }

    #[test]
    fn lp_optimum_matches_hand_computed_instances() {
        let (opt, witness) = optimal_transferable_welfare(&cross_instance_hard()).unwrap();
        assert_eq!(opt, rint(1));
        assert_eq!(
            transferable_welfare(&cross_instance_hard(), &witness).unwrap(),
            opt
        );

        let (opt, witness) = optimal_transferable_welfare(&cross_instance_soft()).unwrap();
        assert_eq!(opt, rat(13, 10));
        assert_eq!(
            transferable_welfare(&cross_instance_soft(), &witness).unwrap(),
            opt
        );

        let (opt, witness) = optimal_transferable_welfare(&tight_instance(vec![
            rint(0),
            rint(0),
        ]))
        .unwrap();
        assert_eq!(opt, rint(2));
        assert_eq!(witness.shares[0][0], rint(1));
        assert_eq!(witness.shares[1][1], rint(1));
    }

    #[test]
    fn greedy_purchase_respects_budget_and_indifference() {
        let tight = tight_instance(vec![rint(1), rint(1)]);
        let full = vec![rint(1), rint(1)];
        // Ratio exactly 1 against marginal cost 1: weak inequality buys.
        let (row, spend) = posted_price_purchase(&tight, 0, &tight.reserves, &full).unwrap();
        assert_eq!(row, vec![rint(1), rint(0)]);
        assert_eq!(spend, rint(1));
        // Buyer 1 sees only good 1 left.
        let (row, spend) =
            posted_price_purchase(&tight, 1, &tight.reserves, &[rint(0), rint(1)]).unwrap();
        assert_eq!(row, vec![rint(0), rint(1)]);
        assert_eq!(spend, rint(1));

        let zero_values = MarketInstance {
            values: vec![vec![rint(0), rint(0)]],
            curves: vec![CostCurve::quasi_linear(None)],
            reserves: vec![rint(1), rint(1)],
        };
        let (row, spend) =
            posted_price_purchase(&zero_values, 0, &[rint(1), rint(1)], &full).unwrap();
        assert_eq!(row, vec![rint(0), rint(0)]);
        assert_eq!(spend, rint(0));
    }

    #[test]
    fn budget_limits_fractional_purchases() {
        let inst = cross_instance_hard();
        let prices = vec![rat(2, 5), rat(2, 5)];
        let run = sequential_posted_revenue(&inst, &prices, &[0, 1]).unwrap();
        // Buyer 0 takes good 0 and a quarter of good 1, exhausting 1/2.
        assert_eq!(run.purchases[0], vec![rint(1), rat(1, 4)]);
        // Buyer 1 takes the remaining 3/4 of good 1 for 3/10.
        assert_eq!(run.purchases[1], vec![rint(0), rat(3, 4)]);
        assert_eq!(run.revenue, rat(4, 5));
    }

    #[test]
    fn posted_revenue_depends_on_arrival_order() {
        let tight = tight_instance(vec![rint(1), rint(1)]);
        let first_then_second = sequential_posted_revenue(&tight, &tight.reserves, &[0, 1]).unwrap();
        assert_eq!(first_then_second.revenue, rint(2));
        // Buyer 1 arriving first buys good 0 and exhausts the budget, so
        // good 1 goes unsold.
        let reversed = sequential_posted_revenue(&tight, &tight.reserves, &[1, 0]).unwrap();
        assert_eq!(reversed.revenue, rint(1));
        assert!(sequential_posted_revenue(&tight, &tight.reserves, &[0, 0]).is_err());
    }

    #[test]
    fn bound_reports_on_the_tight_example() {
        // Zero-reserve variant: both goods to buyer 1 halves the welfare.
        let welf = tight_instance(vec![rint(0), rint(0)]);
        let bids = BidProfile::uniform(&welf, &[rint(1), rint(1)]).unwrap();
        let out = run_auction(&welf, &bids, &TieBreak::empty()).unwrap();
        let report = check_bounds(&welf, &out).unwrap();
        assert!(report.welfare.applicable);
        assert_eq!(report.welfare.equilibrium, rint(1));
        assert_eq!(report.welfare.optimal, rint(2));
        assert_eq!(report.welfare.ratio, Some(rat(1, 2)));
        assert!(report.welfare.holds && report.revenue.holds);

        // Reserve variant: only good 0 sells, for exactly the reserve.
        let resv = tight_instance(vec![rint(1), rint(1)]);
        let bids = BidProfile::uniform(&resv, &[rint(1), rint(1)]).unwrap();
        let out = run_auction(&resv, &bids, &TieBreak::empty()).unwrap();
        assert_eq!(out.revenue, rint(1));
        let report = check_bounds(&resv, &out).unwrap();
        assert!(!report.welfare.applicable);
        let worst = report
            .revenue
            .rows
            .iter()
            .filter_map(|r| r.ratio.clone())
            .min()
            .unwrap();
        assert_eq!(worst, rat(1, 2));
        assert!(report.revenue.holds);
        assert!(report.revenue.exhaustive);
    }
}
