//! Simultaneous second-price clearing of divisible goods with reserves.
//!
//! Each good clears independently at `max(reserve, second-highest bid)`. A
//! bidder strictly above that price takes the whole unit. When the top bid
//! equals the price the good is tied: tied bidders receive exactly the
//! shares listed in the [`TieBreak`] (default zero) and pay the clearing
//! price per unit, which equals their own bid. Residual supply stays with
//! the seller. Zero bids never win, so a bid of zero means non-participation
//! even at a zero reserve.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::Error;
use crate::market::{Allocation, MarketInstance};
use crate::rational::{format_rat, rint, ExtRat, Rat};
use crate::Result;

/// Bid matrix, either `alpha_i * v_ij` for uniform scaling or raw rows for
/// deviation tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BidProfile {
    pub bids: Vec<Vec<Rat>>,
}

impl BidProfile {
    /// Uniform scaling profile: buyer `i` bids `alpha_i * v_ij` on every
    /// good. Scaling factors must lie in [0, 1].
    pub fn uniform(instance: &MarketInstance, alphas: &[Rat]) -> Result<Self> {
        if alphas.len() != instance.n_buyers() {
            return Err(Error::invalid(format!(
                "expected {} scaling factors, got {}",
                instance.n_buyers(),
                alphas.len()
            )));
        }
        for (i, a) in alphas.iter().enumerate() {
            if a < &Rat::zero() || a > &rint(1) {
                return Err(Error::invalid(format!(
                    "scaling factor of buyer {i} is {}, must lie in [0, 1]",
                    format_rat(a)
                )));
            }
        }
        let bids = instance
            .values
            .iter()
            .zip(alphas)
            .map(|(row, a)| row.iter().map(|v| v * a).collect())
            .collect();
        Ok(BidProfile { bids })
    }

    /// Arbitrary nonnegative bid rows.
    pub fn raw(bids: Vec<Vec<Rat>>) -> Self {
        BidProfile { bids }
    }

    /// Copy of this profile with buyer `i`'s row replaced.
    pub fn with_row(&self, i: usize, row: Vec<Rat>) -> Self {
        let mut bids = self.bids.clone();
        bids[i] = row;
        BidProfile { bids }
    }
}

/// Explicit resolution of clearing-price ties: for each tied good, shares
/// handed to (some of) the tied bidders. Goods and buyers not listed get
/// nothing; shares on a good may sum to less than the unit supply. The
/// auction accepts any such table — whether withholding tied supply is
/// admissible in equilibrium is judged separately by the verifier's
/// market-clearing condition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TieBreak {
    pub shares: BTreeMap<usize, Vec<(usize, Rat)>>,
}

impl TieBreak {
    pub fn empty() -> Self {
        TieBreak::default()
    }

    pub fn set(&mut self, good: usize, entries: Vec<(usize, Rat)>) {
        self.shares.insert(good, entries);
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }
}

/// Cleared market: allocation, per-good clearing prices, per-buyer
/// payments, and which goods were tied (with the tied bidder sets).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub allocation: Allocation,
    pub prices: Vec<Rat>,
    pub payments: Vec<Rat>,
    pub sold: Vec<bool>,
    pub ties: BTreeMap<usize, Vec<usize>>,
    pub revenue: Rat,
}

/// Prices buyer `i` actually competes against: the reserve or the best
/// other bid, whichever is higher.
pub fn competing_prices(instance: &MarketInstance, bids: &BidProfile, i: usize) -> Vec<Rat> {
    (0..instance.n_goods())
        .map(|j| {
            let mut c = instance.reserves[j].clone();
            for (k, row) in bids.bids.iter().enumerate() {
                if k != i && row[j] > c {
                    c = row[j].clone();
                }
            }
            c
        })
        .collect()
}

/// Clears every good at second prices under the given tie resolution.
///
/// Errors when the tie-break references a good that is not tied, a bidder
/// that is not in the tied set, or shares that are negative or sum past the
/// unit supply.
pub fn run_auction(
    instance: &MarketInstance,
    bids: &BidProfile,
    tiebreak: &TieBreak,
) -> Result<Outcome> {
    let n = instance.n_buyers();
    let m = instance.n_goods();
    if bids.bids.len() != n || bids.bids.iter().any(|r| r.len() != m) {
        return Err(Error::invalid("bid matrix shape mismatch"));
    }
    for (i, row) in bids.bids.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            if b < &Rat::zero() {
                return Err(Error::invalid(format!(
                    "bid of buyer {i} on good {j} is negative"
                )));
            }
        }
    }

    let mut allocation = Allocation::empty(n, m);
    let mut prices = Vec::with_capacity(m);
    let mut payments = vec![Rat::zero(); n];
    let mut sold = vec![false; m];
    let mut ties = BTreeMap::new();

    for j in 0..m {
        let reserve = &instance.reserves[j];
        let top = bids
            .bids
            .iter()
            .map(|row| row[j].clone())
            .max()
            .expect("at least one buyer");
        let second = bids
            .bids
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                // Drop exactly one copy of the maximum.
                let first_top = bids.bids.iter().position(|r| r[j] == top).unwrap();
                *i != first_top
            })
            .map(|(_, row)| row[j].clone())
            .max()
            .unwrap_or_else(Rat::zero);

        if top.is_zero() || top < *reserve {
            prices.push(reserve.clone());
            if tiebreak.shares.contains_key(&j) {
                return Err(Error::TieBreak(format!(
                    "good {j} is unsold, tie-break entries are not allowed"
                )));
            }
            continue;
        }

        let price = reserve.clone().max(second);
        if top > price {
            let winner = bids.bids.iter().position(|r| r[j] == top).unwrap();
            if tiebreak.shares.contains_key(&j) {
                return Err(Error::TieBreak(format!(
                    "good {j} has a strict winner, tie-break entries are not allowed"
                )));
            }
            allocation.shares[winner][j] = rint(1);
            payments[winner] += &price;
            sold[j] = true;
            prices.push(price);
            continue;
        }

        // top == price: tied at the clearing price, possibly at the reserve
        // with a single bidder.
        let tied: Vec<usize> = (0..n).filter(|&i| bids.bids[i][j] == top).collect();
        let mut granted = Rat::zero();
        if let Some(entries) = tiebreak.shares.get(&j) {
            let mut seen = Vec::new();
            for (i, share) in entries {
                if !tied.contains(i) {
                    return Err(Error::TieBreak(format!(
                        "buyer {i} is not tied on good {j}"
                    )));
                }
                if seen.contains(i) {
                    return Err(Error::TieBreak(format!(
                        "buyer {i} listed twice for good {j}"
                    )));
                }
                seen.push(*i);
                if share < &Rat::zero() {
                    return Err(Error::TieBreak(format!(
                        "share of buyer {i} on good {j} is negative"
                    )));
                }
                allocation.shares[*i][j] = share.clone();
                payments[*i] += &price * share;
                granted += share;
            }
            if granted > rint(1) {
                return Err(Error::TieBreak(format!(
                    "shares on good {j} sum past the unit supply"
                )));
            }
        }
        sold[j] = !granted.is_zero();
        ties.insert(j, tied);
        prices.push(price);
    }

    let revenue = payments.iter().cloned().sum();
    Ok(Outcome {
        allocation,
        prices,
        payments,
        sold,
        ties,
        revenue,
    })
}

/// Realized utility of buyer `i`: bundle value minus cost of payment.
/// Spending past a hard budget is infeasible and compares below everything.
pub fn utility(instance: &MarketInstance, i: usize, outcome: &Outcome) -> ExtRat {
    let value = instance.bundle_value(i, &outcome.allocation.shares[i]);
    match instance.curves[i].cost(&outcome.payments[i]) {
        Ok(c) => ExtRat::Fin(value - c),
        Err(_) => ExtRat::NegInf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::CostCurve;
    use crate::rational::rat;

    /// Two buyers, two goods, diagonal values 2 and off-diagonal 1,
    /// quasi-linear up to hard budget 1/2.
    pub(crate) fn cross_instance() -> MarketInstance {
        MarketInstance {
            values: vec![vec![rint(2), rint(1)], vec![rint(1), rint(2)]],
            curves: vec![
                CostCurve::quasi_linear(Some(rat(1, 2))),
                CostCurve::quasi_linear(Some(rat(1, 2))),
            ],
            reserves: vec![rint(0), rint(0)],
        }
    }

    /// Two goods, buyer 1 wants only good 0, buyer 2 wants both slightly
    /// asymmetrically; unit budgets.
    fn tight_bound_instance(eps: Rat, reserves: Vec<Rat>) -> MarketInstance {
        MarketInstance {
            values: vec![
                vec![rint(1), rint(0)],
                vec![rint(1) + eps, rint(1)],
            ],
            curves: vec![
                CostCurve::quasi_linear(Some(rint(1))),
                CostCurve::quasi_linear(Some(rint(1))),
            ],
            reserves,
        }
    }

    #[test]
    fn strict_winners_pay_second_price() {
        let inst = cross_instance();
        let bids = BidProfile::uniform(&inst, &[rat(1, 2), rat(1, 2)]).unwrap();
        let out = run_auction(&inst, &bids, &TieBreak::empty()).unwrap();
        assert_eq!(out.allocation.shares[0], vec![rint(1), rint(0)]);
        assert_eq!(out.allocation.shares[1], vec![rint(0), rint(1)]);
        assert_eq!(out.payments, vec![rat(1, 2), rat(1, 2)]);
        assert_eq!(out.prices, vec![rat(1, 2), rat(1, 2)]);
        assert!(out.ties.is_empty());
        assert_eq!(out.revenue, rint(1));
        assert_eq!(utility(&inst, 0, &out), ExtRat::fin(rat(3, 2)));
        assert_eq!(utility(&inst, 1, &out), ExtRat::fin(rat(3, 2)));
    }

    #[test]
    fn tied_good_splits_per_tiebreak() {
        let inst = cross_instance();
        let bids = BidProfile::uniform(&inst, &[rat(1, 3), rat(2, 3)]).unwrap();
        assert_eq!(bids.bids[0], vec![rat(2, 3), rat(1, 3)]);
        assert_eq!(bids.bids[1], vec![rat(2, 3), rat(4, 3)]);
        let mut tb = TieBreak::empty();
        tb.set(0, vec![(0, rat(3, 4)), (1, rat(1, 4))]);
        let out = run_auction(&inst, &bids, &tb).unwrap();
        assert_eq!(out.allocation.shares[0], vec![rat(3, 4), rint(0)]);
        assert_eq!(out.allocation.shares[1], vec![rat(1, 4), rint(1)]);
        assert_eq!(out.payments, vec![rat(1, 2), rat(1, 2)]);
        assert_eq!(out.ties.get(&0), Some(&vec![0, 1]));
        // Tied winners pay their own bid, which is the clearing price.
        assert_eq!(out.prices[0], rat(2, 3));
    }

    #[test]
    fn reserves_block_low_bids_and_zero_bids_never_win() {
        let inst = MarketInstance {
            values: vec![vec![rint(1), rint(1)]],
            curves: vec![CostCurve::quasi_linear(None)],
            reserves: vec![rint(2), rint(0)],
        };
        // Bid 1 < reserve 2 on good 0; bid 0 on good 1.
        let bids = BidProfile::raw(vec![vec![rint(1), rint(0)]]);
        let out = run_auction(&inst, &bids, &TieBreak::empty()).unwrap();
        assert_eq!(out.allocation.shares[0], vec![rint(0), rint(0)]);
        assert_eq!(out.revenue, rint(0));
        assert_eq!(out.sold, vec![false, false]);
        assert!(out.ties.is_empty());
    }

    #[test]
    fn bid_equal_to_reserve_is_a_tie() {
        let eps = rat(1, 10);
        let inst = tight_bound_instance(eps, vec![rint(1), rint(1)]);
        let bids = BidProfile::uniform(&inst, &[rint(1), rint(1)]).unwrap();
        // Good 0: buyer 2 bids 11/10 > price max(1, 1) = 1, strict win.
        // Good 1: buyer 2 bids exactly the reserve 1, tied alone.
        let out = run_auction(&inst, &bids, &TieBreak::empty()).unwrap();
        assert_eq!(out.allocation.shares[1], vec![rint(1), rint(0)]);
        assert_eq!(out.payments, vec![rint(0), rint(1)]);
        assert_eq!(out.ties.get(&1), Some(&vec![1]));
        assert_eq!(out.revenue, rint(1));

        // The tied-at-reserve bidder may also take the good at the reserve.
        let mut tb = TieBreak::empty();
        tb.set(1, vec![(1, rint(1))]);
        let out = run_auction(&inst, &bids, &tb).unwrap();
        assert_eq!(out.allocation.shares[1], vec![rint(1), rint(1)]);
        assert_eq!(out.payments[1], rint(2));
        // Payment 2 exceeds the unit budget: infeasible outcome.
        assert_eq!(utility(&inst, 1, &out), ExtRat::NegInf);
    }

    #[test]
    fn tiebreak_structure_is_validated() {
        let inst = cross_instance();
        let bids = BidProfile::uniform(&inst, &[rat(1, 2), rat(1, 2)]).unwrap();
        let mut tb = TieBreak::empty();
        tb.set(0, vec![(0, rat(1, 2))]);
        // Good 0 has a strict winner at this profile.
        assert!(matches!(
            run_auction(&inst, &bids, &tb),
            Err(Error::TieBreak(_))
        ));

        let tied_bids = BidProfile::uniform(&inst, &[rat(1, 3), rat(2, 3)]).unwrap();
        let mut overfull = TieBreak::empty();
        overfull.set(0, vec![(0, rat(3, 4)), (1, rat(1, 2))]);
        assert!(run_auction(&inst, &tied_bids, &overfull).is_err());

        let mut wrong_buyer = TieBreak::empty();
        wrong_buyer.set(1, vec![(0, rat(1, 2))]);
        assert!(run_auction(&inst, &tied_bids, &wrong_buyer).is_err());
    }

    #[test]
    fn competing_prices_max_of_reserve_and_rivals() {
        let inst = cross_instance();
        let bids = BidProfile::uniform(&inst, &[rint(1), rat(1, 2)]).unwrap();
        assert_eq!(competing_prices(&inst, &bids, 0), vec![rat(1, 2), rint(1)]);

        let eps = rat(1, 10);
        let reserved = tight_bound_instance(eps.clone(), vec![rint(1), rint(1)]);
        let bids = BidProfile::uniform(&reserved, &[rint(1), rint(1)]).unwrap();
        assert_eq!(
            competing_prices(&reserved, &bids, 0),
            vec![rint(1) + eps, rint(1)]
        );

        let single = MarketInstance {
            values: vec![vec![rint(1), rint(1)]],
            curves: vec![CostCurve::quasi_linear(None)],
            reserves: vec![rint(0), rint(0)],
        };
        let bids = BidProfile::uniform(&single, &[rint(1)]).unwrap();
        assert_eq!(competing_prices(&single, &bids, 0), vec![rint(0), rint(0)]);
    }

    #[test]
    fn revenue_equals_price_weighted_sales() {
        let inst = cross_instance();
        let bids = BidProfile::uniform(&inst, &[rat(1, 3), rat(2, 3)]).unwrap();
        let mut tb = TieBreak::empty();
        tb.set(0, vec![(0, rat(1, 2)), (1, rat(1, 4))]);
        let out = run_auction(&inst, &bids, &tb).unwrap();
        let by_sales: Rat = (0..2)
            .map(|j| &out.prices[j] * out.allocation.sold_of_good(j))
            .sum();
        assert_eq!(out.revenue, by_sales);
        // Residual quarter of good 0 stays with the seller.
        assert_eq!(out.allocation.sold_of_good(0), rat(3, 4));
    }

    #[test]
    fn scale_covariance_of_clearing() {
        let inst = cross_instance();
        let bids = BidProfile::uniform(&inst, &[rat(1, 3), rat(2, 3)]).unwrap();
        let mut tb = TieBreak::empty();
        tb.set(0, vec![(0, rat(3, 4)), (1, rat(1, 4))]);
        let base = run_auction(&inst, &bids, &tb).unwrap();

        let lambda = rat(7, 3);
        let scaled_inst = MarketInstance {
            values: inst.values.clone(),
            curves: inst.curves.clone(),
            reserves: inst.reserves.iter().map(|r| r * &lambda).collect(),
        };
        let scaled_bids = BidProfile::raw(
            bids.bids
                .iter()
                .map(|row| row.iter().map(|b| b * &lambda).collect())
                .collect(),
        );
        let scaled = run_auction(&scaled_inst, &scaled_bids, &tb).unwrap();
        assert_eq!(scaled.allocation, base.allocation);
        for j in 0..2 {
            assert_eq!(scaled.prices[j], &base.prices[j] * &lambda);
        }
        for i in 0..2 {
            assert_eq!(scaled.payments[i], &base.payments[i] * &lambda);
        }
    }
}
