//! Market primitives: cost-of-money curves, instances, allocations.
//!
//! A buyer's disutility for spending `p` is a strictly increasing, weakly
//! convex, piecewise-linear function `C` with `C(0) = 0`, represented by
//! segment start points and slopes. A finite budget truncates the domain;
//! spending past it is infeasible rather than merely expensive.

use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::rational::{format_rat, rint, ExtRat, Rat};
use crate::Result;

/// Piecewise-linear convex cost of money.
///
/// Invariants enforced at construction:
/// - segment starts strictly increase and begin at 0,
/// - slopes are strictly increasing and the first slope is at least 1,
/// - a finite budget is positive and lies past every segment start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostCurve {
    segments: Vec<(Rat, Rat)>,
    budget: Option<Rat>,
}

impl CostCurve {
    pub fn new(segments: Vec<(Rat, Rat)>, budget: Option<Rat>) -> Result<Self> {
        let curve = CostCurve { segments, budget };
        let problems = curve.check();
        if let Some(p) = problems.first() {
            return Err(Error::invalid(p.clone()));
        }
        Ok(curve)
    }

    /// Cost equal to payment, optionally truncated at a hard budget.
    pub fn quasi_linear(budget: Option<Rat>) -> Self {
        CostCurve {
            segments: vec![(Rat::zero(), Rat::one())],
            budget,
        }
    }

    /// Structural problems, empty when the curve is well formed.
    pub(crate) fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.segments.is_empty() {
            problems.push("cost curve has no segments".to_string());
            return problems;
        }
        if !self.segments[0].0.is_zero() {
            problems.push(format!(
                "first segment must start at 0, got {}",
                format_rat(&self.segments[0].0)
            ));
        }
        if self.segments[0].1 < Rat::one() {
            problems.push(format!(
                "first slope must be at least 1, got {}",
                format_rat(&self.segments[0].1)
            ));
        }
        for w in self.segments.windows(2) {
            if w[1].0 <= w[0].0 {
                problems.push("segment starts must strictly increase".to_string());
            }
            if w[1].1 <= w[0].1 {
                problems.push("slopes must strictly increase".to_string());
            }
        }
        if let Some(b) = &self.budget {
            if !b.is_positive() {
                problems.push(format!("budget must be positive, got {}", format_rat(b)));
            }
            if let Some(last) = self.segments.last() {
                if !last.0.is_zero() && *b <= last.0 {
                    problems.push("budget must lie past the last segment start".to_string());
                }
            }
        }
        problems
    }

    pub fn budget(&self) -> Option<&Rat> {
        self.budget.as_ref()
    }

    pub fn segments(&self) -> &[(Rat, Rat)] {
        &self.segments
    }

    pub fn first_slope(&self) -> &Rat {
        &self.segments[0].1
    }

    pub fn last_slope(&self) -> &Rat {
        &self.segments[self.segments.len() - 1].1
    }

    fn in_domain(&self, p: &Rat) -> bool {
        !p.is_negative() && self.budget.as_ref().map_or(true, |b| p <= b)
    }

    /// C(p) for p in [0, budget].
    pub fn cost(&self, p: &Rat) -> Result<Rat> {
        if !self.in_domain(p) {
            return Err(Error::domain(format!(
                "payment {} outside cost domain",
                format_rat(p)
            )));
        }
        let mut total = Rat::zero();
        for (k, (start, slope)) in self.segments.iter().enumerate() {
            if p <= start {
                break;
            }
            let end = self
                .segments
                .get(k + 1)
                .map(|s| &s.0)
                .filter(|e| *e < p)
                .unwrap_or(p);
            total += slope * (end - start);
        }
        Ok(total)
    }

    /// C(p) extended with +inf past the budget.
    pub fn cost_ext(&self, p: &Rat) -> ExtRat {
        match self.cost(p) {
            Ok(c) => ExtRat::Fin(c),
            Err(_) => ExtRat::PosInf,
        }
    }

    /// Cost at the hard budget, if one exists.
    pub fn cost_at_budget(&self) -> Option<Rat> {
        self.budget
            .as_ref()
            .map(|b| self.cost(b).expect("budget is in domain"))
    }

    /// Inverse cost, clamped at the budget: the payment that produces
    /// disutility `v`, or the budget itself when `v` exceeds the cost there.
    /// This is the willingness-to-pay map used by the welfare benchmark.
    pub fn inverse_cost(&self, v: &Rat) -> Result<Rat> {
        if v.is_negative() {
            return Err(Error::domain(format!(
                "inverse cost of negative value {}",
                format_rat(v)
            )));
        }
        let mut acc = Rat::zero();
        for (k, (start, slope)) in self.segments.iter().enumerate() {
            let seg_cost = match self.segments.get(k + 1) {
                Some((next, _)) => {
                    let c = slope * (next - start);
                    Some(c)
                }
                None => None,
            };
            let within = match &seg_cost {
                Some(c) => *v <= &acc + c,
                None => true,
            };
            if within {
                let p = start + (v - &acc) / slope;
                return Ok(match &self.budget {
                    Some(b) if &p > b => b.clone(),
                    _ => p,
                });
            }
            acc += seg_cost.unwrap();
        }
        unreachable!("last segment is unbounded")
    }

    /// Left and right derivatives of C at `p`. The left derivative at 0 is
    /// defined as the first slope, and the right derivative at a finite
    /// budget is +inf because spending more is infeasible.
    pub fn subderivative(&self, p: &Rat) -> Result<(Rat, ExtRat)> {
        if !self.in_domain(p) {
            return Err(Error::domain(format!(
                "payment {} outside cost domain",
                format_rat(p)
            )));
        }
        let at_budget = self.budget.as_ref() == Some(p);
        // Index of the segment whose half-open span [start_k, start_{k+1})
        // contains p, and whether p sits exactly on its start.
        let mut idx = 0;
        let mut on_start = p.is_zero();
        for (k, (start, _)) in self.segments.iter().enumerate() {
            if p > start {
                idx = k;
                on_start = false;
            } else if p == start {
                idx = k;
                on_start = true;
            }
        }
        let left = if on_start && idx > 0 {
            self.segments[idx - 1].1.clone()
        } else {
            self.segments[idx].1.clone()
        };
        let right = if at_budget {
            ExtRat::PosInf
        } else {
            ExtRat::Fin(self.segments[idx].1.clone())
        };
        Ok((left, right))
    }

    /// Largest payment whose left derivative stays at or below `rho`:
    /// how far a buyer with return-on-spend target `rho` is willing to go.
    /// Infinite when the whole curve is that flat and there is no budget.
    pub fn spend_cap(&self, rho: &Rat) -> ExtRat {
        if rho < self.first_slope() {
            return ExtRat::Fin(Rat::zero());
        }
        let mut cap = ExtRat::PosInf;
        for (k, (_, slope)) in self.segments.iter().enumerate() {
            if slope > rho {
                cap = ExtRat::Fin(self.segments[k].0.clone());
                break;
            }
        }
        match (&cap, &self.budget) {
            (_, None) => cap,
            (ExtRat::PosInf, Some(b)) => ExtRat::Fin(b.clone()),
            (ExtRat::Fin(c), Some(b)) => ExtRat::Fin(c.clone().min(b.clone())),
            _ => unreachable!(),
        }
    }
}

/// One simultaneous second-price market: additive values over unit-supply
/// divisible goods, one cost curve per buyer, one reserve per good.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarketInstance {
    pub values: Vec<Vec<Rat>>,
    pub curves: Vec<CostCurve>,
    pub reserves: Vec<Rat>,
}

/// Outcome of structural validation. Errors make the instance unusable;
/// warnings flag unusual but legal data.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl MarketInstance {
    pub fn n_buyers(&self) -> usize {
        self.values.len()
    }

    pub fn n_goods(&self) -> usize {
        self.reserves.len()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let n = self.n_buyers();
        let m = self.n_goods();
        if n == 0 {
            report.errors.push("instance has no buyers".to_string());
        }
        if m == 0 {
            report.errors.push("instance has no goods".to_string());
        }
        if self.curves.len() != n {
            report.errors.push(format!(
                "expected {n} cost curves, got {}",
                self.curves.len()
            ));
        }
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != m {
                report
                    .errors
                    .push(format!("buyer {i} has {} values, expected {m}", row.len()));
            }
            for (j, v) in row.iter().enumerate() {
                if v.is_negative() {
                    report.errors.push(format!(
                        "buyer {i} values good {j} at {}, values must be nonnegative",
                        format_rat(v)
                    ));
                }
            }
            let bundle: Rat = row.iter().cloned().sum();
            if bundle > rint(1) {
                report.warnings.push(format!(
                    "buyer {i} bundle value {} exceeds the unit normalization",
                    format_rat(&bundle)
                ));
            }
        }
        for (j, r) in self.reserves.iter().enumerate() {
            if r.is_negative() {
                report.errors.push(format!(
                    "reserve of good {j} is {}, reserves must be nonnegative",
                    format_rat(r)
                ));
            }
        }
        for (i, curve) in self.curves.iter().enumerate() {
            for p in curve.check() {
                report.errors.push(format!("buyer {i} cost curve: {p}"));
            }
        }
        report
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::invalid(report.errors.join("; ")))
        }
    }

    /// Additive value of buyer `i` for fractional bundle `shares`.
    pub fn bundle_value(&self, i: usize, shares: &[Rat]) -> Rat {
        self.values[i]
            .iter()
            .zip(shares)
            .map(|(v, x)| v * x)
            .sum()
    }
}

/// Fractional assignment of goods to buyers; rows are buyers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub shares: Vec<Vec<Rat>>,
}

impl Allocation {
    pub fn empty(n: usize, m: usize) -> Self {
        Allocation {
            shares: vec![vec![Rat::zero(); m]; n],
        }
    }

    /// Total share of good `j` handed out; at most 1 in a feasible
    /// allocation, with any remainder staying unsold.
    pub fn sold_of_good(&self, j: usize) -> Rat {
        self.shares.iter().map(|row| row[j].clone()).sum()
    }

    pub fn check_feasible(&self, m: usize) -> Result<()> {
        for (i, row) in self.shares.iter().enumerate() {
            if row.len() != m {
                return Err(Error::invalid(format!(
                    "allocation row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            for (j, x) in row.iter().enumerate() {
                if x.is_negative() {
                    return Err(Error::invalid(format!(
                        "allocation share of buyer {i} on good {j} is negative"
                    )));
                }
            }
        }
        for j in 0..m {
            if self.sold_of_good(j) > rint(1) {
                return Err(Error::invalid(format!(
                    "good {j} oversold: shares sum past 1"
                )));
            }
        }
        Ok(())
    }
}
