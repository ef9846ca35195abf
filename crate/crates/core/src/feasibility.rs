//! Satisfiability of conjunctions of strict and non-strict linear inequalities.
//!
//! A strict constraint `a·x > b` is relaxed to `a·x ≥ b + ε‖a‖∞` and the
//! resulting polyhedron is tested with a dense two-phase simplex using Bland's
//! rule. Phase one decides feasibility; phase two pushes the witness away from
//! the constraint boundaries (maximizing a common margin capped at 1) so that it
//! also passes an exact floating-point check.

use alloc::vec;
use alloc::vec::Vec;

use crate::rules::{LinearConstraint, Op};
use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const PHASE_ONE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintSystem {
    pub dim: usize,
    pub constraints: Vec<LinearConstraint>,
    /// Optional per-variable `(lo, hi)` box.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl ConstraintSystem {
    pub fn new(dim: usize, constraints: Vec<LinearConstraint>) -> Self {
        ConstraintSystem {
            dim,
            constraints,
            bounds: None,
        }
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("constraint system needs dimension ≥ 1".into()));
        }
        for c in &self.constraints {
            if c.dim() != self.dim {
                return Err(Error::shape("constraint coefficients", self.dim, c.dim()));
            }
            if !c.is_finite() {
                return Err(Error::NonFinite("constraint"));
            }
        }
        if let Some(b) = &self.bounds {
            if b.len() != self.dim {
                return Err(Error::shape("box bounds", self.dim, b.len()));
            }
            if b.iter().any(|(lo, hi)| !lo.is_finite() || !hi.is_finite() || lo > hi) {
                return Err(Error::InvalidArgument("box bounds must be finite with lo ≤ hi".into()));
            }
        }
        Ok(())
    }

    /// `1e-9 × max(1, max |rhs|)`.
    pub fn default_epsilon(&self) -> f64 {
        let m = self.constraints.iter().fold(1.0f64, |m, c| m.max(c.rhs.abs()));
        1e-9 * m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub feasible: bool,
    pub witness: Option<Vec<f64>>,
}

impl FeasibilityResult {
    fn infeasible() -> Self {
        FeasibilityResult {
            feasible: false,
            witness: None,
        }
    }
}

/// True iff `point` satisfies every original constraint (strict ones strictly)
/// and the box bounds, if any.
pub fn witness_valid(sys: &ConstraintSystem, point: &[f64]) -> bool {
    if point.len() != sys.dim {
        return false;
    }
    let in_box = sys.bounds.as_ref().map_or(true, |b| {
        b.iter()
            .zip(point)
            .all(|(&(lo, hi), &v)| lo <= v && v <= hi)
    });
    in_box && sys.constraints.iter().all(|c| c.holds(point))
}

/// Same as [`check_feasible`] with [`ConstraintSystem::default_epsilon`].
pub fn check_feasible_default(sys: &ConstraintSystem) -> Result<FeasibilityResult> {
    check_feasible(sys, sys.default_epsilon())
}

#[derive(Clone, Copy, PartialEq)]
enum Sense {
    Le,
    Ge,
}

struct Row {
    coeffs: Vec<f64>,
    margin: f64,
    sense: Sense,
    rhs: f64,
}

pub fn check_feasible(sys: &ConstraintSystem, strict_epsilon: f64) -> Result<FeasibilityResult> {
    sys.validate()?;
    if !(strict_epsilon > 0.0) || !strict_epsilon.is_finite() {
        return Err(Error::InvalidArgument("strict_epsilon must be positive".into()));
    }
    let dim = sys.dim;
    let mut rows = Vec::with_capacity(sys.constraints.len() + 2 * dim + 1);
    for c in &sys.constraints {
        let n = c.norm_inf();
        if n == 0.0 {
            // 0 op rhs decides itself.
            if !c.holds(&vec![0.0; dim]) {
                return Ok(FeasibilityResult::infeasible());
            }
            continue;
        }
        let coeffs: Vec<f64> = c.coeffs.iter().map(|a| a / n).collect();
        let rhs = c.rhs / n;
        rows.push(match c.op {
            Op::Le => Row {
                coeffs,
                margin: 1.0,
                sense: Sense::Le,
                rhs,
            },
            Op::Gt => Row {
                coeffs,
                margin: -1.0,
                sense: Sense::Ge,
                rhs: rhs + strict_epsilon,
            },
        });
    }
    if let Some(bounds) = &sys.bounds {
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            rows.push(Row {
                coeffs: e.clone(),
                margin: 1.0,
                sense: Sense::Le,
                rhs: hi,
            });
            e[i] = -1.0;
            rows.push(Row {
                coeffs: e,
                margin: 1.0,
                sense: Sense::Le,
                rhs: -lo,
            });
        }
    }
    // margin ≤ 1
    rows.push(Row {
        coeffs: vec![0.0; dim],
        margin: 1.0,
        sense: Sense::Le,
        rhs: 1.0,
    });

    let mut lp = Tableau::build(dim, &rows);
    let max_pivots = 10 * (lp.cols + lp.m) * (lp.cols + lp.m);
    lp.max_pivots = max_pivots;

    lp.phase_one()?;
    if lp.objective_value() > PHASE_ONE_TOL {
        return Ok(FeasibilityResult::infeasible());
    }
    lp.drive_out_artificials();
    lp.phase_two()?;
    let witness = lp.witness();
    Ok(FeasibilityResult {
        feasible: true,
        witness: Some(witness),
    })
}

/// Dense simplex tableau over `x⁺ (dim) | x⁻ (dim) | t | slacks | artificials`.
struct Tableau {
    dim: usize,
    m: usize,
    /// Number of structural + slack columns (artificials follow).
    cols: usize,
    n_total: usize,
    /// `m` rows of `n_total + 1` entries; last entry is the rhs.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Reduced costs, plus the negated objective value in the last slot.
    obj: Vec<f64>,
    active_row: Vec<bool>,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    fn build(dim: usize, rows: &[Row]) -> Self {
        let m = rows.len();
        let t_col = 2 * dim;
        let slack0 = 2 * dim + 1;
        let cols = slack0 + m;
        let n_art = rows
            .iter()
            .filter(|r| {
                let flip = r.rhs < 0.0;
                let sense = if flip { flip_sense(r.sense) } else { r.sense };
                sense == Sense::Ge && r.rhs != 0.0
            })
            .count();
        let n_total = cols + n_art;
        let mut a = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut art = cols;
        for (i, r) in rows.iter().enumerate() {
            let mut row = vec![0.0; n_total + 1];
            for (j, &c) in r.coeffs.iter().enumerate() {
                row[j] = c;
                row[dim + j] = -c;
            }
            row[t_col] = r.margin;
            let mut rhs = r.rhs;
            let mut sense = r.sense;
            // Slack carries +1 for ≤ and −1 for ≥ before any sign flip.
            row[slack0 + i] = if sense == Sense::Le { 1.0 } else { -1.0 };
            if rhs < 0.0 || (rhs == 0.0 && sense == Sense::Ge) {
                for v in row.iter_mut() {
                    *v = -*v;
                }
                rhs = -rhs;
                sense = flip_sense(sense);
            }
            row[n_total] = rhs;
            if sense == Sense::Le {
                basis.push(slack0 + i);
            } else {
                row[art] = 1.0;
                basis.push(art);
                art += 1;
            }
            a.push(row);
        }
        Tableau {
            dim,
            m,
            cols,
            n_total,
            a,
            basis,
            obj: vec![0.0; n_total + 1],
            active_row: vec![true; m],
            pivots: 0,
            max_pivots: usize::MAX,
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.cols
    }

    fn objective_value(&self) -> f64 {
        -self.obj[self.n_total]
    }

    /// Recomputes reduced costs for cost vector `cost` (length `n_total`).
    fn set_costs(&mut self, cost: &[f64]) {
        let mut obj = vec![0.0; self.n_total + 1];
        obj[..self.n_total].copy_from_slice(cost);
        for i in 0..self.m {
            if !self.active_row[i] {
                continue;
            }
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (o, &v) in obj.iter_mut().zip(&self.a[i]) {
                    *o -= cb * v;
                }
            }
        }
        self.obj = obj;
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[row].clone();
        for i in 0..self.m {
            if i == row || !self.active_row[i] {
                continue;
            }
            let f = self.a[i][col];
            if f != 0.0 {
                for (v, &pv) in self.a[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.a[i][col] = 0.0;
            }
        }
        let f = self.obj[col];
        if f != 0.0 {
            for (v, &pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[col] = 0.0;
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Bland's rule simplex over columns `< allowed`.
    fn iterate(&mut self, allowed: usize) -> Result<()> {
        loop {
            if self.pivots > self.max_pivots {
                return Err(Error::NumericalFailure {
                    pivots: self.max_pivots,
                });
            }
            let entering = (0..allowed).find(|&j| self.obj[j] < -COST_TOL);
            let Some(col) = entering else {
                return Ok(());
            };
            let rhs = self.n_total;
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if !self.active_row[i] {
                    continue;
                }
                let aij = self.a[i][col];
                if aij > PIVOT_TOL {
                    let ratio = self.a[i][rhs].max(0.0) / aij;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12
                                || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, col),
                // Unbounded direction; the margin objective is bounded, so this is drift.
                None => return Ok(()),
            }
        }
    }

    fn phase_one(&mut self) -> Result<()> {
        let mut cost = vec![0.0; self.n_total];
        for c in cost.iter_mut().skip(self.cols) {
            *c = 1.0;
        }
        self.set_costs(&cost);
        self.iterate(self.n_total)
    }

    fn drive_out_artificials(&mut self) {
        for i in 0..self.m {
            if !self.is_artificial(self.basis[i]) {
                continue;
            }
            let col = (0..self.cols).find(|&j| self.a[i][j].abs() > PIVOT_TOL);
            match col {
                Some(j) => self.pivot(i, j),
                None => self.active_row[i] = false,
            }
        }
    }

    fn phase_two(&mut self) -> Result<()> {
        let mut cost = vec![0.0; self.n_total];
        cost[2 * self.dim] = -1.0;
        self.set_costs(&cost);
        self.iterate(self.cols)
    }

    fn witness(&self) -> Vec<f64> {
        let mut values = vec![0.0; self.n_total];
        for i in 0..self.m {
            if self.active_row[i] {
                values[self.basis[i]] = self.a[i][self.n_total];
            }
        }
        (0..self.dim)
            .map(|j| values[j] - values[self.dim + j])
            .collect()
    }
}

fn flip_sense(s: Sense) -> Sense {
    match s {
        Sense::Le => Sense::Ge,
        Sense::Ge => Sense::Le,
    }
}
