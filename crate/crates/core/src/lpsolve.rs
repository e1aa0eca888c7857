//! Dense feasibility LP solver.
//!
//! Phase one of the primal simplex method on a dense tableau, with Bland's
//! rule for entering and leaving variables. There is no objective: once the
//! artificial variables are driven to zero the basic solution is feasible
//! and phase two would have nothing to optimize. Every feasible point is
//! re-checked by substitution before it is returned.
//!
//! Strict inequalities are handled by [`strictify`], which is only valid for
//! positively homogeneous constraint groups: if `x` satisfies the strict
//! system, so does `s x` for every `s > 0`, so a margin of `eps` can be
//! imposed without loss.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, max_abs_vec};
use crate::scalar::Scalar;

/// Relative tolerance for the substitution check on returned points.
pub const FEASIBILITY_TOL: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-11;
const PHASE_ONE_TOL: f64 = 1e-9;
/// Tableau entries below this are round-off and get flushed to zero.
const DROP_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("iteration cap of {cap} exceeded (cycling or numerical trouble)")]
    NumericalBreakdown { cap: usize },
    #[error("solution failed substitution check on {what} (residual {residual:e})")]
    VerificationFailed { what: String, residual: f64 },
    #[error("row {row} has nonzero right-hand side; strictification needs a homogeneous system")]
    Inhomogeneous { row: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram<T> {
    names: Vec<String>,
    constraints: Vec<Constraint<T>>,
    /// `None` means the variable is free.
    lower: Vec<Option<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<T> {
    Feasible(Vec<T>),
    Infeasible,
}

impl<T> LpOutcome<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible(_))
    }

    pub fn point(&self) -> Option<&[T]> {
        match self {
            LpOutcome::Feasible(x) => Some(x),
            LpOutcome::Infeasible => None,
        }
    }
}

impl<T: Scalar> LinearProgram<T> {
    /// `n` nonnegative variables named `x1..xn`, no constraints.
    pub fn new(n: usize) -> Self {
        Self::with_names((1..=n).map(|i| format!("x{i}")).collect())
    }

    pub fn with_names(names: Vec<String>) -> Self {
        let n = names.len();
        Self {
            names,
            constraints: Vec::new(),
            lower: vec![Some(T::zero()); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn lower_bounds(&self) -> &[Option<T>] {
        &self.lower
    }

    pub fn set_lower(&mut self, var: usize, bound: Option<T>) {
        self.lower[var] = bound;
    }

    pub fn add(&mut self, coeffs: Vec<T>, relation: Relation, rhs: T) -> Result<(), LpError> {
        if coeffs.len() != self.num_vars() {
            return Err(LpError::Malformed(format!(
                "constraint has {} coefficients, program has {} variables",
                coeffs.len(),
                self.num_vars()
            )));
        }
        if coeffs.iter().chain(std::iter::once(&rhs)).any(|c| !c.to_f64().is_finite()) {
            return Err(LpError::Malformed("non-finite coefficient".into()));
        }
        self.constraints.push(Constraint { coeffs, relation, rhs });
        Ok(())
    }

    /// Places programs over disjoint variable blocks side by side.
    pub fn block_diagonal(parts: &[&LinearProgram<T>]) -> Self {
        let names: Vec<String> = parts.iter().flat_map(|p| p.names.iter().cloned()).collect();
        let n = names.len();
        let mut out = Self::with_names(names);
        out.lower.clear();
        let mut offset = 0;
        for p in parts {
            out.lower.extend(p.lower.iter().cloned());
            for c in &p.constraints {
                let mut coeffs = vec![T::zero(); n];
                for (j, a) in c.coeffs.iter().enumerate() {
                    coeffs[offset + j] = a.clone();
                }
                out.constraints.push(Constraint { coeffs, relation: c.relation, rhs: c.rhs.clone() });
            }
            offset += p.num_vars();
        }
        out
    }

    /// Worst violation of `x`, measured relative to the row magnitude.
    /// `Ok(())` when every row and bound holds within `rel_tol`.
    pub fn check_point(&self, x: &[T], rel_tol: f64) -> Result<(), LpError> {
        if x.len() != self.num_vars() {
            return Err(LpError::Malformed("point has wrong length".into()));
        }
        for (j, lb) in self.lower.iter().enumerate() {
            if let Some(l) = lb {
                let tol = T::tol(rel_tol) * T::max_of(T::one(), l.abs());
                if x[j].clone() < l.clone() - tol {
                    return Err(LpError::VerificationFailed {
                        what: format!("lower bound of {}", self.names[j]),
                        residual: (l.clone() - x[j].clone()).to_f64(),
                    });
                }
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let lhs = dot(&c.coeffs, x);
            let magnitude = c
                .coeffs
                .iter()
                .zip(x)
                .fold(T::max_of(T::one(), c.rhs.abs()), |m, (a, v)| {
                    T::max_of(m, (a.clone() * v.clone()).abs())
                });
            let tol = T::tol(rel_tol) * magnitude;
            let diff = lhs - c.rhs.clone();
            let bad = match c.relation {
                Relation::Le => diff.clone() > tol,
                Relation::Ge => -diff.clone() > tol,
                Relation::Eq => diff.abs() > tol,
            };
            if bad {
                return Err(LpError::VerificationFailed {
                    what: format!("row {}", i + 1),
                    residual: diff.to_f64(),
                });
            }
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Display for LinearProgram<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "find {}", self.names.join(", "))?;
        for c in &self.constraints {
            let mut terms = Vec::new();
            for (a, name) in c.coeffs.iter().zip(&self.names) {
                if a.is_zero() {
                    continue;
                }
                terms.push(if a.is_one() {
                    name.clone()
                } else if (-a.clone()).is_one() {
                    format!("-{name}")
                } else {
                    format!("{a}*{name}")
                });
            }
            let lhs = if terms.is_empty() { "0".to_string() } else { terms.join(" + ").replace("+ -", "- ") };
            writeln!(f, "  {lhs} {} {}", c.relation, c.rhs)?;
        }
        let bounds: Vec<String> = self
            .names
            .iter()
            .zip(&self.lower)
            .filter_map(|(n, l)| l.as_ref().map(|l| format!("{n} >= {l}")))
            .collect();
        if !bounds.is_empty() {
            writeln!(f, "  bounds: {}", bounds.join(", "))?;
        }
        Ok(())
    }
}

/// Relations allowed in a homogeneous system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrictRelation {
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
}

/// A positively homogeneous constraint group: every row has zero
/// right-hand side, so solutions form a cone.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousSystem<T> {
    names: Vec<String>,
    rows: Vec<(Vec<T>, StrictRelation)>,
}

impl<T: Scalar> HomogeneousSystem<T> {
    pub fn new(names: Vec<String>) -> Self {
        Self { names, rows: Vec::new() }
    }

    /// Adds `coeffs . x (rel) rhs`. Anything but a zero `rhs` is rejected.
    pub fn row(&mut self, coeffs: Vec<T>, rel: StrictRelation, rhs: T) -> Result<(), LpError> {
        if !rhs.is_zero() {
            return Err(LpError::Inhomogeneous { row: self.rows.len() + 1 });
        }
        if coeffs.len() != self.names.len() {
            return Err(LpError::Malformed("coefficient count does not match variables".into()));
        }
        self.rows.push((coeffs, rel));
        Ok(())
    }

    /// Componentwise `x > 0`.
    pub fn all_positive(&mut self) {
        let n = self.names.len();
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            self.rows.push((e, StrictRelation::Gt));
        }
    }
}

/// Replaces `> 0` by `>= eps` and `< 0` by `<= -eps`.
///
/// Single-variable rows with a positive coefficient become variable lower
/// bounds; every other variable is free.
pub fn strictify<T: Scalar>(sys: &HomogeneousSystem<T>, eps: T) -> LinearProgram<T> {
    let mut lp = LinearProgram::with_names(sys.names.clone());
    for l in lp.lower.iter_mut() {
        *l = None;
    }
    for (coeffs, rel) in &sys.rows {
        let nonzero: Vec<usize> = (0..coeffs.len()).filter(|&j| !coeffs[j].is_zero()).collect();
        if let [j] = nonzero[..] {
            let c = coeffs[j].clone();
            let bound = match rel {
                StrictRelation::Gt if c > T::zero() => Some(eps.clone() / c),
                StrictRelation::Ge if c > T::zero() => Some(T::zero()),
                StrictRelation::Lt if c < T::zero() => Some(-eps.clone() / c),
                StrictRelation::Le if c < T::zero() => Some(T::zero()),
                _ => None,
            };
            if let Some(b) = bound {
                lp.lower[j] = Some(match lp.lower[j].take() {
                    Some(prev) => T::max_of(prev, b),
                    None => b,
                });
                continue;
            }
        }
        let (relation, rhs) = match rel {
            StrictRelation::Gt => (Relation::Ge, eps.clone()),
            StrictRelation::Lt => (Relation::Le, -eps.clone()),
            StrictRelation::Ge => (Relation::Ge, T::zero()),
            StrictRelation::Le => (Relation::Le, T::zero()),
            StrictRelation::Eq => (Relation::Eq, T::zero()),
        };
        lp.constraints.push(Constraint { coeffs: coeffs.clone(), relation, rhs });
    }
    lp
}

/// How an original variable maps onto tableau columns.
enum Column<T> {
    Shifted { col: usize, lower: T },
    Split { pos: usize, neg: usize },
}

struct Tableau<T> {
    /// `m` constraint rows followed by the phase-one cost row; last column is the rhs.
    t: Vec<Vec<T>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, i: usize) -> &T {
        &self.t[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let p = self.t[r][q].clone();
        for v in self.t[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = self.t[r].clone();
        let drop = T::tol(DROP_TOL);
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r || row[q].is_zero() {
                continue;
            }
            let f = row[q].clone();
            for (v, pr) in row.iter_mut().zip(&pivot_row) {
                if !pr.is_zero() {
                    *v = v.clone() - f.clone() * pr.clone();
                    if v.abs() <= drop {
                        *v = T::zero();
                    }
                }
            }
            row[q] = T::zero();
        }
        self.basis[r] = q;
    }
}

/// Decides feasibility of `lp`, returning a point that passed the
/// substitution check or [`LpOutcome::Infeasible`].
pub fn solve_feasibility<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpOutcome<T>, LpError> {
    let n = lp.num_vars();
    if n == 0 {
        return Err(LpError::Malformed("program has no variables".into()));
    }
    let m = lp.constraints.len();

    let mut columns = Vec::with_capacity(n);
    let mut nstruct = 0;
    for lb in &lp.lower {
        match lb {
            Some(l) => {
                columns.push(Column::Shifted { col: nstruct, lower: l.clone() });
                nstruct += 1;
            }
            None => {
                columns.push(Column::Split { pos: nstruct, neg: nstruct + 1 });
                nstruct += 2;
            }
        }
    }

    // rows in terms of structural columns, equilibrated and with rhs >= 0
    let mut rows: Vec<(Vec<T>, Relation, T)> = Vec::with_capacity(m);
    for c in &lp.constraints {
        let mut a = vec![T::zero(); nstruct];
        let mut b = c.rhs.clone();
        for (j, coef) in c.coeffs.iter().enumerate() {
            match &columns[j] {
                Column::Shifted { col, lower } => {
                    a[*col] = coef.clone();
                    b = b - coef.clone() * lower.clone();
                }
                Column::Split { pos, neg } => {
                    a[*pos] = coef.clone();
                    a[*neg] = -coef.clone();
                }
            }
        }
        let scale = max_abs_vec(&a);
        let mut rel = c.relation;
        if !scale.is_zero() {
            for v in a.iter_mut() {
                *v = v.clone() / scale.clone();
            }
            b = b / scale;
        }
        if b < T::zero() {
            for v in a.iter_mut() {
                *v = -v.clone();
            }
            b = -b;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        rows.push((a, rel, b));
    }

    let nslack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let nart = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let first_artificial = nstruct + nslack;
    let ncols = first_artificial + nart;

    let mut t = vec![vec![T::zero(); ncols + 1]; m + 1];
    let mut basis = vec![0; m];
    let (mut s, mut art) = (nstruct, first_artificial);
    for (i, (a, rel, b)) in rows.iter().enumerate() {
        t[i][..nstruct].clone_from_slice(a);
        t[i][ncols] = b.clone();
        match rel {
            Relation::Le => {
                t[i][s] = T::one();
                basis[i] = s;
                s += 1;
            }
            Relation::Ge => {
                t[i][s] = -T::one();
                s += 1;
                t[i][art] = T::one();
                basis[i] = art;
                art += 1;
            }
            Relation::Eq => {
                t[i][art] = T::one();
                basis[i] = art;
                art += 1;
            }
        }
    }
    // reduced costs of the phase-one objective (sum of artificials)
    for i in 0..m {
        if basis[i] >= first_artificial {
            for j in 0..=ncols {
                if j < first_artificial || j == ncols {
                    let v = t[i][j].clone();
                    t[m][j] = t[m][j].clone() - v;
                }
            }
        }
    }

    let mut tab = Tableau { t, basis, ncols };
    let pivot_tol = T::tol(PIVOT_TOL);
    let cap = 50 * (n + m).max(1);
    let mut iterations = 0;
    loop {
        let entering = (0..ncols).find(|&j| tab.t[m][j] < -pivot_tol.clone());
        let Some(q) = entering else { break };
        // minimum ratio, then Bland's tie-break among rows within round-off of it
        let candidates: Vec<(usize, T)> = (0..m)
            .filter(|&i| tab.t[i][q] > pivot_tol)
            .map(|i| (i, tab.rhs(i).clone() / tab.t[i][q].clone()))
            .collect();
        let best = candidates.iter().map(|(_, r)| r.clone()).reduce(T::min_of);
        let leave = best.map(|best| {
            let slack = T::tol(DROP_TOL) * T::max_of(T::one(), best.abs());
            candidates
                .into_iter()
                .filter(|(_, ratio)| *ratio <= best.clone() + slack.clone())
                .min_by_key(|(i, _)| tab.basis[*i])
                .expect("the minimum is a candidate")
        });
        let Some((r, _)) = leave else {
            // the phase-one objective is bounded below by zero, so an
            // unbounded ray means the reduced cost is round-off; the
            // residual test below decides
            break;
        };
        tab.pivot(r, q);
        iterations += 1;
        if iterations > cap {
            return Err(LpError::NumericalBreakdown { cap });
        }
    }

    let b_scale = (0..m).fold(T::one(), |acc, i| T::max_of(acc, rows[i].2.abs()));
    let residual = (0..m)
        .filter(|&i| tab.basis[i] >= first_artificial)
        .fold(T::zero(), |acc, i| acc + tab.rhs(i).clone());
    if residual > T::tol(PHASE_ONE_TOL) * b_scale {
        return Ok(LpOutcome::Infeasible);
    }

    // drive zero-valued artificials out of the basis where possible
    for i in 0..m {
        if tab.basis[i] < first_artificial {
            continue;
        }
        if let Some(q) = (0..first_artificial).find(|&j| tab.t[i][j].abs() > pivot_tol) {
            tab.pivot(i, q);
        }
    }

    let mut y = vec![T::zero(); ncols];
    for i in 0..m {
        y[tab.basis[i]] = tab.rhs(i).clone();
    }
    let x: Vec<T> = columns
        .iter()
        .map(|c| match c {
            Column::Shifted { col, lower } => lower.clone() + T::max_of(y[*col].clone(), T::zero()),
            Column::Split { pos, neg } => y[*pos].clone() - y[*neg].clone(),
        })
        .collect();
    lp.check_point(&x, FEASIBILITY_TOL)?;
    Ok(LpOutcome::Feasible(x))
}
