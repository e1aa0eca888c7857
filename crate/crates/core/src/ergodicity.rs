//! Certification of the closed loop: Hurwitz stability of the
//! characteristic matrix plus output controllability from `X_1` to
//! `X_ell`, in the nominal, interval and sign-pattern settings.
//!
//! Every verdict is reached along at least two independent routes. The
//! leading-minor test is authoritative for stability and the graph path for
//! output controllability; the linear programs supply certificates. A
//! disagreement is reported as [`ErgodicityError::OracleDisagreement`] and
//! never resolved silently.
//!
//! All linear programs are positively homogeneous. In particular the
//! controllability condition `w >= 0, w_1 > 0, w^T A + e_ell^T = 0` is
//! solved as `A^T w + t e_ell = 0, w_1 >= 1, t >= 1` and reported as `w / t`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    dot, frobenius_eigenvalue, inverse, krylov_scalars, metzler_minor_test, static_gain, unit, LinalgError, Matrix,
    MinorTest,
};
use crate::lpsolve::{
    solve_feasibility, strictify, HomogeneousSystem, LinearProgram, LpError, LpOutcome, Relation, StrictRelation,
    FEASIBILITY_TOL,
};
use crate::netdsl::Irreducibility;
use crate::netmodel::{
    characteristic_system_as, CharacteristicForm, CharacteristicSystem, NetError, ReactionNetwork, Regime,
};
use crate::scalar::Scalar;
use crate::sgraph::{augment_with_feedback_edge, graph_of, GraphError, SignMatrix};

/// Default seed for every sampling cross-check.
pub const DEFAULT_SEED: u64 = 0x0A1C_5EED;

#[derive(Debug, Error, Clone)]
pub enum ErgodicityError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("controlled index {ell} out of range for dimension {d}")]
    BadEll { ell: usize, d: usize },
    #[error("malformed interval: {0}")]
    MalformedInterval(String),
    #[error("c = {c} is invalid: A + cI is not Hurwitz")]
    InvalidC { c: f64 },
    #[error("bound vector has a nonpositive entry at {index}")]
    NonpositiveV { index: usize },
    #[error("probe vector: {0}")]
    BadProbe(String),
    #[error("A+ - Delta is singular at {label}")]
    SingularAtDelta { label: String },
    #[error("a certificate failed re-verification: {0}")]
    CertificateRejected(String),
    #[error("decision routes disagree; see the attached report")]
    OracleDisagreement(Box<AnalysisReport>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Stability,
    OutputControllability,
}

/// Evidence that a condition fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// Leading principal minor of the given (1-based) order with the wrong sign.
    LeadingMinor { matrix: String, order: usize, pivot: f64 },
    /// A member of the uncertainty set that violates the condition.
    Matrix { name: String, rows: Vec<Vec<f64>> },
    /// Directed cycle, 1-based, first node repeated at the end.
    Cycle { nodes: Vec<usize> },
    /// Diagonal entries that are not negative, 1-based.
    NonNegativeDiagonal { indices: Vec<usize> },
    /// No path between the 1-based nodes; `reachable` lists what is.
    NoPath { from: usize, to: usize, reachable: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `v > 0, v^T A < 0`, `w >= 0, w_1 > 0, w^T A + e_ell^T = 0`.
    Nominal { v: Vec<f64>, w: Vec<f64> },
    /// `v_+^T A^+ < 0`, `w_-^T A^- + e_ell^T = 0`.
    Robust { v_plus: Vec<f64>, w_minus: Vec<f64> },
    /// `v_1^T sgn(S_A) < 0` and `v_2 = sgn(S_C) v_3`, `1^T (v_2 + v_3) = 1`.
    /// The Farkas pair is absent when `ell = 1`.
    Structural {
        v1: Vec<f64>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        v2: Option<Vec<f64>>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        v3: Option<Vec<f64>>,
    },
    /// Stability vector alone, when controllability fails.
    Stability { v: Vec<f64> },
    /// Shortest path from node 1 to node `ell`, 1-based.
    Path { nodes: Vec<usize> },
    /// Topological order (1-based) witnessing acyclicity.
    TopologicalOrder { order: Vec<usize> },
    Refutation { condition: Property, reason: String, witness: Witness },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub property: Property,
    pub oracle: String,
    pub verdict: bool,
    pub agrees: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub hurwitz_stable: bool,
    pub output_controllable: bool,
    pub overall: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assumptions {
    /// `None` when the input makes no irreducibility claim.
    pub irreducibility: Option<Irreducibility>,
    /// 1-based controlled index.
    pub ell: usize,
    pub d: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEvaluation {
    pub label: String,
    pub ratio: f64,
    pub side_condition: bool,
}

/// Lower bound on `mu / theta`, with the data that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetpointBound {
    pub c: f64,
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub bound: f64,
    /// Whether `q^T (c (A^+ - Delta)^{-1} + I) >= 0` held at every
    /// evaluated `Delta`; always true in the nominal case.
    pub side_condition_holds: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub evaluations: Vec<DeltaEvaluation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub regime: Regime,
    pub verdicts: Verdicts,
    pub certificates: Vec<Certificate>,
    pub oracle_crosschecks: Vec<CrossCheck>,
    pub setpoint_bound: Option<SetpointBound>,
    pub assumptions: Assumptions,
}

impl AnalysisReport {
    pub fn refutations(&self) -> impl Iterator<Item = (&Property, &str, &Witness)> {
        self.certificates.iter().filter_map(|c| match c {
            Certificate::Refutation { condition, reason, witness } => Some((condition, reason.as_str(), witness)),
            _ => None,
        })
    }

    fn fail_on_disagreement(self) -> Result<Self, ErgodicityError> {
        if self.oracle_crosschecks.iter().all(|c| c.agrees) {
            Ok(self)
        } else {
            Err(ErgodicityError::OracleDisagreement(Box::new(self)))
        }
    }
}

/// Knobs for bound computation and sampling cross-checks.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOptions {
    /// Bound parameter; defaults to `0.9 |lambda_F|`.
    pub c: Option<f64>,
    /// Probe vector; defaults to all ones.
    pub q: Option<Vec<f64>>,
    /// Interior points `t (A^+ - A^-)` on the diagonal of the Delta box.
    pub grid: usize,
    /// Extra random points in the Delta box.
    pub delta_samples: usize,
    /// Matrices sampled from `[A^-, A^+]` for the robust cross-check.
    pub interval_samples: usize,
    pub seed: u64,
    pub irreducibility: Option<Irreducibility>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            c: None,
            q: None,
            grid: 8,
            delta_samples: 16,
            interval_samples: 200,
            seed: DEFAULT_SEED,
            irreducibility: None,
        }
    }
}

fn to_f64s<T: Scalar>(x: &[T]) -> Vec<f64> {
    x.iter().map(Scalar::to_f64).collect()
}

fn one_based(x: &[usize]) -> Vec<usize> {
    x.iter().map(|i| i + 1).collect()
}

fn require_system<T: Scalar>(m: &Matrix<T>, ell: usize) -> Result<usize, ErgodicityError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() }.into());
    }
    m.check_finite()?;
    let d = m.rows();
    if ell >= d {
        return Err(ErgodicityError::BadEll { ell, d });
    }
    if let Some((row, col)) = m.metzler_violation() {
        return Err(LinalgError::NotMetzler { row, col }.into());
    }
    Ok(d)
}

// ---------------------------------------------------------------- programs

/// `v > 0, v^T M < 0`, strictified with margin 1.
pub fn stability_lp<T: Scalar>(m: &Matrix<T>, var: &str) -> LinearProgram<T> {
    let d = m.rows();
    let mut sys = HomogeneousSystem::new((1..=d).map(|i| format!("{var}{i}")).collect());
    sys.all_positive();
    for j in 0..d {
        let col = (0..d).map(|i| m[(i, j)].clone()).collect();
        sys.row(col, StrictRelation::Lt, T::zero()).expect("homogeneous row");
    }
    strictify(&sys, T::one())
}

/// `M^T w + t e_ell = 0, w >= 0, w_1 > 0, t > 0`, strictified with margin 1.
pub fn controllability_lp<T: Scalar>(m: &Matrix<T>, ell: usize, var: &str) -> LinearProgram<T> {
    let d = m.rows();
    let mut names: Vec<String> = (1..=d).map(|i| format!("{var}{i}")).collect();
    names.push("t".into());
    let mut sys = HomogeneousSystem::new(names);
    for j in 0..d {
        let mut row: Vec<T> = (0..d).map(|i| m[(i, j)].clone()).collect();
        row.push(if j == ell { T::one() } else { T::zero() });
        sys.row(row, StrictRelation::Eq, T::zero()).expect("homogeneous row");
    }
    for i in 0..d {
        sys.row(unit(d + 1, i), StrictRelation::Ge, T::zero()).expect("homogeneous row");
    }
    sys.row(unit(d + 1, 0), StrictRelation::Gt, T::zero()).expect("homogeneous row");
    sys.row(unit(d + 1, d), StrictRelation::Gt, T::zero()).expect("homogeneous row");
    strictify(&sys, T::one())
}

/// `v_2 - M v_3 = 0, 1^T (v_2 + v_3) = 1, v_2, v_3 >= 0`.
pub fn farkas_lp<T: Scalar>(m: &Matrix<T>) -> LinearProgram<T> {
    let d = m.rows();
    let names = (1..=d).map(|i| format!("v2_{i}")).chain((1..=d).map(|i| format!("v3_{i}"))).collect();
    let mut lp = LinearProgram::with_names(names);
    for i in 0..d {
        let mut row = vec![T::zero(); 2 * d];
        row[i] = T::one();
        for j in 0..d {
            row[d + j] = -m[(i, j)].clone();
        }
        lp.add(row, Relation::Eq, T::zero()).expect("well-formed row");
    }
    lp.add(vec![T::one(); 2 * d], Relation::Eq, T::one()).expect("well-formed row");
    lp
}

/// Scales the homogenized controllability solution back to `w`.
fn controllability_vector<T: Scalar>(x: &[T]) -> Vec<T> {
    let d = x.len() - 1;
    let t = x[d].clone();
    x[..d].iter().map(|w| w.clone() / t.clone()).collect()
}

// ----------------------------------------------------------- verification

/// `v > 0` and `v^T M < 0`, both strict.
pub fn verify_stability_vector<T: Scalar>(m: &Matrix<T>, v: &[T]) -> bool {
    v.len() == m.rows() && v.iter().all(|x| x.is_positive()) && m.vec_mul(v).iter().all(|x| x.is_negative())
}

/// `w >= 0`, `w_1 > 0` and `|w^T M + e_ell^T| <= tol` relative to the terms.
pub fn verify_controllability_vector<T: Scalar>(m: &Matrix<T>, ell: usize, w: &[T], rel_tol: f64) -> bool {
    let d = m.rows();
    if w.len() != d || w.iter().any(|x| x.is_negative()) || !w[0].is_positive() {
        return false;
    }
    (0..d).all(|j| {
        let target = if j == ell { -T::one() } else { T::zero() };
        let mut scale = T::one();
        let mut s = T::zero();
        for i in 0..d {
            let term = w[i].clone() * m[(i, j)].clone();
            scale = T::max_of(scale, term.abs());
            s = s + term;
        }
        (s - target).abs() <= T::tol(rel_tol) * scale
    })
}

/// Nominal certificate check by substitution.
pub fn verify_nominal<T: Scalar>(a: &Matrix<T>, ell: usize, v: &[T], w: &[T], rel_tol: f64) -> bool {
    verify_stability_vector(a, v) && verify_controllability_vector(a, ell, w, rel_tol)
}

/// Robust certificate check: `v_+` against `A^+`, `w_-` against `A^-`.
pub fn verify_robust<T: Scalar>(
    a_minus: &Matrix<T>,
    a_plus: &Matrix<T>,
    ell: usize,
    v_plus: &[T],
    w_minus: &[T],
    rel_tol: f64,
) -> bool {
    verify_stability_vector(a_plus, v_plus) && verify_controllability_vector(a_minus, ell, w_minus, rel_tol)
}

/// Structural certificate check; pass `None` for the Farkas pair when `ell = 0`.
pub fn verify_structural<T: Scalar>(
    s_a: &SignMatrix,
    ell: usize,
    v1: &[T],
    farkas: Option<(&[T], &[T])>,
    rel_tol: f64,
) -> Result<bool, ErgodicityError> {
    let sgn_a: Matrix<T> = s_a.sgn();
    if !verify_stability_vector(&sgn_a, v1) {
        return Ok(false);
    }
    if ell == 0 {
        return Ok(true);
    }
    let Some((v2, v3)) = farkas else { return Ok(false) };
    let sgn_c: Matrix<T> = augment_with_feedback_edge(s_a, ell)?.sgn();
    let lp = farkas_lp(&sgn_c);
    let x: Vec<T> = v2.iter().chain(v3).cloned().collect();
    Ok(x.len() == 2 * s_a.rows() && lp.check_point(&x, rel_tol).is_ok())
}

// ------------------------------------------------------------------ checks

struct Ledger {
    checks: Vec<CrossCheck>,
}

impl Ledger {
    fn record(&mut self, property: Property, oracle: &str, verdict: bool, truth: bool, detail: Option<String>) {
        self.checks.push(CrossCheck { property, oracle: oracle.into(), verdict, agrees: verdict == truth, detail });
    }
}

fn minor_witness<T: Scalar>(test: &MinorTest<T>, name: &str) -> Option<Witness> {
    match test {
        MinorTest::NotHurwitz { order, pivot } => {
            Some(Witness::LeadingMinor { matrix: name.into(), order: *order, pivot: pivot.to_f64() })
        }
        MinorTest::Hurwitz(_) => None,
    }
}

fn solve_checked<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpOutcome<T>, ErgodicityError> {
    Ok(solve_feasibility(lp)?)
}

/// Output-controllability evidence for `M` (the characteristic matrix or
/// `A^-`): graph path, Krylov row and, when `M` is Hurwitz, static gain and
/// the homogenized LP. Returns the authoritative verdict and the LP vector.
fn controllability_routes<T: Scalar>(
    m: &Matrix<T>,
    name: &str,
    ell: usize,
    stable: bool,
    ledger: &mut Ledger,
    certs: &mut Vec<Certificate>,
) -> Result<(bool, Option<Vec<T>>), ErgodicityError> {
    let g = graph_of(m);
    let path = g.shortest_path(0, ell)?;
    let truth = ell == 0 || path.is_some();
    if ell == 0 {
        ledger.record(
            Property::OutputControllability,
            "actuated species is the controlled species",
            true,
            truth,
            None,
        );
    }
    ledger.record(
        Property::OutputControllability,
        &format!("path 1 -> {} in graph of {name}", ell + 1),
        path.is_some(),
        truth,
        path.as_ref().map(|p| format!("{:?}", one_based(p))),
    );
    let krylov = krylov_scalars(m, 0, ell);
    ledger.record(
        Property::OutputControllability,
        &format!("Krylov row of {name} nonzero"),
        krylov.iter().any(|x| !x.is_zero()),
        truth,
        None,
    );
    match &path {
        Some(p) => certs.push(Certificate::Path { nodes: one_based(p) }),
        None => certs.push(Certificate::Refutation {
            condition: Property::OutputControllability,
            reason: format!("no path from node 1 to node {} in the graph of {name}", ell + 1),
            witness: Witness::NoPath { from: 1, to: ell + 1, reachable: one_based(&g.reachable(0)) },
        }),
    }
    if !stable {
        return Ok((truth, None));
    }
    let gain = static_gain(m, 0, ell)?;
    ledger.record(
        Property::OutputControllability,
        &format!("static gain e_{}^T {name}^-1 e_1 nonzero", ell + 1),
        !gain.is_zero(),
        truth,
        Some(format!("{:e}", gain.to_f64())),
    );
    let lp = controllability_lp(m, ell, "w");
    let w = match solve_checked(&lp)? {
        LpOutcome::Feasible(x) => {
            let w = controllability_vector(&x);
            if !verify_controllability_vector(m, ell, &w, FEASIBILITY_TOL) {
                return Err(ErgodicityError::CertificateRejected(format!("w for {name}")));
            }
            Some(w)
        }
        LpOutcome::Infeasible => None,
    };
    ledger.record(Property::OutputControllability, &format!("linear program on {name}"), w.is_some(), truth, None);
    Ok((truth, w))
}

/// Stability evidence for `M`: leading minors (authoritative) and the LP.
fn stability_routes<T: Scalar>(
    m: &Matrix<T>,
    name: &str,
    ledger: &mut Ledger,
    certs: &mut Vec<Certificate>,
) -> Result<(bool, Option<Vec<T>>), ErgodicityError> {
    let minor = metzler_minor_test(m)?;
    let truth = minor.is_hurwitz();
    ledger.record(Property::Stability, &format!("leading minors of -{name}"), truth, truth, None);
    let v = match solve_checked(&stability_lp(m, "v"))? {
        LpOutcome::Feasible(v) => {
            if !verify_stability_vector(m, &v) {
                return Err(ErgodicityError::CertificateRejected(format!("v for {name}")));
            }
            Some(v)
        }
        LpOutcome::Infeasible => None,
    };
    ledger.record(Property::Stability, &format!("linear program v^T {name} < 0"), v.is_some(), truth, None);
    if let Some(witness) = minor_witness(&minor, name) {
        certs.push(Certificate::Refutation {
            condition: Property::Stability,
            reason: format!("{name} is not Hurwitz stable"),
            witness,
        });
    }
    Ok((truth, v))
}

fn finish(
    regime: Regime,
    d: usize,
    ell: usize,
    stable: bool,
    oc: bool,
    mut certs: Vec<Certificate>,
    summary: Option<Certificate>,
    ledger: Ledger,
) -> Result<AnalysisReport, ErgodicityError> {
    if let Some(c) = summary {
        certs.insert(0, c);
    }
    AnalysisReport {
        regime,
        verdicts: Verdicts { hurwitz_stable: stable, output_controllable: oc, overall: stable && oc },
        certificates: certs,
        oracle_crosschecks: ledger.checks,
        setpoint_bound: None,
        assumptions: Assumptions { irreducibility: None, ell: ell + 1, d },
    }
    .fail_on_disagreement()
}

/// Nominal check of a point characteristic matrix.
pub fn check_nominal<T: Scalar>(a: &Matrix<T>, ell: usize) -> Result<AnalysisReport, ErgodicityError> {
    let d = require_system(a, ell)?;
    let mut ledger = Ledger { checks: vec![] };
    let mut certs = vec![];
    let (stable, v) = stability_routes(a, "A", &mut ledger, &mut certs)?;
    let (oc, w) = controllability_routes(a, "A", ell, stable, &mut ledger, &mut certs)?;
    let summary = match (v, w) {
        (Some(v), Some(w)) if oc => Some(Certificate::Nominal { v: to_f64s(&v), w: to_f64s(&w) }),
        (Some(v), _) => Some(Certificate::Stability { v: to_f64s(&v) }),
        _ => None,
    };
    finish(Regime::Nominal, d, ell, stable, oc, certs, summary, ledger)
}

fn check_interval<T: Scalar>(a_minus: &Matrix<T>, a_plus: &Matrix<T>) -> Result<(), ErgodicityError> {
    if a_minus.rows() != a_plus.rows() || a_minus.cols() != a_plus.cols() {
        return Err(ErgodicityError::MalformedInterval("A- and A+ differ in shape".into()));
    }
    if !a_minus.le(a_plus) {
        return Err(ErgodicityError::MalformedInterval("A- <= A+ fails".into()));
    }
    if let Some((r, c)) = a_minus.metzler_violation() {
        return Err(ErgodicityError::MalformedInterval(format!("A- is not Metzler at ({}, {})", r + 1, c + 1)));
    }
    Ok(())
}

/// Uniform sample from the entrywise box `[lo, hi]`.
pub fn sample_between<T: Scalar>(lo: &Matrix<T>, hi: &Matrix<T>, rng: &mut impl Rng) -> Matrix<T> {
    Matrix::from_fn(lo.rows(), lo.cols(), |i, j| {
        let (l, h) = (lo[(i, j)].clone(), hi[(i, j)].clone());
        if l == h {
            l
        } else {
            let u: f64 = rng.random();
            l.clone() + (h - l) * T::from_f64(u)
        }
    })
}

/// Robust check over the interval `[A^-, A^+]`.
pub fn check_robust<T: Scalar>(
    a_minus: &Matrix<T>,
    a_plus: &Matrix<T>,
    ell: usize,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport, ErgodicityError> {
    let d = require_system(a_plus, ell)?;
    check_interval(a_minus, a_plus)?;
    a_minus.check_finite()?;
    let mut ledger = Ledger { checks: vec![] };
    let mut certs = vec![];
    let (stable, v_plus) = stability_routes(a_plus, "A+", &mut ledger, &mut certs)?;
    if !stable {
        certs.push(Certificate::Refutation {
            condition: Property::Stability,
            reason: "A+ belongs to the interval and is not Hurwitz stable".into(),
            witness: Witness::Matrix { name: "A+".into(), rows: a_plus.to_f64().to_rows() },
        });
    }
    // A- <= A+ with both Metzler, so A- is Hurwitz whenever A+ is
    let (oc, w_minus) = controllability_routes(a_minus, "A-", ell, stable, &mut ledger, &mut certs)?;

    if stable && opts.interval_samples > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut all_stable = true;
        let mut all_oc = true;
        for _ in 0..opts.interval_samples {
            let m = sample_between(a_minus, a_plus, &mut rng);
            let hurwitz = metzler_minor_test(&m)?.is_hurwitz();
            all_stable &= hurwitz;
            if hurwitz {
                all_oc &= !static_gain(&m, 0, ell)?.is_zero();
            }
        }
        ledger.record(
            Property::Stability,
            "sampled members of [A-, A+] Hurwitz",
            all_stable,
            stable,
            Some(format!("{} samples", opts.interval_samples)),
        );
        if oc {
            ledger.record(
                Property::OutputControllability,
                "sampled members of [A-, A+] have nonzero static gain",
                all_oc,
                oc,
                Some(format!("{} samples", opts.interval_samples)),
            );
        }
    }

    let summary = match (v_plus, w_minus) {
        (Some(v), Some(w)) if oc => Some(Certificate::Robust { v_plus: to_f64s(&v), w_minus: to_f64s(&w) }),
        (Some(v), _) => Some(Certificate::Stability { v: to_f64s(&v) }),
        _ => None,
    };
    finish(Regime::Robust, d, ell, stable, oc, certs, summary, ledger)
}

/// Structural check of a Metzler sign pattern.
pub fn check_structural(s_a: &SignMatrix, ell: usize) -> Result<AnalysisReport, ErgodicityError> {
    check_structural_in::<f64>(s_a, ell)
}

/// [`check_structural`] with the programs solved over `T`.
pub fn check_structural_in<T: Scalar>(s_a: &SignMatrix, ell: usize) -> Result<AnalysisReport, ErgodicityError> {
    if !s_a.is_square() {
        return Err(GraphError::NotSquare { rows: s_a.rows(), cols: s_a.cols() }.into());
    }
    let d = s_a.rows();
    if ell >= d {
        return Err(ErgodicityError::BadEll { ell, d });
    }
    if !s_a.is_metzler_pattern() {
        return Err(ErgodicityError::Net(NetError::NotMetzler { row: 0, col: 0 }));
    }
    let mut ledger = Ledger { checks: vec![] };
    let mut certs = vec![];
    let g = graph_of(s_a);

    // graph route
    let bad_diag = s_a.non_negative_diagonal();
    let acyclic = g.acyclicity();
    let stable = bad_diag.is_empty() && acyclic.is_ok();
    ledger.record(
        Property::Stability,
        "negative diagonal and acyclic graph of S_A",
        stable,
        stable,
        None,
    );
    if !bad_diag.is_empty() {
        certs.push(Certificate::Refutation {
            condition: Property::Stability,
            reason: "S_A has diagonal entries that are not negative".into(),
            witness: Witness::NonNegativeDiagonal { indices: one_based(&bad_diag) },
        });
    }
    match &acyclic {
        Ok(order) => certs.push(Certificate::TopologicalOrder { order: one_based(order) }),
        Err(cycle) => certs.push(Certificate::Refutation {
            condition: Property::Stability,
            reason: "the graph of S_A has a cycle".into(),
            witness: Witness::Cycle { nodes: one_based(cycle) },
        }),
    }

    // sgn(S_A) route
    let sgn_a: Matrix<T> = s_a.sgn();
    ledger.record(
        Property::Stability,
        "leading minors of -sgn(S_A)",
        metzler_minor_test(&sgn_a)?.is_hurwitz(),
        stable,
        None,
    );
    let v1 = match solve_checked(&stability_lp(&sgn_a, "v1_"))? {
        LpOutcome::Feasible(v) if verify_stability_vector(&sgn_a, &v) => Some(v),
        LpOutcome::Feasible(_) => return Err(ErgodicityError::CertificateRejected("v1".into())),
        LpOutcome::Infeasible => None,
    };
    ledger.record(Property::Stability, "linear program v1^T sgn(S_A) < 0", v1.is_some(), stable, None);

    // controllability
    let path = g.shortest_path(0, ell)?;
    let oc = ell == 0 || path.is_some();
    ledger.record(
        Property::OutputControllability,
        &format!("path 1 -> {} in graph of S_A", ell + 1),
        oc,
        oc,
        path.as_ref().map(|p| format!("{:?}", one_based(p))),
    );
    match &path {
        Some(p) => certs.push(Certificate::Path { nodes: one_based(p) }),
        None => certs.push(Certificate::Refutation {
            condition: Property::OutputControllability,
            reason: format!("no path from node 1 to node {} in the graph of S_A", ell + 1),
            witness: Witness::NoPath { from: 1, to: ell + 1, reachable: one_based(&g.reachable(0)) },
        }),
    }
    ledger.record(
        Property::OutputControllability,
        "Krylov row of sgn(S_A) nonzero",
        krylov_scalars(&sgn_a, 0, ell).iter().any(|x| !x.is_zero()),
        oc,
        None,
    );
    let mut farkas = None;
    if ell != 0 {
        let s_c = augment_with_feedback_edge(s_a, ell)?;
        let sgn_c: Matrix<T> = s_c.sgn();
        let cyclic = graph_of(&s_c).acyclicity().is_err();
        // with S_A stable, a cycle through the new edge is a path 1 -> ell
        if stable {
            ledger.record(Property::OutputControllability, "graph of S_C has a cycle", cyclic, oc, None);
            let lp = farkas_lp(&sgn_c);
            farkas = match solve_checked(&lp)? {
                LpOutcome::Feasible(x) => Some((x[..d].to_vec(), x[d..].to_vec())),
                LpOutcome::Infeasible => None,
            };
            ledger.record(
                Property::OutputControllability,
                "linear program v2 = sgn(S_C) v3",
                farkas.is_some(),
                oc,
                None,
            );
        }
    }

    let summary = match (&v1, &farkas) {
        (Some(v1), Some((v2, v3))) if oc => Some(Certificate::Structural {
            v1: to_f64s(v1),
            v2: Some(to_f64s(v2)),
            v3: Some(to_f64s(v3)),
        }),
        (Some(v1), None) if oc && ell == 0 => Some(Certificate::Structural { v1: to_f64s(v1), v2: None, v3: None }),
        (Some(v1), _) => Some(Certificate::Stability { v: to_f64s(v1) }),
        _ => None,
    };
    finish(Regime::Structural, d, ell, stable, oc, certs, summary, ledger)
}

// ------------------------------------------------------------- set points

fn probe<T: Scalar>(q: Option<&[f64]>, d: usize) -> Result<Vec<T>, ErgodicityError> {
    match q {
        None => Ok(vec![T::one(); d]),
        Some(q) if q.len() != d => Err(ErgodicityError::BadProbe(format!("expected {d} entries, got {}", q.len()))),
        Some(q) if q.iter().any(|x| !(x.is_finite() && *x > 0.0)) => {
            Err(ErgodicityError::BadProbe("entries must be positive".into()))
        }
        Some(q) => Ok(q.iter().map(|&x| T::from_f64(x)).collect()),
    }
}

/// Default `c = 0.9 |lambda_F(A)|` for a Hurwitz Metzler `A`.
pub fn default_c<T: Scalar>(a: &Matrix<T>) -> Result<T, ErgodicityError> {
    let lf = frobenius_eigenvalue(a, 1e-12)?;
    Ok(T::from_f64(0.9) * lf.abs())
}

/// `v = -(A + cI)^{-T} q` and the bound `v^T b_0 / (c v_ell)`.
pub fn setpoint_bound_value<T: Scalar>(
    a: &Matrix<T>,
    b0: &[T],
    ell: usize,
    c: &T,
    q: &[T],
) -> Result<(T, Vec<T>), ErgodicityError> {
    require_system(a, ell)?;
    if !c.is_positive() {
        return Err(ErgodicityError::InvalidC { c: c.to_f64() });
    }
    let shifted_t = a.shift_diagonal(c).transpose();
    let MinorTest::Hurwitz(f) = metzler_minor_test(&shifted_t)? else {
        return Err(ErgodicityError::InvalidC { c: c.to_f64() });
    };
    let v = f.solve_negated(q);
    if let Some(index) = v.iter().position(|x| !x.is_positive()) {
        return Err(ErgodicityError::NonpositiveV { index });
    }
    let bound = dot(&v, b0) / (c.clone() * v[ell].clone());
    Ok((bound, v))
}

/// `v^T b_0 / (c v_ell)` for a caller-supplied `v`.
pub fn bound_for_vector<T: Scalar>(v: &[T], b0: &[T], ell: usize, c: &T) -> T {
    dot(v, b0) / (c.clone() * v[ell].clone())
}

/// Nominal set-point bound with default `c` and `q` unless given.
pub fn setpoint_bound_nominal<T: Scalar>(
    a: &Matrix<T>,
    b0: &[T],
    ell: usize,
    c: Option<f64>,
    q: Option<&[f64]>,
) -> Result<SetpointBound, ErgodicityError> {
    let d = require_system(a, ell)?;
    let q = probe::<T>(q, d)?;
    let c = match c {
        Some(c) => T::from_f64(c),
        None => default_c(a)?,
    };
    let (bound, v) = setpoint_bound_value(a, b0, ell, &c, &q)?;
    Ok(SetpointBound {
        c: c.to_f64(),
        q: to_f64s(&q),
        v: to_f64s(&v),
        bound: bound.to_f64(),
        side_condition_holds: true,
        evaluations: vec![],
    })
}

/// Ratio and side condition at one `Delta`, using `v(Delta) = -(A^+ - Delta)^{-T} q`:
/// the ratio is `v^T b^+ / (c v_ell)` and the side condition `c v <= q`.
fn robust_at<T: Scalar>(
    a_plus: &Matrix<T>,
    delta: &Matrix<T>,
    b_plus: &[T],
    ell: usize,
    c: &T,
    q: &[T],
    label: String,
) -> Result<(DeltaEvaluation, Vec<T>), ErgodicityError> {
    let m = a_plus.sub(delta);
    let v = match metzler_minor_test(&m.transpose())? {
        MinorTest::Hurwitz(f) => f.solve_negated(q),
        MinorTest::NotHurwitz { .. } => {
            // outside the Hurwitz region the formula still applies if M is invertible
            let inv = inverse(&m).map_err(|_| ErgodicityError::SingularAtDelta { label: label.clone() })?;
            inv.transpose().mul_vec(q).into_iter().map(|x| -x).collect()
        }
    };
    let ratio = bound_for_vector(&v, b_plus, ell, c);
    let side = v.iter().zip(q).all(|(vi, qi)| c.clone() * vi.clone() <= qi.clone());
    Ok((DeltaEvaluation { label, ratio: ratio.to_f64(), side_condition: side }, v))
}

/// Robust set-point bound: the largest ratio over `Delta = 0`,
/// `Delta = A^+ - A^-`, the grid `t (A^+ - A^-)` and seeded random points of
/// the box. `side_condition_holds` covers exactly the evaluated points.
pub fn setpoint_bound_robust<T: Scalar>(
    a_minus: &Matrix<T>,
    a_plus: &Matrix<T>,
    b_plus: &[T],
    ell: usize,
    opts: &AnalysisOptions,
) -> Result<SetpointBound, ErgodicityError> {
    let d = require_system(a_plus, ell)?;
    check_interval(a_minus, a_plus)?;
    let q = probe::<T>(opts.q.as_deref(), d)?;
    let c = match opts.c {
        Some(c) if c.is_finite() && c > 0.0 => T::from_f64(c),
        Some(c) => return Err(ErgodicityError::InvalidC { c }),
        None => default_c(a_plus)?,
    };
    let width = a_plus.sub(a_minus);
    let mut deltas = vec![("Delta = 0".to_string(), Matrix::zeros(d, d)), ("Delta = A+ - A-".to_string(), width.clone())];
    for i in 1..=opts.grid {
        let t = T::from_i64(i as i64) / T::from_i64(opts.grid as i64 + 1);
        deltas.push((format!("Delta = {:.4} (A+ - A-)", t.to_f64()), width.scale(&t)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let zero = Matrix::zeros(d, d);
    for i in 0..opts.delta_samples {
        deltas.push((format!("random Delta #{}", i + 1), sample_between(&zero, &width, &mut rng)));
    }
    let mut evaluations = Vec::with_capacity(deltas.len());
    let mut v0 = None;
    let mut best = None::<T>;
    for (label, delta) in deltas {
        let (eval, v) = robust_at(a_plus, &delta, b_plus, ell, &c, &q, label)?;
        if v0.is_none() {
            v0 = Some(v.clone());
        }
        let ratio = bound_for_vector(&v, b_plus, ell, &c);
        best = Some(match best {
            Some(b) => T::max_of(b, ratio),
            None => ratio,
        });
        evaluations.push(eval);
    }
    Ok(SetpointBound {
        c: c.to_f64(),
        q: to_f64s(&q),
        v: to_f64s(&v0.expect("at least one evaluation")),
        bound: best.expect("at least one evaluation").to_f64(),
        side_condition_holds: evaluations.iter().all(|e| e.side_condition),
        evaluations,
    })
}

// ------------------------------------------------ interval constructions

/// `v(Delta) = -(A^+ - Delta)^{-T} q`.
pub fn v_of_delta<T: Scalar>(a_plus: &Matrix<T>, delta: &Matrix<T>, q: &[T]) -> Result<Vec<T>, ErgodicityError> {
    let inv = inverse(&a_plus.sub(delta))?;
    Ok(inv.transpose().mul_vec(q).into_iter().map(|x| -x).collect())
}

/// `(I + Delta (A^+ - Delta)^{-1})^T v_+`.
pub fn v_from_v_plus<T: Scalar>(
    a_plus: &Matrix<T>,
    delta: &Matrix<T>,
    v_plus: &[T],
) -> Result<Vec<T>, ErgodicityError> {
    let d = a_plus.rows();
    let inv = inverse(&a_plus.sub(delta))?;
    let m = Matrix::identity(d).add(&delta.mul(&inv)?);
    Ok(m.vec_mul(v_plus))
}

/// `w(Delta) = (A^- (A^- + Delta)^{-1})^T w_-`.
pub fn w_of_delta<T: Scalar>(
    a_minus: &Matrix<T>,
    delta: &Matrix<T>,
    w_minus: &[T],
) -> Result<Vec<T>, ErgodicityError> {
    let inv = inverse(&a_minus.add(delta))?;
    Ok(a_minus.mul(&inv)?.vec_mul(w_minus))
}

/// Both sides of `-(I + Delta (A^+ - Delta)^{-1})^T (A^+)^{-T} = -(A^+ - Delta)^{-T}`.
pub fn woodbury_sides<T: Scalar>(
    a_plus: &Matrix<T>,
    delta: &Matrix<T>,
) -> Result<(Matrix<T>, Matrix<T>), ErgodicityError> {
    let d = a_plus.rows();
    let inv_shifted = inverse(&a_plus.sub(delta))?;
    let inv_plus = inverse(a_plus)?;
    let left = Matrix::identity(d)
        .add(&delta.mul(&inv_shifted)?)
        .transpose()
        .mul(&inv_plus.transpose())?
        .scale(&-T::one());
    let right = inv_shifted.transpose().scale(&-T::one());
    Ok((left, right))
}

// ------------------------------------------------------------- top level

/// Derives the characteristic system in `regime`, runs the matching check
/// and attaches a set-point bound when one is defined.
pub fn analyze(
    net: &ReactionNetwork,
    regime: Regime,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport, ErgodicityError> {
    let sys: CharacteristicSystem<f64> = characteristic_system_as(net, regime)?;
    let ell = sys.ell;
    let mut report = match &sys.form {
        CharacteristicForm::Point { a, .. } => check_nominal(a, ell)?,
        CharacteristicForm::Interval { a_minus, a_plus, .. } => check_robust(a_minus, a_plus, ell, opts)?,
        CharacteristicForm::Sign { s_a, .. } => check_structural(s_a, ell)?,
    };
    if report.verdicts.hurwitz_stable {
        report.setpoint_bound = match &sys.form {
            CharacteristicForm::Point { a, b0 } => Some(setpoint_bound_nominal(a, b0, ell, opts.c, opts.q.as_deref())?),
            CharacteristicForm::Interval { a_minus, a_plus, b0_plus, .. } => {
                Some(setpoint_bound_robust(a_minus, a_plus, b0_plus, ell, opts)?)
            }
            // the bound needs a member of the class; use the point rates when present
            CharacteristicForm::Sign { .. } if net.point_rates().is_ok() => {
                match characteristic_system_as::<f64>(net, Regime::Nominal)?.form {
                    CharacteristicForm::Point { a, b0 } => {
                        Some(setpoint_bound_nominal(&a, &b0, ell, opts.c, opts.q.as_deref())?)
                    }
                    _ => None,
                }
            }
            CharacteristicForm::Sign { .. } => None,
        };
    }
    report.assumptions.irreducibility = opts.irreducibility;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use crate::sgraph::Sign::{Minus as M, Plus as P, Zero as Z};
    use num_rational::BigRational;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows)
    }

    #[test]
    fn switch_nominal_certified() {
        let a = m(&[&[-1.0, 0.0], &[2.0, -3.0]]);
        let r = check_nominal(&a, 1).unwrap();
        assert!(r.verdicts.overall);
        let Certificate::Nominal { v, w } = &r.certificates[0] else { panic!("{:?}", r.certificates) };
        assert!(verify_nominal(&a, 1, v, w, 1e-8));
        assert!(r.oracle_crosschecks.len() >= 4);
        assert!(r.oracle_crosschecks.iter().all(|c| c.agrees));
    }

    #[test]
    fn switch_nominal_exact() {
        let a: Matrix<BigRational> = m(&[&[-1.0, 0.0], &[2.0, -3.0]]).cast();
        let r = check_nominal(&a, 1).unwrap();
        assert!(r.verdicts.overall);
        assert_eq!(static_gain(&a, 0, 1).unwrap(), rational(-2, 3));
    }

    #[test]
    fn decoupled_is_not_controllable() {
        let r = check_nominal(&m(&[&[-2.0, 0.0], &[0.0, -4.0]]), 1).unwrap();
        assert!(r.verdicts.hurwitz_stable);
        assert!(!r.verdicts.output_controllable);
        assert!(r.refutations().any(|(p, _, w)| *p == Property::OutputControllability
            && matches!(w, Witness::NoPath { from: 1, to: 2, .. })));
    }

    #[test]
    fn zero_matrix_is_unstable() {
        let r = check_nominal(&m(&[&[0.0]]), 0).unwrap();
        assert!(!r.verdicts.hurwitz_stable);
        assert!(r.verdicts.output_controllable);
        assert!(!r.verdicts.overall);
    }

    #[test]
    fn robust_interval_fixture() {
        let a_minus = m(&[&[-2.0, 0.0], &[1.0, -4.0]]);
        let a_plus = m(&[&[-1.0, 0.5], &[2.0, -3.0]]);
        let r = check_robust(&a_minus, &a_plus, 1, &AnalysisOptions::default()).unwrap();
        assert!(r.verdicts.overall, "{r:?}");
        assert!(verify_robust(&a_minus, &a_plus, 1, &[5.0, 1.5], &[0.125, 0.25], 1e-12));

        let no_path = m(&[&[-2.0, 0.0], &[0.0, -4.0]]);
        let r = check_robust(&no_path, &a_plus, 1, &AnalysisOptions::default()).unwrap();
        assert!(r.verdicts.hurwitz_stable && !r.verdicts.output_controllable);

        let unstable = m(&[&[-1.0, 1.6], &[2.0, -3.0]]);
        let r = check_robust(&a_minus, &unstable, 1, &AnalysisOptions::default()).unwrap();
        assert!(!r.verdicts.hurwitz_stable);
        assert!(r.refutations().any(|(_, _, w)| matches!(w, Witness::Matrix { name, .. } if name == "A+")));
    }

    #[test]
    fn malformed_interval() {
        let lo = m(&[&[-1.0]]);
        let hi = m(&[&[-2.0]]);
        assert!(matches!(
            check_robust(&lo, &hi, 0, &AnalysisOptions::default()),
            Err(ErgodicityError::MalformedInterval(_))
        ));
    }

    #[test]
    fn structural_examples() {
        let s_a = SignMatrix::from_rows(&[[M, Z], [P, M]]);
        let r = check_structural(&s_a, 1).unwrap();
        assert!(r.verdicts.overall);
        assert!(r.certificates.iter().any(|c| *c == Certificate::Path { nodes: vec![1, 2] }));
        assert!(verify_structural(&s_a, 1, &[2.0, 1.0], Some((&[0.0, 0.0], &[0.5, 0.5])), 1e-12).unwrap());

        let s_c = SignMatrix::from_rows(&[[M, P], [P, M]]);
        let r = check_structural(&s_c, 1).unwrap();
        assert!(!r.verdicts.hurwitz_stable);
        assert!(r.refutations().any(|(_, _, w)| *w == Witness::Cycle { nodes: vec![1, 2, 1] }));

        let zero_diag = SignMatrix::from_rows(&[[M, Z], [P, Z]]);
        assert!(!check_structural(&zero_diag, 1).unwrap().verdicts.hurwitz_stable);

        let r = check_structural(&s_a, 0).unwrap();
        assert!(r.verdicts.overall);
        assert!(matches!(r.certificates[0], Certificate::Structural { v2: None, .. }));
    }

    #[test]
    fn nominal_bound_examples() {
        let a = m(&[&[-1.0, 0.0], &[2.0, -3.0]]);
        let b = setpoint_bound_nominal(&a, &[0.0, 0.0], 1, None, None).unwrap();
        assert_eq!(b.bound, 0.0);

        let one = m(&[&[-1.0]]);
        let (bound, v) = setpoint_bound_value(&one, &[3.0], 0, &0.5, &[1.0]).unwrap();
        assert_eq!(v, vec![2.0]);
        assert_eq!(bound, 6.0);
        assert!(matches!(
            setpoint_bound_value(&one, &[3.0], 0, &1.0, &[1.0]),
            Err(ErgodicityError::InvalidC { .. })
        ));
        let exact = setpoint_bound_value(&one.cast::<BigRational>(), &[rational(3, 1)], 0, &rational(1, 2), &[rational(1, 1)]);
        assert_eq!(exact.unwrap().0, rational(6, 1));
    }

    #[test]
    fn robust_bound_degenerate_interval() {
        let a = m(&[&[-1.0, 0.5], &[2.0, -3.0]]);
        let b = [1.0, 2.0];
        let opts = AnalysisOptions { c: Some(0.2), ..Default::default() };
        let rb = setpoint_bound_robust(&a, &a, &b, 1, &opts).unwrap();
        let v = v_of_delta(&a, &Matrix::zeros(2, 2), &[1.0, 1.0]).unwrap();
        let direct = bound_for_vector(&v, &b, 1, &0.2);
        assert!((rb.bound - direct).abs() <= 1e-12 * direct.abs());
        assert!(rb.side_condition_holds);

        let huge = AnalysisOptions { c: Some(1e6), ..Default::default() };
        assert!(!setpoint_bound_robust(&a, &a, &b, 1, &huge).unwrap().side_condition_holds);
    }

    #[test]
    fn interval_constructions() {
        let a_minus = m(&[&[-2.0, 0.0], &[1.0, -4.0]]);
        let a_plus = m(&[&[-1.0, 0.5], &[2.0, -3.0]]);
        let delta = a_plus.sub(&a_minus).scale(&0.5);
        let q = [1.0, 2.0];
        let v = v_of_delta(&a_plus, &delta, &q).unwrap();
        assert!(v.iter().all(|x| *x > 0.0));
        let v_plus = v_of_delta(&a_plus, &Matrix::zeros(2, 2), &q).unwrap();
        let v2 = v_from_v_plus(&a_plus, &delta, &v_plus).unwrap();
        for (x, y) in v.iter().zip(&v2) {
            assert!((x - y).abs() < 1e-12);
        }
        let (l, r) = woodbury_sides(&a_plus, &delta).unwrap();
        assert!(l.sub(&r).max_abs() < 1e-12);
        let w_minus = [0.125, 0.25];
        let w = w_of_delta(&a_minus, &delta, &w_minus).unwrap();
        assert!(w.iter().zip(&w_minus).all(|(a, b)| a >= b));
        let res = a_minus.add(&delta).vec_mul(&w);
        assert!((res[0]).abs() < 1e-12 && (res[1] + 1.0).abs() < 1e-12);
    }
}
