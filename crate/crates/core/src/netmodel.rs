//! Reaction networks, stoichiometry and the characteristic system.
//!
//! Species are stored in canonical order: the actuated species is moved to
//! index 0 when a network is built, so the actuation direction is always
//! `e_1`. Reactions refer to species by canonical index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::sgraph::{Sign, SignMatrix};

/// Prefix reserved for the species introduced by [`close_loop`].
pub const CONTROLLER_PREFIX: &str = "_aic_";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("species `{0}` declared twice")]
    DuplicateSpecies(String),
    #[error("species name `{0}` uses the reserved prefix `_aic_`")]
    ReservedName(String),
    #[error("reaction {reaction} refers to species index {index}, which does not exist")]
    UnknownSpecies { reaction: usize, index: usize },
    #[error("reaction {0} has neither reactants nor products")]
    EmptyReaction(usize),
    #[error("reaction {reaction}: {reason}")]
    InvalidRate { reaction: usize, reason: String },
    #[error("reaction {0}: a bounded propensity is only allowed on a zero-order reaction with a point bound")]
    BoundedNotZeroOrder(usize),
    #[error("species index {0} out of range")]
    BadIndex(usize),
    #[error("network is not unimolecular (reactions {0:?})")]
    NotUnimolecular(Vec<usize>),
    #[error("characteristic matrix is not Metzler at ({row}, {col}); this is a bug")]
    NotMetzler { row: usize, col: usize },
    #[error("entry ({row}, {col}) mixes positive and negative contributions; its sign is indeterminate")]
    IndeterminateSign { row: usize, col: usize },
    #[error("reaction {0}: rate interval contains zero and a positive value, so its sign is not fixed")]
    AmbiguousRateSign(usize),
    #[error("reaction {reaction}: a {found} rate cannot be used in the {regime} regime")]
    RegimeMismatch { reaction: usize, found: &'static str, regime: Regime },
    #[error("controller parameter {0} must be positive and finite")]
    InvalidParameter(&'static str),
    #[error("network already contains an antithetic controller")]
    AlreadyClosed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Nominal,
    Robust,
    Structural,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Nominal => "nominal",
            Regime::Robust => "robust",
            Regime::Structural => "structural",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
    pub index: usize,
}

/// Mass-action rate parameter, possibly uncertain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RateValue {
    Point { value: f64 },
    Interval { lower: f64, upper: f64 },
    Sign { sign: Sign },
}

impl RateValue {
    pub fn point(value: f64) -> Self {
        RateValue::Point { value }
    }

    pub fn interval(lower: f64, upper: f64) -> Self {
        RateValue::Interval { lower, upper }
    }

    pub fn sign(sign: Sign) -> Self {
        RateValue::Sign { sign }
    }

    fn kind(&self) -> &'static str {
        match self {
            RateValue::Point { .. } => "point",
            RateValue::Interval { .. } => "interval",
            RateValue::Sign { .. } => "sign",
        }
    }

    fn validate(&self) -> Result<(), String> {
        match *self {
            RateValue::Point { value } if !(value.is_finite() && value > 0.0) => {
                Err(format!("point rate must be positive and finite, got {value}"))
            }
            RateValue::Interval { lower, upper } if !(lower.is_finite() && upper.is_finite()) => {
                Err("interval bounds must be finite".into())
            }
            RateValue::Interval { lower, .. } if lower < 0.0 => {
                Err(format!("interval lower bound {lower} is negative"))
            }
            RateValue::Interval { lower, upper } if upper < lower => {
                Err(format!("interval [{lower}, {upper}] is inverted"))
            }
            RateValue::Sign { sign: Sign::Minus } => Err("rates cannot be negative".into()),
            _ => Ok(()),
        }
    }

    /// Endpoints `(lower, upper)` for the robust regime.
    fn bounds(&self, reaction: usize) -> Result<(f64, f64), NetError> {
        match *self {
            RateValue::Point { value } => Ok((value, value)),
            RateValue::Interval { lower, upper } => Ok((lower, upper)),
            RateValue::Sign { .. } => {
                Err(NetError::RegimeMismatch { reaction, found: "sign", regime: Regime::Robust })
            }
        }
    }

    fn sign_of(&self, reaction: usize) -> Result<Sign, NetError> {
        match *self {
            RateValue::Point { .. } => Ok(Sign::Plus),
            RateValue::Interval { lower, .. } if lower > 0.0 => Ok(Sign::Plus),
            RateValue::Interval { upper, .. } if upper == 0.0 => Ok(Sign::Zero),
            RateValue::Interval { .. } => Err(NetError::AmbiguousRateSign(reaction)),
            RateValue::Sign { sign } => Ok(sign),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    /// Species index to reactant multiplicity.
    pub reactants: BTreeMap<usize, u32>,
    /// Species index to product multiplicity.
    pub products: BTreeMap<usize, u32>,
    pub rate: RateValue,
    /// The propensity is some nonnegative function bounded by the point
    /// rate; only its bound enters the analysis.
    pub bounded: bool,
}

impl Reaction {
    pub fn new(reactants: &[(usize, u32)], products: &[(usize, u32)], rate: RateValue) -> Self {
        let collect = |side: &[(usize, u32)]| {
            let mut m = BTreeMap::new();
            for &(s, c) in side {
                if c > 0 {
                    *m.entry(s).or_insert(0) += c;
                }
            }
            m
        };
        Self { reactants: collect(reactants), products: collect(products), rate, bounded: false }
    }

    pub fn bounded(mut self) -> Self {
        self.bounded = true;
        self
    }

    pub fn order(&self) -> u32 {
        self.reactants.values().sum()
    }

    /// `zeta_k = zeta_k^r - zeta_k^l` restricted to species `j`.
    pub fn net_change(&self, j: usize) -> i64 {
        i64::from(*self.products.get(&j).unwrap_or(&0)) - i64::from(*self.reactants.get(&j).unwrap_or(&0))
    }

    /// The single reactant of a first-order reaction.
    pub fn first_order_reactant(&self) -> Option<usize> {
        match self.reactants.iter().next() {
            Some((&s, &1)) if self.reactants.len() == 1 => Some(s),
            _ => None,
        }
    }

    fn species(&self) -> impl Iterator<Item = usize> + '_ {
        self.reactants.keys().chain(self.products.keys()).copied()
    }

    fn remap(&self, perm: &[usize]) -> Self {
        let map = |m: &BTreeMap<usize, u32>| m.iter().map(|(&s, &c)| (perm[s], c)).collect();
        Self { reactants: map(&self.reactants), products: map(&self.products), ..self.clone() }
    }
}

/// Parameters of the antithetic integral controller.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    pub mu: f64,
    pub theta: f64,
    pub eta: f64,
    pub k: f64,
}

impl ControllerParams {
    pub fn setpoint(&self) -> f64 {
        self.mu / self.theta
    }

    pub fn validate(&self) -> Result<(), NetError> {
        for (name, v) in [("mu", self.mu), ("theta", self.theta), ("eta", self.eta), ("k", self.k)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(NetError::InvalidParameter(name));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactionNetwork {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
    controlled: usize,
    /// Number of open-loop species; controller species follow them.
    open_species: usize,
    /// Number of open-loop reactions; controller reactions follow them.
    open_reactions: usize,
    controller: Option<ControllerParams>,
}

impl ReactionNetwork {
    /// Validates and canonicalizes a network. `controlled` and `actuated`
    /// index into `names`; reactions refer to `names` as given.
    pub fn new(
        names: Vec<String>,
        reactions: Vec<Reaction>,
        controlled: usize,
        actuated: usize,
    ) -> Result<Self, NetError> {
        let d = names.len();
        let mut seen = BTreeSet::new();
        for name in &names {
            if name.starts_with(CONTROLLER_PREFIX) {
                return Err(NetError::ReservedName(name.clone()));
            }
            if !seen.insert(name.as_str()) {
                return Err(NetError::DuplicateSpecies(name.clone()));
            }
        }
        for idx in [controlled, actuated] {
            if idx >= d {
                return Err(NetError::BadIndex(idx));
            }
        }
        for (k, r) in reactions.iter().enumerate() {
            if let Some(index) = r.species().find(|&s| s >= d) {
                return Err(NetError::UnknownSpecies { reaction: k, index });
            }
            if r.reactants.is_empty() && r.products.is_empty() {
                return Err(NetError::EmptyReaction(k));
            }
            r.rate.validate().map_err(|reason| NetError::InvalidRate { reaction: k, reason })?;
            if r.bounded && (r.order() != 0 || !matches!(r.rate, RateValue::Point { .. })) {
                return Err(NetError::BoundedNotZeroOrder(k));
            }
        }

        // old index -> new index, actuated species first
        let mut order: Vec<usize> = vec![actuated];
        order.extend((0..d).filter(|&i| i != actuated));
        let mut perm = vec![0; d];
        for (new, &old) in order.iter().enumerate() {
            perm[old] = new;
        }
        let species = order
            .iter()
            .enumerate()
            .map(|(index, &old)| Species { name: names[old].clone(), index })
            .collect();
        let reactions: Vec<Reaction> = reactions.iter().map(|r| r.remap(&perm)).collect();
        Ok(Self {
            species,
            open_species: d,
            open_reactions: reactions.len(),
            reactions,
            controlled: perm[controlled],
            controller: None,
        })
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    /// Open-loop dimension `d`.
    pub fn dimension(&self) -> usize {
        self.open_species
    }

    pub fn open_loop_reactions(&self) -> &[Reaction] {
        &self.reactions[..self.open_reactions]
    }

    /// Canonical (0-based) index of the controlled species.
    pub fn controlled_index(&self) -> usize {
        self.controlled
    }

    pub fn actuated_index(&self) -> usize {
        0
    }

    pub fn controller(&self) -> Option<&ControllerParams> {
        self.controller.as_ref()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    /// True when every rate is a point value.
    pub fn is_point(&self) -> bool {
        self.reactions.iter().all(|r| matches!(r.rate, RateValue::Point { .. }))
    }

    /// The least specific regime the rate data supports.
    pub fn natural_regime(&self) -> Regime {
        let rates = self.open_loop_reactions().iter().map(|r| &r.rate);
        if rates.clone().any(|r| matches!(r, RateValue::Sign { .. })) {
            Regime::Structural
        } else if rates.clone().any(|r| matches!(r, RateValue::Interval { .. })) {
            Regime::Robust
        } else {
            Regime::Nominal
        }
    }

    /// Point rates of all reactions, or the index of the first non-point one.
    pub fn point_rates(&self) -> Result<Vec<f64>, usize> {
        self.reactions
            .iter()
            .enumerate()
            .map(|(k, r)| match r.rate {
                RateValue::Point { value } => Ok(value),
                _ => Err(k),
            })
            .collect()
    }

    /// Copy with open-loop rates replaced by the given point values.
    pub fn with_point_rates(&self, rates: &[f64]) -> Self {
        let mut out = self.clone();
        for (r, &v) in out.reactions.iter_mut().zip(rates) {
            r.rate = RateValue::point(v);
        }
        out
    }
}

/// `S`, `d x K`, over the open-loop species and reactions.
pub fn stoichiometry_matrix(net: &ReactionNetwork) -> Matrix<i64> {
    let rs = net.open_loop_reactions();
    Matrix::from_fn(net.dimension(), rs.len(), |j, k| rs[k].net_change(j))
}

/// Indices of reactions consuming more than one molecule.
pub fn check_unimolecular(net: &ReactionNetwork) -> Result<(), Vec<usize>> {
    let bad: Vec<usize> = net
        .open_loop_reactions()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.order() > 1)
        .map(|(k, _)| k)
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(bad)
    }
}

fn require_unimolecular(net: &ReactionNetwork) -> Result<(), NetError> {
    check_unimolecular(net).map_err(NetError::NotUnimolecular)
}

/// `lambda(x) = W x + w_0`; bounded propensities contribute their bound to `w_0`.
pub fn propensity_decomposition<T: Scalar>(net: &ReactionNetwork) -> Result<(Matrix<T>, Vec<T>), NetError> {
    require_unimolecular(net)?;
    let rs = net.open_loop_reactions();
    let d = net.dimension();
    let mut w = Matrix::zeros(rs.len(), d);
    let mut w0 = vec![T::zero(); rs.len()];
    for (k, r) in rs.iter().enumerate() {
        let RateValue::Point { value } = r.rate else {
            return Err(NetError::RegimeMismatch { reaction: k, found: r.rate.kind(), regime: Regime::Nominal });
        };
        match r.first_order_reactant() {
            Some(i) => w[(k, i)] = T::from_f64(value),
            None => w0[k] = T::from_f64(value),
        }
    }
    Ok((w, w0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum CharacteristicForm<T> {
    Point { a: Matrix<T>, b0: Vec<T> },
    Interval { a_minus: Matrix<T>, a_plus: Matrix<T>, b0_minus: Vec<T>, b0_plus: Vec<T> },
    Sign { s_a: SignMatrix, s_b: Vec<Sign> },
}

/// `(A, b_0)` in one of three forms, with the controlled index `ell`
/// (0-based). The actuated index is always 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharacteristicSystem<T> {
    pub d: usize,
    pub ell: usize,
    pub form: CharacteristicForm<T>,
}

impl<T: Scalar> CharacteristicSystem<T> {
    pub fn point(a: Matrix<T>, b0: Vec<T>, ell: usize) -> Self {
        Self { d: a.rows(), ell, form: CharacteristicForm::Point { a, b0 } }
    }

    pub fn interval(a_minus: Matrix<T>, a_plus: Matrix<T>, b0_minus: Vec<T>, b0_plus: Vec<T>, ell: usize) -> Self {
        Self { d: a_plus.rows(), ell, form: CharacteristicForm::Interval { a_minus, a_plus, b0_minus, b0_plus } }
    }

    pub fn sign(s_a: SignMatrix, s_b: Vec<Sign>, ell: usize) -> Self {
        Self { d: s_a.rows(), ell, form: CharacteristicForm::Sign { s_a, s_b } }
    }

    pub fn regime(&self) -> Regime {
        match self.form {
            CharacteristicForm::Point { .. } => Regime::Nominal,
            CharacteristicForm::Interval { .. } => Regime::Robust,
            CharacteristicForm::Sign { .. } => Regime::Structural,
        }
    }

    pub fn cast<U: Scalar>(&self) -> CharacteristicSystem<U> {
        let v = |x: &[T]| x.iter().map(|t| U::from_f64(t.to_f64())).collect();
        let form = match &self.form {
            CharacteristicForm::Point { a, b0 } => CharacteristicForm::Point { a: a.cast(), b0: v(b0) },
            CharacteristicForm::Interval { a_minus, a_plus, b0_minus, b0_plus } => CharacteristicForm::Interval {
                a_minus: a_minus.cast(),
                a_plus: a_plus.cast(),
                b0_minus: v(b0_minus),
                b0_plus: v(b0_plus),
            },
            CharacteristicForm::Sign { s_a, s_b } => CharacteristicForm::Sign { s_a: s_a.clone(), s_b: s_b.clone() },
        };
        CharacteristicSystem { d: self.d, ell: self.ell, form }
    }
}

/// Characteristic system in the regime the rate data naturally supports.
pub fn characteristic_system<T: Scalar>(net: &ReactionNetwork) -> Result<CharacteristicSystem<T>, NetError> {
    characteristic_system_as(net, net.natural_regime())
}

/// Characteristic system in a requested regime. Point rates embed into
/// degenerate intervals and into `+`; intervals embed into `+` when their
/// lower bound is positive and into `0` when they are `[0, 0]`.
pub fn characteristic_system_as<T: Scalar>(
    net: &ReactionNetwork,
    regime: Regime,
) -> Result<CharacteristicSystem<T>, NetError> {
    require_unimolecular(net)?;
    let d = net.dimension();
    let ell = net.controlled_index();
    let rs = net.open_loop_reactions();
    let sys = match regime {
        Regime::Nominal => {
            let (w, w0) = propensity_decomposition::<T>(net)?;
            let s: Matrix<T> = stoichiometry_matrix(net).map(|&x| T::from_i64(x));
            let a = s.mul(&w).expect("S is d x K and W is K x d");
            let b0 = s.mul_vec(&w0);
            CharacteristicSystem::point(a, b0, ell)
        }
        Regime::Robust => {
            let mut a_minus = Matrix::<T>::zeros(d, d);
            let mut a_plus = Matrix::<T>::zeros(d, d);
            let mut b_minus = vec![T::zero(); d];
            let mut b_plus = vec![T::zero(); d];
            for (k, r) in rs.iter().enumerate() {
                let (lo, hi) = r.rate.bounds(k)?;
                // a bounded propensity ranges over [0, bound]
                let lo = if r.bounded { 0.0 } else { lo };
                let (lo, hi) = (T::from_f64(lo), T::from_f64(hi));
                for j in 0..d {
                    let z = r.net_change(j);
                    if z == 0 {
                        continue;
                    }
                    let zt = T::from_i64(z);
                    let (min, max) = if z > 0 {
                        (zt.clone() * lo.clone(), zt * hi.clone())
                    } else {
                        (zt.clone() * hi.clone(), zt * lo.clone())
                    };
                    match r.first_order_reactant() {
                        Some(i) => {
                            a_minus[(j, i)] = a_minus[(j, i)].clone() + min;
                            a_plus[(j, i)] = a_plus[(j, i)].clone() + max;
                        }
                        None => {
                            b_minus[j] = b_minus[j].clone() + min;
                            b_plus[j] = b_plus[j].clone() + max;
                        }
                    }
                }
            }
            CharacteristicSystem::interval(a_minus, a_plus, b_minus, b_plus, ell)
        }
        Regime::Structural => {
            let mut s_a = Matrix::from_fn(d, d, |_, _| Sign::Zero);
            let mut s_b = vec![Sign::Zero; d];
            for (k, r) in rs.iter().enumerate() {
                let rate = r.rate.sign_of(k)?;
                for j in 0..d {
                    let term = rate.mul(Sign::of(&(r.net_change(j) as f64)));
                    match r.first_order_reactant() {
                        Some(i) => {
                            s_a[(j, i)] =
                                s_a[(j, i)].add(term).ok_or(NetError::IndeterminateSign { row: j, col: i })?;
                        }
                        None => {
                            // zero-order contributions are nonnegative
                            s_b[j] = s_b[j].add(term).expect("zero-order changes are nonnegative");
                        }
                    }
                }
            }
            CharacteristicSystem::sign(s_a, s_b, ell)
        }
    };
    check_metzler(&sys)?;
    Ok(sys)
}

fn check_metzler<T: Scalar>(sys: &CharacteristicSystem<T>) -> Result<(), NetError> {
    let violation = match &sys.form {
        CharacteristicForm::Point { a, .. } => a.metzler_violation(),
        CharacteristicForm::Interval { a_minus, .. } => a_minus.metzler_violation(),
        CharacteristicForm::Sign { s_a, .. } => {
            let d = s_a.rows();
            (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).find(|&(i, j)| i != j && s_a[(i, j)] == Sign::Minus)
        }
    };
    match violation {
        Some((row, col)) => Err(NetError::NotMetzler { row, col }),
        None => Ok(()),
    }
}

/// Appends `Z1`, `Z2` and the four controller reactions:
/// `0 -> Z1` at `mu`, `X_ell -> X_ell + Z2` at `theta`,
/// `Z1 + Z2 -> 0` at `eta`, `Z1 -> Z1 + X1` at `k`.
pub fn close_loop(net: &ReactionNetwork, params: ControllerParams) -> Result<ReactionNetwork, NetError> {
    if net.controller.is_some() || net.species.iter().any(|s| s.name.starts_with(CONTROLLER_PREFIX)) {
        return Err(NetError::AlreadyClosed);
    }
    params.validate()?;
    let d = net.dimension();
    let (z1, z2, ell) = (d, d + 1, net.controlled);
    let mut out = net.clone();
    out.species.push(Species { name: format!("{CONTROLLER_PREFIX}Z1"), index: z1 });
    out.species.push(Species { name: format!("{CONTROLLER_PREFIX}Z2"), index: z2 });
    out.reactions.extend([
        Reaction::new(&[], &[(z1, 1)], RateValue::point(params.mu)),
        Reaction::new(&[(ell, 1)], &[(ell, 1), (z2, 1)], RateValue::point(params.theta)),
        Reaction::new(&[(z1, 1), (z2, 1)], &[], RateValue::point(params.eta)),
        Reaction::new(&[(z1, 1)], &[(z1, 1), (0, 1)], RateValue::point(params.k)),
    ]);
    out.controller = Some(params);
    Ok(out)
}

/// The modified stochastic switch with `f_1 = f_2 = 0` and point rates
/// `(alpha1, gamma1, alpha2, k12, gamma2)`.
pub fn toggle_switch(alpha1: f64, gamma1: f64, alpha2: f64, k12: f64, gamma2: f64) -> ReactionNetwork {
    ReactionNetwork::new(
        vec!["X1".into(), "X2".into()],
        vec![
            Reaction::new(&[], &[(0, 1)], RateValue::point(alpha1)),
            Reaction::new(&[(0, 1)], &[], RateValue::point(gamma1)),
            Reaction::new(&[], &[(1, 1)], RateValue::point(alpha2)),
            Reaction::new(&[(0, 1)], &[(0, 1), (1, 1)], RateValue::point(k12)),
            Reaction::new(&[(1, 1)], &[], RateValue::point(gamma2)),
        ],
        1,
        0,
    )
    .expect("valid switch network")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use num_rational::BigRational;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn stoichiometry_columns() {
        let net = ReactionNetwork::new(
            names(&["X1", "X2"]),
            vec![
                Reaction::new(&[], &[(0, 1)], RateValue::point(1.0)),
                Reaction::new(&[(1, 1)], &[], RateValue::point(1.0)),
                Reaction::new(&[(0, 1)], &[(1, 1)], RateValue::point(1.0)),
            ],
            1,
            0,
        )
        .unwrap();
        let s = stoichiometry_matrix(&net);
        assert_eq!(s.to_rows(), vec![vec![1, 0, -1], vec![0, -1, 1]]);
    }

    #[test]
    fn unimolecularity() {
        let net = ReactionNetwork::new(
            names(&["X1", "X2"]),
            vec![
                Reaction::new(&[], &[(0, 1)], RateValue::point(1.0)),
                Reaction::new(&[(0, 1), (1, 1)], &[], RateValue::point(1.0)),
            ],
            1,
            0,
        )
        .unwrap();
        assert_eq!(check_unimolecular(&net), Err(vec![1]));
        assert!(matches!(characteristic_system::<f64>(&net), Err(NetError::NotUnimolecular(_))));
    }

    #[test]
    fn decomposition_rows() {
        let net = ReactionNetwork::new(
            names(&["X1", "X2"]),
            vec![
                Reaction::new(&[], &[(0, 1)], RateValue::point(2.0)),
                Reaction::new(&[(1, 1)], &[], RateValue::point(3.0)),
            ],
            1,
            0,
        )
        .unwrap();
        let (w, w0) = propensity_decomposition::<f64>(&net).unwrap();
        assert_eq!(w.to_rows(), vec![vec![0.0, 0.0], vec![0.0, 3.0]]);
        assert_eq!(w0, vec![2.0, 0.0]);
    }

    #[test]
    fn switch_point_matrix() {
        let net = toggle_switch(1.0, 1.0, 1.0, 2.0, 3.0);
        let sys = characteristic_system::<BigRational>(&net).unwrap();
        let CharacteristicForm::Point { a, b0 } = sys.form else { panic!() };
        let r = |n| rational(n, 1);
        assert_eq!(a.to_rows(), vec![vec![r(-1), r(0)], vec![r(2), r(-3)]]);
        assert_eq!(b0, vec![r(1), r(1)]);
        assert_eq!(sys.ell, 1);
    }

    #[test]
    fn actuated_species_moves_to_front() {
        let net = ReactionNetwork::new(
            names(&["Y", "U"]),
            vec![
                Reaction::new(&[], &[(1, 1)], RateValue::point(1.0)),
                Reaction::new(&[(1, 1)], &[(1, 1), (0, 1)], RateValue::point(2.0)),
                Reaction::new(&[(0, 1)], &[], RateValue::point(3.0)),
                Reaction::new(&[(1, 1)], &[], RateValue::point(1.0)),
            ],
            0,
            1,
        )
        .unwrap();
        assert_eq!(net.species()[0].name, "U");
        assert_eq!(net.controlled_index(), 1);
        let CharacteristicForm::Point { a, .. } = characteristic_system::<f64>(&net).unwrap().form else { panic!() };
        assert_eq!(a.to_rows(), vec![vec![-1.0, 0.0], vec![2.0, -3.0]]);
    }

    #[test]
    fn one_species_birth_death() {
        let net = ReactionNetwork::new(
            names(&["X1"]),
            vec![
                Reaction::new(&[], &[(0, 1)], RateValue::point(1.0)),
                Reaction::new(&[(0, 1)], &[], RateValue::point(1.0)),
            ],
            0,
            0,
        )
        .unwrap();
        let CharacteristicForm::Point { a, b0 } = characteristic_system::<f64>(&net).unwrap().form else { panic!() };
        assert_eq!(a.to_rows(), vec![vec![-1.0]]);
        assert_eq!(b0, vec![1.0]);
    }

    #[test]
    fn bounded_propensity_enters_offset() {
        let net = ReactionNetwork::new(
            names(&["X1"]),
            vec![
                Reaction::new(&[], &[(0, 1)], RateValue::point(1.0)),
                Reaction::new(&[], &[(0, 1)], RateValue::point(0.5)).bounded(),
                Reaction::new(&[(0, 1)], &[], RateValue::point(1.0)),
            ],
            0,
            0,
        )
        .unwrap();
        let CharacteristicForm::Point { b0, .. } = characteristic_system::<f64>(&net).unwrap().form else { panic!() };
        assert_eq!(b0, vec![1.5]);
        let CharacteristicForm::Interval { b0_minus, b0_plus, .. } =
            characteristic_system_as::<f64>(&net, Regime::Robust).unwrap().form
        else {
            panic!()
        };
        assert_eq!((b0_minus, b0_plus), (vec![1.0], vec![1.5]));
        let bad = ReactionNetwork::new(
            names(&["X1"]),
            vec![Reaction::new(&[(0, 1)], &[], RateValue::point(1.0)).bounded()],
            0,
            0,
        );
        assert_eq!(bad, Err(NetError::BoundedNotZeroOrder(0)));
    }

    #[test]
    fn rate_validation() {
        for rate in [RateValue::point(0.0), RateValue::interval(2.0, 1.0), RateValue::sign(Sign::Minus)] {
            let r = ReactionNetwork::new(names(&["X1"]), vec![Reaction::new(&[], &[(0, 1)], rate)], 0, 0);
            assert!(matches!(r, Err(NetError::InvalidRate { .. })), "{rate:?}");
        }
        let r = ReactionNetwork::new(names(&["X1", "X1"]), vec![], 0, 0);
        assert_eq!(r, Err(NetError::DuplicateSpecies("X1".into())));
    }

    #[test]
    fn closing_the_loop() {
        let net = ReactionNetwork::new(
            names(&["X1"]),
            vec![Reaction::new(&[(0, 1)], &[], RateValue::point(1.0))],
            0,
            0,
        )
        .unwrap();
        let p = ControllerParams { mu: 10.0, theta: 2.0, eta: 1.0, k: 1.0 };
        let closed = close_loop(&net, p).unwrap();
        assert_eq!(closed.species().len(), 3);
        assert_eq!(closed.reactions().len(), 5);
        assert_eq!(closed.controller().unwrap().setpoint(), 5.0);
        assert_eq!(closed.open_loop_reactions(), net.reactions());
        assert_eq!(close_loop(&closed, p), Err(NetError::AlreadyClosed));
        assert_eq!(
            close_loop(&net, ControllerParams { eta: 0.0, ..p }),
            Err(NetError::InvalidParameter("eta"))
        );
        // characteristic system ignores the controller
        assert_eq!(
            characteristic_system::<f64>(&closed).unwrap(),
            characteristic_system::<f64>(&net).unwrap()
        );
    }

    #[test]
    fn sensing_reaction_reads_the_controlled_species() {
        let closed = close_loop(&toggle_switch(1.0, 1.0, 1.0, 2.0, 3.0), ControllerParams {
            mu: 1.0,
            theta: 2.0,
            eta: 3.0,
            k: 4.0,
        })
        .unwrap();
        let sense = &closed.reactions()[6];
        assert_eq!(sense.first_order_reactant(), Some(1));
        assert_eq!(sense.net_change(3), 1);
        assert_eq!(sense.rate, RateValue::point(2.0));
    }
}
