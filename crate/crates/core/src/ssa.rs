//! Gillespie direct-method simulation with seeded per-replicate streams.
//!
//! Replicate `r` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `r`,
//! so each replicate is reproducible on its own and the batch does not
//! depend on scheduling. Time integrals of `x` and `x^2` are accumulated
//! while simulating and stay exact when the stored path is decimated.
//!
//! Bounded propensities are simulated at their bound, i.e. the comparison
//! network is what gets sampled.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{RateValue, ReactionNetwork};

/// Number of equal windows used for the second-moment growth check.
pub const GROWTH_WINDOWS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsaError {
    #[error("reaction {0} does not have a point rate")]
    NonPointRate(usize),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("total propensity overflowed in replicate {replicate} at t = {time}")]
    PropensityOverflow { replicate: usize, time: f64 },
    #[error("replicate {replicate} exhausted its event budget at t = {time}")]
    EventBudget { replicate: usize, time: f64 },
    #[error("averaging window is empty")]
    EmptyWindow,
    #[error("the stored path is decimated; use the burn-in fixed at simulation time")]
    DecimatedPath,
    #[error("no trajectories")]
    NoTrajectories,
    #[error("species index {0} out of range")]
    BadSpecies(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub initial: Vec<u64>,
    pub horizon: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Fraction of the horizon discarded before averaging.
    pub burn_in: f64,
    /// Per-replicate cap on reaction events.
    pub max_events: u64,
    /// Cap on stored states per replicate; older points are thinned.
    pub max_stored: usize,
}

impl SimConfig {
    pub fn new(initial: Vec<u64>, horizon: f64, replicates: usize, seed: u64) -> Self {
        Self { initial, horizon, replicates, seed, burn_in: 0.25, max_events: 50_000_000, max_stored: 10_000 }
    }

    fn validate(&self, d: usize) -> Result<(), SsaError> {
        let bad = |m: &str| Err(SsaError::BadConfig(m.into()));
        if self.initial.len() != d {
            return bad(&format!("initial state has {} entries, network has {d} species", self.initial.len()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad("horizon must be positive");
        }
        if self.replicates == 0 {
            return bad("at least one replicate is required");
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return bad("burn-in must lie in [0, 1)");
        }
        if self.max_stored < 2 {
            return bad("max_stored must be at least 2");
        }
        Ok(())
    }
}

/// Time integrals over `[start, end]` plus per-window second moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub start: f64,
    pub end: f64,
    /// `int x_i dt` per species.
    pub integral: Vec<f64>,
    /// `int x_i^2 dt` per species.
    pub integral_sq: Vec<f64>,
    /// `int x_i^2 dt` over each of [`GROWTH_WINDOWS`] equal windows.
    pub window_sq: Vec<Vec<f64>>,
}

impl PathStats {
    fn new(d: usize, start: f64, end: f64) -> Self {
        Self {
            start,
            end,
            integral: vec![0.0; d],
            integral_sq: vec![0.0; d],
            window_sq: vec![vec![0.0; d]; GROWTH_WINDOWS],
        }
    }

    /// Adds the constant state `x` held on `[t0, t1]`.
    fn accumulate(&mut self, x: &[u64], t0: f64, t1: f64) {
        let overlap = |a: f64, b: f64| (t1.min(b) - t0.max(a)).max(0.0);
        let dt = overlap(self.start, self.end);
        if dt == 0.0 {
            return;
        }
        let width = (self.end - self.start) / GROWTH_WINDOWS as f64;
        for (i, &xi) in x.iter().enumerate() {
            let xf = xi as f64;
            self.integral[i] += xf * dt;
            self.integral_sq[i] += xf * xf * dt;
        }
        for (w, acc) in self.window_sq.iter_mut().enumerate() {
            let a = self.start + w as f64 * width;
            let b = if w + 1 == GROWTH_WINDOWS { self.end } else { a + width };
            let dw = overlap(a, b);
            if dw > 0.0 {
                for (i, &xi) in x.iter().enumerate() {
                    acc[i] += (xi as f64) * (xi as f64) * dw;
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub replicate: usize,
    pub seed: u64,
    pub horizon: f64,
    pub burn_in: f64,
    /// Event times, starting with `0`.
    pub times: Vec<f64>,
    /// State after each stored event.
    pub states: Vec<Vec<u64>>,
    pub events: u64,
    /// True when intermediate events were dropped from storage.
    pub decimated: bool,
    pub stats: PathStats,
}

impl Trajectory {
    /// Builds a trajectory from an explicit piecewise-constant path.
    pub fn from_path(times: Vec<f64>, states: Vec<Vec<u64>>, horizon: f64, burn_in: f64) -> Self {
        let d = states.first().map_or(0, Vec::len);
        let mut stats = PathStats::new(d, burn_in * horizon, horizon);
        for k in 0..times.len() {
            let t1 = times.get(k + 1).copied().unwrap_or(horizon);
            stats.accumulate(&states[k], times[k], t1);
        }
        let events = times.len().saturating_sub(1) as u64;
        Self { replicate: 0, seed: 0, horizon, burn_in, times, states, events, decimated: false, stats }
    }
}

/// Mass-action propensity `rho prod x_i! / (x_i - zeta_i^l)!`, zero when a
/// reactant count is too small. Bounded reactions fire at their bound.
fn propensity(rate: f64, reactants: &[(usize, u32)], x: &[u64]) -> f64 {
    let mut a = rate;
    for &(i, c) in reactants {
        let xi = x[i];
        if xi < u64::from(c) {
            return 0.0;
        }
        for j in 0..u64::from(c) {
            a *= (xi - j) as f64;
        }
    }
    a
}

struct Compiled {
    rates: Vec<f64>,
    reactants: Vec<Vec<(usize, u32)>>,
    change: Vec<Vec<(usize, i64)>>,
}

fn compile(net: &ReactionNetwork) -> Result<Compiled, SsaError> {
    let d = net.species().len();
    let mut c = Compiled { rates: vec![], reactants: vec![], change: vec![] };
    for (k, r) in net.reactions().iter().enumerate() {
        let RateValue::Point { value } = r.rate else { return Err(SsaError::NonPointRate(k)) };
        c.rates.push(value);
        c.reactants.push(r.reactants.iter().map(|(&s, &n)| (s, n)).collect());
        c.change.push((0..d).map(|j| (j, r.net_change(j))).filter(|&(_, z)| z != 0).collect());
    }
    Ok(c)
}

fn run_replicate(net: &Compiled, cfg: &SimConfig, replicate: usize) -> Result<Trajectory, SsaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(replicate as u64);
    let d = cfg.initial.len();
    let k = net.rates.len();
    let mut x = cfg.initial.clone();
    let mut t = 0.0f64;
    let mut stats = PathStats::new(d, cfg.burn_in * cfg.horizon, cfg.horizon);
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let mut stride = 1u64;
    let mut decimated = false;
    let mut events = 0u64;
    let mut a = vec![0.0; k];
    loop {
        let mut a0 = 0.0;
        for j in 0..k {
            a[j] = propensity(net.rates[j], &net.reactants[j], &x);
            a0 += a[j];
        }
        if !a0.is_finite() || a0 > 1e300 {
            return Err(SsaError::PropensityOverflow { replicate, time: t });
        }
        if a0 == 0.0 {
            stats.accumulate(&x, t, cfg.horizon);
            break;
        }
        let u: f64 = 1.0 - rng.random::<f64>();
        let tau = -u.ln() / a0;
        if t + tau >= cfg.horizon {
            stats.accumulate(&x, t, cfg.horizon);
            break;
        }
        stats.accumulate(&x, t, t + tau);
        t += tau;
        let target = rng.random::<f64>() * a0;
        let mut acc = 0.0;
        let mut chosen = k - 1;
        for (j, aj) in a.iter().enumerate() {
            acc += aj;
            if target < acc && *aj > 0.0 {
                chosen = j;
                break;
            }
        }
        // guard against round-off picking a disabled last channel
        while a[chosen] == 0.0 {
            chosen -= 1;
        }
        for &(i, z) in &net.change[chosen] {
            x[i] = x[i]
                .checked_add_signed(z)
                .ok_or(SsaError::PropensityOverflow { replicate, time: t })?;
        }
        events += 1;
        if events >= cfg.max_events {
            return Err(SsaError::EventBudget { replicate, time: t });
        }
        if events % stride == 0 {
            times.push(t);
            states.push(x.clone());
            if times.len() >= cfg.max_stored {
                // keep every other stored point and halve the sampling rate
                times = times.into_iter().step_by(2).collect();
                states = states.into_iter().step_by(2).collect();
                stride *= 2;
                decimated = true;
            }
        }
    }
    Ok(Trajectory {
        replicate,
        seed: cfg.seed,
        horizon: cfg.horizon,
        burn_in: cfg.burn_in,
        times,
        states,
        events,
        decimated,
        stats,
    })
}

/// Simulates `cfg.replicates` independent paths in parallel.
pub fn simulate(net: &ReactionNetwork, cfg: &SimConfig) -> Result<Vec<Trajectory>, SsaError> {
    cfg.validate(net.species().len())?;
    let compiled = compile(net)?;
    (0..cfg.replicates).into_par_iter().map(|r| run_replicate(&compiled, cfg, r)).collect()
}

fn check_species(trajs: &[Trajectory], species: usize) -> Result<(), SsaError> {
    let first = trajs.first().ok_or(SsaError::NoTrajectories)?;
    if species >= first.stats.integral.len() {
        return Err(SsaError::BadSpecies(species));
    }
    Ok(())
}

/// `(int x dt, int x^2 dt, window length)` over `[burn_in T, T]`.
fn window_integrals(tr: &Trajectory, species: usize, burn_in: f64) -> Result<(f64, f64, f64), SsaError> {
    if burn_in == tr.burn_in {
        let s = &tr.stats;
        let len = s.end - s.start;
        return Ok((s.integral[species], s.integral_sq[species], len));
    }
    if tr.decimated {
        return Err(SsaError::DecimatedPath);
    }
    let replay = Trajectory::from_path(tr.times.clone(), tr.states.clone(), tr.horizon, burn_in);
    let s = &replay.stats;
    Ok((s.integral[species], s.integral_sq[species], s.end - s.start))
}

/// Mean and standard error across replicates.
fn across(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Time-averaged mean of a species over `[burn_in T, T]`, then averaged
/// across replicates. The standard error uses the sample deviation of the
/// replicate means and is infinite for a single replicate.
pub fn estimate_mean(trajs: &[Trajectory], species: usize, burn_in: f64) -> Result<(f64, f64), SsaError> {
    check_species(trajs, species)?;
    let mut means = Vec::with_capacity(trajs.len());
    for tr in trajs {
        let (ix, _, len) = window_integrals(tr, species, burn_in)?;
        if len <= 0.0 {
            return Err(SsaError::EmptyWindow);
        }
        means.push(ix / len);
    }
    Ok(across(&means))
}

/// Time-averaged `x^2`, with its standard error across replicates.
pub fn estimate_second_moment(trajs: &[Trajectory], species: usize, burn_in: f64) -> Result<(f64, f64), SsaError> {
    check_species(trajs, species)?;
    let mut m2 = Vec::with_capacity(trajs.len());
    for tr in trajs {
        let (_, ix2, len) = window_integrals(tr, species, burn_in)?;
        if len <= 0.0 {
            return Err(SsaError::EmptyWindow);
        }
        m2.push(ix2 / len);
    }
    Ok(across(&m2))
}

/// Time-averaged variance: per replicate `<x^2> - <x>^2`, then averaged.
pub fn estimate_variance(trajs: &[Trajectory], species: usize, burn_in: f64) -> Result<(f64, f64), SsaError> {
    check_species(trajs, species)?;
    let mut vars = Vec::with_capacity(trajs.len());
    for tr in trajs {
        let (ix, ix2, len) = window_integrals(tr, species, burn_in)?;
        if len <= 0.0 {
            return Err(SsaError::EmptyWindow);
        }
        let m = ix / len;
        vars.push(ix2 / len - m * m);
    }
    Ok(across(&vars))
}

/// Windowed second moments and whether they grow monotonically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub window_second_moments: Vec<f64>,
    /// Strictly increasing across all windows, ending at least twice the first.
    pub monotone_growth: bool,
}

/// Spot-check for unbounded second moments: average `x^2` in each of the
/// [`GROWTH_WINDOWS`] windows of the averaging interval. A bounded result
/// is evidence, never proof.
pub fn second_moment_growth(trajs: &[Trajectory], species: usize) -> Result<GrowthCheck, SsaError> {
    check_species(trajs, species)?;
    let mut windows = vec![0.0; GROWTH_WINDOWS];
    for tr in trajs {
        let width = (tr.stats.end - tr.stats.start) / GROWTH_WINDOWS as f64;
        if width <= 0.0 {
            return Err(SsaError::EmptyWindow);
        }
        for (w, acc) in windows.iter_mut().enumerate() {
            *acc += tr.stats.window_sq[w][species] / width / trajs.len() as f64;
        }
    }
    let increasing = windows.windows(2).all(|p| p[1] > p[0]);
    let monotone_growth = increasing && windows[GROWTH_WINDOWS - 1] >= 2.0 * windows[0];
    Ok(GrowthCheck { window_second_moments: windows, monotone_growth })
}

/// Writes stored states as CSV with header `time,<species...>,replicate`.
pub fn write_csv<W: Write>(out: &mut W, species: &[String], trajs: &[Trajectory]) -> io::Result<()> {
    writeln!(out, "time,{},replicate", species.join(","))?;
    for tr in trajs {
        for (t, x) in tr.times.iter().zip(&tr.states) {
            let row: Vec<String> = x.iter().map(u64::to_string).collect();
            writeln!(out, "{t},{},{}", row.join(","), tr.replicate)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{close_loop, ControllerParams, Reaction};

    fn birth_death(rho: f64, gamma: f64) -> ReactionNetwork {
        ReactionNetwork::new(
            vec!["X".into()],
            vec![
                Reaction::new(&[], &[(0, 1)], RateValue::point(rho)),
                Reaction::new(&[(0, 1)], &[], RateValue::point(gamma)),
            ],
            0,
            0,
        )
        .unwrap()
    }

    #[test]
    fn constant_path_statistics() {
        let tr = Trajectory::from_path(vec![0.0], vec![vec![7]], 10.0, 0.0);
        assert_eq!(estimate_mean(&[tr.clone(), tr.clone()], 0, 0.0).unwrap(), (7.0, 0.0));
        assert_eq!(estimate_second_moment(&[tr], 0, 0.0).unwrap().0, 49.0);
    }

    #[test]
    fn two_constant_replicates() {
        let a = Trajectory::from_path(vec![0.0], vec![vec![4]], 10.0, 0.5);
        let b = Trajectory::from_path(vec![0.0], vec![vec![6]], 10.0, 0.5);
        let (m, se) = estimate_mean(&[a, b], 0, 0.5).unwrap();
        assert!((m - 5.0).abs() < 1e-12 && (se - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_replicate_has_infinite_stderr() {
        let a = Trajectory::from_path(vec![0.0], vec![vec![4]], 10.0, 0.5);
        assert_eq!(estimate_mean(&[a], 0, 0.5).unwrap().1, f64::INFINITY);
    }

    #[test]
    fn piecewise_integration() {
        // 2 on [0, 1), 4 on [1, 4): window [2, 4] sees only 4
        let tr = Trajectory::from_path(vec![0.0, 1.0], vec![vec![2], vec![4]], 4.0, 0.5);
        assert_eq!(estimate_mean(&[tr.clone()], 0, 0.5).unwrap().0, 4.0);
        assert_eq!(estimate_mean(&[tr], 0, 0.0).unwrap().0, (2.0 + 12.0) / 4.0);
    }

    #[test]
    fn simulation_is_deterministic_and_valid() {
        let net = birth_death(5.0, 1.0);
        let cfg = SimConfig::new(vec![0], 20.0, 4, 42);
        let a = simulate(&net, &cfg).unwrap();
        let b = simulate(&net, &cfg).unwrap();
        assert_eq!(a, b);
        for tr in &a {
            assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
            for s in tr.states.windows(2) {
                assert_eq!((s[0][0] as i64 - s[1][0] as i64).abs(), 1);
            }
        }
        assert_ne!(a[0].times, a[1].times);
    }

    #[test]
    fn absorbing_boundary() {
        let net = ReactionNetwork::new(
            vec!["X".into()],
            vec![Reaction::new(&[(0, 1)], &[], RateValue::point(1.0))],
            0,
            0,
        )
        .unwrap();
        let tr = &simulate(&net, &SimConfig::new(vec![3], 100.0, 1, 1)).unwrap()[0];
        assert_eq!(tr.states.last().unwrap(), &vec![0]);
        assert_eq!(tr.events, 3);
    }

    #[test]
    fn decimation_keeps_statistics_exact() {
        let net = birth_death(50.0, 1.0);
        let mut cfg = SimConfig::new(vec![50], 50.0, 1, 7);
        let full = simulate(&net, &cfg).unwrap();
        cfg.max_stored = 16;
        let thin = simulate(&net, &cfg).unwrap();
        assert!(thin[0].decimated && thin[0].states.len() < 16);
        assert_eq!(full[0].stats, thin[0].stats);
        assert_eq!(estimate_mean(&thin, 0, 0.1), Err(SsaError::DecimatedPath));
    }

    #[test]
    fn closed_loop_counts_stay_nonnegative() {
        let closed = close_loop(&birth_death(1.0, 1.0), ControllerParams { mu: 10.0, theta: 2.0, eta: 5.0, k: 1.0 })
            .unwrap();
        let trs = simulate(&closed, &SimConfig::new(vec![0, 0, 0], 30.0, 2, 3)).unwrap();
        assert!(trs.iter().all(|t| t.events > 0));
    }

    #[test]
    fn csv_layout() {
        let tr = Trajectory::from_path(vec![0.0, 0.5], vec![vec![1, 2], vec![2, 2]], 1.0, 0.0);
        let mut buf = Vec::new();
        write_csv(&mut buf, &["A".into(), "B".into()], &[tr]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time,A,B,replicate\n0,1,2,0\n0.5,2,2,0\n");
    }

    #[test]
    fn config_validation() {
        let net = birth_death(1.0, 1.0);
        assert!(simulate(&net, &SimConfig::new(vec![0, 0], 1.0, 1, 0)).is_err());
        assert!(simulate(&net, &SimConfig::new(vec![0], 0.0, 1, 0)).is_err());
        assert!(simulate(&net, &SimConfig::new(vec![0], 1.0, 0, 0)).is_err());
    }
}
