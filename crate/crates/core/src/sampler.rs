//! Conditional slice sampler for the stick-breaking mixture.
//!
//! One sweep, in order:
//!
//! 1. instantiate components (stick from `Beta(1, α)`, parameters from the
//!    base measure) until the unassigned stick mass drops below `min u_i`;
//! 2. draw each `Z_i` with probability `∝ 1{ψ_c > u_i} f(x_i | Θ_c)`;
//! 3. drop trailing empty components, then redraw the sticks given `Z`
//!    (slice variables integrated out);
//! 4. update `μ_c` then `Σ_c` for every nonempty component;
//! 5. update the shared hyperparameters and `μ₀` from the nonempty
//!    components, then give empty components fresh base-measure draws;
//! 6. update `α`;
//! 7. optional label-switching Metropolis moves, after which trailing empty
//!    components are dropped again;
//! 8. redraw `u_i ~ U(0, ψ_{Z_i})`.
//!
//! Covariance blocks of dropped components go to a reservoir and are reused
//! by step 1 after a `refresh_empty` update. Past the last occupied label
//! they are conditionally base-measure draws, so only their sticks need
//! redrawing; for the sparse prior this saves a warm-up chain per new
//! component.
//!
//! Steps 3–7 all condition on `Z` with `u` integrated out, so drawing `u`
//! last is the same as drawing it first in the next sweep, and it keeps
//! `u_i < ψ_{Z_i}` true between sweeps.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::model::{
    scatter, stick_weights, update_alpha, update_mean, update_mu0, update_sticks, Component, MixtureState, ModelSpec,
    RowStats, SharedState,
};
use crate::priors::{CovBlock, PriorFamily};
use crate::random::{beta, gamma, open01, sample_mvn};
use crate::tuning::Tuning;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Initial allocation: subjects spread uniformly at random over `k_init`
/// components.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InitStrategy {
    pub k_init: usize,
}

impl Default for InitStrategy {
    fn default() -> Self {
        Self { k_init: 30 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McmcConfig {
    pub burn_in: usize,
    pub main: usize,
    pub seed: u64,
    pub thin: usize,
    pub label_switch: bool,
    pub init: InitStrategy,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            burn_in: 10_000,
            main: 6_000,
            seed: 1,
            thin: 1,
            label_switch: true,
            init: InitStrategy::default(),
        }
    }
}

impl McmcConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.main == 0 {
            return Err(Error::InvalidParameter {
                name: "main",
                value: 0.0,
            });
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter {
                name: "thin",
                value: 0.0,
            });
        }
        if self.init.k_init == 0 || self.init.k_init > n {
            return Err(Error::InvalidParameter {
                name: "k_init",
                value: self.init.k_init as f64,
            });
        }
        Ok(())
    }

    /// Most components one sweep may instantiate before the run is aborted.
    pub fn instantiation_cap(&self) -> usize {
        10 * self.init.k_init + 100
    }
}

/// Monotonic time source in seconds; the core crate has none of its own.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// Clock that always reads zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

/// Hooks called at fixed points of every sweep.
pub trait Observer {
    /// After the allocations are drawn, before the sticks change.
    fn after_allocation(&mut self, _sweep: usize, _state: &MixtureState) {}
    /// At the end of the sweep.
    fn after_sweep(&mut self, _sweep: usize, _state: &MixtureState) {}
}

impl Observer for () {}

/// Per-sweep counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepStats {
    /// Components instantiated when the allocations were drawn.
    pub instantiated: usize,
    /// Components holding at least one subject.
    pub nonempty: usize,
}

/// Stored output of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainOutput {
    pub family: PriorFamily,
    /// Zero-based allocations, one vector per stored sweep.
    pub allocations: Vec<Vec<u32>>,
    /// `α` at each stored sweep.
    pub alpha: Vec<f64>,
    /// Instantiated components at every sweep, burn-in included.
    pub instantiated: Vec<u32>,
    /// Nonempty components at every sweep, burn-in included.
    pub nonempty: Vec<u32>,
    pub seconds: f64,
}

fn with_component<T>(index: usize, family: PriorFamily, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Component {
        index,
        family,
        source: Box::new(e),
    })
}

fn draw_u<R: Rng + ?Sized>(state: &mut MixtureState, rng: &mut R) {
    for (u, &z) in state.u.iter_mut().zip(&state.z) {
        // open01 excludes 0 and 1, so 0 < u < ψ
        *u = open01(rng) * state.psi[z];
    }
}

/// Conditional update of one component's mean and covariance given its rows.
fn update_component<R: Rng + ?Sized>(
    comp: &mut Component,
    rows: &[usize],
    data: &FeatureMatrix,
    model: &ModelSpec,
    shared: &SharedState,
    tuning: &mut Tuning,
    rng: &mut R,
) -> Result<()> {
    let dim = data.dim();
    let stats = RowStats::from_rows(dim, rows.iter().map(|&i| data.row(i)));
    comp.mean = update_mean(&stats, &comp.cov.chol, &shared.mu0, &model.mean.sigma0_inv, rng)?;
    let w = scatter(dim, rows.iter().map(|&i| data.row(i)), &comp.mean);
    comp.cov = model
        .prior
        .update_cov(&comp.cov, rows.len(), &w, &shared.hyper, tuning, rng)?;
    Ok(())
}

fn fresh_component<R: Rng + ?Sized>(model: &ModelSpec, shared: &SharedState, rng: &mut R) -> Result<Component> {
    let cov = model.prior.g0_draw(&shared.hyper, rng)?;
    let mean = sample_mvn(&shared.mu0, &model.mean.sigma0_chol, rng);
    Ok(Component { mean, cov })
}

/// Random allocation over `k_init` components, sticks and `α` from their
/// priors, `μ₀` at the data mean, and each component drawn from the base
/// measure followed by one conditional update given its rows.
pub fn init_state<R: Rng + ?Sized>(
    data: &FeatureMatrix,
    model: &ModelSpec,
    config: &McmcConfig,
    rng: &mut R,
) -> Result<MixtureState> {
    config.validate(data.n_rows())?;
    let n = data.n_rows();
    let k = config.init.k_init;
    let z: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let alpha = gamma(model.alpha.shape, model.alpha.rate, rng);
    let v: Vec<f64> = (0..k).map(|_| beta(1.0, alpha, rng)).collect();
    let shared = SharedState {
        mu0: model.mean.mu00.clone(),
        hyper: model.prior.initial_shared(),
    };
    let mut tuning = Tuning::new(data.dim());
    let mut members = vec![Vec::new(); k];
    for (i, &c) in z.iter().enumerate() {
        members[c].push(i);
    }
    let family = model.prior.family();
    let mut components = Vec::with_capacity(k);
    for (c, rows) in members.iter().enumerate() {
        let mut comp = with_component(c, family, fresh_component(model, &shared, rng))?;
        if !rows.is_empty() {
            with_component(
                c,
                family,
                update_component(&mut comp, rows, data, model, &shared, &mut tuning, rng),
            )?;
        }
        components.push(comp);
    }
    let psi = stick_weights(&v).0;
    let mut state = MixtureState {
        z,
        u: vec![0.0; n],
        v,
        psi,
        components,
        reservoir: Vec::new(),
        alpha,
        shared,
        tuning,
    };
    draw_u(&mut state, rng);
    Ok(state)
}

/// Drops empty components at the end of the list, keeping their covariance
/// blocks in the reservoir.
fn trim_trailing(state: &mut MixtureState) {
    let keep = state.z.iter().max().map_or(0, |&m| m + 1);
    while state.components.len() > keep {
        let comp = state.components.pop().expect("len > keep");
        state.reservoir.push(comp.cov);
    }
    state.v.truncate(keep);
    state.psi.truncate(keep);
}

fn members_of(state: &MixtureState) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); state.components.len()];
    for (i, &c) in state.z.iter().enumerate() {
        members[c].push(i);
    }
    members
}

/// Swaps the labels (and parameters) of components `a` and `b`.
fn swap_labels(state: &mut MixtureState, a: usize, b: usize) {
    state.components.swap(a, b);
    for z in state.z.iter_mut() {
        if *z == a {
            *z = b;
        } else if *z == b {
            *z = a;
        }
    }
}

/// Two label-switching Metropolis moves. The first swaps the labels of two
/// nonempty components keeping the sticks, accepted with probability
/// `min(1, (ψ_b/ψ_a)^{n_a − n_b})`. The second swaps an adjacent pair of
/// components together with their sticks, accepted with probability
/// `min(1, (1 − V_{j+1})^{n_j} / (1 − V_j)^{n_{j+1}})`.
fn label_switch<R: Rng + ?Sized>(state: &mut MixtureState, rng: &mut R) {
    let counts = state.counts();
    let nonempty: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    if nonempty.len() >= 2 {
        let i = rng.random_range(0..nonempty.len());
        let mut j = rng.random_range(0..nonempty.len() - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (nonempty[i], nonempty[j]);
        let log_ratio = (counts[a] as f64 - counts[b] as f64) * (state.psi[b].ln() - state.psi[a].ln());
        if open01(rng).ln() < log_ratio {
            swap_labels(state, a, b);
        }
    }

    let k = state.components.len();
    if k >= 2 {
        let counts = state.counts();
        let j = rng.random_range(0..k - 1);
        let log_ratio = counts[j] as f64 * (-state.v[j + 1]).ln_1p() - counts[j + 1] as f64 * (-state.v[j]).ln_1p();
        if open01(rng).ln() < log_ratio {
            swap_labels(state, j, j + 1);
            state.v.swap(j, j + 1);
            state.recompute_weights();
        }
    }
}

/// Draws every allocation from its slice-restricted full conditional.
fn sample_allocations<R: Rng + ?Sized>(state: &mut MixtureState, data: &FeatureMatrix, rng: &mut R) {
    let dim = data.dim();
    let consts: Vec<f64> = state
        .components
        .iter()
        .map(|c| -0.5 * (dim as f64 * LN_2PI + c.cov.chol.log_det()))
        .collect();
    let k = state.components.len();
    let mut scratch = vec![0.0; dim];
    let mut logp = vec![f64::NEG_INFINITY; k];
    for i in 0..data.n_rows() {
        let x = data.row(i);
        let u = state.u[i];
        let mut max = f64::NEG_INFINITY;
        for c in 0..k {
            logp[c] = if state.psi[c] > u {
                let comp = &state.components[c];
                consts[c] - 0.5 * comp.cov.chol.mahalanobis_sq(x, &comp.mean, &mut scratch)
            } else {
                f64::NEG_INFINITY
            };
            max = max.max(logp[c]);
        }
        let total: f64 = logp.iter().map(|l| (l - max).exp()).sum();
        let mut target = open01(rng) * total;
        let mut pick = state.z[i];
        for c in 0..k {
            let w = (logp[c] - max).exp();
            if w > 0.0 {
                pick = c;
                if target < w {
                    break;
                }
                target -= w;
            }
        }
        state.z[i] = pick;
    }
}

/// One sweep of the sampler.
pub fn slice_sweep<R: Rng + ?Sized, O: Observer + ?Sized>(
    state: &mut MixtureState,
    data: &FeatureMatrix,
    model: &ModelSpec,
    config: &McmcConfig,
    sweep: usize,
    observer: &mut O,
    rng: &mut R,
) -> Result<SweepStats> {
    let family = model.prior.family();

    let min_u = state.u.iter().copied().fold(f64::INFINITY, f64::min);
    let mut remainder = state.remainder();
    let cap = config.instantiation_cap();
    let mut added = 0;
    while remainder >= min_u {
        if added == cap {
            return Err(Error::InstantiationCap { cap });
        }
        let v = beta(1.0, state.alpha, rng);
        state.psi.push(v * remainder);
        state.v.push(v);
        remainder *= 1.0 - v;
        let index = state.components.len();
        let comp = match state.reservoir.pop() {
            Some(cov) => {
                let cov = with_component(index, family, model.prior.refresh_empty(&cov, &state.shared.hyper, rng))?;
                let mean = sample_mvn(&state.shared.mu0, &model.mean.sigma0_chol, rng);
                Component { mean, cov }
            }
            None => with_component(index, family, fresh_component(model, &state.shared, rng))?,
        };
        state.components.push(comp);
        added += 1;
    }
    let instantiated = state.components.len();

    sample_allocations(state, data, rng);
    observer.after_allocation(sweep, state);

    trim_trailing(state);
    let counts = state.counts();
    state.v = update_sticks(&counts, state.alpha, rng);
    state.recompute_weights();

    let members = members_of(state);
    for (c, rows) in members.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let comp = &mut state.components[c];
        with_component(
            c,
            family,
            update_component(comp, rows, data, model, &state.shared, &mut state.tuning, rng),
        )?;
    }

    {
        let blocks: Vec<&CovBlock> = members
            .iter()
            .zip(&state.components)
            .filter(|(rows, _)| !rows.is_empty())
            .map(|(_, comp)| &comp.cov)
            .collect();
        model
            .prior
            .update_shared(&mut state.shared.hyper, &blocks, &mut state.tuning, rng)?;
        let means = members
            .iter()
            .zip(&state.components)
            .filter(|(rows, _)| !rows.is_empty())
            .map(|(_, comp)| comp.mean.as_slice());
        state.shared.mu0 = update_mu0(means, &model.mean, rng)?;
    }
    for (c, rows) in members.iter().enumerate() {
        if !rows.is_empty() {
            continue;
        }
        let comp = &mut state.components[c];
        comp.cov = with_component(
            c,
            family,
            model.prior.refresh_empty(&comp.cov, &state.shared.hyper, rng),
        )?;
        comp.mean = sample_mvn(&state.shared.mu0, &model.mean.sigma0_chol, rng);
    }

    state.alpha = update_alpha(&state.v, model.alpha, rng);

    if config.label_switch {
        label_switch(state, rng);
        trim_trailing(state);
    }

    draw_u(state, rng);
    let nonempty = state.n_nonempty();
    observer.after_sweep(sweep, state);
    Ok(SweepStats { instantiated, nonempty })
}

/// Runs `burn_in + main` sweeps from a fresh state seeded by `config.seed`.
pub fn run_chain<C: Clock + ?Sized>(
    data: &FeatureMatrix,
    model: &ModelSpec,
    config: &McmcConfig,
    clock: &C,
) -> Result<ChainOutput> {
    run_chain_observed(data, model, config, clock, &mut ())
}

pub fn run_chain_observed<C: Clock + ?Sized, O: Observer + ?Sized>(
    data: &FeatureMatrix,
    model: &ModelSpec,
    config: &McmcConfig,
    clock: &C,
    observer: &mut O,
) -> Result<ChainOutput> {
    let start = clock.seconds();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = init_state(data, model, config, &mut rng)?;
    state.tuning.adapting = config.burn_in > 0;
    let total = config.burn_in + config.main;
    let stored = config.main.div_ceil(config.thin);
    let mut out = ChainOutput {
        family: model.prior.family(),
        allocations: Vec::with_capacity(stored),
        alpha: Vec::with_capacity(stored),
        instantiated: Vec::with_capacity(total),
        nonempty: Vec::with_capacity(total),
        seconds: 0.0,
    };
    for sweep in 0..total {
        if sweep == config.burn_in {
            state.tuning.freeze();
        }
        let stats =
            slice_sweep(&mut state, data, model, config, sweep, observer, &mut rng).map_err(|e| Error::Sweep {
                sweep,
                source: Box::new(e),
            })?;
        out.instantiated.push(stats.instantiated as u32);
        out.nonempty.push(stats.nonempty as u32);
        if sweep >= config.burn_in && (sweep - config.burn_in).is_multiple_of(config.thin) {
            out.allocations.push(state.z.iter().map(|&c| c as u32).collect());
            out.alpha.push(state.alpha);
        }
    }
    out.seconds = clock.seconds() - start;
    Ok(out)
}
