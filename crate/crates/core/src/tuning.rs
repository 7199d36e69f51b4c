//! Random-walk Metropolis steps with proposal scales adapted during burn-in.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::random::{open01, standard_normal};

/// Acceptance rate the adaptation steers toward.
pub const TARGET_ACCEPTANCE: f64 = 0.35;

const BATCH: u32 = 50;

/// Proposal standard deviation for one random-walk coordinate, with batch
/// acceptance bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct RwScale {
    log_step: f64,
    accepted: u32,
    proposed: u32,
    batches: u32,
    total_accepted: u64,
    total_proposed: u64,
}

impl RwScale {
    pub fn new(step: f64) -> Self {
        Self {
            log_step: step.ln(),
            accepted: 0,
            proposed: 0,
            batches: 0,
            total_accepted: 0,
            total_proposed: 0,
        }
    }

    pub fn step(&self) -> f64 {
        self.log_step.exp()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.total_proposed == 0 {
            0.0
        } else {
            self.total_accepted as f64 / self.total_proposed as f64
        }
    }

    fn record(&mut self, accepted: bool, adapt: bool) {
        self.total_proposed += 1;
        self.total_accepted += accepted as u64;
        if !adapt {
            return;
        }
        self.proposed += 1;
        self.accepted += accepted as u32;
        if self.proposed == BATCH {
            self.batches += 1;
            let rate = self.accepted as f64 / BATCH as f64;
            let delta = (1.0 / (self.batches as f64).sqrt()).min(0.5);
            self.log_step += if rate > TARGET_ACCEPTANCE { delta } else { -delta };
            self.log_step = self.log_step.clamp(-12.0, 6.0);
            self.accepted = 0;
            self.proposed = 0;
        }
    }

    /// One random-walk Metropolis step on a real coordinate `x` with log
    /// target `log_target`. Returns the new value.
    pub fn step_mh<R: Rng + ?Sized>(
        &mut self,
        x: f64,
        log_target: impl Fn(f64) -> f64,
        current_log: f64,
        adapt: bool,
        rng: &mut R,
    ) -> (f64, f64) {
        let prop = x + self.step() * standard_normal(rng);
        let prop_log = log_target(prop);
        let accept = prop_log.is_finite() && open01(rng).ln() < prop_log - current_log;
        self.record(accept, adapt);
        if accept {
            (prop, prop_log)
        } else {
            (x, current_log)
        }
    }
}

/// Proposal scales owned by one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Tuning {
    /// Adapt scales on every step; cleared at the end of burn-in.
    pub adapting: bool,
    /// Shared scalar hyperparameter (κ₀, ε₀ or κ_R depending on the prior).
    pub hyper: RwScale,
    /// Per-dimension scales for the separation prior's standard deviations.
    pub coords: Vec<RwScale>,
}

impl Tuning {
    pub fn new(dim: usize) -> Self {
        Self {
            adapting: true,
            hyper: RwScale::new(0.5),
            coords: (0..dim).map(|_| RwScale::new(0.3)).collect(),
        }
    }

    pub fn freeze(&mut self) {
        self.adapting = false;
    }
}
