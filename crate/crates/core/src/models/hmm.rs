//! Strict left-to-right hidden Markov models with mixture emissions.
//!
//! Every state allows only a self-loop or a step to the next state, entry is
//! pinned to state 0, and any state may end the sequence. All recursions run
//! in the log domain.

use crate::error::{Error, Result};

use super::gmm::{logsumexp, Gmm};

/// Left-to-right HMM; state `i` transitions to `i` or `i + 1` only.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    states: Vec<Gmm>,
    log_self: Vec<f64>,
    log_next: Vec<f64>,
}

impl HmmModel {
    /// `self_probs[i]` and `next_probs[i]` are state `i`'s linear-domain
    /// transition probabilities; each pair must sum to 1 and the last state
    /// cannot step forward.
    pub fn new(states: Vec<Gmm>, self_probs: &[f64], next_probs: &[f64]) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidSpec("model needs at least one state".into()));
        }
        let n = states.len();
        if self_probs.len() != n || next_probs.len() != n {
            return Err(Error::InvalidSpec(format!(
                "transition rows ({}, {}) do not match {n} states",
                self_probs.len(),
                next_probs.len()
            )));
        }
        let dim = states[0].dim();
        for s in &states {
            if s.dim() != dim {
                return Err(Error::DimMismatch {
                    got: s.dim(),
                    expected: dim,
                });
            }
        }
        for i in 0..n {
            let (s, f) = (self_probs[i], next_probs[i]);
            if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&f) || (s + f - 1.0).abs() > 1e-6
            {
                return Err(Error::InvalidSpec(format!(
                    "state {i}: transition probabilities {s} + {f} must sum to 1"
                )));
            }
        }
        if next_probs[n - 1] != 0.0 {
            return Err(Error::InvalidSpec(
                "last state cannot transition forward".into(),
            ));
        }
        let to_log = |p: f64| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
        Ok(HmmModel {
            states,
            log_self: self_probs.iter().cloned().map(to_log).collect(),
            log_next: next_probs.iter().cloned().map(to_log).collect(),
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn states(&self) -> &[Gmm] {
        &self.states
    }

    /// Linear-domain (self, next) transition probabilities per state.
    pub fn transition_probs(&self) -> (Vec<f64>, Vec<f64>) {
        let back = |l: &f64| if *l == f64::NEG_INFINITY { 0.0 } else { l.exp() };
        (
            self.log_self.iter().map(back).collect(),
            self.log_next.iter().map(back).collect(),
        )
    }

    pub(crate) fn log_self(&self) -> &[f64] {
        &self.log_self
    }

    pub(crate) fn log_next(&self) -> &[f64] {
        &self.log_next
    }

    /// Per-frame, per-state emission log densities.
    pub(crate) fn emission_table(&self, frames: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        frames
            .iter()
            .map(|x| {
                self.states
                    .iter()
                    .map(|s| s.log_pdf(x))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect()
    }

    /// Forward log likelihood, summed over all paths and all end states.
    pub fn log_likelihood(&self, frames: &[Vec<f64>]) -> Result<f64> {
        if frames.is_empty() {
            return Err(Error::EmptySignal);
        }
        let logb = self.emission_table(frames)?;
        let n = self.num_states();
        let mut alpha: Vec<f64> = (0..n)
            .map(|j| if j == 0 { logb[0][0] } else { f64::NEG_INFINITY })
            .collect();
        let mut next = vec![f64::NEG_INFINITY; n];
        for row in logb.iter().skip(1) {
            for j in 0..n {
                let stay = alpha[j] + self.log_self[j];
                let enter = if j > 0 {
                    alpha[j - 1] + self.log_next[j - 1]
                } else {
                    f64::NEG_INFINITY
                };
                next[j] = row[j] + logsumexp(&[stay, enter]);
            }
            std::mem::swap(&mut alpha, &mut next);
        }
        Ok(logsumexp(&alpha))
    }

    /// Most likely state path and its log probability.
    pub fn viterbi(&self, frames: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
        if frames.is_empty() {
            return Err(Error::EmptySignal);
        }
        let logb = self.emission_table(frames)?;
        let n = self.num_states();
        let t_len = frames.len();
        let mut delta: Vec<f64> = (0..n)
            .map(|j| if j == 0 { logb[0][0] } else { f64::NEG_INFINITY })
            .collect();
        // back[t][j]: whether state j at time t was entered from j - 1.
        let mut back = vec![vec![false; n]; t_len];
        for (t, row) in logb.iter().enumerate().skip(1) {
            let mut next = vec![f64::NEG_INFINITY; n];
            for j in 0..n {
                let stay = delta[j] + self.log_self[j];
                let enter = if j > 0 {
                    delta[j - 1] + self.log_next[j - 1]
                } else {
                    f64::NEG_INFINITY
                };
                if enter > stay {
                    back[t][j] = true;
                    next[j] = row[j] + enter;
                } else {
                    next[j] = row[j] + stay;
                }
            }
            delta = next;
        }
        let (mut state, best) = delta
            .iter()
            .cloned()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("at least one state");
        if best == f64::NEG_INFINITY {
            return Err(Error::Eval(
                "no state path has nonzero probability".into(),
            ));
        }
        let mut path = vec![0usize; t_len];
        for t in (0..t_len).rev() {
            path[t] = state;
            if t > 0 && back[t][state] {
                state -= 1;
            }
        }
        Ok((path, best))
    }
}
