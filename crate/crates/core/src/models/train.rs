//! Per-class model training: flat start, a few rounds of hard Viterbi
//! re-segmentation, then mixture growth by binary splitting with
//! forward-backward re-estimation at each size.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::gmm::{logsumexp, Gmm};
use super::hmm::HmmModel;

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSpec {
    pub num_states: usize,
    pub num_mixtures: usize,
    /// Hard-alignment passes before any mixture has more than one component.
    pub viterbi_passes: usize,
    pub max_em_iters: usize,
    /// Relative log-likelihood change that counts as converged.
    pub em_tol: f64,
    /// Variance floor as a fraction of the global per-dimension variance.
    pub variance_floor_factor: f64,
    pub seed: u64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        TrainSpec {
            num_states: 3,
            num_mixtures: 4,
            viterbi_passes: 5,
            max_em_iters: 50,
            em_tol: 1e-6,
            variance_floor_factor: 1e-4,
            seed: 0,
        }
    }
}

impl TrainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_states == 0 || self.num_mixtures == 0 {
            return Err(Error::InvalidSpec(
                "need at least one state and one mixture component".into(),
            ));
        }
        if !(self.em_tol >= 0.0) || !(self.variance_floor_factor > 0.0) {
            return Err(Error::InvalidSpec(
                "tolerance must be >= 0 and variance floor factor > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Absolute lower bound on any variance, independent of the data scale.
/// Keeps models finite when a dimension is constant in training.
const MIN_VAR: f64 = 1e-12;

/// Smallest mixture occupancy worth re-estimating from.
const MIN_OCCUPANCY: f64 = 1e-8;

/// Train one class model from its labeled epochs.
///
/// `class` only names the class in errors. Every epoch must be at least
/// `num_states` frames long, and there must be at least
/// `num_states * num_mixtures` epochs.
pub fn train_class(class: &str, epochs: &[Vec<Vec<f64>>], spec: &TrainSpec) -> Result<HmmModel> {
    spec.validate()?;
    let fail = |message: String| Error::Train {
        class: class.to_string(),
        message,
    };
    if epochs.len() < spec.num_states * spec.num_mixtures {
        return Err(fail(format!(
            "{} epochs, need at least {} for {} states x {} mixtures",
            epochs.len(),
            spec.num_states * spec.num_mixtures,
            spec.num_states,
            spec.num_mixtures
        )));
    }
    let dim = epochs[0].first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(fail("epochs contain no frames".into()));
    }
    for epoch in epochs {
        if epoch.len() < spec.num_states {
            return Err(fail(format!(
                "epoch of {} frames cannot cover {} states",
                epoch.len(),
                spec.num_states
            )));
        }
        for frame in epoch {
            if frame.len() != dim {
                return Err(Error::DimMismatch {
                    got: frame.len(),
                    expected: dim,
                });
            }
        }
    }

    let floor = variance_floor(epochs, dim, spec.variance_floor_factor);
    let mut model = flat_start(epochs, dim, spec, &floor);
    for _ in 0..spec.viterbi_passes {
        model = viterbi_reestimate(&model, epochs, &floor)?;
    }

    let (refined, _) = em_refine(&model, epochs, &floor, spec.max_em_iters, spec.em_tol)?;
    model = refined;
    while model.states()[0].num_components() < spec.num_mixtures {
        model = split_heaviest(&model)?;
        let (refined, _) = em_refine(&model, epochs, &floor, spec.max_em_iters, spec.em_tol)?;
        model = refined;
    }
    Ok(model)
}

/// Per-dimension variance floor from the pooled training frames.
fn variance_floor(epochs: &[Vec<Vec<f64>>], dim: usize, factor: f64) -> Vec<f64> {
    let mut count = 0.0;
    let mut sum = vec![0.0; dim];
    let mut sumsq = vec![0.0; dim];
    for frame in epochs.iter().flatten() {
        count += 1.0;
        for (j, &v) in frame.iter().enumerate() {
            sum[j] += v;
            sumsq[j] += v * v;
        }
    }
    (0..dim)
        .map(|j| {
            let mean = sum[j] / count;
            let var = (sumsq[j] / count - mean * mean).max(0.0);
            (factor * var).max(MIN_VAR)
        })
        .collect()
}

/// Uniform segmentation: state `s` of an epoch with `t` frames owns frames
/// `[s * t / S, (s + 1) * t / S)`. One Gaussian per state, means nudged by a
/// seeded hair of the global spread so distinct seeds give distinct runs.
fn flat_start(
    epochs: &[Vec<Vec<f64>>],
    dim: usize,
    spec: &TrainSpec,
    floor: &[f64],
) -> HmmModel {
    let s = spec.num_states;
    let mut count = vec![0.0_f64; s];
    let mut sum = vec![vec![0.0; dim]; s];
    let mut sumsq = vec![vec![0.0; dim]; s];
    let mut self_count = vec![0.0_f64; s];
    let mut next_count = vec![0.0_f64; s];
    for epoch in epochs {
        let t = epoch.len();
        for state in 0..s {
            let lo = state * t / s;
            let hi = (state + 1) * t / s;
            for frame in &epoch[lo..hi] {
                count[state] += 1.0;
                for (j, &v) in frame.iter().enumerate() {
                    sum[state][j] += v;
                    sumsq[state][j] += v * v;
                }
            }
            let span = (hi - lo) as f64;
            if state + 1 < s {
                self_count[state] += span - 1.0;
                next_count[state] += 1.0;
            } else {
                self_count[state] += span - 1.0;
            }
        }
    }

    let global_sigma: Vec<f64> = (0..dim)
        .map(|j| (floor[j] / spec.variance_floor_factor).sqrt())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let states: Vec<Gmm> = (0..s)
        .map(|state| {
            let c = count[state].max(1.0);
            let mean: Vec<f64> = (0..dim)
                .map(|j| {
                    let jitter: f64 = rng.random_range(-1.0..1.0);
                    sum[state][j] / c + jitter * 1e-3 * global_sigma[j]
                })
                .collect();
            let var: Vec<f64> = (0..dim)
                .map(|j| {
                    let m = sum[state][j] / c;
                    (sumsq[state][j] / c - m * m).max(floor[j])
                })
                .collect();
            Gmm::new(vec![1.0], vec![mean], vec![var]).expect("flat start parameters are valid")
        })
        .collect();

    let mut self_p = vec![0.0; s];
    let mut next_p = vec![0.0; s];
    for state in 0..s {
        let total = self_count[state] + next_count[state];
        if state + 1 == s {
            self_p[state] = 1.0;
        } else if total <= 0.0 {
            self_p[state] = 0.5;
            next_p[state] = 0.5;
        } else {
            // Keep both arcs open even when a state owns a single frame.
            self_p[state] = (self_count[state] / total).clamp(0.01, 0.99);
            next_p[state] = 1.0 - self_p[state];
        }
    }
    HmmModel::new(states, &self_p, &next_p).expect("flat start transitions are valid")
}

/// One hard re-estimation pass: align every epoch with Viterbi, then refit
/// each state's single Gaussian and the transition counts.
fn viterbi_reestimate(
    model: &HmmModel,
    epochs: &[Vec<Vec<f64>>],
    floor: &[f64],
) -> Result<HmmModel> {
    let s = model.num_states();
    let dim = model.dim();
    let mut count = vec![0.0_f64; s];
    let mut sum = vec![vec![0.0; dim]; s];
    let mut sumsq = vec![vec![0.0; dim]; s];
    let mut self_count = vec![0.0_f64; s];
    let mut next_count = vec![0.0_f64; s];
    for epoch in epochs {
        let (path, _) = model.viterbi(epoch)?;
        for (frame, &state) in epoch.iter().zip(&path) {
            count[state] += 1.0;
            for (j, &v) in frame.iter().enumerate() {
                sum[state][j] += v;
                sumsq[state][j] += v * v;
            }
        }
        for pair in path.windows(2) {
            if pair[1] == pair[0] {
                self_count[pair[0]] += 1.0;
            } else {
                next_count[pair[0]] += 1.0;
            }
        }
    }

    let states: Vec<Gmm> = (0..s)
        .map(|state| {
            if count[state] < 1.0 {
                // A starved state keeps its previous parameters.
                return Ok(model.states()[state].clone());
            }
            let c = count[state];
            let mean: Vec<f64> = (0..dim).map(|j| sum[state][j] / c).collect();
            let var: Vec<f64> = (0..dim)
                .map(|j| (sumsq[state][j] / c - mean[j] * mean[j]).max(floor[j]))
                .collect();
            Gmm::new(vec![1.0], vec![mean], vec![var])
        })
        .collect::<Result<_>>()?;

    let (old_self, old_next) = model.transition_probs();
    let mut self_p = vec![0.0; s];
    let mut next_p = vec![0.0; s];
    for state in 0..s {
        let total = self_count[state] + next_count[state];
        if state + 1 == s {
            self_p[state] = 1.0;
        } else if total <= 0.0 {
            self_p[state] = old_self[state];
            next_p[state] = old_next[state];
        } else {
            self_p[state] = (self_count[state] / total).clamp(0.01, 0.99);
            next_p[state] = 1.0 - self_p[state];
        }
    }
    HmmModel::new(states, &self_p, &next_p)
}

/// Split the heaviest component of every state: means move apart by
/// 0.2 sigma, weights halve.
fn split_heaviest(model: &HmmModel) -> Result<HmmModel> {
    let states: Vec<Gmm> = model
        .states()
        .iter()
        .map(|gmm| {
            let heaviest = gmm
                .weights()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .expect("mixture has components")
                .0;
            let mut weights = gmm.weights().to_vec();
            let mut means = gmm.means().to_vec();
            let mut vars = gmm.vars().to_vec();
            let sigma: Vec<f64> = vars[heaviest].iter().map(|&v| v.sqrt()).collect();
            let mut up = means[heaviest].clone();
            let mut down = means[heaviest].clone();
            for (j, s) in sigma.iter().enumerate() {
                up[j] += 0.2 * s;
                down[j] -= 0.2 * s;
            }
            weights[heaviest] /= 2.0;
            weights.push(weights[heaviest]);
            means[heaviest] = up;
            means.push(down);
            vars.push(vars[heaviest].clone());
            Gmm::new(weights, means, vars)
        })
        .collect::<Result<_>>()?;
    let (self_p, next_p) = model.transition_probs();
    HmmModel::new(states, &self_p, &next_p)
}

/// Forward-backward re-estimation until the total log likelihood moves less
/// than `tol` relative, or `max_iters` passes.
///
/// Returns the refined model and the per-iteration log likelihood of the
/// model each pass started from; with an exact E step that trace never
/// decreases beyond rounding.
pub fn em_refine(
    model: &HmmModel,
    epochs: &[Vec<Vec<f64>>],
    floor: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<(HmmModel, Vec<f64>)> {
    let mut current = model.clone();
    let mut trace = Vec::new();
    for iter in 0..max_iters {
        let (updated, loglik) = em_step(&current, epochs, floor)?;
        trace.push(loglik);
        current = updated;
        if iter > 0 {
            let prev = trace[iter - 1];
            if (loglik - prev).abs() <= tol * prev.abs() {
                break;
            }
        }
    }
    Ok((current, trace))
}

/// One exact EM pass. Returns the updated model and the log likelihood of
/// the incoming model on the data.
fn em_step(model: &HmmModel, epochs: &[Vec<Vec<f64>>], floor: &[f64]) -> Result<(HmmModel, f64)> {
    let s = model.num_states();
    let dim = model.dim();
    let mixes: Vec<usize> = model.states().iter().map(Gmm::num_components).collect();

    let mut occ: Vec<Vec<f64>> = mixes.iter().map(|&m| vec![0.0; m]).collect();
    let mut sum_x: Vec<Vec<Vec<f64>>> = mixes.iter().map(|&m| vec![vec![0.0; dim]; m]).collect();
    let mut sum_xx: Vec<Vec<Vec<f64>>> = mixes.iter().map(|&m| vec![vec![0.0; dim]; m]).collect();
    let mut self_occ = vec![0.0; s];
    let mut next_occ = vec![0.0; s];
    let mut total_loglik = 0.0;

    for epoch in epochs {
        let t_len = epoch.len();
        // Component-level emission terms: comp[t][j][m] includes the weight.
        let comp: Vec<Vec<Vec<f64>>> = epoch
            .iter()
            .map(|x| {
                if x.len() != dim {
                    return Err(Error::DimMismatch {
                        got: x.len(),
                        expected: dim,
                    });
                }
                Ok(model
                    .states()
                    .iter()
                    .map(|g| {
                        (0..g.num_components())
                            .map(|m| g.component_log_pdf(m, x))
                            .collect()
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        let logb: Vec<Vec<f64>> = comp
            .iter()
            .map(|row| row.iter().map(|c| logsumexp(c)).collect())
            .collect();

        let mut alpha = vec![vec![f64::NEG_INFINITY; s]; t_len];
        alpha[0][0] = logb[0][0];
        for t in 1..t_len {
            for j in 0..s {
                let stay = alpha[t - 1][j] + model.log_self()[j];
                let enter = if j > 0 {
                    alpha[t - 1][j - 1] + model.log_next()[j - 1]
                } else {
                    f64::NEG_INFINITY
                };
                alpha[t][j] = logb[t][j] + logsumexp(&[stay, enter]);
            }
        }
        let mut beta = vec![vec![f64::NEG_INFINITY; s]; t_len];
        beta[t_len - 1] = vec![0.0; s];
        for t in (0..t_len - 1).rev() {
            for i in 0..s {
                let stay = model.log_self()[i] + logb[t + 1][i] + beta[t + 1][i];
                let step = if i + 1 < s {
                    model.log_next()[i] + logb[t + 1][i + 1] + beta[t + 1][i + 1]
                } else {
                    f64::NEG_INFINITY
                };
                beta[t][i] = logsumexp(&[stay, step]);
            }
        }
        let loglik = logsumexp(&alpha[t_len - 1]);
        if !loglik.is_finite() {
            return Err(Error::Train {
                class: String::new(),
                message: "an epoch has zero likelihood under the current model".into(),
            });
        }
        total_loglik += loglik;

        for t in 0..t_len {
            for j in 0..s {
                let gamma = alpha[t][j] + beta[t][j] - loglik;
                if gamma == f64::NEG_INFINITY {
                    continue;
                }
                // Split state occupancy across mixture components.
                for m in 0..mixes[j] {
                    let r = (gamma + comp[t][j][m] - logb[t][j]).exp();
                    if r == 0.0 {
                        continue;
                    }
                    occ[j][m] += r;
                    for (d, &v) in epoch[t].iter().enumerate() {
                        sum_x[j][m][d] += r * v;
                        sum_xx[j][m][d] += r * v * v;
                    }
                }
                if t + 1 < t_len {
                    let stay =
                        (alpha[t][j] + model.log_self()[j] + logb[t + 1][j] + beta[t + 1][j]
                            - loglik)
                            .exp();
                    self_occ[j] += stay;
                    if j + 1 < s {
                        let step = (alpha[t][j]
                            + model.log_next()[j]
                            + logb[t + 1][j + 1]
                            + beta[t + 1][j + 1]
                            - loglik)
                            .exp();
                        next_occ[j] += step;
                    }
                }
            }
        }
    }

    let states: Vec<Gmm> = (0..s)
        .map(|j| {
            let total: f64 = occ[j].iter().sum();
            if total < MIN_OCCUPANCY {
                return Ok(model.states()[j].clone());
            }
            let old = &model.states()[j];
            let mut weights = Vec::with_capacity(mixes[j]);
            let mut means = Vec::with_capacity(mixes[j]);
            let mut vars = Vec::with_capacity(mixes[j]);
            for m in 0..mixes[j] {
                if occ[j][m] < MIN_OCCUPANCY {
                    // Starved component: keep its old parameters and let the
                    // weight renormalization shrink it.
                    weights.push(occ[j][m].max(0.0));
                    means.push(old.means()[m].clone());
                    vars.push(old.vars()[m].clone());
                    continue;
                }
                weights.push(occ[j][m]);
                let mean: Vec<f64> = (0..dim).map(|d| sum_x[j][m][d] / occ[j][m]).collect();
                let var: Vec<f64> = (0..dim)
                    .map(|d| (sum_xx[j][m][d] / occ[j][m] - mean[d] * mean[d]).max(floor[d]))
                    .collect();
                means.push(mean);
                vars.push(var);
            }
            let norm: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= norm;
            }
            Gmm::new(weights, means, vars)
        })
        .collect::<Result<_>>()?;

    let (old_self, old_next) = model.transition_probs();
    let mut self_p = vec![0.0; s];
    let mut next_p = vec![0.0; s];
    for j in 0..s {
        let total = self_occ[j] + next_occ[j];
        if j + 1 == s {
            self_p[j] = 1.0;
        } else if total <= 0.0 {
            self_p[j] = old_self[j];
            next_p[j] = old_next[j];
        } else {
            self_p[j] = self_occ[j] / total;
            next_p[j] = next_occ[j] / total;
        }
    }
    Ok((HmmModel::new(states, &self_p, &next_p)?, total_loglik))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn spec_1mix(states: usize, seed: u64) -> TrainSpec {
        TrainSpec {
            num_states: states,
            num_mixtures: 1,
            seed,
            ..TrainSpec::default()
        }
    }

    /// Epochs whose first half sits near `lo` and second half near `hi`.
    fn two_level_epochs(lo: f64, hi: f64, count: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        (0..count)
            .map(|_| {
                (0..10)
                    .map(|t| {
                        let base = if t < 5 { lo } else { hi };
                        vec![base + noise.sample(&mut rng)]
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn recovers_two_state_means() {
        let epochs = two_level_epochs(0.0, 5.0, 80, 7);
        let model = train_class("test", &epochs, &spec_1mix(2, 1)).unwrap();
        let m0 = model.states()[0].means()[0][0];
        let m1 = model.states()[1].means()[0][0];
        assert!((m0 - 0.0).abs() < 0.1, "state 0 mean {m0}");
        assert!((m1 - 5.0).abs() < 0.1, "state 1 mean {m1}");
        let (self_p, next_p) = model.transition_probs();
        assert!(self_p[0] > 0.5, "state 0 should mostly self-loop");
        assert_eq!(next_p[1], 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let epochs = two_level_epochs(-1.0, 3.0, 40, 3);
        let spec = TrainSpec {
            num_states: 2,
            num_mixtures: 2,
            seed: 42,
            ..TrainSpec::default()
        };
        let a = train_class("x", &epochs, &spec).unwrap();
        let b = train_class("x", &epochs, &spec).unwrap();
        for (ga, gb) in a.states().iter().zip(b.states()) {
            for (ma, mb) in ga.means().iter().zip(gb.means()) {
                for (x, y) in ma.iter().zip(mb) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            for (va, vb) in ga.vars().iter().zip(gb.vars()) {
                for (x, y) in va.iter().zip(vb) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
        let (sa, na) = a.transition_probs();
        let (sb, nb) = b.transition_probs();
        assert_eq!(sa, sb);
        assert_eq!(na, nb);
    }

    #[test]
    fn seeds_change_the_start_not_the_story() {
        let epochs = two_level_epochs(0.0, 5.0, 60, 11);
        let a = train_class("x", &epochs, &spec_1mix(2, 1)).unwrap();
        let b = train_class("x", &epochs, &spec_1mix(2, 2)).unwrap();
        // Different seeds still land on the same structure.
        assert!((a.states()[0].means()[0][0] - b.states()[0].means()[0][0]).abs() < 0.05);
    }

    #[test]
    fn em_loglik_never_decreases() {
        let epochs = two_level_epochs(0.0, 4.0, 30, 9);
        let spec = spec_1mix(2, 5);
        let floor = variance_floor(&epochs, 1, spec.variance_floor_factor);
        let start = flat_start(&epochs, 1, &spec, &floor);
        let (_, trace) = em_refine(&start, &epochs, &floor, 50, 0.0).unwrap();
        // tol = 0 runs until the likelihood is bit-for-bit stationary.
        assert!(trace.len() >= 2);
        if trace.len() < 50 {
            assert_eq!(trace[trace.len() - 1], trace[trace.len() - 2]);
        }
        for w in trace.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-8 * w[0].abs(),
                "log likelihood fell: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn too_few_epochs_names_the_class() {
        let epochs = two_level_epochs(0.0, 1.0, 5, 1);
        let spec = TrainSpec {
            num_states: 3,
            num_mixtures: 4,
            ..TrainSpec::default()
        };
        match train_class("SPSW", &epochs, &spec) {
            Err(Error::Train { class, message }) => {
                assert_eq!(class, "SPSW");
                assert!(message.contains("12"), "{message}");
            }
            other => panic!("expected train error, got {other:?}"),
        }
    }

    #[test]
    fn short_epochs_are_rejected() {
        let epochs = vec![vec![vec![0.0]; 2]; 20];
        let spec = spec_1mix(3, 0);
        assert!(matches!(
            train_class("GPED", &epochs, &spec),
            Err(Error::Train { .. })
        ));
    }

    #[test]
    fn constant_data_stays_finite() {
        let epochs = vec![vec![vec![2.0, -1.0]; 10]; 12];
        let spec = TrainSpec {
            num_states: 2,
            num_mixtures: 2,
            ..TrainSpec::default()
        };
        let model = train_class("BCKG", &epochs, &spec).unwrap();
        let ll = model.log_likelihood(&epochs[0]).unwrap();
        assert!(ll.is_finite());
        for g in model.states() {
            for var in g.vars() {
                assert!(var.iter().all(|&v| v >= MIN_VAR && v.is_finite()));
            }
        }
    }

    #[test]
    fn mixture_growth_reaches_requested_count() {
        let epochs = two_level_epochs(0.0, 6.0, 50, 13);
        for target in [1usize, 2, 3, 4] {
            let spec = TrainSpec {
                num_states: 2,
                num_mixtures: target,
                seed: 4,
                ..TrainSpec::default()
            };
            let model = train_class("x", &epochs, &spec).unwrap();
            for g in model.states() {
                assert_eq!(g.num_components(), target);
                let sum: f64 = g.weights().iter().sum();
                assert!((sum - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn more_mixtures_fit_at_least_as_well() {
        // Bimodal state output: one component underfits, two should win.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let epochs: Vec<Vec<Vec<f64>>> = (0..60)
            .map(|e| {
                (0..10)
                    .map(|_| {
                        let mode = if (e * 7 + 3) % 2 == 0 { -2.0 } else { 2.0 };
                        vec![mode + noise.sample(&mut rng)]
                    })
                    .collect()
            })
            .collect();
        let total = |mixes: usize| -> f64 {
            let spec = TrainSpec {
                num_states: 1,
                num_mixtures: mixes,
                seed: 2,
                ..TrainSpec::default()
            };
            let model = train_class("x", &epochs, &spec).unwrap();
            epochs
                .iter()
                .map(|e| model.log_likelihood(e).unwrap())
                .sum()
        };
        let one = total(1);
        let two = total(2);
        assert!(two > one + 1.0, "1 mix {one}, 2 mix {two}");
    }
}
