//! Discrete hidden Markov model fitted by Baum-Welch, used to propose initial
//! segment boundaries.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Action, ActionKind, Demonstration, Segmentation};

/// Emission alphabet: movement kinds share one symbol, every other kind has its own.
pub const SYMBOLS: [&str; 10] = [
    "move", "pick", "put", "slice", "heat", "cool", "clean", "toggle", "teleport", "stop",
];

pub fn action_symbol(a: &Action) -> usize {
    match a.kind {
        k if k.is_move() => 0,
        ActionKind::Pick => 1,
        ActionKind::Put => 2,
        ActionKind::Slice => 3,
        ActionKind::Heat => 4,
        ActionKind::Cool => 5,
        ActionKind::Clean => 6,
        ActionKind::Toggle => 7,
        ActionKind::Teleport => 8,
        _ => 9,
    }
}

pub fn symbol_name(s: usize) -> &'static str {
    SYMBOLS[s]
}

pub fn demo_symbols(d: &Demonstration) -> Vec<usize> {
    d.actions().map(action_symbol).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    pub initial: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub emission: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HmmConfig {
    pub states: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Independent random initializations; the most likely fit is kept.
    pub restarts: usize,
}

impl Default for HmmConfig {
    fn default() -> Self {
        HmmConfig {
            states: 3,
            tol: 1e-6,
            max_iter: 200,
            restarts: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HmmError {
    #[error("empty alphabet")]
    EmptyAlphabet,
    #[error("no observation sequences")]
    NoData,
    #[error("need at least two hidden states, got {0}")]
    TooFewStates(usize),
    #[error("symbol {symbol} outside an alphabet of size {size}")]
    BadSymbol { symbol: usize, size: usize },
    #[error("cannot split {n} actions into {m} segments")]
    Infeasible { n: usize, m: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmFit {
    pub model: HmmModel,
    /// Total log-likelihood before the first update and after each one.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
}

fn random_stochastic(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| 0.5 + rng.gen::<f64>()).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Scaled forward-backward quantities for one sequence.
struct Posteriors {
    gamma: Vec<Vec<f64>>,
    /// xi[t][k][l] summed contributions are accumulated directly; kept per step
    /// for the change probabilities.
    xi_diag_sum: Vec<f64>,
    xi: Vec<Vec<f64>>,
    log_lik: f64,
}

impl HmmModel {
    pub fn states(&self) -> usize {
        self.initial.len()
    }

    pub fn alphabet(&self) -> usize {
        self.emission.first().map_or(0, Vec::len)
    }

    pub fn random(k: usize, v: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        HmmModel {
            initial: random_stochastic(&mut rng, k),
            transition: (0..k).map(|_| random_stochastic(&mut rng, k)).collect(),
            emission: (0..k).map(|_| random_stochastic(&mut rng, v)).collect(),
        }
    }

    pub fn is_stochastic(&self, tol: f64) -> bool {
        let ok = |r: &[f64]| (r.iter().sum::<f64>() - 1.0).abs() <= tol && r.iter().all(|&x| x >= 0.0);
        ok(&self.initial) && self.transition.iter().all(|r| ok(r)) && self.emission.iter().all(|r| ok(r))
    }

    fn posteriors(&self, xs: &[usize]) -> Posteriors {
        let k = self.states();
        let t_len = xs.len();
        let mut alpha = vec![vec![0.0; k]; t_len];
        let mut scale = vec![0.0; t_len];
        for s in 0..k {
            alpha[0][s] = self.initial[s] * self.emission[s][xs[0]];
        }
        scale[0] = alpha[0].iter().sum();
        alpha[0].iter_mut().for_each(|a| *a /= scale[0]);
        for t in 1..t_len {
            for s in 0..k {
                let mut acc = 0.0;
                for r in 0..k {
                    acc += alpha[t - 1][r] * self.transition[r][s];
                }
                alpha[t][s] = acc * self.emission[s][xs[t]];
            }
            scale[t] = alpha[t].iter().sum();
            let c = scale[t];
            alpha[t].iter_mut().for_each(|a| *a /= c);
        }
        let mut beta = vec![vec![1.0; k]; t_len];
        for t in (0..t_len - 1).rev() {
            for r in 0..k {
                let mut acc = 0.0;
                for s in 0..k {
                    acc += self.transition[r][s] * self.emission[s][xs[t + 1]] * beta[t + 1][s];
                }
                beta[t][r] = acc / scale[t + 1];
            }
        }
        let gamma: Vec<Vec<f64>> = (0..t_len)
            .map(|t| {
                let g: Vec<f64> = (0..k).map(|s| alpha[t][s] * beta[t][s]).collect();
                let z: f64 = g.iter().sum();
                g.into_iter().map(|x| x / z).collect()
            })
            .collect();
        let mut xi = vec![vec![0.0; k * k]; t_len.saturating_sub(1)];
        let mut xi_diag_sum = vec![0.0; t_len.saturating_sub(1)];
        for t in 0..t_len.saturating_sub(1) {
            let mut z = 0.0;
            for r in 0..k {
                for s in 0..k {
                    let v = alpha[t][r]
                        * self.transition[r][s]
                        * self.emission[s][xs[t + 1]]
                        * beta[t + 1][s];
                    xi[t][r * k + s] = v;
                    z += v;
                }
            }
            for v in &mut xi[t] {
                *v /= z;
            }
            xi_diag_sum[t] = (0..k).map(|s| xi[t][s * k + s]).sum();
        }
        Posteriors {
            gamma,
            xi_diag_sum,
            xi,
            log_lik: scale.iter().map(|c| c.ln()).sum(),
        }
    }

    pub fn log_likelihood(&self, seqs: &[Vec<usize>]) -> f64 {
        seqs.iter()
            .filter(|s| !s.is_empty())
            .map(|s| self.posteriors(s).log_lik)
            .sum()
    }

    /// Most likely hidden state sequence; the lowest state index wins ties.
    pub fn viterbi(&self, xs: &[usize]) -> Vec<usize> {
        let k = self.states();
        if xs.is_empty() {
            return Vec::new();
        }
        let ln = |x: f64| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
        let mut delta: Vec<f64> = (0..k)
            .map(|s| ln(self.initial[s]) + ln(self.emission[s][xs[0]]))
            .collect();
        let mut back = vec![vec![0usize; k]; xs.len()];
        for t in 1..xs.len() {
            let mut next = vec![f64::NEG_INFINITY; k];
            for s in 0..k {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for r in 0..k {
                    let v = delta[r] + ln(self.transition[r][s]);
                    if v > best {
                        best = v;
                        arg = r;
                    }
                }
                next[s] = best + ln(self.emission[s][xs[t]]);
                back[t][s] = arg;
            }
            delta = next;
        }
        let mut s = (0..k).fold(0, |b, s| if delta[s] > delta[b] { s } else { b });
        let mut out = vec![0; xs.len()];
        for t in (0..xs.len()).rev() {
            out[t] = s;
            s = back[t][s];
        }
        out
    }

    /// Posterior probability that the hidden state changes between action
    /// `i` and `i + 1`, for every `i < n - 1`.
    pub fn change_probabilities(&self, xs: &[usize]) -> Vec<f64> {
        if xs.len() < 2 {
            return Vec::new();
        }
        self.posteriors(xs)
            .xi_diag_sum
            .into_iter()
            .map(|d| (1.0 - d).clamp(0.0, 1.0))
            .collect()
    }
}

fn check(seqs: &[Vec<usize>], k: usize, v: usize) -> Result<(), HmmError> {
    if v == 0 {
        return Err(HmmError::EmptyAlphabet);
    }
    if k < 2 {
        return Err(HmmError::TooFewStates(k));
    }
    if seqs.iter().all(|s| s.is_empty()) {
        return Err(HmmError::NoData);
    }
    for s in seqs.iter().flatten() {
        if *s >= v {
            return Err(HmmError::BadSymbol { symbol: *s, size: v });
        }
    }
    Ok(())
}

/// Baum-Welch from a seeded random initialization. Stops when the relative
/// likelihood gain falls below `tol` or after `max_iter` updates.
pub fn hmm_em(
    seqs: &[Vec<usize>],
    alphabet: usize,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<EmFit, HmmError> {
    check(seqs, k, alphabet)?;
    let seqs: Vec<&Vec<usize>> = seqs.iter().filter(|s| !s.is_empty()).collect();
    let mut model = HmmModel::random(k, alphabet, seed);
    let mut lls = Vec::new();
    let mut iterations = 0;
    loop {
        let posts: Vec<Posteriors> = seqs.par_iter().map(|s| model.posteriors(s)).collect();
        let ll: f64 = posts.iter().map(|p| p.log_lik).sum();
        let converged = lls
            .last()
            .is_some_and(|&prev: &f64| (ll - prev).abs() <= tol * prev.abs().max(1.0));
        lls.push(ll);
        if converged || iterations >= max_iter {
            break;
        }
        let mut init = vec![0.0; k];
        let mut trans = vec![vec![0.0; k]; k];
        let mut emit = vec![vec![0.0; alphabet]; k];
        for (p, xs) in posts.iter().zip(&seqs) {
            for s in 0..k {
                init[s] += p.gamma[0][s];
            }
            for (t, x) in p.xi.iter().enumerate() {
                let _ = t;
                for r in 0..k {
                    for s in 0..k {
                        trans[r][s] += x[r * k + s];
                    }
                }
            }
            for (t, &sym) in xs.iter().enumerate() {
                for s in 0..k {
                    emit[s][sym] += p.gamma[t][s];
                }
            }
        }
        let normalize = |row: &mut Vec<f64>, old: &Vec<f64>| {
            let z: f64 = row.iter().sum();
            if z > 0.0 {
                row.iter_mut().for_each(|x| *x /= z);
            } else {
                row.clone_from(old);
            }
        };
        normalize(&mut init, &model.initial);
        for s in 0..k {
            normalize(&mut trans[s], &model.transition[s]);
            normalize(&mut emit[s], &model.emission[s]);
        }
        model = HmmModel {
            initial: init,
            transition: trans,
            emission: emit,
        };
        iterations += 1;
    }
    Ok(EmFit {
        model,
        log_likelihoods: lls,
        iterations,
    })
}

/// Several seeded restarts; the highest final likelihood wins (earliest on ties).
pub fn hmm_em_restarts(
    seqs: &[Vec<usize>],
    alphabet: usize,
    cfg: &HmmConfig,
    seed: u64,
) -> Result<EmFit, HmmError> {
    let mut best: Option<EmFit> = None;
    for r in 0..cfg.restarts.max(1) {
        let fit = hmm_em(seqs, alphabet, cfg.states, cfg.tol, cfg.max_iter, seed.wrapping_add(r as u64))?;
        let ll = *fit.log_likelihoods.last().unwrap();
        if best
            .as_ref()
            .is_none_or(|b| ll > *b.log_likelihoods.last().unwrap())
        {
            best = Some(fit);
        }
    }
    Ok(best.unwrap())
}

/// Segment boundaries from decoded state changes. With a target count, keep
/// the `m - 1` changes with the highest posterior change probability, or split
/// the longest segments at their midpoints when there are too few.
pub fn init_boundaries(
    d: &Demonstration,
    h: &HmmModel,
    target_segments: Option<usize>,
) -> Result<Segmentation, HmmError> {
    let xs = demo_symbols(d);
    boundaries_for_symbols(&xs, h, target_segments)
}

pub fn boundaries_for_symbols(
    xs: &[usize],
    h: &HmmModel,
    target_segments: Option<usize>,
) -> Result<Segmentation, HmmError> {
    let n = xs.len();
    if let Some(m) = target_segments {
        if m == 0 || m > n {
            return Err(HmmError::Infeasible { n, m });
        }
    }
    let states = h.viterbi(xs);
    let mut bounds: Vec<usize> = (0..n.saturating_sub(1))
        .filter(|&i| states[i] != states[i + 1])
        .collect();
    let Some(m) = target_segments else {
        return Ok(Segmentation::from_boundaries(n, &bounds));
    };
    if bounds.len() > m - 1 {
        let change = h.change_probabilities(xs);
        // stable sort keeps earlier boundaries first among equal probabilities
        bounds.sort_by(|&a, &b| change[b].partial_cmp(&change[a]).unwrap_or(std::cmp::Ordering::Equal));
        bounds.truncate(m - 1);
        bounds.sort_unstable();
    }
    let mut seg = Segmentation::from_boundaries(n, &bounds);
    while seg.num_segments() < m {
        let (j, _) = seg
            .spans
            .iter()
            .enumerate()
            .fold((0, 0), |(bj, bl), (j, s)| if s.len() > bl { (j, s.len()) } else { (bj, bl) });
        let s = seg.spans[j].clone();
        let mid = s.start + s.len() / 2;
        seg.spans.splice(j..=j, [s.start..mid, mid..s.end]);
    }
    Ok(seg)
}
