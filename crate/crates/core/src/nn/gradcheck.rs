//! Central finite-difference verification of analytic gradients.
//!
//! Every probe returns the scalar loss together with the network's branch
//! signature (ReLU gates and pool winners). A coordinate whose `+eps` or
//! `-eps` probe lands on a different branch than the unperturbed point sits
//! at a kink; it is reported as flagged and left out of the pass/fail
//! decision.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::params::{GradBuffer, ParamStore};

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_TOL: f64 = 1e-4;

/// Loss at a point plus the branch signature it was computed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub loss: f64,
    pub signature: u64,
}

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    pub eps: f64,
    pub tol: f64,
    /// Check at most this many coordinates per array (chosen at random);
    /// `None` checks all of them.
    pub max_per_array: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            tol: DEFAULT_TOL,
            max_per_array: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArrayCheck {
    pub name: String,
    pub checked: usize,
    /// Coordinates at a non-differentiable point, excluded from the verdict.
    pub flagged: usize,
    pub max_rel_error: f64,
    pub worst_index: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub eps: f64,
    pub tol: f64,
    pub arrays: Vec<ArrayCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.arrays
            .iter()
            .map(|a| a.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tol
    }

    pub fn flagged(&self) -> usize {
        self.arrays.iter().map(|a| a.flagged).sum()
    }

    pub fn checked(&self) -> usize {
        self.arrays.iter().map(|a| a.checked).sum()
    }
}

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn pick(len: usize, max: Option<usize>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match max {
        Some(m) if m < len => {
            let mut v = sample(rng, len, m).into_vec();
            v.sort_unstable();
            v
        }
        _ => (0..len).collect(),
    }
}

/// Checks `analytic` against finite differences of `eval` over the
/// coordinates of `values`. `values` is restored before returning.
pub fn check_slice<F>(
    name: &str,
    values: &mut [f64],
    analytic: &[f64],
    cfg: &GradCheckConfig,
    rng: &mut ChaCha8Rng,
    mut eval: F,
) -> ArrayCheck
where
    F: FnMut(&[f64]) -> Probe,
{
    let base = eval(values);
    let idx = pick(values.len(), cfg.max_per_array, rng);
    let mut out = ArrayCheck {
        name: name.to_string(),
        checked: 0,
        flagged: 0,
        max_rel_error: 0.0,
        worst_index: None,
    };
    for i in idx {
        let orig = values[i];
        values[i] = orig + cfg.eps;
        let plus = eval(values);
        values[i] = orig - cfg.eps;
        let minus = eval(values);
        values[i] = orig;
        out.checked += 1;
        if plus.signature != base.signature || minus.signature != base.signature {
            out.flagged += 1;
            continue;
        }
        let numeric = (plus.loss - minus.loss) / (2.0 * cfg.eps);
        let err = relative_error(analytic[i], numeric);
        if err > out.max_rel_error || out.worst_index.is_none() {
            out.max_rel_error = out.max_rel_error.max(err);
            out.worst_index = Some(i);
        }
    }
    out
}

/// Checks every parameter array of `params` against `analytic`.
pub fn check_params<F>(
    params: &mut ParamStore,
    analytic: &GradBuffer,
    cfg: &GradCheckConfig,
    mut eval: F,
) -> GradCheckReport
where
    F: FnMut(&ParamStore) -> Probe,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut arrays = Vec::with_capacity(params.len());
    for id in params.ids().collect::<Vec<_>>() {
        let name = params.name(id).to_string();
        let mut values = std::mem::take(params.value_mut(id));
        let check = check_slice(&name, &mut values, analytic.get(id), cfg, &mut rng, |v| {
            *params.value_mut(id) = v.to_vec();
            let p = eval(params);
            *params.value_mut(id) = Vec::new();
            p
        });
        *params.value_mut(id) = values;
        arrays.push(check);
    }
    GradCheckReport {
        eps: cfg.eps,
        tol: cfg.tol,
        arrays,
    }
}
