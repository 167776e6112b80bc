use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::StudyError;
use crate::fem::{adaptive_epr_with, AdaptiveOptions};
use crate::geometry::{GeometryParams, NUMERIC_FIELDS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeOptions {
    /// Simplex searches, the first from the base point, the rest from
    /// seeded random points.
    pub n_starts: usize,
    pub seed: u64,
    /// Objective evaluations per start.
    pub max_evals: usize,
    /// Stop when the simplex spans less than this in unit-box coordinates.
    pub tol: f64,
    /// Initial simplex edge in unit-box coordinates.
    pub step: f64,
    pub adaptive: AdaptiveOptions,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions { n_starts: 3, seed: 0, max_evals: 40, tol: 1e-3, step: 0.25, adaptive: AdaptiveOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub start: usize,
    pub params: BTreeMap<String, f64>,
    /// EPR_sum; `inf` when the point failed.
    pub objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Every simplex shrank below `tol`.
    Converged,
    /// Some start ran out of evaluations.
    Budget,
    /// Nothing to optimise.
    NoFreeParameters,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best: GeometryParams,
    pub best_objective: f64,
    pub log: Vec<Evaluation>,
    pub termination: Termination,
}

struct Problem<'a> {
    names: Vec<&'a str>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    base: &'a GeometryParams,
    opts: &'a AdaptiveOptions,
}

impl Problem<'_> {
    fn params(&self, u: &[f64]) -> Result<GeometryParams, StudyError> {
        let mut p = self.base.clone();
        for (k, &x) in u.iter().enumerate() {
            p.set(self.names[k], self.lo[k] + x * (self.hi[k] - self.lo[k]))?;
        }
        Ok(p)
    }

    fn evaluate(&self, start: usize, u: &[f64]) -> Evaluation {
        let named = u.iter().enumerate().map(|(k, &x)| (self.names[k].to_string(), self.lo[k] + x * (self.hi[k] - self.lo[k]))).collect();
        let outcome = self.params(u).and_then(|p| adaptive_epr_with(&p, self.opts).map_err(StudyError::from));
        match outcome {
            Ok((r, _)) => Evaluation { start, params: named, objective: r.epr_sum, error: None },
            Err(e) => Evaluation { start, params: named, objective: f64::INFINITY, error: Some(e.to_string()) },
        }
    }
}

fn clamp01(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect()
}

/// Nelder–Mead on the unit box with every trial point projected back
/// into it. Returns the log and whether the simplex converged.
fn simplex_search(pb: &Problem<'_>, start: usize, x0: Vec<f64>, opts: &OptimizeOptions) -> (Vec<Evaluation>, bool) {
    let d = x0.len();
    let mut log = Vec::new();
    let eval = |x: &[f64], log: &mut Vec<Evaluation>| {
        let e = pb.evaluate(start, x);
        let f = e.objective;
        log.push(e);
        f
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let f0 = eval(&x0, &mut log);
    simplex.push((x0.clone(), f0));
    for k in 0..d {
        let mut x = x0.clone();
        // step inward when the base sits on the upper bound
        x[k] = if x[k] + opts.step <= 1.0 { x[k] + opts.step } else { x[k] - opts.step };
        let x = clamp01(x);
        let f = eval(&x, &mut log);
        simplex.push((x, f));
    }
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    let toward = |a: &[f64], b: &[f64], t: f64| clamp01(a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect());
    loop {
        order(&mut simplex);
        let size = simplex[1..].iter().map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
        if size < opts.tol {
            return (log, true);
        }
        if log.len() >= opts.max_evals {
            return (log, false);
        }
        let centroid: Vec<f64> = (0..d).map(|k| simplex[..d].iter().map(|(x, _)| x[k]).sum::<f64>() / d as f64).collect();
        let (worst, fw) = simplex[d].clone();
        let xr = toward(&centroid, &worst, -1.0);
        let fr = eval(&xr, &mut log);
        if fr < simplex[0].1 {
            let xe = toward(&centroid, &worst, -2.0);
            let fe = eval(&xe, &mut log);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < fw {
                let x = toward(&centroid, &xr, 0.5);
                let f = eval(&x, &mut log);
                (x, f)
            } else {
                let x = toward(&centroid, &worst, 0.5);
                let f = eval(&x, &mut log);
                (x, f)
            };
            if fc < fw.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let x = toward(&best, &s.0, 0.5);
                    let f = eval(&x, &mut log);
                    *s = (x, f);
                }
            }
        }
    }
}

/// Minimises EPR_sum over the parameters named in `bounds`, holding the
/// rest of `base` fixed. Starts run in parallel; the log lists them in
/// start order and the result depends only on `opts.seed`.
pub fn optimize_geometry(bounds: &BTreeMap<String, (f64, f64)>, base: &GeometryParams, opts: &OptimizeOptions) -> Result<OptimizationResult, StudyError> {
    opts.adaptive.validate()?;
    if opts.n_starts == 0 || opts.max_evals == 0 || !(opts.tol > 0.0) || !(opts.step > 0.0 && opts.step <= 1.0) {
        return Err(StudyError::Invalid("n_starts and max_evals must be positive, tol > 0 and step in (0, 1]".into()));
    }
    let mut held = base.clone();
    let mut free = Vec::new();
    for (name, &(lo, hi)) in bounds {
        if !NUMERIC_FIELDS.contains(&name.as_str()) {
            return Err(StudyError::Invalid(format!("`{name}` is not a geometry parameter")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(StudyError::Invalid(format!("bounds for `{name}` are inconsistent: [{lo}, {hi}]")));
        }
        // a degenerate interval pins the parameter
        if lo == hi {
            held.set(name, lo)?;
        } else {
            free.push((name.as_str(), lo, hi));
        }
    }
    let pb = Problem {
        names: free.iter().map(|f| f.0).collect(),
        lo: free.iter().map(|f| f.1).collect(),
        hi: free.iter().map(|f| f.2).collect(),
        base: &held,
        opts: &opts.adaptive,
    };
    let unit = |k: usize, v: f64| ((v - pb.lo[k]) / (pb.hi[k] - pb.lo[k])).clamp(0.0, 1.0);
    let x_base: Vec<f64> = pb.names.iter().enumerate().map(|(k, n)| unit(k, base.get(n).unwrap_or(pb.lo[k]))).collect();

    if pb.names.is_empty() {
        let e = pb.evaluate(0, &[]);
        let best_objective = e.objective;
        return Ok(OptimizationResult { best: held.clone(), best_objective, log: vec![e], termination: Termination::NoFreeParameters });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![x_base];
    for _ in 1..opts.n_starts {
        starts.push((0..pb.names.len()).map(|_| rng.random::<f64>()).collect());
    }
    let runs: Vec<(Vec<Evaluation>, bool)> = starts.into_par_iter().enumerate().map(|(i, x0)| simplex_search(&pb, i, x0, opts)).collect();
    let converged = runs.iter().all(|r| r.1);
    let log: Vec<Evaluation> = runs.into_iter().flat_map(|r| r.0).collect();
    let best_eval = log.iter().min_by(|a, b| a.objective.total_cmp(&b.objective)).expect("at least one evaluation");
    let mut best = held.clone();
    for (name, &v) in &best_eval.params {
        best.set(name, v)?;
    }
    Ok(OptimizationResult {
        best,
        best_objective: best_eval.objective,
        termination: if converged { Termination::Converged } else { Termination::Budget },
        log,
    })
}
