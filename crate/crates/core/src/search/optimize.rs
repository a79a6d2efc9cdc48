use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::{enumerate_topologies, LossKernel, ParamCircuit, Topology};
use crate::circuits::QacCircuit;
use crate::error::{QacError, Result};

/// Refuse sweeps with more canonical topologies than this unless forced.
pub const SWEEP_LIMIT: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Loss fell below the floor.
    LossFloor,
    /// Gradient norm fell below tolerance.
    Converged,
    /// Loss stopped decreasing.
    Stagnated,
    /// Iteration budget exhausted.
    Budget,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BfgsOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub loss_floor: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions { max_iters: 1000, grad_tol: 1e-10, loss_floor: 1e-20 }
    }
}

#[derive(Clone, Debug)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub loss: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
}

/// BFGS with Armijo backtracking. `f(x, g)` returns the loss and writes the
/// gradient into `g`.
pub fn bfgs<F: FnMut(&[f64], &mut [f64]) -> f64>(mut f: F, x0: Vec<f64>, opts: &BfgsOptions) -> BfgsOutcome {
    const ARMIJO: f64 = 1e-4;
    const MAX_HALVINGS: usize = 50;
    const STALL_ITERS: usize = 25;

    let dim = x0.len();
    let mut x = DVector::from_vec(x0);
    let mut g = DVector::zeros(dim);
    let mut fx = f(x.as_slice(), g.as_mut_slice());
    let mut evaluations = 1;
    let mut h = DMatrix::<f64>::identity(dim, dim);
    let mut scaled = false;
    let mut stall = 0;
    let mut trial_g = DVector::zeros(dim);
    let mut iterations = 0;

    let stop = loop {
        if fx <= opts.loss_floor {
            break StopReason::LossFloor;
        }
        if g.norm() <= opts.grad_tol {
            break StopReason::Converged;
        }
        if iterations == opts.max_iters {
            break StopReason::Budget;
        }
        iterations += 1;

        let mut dir = -(&h * &g);
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            h.fill_with_identity();
            scaled = false;
            dir = -g.clone();
            slope = -g.norm_squared();
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &x + &dir * t;
            let ft = f(trial.as_slice(), trial_g.as_mut_slice());
            evaluations += 1;
            if ft.is_finite() && ft <= fx + ARMIJO * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((next, f_next)) = accepted else {
            if scaled {
                h.fill_with_identity();
                scaled = false;
                continue;
            }
            break StopReason::Stagnated;
        };

        let s = &next - &x;
        let y = &trial_g - &g;
        let sy = s.dot(&y);
        if sy > 1e-14 * s.norm() * y.norm() {
            if !scaled {
                h *= sy / y.norm_squared();
                scaled = true;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * (1.0 + rho * yhy)) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        stall = if fx - f_next <= 1e-15 * fx.max(1e-300) { stall + 1 } else { 0 };
        x = next;
        fx = f_next;
        g.copy_from(&trial_g);
        if stall >= STALL_ITERS {
            break StopReason::Stagnated;
        }
    };
    BfgsOutcome { x: x.data.into(), loss: fx, iterations, evaluations, stop }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchOptions {
    pub restarts: usize,
    pub seed: u64,
    /// BFGS iterations per restart.
    pub budget_iters: usize,
    pub phase_free: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { restarts: 20, seed: 0, budget_iters: 1000, phase_free: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestartOutcome {
    pub restart: usize,
    pub seed: u64,
    pub loss: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchReport {
    pub topology: Topology,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub phase_free: bool,
    pub budget_iters: usize,
    pub best_loss: f64,
    pub best_restart: usize,
    pub best_params: Vec<f64>,
    pub restarts: Vec<RestartOutcome>,
    /// Seconds; left out of serialized output when `None`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl SearchReport {
    pub fn best(&self) -> ParamCircuit {
        ParamCircuit { n: self.n, m: self.m, topology: self.topology.clone(), params: self.best_params.clone() }
    }

    pub fn best_circuit(&self) -> QacCircuit {
        self.best().to_circuit()
    }
}

/// Multi-restart BFGS on the clean-parity loss for any depth. Restart `i`
/// starts from parameters drawn with seed `seed + i`; restarts run in
/// parallel and the result does not depend on scheduling.
pub fn optimize_topology(topology: &Topology, n: usize, m: usize, opts: &SearchOptions) -> Result<SearchReport> {
    if opts.restarts == 0 {
        return Err(QacError::InvalidArgument("restarts must be at least 1".into()));
    }
    let start = Instant::now();
    let template = ParamCircuit::new(n, m, topology.clone())?;
    let kernel = LossKernel::new(&template, opts.phase_free)?;
    let bfgs_opts = BfgsOptions { max_iters: opts.budget_iters, ..BfgsOptions::default() };
    let runs: Vec<(RestartOutcome, Vec<f64>)> = (0..opts.restarts)
        .into_par_iter()
        .map(|i| {
            let seed = opts.seed.wrapping_add(i as u64);
            let x0 = template.clone().randomized(seed).params;
            let out = bfgs(|x, g| kernel.eval(x, Some(g)), x0, &bfgs_opts);
            let outcome = RestartOutcome {
                restart: i,
                seed,
                loss: out.loss,
                iterations: out.iterations,
                evaluations: out.evaluations,
                stop: out.stop,
            };
            (outcome, out.x)
        })
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.loss.total_cmp(&b.1 .0.loss))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let best_params = runs[best].1.clone();
    Ok(SearchReport {
        topology: topology.clone(),
        n,
        m,
        seed: opts.seed,
        phase_free: opts.phase_free,
        budget_iters: opts.budget_iters,
        best_loss: runs[best].0.loss,
        best_restart: best,
        best_params,
        restarts: runs.into_iter().map(|(o, _)| o).collect(),
        wall_time_secs: Some(start.elapsed().as_secs_f64()),
    })
}

/// [`optimize_topology`] restricted to two multi-qubit layers.
pub fn optimize_depth2(topology: &Topology, n: usize, m: usize, opts: &SearchOptions) -> Result<SearchReport> {
    if topology.depth() != 2 {
        return Err(QacError::InvalidArgument(format!("expected 2 multi layers, topology has {}", topology.depth())));
    }
    optimize_topology(topology, n, m, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub n: usize,
    pub m_max: usize,
    pub topologies: usize,
    pub best_loss: f64,
    /// How to read the numbers; present when exact simulation is not expected.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interpretation: Option<String>,
    /// Sorted by best loss, ties kept in enumeration order.
    pub ranked: Vec<SearchReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl SweepReport {
    /// Drops wall-clock fields so output depends only on the inputs.
    pub fn without_timing(mut self) -> Self {
        self.wall_time_secs = None;
        self.ranked.iter_mut().for_each(|r| r.wall_time_secs = None);
        self
    }
}

/// Runs [`optimize_depth2`] on every canonical connected two-layer topology
/// with `n` inputs and `n ≤ m ≤ m_max` qubits.
pub fn sweep_topologies(n: usize, m_max: usize, opts: &SearchOptions, force: bool) -> Result<SweepReport> {
    if n < 3 {
        return Err(QacError::InvalidArgument(format!("sweep needs n >= 3, got {n}")));
    }
    if m_max < n {
        return Err(QacError::InvalidArgument(format!("m_max = {m_max} is below n = {n}")));
    }
    let start = Instant::now();
    let limit = (!force).then_some(SWEEP_LIMIT);
    let mut jobs = Vec::new();
    for m in n..=m_max {
        let remaining = limit.map(|l| l - jobs.len().min(l));
        jobs.extend(enumerate_topologies(n, m, remaining)?.into_iter().map(|t| (t, m)));
    }
    let mut ranked = jobs.par_iter().map(|(t, m)| optimize_depth2(t, n, *m, opts)).collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.best_loss.total_cmp(&b.best_loss));
    let best_loss = ranked.first().map_or(f64::INFINITY, |r| r.best_loss);
    let interpretation = (n >= 4).then(|| {
        format!(
            "statistical evidence, not a proof: best loss {best_loss:.3e} over {} topologies x {} restarts; \
             consistent with no depth-2 QAC circuit cleanly simulating parity on {n} inputs",
            ranked.len(),
            opts.restarts
        )
    });
    Ok(SweepReport {
        n,
        m_max,
        topologies: ranked.len(),
        best_loss,
        interpretation,
        ranked,
        wall_time_secs: Some(start.elapsed().as_secs_f64()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{check_clean_simulation, CleanTarget};
    use proptest::prelude::*;

    #[test]
    fn bfgs_minimizes_rosenbrock() {
        let rosen = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let out = bfgs(rosen, vec![-1.2, 1.0], &BfgsOptions { max_iters: 500, ..Default::default() });
        assert!(out.loss < 1e-16, "{out:?}");
        assert!((out.x[0] - 1.0).abs() < 1e-7 && (out.x[1] - 1.0).abs() < 1e-7);
        let capped = bfgs(rosen, vec![-1.2, 1.0], &BfgsOptions { max_iters: 3, ..Default::default() });
        assert_eq!((capped.iterations, capped.stop), (3, StopReason::Budget));
    }

    #[test]
    fn three_input_parity_is_found() {
        let topo: Topology = "1,2,3|1,2,3".parse().unwrap();
        let opts = SearchOptions { restarts: 8, seed: 0, budget_iters: 1000, phase_free: false };
        let report = optimize_depth2(&topo, 3, 3, &opts).unwrap();
        assert!(report.best_loss < 1e-8, "{:?}", report.restarts);
        let check = check_clean_simulation(&report.best_circuit(), &CleanTarget::Parity, 1e-4).unwrap();
        assert!(check.passed && check.distances.len() == 8);
    }

    #[test]
    fn search_is_deterministic() {
        let topo: Topology = "1,2,3|1,2,3".parse().unwrap();
        let opts = SearchOptions { restarts: 1, seed: 42, budget_iters: 50, phase_free: false };
        let a = optimize_depth2(&topo, 3, 3, &opts).unwrap();
        let b = optimize_depth2(&topo, 3, 3, &opts).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap().len() > 0, true);
        assert_eq!(SearchReport { wall_time_secs: None, ..a }, SearchReport { wall_time_secs: None, ..b });
    }

    #[test]
    fn search_preconditions() {
        let one: Topology = "1,2,3".parse().unwrap();
        let opts = SearchOptions { restarts: 1, ..Default::default() };
        assert!(optimize_depth2(&one, 3, 3, &opts).is_err());
        let two: Topology = "1,2,3|1,2,3".parse().unwrap();
        assert!(optimize_depth2(&two, 3, 3, &SearchOptions { restarts: 0, ..opts }).is_err());
        assert!(optimize_depth2(&two, 3, 2, &opts).is_err());
        assert!(sweep_topologies(2, 3, &opts, false).is_err());
    }

    #[test]
    fn sweep_three_inputs_finds_exact_simulator() {
        let opts = SearchOptions { restarts: 6, seed: 1, budget_iters: 600, phase_free: false };
        let sweep = sweep_topologies(3, 3, &opts, false).unwrap();
        assert_eq!(sweep.topologies, 7);
        assert!(sweep.best_loss < 1e-8);
        assert!(sweep.interpretation.is_none());
        assert!(sweep.ranked.windows(2).all(|w| w[0].best_loss <= w[1].best_loss));
        assert!(sweep.ranked.iter().any(|r| r.topology.to_string() == "1,2,3|1,2,3"));
    }

    #[test]
    fn sweep_four_inputs_stays_away_from_zero() {
        let opts = SearchOptions { restarts: 3, seed: 5, budget_iters: 300, phase_free: false };
        let sweep = sweep_topologies(4, 4, &opts, false).unwrap();
        assert_eq!(sweep.topologies, 23);
        assert!(sweep.best_loss > 1e-6, "{}", sweep.best_loss);
        assert!(sweep.interpretation.as_deref().unwrap().starts_with("statistical evidence, not a proof"));
        let json = serde_json::to_string(&sweep.without_timing()).unwrap();
        assert!(!json.contains("wall_time"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        /// More restarts from the same seed only add candidates.
        #[test]
        fn best_loss_is_monotone_in_restarts(seed in 0u64..1000, r in 1usize..4) {
            let topo: Topology = "1,2;3,4|1,3".parse().unwrap();
            let base = SearchOptions { restarts: r, seed, budget_iters: 20, phase_free: false };
            let fewer = optimize_depth2(&topo, 3, 4, &base).unwrap();
            let more = optimize_depth2(&topo, 3, 4, &SearchOptions { restarts: r + 2, ..base }).unwrap();
            prop_assert!(more.best_loss <= fewer.best_loss);
            prop_assert_eq!(&more.restarts[..r], &fewer.restarts[..]);
        }
    }
}
