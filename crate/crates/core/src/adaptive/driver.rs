use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::marking::{doerfler_mark, doerfler_mark_weighted};
use crate::estimate::{estimate_on_mesh, global_triangle_estimate, global_union_estimate, Problem};
use crate::fem::{combine_on_union, Discretization, FeFunction, ParametricState, RhsField, DEFAULT_REL_TOL};
use crate::mesh::{make_initial_mesh, refine, uniform_refine, union_mesh, Domain, TriMesh};
use crate::rational::{bp_coefficients, choose_kappa, RationalScheme};
use crate::reference::{effectivity, faber_krahn_lambda0, l2_error, spectral_reference, SpectralSolution};
use crate::{Error, Result};

pub const DEFAULT_KAPPA: f64 = 0.26;
pub const DEFAULT_MAX_ITERATIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaMode {
    Fixed(f64),
    /// Largest grid value whose bound is below `tol / 100`.
    Auto,
}

impl Default for KappaMode {
    fn default() -> Self {
        KappaMode::Fixed(DEFAULT_KAPPA)
    }
}

impl fmt::Display for KappaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KappaMode::Fixed(k) => write!(f, "{k}"),
            KappaMode::Auto => f.write_str("auto"),
        }
    }
}

impl FromStr for KappaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(KappaMode::Auto);
        }
        s.parse::<f64>()
            .map(KappaMode::Fixed)
            .map_err(|_| Error::Config(format!("invalid kappa '{s}'")))
    }
}

/// How the meshes of the parametric problems evolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// One mesh per problem, joint weighted marking.
    #[default]
    Multimesh,
    /// One shared mesh marked with the combined indicators.
    Singlemesh,
    /// One shared mesh refined uniformly every iteration.
    Uniform,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Multimesh => "multimesh",
            Strategy::Singlemesh => "singlemesh",
            Strategy::Uniform => "uniform",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multimesh" => Ok(Strategy::Multimesh),
            "singlemesh" => Ok(Strategy::Singlemesh),
            "uniform" => Ok(Strategy::Uniform),
            _ => Err(Error::Config(format!("unknown mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub s: f64,
    pub domain: Domain,
    pub f: RhsField,
    pub theta: f64,
    pub tol: f64,
    /// Global estimates are computed every `k` iterations.
    pub k: usize,
    pub kappa: KappaMode,
    /// Number of iterations run at most; the last one is `max_iterations - 1`.
    pub max_iterations: usize,
    pub strategy: Strategy,
    /// Cell count the initial uniform mesh is built from.
    pub initial_cells: usize,
    pub rel_tol: f64,
    /// Stop at a checkpoint whose union space reaches this dimension.
    pub max_union_dofs: Option<usize>,
    /// Modes of the spectral reference; `None` disables error measurement.
    pub reference_modes: Option<usize>,
}

impl RunConfig {
    pub fn new(s: f64, domain: Domain, f: RhsField) -> RunConfig {
        RunConfig {
            s,
            domain,
            f,
            theta: 0.5,
            tol: 1e-4,
            k: 1,
            kappa: KappaMode::default(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            strategy: Strategy::default(),
            initial_cells: domain.default_initial_cells(),
            rel_tol: DEFAULT_REL_TOL,
            max_union_dofs: None,
            reference_modes: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::Config(format!("s = {} not in (0, 1)", self.s)));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta = {} not in (0, 1]", self.theta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol = {} must be positive", self.tol)));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if let KappaMode::Fixed(k) = self.kappa {
            if !(k > 0.0) {
                return Err(Error::Config(format!("kappa = {k} must be positive")));
            }
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Config(format!("rel_tol = {} not in (0, 1)", self.rel_tol)));
        }
        Ok(())
    }

    /// Resolves the quadrature step.
    pub fn resolve_kappa(&self) -> Result<f64> {
        match self.kappa {
            KappaMode::Fixed(k) => Ok(k),
            KappaMode::Auto => {
                let mesh = make_initial_mesh(self.domain, self.initial_cells)?;
                let f_norm = self.f.l2_norm(&mesh);
                choose_kappa(self.s, self.tol, faber_krahn_lambda0(self.domain), f_norm)
            }
        }
    }

    pub fn scheme(&self) -> Result<RationalScheme> {
        bp_coefficients(self.s, self.resolve_kappa()?, faber_krahn_lambda0(self.domain))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub m: usize,
    pub solved_problems: usize,
    pub totcost: u64,
    /// `Σ_{j=1}^m totcost^j`
    pub cumcost: u64,
    /// `Σ_l dim S_l`
    pub total_dofs: usize,
    /// Present at checkpoints.
    pub union_dofs: Option<usize>,
    pub union_cells: Option<usize>,
    pub eta_triangle: Option<f64>,
    pub eta_union: Option<f64>,
    pub error_ref: Option<f64>,
    pub effectivity: Option<f64>,
    pub wall_time: Duration,
}

impl IterationRecord {
    pub fn is_checkpoint(&self) -> bool {
        self.eta_union.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    MaxIterations,
    /// Nothing was marked.
    Converged,
    DofLimit,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Tolerance => "tolerance reached",
            StopReason::MaxIterations => "iteration limit reached",
            StopReason::Converged => "no cell marked",
            StopReason::DofLimit => "dof limit reached",
        })
    }
}

/// Which problems were touched in one iteration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IterationTrace {
    pub solved: Vec<usize>,
    pub estimated: Vec<usize>,
    /// Problems with a nonempty mark set.
    pub marked: Vec<usize>,
}

/// Handed to the observer at every checkpoint.
pub struct Checkpoint<'a> {
    pub m: usize,
    pub union: &'a Arc<TriMesh>,
    /// Fully discrete solution on `union`.
    pub solution: &'a FeFunction,
    pub states: &'a [ParametricState],
    pub record: &'a IterationRecord,
}

#[derive(Debug)]
pub struct RunOutput {
    pub scheme: RationalScheme,
    pub records: Vec<IterationRecord>,
    pub trace: Vec<IterationTrace>,
    pub stop: StopReason,
    pub final_solution: FeFunction,
    pub final_states: Vec<ParametricState>,
    pub solve_calls: Vec<usize>,
    pub estimate_calls: Vec<usize>,
    pub refined_ever: Vec<bool>,
}

impl RunOutput {
    pub fn last_estimate(&self) -> Option<&IterationRecord> {
        self.records.iter().rev().find(|r| r.is_checkpoint())
    }

    /// Share of problems whose mesh was never refined.
    pub fn never_refined_fraction(&self) -> f64 {
        let n = self.refined_ever.iter().filter(|r| !**r).count();
        n as f64 / self.refined_ever.len() as f64
    }
}

pub fn run(config: &RunConfig) -> Result<RunOutput> {
    run_with(config, |_| {})
}

pub fn run_with<F: FnMut(&Checkpoint<'_>)>(config: &RunConfig, observer: F) -> Result<RunOutput> {
    config.validate()?;
    let scheme = config.scheme()?;
    run_with_scheme(config, scheme, observer)
}

/// Runs the loop with a given rational scheme instead of the one derived
/// from `config.s` and `config.kappa`.
pub fn run_with_scheme<F: FnMut(&Checkpoint<'_>)>(
    config: &RunConfig,
    scheme: RationalScheme,
    observer: F,
) -> Result<RunOutput> {
    config.validate()?;
    let reference = match config.reference_modes {
        Some(modes) if config.domain.rectangle().is_some() => {
            Some(spectral_reference(config.domain, &config.f, config.s, modes)?)
        }
        _ => None,
    };
    let initial = Arc::new(make_initial_mesh(config.domain, config.initial_cells)?);
    Driver::new(config, scheme, initial, reference).run(observer)
}

struct Driver<'a> {
    cfg: &'a RunConfig,
    scheme: RationalScheme,
    reference: Option<SpectralSolution>,
    states: Vec<ParametricState>,
    solve_calls: Vec<usize>,
    estimate_calls: Vec<usize>,
    refined_ever: Vec<bool>,
    /// Combined per-cell estimate of the shared mesh.
    combined: Option<Vec<f64>>,
}

fn distinct_meshes<'s>(states: impl Iterator<Item = &'s ParametricState>) -> Vec<Arc<TriMesh>> {
    let mut out: Vec<Arc<TriMesh>> = Vec::new();
    for s in states {
        if !out.iter().any(|m| Arc::ptr_eq(m, &s.mesh)) {
            out.push(s.mesh.clone());
        }
    }
    out
}

impl<'a> Driver<'a> {
    fn new(
        cfg: &'a RunConfig,
        scheme: RationalScheme,
        initial: Arc<TriMesh>,
        reference: Option<SpectralSolution>,
    ) -> Self {
        let n = scheme.n();
        let states = (0..n)
            .map(|index| ParametricState {
                index,
                mesh: initial.clone(),
                solution: FeFunction::zero(initial.clone()),
                indicators: Vec::new(),
                dirty: true,
            })
            .collect();
        Driver {
            cfg,
            scheme,
            reference,
            states,
            solve_calls: vec![0; n],
            estimate_calls: vec![0; n],
            refined_ever: vec![false; n],
            combined: None,
        }
    }

    fn shared_mesh(&self) -> bool {
        self.cfg.strategy != Strategy::Multimesh
    }

    /// Solves and estimates all dirty problems, grouped by mesh.
    fn solve_dirty(&mut self) -> Result<Vec<usize>> {
        let dirty: Vec<usize> = (0..self.states.len()).filter(|&l| self.states[l].dirty).collect();
        if dirty.is_empty() {
            return Ok(dirty);
        }
        let meshes = distinct_meshes(dirty.iter().map(|&l| &self.states[l]));
        let cfg = self.cfg;
        let scheme = &self.scheme;
        let weights: Option<Vec<f64>> = self
            .shared_mesh()
            .then(|| scheme.a().iter().map(|a| scheme.scale() * a).collect());
        let states = &self.states;
        // (problem, solution, indicators) per group, plus the combined estimate
        let results: Vec<(Vec<(usize, FeFunction, Vec<f64>)>, Option<Vec<f64>>)> = meshes
            .par_iter()
            .map(|mesh| -> Result<_> {
                let members: Vec<usize> = dirty
                    .iter()
                    .copied()
                    .filter(|&l| Arc::ptr_eq(&states[l].mesh, mesh))
                    .collect();
                let disc = Discretization::new(mesh.clone(), &cfg.f);
                let solutions: Vec<FeFunction> = members
                    .par_iter()
                    .map(|&l| {
                        let old = &states[l].solution;
                        let guess = if old.mesh().n_interior() == 0 {
                            None
                        } else {
                            Some(old.transfer_to(mesh)?.interior_values())
                        };
                        disc.solve(scheme.b()[l], scheme.c(l), guess, cfg.rel_tol)
                            .map(|(w, _)| w)
                    })
                    .collect::<Result<_>>()?;
                drop(disc);
                let problems: Vec<Problem<'_>> = members
                    .iter()
                    .zip(&solutions)
                    .map(|(&l, w)| Problem {
                        b: scheme.b()[l],
                        c: scheme.c(l),
                        solution: w,
                    })
                    .collect();
                let est = estimate_on_mesh(mesh, &cfg.f, &problems, weights.as_deref())?;
                let group = members
                    .into_iter()
                    .zip(solutions)
                    .zip(est.indicators)
                    .map(|((l, w), eta)| (l, w, eta))
                    .collect();
                Ok((group, est.combined))
            })
            .collect::<Result<_>>()?;
        for (group, combined) in results {
            for (l, w, eta) in group {
                let st = &mut self.states[l];
                st.solution = w;
                st.indicators = eta;
                st.dirty = false;
                self.solve_calls[l] += 1;
                self.estimate_calls[l] += 1;
            }
            if combined.is_some() {
                self.combined = combined;
            }
        }
        Ok(dirty)
    }

    fn union(&self) -> Result<Arc<TriMesh>> {
        let meshes = distinct_meshes(self.states.iter());
        if meshes.len() == 1 {
            return Ok(meshes[0].clone());
        }
        let refs: Vec<&TriMesh> = meshes.iter().map(|m| m.as_ref()).collect();
        Ok(Arc::new(union_mesh(&refs)?))
    }

    fn mark(&self) -> Result<Vec<Vec<usize>>> {
        match self.cfg.strategy {
            Strategy::Multimesh => doerfler_mark(&self.states, &self.scheme, self.cfg.theta),
            Strategy::Singlemesh => {
                let combined = self
                    .combined
                    .as_deref()
                    .ok_or_else(|| Error::Structure("no combined estimate to mark".into()))?;
                let shared = doerfler_mark_weighted(&[combined], &[1.0], self.cfg.theta)?;
                Ok(vec![shared[0].clone(); self.states.len()])
            }
            Strategy::Uniform => {
                let n = self.states[0].mesh.n_cells();
                Ok(vec![(0..n).collect(); self.states.len()])
            }
        }
    }

    /// Refines marked meshes. Problems sharing a mesh and a mark set keep
    /// sharing the refined mesh.
    fn refine(&mut self, marks: &[Vec<usize>]) -> Result<Vec<usize>> {
        // jobs[j] is the first problem of a (mesh, mark set) class
        let mut jobs: Vec<usize> = Vec::new();
        let mut job_of: Vec<Option<usize>> = vec![None; self.states.len()];
        for l in 0..self.states.len() {
            if marks[l].is_empty() {
                continue;
            }
            let same =
                |&o: &usize| Arc::ptr_eq(&self.states[o].mesh, &self.states[l].mesh) && marks[o] == marks[l];
            job_of[l] = Some(match jobs.iter().position(same) {
                Some(j) => j,
                None => {
                    jobs.push(l);
                    jobs.len() - 1
                }
            });
        }
        let uniform = self.cfg.strategy == Strategy::Uniform;
        let states = &self.states;
        let refined: Vec<Arc<TriMesh>> = jobs
            .par_iter()
            .map(|&l| {
                let mesh = &states[l].mesh;
                let new = if uniform {
                    uniform_refine(mesh)?
                } else {
                    refine(mesh, &marks[l])?
                };
                Ok(Arc::new(new))
            })
            .collect::<Result<_>>()?;
        let mut marked = Vec::new();
        for (l, job) in job_of.into_iter().enumerate() {
            if let Some(j) = job {
                let st = &mut self.states[l];
                st.mesh = refined[j].clone();
                st.dirty = true;
                self.refined_ever[l] = true;
                marked.push(l);
            }
        }
        Ok(marked)
    }

    fn run<F: FnMut(&Checkpoint<'_>)>(mut self, mut observer: F) -> Result<RunOutput> {
        let mut records: Vec<IterationRecord> = Vec::new();
        let mut trace: Vec<IterationTrace> = Vec::new();
        let mut cumcost: u64 = 0;
        let mut final_solution: Option<FeFunction> = None;
        let mut m = 0;
        let stop = loop {
            let started = Instant::now();
            let step = self.step(m, &mut cumcost, started, &mut observer);
            let (record, solution, solved, stop) = step.map_err(|e| e.at_iteration(m))?;
            if let Some(sol) = solution {
                final_solution = Some(sol);
            }
            let mut it = IterationTrace {
                estimated: solved.clone(),
                solved,
                marked: Vec::new(),
            };
            let stop = match stop {
                Some(reason) => Some(reason),
                None if m + 1 >= self.cfg.max_iterations => Some(StopReason::MaxIterations),
                None => {
                    let marks = self.mark().map_err(|e| e.at_iteration(m))?;
                    if marks.iter().all(|mk| mk.is_empty()) {
                        Some(StopReason::Converged)
                    } else {
                        it.marked = self.refine(&marks).map_err(|e| e.at_iteration(m))?;
                        None
                    }
                }
            };
            let mut record = record;
            record.wall_time = started.elapsed();
            log::info!(
                "m = {m}: solved {}, total dofs {}, eta_union {:?}",
                record.solved_problems,
                record.total_dofs,
                record.eta_union
            );
            records.push(record);
            trace.push(it);
            if let Some(reason) = stop {
                break reason;
            }
            m += 1;
        };
        let final_solution = match final_solution {
            Some(sol) if records.last().is_some_and(|r| r.is_checkpoint()) => sol,
            _ => {
                let union = self.union()?;
                let sols: Vec<&FeFunction> = self.states.iter().map(|s| &s.solution).collect();
                combine_on_union(&self.scheme, &sols, &union)?
            }
        };
        Ok(RunOutput {
            scheme: self.scheme,
            records,
            trace,
            stop,
            final_solution,
            final_states: self.states,
            solve_calls: self.solve_calls,
            estimate_calls: self.estimate_calls,
            refined_ever: self.refined_ever,
        })
    }

    #[allow(clippy::type_complexity)]
    fn step<F: FnMut(&Checkpoint<'_>)>(
        &mut self,
        m: usize,
        cumcost: &mut u64,
        started: Instant,
        observer: &mut F,
    ) -> Result<(
        IterationRecord,
        Option<FeFunction>,
        Vec<usize>,
        Option<StopReason>,
    )> {
        let solved = self.solve_dirty()?;
        let totcost: u64 = solved
            .iter()
            .map(|&l| self.states[l].mesh.n_interior() as u64)
            .sum();
        if m >= 1 {
            *cumcost += totcost;
        }
        let total_dofs = self.states.iter().map(|s| s.mesh.n_interior()).sum();
        let mut record = IterationRecord {
            m,
            solved_problems: solved.len(),
            totcost,
            cumcost: *cumcost,
            total_dofs,
            union_dofs: None,
            union_cells: None,
            eta_triangle: None,
            eta_union: None,
            error_ref: None,
            effectivity: None,
            wall_time: Duration::ZERO,
        };
        if m % self.cfg.k != 0 {
            return Ok((record, None, solved, None));
        }
        let union = self.union()?;
        let (eta_triangle, _) = global_triangle_estimate(&self.scheme, &self.states)?;
        let eta_union = match (&self.combined, self.shared_mesh()) {
            (Some(c), true) => c.iter().map(|e| e * e).sum::<f64>().sqrt(),
            _ => global_union_estimate(&self.scheme, &self.states, &union, &self.cfg.f)?.total,
        };
        let sols: Vec<&FeFunction> = self.states.iter().map(|s| &s.solution).collect();
        let solution = combine_on_union(&self.scheme, &sols, &union)?;
        record.union_dofs = Some(union.n_interior());
        record.union_cells = Some(union.n_cells());
        record.eta_triangle = Some(eta_triangle);
        record.eta_union = Some(eta_union);
        if let Some(reference) = &self.reference {
            let err = l2_error(reference, &solution);
            record.error_ref = Some(err);
            record.effectivity = effectivity(eta_union, err).ok();
        }
        record.wall_time = started.elapsed();
        observer(&Checkpoint {
            m,
            union: &union,
            solution: &solution,
            states: &self.states,
            record: &record,
        });
        let stop = if eta_union < self.cfg.tol {
            Some(StopReason::Tolerance)
        } else if self
            .cfg
            .max_union_dofs
            .is_some_and(|cap| union.n_interior() >= cap)
        {
            Some(StopReason::DofLimit)
        } else {
            None
        };
        Ok((record, Some(solution), solved, stop))
    }
}
