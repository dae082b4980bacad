//! Gauge-parameter sweeps: scan per-mode eta grids, evaluate every metric at
//! each point, and locate optimal gauges with deterministic tie-breaking.
//!
//! A sweep first runs a preamble: calibrate the physical configuration on
//! the start grid, converge the exact spectrum at the dipole endpoint (the
//! worst case for photon occupation), verify gauge invariance of the
//! converged spectrum at the Coulomb endpoint, and certify a resolution
//! level for the per-point solves. Points then run embarrassingly parallel;
//! results are gathered by grid index so worker count never changes output.

use rayon::prelude::*;

use crate::atom::{
    calibrate_vacuum_amplitude, matrix_elements, solve_atom, AtomBasis, DiffOrder, Grid,
    MatrixElements, PotentialSpec,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    assemble_full, assemble_truncated, truncated_model_from_basis, BasisKind, GaugeVector,
};
use crate::metrics::{
    embed_truncated_state, entanglement_entropy, excitation_energies, ground_state_fidelity,
    spectral_deviation, MetricsReport,
};
use crate::photon::{build_fock_space, FockSpace, ModeSpec};
use crate::spectra::{
    converge, lowest_eigenpairs, ConvergeOptions, ConvergenceReport, EigenRequest, NumericsLevel,
};
use crate::Real;

/// One gauge axis of a sweep: pinned, or scanned over an inclusive range.
#[derive(Debug, Clone, PartialEq)]
pub enum AxisSpec<T> {
    Fixed(T),
    Range { lo: T, hi: T, steps: usize },
}

impl<T: Real> AxisSpec<T> {
    fn values(&self) -> Vec<T> {
        match self {
            AxisSpec::Fixed(v) => vec![*v],
            AxisSpec::Range { lo, hi, steps } => {
                let n = *steps;
                (0..n)
                    .map(|i| *lo + (*hi - *lo) * T::of(i as f64) / T::of((n - 1) as f64))
                    .collect()
            }
        }
    }

    fn len(&self) -> usize {
        match self {
            AxisSpec::Fixed(_) => 1,
            AxisSpec::Range { steps, .. } => *steps,
        }
    }
}

/// Physical configuration of a sweep, with mode frequencies and interaction
/// strength in units of the bare transition energy (resolved after the atom
/// solve).
#[derive(Debug, Clone)]
pub struct PhysicsConfig<T> {
    pub potential: PotentialSpec<T>,
    pub omega_over_delta: Vec<T>,
    pub g_over_delta: T,
    pub basis_kind: BasisKind,
    pub m_levels: usize,
    pub m_energies: usize,
    pub order: DiffOrder,
    pub start: NumericsLevel,
    /// Convergence drift target in units of Delta.
    pub tol_over_delta: T,
    pub max_dim: usize,
    pub max_escalations: usize,
}

impl<T: Real> PhysicsConfig<T> {
    pub fn new(potential: PotentialSpec<T>, omega_over_delta: Vec<T>, g_over_delta: T) -> Self {
        let n_modes = omega_over_delta.len();
        PhysicsConfig {
            potential,
            omega_over_delta,
            g_over_delta,
            basis_kind: BasisKind::Bare,
            m_levels: 2,
            m_energies: 7,
            order: DiffOrder::Four,
            start: NumericsLevel { n_points: 512, cutoffs: vec![10; n_modes] },
            tol_over_delta: T::of(1e-3),
            max_dim: 1 << 20,
            max_escalations: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPlan<T> {
    pub axes: Vec<AxisSpec<T>>,
    pub config: PhysicsConfig<T>,
    /// Cap on the number of grid points.
    pub max_points: usize,
}

impl<T: Real> SweepPlan<T> {
    pub fn new(axes: Vec<AxisSpec<T>>, config: PhysicsConfig<T>) -> Result<Self> {
        if axes.len() != config.omega_over_delta.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} axes for {} modes",
                axes.len(),
                config.omega_over_delta.len()
            )));
        }
        if !axes.iter().any(|a| matches!(a, AxisSpec::Range { .. })) {
            return Err(Error::InvalidConfig("at least one axis must be a range".into()));
        }
        for a in &axes {
            if let AxisSpec::Range { steps, lo, hi } = a {
                if *steps < 2 {
                    return Err(Error::InvalidConfig("range axes need at least 2 steps".into()));
                }
                if !(hi > lo) {
                    return Err(Error::InvalidConfig("range axes need hi > lo".into()));
                }
            }
        }
        Ok(SweepPlan { axes, config, max_points: 20_000 })
    }

    pub fn n_points(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    /// Gauge vectors in row-major order, last axis fastest.
    pub fn gauge_points(&self) -> Vec<Vec<T>> {
        let axis_values: Vec<Vec<T>> = self.axes.iter().map(|a| a.values()).collect();
        let total = self.n_points();
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rem = idx;
            let mut etas = vec![T::zero(); axis_values.len()];
            for (k, vals) in axis_values.iter().enumerate().rev() {
                etas[k] = vals[rem % vals.len()];
                rem /= vals.len();
            }
            out.push(etas);
        }
        out
    }
}

/// Calibrated, converged machinery shared by every point of a sweep.
pub struct Prepared<T> {
    pub delta: T,
    pub modes: Vec<ModeSpec<T>>,
    /// Bare basis and tables on the certified grid.
    pub basis: AtomBasis<T>,
    pub elements: MatrixElements<T>,
    pub grid: Grid<T>,
    pub fock: FockSpace,
    /// Certified per-point resolution level.
    pub level: NumericsLevel,
    /// Exact spectrum (lowest `m_energies + 1`) at the converged resolution.
    pub exact_spectrum: Vec<T>,
    pub exact_excitations: Vec<T>,
    pub report: ConvergenceReport<T>,
    /// Drift of the converged spectrum between the dipole and Coulomb
    /// endpoints, in absolute units.
    pub gauge_check_drift: T,
    pub config: PhysicsConfig<T>,
}

fn solver_tol<T: Real>(cfg: &PhysicsConfig<T>, delta: T) -> T {
    cfg.tol_over_delta * delta * T::of(0.05)
}

/// Run the sweep preamble for a configuration: calibrate, converge at the
/// dipole endpoint, verify at the Coulomb endpoint, certify a level.
pub fn prepare<T: Real>(config: &PhysicsConfig<T>) -> Result<Prepared<T>> {
    let n_modes = config.omega_over_delta.len();
    if config.start.cutoffs.len() != n_modes {
        return Err(Error::DimensionMismatch(format!(
            "{} cutoffs for {} modes",
            config.start.cutoffs.len(),
            n_modes
        )));
    }
    // calibration on the start grid fixes the physical system
    let mut cal_grid = config.potential.default_grid()?;
    cal_grid.n_points = config.start.n_points;
    let v = config.potential.on_grid(&cal_grid);
    let cal_basis = solve_atom(&v, &cal_grid, config.m_levels.max(2), config.order)?;
    let cal_elements = matrix_elements(&cal_basis, config.m_levels.max(2), config.order)?;
    let delta = cal_basis.delta();
    let amplitude = calibrate_vacuum_amplitude(&cal_elements, config.g_over_delta * delta)?;
    let modes: Vec<ModeSpec<T>> = config
        .omega_over_delta
        .iter()
        .map(|&w| ModeSpec::new(w * delta, amplitude))
        .collect::<Result<_>>()?;

    // converge the exact spectrum at the dipole endpoint
    let k = config.m_energies + 1;
    let dipole = GaugeVector::dipole(n_modes);
    let mut opts = ConvergeOptions::new(k, config.tol_over_delta * delta);
    opts.max_dim = config.max_dim;
    opts.max_escalations = config.max_escalations;
    opts.eigen = EigenRequest::new(k, solver_tol(config, delta));
    let build = |level: &NumericsLevel| {
        let grid = cal_grid.with_points(level.n_points)?;
        let fock = build_fock_space(&level.cutoffs, config.max_dim)?;
        let full = assemble_full(&grid, &config.potential, &modes, &dipole, &fock, config.order)?;
        Ok(full.matrix)
    };
    let (report, exact_spectrum) = converge(build, config.start.clone(), &opts)?;

    // certified level: the level from which the final grid and cutoff
    // escalations both drifted below tolerance (per-point solves run there)
    let level = if report.converged && report.escalations.len() >= 2 {
        let n = report.escalations.len();
        let before_last_two = if n == 2 {
            config.start.clone()
        } else {
            report.escalations[n - 3].level.clone()
        };
        before_last_two
    } else {
        report.final_level.clone()
    };

    // gauge-invariance verification at the Coulomb endpoint, final level
    let coulomb = GaugeVector::coulomb(n_modes);
    let final_grid = cal_grid.with_points(report.final_level.n_points)?;
    let final_fock = build_fock_space(&report.final_level.cutoffs, config.max_dim)?;
    let full_c = assemble_full(
        &final_grid,
        &config.potential,
        &modes,
        &coulomb,
        &final_fock,
        config.order,
    )?;
    let spec_c = lowest_eigenpairs(&full_c.matrix, &EigenRequest::new(k, solver_tol(config, delta)))?;
    let gauge_check_drift = exact_spectrum
        .iter()
        .zip(&spec_c.values)
        .map(|(a, b)| (*a - *b).abs())
        .fold(T::zero(), T::max);
    if report.converged && gauge_check_drift > T::of(3.0) * config.tol_over_delta * delta {
        return Err(Error::InvalidConfig(format!(
            "gauge-invariance verification failed: dipole vs Coulomb spectra differ by {} \
             (limit {})",
            gauge_check_drift,
            T::of(3.0) * config.tol_over_delta * delta
        )));
    }

    // basis and tables on the certified grid for the per-point models
    let grid = cal_grid.with_points(level.n_points)?;
    let vb = config.potential.on_grid(&grid);
    let basis = solve_atom(&vb, &grid, config.m_levels.max(2), config.order)?;
    let elements = matrix_elements(&basis, config.m_levels, config.order)?;
    let fock = build_fock_space(&level.cutoffs, config.max_dim)?;

    Ok(Prepared {
        delta,
        modes,
        basis,
        elements,
        grid,
        fock,
        level,
        exact_excitations: excitation_energies(&exact_spectrum),
        exact_spectrum,
        report,
        gauge_check_drift,
        config: config.clone(),
    })
}

/// Metrics of a single gauge point, using the prepared machinery.
pub fn evaluate_point<T: Real>(prep: &Prepared<T>, etas: &[T]) -> Result<MetricsReport<T>> {
    let gauge = GaugeVector::new(etas.to_vec())?;
    let cfg = &prep.config;
    let tol = solver_tol(cfg, prep.delta);
    let k = cfg.m_energies + 1;

    // truncated model at this gauge
    let model = truncated_model_from_basis(
        cfg.basis_kind,
        prep.basis.clone(),
        prep.elements.clone(),
        &prep.modes,
        &gauge,
    )?;
    let ht = assemble_truncated(&model, &prep.fock)?;
    let trunc = lowest_eigenpairs(&ht, &EigenRequest::new(k.min(ht.nrows), tol).with_vectors())?;
    let trunc_ground = &trunc.vectors.as_ref().expect("vectors requested")[0];
    let ex_trunc = excitation_energies(&trunc.values);
    let sigma = spectral_deviation(
        &prep.exact_excitations[..cfg.m_energies.min(ex_trunc.len())],
        &ex_trunc[..cfg.m_energies.min(ex_trunc.len())],
    )? / prep.delta;
    let s_trunc = entanglement_entropy(trunc_ground, cfg.m_levels, prep.fock.dim())?;

    // exact ground state in the same gauge
    let full = assemble_full(&prep.grid, &cfg.potential, &prep.modes, &gauge, &prep.fock, cfg.order)?;
    let ground = lowest_eigenpairs(&full.matrix, &EigenRequest::new(1, tol).with_vectors())?;
    let full_ground = &ground.vectors.as_ref().expect("vectors requested")[0];
    let s_full = entanglement_entropy(full_ground, prep.grid.n_points, prep.fock.dim())?;

    let embedded = embed_truncated_state(trunc_ground, &prep.basis, cfg.m_levels, prep.fock.dim())?;
    let fidelity = ground_state_fidelity(&embedded, full_ground)?;

    Ok(MetricsReport {
        etas: etas.to_vec(),
        sigma,
        fidelity,
        s_full,
        s_trunc,
        m_energies: cfg.m_energies,
    })
}

/// One evaluated grid point; failures are flagged, not fatal.
#[derive(Debug, Clone)]
pub struct SweepPoint<T> {
    pub etas: Vec<T>,
    pub report: Option<MetricsReport<T>>,
    pub error: Option<String>,
}

impl<T: Real> SweepPoint<T> {
    pub fn converged(&self) -> bool {
        self.report.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult<T> {
    pub points: Vec<SweepPoint<T>>,
    pub axes: Vec<AxisSpec<T>>,
    pub delta: T,
    pub exact_excitations: Vec<T>,
    pub convergence: ConvergenceReport<T>,
    pub gauge_check_drift: T,
    pub level: NumericsLevel,
}

/// Objectives understood by [`find_optimal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimalityMetric {
    Sigma,
    Infidelity,
    /// `|S_full - S_trunc|`
    EntropyGap,
}

/// Run every grid point of the plan. Point failures are recorded on the
/// point and the sweep continues.
pub fn run_sweep<T: Real>(plan: &SweepPlan<T>) -> Result<SweepResult<T>> {
    if plan.n_points() > plan.max_points {
        return Err(Error::CapacityExceeded { dim: plan.n_points(), budget: plan.max_points });
    }
    let prep = prepare(&plan.config)?;
    let gauges = plan.gauge_points();
    let points: Vec<SweepPoint<T>> = gauges
        .par_iter()
        .map(|etas| match evaluate_point(&prep, etas) {
            Ok(report) => SweepPoint { etas: etas.clone(), report: Some(report), error: None },
            Err(e) => SweepPoint { etas: etas.clone(), report: None, error: Some(e.to_string()) },
        })
        .collect();
    Ok(SweepResult {
        points,
        axes: plan.axes.clone(),
        delta: prep.delta,
        exact_excitations: prep.exact_excitations.clone(),
        convergence: prep.report.clone(),
        gauge_check_drift: prep.gauge_check_drift,
        level: prep.level.clone(),
    })
}

/// Grid argmin of a metric; ties within 1e-10 break toward the
/// lexicographically smallest gauge vector.
pub fn find_optimal<T: Real>(
    result: &SweepResult<T>,
    metric: OptimalityMetric,
) -> Result<(Vec<T>, T)> {
    let value = |r: &MetricsReport<T>| match metric {
        OptimalityMetric::Sigma => r.sigma,
        OptimalityMetric::Infidelity => T::one() - r.fidelity,
        OptimalityMetric::EntropyGap => (r.s_full - r.s_trunc).abs(),
    };
    let mut best: Option<(Vec<T>, T)> = None;
    let tie = T::of(1e-10);
    for point in &result.points {
        let Some(report) = &point.report else { continue };
        let v = value(report);
        match &mut best {
            None => best = Some((point.etas.clone(), v)),
            Some((etas, bv)) => {
                if v < *bv - tie
                    || ((v - *bv).abs() <= tie
                        && point
                            .etas
                            .iter()
                            .zip(etas.iter())
                            .find_map(|(a, b)| {
                                if (*a - *b).abs() > tie {
                                    Some(*a < *b)
                                } else {
                                    None
                                }
                            })
                            .unwrap_or(false))
                {
                    *etas = point.etas.clone();
                    *bv = v;
                }
            }
        }
    }
    best.ok_or(Error::AllPointsFlagged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauge_points_row_major_last_axis_fastest() {
        let config = PhysicsConfig::new(
            PotentialSpec::double_well_from_gamma(64.0).unwrap(),
            vec![1.0, 20.0],
            0.6,
        );
        let plan = SweepPlan::new(
            vec![AxisSpec::Fixed(1.0), AxisSpec::Range { lo: 0.0, hi: 1.0, steps: 3 }],
            config,
        )
        .unwrap();
        assert_eq!(plan.n_points(), 3);
        let pts = plan.gauge_points();
        assert_eq!(pts[0], vec![1.0, 0.0]);
        assert_eq!(pts[1], vec![1.0, 0.5]);
        assert_eq!(pts[2], vec![1.0, 1.0]);
    }

    #[test]
    fn plan_validation() {
        let config = PhysicsConfig::new(
            PotentialSpec::double_well_from_gamma(64.0).unwrap(),
            vec![1.0],
            0.6,
        );
        assert!(SweepPlan::new(vec![AxisSpec::Fixed(1.0)], config.clone()).is_err());
        assert!(SweepPlan::new(
            vec![AxisSpec::Range { lo: 0.0, hi: 1.0, steps: 1 }],
            config.clone()
        )
        .is_err());
        assert!(SweepPlan::new(
            vec![AxisSpec::Range { lo: 0.0, hi: 1.0, steps: 5 }],
            config
        )
        .is_ok());
    }

    #[test]
    fn find_optimal_tie_breaks_lexicographically() {
        let mk = |etas: Vec<f64>, sigma: f64| SweepPoint {
            etas: etas.clone(),
            report: Some(MetricsReport {
                etas,
                sigma,
                fidelity: 0.9,
                s_full: 0.2,
                s_trunc: 0.1,
                m_energies: 7,
            }),
            error: None,
        };
        let result = SweepResult {
            points: vec![mk(vec![0.5, 0.5], 1.0), mk(vec![0.0, 1.0], 1.0), mk(vec![0.0, 0.5], 1.0)],
            axes: vec![],
            delta: 1.0,
            exact_excitations: vec![],
            convergence: ConvergenceReport {
                final_level: NumericsLevel { n_points: 16, cutoffs: vec![1] },
                escalations: vec![],
                converged: true,
            },
            gauge_check_drift: 0.0,
            level: NumericsLevel { n_points: 16, cutoffs: vec![1] },
        };
        let (etas, v) = find_optimal(&result, OptimalityMetric::Sigma).unwrap();
        assert_eq!(etas, vec![0.0, 0.5]);
        assert_eq!(v, 1.0);
        // all flagged -> error
        let empty = SweepResult {
            points: vec![SweepPoint { etas: vec![0.0], report: None, error: Some("x".into()) }],
            ..result
        };
        assert!(matches!(find_optimal(&empty, OptimalityMetric::Sigma), Err(Error::AllPointsFlagged)));
    }
}
