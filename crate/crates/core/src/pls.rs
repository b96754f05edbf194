//! Observability constant
//!
//! ```text
//! κ(bands, E) = inf { ‖f‖²_{L²_α(E)} / ‖f‖²_{L²_α} : supp F_α f ⊂ ∪ bands }
//! ```
//!
//! The spectral side is discretized by a modal basis: on each unit band
//! `g_p(y) = P_p(y) / (√c_α y^{α+1/2})` with `P_p` the orthonormal Legendre
//! polynomials of the band, so the `g_p` are orthonormal in `L²(μ_α)` and the
//! spectral Gram matrix is the identity. Their transforms
//!
//! ```text
//! φ_p(t) = √c_α ∫_band P_p(y) y^{α+1/2} j_α(2πty) dy
//! ```
//!
//! are evaluated by a Gauss-Legendre rule whose order grows with t. With
//! `B = ∫_{E∩[0,T]} φ φᵀ dμ_α` and `G = ∫_{[0,T]} φ φᵀ dμ_α`:
//!
//! * `λ_min(B)` bounds κ(E) from below. It tends to 0 as the basis grows at
//!   fixed T, because rich enough bases can push mass past T.
//! * `λ_min(B + I - G)` is κ of `E ∪ [T, ∞)`, an upper bracket that is stable
//!   under basis refinement and decreases to κ(E) as T grows. This is the
//!   reported estimate.
//!
//! Near-extremal functions for periodic sets concentrate their spectrum at
//! both band edges and spread out in t, so the upper bracket approaches κ(E)
//! slowly in T.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::BesselOrder;
use crate::error::{Error, Result};
use crate::measure::{c_alpha, RadialSet};
use crate::numeric::{orthonormal_legendre, symmetric_min_eigen, GaussLegendre};
use crate::rng;
use crate::transform::{band_nodes_for, check_bands, GridOptions, RadialGrid};

/// Relative change under `band_dim` doubling above which a result is flagged.
pub const CONVERGENCE_TOLERANCE: f64 = 0.05;

/// Largest accepted Hermiticity defect `‖B - Bᵀ‖ / ‖B‖`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

const MIN_BAND_DIM: usize = 16;
const CHUNK: usize = 2048;

/// Discretization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlsConfig {
    /// Modes per band.
    pub band_dim: usize,
    pub t_max: f64,
    pub nodes_per_panel: usize,
    /// Largest accepted mass of the minimizer beyond `t_max`.
    pub tail_tolerance: f64,
    /// Also solve with doubled `band_dim` and doubled `t_max`.
    pub refine: bool,
}

impl Default for PlsConfig {
    fn default() -> Self {
        PlsConfig {
            band_dim: 16,
            t_max: 200.0,
            nodes_per_panel: 6,
            tail_tolerance: 0.05,
            refine: false,
        }
    }
}

/// The eigenproblem data for one set of bands.
#[derive(Debug, Clone)]
pub struct ConcentrationProblem {
    pub alpha: f64,
    pub bands: Vec<[f64; 2]>,
    pub set: RadialSet,
    pub grid: Arc<RadialGrid>,
    pub band_dim: usize,
    pub tail_tolerance: f64,
}

impl ConcentrationProblem {
    pub fn new(alpha: f64, bands: &[[f64; 2]], set: &RadialSet, config: &PlsConfig) -> Result<Self> {
        BesselOrder::new(alpha)?;
        let bands = check_bands(bands)?;
        if config.band_dim < MIN_BAND_DIM {
            return Err(Error::invalid(
                "band_dim",
                format!("need at least {MIN_BAND_DIM} modes per band, got {}", config.band_dim),
            ));
        }
        if !(config.t_max > 0.0) || !(config.tail_tolerance > 0.0) {
            return Err(Error::invalid("t_max", "truncation and tail tolerance must be positive"));
        }
        let max_freq = bands.iter().map(|b| b[1]).fold(0.0, f64::max);
        let breakpoints = set
            .pieces(0.0, config.t_max)
            .into_iter()
            .flat_map(|iv| [iv[0], iv[1]])
            .collect();
        let mut options = GridOptions::for_frequency(max_freq).with_breakpoints(breakpoints);
        options.nodes_per_panel = config.nodes_per_panel;
        let grid = Arc::new(RadialGrid::new(alpha, config.t_max, &options)?);
        Ok(ConcentrationProblem {
            alpha,
            bands,
            set: set.clone(),
            grid,
            band_dim: config.band_dim,
            tail_tolerance: config.tail_tolerance,
        })
    }

    pub fn dimension(&self) -> usize {
        self.band_dim * self.bands.len()
    }
}

/// Outcome of one eigensolve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    /// κ of `E ∪ [T, ∞)`.
    pub kappa: f64,
    /// `λ_min(B)`: every band-limited f keeps at least this fraction of its
    /// mass in `E ∩ [0, T]`.
    pub kappa_lower: f64,
    /// Mass of the normalized minimizer beyond `t_max`, i.e. how much of the
    /// estimate rests on the filled-in region.
    pub tail_bound: f64,
    pub hermitian_defect: f64,
}

/// Band rule of a given order with the modal weights folded in:
/// `m[b][p·n + q] = √c_α w_q P_p(y_q) y_q^{α+1/2}` on band b.
struct ModalRule {
    nodes: Vec<Vec<f64>>,
    modal: Vec<Vec<f64>>,
    n: usize,
}

impl ModalRule {
    fn new(alpha: f64, bands: &[[f64; 2]], dim: usize, n: usize) -> Self {
        let rule = GaussLegendre::new(n);
        let sc = c_alpha(alpha).sqrt();
        let mut nodes = Vec::with_capacity(bands.len());
        let mut modal = Vec::with_capacity(bands.len());
        let mut leg = vec![0.0; dim];
        for b in bands {
            let mut ys = Vec::with_capacity(n);
            let mut ws = Vec::with_capacity(n);
            rule.push_mapped(b[0], b[1], &mut ys, &mut ws);
            let mut m = vec![0.0; dim * n];
            for (q, (&y, &w)) in ys.iter().zip(&ws).enumerate() {
                orthonormal_legendre(dim, b[0], b[1], y, &mut leg);
                let amp = sc * w * y.powf(alpha + 0.5);
                for p in 0..dim {
                    m[p * n + q] = amp * leg[p];
                }
            }
            nodes.push(ys);
            modal.push(m);
        }
        ModalRule { nodes, modal, n }
    }
}

fn rule_order(t: f64, dim: usize) -> usize {
    band_nodes_for(t, dim).div_ceil(16) * 16
}

/// Gram matrices of the modal transforms over `E ∩ [0, T]` and over `[0, T]`.
fn gram_matrices(problem: &ConcentrationProblem) -> (DMatrix<f64>, DMatrix<f64>) {
    let grid = &problem.grid;
    let dim = problem.band_dim;
    let total = problem.dimension();
    let order = BesselOrder::new(problem.alpha).expect("validated order");

    let mut rules: BTreeMap<usize, ModalRule> = BTreeMap::new();
    for &t in &grid.nodes {
        let n = rule_order(t, dim);
        rules
            .entry(n)
            .or_insert_with(|| ModalRule::new(problem.alpha, &problem.bands, dim, n));
    }

    let chunks: Vec<usize> = (0..grid.len()).step_by(CHUNK).collect();
    let partials: Vec<(DMatrix<f64>, DMatrix<f64>)> = chunks
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(grid.len());
            let rows = end - start;
            let mut inside = DMatrix::<f64>::zeros(rows, total);
            let mut outside = DMatrix::<f64>::zeros(rows, total);
            let mut kernel = Vec::new();
            for (r, i) in (start..end).enumerate() {
                let t = grid.nodes[i];
                let rule = &rules[&rule_order(t, dim)];
                let sw = grid.weights[i].sqrt();
                let target = if problem.set.contains(t) {
                    &mut inside
                } else {
                    &mut outside
                };
                for (b, ys) in rule.nodes.iter().enumerate() {
                    kernel.clear();
                    kernel.extend(ys.iter().map(|&y| order.eval(2.0 * PI * t * y)));
                    let m = &rule.modal[b];
                    for p in 0..dim {
                        let row = &m[p * rule.n..(p + 1) * rule.n];
                        let phi: f64 = row.iter().zip(&kernel).map(|(a, k)| a * k).sum();
                        target[(r, b * dim + p)] = sw * phi;
                    }
                }
            }
            let b_part = inside.tr_mul(&inside);
            let c_part = outside.tr_mul(&outside);
            (b_part, c_part)
        })
        .collect();
    let (b, c) = tree_sum(&partials);
    let g = &b + &c;
    (b, g)
}

fn tree_sum(parts: &[(DMatrix<f64>, DMatrix<f64>)]) -> (DMatrix<f64>, DMatrix<f64>) {
    match parts.len() {
        0 => unreachable!("grid has nodes"),
        1 => parts[0].clone(),
        n => {
            let (l, r) = parts.split_at(n / 2);
            let (a, b) = tree_sum(l);
            let (c, d) = tree_sum(r);
            (a + c, b + d)
        }
    }
}

/// Bracketing estimate of κ, see the module docs. An empty set gives 0.
pub fn kappa(problem: &ConcentrationProblem) -> Result<KappaEstimate> {
    kappa_with_minimizer(problem).map(|(k, _)| k)
}

/// [`kappa`] together with the minimizing modal coefficients, normalized to
/// unit spectral norm. Mode `p` of band `b` is entry `b·band_dim + p`.
pub fn kappa_with_minimizer(problem: &ConcentrationProblem) -> Result<(KappaEstimate, DVector<f64>)> {
    if problem.set.is_empty() {
        let mut v = DVector::zeros(problem.dimension());
        v[0] = 1.0;
        let zero = KappaEstimate {
            kappa: 0.0,
            kappa_lower: 0.0,
            tail_bound: 0.0,
            hermitian_defect: 0.0,
        };
        return Ok((zero, v));
    }
    let (b, g) = gram_matrices(problem);
    let norm = b.norm();
    let defect = if norm > 0.0 {
        (&b - b.transpose()).norm() / norm
    } else {
        0.0
    };
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::NotConverged(format!(
            "concentration matrix not symmetric: defect {defect:.3e}"
        )));
    }
    let b = (&b + b.transpose()) * 0.5;
    let g = (&g + g.transpose()) * 0.5;
    let (lower, _) = symmetric_min_eigen(b.clone());
    // κ of E ∪ [T, ∞): the Gram matrix of [T, ∞) is I - G
    let filled = &b + DMatrix::<f64>::identity(b.nrows(), b.ncols()) - &g;
    let (lambda, v) = symmetric_min_eigen(filled);
    if !lambda.is_finite() || !lower.is_finite() {
        return Err(Error::NotConverged("eigensolver returned a non-finite value".into()));
    }
    let tail = (1.0 - (v.transpose() * &g * &v)[(0, 0)]).max(0.0);
    if tail > problem.tail_tolerance {
        return Err(Error::TailTooLarge {
            tail,
            tolerance: problem.tail_tolerance,
        });
    }
    let estimate = KappaEstimate {
        kappa: lambda.clamp(0.0, 1.0),
        kappa_lower: lower.clamp(0.0, 1.0),
        tail_bound: tail,
        hermitian_defect: defect,
    };
    let unit = v.normalize();
    Ok((estimate, unit))
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    /// Left edges of the bands.
    pub positions: Vec<f64>,
    pub kappa: f64,
    pub tail_bound: f64,
    pub band_dim: usize,
    pub t_max: f64,
    /// κ with doubled `band_dim`, when refinement was requested.
    pub kappa_band_refined: Option<f64>,
    /// κ with doubled `t_max`, when refinement was requested.
    pub kappa_t_refined: Option<f64>,
    /// Relative change under refinement within [`CONVERGENCE_TOLERANCE`].
    pub converged: Option<bool>,
}

impl SweepEntry {
    /// Largest relative change of κ under either refinement.
    pub fn refinement_change(&self) -> Option<f64> {
        let a = self.kappa_band_refined?;
        let b = self.kappa_t_refined?;
        let scale = self.kappa.max(f64::MIN_POSITIVE);
        Some(f64::max((a - self.kappa).abs(), (b - self.kappa).abs()) / scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub min_kappa: f64,
    pub max_kappa: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub alpha: f64,
    pub set: RadialSet,
    pub seed: u64,
    pub config: PlsConfig,
    pub entries: Vec<SweepEntry>,
    pub summary: SweepSummary,
}

impl SweepResult {
    fn new(alpha: f64, set: &RadialSet, seed: u64, config: &PlsConfig, entries: Vec<SweepEntry>) -> Self {
        let min = entries.iter().map(|e| e.kappa).fold(f64::INFINITY, f64::min);
        let max = entries.iter().map(|e| e.kappa).fold(0.0, f64::max);
        SweepResult {
            alpha,
            set: set.clone(),
            seed,
            config: config.clone(),
            entries,
            summary: SweepSummary {
                min_kappa: min,
                max_kappa: max,
                ratio: if min > 0.0 { max / min } else { f64::INFINITY },
            },
        }
    }

    /// `positions,kappa,tail_bound,band_dim,t_max,kappa_band_refined,kappa_t_refined,converged`
    /// with positions joined by `;`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "positions",
            "kappa",
            "tail_bound",
            "band_dim",
            "t_max",
            "kappa_band_refined",
            "kappa_t_refined",
            "converged",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        for e in &self.entries {
            let pos: Vec<String> = e.positions.iter().map(|p| p.to_string()).collect();
            w.write_record([
                pos.join(";"),
                format!("{:.12e}", e.kappa),
                format!("{:.6e}", e.tail_bound),
                e.band_dim.to_string(),
                e.t_max.to_string(),
                opt(e.kappa_band_refined),
                opt(e.kappa_t_refined),
                e.converged.map(|c| c.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn solve_entry(alpha: f64, positions: &[f64], set: &RadialSet, config: &PlsConfig) -> Result<SweepEntry> {
    let bands: Vec<[f64; 2]> = positions.iter().map(|&p| [p, p + 1.0]).collect();
    let base = kappa(&ConcentrationProblem::new(alpha, &bands, set, config)?)?;
    let mut entry = SweepEntry {
        positions: positions.to_vec(),
        kappa: base.kappa,
        tail_bound: base.tail_bound,
        band_dim: config.band_dim,
        t_max: config.t_max,
        kappa_band_refined: None,
        kappa_t_refined: None,
        converged: None,
    };
    if config.refine {
        let finer = PlsConfig {
            band_dim: 2 * config.band_dim,
            refine: false,
            ..config.clone()
        };
        let longer = PlsConfig {
            t_max: 2.0 * config.t_max,
            refine: false,
            ..config.clone()
        };
        entry.kappa_band_refined = Some(kappa(&ConcentrationProblem::new(alpha, &bands, set, &finer)?)?.kappa);
        entry.kappa_t_refined = Some(kappa(&ConcentrationProblem::new(alpha, &bands, set, &longer)?)?.kappa);
        entry.converged = entry.refinement_change().map(|c| c <= CONVERGENCE_TOLERANCE);
    }
    Ok(entry)
}

/// κ for the single band `[R, R+1]` at each R.
pub fn sweep_r(alpha: f64, set: &RadialSet, r_list: &[f64], config: &PlsConfig, seed: u64) -> Result<SweepResult> {
    if r_list.is_empty() || r_list.iter().any(|&r| !(r > 0.0)) || r_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("r_list", "R values must be positive and ascending"));
    }
    let entries = r_list
        .par_iter()
        .map(|&r| solve_entry(alpha, &[r], set, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult::new(alpha, set, seed, config, entries))
}

/// κ for N disjoint unit bands at each tuple of left edges. Restricted to
/// half-integer orders.
pub fn multiband_sweep(
    alpha: f64,
    positions: &[Vec<f64>],
    set: &RadialSet,
    config: &PlsConfig,
    seed: u64,
) -> Result<SweepResult> {
    let order = BesselOrder::new(alpha)?;
    if !order.is_half_integer() {
        return Err(Error::invalid(
            "alpha",
            format!("multiband estimates need α - 1/2 ∈ ℕ, got {alpha}"),
        ));
    }
    if positions.is_empty() {
        return Err(Error::invalid("positions", "no position samples"));
    }
    for tuple in positions {
        if tuple.is_empty() {
            return Err(Error::invalid("positions", "empty position tuple"));
        }
        let bands: Vec<[f64; 2]> = tuple.iter().map(|&p| [p, p + 1.0]).collect();
        check_bands(&bands)?;
    }
    let entries = positions
        .par_iter()
        .map(|tuple| solve_entry(alpha, tuple, set, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult::new(alpha, set, seed, config, entries))
}

/// `count` tuples of `n` left edges in `[0, max_position]` whose unit bands
/// are pairwise disjoint. Tuple i uses stream i of `seed`.
pub fn random_positions(n: usize, count: usize, max_position: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 || !(max_position + 1.0 >= 2.0 * n as f64) {
        return Err(Error::invalid(
            "positions",
            format!("cannot place {n} disjoint unit bands in [0, {}]", max_position + 1.0),
        ));
    }
    (0..count)
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            for _ in 0..10_000 {
                let mut tuple: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=max_position)).collect();
                tuple.sort_by(f64::total_cmp);
                if tuple.windows(2).all(|w| w[1] - w[0] >= 1.0) {
                    return Ok(tuple);
                }
            }
            Err(Error::NotConverged("rejection sampling of band positions failed".into()))
        })
        .collect()
}

/// The Ghobber-Jaming constant
/// `C = (3/2) (300·9^α/γ)^{e}`, `e = (160√3π/(2 ln 2)) R + α ln 3/ln 2 + 1`,
/// kept in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GjConstant {
    /// `160√3π / (2 ln 2)`.
    pub slope: f64,
    pub exponent: f64,
    /// `ln(300·9^α/γ)`.
    pub log_base: f64,
    /// `ln C`.
    pub log_c: f64,
    pub log10_c: f64,
    /// `1/C`, zero when it underflows.
    pub kappa_lower_bound: f64,
}

pub fn gj_constant(alpha: f64, gamma: f64, r: f64) -> Result<GjConstant> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", format!("the constant needs α ≥ 0, got {alpha}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid("gamma", format!("need 0 < γ ≤ 1, got {gamma}")));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid("R", "bandwidth must be positive"));
    }
    let ln2 = std::f64::consts::LN_2;
    let slope = 160.0 * 3f64.sqrt() * PI / (2.0 * ln2);
    let exponent = slope * r + alpha * 3f64.ln() / ln2 + 1.0;
    let log_base = 300f64.ln() + alpha * 9f64.ln() - gamma.ln();
    let log_c = 1.5f64.ln() + exponent * log_base;
    Ok(GjConstant {
        slope,
        exponent,
        log_base,
        log_c,
        log10_c: log_c / std::f64::consts::LN_10,
        kappa_lower_bound: (-log_c).exp(),
    })
}
