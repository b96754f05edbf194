//! Discrete Fourier-Bessel transform
//!
//! ```text
//! F_α f(y) = ∫_0^∞ f(x) j_α(2πxy) dμ_α(x)
//! ```
//!
//! by composite Gauss-Legendre quadrature. `F_α` is its own inverse and an
//! isometry of `L²(μ_α)`, so synthesis from a spectral profile uses the same
//! kernel. All reductions use [`pairwise_sum`] so results do not depend on
//! the thread count.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::BesselOrder;
use crate::error::{Error, Result};
use crate::measure::{c_alpha, mu_alpha_interval};
use crate::numeric::{orthonormal_legendre, pairwise_sum, GaussLegendre};
use crate::rng;

/// Minimum quadrature nodes per kernel wavelength on the radial side.
pub const MIN_NODES_PER_WAVELENGTH: f64 = 8.0;

/// Default Gauss-Legendre order per radial panel.
pub const DEFAULT_NODES_PER_PANEL: usize = 6;

/// Minimum nodes per unit band on the spectral side.
pub const MIN_BAND_NODES: usize = 32;

/// Radial quadrature options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    /// Upper bound on panel width.
    pub panel_width: f64,
    pub nodes_per_panel: usize,
    /// Panel boundaries are aligned to these points.
    #[serde(default)]
    pub breakpoints: Vec<f64>,
}

impl GridOptions {
    /// Panels no wider than `min(1, 1/(4 max_freq))`.
    pub fn for_frequency(max_freq: f64) -> Self {
        let width = if max_freq > 0.0 {
            f64::min(1.0, 0.25 / max_freq)
        } else {
            1.0
        };
        GridOptions {
            panel_width: width,
            nodes_per_panel: DEFAULT_NODES_PER_PANEL,
            breakpoints: Vec::new(),
        }
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }
}

/// Composite Gauss-Legendre nodes on `[0, t_max]` with weights that include
/// the density `c_α x^{2α+1}`. The panel touching the origin is split
/// geometrically so the weight singularity of non half-integer orders is
/// integrated accurately; no node sits at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub alpha: f64,
    pub t_max: f64,
    pub nodes: Vec<f64>,
    /// Weights for `dμ_α`.
    pub weights: Vec<f64>,
    /// Plain Lebesgue weights for `dx`.
    pub dx_weights: Vec<f64>,
    pub panel_width: f64,
    pub nodes_per_panel: usize,
}

impl RadialGrid {
    pub fn new(alpha: f64, t_max: f64, options: &GridOptions) -> Result<Self> {
        BesselOrder::new(alpha)?;
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::invalid("t_max", "truncation radius must be positive"));
        }
        if !(options.panel_width > 0.0) || options.nodes_per_panel == 0 {
            return Err(Error::invalid("grid", "panel width and node count must be positive"));
        }
        let rule = GaussLegendre::new(options.nodes_per_panel);
        let mut cuts: Vec<f64> = options
            .breakpoints
            .iter()
            .copied()
            .filter(|&b| b > 0.0 && b < t_max)
            .collect();
        cuts.push(0.0);
        cuts.push(t_max);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * t_max);

        let mut nodes = Vec::new();
        let mut dx_weights = Vec::new();
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let panels = ((b - a) / options.panel_width).ceil().max(1.0) as usize;
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + h * p as f64;
                let hi = if p + 1 == panels { b } else { lo + h };
                if lo == 0.0 {
                    push_graded(&rule, hi, alpha, &mut nodes, &mut dx_weights);
                } else {
                    rule.push_mapped(lo, hi, &mut nodes, &mut dx_weights);
                }
            }
        }
        let c = c_alpha(alpha);
        let weights = nodes
            .iter()
            .zip(&dx_weights)
            .map(|(&x, &w)| w * c * x.powf(2.0 * alpha + 1.0))
            .collect();
        Ok(RadialGrid {
            alpha,
            t_max,
            nodes,
            weights,
            dx_weights,
            panel_width: options.panel_width,
            nodes_per_panel: options.nodes_per_panel,
        })
    }

    /// Grid resolving kernels up to frequency `max_freq`.
    pub fn for_frequency(alpha: f64, t_max: f64, max_freq: f64) -> Result<Self> {
        RadialGrid::new(alpha, t_max, &GridOptions::for_frequency(max_freq))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes per wavelength `1/freq` of `t ↦ j_α(2π t freq)`.
    pub fn nodes_per_wavelength(&self, freq: f64) -> f64 {
        if freq <= 0.0 {
            return f64::INFINITY;
        }
        self.nodes_per_panel as f64 / (self.panel_width * freq)
    }

    pub(crate) fn check_resolves(&self, freq: f64) -> Result<()> {
        let npw = self.nodes_per_wavelength(freq);
        if npw < MIN_NODES_PER_WAVELENGTH {
            return Err(Error::UnderResolved(format!(
                "radial grid has {npw:.2} nodes per wavelength at frequency {freq}, need {MIN_NODES_PER_WAVELENGTH}"
            )));
        }
        Ok(())
    }

    /// The same nodes with weights for another order.
    pub fn reweighted(&self, alpha: f64) -> Result<Self> {
        BesselOrder::new(alpha)?;
        let c = c_alpha(alpha);
        let weights = self
            .nodes
            .iter()
            .zip(&self.dx_weights)
            .map(|(&x, &w)| w * c * x.powf(2.0 * alpha + 1.0))
            .collect();
        Ok(RadialGrid {
            alpha,
            weights,
            ..self.clone()
        })
    }

    /// `μ_α([0, t_max])` in closed form, for checking the weights.
    pub fn exact_mass(&self) -> f64 {
        mu_alpha_interval(self.alpha, 0.0, self.t_max).expect("validated order")
    }
}

fn push_graded(rule: &GaussLegendre, hi: f64, alpha: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
    // ∫_0^ε x^{2α+1} ~ ε^{2α+2}; stop once that is below 2^-60 of the panel
    let levels = (60.0 / (2.0 * alpha + 2.0)).ceil() as i32;
    let start = nodes.len();
    let mut right = hi;
    for _ in 0..levels {
        let left = 0.5 * right;
        rule.push_mapped(left, right, nodes, weights);
        right = left;
    }
    rule.push_mapped(0.0, right, nodes, weights);
    // ascending order
    let n = rule.len();
    let chunks = nodes.len() - start;
    let mut reordered_x = Vec::with_capacity(chunks);
    let mut reordered_w = Vec::with_capacity(chunks);
    for block in (0..chunks / n).rev() {
        let lo = start + block * n;
        reordered_x.extend_from_slice(&nodes[lo..lo + n]);
        reordered_w.extend_from_slice(&weights[lo..lo + n]);
    }
    nodes.truncate(start);
    weights.truncate(start);
    nodes.extend(reordered_x);
    weights.extend(reordered_w);
}

/// Values of a function on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<Complex64>,
}

impl RadialFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(
                "values",
                format!("{} values for {} nodes", values.len(), grid.len()),
            ));
        }
        Ok(RadialFunction { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes.iter().map(|&x| f(x)).collect();
        RadialFunction { grid, values }
    }

    /// `‖f‖²` in `L²(μ_α)` on `[0, t_max]`.
    pub fn norm_sq(&self) -> f64 {
        let terms: Vec<f64> = self
            .grid
            .weights
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.norm_sqr())
            .collect();
        pairwise_sum(&terms)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_columns(out, &self.grid.nodes, &self.grid.weights, &self.values)
    }
}

/// A spectral profile `g` on disjoint unit bands, sampled at per-band
/// Gauss-Legendre nodes. Weights include `c_α y^{2α+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandProfile {
    pub alpha: f64,
    pub bands: Vec<[f64; 2]>,
    pub nodes_per_band: usize,
    pub band_nodes: Vec<f64>,
    pub band_weights: Vec<f64>,
    pub samples: Vec<Complex64>,
}

/// Validate disjoint unit bands in `[0, ∞)`; returns them sorted.
pub fn check_bands(bands: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    if bands.is_empty() {
        return Err(Error::invalid("bands", "at least one band is required"));
    }
    let mut sorted = bands.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
    for b in &sorted {
        if !(b[0] >= 0.0) || ((b[1] - b[0]) - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "bands",
                format!("bands must be unit intervals in [0, ∞), got [{}, {}]", b[0], b[1]),
            ));
        }
    }
    for w in sorted.windows(2) {
        if w[1][0] < w[0][1] {
            return Err(Error::invalid(
                "bands",
                format!(
                    "bands [{}, {}] and [{}, {}] overlap",
                    w[0][0], w[0][1], w[1][0], w[1][1]
                ),
            ));
        }
    }
    Ok(sorted)
}

/// Gauss-Legendre order per unit band that integrates `g(y) j_α(2π t y)`
/// accurately for `t ≤ t_max` when `g` is a polynomial of degree `degree`
/// times a smooth factor.
pub fn band_nodes_for(t_max: f64, degree: usize) -> usize {
    // e^{2πity} over a unit band needs polynomial degree ≈ πt plus margin
    let need = 0.575 * (PI * t_max + degree as f64) + 20.0;
    (need.ceil() as usize).max(MIN_BAND_NODES)
}

impl BandProfile {
    pub fn from_fn(
        alpha: f64,
        bands: &[[f64; 2]],
        nodes_per_band: usize,
        mut g: impl FnMut(f64) -> Complex64,
    ) -> Result<Self> {
        let mut profile = BandProfile::zeros(alpha, bands, nodes_per_band)?;
        for (s, &y) in profile.samples.iter_mut().zip(&profile.band_nodes) {
            *s = g(y);
        }
        Ok(profile)
    }

    /// Complex Gaussian combination of Legendre polynomials of degree
    /// `≤ degree` on each band, scaled to unit norm.
    pub fn random_legendre(
        alpha: f64,
        bands: &[[f64; 2]],
        nodes_per_band: usize,
        degree: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut profile = BandProfile::zeros(alpha, bands, nodes_per_band)?;
        let mut gen = rng::root(seed);
        let mut basis = vec![0.0; degree + 1];
        for (b, band) in profile.bands.clone().iter().enumerate() {
            let coeffs: Vec<Complex64> = (0..=degree)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut gen);
                    let im: f64 = StandardNormal.sample(&mut gen);
                    Complex64::new(re, im)
                })
                .collect();
            let range = b * nodes_per_band..(b + 1) * nodes_per_band;
            for i in range {
                orthonormal_legendre(degree + 1, band[0], band[1], profile.band_nodes[i], &mut basis);
                profile.samples[i] = coeffs.iter().zip(&basis).map(|(c, p)| c * p).sum();
            }
        }
        let scale = 1.0 / profile.norm_sq().sqrt();
        profile.samples.iter_mut().for_each(|v| *v *= scale);
        Ok(profile)
    }

    pub fn zeros(alpha: f64, bands: &[[f64; 2]], nodes_per_band: usize) -> Result<Self> {
        BesselOrder::new(alpha)?;
        let bands = check_bands(bands)?;
        if nodes_per_band < MIN_BAND_NODES {
            return Err(Error::invalid(
                "nodes_per_band",
                format!("need at least {MIN_BAND_NODES} nodes per band"),
            ));
        }
        let rule = GaussLegendre::new(nodes_per_band);
        let mut band_nodes = Vec::new();
        let mut dy = Vec::new();
        for b in &bands {
            rule.push_mapped(b[0], b[1], &mut band_nodes, &mut dy);
        }
        let c = c_alpha(alpha);
        let band_weights = band_nodes
            .iter()
            .zip(&dy)
            .map(|(&y, &w)| w * c * y.powf(2.0 * alpha + 1.0))
            .collect();
        let samples = vec![Complex64::new(0.0, 0.0); band_nodes.len()];
        Ok(BandProfile {
            alpha,
            bands,
            nodes_per_band,
            band_nodes,
            band_weights,
            samples,
        })
    }

    /// `‖g‖²` in `L²(μ_α)` over the bands.
    pub fn norm_sq(&self) -> f64 {
        let terms: Vec<f64> = self
            .band_weights
            .iter()
            .zip(&self.samples)
            .map(|(w, v)| w * v.norm_sqr())
            .collect();
        pairwise_sum(&terms)
    }

    pub fn max_edge(&self) -> f64 {
        self.bands.iter().map(|b| b[1]).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_columns(out, &self.band_nodes, &self.band_weights, &self.samples)
    }
}

fn kernel_sum(
    order: &BesselOrder,
    x: f64,
    nodes: &[f64],
    weights: &[f64],
    values: &[Complex64],
    buf: &mut Vec<Complex64>,
) -> Complex64 {
    buf.clear();
    buf.extend(
        nodes
            .iter()
            .zip(weights)
            .zip(values)
            .map(|((&y, &w), &v)| v * (w * order.eval(2.0 * PI * x * y))),
    );
    pairwise_sum(buf)
}

/// `F_α f` at the requested frequencies.
pub fn forward(f: &RadialFunction, freqs: &[f64]) -> Result<Vec<Complex64>> {
    if let Some(&bad) = freqs.iter().find(|&&y| !(y >= 0.0)) {
        return Err(Error::invalid("freqs", format!("frequencies must be ≥ 0, got {bad}")));
    }
    let max = freqs.iter().copied().fold(0.0, f64::max);
    f.grid.check_resolves(max)?;
    let order = BesselOrder::new(f.grid.alpha)?;
    let g = &f.grid;
    Ok(freqs
        .par_iter()
        .map_init(Vec::new, |buf, &y| {
            kernel_sum(&order, y, &g.nodes, &g.weights, &f.values, buf)
        })
        .collect())
}

/// Inverse transform of a band profile sampled on `grid`:
/// `f(t) = Σ_p w_p g(y_p) j_α(2π t y_p)`.
pub fn synthesize_bandlimited(profile: &BandProfile, grid: Arc<RadialGrid>) -> Result<RadialFunction> {
    if (profile.alpha - grid.alpha).abs() > 0.0 {
        return Err(Error::invalid("grid", "grid and profile orders differ"));
    }
    grid.check_resolves(profile.max_edge())?;
    let need = band_nodes_for(grid.t_max, 0);
    if profile.nodes_per_band < need {
        return Err(Error::UnderResolved(format!(
            "{} nodes per band cannot integrate kernels up to t = {}; need {need}",
            profile.nodes_per_band, grid.t_max
        )));
    }
    let order = BesselOrder::new(profile.alpha)?;
    let values = grid
        .nodes
        .par_iter()
        .map_init(Vec::new, |buf, &t| {
            kernel_sum(
                &order,
                t,
                &profile.band_nodes,
                &profile.band_weights,
                &profile.samples,
                buf,
            )
        })
        .collect();
    Ok(RadialFunction { grid, values })
}

/// `|‖f‖²_{[0,T]} - ‖g‖²| / ‖g‖²` for `f` synthesized from `g`. The gap is
/// the mass of `f` beyond `T` plus quadrature error; for profiles with
/// jumps at the band edges it decays like `1/T`.
pub fn plancherel_residual(profile: &BandProfile, grid: Arc<RadialGrid>) -> Result<f64> {
    let spectral = profile.norm_sq();
    if !(spectral > 0.0) {
        return Err(Error::invalid("profile", "Plancherel residual of a zero profile"));
    }
    let f = synthesize_bandlimited(profile, grid)?;
    Ok((f.norm_sq() - spectral).abs() / spectral)
}

/// Result of reducing `f(x) = F(|x|) Y_k(x/|x|)` on ℝⁿ to a radial problem.
#[derive(Debug, Clone)]
pub struct BochnerReduction {
    pub n: u32,
    pub k: u32,
    /// `n/2 + k - 1`.
    pub alpha_eff: f64,
    /// `g(r) = r^{-k} F(r)` with `μ_{α_eff}` weights.
    pub g: RadialFunction,
}

impl BochnerReduction {
    /// `‖f‖²_{L²(ℝⁿ)} = ‖Y_k‖² ∫|F|² r^{n-1} dr = ‖Y_k‖² ‖g‖²_{L²_α} / c_α`.
    pub fn euclidean_norm_sq(&self, harmonic_norm_sq: f64) -> f64 {
        harmonic_norm_sq * self.g.norm_sq() / c_alpha(self.alpha_eff)
    }
}

/// Order mapping `α = n/2 + k - 1`, `g = r^{-k} F`.
pub fn bochner_reduce(n: u32, k: u32, profile: &RadialFunction) -> Result<BochnerReduction> {
    if n < 1 {
        return Err(Error::invalid("n", "dimension must be at least 1"));
    }
    let alpha_eff = n as f64 / 2.0 + k as f64 - 1.0;
    if alpha_eff <= -0.5 {
        return Err(Error::invalid(
            "n",
            format!("n = {n}, k = {k} gives order {alpha_eff}, need α > -1/2"),
        ));
    }
    let grid = Arc::new(profile.grid.reweighted(alpha_eff)?);
    let values: Vec<Complex64> = grid
        .nodes
        .iter()
        .zip(&profile.values)
        .map(|(&r, &v)| v / r.powi(k as i32))
        .collect();
    if k > 0 {
        check_vanishing(&grid.nodes, &values, k)?;
    }
    Ok(BochnerReduction {
        n,
        k,
        alpha_eff,
        g: RadialFunction { grid, values },
    })
}

/// `r^{-k} F(r)` must stay bounded near 0: flag growth faster than
/// `r^{-1/2}` between the two innermost nodes when `g` is not negligible.
fn check_vanishing(nodes: &[f64], g: &[Complex64], k: u32) -> Result<()> {
    if nodes.len() < 2 {
        return Ok(());
    }
    let scale = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let (g0, g1) = (g[0].norm(), g[1].norm());
    if g0 <= 1e-8 * scale || g1 == 0.0 {
        return Ok(());
    }
    let growth = (g0 / g1).ln() / (nodes[1] / nodes[0]).ln();
    if growth > 0.5 && g0 > scale * 0.5 {
        return Err(Error::invalid(
            "profile",
            format!("F does not vanish to order {k} at the origin"),
        ));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    node: f64,
    weight: f64,
    re: f64,
    im: f64,
}

/// Columns `node,weight,re,im`, one row per quadrature node.
pub fn write_columns<W: Write>(out: W, nodes: &[f64], weights: &[f64], values: &[Complex64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for ((&node, &weight), v) in nodes.iter().zip(weights).zip(values) {
        w.serialize(Row {
            node,
            weight,
            re: v.re,
            im: v.im,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Columns written by [`write_columns`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Columns {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
}

pub fn read_columns<R: Read>(input: R) -> Result<Columns> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["node", "weight", "re", "im"] {
        return Err(Error::invalid("csv", "expected header node,weight,re,im"));
    }
    let mut cols = Columns::default();
    for row in r.deserialize() {
        let row: Row = row?;
        cols.nodes.push(row.node);
        cols.weights.push(row.weight);
        cols.values.push(Complex64::new(row.re, row.im));
    }
    Ok(cols)
}
