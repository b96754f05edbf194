//! Interval-union subsets of ℝ⁺, the measure
//! `dμ_α(x) = c_α x^{2α+1} dx` with `c_α = 2π^{α+1}/Γ(α+1)`, and scans of
//! relative density over sliding windows.

use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::gamma;
use crate::rng;

/// Default evaluation horizon for set descriptions.
pub const DEFAULT_T_MAX: f64 = 1000.0;

/// Grid refinement used by [`mu_density`]: step ≤ window / 1024.
pub const MU_GRID_PER_WINDOW: usize = 1024;

/// `c_α = 2π^{α+1}/Γ(α+1)`.
pub fn c_alpha(alpha: f64) -> f64 {
    2.0 * PI.powf(alpha + 1.0) / gamma(alpha + 1.0)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= -0.5 {
        return Err(Error::invalid(
            "alpha",
            format!("order must satisfy α > -1/2, got {alpha}"),
        ));
    }
    Ok(())
}

/// `μ_α([a, b]) = c_α (b^{2α+2} - a^{2α+2}) / (2α+2)`.
pub fn mu_alpha_interval(alpha: f64, a: f64, b: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(a >= 0.0) || !(b >= a) {
        return Err(Error::invalid(
            "interval",
            format!("need 0 ≤ a ≤ b, got [{a}, {b}]"),
        ));
    }
    Ok(mu_raw(c_alpha(alpha), 2.0 * alpha + 2.0, a, b))
}

/// Closed form with the constant and exponent precomputed. Short intervals
/// far from the origin go through `expm1` to avoid cancellation.
#[inline]
fn mu_raw(c: f64, p: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let diff = if a > 0.0 {
        a.powf(p) * (p * ((b - a) / a).ln_1p()).exp_m1()
    } else {
        b.powf(p)
    };
    c * diff / p
}

/// `μ_α` with `c_α` and `2α+2` cached.
#[derive(Debug, Clone, Copy)]
pub struct MuAlpha {
    c: f64,
    p: f64,
}

impl MuAlpha {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(MuAlpha {
            c: c_alpha(alpha),
            p: 2.0 * alpha + 2.0,
        })
    }

    #[inline]
    pub fn interval(&self, a: f64, b: f64) -> f64 {
        mu_raw(self.c, self.p, a, b)
    }
}

/// A subset of ℝ⁺ given by disjoint sorted intervals, optionally repeated
/// with a period. `t_max` is the horizon used by scans over window positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RadialSetRaw", into = "RadialSetRaw")]
pub struct RadialSet {
    intervals: Vec<[f64; 2]>,
    period: Option<f64>,
    t_max: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadialSetRaw {
    intervals: Vec<[f64; 2]>,
    #[serde(default)]
    period: Option<f64>,
    #[serde(default = "default_t_max")]
    t_max: f64,
}

fn default_t_max() -> f64 {
    DEFAULT_T_MAX
}

impl TryFrom<RadialSetRaw> for RadialSet {
    type Error = Error;
    fn try_from(raw: RadialSetRaw) -> Result<Self> {
        RadialSet::new(raw.intervals, raw.period, raw.t_max)
    }
}

impl From<RadialSet> for RadialSetRaw {
    fn from(set: RadialSet) -> Self {
        RadialSetRaw {
            intervals: set.intervals,
            period: set.period,
            t_max: set.t_max,
        }
    }
}

impl RadialSet {
    pub fn new(intervals: Vec<[f64; 2]>, period: Option<f64>, t_max: f64) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::invalid("t_max", "horizon must be positive and finite"));
        }
        if let Some(p) = period {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::invalid("period", "period must be positive and finite"));
            }
        }
        let mut prev_end = f64::NEG_INFINITY;
        for &[a, b] in &intervals {
            if !(a >= 0.0) || !(b > a) || !b.is_finite() {
                return Err(Error::invalid(
                    "intervals",
                    format!("each interval needs 0 ≤ a < b, got [{a}, {b}]"),
                ));
            }
            if a < prev_end {
                return Err(Error::invalid(
                    "intervals",
                    "intervals must be sorted and pairwise disjoint",
                ));
            }
            if let Some(p) = period {
                if b > p {
                    return Err(Error::invalid(
                        "intervals",
                        format!("periodic pattern must lie in [0, {p}], got [{a}, {b}]"),
                    ));
                }
            }
            prev_end = b;
        }
        Ok(RadialSet {
            intervals,
            period,
            t_max,
        })
    }

    /// Sorts and merges overlapping or touching intervals first.
    pub fn from_union(mut intervals: Vec<[f64; 2]>, period: Option<f64>, t_max: f64) -> Result<Self> {
        intervals.retain(|iv| iv[1] > iv[0]);
        intervals.sort_by(|x, y| x[0].total_cmp(&y[0]));
        let mut merged: Vec<[f64; 2]> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv[0] <= last[1] => last[1] = last[1].max(iv[1]),
                _ => merged.push(iv),
            }
        }
        RadialSet::new(merged, period, t_max)
    }

    /// All of ℝ⁺.
    pub fn full(t_max: f64) -> Result<Self> {
        RadialSet::new(vec![[0.0, 1.0]], Some(1.0), t_max)
    }

    /// The empty set.
    pub fn empty(t_max: f64) -> Result<Self> {
        RadialSet::new(Vec::new(), None, t_max)
    }

    /// `∪_n [n·period + a, n·period + b]` over the given blocks.
    pub fn periodic(period: f64, blocks: Vec<[f64; 2]>, t_max: f64) -> Result<Self> {
        RadialSet::new(blocks, Some(period), t_max)
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn with_t_max(&self, t_max: f64) -> Result<Self> {
        RadialSet::new(self.intervals.clone(), self.period, t_max)
    }

    /// Union with extra intervals (pattern intervals for periodic sets).
    pub fn with_added(&self, extra: &[[f64; 2]]) -> Result<Self> {
        let mut all = self.intervals.clone();
        all.extend_from_slice(extra);
        RadialSet::from_union(all, self.period, self.t_max)
    }

    pub fn contains(&self, x: f64) -> bool {
        if x < 0.0 {
            return false;
        }
        let y = match self.period {
            Some(p) => x - p * (x / p).floor(),
            None => x,
        };
        let idx = self.intervals.partition_point(|iv| iv[1] < y);
        self.intervals.get(idx).is_some_and(|iv| iv[0] <= y)
    }

    /// `E ∩ [lo, hi]` as explicit sorted intervals.
    pub fn pieces(&self, lo: f64, hi: f64) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        let lo = lo.max(0.0);
        if hi <= lo {
            return out;
        }
        let mut push = |a: f64, b: f64| {
            let a = a.max(lo);
            let b = b.min(hi);
            if b > a {
                out.push([a, b]);
            }
        };
        match self.period {
            None => {
                let start = self.intervals.partition_point(|iv| iv[1] <= lo);
                for iv in &self.intervals[start..] {
                    if iv[0] >= hi {
                        break;
                    }
                    push(iv[0], iv[1]);
                }
            }
            Some(p) => {
                let first = (lo / p).floor() as i64;
                let last = (hi / p).floor() as i64;
                for n in first..=last {
                    let shift = n as f64 * p;
                    for iv in &self.intervals {
                        push(iv[0] + shift, iv[1] + shift);
                    }
                }
            }
        }
        // touching periodic copies are merged so callers see disjoint pieces
        let mut merged: Vec<[f64; 2]> = Vec::with_capacity(out.len());
        for iv in out {
            match merged.last_mut() {
                Some(last) if iv[0] <= last[1] => last[1] = last[1].max(iv[1]),
                _ => merged.push(iv),
            }
        }
        merged
    }

    /// `|E ∩ [lo, hi]|`.
    pub fn lebesgue_measure(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        self.cumulative_length(hi) - self.cumulative_length(lo.max(0.0))
    }

    /// `μ_α(E ∩ [lo, hi])`.
    pub fn mu_measure(&self, mu: &MuAlpha, lo: f64, hi: f64) -> f64 {
        self.pieces(lo, hi)
            .iter()
            .map(|iv| mu.interval(iv[0], iv[1]))
            .sum()
    }

    /// `|E ∩ [0, x]|`, exact and piecewise linear in x.
    fn cumulative_length(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let in_pattern = |y: f64| -> f64 {
            self.intervals
                .iter()
                .take_while(|iv| iv[0] < y)
                .map(|iv| iv[1].min(y) - iv[0])
                .sum()
        };
        match self.period {
            None => in_pattern(x),
            Some(p) => {
                let n = (x / p).floor();
                let per_period: f64 = self.intervals.iter().map(|iv| iv[1] - iv[0]).sum();
                n * per_period + in_pattern(x - n * p)
            }
        }
    }
}

/// Relative densities of a set over windows `[r, r + window]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub gamma_lebesgue: f64,
    pub gamma_mu: f64,
    /// Window position attaining the μ_α infimum (to grid tolerance).
    pub argmin_r: f64,
    /// Window position attaining the Lebesgue infimum.
    pub argmin_r_lebesgue: f64,
    pub window: f64,
}

/// Infimum of a window ratio and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMinimum {
    pub gamma: f64,
    pub argmin_r: f64,
}

fn check_scan(set: &RadialSet, window: f64) -> Result<()> {
    if !(window > 0.0) || !window.is_finite() {
        return Err(Error::invalid("window", "window must be positive"));
    }
    if set.is_empty() {
        return Err(Error::invalid("intervals", "density of an empty description"));
    }
    if set.period.is_none() && window > set.t_max {
        return Err(Error::invalid(
            "window",
            format!("window {window} exceeds the horizon {}", set.t_max),
        ));
    }
    Ok(())
}

/// Exact `inf_r |E ∩ [r, r+w]| / w`. The ratio is piecewise linear in r with
/// breakpoints at the interval endpoints shifted by 0 and -w, so evaluating
/// at those positions is exact. Periodic sets are scanned over one period.
pub fn lebesgue_density(set: &RadialSet, window: f64) -> Result<WindowMinimum> {
    check_scan(set, window)?;
    let (hi, mut candidates) = match set.period {
        Some(p) => {
            let wrap = |x: f64| x - p * (x / p).floor();
            let mut c = vec![0.0];
            for iv in &set.intervals {
                for e in [iv[0], iv[1]] {
                    c.push(wrap(e));
                    c.push(wrap(e - window));
                }
            }
            (p, c)
        }
        None => {
            let hi = set.t_max - window;
            let mut c = vec![0.0, hi];
            for iv in &set.intervals {
                for e in [iv[0], iv[1]] {
                    c.extend([e, e - window]);
                }
            }
            (hi, c)
        }
    };
    candidates.retain(|&r| (0.0..=hi).contains(&r));
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best = WindowMinimum {
        gamma: f64::INFINITY,
        argmin_r: 0.0,
    };
    for r in candidates {
        let g = set.lebesgue_measure(r, r + window) / window;
        if g < best.gamma {
            best = WindowMinimum { gamma: g, argmin_r: r };
        }
    }
    best.gamma = best.gamma.clamp(0.0, 1.0);
    Ok(best)
}

/// `inf_r μ_α(E ∩ [r, r+w]) / μ_α([r, r+w])` over `r ∈ [0, t_max - w]`.
///
/// Grid search with step ≤ w/1024 followed by one golden-section pass around
/// the grid minimum. The value is an upper bound on the true infimum; the
/// ratio is only piecewise smooth in r so narrow dips between grid points
/// can be missed.
pub fn mu_density(alpha: f64, set: &RadialSet, window: f64) -> Result<WindowMinimum> {
    check_scan(set, window)?;
    let mu = MuAlpha::new(alpha)?;
    let hi = (set.t_max - window).max(0.0);
    let ratio = |r: f64| {
        let whole = mu.interval(r, r + window);
        (set.mu_measure(&mu, r, r + window) / whole).clamp(0.0, 1.0)
    };
    let steps = ((hi / window) * MU_GRID_PER_WINDOW as f64).ceil().max(1.0) as usize;
    let h = hi / steps as f64;
    let mut best = WindowMinimum {
        gamma: f64::INFINITY,
        argmin_r: 0.0,
    };
    for i in 0..=steps {
        let r = if i == steps { hi } else { h * i as f64 };
        let g = ratio(r);
        if g < best.gamma {
            best = WindowMinimum { gamma: g, argmin_r: r };
        }
    }
    if h > 0.0 {
        let (r, g) = golden_section(
            ratio,
            (best.argmin_r - h).max(0.0),
            (best.argmin_r + h).min(hi),
            60,
        );
        if g < best.gamma {
            best = WindowMinimum { gamma: g, argmin_r: r };
        }
    }
    Ok(best)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Both densities of `set` for windows of length `window`.
pub fn density_report(alpha: f64, set: &RadialSet, window: f64) -> Result<DensityReport> {
    let leb = lebesgue_density(set, window)?;
    let mu = mu_density(alpha, set, window)?;
    Ok(DensityReport {
        gamma_lebesgue: leb.gamma,
        gamma_mu: mu.gamma,
        argmin_r: mu.argmin_r,
        argmin_r_lebesgue: leb.argmin_r,
        window,
    })
}

/// Lower bound on the μ_α density implied by Lebesgue density γ:
/// `γ̃ = (γ/2) ((γ/2) / (γ/2 + 1))^{2α+1}`.
pub fn density_conversion_bound(alpha: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid("gamma", format!("need 0 < γ ≤ 1, got {gamma}")));
    }
    if !(alpha >= -0.5) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", format!("need α ≥ -1/2, got {alpha}")));
    }
    let half = gamma / 2.0;
    Ok(half * (half / (half + 1.0)).powf(2.0 * alpha + 1.0))
}

/// Recipes for test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    /// `∪_n (n·period + block)` for each block in `[0, period]`.
    Periodic { period: f64, blocks: Vec<[f64; 2]> },
    /// Random blocks with Lebesgue density at least `gamma` in every window
    /// of length `window`.
    RandomUnion {
        gamma: f64,
        #[serde(default = "one")]
        window: f64,
    },
    /// `[0, t_max]` with a gap of length `first_gap / n` centered at `n + 1/2`
    /// for every `n ≥ 1`.
    ComplementThin { first_gap: f64 },
}

fn one() -> f64 {
    1.0
}

/// Deterministic set factory.
///
/// `random_union` splits ℝ⁺ into cells of width `w/q` and puts one block of
/// relative length at least `γq/(q-1)` at a uniform position in each cell.
/// Any window of length w contains `q - 1` whole cells, which gives the
/// density floor γ. The smallest `q ≥ 2` leaving room for randomness is used.
pub fn generate_set(spec: &SetSpec, t_max: f64, seed: u64) -> Result<RadialSet> {
    match spec {
        SetSpec::Periodic { period, blocks } => {
            if blocks.iter().any(|b| b[1] - b[0] >= *period) {
                return Err(Error::invalid("blocks", "each block must be shorter than the period"));
            }
            RadialSet::from_union(blocks.clone(), Some(*period), t_max)
        }
        SetSpec::RandomUnion { gamma, window } => {
            if !(*gamma > 0.0 && *gamma <= 1.0) {
                return Err(Error::invalid(
                    "gamma",
                    format!("requested density must lie in (0, 1], got {gamma}"),
                ));
            }
            if !(*window > 0.0) {
                return Err(Error::invalid("window", "window must be positive"));
            }
            if *gamma == 1.0 {
                return RadialSet::new(vec![[0.0, t_max]], None, t_max);
            }
            let q = ((1.0 + gamma) / (1.0 - gamma)).ceil().max(2.0);
            let cell = window / q;
            let floor = gamma * q / (q - 1.0);
            let ceiling = floor + 0.5 * (1.0 - floor);
            let mut rng = rng::stream(seed, 0);
            let cells = (t_max / cell).ceil() as usize;
            let mut blocks = Vec::with_capacity(cells);
            for i in 0..cells {
                let frac = rng.random_range(floor..=ceiling);
                let len = frac * cell;
                let start = i as f64 * cell + rng.random::<f64>() * (cell - len);
                blocks.push([start, start + len]);
            }
            RadialSet::from_union(blocks, None, t_max)
        }
        SetSpec::ComplementThin { first_gap } => {
            if !(*first_gap > 0.0 && *first_gap < 1.0) {
                return Err(Error::invalid("first_gap", "gap length must lie in (0, 1)"));
            }
            let mut blocks = Vec::new();
            let mut start = 0.0;
            let mut n = 1usize;
            while (n as f64) + 0.5 < t_max {
                let half = 0.5 * first_gap / n as f64;
                let centre = n as f64 + 0.5;
                blocks.push([start, centre - half]);
                start = centre + half;
                n += 1;
            }
            blocks.push([start, t_max]);
            RadialSet::from_union(blocks, None, t_max)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert!((mu_alpha_interval(0.0, 0.0, 1.0).unwrap() - PI).abs() < 1e-14);
        assert_eq!(mu_alpha_interval(1.3, 2.0, 2.0).unwrap(), 0.0);
        assert!(mu_alpha_interval(0.0, -1.0, 1.0).is_err());
        assert!(mu_alpha_interval(0.0, 2.0, 1.0).is_err());
        assert!(mu_alpha_interval(-0.6, 0.0, 1.0).is_err());
    }

    #[test]
    fn conversion_bound_values() {
        assert!((density_conversion_bound(0.0, 1.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((density_conversion_bound(-0.5, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((density_conversion_bound(0.5, 0.5).unwrap() - 0.01).abs() < 1e-15);
        assert!(density_conversion_bound(0.0, 0.0).is_err());
        assert!(density_conversion_bound(0.0, 1.5).is_err());
    }

    #[test]
    fn periodic_pieces_and_contains() {
        let e = RadialSet::periodic(1.0, vec![[0.0, 0.5]], 100.0).unwrap();
        assert!(e.contains(3.25));
        assert!(!e.contains(3.75));
        assert_eq!(e.pieces(0.25, 1.75), vec![[0.25, 0.5], [1.0, 1.5]]);
        assert!((e.lebesgue_measure(0.3, 7.9) - 3.7).abs() < 1e-12);
        let full = RadialSet::full(10.0).unwrap();
        assert_eq!(full.pieces(0.5, 3.0), vec![[0.5, 3.0]]);
    }

    #[test]
    fn rejects_bad_descriptions() {
        assert!(RadialSet::new(vec![[0.0, 1.0], [0.5, 2.0]], None, 10.0).is_err());
        assert!(RadialSet::new(vec![[1.0, 0.0]], None, 10.0).is_err());
        assert!(RadialSet::new(vec![[0.0, 1.5]], Some(1.0), 10.0).is_err());
        assert!(lebesgue_density(&RadialSet::empty(10.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn json_roundtrip_and_unknown_fields() {
        let e = RadialSet::periodic(2.0, vec![[0.0, 0.5]], 50.0).unwrap();
        let s = serde_json::to_string(&e).unwrap();
        let back: RadialSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
        let bad = r#"{"intervals": [[0, 1]], "period": null, "t_max": 5, "extra": 1}"#;
        assert!(serde_json::from_str::<RadialSet>(bad).is_err());
        let overlapping = r#"{"intervals": [[0, 1], [0.5, 2]], "period": null, "t_max": 5}"#;
        assert!(serde_json::from_str::<RadialSet>(overlapping).is_err());
    }

    #[test]
    fn set_spec_json() {
        let spec: SetSpec = serde_json::from_str(r#"{"kind": "random_union", "gamma": 0.3}"#).unwrap();
        assert_eq!(spec, SetSpec::RandomUnion { gamma: 0.3, window: 1.0 });
    }
}
