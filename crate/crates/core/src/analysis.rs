//! Physical observables from the steady-state density matrix: partial
//! traces, occupation numbers, phonon statistics, the Fano factor, the Wigner
//! quasi-probability distribution, its negativity, and coherent-state fits to
//! individual limit-cycles.
//!
//! Phase-space axes are in zero-point units, `α = (x + i p)/√2`, normalized
//! so that `∫∫ W dx dp = 1`; the vacuum then peaks at `W(0,0) = 1/π`.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::fock::TruncationConfig;
use num_complex::Complex64;

/// Phonon (or photon) number distribution with its first two moments.
#[derive(Clone, Debug)]
pub struct PhononDistribution {
    /// `P(n)` for `n = 0 .. len`; tiny negative solver noise clipped to 0.
    pub probs: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// `variance / mean`; NaN when the mean vanishes.
    pub fano: f64,
}

/// Wigner function samples on a rectangular grid.
#[derive(Clone, Debug)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// Row-major: `values[ix * p_axis.len() + ip]`.
    pub values: Vec<f64>,
    /// `∫ |min(W, 0)| / ∫ |W|` over the grid.
    pub negative_fraction: f64,
    /// Riemann sum of `W dx dp`; 1 for a fine enough grid.
    pub integral: f64,
    /// Set when the grid was too coarse to normalize within 1e-2.
    pub normalization_warning: bool,
}

/// One segment of the phonon distribution fitted by a coherent state.
#[derive(Clone, Debug)]
pub struct LimitCycleFit {
    /// Bin range `[start, end)` of the segment.
    pub start: usize,
    pub end: usize,
    /// Total probability of the segment.
    pub weight: f64,
    /// Conditional mean phonon number within the segment.
    pub mean_n: f64,
    /// Poisson distribution with mean `mean_n`, scaled by `weight`, over the
    /// full axis.
    pub fitted_coherent_probs: Vec<f64>,
}

/// Trace out the cavity: `ρ_m[m, m'] = Σ_c ρ[(c, m), (c, m')]`.
pub fn partial_trace_mech(rho: &DenseMatrix, trunc: TruncationConfig) -> Result<DenseMatrix> {
    let h = trunc.hilbert_dim();
    if rho.nrows() != h || rho.ncols() != h {
        return Err(Error::DimensionMismatch(format!(
            "partial_trace_mech: density matrix is {}x{}, expected {h}x{h}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let nm = trunc.n_mech;
    let mut out = DenseMatrix::zeros(nm, nm);
    for c in 0..trunc.n_cavity {
        let base = c * nm;
        for m1 in 0..nm {
            for m2 in 0..nm {
                let v = out.get(m1, m2) + rho.get(base + m1, base + m2);
                out.set(m1, m2, v);
            }
        }
    }
    Ok(out)
}

/// Trace out the mechanics: `ρ_c[c, c'] = Σ_m ρ[(c, m), (c', m)]`.
pub fn partial_trace_cavity(rho: &DenseMatrix, trunc: TruncationConfig) -> Result<DenseMatrix> {
    let h = trunc.hilbert_dim();
    if rho.nrows() != h || rho.ncols() != h {
        return Err(Error::DimensionMismatch(format!(
            "partial_trace_cavity: density matrix is {}x{}, expected {h}x{h}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let nm = trunc.n_mech;
    let nc = trunc.n_cavity;
    let mut out = DenseMatrix::zeros(nc, nc);
    for m in 0..nm {
        for c1 in 0..nc {
            for c2 in 0..nc {
                let v = out.get(c1, c2) + rho.get(c1 * nm + m, c2 * nm + m);
                out.set(c1, c2, v);
            }
        }
    }
    Ok(out)
}

/// `<a†a>` of the joint state.
pub fn photon_number(rho: &DenseMatrix, trunc: TruncationConfig) -> f64 {
    let nm = trunc.n_mech;
    let mut acc = 0.0;
    for c in 0..trunc.n_cavity {
        for m in 0..nm {
            acc += c as f64 * rho.get(c * nm + m, c * nm + m).re;
        }
    }
    acc
}

/// `<b†b>` of the joint state.
pub fn phonon_number(rho: &DenseMatrix, trunc: TruncationConfig) -> f64 {
    let nm = trunc.n_mech;
    let mut acc = 0.0;
    for c in 0..trunc.n_cavity {
        for m in 0..nm {
            acc += m as f64 * rho.get(c * nm + m, c * nm + m).re;
        }
    }
    acc
}

impl PhononDistribution {
    /// From the diagonal of a single-mode density matrix. Diagonal entries
    /// below `-1e-12` signal a bad solve and error out; smaller negative
    /// noise is clipped to zero.
    pub fn from_density(rho_m: &DenseMatrix) -> Result<PhononDistribution> {
        let n = rho_m.nrows();
        let mut probs = Vec::with_capacity(n);
        for k in 0..n {
            let p = rho_m.get(k, k).re;
            if p < -1e-12 {
                return Err(Error::Numeric(format!(
                    "negative population {p:.3e} at level {k}"
                )));
            }
            probs.push(p.max(0.0));
        }
        Ok(Self::from_probs(probs))
    }

    /// From explicit probabilities (assumed non-negative).
    pub fn from_probs(probs: Vec<f64>) -> PhononDistribution {
        let mean: f64 = probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let second: f64 = probs
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64) * (k as f64) * p)
            .sum();
        let total: f64 = probs.iter().sum();
        let mean = if total > 0.0 { mean / total } else { 0.0 };
        let second = if total > 0.0 { second / total } else { 0.0 };
        let variance = (second - mean * mean).max(0.0);
        let fano = if mean > 0.0 { variance / mean } else { f64::NAN };
        PhononDistribution {
            probs,
            mean,
            variance,
            fano,
        }
    }
}

/// Fano factor `variance / mean`. Errors when the mean vanishes.
pub fn fano(d: &PhononDistribution) -> Result<f64> {
    if d.mean > 0.0 {
        Ok(d.variance / d.mean)
    } else {
        Err(Error::Undefined("Fano factor of a zero-mean distribution"))
    }
}

/// Number with a separate power-of-two exponent, for recurrences whose
/// intermediate terms overflow or underflow f64 while the balanced result
/// does not.
#[derive(Clone, Copy)]
struct Scaled {
    m: f64,
    e: i32,
}

impl Scaled {
    const LIMIT: f64 = 1.157920892373162e77; // 2^256
    const INV_LIMIT: f64 = 8.636168555094445e-78; // 2^-256

    fn zero() -> Scaled {
        Scaled { m: 0.0, e: 0 }
    }

    /// `exp(ln)` without intermediate under/overflow.
    fn from_ln(ln: f64) -> Scaled {
        let e = (ln / std::f64::consts::LN_2).floor();
        Scaled {
            m: (ln - e * std::f64::consts::LN_2).exp(),
            e: e as i32,
        }
        .renorm()
    }

    fn renorm(mut self) -> Scaled {
        if self.m == 0.0 {
            self.e = 0;
            return self;
        }
        while self.m.abs() > Self::LIMIT {
            self.m *= Self::INV_LIMIT;
            self.e += 256;
        }
        while self.m.abs() < Self::INV_LIMIT {
            self.m *= Self::LIMIT;
            self.e -= 256;
        }
        self
    }

    fn times(self, f: f64) -> Scaled {
        Scaled {
            m: self.m * f,
            e: self.e,
        }
        .renorm()
    }

    /// `a * self - b * other`, aligning exponents to the larger one so the
    /// scale factors never exceed 1.
    fn combine(a: f64, x: Scaled, b: f64, y: Scaled) -> Scaled {
        if x.m == 0.0 && y.m == 0.0 {
            return Scaled::zero();
        }
        let e_base = if x.m == 0.0 {
            y.e
        } else if y.m == 0.0 {
            x.e
        } else {
            x.e.max(y.e)
        };
        let t1 = if x.m == 0.0 {
            0.0
        } else {
            a * x.m * 2.0_f64.powi(x.e - e_base)
        };
        let t2 = if y.m == 0.0 {
            0.0
        } else {
            b * y.m * 2.0_f64.powi(y.e - e_base)
        };
        Scaled {
            m: t1 - t2,
            e: e_base,
        }
        .renorm()
    }

    fn to_f64(self) -> f64 {
        if self.m == 0.0 {
            0.0
        } else {
            self.m * 2.0_f64.powi(self.e)
        }
    }
}

/// Evaluate the Wigner function of a single-mode density matrix on the grid
/// `x_axis × p_axis` (zero-point units).
///
/// Fock-basis evaluation: for each diagonal offset `d`, the generalized
/// Laguerre terms are generated by their three-term recurrence in `n` with
/// the Gaussian prefactor and the factorial ratio folded into the running
/// term, so no factorials are ever formed.
pub fn wigner(rho_m: &DenseMatrix, x_axis: &[f64], p_axis: &[f64]) -> Result<WignerGrid> {
    if rho_m.nrows() != rho_m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "wigner: density matrix is {}x{}",
            rho_m.nrows(),
            rho_m.ncols()
        )));
    }
    if x_axis.len() < 2 || p_axis.len() < 2 {
        return Err(Error::InvalidInput(
            "wigner grid needs at least 2 points per axis".into(),
        ));
    }
    let nx = x_axis.len();
    let np = p_axis.len();
    let dim = rho_m.nrows();
    let mut values = vec![0.0f64; nx * np];

    for (ix, &x) in x_axis.iter().enumerate() {
        for (ip, &p) in p_axis.iter().enumerate() {
            values[ix * np + ip] = wigner_point(rho_m, dim, x, p);
        }
    }

    let dx = (x_axis[nx - 1] - x_axis[0]) / (nx as f64 - 1.0);
    let dp = (p_axis[np - 1] - p_axis[0]) / (np as f64 - 1.0);
    let integral: f64 = values.iter().sum::<f64>() * dx * dp;
    let neg: f64 = values.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
    let abs: f64 = values.iter().map(|v| v.abs()).sum();
    Ok(WignerGrid {
        x_axis: x_axis.to_vec(),
        p_axis: p_axis.to_vec(),
        values,
        negative_fraction: if abs > 0.0 { neg / abs } else { 0.0 },
        integral,
        normalization_warning: (integral - 1.0).abs() > 1e-2,
    })
}

fn wigner_point(rho_m: &DenseMatrix, dim: usize, x: f64, p: f64) -> f64 {
    // α = (x + i p)/√2, B = 4|α|² = 2(x² + p²)
    let b = 2.0 * (x * x + p * p);
    let two_alpha_mag = b.sqrt(); // 2|α| = sqrt(4|α|²)
    let theta = p.atan2(x); // arg α
    let gauss = Scaled::from_ln(-0.5 * b);

    let mut total = 0.0f64;
    // prefactor e^{-B/2} (2|α|)^d / sqrt(d!) built up incrementally in d
    let mut pref = gauss;
    for d in 0..dim {
        if d > 0 {
            pref = pref.times(two_alpha_mag / (d as f64).sqrt());
            if pref.m == 0.0 {
                break; // the entire remaining tail is below underflow
            }
        }
        // phase of (2 conj(α))^d pairing ρ_{k+d, k}
        let phase = Complex64::new(0.0, -(d as f64) * theta).exp();
        // K_k = e^{-B/2} (2|α|)^d sqrt(k!/(k+d)!) L_k^{(d)}(B)
        let mut k_prev2 = Scaled::zero(); // K_{k-2}
        let mut k_prev = Scaled::zero(); // K_{k-1}; starts as K_{-1} = 0
        let mut s_prev = 1.0f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..(dim - d) {
            let k_cur = if k == 0 {
                pref // K_0: L_0 = 1
            } else {
                let kf = k as f64;
                let s_k = (kf / (kf + d as f64)).sqrt();
                let a1 = (2.0 * kf - 1.0 + d as f64 - b) / kf * s_k;
                let a2 = (kf - 1.0 + d as f64) / kf * s_k * s_prev;
                s_prev = s_k;
                Scaled::combine(a1, k_prev, a2, k_prev2)
            };
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let kval = k_cur.to_f64();
            if kval != 0.0 {
                if d == 0 {
                    acc += Complex64::new(sign * kval * rho_m.get(k, k).re, 0.0);
                } else {
                    acc += rho_m.get(k + d, k) * phase * (sign * kval);
                }
            }
            k_prev2 = k_prev;
            k_prev = k_cur;
        }
        total += if d == 0 { acc.re } else { 2.0 * acc.re };
    }
    total / std::f64::consts::PI
}

/// `∫|min(W, 0)| / ∫|W|` over the grid.
pub fn negativity(w: &WignerGrid) -> f64 {
    w.negative_fraction
}

/// Poisson probabilities with the given mean over `0 .. len`, by stable
/// log-space accumulation.
pub fn poisson_probs(mean: f64, len: usize) -> Vec<f64> {
    if mean <= 0.0 {
        let mut v = vec![0.0; len];
        if len > 0 {
            v[0] = 1.0;
        }
        return v;
    }
    let ln_mean = mean.ln();
    let mut ln_fact = 0.0f64;
    (0..len)
        .map(|n| {
            if n > 0 {
                ln_fact += (n as f64).ln();
            }
            (-mean + n as f64 * ln_mean - ln_fact).exp()
        })
        .collect()
}

/// Segment the phonon distribution at interior local minima (after 3-point
/// moving-average smoothing) and fit each segment with a coherent state of
/// the same mean, scaled by the segment probability. A minimum bin starts
/// the segment to its right.
pub fn fit_limit_cycles(d: &PhononDistribution) -> Result<Vec<LimitCycleFit>> {
    let n = d.probs.len();
    if n == 0 || d.probs.iter().all(|&p| p == 0.0) {
        return Err(Error::Undefined(
            "limit-cycle fit of an all-zero distribution",
        ));
    }
    // 3-point moving average; ends average what exists
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            d.probs[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let mut cuts = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if smooth[i] < smooth[i - 1] && smooth[i] < smooth[i + 1] {
            cuts.push(i);
        }
    }
    cuts.push(n);
    let mut fits = Vec::new();
    let mut start = 0usize;
    for &end in &cuts {
        if end <= start {
            continue;
        }
        let weight: f64 = d.probs[start..end].iter().sum();
        if weight > 0.0 {
            let mean_n: f64 = d.probs[start..end]
                .iter()
                .enumerate()
                .map(|(off, p)| (start + off) as f64 * p)
                .sum::<f64>()
                / weight;
            let mut fitted = poisson_probs(mean_n, n);
            for f in &mut fitted {
                *f *= weight;
            }
            fits.push(LimitCycleFit {
                start,
                end,
                weight,
                mean_n,
                fitted_coherent_probs: fitted,
            });
        }
        start = end;
    }
    Ok(fits)
}

/// Density matrix of a coherent state |α⟩ in a truncated Fock basis,
/// renormalized to unit trace on the truncated space.
pub fn coherent_density(dim: usize, alpha: Complex64) -> DenseMatrix {
    // amplitudes c_n = e^{-|α|²/2} α^n / √(n!)
    let mut amps = Vec::with_capacity(dim);
    let mut cur = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            cur *= alpha / (n as f64).sqrt();
        }
        amps.push(cur);
    }
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    let mut rho = DenseMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            rho.set(i, j, amps[i] * amps[j].conj());
        }
    }
    rho
}

/// Thermal (Bose-Einstein) density matrix with mean occupation `nbar`,
/// renormalized on the truncated space.
pub fn thermal_density(dim: usize, nbar: f64) -> DenseMatrix {
    let mut rho = DenseMatrix::zeros(dim, dim);
    if nbar <= 0.0 {
        rho.set(0, 0, Complex64::new(1.0, 0.0));
        return rho;
    }
    let ratio = nbar / (nbar + 1.0);
    let mut p = 1.0;
    let mut total = 0.0;
    let mut probs = Vec::with_capacity(dim);
    for _ in 0..dim {
        probs.push(p);
        total += p;
        p *= ratio;
    }
    for (k, p) in probs.into_iter().enumerate() {
        rho.set(k, k, Complex64::new(p / total, 0.0));
    }
    rho
}
