//! Linear convolution and valid-range cross-correlation.
//!
//! Small problems use the direct sum; larger ones are computed through a
//! zero-padded real FFT of power-of-two size. Both paths produce the same
//! result up to rounding.

use std::sync::{Arc, OnceLock};

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};

/// Work size (`p * q`) below which the direct sum is used.
pub const DIRECT_CROSSOVER: usize = 1 << 16;

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

pub(crate) fn ensure_signal(name: &str, x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::invalid(format!("{name} is empty")));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{name}[{i}] is not finite")));
    }
    Ok(())
}

/// Full linear convolution, `out[t] = sum_k a[k] * b[t - k]`, length `a.len() + b.len() - 1`.
pub fn convolve_full(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    ensure_signal("a", a)?;
    ensure_signal("b", b)?;
    if a.len() * b.len() < DIRECT_CROSSOVER {
        Ok(convolve_direct(a, b))
    } else {
        Ok(convolve_fft(a, b))
    }
}

pub(crate) fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (k, &ak) in a.iter().enumerate() {
        if ak == 0.0 {
            continue;
        }
        for (o, &bv) in out[k..].iter_mut().zip(b) {
            *o += ak * bv;
        }
    }
    out
}

/// FFT path of [`convolve_full`], regardless of size. Inputs must be non-empty.
pub fn convolve_fft(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len() + b.len() - 1;
    let n = next_pow2(len);
    let plan = Plan::new(n);
    let fa = plan.forward(a);
    let mut fb = plan.forward(b);
    for (y, x) in fb.iter_mut().zip(&fa) {
        *y *= *x;
    }
    let mut out = plan.inverse(&mut fb);
    out.truncate(len);
    out
}

/// `out[t] = sum_k x[t + k] * a[k]` for `t = 0..=p - q`.
pub fn cross_correlate_valid(x: &[f64], a: &[f64]) -> Result<Vec<f64>> {
    ensure_signal("x", x)?;
    ensure_signal("a", a)?;
    if a.len() > x.len() {
        return Err(Error::invalid(format!(
            "filter length {} exceeds signal length {}",
            a.len(),
            x.len()
        )));
    }
    let valid = x.len() - a.len() + 1;
    if x.len() * a.len() < DIRECT_CROSSOVER {
        Ok((0..valid)
            .map(|t| x[t..t + a.len()].iter().zip(a).map(|(u, v)| u * v).sum())
            .collect())
    } else {
        let n = next_pow2(x.len());
        let plan = Plan::new(n);
        let fa = plan.forward(a);
        let mut fx = plan.forward(x);
        for (y, h) in fx.iter_mut().zip(&fa) {
            *y *= h.conj();
        }
        let mut out = plan.inverse(&mut fx);
        out.truncate(valid);
        Ok(out)
    }
}

/// A forward/inverse real FFT pair of one size. Inverse output is normalized.
#[derive(Clone)]
pub(crate) struct Plan {
    n: usize,
    fwd: Arc<dyn RealToComplex<f64>>,
    inv: Arc<dyn ComplexToReal<f64>>,
}

impl Plan {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Plan {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }

    pub(crate) fn spectrum_len(&self) -> usize {
        self.n / 2 + 1
    }

    /// Zero-pads `x` to the plan size and transforms it.
    pub(crate) fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![0.0; self.n];
        buf[..x.len()].copy_from_slice(x);
        let mut out = self.fwd.make_output_vec();
        self.fwd
            .process(&mut buf, &mut out)
            .expect("buffer sizes match the plan");
        out
    }

    /// Inverse transform; clobbers `spec`.
    pub(crate) fn inverse(&self, spec: &mut [Complex64]) -> Vec<f64> {
        spec[0].im = 0.0;
        if self.n.is_multiple_of(2) {
            let last = spec.len() - 1;
            spec[last].im = 0.0;
        }
        let mut out = vec![0.0; self.n];
        self.inv
            .process(spec, &mut out)
            .expect("buffer sizes match the plan");
        let scale = 1.0 / self.n as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }
}

/// A set of equal-length filters pre-transformed for signals of a fixed length.
///
/// Supports the two operators the sparse coder needs: synthesis
/// (`sum_j a_j * s_j`) and its adjoint (valid cross-correlation against
/// every filter).
#[derive(Clone)]
pub struct FilterBank {
    plan: Plan,
    signal_len: usize,
    filter_len: usize,
    filters: Vec<Vec<f64>>,
    spectra: Vec<Vec<Complex64>>,
    gram: OnceLock<Vec<f64>>,
}

impl FilterBank {
    pub fn new(filters: &[Vec<f64>], signal_len: usize) -> Result<Self> {
        let first = filters
            .first()
            .ok_or_else(|| Error::invalid("filter bank needs at least one filter"))?;
        let q = first.len();
        for (j, f) in filters.iter().enumerate() {
            ensure_signal(&format!("filter {j}"), f)?;
            if f.len() != q {
                return Err(Error::invalid(format!(
                    "filter {j} has length {}, expected {q}",
                    f.len()
                )));
            }
        }
        if q > signal_len {
            return Err(Error::invalid(format!(
                "filter length {q} exceeds signal length {signal_len}"
            )));
        }
        let plan = Plan::new(next_pow2(signal_len));
        let spectra = filters.iter().map(|f| plan.forward(f)).collect();
        Ok(FilterBank {
            plan,
            signal_len,
            filter_len: q,
            filters: filters.to_vec(),
            spectra,
            gram: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn filter_len(&self) -> usize {
        self.filter_len
    }

    /// Number of valid shifts, `p - q + 1`.
    pub fn shifts(&self) -> usize {
        self.signal_len - self.filter_len + 1
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    /// `max_w sum_j |A_j(w)|^2`, the squared operator norm of the synthesis map
    /// on the padded DFT grid (an upper bound for the linear operator).
    pub fn operator_norm_sq(&self) -> f64 {
        (0..self.plan.spectrum_len())
            .map(|k| self.spectra.iter().map(|s| s[k].norm_sqr()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Valid cross-correlation of `x` against every filter; `x.len()` must equal the bank's signal length.
    pub fn correlate(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each_correlation(x, |_, c| out.push(c.to_vec()));
        out
    }

    /// Streams each filter's valid cross-correlation without keeping all of them.
    pub fn for_each_correlation(&self, x: &[f64], mut f: impl FnMut(usize, &[f64])) {
        assert_eq!(x.len(), self.signal_len, "signal length mismatch");
        let fx = self.plan.forward(x);
        let valid = self.shifts();
        let mut work = vec![Complex64::new(0.0, 0.0); fx.len()];
        for (j, spec) in self.spectra.iter().enumerate() {
            for ((w, a), b) in work.iter_mut().zip(&fx).zip(spec) {
                *w = a * b.conj();
            }
            let c = self.plan.inverse(&mut work);
            f(j, &c[..valid]);
        }
    }

    /// Cross-correlations of every filter pair at every lag, computed once.
    ///
    /// Entry `(k * n + j) * (2q - 1) + (d + q - 1)` holds
    /// `sum_v a_j[v] a_k[v + d]` for `|d| < q`.
    pub fn gram(&self) -> &[f64] {
        self.gram.get_or_init(|| {
            let (n, q) = (self.len(), self.filter_len);
            let width = 2 * q - 1;
            let plan = Plan::new(next_pow2(width));
            let spectra: Vec<Vec<Complex64>> = self.filters.iter().map(|f| plan.forward(f)).collect();
            let mut out = vec![0.0; n * n * width];
            let mut work = vec![Complex64::new(0.0, 0.0); plan.spectrum_len()];
            for (k, sk) in spectra.iter().enumerate() {
                for (j, sj) in spectra.iter().enumerate() {
                    for ((w, a), b) in work.iter_mut().zip(sj).zip(sk) {
                        *w = a.conj() * b;
                    }
                    let r = plan.inverse(&mut work);
                    let row = &mut out[(k * n + j) * width..(k * n + j + 1) * width];
                    for (i, d) in (1 - q as isize..q as isize).enumerate() {
                        row[i] = r[d.rem_euclid(plan.len() as isize) as usize];
                    }
                }
            }
            out
        })
    }

    /// `sum_j a_j * s_j` truncated to the signal length, codes given densely.
    pub fn synthesize(&self, codes: &[Vec<f64>]) -> Vec<f64> {
        assert_eq!(codes.len(), self.len(), "one code vector per filter");
        let mut acc = vec![Complex64::new(0.0, 0.0); self.plan.spectrum_len()];
        for (s, spec) in codes.iter().zip(&self.spectra) {
            assert_eq!(s.len(), self.shifts(), "code length mismatch");
            if s.iter().all(|v| *v == 0.0) {
                continue;
            }
            let fs = self.plan.forward(s);
            for ((a, x), h) in acc.iter_mut().zip(&fs).zip(spec) {
                *a += x * h;
            }
        }
        let mut out = self.plan.inverse(&mut acc);
        out.truncate(self.signal_len);
        out
    }
}

impl std::fmt::Debug for FilterBank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FilterBank")
            .field("filters", &self.filters.len())
            .field("filter_len", &self.filter_len)
            .field("signal_len", &self.signal_len)
            .field("fft_len", &self.plan.len())
            .finish()
    }
}
