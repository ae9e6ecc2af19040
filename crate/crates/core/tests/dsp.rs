use std::f64::consts::PI;

use hifsig::dsp::{
    convolve_fft, convolve_full, cross_correlate_valid, dwt_multilevel, idwt_multilevel, power_spectrum,
    WaveletFilterPair,
};
use proptest::prelude::*;

fn direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn signal(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 1..max_len)
}

proptest! {
    #[test]
    fn fft_path_matches_direct_sum(a in signal(80), b in signal(600)) {
        prop_assert!(max_abs_diff(&convolve_fft(&a, &b), &direct(&a, &b)) < 1e-9);
        prop_assert!(max_abs_diff(&convolve_full(&a, &b).unwrap(), &direct(&a, &b)) < 1e-9);
    }

    #[test]
    fn convolution_is_linear(
        a in signal(40),
        xy in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..300),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| alpha * u + beta * v).collect();
        let lhs = convolve_full(&a, &mix).unwrap();
        let cx = convolve_full(&a, &x).unwrap();
        let cy = convolve_full(&a, &y).unwrap();
        let rhs: Vec<f64> = cx.iter().zip(&cy).map(|(u, v)| alpha * u + beta * v).collect();
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn valid_correlation_matches_inner_products(a in signal(30), extra in signal(200)) {
        let x: Vec<f64> = a.iter().chain(&extra).copied().collect();
        let c = cross_correlate_valid(&x, &a).unwrap();
        prop_assert_eq!(c.len(), x.len() - a.len() + 1);
        for (t, v) in c.iter().enumerate() {
            let dot: f64 = a.iter().zip(&x[t..]).map(|(u, w)| u * w).sum();
            prop_assert!((v - dot).abs() < 1e-9 * (1.0 + dot.abs()));
        }
        let peak = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let energy: f64 = a.iter().map(|v| v * v).sum();
        prop_assert!(peak >= c[0] && c[0] >= energy - 1e-9 * (1.0 + energy));
    }

    #[test]
    fn dwt_round_trip_and_energy(x in prop::collection::vec(-5.0..5.0f64, 256..=256), levels in 1usize..=4) {
        let f = WaveletFilterPair::sym4();
        let bands = dwt_multilevel(&x, levels, &f).unwrap();
        let back = idwt_multilevel(&bands, &f).unwrap();
        prop_assert!(max_abs_diff(&x, &back) < 1e-10);
        let e: f64 = x.iter().map(|v| v * v).sum();
        let eb: f64 = bands.iter_bands().flatten().map(|v| v * v).sum();
        prop_assert!((e - eb).abs() <= 1e-9 * e.max(1e-300));
    }
}

#[test]
fn two_tones_give_two_peaks() {
    let fs = 2.0e6;
    let n = 4000;
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            (2.0 * PI * 50e3 * t).sin() + 0.7 * (2.0 * PI * 200e3 * t).sin()
        })
        .collect();
    let s = power_spectrum(&x, fs).unwrap();
    let mut bins: Vec<usize> = (0..s.magnitudes.len()).collect();
    bins.sort_by(|a, b| s.magnitudes[*b].total_cmp(&s.magnitudes[*a]));
    let mut top: Vec<f64> = bins[..2].iter().map(|k| s.frequencies[*k]).collect();
    top.sort_by(f64::total_cmp);
    let df = fs / n as f64;
    assert!((top[0] - 50e3).abs() <= df);
    assert!((top[1] - 200e3).abs() <= df);
}

#[test]
fn quadrature_mirror_relations() {
    let f = WaveletFilterPair::sym4();
    let (h, g) = (f.lowpass(), f.highpass());
    for shift in (0..h.len()).step_by(2) {
        let hh: f64 = h.iter().zip(&h[shift..]).map(|(a, b)| a * b).sum();
        let hg: f64 = h.iter().zip(&g[shift..]).map(|(a, b)| a * b).sum();
        let expected = if shift == 0 { 1.0 } else { 0.0 };
        assert!((hh - expected).abs() < 1e-12, "shift {shift}: {hh}");
        assert!(hg.abs() < 1e-12);
    }
    // the tabulated sym4 coefficients cancel to about 1e-12
    assert!(g.iter().sum::<f64>().abs() < 5e-12);
}
