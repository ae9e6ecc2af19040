use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::{Label, Sweep, SynthConfig};
use crate::error::Result;

/// Background-only sweep: narrowband tone, AM carriers and white noise.
pub fn gen_background(cfg: &SynthConfig, seed: u64) -> Result<Sweep> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = background_samples(cfg, &mut rng);
    Ok(Sweep {
        id: format!("background-{seed:016x}"),
        samples,
        sample_rate: cfg.sample_rate,
        label: Label::NonFault,
        kind: cfg.kind,
        seed,
    })
}

/// Background plus damped sinusoidal transients clustered at mains zero crossings.
///
/// The background is drawn first from the same stream, so with no
/// transients the samples equal `gen_background` for the same seed.
pub fn gen_fault(cfg: &SynthConfig, seed: u64) -> Result<Sweep> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = background_samples(cfg, &mut rng);

    let f = &cfg.fault;
    let count = if f.transient_rate > 0.0 {
        Poisson::new(f.transient_rate).expect("positive rate").sample(&mut rng) as usize
    } else {
        0
    };
    if count > 0 {
        let fs = cfg.sample_rate;
        let duration = cfg.duration();
        let mains_phase: f64 = rng.random_range(0.0..TAU);
        // first instant where 2*pi*f_m*t + phase is a multiple of pi
        let half_period = 0.5 / cfg.mains_hz;
        let first_crossing = (PI - mains_phase).rem_euclid(PI) / (TAU * cfg.mains_hz);
        let crossings = (((duration - first_crossing) / half_period).ceil() as usize).max(1);
        for _ in 0..count {
            let m = rng.random_range(0..crossings);
            let offset = sample_von_mises(&mut rng, f.zero_crossing_concentration) / 2.0 / (TAU * cfg.mains_hz);
            let onset = (first_crossing + m as f64 * half_period + offset).rem_euclid(duration);
            let freq = f.frequency_hz.sample_log(&mut rng);
            let damping = f.damping_per_s.sample(&mut rng);
            let amplitude = f.amplitude.sample(&mut rng);
            let phase: f64 = rng.random_range(0.0..TAU);
            add_damped_sinusoid(&mut samples, fs, onset, freq, damping, amplitude, phase);
        }
    }
    Ok(Sweep {
        id: format!("fault-{seed:016x}"),
        samples,
        sample_rate: cfg.sample_rate,
        label: Label::Fault,
        kind: cfg.kind,
        seed,
    })
}

fn background_samples(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let bg = &cfg.background;
    let fs = cfg.sample_rate;
    let p = cfg.sweep_len;

    let tone_hz = bg.tone_hz + jitter(rng, bg.tone_jitter_hz);
    let tone_amp = bg.tone_amplitude * (1.0 + jitter(rng, bg.tone_amplitude_jitter));
    let tone_phase: f64 = rng.random_range(0.0..TAU);
    let carriers: Vec<_> = bg
        .carriers
        .iter()
        .map(|c| {
            let carrier_phase: f64 = rng.random_range(0.0..TAU);
            let mod_hz = bg.modulation_hz.sample(rng);
            let mod_phase: f64 = rng.random_range(0.0..TAU);
            (c, carrier_phase, mod_hz, mod_phase)
        })
        .collect();

    let mut x: Vec<f64> = (0..p)
        .map(|i| {
            let t = i as f64 / fs;
            let mut v = tone_amp * (TAU * tone_hz * t + tone_phase).sin();
            for (c, cp, mh, mp) in &carriers {
                let envelope = 1.0 + c.modulation_depth * (TAU * mh * t + mp).cos();
                v += c.amplitude * envelope * (TAU * c.frequency_hz * t + cp).cos();
            }
            v
        })
        .collect();

    if bg.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, bg.noise_sigma).expect("finite sigma");
        for v in &mut x {
            *v += noise.sample(rng);
        }
    }
    x
}

fn jitter(rng: &mut ChaCha8Rng, width: f64) -> f64 {
    if width > 0.0 {
        rng.random_range(-width..=width)
    } else {
        0.0
    }
}

fn add_damped_sinusoid(x: &mut [f64], fs: f64, onset: f64, freq: f64, damping: f64, amplitude: f64, phase: f64) {
    let start = (onset * fs).round() as usize;
    if start >= x.len() {
        return;
    }
    // stop once the envelope is below 1e-9 of the peak
    let span = if damping > 0.0 {
        ((20.7 / damping) * fs).ceil() as usize + 1
    } else {
        x.len()
    };
    let end = (start + span).min(x.len());
    for (k, v) in x[start..end].iter_mut().enumerate() {
        let t = k as f64 / fs;
        *v += amplitude * (-damping * t).exp() * (TAU * freq * t + phase).sin();
    }
}

/// Draws an angle in `(-pi, pi]` from a von Mises distribution centred at 0.
///
/// Best-Fisher rejection sampler; `kappa = 0` is uniform and `kappa = inf`
/// returns exactly 0.
pub fn sample_von_mises(rng: &mut impl Rng, kappa: f64) -> f64 {
    if kappa.is_infinite() {
        return 0.0;
    }
    if kappa < 1e-8 {
        return rng.random_range(-PI..PI);
    }
    if kappa > 1e6 {
        let z: f64 = Normal::new(0.0, 1.0 / kappa.sqrt()).expect("finite").sample(rng);
        return z.clamp(-PI, PI);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            return if u3 > 0.5 { theta } else { -theta };
        }
    }
}
