//! Simulated cavity read-out: sample the magnon-photon transfer probability,
//! recover the Rabi frequency from the record and rebuild Δ₀ from it.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rustfft::FftPlanner;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cavity::{coupling_strength, epr_from_frequency, lambda_from_cavity, rabi, transition_probabilities, BlockKind, CavityBlock};
use crate::epr::{ground_delta0, Regime};
use crate::error::{Error, Result};
use crate::lattice::{KVector, LatticeSpec};
use crate::spinwave::{solve_modes, ModelParams};

/// Zero-padding factor of the spectral initializer.
const PAD_FACTOR: usize = 8;
/// Peak power must exceed this multiple of the mean spectral power.
const PEAK_SIGNIFICANCE: f64 = 25.0;
const MIN_SAMPLES: usize = 32;

/// Number of photon-counting shots per time point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Exact,
    Count(u64),
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Exact => f.write_str("exact"),
            Shots::Count(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for Shots {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Shots::Exact => s.serialize_str("exact"),
            Shots::Count(n) => s.serialize_u64(*n),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(u64),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(0) => Err(serde::de::Error::custom("shots must be >= 1")),
            Repr::Count(n) => Ok(Shots::Count(n)),
            Repr::Word(w) if w == "exact" => Ok(Shots::Exact),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "shots must be a positive integer or \"exact\", got \"{w}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub shots: Shots,
    pub seed: Option<u64>,
}

/// SplitMix64 mix of a master seed and a point index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Samples the transfer probability at `n_samples` times i·t_max/n_samples.
///
/// Finite shots draw Binomial(shots, p(t)) counts; the record holds
/// counts/shots.
pub fn synthesize(block: &CavityBlock, t_max: f64, n_samples: usize, shots: Shots, seed: u64) -> Result<TimeSeries> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter { name: "t_max", reason: format!("must be > 0, got {t_max}") });
    }
    if n_samples < 2 {
        return Err(Error::InvalidParameter { name: "n_samples", reason: "need at least 2 samples".into() });
    }
    let f = block.angular_rabi() / PI;
    if f > 0.0 {
        let per_period = n_samples as f64 / (t_max * f);
        if per_period < 4.0 {
            return Err(Error::NyquistViolation { samples_per_period: per_period });
        }
        if per_period < 16.0 {
            log::warn!("only {per_period:.1} samples per Rabi period; 16 or more recommended");
        }
        if t_max * f < 4.0 * (1.0 - 1e-9) {
            log::warn!("record spans {:.2} Rabi periods; 4 or more recommended", t_max * f);
        }
    }
    let dt = t_max / n_samples as f64;
    let times: Vec<f64> = (0..n_samples).map(|i| i as f64 * dt).collect();
    let exact = times.iter().map(|&t| transition_probabilities(block, t).1.clamp(0.0, 1.0));
    let values = match shots {
        Shots::Exact => exact.collect(),
        Shots::Count(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            exact
                .map(|p| {
                    let dist = Binomial::new(n, p).expect("p clamped to [0, 1]");
                    dist.sample(&mut rng) as f64 / n as f64
                })
                .collect()
        }
    };
    Ok(TimeSeries {
        times,
        values,
        shots,
        seed: matches!(shots, Shots::Count(_)).then_some(seed),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyEstimate {
    pub f_hat: f64,
    pub stderr: f64,
    /// RMS of the fit residuals.
    pub fit_residual: f64,
    pub converged: bool,
    pub f_initial: f64,
    pub iterations: usize,
}

/// Model C + A sin²(π f t + ψ); parameters ordered (C, A, f, ψ).
fn model(p: &Vector4<f64>, t: f64) -> f64 {
    p[0] + p[1] * (PI * p[2] * t + p[3]).sin().powi(2)
}

fn jacobian_row(p: &Vector4<f64>, t: f64) -> [f64; 4] {
    let theta = PI * p[2] * t + p[3];
    let s = theta.sin();
    let s2t = (2.0 * theta).sin();
    [1.0, s * s, p[1] * PI * t * s2t, p[1] * s2t]
}

fn residuals(p: &Vector4<f64>, t: &[f64], y: &[f64]) -> (DVector<f64>, f64) {
    let r = DVector::from_iterator(t.len(), t.iter().zip(y).map(|(&ti, &yi)| yi - model(p, ti)));
    let cost = r.norm_squared();
    (r, cost)
}

fn normal_matrix(p: &Vector4<f64>, t: &[f64], r: &DVector<f64>) -> (Matrix4<f64>, Vector4<f64>) {
    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    for (i, &ti) in t.iter().enumerate() {
        let j = Vector4::from(jacobian_row(p, ti));
        jtj += j * j.transpose();
        jtr += j * r[i];
    }
    (jtj, jtr)
}

/// Dominant frequency of the mean-removed record from a zero-padded FFT
/// with parabolic peak interpolation.
fn spectral_guess(values: &[f64], dt: f64) -> Result<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let padded = n * PAD_FACTOR;
    let mut buf: Vec<Complex64> = values.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
    buf.resize(padded, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let power: Vec<f64> = buf[..padded / 2].iter().map(|c| c.norm_sqr()).collect();

    // skip the first half natural bin, where the mean-removal leakage sits
    let start = PAD_FACTOR / 2;
    let (peak, peak_power) = power
        .iter()
        .enumerate()
        .skip(start)
        .fold((start, f64::MIN), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
    let natural: Vec<f64> = power.iter().step_by(PAD_FACTOR).skip(1).copied().collect();
    let mean_power = natural.iter().sum::<f64>() / natural.len().max(1) as f64;
    if !(peak_power > 0.0) || peak_power < PEAK_SIGNIFICANCE * mean_power {
        return Err(Error::NoOscillationDetected);
    }
    let mut bin = peak as f64;
    if peak > start && peak + 1 < power.len() {
        let (a, b, c) = (power[peak - 1].sqrt(), power[peak].sqrt(), power[peak + 1].sqrt());
        let denom = a - 2.0 * b + c;
        if denom != 0.0 {
            bin += 0.5 * (a - c) / denom;
        }
    }
    Ok(bin / (padded as f64 * dt))
}

/// Linear least squares for (C, A, ψ) with the frequency held fixed.
fn linear_start(t: &[f64], y: &[f64], f: f64) -> Vector4<f64> {
    let design = DMatrix::from_fn(t.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => (2.0 * PI * f * t[i]).cos(),
        _ => (2.0 * PI * f * t[i]).sin(),
    });
    let rhs = DVector::from_column_slice(y);
    let sol = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .unwrap_or_else(|_| DVector::from_column_slice(&[0.0, 0.0, 0.0]));
    let (c0, c1, c2) = (sol[0], sol[1], sol[2]);
    // C + A/2 − (A/2) cos(2πft + 2ψ)
    let amp = 2.0 * c1.hypot(c2);
    let psi = 0.5 * c2.atan2(-c1);
    Vector4::new(c0 - amp / 2.0, amp, f, psi)
}

/// Frequency of a sampled sin² oscillation.
pub fn estimate_frequency(series: &TimeSeries) -> Result<FrequencyEstimate> {
    let t = &series.times;
    let y = &series.values;
    let n = t.len();
    if n != y.len() {
        return Err(Error::InvalidSeries("times and values differ in length".into()));
    }
    if n < MIN_SAMPLES {
        return Err(Error::InvalidSeries(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    if !(dt > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt) {
        return Err(Error::InvalidSeries("samples must be uniformly spaced in time".into()));
    }
    let (lo, hi) = y.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi - lo <= 1e-12 {
        return Err(Error::NoOscillationDetected);
    }

    let f0 = spectral_guess(y, dt)?;
    let mut p = linear_start(t, y, f0);
    let (mut r, mut cost) = residuals(&p, t, y);
    let mut damping = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..200 {
        iterations = iter + 1;
        let (jtj, jtr) = normal_matrix(&p, t, &r);
        let mut accepted = false;
        for _ in 0..30 {
            let mut lhs = jtj;
            for d in 0..4 {
                lhs[(d, d)] += damping * jtj[(d, d)].max(1e-300);
            }
            let Some(step) = lhs.lu().solve(&jtr) else {
                damping *= 10.0;
                continue;
            };
            let trial = p + step;
            let (r_trial, cost_trial) = residuals(&trial, t, y);
            if cost_trial.is_finite() && cost_trial <= cost {
                let small_step = (step[2] / trial[2]).abs() < 1e-13;
                let flat = cost - cost_trial <= 1e-15 * cost.max(1e-300);
                p = trial;
                r = r_trial;
                cost = cost_trial;
                damping = (damping / 3.0).max(1e-12);
                accepted = true;
                if small_step || flat || cost < 1e-28 {
                    converged = true;
                }
                break;
            }
            damping *= 4.0;
        }
        if !accepted {
            // no downhill step left: at a minimum to working precision
            converged = true;
        }
        if converged {
            break;
        }
    }

    // canonical sign: A > 0
    if p[1] < 0.0 {
        p = Vector4::new(p[0] + p[1], -p[1], p[2], p[3] + PI / 2.0);
    }
    let f_hat = p[2].abs();
    let span = t[n - 1] - t[0] + dt;
    let dof = (n - 4) as f64;
    let (jtj, _) = normal_matrix(&p, t, &r);
    let stderr = jtj
        .try_inverse()
        .map(|inv| (cost / dof * inv[(2, 2)]).max(0.0).sqrt())
        .unwrap_or(f64::INFINITY);
    let ok = converged && f_hat.is_finite() && f_hat > 0.0 && p[1] > 0.0 && span * f_hat >= 2.0;
    Ok(FrequencyEstimate {
        f_hat,
        stderr,
        fit_residual: (cost / n as f64).sqrt(),
        converged: ok,
        f_initial: f0,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reconstruction {
    pub delta0: f64,
    pub stderr: f64,
    pub regime: Regime,
}

/// Δ₀ from a converged frequency estimate, with first-order error
/// σ_Δ = 2π²f σ_f / λ².
pub fn reconstruct(estimate: &FrequencyEstimate, detuning: f64, lambda: f64) -> Result<Reconstruction> {
    if !estimate.converged {
        return Err(Error::FitNotConverged);
    }
    let delta0 = epr_from_frequency(estimate.f_hat, detuning, lambda)?;
    let stderr = 2.0 * PI * estimate.f_hat * estimate.stderr * PI / (lambda * lambda);
    Ok(Reconstruction { delta0, stderr, regime: Regime::classify(delta0) })
}

/// Photon frequency of the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhotonFrequency {
    Value(f64),
    ResonantAlpha,
    ResonantBeta,
}

/// Coupling scale λ, given directly or as A₀ (λ = A₀|k|√S).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingScale {
    Lambda(f64),
    Amplitude(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySetup {
    pub omega: PhotonFrequency,
    pub coupling: CouplingScale,
}

/// Record length and sampling. `t_max`/`n_samples` override the
/// period-relative defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Acquisition {
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default = "Acquisition::default_periods")]
    pub periods: f64,
    #[serde(default = "Acquisition::default_samples_per_period")]
    pub samples_per_period: usize,
    #[serde(default = "Acquisition::default_shots")]
    pub shots: Shots,
    #[serde(default)]
    pub seed: u64,
}

impl Acquisition {
    fn default_periods() -> f64 {
        4.0
    }
    fn default_samples_per_period() -> usize {
        64
    }
    fn default_shots() -> Shots {
        Shots::Count(10_000)
    }

    /// (t_max, n_samples) for an oscillation of frequency `f`.
    pub fn resolve(&self, f: f64) -> (f64, usize) {
        let t_max = self.t_max.unwrap_or(self.periods / f);
        let n = self
            .n_samples
            .unwrap_or_else(|| (self.samples_per_period as f64 * t_max * f).round().max(2.0) as usize);
        (t_max, n)
    }
}

impl Default for Acquisition {
    fn default() -> Self {
        Self {
            t_max: None,
            n_samples: None,
            periods: Self::default_periods(),
            samples_per_period: Self::default_samples_per_period(),
            shots: Self::default_shots(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Modes,
    Coupling,
    Rabi,
    Synthesis,
    Estimation,
    Reconstruction,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage:?} stage: {source}")]
pub struct ProtocolError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

fn at(stage: Stage) -> impl FnOnce(Error) -> ProtocolError {
    move |source| ProtocolError { stage, source }
}

/// One end-to-end run of the read-out protocol at a single k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolReport {
    pub k: [f64; 3],
    pub epsilon: f64,
    pub abs_g: f64,
    pub abs_gamma: f64,
    pub r: f64,
    pub phi: f64,
    pub omega_alpha: f64,
    pub omega_beta: f64,
    pub block: BlockKind,
    pub omega_photon: f64,
    pub detuning: f64,
    pub lambda: f64,
    pub delta_k_re: f64,
    pub delta_k_im: f64,
    pub f_true: f64,
    pub visibility: f64,
    pub t_max: f64,
    pub n_samples: usize,
    pub shots: Shots,
    pub seed: Option<u64>,
    pub f_hat: f64,
    pub f_stderr: f64,
    pub f_initial: f64,
    pub fit_residual: f64,
    pub converged: bool,
    pub delta0_true: f64,
    pub delta0_est: f64,
    pub delta0_stderr: f64,
    pub rel_err: f64,
    pub regime_true: Regime,
    pub regime_est: Regime,
    #[serde(skip)]
    pub series: TimeSeries,
}

pub fn run_protocol(
    params: &ModelParams,
    spec: &LatticeSpec,
    k: &KVector,
    cavity: &CavitySetup,
    acquisition: &Acquisition,
) -> std::result::Result<ProtocolReport, ProtocolError> {
    let sol = solve_modes(params, spec, k).map_err(at(Stage::Modes))?;
    let hybrid = sol.hybrid;
    let bog = sol.bogoliubov;

    let lambda = match cavity.coupling {
        CouplingScale::Lambda(l) => l,
        CouplingScale::Amplitude(a0) => lambda_from_cavity(a0, k.norm(), params.S),
    };
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(at(Stage::Coupling)(Error::UnknownCouplingScale));
    }
    let delta_k = coupling_strength(lambda, &bog);
    let omega = match cavity.omega {
        PhotonFrequency::Value(w) => w,
        PhotonFrequency::ResonantAlpha => hybrid.omega_alpha,
        PhotonFrequency::ResonantBeta => hybrid.omega_beta,
    };
    let kind = if (omega - hybrid.omega_alpha).abs() <= (omega - hybrid.omega_beta).abs() {
        BlockKind::Alpha
    } else {
        BlockKind::Beta
    };
    let block = CavityBlock::from_modes(kind, &hybrid, omega, delta_k);
    let rp = rabi(&block).map_err(at(Stage::Rabi))?;

    let (t_max, n_samples) = acquisition.resolve(rp.f);
    let series = synthesize(&block, t_max, n_samples, acquisition.shots, acquisition.seed)
        .map_err(at(Stage::Synthesis))?;
    let estimate = estimate_frequency(&series).map_err(at(Stage::Estimation))?;
    let rec = reconstruct(&estimate, block.detuning(), lambda).map_err(at(Stage::Reconstruction))?;

    let delta0_true = ground_delta0(bog.r, bog.phi);
    Ok(ProtocolReport {
        k: k.0,
        epsilon: sol.bare.epsilon,
        abs_g: sol.bare.g.norm(),
        abs_gamma: bog.Gamma.norm(),
        r: bog.r,
        phi: bog.phi,
        omega_alpha: hybrid.omega_alpha,
        omega_beta: hybrid.omega_beta,
        block: kind,
        omega_photon: omega,
        detuning: block.detuning(),
        lambda,
        delta_k_re: delta_k.re,
        delta_k_im: delta_k.im,
        f_true: rp.f,
        visibility: rp.visibility,
        t_max,
        n_samples,
        shots: acquisition.shots,
        seed: series.seed,
        f_hat: estimate.f_hat,
        f_stderr: estimate.stderr,
        f_initial: estimate.f_initial,
        fit_residual: estimate.fit_residual,
        converged: estimate.converged,
        delta0_true,
        delta0_est: rec.delta0,
        delta0_stderr: rec.stderr,
        rel_err: (rec.delta0 - delta0_true).abs() / delta0_true,
        regime_true: Regime::classify(delta0_true),
        regime_est: rec.regime,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_preset, G_TYPE_SIMPLE_CUBIC};

    fn resonant(delta: f64) -> CavityBlock {
        CavityBlock::new(BlockKind::Alpha, 2.0, 2.0, Complex64::new(delta, 0.0))
    }

    fn record(block: &CavityBlock, shots: Shots, seed: u64) -> TimeSeries {
        let f = rabi(block).unwrap().f;
        synthesize(block, 4.0 / f, 256, shots, seed).unwrap()
    }

    fn heisenberg() -> ModelParams {
        ModelParams { J1: 1.0, J2: 0.0, D1: 0.0, D2: 0.0, K_aniso: 0.5, B_field: 0.0, S: 1.0 }
    }

    #[test]
    fn exact_series_is_pointwise_formula() {
        let block = resonant(0.1);
        let s = record(&block, Shots::Exact, 0);
        for (t, v) in s.times.iter().zip(&s.values) {
            assert_eq!(*v, transition_probabilities(&block, *t).1.clamp(0.0, 1.0));
        }
        assert_eq!(s.seed, None);
    }

    #[test]
    fn seeded_series_are_reproducible() {
        let block = resonant(0.1);
        let a = record(&block, Shots::Count(10_000), 7);
        let b = record(&block, Shots::Count(10_000), 7);
        let c = record(&block, Shots::Count(10_000), 8);
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert!(a.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn shot_noise_shrinks_with_shots() {
        let block = resonant(0.1);
        let exact = record(&block, Shots::Exact, 0);
        let spread = |shots| {
            let s = record(&block, Shots::Count(shots), 3);
            s.values.iter().zip(&exact.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        };
        assert!(spread(100) > spread(10_000));
        assert!(spread(10_000) > spread(1_000_000));
    }

    #[test]
    fn nyquist_violation() {
        let block = resonant(0.1);
        let f = rabi(&block).unwrap().f;
        let err = synthesize(&block, 10.0 / f, 30, Shots::Exact, 0).unwrap_err();
        assert!(matches!(err, Error::NyquistViolation { .. }));
    }

    #[test]
    fn exact_frequency_recovery() {
        let block = resonant(0.1);
        let est = estimate_frequency(&record(&block, Shots::Exact, 0)).unwrap();
        assert!(est.converged);
        assert!((est.f_hat - 0.1 / PI).abs() / (0.1 / PI) < 1e-6);
    }

    #[test]
    fn detuned_off_grid_recovery() {
        let block = CavityBlock::new(BlockKind::Beta, 2.23, 2.0, Complex64::from_polar(0.07, 0.4));
        let f = rabi(&block).unwrap().f;
        let s = synthesize(&block, 5.37 / f, 400, Shots::Exact, 0).unwrap();
        let est = estimate_frequency(&s).unwrap();
        assert!(est.converged);
        assert!((est.f_hat - f).abs() / f < 1e-9, "{} vs {f}", est.f_hat);
    }

    #[test]
    fn flat_record_has_no_oscillation() {
        let uncoupled = CavityBlock::new(BlockKind::Alpha, 2.6, 2.0, Complex64::new(0.0, 0.0));
        let s = synthesize(&uncoupled, 100.0, 200, Shots::Exact, 0).unwrap();
        assert_eq!(estimate_frequency(&s).unwrap_err(), Error::NoOscillationDetected);
    }

    #[test]
    fn too_short_record() {
        let s = synthesize(&resonant(0.1), 100.0, 20, Shots::Exact, 0).unwrap();
        assert!(matches!(estimate_frequency(&s), Err(Error::InvalidSeries(_))));
    }

    #[test]
    fn noisy_recovery_is_close() {
        let block = resonant(0.1);
        let f = rabi(&block).unwrap().f;
        let mut good = 0;
        for seed in 0..40 {
            let est = estimate_frequency(&record(&block, Shots::Count(10_000), seed)).unwrap();
            if est.converged && (est.f_hat - f).abs() / f < 0.02 {
                good += 1;
            }
        }
        assert!(good >= 38, "{good}/40 within 2%");
    }

    #[test]
    fn reconstruction_scaling() {
        let est = FrequencyEstimate { f_hat: 0.2 / PI, stderr: 1e-4, fit_residual: 0.0, converged: true, f_initial: 0.0, iterations: 1 };
        let a = reconstruct(&est, 0.0, 0.2).unwrap();
        assert!((a.delta0 - 1.0).abs() < 1e-14);
        assert_eq!(a.regime, Regime::Threshold);
        let b = reconstruct(&est, 0.0, 0.4).unwrap();
        assert!((a.delta0 / b.delta0 - 4.0).abs() < 1e-12);
        assert!((a.stderr - 2.0 * PI * PI * est.f_hat * 1e-4 / 0.04).abs() < 1e-15);
        let bad = FrequencyEstimate { converged: false, ..est };
        assert_eq!(reconstruct(&bad, 0.0, 0.2).unwrap_err(), Error::FitNotConverged);
    }

    fn exact_setup(omega: PhotonFrequency) -> (CavitySetup, Acquisition) {
        (
            CavitySetup { omega, coupling: CouplingScale::Lambda(0.05) },
            Acquisition { shots: Shots::Exact, ..Acquisition::default() },
        )
    }

    #[test]
    fn protocol_heisenberg_cubic_point() {
        let spec = build_preset(G_TYPE_SIMPLE_CUBIC, 1.0).unwrap();
        let k = KVector::new(0.0, 0.0, PI).unwrap();
        let (cav, acq) = exact_setup(PhotonFrequency::ResonantAlpha);
        let rep = run_protocol(&heisenberg(), &spec, &k, &cav, &acq).unwrap();
        assert!((rep.abs_gamma - 2.0 / 7.0).abs() < 1e-15);
        let gamma = 2.0 / 7.0;
        let tanh_r = (1.0 - (45.0f64).sqrt() / 7.0) / gamma;
        let expected = (-2.0 * tanh_r.atanh()).exp();
        assert!((rep.delta0_true - expected).abs() < 1e-14);
        assert!(rep.rel_err < 1e-6, "rel_err {}", rep.rel_err);
        assert_eq!(rep.regime_true, Regime::NonlocalEntangled);
    }

    #[test]
    fn protocol_decoupled_limit() {
        let spec = build_preset(G_TYPE_SIMPLE_CUBIC, 1.0).unwrap();
        let p = ModelParams { J1: 0.0, ..heisenberg() };
        let (cav, acq) = exact_setup(PhotonFrequency::ResonantAlpha);
        let rep = run_protocol(&p, &spec, &KVector::new(0.0, 0.0, 1.0).unwrap(), &cav, &acq).unwrap();
        assert_eq!(rep.r, 0.0);
        assert_eq!(rep.delta0_true, 1.0);
        assert!((rep.delta0_est - 1.0).abs() < 1e-6);
    }

    #[test]
    fn protocol_either_block() {
        let spec = build_preset(G_TYPE_SIMPLE_CUBIC, 1.0).unwrap();
        let p = ModelParams { B_field: 0.4, D1: 0.2, ..heisenberg() };
        let k = KVector::new(0.0, 0.0, 1.2).unwrap();
        let (cav_a, acq) = exact_setup(PhotonFrequency::ResonantAlpha);
        let (cav_b, _) = exact_setup(PhotonFrequency::ResonantBeta);
        let a = run_protocol(&p, &spec, &k, &cav_a, &acq).unwrap();
        let b = run_protocol(&p, &spec, &k, &cav_b, &acq).unwrap();
        assert_eq!(a.block, BlockKind::Alpha);
        assert_eq!(b.block, BlockKind::Beta);
        assert!((a.delta0_est - b.delta0_est).abs() / a.delta0_true < 1e-6);
    }

    #[test]
    fn protocol_errors_are_staged() {
        let spec = build_preset(G_TYPE_SIMPLE_CUBIC, 1.0).unwrap();
        let cav = CavitySetup { omega: PhotonFrequency::ResonantAlpha, coupling: CouplingScale::Amplitude(1.0) };
        let err = run_protocol(&heisenberg(), &spec, &KVector::zero(), &cav, &Acquisition::default()).unwrap_err();
        assert_eq!(err.stage, Stage::Coupling);
        let hot = ModelParams { B_field: 20.0, ..heisenberg() };
        let err = run_protocol(&hot, &spec, &KVector::zero(), &cav, &Acquisition::default()).unwrap_err();
        assert_eq!(err.stage, Stage::Modes);
    }

    #[test]
    fn seed_derivation_is_stable() {
        assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 2), derive_seed(1, 3));
        assert_ne!(derive_seed(1, 2), derive_seed(2, 2));
    }
}
