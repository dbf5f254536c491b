//! Seeded test functions with closed-form transforms: Gaussians, modulated
//! Gaussians and band-limited noise, all finite sums of Gabor atoms
//! `a · exp(-π|x - c|²/w²) · e^{2πi ξ·x}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spectral::{GridFunction, GridSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub amp: Complex64,
    pub center: Vec<f64>,
    pub width: f64,
    pub freq: Vec<f64>,
}

impl Atom {
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut r2 = 0.0;
        let mut phase = 0.0;
        for k in 0..x.len() {
            r2 += (x[k] - self.center[k]).powi(2);
            phase += self.freq[k] * x[k];
        }
        self.amp
            * Complex64::from_polar(
                (-PI * r2 / (self.width * self.width)).exp(),
                2.0 * PI * phase,
            )
    }

    pub fn eval_hat(&self, y: &[f64]) -> Complex64 {
        let d = y.len() as i32;
        let mut r2 = 0.0;
        let mut phase = 0.0;
        for k in 0..y.len() {
            let u = y[k] - self.freq[k];
            r2 += u * u;
            phase -= self.center[k] * u;
        }
        let w = self.width;
        self.amp * Complex64::from_polar(w.powi(d) * (-PI * w * w * r2).exp(), 2.0 * PI * phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Modulated,
    Noise,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Modulated => "modulated",
            Self::Noise => "noise",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFunction {
    pub id: usize,
    pub family: Family,
    pub atoms: Vec<Atom>,
}

impl CorpusFunction {
    pub fn label(&self) -> String {
        format!("{}-{}", self.family.name(), self.id)
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.atoms.iter().map(|a| a.eval(x)).sum()
    }

    pub fn eval_hat(&self, y: &[f64]) -> Complex64 {
        self.atoms.iter().map(|a| a.eval_hat(y)).sum()
    }

    pub fn sample(&self, grid: &GridSpec) -> GridFunction {
        GridFunction::from_fn(*grid, |x| self.eval(x))
    }

    pub fn sample_hat(&self, grid: &GridSpec) -> GridFunction {
        GridFunction::from_fn(*grid, |y| self.eval_hat(y))
    }
}

/// Sampling ranges for the generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusRanges {
    pub width: (f64, f64),
    pub center: f64,
    pub freq: f64,
    pub noise_width: (f64, f64),
    pub noise_freq: f64,
    pub tones: usize,
}

impl Default for CorpusRanges {
    fn default() -> Self {
        Self {
            width: (0.5, 4.0),
            center: 16.0,
            freq: 16.0,
            noise_width: (2.0, 6.0),
            noise_freq: 8.0,
            tones: 8,
        }
    }
}

/// `count` functions in `dim` dimensions cycling through the three families.
pub fn generate(seed: u64, count: usize, dim: usize) -> Vec<CorpusFunction> {
    generate_with(seed, count, dim, &CorpusRanges::default())
}

pub fn generate_with(seed: u64, count: usize, dim: usize, r: &CorpusRanges) -> Vec<CorpusFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vec_in = |rng: &mut ChaCha8Rng, half: f64| -> Vec<f64> {
        (0..dim).map(|_| rng.gen_range(-half..=half)).collect()
    };
    (0..count)
        .map(|id| {
            let family = [Family::Gaussian, Family::Modulated, Family::Noise][id % 3];
            let atoms = match family {
                Family::Gaussian => vec![Atom {
                    amp: Complex64::new(1.0, 0.0),
                    center: vec_in(&mut rng, r.center),
                    width: rng.gen_range(r.width.0..=r.width.1),
                    freq: vec![0.0; dim],
                }],
                Family::Modulated => {
                    let center = vec_in(&mut rng, r.center);
                    let width = rng.gen_range(r.width.0..=r.width.1);
                    vec![Atom {
                        amp: Complex64::new(1.0, 0.0),
                        center,
                        width,
                        freq: vec_in(&mut rng, r.freq),
                    }]
                }
                Family::Noise => {
                    let width = rng.gen_range(r.noise_width.0..=r.noise_width.1);
                    (0..r.tones)
                        .map(|_| {
                            let amp = Complex64::new(
                                rng.gen_range(-1.0..=1.0),
                                rng.gen_range(-1.0..=1.0),
                            );
                            Atom {
                                amp,
                                center: vec![0.0; dim],
                                width,
                                freq: vec_in(&mut rng, r.noise_freq),
                            }
                        })
                        .collect()
                }
            };
            CorpusFunction { id, family, atoms }
        })
        .collect()
}
