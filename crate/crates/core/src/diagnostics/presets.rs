//! Initial-condition presets.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{Grid2D, ScalarField2D};

/// Registered preset names.
pub const PRESETS: [&str; 4] = ["sinprod", "two-bubbles", "random-uniform", "constant"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bubble<T> {
    pub x: T,
    pub y: T,
    pub radius: T,
}

impl<T: Scalar> Bubble<T> {
    /// The two bubbles of the coalescence benchmark on the unit square.
    pub fn benchmark_pair() -> Vec<Self> {
        vec![
            Bubble {
                x: T::of(0.35),
                y: T::of(0.35),
                radius: T::of(0.15),
            },
            Bubble {
                x: T::of(0.6),
                y: T::of(0.6),
                radius: T::of(0.2),
            },
        ]
    }
}

/// A fully specified initial condition.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition<T> {
    /// `amplitude * sin(x) sin(y)`.
    SinProd {
        amplitude: T,
    },
    /// `sum_i -tanh((|x - x_i| - R_i) / (sqrt(2) eps)) + 1`.
    TwoBubbles {
        epsilon: T,
        bubbles: Vec<Bubble<T>>,
    },
    /// `mean + amplitude * U`, `U` i.i.d. uniform on `[-1, 1)`.
    RandomUniform {
        mean: T,
        amplitude: T,
        seed: u64,
    },
    Constant {
        value: T,
    },
}

/// Loose preset parameters as read from a config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PresetParams<T> {
    pub amplitude: Option<T>,
    pub mean: Option<T>,
    pub value: Option<T>,
    pub epsilon: Option<T>,
    pub bubbles: Option<Vec<Bubble<T>>>,
}

fn missing(preset: &str, key: &str) -> Error {
    Error::Config(format!("preset '{preset}' needs '{key}'"))
}

impl<T: Scalar> InitialCondition<T> {
    pub fn from_preset(name: &str, p: &PresetParams<T>, seed: Option<u64>) -> Result<Self> {
        match name {
            "sinprod" => Ok(InitialCondition::SinProd {
                amplitude: p.amplitude.unwrap_or_else(|| T::of(0.05)),
            }),
            "two-bubbles" => Ok(InitialCondition::TwoBubbles {
                epsilon: p.epsilon.ok_or_else(|| missing(name, "epsilon"))?,
                bubbles: p.bubbles.clone().unwrap_or_else(Bubble::benchmark_pair),
            }),
            "random-uniform" => Ok(InitialCondition::RandomUniform {
                mean: p.mean.ok_or_else(|| missing(name, "mean"))?,
                amplitude: p.amplitude.ok_or_else(|| missing(name, "amplitude"))?,
                seed: seed.ok_or_else(|| missing(name, "seed"))?,
            }),
            "constant" => Ok(InitialCondition::Constant {
                value: p.value.ok_or_else(|| missing(name, "value"))?,
            }),
            other => Err(Error::Usage(format!(
                "unknown preset '{other}' (known: {})",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::SinProd { .. } => PRESETS[0],
            InitialCondition::TwoBubbles { .. } => PRESETS[1],
            InitialCondition::RandomUniform { .. } => PRESETS[2],
            InitialCondition::Constant { .. } => PRESETS[3],
        }
    }

    /// Samples the condition on `grid`.
    pub fn build(&self, grid: &Grid2D<T>) -> Result<ScalarField2D<T>> {
        let field = match self {
            InitialCondition::SinProd { amplitude } => {
                let a = *amplitude;
                ScalarField2D::from_fn(grid, |x, y| a * x.sin() * y.sin())
            }
            InitialCondition::TwoBubbles { epsilon, bubbles } => {
                if !(*epsilon > T::zero()) {
                    return Err(Error::Config("two-bubbles needs epsilon > 0".into()));
                }
                let width = T::SQRT_2() * *epsilon;
                ScalarField2D::from_fn(grid, |x, y| {
                    bubbles.iter().fold(T::one(), |acc, b| {
                        let d = ((x - b.x).powi(2) + (y - b.y).powi(2)).sqrt();
                        acc - ((d - b.radius) / width).tanh()
                    })
                })
            }
            InitialCondition::RandomUniform {
                mean,
                amplitude,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let values = (0..grid.len())
                    .map(|_| *mean + *amplitude * T::of(2.0 * unit(&mut rng) - 1.0))
                    .collect();
                ScalarField2D::from_values(grid, values)?
            }
            InitialCondition::Constant { value } => ScalarField2D::constant(grid, *value),
        };
        field.check_finite("initial condition")?;
        Ok(field)
    }
}

/// Uniform on `[0, 1)` from the top 53 bits of one draw.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Builds preset `name` on `grid`. Random presets need `seed`.
pub fn make_initial<T: Scalar>(
    name: &str,
    grid: &Grid2D<T>,
    params: &PresetParams<T>,
    seed: Option<u64>,
) -> Result<ScalarField2D<T>> {
    InitialCondition::from_preset(name, params, seed)?.build(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sinprod_peak() {
        let g = Grid2D::new(2.0 * PI, 2.0 * PI, 8, 8).unwrap();
        let f = make_initial("sinprod", &g, &PresetParams::default(), None).unwrap();
        // node (2, 2) is (pi/2, pi/2)
        assert!((f.get(2, 2) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn two_bubbles_centre_and_background() {
        let g = Grid2D::new(1.0, 1.0, 20, 20).unwrap();
        let p = PresetParams {
            epsilon: Some(0.01),
            ..Default::default()
        };
        let f = make_initial("two-bubbles", &g, &p, None).unwrap();
        // (0.35, 0.35) is node (7, 7); the far bubble contributes -1
        let w = 2f64.sqrt() * 0.01;
        let far = (0.25 * 2f64.sqrt() - 0.2) / w;
        let centre = -(-0.15 / w).tanh() - far.tanh() + 1.0;
        assert!((f.get(7, 7) - centre).abs() < 1e-12);
        assert!((f.get(7, 7) - 1.0).abs() < 1e-9);
        assert!((f.get(0, 0) + 1.0).abs() < 1e-9);
        assert!((f.get(12, 12) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_uniform_statistics_and_reproducibility() {
        let g = Grid2D::new(1.0f64, 1.0, 64, 64).unwrap();
        let p = PresetParams {
            mean: Some(0.25),
            amplitude: Some(0.4),
            ..Default::default()
        };
        let a = make_initial("random-uniform", &g, &p, Some(7)).unwrap();
        let b = make_initial("random-uniform", &g, &p, Some(7)).unwrap();
        let c = make_initial("random-uniform", &g, &p, Some(8)).unwrap();
        assert_eq!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
        let n = g.len() as f64;
        assert!((a.mean() - 0.25).abs() <= 3.0 * 0.4 / n.sqrt());
        assert!(a.values().iter().all(|&v| (-0.15..0.65).contains(&v)));
    }

    #[test]
    fn random_uniform_first_draws_are_pinned() {
        let g = Grid2D::new(1.0, 1.0, 4, 4).unwrap();
        let p = PresetParams {
            mean: Some(0.0),
            amplitude: Some(1.0),
            ..Default::default()
        };
        let f = make_initial("random-uniform", &g, &p, Some(42)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let expect = 2.0 * ((rng.next_u64() >> 11) as f64 / 9007199254740992.0) - 1.0;
        assert_eq!(f.values()[0], expect);
    }

    #[test]
    fn missing_parameters_and_unknown_names() {
        let g = Grid2D::new(1.0, 1.0, 4, 4).unwrap();
        let p = PresetParams::<f64>::default();
        assert!(matches!(
            make_initial("random-uniform", &g, &p, Some(1)),
            Err(Error::Config(_))
        ));
        let p = PresetParams {
            mean: Some(0.0),
            amplitude: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            make_initial("random-uniform", &g, &p, None),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            make_initial("two-bubbles", &g, &p, None),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            make_initial("checkerboard", &g, &p, None),
            Err(Error::Usage(_))
        ));
    }
}
