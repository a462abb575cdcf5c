//! Per-trial truth fields.

use anyhow::{Context, Result};
use fleetsample::field::{diffusion_field, gaussian_mixture_field, load_field, MixtureSampler};
use fleetsample::rng::{self, tag};
use fleetsample::{Cell, ScoreMap};
use rand::Rng;

use crate::config::{DiffusionSettings, ExperimentConfig, FieldSource};

/// Components of the random mixture used when no field source is given.
pub const DEFAULT_COMPONENTS: usize = 2;

#[derive(Clone, Debug)]
pub enum FieldGenerator {
    Fixed(ScoreMap),
    Gauss {
        width: usize,
        height: usize,
        sampler: MixtureSampler,
    },
    Diffusion {
        width: usize,
        height: usize,
        settings: DiffusionSettings,
    },
}

impl FieldGenerator {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let (width, height) = (config.width, config.height);
        let source = config.field.clone().unwrap_or(FieldSource::Gauss(DEFAULT_COMPONENTS));
        Ok(match source {
            FieldSource::File(path) => FieldGenerator::Fixed(
                load_field(&path).with_context(|| format!("cannot load field {}", path.display()))?,
            ),
            FieldSource::Gauss(n) => FieldGenerator::Gauss {
                width,
                height,
                sampler: MixtureSampler::with_components(n),
            },
            FieldSource::Diffusion => FieldGenerator::Diffusion {
                width,
                height,
                settings: config.diffusion.clone(),
            },
        })
    }

    pub fn dimensions(&self) -> (usize, usize) {
        match self {
            FieldGenerator::Fixed(map) => (map.width(), map.height()),
            FieldGenerator::Gauss { width, height, .. } | FieldGenerator::Diffusion { width, height, .. } => {
                (*width, *height)
            }
        }
    }

    /// The field of the trial with seed `seed`.
    pub fn generate(&self, seed: u64) -> Result<ScoreMap> {
        let mut r = rng::stream(seed, &[tag::FIELD]);
        let map = match self {
            FieldGenerator::Fixed(map) => map.clone(),
            FieldGenerator::Gauss { width, height, sampler } => {
                let spec = sampler.sample(*width, *height, &mut r);
                gaussian_mixture_field(*width, *height, &spec)?
            }
            FieldGenerator::Diffusion { width, height, settings } => {
                let sources: Vec<(Cell, f64)> = (0..settings.sources)
                    .map(|_| {
                        let cell = Cell::new(r.gen_range(0..*height), r.gen_range(0..*width));
                        (cell, r.gen_range(0.5..=1.0))
                    })
                    .collect();
                diffusion_field(*width, *height, &sources, settings.coeff, settings.steps)?
            }
        };
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(source: Option<FieldSource>) -> ExperimentConfig {
        ExperimentConfig {
            field: source,
            width: 12,
            height: 9,
            ..Default::default()
        }
    }

    #[test]
    fn generated_fields_are_seeded() {
        for source in [None, Some(FieldSource::Gauss(1)), Some(FieldSource::Diffusion)] {
            let g = FieldGenerator::new(&config(source)).unwrap();
            assert_eq!(g.dimensions(), (12, 9));
            let a = g.generate(3).unwrap();
            assert_eq!((a.width(), a.height()), (12, 9));
            assert_eq!(a, g.generate(3).unwrap());
            assert_ne!(a, g.generate(4).unwrap());
            assert!((a.max() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn file_field_is_fixed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(&path, "0,1,2\n3,4,5\n").unwrap();
        let g = FieldGenerator::new(&config(Some(FieldSource::File(path)))).unwrap();
        assert_eq!(g.dimensions(), (3, 2));
        assert_eq!(g.generate(1).unwrap(), g.generate(2).unwrap());
        let missing = config(Some(FieldSource::File(dir.path().join("nope.csv"))));
        assert!(FieldGenerator::new(&missing).is_err());
    }
}
