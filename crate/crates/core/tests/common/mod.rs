// Random instances shared by the integration tests.
#![allow(dead_code)]

use cpcox::linalg::{Matrix, Vector};
use cpcox::rng::StreamRng;
use cpcox::{Subject, SurvivalDataset};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

/// `n` subjects with exponential times, about `event_rate` events and `p`
/// standard normal covariates. `ties` rounds times to one decimal, `weights`
/// draws integer weights in 1..=3.
pub fn random_dataset(rng: &mut StreamRng, n: usize, p: usize, event_rate: f64, ties: bool, weights: bool) -> SurvivalDataset {
    let subjects = (0..n)
        .map(|_| {
            let mut t: f64 = rng.sample::<f64, _>(Exp1) + 0.01;
            if ties {
                t = (t * 10.0).round().max(1.0) / 10.0;
            }
            let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
            let s = Subject::new(t, rng.gen_bool(event_rate), z);
            if weights {
                s.with_weight(rng.gen_range(1..=3))
            } else {
                s
            }
        })
        .collect();
    SurvivalDataset::new(subjects, None).unwrap()
}

/// `L L' + floor I` with standard normal `L`.
pub fn random_spd(rng: &mut StreamRng, p: usize, floor: f64) -> Matrix {
    let l = Matrix::from_fn(p, p, |_, _| rng.sample(StandardNormal));
    &l * l.transpose() + Matrix::identity(p, p) * floor
}

pub fn random_vector(rng: &mut StreamRng, p: usize) -> Vector {
    Vector::from_fn(p, |_, _| rng.sample(StandardNormal))
}
