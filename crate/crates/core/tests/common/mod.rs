#![allow(dead_code)]

use mubforge_core::constellation::{realize, ConstellationSpec, ParameterPoint, StateSet};
use mubforge_core::constructions::{
    prime_complete_set, qubit_complete_set, subconstellation, tensor_triple,
};
use mubforge_core::equivalence::{
    apply_global_unitary, apply_vector_phases, permute_within, swap_groups,
};
use mubforge_core::{MuBasesSet, C64};
use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct TestRng(ChaCha8Rng);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn angle(&mut self) -> f64 {
        self.unit() * std::f64::consts::TAU
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            p.swap(i, self.below(i + 1));
        }
        p
    }
}

/// Unitary from the QR factorization of a matrix with random entries.
pub fn random_unitary(d: usize, rng: &mut TestRng) -> DMatrix<C64> {
    let m = DMatrix::from_fn(d, d, |_, _| C64::new(rng.unit() - 0.5, rng.unit() - 0.5));
    m.qr().q()
}

pub fn random_construction(rng: &mut TestRng) -> MuBasesSet {
    match rng.below(6) {
        0 => qubit_complete_set(),
        1 => prime_complete_set(3).unwrap(),
        2 => prime_complete_set(5).unwrap(),
        3 => prime_complete_set(7).unwrap(),
        4 => tensor_triple(2, 3).unwrap(),
        _ => tensor_triple(2, 2).unwrap(),
    }
}

/// A restricted sub-constellation of a known MU set.
pub fn random_mu_set(rng: &mut TestRng) -> StateSet {
    let set = random_construction(rng);
    let d = set.d;
    let k = 1 + rng.below((set.bases.len() - 1).min(3));
    let extra: Vec<usize> = (0..k).map(|_| 1 + rng.below(d - 1)).collect();
    let spec = ConstellationSpec::restricted(d, &extra).unwrap();
    subconstellation(&set, &spec).unwrap()
}

pub fn random_point(spec: &ConstellationSpec, rng: &mut TestRng) -> ParameterPoint {
    let angles = (0..spec.parameter_count()).map(|_| rng.angle()).collect();
    ParameterPoint::new(spec.clone(), angles).unwrap()
}

/// A random template realization, MU against group 0 but otherwise generic.
pub fn random_template(rng: &mut TestRng) -> StateSet {
    let d = 2 + rng.below(6);
    let k = 1 + rng.below(d.min(3));
    let extra: Vec<usize> = (0..k).map(|_| 1 + rng.below(d - 1)).collect();
    let spec = ConstellationSpec::restricted(d, &extra).unwrap();
    realize(&random_point(&spec, rng))
}

/// Applies a random sequence of the four symmetry transformations. Group 0
/// keeps its position so that dephasing still starts from it.
pub fn random_transformations(states: &StateSet, steps: usize, rng: &mut TestRng) -> StateSet {
    let mut cur = states.clone();
    for _ in 0..steps {
        let sizes: Vec<usize> = cur.groups().iter().map(Vec::len).collect();
        cur = match rng.below(4) {
            0 => apply_global_unitary(&cur, &random_unitary(cur.d(), rng)).unwrap(),
            1 => {
                let phases: Vec<Vec<f64>> =
                    sizes.iter().map(|&n| (0..n).map(|_| rng.angle()).collect()).collect();
                apply_vector_phases(&cur, &phases).unwrap()
            }
            2 if sizes.len() > 2 => {
                let b = 1 + rng.below(sizes.len() - 1);
                let b2 = 1 + rng.below(sizes.len() - 1);
                swap_groups(&cur, b, b2).unwrap()
            }
            _ => {
                let perms: Vec<Vec<usize>> = sizes.iter().map(|&n| rng.permutation(n)).collect();
                permute_within(&cur, &perms).unwrap()
            }
        };
    }
    cur
}
