//! Seeded random instances: GOE matrices, correlated Gaussian Wigner pairs and
//! uniform permutations.
//!
//! Every generator is a `Xoshiro256PlusPlus` seeded from a `u64`, so an
//! instance is fully determined by `(n, sigma, plant, seed)` on every
//! platform.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::permutation::Permutation;

pub type InstanceRng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> InstanceRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one trial of a sweep, independent of execution order.
pub fn derive_seed(base_seed: u64, n: usize, sigma_index: usize, rep: usize) -> u64 {
    [n as u64, sigma_index as u64, rep as u64]
        .iter()
        .fold(splitmix64(base_seed), |h, &v| splitmix64(h ^ v))
}

/// GOE matrix: `A_ii ~ N(0, 2/n)`, `A_ij = A_ji ~ N(0, 1/n)`, independent for `i ≤ j`.
pub fn sample_goe(n: usize, rng: &mut InstanceRng) -> Result<SymMatrix> {
    if n == 0 {
        return Err(Error::invalid("sample_goe: n must be >= 1"));
    }
    let off = (1.0 / n as f64).sqrt();
    let diag = (2.0 / n as f64).sqrt();
    SymMatrix::from_upper(n, |i, j| {
        let z: f64 = StandardNormal.sample(rng);
        if i == j {
            diag * z
        } else {
            off * z
        }
    })
}

/// Uniform permutation (Fisher–Yates).
pub fn sample_permutation(n: usize, rng: &mut InstanceRng) -> Permutation {
    let mut map: Vec<usize> = (0..n).collect();
    map.shuffle(rng);
    Permutation::from_vec_unchecked(map)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Plant {
    #[default]
    Identity,
    UniformRandom,
}

impl std::str::FromStr for Plant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Plant::Identity),
            "uniform-random" | "random" => Ok(Plant::UniformRandom),
            _ => Err(Error::invalid(format!("unknown plant '{s}'"))),
        }
    }
}

/// Correlated pair `B = Π̃ᵀ (A + σZ) Π̃` with `A, Z` independent GOE.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerPair {
    pub n: usize,
    pub sigma: f64,
    pub a: SymMatrix,
    pub b: SymMatrix,
    pub pi_star: Permutation,
    pub seed: u64,
}

pub fn sample_wigner_pair(n: usize, sigma: f64, plant: Plant, seed: u64) -> Result<WignerPair> {
    sample_wigner_pair_with_noise(n, sigma, plant, seed).map(|(pair, _)| pair)
}

/// As [`sample_wigner_pair`], also returning the noise matrix `Z`.
pub fn sample_wigner_pair_with_noise(
    n: usize,
    sigma: f64,
    plant: Plant,
    seed: u64,
) -> Result<(WignerPair, SymMatrix)> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let a = sample_goe(n, &mut rng)?;
    let z = sample_goe(n, &mut rng)?;
    let pi_star = match plant {
        Plant::Identity => Permutation::identity(n),
        Plant::UniformRandom => sample_permutation(n, &mut rng),
    };
    let noisy = a.lin_comb(1.0, &z, sigma)?;
    let b = conjugate(&noisy, &pi_star);
    debug_assert!((0..n)
        .all(|i| (0..n).all(|j| { b[(pi_star.apply(i), pi_star.apply(j))] == noisy[(i, j)] })));
    let pair = WignerPair {
        n,
        sigma,
        a,
        b,
        pi_star,
        seed,
    };
    Ok((pair, z))
}

/// `Pᵀ M P` computed by re-indexing: `out[π(i), π(j)] = M[i, j]`.
pub fn conjugate(m: &SymMatrix, pi: &Permutation) -> SymMatrix {
    let n = m.n();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        let pi_i = pi.apply(i);
        for j in 0..n {
            out[(pi_i, pi.apply(j))] = m[(i, j)];
        }
    }
    SymMatrix::new(out).expect("conjugation preserves symmetry")
}

impl WignerPair {
    /// Text format: `n sigma seed`, then `n` rows of A, `n` rows of B, then π⋆.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.n, self.sigma, self.seed)?;
        for m in [&self.a, &self.b] {
            for i in 0..self.n {
                let row: Vec<String> = m.as_matrix().row(i).iter().map(f64::to_string).collect();
                writeln!(w, "{}", row.join(" "))?;
            }
        }
        writeln!(w, "{}", self.pi_star)?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next_line = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::invalid("instance file truncated"))?
                .map_err(Error::from)
        };
        let header = next_line()?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::invalid("instance header must be `n sigma seed`"));
        }
        let n: usize = parse(fields[0])?;
        let sigma: f64 = parse(fields[1])?;
        let seed: u64 = parse(fields[2])?;
        let read_matrix = |next: &mut dyn FnMut() -> Result<String>| -> Result<SymMatrix> {
            let mut data = Vec::with_capacity(n * n);
            for _ in 0..n {
                let line = next()?;
                let row: Vec<f64> = line
                    .split_whitespace()
                    .map(parse::<f64>)
                    .collect::<Result<_>>()?;
                if row.len() != n {
                    return Err(Error::invalid(format!("expected {n} entries per row")));
                }
                data.extend(row);
            }
            SymMatrix::new(Matrix::from_vec(n, n, data)?)
        };
        let a = read_matrix(&mut next_line)?;
        let b = read_matrix(&mut next_line)?;
        let perm_line = next_line()?;
        let map: Vec<usize> = perm_line
            .split_whitespace()
            .map(parse::<usize>)
            .collect::<Result<_>>()?;
        if map.len() != n {
            return Err(Error::invalid("permutation line has wrong length"));
        }
        Ok(WignerPair {
            n,
            sigma,
            a,
            b,
            pi_star: Permutation::new(map)?,
            seed,
        })
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::invalid(format!("cannot parse `{s}`")))
}
