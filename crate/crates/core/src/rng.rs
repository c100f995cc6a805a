//! Counter-based random streams.
//!
//! Every random number in the crate is a pure function of
//! `(seed, domain, path_index, step, slot)` through Philox4x32-10, so the
//! Brownian increments consumed by a path do not depend on the
//! penalization level, the thread schedule or the order of evaluation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
// inherent f64 math shadows this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// Stream domains; keeps the Brownian motion, field sampler and test-path
/// generator statistically independent under a shared seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Brownian = 1,
    FieldSampler = 2,
    TestPaths = 3,
    InitialPerturbation = 4,
}

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

#[inline]
fn philox_round(c: [u32; 4], k: [u32; 2]) -> [u32; 4] {
    let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
    let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
    [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0]
}

/// The Philox4x32 bijection with 10 rounds.
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = philox_round(counter, key);
    let mut k = key;
    for _ in 1..10 {
        k = [k[0].wrapping_add(PHILOX_W0), k[1].wrapping_add(PHILOX_W1)];
        c = philox_round(c, k);
    }
    c
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A keyed Philox instance. Cheap to copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Philox {
    key: [u32; 2],
}

impl Philox {
    pub fn new(seed: u64, domain: Domain) -> Self {
        let k = splitmix64(seed ^ splitmix64(domain as u64));
        Self {
            key: [k as u32, (k >> 32) as u32],
        }
    }

    #[inline]
    pub fn block(&self, block: u64, step: u64, path: u64) -> [u32; 4] {
        // Step and block indices beyond 2^32 wrap; no run gets close.
        philox4x32_10(
            [block as u32, step as u32, path as u32, (path >> 32) as u32],
            self.key,
        )
    }

    /// Two independent standard normals from one counter block.
    #[inline]
    pub fn normal_pair(&self, block: u64, step: u64, path: u64) -> (f64, f64) {
        box_muller(self.block(block, step, path))
    }

    /// The standard normal at `slot` of `(step, path)`.
    pub fn normal(&self, slot: u64, step: u64, path: u64) -> f64 {
        let (a, b) = self.normal_pair(slot / 2, step, path);
        if slot % 2 == 0 {
            a
        } else {
            b
        }
    }
}

#[inline]
fn to_unit_open_closed(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn to_unit_closed_open(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn box_muller(w: [u32; 4]) -> (f64, f64) {
    let a = (u64::from(w[0]) << 32) | u64::from(w[1]);
    let b = (u64::from(w[2]) << 32) | u64::from(w[3]);
    let u1 = to_unit_open_closed(a);
    let u2 = to_unit_closed_open(b);
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Sequential draws from the counter space of one `(domain, seed, stream)`.
#[derive(Debug, Clone)]
pub struct Stream {
    gen: Philox,
    stream: u64,
    counter: u64,
    spare: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64, domain: Domain, stream: u64) -> Self {
        Self {
            gen: Philox::new(seed, domain),
            stream,
            counter: 0,
            spare: None,
        }
    }

    fn next_block(&mut self) -> [u32; 4] {
        let w = self.gen.block(self.counter, self.counter >> 32, self.stream);
        self.counter += 1;
        w
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = box_muller(self.next_block());
        self.spare = Some(b);
        a
    }

    /// Uniform on `[0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        let w = self.next_block();
        to_unit_closed_open((u64::from(w[0]) << 32) | u64::from(w[1]))
    }
}

/// Fills `out` with the `out.len()` Brownian increments of one time step.
pub fn fill_increments(seed_gen: &Philox, path_index: u64, step: u64, dt: f64, out: &mut [f64]) {
    let scale = dt.sqrt();
    for (block, chunk) in out.chunks_mut(2).enumerate() {
        let (a, b) = seed_gen.normal_pair(block as u64, step, path_index);
        chunk[0] = scale * a;
        if let Some(second) = chunk.get_mut(1) {
            *second = scale * b;
        }
    }
}

/// `steps × modes` Gaussian increments with variance `dt`, keyed on
/// `(seed, path_index, step, mode)`.
pub fn brownian_increments(
    seed: u64,
    path_index: u64,
    modes: usize,
    steps: usize,
    dt: f64,
) -> Vec<Vec<f64>> {
    let gen = Philox::new(seed, Domain::Brownian);
    (0..steps)
        .map(|j| {
            let mut row = vec![0.0; modes];
            fill_increments(&gen, path_index, j as u64, dt, &mut row);
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn philox_known_answers() {
        assert_eq!(
            philox4x32_10([0; 4], [0; 2]),
            [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]
        );
        assert_eq!(
            philox4x32_10([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
        assert_eq!(
            philox4x32_10(
                [0x243f_6a88, 0x85a3_08d3, 0x1319_8a2e, 0x0370_7344],
                [0xa409_3822, 0x299f_31d0]
            ),
            [0xd16c_fe09, 0x94fd_cceb, 0x5001_e420, 0x2412_6ea1]
        );
    }

    #[test]
    fn increments_are_reproducible_and_addressable() {
        let a = brownian_increments(7, 3, 5, 4, 0.01);
        let b = brownian_increments(7, 3, 5, 4, 0.01);
        assert_eq!(a, b);
        let gen = Philox::new(7, Domain::Brownian);
        for (j, row) in a.iter().enumerate() {
            for (k, &x) in row.iter().enumerate() {
                assert_eq!(x, 0.1 * gen.normal(k as u64, j as u64, 3));
            }
        }
        let other = brownian_increments(7, 4, 5, 4, 0.01);
        assert_ne!(a, other);
    }

    #[test]
    fn increment_variance_matches_dt() {
        let dt = 1e-3;
        let rows = brownian_increments(11, 0, 100, 10_000, dt);
        let n = 1_000_000.0;
        let mean: f64 = rows.iter().flatten().sum::<f64>() / n;
        let var: f64 = rows.iter().flatten().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        assert!((var / dt - 1.0).abs() < 0.01, "var/dt = {}", var / dt);
    }

    #[test]
    fn distinct_paths_are_uncorrelated() {
        let a = brownian_increments(5, 0, 100, 10_000, 1.0);
        let b = brownian_increments(5, 1, 100, 10_000, 1.0);
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        let corr = sab / (saa * sbb).sqrt();
        assert!(corr.abs() < 0.01, "corr = {corr}");
    }

    #[test]
    fn stream_domains_differ() {
        let mut a = Stream::new(1, Domain::FieldSampler, 0);
        let mut b = Stream::new(1, Domain::TestPaths, 0);
        assert_ne!(a.next_normal(), b.next_normal());
        let u = a.next_uniform();
        assert!((0.0..1.0).contains(&u));
    }
}
