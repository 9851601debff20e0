//! Reference implementations written straight from the energy definition,
//! sharing no code with the library.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn dist(c: &[f64], i: usize, j: usize) -> f64 {
    let dx = c[3 * i] - c[3 * j];
    let dy = c[3 * i + 1] - c[3 * j + 1];
    let dz = c[3 * i + 2] - c[3 * j + 2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

fn norm3(c: &[f64], i: usize) -> f64 {
    (c[3 * i] * c[3 * i] + c[3 * i + 1] * c[3 * i + 1] + c[3 * i + 2] * c[3 * i + 2]).sqrt()
}

/// Sum of squared pair and wall overlaps.
pub fn energy(c: &[f64], radius: f64) -> f64 {
    let n = c.len() / 3;
    let mut e = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let o = (2.0 - dist(c, i, j)).max(0.0);
            e += o * o;
        }
        let o = (norm3(c, i) + 1.0 - radius).max(0.0);
        e += o * o;
    }
    e
}

/// Analytic gradient of [`energy`], assuming no coincident centers and no
/// center at the origin.
pub fn gradient(c: &[f64], radius: f64) -> Vec<f64> {
    let n = c.len() / 3;
    let mut g = vec![0.0; c.len()];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = dist(c, i, j);
            let o = (2.0 - d).max(0.0);
            for k in 0..3 {
                g[3 * i + k] -= 2.0 * o * (c[3 * i + k] - c[3 * j + k]) / d;
            }
        }
        let r = norm3(c, i);
        let o = (r + 1.0 - radius).max(0.0);
        for k in 0..3 {
            g[3 * i + k] += 2.0 * o * c[3 * i + k] / r;
        }
    }
    g
}

/// `E + λR²` over centers followed by the radius.
pub fn penalized(z: &[f64], lambda: f64) -> f64 {
    let (c, r) = z.split_at(z.len() - 1);
    energy(c, r[0]) + lambda * r[0] * r[0]
}

/// Terms of [`energy`] that involve sphere `i`.
pub fn sphere_energy(c: &[f64], radius: f64, i: usize) -> f64 {
    let n = c.len() / 3;
    let mut e = 0.0;
    for j in (0..n).filter(|&j| j != i) {
        let o = (2.0 - dist(c, i, j)).max(0.0);
        e += o * o;
    }
    let o = (norm3(c, i) + 1.0 - radius).max(0.0);
    e + o * o
}

/// Terms of [`energy`] that involve the container radius.
pub fn wall_energy(c: &[f64], radius: f64) -> f64 {
    (0..c.len() / 3)
        .map(|i| {
            let o = (norm3(c, i) + 1.0 - radius).max(0.0);
            o * o
        })
        .sum()
}

/// Central differences of `f(x, k)`, where `f` may drop terms that do not
/// depend on coordinate `k`.
pub fn partial_differences(f: impl Fn(&[f64], usize) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|k| {
            let orig = p[k];
            p[k] = orig + h;
            let up = f(&p, k);
            p[k] = orig - h;
            let down = f(&p, k);
            p[k] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|k| {
            let orig = p[k];
            p[k] = orig + h;
            let up = f(&p);
            p[k] = orig - h;
            let down = f(&p);
            p[k] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Uniform coordinates in a cube of half-width `half`.
pub fn cube(n: usize, half: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..3 * n).map(|_| rng.gen_range(-half..half)).collect()
}

/// `|a - b| <= rel * max(|a|, |b|) + abs`
pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}
