//! Random instances and brute-force likelihood maximizers shared by the
//! integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use ncpd::detectors::WhitenedData;
use ncpd::scenario::steering_vector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Circular complex normal with unit variance.
pub fn cn<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_vec<R: Rng>(n: usize, rng: &mut R) -> CVec {
    CVec::from_fn(n, |_, _| cn(rng))
}

pub fn random_mat<R: Rng>(n: usize, m: usize, rng: &mut R) -> CMat {
    CMat::from_fn(n, m, |_, _| cn(rng))
}

pub fn unit<R: Rng>(n: usize, rng: &mut R) -> CVec {
    let v = random_vec(n, rng);
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

/// Random HPD matrix `A·A†/m + δ·I`.
pub fn random_hpd<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let a = random_mat(n, n + 2, rng);
    let mut m = &a * a.adjoint() / Complex64::new((n + 2) as f64, 0.0);
    for i in 0..n {
        m[(i, i)] += Complex64::new(0.1, 0.0);
    }
    m
}

/// Whitened data with `H` contaminated columns. Mixes noise-only draws with
/// draws carrying a strong jammer in every column and a target in the CUT.
pub fn random_instance<R: Rng>(n: usize, h: usize, rng: &mut R) -> WhitenedData {
    let theta = rng.random_range(-1.2..1.2);
    let v0 = steering_vector(theta, n).unwrap() * Complex64::new((n as f64).sqrt(), 0.0);
    let mut x = random_mat(n, h, rng);
    if rng.random_bool(0.7) {
        let q = unit(n, rng) * Complex64::new(rng.random_range(0.5..30.0), 0.0);
        for mut col in x.column_iter_mut() {
            col += &q * cn(rng);
        }
    }
    if rng.random_bool(0.5) {
        let alpha = cn(rng) * rng.random_range(0.0..4.0);
        let mut cut = x.column_mut(0);
        cut += &v0 * alpha;
    }
    let x_cut = x.column(0).into_owned();
    let x_omega = x.columns(1, h - 1).into_owned();
    WhitenedData::from_white(x_cut, x_omega, v0)
}

/// Unit vector in `C²` up to a global phase: `(cos t, e^{jφ}·sin t)`.
pub fn sphere2(t: f64, phi: f64) -> CVec {
    CVec::from_vec(vec![Complex64::new(t.cos(), 0.0), Complex64::from_polar(t.sin(), phi)])
}

fn linspace(lo: f64, hi: f64, n: usize, closed: bool) -> Vec<f64> {
    let div = if closed { (n - 1) as f64 } else { n as f64 };
    (0..n).map(|i| lo + (hi - lo) * i as f64 / div).collect()
}

/// Maximizes `f` by exhaustive grid evaluation followed by a compass search
/// from the best few grid points.
pub fn grid_maximize<F: Fn(&[f64]) -> f64>(f: F, axes: &[Vec<f64>]) -> f64 {
    let dims = axes.len();
    let mut idx = vec![0usize; dims];
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let keep = 6;
    loop {
        let x: Vec<f64> = idx.iter().zip(axes).map(|(&i, a)| a[i]).collect();
        let y = f(&x);
        if y.is_finite() && (best.len() < keep || y > best[keep - 1].0) {
            best.push((y, x));
            best.sort_by(|a, b| b.0.total_cmp(&a.0));
            best.truncate(keep);
        }
        let mut d = 0;
        loop {
            if d == dims {
                let steps: Vec<f64> = axes.iter().map(|a| (a[1] - a[0]).abs()).collect();
                return best
                    .into_iter()
                    .map(|(y, x)| compass_search(&f, x, y, &steps))
                    .fold(f64::NEG_INFINITY, f64::max);
            }
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

fn compass_search<F: Fn(&[f64]) -> f64>(f: &F, mut x: Vec<f64>, mut y: f64, steps: &[f64]) -> f64 {
    let mut scale = 1.0;
    while scale > 1e-11 {
        let mut improved = false;
        for d in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut trial = x.clone();
                trial[d] += sign * scale * steps[d];
                let yt = f(&trial);
                if yt > y {
                    x = trial;
                    y = yt;
                    improved = true;
                }
            }
        }
        if !improved {
            scale *= 0.5;
        }
    }
    y
}

fn sphere_axes() -> Vec<Vec<f64>> {
    vec![linspace(0.0, PI / 2.0, 25, true), linspace(0.0, 2.0 * PI, 40, false)]
}

fn log_power_axis() -> Vec<f64> {
    linspace(-14.0, 12.0, 27, true)
}

/// Gaussian log-likelihood (without `π` constants) of the columns of `x`
/// with covariance `Σ = I + u·u†` and CUT mean `α·v`.
pub fn rank_one_loglik(x: &CMat, u: &CVec, alpha: Complex64, v: &CVec) -> f64 {
    let n = x.nrows();
    let sigma = CMat::identity(n, n) + u * u.adjoint();
    let det = sigma.determinant().re;
    let inv = sigma.try_inverse().expect("I + uu† is invertible");
    let mut ll = -(x.ncols() as f64) * det.ln();
    for (i, col) in x.column_iter().enumerate() {
        let r: CVec = if i == 0 { col - v * alpha } else { col.into_owned() };
        ll -= (r.adjoint() * &inv * &r)[(0, 0)].re;
    }
    ll
}

/// Generalized least-squares amplitude `v†Σ⁻¹x / v†Σ⁻¹v`.
fn gls_amplitude(x: &CVec, u: &CVec, v: &CVec) -> Complex64 {
    let n = x.len();
    let inv = (CMat::identity(n, n) + u * u.adjoint()).try_inverse().unwrap();
    let num = (v.adjoint() * &inv * x)[(0, 0)];
    let den = (v.adjoint() * &inv * v)[(0, 0)];
    num / den
}

fn rank_one_u(p: &[f64]) -> CVec {
    sphere2(p[0], p[1]) * Complex64::new((0.5 * p[2]).exp(), 0.0)
}

/// `max_q` of the H0 rank-one log-likelihood, `N = 2`.
pub fn oracle_rncp_h0(x: &CMat) -> f64 {
    assert_eq!(x.nrows(), 2);
    let zero = CVec::zeros(2);
    let mut axes = sphere_axes();
    axes.push(log_power_axis());
    grid_maximize(
        |p| rank_one_loglik(x, &rank_one_u(p), Complex64::new(0.0, 0.0), &zero),
        &axes,
    )
}

/// `max_{α,q} − max_q` of the rank-one log-likelihood, `N = 2`.
pub fn oracle_rncp_statistic(w: &WhitenedData) -> f64 {
    let x = w.x_all();
    let mut axes = sphere_axes();
    axes.push(log_power_axis());
    let h1 = grid_maximize(
        |p| {
            let u = rank_one_u(p);
            let alpha = gls_amplitude(&w.x_cut, &u, &w.v0);
            rank_one_loglik(&x, &u, alpha, &w.v0)
        },
        &axes,
    );
    h1 - oracle_rncp_h0(&x)
}

/// Residual energy of a per-column rank-one fit `xᵢ ≈ βᵢ·u`, `‖u‖ = 1`.
fn rank_one_fit_residual(cols: impl Iterator<Item = CVec>, u: &CVec) -> f64 {
    cols.map(|x| {
        let beta = (u.adjoint() * &x)[(0, 0)];
        (x - u * beta).norm_squared()
    })
    .sum()
}

/// `−min_{u,βᵢ} Σ‖xᵢ − βᵢ·u‖²`, `N = 2`.
pub fn oracle_dncp_h0(x: &CMat) -> f64 {
    assert_eq!(x.nrows(), 2);
    grid_maximize(
        |p| -rank_one_fit_residual(x.column_iter().map(|c| c.into_owned()), &sphere2(p[0], p[1])),
        &sphere_axes(),
    )
}

/// Deterministic-signature GLR: H1 fits the CUT with `α·v + β·u` by least
/// squares and every other column with `βᵢ·u`; H0 fits all with `βᵢ·u`.
pub fn oracle_dncp_statistic(w: &WhitenedData) -> f64 {
    let h1 = grid_maximize(
        |p| {
            let u = sphere2(p[0], p[1]);
            let mut a = CMat::zeros(w.n(), 2);
            a.set_column(0, &w.v0);
            a.set_column(1, &u);
            let svd = a.clone().svd(true, true);
            let coef = svd.solve(&w.x_cut, 1e-12).unwrap();
            let cut = (&w.x_cut - &a * coef).norm_squared();
            -cut - rank_one_fit_residual(w.x_omega.column_iter().map(|c| c.into_owned()), &u)
        },
        &sphere_axes(),
    );
    h1 - oracle_dncp_h0(&w.x_all())
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
