//! Gaussian kernel density estimation of the response pdf on the
//! quadrature grid.
//!
//! The estimate is `q_hat = K e` with `K_ij = (1/M) K(gamma_i - f_j)` and a
//! normalized Gaussian kernel `K(r) = exp(-(r/h)^2 / 2) / (h sqrt(2 pi))`,
//! so `q_hat` is a density. The kernel-derivative matrix `K'` enters the
//! objective gradient.
//!
//! `KernelMatrices` keeps the matrices in operator form: entries are
//! defined by (samples, bandwidth, grid) and computed on demand, and the
//! two products the objective needs (`K e` and `K'^T u`) are evaluated by
//! window walks over the uniform grid. A node beyond radius `39 h` of a
//! sample has `exp(-(r/h)^2/2) = 0` in f64, so restricting each walk to
//! that window reproduces the full `N x M` sums entry-for-entry without
//! allocating them; at Table-scale sizes (`10^4 x 10^6`) the dense
//! matrices would not fit in memory.

use alloc::vec::Vec;

use crate::chunks;
use crate::error::{Error, Result};
use crate::math;
use crate::quadrature::QuadratureGrid;

/// Window radius in units of `h`. Beyond `z = 37.5` the raw kernel value
/// is under `4e-306`, so a window entry cannot move any accumulated
/// double by even one ulp; stopping there also keeps the inner loops out
/// of subnormal arithmetic, which carries a large per-operation penalty
/// on x86.
const Z_CUT: f64 = 37.5;

/// Normalized Gaussian kernel value and its derivative with respect to
/// the argument `r`.
pub fn kernel_eval(r: f64, h: f64) -> Result<(f64, f64)> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::NonPositiveBandwidth(h));
    }
    let z = r / h;
    let value = math::exp(-0.5 * z * z) / (h * math::SQRT_2PI);
    Ok((value, value * (-r / (h * h))))
}

/// Scott's rule `(4 / (3 M))^{1/5} sigma`.
pub fn scott_bandwidth(m: usize, sigma: f64) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidConfig(alloc::string::String::from(
            "Scott's rule needs at least one sample",
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::ZeroVariance);
    }
    Ok(math::powf(4.0 / (3.0 * m as f64), 0.2) * sigma)
}

/// Scott's rule with sigma estimated as the (population) standard
/// deviation of the samples.
pub fn scott_bandwidth_from_samples(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidConfig(alloc::string::String::from(
            "Scott's rule needs at least one sample",
        )));
    }
    let (_, var) = math::mean_variance(values);
    if var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    scott_bandwidth(values.len(), math::sqrt(var))
}

/// Kernel and kernel-derivative matrices at a fixed design, in operator
/// form, plus the cached density estimate `K e`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrices {
    samples: Vec<f64>,
    bandwidth: f64,
    grid: QuadratureGrid,
    density: Vec<f64>,
    plan: WindowPlan,
}

/// Build the kernel matrices for a frozen response sample set.
pub fn build_matrices(samples: &[f64], h: f64, grid: &QuadratureGrid) -> Result<KernelMatrices> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig(alloc::string::String::from(
            "kernel estimate needs at least one sample",
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::NonPositiveBandwidth(h));
    }
    let plan = WindowPlan::new(h, grid);
    let density = density_pass(samples, h, grid, &plan);
    Ok(KernelMatrices {
        samples: samples.to_vec(),
        bandwidth: h,
        grid: grid.clone(),
        density,
        plan,
    })
}

/// `K e` without retaining the operator.
pub fn estimate_on_grid(samples: &[f64], h: f64, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    Ok(build_matrices(samples, h, grid)?.density)
}

impl KernelMatrices {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn sample_values(&self) -> &[f64] {
        &self.samples
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    /// The density estimate at the grid nodes, `K e`.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Single entries `(K_ij, K'_ij)`, evaluated directly.
    pub fn entry(&self, i: usize, j: usize) -> (f64, f64) {
        let m = self.samples.len() as f64;
        let r = self.grid.nodes()[i] - self.samples[j];
        let (v, d) = kernel_eval(r, self.bandwidth).unwrap();
        (v / m, d / m)
    }

    /// `K'^T u` for an N-vector `u`; returns an M-vector. This is the
    /// sample-side contraction of the objective gradient.
    pub fn kprime_transpose_mul(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.grid.len() {
            return Err(Error::LengthMismatch {
                expected: self.grid.len(),
                actual: u.len(),
                context: "node vector for K'^T u",
            });
        }
        let h = self.bandwidth;
        let m = self.samples.len() as f64;
        let scale = -1.0 / (m * h * h * h * math::SQRT_2PI);
        let plan = &self.plan;
        let parts = chunks::map_chunks(&self.samples, |_, chunk| {
            let mut local = Vec::with_capacity(chunk.len());
            for &f in chunk {
                local.push(plan.radial_dot(f, u) * scale);
            }
            local
        });
        Ok(chunks::concat_partials(parts))
    }
}

fn density_pass(samples: &[f64], h: f64, grid: &QuadratureGrid, plan: &WindowPlan) -> Vec<f64> {
    let n = grid.len();
    let parts = chunks::map_chunks(samples, |_, chunk| {
        let mut local = alloc::vec![0.0; n];
        for &f in chunk {
            plan.accumulate(f, &mut local);
        }
        local
    });
    let mut q = chunks::fold_partials(parts, n);
    let scale = 1.0 / (samples.len() as f64 * h * math::SQRT_2PI);
    for v in q.iter_mut() {
        *v *= scale;
    }
    q
}

/// A sample's nonzero window on the grid, split at the anchor node.
struct Window {
    i_lo: usize,
    i_hi: usize,
    /// Anchor: the in-window node nearest the sample (recurrence only).
    anchor: Option<Anchor>,
}

struct Anchor {
    i0: usize,
    /// `gamma_{i0} - f`.
    delta: f64,
    a: f64,
    b: f64,
}

/// Precomputed window state for one (bandwidth, grid) pair.
///
/// Window values use the factorization
/// `exp(-(d + k dx)^2 / 2h^2) = A * B^k * C^(k^2)` anchored at the node
/// nearest the sample, with `A, B` per sample and the `C^(k^2)` table
/// shared; that replaces one `exp` per matrix entry by two multiplies.
/// The `B^k` powers run in four independent chains so the multiply
/// latency pipelines. Samples anchored off the grid, and bandwidths
/// below the node spacing, fall back to direct evaluation.
#[derive(Debug, Clone, PartialEq)]
struct WindowPlan {
    f_lower: f64,
    dx: f64,
    n: usize,
    nodes: Vec<f64>,
    h: f64,
    r_cut: f64,
    use_recurrence: bool,
    ck2: Vec<f64>,
}

impl WindowPlan {
    fn new(h: f64, grid: &QuadratureGrid) -> Self {
        let dx = grid.spacing();
        let n = grid.len();
        let r_cut = Z_CUT * h;
        let use_recurrence = h >= dx;
        let kmax = (((r_cut / dx) as usize).saturating_add(2)).min(n - 1);
        let ck2 = if use_recurrence {
            let s = dx / h;
            (0..=kmax)
                .map(|k| {
                    let kd = k as f64 * s;
                    math::exp(-0.5 * kd * kd)
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            f_lower: grid.bounds().0,
            dx,
            n,
            nodes: grid.nodes().to_vec(),
            h,
            r_cut,
            use_recurrence,
            ck2,
        }
    }

    #[inline]
    fn window(&self, f: f64) -> Option<Window> {
        let lo_f = math::ceil((f - self.r_cut - self.f_lower) / self.dx);
        let hi_f = math::floor((f + self.r_cut - self.f_lower) / self.dx);
        let last = (self.n - 1) as f64;
        if !(hi_f >= 0.0 && lo_f <= last && hi_f >= lo_f) {
            return None;
        }
        let i_lo = if lo_f < 0.0 { 0 } else { lo_f as usize };
        let i_hi = if hi_f >= last { self.n - 1 } else { hi_f as usize };
        let anchor = if self.use_recurrence {
            let near = math::round((f - self.f_lower) / self.dx);
            if near >= i_lo as f64 && near <= i_hi as f64 {
                let i0 = near as usize;
                let delta = self.nodes[i0] - f;
                if math::abs(delta) <= 0.5000001 * self.dx {
                    let inv_h = 1.0 / self.h;
                    let zd = delta * inv_h;
                    Some(Anchor {
                        i0,
                        delta,
                        a: math::exp(-0.5 * zd * zd),
                        b: math::exp(-delta * self.dx * inv_h * inv_h),
                    })
                } else {
                    None
                }
            } else {
                None
            }
        } else {
            None
        };
        Some(Window { i_lo, i_hi, anchor })
    }

    /// `out[i] += exp(-((gamma_i - f)/h)^2 / 2)` over the nonzero window.
    #[inline]
    fn accumulate(&self, f: f64, out: &mut [f64]) {
        let Some(w) = self.window(f) else { return };
        match w.anchor {
            Some(anchor) => {
                let t0 = anchor.i0 - w.i_lo;
                let seg = &mut out[w.i_lo..=w.i_hi];
                add_up(&mut seg[t0..], anchor.a, anchor.b, &self.ck2);
                add_down(&mut seg[..t0], anchor.a, 1.0 / anchor.b, &self.ck2);
            }
            None => {
                let inv_h = 1.0 / self.h;
                for (o, node) in out[w.i_lo..=w.i_hi]
                    .iter_mut()
                    .zip(&self.nodes[w.i_lo..=w.i_hi])
                {
                    let z = (node - f) * inv_h;
                    *o += math::exp(-0.5 * z * z);
                }
            }
        }
    }

    /// `sum_i exp(-((gamma_i - f)/h)^2 / 2) * (gamma_i - f) * u[i]` over
    /// the nonzero window.
    #[inline]
    fn radial_dot(&self, f: f64, u: &[f64]) -> f64 {
        let Some(w) = self.window(f) else { return 0.0 };
        match w.anchor {
            Some(anchor) => {
                let t0 = anchor.i0 - w.i_lo;
                let seg = &u[w.i_lo..=w.i_hi];
                let up = dot_up(&seg[t0..], anchor.a, anchor.b, &self.ck2, anchor.delta, self.dx);
                let down = dot_down(
                    &seg[..t0],
                    anchor.a,
                    1.0 / anchor.b,
                    &self.ck2,
                    anchor.delta,
                    self.dx,
                );
                up + down
            }
            None => {
                let inv_h = 1.0 / self.h;
                let mut acc = 0.0;
                for (ui, node) in u[w.i_lo..=w.i_hi]
                    .iter()
                    .zip(&self.nodes[w.i_lo..=w.i_hi])
                {
                    let r = node - f;
                    let z = r * inv_h;
                    acc += math::exp(-0.5 * z * z) * r * ui;
                }
                acc
            }
        }
    }
}

/// `dst[k] += a * b^k * ck2[k]`, four multiply chains.
#[inline]
fn add_up(dst: &mut [f64], a: f64, b: f64, ck2: &[f64]) {
    let n = dst.len();
    let ck2 = &ck2[..n];
    let b2 = b * b;
    let b4 = b2 * b2;
    let mut c = [a, a * b, a * b2, a * b2 * b];
    let mut k = 0;
    while k + 4 <= n {
        dst[k] += c[0] * ck2[k];
        dst[k + 1] += c[1] * ck2[k + 1];
        dst[k + 2] += c[2] * ck2[k + 2];
        dst[k + 3] += c[3] * ck2[k + 3];
        c[0] *= b4;
        c[1] *= b4;
        c[2] *= b4;
        c[3] *= b4;
        k += 4;
    }
    let mut cur = c[0];
    while k < n {
        dst[k] += cur * ck2[k];
        cur *= b;
        k += 1;
    }
}

/// `dst[t0 - k] += a * binv^k * ck2[k]` for `k = 1..=t0`, `t0 = dst.len()`.
#[inline]
fn add_down(dst: &mut [f64], a: f64, binv: f64, ck2: &[f64]) {
    let t0 = dst.len();
    let ck2 = &ck2[..t0 + 1];
    let b2 = binv * binv;
    let b4 = b2 * b2;
    let mut c = [a * binv, a * b2, a * b2 * binv, a * b4];
    let mut k = 1;
    while k + 3 <= t0 {
        dst[t0 - k] += c[0] * ck2[k];
        dst[t0 - k - 1] += c[1] * ck2[k + 1];
        dst[t0 - k - 2] += c[2] * ck2[k + 2];
        dst[t0 - k - 3] += c[3] * ck2[k + 3];
        c[0] *= b4;
        c[1] *= b4;
        c[2] *= b4;
        c[3] *= b4;
        k += 4;
    }
    let mut cur = c[0];
    while k <= t0 {
        dst[t0 - k] += cur * ck2[k];
        cur *= binv;
        k += 1;
    }
}

/// `sum_k a b^k ck2[k] * (delta + k dx) * u[k]`, four lanes.
#[inline]
fn dot_up(u: &[f64], a: f64, b: f64, ck2: &[f64], delta: f64, dx: f64) -> f64 {
    let n = u.len();
    let ck2 = &ck2[..n];
    let b2 = b * b;
    let b4 = b2 * b2;
    let dx4 = 4.0 * dx;
    let mut c = [a, a * b, a * b2, a * b2 * b];
    let mut r = [delta, delta + dx, delta + 2.0 * dx, delta + 3.0 * dx];
    let mut acc = [0.0f64; 4];
    let mut k = 0;
    while k + 4 <= n {
        acc[0] += c[0] * ck2[k] * r[0] * u[k];
        acc[1] += c[1] * ck2[k + 1] * r[1] * u[k + 1];
        acc[2] += c[2] * ck2[k + 2] * r[2] * u[k + 2];
        acc[3] += c[3] * ck2[k + 3] * r[3] * u[k + 3];
        c[0] *= b4;
        c[1] *= b4;
        c[2] *= b4;
        c[3] *= b4;
        r[0] += dx4;
        r[1] += dx4;
        r[2] += dx4;
        r[3] += dx4;
        k += 4;
    }
    let mut cur = c[0];
    let mut rr = r[0];
    let mut tail = 0.0;
    while k < n {
        tail += cur * ck2[k] * rr * u[k];
        cur *= b;
        rr += dx;
        k += 1;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// `sum_{k=1..=t0} a binv^k ck2[k] * (delta - k dx) * u[t0 - k]`.
#[inline]
fn dot_down(u: &[f64], a: f64, binv: f64, ck2: &[f64], delta: f64, dx: f64) -> f64 {
    let t0 = u.len();
    let ck2 = &ck2[..t0 + 1];
    let b2 = binv * binv;
    let b4 = b2 * b2;
    let dx4 = 4.0 * dx;
    let mut c = [a * binv, a * b2, a * b2 * binv, a * b4];
    let mut r = [delta - dx, delta - 2.0 * dx, delta - 3.0 * dx, delta - 4.0 * dx];
    let mut acc = [0.0f64; 4];
    let mut k = 1;
    while k + 3 <= t0 {
        acc[0] += c[0] * ck2[k] * r[0] * u[t0 - k];
        acc[1] += c[1] * ck2[k + 1] * r[1] * u[t0 - k - 1];
        acc[2] += c[2] * ck2[k + 2] * r[2] * u[t0 - k - 2];
        acc[3] += c[3] * ck2[k + 3] * r[3] * u[t0 - k - 3];
        c[0] *= b4;
        c[1] *= b4;
        c[2] *= b4;
        c[3] *= b4;
        r[0] -= dx4;
        r[1] -= dx4;
        r[2] -= dx4;
        r[3] -= dx4;
        k += 4;
    }
    let mut cur = c[0];
    let mut rr = r[0];
    let mut tail = 0.0;
    while k <= t0 {
        tail += cur * ck2[k] * rr * u[t0 - k];
        cur *= binv;
        rr -= dx;
        k += 1;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::Distribution;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_peak_and_symmetry() {
        let (v, d) = kernel_eval(0.0, 1.0).unwrap();
        assert_relative_eq!(v, 0.398_942_280_401_432_7, epsilon = 1e-15);
        assert_eq!(d, 0.0);
        let (v1, d1) = kernel_eval(1.0, 1.0).unwrap();
        assert_relative_eq!(v1, 0.241_970_724_519_143_37, epsilon = 1e-15);
        let (v2, d2) = kernel_eval(-1.0, 1.0).unwrap();
        assert_eq!(v1, v2);
        assert_eq!(d1, -d2);
        assert!(kernel_eval(1.0, 0.0).is_err());
        assert!(kernel_eval(1.0, -0.5).is_err());
    }

    #[test]
    fn kernel_integrates_to_one() {
        // normalized kernel must be a density for the estimate to be one
        for h in [0.3, 1.0, 2.0] {
            let g = QuadratureGrid::trapezoid(-8.0 * h, 8.0 * h, 4001).unwrap();
            let vals = g.tabulate(|x| kernel_eval(x, h).unwrap().0);
            assert_relative_eq!(g.integrate(&vals).unwrap(), 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn scott_rule_values() {
        assert_relative_eq!(
            scott_bandwidth(100_000, 1.0).unwrap(),
            0.105_922_384_104_881_21,
            epsilon = 1e-12
        );
        // linear in sigma
        let h1 = scott_bandwidth(5000, 1.7).unwrap();
        let h2 = scott_bandwidth(5000, 3.4).unwrap();
        assert_relative_eq!(2.0 * h1, h2, epsilon = 1e-14);
        // consistent with the response-scale run: h_opt below the chosen 1.0
        let h = scott_bandwidth(100_000, 2.7).unwrap();
        assert!(h < 1.0, "h_opt = {h}");
        assert!(scott_bandwidth(100_000, 0.0).is_err());
    }

    #[test]
    fn single_sample_peak() {
        let g = QuadratureGrid::trapezoid(-1.0, 1.0, 3).unwrap();
        let q = estimate_on_grid(&[0.0], 1.0, &g).unwrap();
        assert_relative_eq!(q[1], 0.398_942_280_401_432_7, epsilon = 1e-12);
    }

    #[test]
    fn two_sample_average() {
        let g = QuadratureGrid::trapezoid(-1.0, 1.0, 3).unwrap();
        let q = estimate_on_grid(&[-1.0, 1.0], 1.0, &g).unwrap();
        assert_relative_eq!(q[1], 0.241_970_724_519_143_37, epsilon = 1e-12);
    }

    #[test]
    fn estimate_integrates_to_one_when_grid_covers_samples() {
        let d = Distribution::gaussian(3.5, 0.12).unwrap();
        let s = d.sample(5, 2000).unwrap();
        let h = scott_bandwidth_from_samples(s.values()).unwrap();
        let lo = s.values().iter().cloned().fold(f64::INFINITY, f64::min) - 6.0 * h;
        let hi = s.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 6.0 * h;
        let g = QuadratureGrid::trapezoid(lo, hi, 10_000).unwrap();
        let q = estimate_on_grid(s.values(), h, &g).unwrap();
        let integral = g.integrate(&q).unwrap();
        assert!((integral - 1.0).abs() < 1e-3, "integral {integral}");
    }

    #[test]
    fn degenerate_all_equal_samples_form_one_bump() {
        let g = QuadratureGrid::trapezoid(0.0, 2.0, 201).unwrap();
        let q = estimate_on_grid(&[1.0; 50], 0.1, &g).unwrap();
        let (vmax, _) = kernel_eval(0.0, 0.1).unwrap();
        assert_relative_eq!(q[100], vmax, epsilon = 1e-12);
    }

    /// The window walk must agree with the dense definition entry-by-entry.
    #[test]
    fn window_walk_matches_dense_products() {
        let d = Distribution::gaussian(1.0, 2.0).unwrap();
        let s = d.sample(9, 400).unwrap();
        let g = QuadratureGrid::trapezoid(-6.0, 8.0, 701).unwrap();
        // includes h below the spacing (direct path) and far above it
        for h in [0.005, 0.05, 0.4, 3.0, 60.0] {
            let mats = build_matrices(s.values(), h, &g).unwrap();
            let mut q_dense = alloc::vec![0.0; g.len()];
            for i in 0..g.len() {
                for j in 0..s.len() {
                    q_dense[i] += mats.entry(i, j).0;
                }
            }
            for (a, b) in mats.density().iter().zip(&q_dense) {
                let scale = a.abs().max(b.abs());
                assert!(
                    (a - b).abs() <= 1e-9 * scale + 1e-280,
                    "h = {h}: {a} vs {b}"
                );
            }
            let u: Vec<f64> = g.nodes().iter().map(|x| (x * 0.37).sin()).collect();
            let v = mats.kprime_transpose_mul(&u).unwrap();
            for j in 0..s.len() {
                let mut dense = 0.0;
                for i in 0..g.len() {
                    dense += mats.entry(i, j).1 * u[i];
                }
                let scale = v[j].abs().max(dense.abs());
                assert!(
                    (v[j] - dense).abs() <= 1e-9 * scale + 1e-280,
                    "h = {h}, j = {j}: {} vs {dense}",
                    v[j]
                );
            }
        }
    }

    #[test]
    fn samples_outside_the_grid_still_contribute_their_tails() {
        let g = QuadratureGrid::trapezoid(0.0, 1.0, 101).unwrap();
        let mats = build_matrices(&[1.5, -0.7, 0.5], 0.25, &g).unwrap();
        for i in [0usize, 50, 100] {
            let dense: f64 = (0..3).map(|j| mats.entry(i, j).0).sum();
            let got = mats.density()[i];
            assert_relative_eq!(got, dense, max_relative = 1e-12);
        }
    }

    #[test]
    fn derivative_entry_is_zero_on_the_diagonal_hit() {
        let g = QuadratureGrid::trapezoid(0.0, 2.0, 3).unwrap();
        let mats = build_matrices(&[1.0], 0.5, &g).unwrap();
        assert_eq!(mats.entry(1, 0).1, 0.0);
    }

    #[test]
    fn increasing_bandwidth_smooths_the_peak() {
        let d = Distribution::gaussian(0.0, 1.0).unwrap();
        let s = d.sample(21, 500).unwrap();
        let g = QuadratureGrid::trapezoid(-5.0, 5.0, 2001).unwrap();
        let mut prev_max = f64::INFINITY;
        for h in [0.05, 0.1, 0.2, 0.4, 0.8] {
            let q = estimate_on_grid(s.values(), h, &g).unwrap();
            let peak = q.iter().cloned().fold(0.0f64, f64::max);
            assert!(peak < prev_max, "h = {h}: {peak} !< {prev_max}");
            prev_max = peak;
        }
    }

    #[test]
    fn kde_consistency_against_analytic_normal_pdf() {
        let sigma = 0.3467;
        let d = Distribution::gaussian(3.5, sigma * sigma).unwrap();
        let s = d.sample(1, 1_000_000).unwrap();
        let h = scott_bandwidth_from_samples(s.values()).unwrap();
        let g = QuadratureGrid::trapezoid(2.0, 5.0, 2001).unwrap();
        let q = estimate_on_grid(s.values(), h, &g).unwrap();
        let max_err = g
            .nodes()
            .iter()
            .zip(&q)
            .map(|(x, qi)| (qi - d.pdf(*x)).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err < 0.02, "max node error {max_err}");
    }

    #[test]
    fn shifted_samples_differentiate_like_kprime() {
        let d = Distribution::gaussian(0.0, 1.0).unwrap();
        let s = d.sample(33, 200).unwrap();
        let g = QuadratureGrid::trapezoid(-4.0, 4.0, 81).unwrap();
        let h = 0.3;
        let mats = build_matrices(s.values(), h, &g).unwrap();
        let eps = 1e-6;
        let shifted: Vec<f64> = s.values().iter().map(|f| f + eps).collect();
        let q1 = estimate_on_grid(&shifted, h, &g).unwrap();
        for i in 0..g.len() {
            let fd = (q1[i] - mats.density()[i]) / eps;
            let mut kprime_row_sum = 0.0;
            for j in 0..s.len() {
                kprime_row_sum += mats.entry(i, j).1;
            }
            assert!(
                (fd + kprime_row_sum).abs() < 1e-4,
                "node {i}: fd {fd} vs -K'e {}",
                -kprime_row_sum
            );
        }
    }
}
