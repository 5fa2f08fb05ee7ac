//! Non-intrusive response models: evaluate `f(s, omega)` and its design
//! gradient, either analytically or through a polynomial response surface
//! in omega fitted at a fixed design.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::densities::Distribution;
use crate::error::{Error, Result};
use crate::math;

/// Componentwise design-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::LengthMismatch {
                expected: lower.len(),
                actual: upper.len(),
                context: "box bounds",
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!(
                    "box component {i}: lower {lo} must not exceed upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn clamp(&self, s: &[f64]) -> Vec<f64> {
        s.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect()
    }

    pub fn contains(&self, s: &[f64]) -> bool {
        s.len() == self.dim()
            && s.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    fn check(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                actual: s.len(),
                context: "design vector",
            });
        }
        for (i, v) in s.iter().enumerate() {
            if !(*v >= self.lower[i] && *v <= self.upper[i]) {
                return Err(Error::OutOfDesignBox {
                    index: i,
                    value: *v,
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
        }
        Ok(())
    }
}

/// Hicks-Henne-style bump amplitude limits for one surface; the design
/// space stacks an upper and a lower surface.
const BUMP_AMPLITUDES: [f64; 8] = [0.0007, 0.003, 0.009, 0.009, 0.009, 0.006, 0.003, 0.0007];
const SYNTH_DIM: usize = 16;
const SYNTH_NOMINAL: f64 = 27.2356;
const SYNTH_KAPPA: f64 = 0.15;
const SYNTH_CURVATURE: f64 = 300.0;
const MACH_MID: f64 = 0.675;
const MACH_HALF: f64 = 0.015;

fn synth_amplitude(k: usize) -> f64 {
    BUMP_AMPLITUDES[k % 8]
}

/// Loading coefficients of the synthetic response. The linear gain is
/// stronger on the first (upper) surface, the slope gain is symmetric,
/// and the curvature gain alternates sign within each surface so the
/// response-shape direction is not collinear with the moment directions.
fn synth_coeffs(k: usize) -> (f64, f64, f64) {
    let amp = synth_amplitude(k);
    let a = if k < 8 { 28_000.0 } else { 14_000.0 } * amp;
    let b = 12_000.0 * amp;
    let e = if k % 2 == 0 { 1_500.0 } else { -1_500.0 } * amp;
    (a, b, e)
}

/// A response model exposing `f(s, omega)` and `grad_s f(s, omega)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ResponseModel {
    /// `f = s * omega + 3.5` with standard normal omega; the response is
    /// normal with mean 3.5 and standard deviation `s`.
    LinearShift,
    /// `f = s + omega` with omega uniform on [0, 1]; the response is
    /// uniform on `[s, s + 1]`.
    ExampleShift,
    /// A 16-design-variable stand-in for an expensive simulation chain:
    /// smooth, bounded on [-100, 150], quadratic in the normalized Mach
    /// number, with independently controllable location, spread, and
    /// shape of the response law.
    SyntheticAirfoil,
    /// Per-quantity polynomial response surfaces fitted at one design.
    Surrogate(SurrogateModel),
}

impl ResponseModel {
    pub fn design_dim(&self) -> usize {
        match self {
            Self::LinearShift | Self::ExampleShift => 1,
            Self::SyntheticAirfoil => SYNTH_DIM,
            Self::Surrogate(m) => m.anchor.len(),
        }
    }

    pub fn design_box(&self) -> BoxBounds {
        match self {
            Self::LinearShift => BoxBounds::new(alloc::vec![0.05], alloc::vec![2.0]).unwrap(),
            Self::ExampleShift => BoxBounds::new(alloc::vec![0.0], alloc::vec![2.0]).unwrap(),
            Self::SyntheticAirfoil => {
                let amp: Vec<f64> = (0..SYNTH_DIM).map(synth_amplitude).collect();
                let neg: Vec<f64> = amp.iter().map(|a| -a).collect();
                BoxBounds::new(neg, amp).unwrap()
            }
            Self::Surrogate(m) => m.base_box.clone(),
        }
    }

    /// The law of the uncertain variable omega.
    pub fn uncertainty(&self) -> Distribution {
        match self {
            Self::LinearShift => Distribution::gaussian(0.0, 1.0).unwrap(),
            Self::ExampleShift => Distribution::uniform(0.0, 1.0).unwrap(),
            Self::SyntheticAirfoil => Distribution::scaled_beta(2.0, 2.0, 0.66, 0.69).unwrap(),
            Self::Surrogate(m) => m.uncertainty.clone(),
        }
    }

    /// Declared response bounds `[f_lower, f_upper]`; not necessarily tight.
    pub fn response_bounds(&self) -> (f64, f64) {
        match self {
            Self::LinearShift => (0.0, 7.0),
            Self::ExampleShift => (0.0, 3.0),
            Self::SyntheticAirfoil => (-100.0, 150.0),
            Self::Surrogate(m) => m.response_bounds,
        }
    }

    pub fn eval(&self, s: &[f64], omega: f64) -> Result<f64> {
        self.design_box().check(s)?;
        match self {
            Self::LinearShift => Ok(s[0] * omega + 3.5),
            Self::ExampleShift => Ok(s[0] + omega),
            Self::SyntheticAirfoil => {
                let w = (omega - MACH_MID) / MACH_HALF;
                let mut lin = 0.0;
                let mut slope = 0.0;
                let mut shape = SYNTH_KAPPA;
                for (k, sk) in s.iter().enumerate() {
                    let (a, b, e) = synth_coeffs(k);
                    lin += a * sk;
                    slope += b * sk;
                    shape += e * sk + SYNTH_CURVATURE * sk * sk;
                }
                Ok(SYNTH_NOMINAL + lin + w * slope - w * w * shape)
            }
            Self::Surrogate(m) => {
                m.check_anchor(s)?;
                m.value_poly.eval(omega)
            }
        }
    }

    pub fn grad_into(&self, s: &[f64], omega: f64, out: &mut [f64]) -> Result<()> {
        self.design_box().check(s)?;
        if out.len() != self.design_dim() {
            return Err(Error::LengthMismatch {
                expected: self.design_dim(),
                actual: out.len(),
                context: "gradient output",
            });
        }
        match self {
            Self::LinearShift => out[0] = omega,
            Self::ExampleShift => out[0] = 1.0,
            Self::SyntheticAirfoil => {
                let w = (omega - MACH_MID) / MACH_HALF;
                for (k, sk) in s.iter().enumerate() {
                    let (a, b, e) = synth_coeffs(k);
                    out[k] = a + w * b - w * w * (e + 2.0 * SYNTH_CURVATURE * sk);
                }
            }
            Self::Surrogate(m) => {
                m.check_anchor(s)?;
                for (g, poly) in out.iter_mut().zip(&m.grad_polys) {
                    *g = poly.eval(omega)?;
                }
            }
        }
        Ok(())
    }

    pub fn grad(&self, s: &[f64], omega: f64) -> Result<Vec<f64>> {
        let mut out = alloc::vec![0.0; self.design_dim()];
        self.grad_into(s, omega, &mut out)?;
        Ok(out)
    }

    /// Evaluate the response over a frozen omega set; the design box is
    /// checked once for the whole batch.
    pub fn eval_batch(&self, s: &[f64], omegas: &[f64]) -> Result<Vec<f64>> {
        self.design_box().check(s)?;
        let mut out = Vec::with_capacity(omegas.len());
        match self {
            Self::LinearShift => {
                for &om in omegas {
                    out.push(s[0] * om + 3.5);
                }
            }
            Self::ExampleShift => {
                for &om in omegas {
                    out.push(s[0] + om);
                }
            }
            Self::SyntheticAirfoil => {
                let mut lin = 0.0;
                let mut slope = 0.0;
                let mut shape = SYNTH_KAPPA;
                for (k, sk) in s.iter().enumerate() {
                    let (a, b, e) = synth_coeffs(k);
                    lin += a * sk;
                    slope += b * sk;
                    shape += e * sk + SYNTH_CURVATURE * sk * sk;
                }
                for &om in omegas {
                    let w = (om - MACH_MID) / MACH_HALF;
                    out.push(SYNTH_NOMINAL + lin + w * slope - w * w * shape);
                }
            }
            Self::Surrogate(m) => {
                m.check_anchor(s)?;
                for (j, &om) in omegas.iter().enumerate() {
                    let v = m.value_poly.eval(om).map_err(|e| Error::ModelEval {
                        index: j,
                        omega: om,
                        reason: format!("{e}"),
                    })?;
                    out.push(v);
                }
            }
        }
        Ok(out)
    }

    /// The response law at design `s`, where it is known in closed form.
    pub fn response_density(&self, s: &[f64]) -> Option<Distribution> {
        match self {
            Self::LinearShift => {
                let sd = s.first()?.abs();
                if sd <= 0.0 {
                    return None;
                }
                Distribution::gaussian(3.5, sd * sd).ok()
            }
            Self::ExampleShift => {
                let s0 = *s.first()?;
                Distribution::uniform(s0, s0 + 1.0).ok()
            }
            _ => None,
        }
    }

    /// Design gradient of the closed-form response density at `x`, for
    /// models whose density is differentiable in the design.
    pub fn response_density_design_grad(&self, s: &[f64], x: f64) -> Option<Vec<f64>> {
        match self {
            Self::LinearShift => {
                let sd = *s.first()?;
                if sd <= 0.0 {
                    return None;
                }
                let q = self.response_density(s)?.pdf(x);
                let d = x - 3.5;
                Some(alloc::vec![q * (d * d / (sd * sd * sd) - 1.0 / sd)])
            }
            _ => None,
        }
    }
}

/// A least-squares global polynomial in omega, stored in a basis rescaled
/// to [-1, 1] over the fit domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySurrogate {
    degree: usize,
    coeffs: Vec<f64>,
    domain: (f64, f64),
    residual_rms: f64,
}

impl PolySurrogate {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficients in the rescaled monomial basis, constant term first.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn residual_rms(&self) -> f64 {
        self.residual_rms
    }

    /// Rebuild from stored parts (deserialization).
    pub fn from_parts(coeffs: Vec<f64>, domain: (f64, f64), residual_rms: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidConfig(String::from(
                "polynomial needs at least one coefficient",
            )));
        }
        if !(domain.0 < domain.1) {
            return Err(Error::InvalidConfig(format!(
                "polynomial domain [{}, {}] is empty",
                domain.0, domain.1
            )));
        }
        Ok(Self {
            degree: coeffs.len() - 1,
            coeffs,
            domain,
            residual_rms,
        })
    }

    pub fn eval(&self, omega: f64) -> Result<f64> {
        let (lo, hi) = self.domain;
        let slack = 1e-9 * (hi - lo);
        if !(omega >= lo - slack && omega <= hi + slack) {
            return Err(Error::OmegaOutOfDomain {
                omega,
                lower: lo,
                upper: hi,
            });
        }
        let t = 2.0 * (omega - lo) / (hi - lo) - 1.0;
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        Ok(acc)
    }
}

/// Least-squares fit of a degree-`degree` polynomial through
/// `(omegas, values)`.
pub fn fit_surrogate(omegas: &[f64], values: &[f64], degree: usize) -> Result<PolySurrogate> {
    let p = omegas.len();
    if values.len() != p {
        return Err(Error::LengthMismatch {
            expected: p,
            actual: values.len(),
            context: "surrogate fit values",
        });
    }
    if p <= degree {
        return Err(Error::InvalidConfig(format!(
            "fit needs more points than the degree: {p} points for degree {degree}"
        )));
    }
    let lo = omegas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = omegas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo < hi) {
        return Err(Error::RankDeficientFit(String::from(
            "all abscissae coincide",
        )));
    }
    let k = degree + 1;
    // normal equations in the rescaled monomial basis
    let mut gram = alloc::vec![0.0; k * k];
    let mut rhs = alloc::vec![0.0; k];
    let mut row = alloc::vec![0.0; k];
    for (om, y) in omegas.iter().zip(values) {
        let t = 2.0 * (om - lo) / (hi - lo) - 1.0;
        let mut tp = 1.0;
        for r in row.iter_mut() {
            *r = tp;
            tp *= t;
        }
        for i in 0..k {
            for j in 0..k {
                gram[i * k + j] += row[i] * row[j];
            }
            rhs[i] += row[i] * y;
        }
    }
    let coeffs = cholesky_solve(&mut gram, &mut rhs, k)?;
    let mut ss = 0.0;
    for (om, y) in omegas.iter().zip(values) {
        let t = 2.0 * (om - lo) / (hi - lo) - 1.0;
        let mut acc = 0.0;
        for c in coeffs.iter().rev() {
            acc = acc * t + c;
        }
        ss += (y - acc) * (y - acc);
    }
    Ok(PolySurrogate {
        degree,
        coeffs,
        domain: (lo, hi),
        residual_rms: math::sqrt(ss / p as f64),
    })
}

/// Solve the SPD system in place; fails on a nonpositive pivot, which is
/// how duplicate abscissae surface.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], k: usize) -> Result<Vec<f64>> {
    for i in 0..k {
        for j in 0..=i {
            let mut sum = a[i * k + j];
            for l in 0..j {
                sum -= a[i * k + l] * a[j * k + l];
            }
            if i == j {
                if sum <= 1e-12 * a[0].max(1.0) {
                    return Err(Error::RankDeficientFit(format!(
                        "nonpositive pivot at row {i}; abscissae likely duplicated"
                    )));
                }
                a[i * k + j] = math::sqrt(sum);
            } else {
                a[i * k + j] = sum / a[j * k + j];
            }
        }
    }
    for i in 0..k {
        let mut sum = b[i];
        for l in 0..i {
            sum -= a[i * k + l] * b[l];
        }
        b[i] = sum / a[i * k + i];
    }
    for i in (0..k).rev() {
        let mut sum = b[i];
        for l in i + 1..k {
            sum -= a[l * k + i] * b[l];
        }
        b[i] = sum / a[i * k + i];
    }
    Ok(b.to_vec())
}

/// Response surfaces for the value and every design partial, fitted at
/// one anchor design and valid only there.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    anchor: Vec<f64>,
    value_poly: PolySurrogate,
    grad_polys: Vec<PolySurrogate>,
    base_box: BoxBounds,
    uncertainty: Distribution,
    response_bounds: (f64, f64),
}

impl SurrogateModel {
    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn value_poly(&self) -> &PolySurrogate {
        &self.value_poly
    }

    pub fn grad_polys(&self) -> &[PolySurrogate] {
        &self.grad_polys
    }

    pub fn from_parts(
        anchor: Vec<f64>,
        value_poly: PolySurrogate,
        grad_polys: Vec<PolySurrogate>,
        base_box: BoxBounds,
        uncertainty: Distribution,
        response_bounds: (f64, f64),
    ) -> Result<Self> {
        if grad_polys.len() != anchor.len() {
            return Err(Error::LengthMismatch {
                expected: anchor.len(),
                actual: grad_polys.len(),
                context: "gradient polynomials",
            });
        }
        if anchor.len() != base_box.dim() {
            return Err(Error::LengthMismatch {
                expected: base_box.dim(),
                actual: anchor.len(),
                context: "surrogate anchor",
            });
        }
        Ok(Self {
            anchor,
            value_poly,
            grad_polys,
            base_box,
            uncertainty,
            response_bounds,
        })
    }

    fn check_anchor(&self, s: &[f64]) -> Result<()> {
        for (i, (v, a)) in s.iter().zip(&self.anchor).enumerate() {
            let tol = 1e-9 * a.abs().max(1.0);
            if (v - a).abs() > tol {
                return Err(Error::SurrogateDesignMismatch {
                    index: i,
                    expected: *a,
                    actual: *v,
                });
            }
        }
        Ok(())
    }
}

/// Fit a surrogate `ResponseModel` to `base` at design `s`, from `p`
/// evaluations of the value and gradient at uniformly spaced omegas over
/// the uncertainty support.
pub fn surrogate_model(
    base: &ResponseModel,
    s: &[f64],
    p: usize,
    degree: usize,
) -> Result<ResponseModel> {
    base.design_box().check(s)?;
    if p <= degree || p < 2 {
        return Err(Error::InvalidConfig(format!(
            "surrogate needs at least max(2, degree + 1) points, got p = {p} for degree {degree}"
        )));
    }
    let law = base.uncertainty();
    let (lo, hi) = match law.support() {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => {
            // unbounded law: cover five standard deviations around the mean
            let (mean, var) = law.analytic_moments()?;
            let sd = math::sqrt(var);
            (mean - 5.0 * sd, mean + 5.0 * sd)
        }
    };
    let n = base.design_dim();
    let mut omegas = Vec::with_capacity(p);
    let mut values = Vec::with_capacity(p);
    let mut grads: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(p); n];
    let mut g = alloc::vec![0.0; n];
    for i in 0..p {
        let om = lo + (hi - lo) * i as f64 / (p - 1) as f64;
        omegas.push(om);
        values.push(base.eval(s, om)?);
        base.grad_into(s, om, &mut g)?;
        for (col, gk) in grads.iter_mut().zip(&g) {
            col.push(*gk);
        }
    }
    let value_poly = fit_surrogate(&omegas, &values, degree)?;
    let grad_polys = grads
        .iter()
        .map(|col| fit_surrogate(&omegas, col, degree))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResponseModel::Surrogate(SurrogateModel {
        anchor: s.to_vec(),
        value_poly,
        grad_polys,
        base_box: base.design_box(),
        uncertainty: law,
        response_bounds: base.response_bounds(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_shift_values_and_gradient() {
        let m = ResponseModel::LinearShift;
        assert_relative_eq!(m.eval(&[0.3467], 0.0).unwrap(), 3.5);
        assert_relative_eq!(m.eval(&[2.0], 1.0).unwrap(), 5.5);
        assert_eq!(m.grad(&[0.5], -1.3).unwrap(), alloc::vec![-1.3]);
    }

    #[test]
    fn example_shift_density_is_uniform_on_unit_interval() {
        let m = ResponseModel::ExampleShift;
        assert_eq!(m.grad(&[0.7], 0.2).unwrap(), alloc::vec![1.0]);
        let q = m.response_density(&[2.0]).unwrap();
        assert_eq!(q.pdf(2.5), 1.0);
        assert_eq!(q.pdf(1.9), 0.0);
        assert_eq!(q.pdf(3.1), 0.0);
    }

    #[test]
    fn linear_shift_density_gradient_matches_finite_difference() {
        let m = ResponseModel::LinearShift;
        let s = 0.41;
        let x = 3.9;
        let eps = 1e-7;
        let qp = m.response_density(&[s + eps]).unwrap().pdf(x);
        let qm = m.response_density(&[s - eps]).unwrap().pdf(x);
        let fd = (qp - qm) / (2.0 * eps);
        let g = m.response_density_design_grad(&[s], x).unwrap()[0];
        assert_relative_eq!(g, fd, max_relative = 1e-6);
    }

    #[test]
    fn out_of_box_designs_rejected() {
        let m = ResponseModel::LinearShift;
        assert!(matches!(
            m.eval(&[3.0], 0.0),
            Err(Error::OutOfDesignBox { .. })
        ));
        let m = ResponseModel::SyntheticAirfoil;
        let mut s = alloc::vec![0.0; 16];
        s[3] = 0.05;
        assert!(m.eval(&s, 0.675).is_err());
    }

    #[test]
    fn synthetic_model_is_bounded_on_box_and_support() {
        let m = ResponseModel::SyntheticAirfoil;
        let bx = m.design_box();
        let (flo, fhi) = m.response_bounds();
        let mut rng = crate::rng::stream(5, 1);
        use rand::Rng;
        for _ in 0..200 {
            let s: Vec<f64> = (0..16)
                .map(|k| {
                    let a = bx.lower()[k];
                    let b = bx.upper()[k];
                    if rng.gen_bool(0.5) {
                        if rng.gen_bool(0.5) {
                            a
                        } else {
                            b
                        }
                    } else {
                        rng.gen_range(a..=b)
                    }
                })
                .collect();
            for i in 0..=20 {
                let om = 0.66 + 0.03 * i as f64 / 20.0;
                let f = m.eval(&s, om).unwrap();
                assert!(f > flo && f < fhi, "f = {f} out of [{flo}, {fhi}]");
            }
        }
    }

    #[test]
    fn synthetic_gradient_matches_finite_difference() {
        let m = ResponseModel::SyntheticAirfoil;
        let bx = m.design_box();
        let mut rng = crate::rng::stream(6, 1);
        use rand::Rng;
        let s: Vec<f64> = (0..16)
            .map(|k| rng.gen_range(bx.lower()[k] * 0.8..bx.upper()[k] * 0.8))
            .collect();
        let om = 0.6822;
        let g = m.grad(&s, om).unwrap();
        for k in 0..16 {
            let eps = 1e-9;
            let mut sp = s.clone();
            sp[k] += eps;
            let mut sm = s.clone();
            sm[k] -= eps;
            let fd = (m.eval(&sp, om).unwrap() - m.eval(&sm, om).unwrap()) / (2.0 * eps);
            assert_relative_eq!(g[k], fd, max_relative = 1e-5);
        }
    }

    #[test]
    fn synthetic_moments_trade_off_is_nonconstant() {
        let m = ResponseModel::SyntheticAirfoil;
        let bx = m.design_box();
        let law = m.uncertainty();
        let omegas = law.sample(3, 20_000).unwrap();
        let moments = |s: &[f64]| {
            let vals: Vec<f64> = omegas
                .values()
                .iter()
                .map(|&om| m.eval(s, om).unwrap())
                .collect();
            crate::math::mean_variance(&vals)
        };
        let zero = alloc::vec![0.0; 16];
        let full = bx.upper().to_vec();
        let (m0, v0) = moments(&zero);
        let (m1, v1) = moments(&full);
        assert!((m0 - m1).abs() > 1.0, "means {m0} vs {m1}");
        assert!(v1 > 10.0 * v0, "variances {v0} vs {v1}");
    }

    #[test]
    fn exact_quadratic_data_recovered() {
        let omegas: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
        let values: Vec<f64> = omegas.iter().map(|x| 2.0 - x + 3.0 * x * x).collect();
        let p = fit_surrogate(&omegas, &values, 2).unwrap();
        assert!(p.residual_rms() < 1e-10, "residual {}", p.residual_rms());
        for (om, y) in omegas.iter().zip(&values) {
            assert_relative_eq!(p.eval(*om).unwrap(), *y, epsilon = 1e-9);
        }
    }

    #[test]
    fn degree_five_fit_through_21_points_is_exact_on_quintics() {
        let omegas: Vec<f64> = (0..21).map(|i| 0.66 + 0.03 * i as f64 / 20.0).collect();
        let f = |x: f64| {
            let t = (x - 0.675) / 0.015;
            1.0 + t - 0.5 * t * t + 0.25 * t * t * t - 0.1 * t * t * t * t
                + 0.05 * t * t * t * t * t
        };
        let values: Vec<f64> = omegas.iter().map(|&x| f(x)).collect();
        let p = fit_surrogate(&omegas, &values, 5).unwrap();
        for i in 0..=40 {
            let om = 0.66 + 0.03 * i as f64 / 40.0;
            assert_relative_eq!(p.eval(om).unwrap(), f(om), max_relative = 1e-8);
        }
    }

    #[test]
    fn noisy_fit_residual_sits_at_the_noise_level() {
        let mut rng = crate::rng::stream(8, 2);
        use rand_distr::Distribution as _;
        let noise = rand_distr::Normal::new(0.0, 0.1).unwrap();
        let omegas: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let values: Vec<f64> = omegas
            .iter()
            .map(|&x| (2.0 * x).sin() + noise.sample(&mut rng))
            .collect();
        let p = fit_surrogate(&omegas, &values, 3).unwrap();
        assert!(
            (0.05..0.2).contains(&p.residual_rms()),
            "residual {} should sit near the 0.1 noise level",
            p.residual_rms()
        );
    }

    #[test]
    fn duplicate_abscissae_are_rank_deficient() {
        let omegas = alloc::vec![0.5; 7];
        let values = alloc::vec![1.0; 7];
        assert!(matches!(
            fit_surrogate(&omegas, &values, 2),
            Err(Error::RankDeficientFit(_))
        ));
    }

    #[test]
    fn surrogate_of_linear_model_is_exact() {
        let base = ResponseModel::LinearShift;
        let sur = surrogate_model(&base, &[0.7], 21, 5).unwrap();
        for i in 0..=10 {
            let om = -4.0 + 8.0 * i as f64 / 10.0;
            assert_relative_eq!(
                sur.eval(&[0.7], om).unwrap(),
                base.eval(&[0.7], om).unwrap(),
                epsilon = 1e-10
            );
            assert_relative_eq!(
                sur.grad(&[0.7], om).unwrap()[0],
                om,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn surrogate_of_synthetic_model_validates_at_held_out_machs() {
        let base = ResponseModel::SyntheticAirfoil;
        let bx = base.design_box();
        let s: Vec<f64> = bx.upper().iter().map(|a| 0.5 * a).collect();
        let sur = surrogate_model(&base, &s, 21, 5).unwrap();
        for i in 0..5 {
            let om = 0.661 + 0.007 * i as f64;
            let truth = base.eval(&s, om).unwrap();
            let approx = sur.eval(&s, om).unwrap();
            assert!(
                ((approx - truth) / truth).abs() < 1e-3,
                "value rel err at {om}: {approx} vs {truth}"
            );
            let gt = base.grad(&s, om).unwrap();
            let ga = sur.grad(&s, om).unwrap();
            for k in 0..16 {
                let scale = gt[k].abs().max(1e-9);
                assert!(
                    ((ga[k] - gt[k]) / scale).abs() < 1e-3,
                    "grad {k} rel err at {om}"
                );
            }
        }
    }

    #[test]
    fn held_out_error_decreases_with_degree_until_the_floor() {
        let base = ResponseModel::SyntheticAirfoil;
        let s: Vec<f64> = base.design_box().upper().iter().map(|a| 0.3 * a).collect();
        let err_at = |d: usize| {
            let sur = surrogate_model(&base, &s, 21, d).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..7 {
                let om = 0.6605 + 0.0045 * i as f64;
                let truth = base.eval(&s, om).unwrap();
                let approx = sur.eval(&s, om).unwrap();
                worst = worst.max(((approx - truth) / truth).abs());
            }
            worst
        };
        let (e1, e3, e5) = (err_at(1), err_at(3), err_at(5));
        assert!(e1 > 100.0 * e3, "degree 1 err {e1} vs degree 3 err {e3}");
        assert!(e3 < 1e-10 && e5 < 1e-10, "floor: {e3}, {e5}");
    }

    #[test]
    fn surrogate_rejects_extrapolation_and_foreign_designs() {
        let base = ResponseModel::SyntheticAirfoil;
        let s = alloc::vec![0.0; 16];
        let sur = surrogate_model(&base, &s, 21, 5).unwrap();
        assert!(matches!(
            sur.eval(&s, 0.7),
            Err(Error::OmegaOutOfDomain { .. })
        ));
        let mut other = s.clone();
        other[0] = 0.0005;
        assert!(matches!(
            sur.eval(&other, 0.675),
            Err(Error::SurrogateDesignMismatch { .. })
        ));
    }

    #[test]
    fn evaluation_is_pure() {
        let m = ResponseModel::SyntheticAirfoil;
        let s: Vec<f64> = m.design_box().upper().iter().map(|a| 0.25 * a).collect();
        let a = m.eval(&s, 0.6667).unwrap();
        let b = m.eval(&s, 0.6667).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
