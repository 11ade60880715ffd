//! Numerical integration: adaptive Gauss-Kronrod (7/15) on finite and
//! half-infinite intervals, and fixed Gauss-Jacobi rules built by the
//! Golub-Welsch eigenvalue method.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 0.0,
            rel: 1e-12,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn rel(rel: f64) -> Self {
        Tolerance {
            rel,
            ..Tolerance::default()
        }
    }
}

/// One G7-K15 panel on `[a, b]`: (Kronrod value, error estimate).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = kronrod * half;
    let resabs = abs_sum * half.abs();
    let resasc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration of `f` over the finite interval `[a, b]`.
/// The panel with the largest error estimate is bisected until the summed
/// error meets the tolerance or the interval budget runs out.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Integral {
    if a == b {
        return Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        };
    }
    let (value, error) = gk15(&mut f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    while total_err > tol.abs.max(tol.rel * total.abs()) && heap.len() < tol.max_intervals {
        let worst = heap.pop().expect("heap is nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed the drift of incremental updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Integral {
        value,
        error,
        evaluations,
    }
}

/// Integral over `[a, ∞)` through the map `x = a + t/(1-t)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: Tolerance) -> Integral {
    integrate(
        |t| {
            let s = 1.0 - t;
            let x = a + t / s;
            let fx = f(x);
            if fx == 0.0 {
                0.0
            } else {
                fx / (s * s)
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// A fixed quadrature rule with nodes in `[0, 1]` and weights summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FixedRule {
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss-Jacobi rule for the probability measure `Beta(a, b)` on `[0, 1]`,
/// i.e. `∫ f(u) u^{a-1} (1-u)^{b-1} du / B(a, b) ≈ Σ w_i f(u_i)`.
///
/// The Jacobi matrix of the weight `(1-x)^α (1+x)^β` on `[-1, 1]` is
/// diagonalized; with `u = (1+x)/2` this is `α = b-1`, `β = a-1`. Weights
/// come from the first eigenvector components and are normalized to sum to
/// one, so the rule never evaluates the Beta function.
pub fn gauss_jacobi_beta(n: usize, a: f64, b: f64) -> Result<FixedRule> {
    if n == 0 {
        return Err(invalid("quadrature rule needs at least one node"));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid(format!("Beta parameters must be positive, got ({a}, {b})")));
    }
    let al = b - 1.0;
    let be = a - 1.0;
    let s = al + be;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (be - al) / (s + 2.0)
        } else {
            let t = 2.0 * kf + s;
            (be * be - al * al) / (t * (t + 2.0))
        };
        m[(k, k)] = diag;
        if k + 1 < n {
            let j = kf + 1.0;
            let t = 2.0 * j + s;
            let off2 = if k == 0 {
                4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + s).powi(2) * (3.0 + s))
            } else {
                4.0 * j * (j + al) * (j + be) * (j + s) / (t * t * (t + 1.0) * (t - 1.0))
            };
            let off = off2.sqrt();
            m[(k, k + 1)] = off;
            m[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (0.5 * (1.0 + eig.eigenvalues[i]), v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Ok(FixedRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    })
}

/// Gauss-Legendre rule on `[0, 1]` with weights summing to one.
pub fn gauss_legendre_unit(n: usize) -> Result<FixedRule> {
    gauss_jacobi_beta(n, 1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::default());
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::rel(1e-10));
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn half_line() {
        let r = integrate_to_infinity(|x| (-x).exp(), 0.0, Tolerance::default());
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = integrate_to_infinity(|x| 1.0 / (1.0 + x * x), 0.0, Tolerance::default());
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn legendre_moments() {
        let rule = gauss_legendre_unit(16).unwrap();
        for k in 0..20 {
            let exact = 1.0 / (k as f64 + 1.0);
            assert!((rule.apply(|u| u.powi(k)) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn jacobi_moments_match_beta_ratios() {
        // E[U^k] under Beta(a,b) is Π_{j<k} (a+j)/(a+b+j).
        for &(a, b) in &[(0.5, 1.5), (1.0, 1.0), (0.25, 1.75), (2.0, 0.5)] {
            let rule = gauss_jacobi_beta(64, a, b).unwrap();
            let mut exact = 1.0;
            for k in 0..15 {
                let got = rule.apply(|u| u.powi(k));
                assert!(
                    (got - exact).abs() <= 1e-12 * exact.max(1e-3),
                    "a={a} b={b} k={k}: {got} vs {exact}"
                );
                exact *= (a + k as f64) / (a + b + k as f64);
            }
        }
    }

    #[test]
    fn jacobi_rejects_bad_input() {
        assert!(gauss_jacobi_beta(0, 1.0, 1.0).is_err());
        assert!(gauss_jacobi_beta(8, 0.0, 1.0).is_err());
    }
}
