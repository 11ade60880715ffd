//! Moments of the fitness weights and of the offspring numbers.
//!
//! The Laplace-type transforms `I_p(u) = E[Y^p e^{-uY}]` are evaluated by
//! quadrature in logarithmic variables, and the weight moments through
//!
//! ```text
//! E[η_1^{b_1} ... η_a^{b_a}] = Γ(b)^{-1} ∫_0^∞ u^{b-1} I_0(u)^{N-a} Π I_{b_i}(u) du
//! ```
//!
//! split at `κ_N = (log N)^2 / N`. Above the split the integral is at most
//! `I_0(κ_N)^{N-a}` (after division by `Γ(b)`), which is reported as a
//! certified bound. Monte Carlo and direct-simulation estimators serve as
//! independent checks, and the leading-order expansions for each tail
//! regime are provided for comparison.

use std::cell::RefCell;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::fitnesswf::{fill_y, normalize_fitness, sample_parents_rng, FitnessSpec};
use crate::quadrature::{integrate, Tolerance};
use crate::rng::{derive_seed, rng_from_seed, streams};
use crate::stats::{Accumulator, Estimate};

/// Law of `Y` for moment computations.
pub type DistSpec = FitnessSpec;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitPoint {
    /// `κ_N = (log N)^2 / N`.
    AutoKappa,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Initial number of Gauss-Kronrod panels for each integral.
    pub nodes: usize,
    pub split_point: SplitPoint,
    /// The upper part of the moment integral is skipped when its bound is at
    /// most this fraction of the lower part; otherwise it is integrated.
    pub tail_bound_budget: f64,
    /// Relative tolerance of the adaptive integrations.
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes: 32,
            split_point: SplitPoint::AutoKappa,
            tail_bound_budget: 1e-10,
            rel_tol: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 16 {
            return Err(invalid(format!("quadrature needs at least 16 nodes, got {}", self.nodes)));
        }
        if !(self.tail_bound_budget > 0.0 && self.tail_bound_budget < 1.0) {
            return Err(invalid("tail bound budget must lie in (0,1)"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(invalid("relative tolerance must lie in (0,1)"));
        }
        if let SplitPoint::Fixed(s) = self.split_point {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid("split point must be positive"));
            }
        }
        Ok(())
    }

    fn tol(&self) -> Tolerance {
        Tolerance {
            abs: 0.0,
            rel: self.rel_tol,
            max_intervals: 4000,
        }
    }
}

/// Integrand values below `max - DROP` (in log scale) are cut off; the
/// discarded mass is covered by a tail estimate.
const DROP: f64 = 50.0;

/// `log ∫ exp(φ(t)) dt` over `[lo, ∞)` (or the whole line) for concave `φ`.
///
/// The maximizer is located by bisection on `φ'`, the window where `φ` is
/// within `DROP` of its maximum is integrated, and each cut-off tail is
/// bounded by `exp(φ(t_c)) / |φ'(t_c)|`, valid for concave `φ`.
fn log_integral_concave<F, D>(phi: F, dphi: D, lo: Option<f64>, quad: &QuadratureSpec) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let start = lo.unwrap_or(0.0);
    let t_star = if lo.is_some() && dphi(start) <= 0.0 {
        start
    } else {
        let mut a = start;
        let mut b = start;
        let mut step = 1.0;
        while dphi(b) > 0.0 {
            b += step;
            step *= 2.0;
        }
        step = 1.0;
        while lo.is_none() && dphi(a) < 0.0 {
            a -= step;
            step *= 2.0;
        }
        if dphi(a) < 0.0 {
            a = start;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if dphi(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let peak = phi(t_star);
    let mut d = 1.0;
    while phi(t_star + d) > peak - DROP {
        d *= 2.0;
    }
    let hi = t_star + d;
    let left = match lo {
        Some(l) => {
            let mut d = 1.0;
            while t_star - d > l && phi(t_star - d) > peak - DROP {
                d *= 2.0;
            }
            (t_star - d).max(l)
        }
        None => {
            let mut d = 1.0;
            while phi(t_star - d) > peak - DROP {
                d *= 2.0;
            }
            t_star - d
        }
    };
    let body = integrate_panels(|t| (phi(t) - peak).exp(), left, hi, quad);
    let mut tails = ((phi(hi) - peak).exp()) / dphi(hi).abs();
    if lo.is_none_or(|l| left > l) {
        tails += ((phi(left) - peak).exp()) / dphi(left).abs();
    }
    peak + (body + tails).ln()
}

/// Adaptive integration over `[a, b]` started from equal panels of width at
/// most 4 (and at least `quad.nodes` of them).
fn integrate_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, quad: &QuadratureSpec) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = quad.nodes.max(((b - a) / 4.0).ceil() as usize);
    let h = (b - a) / panels as f64;
    let tol = quad.tol();
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == panels { b } else { lo + h };
            integrate(&f, lo, hi, Tolerance { max_intervals: 200, ..tol }).value
        })
        .sum()
}

/// `log(1 - e^{-x})` given `log x`.
#[inline]
fn ln_one_minus_exp_neg(ln_x: f64) -> f64 {
    if ln_x < -20.0 {
        ln_x - 0.5 * ln_x.exp()
    } else {
        (-(-ln_x.exp()).exp_m1()).ln()
    }
}

/// `x / (e^x - 1)` given `log x`.
#[inline]
fn x_over_expm1(ln_x: f64) -> f64 {
    if ln_x < -20.0 {
        1.0 - 0.5 * ln_x.exp()
    } else {
        let x = ln_x.exp();
        x / x.exp_m1()
    }
}

fn ln_factorial(p: usize) -> f64 {
    ln_gamma(p as f64 + 1.0)
}

fn check_u(u: f64) -> Result<()> {
    if u >= 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("transform argument must be a nonnegative number, got {u}")))
    }
}

/// `log I_p(0) = log E[Y^p]`, or an error if the moment diverges.
fn ln_moment_at_zero(dist: &DistSpec, p: usize) -> Result<f64> {
    if p == 0 {
        return Ok(0.0);
    }
    match *dist {
        FitnessSpec::ParetoTail { alpha } if (p as f64) < alpha => {
            Ok((alpha / (alpha - p as f64)).ln())
        }
        FitnessSpec::ExponentialY => Ok(ln_factorial(p)),
        FitnessSpec::ConstantY => Ok(0.0),
        _ => Err(Error::Divergent(format!("E[Y^{p}] for {}", dist.name()))),
    }
}

/// `log I_p(u)`.
pub fn ln_laplace_ip(dist: &DistSpec, p: usize, u: f64, quad: &QuadratureSpec) -> Result<f64> {
    dist.validate()?;
    quad.validate()?;
    check_u(u)?;
    if u == 0.0 {
        return ln_moment_at_zero(dist, p);
    }
    let pf = p as f64;
    let lu = u.ln();
    Ok(match *dist {
        // y = e^t: I_p(u) = α ∫_0^∞ exp((p-α) t - u e^t) dt.
        FitnessSpec::ParetoTail { alpha } => {
            let c = pf - alpha;
            alpha.ln()
                + log_integral_concave(
                    |t| c * t - (lu + t).exp(),
                    |t| c - (lu + t).exp(),
                    Some(0.0),
                    quad,
                )
        }
        // Y = 1/X, X = e^t: I_p(u) = ∫ exp((1-p) t - u e^{-t} - e^t) dt.
        FitnessSpec::InverseExponential => log_integral_concave(
            |t| (1.0 - pf) * t - (lu - t).exp() - t.exp(),
            |t| (1.0 - pf) + (lu - t).exp() - t.exp(),
            None,
            quad,
        ),
        FitnessSpec::ExponentialY => ln_factorial(p) - (pf + 1.0) * u.ln_1p(),
        FitnessSpec::ConstantY => -u,
    })
}

/// `I_p(u) = E[Y^p e^{-uY}]`.
pub fn laplace_ip(dist: &DistSpec, p: usize, u: f64, quad: &QuadratureSpec) -> Result<f64> {
    ln_laplace_ip(dist, p, u, quad).map(f64::exp)
}

/// `1 - I_0(u) = E[1 - e^{-uY}]`, computed without cancellation.
pub fn one_minus_i0(dist: &DistSpec, u: f64, quad: &QuadratureSpec) -> Result<f64> {
    dist.validate()?;
    quad.validate()?;
    check_u(u)?;
    if u == 0.0 {
        return Ok(0.0);
    }
    let lu = u.ln();
    Ok(match *dist {
        FitnessSpec::ParetoTail { alpha } => (alpha.ln()
            + log_integral_concave(
                |t| -alpha * t + ln_one_minus_exp_neg(lu + t),
                |t| -alpha + x_over_expm1(lu + t),
                Some(0.0),
                quad,
            ))
        .exp(),
        FitnessSpec::InverseExponential => log_integral_concave(
            |t| t - t.exp() + ln_one_minus_exp_neg(lu - t),
            |t| 1.0 - t.exp() - x_over_expm1(lu - t),
            None,
            quad,
        )
        .exp(),
        FitnessSpec::ExponentialY => u / (1.0 + u),
        FitnessSpec::ConstantY => -(-u).exp_m1(),
    })
}

/// `log I_0(u)`, accurate when `I_0` is close to one.
pub fn ln_i0(dist: &DistSpec, u: f64, quad: &QuadratureSpec) -> Result<f64> {
    Ok((-one_minus_i0(dist, u, quad)?).ln_1p())
}

fn is_alpha(x: f64, v: f64) -> bool {
    (x - v).abs() < 1e-12
}

/// Leading-order behavior of `I_p(u)` as `u → 0` for `Y` with tail index
/// `α <= 2` (and `P(Y >= y) ~ y^{-α}`).
pub fn asymptotic_ip(alpha: f64, p: usize, u: f64, ey: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::UncoveredRegime(format!("alpha = {alpha} (need 0 < alpha <= 2)")));
    }
    if !(u > 0.0) {
        return Err(invalid("expansion point u must be positive"));
    }
    let pf = p as f64;
    if p == 1 {
        return Err(Error::UncoveredRegime(format!("p = 1 at alpha = {alpha}")));
    }
    if p == 0 {
        return if is_alpha(alpha, 1.0) {
            Ok(1.0 + u * u.ln())
        } else if alpha < 1.0 {
            Ok(1.0 - u.powf(alpha) * ln_gamma(1.0 - alpha).exp())
        } else {
            if !(ey > 0.0 && ey.is_finite()) {
                return Err(invalid("E[Y] must be positive and finite for alpha > 1"));
            }
            Ok(1.0 - u * ey)
        };
    }
    if is_alpha(alpha, 2.0) {
        if p == 2 {
            return Ok(-2.0 * u.ln());
        }
        return Ok((ln_gamma(pf - 2.0) + (2.0 - pf) * u.ln()).exp() * 2.0);
    }
    if is_alpha(alpha, 1.0) {
        return Ok(((1.0 - pf) * u.ln() + ln_gamma(pf - 1.0)).exp());
    }
    Ok(alpha * ((alpha - pf) * u.ln() + ln_gamma(pf - alpha)).exp())
}

fn check_b_list(b_list: &[usize]) -> Result<()> {
    if b_list.is_empty() {
        return Err(invalid("b_list must be nonempty"));
    }
    if b_list.iter().any(|&b| b < 2) {
        return Err(invalid("every exponent in b_list must be at least 2"));
    }
    Ok(())
}

/// Result of the split moment integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaMoment {
    /// Best value: `head`, plus `tail` when the tail had to be integrated.
    pub value: f64,
    /// `Γ(b)^{-1} ∫_0^{split}`.
    pub head: f64,
    /// `I_0(split)^{N-a}`, an upper bound on the omitted part.
    pub tail_bound: f64,
    /// Integrated upper part, if the bound exceeded the budget.
    pub tail: Option<f64>,
    pub split: f64,
}

/// `E[η_1^{b_1} ... η_a^{b_a}]` by the integral representation.
pub fn eta_moment_quadrature(
    dist: &DistSpec,
    n: usize,
    b_list: &[usize],
    quad: &QuadratureSpec,
) -> Result<EtaMoment> {
    dist.validate()?;
    quad.validate()?;
    check_b_list(b_list)?;
    let a = b_list.len();
    if a > n {
        return Err(invalid(format!("{a} distinct weights requested from N={n}")));
    }
    if n == 1 {
        return Ok(EtaMoment {
            value: 1.0,
            head: 1.0,
            tail_bound: 0.0,
            tail: None,
            split: f64::INFINITY,
        });
    }
    let b: usize = b_list.iter().sum();
    let nf = n as f64;
    let split = match quad.split_point {
        SplitPoint::AutoKappa => nf.ln().powi(2) / nf,
        SplitPoint::Fixed(s) => s,
    };
    let lg_b = ln_gamma(b as f64);
    let power = (n - a) as f64;
    // log of u^b I_0^{N-a} Π I_{b_i} / Γ(b) at u = e^v (the integrand in v).
    let log_f = |v: f64| -> Result<f64> {
        let u = v.exp();
        let mut s = b as f64 * v - lg_b + power * ln_i0(dist, u, quad)?;
        for &bi in b_list {
            s += ln_laplace_ip(dist, bi, u, quad)?;
        }
        Ok(s)
    };
    let v_split = split.ln();
    let head = integrate_log_scanned(&log_f, v_split, -1.0, quad)?;
    let tail_bound = (power * ln_i0(dist, split, quad)?).exp();
    let (value, tail) = if tail_bound <= quad.tail_bound_budget * head {
        (head, None)
    } else {
        let t = integrate_log_scanned(&log_f, v_split, 1.0, quad)?;
        (head + t, Some(t))
    };
    Ok(EtaMoment {
        value,
        head,
        tail_bound,
        tail,
        split,
    })
}

/// `∫ exp(g(v)) dv` from `v0` in direction `dir` (±1) to where `g` has
/// fallen `DROP` below its running maximum. A coarse scan locates the
/// window, then adaptive panels integrate it.
fn integrate_log_scanned<G>(g: &G, v0: f64, dir: f64, quad: &QuadratureSpec) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let step = 0.5;
    let mut best = g(v0)?;
    let mut end = v0;
    for k in 1..=8000 {
        let v = v0 + dir * step * k as f64;
        let val = g(v)?;
        if val > best {
            best = val;
        }
        end = v;
        if val < best - DROP {
            break;
        }
        if val == f64::NEG_INFINITY {
            break;
        }
    }
    let (lo, hi) = if dir < 0.0 { (end, v0) } else { (v0, end) };
    let failure = RefCell::new(None);
    let body = integrate_panels(
        |v| match g(v) {
            Ok(x) => (x - best).exp(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        lo,
        hi,
        quad,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(best.exp() * body)
}

/// Monte Carlo estimate of `E[η_1^{b_1} ... η_a^{b_a}]`. Each fitness vector
/// contributes the average of the product over `⌊N/a⌋` disjoint blocks of
/// coordinates, which is unbiased by exchangeability.
pub fn eta_moment_mc(
    dist: &DistSpec,
    n: usize,
    b_list: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    dist.validate()?;
    check_b_list(b_list)?;
    let a = b_list.len();
    if a > n {
        return Err(invalid(format!("{a} distinct weights requested from N={n}")));
    }
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let groups = n / a;
    let per_sample = |y: &mut [f64], rng: &mut crate::rng::SimRng| -> f64 {
        fill_y(dist, rng, y);
        let total: f64 = y.iter().sum();
        let mut acc = 0.0;
        for g in 0..groups {
            let mut prod = 1.0;
            for (i, &bi) in b_list.iter().enumerate() {
                prod *= (y[g * a + i] / total).powi(bi as i32);
            }
            acc += prod;
        }
        acc / groups as f64
    };
    let acc = chunked_accumulate(samples, seed, streams::MOMENTS, n, per_sample);
    Ok(acc.estimate())
}

const CHUNK: usize = 4096;

/// Runs `samples` draws in fixed-size chunks, each with its own derived
/// seed, and merges the chunk accumulators in chunk order.
fn chunked_accumulate<F>(samples: usize, seed: u64, stream: u64, n: usize, f: F) -> Accumulator
where
    F: Fn(&mut [f64], &mut crate::rng::SimRng) -> f64 + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Accumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(seed, stream, c as u64));
            let mut buf = vec![0.0; n];
            let mut acc = Accumulator::default();
            let count = CHUNK.min(samples - c * CHUNK);
            for _ in 0..count {
                acc.push(f(&mut buf, &mut rng));
            }
            acc
        })
        .collect();
    let mut total = Accumulator::default();
    for p in &parts {
        total.merge(p);
    }
    total
}

/// `log (N)_b = Σ_{i<b} log(N - i)`.
pub fn falling_factorial_log(n: usize, b: usize) -> Result<f64> {
    if b > n {
        return Err(invalid(format!("(N)_b needs b <= N, got N={n}, b={b}")));
    }
    Ok((0..b).map(|i| ((n - i) as f64).ln()).sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MomentMethod {
    Quadrature(QuadratureSpec),
    MonteCarlo { samples: usize, seed: u64 },
}

/// `E[(ν_1)_{b_1} ... (ν_a)_{b_a}] = (N)_b E[η_1^{b_1} ... η_a^{b_a}]`.
pub fn nu_factorial_moment(
    dist: &DistSpec,
    n: usize,
    b_list: &[usize],
    method: &MomentMethod,
) -> Result<f64> {
    check_b_list(b_list)?;
    let b: usize = b_list.iter().sum();
    let ff = falling_factorial_log(n, b)?.exp();
    let eta = match method {
        MomentMethod::Quadrature(q) => eta_moment_quadrature(dist, n, b_list, q)?.value,
        MomentMethod::MonteCarlo { samples, seed } => {
            eta_moment_mc(dist, n, b_list, *samples, *seed)?.mean
        }
    };
    Ok(ff * eta)
}

/// Average of `Π (ν_i)_{b_i}` over simulated generations of the full
/// model, using `⌊N/a⌋` disjoint coordinate blocks per generation.
pub fn simulated_nu_factorial_moment(
    dist: &DistSpec,
    n: usize,
    b_list: &[usize],
    generations: usize,
    seed: u64,
) -> Result<Estimate> {
    dist.validate()?;
    check_b_list(b_list)?;
    let a = b_list.len();
    let b: usize = b_list.iter().sum();
    falling_factorial_log(n, b)?;
    if generations == 0 {
        return Err(invalid("need at least one generation"));
    }
    let groups = n / a;
    let falling = |v: u32, k: usize| -> f64 { (0..k).map(|i| v as f64 - i as f64).product() };
    let per_gen = |y: &mut [f64], rng: &mut crate::rng::SimRng| -> f64 {
        fill_y(dist, rng, y);
        let eta = normalize_fitness(y).expect("draws are positive");
        let rec = sample_parents_rng(&eta, rng).expect("weights are valid");
        let mut acc = 0.0;
        for g in 0..groups {
            let mut prod = 1.0;
            for (i, &bi) in b_list.iter().enumerate() {
                prod *= falling(rec.offspring_counts[g * a + i], bi);
            }
            acc += prod;
        }
        acc / groups as f64
    };
    Ok(chunked_accumulate(generations, seed, streams::GENERATION, n, per_gen).estimate())
}

/// Leading-order `E[η_1^{b_1} ... η_a^{b_a}]` for tail index `α <= 2`.
/// `ey` is `E[Y]`, used only when `α > 1`.
pub fn asymptotic_eta_moment(alpha: f64, ey: f64, n: usize, b_list: &[usize]) -> Result<f64> {
    check_b_list(b_list)?;
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(invalid(format!("alpha outside (0,2]: {alpha}")));
    }
    if n < 2 {
        return Err(invalid("N must be at least 2"));
    }
    let a = b_list.len() as f64;
    let b: usize = b_list.iter().sum();
    let lg_b = ln_gamma(b as f64);
    let ln_n = (n as f64).ln();
    let need_ey = || -> Result<f64> {
        if ey > 0.0 && ey.is_finite() {
            Ok(ey.ln())
        } else {
            Err(invalid("E[Y] must be positive and finite for alpha > 1"))
        }
    };
    let log_value = if is_alpha(alpha, 2.0) {
        let big: Vec<usize> = b_list.iter().copied().filter(|&x| x >= 3).collect();
        let g = big.len() as f64;
        let prod: f64 = big.iter().map(|&x| ln_gamma(x as f64 - 2.0)).sum();
        ln_gamma(2.0 * a) + a * 2f64.ln() + prod - lg_b - 2.0 * a * need_ey()?
            + (a - g) * ln_n.ln()
            - 2.0 * a * ln_n
    } else if alpha > 1.0 {
        let prod: f64 = b_list
            .iter()
            .map(|&x| alpha.ln() + ln_gamma(x as f64 - alpha))
            .sum();
        ln_gamma(a * alpha) + prod - lg_b - a * alpha * need_ey()? - a * alpha * ln_n
    } else if is_alpha(alpha, 1.0) {
        let prod: f64 = b_list.iter().map(|&x| ln_gamma(x as f64 - 1.0)).sum();
        ln_gamma(a) + prod - lg_b - a * (ln_n + ln_n.ln())
    } else {
        let prod: f64 = b_list.iter().map(|&x| ln_gamma(x as f64 - alpha)).sum();
        ln_gamma(a) + (a - 1.0) * alpha.ln() + prod - a * ln_gamma(1.0 - alpha) - lg_b - a * ln_n
    };
    Ok(log_value.exp())
}

/// `E[(ν_1)_{b_1} ... (ν_a)_{b_a}] / (N^{b-a} c_N)` with `c_N = N E[η_1^2]`,
/// both moments from the integral representation.
pub fn mohle_ratio(dist: &DistSpec, n: usize, b_list: &[usize], quad: &QuadratureSpec) -> Result<f64> {
    check_b_list(b_list)?;
    let a = b_list.len();
    let b: usize = b_list.iter().sum();
    let num = falling_factorial_log(n, b)?.exp() * eta_moment_quadrature(dist, n, b_list, quad)?.value;
    let cn = n as f64 * eta_moment_quadrature(dist, n, &[2], quad)?.value;
    Ok(num / ((n as f64).powi((b - a) as i32) * cn))
}

/// `∫_z^∞ e^{-x}/x dx = -γ - log z - Σ_{m>=1} (-1)^m z^m / (m·m!)`, summed
/// until the terms are negligible.
pub fn exp_integral_e1_series(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(invalid("series needs z > 0"));
    }
    let mut sum = 0.0;
    let mut pow_over_fact = 1.0;
    for m in 1..=500 {
        let mf = m as f64;
        pow_over_fact *= -z / mf;
        let term = pow_over_fact / mf;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    Ok(-EULER_GAMMA - z.ln() - sum)
}

/// One line of the moment comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: usize,
    pub alpha: Option<f64>,
    pub b_list: Vec<usize>,
    pub quadrature_value: f64,
    pub mc_value: Option<f64>,
    pub mc_se: Option<f64>,
    pub asymptotic_value: Option<f64>,
    /// Quadrature over asymptotic value, when both exist.
    pub ratio: Option<f64>,
}

/// CSV with columns `N,alpha,b_list,quadrature_value,mc_value,mc_se,asymptotic_value,ratio`.
pub fn write_moment_csv<W: Write>(out: &mut W, rows: &[MomentRow]) -> io::Result<()> {
    let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
    writeln!(out, "N,alpha,b_list,quadrature_value,mc_value,mc_se,asymptotic_value,ratio")?;
    for r in rows {
        let bl: Vec<String> = r.b_list.iter().map(|b| b.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{:e},{},{},{},{}",
            r.n,
            r.alpha.map(|a| a.to_string()).unwrap_or_default(),
            bl.join(" "),
            r.quadrature_value,
            opt(r.mc_value),
            opt(r.mc_se),
            opt(r.asymptotic_value),
            opt(r.ratio)
        )?;
    }
    Ok(())
}
