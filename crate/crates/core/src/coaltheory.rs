//! Reference coalescents: Λ-coalescent merger rates (by quadrature and in
//! closed form), the discrete-time Ξ-coalescent with Poisson-Dirichlet
//! weights, identities they satisfy, reference simulators and the
//! leading-order pair-coalescence probabilities of the skewed Wright-Fisher
//! model.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::partition::{merge_blocks, MergerSignature, Partition, PartitionPath};
use crate::quadrature::{gauss_jacobi_beta, gauss_legendre_unit, FixedRule};
use crate::rng::rng_from_seed;

/// Number of nodes of the fixed rules used for rate integrals.
pub const RATE_NODES: usize = 64;

/// The measure `Λ` on `[0, 1]`. Beta measures are normalized to mass one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MeasureSpec {
    PointMassAtZero,
    Uniform01,
    BetaMeasure { a: f64, b: f64 },
}

impl MeasureSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MeasureSpec::BetaMeasure { a, b } if !(a > 0.0 && b > 0.0) => Err(invalid(format!(
                "Beta measure parameters must be positive, got ({a}, {b})"
            ))),
            _ => Ok(()),
        }
    }

    /// The measure whose rates coincide with the Beta(2-α, α) coalescent.
    pub fn beta_coalescent(alpha: f64) -> Self {
        MeasureSpec::BetaMeasure {
            a: 2.0 - alpha,
            b: alpha,
        }
    }

    fn rule(&self) -> Result<Option<FixedRule>> {
        self.validate()?;
        match *self {
            MeasureSpec::PointMassAtZero => Ok(None),
            MeasureSpec::Uniform01 => gauss_legendre_unit(RATE_NODES).map(Some),
            MeasureSpec::BetaMeasure { a, b } => gauss_jacobi_beta(RATE_NODES, a, b).map(Some),
        }
    }
}

fn check_bk(b: usize, k: usize) -> Result<()> {
    if k < 2 || k > b {
        return Err(invalid(format!("rate index needs 2 <= k <= b, got b={b}, k={k}")));
    }
    Ok(())
}

fn integrand(u: f64, b: usize, k: usize) -> f64 {
    u.powi(k as i32 - 2) * (1.0 - u).powi((b - k) as i32)
}

/// `λ_{b,k} = ∫ u^{k-2} (1-u)^{b-k} Λ(du)` by fixed Gauss rules.
pub fn lambda_rate_quadrature(measure: &MeasureSpec, b: usize, k: usize) -> Result<f64> {
    check_bk(b, k)?;
    match measure.rule()? {
        None => Ok(kingman_rate(b, k)),
        Some(rule) => Ok(rule.apply(|u| integrand(u, b, k))),
    }
}

/// `B(k-α, b-k+α) / B(2-α, α)`, the Beta(2-α, α) coalescent; α = 1 gives
/// the Bolthausen-Sznitman coalescent.
pub fn beta_rate_closed_form(alpha: f64, b: usize, k: usize) -> Result<f64> {
    check_bk(b, k)?;
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid(format!("alpha outside (0,2): {alpha}")));
    }
    let kf = k as f64;
    let bf = b as f64;
    Ok((ln_beta(kf - alpha, bf - kf + alpha) - ln_beta(2.0 - alpha, alpha)).exp())
}

/// `(k-2)! (b-k)! / (b-1)!`.
pub fn bolthausen_sznitman_rate(b: usize, k: usize) -> Result<f64> {
    check_bk(b, k)?;
    Ok((ln_fact(k - 2) + ln_fact(b - k) - ln_fact(b - 1)).exp())
}

pub fn kingman_rate(_b: usize, k: usize) -> f64 {
    if k == 2 {
        1.0
    } else {
        0.0
    }
}

fn ln_fact(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Binomial coefficient as a float.
pub fn choose_f64(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Anything that can supply `λ_{b,k}`.
pub trait RateSource {
    fn rate(&self, b: usize, k: usize) -> Result<f64>;
    fn label(&self) -> &'static str;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kingman;

impl RateSource for Kingman {
    fn rate(&self, b: usize, k: usize) -> Result<f64> {
        check_bk(b, k)?;
        Ok(kingman_rate(b, k))
    }
    fn label(&self) -> &'static str {
        "closed_form"
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaClosedForm {
    pub alpha: f64,
}

impl RateSource for BetaClosedForm {
    fn rate(&self, b: usize, k: usize) -> Result<f64> {
        beta_rate_closed_form(self.alpha, b, k)
    }
    fn label(&self) -> &'static str {
        "closed_form"
    }
}

impl RateSource for MeasureSpec {
    fn rate(&self, b: usize, k: usize) -> Result<f64> {
        lambda_rate_quadrature(self, b, k)
    }
    fn label(&self) -> &'static str {
        "quadrature"
    }
}

/// `λ_{b,k}` for `2 <= k <= b <= max_b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateTable {
    pub max_b: usize,
    pub source: String,
    rates: BTreeMap<String, f64>,
    #[serde(skip)]
    grid: Vec<Vec<f64>>,
}

impl RateTable {
    pub fn build(source: &dyn RateSource, max_b: usize) -> Result<Self> {
        if max_b < 2 {
            return Err(invalid("rate table needs max_b >= 2"));
        }
        let mut grid = vec![Vec::new(); max_b + 1];
        for (b, row) in grid.iter_mut().enumerate().skip(2) {
            *row = vec![0.0; b + 1];
            for k in 2..=b {
                let r = source.rate(b, k)?;
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(invalid(format!("rate λ({b},{k}) = {r} is not a nonnegative number")));
                }
                row[k] = r;
            }
        }
        Ok(Self::from_grid(max_b, source.label().to_string(), grid))
    }

    /// Table for a measure, with the quadrature rule built once.
    pub fn from_measure(measure: &MeasureSpec, max_b: usize) -> Result<Self> {
        if max_b < 2 {
            return Err(invalid("rate table needs max_b >= 2"));
        }
        let rule = measure.rule()?;
        let mut grid = vec![Vec::new(); max_b + 1];
        for (b, row) in grid.iter_mut().enumerate().skip(2) {
            *row = vec![0.0; b + 1];
            for k in 2..=b {
                row[k] = match &rule {
                    None => kingman_rate(b, k),
                    Some(rule) => rule.apply(|u| integrand(u, b, k)),
                };
            }
        }
        Ok(Self::from_grid(max_b, "quadrature".into(), grid))
    }

    fn from_grid(max_b: usize, source: String, grid: Vec<Vec<f64>>) -> Self {
        let mut rates = BTreeMap::new();
        for (b, row) in grid.iter().enumerate().skip(2) {
            for (k, &r) in row.iter().enumerate().skip(2) {
                rates.insert(format!("{b},{k}"), r);
            }
        }
        RateTable {
            max_b,
            source,
            rates,
            grid,
        }
    }

    pub fn get(&self, b: usize, k: usize) -> Result<f64> {
        check_bk(b, k)?;
        if b > self.max_b {
            return Err(invalid(format!("b={b} beyond table size {}", self.max_b)));
        }
        Ok(self.grid[b][k])
    }

    /// Total event rate `Σ_k C(b,k) λ_{b,k}` with `b` blocks.
    pub fn total_rate(&self, b: usize) -> Result<f64> {
        (2..=b)
            .map(|k| Ok(choose_f64(b, k) * self.get(b, k)?))
            .sum()
    }

    /// Rows `b,k,rate,source`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "b,k,rate,source")?;
        for b in 2..=self.max_b {
            for k in 2..=b {
                writeln!(out, "{b},{k},{:e},{}", self.grid[b][k], self.source)?;
            }
        }
        Ok(())
    }
}

impl RateSource for RateTable {
    fn rate(&self, b: usize, k: usize) -> Result<f64> {
        self.get(b, k)
    }
    fn label(&self) -> &'static str {
        "table"
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub max_residual: f64,
    pub checked: usize,
    /// `(b, k, residual)` for entries above the tolerance.
    pub failing: Vec<(usize, usize, f64)>,
}

/// Residuals of `λ_{b,k} = λ_{b+1,k} + λ_{b+1,k+1}` for all `b < max_b`.
pub fn check_consistency(table: &RateTable, tolerance: f64) -> ConsistencyReport {
    let mut report = ConsistencyReport {
        max_residual: 0.0,
        checked: 0,
        failing: Vec::new(),
    };
    for b in 2..table.max_b {
        for k in 2..=b {
            let r = (table.grid[b][k] - table.grid[b + 1][k] - table.grid[b + 1][k + 1]).abs();
            report.checked += 1;
            report.max_residual = report.max_residual.max(r);
            if r > tolerance {
                report.failing.push((b, k, r));
            }
        }
    }
    report
}

fn check_xi_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha outside (0,1): {alpha}")))
    }
}

/// Log of `α^{a+s-1} (a+s-1)!/(b-1)! Π Γ(b_i-α)/Γ(1-α)`; singletons
/// contribute a factor 1.
fn ln_pd_weight(alpha: f64, sizes: &[usize], s: usize) -> f64 {
    let blocks = sizes.len() + s;
    let b: usize = sizes.iter().sum::<usize>() + s;
    let lg1 = ln_gamma(1.0 - alpha);
    let mut v = (blocks as f64 - 1.0) * alpha.ln() + ln_fact(blocks - 1) - ln_fact(b - 1);
    for &bi in sizes {
        v += ln_gamma(bi as f64 - alpha) - lg1;
    }
    v
}

/// Probability that, among `b` lineages, one specified configuration of
/// merging groups (sizes `b_1..b_a`, `s` untouched) occurs in one
/// generation of the discrete Ξ-coalescent.
pub fn xi_discrete_prob(alpha: f64, sig: &MergerSignature) -> Result<f64> {
    check_xi_alpha(alpha)?;
    if !sig.is_merge() {
        return Err(invalid("signature must contain at least one merging group"));
    }
    Ok(ln_pd_weight(alpha, &sig.group_sizes, sig.s).exp())
}

/// All signatures on `b` blocks (integer partitions of `b`), merges first
/// in lexicographic order of sizes, no-merge last.
pub fn enumerate_signatures(b: usize) -> Vec<MergerSignature> {
    fn rec(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=max.min(rem)).rev() {
            cur.push(part);
            rec(rem - part, part, cur, out);
            cur.pop();
        }
    }
    let mut parts = Vec::new();
    rec(b, b, &mut Vec::new(), &mut parts);
    parts
        .into_iter()
        .map(|p| {
            let s = p.iter().filter(|&&x| x == 1).count();
            let sizes: Vec<usize> = p.into_iter().filter(|&x| x >= 2).collect();
            MergerSignature::new(sizes, s).expect("parts are valid")
        })
        .collect()
}

/// Probability that nothing merges among `b` lineages, computed as one
/// minus the total probability of all merger configurations.
pub fn xi_no_merge_prob(alpha: f64, b: usize) -> Result<f64> {
    check_xi_alpha(alpha)?;
    if b == 0 {
        return Err(invalid("need at least one lineage"));
    }
    let merged: f64 = enumerate_signatures(b)
        .iter()
        .filter(|s| s.is_merge())
        .map(|s| s.multiplicity() * ln_pd_weight(alpha, &s.group_sizes, s.s).exp())
        .sum();
    let p = 1.0 - merged;
    if !(-1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(invalid(format!("no-merge probability {p} outside [0,1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Per-configuration probability including the no-merge configuration.
pub fn xi_config_prob(alpha: f64, sig: &MergerSignature) -> Result<f64> {
    if sig.is_merge() {
        xi_discrete_prob(alpha, sig)
    } else {
        xi_no_merge_prob(alpha, sig.b)
    }
}

/// Law of the signature class after one generation with `b` lineages:
/// each class probability is its multiplicity times the configuration
/// probability.
pub fn xi_signature_distribution(alpha: f64, b: usize) -> Result<Vec<(MergerSignature, f64)>> {
    check_xi_alpha(alpha)?;
    enumerate_signatures(b)
        .into_iter()
        .map(|sig| {
            let p = xi_config_prob(alpha, &sig)?;
            Ok((sig.clone(), sig.multiplicity() * p))
        })
        .collect()
}

/// Residual of the consistency recursion obtained by adding one lineage:
/// `λ_{b+1;b_1..b_a;s+1} = λ_{b;b_1..b_a;s} - Σ_j λ_{b+1;..b_j+1..;s} -
/// s·λ_{b+1;b_1..b_a,2;s-1}`, evaluated with configuration probabilities.
pub fn xi_recursion_check(alpha: f64, sig: &MergerSignature) -> Result<f64> {
    check_xi_alpha(alpha)?;
    let p = |sizes: Vec<usize>, s: usize| -> Result<f64> {
        xi_config_prob(alpha, &MergerSignature::new(sizes, s)?)
    };
    let lhs = p(sig.group_sizes.clone(), sig.s + 1)?;
    let mut rhs = p(sig.group_sizes.clone(), sig.s)?;
    for j in 0..sig.group_sizes.len() {
        let mut grown = sig.group_sizes.clone();
        grown[j] += 1;
        rhs -= p(grown, sig.s)?;
    }
    if sig.s > 0 {
        let mut with_pair = sig.group_sizes.clone();
        with_pair.push(2);
        rhs -= sig.s as f64 * p(with_pair, sig.s - 1)?;
    }
    Ok(lhs - rhs)
}

/// `λ_{b,b-1}` from the consistency relation `λ_{b-1,b-1} - λ_{b,b}`.
pub fn rate_by_consistency(source: &dyn RateSource, b: usize) -> Result<f64> {
    if b < 3 {
        return Err(invalid("need b >= 3"));
    }
    Ok(source.rate(b - 1, b - 1)? - source.rate(b, b)?)
}

/// Continuous-time n-coalescent: with `b` blocks each `k`-subset merges at
/// rate `λ_{b,k}`. Records the state after every event up to `horizon`.
pub fn simulate_lambda_coalescent(
    n: usize,
    source: &dyn RateSource,
    horizon: f64,
    seed: u64,
) -> Result<PartitionPath> {
    if n < 2 {
        return Err(invalid("coalescent needs n >= 2"));
    }
    if !(horizon > 0.0) {
        return Err(invalid("horizon must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let mut state = Partition::singletons(n)?;
    let mut path = PartitionPath::new(0.0, state.clone());
    let mut t = 0.0;
    while state.block_count() > 1 {
        let b = state.block_count();
        let weights: Vec<f64> = (2..=b)
            .map(|k| Ok(choose_f64(b, k) * source.rate(b, k)?))
            .collect::<Result<_>>()?;
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            break;
        }
        let e: f64 = Exp1.sample(&mut rng);
        t += e / total;
        if t > horizon {
            break;
        }
        let mut u = rng.random::<f64>() * total;
        let mut k = b;
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                k = i + 2;
                break;
            }
            u -= w;
        }
        let mut idx: Vec<usize> = (0..b).collect();
        let (chosen, _) = idx.partial_shuffle(&mut rng, k);
        state = merge_blocks(&state, &[chosen.to_vec()])?;
        path.push(t, state.clone())?;
    }
    Ok(path)
}

/// Largest sample size for which the discrete simulator enumerates
/// signatures.
pub const XI_MAX_SAMPLE: usize = 8;

/// Discrete-time Ξ-coalescent with Poisson-Dirichlet transition weights.
/// Each generation a signature class is drawn from the enumerated law and
/// realized on a uniformly shuffled set of blocks. Records the state after
/// every generation with a merge.
pub fn simulate_xi_discrete(
    n: usize,
    alpha: f64,
    generations: usize,
    seed: u64,
) -> Result<PartitionPath> {
    check_xi_alpha(alpha)?;
    if !(2..=XI_MAX_SAMPLE).contains(&n) {
        return Err(invalid(format!("discrete simulator supports 2 <= n <= {XI_MAX_SAMPLE}")));
    }
    let tables: Vec<Vec<(MergerSignature, f64)>> = (0..=n)
        .map(|b| {
            if b < 2 {
                Ok(Vec::new())
            } else {
                xi_signature_distribution(alpha, b)
            }
        })
        .collect::<Result<_>>()?;
    let mut rng = rng_from_seed(seed);
    let mut state = Partition::singletons(n)?;
    let mut path = PartitionPath::new(0.0, state.clone());
    for g in 1..=generations {
        let b = state.block_count();
        if b == 1 {
            break;
        }
        let table = &tables[b];
        let mut u = rng.random::<f64>();
        let mut sig = &table[table.len() - 1].0;
        for (s, p) in table {
            if u < *p {
                sig = s;
                break;
            }
            u -= p;
        }
        if !sig.is_merge() {
            continue;
        }
        let mut order: Vec<usize> = (0..b).collect();
        order.shuffle(&mut rng);
        let mut groups = Vec::new();
        let mut pos = 0;
        for &size in &sig.group_sizes {
            groups.push(order[pos..pos + size].to_vec());
            pos += size;
        }
        state = merge_blocks(&state, &groups)?;
        path.push(g as f64, state.clone())?;
    }
    Ok(path)
}

/// Regimes of the leading-order pair-coalescence probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum CnRegime {
    /// `E[Y^2] < ∞`: `c_N ~ E[Y^2] / (E[Y]^2 N)`.
    SquareIntegrable { ey: f64, ey2: f64 },
    /// `α = 2`: `c_N ~ 2 log N / (E[Y]^2 N)`.
    Alpha2 { ey: f64 },
    /// `1 < α < 2`: `c_N ~ α Γ(α) Γ(2-α) N^{1-α} / E[Y]^α`.
    AlphaIn12 { alpha: f64, ey: f64 },
    /// `α = 1`: `c_N ~ 1 / log N`.
    Alpha1,
    /// `α < 1`: `c_N → Γ(2-α)/Γ(1-α)`.
    AlphaLt1 { alpha: f64 },
}

pub fn asymptotic_cn(regime: &CnRegime, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(invalid("N must be at least 2"));
    }
    let nf = n as f64;
    let positive = |name: &str, v: f64| -> Result<()> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(invalid(format!("{name} must be positive and finite, got {v}")))
        }
    };
    match *regime {
        CnRegime::SquareIntegrable { ey, ey2 } => {
            positive("E[Y]", ey)?;
            positive("E[Y^2]", ey2)?;
            Ok(ey2 / (ey * ey) / nf)
        }
        CnRegime::Alpha2 { ey } => {
            positive("E[Y]", ey)?;
            Ok(2.0 * nf.ln() / (ey * ey * nf))
        }
        CnRegime::AlphaIn12 { alpha, ey } => {
            positive("E[Y]", ey)?;
            if !(alpha > 1.0 && alpha < 2.0) {
                return Err(invalid(format!("alpha outside (1,2): {alpha}")));
            }
            Ok((alpha.ln() + ln_gamma(alpha) + ln_gamma(2.0 - alpha) - alpha * ey.ln()
                + (1.0 - alpha) * nf.ln())
            .exp())
        }
        CnRegime::Alpha1 => Ok(1.0 / nf.ln()),
        CnRegime::AlphaLt1 { alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(invalid(format!("alpha outside (0,1): {alpha}")));
            }
            Ok((ln_gamma(2.0 - alpha) - ln_gamma(1.0 - alpha)).exp())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_examples() {
        let u = MeasureSpec::Uniform01;
        assert!((lambda_rate_quadrature(&u, 2, 2).unwrap() - 1.0).abs() < 1e-14);
        assert!((lambda_rate_quadrature(&u, 3, 2).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(lambda_rate_quadrature(&MeasureSpec::PointMassAtZero, 5, 3).unwrap(), 0.0);
        assert_eq!(lambda_rate_quadrature(&MeasureSpec::PointMassAtZero, 5, 2).unwrap(), 1.0);
        assert!(lambda_rate_quadrature(&u, 3, 4).is_err());
        assert!(lambda_rate_quadrature(&u, 3, 1).is_err());
        assert!(lambda_rate_quadrature(&MeasureSpec::BetaMeasure { a: 0.0, b: 1.0 }, 3, 2).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert!((beta_rate_closed_form(1.0, 3, 2).unwrap() - 0.5).abs() < 1e-14);
        // B(1.5,1.5)/B(0.5,1.5) = (π/8)/(π/2) = 1/4.
        let r = beta_rate_closed_form(1.5, 3, 3).unwrap();
        assert!((r - 0.25).abs() < 1e-14);
        let q = lambda_rate_quadrature(&MeasureSpec::beta_coalescent(1.5), 3, 3).unwrap();
        assert!((r - q).abs() < 1e-8);
        for alpha in [0.3, 1.0, 1.5, 1.9] {
            assert!((beta_rate_closed_form(alpha, 2, 2).unwrap() - 1.0).abs() < 1e-13);
        }
        assert!(beta_rate_closed_form(2.5, 3, 2).is_err());
        assert!(beta_rate_closed_form(0.0, 3, 2).is_err());
    }

    #[test]
    fn kingman_examples() {
        assert_eq!(kingman_rate(2, 2), 1.0);
        assert_eq!(kingman_rate(7, 2), 1.0);
        assert_eq!(kingman_rate(7, 3), 0.0);
    }

    #[test]
    fn closed_form_matches_quadrature_grid() {
        for alpha in [1.0, 1.25, 1.5, 1.75] {
            let m = MeasureSpec::beta_coalescent(alpha);
            let table = RateTable::from_measure(&m, 12).unwrap();
            for b in 2..=12 {
                for k in 2..=b {
                    let c = beta_rate_closed_form(alpha, b, k).unwrap();
                    let q = table.get(b, k).unwrap();
                    assert!((c - q).abs() <= 1e-8 * c, "α={alpha} b={b} k={k}: {c} vs {q}");
                }
            }
        }
    }

    #[test]
    fn consistency_tables() {
        let k = RateTable::build(&Kingman, 10).unwrap();
        assert_eq!(check_consistency(&k, 0.0).max_residual, 0.0);
        let bsz = RateTable::build(&BetaClosedForm { alpha: 1.0 }, 10).unwrap();
        assert!(check_consistency(&bsz, 1e-12).max_residual < 1e-12);
        let q = RateTable::from_measure(&MeasureSpec::BetaMeasure { a: 0.5, b: 1.5 }, 10).unwrap();
        let rep = check_consistency(&q, 1e-8);
        assert!(rep.failing.is_empty() && rep.checked == 36, "{rep:?}");
    }

    #[test]
    fn bsz_factorial_form() {
        for b in 2..=12 {
            for k in 2..=b {
                let c = beta_rate_closed_form(1.0, b, k).unwrap();
                let f = bolthausen_sznitman_rate(b, k).unwrap();
                assert!((c - f).abs() < 1e-13 * f.max(1e-300));
            }
        }
    }

    #[test]
    fn consistency_recovers_next_to_diagonal_rate() {
        for alpha in [1.2, 1.5, 1.8] {
            let src = BetaClosedForm { alpha };
            for b in 3..=12 {
                let rec = rate_by_consistency(&src, b).unwrap();
                let direct = (ln_beta(b as f64 - 1.0 - alpha, 1.0 + alpha)
                    - ln_beta(2.0 - alpha, alpha))
                .exp();
                assert!((rec - direct).abs() < 1e-12 * direct);
            }
        }
    }

    #[test]
    fn xi_examples() {
        let pair = MergerSignature::new(vec![2], 0).unwrap();
        assert!((xi_discrete_prob(0.5, &pair).unwrap() - 0.5).abs() < 1e-15);
        let triple = MergerSignature::new(vec![3], 0).unwrap();
        assert!((xi_discrete_prob(0.5, &triple).unwrap() - 0.375).abs() < 1e-14);
        for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let p = xi_discrete_prob(alpha, &pair).unwrap();
            let limit = asymptotic_cn(&CnRegime::AlphaLt1 { alpha }, 100).unwrap();
            assert!((p - limit).abs() < 1e-12);
            assert!((p - (1.0 - alpha)).abs() < 1e-12);
        }
        assert!(xi_discrete_prob(1.0, &pair).is_err());
        assert!(xi_discrete_prob(0.5, &MergerSignature::no_merge(3)).is_err());
    }

    #[test]
    fn no_merge_matches_closed_form() {
        // The all-singletons weight of the formula is α^{b-1}.
        for alpha in [0.2, 0.5, 0.8] {
            for b in 1..=8 {
                let p = xi_no_merge_prob(alpha, b).unwrap();
                assert!((p - alpha.powi(b as i32 - 1)).abs() < 1e-12, "α={alpha} b={b}");
                let dist = xi_signature_distribution(alpha, b.max(2)).unwrap();
                let total: f64 = dist.iter().map(|(_, p)| p).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn recursion_examples() {
        let s = MergerSignature::new(vec![2], 0).unwrap();
        assert!(xi_recursion_check(0.5, &s).unwrap().abs() < 1e-12);
        let s = MergerSignature::new(vec![2, 2], 0).unwrap();
        assert!(xi_recursion_check(0.3, &s).unwrap().abs() < 1e-12);
        for b in 1..=6 {
            for sig in enumerate_signatures(b) {
                for alpha in [0.1, 0.5, 0.9] {
                    let r = xi_recursion_check(alpha, &sig).unwrap();
                    assert!(r.abs() < 1e-12, "{sig} α={alpha}: {r}");
                }
            }
        }
    }

    #[test]
    fn signature_enumeration_counts() {
        // Integer partition numbers.
        let counts: Vec<usize> = (1..=8).map(|b| enumerate_signatures(b).len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11, 15, 22]);
    }

    #[test]
    fn kingman_pair_time_is_exponential() {
        let reps = 100_000;
        let mut total = 0.0;
        for r in 0..reps {
            let path = simulate_lambda_coalescent(2, &Kingman, 1e9, r).unwrap();
            total += path.times()[1];
        }
        let mean = total / reps as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn bsz_first_event_triple_fraction() {
        let reps = 40_000;
        let src = BetaClosedForm { alpha: 1.0 };
        let triples = (0..reps)
            .filter(|&r| {
                let path = simulate_lambda_coalescent(3, &src, 1e9, r).unwrap();
                path.states()[1].block_count() == 1
            })
            .count();
        let f = triples as f64 / reps as f64;
        let se = (0.25 * 0.75 / reps as f64).sqrt();
        assert!((f - 0.25).abs() < 4.0 * se, "{f}");
    }

    #[test]
    fn block_counts_strictly_decrease() {
        let q = RateTable::from_measure(&MeasureSpec::BetaMeasure { a: 0.5, b: 1.5 }, 8).unwrap();
        for seed in 0..200 {
            let path = simulate_lambda_coalescent(8, &q, 1e9, seed).unwrap();
            let c = path.block_counts();
            assert!(c.windows(2).all(|w| w[1] < w[0]));
            assert_eq!(*c.last().unwrap(), 1);
            let x = simulate_xi_discrete(6, 0.5, 10_000, seed).unwrap();
            let c = x.block_counts();
            assert!(c.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn kingman_block_count_mean() {
        // Pure-death chain b -> b-1 at rate C(b,2), integrated by RK4.
        let n = 4;
        let t_obs = 0.4;
        let mut p = [0.0f64; 5];
        p[n] = 1.0;
        let h: f64 = 1e-4;
        let deriv = |p: &[f64; 5]| {
            let mut d = [0.0; 5];
            for b in 2..=4 {
                let r = (b * (b - 1) / 2) as f64;
                d[b] -= r * p[b];
                d[b - 1] += r * p[b];
            }
            d
        };
        let steps = (t_obs / h).round() as usize;
        for _ in 0..steps {
            let k1 = deriv(&p);
            let mut q = p;
            (0..5).for_each(|i| q[i] = p[i] + 0.5 * h * k1[i]);
            let k2 = deriv(&q);
            (0..5).for_each(|i| q[i] = p[i] + 0.5 * h * k2[i]);
            let k3 = deriv(&q);
            (0..5).for_each(|i| q[i] = p[i] + h * k3[i]);
            let k4 = deriv(&q);
            (0..5).for_each(|i| p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        }
        let expect: f64 = (1..=4).map(|b| b as f64 * p[b]).sum();
        let reps = 50_000;
        let mut acc = crate::stats::Accumulator::default();
        for r in 0..reps {
            let path = simulate_lambda_coalescent(n, &Kingman, 1e9, 1000 + r).unwrap();
            acc.push(path.state_at(t_obs).block_count() as f64);
        }
        assert!(acc.estimate().z(expect) < 3.5, "{:?} vs {expect}", acc.estimate());
    }

    #[test]
    fn asymptotic_cn_examples() {
        let sq = asymptotic_cn(&CnRegime::SquareIntegrable { ey: 1.5, ey2: 3.0 }, 1000).unwrap();
        assert!((sq * 1000.0 - 4.0 / 3.0).abs() < 1e-12);
        let a1 = asymptotic_cn(&CnRegime::Alpha1, 10_000).unwrap();
        assert!((a1 - 0.10857).abs() < 1e-5);
        for n in [2, 100, 1_000_000] {
            assert!((asymptotic_cn(&CnRegime::AlphaLt1 { alpha: 0.5 }, n).unwrap() - 0.5).abs() < 1e-12);
        }
        assert!(asymptotic_cn(&CnRegime::AlphaIn12 { alpha: 2.5, ey: 1.0 }, 10).is_err());
        assert!(asymptotic_cn(&CnRegime::Alpha1, 1).is_err());
    }

    #[test]
    fn rate_table_csv() {
        let t = RateTable::build(&BetaClosedForm { alpha: 1.5 }, 4).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 1 + 2 + 3);
        assert!(text.starts_with("b,k,rate,source\n2,2,"));
        assert!((t.total_rate(3).unwrap() - (3.0 * 0.75 + 0.25)).abs() < 1e-12);
    }
}
