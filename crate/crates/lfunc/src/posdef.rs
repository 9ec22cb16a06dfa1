//! The verdict engine: S^+/S^- counting, certified sign-change detection for
//! the profile phi(y), the Mellin-side prefilter on (1/2, 1), and the
//! prime-sum ladder diagnostics.
//!
//! A NotPositiveDefinite verdict always carries a witness pair that clears
//! the full uncertainty stack (truncation tail + quadrature budget + slack)
//! at both points; NoSignChangeFound is never a positivity certificate.

use crate::arith::SeriesMode;
use crate::families::FamilyMember;
use crate::kernel::{gamma_eval, gamma_log_deriv, phi_partial, KernelCtx, KernelError, PhiPoint};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PosDefError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Arith(#[from] crate::arith::ArithError),
    #[error("local factor nearly vanishes at s = {s} for p = {p}")]
    LocalFactorVanishes { p: u64, s: f64 },
    #[error("prime ladder infeasible at r = {r}: u(s_r) = exp({ln_u:.2}) exceeds the prime budget; feasible r <= {max_r}")]
    LadderInfeasible { r: u32, ln_u: f64, max_r: u32 },
    #[error("member has no local factor data at p = {0}")]
    NoLocalFactor(u64),
}

/// Sign-change counts: S^- deletes zero terms, S^+ replaces each zero by a
/// number of adversarially chosen sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SignChangeCount {
    pub s_minus: usize,
    pub s_plus: usize,
}

/// Exact S^- and S^+ of a finite real sequence.
pub fn sign_changes(seq: &[f64]) -> SignChangeCount {
    let s_minus = {
        let mut last = 0i8;
        let mut count = 0;
        for &v in seq {
            let s = sign8(v);
            if s == 0 {
                continue;
            }
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
        count
    };

    // S^+: zeros take adversarial signs. Two-state DP over the last sign;
    // fixed entries force the transition, zeros branch both ways.
    if seq.is_empty() {
        return SignChangeCount { s_minus, s_plus: 0 };
    }
    const NEG_INF: i64 = i64::MIN / 2;
    let mut best = [NEG_INF; 2]; // index 0 = last sign +, 1 = last sign -
    match sign8(seq[0]) {
        1 => best[0] = 0,
        -1 => best[1] = 0,
        _ => best = [0, 0],
    }
    for &v in &seq[1..] {
        let next = |same: usize, other: usize| best[same].max(best[other] + 1);
        best = match sign8(v) {
            1 => [next(0, 1), NEG_INF],
            -1 => [NEG_INF, next(1, 0)],
            _ => [next(0, 1), next(1, 0)],
        };
    }
    SignChangeCount { s_minus, s_plus: best[0].max(best[1]) as usize }
}

fn sign8(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum VerdictStatus {
    NotPositiveDefinite,
    NoSignChangeFound,
}

/// Certified witness: two points with opposite signs clearing the full
/// uncertainty stack.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Witness {
    pub y1: f64,
    pub y2: f64,
    pub v1: f64,
    pub v2: f64,
    pub tail1: f64,
    pub tail2: f64,
    pub quad_budget1: f64,
    pub quad_budget2: f64,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ScanParams {
    pub y_lo: f64,
    pub y_hi: f64,
    pub grid_count: usize,
    pub truncation: usize,
    pub refine_budget: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        // 64 points per decade over [1e-2, 10].
        Self { y_lo: 1e-2, y_hi: 10.0, grid_count: 192, truncation: 10_000, refine_budget: 20 }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PosDefVerdict {
    pub label: String,
    pub family: String,
    pub status: VerdictStatus,
    pub witness: Option<Witness>,
    pub assumptions: Vec<String>,
    pub params: ScanParams,
    pub notes: Vec<String>,
}

fn certify_pair(a: &PhiPoint, b: &PhiPoint) -> Option<Witness> {
    let (sa, sb) = (a.certified_sign()?, b.certified_sign()?);
    if sa == sb {
        return None;
    }
    Some(Witness {
        y1: a.y,
        y2: b.y,
        v1: a.value,
        v2: b.value,
        tail1: a.tail_bound,
        tail2: b.tail_bound,
        quad_budget1: a.quad_budget,
        quad_budget2: b.quad_budget,
    })
}

/// Geometric-grid scan of phi with local bisection refinement. The kernel
/// context must be prepared over [y_lo, cutoff] for interpolation speed;
/// unprepared contexts fall back to direct quadrature and stay correct.
pub fn phi_sign_scan(
    member: &FamilyMember,
    ctx: &KernelCtx,
    params: ScanParams,
) -> Result<PosDefVerdict, PosDefError> {
    let series = member.series(params.truncation, SeriesMode::Full)?;
    let mut notes = Vec::new();

    let grid: Vec<f64> = (0..params.grid_count)
        .map(|i| {
            params.y_lo
                * (params.y_hi / params.y_lo).powf(i as f64 / (params.grid_count - 1) as f64)
        })
        .collect();
    let points = {
        let res = crate::exec::map_slice(&grid, |&y| phi_partial(&series, ctx, y));
        let mut pts = Vec::with_capacity(res.len());
        for r in res {
            pts.push(r?);
        }
        pts
    };

    let verdict = |witness: Option<Witness>, notes: Vec<String>| PosDefVerdict {
        label: member.label.clone(),
        family: String::new(),
        status: if witness.is_some() {
            VerdictStatus::NotPositiveDefinite
        } else {
            VerdictStatus::NoSignChangeFound
        },
        witness,
        assumptions: member.assumptions.clone(),
        params,
        notes,
    };

    // Certified sign change anywhere along the certified subsequence.
    let certified: Vec<&PhiPoint> =
        points.iter().filter(|p| p.certified_sign().is_some()).collect();
    for w in certified.windows(2) {
        if let Some(wit) = certify_pair(w[0], w[1]) {
            return Ok(verdict(Some(wit), notes));
        }
    }

    // Candidate cells: raw sign differs between neighbours but certification
    // failed somewhere. Bisect within the refinement budget.
    let mut budget = params.refine_budget;
    for i in 0..points.len() - 1 {
        if budget == 0 {
            break;
        }
        let (a, b) = (points[i], points[i + 1]);
        if a.value.signum() == b.value.signum() || a.value == 0.0 || b.value == 0.0 {
            continue;
        }
        if let Some(w) = certify_pair(&a, &b) {
            return Ok(verdict(Some(w), notes));
        }
        let (mut lo, mut hi) = (a, b);
        while budget > 0 {
            budget -= 1;
            let mid_y = (lo.y * hi.y).sqrt();
            let mid = phi_partial(&series, ctx, mid_y)?;
            if mid.value.signum() == lo.value.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
            if let Some(w) = certify_pair(&lo, &hi) {
                return Ok(verdict(Some(w), notes));
            }
        }
    }

    if certified.is_empty() {
        notes.push("insufficient M: tail bound exceeds |phi| on the whole grid".into());
    }
    Ok(verdict(None, notes))
}

/// Re-evaluate a stored witness from scratch at a (typically doubled)
/// truncation: both signs must persist and stay certified.
pub fn verify_witness(
    member: &FamilyMember,
    ctx: &KernelCtx,
    witness: &Witness,
    truncation: usize,
) -> Result<bool, PosDefError> {
    let series = member.series(truncation, SeriesMode::Full)?;
    let p1 = phi_partial(&series, ctx, witness.y1)?;
    let p2 = phi_partial(&series, ctx, witness.y2)?;
    Ok(match (p1.certified_sign(), p2.certified_sign()) {
        (Some(s1), Some(s2)) => {
            s1 != s2 && s1 as f64 == witness.v1.signum() && s2 as f64 == witness.v2.signum()
        }
        _ => false,
    })
}

/// The Mellin-side function gamma(s) L^N(s) (gamma'/gamma + (L^N)'/L^N)(s)
/// sampled on a real grid inside (1/2, 1); its S^+ flags likely
/// non-positive-definite members for the fast path. Callers must re-certify
/// through phi_sign_scan before storing any verdict.
pub fn mellin_prefilter(
    member: &FamilyMember,
    n_smooth: u64,
    s_grid: &[f64],
) -> Result<SignChangeCount, PosDefError> {
    assert!(n_smooth >= 5);
    assert!(s_grid.iter().all(|&s| s > 0.5 && s < 1.0), "grid must lie in (1/2, 1)");
    let primes = crate::arith::sieve_primes(n_smooth);
    let factors: Vec<_> = primes
        .iter()
        .map(|&p| member.local_factor(p).ok_or(PosDefError::NoLocalFactor(p)))
        .collect::<Result<_, _>>()?;

    let mut values = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let gamma = gamma_eval(&member.gamma, Complex64::new(s, 0.0))?.re;
        let glog = gamma_log_deriv(&member.gamma, s);
        let mut l_n = 1.0f64;
        let mut dlog = 0.0f64;
        for f in &factors {
            let x = (f.p as f64).powf(-s);
            let poly = f.poly();
            let mut val = 0.0;
            let mut dval = 0.0;
            for (j, c) in poly.iter().enumerate() {
                val += c * x.powi(j as i32);
                if j >= 1 {
                    dval += c * j as f64 * x.powi(j as i32 - 1);
                }
            }
            if val.abs() < 1e-12 {
                return Err(PosDefError::LocalFactorVanishes { p: f.p, s });
            }
            l_n /= val;
            // d/ds log L_p = ln p * x * poly'(x) / poly(x)
            dlog += (f.p as f64).ln() * x * dval / val;
        }
        values.push(gamma * l_n * (glog + dlog));
    }
    Ok(sign_changes(&values))
}

/// The ladder point s_r = 1/2 + exp(-4^r) with the prime cuts
/// u(s) = exp((s-1/2)^{-1/2}) and v(s) = exp((s-1/2)^{-2}).
pub fn ladder_point(r: u32) -> (f64, f64, f64) {
    let s = 0.5 + (-(4f64.powi(r as i32))).exp();
    let eps = s - 0.5;
    let u = (1.0 / eps.sqrt()).exp();
    let ln_v = 1.0 / (eps * eps);
    (s, u, ln_v)
}

/// The three partial sums of sum_{p < N} lambda(p) log p / p^{s_r}, split at
/// u(s_r) and v(s_r). v is compared in log space (it overflows f64 for every
/// feasible r); only r with u(s_r) below the prime budget are computable.
pub fn prime_sum_split(
    member: &FamilyMember,
    r: u32,
    n_limit: u64,
) -> Result<(f64, f64, f64), PosDefError> {
    const PRIME_BUDGET: f64 = 1e8;
    let (s, u, ln_v) = ladder_point(r);
    if u > PRIME_BUDGET {
        let max_r = (1..=8).rev().find(|&rr| ladder_point(rr).1 <= PRIME_BUDGET).unwrap_or(1);
        return Err(PosDefError::LadderInfeasible { r, ln_u: u.ln(), max_r });
    }
    let mut sums = [0.0f64; 3];
    for p in crate::arith::sieve_primes(n_limit) {
        let f = member.local_factor(p).ok_or(PosDefError::NoLocalFactor(p))?;
        let lam = if f.degree() >= 1 { f.prime_power_coeffs(1)[1] } else { 0.0 };
        if lam == 0.0 {
            continue;
        }
        let term = lam * (p as f64).ln() / (p as f64).powf(s);
        let idx = if (p as f64) <= u {
            0
        } else if (p as f64).ln() < ln_v {
            1
        } else {
            2
        };
        sums[idx] += term;
    }
    Ok((sums[0], sums[1], sums[2]))
}

/// -(L^N)'/L^N(s) = sum_{p<N} sum_k Lambda(p^k) p^{-ks} truncated at k_max,
/// with a geometric bound on the k-tail.
#[derive(Debug, Clone, Copy)]
pub struct LogDeriv {
    pub value: f64,
    pub k_tail_bound: f64,
}

pub fn log_deriv_ln(
    member: &FamilyMember,
    s: f64,
    n_smooth: u64,
    k_max: usize,
) -> Result<LogDeriv, PosDefError> {
    assert!(s > 0.5);
    let mut value = 0.0;
    let mut tail = 0.0;
    for p in crate::arith::sieve_primes(n_smooth) {
        let f = member.local_factor(p).ok_or(PosDefError::NoLocalFactor(p))?;
        if f.satake.is_empty() {
            continue;
        }
        let logp = (p as f64).ln();
        let m = f.satake.len() as f64;
        for k in 1..=k_max {
            let alpha_sum: Complex64 = f.satake.iter().map(|a| a.powu(k as u32)).sum();
            value += logp * alpha_sum.re * (p as f64).powf(-(k as f64) * s);
        }
        // |Lambda(p^k)| <= m log p p^{k/2}: geometric tail over k > k_max.
        let q = (p as f64).powf(0.5 - s);
        tail += m * logp * q.powi(k_max as i32 + 1) / (1.0 - q);
    }
    Ok(LogDeriv { value, k_tail_bound: tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::dirichlet::dirichlet_member;
    use crate::families::{DirectCoefficients, EulerProduct, FamilyMember};
    use crate::kernel::GammaFactor;
    use crate::arith::LocalFactor;
    use std::sync::Arc;

    #[test]
    fn sign_change_definitions() {
        let c = sign_changes(&[1.0, -1.0, 1.0]);
        assert_eq!((c.s_minus, c.s_plus), (2, 2));
        let c = sign_changes(&[1.0, 0.0, 1.0]);
        assert_eq!((c.s_minus, c.s_plus), (0, 2));
        let c = sign_changes(&[0.0, 0.0]);
        assert_eq!((c.s_minus, c.s_plus), (0, 1));
        // One zero between differing signs: parity forces s_plus = 1.
        let c = sign_changes(&[1.0, 0.0, -1.0]);
        assert_eq!((c.s_minus, c.s_plus), (1, 1));
        let c = sign_changes(&[0.0, 1.0, 0.0]);
        assert_eq!((c.s_minus, c.s_plus), (0, 2));
        let c = sign_changes(&[]);
        assert_eq!((c.s_minus, c.s_plus), (0, 0));
        let c = sign_changes(&[1.0, 0.0, 0.0, 1.0]);
        // two zeros between equal signs: k = 2, k+1 = 3 odd but signs equal
        // -> parity fails, so k = 2 changes.
        assert_eq!((c.s_minus, c.s_plus), (0, 2));
        let c = sign_changes(&[1.0, 0.0, 0.0, -1.0]);
        // k+1 = 3 odd and signs differ: all three transitions flip.
        assert_eq!((c.s_minus, c.s_plus), (1, 3));
    }

    proptest::proptest! {
        #[test]
        fn sign_change_invariants(seq in proptest::collection::vec(-2i8..=2i8, 0..40)) {
            let vals: Vec<f64> = seq.iter().map(|&v| v as f64).collect();
            let c = sign_changes(&vals);
            let zeros = vals.iter().filter(|&&v| v == 0.0).count();
            proptest::prop_assert!(c.s_minus <= c.s_plus);
            proptest::prop_assert!(c.s_plus <= c.s_minus + 2 * zeros + 1);
            // Brute-force S^+ oracle for short sequences: try every zero
            // replacement.
            if vals.len() <= 12 && zeros <= 6 {
                let zero_pos: Vec<usize> = vals
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v == 0.0)
                    .map(|(i, _)| i)
                    .collect();
                let mut best = 0;
                for mask in 0..(1u32 << zero_pos.len()) {
                    let mut w = vals.clone();
                    for (j, &pos) in zero_pos.iter().enumerate() {
                        w[pos] = if mask >> j & 1 == 1 { 1.0 } else { -1.0 };
                    }
                    best = best.max(sign_changes(&w).s_minus);
                }
                proptest::prop_assert_eq!(c.s_plus, best, "vals {:?}", vals);
            }
        }
    }

    fn synthetic_delta_member() -> FamilyMember {
        // lambda(1) = 1, everything else 0: phi = W.
        let provider = Arc::new(DirectCoefficients::finite(|n| if n == 1 { 1.0 } else { 0.0 }));
        FamilyMember::new("delta", 1, GammaFactor::dirichlet(0), provider)
    }

    #[test]
    fn scan_positive_kernel_finds_nothing() {
        let m = synthetic_delta_member();
        let mut ctx = KernelCtx::new(m.gamma.clone()).unwrap();
        let cut = ctx.cutoff();
        ctx.prepare_range(1e-2, cut).unwrap();
        let v = phi_sign_scan(&m, &ctx, ScanParams::default()).unwrap();
        assert_eq!(v.status, VerdictStatus::NoSignChangeFound);
        assert!(v.witness.is_none());
    }

    #[test]
    fn scan_chi3_no_sign_change() {
        let m = dirichlet_member(-3);
        let mut ctx = KernelCtx::new(m.gamma.clone()).unwrap();
        let cut = ctx.cutoff();
        ctx.prepare_range(1e-2, cut).unwrap();
        let v = phi_sign_scan(&m, &ctx, ScanParams::default()).unwrap();
        assert_eq!(v.status, VerdictStatus::NoSignChangeFound);
    }

    #[test]
    fn scan_certifies_synthetic_sign_change() {
        // lambda(1) = 1, lambda(2) = -3 forces phi(y) = W(y) - 3 W(2y) to
        // change sign (negative for small y, positive for large).
        let provider = Arc::new(DirectCoefficients::finite(|n| match n {
            1 => 1.0,
            2 => -3.0,
            _ => 0.0,
        }));
        let m = FamilyMember::new("synthetic", 1, GammaFactor::dirichlet(0), provider);
        let mut ctx = KernelCtx::new(m.gamma.clone()).unwrap();
        let cut = ctx.cutoff();
        ctx.prepare_range(1e-2, cut).unwrap();
        let v = phi_sign_scan(&m, &ctx, ScanParams::default()).unwrap();
        assert_eq!(v.status, VerdictStatus::NotPositiveDefinite);
        let w = v.witness.unwrap();
        assert!(w.y1 < w.y2 && w.v1.signum() != w.v2.signum());
        // Witness re-verifies at doubled truncation.
        assert!(verify_witness(&m, &ctx, &w, 20_000).unwrap());
    }

    #[test]
    fn prefilter_reduces_to_gamma_prime_for_trivial_coefficients() {
        let provider = Arc::new(EulerProduct::new(|p| Some(LocalFactor::linear(p, 0.0))));
        let m = FamilyMember::new("zero", 1, GammaFactor::dirichlet(0), provider);
        let grid: Vec<f64> = (1..20).map(|i| 0.5 + 0.025 * i as f64).collect();
        let c = mellin_prefilter(&m, 50, &grid).unwrap();
        // gamma'(s) < 0 on (1/2, 1) for the even GL(1) factor: no changes.
        assert_eq!(c.s_plus, 0);
        // gamma'/gamma stays bounded on the grid.
        for &s in &grid {
            assert!(gamma_log_deriv(&m.gamma, s).is_finite());
        }
    }

    #[test]
    fn ladder_and_log_deriv() {
        let m = dirichlet_member(-3);
        // r = 1 feasible: u ~ 1620.
        let (i1, i2, i3) = prime_sum_split(&m, 1, 5000).unwrap();
        // The split partitions the unsplit sum exactly.
        let (s, _, _) = ladder_point(1);
        let direct: f64 = crate::arith::sieve_primes(5000)
            .into_iter()
            .map(|p| {
                let lam = crate::families::dirichlet::chi(-3, p) as f64;
                lam * (p as f64).ln() / (p as f64).powf(s)
            })
            .sum();
        assert!((i1 + i2 + i3 - direct).abs() < 1e-12);
        assert_eq!(i3, 0.0, "v(s_1) is astronomically large; I3 must be empty");
        // r = 2 infeasible.
        assert!(matches!(
            prime_sum_split(&m, 2, 100),
            Err(PosDefError::LadderInfeasible { .. })
        ));

        // log-derivative matches finite differences of log L^N.
        let n_smooth = 100u64;
        let s0 = 0.8f64;
        let ld = log_deriv_ln(&m, s0, n_smooth, 80).unwrap();
        let log_l = |s: f64| -> f64 {
            crate::arith::sieve_primes(n_smooth)
                .into_iter()
                .map(|p| {
                    let lam = crate::families::dirichlet::chi(-3, p) as f64;
                    -(1.0 - lam * (p as f64).powf(-s)).ln()
                })
                .sum()
        };
        let h = 1e-5;
        let fd = -(log_l(s0 + h) - log_l(s0 - h)) / (2.0 * h);
        assert!((ld.value - fd).abs() < 1e-8, "{} vs {}", ld.value, fd);
        assert!(ld.k_tail_bound < 1e-6);
    }

    #[test]
    fn monotone_certification_in_truncation() {
        let provider = Arc::new(DirectCoefficients::new(|n| match n {
            1 => 1.0,
            2 => -3.0,
            _ => 0.0,
        }));
        let m = FamilyMember::new("synthetic", 1, GammaFactor::dirichlet(0), provider);
        let mut ctx = KernelCtx::new(m.gamma.clone()).unwrap();
        let cut = ctx.cutoff();
        ctx.prepare_range(1e-2, cut).unwrap();
        let mut last_not_pd = false;
        for truncation in [200usize, 400, 1000, 4000] {
            let params = ScanParams { truncation, ..ScanParams::default() };
            let v = phi_sign_scan(&m, &ctx, params).unwrap();
            let not_pd = v.status == VerdictStatus::NotPositiveDefinite;
            assert!(!last_not_pd || not_pd, "M increase flipped a verdict");
            last_not_pd = not_pd;
        }
        assert!(last_not_pd);
    }
}
