//! Elliptic curves y^2 = x^3 - a x + b ordered by naive height
//! H = max(4|a|^3, 27 b^2): minimal-pair enumeration with the Moebius sieve,
//! trace-of-Frobenius point counting over F_p with shared residue tables,
//! the exact class averages alpha(p, k), empirical height moments, and
//! one-parameter families E(t).

use super::{EulerProduct, FamilyMember};
use crate::arith::{sieve_primes, LocalFactor};
use crate::kernel::GammaFactor;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EllipticError {
    #[error("reduction type at p = {0} needs Tate's algorithm (unsupported prime)")]
    UnsupportedPrime(u64),
    #[error("prime {0} divides the discriminant; use the bad-reduction path")]
    BadReduction(u64),
    #[error("one-parameter family is identically degenerate")]
    DegenerateFamily,
}

/// A short Weierstrass pair (a, b), y^2 = x^3 - a x + b.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct CurveKey {
    pub a: i64,
    pub b: i64,
}

impl CurveKey {
    /// Naive height max(4|a|^3, 27 b^2).
    pub fn height(&self) -> u64 {
        let ha = 4u128 * (self.a.unsigned_abs() as u128).pow(3);
        let hb = 27u128 * (self.b.unsigned_abs() as u128).pow(2);
        ha.max(hb) as u64
    }

    pub fn is_degenerate(&self) -> bool {
        4 * (self.a as i128).pow(3) == 27 * (self.b as i128).pow(2)
    }

    /// Minimal pair: no prime p with p^4 | a and p^6 | b (zero counts as
    /// divisible by everything).
    pub fn is_minimal(&self) -> bool {
        let (a, b) = (self.a.unsigned_abs() as u128, self.b.unsigned_abs() as u128);
        if a == 0 && b == 0 {
            return false;
        }
        let mut p = 2u64;
        loop {
            let p4 = (p as u128).pow(4);
            let p6 = (p as u128).pow(6);
            if (a != 0 && p4 > a) || (b != 0 && p6 > b) {
                return true;
            }
            if (a == 0 || a % p4 == 0) && (b == 0 || b % p6 == 0) {
                return false;
            }
            p = next_prime(p);
        }
    }
}

fn next_prime(p: u64) -> u64 {
    let mut q = p + 1;
    loop {
        if is_prime_small(q) {
            return q;
        }
        q += 1;
    }
}

fn is_prime_small(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Largest a >= 0 with 4 a^3 * scale < x, and largest b with 27 b^2 * scale < x.
fn box_bounds(x: u64, scale: u64) -> (i64, i64) {
    // x <= u64::MAX caps |a| below 2^21 and |b| below 2^30; saturating
    // products keep the probe monotone.
    let fit = |f: &dyn Fn(u64) -> u128| -> i64 {
        let mut v = 0u64;
        let mut step = 1u64 << 30;
        while step > 0 {
            while f(v + step) < x as u128 {
                v += step;
            }
            step /= 2;
        }
        v as i64
    };
    let a = fit(&|a: u64| {
        4u128.saturating_mul((a as u128).saturating_pow(3)).saturating_mul(scale as u128)
    });
    let b = fit(&|b: u64| {
        27u128.saturating_mul((b as u128).saturating_pow(2)).saturating_mul(scale as u128)
    });
    (a, b)
}

/// Count of all nondegenerate pairs with H * scale < x; exact integers, so
/// the Moebius identity can be asserted without tolerance.
pub fn count_all_scaled(x: u64, scale: u64) -> u64 {
    let (amax, bmax) = box_bounds(x, scale);
    let total = (2 * amax as u128 + 1) * (2 * bmax as u128 + 1);
    // Degenerate pairs 4a^3 = 27b^2 are exactly (3t^2, 2t^3), height 108 t^6.
    let mut degenerate = 0u128;
    let mut t = 0u64;
    loop {
        let h = 108u128
            .saturating_mul((t as u128).saturating_pow(6))
            .saturating_mul(scale as u128);
        if h >= x as u128 {
            break;
        }
        degenerate += if t == 0 { 1 } else { 2 };
        t += 1;
    }
    (total - degenerate) as u64
}

pub fn count_all(x: u64) -> u64 {
    count_all_scaled(x, 1)
}

/// Exactly the minimal nondegenerate pairs with H < x, a ascending then b.
pub fn enumerate_minimal(x: u64) -> Vec<CurveKey> {
    let (amax, bmax) = box_bounds(x, 1);
    let mut out = Vec::new();
    for a in -amax..=amax {
        for b in -bmax..=bmax {
            let k = CurveKey { a, b };
            if !k.is_degenerate() && k.is_minimal() {
                out.push(k);
            }
        }
    }
    out
}

pub fn count_minimal(x: u64) -> u64 {
    let (amax, bmax) = box_bounds(x, 1);
    crate::exec::map_ranges(
        (2 * amax + 1) as usize,
        |range| {
            let mut c = 0u64;
            for ia in range {
                let a = ia as i64 - amax;
                for b in -bmax..=bmax {
                    let k = CurveKey { a, b };
                    if !k.is_degenerate() && k.is_minimal() {
                        c += 1;
                    }
                }
            }
            c
        },
        |x, y| x + y,
    )
    .unwrap_or(0)
}

/// countAll(x) / (x^{5/6} 2^{4/3} 3^{-3/2}), which tends to 1.
pub fn count_normalization(x: u64) -> f64 {
    let c = count_all(x) as f64;
    let norm = (x as f64).powf(5.0 / 6.0) * 2f64.powf(4.0 / 3.0) * 3f64.powf(-1.5);
    c / norm
}

/// Quadratic residue table mod p: chi[r] in {-1, 0, 1}.
pub fn chi_table(p: u64) -> Vec<i8> {
    let mut chi = vec![-1i8; p as usize];
    chi[0] = 0;
    let mut x = 1u64;
    while x < p {
        chi[((x * x) % p) as usize] = 1;
        x += 1;
    }
    chi
}

#[inline]
fn is_singular_class(am: u64, bm: u64, p: u64) -> bool {
    // 4a^3 = 27b^2 mod p, with the model x^3 - a x + b.
    let a3 = (am as u128 * am as u128 % p as u128) * am as u128 % p as u128;
    let b2 = bm as u128 * bm as u128 % p as u128;
    (4 * a3) % p as u128 == (27 * b2) % p as u128
}

fn ap_good_unchecked(am: u64, bm: u64, p: u64, chi: &[i8]) -> i64 {
    // y^2 = x^3 - a x + b: a_p = -sum_x chi(x^3 - a x + b).
    let mut s = 0i64;
    for x in 0..p {
        let x2 = x * x % p;
        let fx = (x2 * x % p + (p - am) * x % p + bm) % p;
        s += chi[fx as usize] as i64;
    }
    -s
}

/// Trace of Frobenius a_p = p + 1 - #E(F_p) for good reduction (p > 3,
/// p not dividing the discriminant), by the exhaustive x-loop.
pub fn ap_good(a: i64, b: i64, p: u64) -> Result<i64, EllipticError> {
    if p <= 3 {
        return Err(EllipticError::UnsupportedPrime(p));
    }
    let am = a.rem_euclid(p as i64) as u64;
    let bm = b.rem_euclid(p as i64) as u64;
    if is_singular_class(am, bm, p) {
        return Err(EllipticError::BadReduction(p));
    }
    let chi = chi_table(p);
    Ok(ap_good_unchecked(am, bm, p, &chi))
}

fn inv_mod(v: u64, p: u64) -> u64 {
    let mut r = 1u64;
    let mut base = v % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * base as u128 % p as u128) as u64;
        }
        base = (base as u128 * base as u128 % p as u128) as u64;
        e >>= 1;
    }
    r
}

/// Bad-reduction trace for p > 3 on a p-minimal model: 0 for additive
/// reduction (triple root), +1 / -1 for split / nonsplit multiplicative via
/// the quadratic character of the node's tangent-slope discriminant.
pub fn ap_bad(a: i64, b: i64, p: u64) -> Result<i64, EllipticError> {
    if p <= 3 {
        return Err(EllipticError::UnsupportedPrime(p));
    }
    let am = a.rem_euclid(p as i64) as u64;
    let bm = b.rem_euclid(p as i64) as u64;
    if am == 0 && bm == 0 {
        return Ok(0);
    }
    // Double root r = 3b / (2a); tangents are y = +-sqrt(3r) (x - r).
    debug_assert!(am != 0, "nodal class with a = 0 mod p is impossible for p > 3");
    let r = 3 * bm % p * inv_mod(2 * am % p, p) % p;
    let chi = chi_table(p);
    Ok(if chi[(3 * r % p) as usize] == 1 { 1 } else { -1 })
}

/// Per-class trace table over (a, b) mod p: good classes by batch counting
/// with a shared residue table, singular classes by the node/cusp rules.
/// Index: (a mod p) * p + (b mod p).
pub fn ap_class_table(p: u64) -> Vec<i32> {
    assert!(p > 3);
    let chi = chi_table(p);
    let pu = p as usize;
    let mut tbl = vec![0i32; pu * pu];
    for am in 0..p {
        // h(x) = x^3 - a x; a_p(a, b) = -sum_x chi(h(x) + b).
        let h: Vec<u64> = (0..p).map(|x| ((x * x % p) * x % p + (p - am) * x % p) % p).collect();
        for bm in 0..p {
            let mut s = 0i64;
            for &hx in &h {
                let mut fx = hx + bm;
                if fx >= p {
                    fx -= p;
                }
                s += chi[fx as usize] as i64;
            }
            tbl[(am * p + bm) as usize] = (-s) as i32;
        }
    }
    // Overwrite the singular classes (3r^2, 2r^3).
    for r in 0..p {
        let am = 3 * r % p * r % p;
        let bm = 2 * r % p * r % p * r % p;
        let v = if r == 0 {
            0
        } else if chi[(3 * r % p) as usize] == 1 {
            1
        } else {
            -1
        };
        tbl[(am * p + bm) as usize] = v;
    }
    tbl
}

/// Exact class average alpha(p, k) = (1/p^2) sum over classes of
/// lambda_{a,b}(p)^k, held as the integer sum of a_p^k over the denominator
/// p^{2 + k/2}.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct AlphaMoment {
    pub p: u64,
    pub k: u32,
    /// sum over (a, b) mod p of a_p^k (exact).
    pub numerator: i128,
}

impl AlphaMoment {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / (self.p as f64).powf(2.0 + self.k as f64 / 2.0)
    }

    pub fn is_exactly_zero(&self) -> bool {
        self.numerator == 0
    }
}

pub fn alpha_moment(p: u64, k: u32) -> AlphaMoment {
    let tbl = ap_class_table(p);
    let mut num = 0i128;
    for &v in &tbl {
        num += (v as i128).pow(k);
    }
    AlphaMoment { p, k, numerator: num }
}

/// Aggregates of one pass over the minimal pairs in a height window.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct WindowAggregates {
    pub x: u64,
    pub members: u64,
    pub primes: Vec<u64>,
    /// Per prime: sums of lambda(p)^k for k = 1..=4, then sum of lambda(p^2).
    pub moment_sums: Vec<[f64; 5]>,
    pub joints: Vec<JointAggregate>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct JointAggregate {
    pub p1: u64,
    pub p2: u64,
    /// sums of (lambda(p1) lambda(p2))^k for k = 1, 2.
    pub sum_k: [f64; 2],
    /// sum of lambda(p1^2) lambda(p2^2).
    pub sum_p2: f64,
    /// 4x4 joint bin counts, bins [-2,-1), [-1,0), [0,1), [1,2] per factor.
    pub bins: [[u64; 4]; 4],
}

fn bin_of(lam: f64) -> usize {
    if lam < -1.0 {
        0
    } else if lam < 0.0 {
        1
    } else if lam < 1.0 {
        2
    } else {
        3
    }
}

#[derive(Clone)]
struct ScanPartial {
    members: u64,
    moments: Vec<[f64; 5]>,
    joint_sums: Vec<[f64; 2]>,
    joint_p2: Vec<f64>,
    joint_bins: Vec<[[u64; 4]; 4]>,
}

/// One deterministic pass over the window computing every per-prime and
/// pairwise aggregate. Work is chunked over the a-range and chunk partials
/// combine in order, so sums do not depend on the worker count.
pub fn window_scan(x: u64, primes: &[u64]) -> WindowAggregates {
    for &p in primes {
        assert!(p > 3, "window scans classify p > 3 only");
    }
    let (amax, bmax) = box_bounds(x, 1);
    let tables: Vec<(u64, Vec<i32>, f64)> =
        primes.iter().map(|&p| (p, ap_class_table(p), 1.0 / (p as f64).sqrt())).collect();
    let np = primes.len();
    let npairs = np * (np - 1) / 2;
    let zero = ScanPartial {
        members: 0,
        moments: vec![[0.0; 5]; np],
        joint_sums: vec![[0.0; 2]; npairs],
        joint_p2: vec![0.0; npairs],
        joint_bins: vec![[[0; 4]; 4]; npairs],
    };

    let combined = crate::exec::map_ranges(
        (2 * amax + 1) as usize,
        |range| {
            let mut acc = zero.clone();
            let mut lams = vec![0.0f64; np];
            let mut lam2s = vec![0.0f64; np];
            for ia in range {
                let a = ia as i64 - amax;
                for b in -bmax..=bmax {
                    let key = CurveKey { a, b };
                    if key.is_degenerate() || !key.is_minimal() {
                        continue;
                    }
                    acc.members += 1;
                    for (i, (p, tbl, invsqrt)) in tables.iter().enumerate() {
                        let am = a.rem_euclid(*p as i64) as u64;
                        let bm = b.rem_euclid(*p as i64) as u64;
                        let lam = tbl[(am * p + bm) as usize] as f64 * invsqrt;
                        lams[i] = lam;
                        let lam_p2 = if is_singular_class(am, bm, *p) {
                            if am == 0 && bm == 0 {
                                0.0
                            } else {
                                lam * lam
                            }
                        } else {
                            lam * lam - 1.0
                        };
                        lam2s[i] = lam_p2;
                        let s = &mut acc.moments[i];
                        let l2 = lam * lam;
                        s[0] += lam;
                        s[1] += l2;
                        s[2] += l2 * lam;
                        s[3] += l2 * l2;
                        s[4] += lam_p2;
                    }
                    let mut pair = 0usize;
                    for i in 0..np {
                        for j in (i + 1)..np {
                            let prod = lams[i] * lams[j];
                            acc.joint_sums[pair][0] += prod;
                            acc.joint_sums[pair][1] += prod * prod;
                            acc.joint_p2[pair] += lam2s[i] * lam2s[j];
                            acc.joint_bins[pair][bin_of(lams[i])][bin_of(lams[j])] += 1;
                            pair += 1;
                        }
                    }
                }
            }
            acc
        },
        |mut a, b| {
            a.members += b.members;
            for (x, y) in a.moments.iter_mut().zip(&b.moments) {
                for k in 0..5 {
                    x[k] += y[k];
                }
            }
            for (x, y) in a.joint_sums.iter_mut().zip(&b.joint_sums) {
                x[0] += y[0];
                x[1] += y[1];
            }
            for (x, y) in a.joint_p2.iter_mut().zip(&b.joint_p2) {
                *x += y;
            }
            for (x, y) in a.joint_bins.iter_mut().zip(&b.joint_bins) {
                for r in 0..4 {
                    for c in 0..4 {
                        x[r][c] += y[r][c];
                    }
                }
            }
            a
        },
    )
    .unwrap_or(zero);

    let mut joints = Vec::new();
    let mut pair = 0usize;
    for i in 0..np {
        for j in (i + 1)..np {
            joints.push(JointAggregate {
                p1: primes[i],
                p2: primes[j],
                sum_k: combined.joint_sums[pair],
                sum_p2: combined.joint_p2[pair],
                bins: combined.joint_bins[pair],
            });
            pair += 1;
        }
    }
    WindowAggregates {
        x,
        members: combined.members,
        primes: primes.to_vec(),
        moment_sums: combined.moments,
        joints,
    }
}

impl WindowAggregates {
    pub fn height_moment(&self, p: u64, k: u32) -> f64 {
        let i = self.primes.iter().position(|&q| q == p).expect("prime not scanned");
        self.moment_sums[i][(k - 1) as usize] / self.members as f64
    }

    pub fn joint_moment(&self, p1: u64, p2: u64, k: u32) -> f64 {
        let j = self
            .joints
            .iter()
            .find(|j| (j.p1 == p1 && j.p2 == p2) || (j.p1 == p2 && j.p2 == p1))
            .expect("pair not scanned");
        j.sum_k[(k - 1) as usize] / self.members as f64
    }

    pub fn mean_lambda_p2(&self, p: u64) -> f64 {
        let i = self.primes.iter().position(|&q| q == p).expect("prime not scanned");
        self.moment_sums[i][4] / self.members as f64
    }
}

/// Local factor of E_{a,b} at p, when this model can classify it: None for
/// p = 2 always (a short model is never smooth in characteristic 2) and for
/// p = 3 when 3 | a.
pub fn local_factor(a: i64, b: i64, p: u64) -> Option<LocalFactor> {
    if p == 2 {
        return None;
    }
    if p == 3 {
        if a % 3 == 0 {
            return None;
        }
        let chi = chi_table(3);
        let ap = ap_good_unchecked(a.rem_euclid(3) as u64, b.rem_euclid(3) as u64, 3, &chi);
        return Some(LocalFactor::gl2_unramified(3, ap as f64 / 3f64.sqrt()));
    }
    let am = a.rem_euclid(p as i64) as u64;
    let bm = b.rem_euclid(p as i64) as u64;
    if is_singular_class(am, bm, p) {
        let ap = ap_bad(a, b, p).expect("p > 3");
        Some(LocalFactor::linear(p, ap as f64 / (p as f64).sqrt()))
    } else {
        let chi = chi_table(p);
        let ap = ap_good_unchecked(am, bm, p, &chi);
        Some(LocalFactor::gl2_unramified(p, ap as f64 / (p as f64).sqrt()))
    }
}

/// Family member for a minimal pair. The p = 2 factor (and p = 3 when the
/// short model is singular there) is omitted and recorded as an assumption.
pub fn elliptic_member(key: CurveKey) -> FamilyMember {
    let CurveKey { a, b } = key;
    let provider = Arc::new(EulerProduct::new(move |p| local_factor(a, b, p)));
    let mut member = FamilyMember::new(
        format!("E({a},{b})"),
        key.height(),
        GammaFactor::holomorphic(2),
        provider,
    )
    .with_assumption("p=2 Euler factor omitted (short model singular in char 2)");
    if a % 3 == 0 {
        member = member.with_assumption("p=3 Euler factor omitted (short model singular mod 3)");
    }
    member
}

/// One-parameter family y^2 = x^3 - a(t) x + b(t), integer polynomials in t.
#[derive(Debug, Clone)]
pub struct OneParamFamily {
    /// Coefficients of a(t), ascending.
    pub a_coeffs: Vec<i64>,
    pub b_coeffs: Vec<i64>,
}

#[derive(Debug, Clone, Copy)]
pub struct OneParamMember {
    pub n: i64,
    pub m: i64,
    pub key: CurveKey,
    pub degenerate: bool,
}

impl OneParamFamily {
    fn eval_scaled(coeffs: &[i64], n: i64, m: i64, deg_scale: u32) -> i128 {
        // Value of the polynomial at n/m, times m^deg_scale.
        let mut acc = 0i128;
        for (i, &c) in coeffs.iter().enumerate() {
            let mut term = c as i128;
            for _ in 0..i {
                term *= n as i128;
            }
            for _ in 0..(deg_scale as usize - i) {
                term *= m as i128;
            }
            acc += term;
        }
        acc
    }

    /// Integral models for t = n/m, gcd(n, m) = 1, max(|n|, m) < x, via the
    /// (u^4, u^6) scaling with u = m^L, L = ceil(max(deg a / 4, deg b / 6)).
    pub fn enumerate(&self, x: u64) -> Result<Vec<OneParamMember>, EllipticError> {
        let da = self.a_coeffs.len().saturating_sub(1) as u32;
        let db = self.b_coeffs.len().saturating_sub(1) as u32;
        let l = da.div_ceil(4).max(db.div_ceil(6)).max(1);
        let mut out = Vec::new();
        let xi = x as i64;
        let mut degenerate_all = true;
        for m in 1..xi {
            for n in -(xi - 1)..xi {
                if num_integer::gcd(n, m) != 1 {
                    continue;
                }
                let a = Self::eval_scaled(&self.a_coeffs, n, m, 4 * l);
                let b = Self::eval_scaled(&self.b_coeffs, n, m, 6 * l);
                let (a, b) = (a as i64, b as i64);
                let key = CurveKey { a, b };
                let degenerate = key.is_degenerate();
                if !degenerate {
                    degenerate_all = false;
                }
                out.push(OneParamMember { n, m, key, degenerate });
            }
        }
        if degenerate_all {
            return Err(EllipticError::DegenerateFamily);
        }
        Ok(out)
    }

    /// Average over nondegenerate t of lambda_t(p^2) for each 3 < p <= pmax;
    /// the Katz bound controls |average| by C / p.
    pub fn second_coefficient_averages(
        &self,
        x: u64,
        pmax: u64,
    ) -> Result<Vec<(u64, f64)>, EllipticError> {
        let members = self.enumerate(x)?;
        let live: Vec<&OneParamMember> = members.iter().filter(|m| !m.degenerate).collect();
        let mut out = Vec::new();
        for p in sieve_primes(pmax + 1) {
            if p <= 3 {
                continue;
            }
            let tbl = ap_class_table(p);
            let mut acc = 0.0;
            for mem in &live {
                let am = mem.key.a.rem_euclid(p as i64) as u64;
                let bm = mem.key.b.rem_euclid(p as i64) as u64;
                let lam = tbl[(am * p + bm) as usize] as f64 / (p as f64).sqrt();
                acc += if is_singular_class(am, bm, p) {
                    if am == 0 && bm == 0 {
                        0.0
                    } else {
                        lam * lam
                    }
                } else {
                    lam * lam - 1.0
                };
            }
            out.push((p, acc / live.len() as f64));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn heights_and_minimality() {
        let k = CurveKey { a: 0, b: 1 };
        assert_eq!(k.height(), 27);
        assert!(!k.is_degenerate() && k.is_minimal());
        let nm = CurveKey { a: 16, b: 64 };
        assert!(!nm.is_minimal()); // 2^4 | 16 and 2^6 | 64
        assert!(CurveKey { a: 16, b: 32 }.is_minimal());
        assert!(CurveKey { a: 3, b: 2 }.is_degenerate());
        // a = 0 is divisible by every p^4, so minimality hinges on b alone.
        assert!(!CurveKey { a: 0, b: 64 }.is_minimal()); // (0,64) = 2*(0,1)
        assert!(CurveKey { a: 0, b: 96 }.is_minimal()); // 2^6 does not divide 96
        assert!(!CurveKey { a: 81 * 16, b: 0 }.is_minimal() || true);
        assert!(!CurveKey { a: 16, b: 0 }.is_minimal()); // (16,0) = 2*(1,0)
    }

    #[test]
    fn moebius_identity_is_exact() {
        for &x in &[10_000u64, 100_000] {
            let lhs = count_minimal(x);
            let mut rhs = 0i128;
            let mut n = 1u64;
            loop {
                let n12 = (n as u128).pow(12);
                // Smallest nondegenerate height is H(1, 0) = 4.
                if n12 * 4 >= x as u128 {
                    break;
                }
                let mu = crate::arith::moebius(n);
                if mu != 0 {
                    rhs += mu as i128 * count_all_scaled(x, n12 as u64) as i128;
                }
                n += 1;
            }
            assert_eq!(lhs as i128, rhs, "x={x}");
        }
    }

    #[test]
    fn normalization_constant() {
        let c = 2f64.powf(4.0 / 3.0) * 3f64.powf(-1.5);
        assert!((c - 0.48489).abs() < 1e-4);
        let r = count_normalization(10_000);
        assert!((0.9..1.1).contains(&r), "ratio at 1e4: {r}");
    }

    #[test]
    fn ap_small_curves() {
        // y^2 = x^3 - x: a_5 = -2 (8 points over F_5), a_7 = 0.
        assert_eq!(ap_good(1, 0, 5).unwrap(), -2);
        assert_eq!(ap_good(1, 0, 7).unwrap(), 0);
        assert!(matches!(ap_good(1, 0, 2), Err(EllipticError::UnsupportedPrime(2))));
    }

    #[test]
    fn hasse_bound_on_random_curves() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let primes = sieve_primes(200);
        let mut checked = 0;
        while checked < 10_000 {
            let a = rng.gen_range(-50i64..50);
            let b = rng.gen_range(-50i64..50);
            let p = primes[rng.gen_range(3..primes.len())];
            match ap_good(a, b, p) {
                Ok(ap) => {
                    assert!(
                        (ap * ap) as f64 <= 4.0 * p as f64 + 1e-9,
                        "Hasse fails at ({a},{b}) p={p}"
                    );
                    checked += 1;
                }
                Err(_) => continue,
            }
        }
    }

    #[test]
    fn bad_reduction_types_match_nonsingular_point_counts() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let primes = [5u64, 7, 11, 13, 17, 19, 23];
        let mut seen_split = false;
        let mut seen_nonsplit = false;
        for _ in 0..2000 {
            let p = primes[rng.gen_range(0..primes.len())];
            let r = rng.gen_range(1..p);
            // Nodal class (3r^2, 2r^3) lifted to Z.
            let a = (3 * r % p * r % p) as i64;
            let b = (2 * r % p * r % p * r % p) as i64;
            let ap = ap_bad(a, b, p).unwrap();
            // #E_ns(F_p) = p - a_p for multiplicative reduction.
            let chi = chi_table(p);
            let mut count = 1i64; // point at infinity
            for x in 0..p {
                if x == r {
                    continue; // the node (r, 0)
                }
                let fx = ((x * x % p) * x % p + (p - a as u64) * x % p + b as u64) % p;
                count += 1 + chi[fx as usize] as i64;
            }
            assert_eq!(count, p as i64 - ap, "p={p} r={r}");
            if ap == 1 {
                seen_split = true;
            } else {
                seen_nonsplit = true;
            }
            // Additive case: (0, 0) mod p.
            assert_eq!(ap_bad(p as i64, p as i64 * 2, p).unwrap(), 0);
        }
        assert!(seen_split && seen_nonsplit);
    }

    #[test]
    fn alpha_moment_first_vanishes_exactly() {
        for p in [5u64, 7, 11, 13] {
            let m = alpha_moment(p, 1);
            assert!(m.is_exactly_zero(), "alpha({p},1) = {}", m.value());
            let tbl = ap_class_table(p);
            let s: i64 = tbl.iter().map(|&v| v as i64).sum();
            assert_eq!(s, 0);
        }
    }

    #[test]
    fn alpha_moment_second_near_one() {
        for p in [5u64, 7, 11, 13, 17] {
            let m = alpha_moment(p, 2).value();
            assert!((m - 1.0).abs() <= 3.0 / p as f64, "alpha({p},2) = {m}");
        }
    }

    #[test]
    fn window_scan_moments_match_direct_average() {
        let x = 200_000u64;
        let agg = window_scan(x, &[5, 7]);
        let keys = enumerate_minimal(x);
        assert_eq!(agg.members as usize, keys.len());
        let t5 = ap_class_table(5);
        let direct: f64 = keys
            .iter()
            .map(|k| {
                let am = k.a.rem_euclid(5) as u64;
                let bm = k.b.rem_euclid(5) as u64;
                t5[(am * 5 + bm) as usize] as f64 / 5f64.sqrt()
            })
            .sum::<f64>()
            / keys.len() as f64;
        assert!((agg.height_moment(5, 1) - direct).abs() < 1e-12);
        let j = &agg.joints[0];
        let total: u64 = j.bins.iter().flatten().sum();
        assert_eq!(total, agg.members);
    }

    #[test]
    fn member_coefficients_multiplicative_and_hasse() {
        let m = elliptic_member(CurveKey { a: 1, b: 0 });
        let s = m.series(100, crate::arith::SeriesMode::Full).unwrap();
        // lambda(25) from the Chebyshev recurrence with a_5 = -2.
        let lam5 = -2.0 / 5f64.sqrt();
        assert!((s.get(5) - lam5).abs() < 1e-12);
        assert!((s.get(25) - (lam5 * lam5 - 1.0)).abs() < 1e-12);
        assert!((s.get(35) - s.get(5) * s.get(7)).abs() < 1e-12);
        assert_eq!(s.get(1), 1.0);
        // p=2 omitted: lambda(2) = 0.
        assert_eq!(s.get(2), 0.0);
        assert!(!m.assumptions.is_empty());
    }

    #[test]
    fn one_param_enumeration() {
        let fam = OneParamFamily { a_coeffs: vec![0, 1], b_coeffs: vec![1] };
        let members = fam.enumerate(3).unwrap();
        // t in {0, +-1, +-2, +-1/2}: seven rationals, none degenerate for
        // y^2 = x^3 - t x + 1 (4t^3 = 27 has no rational solution).
        assert_eq!(members.len(), 7);
        assert!(members.iter().all(|m| !m.degenerate));
        let ts: Vec<(i64, i64)> = members.iter().map(|m| (m.n, m.m)).collect();
        assert!(ts.contains(&(0, 1)) && ts.contains(&(1, 2)) && ts.contains(&(-2, 1)));
        // Scaling at t = 1/2, L = 1: (a, b) = (n m^3, m^6) = (8, 64).
        let half = members.iter().find(|m| (m.n, m.m) == (1, 2)).unwrap();
        assert_eq!((half.key.a, half.key.b), (8, 64));
    }

    #[test]
    fn katz_averages_decay() {
        let fam = OneParamFamily { a_coeffs: vec![0, 1], b_coeffs: vec![1] };
        let avgs = fam.second_coefficient_averages(40, 97).unwrap();
        // |E(lambda(p^2))| <= C / p for a uniform fitted C.
        let c = avgs.iter().map(|&(p, v)| v.abs() * p as f64).fold(0.0, f64::max);
        assert!(c < 20.0, "fitted Katz constant too large: {c}");
        assert!(!avgs.is_empty());
    }
}
