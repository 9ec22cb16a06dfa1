//! Exact integer and multiplicative number theory shared by every family:
//! prime sieves, the Kronecker symbol, divisor-type functions, and the
//! expansion of a product of local Euler factors into Dirichlet coefficients.
//!
//! All operations are pure; sieve output is immutable after construction.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArithError {
    #[error("no local factor supplied for prime {p}")]
    MissingPrime { p: u64 },
    #[error("local factor at p={p} violates |alpha| <= sqrt(p): |alpha|={modulus}")]
    SatakeBound { p: u64, modulus: f64 },
    #[error("local factor at p={p}: polynomial and Satake parameters disagree (delta={delta})")]
    PolySatakeMismatch { p: u64, delta: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Primes strictly below `limit`, ascending.
pub fn sieve_primes(limit: u64) -> Vec<u64> {
    if limit <= 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n];
    let mut primes = Vec::new();
    for i in 2..n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j < n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// Smallest-prime-factor table for 0..=n (spf[0] = spf[1] = 0).
pub fn spf_sieve(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

/// Factorise n into (prime, exponent) pairs by trial division.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Kronecker symbol (a/n), the standard extension of the Jacobi symbol to all
/// nonzero n. Requires n != 0.
pub fn kronecker(mut a: i64, mut n: i64) -> i32 {
    assert!(n != 0, "kronecker: n must be nonzero");
    let mut result = 1i32;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    if n == 0 {
        return 0;
    }
    // Factor of 2 in n: (a/2) = 0 for even a, chi_8(a) otherwise.
    while n % 2 == 0 {
        n /= 2;
        if a % 2 == 0 {
            return 0;
        }
        let r = a.rem_euclid(8);
        if r == 3 || r == 5 {
            result = -result;
        }
    }
    // Jacobi symbol core with odd n >= 1.
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n.rem_euclid(8);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.rem_euclid(4) == 3 && n.rem_euclid(4) == 3 {
            result = -result;
        }
        a = a.rem_euclid(n);
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Moebius function.
pub fn moebius(n: u64) -> i32 {
    assert!(n >= 1);
    let mut mu = 1i32;
    for (_, e) in factorize(n) {
        if e > 1 {
            return 0;
        }
        mu = -mu;
    }
    mu
}

/// k-th divisor function d_k(n): number of ordered k-tuples with product n.
/// Multiplicative with d_k(p^e) = C(e + k - 1, k - 1).
pub fn dk(n: u64, k: u32) -> u64 {
    assert!(n >= 1 && k >= 1);
    let mut out = 1u64;
    for (_, e) in factorize(n) {
        out *= binomial(e as u64 + k as u64 - 1, k as u64 - 1);
    }
    out
}

/// R(n): product of the primes that divide n exactly once (p || n).
pub fn radical_exact(n: u64) -> u64 {
    assert!(n >= 1);
    factorize(n)
        .into_iter()
        .filter(|&(_, e)| e == 1)
        .map(|(p, _)| p)
        .product()
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    let mut num = 1u64;
    for i in 0..k {
        num = num * (n - i) / (i + 1);
    }
    num
}

/// All n <= m whose prime factors are all < n_bound, ascending. Enumerated by
/// recursive exponent descent so the bound m can far exceed any sieve array.
pub fn smooth_numbers(n_bound: u64, m: u64) -> Vec<u64> {
    let primes = sieve_primes(n_bound);
    let mut out = Vec::new();
    fn descend(primes: &[u64], idx: usize, cur: u64, m: u64, out: &mut Vec<u64>) {
        if idx == primes.len() {
            out.push(cur);
            return;
        }
        let p = primes[idx];
        let mut v = cur;
        loop {
            descend(primes, idx + 1, v, m, out);
            if v > m / p {
                break;
            }
            v *= p;
        }
    }
    descend(&primes, 0, 1, m, &mut out);
    out.sort_unstable();
    out
}

/// Truncation regime of a coefficient series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SeriesMode {
    /// Coefficients of the genuine Dirichlet series; terms beyond the limit
    /// exist and must be covered by a tail bound.
    Full,
    /// Smooth truncation: lambda(n) = 0 whenever n has a prime factor >= N.
    Smooth(u64),
    /// The series is identically zero beyond the stored limit.
    Finite,
}

/// Dirichlet coefficients lambda(1..=limit).
#[derive(Debug, Clone)]
pub struct CoefficientSeries {
    values: Vec<f64>, // values[n-1] = lambda(n)
    pub mode: SeriesMode,
}

impl CoefficientSeries {
    pub fn from_values(values: Vec<f64>, mode: SeriesMode) -> Self {
        assert!(!values.is_empty() && (values[0] - 1.0).abs() < 1e-12, "lambda(1) must be 1");
        Self { values, mode }
    }

    pub fn limit(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn get(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn abs_sum(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }
}

/// One local Euler factor: L(s, pi_p)^{-1} = poly(p^{-s}) with inverse roots
/// given by the Satake parameters.
#[derive(Debug, Clone)]
pub struct LocalFactor {
    pub p: u64,
    pub satake: Vec<Complex64>,
    /// Denominator polynomial 1 + c_1 x + ... + c_d x^d in x = p^{-s}.
    /// Stored explicitly when the family provides exact coefficients.
    pub exact_poly: Option<Vec<f64>>,
}

impl LocalFactor {
    pub fn from_satake(p: u64, satake: Vec<Complex64>) -> Self {
        Self { p, satake, exact_poly: None }
    }

    /// Build from the denominator polynomial; Satake parameters are the
    /// inverse roots, which callers may supply when known.
    pub fn from_poly(p: u64, poly: Vec<f64>, satake: Vec<Complex64>) -> Self {
        Self { p, satake, exact_poly: Some(poly) }
    }

    /// Degree-2 unramified factor 1 - lambda x + x^2.
    pub fn gl2_unramified(p: u64, lambda: f64) -> Self {
        let half = lambda / 2.0;
        let disc = 1.0 - half * half;
        let (a1, a2) = if disc >= 0.0 {
            let s = disc.sqrt();
            (Complex64::new(half, s), Complex64::new(half, -s))
        } else {
            let s = (-disc).sqrt();
            (Complex64::new(half + s, 0.0), Complex64::new(half - s, 0.0))
        };
        Self { p, satake: vec![a1, a2], exact_poly: Some(vec![1.0, -lambda, 1.0]) }
    }

    /// Degree-1 factor 1 - lambda x.
    pub fn linear(p: u64, lambda: f64) -> Self {
        Self { p, satake: vec![Complex64::new(lambda, 0.0)], exact_poly: Some(vec![1.0, -lambda]) }
    }

    /// Trivial factor L_p = 1 (used when a family cannot classify p; the
    /// omission is recorded by the caller).
    pub fn omitted(p: u64) -> Self {
        Self { p, satake: Vec::new(), exact_poly: Some(vec![1.0]) }
    }

    /// Denominator polynomial, derived from the Satake parameters when no
    /// exact polynomial was supplied.
    pub fn poly(&self) -> Vec<f64> {
        if let Some(p) = &self.exact_poly {
            return p.clone();
        }
        poly_from_satake(&self.satake)
    }

    pub fn degree(&self) -> usize {
        self.poly().len() - 1
    }

    /// Check the coefficient bound |alpha_j| <= sqrt(p) and, when an exact
    /// polynomial is present, its consistency with the Satake parameters.
    pub fn validate(&self) -> Result<(), ArithError> {
        let bound = (self.p as f64).sqrt() * (1.0 + 1e-9);
        for a in &self.satake {
            if a.norm() > bound {
                return Err(ArithError::SatakeBound { p: self.p, modulus: a.norm() });
            }
        }
        if let Some(poly) = &self.exact_poly {
            if !self.satake.is_empty() {
                let derived = poly_from_satake(&self.satake);
                if derived.len() != poly.len() {
                    return Err(ArithError::PolySatakeMismatch { p: self.p, delta: f64::NAN });
                }
                let scale = poly.iter().map(|c| c.abs()).fold(1.0, f64::max);
                for (a, b) in derived.iter().zip(poly) {
                    if (a - b).abs() > 1e-10 * scale {
                        return Err(ArithError::PolySatakeMismatch {
                            p: self.p,
                            delta: (a - b).abs(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// lambda(p^k) for k = 0..=kmax by the linear recurrence from the
    /// denominator polynomial (no root extraction).
    pub fn prime_power_coeffs(&self, kmax: usize) -> Vec<f64> {
        let poly = self.poly();
        let d = poly.len() - 1;
        let mut lam = vec![0.0; kmax + 1];
        lam[0] = 1.0;
        for k in 1..=kmax {
            let mut acc = 0.0;
            for j in 1..=d.min(k) {
                acc += poly[j] * lam[k - j];
            }
            lam[k] = -acc;
        }
        lam
    }
}

fn poly_from_satake(satake: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for a in satake {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i] += v;
            next[i + 1] -= v * a;
        }
        c = next;
    }
    c.into_iter().map(|z| z.re).collect()
}

/// Expand a set of local factors into the coefficients of the formal
/// Dirichlet-series product, up to `limit`.
///
/// `Full` mode needs a factor for every prime <= limit; `Smooth(nb)` only for
/// primes < nb (all other coefficients are zero by definition).
pub fn expand_dirichlet(
    factors: &[LocalFactor],
    limit: usize,
    mode: SeriesMode,
) -> Result<CoefficientSeries, ArithError> {
    assert!(limit >= 1);
    let by_p: std::collections::BTreeMap<u64, &LocalFactor> =
        factors.iter().map(|f| (f.p, f)).collect();
    let spf = spf_sieve(limit);
    let mut values = vec![0.0f64; limit];
    values[0] = 1.0;

    // lambda(p^k) tables for every prime that can occur.
    let mut pk: std::collections::BTreeMap<u64, Vec<f64>> = std::collections::BTreeMap::new();
    for p in sieve_primes(limit as u64 + 1) {
        let needed = match mode {
            SeriesMode::Full | SeriesMode::Finite => true,
            SeriesMode::Smooth(nb) => p < nb,
        };
        if !needed {
            continue;
        }
        let f = by_p.get(&p).ok_or(ArithError::MissingPrime { p })?;
        let kmax = (limit as f64).ln() / (p as f64).ln();
        pk.insert(p, f.prime_power_coeffs(kmax as usize + 1));
    }

    for n in 2..=limit {
        let p = spf[n] as usize;
        let mut m = n;
        let mut e = 0;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        let lam_pe = match pk.get(&(p as u64)) {
            Some(t) => t[e],
            None => {
                // Prime excluded by smooth mode: coefficient vanishes.
                values[n - 1] = 0.0;
                continue;
            }
        };
        values[n - 1] = lam_pe * values[m - 1];
    }
    Ok(CoefficientSeries { values, mode })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sieve_small() {
        assert_eq!(sieve_primes(10), vec![2, 3, 5, 7]);
        assert_eq!(sieve_primes(3), vec![2]);
        assert_eq!(sieve_primes(30).len(), 10);
        assert_eq!(sieve_primes(2), Vec::<u64>::new());
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(-3, 7), 1);
        assert_eq!(kronecker(5, 5), 0);
        assert_eq!(kronecker(-4, 3), -1);
        // (a/2) cases
        assert_eq!(kronecker(7, 2), 1);
        assert_eq!(kronecker(3, 2), -1);
        assert_eq!(kronecker(6, 2), 0);
        // negative n
        assert_eq!(kronecker(-1, -1), -1);
        assert_eq!(kronecker(1, -1), 1);
    }

    #[test]
    fn kronecker_agrees_with_euler_criterion() {
        for p in sieve_primes(200).into_iter().filter(|&p| p > 2) {
            for a in -199i64..200 {
                let sym = kronecker(a, p as i64);
                let am = a.rem_euclid(p as i64) as u64;
                let expect = if am == 0 {
                    0
                } else {
                    let mut r = 1u64;
                    let mut base = am % p;
                    let mut e = (p - 1) / 2;
                    while e > 0 {
                        if e & 1 == 1 {
                            r = r * base % p;
                        }
                        base = base * base % p;
                        e >>= 1;
                    }
                    if r == 1 {
                        1
                    } else {
                        -1
                    }
                };
                assert_eq!(sym, expect, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn moebius_and_dk_and_radical() {
        assert_eq!(moebius(30), -1);
        assert_eq!(moebius(12), 0);
        assert_eq!(moebius(1), 1);
        assert_eq!(dk(6, 2), 4);
        assert_eq!(dk(4, 3), 6);
        assert_eq!(radical_exact(12), 3);
        assert_eq!(radical_exact(1), 1);
        // d_k(p) = k, d_k multiplicative
        for &p in &[2u64, 3, 5, 13] {
            for k in 1..=6 {
                assert_eq!(dk(p, k), k as u64);
            }
        }
        for k in 1..=5 {
            assert_eq!(dk(12, k) * dk(35, k), dk(12 * 35, k));
        }
    }

    #[test]
    fn smooth_numbers_examples() {
        assert_eq!(smooth_numbers(3, 20), vec![1, 2, 4, 8, 16]);
        assert_eq!(smooth_numbers(2, 100), vec![1]);
        // Large bound stays cheap: 5-smooth numbers up to 10^12.
        let s = smooth_numbers(6, 1_000_000_000_000);
        assert!(s.len() > 1000 && s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn expand_geometric_factor() {
        // Single factor (1-x)^{-1} at p=2: lambda(2^k) = 1 up to the limit.
        let f = LocalFactor::linear(2, 1.0);
        let s = expand_dirichlet(&[f], 8, SeriesMode::Smooth(3)).unwrap();
        assert_eq!(s.get(1), 1.0);
        assert_eq!(s.get(2), 1.0);
        assert_eq!(s.get(4), 1.0);
        assert_eq!(s.get(8), 1.0);
        assert_eq!(s.get(6), 0.0); // 3 not smooth
    }

    #[test]
    fn expand_chebyshev_identity() {
        // Degree-2 factor with alpha = e^{+-i theta}: lambda(p^k) = sin((k+1)theta)/sin(theta).
        let theta = 0.9f64;
        let f = LocalFactor::gl2_unramified(5, 2.0 * theta.cos());
        let lam = f.prime_power_coeffs(8);
        for k in 0..=8 {
            let expect = ((k as f64 + 1.0) * theta).sin() / theta.sin();
            assert!((lam[k] - expect).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn expand_ramified_power() {
        let f = LocalFactor::linear(7, -0.25);
        let lam = f.prime_power_coeffs(5);
        for k in 0..=5 {
            assert!((lam[k] - (-0.25f64).powi(k as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn expand_matches_bruteforce_series_product() {
        // Oracle: naive power-series multiplication of all local factors.
        let limit = 10_000usize;
        let primes = sieve_primes(limit as u64 + 1);
        let factors: Vec<LocalFactor> = primes
            .iter()
            .map(|&p| {
                let lambda = 2.0 * ((p as f64).sin());
                LocalFactor::gl2_unramified(p, lambda.clamp(-1.9, 1.9))
            })
            .collect();
        let fast = expand_dirichlet(&factors, limit, SeriesMode::Full).unwrap();

        let mut brute = vec![0.0f64; limit + 1];
        brute[1] = 1.0;
        for f in &factors {
            let p = f.p as usize;
            if p > limit {
                break;
            }
            let kmax = (limit as f64).ln() / (p as f64).ln();
            let pp = f.prime_power_coeffs(kmax as usize + 1);
            let mut next = vec![0.0f64; limit + 1];
            for n in 1..=limit {
                if brute[n] == 0.0 {
                    continue;
                }
                let mut pe = 1usize;
                let mut k = 0usize;
                while n * pe <= limit {
                    next[n * pe] += brute[n] * pp[k];
                    k += 1;
                    match pe.checked_mul(p) {
                        Some(v) => pe = v,
                        None => break,
                    }
                }
            }
            brute = next;
        }
        for n in 1..=limit {
            assert!(
                (fast.get(n) - brute[n]).abs() < 1e-9 * (1.0 + brute[n].abs()),
                "n={n}: {} vs {}",
                fast.get(n),
                brute[n]
            );
        }
    }

    #[test]
    fn expand_missing_prime_is_reported() {
        let f = LocalFactor::linear(2, 1.0);
        match expand_dirichlet(&[f], 10, SeriesMode::Full) {
            Err(ArithError::MissingPrime { p: 3 }) => {}
            other => panic!("expected MissingPrime(3), got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn multiplicativity_of_expansion(seed in 0u64..5000) {
            let limit = 2000usize;
            let primes = sieve_primes(limit as u64 + 1);
            let factors: Vec<LocalFactor> = primes
                .iter()
                .map(|&p| {
                    let lambda = 2.0 * (((p.wrapping_mul(seed + 1)) as f64).sin());
                    LocalFactor::gl2_unramified(p, lambda.clamp(-1.99, 1.99))
                })
                .collect();
            let s = expand_dirichlet(&factors, limit, SeriesMode::Full).unwrap();
            // coprime pairs a, b with ab <= limit
            let pairs = [(2usize, 9usize), (4, 25), (8, 27), (3, 32), (5, 49), (7, 11), (13, 16)];
            for (a, b) in pairs {
                let lhs = s.get(a * b);
                let rhs = s.get(a) * s.get(b);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            }
        }

        #[test]
        fn smooth_numbers_are_smooth_and_complete(nb in 2u64..12, m in 1u64..3000) {
            let s = smooth_numbers(nb, m);
            for &v in &s {
                prop_assert!(v <= m);
                prop_assert!(factorize(v).into_iter().all(|(p, _)| p < nb));
            }
            // completeness against direct filter
            let direct: Vec<u64> = (1..=m)
                .filter(|&v| factorize(v).into_iter().all(|(p, _)| p < nb))
                .collect();
            prop_assert_eq!(s, direct);
        }
    }
}
