//! Integer polynomials with exact root counting on intervals: primitive-PRS
//! gcd, Yun squarefree decomposition, signed Sturm chains, and dyadic-point
//! sign evaluation. Everything here is exact BigInt arithmetic; no floating
//! point touches a verdict.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Dense integer polynomial, coefficients ascending, trimmed (empty = 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IPoly {
    coeffs: Vec<BigInt>,
}

impl IPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn leading(&self) -> &BigInt {
        self.coeffs.last().expect("leading of zero polynomial")
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    pub fn neg(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    fn mul_scalar(&self, s: &BigInt) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn sub(&self, other: &IPoly) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![BigInt::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] -= c;
        }
        Self::new(out)
    }

    pub fn mul(&self, other: &IPoly) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Positive gcd of the coefficients (0 for the zero polynomial).
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.coeffs {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Divide out the content, keeping the sign of the leading coefficient.
    pub fn primitive(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let c = self.content();
        Self { coeffs: self.coeffs.iter().map(|v| v / &c).collect() }
    }

    /// Exact division: self = q * g with q integral; panics when not exact
    /// (callers only divide by known factors).
    pub fn div_exact(&self, g: &IPoly) -> Self {
        assert!(!g.is_zero());
        if self.is_zero() {
            return Self::zero();
        }
        let dg = g.degree();
        assert!(self.degree() >= dg);
        let mut rem = self.coeffs.clone();
        let mut q = vec![BigInt::zero(); self.degree() - dg + 1];
        for i in (dg..rem.len()).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let (d, r) = rem[i].div_rem(g.leading());
            assert!(r.is_zero(), "div_exact: leading coefficient does not divide");
            for (j, gc) in g.coeffs.iter().enumerate() {
                let v = &d * gc;
                rem[i - dg + j] -= v;
            }
            q[i - dg] = d;
        }
        assert!(rem.iter().all(|c| c.is_zero()), "div_exact: nonzero remainder");
        Self::new(q)
    }

    /// Pseudo-remainder scaled to be a positive multiple of the true
    /// remainder of self / g.
    fn signed_prem(&self, g: &IPoly) -> Self {
        let df = self.degree();
        let dg = g.degree();
        if self.is_zero() || df < dg {
            return self.clone();
        }
        let e = (df - dg + 1) as u32;
        let lc = g.leading().clone();
        let mut rem = self.mul_scalar(&lc.pow(e)).coeffs;
        for i in (dg..rem.len()).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let d = &rem[i] / &lc;
            for (j, gc) in g.coeffs.iter().enumerate() {
                let v = &d * gc;
                rem[i - dg + j] -= v;
            }
            rem[i] = BigInt::zero();
        }
        let mut r = Self::new(rem);
        if lc.is_negative() && e % 2 == 1 {
            r = r.neg();
        }
        r
    }

    /// Primitive-PRS gcd, returned primitive with positive leading coefficient.
    pub fn gcd(&self, other: &IPoly) -> Self {
        let mut a = self.primitive();
        let mut b = other.primitive();
        if a.is_zero() {
            return b;
        }
        while !b.is_zero() {
            let r = a.signed_prem(&b).primitive();
            a = b;
            b = r;
        }
        if !a.is_zero() && a.leading().is_negative() {
            a = a.neg();
        }
        a
    }

    /// Yun squarefree decomposition: self ~ prod_i a_i^i with the a_i
    /// primitive, squarefree and pairwise coprime; index 0 = multiplicity 1.
    pub fn squarefree_decomposition(&self) -> Vec<IPoly> {
        let f = self.primitive();
        if f.degree() == 0 {
            return Vec::new();
        }
        let fp = f.derivative();
        let g = f.gcd(&fp);
        if g.degree() == 0 {
            return vec![f];
        }
        let mut parts = Vec::new();
        let mut c = f.div_exact(&g);
        let mut d = fp.div_exact(&g).sub(&c.derivative());
        loop {
            let a = {
                let mut a = c.gcd(&d);
                if !a.is_zero() && a.leading().is_negative() {
                    a = a.neg();
                }
                a
            };
            parts.push(a.clone());
            c = c.div_exact(&a).primitive();
            if c.degree() == 0 {
                break;
            }
            d = d.div_exact(&a).sub(&c.derivative());
        }
        parts
    }

    /// Sign at 0: sign of the constant term.
    pub fn sign_at_zero(&self) -> i32 {
        match self.coeffs.first() {
            None => 0,
            Some(c) => sign_of(c),
        }
    }

    /// Sign at 1: sign of the coefficient sum.
    pub fn sign_at_one(&self) -> i32 {
        let s: BigInt = self.coeffs.iter().sum();
        sign_of(&s)
    }

    /// Sign at the dyadic rational k / 2^t, by exact evaluation of
    /// p(k/2^t) * 2^{t*deg}.
    pub fn sign_at_dyadic(&self, k: &BigInt, t: u32) -> i32 {
        if self.is_zero() {
            return 0;
        }
        let mut acc = self.coeffs.last().unwrap().clone();
        let mut shift = 0u32;
        for c in self.coeffs.iter().rev().skip(1) {
            shift += t;
            acc = acc * k + (c << shift);
        }
        sign_of(&acc)
    }
}

fn sign_of(c: &BigInt) -> i32 {
    if c.is_zero() {
        0
    } else if c.is_positive() {
        1
    } else {
        -1
    }
}

fn to_i128(b: &BigInt) -> i128 {
    let (sign, digits) = b.to_u64_digits();
    let mut v: i128 = 0;
    for d in digits.iter().rev() {
        v = (v << 64) | *d as i128;
    }
    if sign == num_bigint::Sign::Minus {
        -v
    } else {
        v
    }
}

/// Sturm chain p, p', -rem(...), ... with positive-multiple pseudo-remainders.
pub struct SturmChain {
    chain: Vec<IPoly>,
}

impl SturmChain {
    pub fn new(p: &IPoly) -> Self {
        let mut chain = vec![p.primitive()];
        let d = p.derivative().primitive();
        if !d.is_zero() {
            chain.push(d);
        }
        while chain.last().map(|q| q.degree() > 0).unwrap_or(false) {
            let n = chain.len();
            let r = chain[n - 2].signed_prem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(r.neg().primitive());
        }
        Self { chain }
    }

    fn variations<F: Fn(&IPoly) -> i32>(&self, sign: F) -> usize {
        let mut last = 0i32;
        let mut v = 0usize;
        for p in &self.chain {
            let s = sign(p);
            if s == 0 {
                continue;
            }
            if last != 0 && s != last {
                v += 1;
            }
            last = s;
        }
        v
    }

    pub fn variations_at_zero(&self) -> usize {
        self.variations(|p| p.sign_at_zero())
    }

    pub fn variations_at_one(&self) -> usize {
        self.variations(|p| p.sign_at_one())
    }

    pub fn variations_at_dyadic(&self, k: &BigInt, t: u32) -> usize {
        self.variations(|p| p.sign_at_dyadic(k, t))
    }
}

/// Number of distinct real roots of p in the open interval (0, 1).
/// Requires p(0) != 0 and p(1) != 0 (deflate x and x-1 factors first).
pub fn count_roots_open_01(p: &IPoly) -> usize {
    assert!(p.sign_at_zero() != 0 && p.sign_at_one() != 0);
    let chain = SturmChain::new(p);
    chain.variations_at_zero() - chain.variations_at_one()
}

/// Dyadic interval (lo/2^t, hi/2^t).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DyadicInterval {
    pub lo_num: i128,
    pub hi_num: i128,
    pub log2_den: u32,
    /// Number of distinct roots certified inside (1 when fully isolated).
    pub roots_inside: usize,
}

impl DyadicInterval {
    pub fn lo(&self) -> f64 {
        self.lo_num as f64 / (2f64).powi(self.log2_den as i32)
    }
    pub fn hi(&self) -> f64 {
        self.hi_num as f64 / (2f64).powi(self.log2_den as i32)
    }
}

/// Bisect (0,1) down to an interval of p-roots, isolating a single root when
/// the depth budget allows. p must be squarefree with p(0) != 0, p(1) != 0
/// and at least one root in (0,1).
pub fn isolate_root_01(p: &IPoly, max_depth: u32) -> DyadicInterval {
    let chain = SturmChain::new(p);
    let var_at = |k: &BigInt, t: u32| -> usize {
        if t == 0 {
            if k.is_zero() {
                chain.variations_at_zero()
            } else {
                chain.variations_at_one()
            }
        } else {
            chain.variations_at_dyadic(k, t)
        }
    };
    let mut lo = BigInt::zero();
    let mut hi = BigInt::one();
    let mut t = 0u32;
    let mut vlo = chain.variations_at_zero();
    let mut vhi = chain.variations_at_one();
    while vlo - vhi > 1 && t < max_depth {
        let lo2 = &lo << 1;
        let hi2 = &hi << 1;
        let mid = (&lo2 + &hi2) / 2;
        t += 1;
        if p.sign_at_dyadic(&mid, t) == 0 {
            // Exact dyadic root: shrink a bracket around it until the
            // endpoints are root-free and the root is isolated.
            for k in 1..40u32 {
                let l = (&mid << k) - BigInt::one();
                let h = (&mid << k) + BigInt::one();
                let tk = t + k;
                if p.sign_at_dyadic(&l, tk) == 0 || p.sign_at_dyadic(&h, tk) == 0 {
                    continue;
                }
                let inside = var_at(&l, tk) - var_at(&h, tk);
                if inside == 1 || k == 39 {
                    return DyadicInterval {
                        lo_num: to_i128(&l),
                        hi_num: to_i128(&h),
                        log2_den: tk,
                        roots_inside: inside,
                    };
                }
            }
        }
        let vmid = var_at(&mid, t);
        if vlo - vmid >= 1 {
            lo = lo2;
            hi = mid;
            vhi = vmid;
        } else {
            lo = mid;
            hi = hi2;
            vlo = vmid;
        }
    }
    DyadicInterval {
        lo_num: to_i128(&lo),
        hi_num: to_i128(&hi),
        log2_den: t,
        roots_inside: vlo - vhi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(coeffs: &[i64]) -> IPoly {
        IPoly::from_i64(coeffs)
    }

    #[test]
    fn gcd_and_division() {
        // (x-1)(x+2) and (x-1)(x+3) share x-1.
        let a = p(&[-2, 1, 1]);
        let b = p(&[-3, 2, 1]);
        let g = a.gcd(&b);
        assert_eq!(g, p(&[-1, 1]));
        assert_eq!(a.div_exact(&g), p(&[2, 1]));
    }

    #[test]
    fn squarefree_decomposition_recovers_multiplicities() {
        // x (x-1)^2 (x+2)^3
        let f = p(&[0, 1])
            .mul(&p(&[-1, 1]))
            .mul(&p(&[-1, 1]))
            .mul(&p(&[2, 1]))
            .mul(&p(&[2, 1]))
            .mul(&p(&[2, 1]));
        let parts = f.squarefree_decomposition();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0], p(&[0, 1]));
        assert_eq!(parts[1], p(&[-1, 1]));
        assert_eq!(parts[2], p(&[2, 1]));
    }

    #[test]
    fn sturm_counts_roots_in_01() {
        // (2x-1)(4x-3)(x-2): roots 1/2, 3/4 inside, 2 outside.
        let f = p(&[-1, 2]).mul(&p(&[-3, 4])).mul(&p(&[-2, 1]));
        assert_eq!(count_roots_open_01(&f), 2);
        // x^2 + 1: none.
        assert_eq!(count_roots_open_01(&p(&[1, 0, 1])), 0);
        // Clustered rational roots counted exactly.
        let g = p(&[-1, 3]).mul(&p(&[-1, 4])).mul(&p(&[-1, 5]));
        assert_eq!(count_roots_open_01(&g), 3);
    }

    #[test]
    fn isolation_brackets_a_single_root() {
        let f = p(&[-1, 2]).mul(&p(&[-3, 4])); // roots 1/2, 3/4
        let iv = isolate_root_01(&f, 40);
        assert_eq!(iv.roots_inside, 1);
        assert!(iv.lo() < iv.hi());
        let contains = |x: f64| iv.lo() < x && x < iv.hi();
        assert!(contains(0.5) ^ contains(0.75));
    }

    #[test]
    fn isolation_handles_irrational_roots() {
        // 2x^2 - 1: root 1/sqrt(2) in (0,1); also x^2-x-1 has none in (0,1).
        let f = p(&[-1, 0, 2]).mul(&p(&[-1, -1, 1]));
        let sf = f.squarefree_decomposition();
        assert_eq!(count_roots_open_01(&sf[0]), 1);
        let iv = isolate_root_01(&sf[0], 40);
        assert_eq!(iv.roots_inside, 1);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(iv.lo() < r && r < iv.hi());
    }

    #[test]
    fn dyadic_sign_evaluation() {
        // p(x) = 2x - 1: sign at 3/8 negative, at 5/8 positive, at 4/8 zero.
        let f = p(&[-1, 2]);
        assert_eq!(f.sign_at_dyadic(&BigInt::from(3), 3), -1);
        assert_eq!(f.sign_at_dyadic(&BigInt::from(5), 3), 1);
        assert_eq!(f.sign_at_dyadic(&BigInt::from(4), 3), 0);
    }
}
