//! The m = 1 baseline family: real primitive Dirichlet characters chi_d for
//! fundamental discriminants d, their Fekete polynomials, and exact
//! sign-change detection on (0,1) via integer Sturm chains.

use super::{EulerProduct, FamilyMember};
use crate::arith::{kronecker, LocalFactor};
use crate::kernel::GammaFactor;
use crate::polyint::{count_roots_open_01, isolate_root_01, DyadicInterval, IPoly};
use std::sync::Arc;

/// Fundamental discriminant test: d = 1 is excluded; d ≡ 1 (mod 4) and
/// squarefree, or d = 4m with m ≡ 2, 3 (mod 4) squarefree.
pub fn is_fundamental(d: i64) -> bool {
    if d == 1 || d == 0 {
        return false;
    }
    let squarefree = |n: i64| -> bool {
        let n = n.unsigned_abs();
        crate::arith::factorize(n).into_iter().all(|(_, e)| e == 1)
    };
    if d.rem_euclid(4) == 1 {
        return squarefree(d);
    }
    if d % 4 == 0 {
        let m = d / 4;
        let r = m.rem_euclid(4);
        return (r == 2 || r == 3) && squarefree(m);
    }
    false
}

/// All fundamental discriminants with |d| < x, ordered by |d|, positive sign
/// first within equal |d|.
pub fn enumerate_fundamental(x: u64) -> Vec<i64> {
    assert!(x >= 3);
    let mut out = Vec::new();
    for a in 2..x {
        let a = a as i64;
        if is_fundamental(a) {
            out.push(a);
        }
        if is_fundamental(-a) {
            out.push(-a);
        }
    }
    out
}

/// chi_d(n) via the Kronecker symbol (d/n).
pub fn chi(d: i64, n: u64) -> i32 {
    if n == 0 {
        return 0;
    }
    kronecker(d, n as i64)
}

/// Parity kappa: 0 when chi_d(-1) = 1 (d > 0), 1 otherwise.
pub fn parity(d: i64) -> u32 {
    if d > 0 {
        0
    } else {
        1
    }
}

/// Fekete polynomial F_d(x) = sum_{n=1}^{|d|-1} chi_d(n) x^n, exact integers.
pub fn fekete_poly(d: i64) -> IPoly {
    let coeffs = fekete_coeffs(d);
    IPoly::from_i64(&coeffs)
}

/// Raw coefficient vector (index = exponent) for grid evaluation.
pub fn fekete_coeffs(d: i64) -> Vec<i64> {
    let q = d.unsigned_abs();
    let mut coeffs = vec![0i64; q as usize];
    for n in 1..q {
        coeffs[n as usize] = chi(d, n) as i64;
    }
    coeffs
}

/// Exact zero verdict for F_d on the open interval (0,1), with sign-change
/// semantics: roots of even multiplicity do not count as zeros but are
/// recorded.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FeketeVerdict {
    pub d: i64,
    /// Number of distinct roots where F_d changes sign (odd multiplicity).
    pub sign_change_roots: usize,
    /// Distinct interior roots of even multiplicity (tangential).
    pub tangential_roots: usize,
    /// Isolating interval for one sign-change root, when any exists.
    pub witness: Option<DyadicInterval>,
}

impl FeketeVerdict {
    pub fn has_zero(&self) -> bool {
        self.sign_change_roots > 0
    }
}

/// Exact verdict via Sturm chains: deflate the forced roots at 0 and 1, then
/// count odd- and even-multiplicity roots separately (Yun decomposition).
pub fn fekete_zero_in_01(d: i64) -> FeketeVerdict {
    assert!(is_fundamental(d), "fekete_zero_in_01 needs a fundamental discriminant");
    let f = fekete_poly(d);
    // Deflate x^v.
    let mut coeffs = f.coeffs().to_vec();
    let v = coeffs.iter().take_while(|c| num_traits::Zero::is_zero(*c)).count();
    coeffs.drain(..v);
    let mut g = IPoly::new(coeffs);
    // Deflate (x-1)^k; the endpoint root is excluded by the open interval.
    let x_minus_1 = IPoly::from_i64(&[-1, 1]);
    while !g.is_zero() && g.degree() >= 1 && g.sign_at_one() == 0 {
        g = g.div_exact(&x_minus_1);
    }
    if g.degree() == 0 {
        return FeketeVerdict { d, sign_change_roots: 0, tangential_roots: 0, witness: None };
    }

    let parts = g.squarefree_decomposition();
    let mut odd = IPoly::from_i64(&[1]);
    let mut even = IPoly::from_i64(&[1]);
    for (i, a) in parts.iter().enumerate() {
        if a.degree() == 0 {
            continue;
        }
        if (i + 1) % 2 == 1 {
            odd = odd.mul(a);
        } else {
            even = even.mul(a);
        }
    }
    let sign_change_roots = if odd.degree() > 0 { count_roots_open_01(&odd) } else { 0 };
    let tangential_roots = if even.degree() > 0 { count_roots_open_01(&even) } else { 0 };
    let witness =
        if sign_change_roots > 0 { Some(isolate_root_01(&odd, 60)) } else { None };
    FeketeVerdict { d, sign_change_roots, tangential_roots, witness }
}

/// One-sided grid oracle: true when a dense sign sample of F_d on (0,1)
/// already exhibits a sign change (then the exact verdict must agree).
pub fn fekete_grid_sign_change(d: i64, points: usize) -> bool {
    let coeffs = fekete_coeffs(d);
    let eval = |x: f64| -> f64 {
        let mut acc = 0.0;
        for &c in coeffs.iter().rev() {
            acc = acc * x + c as f64;
        }
        acc
    };
    let mut last = 0.0f64;
    for k in 1..=points {
        let x = k as f64 / (points as f64 + 1.0);
        let v = eval(x);
        if v != 0.0 {
            if last != 0.0 && v.signum() != last.signum() {
                return true;
            }
            last = v;
        }
    }
    false
}

/// Family member for chi_d: conductor |d|, GL(1) gamma factor with the
/// parity shift, coefficients chi_d(n), root number +1 (real primitive
/// characters have trivial sign by the Gauss-sum formula). chi is totally
/// multiplicative, so the member is the Euler product of linear factors.
pub fn dirichlet_member(d: i64) -> FamilyMember {
    assert!(is_fundamental(d));
    let q = d.unsigned_abs();
    let gamma = GammaFactor::dirichlet(parity(d));
    let provider =
        Arc::new(EulerProduct::new(move |p| Some(LocalFactor::linear(p, chi(d, p) as f64))));
    FamilyMember::new(format!("chi({d})"), q, gamma, provider)
        .with_conductor(q)
        .with_root_number(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::SeriesMode;

    #[test]
    fn fundamental_enumeration_examples() {
        let ds = enumerate_fundamental(10);
        assert_eq!(ds, vec![-3, -4, 5, -7, 8, -8]);
        assert_eq!(enumerate_fundamental(4), vec![-3]);
    }

    #[test]
    fn enumerated_characters_are_primitive() {
        // Primitivity of chi_d mod |d|: the character does not factor through
        // any proper divisor. Spot-check small moduli directly: for every
        // proper divisor q' of q there is n = 1 mod q' with chi(n) != 1.
        for &d in &[-3i64, -4, 5, -7, 8, -8, 12, -11, 13] {
            if !is_fundamental(d) {
                continue;
            }
            let q = d.unsigned_abs();
            for qp in 1..q {
                if q % qp != 0 || qp == q {
                    continue;
                }
                let mut factors_through = true;
                for n in 1..(3 * q) {
                    if n % qp == 1 % qp {
                        let c = chi(d, n);
                        if c != 0 && c != 1 {
                            factors_through = false;
                            break;
                        }
                    }
                }
                assert!(!factors_through, "chi_{d} factors through modulus {qp}");
            }
        }
    }

    #[test]
    fn fekete_small_cases() {
        let f3 = fekete_coeffs(-3);
        assert_eq!(f3, vec![0, 1, -1]);
        let f4 = fekete_coeffs(-4);
        assert_eq!(f4, vec![0, 1, 0, -1]);
        let f5 = fekete_coeffs(5);
        assert_eq!(f5, vec![0, 1, -1, -1, 1]);
    }

    #[test]
    fn fekete_no_zero_examples() {
        for &d in &[-3i64, -4, 5] {
            let v = fekete_zero_in_01(d);
            assert!(!v.has_zero(), "d={d} must be NoZero");
        }
    }

    #[test]
    fn fekete_symmetry_identity() {
        // F_d(x) = chi_d(-1) x^{|d|} F_d(1/x) as exact coefficient reversal.
        for &d in &[-3i64, -7, 5, 8, -8, 13, -20, 21] {
            if !is_fundamental(d) {
                continue;
            }
            let q = d.unsigned_abs() as usize;
            let c = fekete_coeffs(d);
            let s = if d > 0 { 1 } else { -1 };
            for n in 1..q {
                assert_eq!(c[n], s * c[q - n], "d={d}, n={n}");
            }
        }
    }

    #[test]
    fn sturm_agrees_with_grid_on_small_range() {
        for d in enumerate_fundamental(120) {
            let grid = fekete_grid_sign_change(d, 10_000);
            let exact = fekete_zero_in_01(d);
            if grid {
                assert!(exact.has_zero(), "grid found sign change but Sturm says NoZero, d={d}");
            }
        }
    }

    #[test]
    fn member_coefficients_are_character_values() {
        let m = dirichlet_member(-3);
        assert_eq!(m.conductor, Some(3));
        let s = m.series(12, SeriesMode::Full).unwrap();
        assert_eq!(s.get(2), -1.0); // 2 is a nonresidue mod 3
        assert_eq!(s.get(3), 0.0);
        assert_eq!(s.get(4), 1.0);
        for n in 1..=12 {
            assert!(s.get(n).abs() <= 1.0);
        }
        let m8 = dirichlet_member(8);
        assert_eq!(crate::families::dirichlet::parity(8), 0);
        assert_eq!(m8.gamma.shifts(), &[0.0]);
    }
}
