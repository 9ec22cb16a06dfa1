//! Class groups of Q(sqrt(-D)) for squarefree D = 3 (mod 4), D > 3, realised
//! as reduced binary quadratic forms with Gauss composition; class-group
//! characters, dihedral coefficients lambda_psi(m) by representation
//! counting, trace and density statistics, and the class-number averages
//! A_{b,a}.
//!
//! Everything is exact integer arithmetic until a character value turns a
//! root of unity into a float.

use super::{EulerProduct, FamilyMember};
use crate::arith::{factorize, kronecker, sieve_primes, LocalFactor};
use crate::kernel::GammaFactor;
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DihedralError {
    #[error("D = {0} is not squarefree, > 3 and = 3 (mod 4)")]
    BadDiscriminant(u64),
    #[error("degenerate D = {0}: every class-group character is real")]
    Degenerate(u64),
    #[error("A_constant only implemented for (b, a) = (4, 3) and (4p, a): got ({b}, {a})")]
    UnsupportedModulus { b: u64, a: u64 },
}

/// A primitive positive-definite binary quadratic form (A, B, C) of
/// discriminant B^2 - 4AC = -D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        b.abs() <= a && a <= c && (b >= 0 || (b.abs() < a && a < c))
    }

    fn normalize(&mut self) {
        // Bring b into (-a, a].
        if -self.a < self.b && self.b <= self.a {
            return;
        }
        let r = (self.a - self.b).div_euclid(2 * self.a);
        let ra = r * self.a;
        self.c += (self.b + ra) * r;
        self.b += 2 * ra;
    }

    pub fn reduce(mut self) -> Self {
        self.normalize();
        while self.a > self.c || (self.a == self.c && self.b < 0) {
            let s = (self.c + self.b).div_euclid(2 * self.c);
            let cs = self.c * s;
            let old_c = self.c;
            self.c = self.a - self.b * s + cs * s;
            self.b = -self.b + 2 * cs;
            self.a = old_c;
        }
        if self.a == self.b.abs() && self.b < 0 {
            self.b = -self.b;
        }
        self
    }

    pub fn inverse(&self) -> Self {
        QuadForm { a: self.a, b: -self.b, c: self.c }.reduce()
    }

    /// Value at (x, y).
    pub fn eval(&self, x: i64, y: i64) -> i64 {
        self.a * x * x + self.b * x * y + self.c * y * y
    }

    /// Essentially distinct representations of m: solutions of F(x,y) = m
    /// with (x, y) and (-x, -y) identified.
    pub fn repr_count(&self, m: u64) -> u64 {
        let m = m as i64;
        let d = -self.disc();
        let mut count = 0u64;
        // y = 0: a x^2 = m with x > 0.
        if m % self.a == 0 {
            let q = m / self.a;
            let r = (q as f64).sqrt().round() as i64;
            for x in (r - 1).max(1)..=(r + 1) {
                if self.a * x * x == m {
                    count += 1;
                }
            }
        }
        // y > 0: 4a*F(x,y) = (2ax + by)^2 + D y^2.
        let ymax = ((4 * self.a * m) as f64 / d as f64).sqrt().floor() as i64 + 1;
        for y in 1..=ymax {
            let rhs = 4 * self.a * m - d * y * y;
            if rhs < 0 {
                continue;
            }
            let s = (rhs as f64).sqrt().round() as i64;
            for t in [-s - 1, -s, -s + 1, s - 1, s, s + 1] {
                if t * t != rhs {
                    continue;
                }
                // 2ax = t - by
                let num = t - self.b * y;
                if num.rem_euclid(2 * self.a) == 0 {
                    let x = num / (2 * self.a);
                    if self.eval(x, y) == m {
                        count += 1;
                    }
                }
                if t == 0 {
                    break; // avoid double-counting t = -t
                }
            }
        }
        count
    }
}

fn extgcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        let s = if a < 0 { -1 } else { 1 };
        return (a * s, s, 0);
    }
    let (g, x, y) = extgcd(b, a.rem_euclid(b));
    (g, y, x - a.div_euclid(b) * y)
}

/// Gauss composition via Dirichlet's construction: move the second form to a
/// representative whose leading coefficient is coprime to 2 a1, CRT the
/// middle coefficients, reduce.
pub fn compose(f1: &QuadForm, f2: &QuadForm) -> QuadForm {
    debug_assert_eq!(f1.disc(), f2.disc());
    let disc = f1.disc() as i128;
    // Find primitive (x, y) with f2(x, y) coprime to 2 a1.
    let target = 2 * f1.a;
    let mut found = None;
    'outer: for radius in 1..64i64 {
        for x in -radius..=radius {
            for y in -radius..=radius {
                if x.abs().max(y.abs()) != radius && !(radius == 1 && (x, y) == (1, 0)) {
                    continue;
                }
                if num_integer::gcd(x, y) != 1 && !(x == 0 && y == 0) {
                    continue;
                }
                if x == 0 && y == 0 {
                    continue;
                }
                let v = f2.eval(x, y);
                if v > 0 && num_integer::gcd(v, target) == 1 {
                    found = Some((x, y, v));
                    break 'outer;
                }
            }
        }
    }
    let (x, y, v) = found.expect("no coprime representative found (non-primitive form?)");
    // Complete (x, y) to an SL2(Z) matrix [[x, z], [y, w]].
    let (_, w, zneg) = extgcd(x as i128, y as i128);
    let (z, w) = (-zneg, w);
    // Transformed middle coefficient of f2 under (X, Y) -> (xX + zY, yX + wY).
    let (a2, b2, c2) = (f2.a as i128, f2.b as i128, f2.c as i128);
    let b2p = 2 * (a2 * x as i128 * z + c2 * y as i128 * w) + b2 * (x as i128 * w + y as i128 * z);
    let a1 = f1.a as i128;
    let b1 = f1.b as i128;
    let vv = v as i128;
    // CRT: B = b1 (mod 2 a1), B = b2' (mod 2 v); both odd, gcd(a1, v) = 1.
    let (g, u, _) = extgcd(2 * a1, 2 * vv);
    debug_assert_eq!(g, 2);
    let diff = b2p - b1;
    debug_assert_eq!(diff.rem_euclid(2), 0);
    let modulus = 2 * a1 * vv;
    let mut b = b1 + 2 * a1 * ((u * (diff / 2)).rem_euclid(2 * vv));
    b = b.rem_euclid(modulus);
    debug_assert_eq!((b * b - disc).rem_euclid(2 * modulus), 0);
    let c = (b * b - disc) / (2 * modulus);
    let out = QuadForm { a: (a1 * vv) as i64, b: b as i64, c: c as i64 };
    debug_assert_eq!(out.disc() as i128, disc);
    out.reduce()
}

/// Square root of a mod odd prime p (Tonelli-Shanks); None for non-residues.
pub fn sqrt_mod(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    let pow = |mut b: u64, mut e: u64| -> u64 {
        let mut r = 1u64;
        b %= p;
        while e > 0 {
            if e & 1 == 1 {
                r = (r as u128 * b as u128 % p as u128) as u64;
            }
            b = (b as u128 * b as u128 % p as u128) as u64;
            e >>= 1;
        }
        r
    };
    if pow(a, (p - 1) / 2) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow(a, (p + 1) / 4));
    }
    // Tonelli-Shanks
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow(z, (p - 1) / 2) == 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow(z, q);
    let mut t = pow(a, q);
    let mut r = pow(a, (q + 1) / 2);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = (tt as u128 * tt as u128 % p as u128) as u64;
            i += 1;
        }
        let mut b = c;
        for _ in 0..(m - i - 1) {
            b = (b as u128 * b as u128 % p as u128) as u64;
        }
        m = i;
        c = (b as u128 * b as u128 % p as u128) as u64;
        t = (t as u128 * c as u128 % p as u128) as u64;
        r = (r as u128 * b as u128 % p as u128) as u64;
    }
    Some(r)
}

fn check_d(d: u64) -> Result<(), DihedralError> {
    if d <= 3 || d % 4 != 3 || factorize(d).into_iter().any(|(_, e)| e > 1) {
        return Err(DihedralError::BadDiscriminant(d));
    }
    Ok(())
}

/// All reduced forms of discriminant -D by bounded enumeration.
pub fn reduced_forms(d: u64) -> Result<Vec<QuadForm>, DihedralError> {
    check_d(d)?;
    let di = d as i64;
    let mut out = Vec::new();
    let amax = ((d as f64) / 3.0).sqrt() as i64 + 1;
    for a in 1..=amax {
        let mut b = 1i64; // D = 3 mod 4 forces b odd
        while b <= a {
            let num = b * b + di;
            if num % (4 * a) == 0 {
                let c = num / (4 * a);
                if c >= a {
                    let f = QuadForm { a, b, c };
                    debug_assert_eq!(f.disc(), -di);
                    if num_integer::gcd(num_integer::gcd(a, b), c) == 1 {
                        out.push(f);
                        if b < a && a < c {
                            out.push(QuadForm { a, b: -b, c });
                        }
                    }
                }
            }
            b += 2;
        }
    }
    out.sort();
    Ok(out)
}

/// The class group of Q(sqrt(-D)) on its reduced forms.
pub struct ClassGroup {
    pub d: u64,
    pub forms: Vec<QuadForm>,
    index: HashMap<QuadForm, usize>,
    pub omega: u32,
}

impl ClassGroup {
    pub fn new(d: u64) -> Result<Self, DihedralError> {
        let forms = reduced_forms(d)?;
        let index = forms.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        let omega = factorize(d).len() as u32;
        Ok(Self { d, forms, index, omega })
    }

    pub fn h(&self) -> usize {
        self.forms.len()
    }

    pub fn identity(&self) -> usize {
        let id = QuadForm { a: 1, b: 1, c: ((self.d as i64) + 1) / 4 };
        self.index[&id]
    }

    pub fn idx(&self, f: &QuadForm) -> usize {
        self.index[&f.reduce()]
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.index[&compose(&self.forms[i], &self.forms[j])]
    }

    pub fn inv(&self, i: usize) -> usize {
        self.index[&self.forms[i].inverse()]
    }

    pub fn pow(&self, i: usize, mut e: u64) -> usize {
        let mut base = i;
        let mut acc = self.identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Order of an element via the factorisation of h.
    pub fn order(&self, i: usize) -> u64 {
        let h = self.h() as u64;
        let mut ord = h;
        for (p, _) in factorize(h) {
            while ord % p == 0 && self.pow(i, ord / p) == self.identity() {
                ord /= p;
            }
        }
        ord
    }

    /// Index set {f^2}: the principal genus when D is fundamental.
    pub fn squares(&self) -> Vec<bool> {
        let mut sq = vec![false; self.h()];
        for i in 0..self.h() {
            sq[self.mul(i, i)] = true;
        }
        sq
    }

    /// Number of real (order <= 2) characters = [G : G^2].
    pub fn real_character_count(&self) -> usize {
        let sq_count = self.squares().iter().filter(|&&b| b).count();
        self.h() / sq_count
    }

    /// Class of the prime ideal above p: None when p is inert.
    pub fn prime_class(&self, p: u64) -> Option<usize> {
        let sym = kronecker(-(self.d as i64), p as i64);
        if sym == -1 {
            return None;
        }
        if p == 2 {
            // -D = 1 mod 8 (split): b odd with b^2 = -D mod 8.
            let mut b = 1i64;
            while (b * b + self.d as i64) % 32 != 0 && b < 16 {
                b += 2;
            }
            let b = (1..16)
                .step_by(2)
                .find(|&b| (b * b + self.d as i64) % 8 == 0)
                .unwrap_or(b);
            let c = (b * b + self.d as i64) / 8;
            return Some(self.idx(&QuadForm { a: 2, b, c }));
        }
        let r = sqrt_mod((-(self.d as i64)).rem_euclid(p as i64) as u64, p)?;
        let b = if r % 2 == 1 { r as i64 } else { (p - r) as i64 };
        let b = if r == 0 { p as i64 } else { b };
        let c = (b * b + self.d as i64) / (4 * p as i64);
        Some(self.idx(&QuadForm { a: p as i64, b, c }))
    }
}

/// Cyclic decomposition with generators and a full discrete-log table.
pub struct ClassStructure {
    pub orders: Vec<u64>,
    pub generators: Vec<usize>,
    /// dlog[element][j] = exponent of generator j.
    pub dlog: Vec<Vec<u64>>,
}

/// Decompose the class group as a direct sum of cyclic subgroups by the
/// quotient-lifting construction (exponent-maximal first generator).
pub fn class_group_structure(cg: &ClassGroup) -> ClassStructure {
    let n = cg.h();
    let mul = |a: usize, b: usize| cg.mul(a, b);
    let (gens, orders, dlog) = decompose_abelian(n, cg.identity(), &mul, &(0..n).collect::<Vec<_>>());
    ClassStructure { orders, generators: gens, dlog }
}

fn decompose_abelian(
    n: usize,
    id: usize,
    mul: &dyn Fn(usize, usize) -> usize,
    elements: &[usize],
) -> (Vec<usize>, Vec<u64>, Vec<Vec<u64>>) {
    // dlog indexed by position in `elements`.
    let pos: HashMap<usize, usize> = elements.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    if n == 1 {
        return (Vec::new(), Vec::new(), vec![Vec::new()]);
    }
    // Orders of all elements.
    let order_of = |x: usize| -> u64 {
        let mut acc = x;
        let mut k = 1u64;
        while acc != id {
            acc = mul(acc, x);
            k += 1;
        }
        k
    };
    let mut best = (id, 1u64);
    for &x in elements {
        let o = order_of(x);
        if o > best.1 {
            best = (x, o);
        }
    }
    let (g1, n1) = best;
    // Powers of g1.
    let mut pow_idx: HashMap<usize, u64> = HashMap::new();
    let mut acc = id;
    for k in 0..n1 {
        pow_idx.insert(acc, k);
        acc = mul(acc, g1);
    }
    if n1 as usize == n {
        let dlog = elements.iter().map(|e| vec![pow_idx[e]]).collect();
        return (vec![g1], vec![n1], dlog);
    }
    // Quotient by <g1>: canonical representative = smallest element id in coset.
    let mut rep: HashMap<usize, usize> = HashMap::new();
    let mut reps: Vec<usize> = Vec::new();
    for &x in elements {
        if rep.contains_key(&x) {
            continue;
        }
        let mut coset = Vec::new();
        let mut y = x;
        for _ in 0..n1 {
            coset.push(y);
            y = mul(y, g1);
        }
        let r = *coset.iter().min().unwrap();
        for &c in &coset {
            rep.insert(c, r);
        }
        reps.push(r);
    }
    reps.sort_unstable();
    reps.dedup();
    let qmul = |a: usize, b: usize| rep[&mul(a, b)];
    let (qgens, qorders, qdlog) = decompose_abelian(reps.len(), rep[&id], &qmul, &reps);
    let qpos: HashMap<usize, usize> = reps.iter().enumerate().map(|(i, &e)| (e, i)).collect();

    // Lift quotient generators: x^t = g1^s with t | s; replace x by
    // x * g1^{-s/t} so the lift has exact order t.
    let mut gens = vec![g1];
    let mut orders = vec![n1];
    let mut lifted = Vec::new();
    for (j, &xq) in qgens.iter().enumerate() {
        let t = qorders[j];
        let mut xt = id;
        for _ in 0..t {
            xt = mul(xt, xq);
        }
        let s = pow_idx[&xt];
        debug_assert_eq!(s % t, 0);
        let corr = (n1 - s / t) % n1;
        let mut x = xq;
        let mut gpow = id;
        for _ in 0..corr {
            gpow = mul(gpow, g1);
        }
        x = mul(x, gpow);
        lifted.push(x);
        gens.push(x);
        orders.push(t);
    }

    // Discrete logs: quotient exponents first, then divide out and read the
    // g1 exponent.
    let mut dlog = vec![Vec::new(); elements.len()];
    for &x in elements {
        let e_q = &qdlog[qpos[&rep[&x]]];
        // y = prod lifted[j]^{e_q[j]}
        let mut y = id;
        for (j, &e) in e_q.iter().enumerate() {
            let mut t = id;
            for _ in 0..e {
                t = mul(t, lifted[j]);
            }
            y = mul(y, t);
        }
        // x * y^{-1} in <g1>: find inverse via order.
        let oy = {
            let mut o = 1u64;
            let mut a = y;
            while a != id {
                a = mul(a, y);
                o += 1;
            }
            o
        };
        let mut yinv = id;
        for _ in 0..(oy - 1) {
            yinv = mul(yinv, y);
        }
        let z = mul(x, yinv);
        let e1 = pow_idx[&z];
        let mut v = vec![e1];
        v.extend_from_slice(e_q);
        dlog[pos[&x]] = v;
    }
    (gens, orders, dlog)
}

/// A character of the class group: exponents against the cyclic generators.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ClassChar {
    pub exps: Vec<u64>,
    pub orders: Vec<u64>,
    /// Order of the character in the dual group.
    pub order: u64,
}

impl ClassChar {
    /// Rational angle (num, den) with value psi = e^{2 pi i num/den}.
    pub fn angle(&self, dlog: &[u64]) -> (u64, u64) {
        let den: u64 = self.orders.iter().fold(1u64, |acc, &o| num_integer::lcm(acc, o));
        let mut num: u64 = 0;
        for ((&e, &x), &o) in self.exps.iter().zip(dlog).zip(&self.orders) {
            num = (num + (e as u128 * x as u128 % o as u128) as u64 * (den / o)) % den;
        }
        let g = num_integer::gcd(num, den);
        if num == 0 {
            (0, 1)
        } else {
            (num / g, den / g)
        }
    }

    pub fn value(&self, dlog: &[u64]) -> Complex64 {
        let (num, den) = self.angle(dlog);
        let theta = 2.0 * std::f64::consts::PI * num as f64 / den as f64;
        Complex64::new(theta.cos(), theta.sin())
    }

    /// Real characters (order <= 2) are the genus characters; excluded.
    pub fn is_excluded(&self) -> bool {
        self.order <= 2
    }
}

/// The full character table of the class group.
pub fn characters(cs: &ClassStructure) -> Vec<ClassChar> {
    let mut out = Vec::new();
    let k = cs.orders.len();
    let mut exps = vec![0u64; k];
    loop {
        let order = exps
            .iter()
            .zip(&cs.orders)
            .map(|(&e, &o)| o / num_integer::gcd(e, o).max(1))
            .fold(1u64, num_integer::lcm);
        out.push(ClassChar { exps: exps.clone(), orders: cs.orders.clone(), order: order.max(1) });
        // Increment the exponent vector.
        let mut i = 0;
        loop {
            if i == k {
                return out;
            }
            exps[i] += 1;
            if exps[i] < cs.orders[i] {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
    }
}

/// lambda_psi(m) = sum over ideal classes containing an integral ideal of
/// norm m, by representation counting over the reduced forms. Real up to
/// roundoff (conjugate classes pair up).
pub fn lambda_dihedral(cg: &ClassGroup, cs: &ClassStructure, ch: &ClassChar, m: u64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, f) in cg.forms.iter().enumerate() {
        let r = f.repr_count(m);
        if r > 0 {
            acc += ch.value(&cs.dlog[i]) * r as f64;
        }
    }
    debug_assert!(acc.im.abs() < 1e-8, "lambda must be real, got {acc}");
    acc.re
}

/// (1/|F(D)|) sum over non-excluded characters of lambda_psi(m), computed by
/// orthogonality: h * r_principal(m) - t * r_{principal genus}(m) over h - t
/// where t = [G : G^2] is the number of real characters.
pub fn trace_average(d: u64, m: u64) -> Result<f64, DihedralError> {
    let cg = ClassGroup::new(d)?;
    trace_average_with(&cg, m)
}

pub fn trace_average_with(cg: &ClassGroup, m: u64) -> Result<f64, DihedralError> {
    let sq = cg.squares();
    let t = cg.real_character_count();
    let member_count = cg.h() as i64 - t as i64;
    if member_count <= 0 {
        return Err(DihedralError::Degenerate(cg.d));
    }
    let id = cg.identity();
    let mut r_pr = 0i64;
    let mut r_sq = 0i64;
    for (i, f) in cg.forms.iter().enumerate() {
        let r = f.repr_count(m) as i64;
        if r == 0 {
            continue;
        }
        if i == id {
            r_pr += r;
        }
        if sq[i] {
            r_sq += r;
        }
    }
    Ok((cg.h() as i64 * r_pr - t as i64 * r_sq) as f64 / member_count as f64)
}

/// Local Euler factor of the dihedral form attached to psi at prime p.
pub fn local_factor(cg: &ClassGroup, cs: &ClassStructure, ch: &ClassChar, p: u64) -> LocalFactor {
    let sym = kronecker(-(cg.d as i64), p as i64);
    match sym {
        1 => {
            let cls = cg.prime_class(p).expect("split prime must have a class");
            let lam = 2.0 * ch.value(&cs.dlog[cls]).re;
            LocalFactor::gl2_unramified(p, lam)
        }
        -1 => LocalFactor::from_poly(
            p,
            vec![1.0, 0.0, -1.0],
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        ),
        _ => {
            let cls = cg.prime_class(p).expect("ramified prime has a class");
            let v = ch.value(&cs.dlog[cls]);
            debug_assert!(v.im.abs() < 1e-9, "ramified class is 2-torsion");
            LocalFactor::linear(p, v.re)
        }
    }
}

/// Family member for (D, psi).
pub fn dihedral_member(
    cg: &Arc<ClassGroup>,
    cs: &Arc<ClassStructure>,
    ch: &ClassChar,
    label_index: usize,
) -> FamilyMember {
    let cg2 = cg.clone();
    let cs2 = cs.clone();
    let ch2 = ch.clone();
    let provider = Arc::new(EulerProduct::new(move |p| Some(local_factor(&cg2, &cs2, &ch2, p))));
    FamilyMember::new(
        format!("dihedral(D={},psi={})", cg.d, label_index),
        cg.d,
        GammaFactor::holomorphic(1),
        provider,
    )
    .with_conductor(cg.d)
}

/// Per-discriminant batch data for D < x: class number, omega, squarefree
/// flag, indexed by D (entries only meaningful for D = 3 mod 4).
pub struct ClassNumberTable {
    pub x: u64,
    h: Vec<u32>,
    omega: Vec<u8>,
    squarefree: Vec<bool>,
}

impl ClassNumberTable {
    /// Count all reduced forms of every discriminant -D, D < x, in one sweep
    /// over (a, b, c) triples.
    pub fn build(x: u64) -> Self {
        let xi = x as i64;
        let mut h = vec![0u32; x as usize];
        let amax = ((x as f64) / 3.0).sqrt() as i64 + 1;
        for a in 1..=amax {
            let mut b = 1i64;
            while b <= a {
                // c >= a and d = 4ac - b^2 < x
                let mut c = a;
                loop {
                    let d = 4 * a * c - b * b;
                    if d >= xi {
                        break;
                    }
                    if d > 0 {
                        // gcd check only matters for non-fundamental d; the
                        // squarefree filter below makes it redundant, but it
                        // keeps the table honest for all entries.
                        if num_integer::gcd(num_integer::gcd(a, b), c) == 1 {
                            let two = b < a && a < c;
                            h[d as usize] += if two { 2 } else { 1 };
                        }
                    }
                    c += 1;
                }
                b += 2;
            }
        }
        // Squarefree sieve and omega.
        let mut squarefree = vec![true; x as usize];
        let mut omega = vec![0u8; x as usize];
        for p in sieve_primes(x) {
            let mut k = p as usize;
            while k < x as usize {
                omega[k] += 1;
                k += p as usize;
            }
            let p2 = (p * p) as usize;
            if p2 < x as usize {
                let mut k = p2;
                while k < x as usize {
                    squarefree[k] = false;
                    k += p2;
                }
            }
        }
        Self { x, h, omega, squarefree }
    }

    /// Iterate the family's discriminants: squarefree D = 3 mod 4, 3 < D < x.
    pub fn discriminants(&self) -> impl Iterator<Item = u64> + '_ {
        (7..self.x).step_by(4).filter(|&d| self.squarefree[d as usize])
    }

    pub fn h(&self, d: u64) -> u32 {
        self.h[d as usize]
    }

    pub fn omega(&self, d: u64) -> u8 {
        self.omega[d as usize]
    }

    /// Member count h - 2^{omega-1} (real characters excluded); the paper's
    /// h - 2^omega variant is reported alongside by callers that want it.
    pub fn member_count(&self, d: u64) -> i64 {
        self.h(d) as i64 - (1i64 << (self.omega(d) - 1))
    }

    /// Empirical (1/x) sum of L(1, chi_{-D}) = pi h / sqrt(D) over the
    /// squarefree D = a mod b below x.
    pub fn class_number_sum(&self, b: u64, a: u64) -> f64 {
        let mut acc = 0.0;
        for d in self.discriminants() {
            if d % b == a % b {
                acc += std::f64::consts::PI * self.h(d) as f64 / (d as f64).sqrt();
            }
        }
        acc / self.x as f64
    }

    /// Member-weighted densities of the conditions (-D/p) = 1, (-D/p) = -1,
    /// p | D. Returns (split, inert, ramified) plus the discriminant-weighted
    /// variants.
    pub fn density_check(&self, p: u64) -> DensityReport {
        let mut w = [0f64; 3];
        let mut c = [0u64; 3];
        let mut total_w = 0f64;
        let mut total_c = 0u64;
        for d in self.discriminants() {
            let mc = self.member_count(d).max(0) as f64;
            let k = match kronecker(-(d as i64), p as i64) {
                1 => 0,
                -1 => 1,
                _ => 2,
            };
            w[k] += mc;
            c[k] += 1;
            total_w += mc;
            total_c += 1;
        }
        DensityReport {
            p,
            member_weighted: [w[0] / total_w, w[1] / total_w, w[2] / total_w],
            discriminant_weighted: [
                c[0] as f64 / total_c as f64,
                c[1] as f64 / total_c as f64,
                c[2] as f64 / total_c as f64,
            ],
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DensityReport {
    pub p: u64,
    /// Densities of [split, inert, ramified], weighted by |F(D)|.
    pub member_weighted: [f64; 3],
    pub discriminant_weighted: [f64; 3],
}

/// Reference densities from the class-number sums: split, inert, ramified.
pub fn density_targets(p: u64) -> [f64; 3] {
    let p = p as f64;
    let den = p * p * p + p * p - 1.0;
    [
        (p + 1.0) * p * p / (2.0 * den),
        (p - 1.0) * p * p / (2.0 * den),
        (p * p - 1.0) / den,
    ]
}

/// The Euler-product constant A_{b,a} of the class-number average, to 1e-8.
/// Only b = 4 (a = 3) and b = 4p are implemented, mirroring the cases the
/// average formula is stated for.
pub fn a_constant(b: u64, a: u64) -> Result<f64, DihedralError> {
    if b == 4 {
        if a % 4 != 3 {
            return Err(DihedralError::UnsupportedModulus { b, a });
        }
        // A_{4,3} = (8/(3 pi^2)) prod_{q odd} (q^3+q^2-1)/((q^2-1)(q+1)).
        // Pulling out zeta(2) factor-wise: (1/3) prod_{q odd} (1 - 1/(q^2(q+1))),
        // whose tail beyond Q is below 1/Q^2.
        let mut prod = 1.0f64;
        for q in sieve_primes(100_000).into_iter().skip(1) {
            let q = q as f64;
            prod *= 1.0 - 1.0 / (q * q * (q + 1.0));
        }
        Ok(prod / 3.0)
    } else if b % 4 == 0 && b > 4 {
        let p = b / 4;
        if factorize(p).len() != 1 || factorize(p)[0].1 != 1 || p == 2 {
            return Err(DihedralError::UnsupportedModulus { b, a });
        }
        if num_integer::gcd(a, b) != 1 || a % 4 != 3 {
            return Err(DihedralError::UnsupportedModulus { b, a });
        }
        let base = a_constant(4, 3)?;
        let pf = p as f64;
        let den = pf * pf * pf + pf * pf - 1.0;
        let factor = if kronecker(-(a as i64), p as i64) == 1 {
            pf * pf * (pf + 1.0) / (den * (pf - 1.0))
        } else {
            pf * pf / den
        };
        Ok(base * factor)
    } else {
        Err(DihedralError::UnsupportedModulus { b, a })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{expand_dirichlet, SeriesMode};

    #[test]
    fn reduced_forms_small_discriminants() {
        let f23 = reduced_forms(23).unwrap();
        assert_eq!(f23.len(), 3);
        assert!(f23.contains(&QuadForm { a: 1, b: 1, c: 6 }));
        assert!(f23.contains(&QuadForm { a: 2, b: 1, c: 3 }));
        assert!(f23.contains(&QuadForm { a: 2, b: -1, c: 3 }));
        let f7 = reduced_forms(7).unwrap();
        assert_eq!(f7, vec![QuadForm { a: 1, b: 1, c: 2 }]);
        for f in reduced_forms(163).unwrap() {
            assert_eq!(f.disc(), -163);
            assert!(f.is_reduced());
        }
        assert!(reduced_forms(21).is_err()); // 21 = 1 mod 4
        assert!(reduced_forms(75).is_err()); // not squarefree
    }

    #[test]
    fn composition_group_axioms() {
        for &d in &[23u64, 31, 47, 71, 479] {
            let cg = ClassGroup::new(d).unwrap();
            let id = cg.identity();
            for i in 0..cg.h() {
                assert_eq!(cg.mul(id, i), i);
                assert_eq!(cg.mul(i, cg.inv(i)), id);
                for j in 0..cg.h() {
                    assert_eq!(cg.mul(i, j), cg.mul(j, i));
                    // order of every element divides h
                }
                assert_eq!(cg.h() as u64 % cg.order(i), 0);
            }
            // associativity spot check
            let n = cg.h();
            for i in 0..n.min(5) {
                for j in 0..n.min(5) {
                    for k in 0..n.min(5) {
                        assert_eq!(cg.mul(cg.mul(i, j), k), cg.mul(i, cg.mul(j, k)));
                    }
                }
            }
        }
    }

    #[test]
    fn structure_and_characters_for_23() {
        let cg = ClassGroup::new(23).unwrap();
        assert_eq!(cg.h(), 3);
        let cs = class_group_structure(&cg);
        assert_eq!(cs.orders, vec![3]);
        let chars = characters(&cs);
        assert_eq!(chars.len(), 3);
        assert_eq!(chars.iter().filter(|c| c.is_excluded()).count(), 1);
        // Orthogonality: sum over characters of psi(g) = h * [g = id].
        for (i, _) in cg.forms.iter().enumerate() {
            let s: Complex64 = chars.iter().map(|c| c.value(&cs.dlog[i])).sum();
            let expect = if i == cg.identity() { 3.0 } else { 0.0 };
            assert!((s.re - expect).abs() < 1e-12 && s.im.abs() < 1e-12);
        }
        // Paper's genus count for comparison: 2^omega = 2, ours is 2^{omega-1} = 1.
        assert_eq!(cg.real_character_count(), 1);
        assert_eq!(1 << cg.omega, 2);
    }

    #[test]
    fn lambda_values_for_23() {
        let cg = ClassGroup::new(23).unwrap();
        let cs = class_group_structure(&cg);
        let chars = characters(&cs);
        let nontrivial: Vec<&ClassChar> =
            chars.iter().filter(|c| !c.is_excluded()).collect();
        assert_eq!(nontrivial.len(), 2);
        for ch in &nontrivial {
            assert!((lambda_dihedral(&cg, &cs, ch, 1) - 1.0).abs() < 1e-12);
            // 2 splits in Q(sqrt(-23)); the prime above 2 has order 3.
            let l2 = lambda_dihedral(&cg, &cs, ch, 2);
            assert!((l2 - (-1.0)).abs() < 1e-12, "lambda(2) = {l2}");
        }
        // Inert prime: lambda(p) = 0. (-23/5) = ?
        let sym5 = kronecker(-23, 5);
        if sym5 == -1 {
            for ch in &nontrivial {
                assert!(lambda_dihedral(&cg, &cs, ch, 5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn local_factor_expansion_matches_representation_counting() {
        for &d in &[23u64, 31, 47] {
            let cg = ClassGroup::new(d).unwrap();
            let cs = class_group_structure(&cg);
            let chars = characters(&cs);
            for (ci, ch) in chars.iter().enumerate().filter(|(_, c)| !c.is_excluded()) {
                let m = 500usize;
                let factors: Vec<LocalFactor> = sieve_primes(m as u64 + 1)
                    .into_iter()
                    .map(|p| local_factor(&cg, &cs, ch, p))
                    .collect();
                let series = expand_dirichlet(&factors, m, SeriesMode::Full).unwrap();
                for n in 1..=m as u64 {
                    let direct = lambda_dihedral(&cg, &cs, ch, n);
                    let viae = series.get(n as usize);
                    assert!(
                        (direct - viae).abs() < 1e-10,
                        "D={d} char {ci} n={n}: {direct} vs {viae}"
                    );
                }
            }
        }
    }

    #[test]
    fn trace_average_identities() {
        let cg = ClassGroup::new(23).unwrap();
        // m = 1: exactly 1.
        assert!((trace_average_with(&cg, 1).unwrap() - 1.0).abs() < 1e-12);
        // Direct character sum agrees with the orthogonality route.
        let cs = class_group_structure(&cg);
        let chars = characters(&cs);
        for m in 1..=12u64 {
            let direct: f64 = chars
                .iter()
                .filter(|c| !c.is_excluded())
                .map(|c| lambda_dihedral(&cg, &cs, c, m))
                .sum::<f64>()
                / chars.iter().filter(|c| !c.is_excluded()).count() as f64;
            let ortho = trace_average_with(&cg, m).unwrap();
            assert!((direct - ortho).abs() < 1e-10, "m={m}: {direct} vs {ortho}");
        }
        // Large D, small square m: close to 1.
        let big = ClassGroup::new(100_003).unwrap();
        let t4 = trace_average_with(&big, 4).unwrap();
        assert!((t4 - 1.0).abs() < 0.2, "trace(4) = {t4}");
        let t2 = trace_average_with(&big, 2).unwrap();
        assert!(t2.abs() < 0.2, "trace(2) = {t2}");
    }

    #[test]
    fn multiplicativity_at_split_primes() {
        let cg = ClassGroup::new(47).unwrap();
        let cs = class_group_structure(&cg);
        let chars = characters(&cs);
        let split: Vec<u64> = sieve_primes(60)
            .into_iter()
            .filter(|&p| kronecker(-47, p as i64) == 1)
            .take(2)
            .collect();
        assert!(split.len() == 2);
        for ch in chars.iter().filter(|c| !c.is_excluded()) {
            let a = lambda_dihedral(&cg, &cs, ch, split[0]);
            let b = lambda_dihedral(&cg, &cs, ch, split[1]);
            let ab = lambda_dihedral(&cg, &cs, ch, split[0] * split[1]);
            assert!((ab - a * b).abs() < 1e-10);
        }
    }

    #[test]
    fn class_number_table_agrees_with_enumeration() {
        let table = ClassNumberTable::build(600);
        for d in table.discriminants() {
            let forms = reduced_forms(d).unwrap();
            assert_eq!(table.h(d) as usize, forms.len(), "D={d}");
            assert_eq!(table.omega(d) as usize, factorize(d).len());
        }
        assert_eq!(table.h(23), 3);
        assert_eq!(table.h(7), 1);
    }

    #[test]
    fn density_targets_examples() {
        // p = 3 split target 18/35; p = 5 ramified target 24/149.
        let t3 = density_targets(3);
        assert!((t3[0] - 18.0 / 35.0).abs() < 1e-12);
        let t5 = density_targets(5);
        assert!((t5[2] - 24.0 / 149.0).abs() < 1e-12);
        for p in [3u64, 5, 7, 11] {
            let t = density_targets(p);
            assert!((t[0] + t[1] + t[2] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn a_constant_values() {
        let a43 = a_constant(4, 3).unwrap();
        // Regression value from this implementation's own high-precision
        // product (tail < 1e-10); the acceptance suite checks it against the
        // empirical class-number average.
        assert!((a43 - 0.320_550_487_1).abs() < 1e-7, "A_43 = {a43}");
        // Ratio identity at p = 3 with (-a/3) = 1: 18/35.
        let a12 = a_constant(12, 11).unwrap(); // -11 = 1 mod 3, QR
        assert_eq!(kronecker(-11, 3), 1);
        assert!((a12 / a43 - 18.0 / 35.0).abs() < 1e-9);
        assert!(a_constant(6, 1).is_err());
    }

    #[test]
    fn prime_class_and_orders() {
        let cg = ClassGroup::new(23).unwrap();
        // 2 splits (-23 = 1 mod 8) and lies in an order-3 class.
        let c2 = cg.prime_class(2).unwrap();
        assert_eq!(cg.order(c2), 3);
        // 3 splits in Q(sqrt(-23))? (-23/3) = (1/3) = 1: yes.
        let c3 = cg.prime_class(3).unwrap();
        assert_eq!(cg.order(c3), 3);
        // Ramified: 23.
        let c23 = cg.prime_class(23).unwrap();
        assert_eq!(cg.pow(c23, 2), cg.identity());
    }
}
