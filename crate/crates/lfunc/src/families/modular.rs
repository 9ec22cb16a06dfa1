//! Holomorphic newforms of squarefree level (coefficients ingested from
//! files, never computed here), the newspace dimension formula behind the
//! alpha_p density, Satake lifting, and symmetric-power local factors.

use super::{EulerProduct, FamilyMember};
use crate::arith::{factorize, LocalFactor};
use crate::kernel::GammaFactor;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::io::BufRead;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModularError {
    #[error("line {line}: {msg}")]
    BadRow { line: usize, msg: String },
    #[error("dimension formula needs even weight k >= 2, got {0}")]
    OddWeight(u32),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("no newforms with squarefree level below {0}")]
    EmptyFamily(u64),
}

/// One ingested newform: normalized lambda(p) = a_p / p^{(k-1)/2} at the
/// primes the source provides.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct NewformRecord {
    pub label: String,
    pub level: u64,
    pub weight: u32,
    pub lambdas: BTreeMap<u64, f64>,
}

impl NewformRecord {
    pub fn is_ramified(&self, p: u64) -> bool {
        self.level % p == 0
    }

    pub fn p_max(&self) -> u64 {
        self.lambdas.keys().copied().max().unwrap_or(0)
    }
}

/// Ingest the CSV format `label,level,weight,p,lambda` (one row per
/// (form, p)); rows violating the level/bound invariants are rejected with
/// their line number.
pub fn ingest_newforms<R: BufRead>(reader: R) -> Result<Vec<NewformRecord>, ModularError> {
    let mut records: BTreeMap<String, NewformRecord> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let t = line.trim();
        if t.is_empty() || (lineno == 1 && t.starts_with("label")) {
            continue;
        }
        let fields: Vec<&str> = t.split(',').collect();
        if fields.len() != 5 {
            return Err(ModularError::BadRow {
                line: lineno,
                msg: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let label = fields[0].to_string();
        let parse = |s: &str, what: &str| -> Result<u64, ModularError> {
            s.trim().parse().map_err(|_| ModularError::BadRow {
                line: lineno,
                msg: format!("bad {what}: {s}"),
            })
        };
        let level = parse(fields[1], "level")?;
        let weight = parse(fields[2], "weight")? as u32;
        let p = parse(fields[3], "prime")?;
        let lambda: f64 = fields[4].trim().parse().map_err(|_| ModularError::BadRow {
            line: lineno,
            msg: format!("bad lambda: {}", fields[4]),
        })?;
        if factorize(level).into_iter().any(|(_, e)| e > 1) {
            return Err(ModularError::BadRow {
                line: lineno,
                msg: format!("level {level} is not squarefree"),
            });
        }
        if weight < 2 || weight % 2 != 0 {
            return Err(ModularError::BadRow {
                line: lineno,
                msg: format!("weight {weight} not even >= 2"),
            });
        }
        if factorize(p).len() != 1 || factorize(p)[0].1 != 1 {
            return Err(ModularError::BadRow { line: lineno, msg: format!("{p} is not prime") });
        }
        // Coefficient bounds: Deligne off the level, |lambda| = p^{-1/2} on it.
        if level % p == 0 {
            let expect = 1.0 / (p as f64).sqrt();
            if (lambda.abs() - expect).abs() > 1e-6 {
                return Err(ModularError::BadRow {
                    line: lineno,
                    msg: format!("|lambda({p})| must be p^-1/2 at p | level, got {lambda}"),
                });
            }
        } else if lambda.abs() > 2.0 + 1e-9 {
            return Err(ModularError::BadRow {
                line: lineno,
                msg: format!("|lambda({p})| = {lambda} violates the bound 2"),
            });
        }
        let rec = records.entry(label.clone()).or_insert_with(|| NewformRecord {
            label,
            level,
            weight,
            lambdas: BTreeMap::new(),
        });
        if rec.level != level || rec.weight != weight {
            return Err(ModularError::BadRow {
                line: lineno,
                msg: "inconsistent level/weight within one label".into(),
            });
        }
        rec.lambdas.insert(p, lambda);
    }
    Ok(records.into_values().collect())
}

fn eps2_factor(p: u64) -> u64 {
    match p {
        2 => 1,
        _ if p % 4 == 1 => 2,
        _ => 0,
    }
}

fn eps3_factor(p: u64) -> u64 {
    match p {
        3 => 1,
        _ if p % 3 == 1 => 2,
        _ => 0,
    }
}

/// dim S_k(Gamma_0(n)), trivial nebentypus, even k >= 2, via the genus
/// formula for X_0(n).
pub fn dim_full(k: u32, n: u64) -> Result<i64, ModularError> {
    if k < 2 || k % 2 != 0 {
        return Err(ModularError::OddWeight(k));
    }
    let facs = factorize(n);
    let mut mu = n as i64;
    for &(p, _) in &facs {
        mu += mu / p as i64;
    }
    let eps_inf: u64 = divisors(n).iter().map(|&d| euler_phi(num_integer::gcd(d, n / d))).sum();
    let eps2: u64 = if n % 4 == 0 { 0 } else { facs.iter().map(|&(p, _)| eps2_factor(p)).product() };
    let eps3: u64 = if n % 9 == 0 { 0 } else { facs.iter().map(|&(p, _)| eps3_factor(p)).product() };
    // 12 g = 12 + mu - 3 eps2 - 4 eps3 - 6 eps_inf
    let g12 = 12 + mu - 3 * eps2 as i64 - 4 * eps3 as i64 - 6 * eps_inf as i64;
    debug_assert_eq!(g12 % 12, 0, "genus formula must be integral at n={n}");
    let g = g12 / 12;
    if k == 2 {
        return Ok(g);
    }
    let k = k as i64;
    Ok((k - 1) * (g - 1)
        + (k / 2 - 1) * eps_inf as i64
        + (k / 4) * eps2 as i64
        + (k / 3) * eps3 as i64)
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factorize(n) {
        let mut next = Vec::new();
        for &d in &out {
            let mut pe = 1u64;
            for _ in 0..=e {
                next.push(d * pe);
                pe *= p;
            }
        }
        out = next;
    }
    out.sort_unstable();
    out
}

fn euler_phi(n: u64) -> u64 {
    let mut phi = n;
    for (p, _) in factorize(n) {
        phi -= phi / p;
    }
    phi
}

/// dim of the newspace at squarefree level q: Moebius-type inversion
/// sum_{d | q} (-2)^{omega(q/d)} dim S_k(Gamma_0(d)).
pub fn dim_new(k: u32, q: u64) -> Result<i64, ModularError> {
    debug_assert!(factorize(q).iter().all(|&(_, e)| e == 1), "level must be squarefree");
    let mut acc = 0i64;
    for d in divisors(q) {
        let omega = factorize(q / d).len() as u32;
        acc += (-2i64).pow(omega) * dim_full(k, d)?;
    }
    Ok(acc)
}

/// Empirical alpha_p: fraction of newform dimension at squarefree levels
/// q < x avoiding p; tends to 1 / (1 + 1/p - 1/p^2).
pub fn alpha_p_density(p: u64, x: u64, k: u32) -> Result<f64, ModularError> {
    let mut num = 0i64;
    let mut den = 0i64;
    for q in 1..x {
        if factorize(q).iter().any(|&(_, e)| e > 1) {
            continue;
        }
        let d = dim_new(k, q)?;
        den += d;
        if q % p != 0 {
            num += d;
        }
    }
    if den == 0 {
        return Err(ModularError::EmptyFamily(x));
    }
    Ok(num as f64 / den as f64)
}

pub fn alpha_p_target(p: u64) -> f64 {
    let p = p as f64;
    1.0 / (1.0 + 1.0 / p - 1.0 / (p * p))
}

/// Satake parameters of the GL(2) local factor at p.
#[derive(Debug, Clone, Copy)]
pub struct SatakePair {
    pub a1: Complex64,
    pub a2: Complex64,
    pub ramified: bool,
}

pub fn satake_lift(record: &NewformRecord, p: u64) -> Option<SatakePair> {
    let lam = *record.lambdas.get(&p)?;
    if record.is_ramified(p) {
        Some(SatakePair { a1: Complex64::new(lam, 0.0), a2: Complex64::new(0.0, 0.0), ramified: true })
    } else {
        let half = lam / 2.0;
        let disc = (1.0 - half * half).max(0.0).sqrt();
        Some(SatakePair {
            a1: Complex64::new(half, disc),
            a2: Complex64::new(half, -disc),
            ramified: false,
        })
    }
}

/// Local factor of sym^r: degree r+1 with inverse roots a1^{r-i} a2^i when
/// unramified, degree 1 with inverse root lambda(p)^r when ramified.
pub fn sym_local_factor(sp: &SatakePair, r: u32, p: u64) -> LocalFactor {
    assert!(r >= 1);
    if sp.ramified {
        return LocalFactor::linear(p, sp.a1.re.powi(r as i32));
    }
    let satake: Vec<Complex64> =
        (0..=r).map(|i| sp.a1.powu(r - i) * sp.a2.powu(i)).collect();
    LocalFactor::from_satake(p, satake)
}

/// Residual of the moment identity lambda_{sym^r}(p)^2 = sum_{j<=r}
/// lambda(p^{2j}); None for ramified p (not applicable).
pub fn sym_moment_check(record: &NewformRecord, r: u32, p: u64) -> Option<f64> {
    if record.is_ramified(p) {
        return None;
    }
    let lam = *record.lambdas.get(&p)?;
    let sp = satake_lift(record, p)?;
    let sym = sym_local_factor(&sp, r, p);
    let lam_sym = sym.prime_power_coeffs(1)[1];
    let gl2 = LocalFactor::gl2_unramified(p, lam);
    let powers = gl2.prime_power_coeffs(2 * r as usize);
    let rhs: f64 = (0..=r).map(|j| powers[2 * j as usize]).sum();
    Some((lam_sym * lam_sym - rhs).abs())
}

/// Archimedean shifts of sym^r of a weight-k holomorphic form: the standard
/// recipe pairs Gamma_C(s + c) into shifts (c, c + 1), with one Gamma_R
/// factor left over for even r.
pub fn sym_gamma_shifts(k: u32, r: u32) -> Vec<f64> {
    let kk = (k - 1) as f64;
    let mut shifts = Vec::new();
    if r % 2 == 1 {
        for j in 0..=(r - 1) / 2 {
            let c = (j as f64 + 0.5) * kk;
            shifts.push(c);
            shifts.push(c + 1.0);
        }
    } else {
        shifts.push(if (r / 2) % 2 == 1 { 1.0 } else { 0.0 });
        for j in 1..=r / 2 {
            let c = j as f64 * kk;
            shifts.push(c);
            shifts.push(c + 1.0);
        }
    }
    shifts
}

/// Family member for an ingested record (r = 1) or its symmetric power.
pub fn modular_member(record: &NewformRecord, r: u32) -> FamilyMember {
    let rec = record.clone();
    let p_max = record.p_max();
    let provider = Arc::new(EulerProduct::new(move |p| {
        let sp = satake_lift(&rec, p)?;
        Some(sym_local_factor(&sp, r, p))
    }));
    let gamma = if r == 1 {
        GammaFactor::holomorphic(record.weight)
    } else {
        GammaFactor::new(sym_gamma_shifts(record.weight, r)).expect("shifts are nonnegative")
    };
    let label = if r == 1 {
        record.label.clone()
    } else {
        format!("sym{}({})", r, record.label)
    };
    FamilyMember::new(label, record.level, gamma, provider)
        .with_conductor(record.level)
        .with_assumption(format!("Euler factors omitted beyond p = {p_max}"))
}

/// The deformed Sato-Tate density of lambda(p) at a fixed prime: continuous
/// part alpha_p (p+1)/pi sqrt(1 - x^2/4) / ((p^{1/2}+p^{-1/2})^2 - x^2) on
/// [-2, 2] plus atoms of mass (1-alpha_p)/2 at +-p^{-1/2}.
pub fn deformed_sato_tate_density(p: u64, alpha: f64, x: f64) -> f64 {
    if x.abs() >= 2.0 {
        return 0.0;
    }
    let sp = (p as f64).sqrt();
    let c = sp + 1.0 / sp;
    alpha * (p as f64 + 1.0) / std::f64::consts::PI * (1.0 - x * x / 4.0).sqrt()
        / (c * c - x * x)
}
