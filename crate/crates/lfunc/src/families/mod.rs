//! The concrete families: each hands the verdict engine members with an
//! ordering key, a gamma factor and a coefficient provider.

pub mod dihedral;
pub mod dirichlet;
pub mod elliptic;
pub mod modular;

use crate::arith::{expand_dirichlet, ArithError, CoefficientSeries, LocalFactor, SeriesMode};
use crate::kernel::GammaFactor;
use std::sync::Arc;

/// Source of Dirichlet coefficients for one member.
pub trait Coefficients: Send + Sync {
    fn series(&self, limit: usize, mode: SeriesMode) -> Result<CoefficientSeries, ArithError>;

    /// Local Euler factor at p when the member is an Euler product; None for
    /// purely coefficient-level members. An omitted factor (unknown prime)
    /// comes back as the trivial factor.
    fn local_factor(&self, _p: u64) -> Option<LocalFactor> {
        None
    }
}

/// Member coefficients given by an Euler product over the primes the family
/// can classify; unknown primes come back as trivial factors and must be
/// recorded as assumptions on the member.
pub struct EulerProduct<F>
where
    F: Fn(u64) -> Option<LocalFactor> + Send + Sync,
{
    factor_fn: F,
}

impl<F> EulerProduct<F>
where
    F: Fn(u64) -> Option<LocalFactor> + Send + Sync,
{
    pub fn new(factor_fn: F) -> Self {
        Self { factor_fn }
    }
}

impl<F> Coefficients for EulerProduct<F>
where
    F: Fn(u64) -> Option<LocalFactor> + Send + Sync,
{
    fn series(&self, limit: usize, mode: SeriesMode) -> Result<CoefficientSeries, ArithError> {
        let primes = crate::arith::sieve_primes(limit as u64 + 1);
        let mut factors = Vec::new();
        for p in primes {
            if let SeriesMode::Smooth(nb) = mode {
                if p >= nb {
                    continue;
                }
            }
            let f = (self.factor_fn)(p).unwrap_or_else(|| LocalFactor::omitted(p));
            f.validate()?;
            factors.push(f);
        }
        expand_dirichlet(&factors, limit, mode)
    }

    fn local_factor(&self, p: u64) -> Option<LocalFactor> {
        Some((self.factor_fn)(p).unwrap_or_else(|| LocalFactor::omitted(p)))
    }
}

/// Member coefficients given directly as lambda(n), i.e. totally explicit
/// (characters, synthetic test members).
pub struct DirectCoefficients<F>
where
    F: Fn(u64) -> f64 + Send + Sync,
{
    lambda: F,
    finite: bool,
}

impl<F> DirectCoefficients<F>
where
    F: Fn(u64) -> f64 + Send + Sync,
{
    pub fn new(lambda: F) -> Self {
        Self { lambda, finite: false }
    }

    /// Mark the series as identically zero beyond any requested limit.
    pub fn finite(lambda: F) -> Self {
        Self { lambda, finite: true }
    }
}

impl<F> Coefficients for DirectCoefficients<F>
where
    F: Fn(u64) -> f64 + Send + Sync,
{
    fn series(&self, limit: usize, mode: SeriesMode) -> Result<CoefficientSeries, ArithError> {
        let mode = if self.finite { SeriesMode::Finite } else { mode };
        let mut values = Vec::with_capacity(limit);
        match mode {
            SeriesMode::Smooth(nb) => {
                let spf = crate::arith::spf_sieve(limit);
                for n in 1..=limit {
                    let smooth = {
                        let mut m = n;
                        let mut ok = true;
                        while m > 1 {
                            let p = spf[m] as usize;
                            if p as u64 >= nb {
                                ok = false;
                                break;
                            }
                            while m % p == 0 {
                                m /= p;
                            }
                        }
                        ok
                    };
                    values.push(if smooth { (self.lambda)(n as u64) } else { 0.0 });
                }
            }
            _ => {
                for n in 1..=limit {
                    values.push((self.lambda)(n as u64));
                }
            }
        }
        Ok(CoefficientSeries::from_values(values, mode))
    }
}

/// One member of a family, ready for the verdict engine.
#[derive(Clone)]
pub struct FamilyMember {
    pub label: String,
    /// Ordering key N(pi); S(X) = members with key < X.
    pub ordering: u64,
    pub conductor: Option<u64>,
    pub root_number: Option<f64>,
    pub gamma: GammaFactor,
    /// Caveats that verdicts must carry (e.g. omitted Euler factors).
    pub assumptions: Vec<String>,
    provider: Arc<dyn Coefficients>,
}

impl FamilyMember {
    pub fn new(
        label: impl Into<String>,
        ordering: u64,
        gamma: GammaFactor,
        provider: Arc<dyn Coefficients>,
    ) -> Self {
        Self {
            label: label.into(),
            ordering,
            conductor: None,
            root_number: None,
            gamma,
            assumptions: Vec::new(),
            provider,
        }
    }

    pub fn with_conductor(mut self, q: u64) -> Self {
        self.conductor = Some(q);
        self
    }

    pub fn with_root_number(mut self, e: f64) -> Self {
        self.root_number = Some(e);
        self
    }

    pub fn with_assumption(mut self, a: impl Into<String>) -> Self {
        self.assumptions.push(a.into());
        self
    }

    pub fn series(&self, limit: usize, mode: SeriesMode) -> Result<CoefficientSeries, ArithError> {
        self.provider.series(limit, mode)
    }

    pub fn local_factor(&self, p: u64) -> Option<LocalFactor> {
        self.provider.local_factor(p)
    }
}
