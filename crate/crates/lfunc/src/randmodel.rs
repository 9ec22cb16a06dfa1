//! Monte-Carlo verification of the probabilistic machinery: the coefficient
//! measures X_p, the prime sums X(s) = sum (log p / p^s) X_p, the CLT for
//! weighted sums, and the sign-change probability bound.
//!
//! Determinism: every stream is a ChaCha8 generator keyed by a mix of
//! (seed, prime, chunk), so trials partitioned across workers reproduce
//! byte-identically at any worker count.

use crate::arith::sieve_primes;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("measure mass {0} is not 1 (tolerance 1e-8)")]
    Unnormalized(f64),
    #[error("sigma(r) = 0: the CLT normalisation degenerates")]
    ZeroSigma,
    #[error("v(s) = exp({0:.1}) not enumerable under the prime cap")]
    InfeasibleRange(f64),
}

/// The coefficient measure at one prime (or a synthetic one).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub enum MeasureKind {
    /// Finite atomic measure: (value, mass) pairs.
    Atomic(Vec<(f64, f64)>),
    /// Dihedral X_p: arcsine on [-2,2] with the split mass, an atom at 0
    /// with the inert mass, atoms at +-1 with the ramified mass.
    Dihedral { p: u64 },
    /// Deformed Sato-Tate with atoms at +-p^{-1/2} of mass (1-alpha)/2.
    DeformedSatoTate { p: u64, alpha: f64 },
    /// Piecewise-linear density on [-support, support] given by nodes.
    Custom { nodes: Vec<(f64, f64)>, support: f64 },
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub seed: u64,
}

const INV_TABLE_NODES: usize = 10_000;

impl MeasureSpec {
    pub fn atomic(atoms: Vec<(f64, f64)>, seed: u64) -> Self {
        Self { kind: MeasureKind::Atomic(atoms), seed }
    }

    pub fn rademacher(seed: u64) -> Self {
        Self::atomic(vec![(-1.0, 0.5), (1.0, 0.5)], seed)
    }

    pub fn dihedral(p: u64, seed: u64) -> Self {
        Self { kind: MeasureKind::Dihedral { p }, seed }
    }

    pub fn deformed_sato_tate(p: u64, seed: u64) -> Self {
        let alpha = crate::families::modular::alpha_p_target(p);
        Self { kind: MeasureKind::DeformedSatoTate { p, alpha }, seed }
    }

    /// Atom list (value, mass) and the continuous remainder mass.
    fn atoms(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            MeasureKind::Atomic(a) => a.clone(),
            MeasureKind::Dihedral { p } => {
                let [_, inert, ram] = crate::families::dihedral::density_targets(*p);
                vec![(-1.0, ram / 2.0), (0.0, inert), (1.0, ram / 2.0)]
            }
            MeasureKind::DeformedSatoTate { p, alpha } => {
                let a = (1.0 - alpha) / 2.0;
                let x = 1.0 / (*p as f64).sqrt();
                vec![(-x, a), (x, a)]
            }
            MeasureKind::Custom { .. } => Vec::new(),
        }
    }

    fn continuous_mass(&self) -> f64 {
        1.0 - self.atoms().iter().map(|&(_, m)| m).sum::<f64>()
    }

    /// Density of the continuous part at x (not normalised to mass 1).
    fn density(&self, x: f64) -> f64 {
        match &self.kind {
            MeasureKind::Atomic(_) => 0.0,
            MeasureKind::Dihedral { p } => {
                let [split, _, _] = crate::families::dihedral::density_targets(*p);
                if x.abs() >= 2.0 {
                    0.0
                } else {
                    split / (std::f64::consts::PI * (4.0 - x * x).sqrt())
                }
            }
            MeasureKind::DeformedSatoTate { p, alpha } => {
                crate::families::modular::deformed_sato_tate_density(*p, *alpha, x)
            }
            MeasureKind::Custom { nodes, .. } => {
                let mut it = nodes.windows(2);
                while let Some([(x0, y0), (x1, y1)]) = it.next() {
                    if x >= *x0 && x <= *x1 {
                        let t = (x - x0) / (x1 - x0);
                        return y0 + t * (y1 - y0);
                    }
                }
                0.0
            }
        }
    }

    pub fn support(&self) -> f64 {
        match &self.kind {
            MeasureKind::Atomic(a) => a.iter().map(|&(x, _)| x.abs()).fold(0.0, f64::max),
            MeasureKind::Dihedral { .. } | MeasureKind::DeformedSatoTate { .. } => 2.0,
            MeasureKind::Custom { support, .. } => *support,
        }
    }

    /// Total mass: atom sum plus the exact continuous CDF at the support end.
    pub fn total_mass(&self) -> f64 {
        let atom_mass: f64 = self.atoms().iter().map(|&(_, m)| m).sum();
        atom_mass + self.continuous_cdf(self.support() + 1.0)
    }

    /// Integral of f against the continuous part. The semicircle-type
    /// densities are integrated after x = 2 sin(theta), which removes the
    /// endpoint singularity/degeneracy; piecewise-linear customs go segment
    /// by segment.
    fn quadrature(&self, f: impl Fn(f64) -> f64) -> f64 {
        let simpson = |a: f64, b: f64, n: usize, g: &dyn Fn(f64) -> f64| -> f64 {
            let h = (b - a) / n as f64;
            let mut acc = 0.0;
            for i in 0..=n {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * g(a + h * i as f64);
            }
            acc * h / 3.0
        };
        match &self.kind {
            MeasureKind::Atomic(_) => 0.0,
            MeasureKind::Dihedral { p } => {
                // density * dx/dtheta is the constant split/pi.
                let [split, _, _] = crate::families::dihedral::density_targets(*p);
                let half_pi = std::f64::consts::FRAC_PI_2;
                simpson(-half_pi, half_pi, 16_384, &|t: f64| {
                    split / std::f64::consts::PI * f(2.0 * t.sin())
                })
            }
            MeasureKind::DeformedSatoTate { p, alpha } => {
                let pf = *p as f64;
                let c2 = (pf.sqrt() + 1.0 / pf.sqrt()).powi(2);
                let pre = alpha * (pf + 1.0) / std::f64::consts::PI;
                let half_pi = std::f64::consts::FRAC_PI_2;
                simpson(-half_pi, half_pi, 16_384, &|t: f64| {
                    let (s, co) = t.sin_cos();
                    pre * 2.0 * co * co / (c2 - 4.0 * s * s) * f(2.0 * s)
                })
            }
            MeasureKind::Custom { nodes, .. } => {
                let mut acc = 0.0;
                for w in nodes.windows(2) {
                    acc += simpson(w[0].0, w[1].0, 64, &|x: f64| self.density(x) * f(x));
                }
                acc
            }
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let m = self.total_mass();
        if (m - 1.0).abs() > 1e-8 {
            return Err(ModelError::Unnormalized(m));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.atoms().iter().map(|&(x, m)| x * m).sum::<f64>() + self.quadrature(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.atoms().iter().map(|&(x, m)| (x - mu) * (x - mu) * m).sum::<f64>()
            + self.quadrature(|x| (x - mu) * (x - mu))
    }

    /// CDF from the left and right at x (differ exactly at atoms).
    pub fn cdf_pair(&self, x: f64) -> (f64, f64) {
        let cont = self.continuous_cdf(x);
        let mut below = 0.0;
        let mut at = 0.0;
        for (a, m) in self.atoms() {
            if a < x {
                below += m;
            } else if a == x {
                at += m;
            }
        }
        (cont + below, cont + below + at)
    }

    fn continuous_cdf(&self, x: f64) -> f64 {
        match &self.kind {
            MeasureKind::Atomic(_) => 0.0,
            MeasureKind::Dihedral { p } => {
                let [split, _, _] = crate::families::dihedral::density_targets(*p);
                if x <= -2.0 {
                    0.0
                } else if x >= 2.0 {
                    split
                } else {
                    split * (0.5 + (x / 2.0).asin() / std::f64::consts::PI)
                }
            }
            MeasureKind::DeformedSatoTate { p, alpha } => {
                // Closed form via x = 2 sin(theta): the antiderivative is
                // theta/2 - (sqrt(A)/(2c)) atan((sqrt(A)/c) tan(theta)) with
                // A = c^2 - 4 and c = sqrt(p) + 1/sqrt(p).
                if x <= -2.0 {
                    return 0.0;
                }
                let pf = *p as f64;
                let c = pf.sqrt() + 1.0 / pf.sqrt();
                let a = (c * c - 4.0).sqrt();
                let g = |theta: f64| -> f64 {
                    theta / 2.0 - (a / (2.0 * c)) * ((a / c) * theta.tan()).atan()
                };
                let half_pi = std::f64::consts::FRAC_PI_2;
                let g_lo = -half_pi / 2.0 + (a / (2.0 * c)) * half_pi;
                let g_hi = if x >= 2.0 {
                    half_pi / 2.0 - (a / (2.0 * c)) * half_pi
                } else {
                    g((x / 2.0).asin())
                };
                alpha * (pf + 1.0) / std::f64::consts::PI * (g_hi - g_lo)
            }
            MeasureKind::Custom { nodes, .. } => {
                // Piecewise-linear density: exact piecewise-quadratic CDF.
                let mut acc = 0.0;
                for w in nodes.windows(2) {
                    let (x0, y0) = w[0];
                    let (x1, y1) = w[1];
                    if x <= x0 {
                        break;
                    }
                    let hi = x.min(x1);
                    let t = hi - x0;
                    let slope = (y1 - y0) / (x1 - x0);
                    acc += y0 * t + 0.5 * slope * t * t;
                }
                acc
            }
        }
    }
}

/// Prepared sampler: atom selection plus inverse-CDF of the continuous part
/// (exact for the arcsine, a 10^4-node table otherwise).
pub struct Sampler {
    atoms: Vec<(f64, f64)>, // (value, cumulative mass)
    cont_mass: f64,
    inverse: Inverse,
}

enum Inverse {
    Arcsine,
    Table(Vec<f64>),
    None,
}

impl Sampler {
    pub fn new(spec: &MeasureSpec) -> Result<Self, ModelError> {
        spec.validate()?;
        let mut cum = 0.0;
        let atoms: Vec<(f64, f64)> = spec
            .atoms()
            .into_iter()
            .map(|(x, m)| {
                cum += m;
                (x, cum)
            })
            .collect();
        let cont_mass = spec.continuous_mass();
        let inverse = match &spec.kind {
            MeasureKind::Dihedral { .. } => Inverse::Arcsine,
            _ if cont_mass <= 1e-14 => Inverse::None,
            _ => {
                // Invert the normalised continuous CDF on a uniform u-grid by
                // bisection; linear interpolation between nodes keeps the
                // sampling error below one grid cell in u-space.
                let mut tbl = Vec::with_capacity(INV_TABLE_NODES + 1);
                let s = spec.support();
                for i in 0..=INV_TABLE_NODES {
                    let u = i as f64 / INV_TABLE_NODES as f64;
                    let target = u * cont_mass;
                    let (mut lo, mut hi) = (-s, s);
                    for _ in 0..52 {
                        let mid = 0.5 * (lo + hi);
                        if spec.continuous_cdf(mid) < target {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    tbl.push(0.5 * (lo + hi));
                }
                Inverse::Table(tbl)
            }
        };
        Ok(Self { atoms, cont_mass, inverse })
    }

    #[inline]
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.gen();
        for &(x, cum) in &self.atoms {
            if u < cum {
                return x;
            }
        }
        let atom_mass = 1.0 - self.cont_mass;
        let v = ((u - atom_mass) / self.cont_mass).clamp(0.0, 1.0);
        match &self.inverse {
            Inverse::Arcsine => 2.0 * (std::f64::consts::PI * (v - 0.5)).sin(),
            Inverse::Table(tbl) => {
                let t = v * INV_TABLE_NODES as f64;
                let i = (t as usize).min(INV_TABLE_NODES - 1);
                let frac = t - i as f64;
                tbl[i] + frac * (tbl[i + 1] - tbl[i])
            }
            Inverse::None => self.atoms.last().map(|&(x, _)| x).unwrap_or(0.0),
        }
    }
}

/// Deterministic generator for a (seed, prime, chunk) triple.
pub fn stream_rng(seed: u64, prime: u64, chunk: u64) -> ChaCha8Rng {
    let mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    };
    let key = mix(seed ^ mix(prime.wrapping_mul(0x9e3779b97f4a7c15) ^ mix(chunk)));
    ChaCha8Rng::seed_from_u64(key)
}

/// n i.i.d. samples from the spec (single stream).
pub fn sample(spec: &MeasureSpec, n: usize) -> Result<Vec<f64>, ModelError> {
    let sampler = Sampler::new(spec)?;
    let mut rng = stream_rng(spec.seed, 0, 0);
    Ok((0..n).map(|_| sampler.draw(&mut rng)).collect())
}

/// The measure family used for the per-prime X_p of a simulation.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub enum MeasureFamily {
    Dihedral,
    DeformedSatoTate,
    Rademacher,
}

impl MeasureFamily {
    pub fn spec_at(&self, p: u64, seed: u64) -> MeasureSpec {
        match self {
            MeasureFamily::Dihedral => MeasureSpec::dihedral(p, seed),
            MeasureFamily::DeformedSatoTate => MeasureSpec::deformed_sato_tate(p, seed),
            MeasureFamily::Rademacher => MeasureSpec::rademacher(seed),
        }
    }
}

/// u(s) = exp((s - 1/2)^{-1/2}) and ln v(s) = (s - 1/2)^{-2}.
pub fn prime_cuts(s: f64) -> (f64, f64) {
    let eps = s - 0.5;
    ((1.0 / eps.sqrt()).exp(), 1.0 / (eps * eps))
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct XSimulation {
    pub s: f64,
    pub trials: usize,
    pub u: f64,
    pub v_effective: u64,
    pub clamped: bool,
    pub mean: f64,
    pub sd: f64,
    pub samples: Vec<f64>,
}

/// Monte-Carlo trials of X(s) = sum_{u(s) <= p < v(s)} (log p / p^s) X_p with
/// v clamped at `v_cap` (the ladder's v is unreachable numerically; the
/// clamped grid is the desk-scale substitution).
pub fn simulate_x(
    family: MeasureFamily,
    s: f64,
    trials: usize,
    seed: u64,
    v_cap: u64,
) -> Result<XSimulation, ModelError> {
    let (u, ln_v) = prime_cuts(s);
    if u >= v_cap as f64 {
        return Err(ModelError::InfeasibleRange(ln_v));
    }
    let v_effective = if ln_v >= (v_cap as f64).ln() { v_cap } else { ln_v.exp() as u64 };
    let primes: Vec<u64> =
        sieve_primes(v_effective).into_iter().filter(|&p| p as f64 >= u).collect();
    let samplers: Vec<(u64, f64, Sampler)> = primes
        .iter()
        .map(|&p| {
            let w = (p as f64).ln() / (p as f64).powf(s);
            Sampler::new(&family.spec_at(p, seed)).map(|smp| (p, w, smp))
        })
        .collect::<Result<_, _>>()?;

    let chunk = 1024usize;
    let nchunks = trials.div_ceil(chunk);
    let chunks: Vec<usize> = (0..nchunks).collect();
    let parts: Vec<Vec<f64>> = crate::exec::map_slice(&chunks, |&c| {
        let lo = c * chunk;
        let hi = ((c + 1) * chunk).min(trials);
        let mut acc = vec![0.0f64; hi - lo];
        for (p, w, smp) in &samplers {
            let mut rng = stream_rng(seed, *p, c as u64);
            for a in acc.iter_mut() {
                *a += w * smp.draw(&mut rng);
            }
        }
        acc
    });
    let samples: Vec<f64> = parts.into_iter().flatten().collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (trials - 1) as f64;
    Ok(XSimulation {
        s,
        trials,
        u,
        v_effective,
        clamped: ln_v >= (v_cap as f64).ln(),
        mean,
        sd: var.sqrt(),
        samples,
    })
}

/// KS distances of Z_r / sigma(r) against N(0,1) for a schedule of r values,
/// where Z_r = sum_{n <= N_r} c_n X_n with X_n i.i.d. from a centered spec.
pub fn clt_check(
    weights: &(dyn Fn(usize) -> f64 + Sync),
    spec: &MeasureSpec,
    schedule: &[(u32, usize)], // (r, N_r)
    trials: usize,
) -> Result<Vec<(u32, f64)>, ModelError> {
    let sampler = Sampler::new(spec)?;
    let var0 = spec.variance();
    let mean0 = spec.mean();
    let mut out = Vec::new();
    let mut last_sigma = 0.0;
    for &(r, n_r) in schedule {
        let sigma2: f64 = (1..=n_r).map(|n| weights(n).powi(2) * var0).sum();
        if sigma2 <= 0.0 {
            return Err(ModelError::ZeroSigma);
        }
        let sigma = sigma2.sqrt();
        assert!(sigma >= last_sigma, "sigma(r) must increase along the schedule");
        last_sigma = sigma;

        let chunk = 256usize;
        let nchunks = trials.div_ceil(chunk);
        let chunks: Vec<usize> = (0..nchunks).collect();
        let parts: Vec<Vec<f64>> = crate::exec::map_slice(&chunks, |&c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(trials);
            let mut rng = stream_rng(spec.seed, r as u64, c as u64);
            (lo..hi)
                .map(|_| {
                    let mut z = 0.0;
                    for n in 1..=n_r {
                        z += weights(n) * (sampler.draw(&mut rng) - mean0);
                    }
                    z / sigma
                })
                .collect()
        });
        let mut samples: Vec<f64> = parts.into_iter().flatten().collect();
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = crate::stats::ks_statistic_sorted(&samples, |x| {
            let c = crate::special::normal_cdf(x);
            (c, c)
        });
        out.push((r, ks));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Lemma5Report {
    pub delta: f64,
    pub r: usize,
    pub trials: usize,
    pub empirical: f64,
    /// Reference curve e^{-delta R / 3} (the fitted constant multiplies it).
    pub reference: f64,
}

/// Empirical P(S^-(Z_1..Z_R) <= delta R / 5) for signs with
/// P(+) = P(-) = delta, P(0) = 1 - 2 delta.
pub fn lemma5_check(delta: f64, r_len: usize, trials: usize, seed: u64) -> Lemma5Report {
    assert!(delta > 0.0 && delta <= 0.5 && r_len >= 10);
    let threshold = delta * r_len as f64 / 5.0;
    let chunk = 1024usize;
    let nchunks = trials.div_ceil(chunk);
    let chunks: Vec<usize> = (0..nchunks).collect();
    let hits: u64 = crate::exec::map_slice(&chunks, |&c| {
        let lo = c * chunk;
        let hi = ((c + 1) * chunk).min(trials);
        let mut rng = stream_rng(seed, 5, c as u64);
        let mut h = 0u64;
        for _ in lo..hi {
            let mut last = 0i8;
            let mut changes = 0usize;
            for _ in 0..r_len {
                let u: f64 = rng.gen();
                let s = if u < delta {
                    1i8
                } else if u < 2.0 * delta {
                    -1
                } else {
                    0
                };
                if s != 0 {
                    if last != 0 && s != last {
                        changes += 1;
                    }
                    last = s;
                }
            }
            if (changes as f64) <= threshold {
                h += 1;
            }
        }
        h
    })
    .into_iter()
    .sum();
    Lemma5Report {
        delta,
        r: r_len,
        trials,
        empirical: hits as f64 / trials as f64,
        reference: (-delta * r_len as f64 / 3.0).exp(),
    }
}

/// Least constant C with empirical(R) <= C e^{-delta R/3} across a fit range.
pub fn lemma5_fit_constant(delta: f64, rs: &[usize], trials: usize, seed: u64) -> f64 {
    rs.iter()
        .map(|&r| {
            let rep = lemma5_check(delta, r, trials, seed);
            rep.empirical / rep.reference
        })
        .fold(0.0, f64::max)
}
