//! Axiom verification over scanned families: empirical moments with standard
//! errors, equidistribution against reference measures (generalized KS with
//! atoms), joint independence over bin grids, and the divisor-bound
//! correlation check.

use crate::arith::{dk, radical_exact};
use crate::randmodel::MeasureSpec;

/// One empirical moment with its reference value.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MomentReport {
    pub family: String,
    pub prime: u64,
    pub k: u32,
    pub count: u64,
    pub mean: f64,
    pub std_error: f64,
    pub reference: Option<f64>,
    pub reference_source: String,
}

/// Report from raw per-member values.
pub fn moment_report_from_samples(
    family: &str,
    prime: u64,
    k: u32,
    samples: &[f64],
    reference: Option<f64>,
    source: &str,
) -> MomentReport {
    let n = samples.len() as f64;
    let vals: Vec<f64> = samples.iter().map(|x| x.powi(k as i32)).collect();
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    MomentReport {
        family: family.into(),
        prime,
        k,
        count: samples.len() as u64,
        mean,
        std_error: (var / n).sqrt(),
        reference,
        reference_source: source.into(),
    }
}

/// Report from pre-aggregated power sums (sum of lambda^k and lambda^{2k}).
pub fn moment_report_from_sums(
    family: &str,
    prime: u64,
    k: u32,
    count: u64,
    sum_k: f64,
    sum_2k: f64,
    reference: Option<f64>,
    source: &str,
) -> MomentReport {
    let n = count as f64;
    let mean = sum_k / n;
    let var = (sum_2k / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    MomentReport {
        family: family.into(),
        prime,
        k,
        count,
        mean,
        std_error: (var / n).sqrt(),
        reference,
        reference_source: source.into(),
    }
}

/// One-sample KS distance of sorted samples against a CDF given by its
/// left/right values (atoms make them differ).
pub fn ks_statistic_sorted(sorted: &[f64], cdf_pair: impl Fn(f64) -> (f64, f64)) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0usize;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let (f_left, f_right) = cdf_pair(x);
        let emp_before = i as f64 / n;
        let emp_after = j as f64 / n;
        d = d.max((emp_before - f_left).abs()).max((emp_after - f_right).abs());
        i = j;
    }
    d
}

/// KS distance from a weighted discrete histogram (exact member counts), for
/// family scans whose empirical law is assembled without sampling.
pub fn ks_statistic_weighted(
    values_weights: &mut [(f64, f64)],
    cdf_pair: impl Fn(f64) -> (f64, f64),
) -> f64 {
    values_weights.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = values_weights.iter().map(|&(_, w)| w).sum();
    let mut cum = 0.0;
    let mut d = 0.0f64;
    let mut i = 0usize;
    while i < values_weights.len() {
        let x = values_weights[i].0;
        let mut at = 0.0;
        while i < values_weights.len() && values_weights[i].0 == x {
            at += values_weights[i].1;
            i += 1;
        }
        let (f_left, f_right) = cdf_pair(x);
        d = d.max((cum / total - f_left).abs());
        cum += at;
        d = d.max((cum / total - f_right).abs());
    }
    d
}

/// Generalized KS of raw samples against a measure spec.
pub fn equidist_ks(samples: &mut [f64], spec: &MeasureSpec) -> f64 {
    assert!(samples.len() >= 100, "need at least 100 samples");
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ks_statistic_sorted(samples, |x| spec.cdf_pair(x))
}

/// Max deviation of joint bin probabilities from the product of marginals
/// over a 4x4 indicator grid.
pub fn joint_independence(bins: &[[u64; 4]; 4]) -> f64 {
    let total: u64 = bins.iter().flatten().sum();
    let n = total as f64;
    let mut row = [0.0f64; 4];
    let mut col = [0.0f64; 4];
    for (i, r) in bins.iter().enumerate() {
        for (j, &c) in r.iter().enumerate() {
            row[i] += c as f64 / n;
            col[j] += c as f64 / n;
        }
    }
    let mut d = 0.0f64;
    for (i, r) in bins.iter().enumerate() {
        for (j, &c) in r.iter().enumerate() {
            d = d.max((c as f64 / n - row[i] * col[j]).abs());
        }
    }
    d
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CorrelationCheck {
    pub n1: u64,
    pub n2: u64,
    pub empirical: f64,
    /// d_k(n1 n2) / sqrt(R(n1 n2)) for the least k in 2..=8 that passes,
    /// with that k; k = 0 when none passes.
    pub bound: f64,
    pub k: u32,
    pub passes: bool,
}

/// Check |E(lambda(n1) lambda(n2))| against the divisor bound, scanning
/// k in 2..=8 and reporting the least passing k.
pub fn correlation_bound_check(n1: u64, n2: u64, empirical: f64) -> CorrelationCheck {
    let r = radical_exact(n1 * n2) as f64;
    for k in 2..=8u32 {
        let bound = dk(n1 * n2, k) as f64 / r.sqrt();
        if empirical.abs() <= bound {
            return CorrelationCheck { n1, n2, empirical, bound, k, passes: true };
        }
    }
    let bound = dk(n1 * n2, 8) as f64 / r.sqrt();
    CorrelationCheck { n1, n2, empirical, bound, k: 0, passes: false }
}

/// The operational rendering of axiom B at desk scale: E(lambda(p)^2) >= lo
/// and |E(lambda(p))| sqrt(p) <= hi, per prime.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AxiomBRow {
    pub p: u64,
    pub second_moment: f64,
    pub first_moment_scaled: f64,
    pub pass: bool,
}

pub fn axiom_b_dashboard(
    entries: &[(u64, f64, f64)], // (p, E(lambda), E(lambda^2))
    second_moment_min: f64,
    first_moment_factor: f64,
) -> Vec<AxiomBRow> {
    entries
        .iter()
        .map(|&(p, m1, m2)| {
            let scaled = m1.abs() * (p as f64).sqrt();
            AxiomBRow {
                p,
                second_moment: m2,
                first_moment_scaled: scaled,
                pass: m2 >= second_moment_min && scaled <= first_moment_factor,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randmodel::{sample, MeasureSpec};

    #[test]
    fn ks_self_test_and_negative_control() {
        // Samples drawn from the spec itself: KS < 0.01 at 1e5.
        let spec = MeasureSpec::dihedral(5, 31);
        let mut xs = sample(&spec, 100_000).unwrap();
        let ks = equidist_ks(&mut xs, &spec);
        assert!(ks < 0.01, "calibration KS {ks}");
        // Wrong-measure control: dihedral data against the deformed measure.
        let wrong = MeasureSpec::deformed_sato_tate(5, 31);
        let mut ys = sample(&spec, 100_000).unwrap();
        let ks_bad = equidist_ks(&mut ys, &wrong);
        assert!(ks_bad > 0.05, "negative control KS {ks_bad}");
    }

    #[test]
    fn weighted_ks_agrees_with_sample_ks_on_discrete_data() {
        let spec = MeasureSpec::atomic(vec![(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)], 3);
        let xs = sample(&spec, 50_000).unwrap();
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks1 = ks_statistic_sorted(&sorted, |x| spec.cdf_pair(x));
        // Histogram route.
        let mut hist = std::collections::BTreeMap::new();
        for x in xs {
            *hist.entry((x * 1e9) as i64).or_insert(0u64) += 1;
        }
        let mut vw: Vec<(f64, f64)> =
            hist.into_iter().map(|(k, c)| (k as f64 / 1e9, c as f64)).collect();
        let ks2 = ks_statistic_weighted(&mut vw, |x| spec.cdf_pair(x));
        assert!((ks1 - ks2).abs() < 1e-12);
    }

    #[test]
    fn moment_reports() {
        let samples = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let r = moment_report_from_samples("test", 2, 2, &samples, Some(1.0), "unit");
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.std_error, 0.0);
        let r0 = moment_report_from_samples("test", 2, 0, &samples, None, "unit");
        assert_eq!(r0.mean, 1.0); // k = 0 -> exactly 1
        let r1 = moment_report_from_sums("test", 2, 1, 6, 0.0, 6.0, None, "unit");
        assert_eq!(r1.mean, 0.0);
        assert!(r1.std_error > 0.0);
    }

    #[test]
    fn joint_independence_calibration() {
        // Independent uniform bins: deviation ~ sampling noise.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut bins = [[0u64; 4]; 4];
        for _ in 0..1_000_000 {
            bins[rng.gen_range(0..4)][rng.gen_range(0..4)] += 1;
        }
        assert!(joint_independence(&bins) < 0.005);
        // Perfectly correlated: large deviation.
        let mut diag = [[0u64; 4]; 4];
        for i in 0..4 {
            diag[i][i] = 1000;
        }
        assert!(joint_independence(&diag) > 0.15);
    }

    #[test]
    fn correlation_bound_examples() {
        // n1 = n2 = p: bound d_k(p^2)/1 >= 1 covers a second moment near 1.
        let c = correlation_bound_check(5, 5, 1.05);
        assert!(c.passes);
        assert!(c.bound >= 1.05);
        // distinct primes: bound d_2(pq)/sqrt(pq) = 4/sqrt(35).
        let c2 = correlation_bound_check(5, 7, 0.01);
        assert!(c2.passes && c2.k == 2);
        assert!((c2.bound - 4.0 / 35f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dashboard_thresholds() {
        let rows = axiom_b_dashboard(&[(5, 0.01, 0.9), (7, 0.9, 0.9)], 0.5, 2.0);
        assert!(rows[0].pass);
        assert!(!rows[1].pass); // |0.9| sqrt(7) > 2
    }
}
