//! Content-addressed scan store and the batch pipeline behind the CLI:
//! family scans persisted as directory-per-scan (rows.csv + aggregates.json
//! + manifest.json with file digests), verdict runs, statistics reports, and
//! simulation reports.
//!
//! Every CSV/JSON byte is deterministic for a fixed (config, seed, version);
//! the creation timestamp lives in its own untracked file so reruns compare
//! byte-identical.

use crate::config::Config;
use crate::families::dihedral::{self, ClassGroup, ClassNumberTable};
use crate::families::dirichlet;
use crate::families::elliptic::{self, WindowAggregates};
use crate::families::modular::{self, NewformRecord};
use crate::families::FamilyMember;
use crate::kernel::KernelCtx;
use crate::posdef::{self, PosDefVerdict, ScanParams, VerdictStatus};
use crate::randmodel::{self, MeasureFamily, MeasureSpec};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("store integrity: digest mismatch for {file} in {dir}")]
    Corrupt { dir: String, file: String },
    #[error("unknown scan: {0}")]
    UnknownScan(String),
    #[error(transparent)]
    Dihedral(#[from] dihedral::DihedralError),
    #[error(transparent)]
    Modular(#[from] modular::ModularError),
    #[error(transparent)]
    Elliptic(#[from] elliptic::EllipticError),
    #[error(transparent)]
    Kernel(#[from] crate::kernel::KernelError),
    #[error(transparent)]
    PosDef(#[from] posdef::PosDefError),
    #[error(transparent)]
    Model(#[from] randmodel::ModelError),
    #[error("scan {0} does not support this operation")]
    Unsupported(String),
}

/// A family scan request; the content key hashes family, params, window,
/// seed and crate version.
#[derive(Debug, Clone)]
pub enum ScanRequest {
    Dirichlet { x: u64 },
    Dihedral { x: u64 },
    Elliptic { x: u64 },
    Elliptic1Param { a: Vec<i64>, b: Vec<i64>, x: u64 },
    ModularIngest { csv: PathBuf },
    Sym { csv: PathBuf, r: u32 },
}

impl ScanRequest {
    pub fn family(&self) -> &'static str {
        match self {
            ScanRequest::Dirichlet { .. } => "dirichlet",
            ScanRequest::Dihedral { .. } => "dihedral",
            ScanRequest::Elliptic { .. } => "elliptic",
            ScanRequest::Elliptic1Param { .. } => "elliptic-1param",
            ScanRequest::ModularIngest { .. } => "modular-ingest",
            ScanRequest::Sym { .. } => "sym",
        }
    }

    fn params(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        match self {
            ScanRequest::Dirichlet { x }
            | ScanRequest::Dihedral { x }
            | ScanRequest::Elliptic { x } => {
                m.insert("x".into(), x.to_string());
            }
            ScanRequest::Elliptic1Param { a, b, x } => {
                m.insert("x".into(), x.to_string());
                m.insert("a".into(), csv_i64(a));
                m.insert("b".into(), csv_i64(b));
            }
            ScanRequest::ModularIngest { csv } => {
                m.insert("csv".into(), csv.display().to_string());
            }
            ScanRequest::Sym { csv, r } => {
                m.insert("csv".into(), csv.display().to_string());
                m.insert("r".into(), r.to_string());
            }
        }
        m
    }
}

fn csv_i64(v: &[i64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Manifest {
    pub version: String,
    pub family: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub key: String,
    /// file name -> sha256 of contents (everything except created_at.txt).
    pub files: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
}

pub struct ScanHandle {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub cached: bool,
}

/// Family-specific aggregate payload persisted next to the row file.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family")]
pub enum Aggregates {
    Dirichlet {
        discriminants: Vec<i64>,
    },
    Dihedral {
        x: u64,
        member_total: i64,
        class_number_avg_43: f64,
        a_constant_43: f64,
        densities: Vec<DihedralDensity>,
        traces: Vec<TraceRow>,
        split_rows: Vec<SplitRow>,
    },
    Elliptic {
        window: WindowAggregates,
        count_minimal: u64,
        count_all: u64,
        normalization: f64,
    },
    Elliptic1Param {
        a: Vec<i64>,
        b: Vec<i64>,
        x: u64,
        members: u64,
        degenerate: u64,
        katz: Vec<(u64, f64)>,
    },
    Modular {
        records: Vec<NewformRecord>,
        r: u32,
        alpha_density: Vec<(u64, f64, f64)>,
    },
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DihedralDensity {
    pub p: u64,
    pub member_weighted: [f64; 3],
    pub discriminant_weighted: [f64; 3],
    pub targets: [f64; 3],
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TraceRow {
    pub d: u64,
    pub m: u64,
    pub trace: f64,
}

/// Per-(D, p) class data enough to assemble the exact lambda(p) histogram of
/// the member family: Kronecker symbol, order of the prime class, whether it
/// lies in the principal genus (the square classes), h and omega.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SplitRow {
    pub d: u64,
    pub p: u64,
    pub sym: i8,
    pub ord: u64,
    pub in_sq: bool,
    pub h: u64,
    pub omega: u8,
}

pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn key(&self, req: &ScanRequest, seed: u64) -> String {
        let mut h = Sha256::new();
        h.update(req.family().as_bytes());
        for (k, v) in req.params() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"|");
        }
        h.update(seed.to_le_bytes());
        h.update(env!("CARGO_PKG_VERSION").as_bytes());
        hex(&h.finalize())[..16].to_string()
    }

    pub fn scan_dir(&self, req: &ScanRequest, seed: u64) -> PathBuf {
        let key = self.key(req, seed);
        self.root.join(format!("{}-{}", req.family(), key))
    }

    /// Run the scan (or return the cached result when the content key
    /// already exists and its digests verify).
    pub fn scan(&self, req: &ScanRequest, cfg: &Config, seed: u64) -> Result<ScanHandle, ScanError> {
        let dir = self.scan_dir(req, seed);
        if dir.join("manifest.json").exists() {
            let manifest = self.load_verified(&dir)?;
            return Ok(ScanHandle { dir, manifest, cached: true });
        }
        std::fs::create_dir_all(&dir)?;
        let (rows, aggregates, counts) = match req {
            ScanRequest::Dirichlet { x } => scan_dirichlet(*x),
            ScanRequest::Dihedral { x } => scan_dihedral(*x, cfg)?,
            ScanRequest::Elliptic { x } => scan_elliptic(*x, cfg),
            ScanRequest::Elliptic1Param { a, b, x } => scan_one_param(a, b, *x)?,
            ScanRequest::ModularIngest { csv } => scan_modular(csv, 1)?,
            ScanRequest::Sym { csv, r } => scan_modular(csv, *r)?,
        };
        let mut files = BTreeMap::new();
        write_hashed(&dir, "rows.csv", rows.as_bytes(), &mut files)?;
        let agg_json = serde_json::to_string_pretty(&aggregates)?;
        write_hashed(&dir, "aggregates.json", agg_json.as_bytes(), &mut files)?;
        let manifest = Manifest {
            version: env!("CARGO_PKG_VERSION").into(),
            family: req.family().into(),
            params: req.params(),
            seed,
            key: self.key(req, seed),
            files,
            counts,
        };
        let mj = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(dir.join("manifest.json"), mj)?;
        std::fs::write(
            dir.join("created_at.txt"),
            format!(
                "{}\n",
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            ),
        )?;
        Ok(ScanHandle { dir, manifest, cached: false })
    }

    /// Load a scan directory, verifying every tracked digest.
    pub fn load_verified(&self, dir: &Path) -> Result<Manifest, ScanError> {
        let manifest: Manifest =
            serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
        for (name, digest) in &manifest.files {
            let bytes = std::fs::read(dir.join(name))?;
            if &hex(&Sha256::digest(&bytes)) != digest {
                return Err(ScanError::Corrupt {
                    dir: dir.display().to_string(),
                    file: name.clone(),
                });
            }
        }
        Ok(manifest)
    }

    pub fn aggregates(&self, dir: &Path) -> Result<Aggregates, ScanError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(dir.join("aggregates.json"))?)?)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_hashed(
    dir: &Path,
    name: &str,
    bytes: &[u8],
    files: &mut BTreeMap<String, String>,
) -> Result<(), ScanError> {
    std::fs::write(dir.join(name), bytes)?;
    files.insert(name.into(), hex(&Sha256::digest(bytes)));
    Ok(())
}

fn scan_dirichlet(x: u64) -> (String, Aggregates, BTreeMap<String, u64>) {
    let ds = dirichlet::enumerate_fundamental(x);
    let mut rows = String::from("d,conductor,parity\n");
    for &d in &ds {
        let _ = writeln!(rows, "{d},{},{}", d.unsigned_abs(), dirichlet::parity(d));
    }
    let mut counts = BTreeMap::new();
    counts.insert("members".into(), ds.len() as u64);
    (rows, Aggregates::Dirichlet { discriminants: ds }, counts)
}

fn scan_dihedral(
    x: u64,
    cfg: &Config,
) -> Result<(String, Aggregates, BTreeMap<String, u64>), ScanError> {
    let table = ClassNumberTable::build(x);
    let mut rows = String::from("D,h,omega,members,members_paper\n");
    let mut member_total = 0i64;
    let mut n_rows = 0u64;
    for d in table.discriminants() {
        let h = table.h(d);
        let omega = table.omega(d);
        let members = table.member_count(d);
        let paper = h as i64 - (1i64 << omega);
        let _ = writeln!(rows, "{d},{h},{omega},{members},{paper}");
        member_total += members.max(0);
        n_rows += 1;
    }
    let densities = [3u64, 5, 7]
        .iter()
        .map(|&p| {
            let r = table.density_check(p);
            DihedralDensity {
                p,
                member_weighted: r.member_weighted,
                discriminant_weighted: r.discriminant_weighted,
                targets: dihedral::density_targets(p),
            }
        })
        .collect();

    // Traces and split data on a deterministic stride sample.
    let ds: Vec<u64> = table.discriminants().collect();
    let sample = cfg.dihedral_trace_sample.max(1);
    let stride = (ds.len() / sample).max(1);
    let sampled: Vec<u64> = ds.iter().copied().step_by(stride).collect();
    let trace_work: Vec<(Vec<TraceRow>, Vec<SplitRow>)> =
        crate::exec::map_slice(&sampled, |&d| {
            let mut traces = Vec::new();
            let mut splits = Vec::new();
            if let Ok(cg) = ClassGroup::new(d) {
                if cg.real_character_count() < cg.h() {
                    for m in 1..=cfg.dihedral_trace_m_max {
                        if let Ok(t) = dihedral::trace_average_with(&cg, m) {
                            traces.push(TraceRow { d, m, trace: t });
                        }
                    }
                    let sq = cg.squares();
                    for &p in &cfg.dihedral_stats_primes {
                        let sym = crate::arith::kronecker(-(d as i64), p as i64) as i8;
                        let (ord, in_sq) = match cg.prime_class(p) {
                            Some(c) => (cg.order(c), sq[c]),
                            None => (0, false),
                        };
                        splits.push(SplitRow {
                            d,
                            p,
                            sym,
                            ord,
                            in_sq,
                            h: cg.h() as u64,
                            omega: cg.omega as u8,
                        });
                    }
                }
            }
            (traces, splits)
        });
    let mut traces = Vec::new();
    let mut split_rows = Vec::new();
    for (t, s) in trace_work {
        traces.extend(t);
        split_rows.extend(s);
    }

    let mut counts = BTreeMap::new();
    counts.insert("discriminants".into(), n_rows);
    counts.insert("members".into(), member_total.max(0) as u64);
    let agg = Aggregates::Dihedral {
        x,
        member_total,
        class_number_avg_43: table.class_number_sum(4, 3),
        a_constant_43: dihedral::a_constant(4, 3).map_err(ScanError::Dihedral)?,
        densities,
        traces,
        split_rows,
    };
    Ok((rows, agg, counts))
}

fn scan_elliptic(x: u64, cfg: &Config) -> (String, Aggregates, BTreeMap<String, u64>) {
    let window = elliptic::window_scan(x, &cfg.elliptic_primes);
    let count_minimal = window.members;
    let count_all = elliptic::count_all(x);
    let mut rows = String::from("p,k,moment\n");
    for &p in &window.primes {
        for k in 1..=4u32 {
            let _ = writeln!(rows, "{p},{k},{}", window.height_moment(p, k));
        }
        let _ = writeln!(rows, "{p},p2,{}", window.mean_lambda_p2(p));
    }
    for j in &window.joints {
        let _ = writeln!(rows, "{}*{},1,{}", j.p1, j.p2, j.sum_k[0] / window.members as f64);
        let _ = writeln!(rows, "{}*{},2,{}", j.p1, j.p2, j.sum_k[1] / window.members as f64);
    }
    let mut counts = BTreeMap::new();
    counts.insert("members".into(), count_minimal);
    let agg = Aggregates::Elliptic {
        window,
        count_minimal,
        count_all,
        normalization: elliptic::count_normalization(x),
    };
    (rows, agg, counts)
}

fn scan_one_param(
    a: &[i64],
    b: &[i64],
    x: u64,
) -> Result<(String, Aggregates, BTreeMap<String, u64>), ScanError> {
    let fam = elliptic::OneParamFamily { a_coeffs: a.to_vec(), b_coeffs: b.to_vec() };
    let members = fam.enumerate(x)?;
    let katz = fam.second_coefficient_averages(x, 97)?;
    let mut rows = String::from("n,m,a,b,degenerate\n");
    let mut degenerate = 0u64;
    for mem in &members {
        let _ = writeln!(rows, "{},{},{},{},{}", mem.n, mem.m, mem.key.a, mem.key.b, mem.degenerate);
        if mem.degenerate {
            degenerate += 1;
        }
    }
    let mut counts = BTreeMap::new();
    counts.insert("members".into(), members.len() as u64 - degenerate);
    counts.insert("degenerate".into(), degenerate);
    let agg = Aggregates::Elliptic1Param {
        a: a.to_vec(),
        b: b.to_vec(),
        x,
        members: members.len() as u64 - degenerate,
        degenerate,
        katz,
    };
    Ok((rows, agg, counts))
}

fn scan_modular(csv: &Path, r: u32) -> Result<(String, Aggregates, BTreeMap<String, u64>), ScanError> {
    let file = std::fs::File::open(csv)?;
    let records = modular::ingest_newforms(std::io::BufReader::new(file))?;
    let mut rows = String::from("label,level,weight,p,lambda\n");
    for rec in &records {
        for (&p, &lam) in &rec.lambdas {
            let _ = writeln!(rows, "{},{},{},{p},{lam}", rec.label, rec.level, rec.weight);
        }
    }
    let alpha_density = [2u64, 3, 5]
        .iter()
        .map(|&p| {
            modular::alpha_p_density(p, 3000, 2)
                .map(|d| (p, d, modular::alpha_p_target(p)))
                .map_err(ScanError::Modular)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut counts = BTreeMap::new();
    counts.insert("records".into(), records.len() as u64);
    Ok((rows, Aggregates::Modular { records, r, alpha_density }, counts))
}

/// Members of a persisted scan, for the verdict engine. Large windows are
/// deterministically capped (documented in the verdict report).
pub fn members_of(
    agg: &Aggregates,
    cfg: &Config,
) -> Result<Vec<FamilyMember>, ScanError> {
    match agg {
        Aggregates::Dirichlet { discriminants } => {
            Ok(discriminants.iter().map(|&d| dirichlet::dirichlet_member(d)).collect())
        }
        Aggregates::Dihedral { split_rows, .. } => {
            let mut ds: Vec<u64> = split_rows.iter().map(|r| r.d).collect();
            ds.sort_unstable();
            ds.dedup();
            ds.truncate(cfg.elliptic_verdict_cap.max(4));
            let mut out = Vec::new();
            for d in ds {
                let cg = std::sync::Arc::new(ClassGroup::new(d)?);
                let cs = std::sync::Arc::new(dihedral::class_group_structure(&cg));
                for (i, ch) in dihedral::characters(&cs).iter().enumerate() {
                    if !ch.is_excluded() {
                        out.push(dihedral::dihedral_member(&cg, &cs, ch, i));
                    }
                }
            }
            Ok(out)
        }
        Aggregates::Elliptic { window, .. } => {
            let keys = elliptic::enumerate_minimal(window.x);
            let cap = cfg.elliptic_verdict_cap.max(4);
            let stride = (keys.len() / cap).max(1);
            Ok(keys.into_iter().step_by(stride).map(elliptic::elliptic_member).collect())
        }
        Aggregates::Elliptic1Param { a, b, x, .. } => {
            let fam = elliptic::OneParamFamily { a_coeffs: a.clone(), b_coeffs: b.clone() };
            Ok(fam
                .enumerate(*x)?
                .into_iter()
                .filter(|m| !m.degenerate)
                .map(|m| elliptic::elliptic_member(m.key))
                .collect())
        }
        Aggregates::Modular { records, r, .. } => {
            Ok(records.iter().map(|rec| modular::modular_member(rec, *r)).collect())
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DecadeFraction {
    pub decade_start: u64,
    pub members: u64,
    pub not_positive_definite: u64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BridgeRow {
    pub d: i64,
    pub sturm_has_zero: bool,
    pub scan_not_positive_definite: bool,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct VerdictsReport {
    pub fractions: Vec<DecadeFraction>,
    pub verdict_files: Vec<String>,
    /// Per-parity agreement of the Sturm and phi-scan verdicts (Dirichlet
    /// family only): (parity, agree, total).
    pub bridge: Vec<(u32, u64, u64)>,
    pub bridge_mismatches: Vec<BridgeRow>,
}

/// Run the verdict engine over a scan and persist one JSON per member plus
/// per-decade fractions and an SVG trend.
pub fn run_verdicts(
    store: &Store,
    dir: &Path,
    cfg: &Config,
) -> Result<VerdictsReport, ScanError> {
    let agg = store.aggregates(dir)?;
    let members = members_of(&agg, cfg)?;
    let params = cfg.scan_params();

    // One prepared kernel context per distinct gamma factor.
    let mut ctxs: Vec<(crate::kernel::GammaFactor, KernelCtx)> = Vec::new();
    for m in &members {
        if !ctxs.iter().any(|(g, _)| *g == m.gamma) {
            let mut ctx = KernelCtx::new(m.gamma.clone())?;
            let hi = ctx.cutoff();
            ctx.prepare_range(params.y_lo, hi)?;
            ctxs.push((m.gamma.clone(), ctx));
        }
    }
    let ctx_of = |m: &FamilyMember| -> &KernelCtx {
        &ctxs.iter().find(|(g, _)| *g == m.gamma).expect("prepared above").1
    };

    let verdicts: Vec<PosDefVerdict> = {
        let res = crate::exec::map_slice(&members, |m| {
            phi_verdict_with_family(m, ctx_of(m), params, &agg)
        });
        let mut out = Vec::with_capacity(res.len());
        for r in res {
            out.push(r?);
        }
        out
    };

    let vdir = dir.join("verdicts");
    std::fs::create_dir_all(&vdir)?;
    let mut files = Vec::new();
    for v in &verdicts {
        let name = format!("{}.json", sanitize(&v.label));
        std::fs::write(vdir.join(&name), serde_json::to_string_pretty(v)?)?;
        files.push(name);
    }

    // Per-decade fractions of NotPositiveDefinite.
    let mut decades: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for (m, v) in members.iter().zip(&verdicts) {
        let decade = 10u64.pow((m.ordering.max(1) as f64).log10().floor() as u32);
        let e = decades.entry(decade).or_insert((0, 0));
        e.0 += 1;
        if v.status == VerdictStatus::NotPositiveDefinite {
            e.1 += 1;
        }
    }
    let fractions: Vec<DecadeFraction> = decades
        .into_iter()
        .map(|(decade_start, (members, npd))| DecadeFraction {
            decade_start,
            members,
            not_positive_definite: npd,
        })
        .collect();
    let mut fcsv = String::from("decade_start,members,not_positive_definite,fraction\n");
    for f in &fractions {
        let _ = writeln!(
            fcsv,
            "{},{},{},{}",
            f.decade_start,
            f.members,
            f.not_positive_definite,
            f.not_positive_definite as f64 / f.members as f64
        );
    }
    std::fs::write(dir.join("fractions.csv"), &fcsv)?;
    std::fs::write(dir.join("trend.svg"), trend_svg(&fractions))?;

    // Fekete bridge for the Dirichlet family.
    let mut bridge: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    let mut mismatches = Vec::new();
    if let Aggregates::Dirichlet { discriminants } = &agg {
        for (i, &d) in discriminants.iter().enumerate() {
            if d.unsigned_abs() > cfg.dirichlet_sturm_cap {
                continue;
            }
            let sturm = dirichlet::fekete_zero_in_01(d);
            let scan_npd = verdicts[i].status == VerdictStatus::NotPositiveDefinite;
            let e = bridge.entry(dirichlet::parity(d)).or_insert((0, 0));
            e.1 += 1;
            if sturm.has_zero() == scan_npd {
                e.0 += 1;
            } else {
                mismatches.push(BridgeRow {
                    d,
                    sturm_has_zero: sturm.has_zero(),
                    scan_not_positive_definite: scan_npd,
                });
            }
        }
    }

    Ok(VerdictsReport {
        fractions,
        verdict_files: files,
        bridge: bridge.into_iter().map(|(p, (a, t))| (p, a, t)).collect(),
        bridge_mismatches: mismatches,
    })
}

fn phi_verdict_with_family(
    m: &FamilyMember,
    ctx: &KernelCtx,
    params: ScanParams,
    agg: &Aggregates,
) -> Result<PosDefVerdict, ScanError> {
    let mut v = posdef::phi_sign_scan(m, ctx, params)?;
    v.family = match agg {
        Aggregates::Dirichlet { .. } => "dirichlet".into(),
        Aggregates::Dihedral { .. } => "dihedral".into(),
        Aggregates::Elliptic { .. } => "elliptic".into(),
        Aggregates::Elliptic1Param { .. } => "elliptic-1param".into(),
        Aggregates::Modular { r, .. } => {
            if *r == 1 {
                "modular".into()
            } else {
                format!("sym{r}")
            }
        }
    };
    Ok(v)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

fn trend_svg(fractions: &[DecadeFraction]) -> String {
    let w = 480.0;
    let h = 320.0;
    let n = fractions.len().max(1) as f64;
    let mut pts = String::new();
    for (i, f) in fractions.iter().enumerate() {
        let x = 40.0 + (w - 80.0) * (i as f64 + 0.5) / n;
        let frac = f.not_positive_definite as f64 / f.members.max(1) as f64;
        let y = h - 40.0 - (h - 80.0) * frac;
        let _ = write!(pts, "{x:.1},{y:.1} ");
    }
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<line x1=\"40\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n",
            "<line x1=\"40\" y1=\"40\" x2=\"40\" y2=\"{y0}\" stroke=\"black\"/>\n",
            "<text x=\"44\" y=\"30\" font-size=\"12\">fraction not positive-definite per decade</text>\n",
            "<polyline points=\"{pts}\" fill=\"none\" stroke=\"crimson\" stroke-width=\"2\"/>\n",
            "</svg>\n"
        ),
        w = w,
        h = h,
        y0 = h - 40.0,
        x1 = w - 40.0,
        pts = pts.trim_end()
    )
}

/// Build the exact lambda(p) histogram of the dihedral member family from
/// the persisted split rows: value -> exact member weight.
pub fn dihedral_lambda_histogram(rows: &[SplitRow], p: u64) -> Vec<(f64, f64)> {
    let mut hist: BTreeMap<i64, f64> = BTreeMap::new(); // key: value * 2^40 rounded
    let mut push = |v: f64, w: f64| {
        if w != 0.0 {
            *hist.entry((v * (1u64 << 40) as f64).round() as i64).or_insert(0.0) += w;
        }
    };
    for r in rows.iter().filter(|r| r.p == p) {
        let real = (1u64 << (r.omega - 1)) as f64;
        match r.sym {
            -1 => {
                // Inert: every non-excluded member has lambda = 0.
                push(0.0, r.h as f64 - real);
            }
            1 => {
                // Split: over all characters the values 2 cos(2 pi j / ord)
                // carry weight h / ord each; real characters contribute at
                // +-2 and are excluded.
                let ord = r.ord.max(1);
                let w = r.h as f64 / ord as f64;
                for j in 0..ord {
                    let v = 2.0 * (2.0 * std::f64::consts::PI * j as f64 / ord as f64).cos();
                    push(v, w);
                }
                if r.in_sq {
                    push(2.0, -real);
                } else {
                    push(2.0, -real / 2.0);
                    push(-2.0, -real / 2.0);
                }
            }
            _ => {
                // Ramified: lambda = psi(class) in {-1, +1}; the class is
                // 2-torsion. Over all characters: h at +1 when principal,
                // else h/2 each.
                let principal = r.ord <= 1;
                if principal {
                    push(1.0, r.h as f64);
                } else {
                    push(1.0, r.h as f64 / 2.0);
                    push(-1.0, r.h as f64 / 2.0);
                }
                if r.in_sq {
                    push(1.0, -real);
                } else {
                    push(1.0, -real / 2.0);
                    push(-1.0, -real / 2.0);
                }
            }
        }
    }
    hist.into_iter()
        .map(|(k, w)| (k as f64 / (1u64 << 40) as f64, w))
        .filter(|&(_, w)| w > 1e-9)
        .collect()
}

/// A report artifact: named CSV files plus a manifest with digests.
pub struct ReportWriter {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl ReportWriter {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, ScanError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, files: BTreeMap::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), ScanError> {
        write_hashed(&self.dir, name, contents.as_bytes(), &mut self.files)?;
        Ok(())
    }

    pub fn finish(self) -> Result<PathBuf, ScanError> {
        let manifest = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "files": self.files,
        });
        let mut f = std::fs::File::create(self.dir.join("manifest.json"))?;
        f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        Ok(self.dir)
    }
}

/// Moments report for an elliptic scan: empirical vs the
/// (1 - p^{-12})^{-1} alpha(p, k) prediction.
pub fn report_elliptic_moments(agg: &Aggregates) -> Result<String, ScanError> {
    let Aggregates::Elliptic { window, .. } = agg else {
        return Err(ScanError::Unsupported("moments need an elliptic scan".into()));
    };
    let mut out = String::from("p,k,empirical,std_error,reference\n");
    for &p in &window.primes {
        for k in 1..=2u32 {
            let alpha = elliptic::alpha_moment(p, k).value();
            let reference = alpha / (1.0 - (p as f64).powi(-12));
            let r = crate::stats::moment_report_from_sums(
                "elliptic",
                p,
                k,
                window.members,
                window.moment_sums[window.primes.iter().position(|&q| q == p).unwrap()]
                    [(k - 1) as usize],
                window.moment_sums[window.primes.iter().position(|&q| q == p).unwrap()]
                    [(2 * k - 1) as usize],
                Some(reference),
                "alpha moment with minimality correction",
            );
            let _ = writeln!(out, "{p},{k},{},{},{}", r.mean, r.std_error, reference);
        }
    }
    Ok(out)
}

/// Joint-independence report from the persisted bin grids.
pub fn report_elliptic_independence(agg: &Aggregates) -> Result<String, ScanError> {
    let Aggregates::Elliptic { window, .. } = agg else {
        return Err(ScanError::Unsupported("independence needs an elliptic scan".into()));
    };
    let mut out = String::from("p1,p2,max_deviation,factorization_ratio_k2\n");
    for j in &window.joints {
        let dev = crate::stats::joint_independence(&j.bins);
        let ratio = window.joint_moment(j.p1, j.p2, 2)
            / (window.height_moment(j.p1, 2) * window.height_moment(j.p2, 2));
        let _ = writeln!(out, "{},{},{dev},{ratio}", j.p1, j.p2);
    }
    Ok(out)
}

/// Correlation-bound report: E(lambda(n1) lambda(n2)) vs d_k(n1 n2)/sqrt(R).
pub fn report_elliptic_correlation(agg: &Aggregates) -> Result<String, ScanError> {
    let Aggregates::Elliptic { window, .. } = agg else {
        return Err(ScanError::Unsupported("correlation needs an elliptic scan".into()));
    };
    let n = window.members as f64;
    let mut out = String::from("n1,n2,empirical,bound,k,passes\n");
    let mut rows: Vec<(u64, u64, f64)> = Vec::new();
    for (i, &p) in window.primes.iter().enumerate() {
        rows.push((p, p, window.moment_sums[i][1] / n));
        rows.push((p * p, p * p, window.moment_sums[i][3] / n));
    }
    for j in &window.joints {
        rows.push((j.p1, j.p2, j.sum_k[0] / n));
        rows.push((j.p1 * j.p1, j.p2 * j.p2, j.sum_p2 / n));
    }
    for (n1, n2, emp) in rows {
        let c = crate::stats::correlation_bound_check(n1, n2, emp);
        let _ = writeln!(out, "{n1},{n2},{emp},{},{},{}", c.bound, c.k, c.passes);
    }
    Ok(out)
}

/// KS report of the dihedral lambda(p) histograms against the X_p measures.
pub fn report_dihedral_ks(agg: &Aggregates) -> Result<String, ScanError> {
    let Aggregates::Dihedral { split_rows, .. } = agg else {
        return Err(ScanError::Unsupported("ks needs a dihedral scan".into()));
    };
    let mut out = String::from("p,ks,members_weighted\n");
    let mut ps: Vec<u64> = split_rows.iter().map(|r| r.p).collect();
    ps.sort_unstable();
    ps.dedup();
    for p in ps {
        let mut hist = dihedral_lambda_histogram(split_rows, p);
        let spec = MeasureSpec::dihedral(p, 0);
        let total: f64 = hist.iter().map(|&(_, w)| w).sum();
        let ks = crate::stats::ks_statistic_weighted(&mut hist, |x| spec.cdf_pair(x));
        let _ = writeln!(out, "{p},{ks},{total}");
    }
    Ok(out)
}

/// Density report (dihedral).
pub fn report_dihedral_densities(agg: &Aggregates) -> Result<String, ScanError> {
    let Aggregates::Dihedral { densities, class_number_avg_43, a_constant_43, .. } = agg else {
        return Err(ScanError::Unsupported("densities need a dihedral scan".into()));
    };
    let mut out =
        String::from("p,kind,member_weighted,discriminant_weighted,target\n");
    for d in densities {
        for (i, kind) in ["split", "inert", "ramified"].iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{kind},{},{},{}",
                d.p, d.member_weighted[i], d.discriminant_weighted[i], d.targets[i]
            );
        }
    }
    let _ = writeln!(out, "classnumber,avg43,{class_number_avg_43},,{a_constant_43}");
    Ok(out)
}

/// CLT simulation CSV.
pub fn simulate_clt(r_max: u32, trials: usize, seed: u64) -> Result<String, ScanError> {
    let spec = MeasureSpec::rademacher(seed);
    let schedule: Vec<(u32, usize)> =
        [r_max / 4, r_max / 2, r_max].iter().filter(|&&r| r > 0).map(|&r| (r, (r * r) as usize)).collect();
    let ks = randmodel::clt_check(&|_| 1.0, &spec, &schedule, trials)?;
    let mut out = String::from("r,n_r,trials,ks\n");
    for (r, k) in ks {
        let _ = writeln!(out, "{r},{},{trials},{k}", (r * r) as usize);
    }
    Ok(out)
}

/// Sign-change probability simulation CSV.
pub fn simulate_lemma5(delta: f64, rs: &[usize], trials: usize, seed: u64) -> String {
    let mut out = String::from("delta,R,trials,empirical,reference_exp,fitted_c\n");
    let c = randmodel::lemma5_fit_constant(delta, rs, trials, seed);
    for &r in rs {
        let rep = randmodel::lemma5_check(delta, r, trials, seed);
        let _ = writeln!(
            out,
            "{delta},{r},{trials},{},{},{c}",
            rep.empirical, rep.reference
        );
    }
    out
}

/// X(s) simulation CSV: (s, trials, mean, sd, ks-to-normal, c-fit).
pub fn simulate_xsum(
    family: MeasureFamily,
    s_grid: &[f64],
    trials: usize,
    seed: u64,
    v_cap: u64,
) -> Result<String, ScanError> {
    let mut out = String::from("s,trials,u,v_effective,clamped,mean,sd,ks_normal,c_fit\n");
    for &s in s_grid {
        let sim = randmodel::simulate_x(family, s, trials, seed, v_cap)?;
        let mut normed: Vec<f64> =
            sim.samples.iter().map(|x| (x - sim.mean) / sim.sd).collect();
        normed.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = crate::stats::ks_statistic_sorted(&normed, |x| {
            let c = crate::special::normal_cdf(x);
            (c, c)
        });
        let c_fit = sim.sd * (2.0 * s - 1.0);
        let _ = writeln!(
            out,
            "{s},{},{},{},{},{},{},{ks},{c_fit}",
            sim.trials, sim.u, sim.v_effective, sim.clamped, sim.mean, sim.sd
        );
    }
    Ok(out)
}
