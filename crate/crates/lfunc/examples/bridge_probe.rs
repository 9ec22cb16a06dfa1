use lfunc::families::dirichlet::{dirichlet_member, enumerate_fundamental, fekete_zero_in_01, parity};
use lfunc::kernel::KernelCtx;
use lfunc::posdef::{phi_sign_scan, ScanParams, VerdictStatus};

fn main() {
    let t0 = std::time::Instant::now();
    let mut ctxs = vec![];
    for par in [0u32, 1] {
        let gf = lfunc::kernel::GammaFactor::dirichlet(par);
        let mut ctx = KernelCtx::new(gf).unwrap();
        let hi = ctx.cutoff();
        ctx.prepare_range(1e-2, hi).unwrap();
        ctxs.push(ctx);
    }
    println!("ctx prep: {:?}", t0.elapsed());
    let params = ScanParams::default();
    let mut mismatches = vec![];
    let ds = enumerate_fundamental(201);
    let t1 = std::time::Instant::now();
    for &d in &ds {
        let sturm = fekete_zero_in_01(d);
        let member = dirichlet_member(d);
        let v = phi_sign_scan(&member, &ctxs[parity(d) as usize], params).unwrap();
        let npd = v.status == VerdictStatus::NotPositiveDefinite;
        if npd != sturm.has_zero() {
            mismatches.push((d, sturm.has_zero(), npd));
        }
        if sturm.has_zero() {
            println!("d={d}: sturm=HasZero scan_npd={npd} witness={:?}", v.witness.map(|w| (w.y1, w.y2)));
        }
    }
    println!("scans: {:?}; mismatches: {:?}", t1.elapsed(), mismatches);
}
